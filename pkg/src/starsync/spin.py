"""Spin-1 site operators and their embedding into the star-network space.

Basis order on every site is (m=+1, m=0, m=-1). Site 0 is the hub and is the
leftmost (slowest-varying) tensor factor; leaves are sites 1..N.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

SITE_DIM = 3

_SQRT2 = np.sqrt(2.0)


class SpinOperators(NamedTuple):
    Sz: np.ndarray
    Splus: np.ndarray
    Sminus: np.ndarray
    jump_gain: np.ndarray
    jump_damp: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def spin1_operators() -> SpinOperators:
    """Return the dense 3x3 spin-1 operators used throughout the package.

    ``jump_gain`` is |m=0><m=-1| and ``jump_damp`` is |m=0><m=+1|: both
    dissipative channels feed the intermediate level.
    """
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    splus = np.zeros((3, 3), dtype=complex)
    splus[0, 1] = _SQRT2
    splus[1, 2] = _SQRT2
    gain = np.zeros((3, 3), dtype=complex)
    gain[1, 2] = 1.0
    damp = np.zeros((3, 3), dtype=complex)
    damp[1, 0] = 1.0
    return SpinOperators(
        Sz=_frozen(sz),
        Splus=_frozen(splus),
        Sminus=_frozen(splus.conj().T.copy()),
        jump_gain=_frozen(gain),
        jump_damp=_frozen(damp),
    )


SPIN1 = spin1_operators()


def spin_y() -> np.ndarray:
    return (SPIN1.Splus - SPIN1.Sminus) / 2j


def embed(op, site: int, n_sites: int) -> sp.csr_matrix:
    """Embed a single-site operator as I x ... x op x ... x I.

    Parameters
    ----------
    op : array_like, shape (3, 3)
        Site operator.
    site : int
        Position of ``op`` in the tensor product, 0 being the hub.
    n_sites : int
        Total number of sites (hub + leaves).
    """
    if n_sites < 1:
        raise ValueError(f"n_sites must be positive, got {n_sites}")
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    a = sp.csr_matrix(np.asarray(op, dtype=complex))
    if a.shape != (SITE_DIM, SITE_DIM):
        raise ValueError(f"site operator must be 3x3, got {a.shape}")
    left = sp.identity(SITE_DIM**site, dtype=complex, format="csr")
    right = sp.identity(SITE_DIM ** (n_sites - site - 1), dtype=complex, format="csr")
    out = sp.kron(sp.kron(left, a, format="csr"), right, format="csr")
    out.eliminate_zeros()
    return out


def total_sz_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of sum_j Sz_j on the n_sites network space (integer valued)."""
    m = np.array([1, 0, -1])
    total = np.zeros(1, dtype=int)
    for _ in range(n_sites):
        total = (total[:, None] + m[None, :]).ravel()
    return total
