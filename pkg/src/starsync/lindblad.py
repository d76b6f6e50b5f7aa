"""Star-network master equation: Hamiltonian, Liouvillian and steady states.

Density matrices are vectorized by column stacking, so that
``vec(A X B) = (B^T kron A) vec(X)`` and the flat index of ``rho[a, b]`` is
``a + d * b``.

The Hamiltonian conserves total Sz and both dissipative channels are
phase covariant, so the generator never mixes coherences ``rho[a, b]`` with
different magnetization offsets ``M(a) - M(b)``. The steady state lives in the
balanced block ``M(a) == M(b)``; the solver and the integrator work there
whenever the input allows it. At four leaves this shrinks the problem from
59049 to 8953 unknowns.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spin import SITE_DIM, SPIN1, embed, total_sz_diagonal

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8

# balanced blocks above this size go to ILU-preconditioned GMRES first
_DIRECT_MAX_DIM = 4000


class SolverError(RuntimeError):
    """Steady-state solve did not reach the requested residual."""

    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(message)
        self.residual = residual


class DegenerateSteadyStateError(SolverError):
    """The generator has more than one stationary state."""


class StepSizeError(RuntimeError):
    """Explicit integration drifted in trace; the step is too large."""


class IndeterminateProbe(RuntimeError):
    """Uniqueness probe ran out of time before either evolution converged."""


RATE_FIELDS = ("hub_gain", "hub_damp", "leaf_gain", "leaf_damp")


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters of one star network.

    All quantities share one unit, typically a damping rate chosen per
    experiment. ``n_leaves=0`` describes an isolated hub.
    """

    n_leaves: int
    delta: float
    coupling: float
    hub_gain: float
    hub_damp: float
    leaf_gain: float
    leaf_damp: float

    def __post_init__(self):
        if isinstance(self.n_leaves, bool) or int(self.n_leaves) != self.n_leaves:
            raise ValueError(f"n_leaves must be an integer, got {self.n_leaves!r}")
        object.__setattr__(self, "n_leaves", int(self.n_leaves))
        for name in ("delta", "coupling") + RATE_FIELDS:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.n_leaves < 0:
            raise ValueError(f"n_leaves must be >= 0, got {self.n_leaves}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        for name in RATE_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.hub_gain == 0 and self.hub_damp == 0:
            raise ValueError("hub_gain and hub_damp are both zero: hub has no limit cycle")
        if self.n_leaves > 0 and self.leaf_gain == 0 and self.leaf_damp == 0:
            raise ValueError("leaf_gain and leaf_damp are both zero: leaves have no limit cycle")

    @property
    def n_sites(self) -> int:
        return self.n_leaves + 1

    @property
    def hilbert_dim(self) -> int:
        return SITE_DIM**self.n_sites

    def rates(self, site: int) -> tuple[float, float]:
        """(gain, damp) acting on ``site``."""
        if site == 0:
            return self.hub_gain, self.hub_damp
        return self.leaf_gain, self.leaf_damp

    def replace(self, **changes) -> "NetworkConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def build_hamiltonian(config: NetworkConfig) -> sp.csr_matrix:
    n = config.n_sites
    h = config.delta * embed(SPIN1.Sz, 0, n)
    if config.n_leaves and config.coupling != 0:
        hub_plus = embed(SPIN1.Splus, 0, n)
        hub_minus = embed(SPIN1.Sminus, 0, n)
        for j in range(1, n):
            forward = hub_plus @ embed(SPIN1.Sminus, j, n)
            backward = hub_minus @ embed(SPIN1.Splus, j, n)
            h = h + config.coupling * (forward + backward)
    h = sp.csr_matrix(h, dtype=complex)
    h.eliminate_zeros()
    return h


def jump_operators(config: NetworkConfig) -> list[tuple[float, sp.csr_matrix]]:
    """(rate, embedded jump operator) pairs, zero-rate channels omitted."""
    n = config.n_sites
    out = []
    for site in range(n):
        gain, damp = config.rates(site)
        for rate, op in ((gain, SPIN1.jump_gain), (damp, SPIN1.jump_damp)):
            if rate > 0:
                out.append((rate, embed(op, site, n)))
    return out


class BalancedBlock(NamedTuple):
    """Restriction of a Liouvillian to coherences with M(a) == M(b)."""

    indices: np.ndarray  # flat vec positions kept, ascending
    matrix: sp.csr_matrix
    diagonal: np.ndarray  # positions of rho[a, a] inside the block


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse generator acting on column-stacked density matrices."""

    matrix: sp.csr_matrix
    hilbert_dim: int
    n_sites: int
    config: NetworkConfig | None = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def scale(self) -> float:
        """Max row 1-norm."""
        return float(np.abs(self.matrix).sum(axis=1).max())

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.hilbert_dim
        return (self.matrix @ np.asarray(rho).reshape(-1, order="F")).reshape(d, d, order="F")

    @cached_property
    def balanced(self) -> BalancedBlock:
        d = self.hilbert_dim
        m = total_sz_diagonal(self.n_sites)
        offset = (m[:, None] - m[None, :]).reshape(-1, order="F")
        keep = np.flatnonzero(offset == 0)
        block = self.matrix[keep][:, keep].tocsr()
        diag = np.searchsorted(keep, np.arange(d) * (d + 1))
        return BalancedBlock(keep, block, diag)


def build_liouvillian(config: NetworkConfig) -> Liouvillian:
    d = config.hilbert_dim
    eye = sp.identity(d, dtype=complex, format="csr")
    h = build_hamiltonian(config)
    gen = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for rate, jump in jump_operators(config):
        jdj = (jump.conj().T @ jump).tocsr()
        gen = gen + rate * (
            sp.kron(jump.conj(), jump)
            - 0.5 * sp.kron(eye, jdj)
            - 0.5 * sp.kron(jdj.T, eye)
        )
    gen = sp.csr_matrix(gen)
    gen.sum_duplicates()
    gen.eliminate_zeros()
    return Liouvillian(gen, d, config.n_sites, config)


def hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def residual_norm(L: Liouvillian, rho: np.ndarray) -> float:
    """Relative residual ``||L vec(rho)||_2 / scale``."""
    return float(np.linalg.norm(L.matrix @ rho.reshape(-1, order="F")) / L.scale)


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = HERMITIAN_TOL,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = PSD_TOL,
) -> None:
    """Raise ValueError unless ``rho`` is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: max deviation {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"trace {tr} differs from 1")
    low = np.linalg.eigvalsh(hermitize(rho))[0]
    if low < -psd_tol:
        raise ValueError(f"not positive semidefinite: min eigenvalue {low:.3e}")


def product_state(levels: list[int] | tuple[int, ...]) -> np.ndarray:
    """Projector onto a product basis state; ``levels`` are per-site indices
    into (m=+1, m=0, m=-1)."""
    idx = 0
    for level in levels:
        idx = idx * SITE_DIM + level
    d = SITE_DIM ** len(levels)
    rho = np.zeros((d, d), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def ground_product_state(n_sites: int) -> np.ndarray:
    """All sites in m=0."""
    return product_state([1] * n_sites)


def maximally_mixed(n_sites: int) -> np.ndarray:
    d = SITE_DIM**n_sites
    return np.eye(d, dtype=complex) / d


def _bordered_system(block: BalancedBlock) -> tuple[sp.csc_matrix, np.ndarray]:
    # replace the equation for rho[0, 0] with the trace constraint
    a = block.matrix
    m = a.shape[0]
    r0 = block.diagonal[0]
    keep = np.ones(m)
    keep[r0] = 0.0
    trace_row = sp.csr_matrix(
        (np.ones(len(block.diagonal)), (np.full(len(block.diagonal), r0), block.diagonal)),
        shape=(m, m),
    )
    bordered = (sp.diags(keep) @ a + trace_row).tocsc()
    rhs = np.zeros(m, dtype=complex)
    rhs[r0] = 1.0
    return bordered, rhs


def _solve_direct(a: sp.csc_matrix, b: np.ndarray) -> np.ndarray:
    try:
        lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(
            f"bordered Liouvillian is singular ({exc}); stationary state not unique"
        ) from exc
    return lu.solve(b)


def _solve_iterative(a: sp.csc_matrix, b: np.ndarray, rtol: float, max_iterations: int):
    for drop_tol, fill in ((1e-4, 10.0), (1e-5, 20.0)):
        try:
            ilu = spla.spilu(a, drop_tol=drop_tol, fill_factor=fill, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError:
            continue
        pre = spla.LinearOperator(a.shape, ilu.solve, dtype=complex)
        x, info = spla.gmres(a, b, M=pre, rtol=rtol, atol=0.0, restart=100, maxiter=max_iterations)
        if info == 0 and np.all(np.isfinite(x)):
            return x
        log.debug("gmres info=%s with drop_tol=%g", info, drop_tol)
    return None


def steady_state(
    L: Liouvillian,
    tol: float = DEFAULT_TOL,
    method: str = "auto",
    max_iterations: int = 500,
) -> np.ndarray:
    """Unique stationary density matrix of ``L``.

    Parameters
    ----------
    L : Liouvillian
    tol : float
        Required relative residual ``||L vec(rho)||_2 <= tol * L.scale``.
    method : {"auto", "direct", "iterative"}
        ``auto`` factorizes small blocks and runs ILU-preconditioned GMRES on
        large ones, falling back to the direct factorization.
    max_iterations : int
        GMRES outer iteration budget.

    Raises
    ------
    DegenerateSteadyStateError
        The bordered system is singular.
    SolverError
        The final residual exceeds ``tol``; carries ``residual``.
    """
    if method not in ("auto", "direct", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    block = L.balanced
    a, b = _bordered_system(block)
    x = None
    if method == "iterative" or (method == "auto" and a.shape[0] > _DIRECT_MAX_DIM):
        x = _solve_iterative(a, b, rtol=min(1e-3 * tol, 1e-12), max_iterations=max_iterations)
        if x is None and method == "iterative":
            raise SolverError("GMRES did not converge within the iteration budget")
    if x is None:
        x = _solve_direct(a, b)

    d = L.hilbert_dim
    full = np.zeros(d * d, dtype=complex)
    full[block.indices] = x
    rho = hermitize(full.reshape(d, d, order="F"))
    rho /= np.trace(rho).real
    res = residual_norm(L, rho)
    if not res <= tol:
        raise SolverError(f"steady-state residual {res:.3e} exceeds tol {tol:.1e}", residual=res)
    return rho


class EvolutionResult(NamedTuple):
    rho: np.ndarray
    t_final: float
    gap_estimate: float
    remaining_estimate: float
    converged: bool


def _max_dt(L: Liouvillian) -> float:
    return 0.1 / L.scale


def _restrict(L: Liouvillian, states: np.ndarray):
    """Pick the balanced block when every state lives in it."""
    block = L.balanced
    outside = np.ones(states.shape[0], dtype=bool)
    outside[block.indices] = False
    if not np.any(np.abs(states[outside]) > 0):
        return block.matrix, states[block.indices], block.indices
    return L.matrix, states, None


def _rk4_steps(a, x: np.ndarray, h: float, steps: int) -> np.ndarray:
    for _ in range(steps):
        k1 = a @ x
        k2 = a @ (x + (0.5 * h) * k1)
        k3 = a @ (x + (0.5 * h) * k2)
        k4 = a @ (x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return x


def _trace_of(x: np.ndarray, diag: np.ndarray) -> np.ndarray:
    return x[diag].sum(axis=0)


def _unpack(x: np.ndarray, indices, d: int) -> list[np.ndarray]:
    if x.ndim == 1:
        x = x[:, None]
    out = []
    for col in x.T:
        if indices is not None:
            full = np.zeros(d * d, dtype=complex)
            full[indices] = col
            col = full
        out.append(col.reshape(d, d, order="F"))
    return out


def time_evolve(
    rho0: np.ndarray,
    L: Liouvillian,
    t_final: float,
    dt: float | None = None,
) -> np.ndarray:
    """Fixed-step classical RK4 propagation of ``rho0`` to ``t_final``.

    ``dt`` defaults to (and may not exceed) ``0.1 / L.scale``; the step is
    shrunk so that an integer number of steps lands on ``t_final``.
    """
    check_density_matrix(rho0)
    limit = _max_dt(L)
    dt = limit if dt is None else float(dt)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ValueError(f"dt must lie in (0, {limit:.3e}], got {dt}")
    if t_final < 0:
        raise ValueError("t_final must be nonnegative")
    steps = int(math.ceil(t_final / dt)) if t_final > 0 else 0
    d = L.hilbert_dim
    vec = np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    a, x, indices = _restrict(L, vec)
    diag = L.balanced.diagonal if indices is not None else np.arange(d) * (d + 1)
    tr0 = _trace_of(x, diag)
    if steps:
        h = t_final / steps
        chunk = 1000
        done = 0
        while done < steps:
            n = min(chunk, steps - done)
            x = _rk4_steps(a, x, h, n)
            done += n
            drift = abs(_trace_of(x, diag) - tr0)
            if drift > 1e-6:
                raise StepSizeError(f"trace drift {drift:.3e} after t={done * h:.4g}")
    return _unpack(x, indices, d)[0]


def _evolve_until_converged(
    L: Liouvillian,
    states: list[np.ndarray],
    target: float,
    chunk_time: float,
    max_time: float,
    dt: float | None,
):
    limit = _max_dt(L)
    dt = limit if dt is None else float(dt)
    if not 0 < dt <= limit * (1 + 1e-12):
        raise ValueError(f"dt must lie in (0, {limit:.3e}], got {dt}")
    d = L.hilbert_dim
    cols = np.stack([np.asarray(s, dtype=complex).reshape(-1, order="F") for s in states], axis=1)
    a, x, indices = _restrict(L, cols)
    diag = L.balanced.diagonal if indices is not None else np.arange(d) * (d + 1)
    tr0 = _trace_of(x, diag)

    steps = max(1, int(math.ceil(chunk_time / dt)))
    h = chunk_time / steps
    t = 0.0
    prev_inc = None
    gap = math.nan
    remaining = math.inf
    streak = 0
    while t < max_time:
        x_new = _rk4_steps(a, x, h, steps)
        t += chunk_time
        inc = float(np.max(np.abs(x_new - x)))
        x = x_new
        drift = float(np.max(np.abs(_trace_of(x, diag) - tr0)))
        if drift > 1e-6:
            raise StepSizeError(f"trace drift {drift:.3e} after t={t:.4g}")
        if inc == 0.0:
            remaining, streak = 0.0, 3
        elif prev_inc:
            ratio = inc / prev_inc
            if ratio < 1.0:
                gap = -math.log(ratio) / chunk_time if ratio > 0 else math.inf
                remaining = inc * ratio / (1.0 - ratio)
                streak = streak + 1 if remaining < target else 0
            else:
                streak = 0
        prev_inc = inc
        if streak >= 3:
            return _unpack(x, indices, d), t, gap, remaining, True
    return _unpack(x, indices, d), t, gap, remaining, False


def evolve_to_steady(
    rho0: np.ndarray,
    L: Liouvillian,
    target: float = 1e-9,
    chunk_time: float = 2.0,
    max_time: float = 5000.0,
    dt: float | None = None,
) -> EvolutionResult:
    """RK4-evolve ``rho0`` until the estimated distance to the fixed point
    drops below ``target``.

    The stopping time is chosen from the decay of successive increments: over
    chunks of length ``chunk_time`` the increments shrink geometrically with
    ratio ``r = exp(-gap * chunk_time)`` and the remaining distance is about
    ``inc * r / (1 - r)``. Three consecutive chunks must satisfy the bound.
    """
    check_density_matrix(rho0)
    rhos, t, gap, remaining, ok = _evolve_until_converged(
        L, [rho0], target, chunk_time, max_time, dt
    )
    return EvolutionResult(rhos[0], t, gap, remaining, ok)


def uniqueness_probe(
    L: Liouvillian,
    atol: float = 1e-6,
    target: float = 1e-9,
    max_time: float = 5000.0,
    return_states: bool = False,
):
    """Check that two independent starting points relax to the same state.

    The all-m=0 product state and the maximally mixed state are evolved
    together. Returns True iff their endpoints agree within ``atol`` in max
    absolute entry difference. Raises IndeterminateProbe if the evolution has
    not converged by ``max_time``.

    With ``return_states=True`` returns ``(verdict, endpoints)``.
    """
    states = [ground_product_state(L.n_sites), maximally_mixed(L.n_sites)]
    rhos, t, gap, remaining, ok = _evolve_until_converged(
        L, states, target, chunk_time=2.0, max_time=max_time, dt=None
    )
    if not ok:
        raise IndeterminateProbe(
            f"no convergence by t={t:.4g} (remaining estimate {remaining:.2e})"
        )
    verdict = bool(np.max(np.abs(rhos[0] - rhos[1])) <= atol)
    if return_states:
        return verdict, rhos
    return verdict
