"""Pairwise relative-phase distributions and the peak-contrast measure.

For two spin-1 oscillators the Husimi relative-phase distribution contains
exactly two harmonics,

    S2(phi) = A1 cos(phi - arg c1) + A2 cos(2 phi - arg c2),

with ``c1 = <S+_i S-_j>``, ``c2 = <(S+_i S-_j)^2>``, ``A1 = 9 pi |c1| / 256``
and ``A2 = |c2| / (16 pi)``. Here ``phi = phi_i - phi_j`` and coherent states
are rotated by ``exp(-i phi Sz)``; :func:`s2_husimi_oracle` integrates the
phase-space definition directly and must agree with the closed form.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .spin import SITE_DIM, SPIN1, spin_y

FIRST_HARMONIC = 9 * np.pi / 256
SECOND_HARMONIC = 1 / (16 * np.pi)

# amplitudes below this are treated as exactly zero with phase 0
ZERO_AMPLITUDE = 1e-14
POSITIVE_PEAK = 1e-12
EQUAL_PEAKS = 1e-12

DEFAULT_GRID = 2048
DEFAULT_QUAD_ORDER = 64


class QuadratureError(RuntimeError):
    pass


def _n_sites_of(dim: int) -> int:
    n = int(round(math.log(dim, SITE_DIM)))
    if SITE_DIM**n != dim:
        raise ValueError(f"dimension {dim} is not a power of {SITE_DIM}")
    return n


def reduce_pair(rho: np.ndarray, i: int, j: int) -> np.ndarray:
    """Partial trace onto sites ``(i, j)``; ``i`` becomes the left factor."""
    rho = np.asarray(rho)
    n = _n_sites_of(rho.shape[0])
    if i == j:
        raise ValueError("pair sites must differ")
    for s in (i, j):
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range for {n} sites")
    letters = string.ascii_letters
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for s in range(n):
        if s not in (i, j):
            cols[s] = rows[s]
    spec = "".join(rows) + "".join(cols) + "->" + rows[i] + rows[j] + cols[i] + cols[j]
    tensor = rho.reshape((SITE_DIM,) * (2 * n))
    return np.einsum(spec, tensor).reshape(SITE_DIM**2, SITE_DIM**2)


_PAIR_FLIP = np.kron(SPIN1.Splus, SPIN1.Sminus)
_PAIR_FLIP2 = _PAIR_FLIP @ _PAIR_FLIP


class PairCorrelators(NamedTuple):
    c1: complex
    c2: complex


def pair_correlators(rho_pair: np.ndarray) -> PairCorrelators:
    """First- and second-order flip-flop correlators of a 9x9 pair state."""
    rho_pair = np.asarray(rho_pair)
    c1 = complex(np.trace(rho_pair @ _PAIR_FLIP))
    c2 = complex(np.trace(rho_pair @ _PAIR_FLIP2))
    return PairCorrelators(c1, c2)


def _amp_phase(c: complex, weight: float) -> tuple[float, float]:
    amp = abs(c)
    if amp < ZERO_AMPLITUDE:
        return 0.0, 0.0
    phase = float(np.angle(c))
    if phase <= -np.pi:
        phase = np.pi
    return weight * amp, phase


def uniform_grid(grid_size: int) -> np.ndarray:
    return 2 * np.pi * np.arange(grid_size) / grid_size


@dataclass(frozen=True)
class PhaseDistribution:
    """Two-harmonic relative-phase distribution sampled on ``[0, 2 pi)``.

    ``phi1``/``phi2`` are the correlator phases ``arg c1``/``arg c2``; the
    curve is ``a1 cos(x - phi1) + a2 cos(2x - phi2)``.
    """

    a1: float
    phi1: float
    a2: float
    phi2: float
    phi: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def first(self, x) -> np.ndarray:
        return self.a1 * np.cos(np.asarray(x) - self.phi1)

    def second(self, x) -> np.ndarray:
        return self.a2 * np.cos(2 * np.asarray(x) - self.phi2)

    def __call__(self, x) -> np.ndarray:
        return self.first(x) + self.second(x)

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x)
        return -self.a1 * np.sin(x - self.phi1) - 2 * self.a2 * np.sin(2 * x - self.phi2)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.phi.tolist(), self.values.tolist()))


def harmonic_distribution(a1, phi1, a2, phi2, grid_size: int = DEFAULT_GRID) -> PhaseDistribution:
    """Distribution from harmonic amplitudes and phases directly."""
    if a1 < 0 or a2 < 0:
        raise ValueError("harmonic amplitudes must be nonnegative")
    if grid_size < 16:
        raise ValueError(f"grid_size must be >= 16, got {grid_size}")
    phi = uniform_grid(grid_size)
    values = a1 * np.cos(phi - phi1) + a2 * np.cos(2 * phi - phi2)
    return PhaseDistribution(float(a1), float(phi1), float(a2), float(phi2), phi, values)


def s2_closed_form(c: PairCorrelators, grid_size: int = DEFAULT_GRID) -> PhaseDistribution:
    a1, phi1 = _amp_phase(c.c1, FIRST_HARMONIC)
    a2, phi2 = _amp_phase(c.c2, SECOND_HARMONIC)
    return harmonic_distribution(a1, phi1, a2, phi2, grid_size)


def coherent_state(theta: float, phi: float) -> np.ndarray:
    """exp(-i phi Sz) exp(-i theta Sy) |m=+1>."""
    top = np.zeros(SITE_DIM, dtype=complex)
    top[0] = 1.0
    return expm(-1j * phi * SPIN1.Sz) @ expm(-1j * theta * spin_y()) @ top


def _husimi_s2(rho_pair: np.ndarray, phis: np.ndarray, order: int) -> np.ndarray:
    # Gauss-Legendre in theta on [0, pi] with the sin(theta) Jacobian folded
    # into the weights; uniform periodic rule in phi_j.
    nodes, weights = np.polynomial.legendre.leggauss(order)
    thetas = 0.5 * np.pi * (nodes + 1.0)
    w_theta = 0.5 * np.pi * weights * np.sin(thetas)
    sy = spin_y()
    polar = np.array([expm(-1j * t * sy)[:, 0] for t in thetas])  # (order, 3)
    # theta-integrated outer products at zero azimuth: sum_q w_q conj(u_a) u_c
    polar_moment = np.einsum("q,qa,qc->ac", w_theta, polar.conj(), polar)
    m = np.real(np.diag(SPIN1.Sz))

    def azimuth(angle):
        # exp(-i angle Sz) is diagonal; rotate the moment accordingly
        ph = np.exp(-1j * np.multiply.outer(angle, m))  # (..., 3)
        return polar_moment * ph.conj()[..., :, None] * ph[..., None, :]

    phi_j = 2 * np.pi * np.arange(order) / order
    moment_j = azimuth(phi_j)  # (K, 3, 3) as [b, d]
    moment_i = azimuth(np.add.outer(phis, phi_j))  # (G, K, 3, 3) as [a, c]
    tensor = np.asarray(rho_pair).reshape(3, 3, 3, 3)  # [a, b, c, d]
    integrand = np.einsum("gkac,kbd,abcd->gk", moment_i, moment_j, tensor, optimize=True)
    norm = (3 / (4 * np.pi)) ** 2
    marginal = norm * (2 * np.pi / order) * integrand.sum(axis=1).real
    return marginal - 1 / (2 * np.pi)


def s2_husimi_oracle(
    rho_pair: np.ndarray,
    grid_size: int = DEFAULT_GRID,
    quad_order: int = DEFAULT_QUAD_ORDER,
) -> tuple[np.ndarray, np.ndarray]:
    """Relative-phase distribution by direct quadrature of the Husimi function.

    Integrates ``Q`` over both polar angles and the azimuth of site ``j``
    with ``phi_i = phi + phi_j`` and subtracts the uniform density
    ``1 / (2 pi)``. The result is checked against a run at twice the
    quadrature order.

    Returns
    -------
    phi, values : ndarray
    """
    if quad_order < 16:
        raise ValueError(f"quad_order must be >= 16, got {quad_order}")
    phi = uniform_grid(grid_size)
    values = _husimi_s2(rho_pair, phi, quad_order)
    check = _husimi_s2(rho_pair, phi, 2 * quad_order)
    change = float(np.max(np.abs(values - check)))
    if change > 1e-8:
        raise QuadratureError(f"doubling quad_order changed S2 by {change:.2e}")
    return phi, values


class Peak(NamedTuple):
    phi: float
    height: float


@dataclass(frozen=True)
class SyncMeasure:
    value: float
    peak_main: Peak | None
    peak_second: Peak | None
    peaks: tuple[Peak, ...] = ()

    def __float__(self):
        return self.value


def find_peaks(dist: PhaseDistribution, grid_size: int | None = None) -> list[Peak]:
    """All local maxima of the two-harmonic curve on the periodic interval,
    refined by bracketing the analytic derivative."""
    if dist.a1 == 0 and dist.a2 == 0:
        return []
    n = grid_size or max(len(dist.phi), 256)
    grid = uniform_grid(n)
    f = dist(grid)
    left = np.roll(f, 1)
    right = np.roll(f, -1)
    candidates = np.flatnonzero((f >= left) & (f > right))
    step = 2 * np.pi / n
    peaks: list[Peak] = []
    for k in candidates:
        lo, hi = grid[k] - step, grid[k] + step
        dlo, dhi = float(dist.derivative(lo)), float(dist.derivative(hi))
        if dlo > 0 and dhi < 0:
            x = brentq(lambda t: float(dist.derivative(t)), lo, hi, xtol=1e-15)
        else:
            x = float(grid[k])
        x = float(np.mod(x, 2 * np.pi))
        if any(abs((x - p.phi + np.pi) % (2 * np.pi) - np.pi) < 1e-9 for p in peaks):
            continue
        peaks.append(Peak(x, float(dist(x))))
    peaks.sort(key=lambda p: p.height, reverse=True)
    return peaks


def peak_contrast(dist: PhaseDistribution) -> SyncMeasure:
    """Largest minus second-largest positive peak of ``dist``.

    Missing positive peaks count as zero height; two peaks that agree within
    1e-12 give exactly zero.
    """
    peaks = find_peaks(dist)
    positive = [p for p in peaks if p.height > POSITIVE_PEAK]
    main = positive[0] if positive else None
    second = positive[1] if len(positive) > 1 else None
    h1 = main.height if main else 0.0
    h2 = second.height if second else 0.0
    value = 0.0 if abs(h1 - h2) <= EQUAL_PEAKS else h1 - h2
    return SyncMeasure(value, main, second, tuple(peaks))


def sync_measure(rho: np.ndarray, i: int, j: int, grid_size: int = DEFAULT_GRID):
    """Convenience: (SyncMeasure, PairCorrelators, PhaseDistribution) of pair (i, j)."""
    corr = pair_correlators(reduce_pair(rho, i, j))
    dist = s2_closed_form(corr, grid_size)
    return peak_contrast(dist), corr, dist
