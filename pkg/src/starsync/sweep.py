"""Parameter sweeps producing hub-leaf and leaf-leaf synchronization tables."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .lindblad import (
    DEFAULT_TOL,
    NetworkConfig,
    SolverError,
    build_liouvillian,
    residual_norm,
    steady_state,
)
from .measures import DEFAULT_GRID, sync_measure

WORKERS_ENV = "STARSYNC_WORKERS"

PARAMETERS = {
    "coupling": "coupling",
    "detuning": "delta",
    "hub_gain": "hub_gain",
    "leaf_gain": "leaf_gain",
    "hub_damp": "hub_damp",
    "leaf_damp": "leaf_damp",
    "gain_ratio": None,
}

CSV_COLUMNS = (
    "axis1",
    "axis2",
    "s01",
    "s12",
    "abs_c1_01",
    "abs_c2_01",
    "abs_c1_12",
    "abs_c2_12",
    "residual",
    "solve_seconds",
    "failed",
)


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(
                f"unknown sweep parameter {self.parameter!r}; expected one of {sorted(PARAMETERS)}"
            )
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("sweep axis needs at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("sweep values must be finite")
        diffs = np.diff(vals)
        if len(vals) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError(f"values of {self.parameter} must be strictly monotonic")
        if self.parameter != "detuning" and min(vals) < 0:
            raise ValueError(f"values of {self.parameter} must be nonnegative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, parameter: str, start: float, stop: float, num: int) -> "SweepAxis":
        return cls(parameter, tuple(np.linspace(start, stop, int(num))))

    def __len__(self):
        return len(self.values)

    def apply(self, config: NetworkConfig, value: float) -> NetworkConfig:
        """``config`` with this axis' parameter set to ``value``.

        ``gain_ratio`` sets every gain to ``value`` times that site's damping
        rate, keeping damping fixed.
        """
        if self.parameter == "gain_ratio":
            return config.replace(
                hub_gain=value * config.hub_damp, leaf_gain=value * config.leaf_damp
            )
        return config.replace(**{PARAMETERS[self.parameter]: value})


@dataclass
class SweepRow:
    axis1: float
    axis2: float | None
    s01: float
    s12: float
    abs_c1_01: float
    abs_c2_01: float
    abs_c1_12: float
    abs_c2_12: float
    residual: float
    solve_seconds: float
    failed: bool = False
    error: str = ""

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class SweepTable:
    axes: tuple[SweepAxis, ...]
    rows: list[SweepRow] = field(default_factory=list)
    tol: float = DEFAULT_TOL

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows], dtype=float)

    def grid(self, name: str) -> np.ndarray:
        """Column reshaped to ``(len(axis_a), len(axis_b))`` for 2D sweeps."""
        shape = tuple(len(a) for a in self.axes)
        return self.column(name).reshape(shape)

    @property
    def n_failed(self) -> int:
        return sum(r.failed for r in self.rows)

    @property
    def all_within_tol(self) -> bool:
        return all(not r.failed and r.residual <= self.tol for r in self.rows)

    def to_records(self) -> list[dict]:
        return [asdict(r) for r in self.rows]

    def write_csv(self, fh, header_lines: Iterable[str] = ()) -> None:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row.as_tuple()])

    def to_csv(self, header_lines: Iterable[str] = ()) -> str:
        buf = io.StringIO()
        self.write_csv(buf, header_lines)
        return buf.getvalue()

    def to_json(self, metadata: dict | None = None) -> str:
        payload = {
            "metadata": metadata or {},
            "axes": [{"parameter": a.parameter, "values": list(a.values)} for a in self.axes],
            "columns": list(CSV_COLUMNS),
            "rows": [
                {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(r).items()}
                for r in self.rows
            ],
        }
        return json.dumps(payload, indent=2)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.17g}"
    return str(value)


def evaluate_point(
    config: NetworkConfig,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID,
    method: str = "auto",
    max_iterations: int = 500,
    axis1: float = math.nan,
    axis2: float | None = None,
) -> SweepRow:
    """Steady state and both pair measures at one parameter point.

    Solver failures are recorded in the row rather than raised.
    """
    nan = math.nan
    start = time.perf_counter()
    try:
        L = build_liouvillian(config)
        rho = steady_state(L, tol=tol, method=method, max_iterations=max_iterations)
    except (SolverError, ValueError, RuntimeError) as exc:
        return SweepRow(
            axis1, axis2, nan, nan, nan, nan, nan, nan,
            getattr(exc, "residual", nan), time.perf_counter() - start, True, str(exc),
        )
    elapsed = time.perf_counter() - start
    res = residual_norm(L, rho)
    m01, c01, _ = sync_measure(rho, 0, 1, grid_size)
    if config.n_leaves >= 2:
        m12, c12, _ = sync_measure(rho, 1, 2, grid_size)
        s12, a1_12, a2_12 = m12.value, abs(c12.c1), abs(c12.c2)
    else:
        s12 = a1_12 = a2_12 = nan
    return SweepRow(
        axis1, axis2, m01.value, s12, abs(c01.c1), abs(c01.c2), a1_12, a2_12, res, elapsed
    )


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _evaluate_task(args) -> SweepRow:
    config, axis1, axis2, opts = args
    return evaluate_point(config, axis1=axis1, axis2=axis2, **opts)


def run_points(
    points: Sequence[tuple[NetworkConfig, float, float | None]],
    workers: int | None = None,
    **opts,
) -> list[SweepRow]:
    """Evaluate ``(config, axis1, axis2)`` points, preserving input order."""
    workers = default_workers() if workers is None else int(workers)
    tasks = [(cfg, a1, a2, opts) for cfg, a1, a2 in points]
    if workers <= 1 or len(tasks) <= 1:
        return [_evaluate_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_task, tasks))


def _check_base(base: NetworkConfig):
    if base.n_leaves < 1:
        raise ValueError("sweeps need at least one leaf to define the hub-leaf pair")


def _apply_both(base: NetworkConfig, *settings) -> NetworkConfig:
    # gain_ratio goes last so it sees the damping rate set by the other axis
    cfg = base
    for axis, value in sorted(settings, key=lambda s: s[0].parameter == "gain_ratio"):
        cfg = axis.apply(cfg, value)
    return cfg


def sweep_1d(
    base: NetworkConfig,
    axis: SweepAxis,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID,
    workers: int | None = None,
    method: str = "auto",
    max_iterations: int = 500,
) -> SweepTable:
    _check_base(base)
    points = [(axis.apply(base, v), v, None) for v in axis.values]
    rows = run_points(
        points, workers, tol=tol, grid_size=grid_size, method=method, max_iterations=max_iterations
    )
    return SweepTable((axis,), rows, tol)


def sweep_2d(
    base: NetworkConfig,
    axis_a: SweepAxis,
    axis_b: SweepAxis,
    tol: float = DEFAULT_TOL,
    grid_size: int = DEFAULT_GRID,
    workers: int | None = None,
    method: str = "auto",
    max_iterations: int = 500,
) -> SweepTable:
    """Row-major grid over ``axis_a`` (slow) and ``axis_b`` (fast)."""
    if axis_a.parameter == axis_b.parameter:
        raise ValueError("sweep axes must vary distinct parameters")
    touched = {axis_a.parameter, axis_b.parameter}
    if "gain_ratio" in touched and touched & {"hub_gain", "leaf_gain"}:
        raise ValueError("gain_ratio cannot be combined with an explicit gain axis")
    _check_base(base)
    points = [
        (_apply_both(base, (axis_a, va), (axis_b, vb)), va, vb)
        for va in axis_a.values
        for vb in axis_b.values
    ]
    rows = run_points(
        points, workers, tol=tol, grid_size=grid_size, method=method, max_iterations=max_iterations
    )
    return SweepTable((axis_a, axis_b), rows, tol)
