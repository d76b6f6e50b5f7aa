"""Command-line entry point: ``starsync steady|s2|sweep|reproduce``.

Exit status: 0 ok, 1 input error, 2 solver failure, 3 tolerance unmet.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, ExperimentSpec, load_spec, set_path, spec_from_dict
from .lindblad import (
    SolverError,
    build_liouvillian,
    residual_norm,
    steady_state,
)
from .measures import QuadratureError, pair_correlators, reduce_pair, s2_closed_form
from .presets import DEFAULT_POINTS_1D, DEFAULT_POINTS_2D, FIGURE_IDS, get_preset
from .spin import SPIN1
from .sweep import SweepAxis, SweepTable, default_workers, run_points, sweep_1d, sweep_2d

log = logging.getLogger("starsync")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_TOL = 0, 1, 2, 3

S2_COLUMNS = ("phi", "s2", "s2_1", "s2_2")
STEADY_COLUMNS = ("site", "pop_plus", "pop_zero", "pop_minus", "sz")


class CommandError(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


def _f17(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.17g}"


def _metadata(spec: ExperimentSpec | None, **extra) -> dict:
    meta = {"tool": "starsync", "version": __version__}
    if spec is not None:
        meta["config_sha256"] = spec.digest()
        meta["config"] = spec.to_dict()
    meta.update(extra)
    return meta


def _header_lines(meta: dict) -> list[str]:
    lines = []
    for key, value in meta.items():
        if isinstance(value, float):
            value = _f17(value)
        elif not isinstance(value, str):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return lines


def read_metadata(text: str) -> dict:
    """Parse the ``# key: value`` header of a CSV file written by this tool."""
    meta = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        try:
            meta[key] = json.loads(value)
        except ValueError:
            meta[key] = value

    return meta


def _write_table_csv(columns, rows, meta) -> str:
    buf = io.StringIO()
    for line in _header_lines(meta):
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([v if isinstance(v, (int, str)) else _f17(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


# --------------------------------------------------------------------- steady


def _solve(spec: ExperimentSpec):
    L = build_liouvillian(spec.network)
    try:
        rho = steady_state(
            L, tol=spec.solver.tol, method=spec.solver.method, max_iterations=spec.solver.max_iterations
        )
    except SolverError as exc:
        raise CommandError(f"solver failure: {exc}", EXIT_SOLVER) from exc
    return L, rho


def steady_report(spec: ExperimentSpec) -> dict:
    L, rho = _solve(spec)
    n = spec.network.n_sites
    sites = []
    for s in range(n):
        single = reduce_single(rho, s)
        pops = np.real(np.diag(single))
        sz = float(np.real(np.trace(single @ SPIN1.Sz)))
        sites.append({"site": s, "populations": pops.tolist(), "sz": sz})
    return {
        "residual": residual_norm(L, rho),
        "trace": float(np.real(np.trace(rho))),
        "min_eigenvalue": float(np.linalg.eigvalsh(rho)[0]),
        "sites": sites,
    }


def reduce_single(rho: np.ndarray, site: int) -> np.ndarray:
    n = round(math.log(rho.shape[0], 3))
    t = rho.reshape((3 ** site, 3, 3 ** (n - site - 1)) * 2)
    return np.einsum("aibajb->ij", t)


def cmd_steady(spec: ExperimentSpec) -> tuple[str, int]:
    rep = steady_report(spec)
    meta = _metadata(
        spec, residual=rep["residual"], trace=rep["trace"], min_eigenvalue=rep["min_eigenvalue"]
    )
    status = EXIT_OK if rep["residual"] <= spec.solver.tol else EXIT_TOL
    if spec.output.format == "json":
        return json.dumps({"metadata": meta, **rep}, indent=2) + "\n", status
    rows = [[s["site"], *s["populations"], s["sz"]] for s in rep["sites"]]
    return _write_table_csv(STEADY_COLUMNS, rows, meta), status


# ------------------------------------------------------------------------- s2


def s2_payload(spec: ExperimentSpec, pair: tuple[int, int]):
    i, j = pair
    n = spec.network.n_sites
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise CommandError(f"--pair {i},{j} invalid for a network of {n} sites", EXIT_INPUT)
    L, rho = _solve(spec)
    corr = pair_correlators(reduce_pair(rho, i, j))
    dist = s2_closed_form(corr, spec.measure.grid_size)
    meta = {
        "pair": [i, j],
        "a1": dist.a1,
        "phi1": dist.phi1,
        "a2": dist.a2,
        "phi2": dist.phi2,
        "abs_c1": abs(corr.c1),
        "abs_c2": abs(corr.c2),
        "residual": residual_norm(L, rho),
    }
    columns = (dist.phi, dist.values, dist.first(dist.phi), dist.second(dist.phi))
    return meta, columns


def _s2_text(spec: ExperimentSpec, fmt: str, meta: dict, columns) -> str:
    full = _metadata(spec, **meta)
    if fmt == "json":
        data = {name: np.asarray(col).tolist() for name, col in zip(S2_COLUMNS, columns)}
        return json.dumps({"metadata": full, "columns": list(S2_COLUMNS), "data": data}, indent=2) + "\n"
    return _write_table_csv(S2_COLUMNS, zip(*columns), full)


def cmd_s2(spec: ExperimentSpec, pair: tuple[int, int]) -> tuple[str, int]:
    meta, columns = s2_payload(spec, pair)
    status = EXIT_OK if meta["residual"] <= spec.solver.tol else EXIT_TOL
    return _s2_text(spec, spec.output.format, meta, columns), status


# ---------------------------------------------------------------------- sweep


def _table_text(table: SweepTable, spec: ExperimentSpec | None, fmt: str, **extra) -> str:
    res = table.column("residual")
    worst = float(np.nanmax(res)) if np.any(np.isfinite(res)) else math.nan
    meta = _metadata(
        spec,
        axes=[a.parameter for a in table.axes],
        residual_max=worst,
        failed_points=table.n_failed,
        **extra,
    )
    if fmt == "json":
        return table.to_json(meta) + "\n"
    return table.to_csv(_header_lines(meta))


def run_sweep(spec: ExperimentSpec, workers: int | None = None) -> SweepTable:
    if spec.sweep is None:
        raise CommandError("sweep: config has no 'sweep' section", EXIT_INPUT)
    axes = spec.sweep.axes
    workers = spec.sweep.workers if workers is None else workers
    opts = dict(
        tol=spec.solver.tol,
        grid_size=spec.measure.grid_size,
        workers=workers,
        method=spec.solver.method,
        max_iterations=spec.solver.max_iterations,
    )
    try:
        if len(axes) == 1:
            return sweep_1d(spec.network, axes[0], **opts)
        return sweep_2d(spec.network, axes[0], axes[1], **opts)
    except ValueError as exc:
        raise CommandError(f"sweep: {exc}", EXIT_INPUT) from exc


def cmd_sweep(spec: ExperimentSpec) -> tuple[str, int]:
    table = run_sweep(spec)
    status = EXIT_OK if table.all_within_tol else EXIT_TOL
    return _table_text(table, spec, spec.output.format), status


# ------------------------------------------------------------------ reproduce


def cmd_reproduce(
    figure_id: str,
    out_dir: str,
    fmt: str = "csv",
    workers: int | None = None,
    points: int | None = None,
    tol: float | None = None,
) -> tuple[list[Path], int]:
    """Run a figure preset and write one data file per job into ``out_dir``."""
    try:
        preset = get_preset(figure_id)
    except KeyError as exc:
        raise CommandError(str(exc.args[0]), EXIT_INPUT) from exc
    n1 = points or DEFAULT_POINTS_1D
    n2 = points or DEFAULT_POINTS_2D
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    status = EXIT_OK
    for job in preset.jobs:
        base = {
            "network": job.network.to_dict(),
            "output": {"format": fmt},
        }
        if tol is not None:
            base["solver"] = {"tol": tol}
        extra = {
            "figure": preset.figure_id,
            "job": job.name,
            "unit": preset.unit,
            "interpretive": preset.interpretive,
        }
        if job.note:
            extra["note"] = job.note
        if job.kind == "s2":
            spec = spec_from_dict(base)
            meta, columns = s2_payload(spec, job.pair)
            if meta["residual"] > spec.solver.tol:
                status = EXIT_TOL
            text = _s2_text(spec, fmt, {**meta, **extra}, columns)
        else:
            if job.points is not None:
                spec = spec_from_dict(base)
                pts = job.points(n1)
                axis = SweepAxis("gain_ratio", tuple(p[1] for p in pts))
                rows = run_points(
                    pts,
                    workers,
                    tol=spec.solver.tol,
                    grid_size=spec.measure.grid_size,
                )
                table = SweepTable((axis,), rows, spec.solver.tol)
            else:
                axes = job.axes(n1, n2)
                base["sweep"] = {
                    "axes": [{"parameter": a.parameter, "values": list(a.values)} for a in axes],
                    "workers": workers or default_workers(),
                }
                spec = spec_from_dict(base)
                table = run_sweep(spec, workers)
            if not table.all_within_tol:
                status = EXIT_TOL
            text = _table_text(table, spec, fmt, **extra)
        path = out / f"{preset.figure_id}_{job.name}.{fmt}"
        path.write_text(text)
        written.append(path)
        log.info("wrote %s", path)
    return written, status


# ------------------------------------------------------------------------ CLI


def _parse_pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {text!r}") from None
    return i, j


def _parse_set(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(value)
    except ValueError:
        # bare words and YAML flow syntax
        return key, yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starsync", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML experiment file")
        p.add_argument("--output", help="output path (output.path); '-' for stdout")
        p.add_argument("--format", choices=("csv", "json"), help="output.format")
        p.add_argument("--tol", type=float, help="solver.tol")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            type=_parse_set,
            default=[],
            metavar="PATH=VALUE",
            help="override any config field, e.g. network.coupling=0.2",
        )

    common(sub.add_parser("steady", help="steady-state diagnostics"))
    p_s2 = sub.add_parser("s2", help="relative-phase distribution of one pair")
    common(p_s2)
    p_s2.add_argument("--pair", type=_parse_pair, default=(0, 1), help="sites i,j (default 0,1)")
    p_sw = sub.add_parser("sweep", help="1D/2D parameter sweep")
    common(p_sw)
    p_sw.add_argument("--workers", type=int, help="sweep.workers")

    p_re = sub.add_parser("reproduce", help="run a built-in figure preset")
    p_re.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    p_re.add_argument("--output", default="reproduce_out", help="output directory")
    p_re.add_argument("--format", choices=("csv", "json"), default="csv")
    p_re.add_argument("--workers", type=int)
    p_re.add_argument("--tol", type=float)
    p_re.add_argument("--points", type=int, help="grid points per axis (overrides preset default)")
    return parser


def _load(args) -> ExperimentSpec:
    spec = load_spec(args.config)
    data = spec.to_dict()
    for key, value in args.overrides:
        set_path(data, key, value)
    if args.output is not None:
        set_path(data, "output.path", args.output)
    if args.format is not None:
        set_path(data, "output.format", args.format)
    if args.tol is not None:
        set_path(data, "solver.tol", args.tol)
    if getattr(args, "workers", None) is not None:
        if data.get("sweep") is None:
            raise ConfigError("sweep.workers", "config has no sweep section")
        set_path(data, "sweep.workers", args.workers)
    return spec_from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "reproduce":
            if args.figure_id not in FIGURE_IDS:
                raise CommandError(
                    f"unknown figure id {args.figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}",
                    EXIT_INPUT,
                )
            paths, status = cmd_reproduce(
                args.figure_id, args.output, args.format, args.workers, args.points, args.tol
            )
            for p in paths:
                print(p)
            return status
        spec = _load(args)
        if args.command == "steady":
            text, status = cmd_steady(spec)
        elif args.command == "s2":
            text, status = cmd_s2(spec, args.pair)
        else:
            text, status = cmd_sweep(spec)
        _emit(text, spec.output.path)
        return status
    except ConfigError as exc:
        print(f"starsync: config error in {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CommandError as exc:
        print(f"starsync: {exc}", file=sys.stderr)
        return exc.status
    except QuadratureError as exc:
        print(f"starsync: {exc}", file=sys.stderr)
        return EXIT_TOL


if __name__ == "__main__":
    sys.exit(main())
