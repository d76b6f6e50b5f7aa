"""Experiment specification files (YAML) and their validation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .lindblad import DEFAULT_TOL, NetworkConfig
from .measures import DEFAULT_GRID, DEFAULT_QUAD_ORDER
from .sweep import SweepAxis, default_workers

NETWORK_FIELDS = tuple(f.name for f in dataclasses.fields(NetworkConfig))
FORMATS = ("csv", "json")
METHODS = ("auto", "direct", "iterative")


class ConfigError(ValueError):
    """Invalid experiment specification; ``field`` names the offending path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class SolverOptions:
    tol: float = DEFAULT_TOL
    max_iterations: int = 500
    method: str = "auto"


@dataclass(frozen=True)
class MeasureOptions:
    grid_size: int = DEFAULT_GRID
    quad_order: int = DEFAULT_QUAD_ORDER


@dataclass(frozen=True)
class SweepOptions:
    axes: tuple[SweepAxis, ...]
    workers: int = 1


@dataclass(frozen=True)
class OutputOptions:
    path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class ExperimentSpec:
    network: NetworkConfig
    solver: SolverOptions = field(default_factory=SolverOptions)
    measure: MeasureOptions = field(default_factory=MeasureOptions)
    sweep: SweepOptions | None = None
    output: OutputOptions = field(default_factory=OutputOptions)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "network": self.network.to_dict(),
            "solver": dataclasses.asdict(self.solver),
            "measure": dataclasses.asdict(self.measure),
            "output": dataclasses.asdict(self.output),
        }
        if self.sweep is not None:
            out["sweep"] = {
                "axes": [{"parameter": a.parameter, "values": list(a.values)} for a in self.sweep.axes],
                "workers": self.sweep.workers,
            }
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _section(data: dict, name: str, required: bool = False) -> dict:
    value = data.get(name)
    if value is None:
        if required:
            raise ConfigError(name, "section is missing")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(name, "must be a mapping")
    return value


def _number(section: dict, path: str, key: str, kind=float):
    if key not in section:
        raise ConfigError(f"{path}.{key}", "required field is missing")
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {value!r}")
    return kind(value)


def _unknown(section: dict, path: str, allowed) -> None:
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown field")


def _parse_axis(raw, where: str) -> SweepAxis:
    if not isinstance(raw, dict):
        raise ConfigError(where, "axis must be a mapping")
    _unknown(raw, where, ("parameter", "values", "linspace"))
    if "parameter" not in raw:
        raise ConfigError(f"{where}.parameter", "required field is missing")
    if ("values" in raw) == ("linspace" in raw):
        raise ConfigError(where, "give exactly one of 'values' or 'linspace'")
    try:
        if "linspace" in raw:
            start, stop, num = raw["linspace"]
            return SweepAxis.linspace(raw["parameter"], start, stop, num)
        return SweepAxis(raw["parameter"], tuple(raw["values"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from exc


def spec_from_dict(data: dict) -> ExperimentSpec:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a mapping")
    _unknown(data, "<root>", ("network", "solver", "measure", "sweep", "output"))

    net = _section(data, "network", required=True)
    _unknown(net, "network", NETWORK_FIELDS)
    values = {}
    for key in NETWORK_FIELDS:
        values[key] = _number(net, "network", key, int if key == "n_leaves" else float)
    try:
        network = NetworkConfig(**values)
    except ValueError as exc:
        msg = str(exc)
        name = next((k for k in NETWORK_FIELDS if k in msg), "")
        raise ConfigError(f"network.{name}" if name else "network", msg) from exc

    sol = _section(data, "solver")
    _unknown(sol, "solver", ("tol", "max_iterations", "method"))
    solver = SolverOptions(
        tol=_number(sol, "solver", "tol") if "tol" in sol else DEFAULT_TOL,
        max_iterations=_number(sol, "solver", "max_iterations", int) if "max_iterations" in sol else 500,
        method=sol.get("method", "auto"),
    )
    if not solver.tol > 0:
        raise ConfigError("solver.tol", "must be positive")
    if solver.max_iterations < 1:
        raise ConfigError("solver.max_iterations", "must be positive")
    if solver.method not in METHODS:
        raise ConfigError("solver.method", f"expected one of {METHODS}")

    mea = _section(data, "measure")
    _unknown(mea, "measure", ("grid_size", "quad_order"))
    measure = MeasureOptions(
        grid_size=_number(mea, "measure", "grid_size", int) if "grid_size" in mea else DEFAULT_GRID,
        quad_order=_number(mea, "measure", "quad_order", int) if "quad_order" in mea else DEFAULT_QUAD_ORDER,
    )
    if measure.grid_size < 16:
        raise ConfigError("measure.grid_size", "must be >= 16")
    if measure.quad_order < 16:
        raise ConfigError("measure.quad_order", "must be >= 16")

    sweep = None
    if data.get("sweep") is not None:
        sw = _section(data, "sweep")
        _unknown(sw, "sweep", ("axes", "workers"))
        raw_axes = sw.get("axes")
        if not isinstance(raw_axes, list) or not 1 <= len(raw_axes) <= 2:
            raise ConfigError("sweep.axes", "expected a list of one or two axes")
        axes = tuple(_parse_axis(a, f"sweep.axes[{k}]") for k, a in enumerate(raw_axes))
        if len(axes) == 2 and axes[0].parameter == axes[1].parameter:
            raise ConfigError("sweep.axes", "axes must vary distinct parameters")
        workers = _number(sw, "sweep", "workers", int) if "workers" in sw else default_workers()
        if workers < 1:
            raise ConfigError("sweep.workers", "must be >= 1")
        sweep = SweepOptions(axes, workers)

    out = _section(data, "output")
    _unknown(out, "output", ("path", "format"))
    output = OutputOptions(path=out.get("path"), format=out.get("format", "csv"))
    if output.format not in FORMATS:
        raise ConfigError("output.format", f"expected one of {FORMATS}, got {output.format!r}")
    if output.path is not None and not isinstance(output.path, str):
        raise ConfigError("output.path", "must be a string")

    return ExperimentSpec(network, solver, measure, sweep, output)


def parse_spec(text: str) -> ExperimentSpec:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"YAML parse error: {exc}") from exc
    return spec_from_dict(data)


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from exc
    return parse_spec(text)


def set_path(data: dict, dotted: str, value: Any) -> None:
    """Assign ``value`` at a dotted path such as ``network.coupling``."""
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        child = node.get(key)
        if child is None:
            child = node[key] = {}
        if not isinstance(child, dict):
            raise ConfigError(dotted, f"{key} is not a section")
        node = child
    node[keys[-1]] = value
