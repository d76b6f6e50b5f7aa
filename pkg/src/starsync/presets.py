"""Built-in parameter sets for each figure panel.

Rates and couplings are in the unit named by ``unit``; the engine itself is
unit agnostic. Panels whose scanned axes are only partly determined (fig4a,
fig4b, fig6) are marked ``interpretive`` and emitted under two scan modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lindblad import NetworkConfig
from .sweep import SweepAxis

DEFAULT_POINTS_1D = 16
DEFAULT_POINTS_2D = 6


def _net(n_leaves=4, delta=0.0, coupling=0.0, hub_gain=1.0, hub_damp=1.0, leaf_gain=1.0, leaf_damp=1.0):
    return NetworkConfig(n_leaves, delta, coupling, hub_gain, hub_damp, leaf_gain, leaf_damp)


SYMMETRIC = dict(hub_gain=1.0, hub_damp=1.0, leaf_gain=1.0, leaf_damp=1.0)
WEAK_GAIN = dict(hub_gain=0.1, hub_damp=1.0, leaf_gain=0.1, leaf_damp=1.0)


@dataclass(frozen=True)
class Job:
    """One output file of a preset.

    ``kind`` is ``"s2"`` (phase distribution of ``pair`` at ``network``) or
    ``"sweep"`` (table over ``axes``). A sweep job may instead supply
    ``points``: a callable mapping the resolution to explicit
    ``(config, axis1, axis2)`` triples, for scans the axis model can't express.
    """

    name: str
    kind: str
    network: NetworkConfig
    pair: tuple[int, int] = (0, 1)
    axes: Callable[[int, int], tuple[SweepAxis, ...]] | None = None
    points: Callable[[int], list] | None = None
    note: str = ""


@dataclass(frozen=True)
class Preset:
    figure_id: str
    description: str
    unit: str
    jobs: tuple[Job, ...]
    interpretive: bool = False
    extra: dict = field(default_factory=dict)


def _lin(parameter, start, stop):
    return lambda n: SweepAxis.linspace(parameter, start, stop, n)


def _geom(parameter, start, stop):
    return lambda n: SweepAxis(parameter, tuple(np.geomspace(start, stop, n)))


def _axes_1d(make):
    return lambda n1, n2: (make(n1),)


def _axes_2d(make_a, make_b):
    return lambda n1, n2: (make_a(n2), make_b(n2))


def _ratio_points(coupling_factor: float):
    # gamma_g = r gamma_d on every site; coupling in units of gamma_g + gamma_d
    def points(n):
        out = []
        for r in np.geomspace(0.05, 5.0, n):
            gd = 1.0 / (1.0 + r)
            gg = r / (1.0 + r)
            cfg = _net(coupling=coupling_factor, hub_gain=gg, hub_damp=gd, leaf_gain=gg, leaf_damp=gd)
            out.append((cfg, float(r), None))
        return out

    return points


def _fig4(figure_id: str, factor: float) -> Preset:
    return Preset(
        figure_id,
        f"Hub-leaf and leaf-leaf measures vs dissipation ratio at V = {factor} (gamma_g + gamma_d)",
        "gamma_g + gamma_d (gain_ratio mode); gamma_d (hub_leaf_gain mode)",
        (
            Job(
                "gain_ratio",
                "sweep",
                _net(coupling=factor),
                points=_ratio_points(factor),
                note="axis1 = gamma_g/gamma_d on all sites, gamma_g + gamma_d = 1",
            ),
            Job(
                "hub_leaf_gain",
                "sweep",
                _net(coupling=2 * factor),
                axes=_axes_2d(_lin("hub_gain", 0.1, 2.0), _lin("leaf_gain", 0.1, 2.0)),
                note="gamma_d = 1 on all sites; V = factor * 2 gamma_d",
            ),
        ),
        interpretive=True,
    )


def _fig6() -> Preset:
    jobs = []
    for delta in (0.0, 4.0):
        for v in (0.05, 0.2):
            jobs.append(
                Job(
                    f"hub_leaf_gain_delta{delta:g}_V{v:g}",
                    "sweep",
                    _net(delta=delta, coupling=v),
                    axes=_axes_2d(_lin("hub_gain", 0.05, 1.5), _lin("leaf_gain", 0.05, 1.5)),
                )
            )
    for delta in (0.0, 4.0):
        jobs.append(
            Job(
                f"gain_ratio_coupling_delta{delta:g}",
                "sweep",
                _net(delta=delta),
                axes=_axes_2d(_lin("gain_ratio", 0.05, 1.5), _lin("coupling", 0.02, 0.3)),
            )
        )
    return Preset(
        "fig6",
        "Measures vs hub and leaf gain rates with gamma_0^d = gamma_N^d = gamma",
        "gamma (common damping rate)",
        tuple(jobs),
        interpretive=True,
    )


def _s2_pair_jobs(network: NetworkConfig) -> tuple[Job, ...]:
    return (
        Job("pair01", "s2", network, pair=(0, 1)),
        Job("pair12", "s2", network, pair=(1, 2)),
    )


PRESETS: dict[str, Preset] = {
    "fig1b": Preset(
        "fig1b",
        "Two oscillators, 1:1 locking: hub (gain 1, damp 0.1), leaf (gain 0.1, damp 1), V = 0.05",
        "gamma_1^d",
        (Job("pair01", "s2", _net(1, 0.0, 0.05, 1.0, 0.1, 0.1, 1.0)),),
    ),
    "fig1c": Preset(
        "fig1c",
        "Two oscillators, 2:1 blockade: gains 0.1, damps 1, V = 0.05",
        "gamma_1^d",
        (Job("pair01", "s2", _net(1, 0.0, 0.05, 0.1, 1.0, 0.1, 1.0)),),
    ),
    "fig2b": Preset(
        "fig2b",
        "N = 4 identical, gamma_g = gamma_d: measures vs coupling",
        "gamma_d",
        (Job("coupling", "sweep", _net(**SYMMETRIC), axes=_axes_1d(_lin("coupling", 0.01, 0.3))),),
    ),
    "fig2c": Preset(
        "fig2c",
        "N = 4 identical, gamma_g = gamma_d, V = 0.2: hub-leaf and leaf-leaf distributions",
        "gamma_d",
        _s2_pair_jobs(_net(coupling=0.2, **SYMMETRIC)),
    ),
    "fig3a": Preset(
        "fig3a",
        "N = 4 identical, gamma_g = 0.1 gamma_d: measures vs coupling",
        "gamma_d",
        (Job("coupling", "sweep", _net(**WEAK_GAIN), axes=_axes_1d(_lin("coupling", 0.01, 0.4))),),
    ),
    "fig3b": Preset(
        "fig3b",
        "gamma_g = 0.1 gamma_d, V = 0.2: distributions (hub-leaf double peaked)",
        "gamma_d",
        _s2_pair_jobs(_net(coupling=0.2, **WEAK_GAIN)),
    ),
    "fig3c": Preset(
        "fig3c",
        "gamma_g = 0.1 gamma_d, V = 0.05: distributions (hub-leaf single peaked)",
        "gamma_d",
        _s2_pair_jobs(_net(coupling=0.05, **WEAK_GAIN)),
    ),
    "fig3d": Preset(
        "fig3d",
        "First/second harmonic split of the hub-leaf distribution at V = 0.05",
        "gamma_d",
        (Job("pair01", "s2", _net(coupling=0.05, **WEAK_GAIN)),),
    ),
    "fig3e": Preset(
        "fig3e",
        "First/second harmonic split of the hub-leaf distribution at V = 0.2",
        "gamma_d",
        (Job("pair01", "s2", _net(coupling=0.2, **WEAK_GAIN)),),
    ),
    "fig4a": _fig4("fig4a", 0.05),
    "fig4b": _fig4("fig4b", 0.2),
    "fig5a": Preset(
        "fig5a",
        "Detuned hub, symmetric dissipation: hub-leaf measure over (detuning, coupling)",
        "gamma",
        (
            Job(
                "detuning_coupling",
                "sweep",
                _net(**SYMMETRIC),
                axes=_axes_2d(_lin("detuning", 0.0, 5.0), _lin("coupling", 0.02, 0.3)),
            ),
        ),
    ),
    "fig5c": Preset(
        "fig5c",
        "Detuned hub, gamma_g = 0.1 gamma: hub-leaf measure over (detuning, coupling)",
        "gamma",
        (
            Job(
                "detuning_coupling",
                "sweep",
                _net(**WEAK_GAIN),
                axes=_axes_2d(_lin("detuning", 0.0, 5.0), _lin("coupling", 0.02, 0.3)),
            ),
        ),
    ),
    "fig5e": Preset(
        "fig5e",
        "gamma_g = 0.1 gamma, detuning 4 gamma: measures vs coupling",
        "gamma",
        (
            Job(
                "coupling",
                "sweep",
                _net(delta=4.0, **WEAK_GAIN),
                axes=_axes_1d(_geom("coupling", 0.002, 0.5)),
            ),
        ),
    ),
    "fig6": _fig6(),
}

# the (b)/(d) panels plot the leaf-leaf column of the same table
PRESETS["fig5b"] = Preset(
    "fig5b",
    "Detuned hub, symmetric dissipation: leaf-leaf measure over (detuning, coupling)",
    "gamma",
    PRESETS["fig5a"].jobs,
)
PRESETS["fig5d"] = Preset(
    "fig5d",
    "Detuned hub, gamma_g = 0.1 gamma: leaf-leaf measure over (detuning, coupling)",
    "gamma",
    PRESETS["fig5c"].jobs,
)

FIGURE_IDS = (
    "fig1b", "fig1c", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig3d", "fig3e",
    "fig4a", "fig4b", "fig5a", "fig5b", "fig5c", "fig5d", "fig5e", "fig6",
)


def get_preset(figure_id: str) -> Preset:
    try:
        return PRESETS[figure_id]
    except KeyError:
        raise KeyError(
            f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}"
        ) from None
