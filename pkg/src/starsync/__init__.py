"""Mediated quantum synchronization in star networks of spin-1 oscillators."""

__version__ = "0.1.0"

from .lindblad import (
    DegenerateSteadyStateError,
    IndeterminateProbe,
    Liouvillian,
    NetworkConfig,
    SolverError,
    StepSizeError,
    build_hamiltonian,
    build_liouvillian,
    evolve_to_steady,
    residual_norm,
    steady_state,
    time_evolve,
    uniqueness_probe,
)
from .measures import (
    PairCorrelators,
    PhaseDistribution,
    SyncMeasure,
    pair_correlators,
    peak_contrast,
    reduce_pair,
    s2_closed_form,
    s2_husimi_oracle,
    sync_measure,
)
from .spin import embed, spin1_operators
from .sweep import SweepAxis, SweepTable, sweep_1d, sweep_2d
