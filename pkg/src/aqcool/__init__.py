"""Simulation toolkit for ancilla-mediated algorithmic quantum cooling."""

__version__ = "0.1.0"

from ._validation import ValidationError
from .kernel import (
    CoolingModule,
    CoolingParams,
    JumpPair,
    ModuleOutcome,
    apply_module,
    bloch_vector,
    boltzmann_deviation,
    jump_operators,
    module_circuit_unitary,
    ordering_valid,
    phase_range_valid,
    scaling_factor,
)
from .scaling import (
    MCConfig,
    MCSummary,
    TwoLevelModel,
    concentration_intervals,
    fit_c1,
    mixture_pmf,
    predicted_costs,
    run_bounded_mc,
    run_mismatched_bounds_mc,
    run_optimal_refresh_mc,
    separation_satisfied,
    separation_threshold,
)
from .spectral import (
    HermitianOperator,
    QuantumState,
    SpectralDecomposition,
    UnitaryOperator,
    dominant_eigenvector_projection,
    eigendecompose,
    evolution_operator,
    expectation,
    fidelity_with_pure,
)
from .walk import (
    ExactEnsemble,
    Strategy,
    Trajectory,
    Walker,
    apply_boundary,
    compare_strategies,
    enumerate_outcome_tree,
    run_trajectory,
    sample_trajectories,
    step_walker,
)

__all__ = [name for name in dir() if not name.startswith("_")]
