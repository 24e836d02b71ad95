"""Open quantum random walks: exact evolution, trajectories, dilations and statistics."""

from .analysis import MomentSummary, gaussian_discrepancy, konno_density, moments, total_variation
from .constructors import PRESET_NAMES, from_classical, from_operator_matrix, preset, stationary_z
from .errors import (
    CannotDilateError,
    CanonicalFormError,
    CorruptedStateError,
    DeadEndError,
    DefinitionError,
    DegenerateDistributionError,
    DimensionError,
    OQRWError,
    OutsideSupportError,
    UnitaryConditionError,
    WindowOverflowError,
)
from .realization import (
    DilationUnitary,
    PhysicalRealization,
    build_global_unitary,
    check_unitary_walk_condition,
    cyclic_truncation,
    dilate,
    physical_step,
    unitary_walk_step,
)
from .trajectory import RngStream, TrajectoryState, sample_trajectories, trajectory_step
from .walk import (
    BlockState,
    FiniteGraph,
    LatticeZ,
    TransitionOperators,
    WalkDistribution,
    distribution,
    evolve,
    step,
    validate_transitions,
)

__version__ = "0.1.0"

__all__ = [
    "BlockState",
    "build_global_unitary",
    "CannotDilateError",
    "CanonicalFormError",
    "check_unitary_walk_condition",
    "CorruptedStateError",
    "cyclic_truncation",
    "DeadEndError",
    "DefinitionError",
    "DegenerateDistributionError",
    "dilate",
    "DilationUnitary",
    "DimensionError",
    "distribution",
    "evolve",
    "FiniteGraph",
    "from_classical",
    "from_operator_matrix",
    "gaussian_discrepancy",
    "konno_density",
    "LatticeZ",
    "moments",
    "MomentSummary",
    "OQRWError",
    "OutsideSupportError",
    "physical_step",
    "PhysicalRealization",
    "preset",
    "PRESET_NAMES",
    "RngStream",
    "sample_trajectories",
    "stationary_z",
    "step",
    "total_variation",
    "trajectory_step",
    "TrajectoryState",
    "TransitionOperators",
    "unitary_walk_step",
    "UnitaryConditionError",
    "validate_transitions",
    "WalkDistribution",
    "WindowOverflowError",
]
