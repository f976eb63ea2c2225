"""Exact quantum-trajectory simulator for measurement-only dynamics on a
half-filled main/ancilla fermion chain with detector qubits.

One-body block measurements drive volume-law entanglement growth;
three-body (density-gated) measurements freeze trajectories into
kinetically constrained area-law stationary states.  The package keeps
full many-body state vectors (no Gaussian shortcut exists for these
dynamics) and ships the trajectory-statistics toolkit used to analyze
them: KDE entropy distributions, TVD stationarity, IPR, Born weights.
"""

from .basis import BlockAddress, FockBasis, ModeLayout, block_address, enumerate_basis
from .blocks import (
    BlockChannel,
    ModelKind,
    apply_block,
    build_channel,
    measurement_operator,
    projective_kraus,
)
from .config import (
    ARTIFACT_VERSION,
    InitialStateKind,
    InitialStateSpec,
    RunConfig,
    SamplingMode,
    parse_alpha_tilde,
)
from .engine import (
    TrajectoryRecord,
    click_fraction,
    is_stationary,
    measure_block,
    prepare_initial,
    run_ensemble,
    run_trajectory,
    sweep,
)
from .entanglement import (
    Cut,
    CutName,
    ReducedDensityMatrix,
    cut_B,
    cut_Bprime,
    cut_C,
    custom_cut,
    entanglement_entropy,
    mutual_information,
    reduced_density_matrix,
    von_neumann_entropy,
)
from .errors import (
    ConfigError,
    NumericalCheckError,
    NumericalUnderflowError,
    PostSelectionImpossibleError,
)
from .exact import enumerate_outcome_sequences
from .state import StateVector
from .stats import (
    DiscreteDistribution,
    KdeCurve,
    SampleSet,
    cluster_atoms,
    discrete_tvd,
    ensemble_average,
    ipr,
    ipr_vs_ensemble_size,
    kde,
    relative_born_weights,
    samples_at_step,
    time_window_distribution,
    tvd,
)

__version__ = ARTIFACT_VERSION

__all__ = [
    "ARTIFACT_VERSION",
    "BlockAddress",
    "BlockChannel",
    "ConfigError",
    "Cut",
    "CutName",
    "DiscreteDistribution",
    "FockBasis",
    "InitialStateKind",
    "InitialStateSpec",
    "KdeCurve",
    "ModeLayout",
    "ModelKind",
    "NumericalCheckError",
    "NumericalUnderflowError",
    "PostSelectionImpossibleError",
    "ReducedDensityMatrix",
    "RunConfig",
    "SampleSet",
    "SamplingMode",
    "StateVector",
    "TrajectoryRecord",
    "apply_block",
    "block_address",
    "build_channel",
    "click_fraction",
    "cluster_atoms",
    "custom_cut",
    "cut_B",
    "cut_Bprime",
    "cut_C",
    "discrete_tvd",
    "ensemble_average",
    "entanglement_entropy",
    "enumerate_basis",
    "enumerate_outcome_sequences",
    "ipr",
    "ipr_vs_ensemble_size",
    "is_stationary",
    "kde",
    "measure_block",
    "measurement_operator",
    "mutual_information",
    "parse_alpha_tilde",
    "prepare_initial",
    "projective_kraus",
    "reduced_density_matrix",
    "relative_born_weights",
    "run_ensemble",
    "run_trajectory",
    "samples_at_step",
    "sweep",
    "time_window_distribution",
    "tvd",
    "von_neumann_entropy",
]
