"""twinslit: pilot-wave trajectories vs Born-rule statistics for
two-particle double-slit experiments.

The library evaluates freely evolving Gaussian slit packets and three
composite two-particle wavefunctions, integrates deterministic guidance
trajectories for equilibrium or center-of-mass-constrained initial ensembles,
and computes the Born-rule detection probabilities from the same
wavefunctions, so that every point where the two readings of the dynamics
agree or diverge is a number rather than an argument.
"""

__version__ = "0.1.0"

from .packets import (
    AmplitudeUnderflowError,
    NormalizationError,
    PhysicalConfig,
    Variant,
    WaveFunction,
    build_wavefunction,
    evaluate_packet,
    evaluate_wavefunction,
    packet_gradient_y,
    peak_density_bound,
    probability_density,
    sigma_t,
    truncation_box,
    verify_expansion_identity,
    wavefunction_gradient,
    wavefunction_norm,
)
from .quadrature import QuadratureError, integrate_1d, integrate_2d
from .guidance import (
    NodeProximityError,
    TrajectoryPair,
    UndefinedFringeError,
    com_trajectory_closed_form,
    com_velocity_unentangled,
    empty_interval_length,
    fringe_maxima,
    fringe_spacing,
    integrate_batch,
    integrate_pair,
    velocity_field,
)
from .ensemble import (
    EnsembleResult,
    InitialConstraint,
    SamplerError,
    propagate_ensemble,
    sample_initial_positions,
)
from .detection import (
    DetectionStats,
    FringePeak,
    Histogram,
    ScreenRecord,
    UndefinedStatisticError,
    build_detection_stats,
    build_histogram,
    detect_empty_interval,
    fringe_pairing_satisfied,
    joint_detection_probability,
    l1_distance,
    marginal_bin_masses,
    peak_detection,
    probability_same_side,
    selective_detection_filter,
    symmetry_statistic,
)
from .scenarios import (
    PRESETS,
    ScenarioReport,
    ScenarioSpec,
    make_spec,
    preset,
    run_scenario,
    validate_regime,
)

__all__ = [name for name in dir() if not name.startswith("_")]
