"""Named experiment presets, regime validation, and end-to-end runs.

Three experiments are encoded: an entangled pair behind one double slit, an
unentangled (product) pair behind the same double slit, and an entangled pair
behind two facing double slits.  A scenario bundles the physical parameters,
the initial-condition law, the sampling size and seed, and the detection
settings; running it produces a structured report holding the Born-rule
quantities and the trajectory-ensemble quantities side by side.

The qualitative regime conditions attached to each experiment are compiled to
explicit ratios: "much less" means ratio < 0.1, "of order unity" means ratio
in [0.5, 2], "much greater" means ratio > 10.  Violations are reported, never
fatal: disputed regimes must stay runnable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfc

from . import __version__
from .detection import (
    build_detection_stats,
    joint_detection_probability,
    selective_detection_filter,
)
from .ensemble import InitialConstraint, propagate_ensemble, sample_initial_positions
from .guidance import empty_interval_length, fringe_spacing
from .packets import PhysicalConfig, Variant, build_wavefunction

MUCH_LESS = 0.1
ORDER_UNITY = (0.5, 2.0)
MUCH_GREATER = 10.0

THRESHOLDS = {
    "much_less": MUCH_LESS,
    "order_unity": list(ORDER_UNITY),
    "much_greater": MUCH_GREATER,
}

SCENARIO_VARIANT = {
    "entangled_two_slit": Variant.ENTANGLED_TWO_SLIT,
    "unentangled_two_slit": Variant.UNENTANGLED_PRODUCT,
    "entangled_four_slit": Variant.ENTANGLED_FOUR_SLIT,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """A fully resolved, runnable experiment description."""

    name: str
    exchange_sign: int = 1
    config: PhysicalConfig = field(default_factory=PhysicalConfig)
    constraint: InitialConstraint = field(default_factory=InitialConstraint.unconstrained)
    n_pairs: int = 10_000
    seed: int = 0
    selective_detection: bool = False
    target_tau: float = 1.0
    condition_on_selection: bool = False
    epsilon: float = 0.1
    bin_width: float = 0.25
    threshold_fraction: float = 0.1
    integrator_tol: float = 1e-8
    trajectory_export: int = 100

    def __post_init__(self):
        if self.name not in SCENARIO_VARIANT:
            raise ValueError(f"unknown scenario name {self.name!r}")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be at least 1")
        if self.target_tau < 0:
            raise ValueError("target_tau must be non-negative")
        if self.exchange_sign not in (1, -1):
            raise ValueError("exchange_sign must be +1 or -1")
        if self.epsilon <= 0 or self.bin_width <= 0:
            raise ValueError("epsilon and bin_width must be positive")
        if not 0 < self.threshold_fraction < 1:
            raise ValueError("threshold_fraction must lie strictly between 0 and 1")
        if self.trajectory_export < 0:
            raise ValueError("trajectory_export must be non-negative")
        expected_t = self.config.time_at_tau(self.target_tau)
        if abs(self.config.flight_time - expected_t) > 1e-9 * max(expected_t, 1.0):
            raise ValueError(
                "config.flight_time must equal the time reaching target_tau; "
                "build specs through make_spec or the presets"
            )

    @property
    def variant(self):
        return SCENARIO_VARIANT[self.name]

    @property
    def flight_time(self):
        return self.config.flight_time


def make_spec(name, *, target_tau=1.0, config=None, **kwargs):
    """Build a :class:`ScenarioSpec` with the flight time set from target_tau."""
    config = config or PhysicalConfig()
    config = replace(config, flight_time=config.time_at_tau(target_tau))
    return ScenarioSpec(name=name, config=config, target_tau=target_tau, **kwargs)


def _preset_entangled_two_slit():
    return make_spec(
        "entangled_two_slit",
        target_tau=1.0,
        config=PhysicalConfig(slit_offset=1.0),
        constraint=InitialConstraint.fixed_com(0.0),
        n_pairs=10_000,
    )


def _preset_unentangled_two_slit():
    return make_spec(
        "unentangled_two_slit",
        target_tau=1.0,
        config=PhysicalConfig(slit_offset=0.5),
        constraint=InitialConstraint.unconstrained(),
        n_pairs=10_000,
    )


def _preset_entangled_four_slit():
    return make_spec(
        "entangled_four_slit",
        target_tau=1.0,
        config=PhysicalConfig(slit_offset=1.0),
        constraint=InitialConstraint.fixed_com(0.0),
        n_pairs=10_000,
    )


def _preset_unentangled_fringe():
    # Slits far enough apart that several secondary maxima sit inside the
    # envelope and the far-field fringe law is accurate to a few percent.
    return make_spec(
        "unentangled_two_slit",
        target_tau=8.0,
        config=PhysicalConfig(slit_offset=4.0 * np.pi),
        constraint=InitialConstraint.unconstrained(),
        n_pairs=100_000,
    )


def _preset_unentangled_gap():
    # Long spreading time with the pair center displaced well off the axis;
    # opposite-side selection then leaves a long quiet interval on the screen.
    return make_spec(
        "unentangled_two_slit",
        target_tau=10.0,
        config=PhysicalConfig(slit_offset=0.05),
        constraint=InitialConstraint.spread_com(10.0, 1.0),
        n_pairs=4_000,
        selective_detection=True,
        condition_on_selection=True,
        bin_width=0.25,
    )


PRESETS = {
    "entangled_two_slit": _preset_entangled_two_slit,
    "unentangled_two_slit": _preset_unentangled_two_slit,
    "entangled_four_slit": _preset_entangled_four_slit,
    "unentangled_two_slit_fringe": _preset_unentangled_fringe,
    "unentangled_two_slit_gap": _preset_unentangled_gap,
}


def preset(name):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return factory()


@dataclass(frozen=True)
class RegimeCheck:
    id: str
    satisfied: bool
    margin: float

    def to_dict(self):
        return {"id": self.id, "satisfied": bool(self.satisfied), "margin": float(self.margin)}


def _constraint_scales(spec):
    """Mean and spread of the initial center of mass implied by the constraint.

    Unconstrained pairs inherit the equilibrium spread, which is of order the
    packet width; that is the value the regime ratios use for them.
    """
    c = spec.constraint
    if c.mode == "fixed_com":
        return c.y0, 0.0
    if c.mode == "spread_com":
        return c.mean_y0, c.delta_y0
    return 0.0, spec.config.sigma0


def _much_less(ratio):
    return ratio < MUCH_LESS


def _order_unity(ratio):
    return ORDER_UNITY[0] <= ratio <= ORDER_UNITY[1]


def _much_greater(ratio):
    return ratio > MUCH_GREATER


def validate_regime(spec):
    """Compile the named scenario's qualitative conditions into ratio checks.

    Margins are the ratios themselves; a violated condition is reported with
    ``satisfied=False`` and never prevents the run.
    """
    cfg = spec.config
    tau = spec.target_tau
    mean_y0, delta_y0 = _constraint_scales(spec)
    t = cfg.flight_time
    checks = []

    def add(check_id, satisfied, margin):
        checks.append(RegimeCheck(check_id, bool(satisfied), float(margin)))

    if spec.name == "entangled_two_slit":
        ratio = abs(mean_y0) / cfg.sigma0
        add("com_offset_below_width", mean_y0 >= 0 and _much_less(ratio), ratio)
        add("spreading_time_order_unity", _order_unity(tau), tau)
        ratio = delta_y0 / cfg.sigma0
        add("com_spread_below_width", _much_less(ratio), ratio)
    elif spec.name == "unentangled_two_slit":
        ratio = delta_y0 / cfg.sigma0
        add("com_spread_matches_width", _order_unity(ratio), ratio)
        if cfg.slit_offset > 0 and t > 0:
            spacing = fringe_spacing(t, cfg)
            ratio = delta_y0 / spacing
            add("com_spread_below_fringe_spacing", _much_less(ratio), ratio)
            arrival_spread = delta_y0 * np.sqrt(1.0 + tau**2)
            margin = spacing / arrival_spread if arrival_spread > 0 else np.inf
            add("fringe_spacing_above_arrival_spread", _much_greater(margin), margin)
        else:
            add("com_spread_below_fringe_spacing", False, np.nan)
            add("fringe_spacing_above_arrival_spread", False, np.nan)
        ratio = cfg.slit_offset / (2.0 * np.pi * cfg.sigma0)
        add("slit_offset_below_fringe_scale", _much_less(ratio), ratio)
        add("long_spreading_time", _much_greater(tau), tau)
        ratio = cfg.slit_offset / cfg.sigma0
        add("slit_offset_below_width", _much_less(ratio), ratio)
        margin = cfg.sigma0 / abs(mean_y0) if mean_y0 != 0 else np.inf
        add("width_below_mean_com", mean_y0 != 0 and _much_less(margin), margin)
    else:  # entangled_four_slit
        add("spreading_time_order_unity", _order_unity(tau), tau)
        ratio = cfg.slit_offset / cfg.sigma0
        add("slit_offset_matches_width", _order_unity(ratio), ratio)
        ratio = delta_y0 / cfg.sigma0
        add("com_spread_below_width", _much_less(ratio), ratio)
    return checks


def _selection_probability_estimate(wf, constraint):
    """Rough unconditioned probability that a pair starts astride the axis.

    Uses a Gaussian fit to the conditional relative coordinate at the mean
    center-of-mass value; quantifies how rare the post-selected sub-ensemble
    is under plain equilibrium sampling.
    """
    from .ensemble import _conditional_log_density  # shared definition

    mean = constraint.y0 if constraint.mode == "fixed_com" else constraint.mean_y0
    sigma0 = wf.config.sigma0
    grid = np.linspace(-6.0 * sigma0, 6.0 * sigma0, 481)
    logf = _conditional_log_density(wf, mean, grid)
    w = np.exp(logf - logf.max())
    w /= w.sum()
    mu = float((grid * w).sum())
    var = float(((grid - mu) ** 2 * w).sum())
    if var <= 0:
        return 0.0
    z = (abs(mean) + mu) / np.sqrt(2.0 * var)
    z2 = (abs(mean) - mu) / np.sqrt(2.0 * var)
    return float(0.5 * (erfc(z) + erfc(z2)))


@dataclass
class ScenarioReport:
    """Everything a run asserts, for both readings of the dynamics."""

    version: str
    spec: dict
    thresholds: dict
    regime_checks: list
    sqm: dict
    bqm: dict
    closed_form_residual: float | None

    def to_dict(self):
        return {
            "version": self.version,
            "spec": self.spec,
            "thresholds": self.thresholds,
            "regime_checks": [c.to_dict() for c in self.regime_checks],
            "sqm": self.sqm,
            "bqm": self.bqm,
            "closed_form_residual": self.closed_form_residual,
        }


def _spec_echo(spec):
    c = spec.constraint
    cfg = spec.config
    return {
        "name": spec.name,
        "exchange_sign": spec.exchange_sign,
        "sigma0": cfg.sigma0,
        "slit_offset": cfg.slit_offset,
        "ky": cfg.ky,
        "mass": cfg.mass,
        "hbar": cfg.hbar,
        "detector_width": cfg.detector_width,
        "target_tau": spec.target_tau,
        "flight_time": cfg.flight_time,
        "constraint": {
            "mode": c.mode,
            "y0": c.y0,
            "mean_y0": c.mean_y0,
            "delta_y0": c.delta_y0,
            "nonnegative_com": c.nonnegative_com,
        },
        "n_pairs": spec.n_pairs,
        "seed": spec.seed,
        "selective_detection": spec.selective_detection,
        "condition_on_selection": spec.condition_on_selection,
        "epsilon": spec.epsilon,
        "bin_width": spec.bin_width,
        "threshold_fraction": spec.threshold_fraction,
        "integrator_tol": spec.integrator_tol,
        "trajectory_export": spec.trajectory_export,
    }


@dataclass
class ScenarioRun:
    """Report plus the bulky artifacts the CLI writes to disk."""

    report: ScenarioReport
    stats: object
    ensemble: object
    records: list
    samples: np.ndarray


def run_scenario(spec, quadrature_tol=1e-9):
    """Execute a scenario end to end; deterministic for a given seed."""
    wf = build_wavefunction(spec.variant, spec.exchange_sign, spec.config)
    samples = sample_initial_positions(
        wf,
        spec.constraint,
        spec.n_pairs,
        spec.seed,
        opposite_sides=spec.condition_on_selection,
    )
    T = spec.flight_time
    export = tuple(range(min(spec.trajectory_export, spec.n_pairs)))
    ens = propagate_ensemble(
        wf, samples, T, tol=spec.integrator_tol, record_indices=export
    )
    records = ens.records
    n_before_selection = len(records)
    if spec.selective_detection:
        records = selective_detection_filter(records)

    spacing = None
    if spec.config.slit_offset > 0 and T > 0:
        spacing = fringe_spacing(T, spec.config)
    stats = build_detection_stats(
        wf,
        records,
        T,
        excluded_count=ens.excluded_count,
        epsilon=spec.epsilon,
        bin_width=spec.bin_width,
        threshold_fraction=spec.threshold_fraction,
        fringe_spacing=spacing,
        abs_tol=quadrature_tol,
    )

    y_center = spec.config.slit_offset
    joint_probs = {
        "both_upper": joint_detection_probability(
            wf, y_center, y_center, T, abs_tol=quadrature_tol
        ),
        "opposite_sides": joint_detection_probability(
            wf, y_center, -y_center - spec.config.detector_width, T, abs_tol=quadrature_tol
        ),
    }
    fringe_predictions = []
    if spacing is not None:
        fringe_predictions = [
            {"index": n, "upper": n * spacing, "lower": -n * spacing} for n in (1, 2, 3)
        ]

    entangled = spec.variant in (Variant.ENTANGLED_TWO_SLIT, Variant.ENTANGLED_FOUR_SLIT)
    residual = float(ens.com_residual_max) if entangled else None

    mean_y0, delta_y0 = _constraint_scales(spec)
    predicted_gap = None
    if spec.selective_detection and spec.constraint.mode in ("fixed_com", "spread_com"):
        predicted_gap = float(empty_interval_length(mean_y0, spec.target_tau))

    selection_estimate = None
    if spec.condition_on_selection:
        selection_estimate = _selection_probability_estimate(wf, spec.constraint)

    hist = stats.histogram
    sqm = {
        "p_same_side": stats.p_same_side,
        "joint_probabilities": joint_probs,
        "fringe_positions": fringe_predictions,
        "fringe_spacing": spacing,
    }
    bqm = {
        "symmetric_fraction": stats.symmetric_fraction,
        "epsilon": stats.epsilon,
        "peaks": [
            {"position": p.position, "side": p.side, "index": p.index, "count": p.count}
            for p in stats.peaks
        ],
        "pairing_satisfied": stats.pairing_satisfied,
        "empty_interval_measured": stats.empty_interval_measured,
        "empty_interval_predicted": predicted_gap,
        "excluded_count": stats.excluded_count,
        "node_count": ens.node_count,
        "nonconverged_count": ens.nonconverged_count,
        "n_input": ens.n_input,
        "n_records": n_before_selection,
        "n_selected": stats.n_accepted,
        "selection_probability_estimate": selection_estimate,
        "histogram": {
            "edges": [float(e) for e in hist.edges],
            "counts": [int(c) for c in hist.counts],
        },
    }
    report = ScenarioReport(
        version=__version__,
        spec=_spec_echo(spec),
        thresholds=dict(THRESHOLDS),
        regime_checks=validate_regime(spec),
        sqm=sqm,
        bqm=bqm,
        closed_form_residual=residual,
    )
    return ScenarioRun(report=report, stats=stats, ensemble=ens, records=records, samples=samples)
