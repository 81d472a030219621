"""Born-rule detection probabilities and trajectory-ensemble statistics.

The quadrature side answers "what does the wavefunction alone predict for
detector clicks"; the record side aggregates what the integrated trajectory
ensemble actually did on the screen.  Every scenario report carries both, so
agreements (marginal patterns) and disagreements (pair symmetry, forbidden
same-side events, the post-selected gap) sit side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .packets import truncation_box, probability_density
from .quadrature import integrate_2d


class UndefinedStatisticError(ValueError):
    """A statistic was requested from an empty record set or histogram."""


@dataclass(frozen=True)
class ScreenRecord:
    """Arrival of one pair on the screen at the flight time."""

    pair_index: int
    y1: float
    y2: float
    accepted: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.y1) and np.isfinite(self.y2)):
            raise ValueError("screen arrivals must be finite")


@dataclass(frozen=True)
class Histogram:
    """Counts over uniform bins aligned to multiples of the bin width."""

    edges: np.ndarray
    counts: np.ndarray

    @property
    def bin_width(self):
        return float(self.edges[1] - self.edges[0]) if len(self.edges) > 1 else 0.0

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def total(self):
        return int(self.counts.sum())


def build_histogram(values, bin_width):
    """Histogram with edges at integer multiples of ``bin_width``."""
    values = np.asarray(values, dtype=float)
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if values.size == 0:
        return Histogram(np.array([0.0, bin_width]), np.zeros(1, dtype=int))
    i0 = int(np.floor(values.min() / bin_width))
    i1 = int(np.floor(values.max() / bin_width)) + 1
    edges = np.arange(i0, i1 + 1) * bin_width
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges, counts.astype(int))


def build_joint_histogram(records, bin_width):
    """2-d histogram of accepted (Y1, Y2) arrivals."""
    pts = np.array([(r.y1, r.y2) for r in records if r.accepted], dtype=float)
    if pts.size == 0:
        edges = np.array([0.0, bin_width])
        return edges, edges, np.zeros((1, 1), dtype=int)
    lo = np.floor(pts.min() / bin_width) * bin_width
    hi = (np.floor(pts.max() / bin_width) + 1) * bin_width
    edges = np.arange(lo / bin_width, hi / bin_width + 1) * bin_width
    counts, xe, ye = np.histogram2d(pts[:, 0], pts[:, 1], bins=(edges, edges))
    return xe, ye, counts.astype(int)


def joint_detection_probability(wf, q1, q2, t, abs_tol=1e-9):
    """Probability of simultaneous clicks in the windows starting at q1, q2.

    Each window has the configured detector width; the value is the density
    integrated over the window rectangle by adaptive quadrature.
    """
    width = wf.config.detector_width

    def density(y1, y2):
        return probability_density(wf, y1, y2, t)

    return integrate_2d(density, q1, q1 + width, q2, q2 + width, abs_tol=abs_tol)


def probability_same_side(wf, t, abs_tol=1e-9):
    """Probability that both particles land on the same side of the axis."""
    half = truncation_box(wf.config, t)

    def density(y1, y2):
        return probability_density(wf, y1, y2, t)

    upper = integrate_2d(density, 0.0, half, 0.0, half, abs_tol=0.5 * abs_tol)
    lower = integrate_2d(density, -half, 0.0, -half, 0.0, abs_tol=0.5 * abs_tol)
    return upper + lower


def symmetry_statistic(records, epsilon):
    """Fraction of accepted arrivals with |Y1 + Y2| below ``epsilon``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    accepted = [r for r in records if r.accepted]
    if not accepted:
        raise UndefinedStatisticError("no accepted records to assess symmetry on")
    hits = sum(1 for r in accepted if abs(r.y1 + r.y2) < epsilon)
    return hits / len(accepted)


def selective_detection_filter(records):
    """Keep pairs detected on opposite sides of the axis.

    Arrivals exactly on the axis count as neither side (strict inequality),
    so the filter is deterministic and idempotent.
    """
    kept = []
    for r in records:
        if r.y1 * r.y2 < 0.0:
            kept.append(
                r if r.accepted else ScreenRecord(r.pair_index, r.y1, r.y2, True)
            )
    return kept


def _lobe_components(counts):
    """Connected nonzero runs, bridging gaps of up to two empty bins."""
    nz = counts > 0
    components = []
    i = 0
    n = len(counts)
    while i < n:
        if not nz[i]:
            i += 1
            continue
        j = i
        k = i
        while k < n:
            if nz[k]:
                j = k
                k += 1
            elif k + 2 < n and (nz[k + 1] or nz[k + 2]):
                k += 1
            else:
                break
        components.append((i, j))
        i = j + 1
    return components


def detect_empty_interval(hist, threshold_fraction=0.1):
    """Length of the quiet stretch between the two dominant intensity lobes.

    Lobes are the two heaviest connected clusters of occupied bins (clusters
    merge across gaps of up to two empty bins, so overlapping double humps
    never count as separated lobes).  The returned length is the longest
    contiguous run of bins between the lobe peaks whose counts stay below
    ``threshold_fraction`` times the median lobe count (the median of the two
    lobes' total arrival counts).  With well-separated lobes the run spans
    essentially peak to peak, which is what the idealized two-cluster
    geometry predicts, and is insensitive to how far individual stragglers
    wander into the gap.  Returns 0.0 when there are not two distinct lobes
    or no qualifying run.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ValueError("threshold_fraction must lie strictly between 0 and 1")
    counts = np.asarray(hist.counts)
    if counts.size == 0:
        raise UndefinedStatisticError("empty histogram")
    components = _lobe_components(counts)
    if len(components) < 2:
        return 0.0
    components.sort(key=lambda span: -counts[span[0] : span[1] + 1].sum())
    left, right = sorted(components[:2])
    totals = [
        counts[left[0] : left[1] + 1].sum(),
        counts[right[0] : right[1] + 1].sum(),
    ]
    threshold = threshold_fraction * float(np.median(totals))
    peak_left = left[0] + int(np.argmax(counts[left[0] : left[1] + 1]))
    peak_right = right[0] + int(np.argmax(counts[right[0] : right[1] + 1]))
    between = counts[peak_left + 1 : peak_right]
    if between.size == 0:
        return 0.0
    below = between < threshold
    best = 0
    run = 0
    for flag in below:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best * hist.bin_width


@dataclass(frozen=True)
class FringePeak:
    """A detected intensity maximum labeled with its nearest fringe index."""

    position: float
    side: int  # +1 above the axis, -1 below, 0 for the central maximum
    index: int
    count: int


def peak_detection(hist, spacing):
    """Locate significant maxima and label them with fringe indices.

    A maximum is significant when its prominence exceeds three Poisson
    standard deviations of the surrounding base level.  ``spacing`` is the
    predicted distance between consecutive maxima on one side; each peak gets
    the nearest integer index (0 marks the central maximum).
    """
    counts = np.asarray(hist.counts, dtype=float)
    if counts.size == 0 or counts.max() <= 0:
        return []
    idx, props = find_peaks(counts, prominence=0.0)
    # A candidate must clear three Poisson standard deviations of its base
    # level, of its own height, and of the dominant pattern scale; otherwise
    # isolated tail counts register as maxima and break the +/- bookkeeping.
    floor = 3.0 * np.sqrt(counts.max())
    peaks = []
    centers = hist.centers
    for i, peak_bin in enumerate(idx):
        prominence = props["prominences"][i]
        height = counts[peak_bin]
        base = height - prominence
        if prominence <= 3.0 * np.sqrt(max(base, 1.0)):
            continue
        if prominence <= 3.0 * np.sqrt(max(height, 1.0)) or height < floor:
            continue
        position = float(centers[peak_bin])
        n = int(round(abs(position) / spacing))
        side = 0 if n == 0 else (1 if position > 0 else -1)
        peaks.append(FringePeak(position, side, n, int(height)))
    return peaks


def fringe_pairing_satisfied(peaks):
    """Whether the detected secondary maxima come in matched +/- index pairs."""
    upper = sorted(p.index for p in peaks if p.side > 0 and p.index > 0)
    lower = sorted(p.index for p in peaks if p.side < 0 and p.index > 0)
    return upper == lower


def marginal_bin_masses(wf, edges, t, particle=1, abs_tol=1e-9):
    """Single-particle Born masses of each bin at time t, by quadrature."""
    half = truncation_box(wf.config, t)
    per_bin_tol = abs_tol / max(len(edges) - 1, 1)

    def density(ya, yb):
        if particle == 1:
            return probability_density(wf, ya, yb, t)
        return probability_density(wf, yb, ya, t)

    masses = np.empty(len(edges) - 1)
    for i in range(len(edges) - 1):
        masses[i] = integrate_2d(
            density, edges[i], edges[i + 1], -half, half,
            abs_tol=max(per_bin_tol, 1e-12), initial=2,
        )
    return masses


def l1_distance(hist, masses):
    """Sum of |empirical - predicted| bin probabilities."""
    total = hist.total
    if total == 0:
        raise UndefinedStatisticError("empty histogram")
    empirical = hist.counts / total
    predicted = np.asarray(masses, dtype=float)
    return float(np.abs(empirical - predicted).sum())


@dataclass
class DetectionStats:
    """Aggregated per-run screen statistics for both readings of the theory."""

    histogram: Histogram
    joint_histogram: tuple
    p_same_side: float
    symmetric_fraction: float
    epsilon: float
    peaks: list
    pairing_satisfied: bool | None
    empty_interval_measured: float
    excluded_count: int
    n_records: int
    n_accepted: int

    def __post_init__(self):
        if not 0.0 <= self.p_same_side <= 1.0 + 1e-9:
            raise ValueError("p_same_side must be a probability")
        if not 0.0 <= self.symmetric_fraction <= 1.0:
            raise ValueError("symmetric_fraction must be a probability")


def build_detection_stats(
    wf,
    records,
    t,
    excluded_count,
    epsilon,
    bin_width,
    threshold_fraction=0.1,
    fringe_spacing=None,
    abs_tol=1e-9,
):
    """Assemble a :class:`DetectionStats` bundle from screen records."""
    accepted = [r for r in records if r.accepted]
    pooled = [r.y1 for r in accepted] + [r.y2 for r in accepted]
    hist = build_histogram(pooled, bin_width)
    joint = build_joint_histogram(accepted, bin_width)
    peaks = []
    pairing = None
    if fringe_spacing is not None and accepted:
        peaks = peak_detection(hist, fringe_spacing)
        pairing = fringe_pairing_satisfied(peaks)
    empty_len = detect_empty_interval(hist, threshold_fraction) if accepted else 0.0
    return DetectionStats(
        histogram=hist,
        joint_histogram=joint,
        p_same_side=probability_same_side(wf, t, abs_tol=abs_tol),
        symmetric_fraction=symmetry_statistic(records, epsilon) if accepted else 0.0,
        epsilon=epsilon,
        peaks=peaks,
        pairing_satisfied=pairing,
        empty_interval_measured=empty_len,
        excluded_count=excluded_count,
        n_records=len(records),
        n_accepted=len(accepted),
    )
