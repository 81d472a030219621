"""Pilot-wave velocity field, trajectory integration, and closed forms.

The velocity of each particle is (hbar/m) * Im(grad_i psi / psi), evaluated
with the analytic packet gradients.  Trajectories are advanced with a
classical four-stage Runge-Kutta scheme under step-doubling error control:
a step is accepted only when the displacement per step stays below
0.05*sigma0 and the endpoint shift under step halving is below tol*sigma0.
The half-step solution is the one propagated, so the realized local error is
over an order of magnitude below the acceptance threshold.

Configurations where |psi|^2 falls below 1e-12 of the locally attainable
envelope density (near-total destructive interference) are treated as node
encounters: the trajectory is flagged and excluded from statistics but always
tallied, never silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .packets import (
    Variant,
    evaluate_packet,
    evaluate_wavefunction,
    sigma_t,
    wavefunction_value_and_gradient,
)

# Node flagging threshold relative to the analytic peak-density bound.
NODE_DENSITY_RATIO = 1e-12

# Maximum displacement per accepted step, in units of sigma0.
STEP_DISPLACEMENT_CAP = 0.05

# Consecutive halvings before a step is declared non-convergent.
MAX_HALVINGS = 20

_H_GROWTH = 1.5


class NodeProximityError(RuntimeError):
    """Velocity requested too close to a wavefunction node."""

    def __init__(self, y1, y2, t, density_ratio):
        self.position = (y1, y2)
        self.t = t
        self.density_ratio = density_ratio
        super().__init__(
            f"node proximity at (y1={y1:.6g}, y2={y2:.6g}, t={t:.6g}):"
            f" |psi|^2 is {density_ratio:.3e} of the peak bound"
        )


class UndefinedFringeError(ValueError):
    """Fringe locations are undefined for coincident slits."""


def _velocity_batch(wf, y1, y2, t):
    """Vectorized velocities plus a node mask; nodes get zero velocity.

    A point counts as node-proximate when |psi|^2 falls below
    ``NODE_DENSITY_RATIO`` of the density the packet envelopes allow right
    there, i.e. when almost-complete destructive interference is happening.
    At the density peak this coincides with a global-peak-relative test, but
    unlike that test it does not misfire on smooth deep-tail regions where
    displaced-ensemble trajectories legitimately travel.
    """
    psi, g1, g2, envelope = wavefunction_value_and_gradient(wf, y1, y2, t)
    density = np.abs(psi) ** 2
    node = density < NODE_DENSITY_RATIO * envelope**2
    node |= envelope == 0.0
    safe = np.where(node, 1.0, psi)
    scale = wf.config.hbar / wf.config.mass
    v1 = scale * np.imag(g1 / safe)
    v2 = scale * np.imag(g2 / safe)
    v1 = np.where(node, 0.0, v1)
    v2 = np.where(node, 0.0, v2)
    return v1, v2, node


def velocity_field(wf, y1, y2, t):
    """Guidance velocities (v1, v2) at a configuration-space point.

    Raises :class:`NodeProximityError` when the density there is below
    ``NODE_DENSITY_RATIO`` of the locally attainable envelope density; the
    caller decides whether to retreat or flag.
    """
    v1, v2, node = _velocity_batch(wf, y1, y2, t)
    if np.any(node):
        idx = int(np.argmax(node))
        y1a = np.asarray(y1, dtype=float).reshape(-1)
        y2a = np.asarray(y2, dtype=float).reshape(-1)
        ta = np.broadcast_to(np.asarray(t, dtype=float), y1a.shape).reshape(-1)
        psi, _, _, envelope = wavefunction_value_and_gradient(
            wf, y1a[idx], y2a[idx], ta[idx]
        )
        ratio = float(np.abs(psi) ** 2 / envelope**2) if envelope > 0 else 0.0
        raise NodeProximityError(y1a[idx], y2a[idx], ta[idx], ratio)
    if np.ndim(y1) == 0 and np.ndim(y2) == 0:
        return float(v1), float(v2)
    return v1, v2


def com_trajectory_closed_form(y0, tau):
    """Center-of-mass position y0*sqrt(1 + tau^2) of an entangled pair."""
    return y0 * np.sqrt(1.0 + np.asarray(tau, dtype=float) ** 2)


def com_velocity_unentangled(wf, y1, y2, t):
    """Center-of-mass velocity of the product wavefunction in closed form.

    Two contributions: the spreading flow proportional to the current
    center-of-mass position, plus a slit-correlation correction carrying the
    difference of same-slit products.  Agrees with the mean of
    :func:`velocity_field` to within roundoff.
    """
    if wf.variant is not Variant.UNENTANGLED_PRODUCT:
        raise ValueError("closed-form COM velocity applies to the product variant only")
    c = wf.config
    kappa = c.hbar / (2.0 * c.mass * c.sigma0**2)
    com = 0.5 * (np.asarray(y1) + np.asarray(y2))
    spreading = kappa**2 * com * t / (1.0 + (kappa * t) ** 2)

    psi = evaluate_wavefunction(wf, y1, y2, t)
    _, _, node = _velocity_batch(wf, y1, y2, t)
    if np.any(node):
        velocity_field(wf, y1, y2, t)  # raises NodeProximityError with details
    a1 = evaluate_packet(c, +1, y1, t)
    a2 = evaluate_packet(c, +1, y2, t)
    b1 = evaluate_packet(c, -1, y1, t)
    b2 = evaluate_packet(c, -1, y2, t)
    st = sigma_t(c, t)
    drift = c.slit_offset + c.u_y * t
    coeff = drift / (c.sigma0 * st) + 2j * c.ky
    correction = (
        wf.normalization
        * (c.hbar / (2.0 * c.mass))
        * np.imag(coeff * (a1 * a2 - b1 * b2) / psi)
    )
    return spreading + correction


def fringe_maxima(n, side, t, config):
    """Location of the n-th secondary intensity maximum on one side.

    Positions follow the far-field fringe law n * pi * hbar * t / (Y m);
    ``side`` is '+' (or +1) for above the axis, '-' (or -1) for below.
    """
    if n < 1 or int(n) != n:
        raise ValueError("fringe index n must be a positive integer")
    if config.slit_offset == 0:
        raise UndefinedFringeError("fringe locations are undefined for slit_offset = 0")
    if t <= 0:
        raise ValueError("fringe locations require t > 0")
    sign = {"+": 1.0, "-": -1.0, 1: 1.0, -1: -1.0}[side]
    return sign * n * np.pi * config.hbar * t / (config.slit_offset * config.mass)


def fringe_spacing(t, config):
    """Distance pi*hbar*t/(Y m) between consecutive fringe maxima."""
    if config.slit_offset == 0:
        raise UndefinedFringeError("fringe spacing is undefined for slit_offset = 0")
    return np.pi * config.hbar * t / (config.slit_offset * config.mass)


def empty_interval_length(mean_y0, tau):
    """Predicted length 2*tau*<y0> of the low-intensity screen interval."""
    return 2.0 * tau * mean_y0


@dataclass(frozen=True)
class TrajectoryPair:
    """A sampled initial configuration and its integrated path."""

    initial: tuple
    times: np.ndarray
    positions: np.ndarray  # shape (len(times), 2)
    node_proximity: bool
    step_converged: bool

    def __post_init__(self):
        if len(self.times) != len(self.positions):
            raise ValueError("times and positions must align")

    @property
    def path(self):
        """Ordered (t, y1, y2) samples."""
        return [(float(t), float(p[0]), float(p[1])) for t, p in zip(self.times, self.positions)]

    @property
    def com_path(self):
        return 0.5 * (self.positions[:, 0] + self.positions[:, 1])

    @property
    def final_positions(self):
        return float(self.positions[-1, 0]), float(self.positions[-1, 1])


@dataclass
class BatchResult:
    """Raw outcome of a vectorized ensemble integration."""

    final: np.ndarray          # (n, 2) final positions (frozen at failure point for flagged ones)
    node_flags: np.ndarray     # (n,) bool
    converged: np.ndarray      # (n,) bool
    times: np.ndarray          # (n_record + 1,)
    recorded_paths: np.ndarray | None  # (len(record_indices), n_record + 1, 2)
    record_indices: tuple
    com_residual_max: float    # against the sqrt(1 + tau^2) law; nan when not tracked

    @property
    def included(self):
        return self.converged & ~self.node_flags


def _rk4_step(wf, t, y, h):
    """One classical RK4 step for a batch of states; returns (y_new, node_mask)."""
    v1, v2, n1 = _velocity_batch(wf, y[:, 0], y[:, 1], t)
    k1 = np.stack([v1, v2], axis=1)
    mid = y + 0.5 * h[:, None] * k1
    v1, v2, n2 = _velocity_batch(wf, mid[:, 0], mid[:, 1], t + 0.5 * h)
    k2 = np.stack([v1, v2], axis=1)
    mid = y + 0.5 * h[:, None] * k2
    v1, v2, n3 = _velocity_batch(wf, mid[:, 0], mid[:, 1], t + 0.5 * h)
    k3 = np.stack([v1, v2], axis=1)
    end = y + h[:, None] * k3
    v1, v2, n4 = _velocity_batch(wf, end[:, 0], end[:, 1], t + h)
    k4 = np.stack([v1, v2], axis=1)
    y_new = y + (h / 6.0)[:, None] * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y_new, n1 | n2 | n3 | n4


def integrate_batch(
    wf,
    initials,
    T,
    tol=1e-8,
    n_record=64,
    record_indices=(),
    track_com=False,
):
    """Propagate a batch of initial pairs to time T with shared record times.

    Every trajectory adapts its own step size; the arithmetic of each one is
    independent of the rest, so results do not depend on batch composition.
    ``record_indices`` selects trajectories whose full paths are stored.
    When ``track_com`` is true, the largest deviation of (y1+y2)/2 from the
    sqrt(1 + tau^2) scaling law over all recorded times is accumulated.
    """
    y = np.array(initials, dtype=float).reshape(-1, 2).copy()
    n = len(y)
    if T < 0:
        raise ValueError("T must be non-negative")
    sigma0 = wf.config.sigma0
    times = np.linspace(0.0, T, n_record + 1)
    node = np.zeros(n, dtype=bool)
    converged = np.ones(n, dtype=bool)
    record_indices = tuple(record_indices)
    paths = None
    if record_indices:
        paths = np.empty((len(record_indices), n_record + 1, 2))
        paths[:, 0] = y[list(record_indices)]
    com0 = 0.5 * (y[:, 0] + y[:, 1])
    com_residual = 0.0 if track_com else np.nan

    if T == 0:
        if paths is not None:
            paths[:, :] = y[list(record_indices)][:, None, :]
        return BatchResult(y, node, converged, times, paths, record_indices, com_residual)

    h_max = T / n_record
    h = np.full(n, h_max)
    t_cur = np.zeros(n)
    halvings = np.zeros(n, dtype=int)
    tiny = 1e-15 * max(T, 1.0)

    for k in range(n_record):
        t_target = times[k + 1]
        while True:
            act = converged & ~node & (t_cur < t_target - tiny)
            if not act.any():
                break
            idx = np.flatnonzero(act)
            yi = y[idx]
            ti = t_cur[idx]
            v1, v2, nd0 = _velocity_batch(wf, yi[:, 0], yi[:, 1], ti)
            speed = np.maximum(np.abs(v1), np.abs(v2))
            cap = STEP_DISPLACEMENT_CAP * sigma0 / np.maximum(speed, 1e-30)
            hstep = np.minimum(np.minimum(h[idx], cap), t_target - ti)

            y_full, ndf = _rk4_step(wf, ti, yi, hstep)
            y_half, ndh1 = _rk4_step(wf, ti, yi, 0.5 * hstep)
            y_two, ndh2 = _rk4_step(wf, ti + 0.5 * hstep, y_half, 0.5 * hstep)
            hit_node = nd0 | ndf | ndh1 | ndh2
            err = np.max(np.abs(y_two - y_full), axis=1)
            ok = (err <= tol * sigma0) & ~hit_node

            adv = idx[ok]
            y[adv] = y_two[ok]
            t_cur[adv] = ti[ok] + hstep[ok]
            h[adv] = np.minimum(hstep[ok] * _H_GROWTH, h_max)
            halvings[adv] = 0

            rej = idx[~ok & ~hit_node]
            h[rej] = 0.5 * hstep[~ok & ~hit_node]
            halvings[rej] += 1
            converged[rej[halvings[rej] > MAX_HALVINGS]] = False

            node[idx[hit_node]] = True

        if paths is not None:
            paths[:, k + 1] = y[list(record_indices)]
        if track_com:
            alive = converged & ~node
            if alive.any():
                tau_k = wf.config.tau(times[k + 1])
                expected = com_trajectory_closed_form(com0[alive], tau_k)
                com_now = 0.5 * (y[alive, 0] + y[alive, 1])
                com_residual = max(com_residual, float(np.max(np.abs(com_now - expected))))

    return BatchResult(y, node, converged, times, paths, record_indices, com_residual)


def integrate_pair(wf, initial, T, tol=1e-8, n_record=64):
    """Integrate one pair from its initial configuration to time T.

    Returns a :class:`TrajectoryPair` whose path is recorded at ``n_record``
    uniformly spaced times.  A pair that triggers the node signal or fails to
    converge keeps its flags set and must not enter any statistic.
    """
    y10, y20 = initial
    result = integrate_batch(
        wf, [(y10, y20)], T, tol=tol, n_record=n_record, record_indices=(0,)
    )
    return TrajectoryPair(
        initial=(float(y10), float(y20)),
        times=result.times,
        positions=result.recorded_paths[0],
        node_proximity=bool(result.node_flags[0]),
        step_converged=bool(result.converged[0]),
    )


def rk4_fixed_step(wf, initial, T, n_steps):
    """Plain fixed-step RK4 endpoint, mainly for convergence-order checks."""
    y = np.array([initial], dtype=float)
    h = np.full(1, T / n_steps)
    t = np.zeros(1)
    for _ in range(n_steps):
        y, node = _rk4_step(wf, t, y, h)
        if node.any():
            raise NodeProximityError(float(y[0, 0]), float(y[0, 1]), float(t[0]), 0.0)
        t = t + h
    return float(y[0, 0]), float(y[0, 1])
