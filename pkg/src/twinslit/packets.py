"""Gaussian slit packets and composite two-particle transverse wavefunctions.

All dynamics lives in the transverse coordinate (named ``y``) of each
particle.  The longitudinal factor of each packet is a plane wave whose phase
is common to every term of the composite wavefunctions, so it drops out of
both densities and velocities; time is the single evolution parameter and the
screen corresponds to a configurable flight time.

Default units are hbar = m = sigma0 = 1, so every length is a multiple of the
packet half-width sigma0 and the spreading parameter ``tau`` doubles as a
clock.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .quadrature import QuadratureError, integrate_2d

# exp() arguments below this underflow float64 to zero; values that large in
# magnitude indicate an evaluation absurdly far outside the packet support.
_EXP_UNDERFLOW = -700.0

# Quadrature boxes extend this many spread widths past the outermost center.
TRUNCATION_WIDTHS = 12.0


class AmplitudeUnderflowError(ValueError):
    """A packet was evaluated so deep in its tail that float64 underflows."""

    def __init__(self, coordinate, exponent):
        self.coordinate = coordinate
        self.exponent = exponent
        super().__init__(
            f"packet amplitude underflows at y={coordinate:+.6g}"
            f" (Gaussian exponent {exponent:.4g})"
        )


class NormalizationError(RuntimeError):
    """Numeric normalization of a wavefunction could not be established."""


@dataclass(frozen=True)
class PhysicalConfig:
    """Dimensionless experiment parameters in natural units.

    sigma0
        Half-width of each slit; the initial packet standard deviation.
    slit_offset
        Distance Y from the symmetry axis to each slit center.
    ky
        Transverse wavenumber imprinted by the source; positive values drive
        the two packets apart symmetrically.
    detector_width
        Width of one detector window on the screen.
    flight_time
        Time of flight from the slits to the screen.
    kx
        Longitudinal wavenumber, kept only for completeness: the longitudinal
        plane-wave phase is global and never enters an observable.
    """

    sigma0: float = 1.0
    slit_offset: float = 1.0
    ky: float = 0.0
    mass: float = 1.0
    hbar: float = 1.0
    detector_width: float = 0.5
    flight_time: float = 2.0
    kx: float = 0.0

    def __post_init__(self):
        if not (self.sigma0 > 0 and self.mass > 0 and self.hbar > 0):
            raise ValueError("sigma0, mass and hbar must all be positive")
        if not self.detector_width > 0:
            raise ValueError("detector_width must be positive")
        if self.flight_time < 0:
            raise ValueError("flight_time must be non-negative")
        if self.slit_offset < 0:
            raise ValueError("slit_offset must be non-negative")

    @property
    def u_y(self):
        """Transverse drift speed hbar*ky/m of each packet center."""
        return self.hbar * self.ky / self.mass

    def tau(self, t):
        """Spreading parameter hbar*t / (2 m sigma0^2); zero at t = 0."""
        return self.hbar * t / (2.0 * self.mass * self.sigma0**2)

    def time_at_tau(self, tau):
        """Inverse of :meth:`tau`."""
        return 2.0 * self.mass * self.sigma0**2 * tau / self.hbar


def sigma_t(config, t):
    """Complex spread sigma0*(1 + i*tau) of a freely evolving packet."""
    return config.sigma0 * (1.0 + 1j * config.tau(t))


def _check_underflow(expo_real, y):
    bad = expo_real < _EXP_UNDERFLOW
    if np.any(bad):
        idx = np.argmax(bad)
        raise AmplitudeUnderflowError(
            float(np.asarray(y).reshape(-1)[idx] if np.ndim(y) else y),
            float(np.asarray(expo_real).reshape(-1)[idx] if np.ndim(expo_real) else expo_real),
        )


def evaluate_packet(config, slit_sign, y, t):
    """Transverse amplitude of the packet emerging from one slit.

    ``slit_sign`` is +1 for the slit centered at +Y and -1 for the mirror
    slit at -Y.  Accepts scalars or arrays for ``y`` and ``t``.
    """
    if slit_sign not in (1, -1):
        raise ValueError("slit_sign must be +1 or -1")
    st = sigma_t(config, t)
    arg = slit_sign * np.asarray(y) - config.slit_offset - config.u_y * t
    expo = -(arg**2) / (4.0 * config.sigma0 * st) + 1j * config.ky * (
        slit_sign * np.asarray(y) - config.slit_offset - 0.5 * config.u_y * t
    )
    _check_underflow(np.real(expo), y)
    return (2.0 * np.pi * st**2) ** (-0.25) * np.exp(expo)


def packet_gradient_y(config, slit_sign, y, t):
    """Analytic d/dy of :func:`evaluate_packet` at the same point."""
    value = evaluate_packet(config, slit_sign, y, t)
    st = sigma_t(config, t)
    arg = slit_sign * np.asarray(y) - config.slit_offset - config.u_y * t
    factor = slit_sign * (-arg / (2.0 * config.sigma0 * st) + 1j * config.ky)
    return factor * value


def _packet_with_gradient(config, slit_sign, y, t):
    """One exponential per point: returns (value, gradient)."""
    st = sigma_t(config, t)
    y = np.asarray(y)
    arg = slit_sign * y - config.slit_offset - config.u_y * t
    expo = -(arg**2) / (4.0 * config.sigma0 * st) + 1j * config.ky * (
        slit_sign * y - config.slit_offset - 0.5 * config.u_y * t
    )
    _check_underflow(np.real(expo), y)
    value = (2.0 * np.pi * st**2) ** (-0.25) * np.exp(expo)
    factor = slit_sign * (-arg / (2.0 * config.sigma0 * st) + 1j * config.ky)
    return value, factor * value


class Variant(str, Enum):
    """The three composite two-particle wavefunctions."""

    ENTANGLED_TWO_SLIT = "entangled_two_slit"
    UNENTANGLED_PRODUCT = "unentangled_product"
    ENTANGLED_FOUR_SLIT = "entangled_four_slit"


# Number of packet-product terms; used for analytic peak-density bounds.
_TERM_COUNT = {
    Variant.ENTANGLED_TWO_SLIT: 2,
    Variant.UNENTANGLED_PRODUCT: 4,
    Variant.ENTANGLED_FOUR_SLIT: 4,
}


def _raw_value(variant, exchange_sign, config, y1, y2, t):
    a1 = evaluate_packet(config, +1, y1, t)
    b1 = evaluate_packet(config, -1, y1, t)
    a2 = evaluate_packet(config, +1, y2, t)
    b2 = evaluate_packet(config, -1, y2, t)
    if variant is Variant.ENTANGLED_TWO_SLIT:
        return a1 * b2 + exchange_sign * (a2 * b1)
    if variant is Variant.UNENTANGLED_PRODUCT:
        return (a1 + b1) * (a2 + b2)
    # Four-slit pairing: each particle is guided by the upper and lower slit
    # of its own screen.  The two screens share the same transverse profile;
    # the exchange phase lives entirely in the longitudinal factor and
    # cancels out of every transverse observable, so both exchange signs
    # produce the same transverse combination.
    return a1 * b2 + a2 * b1 + b1 * a2 + b2 * a1


def _raw_gradients(variant, exchange_sign, config, y1, y2, t):
    a1, da1 = _packet_with_gradient(config, +1, y1, t)
    b1, db1 = _packet_with_gradient(config, -1, y1, t)
    a2, da2 = _packet_with_gradient(config, +1, y2, t)
    b2, db2 = _packet_with_gradient(config, -1, y2, t)
    if variant is Variant.ENTANGLED_TWO_SLIT:
        g1 = da1 * b2 + exchange_sign * (a2 * db1)
        g2 = a1 * db2 + exchange_sign * (da2 * b1)
        return g1, g2
    if variant is Variant.UNENTANGLED_PRODUCT:
        g1 = (da1 + db1) * (a2 + b2)
        g2 = (a1 + b1) * (da2 + db2)
        return g1, g2
    g1 = da1 * b2 + a2 * db1 + db1 * a2 + b2 * da1
    g2 = a1 * db2 + da2 * b1 + b1 * da2 + db2 * a1
    return g1, g2


@dataclass(frozen=True)
class WaveFunction:
    """A composite two-particle wavefunction with its numeric normalization.

    Immutable once built; safe to share across parallel workers.
    """

    variant: Variant
    exchange_sign: int
    config: PhysicalConfig
    normalization: float

    def __post_init__(self):
        if self.normalization <= 0 or not np.isfinite(self.normalization):
            raise ValueError("normalization must be a positive finite real")

    def evaluate(self, y1, y2, t):
        return evaluate_wavefunction(self, y1, y2, t)

    def gradient(self, y1, y2, t):
        return wavefunction_gradient(self, y1, y2, t)

    def density(self, y1, y2, t):
        return probability_density(self, y1, y2, t)


def truncation_box(config, t, n_widths=TRUNCATION_WIDTHS):
    """Half-width of the square that carries all but ~1e-30 of the density."""
    spread = abs(sigma_t(config, t))
    return config.slit_offset + abs(config.u_y) * t + n_widths * max(spread, config.sigma0)


def build_wavefunction(variant, exchange_sign, config, abs_tol=1e-9):
    """Assemble a :class:`WaveFunction`, normalizing by 2-d quadrature at t=0.

    ``exchange_sign`` is the +/- of the entangled combinations; the product
    variant ignores it.  Raises :class:`NormalizationError` when quadrature
    does not converge or the configuration has no usable norm.
    """
    variant = Variant(variant)
    if exchange_sign not in (1, -1):
        raise ValueError("exchange_sign must be +1 or -1")
    if variant is Variant.UNENTANGLED_PRODUCT:
        exchange_sign = 1
    half = truncation_box(config, 0.0)

    def raw_density(y1, y2):
        return np.abs(_raw_value(variant, exchange_sign, config, y1, y2, 0.0)) ** 2

    try:
        raw_norm = integrate_2d(raw_density, -half, half, -half, half, abs_tol=abs_tol)
    except QuadratureError as exc:
        raise NormalizationError(
            f"normalization quadrature failed for {variant.value} "
            f"(sign {exchange_sign:+d}): {exc}"
        ) from exc
    if not np.isfinite(raw_norm) or raw_norm <= abs_tol:
        raise NormalizationError(
            f"{variant.value} with sign {exchange_sign:+d} has vanishing norm "
            f"({raw_norm:.3e}); configuration rejected"
        )
    return WaveFunction(variant, exchange_sign, config, 1.0 / np.sqrt(raw_norm))


def evaluate_wavefunction(wf, y1, y2, t):
    """Complex amplitude of the normalized wavefunction at (y1, y2, t)."""
    return wf.normalization * _raw_value(
        wf.variant, wf.exchange_sign, wf.config, y1, y2, t
    )


def wavefunction_gradient(wf, y1, y2, t):
    """Analytic partials (d/dy1, d/dy2) of the normalized wavefunction."""
    g1, g2 = _raw_gradients(wf.variant, wf.exchange_sign, wf.config, y1, y2, t)
    return wf.normalization * g1, wf.normalization * g2


def wavefunction_value_and_gradient(wf, y1, y2, t):
    """Value, both partials, and the local envelope amplitude.

    The guidance velocity needs psi and its gradients at every integrator
    stage, so evaluating the four packets once and assembling everything
    halves the work of the hot path.  The envelope is the triangle-inequality
    bound on |psi| at the same point (packet moduli added instead of
    amplitudes): the ratio |psi|/envelope measures how much destructive
    interference is happening locally, independent of how deep in the packet
    tails the point sits.
    """
    config = wf.config
    a1, da1 = _packet_with_gradient(config, +1, y1, t)
    b1, db1 = _packet_with_gradient(config, -1, y1, t)
    a2, da2 = _packet_with_gradient(config, +1, y2, t)
    b2, db2 = _packet_with_gradient(config, -1, y2, t)
    variant = wf.variant
    sign = wf.exchange_sign
    ma1, mb1 = np.abs(a1), np.abs(b1)
    ma2, mb2 = np.abs(a2), np.abs(b2)
    if variant is Variant.ENTANGLED_TWO_SLIT:
        value = a1 * b2 + sign * (a2 * b1)
        g1 = da1 * b2 + sign * (a2 * db1)
        g2 = a1 * db2 + sign * (da2 * b1)
        envelope = ma1 * mb2 + ma2 * mb1
    elif variant is Variant.UNENTANGLED_PRODUCT:
        h1 = a1 + b1
        h2 = a2 + b2
        value = h1 * h2
        g1 = (da1 + db1) * h2
        g2 = h1 * (da2 + db2)
        envelope = (ma1 + mb1) * (ma2 + mb2)
    else:
        value = a1 * b2 + a2 * b1 + b1 * a2 + b2 * a1
        g1 = da1 * b2 + a2 * db1 + db1 * a2 + b2 * da1
        g2 = a1 * db2 + da2 * b1 + b1 * da2 + db2 * a1
        envelope = 2.0 * (ma1 * mb2 + ma2 * mb1)
    n = wf.normalization
    return n * value, n * g1, n * g2, n * envelope


def probability_density(wf, y1, y2, t):
    """|psi|^2 at (y1, y2, t)."""
    return np.abs(evaluate_wavefunction(wf, y1, y2, t)) ** 2


def peak_density_bound(wf, t):
    """Analytic upper bound on the global maximum of |psi|^2 at time t.

    Each packet modulus is at most (2 pi |sigma_t|^2)^(-1/4); a product of two
    packets at most (2 pi)^(-1/2)/|sigma_t|.  Used to scale node thresholds.
    """
    spread = np.abs(sigma_t(wf.config, t))
    terms = _TERM_COUNT[wf.variant]
    amp = wf.normalization * terms / (np.sqrt(2.0 * np.pi) * spread)
    return amp**2


def wavefunction_norm(wf, t, abs_tol=1e-9):
    """Total probability at time t by 2-d quadrature over the truncation box."""
    half = truncation_box(wf.config, t)

    def density(y1, y2):
        return probability_density(wf, y1, y2, t)

    return integrate_2d(density, -half, half, -half, half, abs_tol=abs_tol)


def verify_expansion_identity(config, y1, y2, t):
    """Relative mismatch between the upper/lower packet-product difference
    and its factored closed form.

    The difference of same-slit products A(y1)A(y2) - B(y1)B(y2) factors into
    a shared Gaussian envelope times a sinh of (y1 + y2).  Exact when ky = 0;
    the returned value is the relative discrepancy of the two evaluations.
    """
    a1 = evaluate_packet(config, +1, y1, t)
    a2 = evaluate_packet(config, +1, y2, t)
    b1 = evaluate_packet(config, -1, y1, t)
    b2 = evaluate_packet(config, -1, y2, t)
    lhs = a1 * a2 - b1 * b2

    st = sigma_t(config, t)
    drift = config.slit_offset + config.u_y * t
    y1 = np.asarray(y1)
    y2 = np.asarray(y2)
    envelope = (
        (2.0 * np.pi * st**2) ** (-0.5)
        * np.exp(-(y1**2 + y2**2) / (4.0 * config.sigma0 * st))
        * np.exp(-(drift**2) / (2.0 * config.sigma0 * st))
    )
    rhs = envelope * 2.0 * np.sinh((y1 + y2) * drift / (2.0 * config.sigma0 * st))

    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    diff = np.abs(lhs - rhs)
    # Both sides vanishing (odd in y1 + y2) counts as exact agreement.
    tiny = np.finfo(float).tiny
    return np.where(scale < tiny, 0.0, diff / np.where(scale < tiny, 1.0, scale))
