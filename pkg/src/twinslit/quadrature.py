"""Deterministic adaptive tensor-product quadrature over rectangles.

The integrands in this package are smooth mixtures of Gaussians, so a
Gauss-Legendre panel rule with error estimated from the difference between
a coarse and a refined rule converges quickly.  Panels are refined worst-first
with a deterministic tie-break, which makes every integral reproducible
bit-for-bit for a given integrand and tolerance.
"""

from __future__ import annotations

import heapq

import numpy as np

_COARSE = 8
_FINE = 16

_node_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


class QuadratureError(RuntimeError):
    """Adaptive refinement failed to reach the requested tolerance."""

    def __init__(self, message, *, panels=None, error_estimate=None):
        super().__init__(message)
        self.panels = panels
        self.error_estimate = error_estimate


def _nodes(n):
    if n not in _node_cache:
        x, w = np.polynomial.legendre.leggauss(n)
        _node_cache[n] = (x, w)
    return _node_cache[n]


def _panel_2d(f, x0, x1, y0, y1):
    """Return (coarse, fine) estimates of the integral of f over the panel."""
    out = []
    for n in (_COARSE, _FINE):
        x, w = _nodes(n)
        cx = 0.5 * (x1 - x0)
        cy = 0.5 * (y1 - y0)
        xs = 0.5 * (x0 + x1) + cx * x
        ys = 0.5 * (y0 + y1) + cy * x
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        vals = f(X, Y)
        out.append(cx * cy * float(w @ vals @ w))
    return out[0], out[1]


def integrate_2d(f, xlo, xhi, ylo, yhi, abs_tol=1e-9, max_panels=16384, initial=4):
    """Integrate ``f(x, y)`` over the rectangle to an absolute tolerance.

    ``f`` must accept 2-d arrays and evaluate elementwise.  Raises
    :class:`QuadratureError` when the panel budget is exhausted before the
    summed error estimate drops below ``abs_tol``.
    """
    if not (xhi > xlo and yhi > ylo):
        raise ValueError("integration rectangle must have positive area")
    xs = np.linspace(xlo, xhi, initial + 1)
    ys = np.linspace(ylo, yhi, initial + 1)
    heap = []
    counter = 0
    total = 0.0
    err_total = 0.0
    for i in range(initial):
        for j in range(initial):
            coarse, fine = _panel_2d(f, xs[i], xs[i + 1], ys[j], ys[j + 1])
            err = abs(fine - coarse)
            total += fine
            err_total += err
            heapq.heappush(heap, (-err, counter, xs[i], xs[i + 1], ys[j], ys[j + 1], fine))
            counter += 1
    n_panels = initial * initial
    while err_total > abs_tol:
        if n_panels >= max_panels or not heap:
            raise QuadratureError(
                f"2-d quadrature stalled at {n_panels} panels "
                f"(error estimate {err_total:.3e} > tolerance {abs_tol:.3e})",
                panels=n_panels,
                error_estimate=err_total,
            )
        neg_err, _, x0, x1, y0, y1, fine = heapq.heappop(heap)
        total -= fine
        err_total += neg_err  # neg_err is -err
        xm = 0.5 * (x0 + x1)
        ym = 0.5 * (y0 + y1)
        for cx0, cx1 in ((x0, xm), (xm, x1)):
            for cy0, cy1 in ((y0, ym), (ym, y1)):
                coarse, fine = _panel_2d(f, cx0, cx1, cy0, cy1)
                err = abs(fine - coarse)
                total += fine
                err_total += err
                heapq.heappush(heap, (-err, counter, cx0, cx1, cy0, cy1, fine))
                counter += 1
        n_panels += 3
    return total


def _panel_1d(f, x0, x1):
    out = []
    for n in (_COARSE, _FINE):
        x, w = _nodes(n)
        c = 0.5 * (x1 - x0)
        xs = 0.5 * (x0 + x1) + c * x
        out.append(c * float(w @ f(xs)))
    return out[0], out[1]


def integrate_1d(f, lo, hi, abs_tol=1e-12, max_panels=8192, initial=4):
    """Adaptive 1-d companion to :func:`integrate_2d`; same contract."""
    if not hi > lo:
        raise ValueError("integration interval must have positive length")
    xs = np.linspace(lo, hi, initial + 1)
    heap = []
    counter = 0
    total = 0.0
    err_total = 0.0
    for i in range(initial):
        coarse, fine = _panel_1d(f, xs[i], xs[i + 1])
        err = abs(fine - coarse)
        total += fine
        err_total += err
        heapq.heappush(heap, (-err, counter, xs[i], xs[i + 1], fine))
        counter += 1
    n_panels = initial
    while err_total > abs_tol:
        if n_panels >= max_panels or not heap:
            raise QuadratureError(
                f"1-d quadrature stalled at {n_panels} panels "
                f"(error estimate {err_total:.3e} > tolerance {abs_tol:.3e})",
                panels=n_panels,
                error_estimate=err_total,
            )
        neg_err, _, x0, x1, fine = heapq.heappop(heap)
        total -= fine
        err_total += neg_err
        xm = 0.5 * (x0 + x1)
        for c0, c1 in ((x0, xm), (xm, x1)):
            coarse, fine = _panel_1d(f, c0, c1)
            err = abs(fine - coarse)
            total += fine
            err_total += err
            heapq.heappush(heap, (-err, counter, c0, c1, fine))
            counter += 1
        n_panels += 1
    return total
