"""Adaptive quadrature helpers built on QUADPACK (``scipy.integrate.quad``)."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import NumericError

EPSREL = 1e-11
TAIL_FRACTION = 1e-16


def integrate_pieces(func, breakpoints, epsrel=EPSREL, epsabs=1e-300, rtol=1e-8):
    """Integrate ``func`` over consecutive ``breakpoints`` intervals.

    Returns ``(value, abserr)``.  Raises :class:`NumericError` when the summed
    error estimate exceeds ``rtol`` relative to the value (and an absolute
    floor of 1e-14).
    """
    pts = sorted(set(float(b) for b in breakpoints))
    total = 0.0
    err = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            v, e = quad(func, a, b, epsrel=epsrel, epsabs=epsabs, limit=400)
        total += v
        err += e
    if not math.isfinite(total) or err > max(rtol * abs(total), 1e-14):
        raise NumericError(
            f"quadrature did not converge: value={total!r}, error estimate={err!r}",
            residual=err,
        )
    return total, err


def tail_cutoff(func, start=1.0, max_radius=2.0**40, grid=64):
    """First doubling radius R beyond which ``func`` is negligible.

    ``func`` is sampled on a grid up to each candidate radius to estimate its
    peak; R is accepted once |func| on [R/2, R] stays below ``TAIL_FRACTION``
    times that peak.  Returns ``None`` when no such R exists below
    ``max_radius`` (treated as a divergence signal by callers).
    """
    peak = 0.0
    radius = float(start)
    lo = 0.0
    while radius <= max_radius:
        xs = np.linspace(lo, radius, grid)
        vals = np.abs(np.array([func(x) for x in xs]))
        peak = max(peak, float(vals.max()))
        tail = np.abs(np.array([func(x) for x in np.linspace(radius / 2, radius, grid)]))
        if peak == 0.0 or tail.max() <= TAIL_FRACTION * peak:
            return radius
        lo = radius
        radius *= 2.0
    return None


def integrate_half_line(func, scale=1.0, rtol=1e-8):
    """Integrate a decaying ``func`` over [0, inf).

    Returns ``(value, abserr, cutoff)``.  ``cutoff`` is the truncation radius,
    or ``None`` if the integrand never decayed (value is then ``inf``).
    """
    cutoff = tail_cutoff(func, start=scale)
    if cutoff is None:
        return math.inf, math.inf, None
    pts = [0.0]
    x = scale / 8
    while x < cutoff:
        pts.append(x)
        x *= 2
    pts.append(cutoff)
    value, err = integrate_pieces(func, pts, rtol=rtol)
    return value, err, cutoff
