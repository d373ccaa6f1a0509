"""Embedding domains, uniform point sampling, metrics and the density of the
distance between two independent uniform points."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, DomainError
from .pairs import pair_indices
from .quadrature import integrate_pieces
from .rng import make_rng

SHAPES = ("cube", "torus")
_CUBE_NAMES = {1: "interval", 2: "square", 3: "cube"}


@dataclass(frozen=True)
class DomainSpec:
    """Unit-volume domain: the unit cube [0,1]^d or the flat unit torus."""

    d: int
    shape: str = "cube"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DimensionError(f"unsupported dimension d={self.d}")
        if self.shape not in SHAPES:
            raise DomainError(f"unknown shape {self.shape!r}")

    @property
    def periodic(self) -> bool:
        return self.shape == "torus"

    @property
    def diameter(self) -> float:
        return math.sqrt(self.d) / 2 if self.periodic else math.sqrt(self.d)

    @property
    def volume(self) -> float:
        return 1.0

    @property
    def name(self) -> str:
        return f"torus{self.d}" if self.periodic else _CUBE_NAMES[self.d]

    @classmethod
    def from_name(cls, name: str) -> "DomainSpec":
        """Parse ``interval|square|cube`` or ``torus1|torus2|torus3``."""
        for d, cube_name in _CUBE_NAMES.items():
            if name == cube_name:
                return cls(d, "cube")
        if name.startswith("torus") and name[5:] in ("1", "2", "3"):
            return cls(int(name[5:]), "torus")
        raise DomainError(f"unknown domain {name!r}")


SQUARE = DomainSpec(2, "cube")
TORUS2 = DomainSpec(2, "torus")


def sample_points(n: int, domain: DomainSpec, seed) -> np.ndarray:
    """``n`` i.i.d. uniform points as an ``(n, d)`` array.

    ``seed`` is either an integer (a fresh Philox stream) or a
    ``numpy.random.Generator`` that is advanced in place.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    return rng.random((n, domain.d))


def _displacement(domain, delta):
    delta = np.abs(delta)
    if domain.periodic:
        delta = np.minimum(delta, 1.0 - delta)
    return delta


def distance(domain: DomainSpec, a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (domain.d,) or b.shape != (domain.d,):
        raise DimensionError(f"expected points of dimension {domain.d}, got {a.shape} and {b.shape}")
    return float(np.sqrt(np.sum(_displacement(domain, a - b) ** 2)))


def pairwise_distances(domain: DomainSpec, points: np.ndarray) -> np.ndarray:
    """Distances of all pairs of ``points`` in pair-layout order.

    ``points`` may carry leading batch axes: shape ``(..., n, d)`` gives
    ``(..., C(n,2))``.
    """
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != domain.d:
        raise DimensionError(f"points have dimension {points.shape[-1]}, domain has {domain.d}")
    i, j = pair_indices(points.shape[-2])
    delta = _displacement(domain, points[..., i, :] - points[..., j, :])
    return np.sqrt(np.sum(delta * delta, axis=-1))


def small_r_sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d: the small-r coefficient of
    the pair-distance density, f(r) ~ omega_d r^(d-1)."""
    try:
        return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[d]
    except KeyError:
        raise DimensionError(f"unsupported dimension d={d}") from None


# Pair-distance densities ----------------------------------------------------

def _square_density(r):
    if r <= 1.0:
        return 2.0 * r * (math.pi - 4.0 * r + r * r)
    root = math.sqrt(max(r * r - 1.0, 0.0))
    val = 2.0 * r * (4.0 * root - (r * r + 2.0 - math.pi) - 4.0 * math.acos(1.0 / r))
    return max(val, 0.0)


def _torus2_density(r):
    if r <= 0.5:
        return 2.0 * math.pi * r
    return max(r * (2.0 * math.pi - 8.0 * math.acos(min(1.0, 1.0 / (2.0 * r)))), 0.0)


def _cube3_inner(r, phi):
    # Integral over cos(theta) of prod_i (1 - r u_i) for the direction
    # (sin t cos phi, sin t sin phi, cos t), restricted to where every factor
    # is positive.
    a, b = math.cos(phi), math.sin(phi)
    m = max(a, b)
    c_hi = min(1.0, 1.0 / r)
    c_lo = math.sqrt(max(0.0, 1.0 - 1.0 / (r * m) ** 2)) if r * m > 1.0 else 0.0
    if c_lo >= c_hi:
        return 0.0
    k1 = r * (a + b)
    k2 = r * r * a * b

    def antideriv(c):
        w = math.sqrt(max(0.0, 1.0 - c * c))
        a0 = c - r * c * c / 2.0
        a1 = (c * w + math.asin(c)) / 2.0 + r * w ** 3 / 3.0
        a2 = c - c ** 3 / 3.0 - r * (c * c / 2.0 - c ** 4 / 4.0)
        return a0 - k1 * a1 + k2 * a2

    return antideriv(c_hi) - antideriv(c_lo)


def _torus3_inner(r, phi):
    m = math.cos(phi)  # phi in [0, pi/4]
    c_hi = min(1.0, 1.0 / (2.0 * r))
    c_lo = math.sqrt(max(0.0, 1.0 - 1.0 / (2.0 * r * m) ** 2)) if 2.0 * r * m > 1.0 else 0.0
    return max(0.0, c_hi - c_lo)


def _octant_density(r, inner, reach):
    # f(r) = 8 r^2 * 2 * int_0^{pi/4} inner(r, phi) dphi   (symmetry phi <-> pi/2-phi)
    pts = [0.0, math.pi / 4]
    kr = r * reach
    kinks = []
    if kr > 1.0:
        kinks.append(math.acos(1.0 / kr))
    if kr * kr > 2.0:
        # the admissible polar band closes where cos(phi) = 1/sqrt((kr)^2 - 1)
        kinks.append(math.acos(1.0 / math.sqrt(kr * kr - 1.0)))
    pts += [k for k in kinks if 0.0 < k < math.pi / 4]
    val, _ = integrate_pieces(lambda phi: inner(r, phi), pts, epsrel=1e-13, rtol=1e-9)
    return max(16.0 * r * r * val, 0.0)


@lru_cache(maxsize=1 << 16)
def _density_scalar(domain: DomainSpec, r: float) -> float:
    d = domain.d
    if domain.periodic:
        if d == 1:
            return 2.0 if r < 0.5 else 0.0
        if d == 2:
            return _torus2_density(r)
        if r <= 0.5:
            return 4.0 * math.pi * r * r
        if r <= math.sqrt(0.5):
            return 4.0 * math.pi * r * r - 6.0 * math.pi * r * (2.0 * r - 1.0)
        return _octant_density(r, _torus3_inner, 2.0)
    if d == 1:
        return 2.0 * (1.0 - r)
    if d == 2:
        return _square_density(r)
    if r <= 1.0:
        return r * r * (4.0 * math.pi - 6.0 * math.pi * r + 8.0 * r * r - r ** 3)
    return _octant_density(r, _cube3_inner, 1.0)


def pair_distance_density(domain: DomainSpec, r):
    """Density of the distance between two independent uniform points.

    Accepts a scalar or an array of radii in [0, diameter].
    """
    arr = np.asarray(r, dtype=float)
    diam = domain.diameter
    if np.any(arr < 0) or np.any(arr > diam * (1 + 1e-12)) or np.any(np.isnan(arr)):
        raise DomainError(f"radius outside [0, {diam}]")
    if arr.ndim == 0:
        return _density_scalar(domain, min(float(arr), diam))
    flat = [_density_scalar(domain, min(float(x), diam)) for x in arr.ravel()]
    return np.array(flat).reshape(arr.shape)


def density_breakpoints(domain: DomainSpec) -> list[float]:
    """Radii where the density changes analytic branch."""
    if domain.periodic:
        cands = [0.5, math.sqrt(0.5), math.sqrt(0.75)]
    else:
        cands = [1.0, math.sqrt(2.0), math.sqrt(3.0)]
    diam = domain.diameter
    return [0.0] + [c for c in cands if c < diam - 1e-15] + [diam]


def integrate_radial(domain: DomainSpec, g, scale=None, rtol=1e-8):
    """Compute the integral of f_K(r) g(r) over [0, diameter].

    ``scale`` (e.g. the sparsity s) adds breakpoints at multiples of the
    length scale on which ``g`` varies.  Returns ``(value, abserr)``.
    """
    pts = density_breakpoints(domain)
    diam = domain.diameter
    if scale is not None:
        x = scale / 16
        while x < diam:
            pts.append(x)
            x *= 2
    return integrate_pieces(lambda r: _density_scalar(domain, r) * g(r), pts, rtol=rtol)
