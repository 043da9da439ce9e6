# Region types: polydiscs, anisotropic boxes, segments, convex polytopes.

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "Polydisc",
    "AnisotropicBox",
    "Segment",
    "ConvexPolytope",
    "Region",
    "region_membership",
    "finite_type_check",
]

_SEGMENT_TOL = 1e-12


def _as_center(center, dim=None) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=complex))
    if c.ndim != 1 or c.size < 1:
        raise ValueError("center must be a 1-D complex vector of dimension >= 1")
    if not np.all(np.isfinite(c.view(float))):
        raise ValueError("center components must be finite")
    if dim is not None and c.size != dim:
        raise ValueError(f"center has dimension {c.size}, expected {dim}")
    return c


@dataclass(frozen=True)
class Polydisc:
    """Product of discs {|z_j - center_j| < radii_j}.

    Closed for sup computations, open for membership; the boundary is
    Lebesgue-null so means are unaffected.
    """

    center: np.ndarray
    radii: np.ndarray

    def __init__(self, center, radii):
        c = _as_center(center)
        r = np.atleast_1d(np.asarray(radii, dtype=float))
        if r.size != c.size:
            raise ValueError("polyradius length must match center dimension")
        if not np.all(r > 0) or not np.all(np.isfinite(r)):
            raise ValueError("all polydisc radii must be positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)

    @property
    def dim(self) -> int:
        return int(self.center.size)

    @property
    def volume(self) -> float:
        return float(np.prod(np.pi * self.radii**2))

    def scaled(self, tau: float) -> "Polydisc":
        """Same center, radii multiplied by tau (e.g. tau=1/2 for the half polydisc)."""
        return Polydisc(self.center, tau * self.radii)

    def contains(self, z) -> bool:
        z = _as_center(z, self.dim)
        return bool(np.all(np.abs(z - self.center) < self.radii))


@dataclass(frozen=True)
class AnisotropicBox:
    """Anisotropic polydisc {|z_j - center_j| <= scale**exponents_j}."""

    center: np.ndarray
    scale: float
    exponents: np.ndarray

    def __init__(self, center, scale, exponents):
        c = _as_center(center)
        a = np.atleast_1d(np.asarray(exponents, dtype=float))
        if a.size != c.size:
            raise ValueError("exponents length must match center dimension")
        if not np.all(a > 0):
            raise ValueError("all exponents must be positive")
        s = float(scale)
        if not (0 < s <= 1):
            raise ValueError("scale must lie in (0, 1] for shrinking families")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "exponents", a)

    @property
    def dim(self) -> int:
        return int(self.center.size)

    @property
    def radii(self) -> np.ndarray:
        return self.scale ** self.exponents

    @property
    def volume(self) -> float:
        return float(np.prod(np.pi * self.radii**2))

    def as_polydisc(self) -> Polydisc:
        return Polydisc(self.center, self.radii)

    def contains(self, z) -> bool:
        z = _as_center(z, self.dim)
        return bool(np.all(np.abs(z - self.center) <= self.radii))


@dataclass(frozen=True)
class Segment:
    """Line segment [a, b] in the complex plane, a != b."""

    a: complex
    b: complex

    def __init__(self, a, b):
        a, b = complex(a), complex(b)
        if a == b:
            raise ValueError("segment endpoints must be distinct")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return 1

    @property
    def length(self) -> float:
        return abs(self.b - self.a)

    def point(self, t):
        """Affine parameterization a*(1-t) + b*t for t in [0, 1]."""
        t = np.asarray(t, dtype=float)
        return self.a * (1.0 - t) + self.b * t

    def contains(self, z) -> bool:
        z = complex(np.atleast_1d(np.asarray(z, dtype=complex))[0])
        d = self.b - self.a
        t = ((z - self.a) * np.conj(d)).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return abs(self.point(t) - z) <= _SEGMENT_TOL * max(1.0, self.length)


class ConvexPolytope:
    """Convex hull of a vertex list in C^n, identified with R^{2n}.

    Membership and volume are delegated to qhull; the polytope must be
    full-dimensional in R^{2n} (degenerate sets go through Segment).
    """

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] < 2:
            raise ValueError("a polytope needs at least 2 vertices")
        self.vertices = v
        self._hull = None

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def real_points(self) -> np.ndarray:
        """Vertices as rows of R^{2n}: (Re z_1, Im z_1, ..., Re z_n, Im z_n)."""
        return complex_to_real(self.vertices)

    @cached_property
    def _delaunay(self):
        from scipy.spatial import Delaunay, QhullError

        try:
            return Delaunay(self.real_points)
        except QhullError as exc:
            raise ValueError(
                "degenerate polytope: vertices do not span R^{2n}; "
                "pass 1-D sets as Segment"
            ) from exc

    @cached_property
    def volume(self) -> float:
        from scipy.spatial import ConvexHull

        return float(ConvexHull(self.real_points).volume)

    @property
    def bounding_box(self):
        pts = self.real_points
        return pts.min(axis=0), pts.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def contains(self, z) -> bool:
        z = _as_center(z, self.dim)
        return bool(self._delaunay.find_simplex(complex_to_real(z[None, :]))[0] >= 0)

    def contains_many(self, pts_real: np.ndarray) -> np.ndarray:
        """Vectorized hull membership for an (m, 2n) array of real points."""
        return self._delaunay.find_simplex(pts_real) >= 0

    def __repr__(self):
        return f"ConvexPolytope({self.vertices.shape[0]} vertices, dim={self.dim})"


Region = Union[Polydisc, AnisotropicBox, Segment, ConvexPolytope]


def complex_to_real(z: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real, interleaved (Re, Im) per coordinate."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=float)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def real_to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def region_membership(region: Region, z) -> bool:
    """Exact membership test; raises on dimension mismatch."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.size != region.dim:
        raise ValueError(f"point dimension {z.size} != region dimension {region.dim}")
    return region.contains(z)


def finite_type_check(polydisc: Polydisc, type_bound: float) -> bool:
    """True iff max r_j <= min r_j**(1/N), the finite-type-N condition.

    The standard reading assumes all r_j <= 1; larger radii are allowed here
    and simply make the inequality harder to satisfy.
    """
    if type_bound < 1:
        raise ValueError("type bound N must be >= 1")
    r = polydisc.radii
    return bool(np.max(r) <= np.min(r ** (1.0 / type_bound)))
