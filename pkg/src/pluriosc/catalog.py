# Catalog of plurisubharmonic test functions with closed-form metadata.
#
# Every entry evaluates vectorized on arrays of points of shape (..., dim)
# and returns extended reals of shape (...): -inf is allowed on null sets
# (logarithmic poles), NaN never.

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "PshMetadata",
    "PshFunction",
    "FactoredPolynomial",
    "catalog_lookup",
    "CATALOG_NAMES",
]

DOMAIN_MARGIN = 1e-9  # counterexample lives on {|z|, |w| < 1 - DOMAIN_MARGIN}


@dataclass(frozen=True)
class PshMetadata:
    """Optional closed-form facts about a catalog function.

    closed_sup maps (polydisc center, polydisc radii) to the exact supremum
    over the closed polydisc, or returns None when no closed form applies to
    that particular polydisc.
    """

    degree: Optional[int] = None
    lelong_class_constant: Optional[float] = None
    multicircular: bool = False
    closed_sup: Optional[Callable[[np.ndarray, np.ndarray], Optional[float]]] = None
    hessian_at: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # per-coordinate values z_j = s where the function may lose smoothness;
    # quadrature grades its radial panels toward the matching radii
    coord_singularities: Optional[tuple] = None


@dataclass(frozen=True)
class PshFunction:
    name: str
    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    metadata: PshMetadata = field(default_factory=PshMetadata)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            z = z[None]
        if z.shape[-1] != self.dim:
            raise ValueError(
                f"{self.name}: points have dimension {z.shape[-1]}, expected {self.dim}"
            )
        return self.fn(z)

    def value(self, z) -> float:
        """Evaluate at a single point, returning a Python float."""
        return float(self(np.atleast_1d(np.asarray(z, dtype=complex))[None, :])[0])


def _safe_log_abs(w: np.ndarray) -> np.ndarray:
    a = np.abs(w)
    with np.errstate(divide="ignore"):
        return np.log(a)


@dataclass(frozen=True)
class FactoredPolynomial:
    """Polynomial as a product of powers of affine-linear factors.

    p(z) = lead * prod_j (<u_j, z - w_j>)**m_j with <u, z> = sum_k u_k z_k,
    holomorphic in z. For dim 1 this is the usual roots-and-multiplicities
    form with u_j = 1.
    """

    directions: np.ndarray  # (k, dim) complex
    roots: np.ndarray  # (k, dim) complex root points
    mults: np.ndarray  # (k,) int
    lead: complex = 1.0

    def __init__(self, directions, roots, mults, lead=1.0):
        u = np.atleast_2d(np.asarray(directions, dtype=complex))
        w = np.atleast_2d(np.asarray(roots, dtype=complex))
        m = np.atleast_1d(np.asarray(mults, dtype=int))
        if not (u.shape == w.shape and u.shape[0] == m.size):
            raise ValueError("directions, roots and mults must have matching lengths")
        if np.any(m < 1):
            raise ValueError("multiplicities must be positive integers")
        if np.any(np.all(u == 0, axis=1)):
            raise ValueError("factor directions must be nonzero")
        if complex(lead) == 0:
            raise ValueError("identically zero polynomial rejected")
        object.__setattr__(self, "directions", u)
        object.__setattr__(self, "roots", w)
        object.__setattr__(self, "mults", m)
        object.__setattr__(self, "lead", complex(lead))

    @classmethod
    def from_roots(cls, roots: Sequence[complex], mults=None, lead=1.0):
        """Univariate polynomial lead * prod (z - r_j)**m_j."""
        roots = np.atleast_1d(np.asarray(roots, dtype=complex))
        if mults is None:
            mults = np.ones(roots.size, dtype=int)
        u = np.ones((roots.size, 1), dtype=complex)
        return cls(u, roots[:, None], mults, lead)

    @property
    def dim(self) -> int:
        return int(self.directions.shape[1])

    @property
    def degree(self) -> int:
        return int(self.mults.sum())

    def factor_values(self, z: np.ndarray) -> np.ndarray:
        """Values <u_j, z - w_j> for each factor; shape (..., k)."""
        z = np.asarray(z, dtype=complex)
        diff = z[..., None, :] - self.roots  # (..., k, dim)
        return np.sum(self.directions * diff, axis=-1)

    def log_abs(self, z: np.ndarray) -> np.ndarray:
        vals = _safe_log_abs(self.factor_values(z))
        return math.log(abs(self.lead)) + np.sum(self.mults * vals, axis=-1)

    def eval(self, z: np.ndarray) -> np.ndarray:
        return self.lead * np.prod(self.factor_values(z) ** self.mults, axis=-1)

    def coefficients(self) -> np.ndarray:
        """Univariate coefficient list (ascending), multiplied out on demand."""
        if self.dim != 1:
            raise ValueError("coefficient expansion only supported for dim 1")
        coeffs = np.array([self.lead], dtype=complex)
        for u, w, m in zip(self.directions[:, 0], self.roots[:, 0], self.mults):
            for _ in range(int(m)):
                coeffs = np.convolve(coeffs, np.array([-u * w, u], dtype=complex))
        return coeffs

    def restrict_to_line(self, base: np.ndarray, direction: np.ndarray):
        """Univariate factored polynomial q(t) = p(base + t*direction)."""
        base = np.atleast_1d(np.asarray(base, dtype=complex))
        direction = np.atleast_1d(np.asarray(direction, dtype=complex))
        t_roots, t_mults, lead = [], [], self.lead
        for u, w, m in zip(self.directions, self.roots, self.mults):
            a = np.sum(u * direction)  # coefficient of t in the factor
            b = np.sum(u * (base - w))
            if abs(a) < 1e-300:
                # factor constant along this line
                lead *= b ** int(m)
                if lead == 0:
                    raise ValueError("polynomial vanishes identically on the line")
                continue
            t_roots.append(-b / a)
            t_mults.append(int(m))
            lead *= a ** int(m)
        if not t_roots:
            return FactoredPolynomial(np.ones((0, 1)), np.zeros((0, 1)), np.zeros(0, int), lead)
        return FactoredPolynomial.from_roots(np.array(t_roots), np.array(t_mults), lead)


# ---------------------------------------------------------------------------
# catalog entries
# ---------------------------------------------------------------------------


def _entry_log_abs(params):
    dim = int(params.pop("dim", 1))
    z0 = np.atleast_1d(np.asarray(params.pop("z0", np.zeros(dim)), dtype=complex))
    if z0.size == 1 and dim > 1:
        z0 = np.full(dim, complex(z0[0]))
    if z0.size != dim:
        raise ValueError("log_abs: z0 must have length dim")

    def fn(z):
        return _safe_log_abs(np.linalg.norm(z - z0, axis=-1))

    def closed_sup(center, radii):
        return float(np.log(np.linalg.norm(np.abs(center - z0) + radii)))

    meta = PshMetadata(
        multicircular=bool(np.all(z0 == 0)),
        closed_sup=closed_sup,
        lelong_class_constant=0.0 if dim == 1 else None,
        coord_singularities=tuple((complex(z0[j]),) for j in range(dim)),
    )
    return PshFunction(f"log_abs(z0={z0.tolist()})", dim, fn, meta)


def _entry_log_poly(params):
    dim = int(params.pop("dim", 1))
    poly = params.pop("poly", None)
    if poly is None:
        roots = params.pop("roots")
        mults = params.pop("mults", None)
        lead = params.pop("lead", 1.0)
        if dim == 1:
            poly = FactoredPolynomial.from_roots(roots, mults, lead)
        else:
            directions = params.pop("directions")
            poly = FactoredPolynomial(directions, roots, mults, lead)
    if poly.dim != dim:
        raise ValueError("log_poly: polynomial dimension mismatch")
    sing = None
    if dim == 1:
        sing = (tuple(complex(r) for r in poly.roots[:, 0]),)
    meta = PshMetadata(degree=poly.degree, coord_singularities=sing)
    return PshFunction(f"log_poly(deg={poly.degree})", dim, poly.log_abs, meta)


def _entry_lelong_max(params):
    dim = int(params.pop("dim", 1))

    def fn(z):
        return np.max(np.log1p(np.abs(z)), axis=-1)

    def closed_sup(center, radii):
        return float(np.max(np.log1p(np.abs(center) + radii)))

    meta = PshMetadata(
        lelong_class_constant=0.0,
        multicircular=True,
        closed_sup=closed_sup,
        coord_singularities=tuple((0j,) for _ in range(dim)),
    )
    return PshFunction("lelong_max", dim, fn, meta)


def _counterexample_fn(z):
    a = np.abs(z)
    if np.any(a >= 1.0 - DOMAIN_MARGIN):
        raise ValueError(
            "counterexample is only evaluated on {|z|, |w| < 1 - 1e-9}"
        )
    with np.errstate(divide="ignore"):
        x = np.log(a[..., 0])
        y = np.log(a[..., 1])
    prod = (x + y) * y
    # x, y <= 0 so the product is >= 0; +inf*0 at poles resolves to +inf here
    prod = np.where(np.isnan(prod), np.inf, prod)
    return -np.sqrt(prod)


def _entry_counterexample(params):
    def closed_sup(center, radii):
        if np.any(center != 0) or np.any(radii >= 1.0 - DOMAIN_MARGIN):
            return None
        x, y = math.log(radii[0]), math.log(radii[1])
        return -math.sqrt((x + y) * y)

    meta = PshMetadata(
        multicircular=True,
        closed_sup=closed_sup,
        coord_singularities=((0j,), (0j,)),
    )
    return PshFunction("counterexample", 2, _counterexample_fn, meta)


def _entry_quadratic(params):
    c = params.pop("c", None)
    matrix = params.pop("matrix", None)
    if matrix is None:
        if c is None:
            raise ValueError("quadratic: provide c (diagonal) or matrix")
        diag = np.atleast_1d(np.asarray(c, dtype=float))
        matrix = np.diag(diag.astype(complex))
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("quadratic: matrix must be square")
    if not np.allclose(matrix, matrix.conj().T, atol=1e-12):
        raise ValueError("quadratic: matrix must be Hermitian")
    eigs = np.linalg.eigvalsh(matrix)
    if np.min(eigs) < -1e-12:
        raise ValueError(
            f"quadratic: matrix must be positive semidefinite (min eig {np.min(eigs):.2e})"
        )
    dim = matrix.shape[0]
    diagonal = bool(np.allclose(matrix, np.diag(np.diag(matrix))))

    def fn(z):
        return np.einsum("...j,jk,...k->...", z, matrix, np.conj(z)).real

    def closed_sup(center, radii):
        if not diagonal:
            return None
        d = np.diag(matrix).real
        return float(np.sum(d * (np.abs(center) + radii) ** 2))

    meta = PshMetadata(
        multicircular=diagonal,
        closed_sup=closed_sup,
        hessian_at=lambda z: matrix.copy(),
    )
    return PshFunction(f"quadratic({np.diag(matrix).real.tolist()})", dim, fn, meta)


def _entry_m_log(params):
    m = float(params.pop("m", 1.0))
    if m < 0:
        raise ValueError("m_log: m must be nonnegative for plurisubharmonicity")
    dim = int(params.pop("dim", 1))

    def fn(z):
        return m * _safe_log_abs(z[..., 0])

    def closed_sup(center, radii):
        return m * float(np.log(np.abs(center[0]) + radii[0]))

    meta = PshMetadata(
        multicircular=True,
        closed_sup=closed_sup,
        lelong_class_constant=0.0 if m <= 1 else None,
        coord_singularities=((0j,),) + tuple(() for _ in range(dim - 1)),
    )
    return PshFunction(f"m_log(m={m})", dim, fn, meta)


def _entry_max_mlog(params):
    m = np.atleast_1d(np.asarray(params.pop("m", [1.0]), dtype=float))
    if np.any(m < 0):
        raise ValueError("max_mlog: weights must be nonnegative")
    dim = int(params.pop("dim", m.size))
    if m.size != dim:
        raise ValueError("max_mlog: weight list must have length dim")

    def fn(z):
        return np.max(m * _safe_log_abs(z), axis=-1)

    def closed_sup(center, radii):
        return float(np.max(m * np.log(np.abs(center) + radii)))

    meta = PshMetadata(
        multicircular=True,
        closed_sup=closed_sup,
        coord_singularities=tuple((0j,) for _ in range(dim)),
    )
    return PshFunction(f"max_mlog(m={m.tolist()})", dim, fn, meta)


def _entry_constant(params):
    c = float(params.pop("c", 0.0))
    dim = int(params.pop("dim", 1))

    def fn(z):
        return np.full(z.shape[:-1], c)

    meta = PshMetadata(
        multicircular=True,
        closed_sup=lambda center, radii: c,
        lelong_class_constant=c,
        hessian_at=lambda z: np.zeros((dim, dim), dtype=complex),
    )
    return PshFunction(f"constant({c})", dim, fn, meta)


_ENTRIES = {
    "log_abs": _entry_log_abs,
    "log_poly": _entry_log_poly,
    "lelong_max": _entry_lelong_max,
    "counterexample": _entry_counterexample,
    "quadratic": _entry_quadratic,
    "m_log": _entry_m_log,
    "max_mlog": _entry_max_mlog,
    "constant": _entry_constant,
}

CATALOG_NAMES = tuple(sorted(_ENTRIES))


def catalog_lookup(name: str, **params) -> PshFunction:
    """Build a named catalog function with its closed-form metadata.

    Raises ValueError on an unknown name or invalid parameters (e.g. a
    non-PSD quadratic matrix).
    """
    if name not in _ENTRIES:
        raise ValueError(f"unknown catalog function {name!r}; known: {CATALOG_NAMES}")
    params = dict(params)
    f = _ENTRIES[name](params)
    if params:
        raise ValueError(f"{name}: unrecognized parameters {sorted(params)}")
    return f
