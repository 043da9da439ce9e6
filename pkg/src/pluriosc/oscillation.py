# Oscillation analytics: sup/UO/MO over regions, the boundary-vs-interior
# decomposition with its two convexity bounds, the Lelong-class polydisc
# bound, the two-variable blowup example, and directional Lelong numbers.

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .catalog import PshFunction
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    adaptive_line_integral,
    mean_over_polydisc,
    mean_over_region,
    mean_over_shilov,
)
from .regions import AnisotropicBox, ConvexPolytope, Polydisc, Region, Segment

__all__ = [
    "OscillationReport",
    "DecompositionReport",
    "SlopeFit",
    "LelongClassReport",
    "OracleViolation",
    "sup_on_region",
    "oscillation",
    "harnack_decomposition",
    "lelong_class_check",
    "convexity_gap_check",
    "barycenter_inequality_check",
    "counterexample_scan",
    "counterexample_gap",
    "directional_lelong",
]

SUP_CROSS_CHECK_TOL = 1e-6


class OracleViolation(RuntimeError):
    """Numerical value disagrees with a closed-form metadata oracle."""


@dataclass(frozen=True)
class OscillationReport:
    sup: float
    mean: float
    uo: float
    mo: float
    sup_error: float
    mean_error: float
    mo_error: float = 0.0


@dataclass(frozen=True)
class DecompositionReport:
    """Split UO_P = I1 + I2 with the convexity majorants J1, J2.

    I1 = sup - boundary mean, I2 = boundary mean - solid mean,
    J1 = sup over P minus sup over (1/2)P, and J2 = f(0) - f(-1/2,...,-1/2)
    for the boundary-mean parameterization f(t) over radii e^{t_j} r_j.
    """

    i1: float
    i2: float
    j1: float
    j2: float
    n: int
    error: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_rms: float
    r_values: tuple
    flagged: bool = False


@dataclass(frozen=True)
class LelongClassReport:
    max_uo: float
    bound: float
    proof_bound: float
    uo_values: tuple
    passed: bool


# ---------------------------------------------------------------------------
# suprema
# ---------------------------------------------------------------------------


def _golden_max(h, lo: float, hi: float, iters: int = 60):
    """Golden-section maximization of a scalar callable on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = h(d)
    return (c, fc) if fc >= fd else (d, fd)


def _sup_on_torus(f, P: Polydisc, spec: QuadratureSpec):
    """Maximum over the distinguished boundary via grid + per-angle polish."""
    n = P.dim
    A = max(32, spec.angular_nodes)
    if n >= 3:
        A = min(A, 32)
    theta_grid = 2.0 * np.pi * np.arange(A) / A

    def at(theta):
        z = P.center + P.radii * np.exp(1j * np.asarray(theta))
        return float(f(z[None, :])[0])

    grids = np.meshgrid(*([theta_grid] * n), indexing="ij")
    pts = np.stack(
        [P.center[j] + P.radii[j] * np.exp(1j * grids[j]) for j in range(n)], axis=-1
    )
    vals = np.asarray(f(pts), dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    # ties break toward the lexicographically smallest angle vector
    flat_best = int(np.argmax(vals.ravel(order="C")))
    best_idx = np.unravel_index(flat_best, vals.shape)
    best_theta = np.array([theta_grid[i] for i in best_idx])
    best_val = float(vals[best_idx])
    coarse = float(np.max(vals[(slice(None, None, 2),) * n]))

    span = 2.0 * np.pi / A
    theta = best_theta.copy()
    val = best_val
    for _ in range(2):
        for j in range(n):
            def h(tj, j=j):
                t = theta.copy()
                t[j] = tj
                return at(t)

            tj, vj = _golden_max(h, theta[j] - span, theta[j] + span)
            if vj >= val:
                theta[j] = tj
                val = vj
    err = max(abs(val - best_val), abs(best_val - coarse) * 0.25, 1e-12)
    return val, err


def _sup_polydisc(f, P: Polydisc, spec: QuadratureSpec):
    meta = f.metadata if isinstance(f, PshFunction) else None
    closed = None
    if meta is not None and meta.closed_sup is not None:
        closed = meta.closed_sup(P.center, P.radii)
    if meta is not None and meta.multicircular and np.all(P.center == 0):
        corner = float(f(P.radii.astype(complex)[None, :])[0])
        num, err = corner, 1e-14
    else:
        num, err = _sup_on_torus(f, P, spec)
    if closed is not None:
        if abs(num - closed) > SUP_CROSS_CHECK_TOL * max(1.0, abs(closed)):
            raise OracleViolation(
                f"sup mismatch for {getattr(f, 'name', 'f')}: closed {closed!r} "
                f"vs numerical {num!r}"
            )
        return float(closed), max(1e-14, abs(num - closed))
    return num, err


def _sup_segment(f, seg: Segment, spec: QuadratureSpec):
    feval = f.fn if isinstance(f, PshFunction) else f
    m = max(257, 4 * spec.angular_nodes + 1)
    t = np.linspace(0.0, 1.0, m)
    vals = np.asarray(feval(seg.point(t)[..., None]), dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    i = int(np.argmax(vals))
    coarse = float(np.max(vals[::2]))

    def h(tt):
        v = float(feval(np.array([[seg.point(tt)]]))[0])
        return v if np.isfinite(v) else -np.inf

    lo = t[max(0, i - 1)]
    hi = t[min(m - 1, i + 1)]
    tt, val = _golden_max(h, lo, hi)
    val = max(val, float(vals[i]))
    err = max(abs(val - vals[i]), 0.25 * abs(vals[i] - coarse), 1e-12)
    return val, err


def _sup_polytope(f, A: ConvexPolytope, spec: QuadratureSpec, want_argmax=False):
    feval = f.fn if isinstance(f, PshFunction) else f
    lo, hi = A.bounding_box
    rng = np.random.default_rng(spec.seed ^ 0x5EED)
    m = min(spec.mc_samples, 60_000)
    pts = rng.uniform(lo, hi, size=(m, lo.size))
    inside = A.contains_many(pts)
    from .regions import real_to_complex

    cand = real_to_complex(pts[inside])
    cand = np.concatenate([cand, A.vertices], axis=0)
    vals = np.asarray(feval(cand), dtype=float)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    order = np.argsort(vals)[::-1]
    best = cand[order[0]].copy()
    val = float(vals[order[0]])
    # local coordinate polish with shrinking complex steps, clipped to the hull
    step = float(np.max(hi - lo)) * 0.05
    for _ in range(40):
        improved = False
        for j in range(A.dim):
            for dz in (step, -step, 1j * step, -1j * step):
                trial = best.copy()
                trial[j] += dz
                if not A.contains(trial):
                    continue
                v = float(feval(trial[None, :])[0])
                if v > val:
                    val, best = v, trial
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-10:
                break
    if want_argmax:
        return val, max(1e-9, step), best
    return val, max(1e-9, step)


def argmax_on_polytope(f, A: ConvexPolytope, spec: QuadratureSpec = DEFAULT_SPEC):
    """Deterministic maximizer of f over the hull (grid + local polish);
    grid ties resolve to the first-found point."""
    val, err, point = _sup_polytope(f, A, spec, want_argmax=True)
    return point, val


def sup_on_region(f, region: Region, spec: QuadratureSpec = DEFAULT_SPEC):
    """Supremum of f over a region, with an error estimate.

    Plurisubharmonic functions on polydiscs are maximized over the
    distinguished boundary (maximum principle); closed-form metadata, when
    present, is returned and cross-checked against the numerical value.
    """
    if isinstance(region, AnisotropicBox):
        region = region.as_polydisc()
    if isinstance(region, Polydisc):
        return _sup_polydisc(f, region, spec)
    if isinstance(region, Segment):
        return _sup_segment(f, region, spec)
    if isinstance(region, ConvexPolytope):
        return _sup_polytope(f, region, spec)
    raise TypeError(f"unsupported region {type(region).__name__}")


# ---------------------------------------------------------------------------
# oscillation and the boundary decomposition
# ---------------------------------------------------------------------------


def oscillation(f, region: Region, spec: QuadratureSpec = DEFAULT_SPEC, with_mo: bool = True):
    """Upper and mean oscillation of f over a region.

    UO = sup - mean; MO integrates |f - mean| directly (a second quadrature
    pass with the shifted absolute integrand).
    """
    sup, sup_err = sup_on_region(f, region, spec)
    mean = mean_over_region(f, region, spec)
    mo = mo_err = 0.0
    if with_mo:
        feval = f.fn if isinstance(f, PshFunction) else f
        m = mean.value

        def g(z):
            return np.abs(feval(z) - m)

        mo_res = mean_over_region(g, region, spec)
        mo, mo_err = mo_res.value, mo_res.abs_error_estimate
    return OscillationReport(
        sup=sup,
        mean=mean.value,
        uo=sup - mean.value,
        mo=mo,
        sup_error=sup_err,
        mean_error=mean.abs_error_estimate,
        mo_error=mo_err,
    )


def boundary_mean_at(f, P: Polydisc, t, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Boundary-mean parameterization f(t): mean over the torus of radii
    e^{t_j} r_j (convex and increasing in each t_j for psh f)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    scaled = Polydisc(P.center, P.radii * np.exp(t))
    return mean_over_shilov(f, scaled, spec).value


def harnack_decomposition(
    f, P: Polydisc, spec: QuadratureSpec = DEFAULT_SPEC
) -> DecompositionReport:
    """Split UO_P(f) into the boundary part I1 and interior part I2 together
    with their convexity majorants J1 (half-polydisc sup gap) and J2
    (boundary-mean gap at the barycenter shift -1/2)."""
    sup, sup_err = sup_on_region(f, P, spec)
    shilov = mean_over_shilov(f, P, spec)
    solid = mean_over_polydisc(f, P, spec)
    sup_half, sup_half_err = sup_on_region(f, P.scaled(0.5), spec)
    shilov_shift = mean_over_shilov(
        f, Polydisc(P.center, P.radii * math.exp(-0.5)), spec
    )
    err = (
        sup_err
        + sup_half_err
        + 2.0 * shilov.abs_error_estimate
        + solid.abs_error_estimate
        + shilov_shift.abs_error_estimate
    )
    return DecompositionReport(
        i1=sup - shilov.value,
        i2=shilov.value - solid.value,
        j1=sup - sup_half,
        j2=shilov.value - shilov_shift.value,
        n=P.dim,
        error=err,
    )


# ---------------------------------------------------------------------------
# Lelong class
# ---------------------------------------------------------------------------


def lelong_class_check(
    f: PshFunction,
    family: Sequence[Polydisc],
    spec: QuadratureSpec = DEFAULT_SPEC,
    growth_samples: int = 200,
) -> LelongClassReport:
    """UO over a polydisc family for a function of logarithmic growth.

    The growth hypothesis f(z) <= c + max_j log(1+|z_j|) is spot-checked on
    random points before any integration; violations reject the input.
    """
    c = f.metadata.lelong_class_constant
    if c is None:
        raise ValueError(f"{f.name}: no logarithmic-growth constant in metadata")
    rng = np.random.default_rng(spec.seed ^ 0x1E10)
    mag = 10.0 ** rng.uniform(-3, 8, size=(growth_samples, f.dim))
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(growth_samples, f.dim)))
    pts = mag * phase
    lhs = f(pts)
    rhs = c + np.max(np.log1p(np.abs(pts)), axis=-1)
    bad = lhs > rhs + 1e-9
    if np.any(bad):
        raise ValueError(
            f"{f.name}: growth hypothesis fails at {pts[bad][0]!r} "
            f"({float(lhs[bad][0]):.6g} > {float(rhs[bad][0]):.6g})"
        )
    uo_values = []
    for P in family:
        sup, _ = sup_on_region(f, P, spec)
        mean = mean_over_polydisc(f, P, spec)
        uo_values.append(sup - mean.value)
    n = family[0].dim if family else f.dim
    bound = 3.0**n
    proof_bound = bound * math.log(2.0) + 0.5
    max_uo = max(uo_values) if uo_values else 0.0
    return LelongClassReport(
        max_uo=max_uo,
        bound=bound,
        proof_bound=proof_bound,
        uo_values=tuple(uo_values),
        passed=max_uo < bound,
    )


# ---------------------------------------------------------------------------
# convexity lemmas
# ---------------------------------------------------------------------------


def convexity_gap_check(
    g: Callable[[np.ndarray], float],
    kind: str,
    n: int,
    bound_param: float,
    samples: int = 200,
    seed: int = 0,
    g_corner: Optional[float] = None,
    g_zero: Optional[float] = None,
):
    """Shift gaps of a convex increasing function against the lemma bounds.

    kind="finite_type": samples t in the cone {t <= 0, max(-t_j) <= N min(-t_j)}
    and bounds g(t) - g(t-1) by n*N*(g(1,...,1) - g(0)).
    kind="lelong": samples t in R^n under the growth cap max_j log(1+e^{t_j})
    and bounds g(t) - g(t-M) by M.
    """
    rng = np.random.default_rng(seed)
    gaps = []
    if kind == "finite_type":
        N = bound_param
        if N < 1:
            raise ValueError("finite-type parameter N must be >= 1")
        ones = np.ones(n)
        gz = g(np.zeros(n)) if g_zero is None else g_zero
        gc = g(ones) if g_corner is None else g_corner
        bound = n * N * (gc - gz)
        for _ in range(samples):
            base = rng.uniform(0.05, 4.0)
            ratios = rng.uniform(1.0, N, size=n)
            ratios[rng.integers(0, n)] = 1.0
            t = -base * ratios
            gaps.append(g(t) - g(t - 1.0))
    elif kind == "lelong":
        M = bound_param
        bound = M
        for _ in range(samples):
            t = rng.uniform(-30.0, 30.0, size=n)
            val = g(t)
            cap = np.max(np.log1p(np.exp(np.minimum(t, 500))))
            if val > cap + 1e-9:
                raise ValueError("convex handle violates the logarithmic cap")
            gaps.append(val - g(t - M))
    else:
        raise ValueError("kind must be 'finite_type' or 'lelong'")
    max_gap = float(np.max(gaps)) if gaps else 0.0
    return {
        "kind": kind,
        "max_gap": max_gap,
        "bound": float(bound),
        "passed": bool(max_gap <= bound + 1e-9),
    }


def barycenter_inequality_check(fconv: Callable[[float], float], trials: int = 8, seed: int = 0):
    """Jensen-type check for the radial measure d(e^{2t}) on (-inf, 0).

    The measure has total mass 1 and barycenter -1/2, so the mean of any
    convex function dominates its value at -1/2; checked for fconv and a few
    seeded affine reparameterizations fconv(a t + b).
    """
    rng = np.random.default_rng(seed)
    cases = [(1.0, 0.0)] + [
        (rng.uniform(0.2, 3.0), rng.uniform(-2.0, 2.0)) for _ in range(max(0, trials - 1))
    ]
    worst = np.inf
    for a, b in cases:
        def integrand(t):
            return np.asarray([fconv(a * ti + b) for ti in np.atleast_1d(t)]) * 2.0 * np.exp(
                2.0 * np.atleast_1d(t)
            )

        val, err, _, _ = adaptive_line_integral(
            integrand, -40.0, 0.0, order=16, abs_tol=1e-12
        )
        margin = val - fconv(-0.5 * a + b)
        worst = min(worst, margin + err)
    return {"min_margin": float(worst), "passed": bool(worst >= -1e-9)}


# ---------------------------------------------------------------------------
# the two-variable counterexample
# ---------------------------------------------------------------------------


def counterexample_gap(x: float) -> float:
    """Closed-form shift gap (5-x)/(sqrt(6-2x) + sqrt(1-x)) of the blowup
    witness along the ray of bidiscs with radii (e^x, e^-1)."""
    return (5.0 - x) / (math.sqrt(6.0 - 2.0 * x) + math.sqrt(1.0 - x))


def counterexample_scan(
    x_values: Sequence[float], spec: QuadratureSpec = DEFAULT_SPEC
) -> list[dict]:
    """Blowup table for the bidisc family with radii (e^x, e^-1), x <= -1.

    Columns per x: the closed-form gap, the integrated UO over the bidisc,
    and the mean-oscillation lower bound e^{-2} * UO over the e^{-1/2}-shrunk
    bidisc.
    """
    from .catalog import catalog_lookup

    f = catalog_lookup("counterexample")
    rows = []
    for x in x_values:
        if x > -1.0:
            raise ValueError("scan extends the family only over x <= -1")
        radii = np.array([math.exp(x), math.exp(-1.0)])
        P = Polydisc([0, 0], radii)
        sup, _ = sup_on_region(f, P, spec)
        uo = sup - mean_over_polydisc(f, P, spec).value
        P_small = Polydisc([0, 0], radii * math.exp(-0.5))
        sup_s, _ = sup_on_region(f, P_small, spec)
        uo_small = sup_s - mean_over_polydisc(f, P_small, spec).value
        rows.append(
            {
                "x": float(x),
                "gap": counterexample_gap(x),
                "uo": float(uo),
                "mo_lower": float(math.exp(-2.0) * uo_small),
            }
        )
    return rows


# ---------------------------------------------------------------------------
# directional Lelong numbers
# ---------------------------------------------------------------------------


def directional_lelong(
    f, exponents, r_grid: Sequence[float], spec: QuadratureSpec = DEFAULT_SPEC
) -> SlopeFit:
    """Least-squares slope of sup over the anisotropic boxes P_{r^a}(0)
    against log r; the slope estimates the directional Lelong number."""
    r = np.asarray(sorted(r_grid), dtype=float)
    if r.size < 4:
        raise ValueError("need at least 4 radii")
    if np.any(r <= 0) or np.any(r > 0.5):
        raise ValueError("radii must lie in (0, 0.5]")
    ratios = np.diff(np.log(r))
    if np.ptp(ratios) > 1e-6 * np.max(np.abs(ratios)):
        raise ValueError("r grid must be logarithmically spaced")
    a = np.atleast_1d(np.asarray(exponents, dtype=float))
    sups = []
    for ri in r:
        box = AnisotropicBox(np.zeros(a.size), ri, a)
        s, _ = sup_on_region(f, box, spec)
        sups.append(s)
    logr = np.log(r)
    slope, intercept = np.polyfit(logr, sups, 1)
    resid = np.asarray(sups) - (slope * logr + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=rms,
        r_values=tuple(float(x) for x in r),
        flagged=rms > 0.05 * abs(slope) + 1e-12,
    )
