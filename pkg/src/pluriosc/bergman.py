# Weighted Bergman kernels at the origin of polydiscs: circular fast path,
# truncated Gram method, the shrink-rescale identity for the log-kernel
# function of the dilation parameter, the sandwich bounds, the sharp
# lower-bound check, the Hessian-limit asymptotic, and preservation of
# directional Lelong numbers.

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .catalog import PshFunction
from .oscillation import SlopeFit, directional_lelong, sup_on_region
from .quadrature import (
    DEFAULT_SPEC,
    QuadratureSpec,
    _gl01,
    exp_mean_over_polydisc,
)
from .regions import Polydisc

__all__ = [
    "BergmanResult",
    "WeightSpec",
    "HessianCheckReport",
    "bergman_origin",
    "gram_matrix",
    "f_eval",
    "sandwich_check",
    "ot_check",
    "monotonicity_check",
    "hessian_limit_check",
    "lelong_preservation_check",
    "reproducing_check",
]

GRAM_DEGREES = (2, 4, 6, 8)
COND_LIMIT = 1e12
H_FLOOR = 1e-3


@dataclass(frozen=True)
class BergmanResult:
    value: float
    method: str  # "circular" | "gram"
    truncation_degree: int = 0
    convergence_gap: float = 0.0
    condition_estimate: float = 0.0
    flagged: bool = False

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("kernel value at the origin must be positive")


@dataclass(frozen=True)
class WeightSpec:
    """Weight epsilon * phi with a spot-checked multicircularity flag."""

    phi: PshFunction
    epsilon: float = 1.0
    multicircular: Optional[bool] = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        flag = self.multicircular
        if flag is None:
            flag = self.phi.metadata.multicircular
        if flag:
            self._spot_check_phases()
        object.__setattr__(self, "multicircular", flag)

    def _spot_check_phases(self, tol: float = 1e-10):
        rng = np.random.default_rng(20)
        n = self.phi.dim
        r = rng.uniform(0.2, 0.8, n)
        base = float(self.phi(r.astype(complex)[None, :])[0])
        for _ in range(3):
            rot = r * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
            val = float(self.phi(rot[None, :])[0])
            if not (math.isinf(base) and math.isinf(val)) and abs(val - base) > tol * max(
                1.0, abs(base)
            ):
                raise ValueError(
                    f"{self.phi.name}: multicircular flag fails a phase spot-check"
                )

    @property
    def dim(self) -> int:
        return self.phi.dim

    def log_weight(self, z) -> np.ndarray:
        """log of e^{-eps*phi}, i.e. -eps*phi(z)."""
        return -self.epsilon * self.phi(z)


@dataclass(frozen=True)
class HessianCheckReport:
    h: float
    matrix: np.ndarray  # extrapolated mixed second derivatives at the origin
    target: np.ndarray  # diag(phi_{z_j zbar_j}(0) / 2)
    max_abs_dev: float


# ---------------------------------------------------------------------------
# kernel at the origin
# ---------------------------------------------------------------------------


def _weight_integral(w: WeightSpec, P: Polydisc, spec: QuadratureSpec):
    """integral over P of e^{-eps*phi}, stable in log form."""
    res = exp_mean_over_polydisc(
        lambda z: w.log_weight(z), P, spec, multicircular=bool(w.multicircular)
    )
    return res.value * P.volume, res


def _polar_grid_1d(rho: float, order: int, angular: int):
    """Plain area-measure polar rule on the disc of radius rho: weights are
    r dr dtheta per node, summing to pi rho^2."""
    xs, gw = _gl01(order)
    r = rho * xs
    wr = rho * gw * r
    theta = 2.0 * np.pi * np.arange(angular) / angular
    z = r[:, None] * np.exp(1j * theta[None, :])
    return z.ravel(), np.repeat(wr, angular) * (2.0 * np.pi / angular)


def _monomial_block(z: np.ndarray, d: int) -> np.ndarray:
    """M[k, a, b] = z_k^a * conj(z_k)^b for 0 <= a, b <= d."""
    powers = np.empty((z.size, d + 1), dtype=complex)
    powers[:, 0] = 1.0
    for a in range(1, d + 1):
        powers[:, a] = powers[:, a - 1] * z
    return powers[:, :, None] * np.conj(powers)[:, None, :]


def gram_matrix(w: WeightSpec, P: Polydisc, d: int, spec: QuadratureSpec = DEFAULT_SPEC):
    """Moment matrix G[alpha, beta] = integral of z^alpha conj(z)^beta e^{-eps phi}
    over P, for multi-indices with every component <= d.

    Row/column order is the lexicographic flattening of the per-coordinate
    index grid, so index 0 is the constant monomial.
    """
    n = P.dim
    if np.any(P.center != 0):
        raise ValueError("Gram assembly expects a polydisc centered at the origin")
    if n > 2:
        raise NotImplementedError(
            "Gram moments are assembled for n <= 2; multicircular weights of any "
            "dimension take the circular path"
        )
    order = max(24, 2 * spec.radial_nodes)
    angular = 1 << max(5, int(math.ceil(math.log2(2 * d + 4))))
    angular = max(angular, spec.angular_nodes)
    if n == 1:
        z, wz = _polar_grid_1d(float(P.radii[0]), order, angular)
        weight = np.exp(w.log_weight(z[:, None]))
        M = _monomial_block(z, d)
        G = np.einsum("k,kab->ab", wz * weight, M)
        return G.reshape((d + 1), (d + 1))
    z1, w1 = _polar_grid_1d(float(P.radii[0]), order, angular)
    z2, w2 = _polar_grid_1d(float(P.radii[1]), order, angular)
    pts = np.empty((z1.size, z2.size, 2), dtype=complex)
    pts[..., 0] = z1[:, None]
    pts[..., 1] = z2[None, :]
    weight = np.exp(w.log_weight(pts))
    E = (w1[:, None] * w2[None, :]) * weight
    M1 = _monomial_block(z1, d).reshape(z1.size, -1)
    M2 = _monomial_block(z2, d).reshape(z2.size, -1)
    T = np.tensordot(E, M2, axes=([1], [0]))  # (k1, a2b2)
    G4 = np.tensordot(M1, T, axes=([0], [0]))  # (a1b1, a2b2)
    m = d + 1
    G4 = G4.reshape(m, m, m, m)
    # combine to multi-index blocks: row (a1,a2), column (b1,b2)
    G = G4.transpose(0, 2, 1, 3).reshape(m * m, m * m)
    return G


def _unweighted_norms(P: Polydisc, d: int) -> np.ndarray:
    """||z^alpha||^2 on P without weight: prod pi rho^(2a+2)/(a+1)."""
    n = P.dim
    m = d + 1
    per = [np.pi * P.radii[j] ** (2 * np.arange(m) + 2) / (np.arange(m) + 1) for j in range(n)]
    out = per[0]
    for j in range(1, n):
        out = np.multiply.outer(out, per[j]).ravel()
    return out


def _gram_kernel_value(w: WeightSpec, P: Polydisc, d: int, spec: QuadratureSpec):
    G = gram_matrix(w, P, d, spec)
    norms = _unweighted_norms(P, d)
    D = 1.0 / np.sqrt(norms)
    Gs = D[:, None] * G * D[None, :]
    cond = float(np.linalg.cond(Gs))
    e0 = np.zeros(Gs.shape[0])
    e0[0] = 1.0
    flagged = False
    try:
        if cond > COND_LIMIT:
            raise np.linalg.LinAlgError
        L = np.linalg.cholesky(Gs)
        u = np.linalg.solve(np.conj(L.T), np.linalg.solve(L, e0))
    except np.linalg.LinAlgError:
        u, *_ = np.linalg.lstsq(Gs, e0, rcond=None)
        flagged = cond > COND_LIMIT
    value = float((D[0] ** 2 * u[0]).real)
    return value, cond, flagged


def bergman_origin(
    w: WeightSpec,
    P: Polydisc,
    spec: QuadratureSpec = DEFAULT_SPEC,
    method: Optional[str] = None,
) -> BergmanResult:
    """Weighted kernel value at the origin of a centered polydisc.

    Multicircular weights keep only the constant monomial at the origin, so
    the value is 1/integral(e^{-eps phi}); otherwise the truncated Gram
    matrix is inverted with the per-coordinate degree cap raised until the
    value stabilizes.
    """
    if np.any(P.center != 0):
        raise ValueError("kernel evaluation expects a polydisc centered at the origin")
    if w.dim != P.dim:
        raise ValueError("weight/polydisc dimension mismatch")
    total, res = _weight_integral(w, P, spec)
    if res.diverged or not np.isfinite(total) or total <= 0:
        raise ValueError("weight is not integrable on the polydisc")
    if method is None:
        method = "circular" if w.multicircular else "gram"
    if method == "circular":
        if not w.multicircular:
            raise ValueError("circular method requires a multicircular weight")
        return BergmanResult(1.0 / total, "circular")
    value_prev = None
    gap = np.inf
    value, cond, flagged = 1.0 / total, 0.0, False
    degree = GRAM_DEGREES[0]
    for d in GRAM_DEGREES:
        value, cond, flagged = _gram_kernel_value(w, P, d, spec)
        degree = d
        if value_prev is not None:
            gap = abs(value - value_prev) / max(abs(value), 1e-300)
            if gap <= max(spec.target_rel_error, 1e-10):
                break
        value_prev = value
    return BergmanResult(
        value,
        "gram",
        truncation_degree=degree,
        convergence_gap=float(gap if np.isfinite(gap) else 0.0),
        condition_estimate=cond,
        flagged=flagged or not np.isfinite(gap),
    )


# ---------------------------------------------------------------------------
# log-kernel of the dilation parameter
# ---------------------------------------------------------------------------


def _frozen_section(w: WeightSpec, keep: np.ndarray) -> WeightSpec:
    """Weight in the kept coordinates with the others frozen at 0."""
    phi = w.phi
    n = phi.dim
    keep = np.asarray(keep, dtype=int)

    def fn(zs):
        full = np.zeros(zs.shape[:-1] + (n,), dtype=complex)
        full[..., keep] = zs
        return phi.fn(full)

    sub = PshFunction(f"{phi.name}|{keep.tolist()}", keep.size, fn, phi.metadata)
    return WeightSpec(sub, w.epsilon, multicircular=w.multicircular)


def f_eval(w: WeightSpec, t, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """log K at the origin for the dilated weight eps*phi(t_1 z_1, ..., t_n z_n)
    on the unit polydisc, computed through the shrink-rescale identity: the
    kernel on the polydisc of radii |t_j| with the undilated weight, times the
    volume ratio.

    Depends on t only through (|t_1|, ..., |t_n|). Coordinates with t_j = 0
    freeze z_j = 0 in the weight and contribute a factor 1/pi; t = 0 gives
    eps*phi(0) - n log pi.
    """
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    n = w.dim
    if t.size != n:
        raise ValueError("dilation parameter has wrong dimension")
    radii = np.abs(t)
    if np.any(radii >= 1.0):
        raise ValueError("dilation parameters must satisfy |t_j| < 1")
    keep = np.flatnonzero(radii > 0)
    if keep.size == 0:
        return float(w.epsilon * w.phi.value(np.zeros(n)) - n * math.log(math.pi))
    ws = w if keep.size == n else _frozen_section(w, keep)
    P = Polydisc(np.zeros(keep.size), radii[keep])
    K = bergman_origin(ws, P, spec)
    return float(
        math.log(P.volume * K.value) - keep.size * math.log(math.pi)
        - (n - keep.size) * math.log(math.pi)
    )


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


def sandwich_check(w: WeightSpec, P: Polydisc, spec: QuadratureSpec = DEFAULT_SPEC, tol: float = 1e-9):
    """Two-sided bound for K(0) |P| e^{-sup psi} on a circular domain.

    lower = 1 / mean of e^{-(psi - sup psi)} over P, upper = 1; the middle
    K(0) |P| e^{-sup psi} must land in between.
    """
    psi_sup = w.epsilon * sup_on_region(w.phi, P, spec)[0]
    shifted = exp_mean_over_polydisc(
        lambda z: w.log_weight(z) + psi_sup, P, spec, multicircular=bool(w.multicircular)
    )
    lower = 1.0 / shifted.value
    K = bergman_origin(w, P, spec)
    middle = K.value * P.volume * math.exp(-psi_sup)
    passed = (lower <= middle + tol) and (middle <= 1.0 + tol)
    return {
        "lower": float(lower),
        "middle": float(middle),
        "upper": 1.0,
        "passed": bool(passed),
    }


def ot_check(w: WeightSpec, n: Optional[int] = None, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Margin of the sharp lower bound: K(0) - e^{eps phi(0)} / pi^n on the
    unit polydisc (nonnegative for psh weights, zero at phi = 0)."""
    n = w.dim if n is None else n
    if n != w.dim:
        raise ValueError("dimension mismatch")
    phi0 = w.phi.value(np.zeros(n))
    if not np.isfinite(phi0):
        raise ValueError("the weight must be finite at the origin")
    K = bergman_origin(w, Polydisc(np.zeros(n), np.ones(n)), spec)
    return float(K.value - math.exp(w.epsilon * phi0) / math.pi**n)


def monotonicity_check(
    w: WeightSpec, t_path: Sequence, spec: QuadratureSpec = DEFAULT_SPEC, tol: float = 1e-8
):
    """Along a path of dilation parameters with coordinatewise nondecreasing
    moduli: the log-kernel stays above its t -> 0 limit eps*phi(0) - n log pi,
    and is nondecreasing for multicircular weights."""
    n = w.dim
    phi0 = w.phi.value(np.zeros(n))
    floor = (w.epsilon * phi0 - n * math.log(math.pi)) if np.isfinite(phi0) else -np.inf
    values = [f_eval(w, t, spec) for t in t_path]
    above = all(v >= floor - tol for v in values)
    monotone = True
    if w.multicircular:
        monotone = all(b >= a - tol for a, b in zip(values, values[1:]))
    return {
        "values": values,
        "floor": float(floor),
        "above_floor": bool(above),
        "monotone": bool(monotone),
        "passed": bool(above and monotone),
    }


# ---------------------------------------------------------------------------
# Hessian limit
# ---------------------------------------------------------------------------


def hessian_limit_check(
    w: WeightSpec, h_values: Sequence[float] = (0.2, 0.1, 0.05), spec: QuadratureSpec = DEFAULT_SPEC
) -> HessianCheckReport:
    """Finite-difference mixed second derivatives of the log-kernel in the
    dilation parameter, extrapolated to t = 0.

    Stencils sit at the center c = 2h (1,...,1): the diagonal uses the
    5-point complex Laplacian, off-diagonal entries use the four real cross
    stencils. One Richardson step over the trailing pair of h values removes
    the joint O(h^2) error. The limit must be diag(phi_{z_j zbar_j}(0)/2):
    phase information of the weight drops out entirely.
    """
    phi = w.phi
    if phi.metadata.hessian_at is None:
        raise ValueError("hessian_limit_check needs a smooth catalog weight")
    n = phi.dim
    h_values = sorted(float(h) for h in h_values)
    if h_values[0] < H_FLOOR:
        raise ValueError(f"h floor is {H_FLOOR}: the shrunk polydisc must be nonempty")
    cache: dict[tuple, float] = {}

    def F(tvec) -> float:
        radii = np.round(np.abs(np.asarray(tvec, dtype=complex)), 15)
        key = tuple(radii.tolist())
        if key not in cache:
            cache[key] = f_eval(w, radii.astype(complex), spec)
        return cache[key]

    def estimate(h: float) -> np.ndarray:
        c = 2.0 * h * np.ones(n, dtype=complex)
        H = np.zeros((n, n), dtype=complex)
        Fc = F(c)
        for j in range(n):
            acc = 0.0
            for dz in (h, -h, 1j * h, -1j * h):
                t = c.copy()
                t[j] += dz
                acc += F(t)
            H[j, j] = 0.25 * (acc - 4.0 * Fc) / h**2
        for j in range(n):
            for k in range(j + 1, n):
                def cross(du, dv):
                    s = 0.0
                    for su in (1.0, -1.0):
                        for sv in (1.0, -1.0):
                            t = c.copy()
                            t[j] += su * du
                            t[k] += sv * dv
                            s += su * sv * F(t)
                    return s / (4.0 * h**2)

                dxx = cross(h, h)
                dyy = cross(1j * h, 1j * h)
                dxy = cross(h, 1j * h)
                dyx = cross(1j * h, h)
                H[j, k] = 0.25 * ((dxx + dyy) + 1j * (dxy - dyx))
                H[k, j] = np.conj(H[j, k])
        return H

    estimates = [estimate(h) for h in h_values]
    if len(estimates) >= 2:
        # Richardson over the smallest pair (h, 2h) assuming O(h^2) error
        extrap = (4.0 * estimates[0] - estimates[1]) / 3.0
    else:
        extrap = estimates[0]
    target = np.diag(np.diag(phi.metadata.hessian_at(np.zeros(n)))) * 0.5
    dev = float(np.max(np.abs(extrap - target)))
    return HessianCheckReport(
        h=h_values[0], matrix=extrap, target=target, max_abs_dev=dev
    )


# ---------------------------------------------------------------------------
# Lelong-number preservation
# ---------------------------------------------------------------------------


def lelong_preservation_check(
    w_phi: PshFunction,
    exponents,
    eps_values: Sequence[float],
    r_grid: Sequence[float],
    spec: QuadratureSpec = DEFAULT_SPEC,
    rel_tol: float = 0.05,
):
    """Directional Lelong slopes of the weight and of the rescaled log-kernel.

    The right side is the slope of sup phi over the anisotropic boxes; the
    left side fits F(eps phi)(corner)/eps against log r, where the corner
    t_j = r^{a_j} carries the supremum since F depends only on the moduli and
    grows with them. Reports the largest epsilon whose slopes agree within
    rel_tol; none agreeing sets flagged.
    """
    a = np.atleast_1d(np.asarray(exponents, dtype=float))
    rhs = directional_lelong(w_phi, a, r_grid, spec)
    logr = np.log(np.asarray(sorted(r_grid), dtype=float))
    eps_sorted = sorted(eps_values, reverse=True)
    best = None
    fits = {}
    for eps in eps_sorted:
        w = WeightSpec(w_phi, eps)
        vals = []
        ok = True
        for r in sorted(r_grid):
            corner = (r ** a).astype(complex)
            try:
                vals.append(f_eval(w, corner, spec) / eps)
            except ValueError:
                ok = False
                break
        if not ok:
            continue
        slope, intercept = np.polyfit(logr, vals, 1)
        resid = np.asarray(vals) - (slope * logr + intercept)
        fit = SlopeFit(
            slope=float(slope),
            intercept=float(intercept),
            residual_rms=float(np.sqrt(np.mean(resid**2))),
            r_values=tuple(sorted(r_grid)),
        )
        fits[eps] = fit
        if abs(fit.slope - rhs.slope) <= rel_tol * max(abs(rhs.slope), 1e-12):
            if best is None or eps > best:
                best = eps
    return {
        "rhs_slope": rhs,
        "lhs_slope": fits.get(best),
        "lhs_fits": fits,
        "eps_used": best,
        "flagged": best is None,
    }


# ---------------------------------------------------------------------------
# reproducing property
# ---------------------------------------------------------------------------


def reproducing_check(
    w: WeightSpec, P: Polydisc, d: int = 4, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Max deviation of integral(z^beta conj(K(z,0)) e^{-psi}) from the unit
    vector over the truncated monomial span."""
    G = gram_matrix(w, P, d, spec)
    e0 = np.zeros(G.shape[0])
    e0[0] = 1.0
    x = np.linalg.solve(G, e0)
    check = G @ np.conj(x)
    return float(np.max(np.abs(check - e0)))
