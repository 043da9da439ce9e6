# Deterministic high-accuracy means over polydiscs, Shilov tori, segments
# and convex polytopes, with explicit error estimates.
#
# Layout of the machinery:
#   * adaptive_line_integral: panel-splitting Gauss-Legendre on a real
#     interval; integrable log poles are isolated by bisection (40 levels).
#   * periodic_mean: trapezoid mean over a circle with node doubling that
#     reuses previous evaluations (spectrally accurate for smooth data).
#   * polydisc means: iterated radial-angular products per factor; a fast
#     radial-only path handles multicircular integrands on centered
#     polydiscs in logarithmic radial coordinates.
#   * polytope means: seeded stratified Monte Carlo with hull rejection.

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .catalog import PshFunction
from .regions import ConvexPolytope, Polydisc, Segment, complex_to_real, real_to_complex

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "mean_over_polydisc",
    "mean_over_shilov",
    "mean_over_segment",
    "mean_over_polytope",
    "adaptive_line_integral",
    "periodic_mean",
]

BLOWUP_CUTOFF = 1e30  # values beyond this magnitude are treated as singular
_MAX_BISECT_DEPTH = 40


def _next_pow2(n: int) -> int:
    return 1 << (int(n) - 1).bit_length()


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts, tolerances and seeding for all integration routines."""

    radial_nodes: int = 12
    angular_nodes: int = 32
    target_rel_error: float = 1e-9
    max_refinements: int = 6
    mc_samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.radial_nodes < 4:
            raise ValueError("radial_nodes must be >= 4")
        if self.angular_nodes < 8:
            raise ValueError("angular_nodes must be >= 8")
        if self.target_rel_error < 1e-13:
            raise ValueError("target_rel_error must be >= 1e-13")
        # angular refinement doubles nodes and reuses old ones; keep powers of 2
        object.__setattr__(self, "angular_nodes", _next_pow2(self.angular_nodes))


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float
    nodes_used: int
    refinements: int
    converged: bool = True
    diverged: bool = False

    def __post_init__(self):
        if self.abs_error_estimate < 0:
            raise ValueError("abs_error_estimate must be nonnegative")


# ---------------------------------------------------------------------------
# 1-D building blocks
# ---------------------------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [0, 1]."""
    rule = _GL_CACHE.get(order)
    if rule is None:
        x, w = np.polynomial.legendre.leggauss(order)
        rule = (0.5 * (x + 1.0), 0.5 * w)
        _GL_CACHE[order] = rule
    return rule


def _clean(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero out singular samples, returning (cleaned, bad_mask)."""
    bad = ~np.isfinite(vals) | (np.abs(vals) > BLOWUP_CUTOFF)
    if np.any(bad):
        vals = np.where(bad, 0.0, vals)
    return vals, bad


def _clean_log(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sanitize log-scale samples: -inf is a legitimate zero contribution."""
    bad = np.isnan(vals) | (vals == np.inf)
    if np.any(bad):
        vals = np.where(bad, -np.inf, vals)
    return vals, bad


def adaptive_line_integral(
    g,
    lo: float,
    hi: float,
    *,
    order: int = 12,
    abs_tol: float = 1e-12,
    max_panels: int = 4000,
    with_error_channel: bool = False,
    breakpoints=None,
):
    """Integral of g over [lo, hi] by adaptive panel-splitting Gauss-Legendre.

    g must be vectorized; singular samples (non-finite or beyond the blowup
    cutoff) trigger geometric bisection toward the singular point, up to 40
    levels, after which the vanishing panel is absorbed into the error bar.
    With ``with_error_channel`` g returns (values, pointwise_errors) and the
    integrated error channel is added to the estimate.

    Returns (value, error_estimate, n_evals, converged).
    """
    span = hi - lo
    if span <= 0:
        raise ValueError("empty integration interval")
    xs, ws = _gl01(order)
    if breakpoints is None:
        breakpoints = []

    def rule(a, b):
        # a, b: (P,) panel bounds -> nodes (P, k), weights (P, k)
        wid = (b - a)[:, None]
        return a[:, None] + wid * xs[None, :], wid * ws[None, :]

    def evaluate(a, b):
        n1, w1 = rule(a, b)
        mid = 0.5 * (a + b)
        n2a, w2a = rule(a, mid)
        n2b, w2b = rule(mid, b)
        nodes = np.concatenate([n1, n2a, n2b], axis=1)
        if with_error_channel:
            hints = np.abs(np.concatenate([w1, w2a, w2b], axis=1))
            vals, errs = g(nodes.ravel(), hints.ravel())
            errs = np.asarray(errs, dtype=float).reshape(nodes.shape)
        else:
            vals, errs = g(nodes.ravel()), None
        vals = np.asarray(vals, dtype=float).reshape(nodes.shape)
        vals, bad = _clean(vals)
        k = order
        coarse = np.sum(w1 * vals[:, :k], axis=1)
        fine = np.sum(w2a * vals[:, k : 2 * k], axis=1) + np.sum(
            w2b * vals[:, 2 * k :], axis=1
        )
        err = np.abs(fine - coarse)
        singular = bad.any(axis=1)
        echan = np.zeros_like(err)
        if errs is not None:
            errs, _ = _clean(errs)
            echan = np.sum(w1 * errs[:, :k], axis=1)
        return fine, err, singular, echan, nodes.size

    cuts = np.array(
        sorted({lo, hi, *(float(b) for b in breakpoints if lo < b < hi)})
    )
    pending_a = cuts[:-1].copy()
    pending_b = cuts[1:].copy()
    depth = np.zeros(pending_a.size, dtype=int)
    total, total_err, n_evals = 0.0, 0.0, 0
    converged = True
    panels_done = 0

    while pending_a.size:
        vals, errs, singular, echan, ne = evaluate(pending_a, pending_b)
        n_evals += ne
        width = pending_b - pending_a
        budget = abs_tol * np.maximum(width / span, 1e-6)
        at_floor = (depth >= _MAX_BISECT_DEPTH) | (width < 1e-15 * span)
        accept = ((errs <= budget) & ~singular) | at_floor
        if panels_done + pending_a.size > max_panels:
            accept[:] = True
            converged = False
        sel = accept
        total += float(np.sum(vals[sel]))
        # panels cut off at the bisection floor contribute their width-scaled
        # magnitude to the error bar (integrable singularities vanish with it)
        floor_pen = np.where(at_floor & singular, width * 1.0, 0.0)
        total_err += float(np.sum(errs[sel] + echan[sel] + floor_pen[sel]))
        panels_done += int(np.sum(sel))
        keep = ~accept
        a, b, d = pending_a[keep], pending_b[keep], depth[keep]
        mid = 0.5 * (a + b)
        pending_a = np.concatenate([a, mid])
        pending_b = np.concatenate([mid, b])
        depth = np.concatenate([d + 1, d + 1])
    return total, total_err, n_evals, converged


def periodic_mean(g, base_nodes: int, rel_tol: float, max_doublings: int):
    """Mean of g over [0, 2*pi) by the trapezoid rule with node doubling.

    Doubling reuses previous samples; the error estimate is the last
    successive difference. Returns (value, error_estimate, n_evals).
    """
    m = base_nodes
    theta = 2.0 * np.pi * np.arange(m) / m
    vals, bad = _clean(np.asarray(g(theta), dtype=float))
    acc = float(np.sum(vals))
    nbad = int(np.sum(bad))
    value = acc / m
    n_evals = m
    err = abs(value) + 1.0
    for _ in range(max_doublings):
        theta_new = theta + np.pi / m
        vals, bad = _clean(np.asarray(g(theta_new), dtype=float))
        acc += float(np.sum(vals))
        nbad += int(np.sum(bad))
        m *= 2
        theta = 2.0 * np.pi * np.arange(m) / m
        new_value = acc / m
        n_evals += m // 2
        err = abs(new_value - value)
        value = new_value
        if err <= max(rel_tol * abs(value), 1e-15):
            break
    if nbad:
        err += nbad / m * 10.0
    return value, err, n_evals


# ---------------------------------------------------------------------------
# polydisc means
# ---------------------------------------------------------------------------


def _is_centered_multicircular(f, center) -> bool:
    return bool(
        isinstance(f, PshFunction)
        and f.metadata.multicircular
        and np.all(np.asarray(center) == 0)
    )


# geometric layer boundaries for logarithmic radial coordinates t = log(r/R)
_BASE_BREAKS = np.array([0.0, -0.5, -1.0, -1.5, -2.0, -3.0, -4.0, -6.0, -8.0])


def _log_radial_rule(depth_limit: float, order: int):
    """Nodes/weights for the measure d(e^{2t}) on (depth_limit, 0]."""
    breaks = [b for b in _BASE_BREAKS if b >= depth_limit - 1e-12]
    b = -8.0
    while b > depth_limit:
        b = max(b * 1.5, depth_limit)
        breaks.append(b)
    breaks = np.array(sorted(set(breaks)))
    xs, ws = _gl01(order)
    t_nodes, t_weights = [], []
    for a, bb in zip(breaks[:-1], breaks[1:]):
        t = a + (bb - a) * xs
        t_nodes.append(t)
        t_weights.append((bb - a) * ws * 2.0 * np.exp(2.0 * t))
    return np.concatenate(t_nodes), np.concatenate(t_weights)


def _multicircular_radial_mean(fr, radii: np.ndarray, spec: QuadratureSpec, log_form=False):
    """Mean of a multicircular integrand over a centered polydisc.

    fr maps arrays of radius vectors, shape (..., n) >= 0, to values (or to
    log-values when log_form is set, which keeps exponential means stable).
    Works in t_j = log(r_j / R_j); layers extend toward -inf until their
    contribution is negligible, stagnates (non-convergence) or grows
    (divergence).
    """
    n = radii.size
    tol = spec.target_rel_error
    value_prev = None
    n_evals = 0
    refinements = 0
    diverged = False
    converged = False
    depth = -8.0
    order = max(6, spec.radial_nodes)
    layer_masses = []
    value = 0.0
    err = np.inf
    for _ in range(40):
        t, w = _log_radial_rule(depth, order)
        new_value, ne = _log_rule_tensor_sum(fr, radii, t, w, log_form)
        n_evals += ne
        if value_prev is not None:
            layer_masses.append(abs(new_value - value))
        value = new_value
        scale = max(abs(value), 1e-300)
        # divergence: deepest layers keep contributing more and more mass
        if len(layer_masses) >= 3 and layer_masses[-1] > max(
            layer_masses[-2], tol * scale
        ) and layer_masses[-2] > max(layer_masses[-3], tol * scale):
            diverged = True
            break
        if value_prev is not None and layer_masses[-1] <= 0.25 * tol * scale:
            # tail resolved; refine the panel order for the final estimate
            t2, w2 = _log_radial_rule(depth, order * 2)
            refined, ne2 = _log_rule_tensor_sum(fr, radii, t2, w2, log_form)
            n_evals += ne2
            err = abs(refined - value) + layer_masses[-1]
            value = refined
            refinements += 1
            converged = err <= max(tol * abs(value), 1e-14)
            if converged or refinements >= spec.max_refinements:
                break
            order *= 2
            continue
        value_prev = value
        depth *= 1.6
    return IntegralResult(
        value,
        err if np.isfinite(err) else abs(value),
        n_evals,
        refinements,
        converged and not diverged,
        diverged,
    )


def _log_rule_tensor_sum(fr, radii, t, w, log_form):
    """Tensor contraction of the logarithmic-radial rule against fr."""
    n = radii.size
    grids = np.meshgrid(*([t] * n), indexing="ij")
    r = np.stack([radii[j] * np.exp(grids[j]) for j in range(n)], axis=-1)
    raw = np.asarray(fr(r), dtype=float)
    if log_form:
        vals, _ = _clean_log(raw)
        logw = np.zeros(raw.shape)
        with np.errstate(divide="ignore"):
            for j in range(n):
                shape = [1] * n
                shape[j] = -1
                logw = logw + np.log(w).reshape(shape)
        with np.errstate(over="ignore"):
            total = float(np.sum(np.exp(vals + logw)))
    else:
        vals, _ = _clean(raw)
        wgrid = np.ones_like(vals)
        for j in range(n):
            shape = [1] * n
            shape[j] = -1
            wgrid = wgrid * w.reshape(shape)
        total = float(np.sum(wgrid * vals))
    return total, raw.size


def _angular_means_batch(
    f1, center: complex, c_arr, base: int, rel_tol: float, max_doublings: int, abs_tols=None
):
    """Trapezoid circle means of f1 around `center` for a batch of radii.

    Doubling reuses samples; rows that have converged (relative tolerance, or
    their per-row absolute budget from the radial weights) are frozen so that
    a few hard radii near a singular circle do not inflate the whole batch.
    Returns (values, errors, n_evals) with one entry per radius.
    """
    B = c_arr.size
    if abs_tols is None:
        abs_tols = np.full(B, 1e-15)
    m = base
    theta = 2.0 * np.pi * np.arange(m) / m
    pts = center + c_arr[:, None] * np.exp(1j * theta[None, :])
    vals, bad = _clean(np.asarray(f1(pts), dtype=float))
    acc = vals.sum(axis=1)
    nbad = bad.sum(axis=1).astype(float)
    value = acc / m
    n_evals = pts.size
    err = np.abs(value) + 1.0
    active = np.ones(B, dtype=bool)
    for _ in range(max_doublings):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pts = center + c_arr[idx, None] * np.exp(1j * (theta + np.pi / m)[None, :])
        vals, bad = _clean(np.asarray(f1(pts), dtype=float))
        acc[idx] += vals.sum(axis=1)
        nbad[idx] = nbad[idx] + bad.sum(axis=1)
        m *= 2
        theta = 2.0 * np.pi * np.arange(m) / m
        new_value = acc[idx] / m
        n_evals += pts.size
        err[idx] = np.abs(new_value - value[idx])
        value[idx] = new_value
        active[idx] = err[idx] > np.maximum(
            np.maximum(rel_tol * np.abs(value[idx]), abs_tols[idx]), 1e-15
        )
    err = err + np.where(nbad > 0, nbad / m * 10.0, 0.0)
    return value, err, n_evals


def _radial_breaks(R: float, anchors, levels: int) -> list[float]:
    """Panel breakpoints on [0, R]: geometric grading toward 0 and toward
    every interior radius where the integrand may lose smoothness."""
    pts = {0.0, R}
    for k in range(1, levels + 1):
        pts.add(R * 2.0 ** (-k))
    for a in anchors:
        a = float(a)
        if not (1e-300 * R < a < R * (1.0 - 1e-12)):
            continue
        h = min(a, R - a)
        pts.add(a)
        for k in range(0, levels + 1):
            lo_, hi_ = a - h * 2.0 ** (-k), a + h * 2.0 ** (-k)
            if lo_ > 1e-300 * R:
                pts.add(lo_)
            if hi_ < R * (1.0 - 1e-15):
                pts.add(hi_)
    return sorted(pts)


def _disc_mean_1d(
    f1, center: complex, radius: float, spec: QuadratureSpec, rel_tol: float, anchors=None
):
    """Mean over a single disc: radial Gauss-Legendre x doubling trapezoid angle.

    With known singular radii (`anchors`) a fixed graded composite rule is run
    at two resolutions and the successive difference is the error estimate;
    otherwise the radius is handled by the generic adaptive integrator.
    f1 maps a complex array to values. Returns (value, err, n_evals, converged).
    """
    if anchors is not None:
        return _disc_mean_fixed(f1, center, radius, anchors, spec, rel_tol)
    counter = [0]
    a_base = spec.angular_nodes
    a_max_doubles = spec.max_refinements + 1
    inner_rel = rel_tol * 0.1

    # fixed coarse pass sets the absolute budget, the adaptive pass does the work
    v0 = _fixed_disc_estimate(f1, center, radius)
    abs_tol = max(rel_tol * max(abs(v0), 1e-3), 1e-14)

    def radial_pair(c_arr, w_arr):
        scale = 2.0 * c_arr / radius**2
        share = float(np.sum(scale * w_arr))
        # per-row angular budget: uniform share, relaxed for tiny-weight rows
        row_tols = 0.3 * abs_tol * np.maximum(
            1.0 / max(share, 1e-300), 1.0 / np.maximum(64.0 * scale * w_arr, 1e-300)
        )
        vals, errs, ne = _angular_means_batch(
            f1, center, c_arr, a_base, inner_rel, a_max_doubles, abs_tols=row_tols
        )
        counter[0] += ne
        return vals * scale, errs * scale

    v, e, ne, conv = adaptive_line_integral(
        radial_pair, 0.0, radius, order=spec.radial_nodes,
        abs_tol=abs_tol, with_error_channel=True,
    )
    return v, e, ne + counter[0], conv


def _disc_mean_fixed(f1, center: complex, radius: float, anchors, spec, rel_tol: float):
    """Two-resolution graded composite disc mean with known singular radii."""
    levels = int(min(16, max(7, math.ceil(-0.55 * math.log2(rel_tol)))))
    breaks = _radial_breaks(radius, anchors, levels)
    order = max(8, spec.radial_nodes)
    results = []
    n_evals = 0
    v0 = _fixed_disc_estimate(f1, center, radius)
    abs_tol = max(rel_tol * max(abs(v0), 1e-3), 1e-14)
    for order_p, ang_p in ((order, spec.angular_nodes), (order + 3, 2 * spec.angular_nodes)):
        xs, ws = _gl01(order_p)
        b = np.asarray(breaks)
        wid = np.diff(b)
        c = (b[:-1, None] + wid[:, None] * xs[None, :]).ravel()
        w = (wid[:, None] * ws[None, :]).ravel() * 2.0 * c / radius**2
        share = float(np.sum(np.abs(w)))
        row_tols = 0.3 * abs_tol * np.maximum(
            1.0 / max(share, 1e-300), 1.0 / np.maximum(64.0 * np.abs(w), 1e-300)
        )
        vals, errs, ne = _angular_means_batch(
            f1, center, c, ang_p, rel_tol * 0.1, spec.max_refinements, abs_tols=row_tols
        )
        n_evals += ne
        results.append((float(np.sum(w * vals)), float(np.sum(np.abs(w) * errs))))
    v_fine, chan = results[1]
    err = abs(v_fine - results[0][0]) + chan
    return v_fine, err, n_evals, err <= 10.0 * max(abs_tol, rel_tol * abs(v_fine))


def _fixed_disc_estimate(f1, center: complex, radius: float) -> float:
    """Cheap non-adaptive disc mean used only to scale tolerance budgets."""
    xs, ws = _gl01(16)
    c = radius * xs
    theta = 2.0 * np.pi * np.arange(32) / 32
    pts = center + c[:, None] * np.exp(1j * theta[None, :])
    vals, _ = _clean(np.asarray(f1(pts), dtype=float))
    return float(np.sum(ws * 2.0 * xs * vals.mean(axis=1)))


def _polar_rule(R: float, order: int, breaks, angular: int):
    """Composite polar mean rule for one disc factor.

    Radial weights carry the normalized measure 2 r dr / R^2.
    """
    xs, ws = _gl01(order)
    breaks = np.asarray(breaks, dtype=float)
    r_nodes, r_weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        r = a + (b - a) * xs
        r_nodes.append(r)
        r_weights.append((b - a) * ws * 2.0 * r / R**2)
    theta = 2.0 * np.pi * np.arange(angular) / angular
    return np.concatenate(r_nodes), np.concatenate(r_weights), theta


def _tensor_polydisc_mean(
    f_eval, center, radii, spec: QuadratureSpec, rel_tol: float,
    anchors_per_coord=None, log_form: bool = False,
):
    """Flat tensor-product polydisc mean for n >= 2 factors.

    Per factor: composite Gauss-Legendre radius (geometric grading toward the
    center and toward known singular radii) x equispaced angles; refinement
    doubles the angles and bumps the radial order until successive values
    agree within tolerance.
    """
    n = len(radii)
    rel_tol = max(rel_tol, 1e-9)
    levels = int(min(12, max(4, math.ceil(0.55 * math.log2(1.0 / rel_tol)))))
    order = max(4, spec.radial_nodes // 2)
    angular = max(8, spec.angular_nodes // 2)
    if anchors_per_coord is None:
        anchors_per_coord = [()] * n
    value_prev = None
    n_evals = 0
    err = np.inf
    value = np.nan
    node_budget = 6e7
    for k in range(spec.max_refinements + 1):
        nodes_1d, weights_1d = [], []
        for j in range(n):
            breaks = _radial_breaks(float(radii[j]), anchors_per_coord[j], levels)
            r, wr, theta = _polar_rule(float(radii[j]), order + k, breaks, angular)
            z = center[j] + r[:, None] * np.exp(1j * theta[None, :])
            nodes_1d.append(z.ravel())
            weights_1d.append(np.repeat(wr, angular) / angular)
        level_nodes = int(np.prod([float(len(x)) for x in nodes_1d]))
        if level_nodes > node_budget:
            break
        value = _contract_tensor(f_eval, nodes_1d, weights_1d, log_form=log_form)
        n_evals += level_nodes
        if value_prev is not None:
            err = abs(value - value_prev)
            if err <= max(rel_tol * abs(value), 1e-13):
                return value, err, n_evals, True
        value_prev = value
        angular *= 2
    return value, err, n_evals, False


def _contract_tensor(f_eval, nodes_1d, weights_1d, chunk: int = 1 << 21, log_form=False):
    """sum_i w_i f(z_i) over the tensor grid, evaluated in flat chunks."""
    n = len(nodes_1d)
    sizes = [len(x) for x in nodes_1d]
    if n == 2 and not log_form:
        n1, n2 = sizes
        block = max(1, chunk // max(n2, 1))
        acc = 0.0
        z2 = nodes_1d[1]
        for start in range(0, n1, block):
            z1 = nodes_1d[0][start : start + block]
            pts = np.empty((z1.size, n2, 2), dtype=complex)
            pts[..., 0] = z1[:, None]
            pts[..., 1] = z2[None, :]
            vals, _ = _clean(np.asarray(f_eval(pts), dtype=float))
            acc += float(
                weights_1d[0][start : start + block] @ vals @ weights_1d[1]
            )
        return acc
    total = int(np.prod(sizes))
    acc = 0.0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coords = np.unravel_index(idx, sizes)
        pts = np.stack([nodes_1d[j][coords[j]] for j in range(n)], axis=-1)
        raw = np.asarray(f_eval(pts), dtype=float)
        if log_form:
            vals, _ = _clean_log(raw)
            logw = np.zeros(idx.size)
            for j in range(n):
                logw += np.log(np.abs(weights_1d[j][coords[j]]))
            with np.errstate(over="ignore"):
                acc += float(np.sum(np.exp(vals + logw)))
        else:
            vals, _ = _clean(raw)
            w = np.ones(idx.size)
            for j in range(n):
                w *= weights_1d[j][coords[j]]
            acc += float(np.sum(w * vals))
    return acc


def mean_over_polydisc(f, P: Polydisc, spec: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """(1/|P|) * integral of f over the polydisc P.

    Multicircular integrands on centered polydiscs reduce to a radial tensor
    integral in logarithmic coordinates; otherwise each factor contributes an
    adaptive Gauss-Legendre radius times a doubling trapezoid angle.
    """
    if isinstance(f, PshFunction) and f.dim != P.dim:
        raise ValueError("function/polydisc dimension mismatch")
    feval = f.fn if isinstance(f, PshFunction) else f
    if _is_centered_multicircular(f, P.center):
        _spot_check_multicircular(f, P)
        return _multicircular_radial_mean(lambda r: f(r.astype(complex)), P.radii, spec)
    anchors = _singular_anchor_radii(f, P)
    if P.dim == 1:
        v, e, ne, conv = _disc_mean_1d(
            lambda z: feval(z[..., None]),
            complex(P.center[0]),
            float(P.radii[0]),
            spec,
            spec.target_rel_error,
            anchors=None if anchors is None else anchors[0],
        )
        return IntegralResult(v, e, ne, 1, conv)
    v, e, ne, conv = _tensor_polydisc_mean(
        feval, P.center, P.radii, spec, spec.target_rel_error,
        anchors_per_coord=anchors,
    )
    return IntegralResult(v, e, ne, 1, conv)


def _singular_anchor_radii(f, P: Polydisc):
    """Radii |center_j - s| of known singular coordinate values, per factor.

    None when the function carries no singularity metadata (generic callables
    fall back to fully adaptive handling in one dimension).
    """
    if not (isinstance(f, PshFunction) and f.metadata.coord_singularities is not None):
        return None
    anchors = [[] for _ in range(P.dim)]
    for j, sing in enumerate(f.metadata.coord_singularities):
        anchors[j] = [abs(P.center[j] - s) for s in sing]
    return anchors


def _spot_check_multicircular(f, P: Polydisc, tol: float = 1e-10):
    rng = np.random.default_rng(714)
    r = 0.7 * P.radii
    base = f(r.astype(complex)[None, :])[0]
    for _ in range(2):
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, P.dim))
        rot = f((r * phases)[None, :])[0]
        if not (np.isinf(base) and np.isinf(rot)) and abs(rot - base) > tol * max(
            1.0, abs(base)
        ):
            raise ValueError(f"{f.name}: multicircular metadata fails a phase spot-check")


def exp_mean_over_polydisc(
    log_f,
    P: Polydisc,
    spec: QuadratureSpec = DEFAULT_SPEC,
    multicircular: bool = False,
) -> IntegralResult:
    """(1/|P|) * integral of exp(log_f) over P, stable for huge integrands.

    log_f returns the logarithm of the (nonnegative) integrand; the weighted
    sum is assembled as exp(log value + log weight) so exponential means near
    an integrability threshold neither overflow nor get clipped. Divergence
    shows up as growing radial tail layers and sets the `diverged` flag.
    """
    if multicircular and np.all(P.center == 0):
        return _multicircular_radial_mean(
            lambda r: log_f(r.astype(complex)), P.radii, spec, log_form=True
        )
    if P.dim == 1:
        def g(z):
            with np.errstate(over="ignore"):
                return np.exp(np.minimum(log_f(z), 700.0))

        v, e, ne, conv = _disc_mean_1d(
            lambda z: g(z[..., None]), complex(P.center[0]), float(P.radii[0]),
            spec, spec.target_rel_error,
        )
        return IntegralResult(v, e, ne, 1, conv)
    v, e, ne, conv = _tensor_polydisc_mean(
        log_f, P.center, P.radii, spec, spec.target_rel_error, log_form=True
    )
    return IntegralResult(v, e, ne, 1, conv)


def mean_over_shilov(f, P: Polydisc, spec: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """Mean of f over the distinguished boundary {|z_j - c_j| = r_j}.

    n-fold trapezoid over the torus with node doubling; spectrally accurate
    for integrands smooth in the angles.
    """
    if isinstance(f, PshFunction) and f.dim != P.dim:
        raise ValueError("function/polydisc dimension mismatch")
    n = P.dim
    feval = f.fn if isinstance(f, PshFunction) else f
    if _is_centered_multicircular(f, P.center):
        _spot_check_multicircular(f, P)
        return IntegralResult(float(f(P.radii.astype(complex)[None, :])[0]), 0.0, 1, 0)
    if n == 1:
        v, e, ne = periodic_mean(
            lambda th: feval((P.center[0] + P.radii[0] * np.exp(1j * th))[..., None]),
            spec.angular_nodes,
            spec.target_rel_error,
            spec.max_refinements + 4,
        )
        return IntegralResult(v, e, ne, 0, e <= max(spec.target_rel_error * abs(v), 1e-12))

    m = spec.angular_nodes
    value_prev = None
    n_evals = 0
    err = np.inf
    for k in range(spec.max_refinements + 1):
        theta = 2.0 * np.pi * np.arange(m) / m
        grids = np.meshgrid(*([theta] * n), indexing="ij")
        pts = np.stack(
            [P.center[j] + P.radii[j] * np.exp(1j * grids[j]) for j in range(n)],
            axis=-1,
        )
        vals, bad = _clean(np.asarray(feval(pts), dtype=float))
        value = float(np.mean(vals))
        n_evals += vals.size
        if value_prev is not None:
            err = abs(value - value_prev)
            if err <= max(spec.target_rel_error * abs(value), 1e-13):
                return IntegralResult(value, err, n_evals, k, True)
        value_prev = value
        m *= 2
    return IntegralResult(value_prev, err, n_evals, spec.max_refinements, False)


# ---------------------------------------------------------------------------
# segments and polytopes
# ---------------------------------------------------------------------------


def mean_over_segment(f, seg: Segment, spec: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """t-average over [0,1] of f(a(1-t) + b t), log singularities allowed."""
    feval = f.fn if isinstance(f, PshFunction) else f

    def g(t):
        return feval(seg.point(t)[..., None])

    v0, _, ne0, _ = adaptive_line_integral(g, 0.0, 1.0, order=8, abs_tol=1e-4)
    abs_tol = max(spec.target_rel_error * max(abs(v0), 1e-3), 1e-14)
    v, e, ne, conv = adaptive_line_integral(
        g, 0.0, 1.0, order=max(10, spec.radial_nodes), abs_tol=abs_tol
    )
    return IntegralResult(v, e, ne + ne0, 2, conv)


def mean_over_polytope(f, A: ConvexPolytope, spec: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """Stratified Monte Carlo mean over a full-dimensional convex polytope.

    Samples the bounding box with hull rejection; the error estimate is three
    times the ratio-estimator standard error. Identical (spec, seed) gives a
    bit-identical result.
    """
    feval = f.fn if isinstance(f, PshFunction) else f
    lo, hi = A.bounding_box
    d = lo.size
    rng = np.random.default_rng(spec.seed)
    m = max(1, int(64 ** (1.0 / d)))
    cells = m**d
    per_cell = max(16, int(math.ceil(spec.mc_samples / cells)))
    edges = [np.linspace(lo[j], hi[j], m + 1) for j in range(d)]

    total_h = total_g = 0.0
    sum_h2 = sum_g2 = sum_hg = 0.0
    n_total = 0
    for idx in np.ndindex(*([m] * d)):
        cell_lo = np.array([edges[j][idx[j]] for j in range(d)])
        cell_hi = np.array([edges[j][idx[j] + 1] for j in range(d)])
        x = rng.uniform(cell_lo, cell_hi, size=(per_cell, d))
        inside = A.contains_many(x)
        h = np.zeros(per_cell)
        if np.any(inside):
            vals, _ = _clean(np.asarray(feval(real_to_complex(x[inside])), dtype=float))
            h[inside] = vals
        g = inside.astype(float)
        total_h += h.sum()
        total_g += g.sum()
        sum_h2 += (h**2).sum()
        sum_g2 += (g**2).sum()
        sum_hg += (h * g).sum()
        n_total += per_cell

    if total_g < 1e-3 * n_total:
        raise ValueError(
            "degenerate polytope: hull acceptance rate below 1e-3; "
            "pass nearly-lower-dimensional sets as Segment"
        )
    mean = total_h / total_g
    # ratio-estimator variance of sum(h)/sum(g)
    var_r = (
        sum_h2 - 2 * mean * sum_hg + mean**2 * sum_g2
    ) / n_total - ((total_h - mean * total_g) / n_total) ** 2
    sem = math.sqrt(max(var_r, 0.0) / n_total) / (total_g / n_total)
    return IntegralResult(mean, 3.0 * sem, n_total, 0, True)


def mean_over_region(f, region, spec: QuadratureSpec = DEFAULT_SPEC) -> IntegralResult:
    """Dispatch on the region type; AnisotropicBox integrates as its polydisc."""
    from .regions import AnisotropicBox

    if isinstance(region, Polydisc):
        return mean_over_polydisc(f, region, spec)
    if isinstance(region, AnisotropicBox):
        return mean_over_polydisc(f, region.as_polydisc(), spec)
    if isinstance(region, Segment):
        return mean_over_segment(f, region, spec)
    if isinstance(region, ConvexPolytope):
        return mean_over_polytope(f, region, spec)
    raise TypeError(f"unsupported region {type(region).__name__}")
