"""Povzner-type functionals for the inelastic collision model.

The central object is the sphere-averaged weight difference

    k(v, v*) = integral over the half sphere (relative-velocity side) of
               b_n(cos theta) * [psi(|v'|^2) + psi(|v*'|^2)
                                 - psi(|v|^2) - psi(|v*|^2)]

which controls moment growth and dissipation for the homogeneous kinetic
equation.  Two independent evaluation routes are provided and kept
deliberately separate:

* ``k_direct``      -- spherical (theta, phi) quadrature built on the
                       sigma collision map;
* ``k_transformed`` -- the chart in B = cos(chi) with the in-plane
                       coordinate eta, which exposes the additive split
                       ``k = h + g`` computed by ``hg_decompose``.

``h`` collects the second-difference (drift) part of the functional and
``g`` the curvature part; ``check_H_bound`` / ``check_G_bound`` evaluate
dominance-bound margins for given constants, and ``fit_constants``
calibrates those constants over a sweep of velocity pairs.
"""

from __future__ import annotations

import dataclasses
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .geometry import (
    chart_lower_endpoint,
    cos_theta_from_B,
    dA_dB,
    lambda_of_chi,
    pair_frame,
    post_collide_sigma,
    sigma_from_angles,
)
from .kernels import (
    CutoffAngularKernel,
    HALF_PI,
    Restitution,
    cap_crossover,
    eval_bn,
    sphere_mass_bn,
)
from .quadrature import geometric_edges, panel_nodes
from .weights import WeightFunction

__all__ = [
    "HGParts",
    "BoundCheck",
    "PovznerFit",
    "k_direct",
    "k_transformed",
    "hg_decompose",
    "check_H_bound",
    "check_G_bound",
    "fit_constants",
    "appendix_convexity_check",
    "h_scaling_probe",
]

# Panels per smooth chart segment at refinement level zero.
BASE_B_PANELS = 6
# Gauss-Legendre order on each chart panel.
B_PANEL_ORDER = 16
# Midpoint count for the in-plane angle at refinement level zero.
BASE_TAU_NODES = 32
# Curvature-integral panels / order at refinement level zero.
BASE_G_PANELS = 4
G_PANEL_ORDER = 12
# Geometric refinement depth used near theta = 0 in the direct route.
DIRECT_EDGE_LEVELS = 22
# Maximum refinement doublings for the evaluation ladders.
MAX_LEVELS = 4
# Rows whose minimum post-collision energy falls below this fraction of
# the energy scale get a dedicated, singularity-split curvature rule.
SINGULAR_FLAG = 1e-3
# Floor applied below to keep LP-fitted constants strictly positive.
CONSTANT_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True)
class HGParts:
    """Drift/curvature split of the sphere-averaged weight difference."""

    h1: float
    h2: float
    g: float

    @property
    def h(self) -> float:
        return self.h1 - self.h2

    @property
    def total(self) -> float:
        return self.h1 - self.h2 + self.g


@dataclasses.dataclass(frozen=True)
class BoundCheck:
    """Margin of a dominance bound at one velocity pair.

    ``margin >= 0`` means the bound holds there with the supplied
    constants.
    """

    value: float
    neg_term: float
    pos_term: float
    margin: float


@dataclasses.dataclass(frozen=True)
class PovznerFit:
    """Constants fitted over a sweep, with per-pair margins."""

    c1: float
    c2: float
    c_g: float
    kappa_branch: str
    feasible: bool
    witness: tuple | None
    h_values: np.ndarray
    g_values: np.ndarray
    h_margins: np.ndarray
    g_margins: np.ndarray


# ---------------------------------------------------------------------------
# shared geometry helpers


def _pair_invariants(v, vstar):
    """Scalar invariants of a velocity pair used by the chart route."""
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    x = float(v @ v)
    y = float(vstar @ vstar)
    rel = v - vstar
    vm2 = float(rel @ rel)
    vp = v + vstar
    vp2 = float(vp @ vp)
    cross = np.cross(v, vstar)
    cross2 = float(cross @ cross)
    if vp2 > 0.0 and vm2 > 0.0:
        cbeta = (x - y) / np.sqrt(vp2 * vm2)
        cbeta = float(np.clip(cbeta, -1.0, 1.0))
        sbeta = 2.0 * np.sqrt(cross2 / (vp2 * vm2))
        sbeta = float(np.clip(sbeta, 0.0, 1.0))
    else:
        cbeta = 0.0
        sbeta = 0.0
    return x, y, vp2, vm2, cross2, cbeta, sbeta


@lru_cache(maxsize=32)
def _kernel_mass(cutoff: CutoffAngularKernel) -> float:
    return sphere_mass_bn(cutoff)


def _char_scale(weight: WeightFunction, x: float, y: float, cutoff) -> float:
    """Magnitude yardstick for convergence tests and margin floors."""
    top = weight.value(2.0 * (x + y) + 1.0)
    return _kernel_mass(cutoff) * (abs(top) + abs(weight.value(x)) + abs(weight.value(y)) + 1.0)


@lru_cache(maxsize=64)
def _chart_table(cutoff: CutoffAngularKernel, e: float, level: int):
    """Cached chart quadrature table at one refinement level.

    Returns arrays over the flattened B nodes: (B, wB, A, theta, lam,
    outer, eta_factor) where ``outer = wB * b_n(theta) * dA/dB`` and
    ``eta_factor = a_plus * sin(theta) / lam`` multiplies sin(beta) to
    give the half-width of the in-plane coordinate.
    """
    rest = Restitution(e)
    b_lo = chart_lower_endpoint(e)
    theta_c = cap_crossover(cutoff)

    if theta_c >= HALF_PI - 1e-15:
        seg_points = np.array([b_lo, 1.0])
    else:
        from scipy.optimize import brentq

        target = np.cos(theta_c)
        b_kink = brentq(
            lambda b: cos_theta_from_B(b, e) - target, b_lo, 1.0, xtol=1e-15, rtol=1e-15
        )
        seg_points = np.unique(np.clip([b_lo, b_kink, 1.0], b_lo, 1.0))

    n_panels = BASE_B_PANELS * (1 << level)
    edges = [np.array([seg_points[0]])]
    for a, b in zip(seg_points[:-1], seg_points[1:]):
        if b - a < 1e-14:
            continue
        edges.append(np.linspace(a, b, n_panels + 1)[1:])
    edge_arr = np.concatenate(edges)

    nodes, wts = panel_nodes(edge_arr, B_PANEL_ORDER)
    a_cos = cos_theta_from_B(nodes, e)
    theta = np.arccos(np.clip(a_cos, -1.0, 1.0))
    lam = lambda_of_chi(nodes, e)
    jac = dA_dB(nodes, e)
    bn = eval_bn(cutoff, theta)
    sin_theta = np.sqrt(np.clip(1.0 - a_cos * a_cos, 0.0, None))
    outer = wts * bn * jac
    eta_factor = rest.a_plus * sin_theta / lam
    return nodes, wts, a_cos, theta, lam, outer, eta_factor


def _refined_edges(points, levels=14):
    """Panel edges refined geometrically toward every point in ``points``."""
    pieces = []
    for a, b in zip(points[:-1], points[1:]):
        if b - a < 1e-15:
            continue
        mid = 0.5 * (a + b)
        left = geometric_edges(a, mid, levels, toward="left")
        right = geometric_edges(mid, b, levels, toward="right")
        pieces.append(left)
        pieces.append(right[1:])
    return np.unique(np.concatenate(pieces))


# ---------------------------------------------------------------------------
# direct (spherical) route


def k_direct(v, vstar, weight, cutoff, e, rel_tol=1e-8, max_levels=MAX_LEVELS):
    """Sphere-averaged weight difference via (theta, phi) quadrature.

    The polar grid is refined geometrically toward theta = 0 and split at
    the cap crossover of the truncated kernel; the azimuth uses a
    midpoint rule, doubled together with the polar order until the value
    stabilises to ``rel_tol``.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    x, y, vp2, vm2, _, _, _ = _pair_invariants(v, vstar)
    if vm2 == 0.0:
        return 0.0

    frame = pair_frame(v, vstar)[:3]
    theta_c = cap_crossover(cutoff)
    base = weight.value(x) + weight.value(y)
    scale = _char_scale(weight, x, y, cutoff)

    inner = geometric_edges(0.0, theta_c, DIRECT_EDGE_LEVELS, toward="left")
    if theta_c < HALF_PI - 1e-15:
        outer_edges = np.linspace(theta_c, HALF_PI, 3)[1:]
        edges = np.concatenate([inner, outer_edges])
    else:
        edges = inner

    prev = None
    val = 0.0
    for level in range(max_levels):
        order = 8 * (1 << level)
        n_phi = 16 * (1 << level)
        theta, w_theta = panel_nodes(edges, order)
        phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
        sigma = sigma_from_angles(theta[:, None], phi[None, :], frame)
        v_post, vstar_post = post_collide_sigma(v, vstar, sigma, e)
        xp = np.sum(v_post * v_post, axis=-1)
        yp = np.sum(vstar_post * vstar_post, axis=-1)
        bracket = weight.value(xp) + weight.value(yp) - base
        row = np.sum(bracket, axis=1) * (2.0 * np.pi / n_phi)
        val = float(np.sum(w_theta * eval_bn(cutoff, theta) * np.sin(theta) * row))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-9 * scale):
            return val
        prev = val
    return val


# ---------------------------------------------------------------------------
# transformed (chart) route


def _transformed_at_level(v, vstar, weight, cutoff, e, level):
    x, y, vp2, vm2, _, cbeta, sbeta = _pair_invariants(v, vstar)
    nodes, _, _, _, lam, outer, eta_factor = _chart_table(cutoff, float(e), level)

    yy = 0.25 * (vp2 + lam * lam * vm2)
    zz = 0.5 * lam * np.sqrt(vp2 * vm2)
    eta0 = sbeta * eta_factor
    c_off = cbeta * nodes

    m_tau = BASE_TAU_NODES * (1 << level)
    tau = (np.arange(m_tau) + 0.5) * (np.pi / m_tau)
    eta = eta0[:, None] * np.cos(tau)[None, :]
    shift = zz[:, None] * (c_off[:, None] + eta)
    arg_plus = np.clip(yy[:, None] + shift, 0.0, None)
    arg_minus = np.clip(yy[:, None] - shift, 0.0, None)
    base = weight.value(x) + weight.value(y)
    bracket = weight.value(arg_plus) + weight.value(arg_minus) - base
    inner = np.sum(bracket, axis=1) * (np.pi / m_tau)
    return 2.0 * float(np.sum(outer * inner))


def k_transformed(v, vstar, weight, cutoff, e, rel_tol=1e-8, max_levels=MAX_LEVELS):
    """Sphere-averaged weight difference via the B-chart route.

    Must agree with :func:`k_direct`; the two implementations share no
    quadrature machinery beyond the panel helpers, so their agreement
    exercises the full angle chart (theta(B), lam(B), dA/dB, eta half
    width) end to end.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    x, y, _, vm2, _, _, _ = _pair_invariants(v, vstar)
    if vm2 == 0.0:
        return 0.0
    scale = _char_scale(weight, x, y, cutoff)
    prev = None
    val = 0.0
    for level in range(max_levels):
        val = _transformed_at_level(v, vstar, weight, cutoff, e, level)
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-9 * scale):
            return val
        prev = val
    return val


# ---------------------------------------------------------------------------
# drift / curvature split


def _psi_second_safe(weight, args):
    """Second derivative with hard zeros where the argument vanishes."""
    safe = np.where(args > 0.0, args, 1.0)
    out = weight.second_derivative(safe)
    return np.where(args > 0.0, out, 0.0)


def _curvature_shape(tau):
    """Weight (sin t - t cos t) sin t of the integrated-arc kernel."""
    return (np.sin(tau) - tau * np.cos(tau)) * np.sin(tau)


def _curvature_sum_grid(weight, yy, zz, c_off, eta):
    """Sum of psi'' over the four arguments Y +/- Z (c +/- eta)."""
    total = np.zeros(np.broadcast(yy, eta).shape)
    for sign_out in (1.0, -1.0):
        for sign_in in (1.0, -1.0):
            args = yy + sign_out * zz * (c_off + sign_in * eta)
            total += _psi_second_safe(weight, np.clip(args, 0.0, None))
    return total


def _curvature_row_refined(weight, yy, zz, c_off, eta0, levels=14, order=10):
    """Curvature integral of one chart row with singularity-split panels."""
    crit = [0.0, 0.5 * np.pi]
    if zz > 0.0 and eta0 > 0.0:
        for eta_star in (yy / zz - c_off, yy / zz + c_off):
            if 0.0 <= eta_star <= eta0:
                crit.append(float(np.arccos(np.clip(eta_star / eta0, -1.0, 1.0))))
    pts = np.unique(np.clip(crit, 0.0, 0.5 * np.pi))
    edges = _refined_edges(pts, levels)
    tau, w_tau = panel_nodes(edges, order)
    s_val = _curvature_sum_grid(weight, yy, zz, c_off, eta0 * np.cos(tau))
    return zz * zz * eta0 * eta0 * float(np.sum(w_tau * _curvature_shape(tau) * s_val))


def _hg_at_level(v, vstar, weight, cutoff, e, level):
    x, y, vp2, vm2, _, cbeta, sbeta = _pair_invariants(v, vstar)
    nodes, _, _, _, lam, outer, eta_factor = _chart_table(cutoff, float(e), level)

    yy = 0.25 * (vp2 + lam * lam * vm2)
    zz = 0.5 * lam * np.sqrt(vp2 * vm2)
    eta0 = sbeta * eta_factor
    c_off = cbeta * nodes
    base = weight.value(x) + weight.value(y)

    two_y = 2.0 * yy
    h1 = 2.0 * np.pi * float(np.sum(outer * (weight.value(two_y) - base)))
    shift = np.clip(zz * c_off, -yy, yy)
    h2_rows = weight.value(two_y) - weight.value(yy + shift) - weight.value(yy - shift)
    h2 = 2.0 * np.pi * float(np.sum(outer * h2_rows))

    # curvature part: arc-kernel integral over the in-plane coordinate
    n_panels = BASE_G_PANELS * (1 << level)
    tau_edges = np.linspace(0.0, 0.5 * np.pi, n_panels + 1)
    tau, w_tau = panel_nodes(tau_edges, G_PANEL_ORDER)
    shape = _curvature_shape(tau)

    eta = eta0[:, None] * np.cos(tau)[None, :]
    s_grid = _curvature_sum_grid(weight, yy[:, None], zz[:, None], c_off[:, None], eta)
    rows = zz * zz * eta0 * eta0 * np.sum(w_tau[None, :] * shape[None, :] * s_grid, axis=1)

    # near-vanishing post-collision energies make psi'' blow up for the
    # power weight below quadratic growth; re-do those rows with panels
    # split at the critical in-plane offsets
    if weight.kind == "psi1" and weight.kappa < 2.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            min_arg = yy - zz * (np.abs(c_off) + eta0)
        flagged = (zz > 0.0) & (eta0 > 0.0) & (min_arg <= SINGULAR_FLAG * (yy + zz))
        for i in np.nonzero(flagged)[0]:
            rows[i] = _curvature_row_refined(
                weight, float(yy[i]), float(zz[i]), float(c_off[i]), float(eta0[i])
            )

    g_val = 2.0 * float(np.sum(outer * rows))
    return h1, h2, g_val


def hg_decompose(v, vstar, weight, cutoff, e, rel_tol=1e-8, max_levels=MAX_LEVELS):
    """Split the sphere-averaged weight difference into drift + curvature.

    Returns :class:`HGParts` with ``h1`` (full energy-sum gap), ``h2``
    (the nonnegative concentration deficit) and ``g`` (the curvature
    term, nonnegative for convex weights).  ``h1 - h2 + g`` must agree
    with both evaluation routes for the full functional.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    x, y, _, vm2, _, _, _ = _pair_invariants(v, vstar)
    if vm2 == 0.0:
        return HGParts(0.0, 0.0, 0.0)
    scale = _char_scale(weight, x, y, cutoff)
    prev = None
    parts = (0.0, 0.0, 0.0)
    for level in range(max_levels):
        parts = _hg_at_level(v, vstar, weight, cutoff, e, level)
        if prev is not None:
            delta = max(abs(a - b) for a, b in zip(parts, prev))
            ref = max(max(abs(p) for p in parts), 1e-9 * scale)
            if delta <= rel_tol * ref:
                return HGParts(*parts)
        prev = parts
    return HGParts(*parts)


# ---------------------------------------------------------------------------
# dominance bounds


def _h_bound_terms(weight, x, y):
    """(P, Q) pair for the drift bound ``h <= -c1 P + c2 Q``."""
    kappa = weight.kappa
    if weight.kind == "psi1":
        p_term = x ** (1.0 + 0.5 * kappa) * y + y ** (1.0 + 0.5 * kappa) * x
    elif weight.kind == "psi2":
        p_term = (1.0 + x) ** (1.0 + 0.5 * kappa) * y + (1.0 + y) ** (1.0 + 0.5 * kappa) * x
    else:
        raise ValueError(f"drift bound is stated for psi1/psi2 weights, not {weight.kind!r}")
    q_term = (1.0 + x) ** (0.5 * (1.0 + kappa)) * np.sqrt(y) + (1.0 + y) ** (
        0.5 * (1.0 + kappa)
    ) * np.sqrt(x)
    return p_term, q_term


def _g_bound_term(weight, x, y):
    """Comparison term for the curvature bound, branching on kappa."""
    kappa = weight.kappa
    if weight.kind not in ("psi1", "psi2"):
        raise ValueError(f"curvature bound is stated for psi1/psi2 weights, not {weight.kind!r}")
    if kappa < 2.0:
        return x * y
    return y * (1.0 + x) ** (0.5 * kappa) + x * (1.0 + y) ** (0.5 * kappa)


def check_H_bound(v, vstar, weight, cutoff, e, c1, c2, rel_tol=1e-7):
    """Margin of ``h <= -c1 P + c2 Q`` at one velocity pair."""
    x, y, _, _, _, _, _ = _pair_invariants(v, vstar)
    p_term, q_term = _h_bound_terms(weight, x, y)
    h_val = hg_decompose(v, vstar, weight, cutoff, e, rel_tol=rel_tol).h
    margin = (-c1 * p_term + c2 * q_term) - h_val
    return BoundCheck(value=h_val, neg_term=float(p_term), pos_term=float(q_term), margin=float(margin))


def check_G_bound(v, vstar, weight, cutoff, e, c_g, rel_tol=1e-7):
    """Margin of the curvature bound ``g <= c_g * T`` at one pair.

    ``T`` is the product ``|v|^2 |v*|^2`` below quadratic weight growth
    (kappa < 2) and the mixed bracket-weighted form at or above it.
    """
    x, y, _, _, _, _, _ = _pair_invariants(v, vstar)
    t_term = _g_bound_term(weight, x, y)
    g_val = hg_decompose(v, vstar, weight, cutoff, e, rel_tol=rel_tol).g
    margin = c_g * t_term - g_val
    return BoundCheck(value=g_val, neg_term=float(t_term), pos_term=0.0, margin=float(margin))


def fit_constants(
    pairs,
    weight,
    cutoff,
    e,
    rel_tol=1e-6,
    c1_floor=1e-8,
    inflate=1e-9,
):
    """Calibrate dominance constants over a sweep of velocity pairs.

    The drift constants come from a two-stage linear program: first the
    smallest c2 admitting any c1 >= ``c1_floor``, then the largest c1
    compatible with that (slightly inflated) c2.  The curvature constant
    is the inflated maximum ratio g / T.  Infeasibility is reported with
    the worst-offending pair as a witness instead of raising.
    """
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2, 3)
    m = arr.shape[0]
    h_vals = np.empty(m)
    g_vals = np.empty(m)
    p_terms = np.empty(m)
    q_terms = np.empty(m)
    t_terms = np.empty(m)
    scales = np.empty(m)
    for i in range(m):
        v, vstar = arr[i, 0], arr[i, 1]
        parts = hg_decompose(v, vstar, weight, cutoff, e, rel_tol=rel_tol)
        h_vals[i] = parts.h
        g_vals[i] = parts.g
        x, y, _, _, _, _, _ = _pair_invariants(v, vstar)
        p_terms[i], q_terms[i] = _h_bound_terms(weight, x, y)
        t_terms[i] = _g_bound_term(weight, x, y)
        scales[i] = _char_scale(weight, x, y, cutoff)

    kappa_branch = "product" if weight.kappa < 2.0 else "weighted"

    # stage 1: minimise c2 subject to c1 P - c2 Q <= -h, c1 >= floor
    row_scale = np.maximum.reduce([p_terms, q_terms, np.abs(h_vals), np.ones(m)])
    a_ub = np.column_stack([p_terms / row_scale, -q_terms / row_scale])
    b_ub = -h_vals / row_scale
    res = linprog(
        c=[0.0, 1.0],
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(c1_floor, None), (0.0, None)],
        method="highs",
    )
    if not res.success:
        worst = int(np.argmax((h_vals + c1_floor * p_terms) / q_terms))
        return PovznerFit(
            c1=float("nan"),
            c2=float("nan"),
            c_g=float("nan"),
            kappa_branch=kappa_branch,
            feasible=False,
            witness=(worst, arr[worst, 0].copy(), arr[worst, 1].copy()),
            h_values=h_vals,
            g_values=g_vals,
            h_margins=np.full(m, -np.inf),
            g_margins=np.full(m, -np.inf),
        )

    c2 = float(res.x[1]) * (1.0 + inflate) + CONSTANT_FLOOR
    # stage 2: largest c1 compatible with the fixed c2 (closed form),
    # deflated a hair so the binding margin stays strictly positive
    with np.errstate(divide="ignore"):
        caps = np.where(p_terms > 0.0, (c2 * q_terms - h_vals) / p_terms, np.inf)
    c1 = float(np.min(caps)) * (1.0 - inflate)
    c1 = max(c1, c1_floor)

    h_margins = (-c1 * p_terms + c2 * q_terms) - h_vals

    # curvature side: direct max-ratio calibration
    tiny = 1e-10 * scales
    good = t_terms > 0.0
    if np.any(~good & (g_vals > tiny)):
        worst = int(np.argmax(np.where(~good, g_vals, -np.inf)))
        return PovznerFit(
            c1=c1,
            c2=c2,
            c_g=float("inf"),
            kappa_branch=kappa_branch,
            feasible=False,
            witness=(worst, arr[worst, 0].copy(), arr[worst, 1].copy()),
            h_values=h_vals,
            g_values=g_vals,
            h_margins=h_margins,
            g_margins=np.full(m, -np.inf),
        )
    ratios = np.where(good, g_vals / np.where(good, t_terms, 1.0), 0.0)
    c_g = float(np.max(ratios)) * (1.0 + inflate) + CONSTANT_FLOOR
    g_margins = c_g * t_terms - g_vals

    feasible = (
        bool(np.all(h_margins >= -1e-9 * scales))
        and bool(np.all(g_margins >= -1e-9 * scales))
        and np.isfinite(c1)
        and np.isfinite(c2)
        and np.isfinite(c_g)
        and c1 > 0.0
        and c2 > 0.0
        and c_g > 0.0
    )
    witness = None
    if not feasible:
        worst = int(np.argmin(np.minimum(h_margins, g_margins)))
        witness = (worst, arr[worst, 0].copy(), arr[worst, 1].copy())
    return PovznerFit(
        c1=c1,
        c2=c2,
        c_g=c_g,
        kappa_branch=kappa_branch,
        feasible=feasible,
        witness=witness,
        h_values=h_vals,
        g_values=g_vals,
        h_margins=h_margins,
        g_margins=g_margins,
    )


# ---------------------------------------------------------------------------
# auxiliary checks


def appendix_convexity_check(weight, x, y):
    """Margins of the two-sided convexity sandwich for the power weights.

    For the growth exponent kappa the sandwich reads

        2^(-1-kappa/2) x y psi''(x+y)
            <= psi(x+y) - psi(x) - psi(y)
            <= 2^(kappa/2) (x psi'(y) + y psi'(x))

    and both margins returned here must be nonnegative.
    """
    if weight.kind not in ("psi1", "psi2"):
        raise ValueError(f"sandwich applies to psi1/psi2 weights, not {weight.kind!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a_tilde = 2.0 ** (0.5 * weight.kappa)
    b_tilde = 2.0 ** (-1.0 - 0.5 * weight.kappa)
    mid = weight.value(x + y) - weight.value(x) - weight.value(y)
    lower = mid - b_tilde * x * y * weight.second_derivative(x + y)
    upper = a_tilde * (x * weight.derivative(y) + y * weight.derivative(x)) - mid
    return lower, upper


def h_scaling_probe(
    weight,
    cutoff,
    e,
    radii=None,
    u=(1.0, 0.0, 0.0),
    ustar=(0.21, 0.72, 0.0),
    rel_tol=1e-7,
):
    """Log-log growth rate of |h| along a ray of dilated velocity pairs.

    Evaluates h at (R u, R u*) for each radius and returns the fitted
    slope together with the sampled values.  For the power weights the
    drift term scales like the weight of the energy, i.e. with exponent
    2 + kappa in R.
    """
    if radii is None:
        radii = np.geomspace(10.0, 1000.0, 6)
    radii = np.asarray(radii, dtype=float)
    u = np.asarray(u, dtype=float)
    ustar = np.asarray(ustar, dtype=float)
    values = np.array(
        [
            hg_decompose(r * u, r * ustar, weight, cutoff, e, rel_tol=rel_tol).h
            for r in radii
        ]
    )
    slope = float(np.polyfit(np.log(radii), np.log(np.abs(values)), 1)[0])
    return slope, radii, values
