"""Samplers and deterministic random-stream plumbing.

The scattering angle is drawn by inverse CDF of the normalized density
b_n(cos theta) sin(theta) on [0, pi/2].  The truncated kernel makes the
CDF piecewise elementary (cap piece + power tail), so the exact inverse
is available in closed form; it is tabulated once per cutoff level on
Chebyshev-spaced probability nodes with monotone cubic interpolation,
and the interpolant coefficients are stored as flat arrays so the same
Horner evaluation runs under both the numpy and compiled backends.

Initial-condition samplers cover Maxwellian, bi-Maxwellian mixtures and
the isotropic heavy-tail law with density proportional to <v>^(-q)
(radial inverse CDF built by quadrature and cached).

All randomness flows through counter-based Philox streams keyed by
(master seed, purpose salt) with the counter words carrying step/batch
indices, so every draw is reproducible and independent of execution
order across experiments.
"""

from __future__ import annotations

import dataclasses
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator

from .kernels import CutoffAngularKernel, HALF_PI, cap_crossover
from .quadrature import panel_nodes

__all__ = [
    "ThetaTable",
    "RadialTable",
    "build_theta_table",
    "exact_theta_inverse",
    "theta_cdf",
    "sample_theta",
    "build_radial_table",
    "radial_cdf",
    "sample_power_tail",
    "sample_maxwellian",
    "sample_bi_maxwellian",
    "make_stream",
    "INIT_STREAM",
    "STEP_STREAM",
    "PROBE_STREAM",
    "PAIR_STREAM",
]

# Probability nodes in the angle table (Chebyshev spacing clusters them
# at both ends, where the inverse CDF bends hardest).
THETA_TABLE_SIZE = 4096
# Radial-table panels for the heavy-tail inverse CDF.
RADIAL_TABLE_PANELS = 2048
RADIAL_PANEL_ORDER = 12
# Relative tail mass dropped when truncating the heavy-tail support.
RADIAL_TAIL_CUT = 1e-12

# Purpose salts for the Philox key; distinct salts give independent
# streams from one master seed.
INIT_STREAM = np.uint64(0x9E3779B97F4A7C15)
STEP_STREAM = np.uint64(0xC2B2AE3D27D4EB4F)
PROBE_STREAM = np.uint64(0x165667B19E3779F9)
PAIR_STREAM = np.uint64(0x85EBCA77C2B2AE63)


@dataclasses.dataclass(eq=False)
class ThetaTable:
    """Monotone cubic inverse-CDF table for the scattering angle.

    ``breaks`` are probability nodes in [0, 1]; ``coeffs`` has shape
    (4, len(breaks) - 1) in the local-polynomial convention
    theta(u) = c0 t^3 + c1 t^2 + c2 t + c3 with t = u - breaks[i].
    """

    breaks: np.ndarray
    coeffs: np.ndarray
    theta_cap: float
    mass: float


@dataclasses.dataclass(eq=False)
class RadialTable:
    """Monotone cubic inverse-CDF table for the heavy-tail radius."""

    breaks: np.ndarray
    coeffs: np.ndarray
    q: float
    r_max: float


# ---------------------------------------------------------------------------
# scattering angle


def _cap_pieces(cutoff: CutoffAngularKernel):
    """Closed-form mass pieces of b_n(cos theta) sin theta.

    Below the cap crossover the integrand is n sin(theta); above it the
    sine cancels and K theta^(-1-2s) remains, integrating to an
    elementary power.  Returns (theta_cap, cap_mass, total_mass).
    """
    n = cutoff.n
    s = cutoff.base.s
    k_const = cutoff.base.K
    theta_c = cap_crossover(cutoff)
    cap_mass = n * (1.0 - np.cos(theta_c))
    if theta_c >= HALF_PI - 1e-15:
        return theta_c, cap_mass, cap_mass
    tail_mass = (k_const / (2.0 * s)) * (theta_c ** (-2.0 * s) - HALF_PI ** (-2.0 * s))
    return theta_c, cap_mass, cap_mass + tail_mass


def theta_cdf(cutoff: CutoffAngularKernel, theta):
    """Normalized CDF of the angle density at ``theta`` (closed form)."""
    theta = np.asarray(theta, dtype=float)
    n = cutoff.n
    s = cutoff.base.s
    k_const = cutoff.base.K
    theta_c, cap_mass, total = _cap_pieces(cutoff)
    below = n * (1.0 - np.cos(np.minimum(theta, theta_c)))
    with np.errstate(divide="ignore"):
        above = (k_const / (2.0 * s)) * (
            theta_c ** (-2.0 * s) - np.maximum(theta, theta_c) ** (-2.0 * s)
        )
    out = np.where(theta <= theta_c, below, cap_mass + above) / total
    return np.clip(out, 0.0, 1.0)


def exact_theta_inverse(cutoff: CutoffAngularKernel, u):
    """Closed-form inverse CDF of the angle density (reference route)."""
    u = np.asarray(u, dtype=float)
    n = cutoff.n
    s = cutoff.base.s
    k_const = cutoff.base.K
    theta_c, cap_mass, total = _cap_pieces(cutoff)
    t = np.clip(u, 0.0, 1.0) * total
    cap_theta = np.arccos(np.clip(1.0 - np.minimum(t, cap_mass) / n, -1.0, 1.0))
    excess = np.maximum(t - cap_mass, 0.0)
    radicand = theta_c ** (-2.0 * s) - (2.0 * s / k_const) * excess
    radicand = np.maximum(radicand, HALF_PI ** (-2.0 * s))
    tail_theta = radicand ** (-0.5 / s)
    return np.where(t <= cap_mass, cap_theta, np.minimum(tail_theta, HALF_PI))


@lru_cache(maxsize=16)
def build_theta_table(cutoff: CutoffAngularKernel, size: int = THETA_TABLE_SIZE) -> ThetaTable:
    """Tabulate the angle inverse CDF on Chebyshev probability nodes."""
    k = np.arange(size)
    u_nodes = 0.5 * (1.0 - np.cos(np.pi * k / (size - 1)))
    u_nodes[0] = 0.0
    u_nodes[-1] = 1.0
    theta_nodes = exact_theta_inverse(cutoff, u_nodes)
    interp = PchipInterpolator(u_nodes, theta_nodes, extrapolate=False)
    theta_c, _, total = _cap_pieces(cutoff)
    return ThetaTable(
        breaks=np.ascontiguousarray(interp.x),
        coeffs=np.ascontiguousarray(interp.c),
        theta_cap=float(theta_c),
        mass=float(total),
    )


def sample_theta(table: ThetaTable, u):
    """Evaluate the tabulated inverse CDF at uniforms ``u`` (vectorized)."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    idx = np.clip(np.searchsorted(table.breaks, u, side="right") - 1, 0, len(table.breaks) - 2)
    t = u - table.breaks[idx]
    c = table.coeffs
    theta = ((c[0, idx] * t + c[1, idx]) * t + c[2, idx]) * t + c[3, idx]
    return np.clip(theta, 0.0, HALF_PI)


# ---------------------------------------------------------------------------
# initial conditions


def _power_tail_density(r, q):
    return r * r * (1.0 + r * r) ** (-0.5 * q)


def _power_tail_r_max(q: float) -> float:
    """Radius beyond which the dropped tail mass is below the cut.

    The tail integral of r^2 <r>^{-q} behaves like R^(3-q)/(q-3); solving
    for the target relative mass gives the truncation radius.
    """
    return float(((q - 3.0) * RADIAL_TAIL_CUT) ** (-1.0 / (q - 3.0)))


@lru_cache(maxsize=16)
def build_radial_table(q: float) -> RadialTable:
    """Inverse-CDF table for the radius of the <v>^(-q) law.

    The cumulative mass is accumulated panel by panel with fixed-order
    Gauss-Legendre quadrature on a geometric grid, normalized, and
    inverted through a monotone cubic fit of radius against cumulative
    probability.
    """
    if q <= 5.0:
        raise ValueError(f"power-tail exponent must satisfy q > 5 (finite energy), got q={q}")
    r_max = _power_tail_r_max(q)
    edges = np.concatenate(
        [
            np.linspace(0.0, 1.0, RADIAL_TABLE_PANELS // 4 + 1),
            np.geomspace(1.0, r_max, RADIAL_TABLE_PANELS - RADIAL_TABLE_PANELS // 4 + 1)[1:],
        ]
    )
    nodes, wts = panel_nodes(edges, RADIAL_PANEL_ORDER)
    dens = _power_tail_density(nodes, q)
    per_panel = np.add.reduceat(wts * dens, np.arange(0, len(nodes), RADIAL_PANEL_ORDER))
    cum = np.concatenate([[0.0], np.cumsum(per_panel)])
    cum /= cum[-1]
    # defend the interpolant against duplicate probability nodes in the
    # far tail, where panel masses underflow
    keep = np.concatenate([[True], np.diff(cum) > 0.0])
    interp = PchipInterpolator(cum[keep], edges[keep], extrapolate=False)
    return RadialTable(
        breaks=np.ascontiguousarray(interp.x),
        coeffs=np.ascontiguousarray(interp.c),
        q=float(q),
        r_max=r_max,
    )


def radial_cdf(q: float, r):
    """Quadrature-backed CDF of the heavy-tail radius (for diagnostics)."""
    table = build_radial_table(q)
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape, dtype=float)
    flat = r.ravel()
    res = np.empty(flat.shape, dtype=float)
    for i, ri in enumerate(flat):
        if ri <= 0.0:
            res[i] = 0.0
            continue
        edges = np.linspace(0.0, min(ri, table.r_max), 257)
        nodes, wts = panel_nodes(edges, 8)
        res[i] = float(np.sum(wts * _power_tail_density(nodes, q)))
    total_edges = np.concatenate(
        [np.linspace(0.0, 1.0, 65), np.geomspace(1.0, table.r_max, 513)[1:]]
    )
    nodes, wts = panel_nodes(total_edges, 8)
    total = float(np.sum(wts * _power_tail_density(nodes, q)))
    out.ravel()[:] = np.clip(res / total, 0.0, 1.0)
    return out


def _eval_monotone_table(breaks, coeffs, u):
    idx = np.clip(np.searchsorted(breaks, u, side="right") - 1, 0, len(breaks) - 2)
    t = u - breaks[idx]
    return ((coeffs[0, idx] * t + coeffs[1, idx]) * t + coeffs[2, idx]) * t + coeffs[3, idx]


def _uniform_directions(rng, size):
    z = 1.0 - 2.0 * rng.random(size)
    phi = 2.0 * np.pi * rng.random(size)
    rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def sample_power_tail(q: float, size: int, rng) -> np.ndarray:
    """Isotropic velocities with radial law proportional to <r>^(-q) r^2."""
    table = build_radial_table(q)
    u = rng.random(size)
    radius = np.clip(_eval_monotone_table(table.breaks, table.coeffs, u), 0.0, table.r_max)
    return radius[:, None] * _uniform_directions(rng, size)


def sample_maxwellian(temperature: float, size: int, rng) -> np.ndarray:
    """Isotropic Gaussian with per-component variance ``temperature``."""
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return np.sqrt(temperature) * rng.standard_normal((size, 3))


def sample_bi_maxwellian(t1: float, t2: float, fraction: float, size: int, rng) -> np.ndarray:
    """Two-temperature Gaussian mixture; ``fraction`` weights the first."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"mixture fraction must lie in [0, 1], got {fraction}")
    if t1 <= 0.0 or t2 <= 0.0:
        raise ValueError("mixture temperatures must be positive")
    pick = rng.random(size) < fraction
    scale = np.where(pick, np.sqrt(t1), np.sqrt(t2))
    return scale[:, None] * rng.standard_normal((size, 3))


# ---------------------------------------------------------------------------
# deterministic streams


def make_stream(seed: int, salt, word0: int = 0, word1: int = 0) -> np.random.Generator:
    """Counter-based Philox stream for one (purpose, step/batch) slot.

    The key holds (master seed, purpose salt); the first two counter
    words hold caller-chosen indices such as step and batch numbers.
    Streams with distinct keys or counters are independent, and draws
    never depend on how many other streams were consumed before.
    """
    bits = np.random.Philox(
        counter=[int(word0), int(word1), 0, 0],
        key=[int(np.uint64(seed)), int(np.uint64(salt))],
    )
    return np.random.Generator(bits)
