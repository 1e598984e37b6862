"""Collision kernels: angular singularity, bounded cap, kinetic factor.

The angular part of the collision kernel concentrates on grazing collisions
like K * theta**(-1 - 2s) (non-integrable for s in (0, 1)); simulations and
most estimates work with the capped version min{b, n}.  The kinetic part is a
hard potential r**gamma, optionally multiplied by a smooth bump that switches
off smoothly between r = n and r = 2n so the resulting rate is bounded and
compactly supported.

Conventions: theta is the scattering deviation angle, restricted to
[0, pi/2] after the usual symmetrization; all kernels act on cos(theta) but
the evaluation helpers below take theta itself.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .quadrature import geometric_edges, integrate_to_tolerance

HALF_PI = 0.5 * np.pi

#: refinement depth used for singular-endpoint integrals
MAX_EDGE_LEVELS = 40


@dataclass(frozen=True)
class Restitution:
    """Restitution coefficient e in (0, 1] and the derived half-coefficients.

    a_plus = (1+e)/2 weights the reflected relative velocity, a_minus =
    (1-e)/2 the retained one; a_plus + a_minus = 1 and a_plus - a_minus = e.
    """

    e: float

    def __post_init__(self):
        if not 0.0 < self.e <= 1.0:
            raise ValueError(f"restitution e = {self.e} outside (0, 1]")

    @property
    def a_plus(self):
        return 0.5 * (1.0 + self.e)

    @property
    def a_minus(self):
        return 0.5 * (1.0 - self.e)


@dataclass(frozen=True)
class AngularKernel:
    """Non-cutoff angular weight b(cos theta) = K * theta**(-1-2s) / sin theta.

    s in (0, 1) is the singularity order (sin(theta) * b ~ K theta^(-1-2s)
    near grazing), K > 0 the strength.
    """

    s: float
    K: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"singularity order s = {self.s} outside (0, 1)")
        if not self.K > 0.0:
            raise ValueError(f"strength K = {self.K} must be positive")


@dataclass(frozen=True)
class CutoffAngularKernel:
    """Angular kernel capped at level n >= 1: b_n = min{b, n}."""

    base: AngularKernel
    n: float

    def __post_init__(self):
        if not self.n > 0.0:
            raise ValueError(f"cap level n = {self.n} must be positive")


@dataclass(frozen=True)
class KineticKernel:
    """Hard-potential kinetic factor Phi(r) = r**gamma, gamma in (0, 2]."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma <= 2.0:
            raise ValueError(
                f"hard-potential exponent gamma = {self.gamma} outside (0, 2]"
            )


@dataclass(frozen=True)
class MollifiedKineticKernel:
    """r**gamma smoothly cut to zero on [n, 2n]: Phi_n(r) = r**gamma bump(r/n)."""

    base: KineticKernel
    n: float

    def __post_init__(self):
        if not self.n > 0.0:
            raise ValueError(f"mollifier level n = {self.n} must be positive")

    @property
    def support_radius(self):
        return 2.0 * self.n

    @property
    def rate_cap(self):
        """Upper bound sup_r Phi_n(r) <= (2n)**gamma used as DSMC majorant."""
        return (2.0 * self.n) ** self.base.gamma


def _exp_bump_piece(t):
    """h(t) = exp(-1/t) for t > 0, 0 otherwise (vectorized)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cut(x):
    """C-infinity transition: 1 for x <= 1, 0 for x >= 2, strictly monotone
    in between.  Built from the classic exp(-1/t) bump:
    h(2-x) / (h(2-x) + h(x-1))."""
    x = np.asarray(x, dtype=float)
    num = _exp_bump_piece(2.0 - x)
    den = num + _exp_bump_piece(x - 1.0)
    out = np.ones_like(x)
    mid = den > 0.0
    out[mid] = num[mid] / den[mid]
    out[x >= 2.0] = 0.0
    return out if out.ndim else float(out)


def eval_b(kernel, theta):
    """Evaluate the uncut angular kernel at deviation angle(s) in (0, pi/2].

    Returns K * theta**(-1-2s) / sin(theta); diverges as theta -> 0, so
    theta = 0 is rejected.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0.0) or np.any(th > HALF_PI + 1e-15):
        raise ValueError("theta must lie in (0, pi/2] for the uncut kernel")
    val = kernel.K * th ** (-1.0 - 2.0 * kernel.s) / np.sin(th)
    return val if val.ndim else float(val)


def eval_bn(cutoff, theta):
    """Evaluate the capped kernel min{b, n} on [0, pi/2].

    At theta = 0 the cap is active (b -> infinity), so the value is n; this
    makes the function continuous on the closed interval.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th < 0.0) or np.any(th > HALF_PI + 1e-15):
        raise ValueError("theta must lie in [0, pi/2] for the capped kernel")
    base = cutoff.base
    out = np.full_like(th, cutoff.n)
    pos = th > 0.0
    if np.any(pos):
        out[pos] = np.minimum(
            base.K * th[pos] ** (-1.0 - 2.0 * base.s) / np.sin(th[pos]), cutoff.n
        )
    return out if out.ndim else float(out)


def eval_phin(mollified, r):
    """Evaluate Phi_n(r) = r**gamma * smooth_cut(r / n) for r >= 0."""
    rr = np.asarray(r, dtype=float)
    if np.any(rr < 0.0):
        raise ValueError("relative speed r must be nonnegative")
    out = rr ** mollified.base.gamma * smooth_cut(rr / mollified.n)
    return out if out.ndim else float(out)


def cap_crossover(cutoff):
    """Angle where the cap stops binding: K theta^(-1-2s) = n sin(theta).

    Returns pi/2 if the kernel never drops below n on (0, pi/2] (cap active
    everywhere), else the unique crossing angle.  Left of the crossing
    b_n = n, right of it b_n = b.
    """
    base = cutoff.base

    def gap(th):
        return (np.log(base.K) - (1.0 + 2.0 * base.s) * np.log(th)
                - np.log(cutoff.n * np.sin(th)))

    if gap(HALF_PI) >= 0.0:
        return HALF_PI
    # bracket: gap -> +inf as theta -> 0+
    lo = HALF_PI
    while gap(lo) < 0.0:
        lo *= 0.5
        if lo < 1e-300:  # pragma: no cover - cap would have to be astronomical
            raise RuntimeError("failed to bracket cap crossover")
    return brentq(gap, lo, min(2.0 * lo, HALF_PI), xtol=1e-15, rtol=1e-15)


def sphere_mass_bn(cutoff, rel_tol=1e-10):
    """Total capped-kernel mass 2*pi * int_0^(pi/2) b_n(cos th) sin th dth.

    This is the full spherical mass of the symmetrized kernel (azimuth
    integrated out) and the angular factor of the DSMC candidate rate.
    Evaluated by panel GL quadrature with a panel edge at the cap crossover
    and geometric refinement toward theta = 0.
    """
    th_c = cap_crossover(cutoff)
    edges = [geometric_edges(0.0, min(th_c, HALF_PI), 12, toward="left")]
    if th_c < HALF_PI:
        edges.append(geometric_edges(th_c, HALF_PI, 12, toward="left"))
    edges = np.unique(np.concatenate(edges))

    def integrand(th):
        return eval_bn(cutoff, th) * np.sin(th)

    val, err, ok = integrate_to_tolerance(integrand, edges, rel_tol)
    if not ok:
        raise RuntimeError(
            f"sphere mass quadrature failed to converge (last err={err:.2e})"
        )
    return 2.0 * np.pi * val


def weighted_angular_integral(kernel, alpha0, rel_tol=1e-10):
    """Moment int_0^(pi/2) sin(th/2)**alpha0 * b(cos th) * sin th dth.

    Finite exactly when alpha0 > 2s (the sin(th/2)**alpha0 weight tames the
    grazing singularity); smaller alpha0 diverges and raises ValueError.
    """
    if alpha0 <= 2.0 * kernel.s:
        raise ValueError(
            f"alpha0 = {alpha0} <= 2s = {2.0 * kernel.s}: integral diverges"
        )

    def integrand(th):
        return np.sin(0.5 * th) ** alpha0 * kernel.K * th ** (-1.0 - 2.0 * kernel.s)

    edges = geometric_edges(0.0, HALF_PI, MAX_EDGE_LEVELS, toward="left")
    val, err, ok = integrate_to_tolerance(integrand, edges, rel_tol,
                                          max_doublings=4)
    if not ok:
        raise RuntimeError(
            f"weighted angular integral failed to converge (err={err:.2e})"
        )
    return val
