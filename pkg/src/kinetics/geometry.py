"""Post-collision maps and the scattering-angle chart chain.

Two equivalent parametrizations of an inelastic binary collision are used
throughout:

* the sigma form: v' sits on a sphere around the center of mass,
      v'  = (v+v*)/2 + a_minus/2 (v-v*) + a_plus/2 |v-v*| sigma,
      v*' = (v+v*)/2 - a_minus/2 (v-v*) - a_plus/2 |v-v*| sigma,
  with sigma a unit vector and a_plus/minus = (1 +/- e)/2;

* the omega form: v' = (v_plus + lam |v_minus| omega)/2 with the contraction
  factor lam depending on cos(chi) = omega . unit(v_minus).  The two are
  linked by lam * omega = a_plus sigma + a_minus * unit(v_minus).

On top of these sits the angle chart (theta, phi) <-> (chi, mu) <-> (B, eta)
used by the transformed-variable functionals: B = cos(chi) runs over
[B0, 1] with B0 = a_minus / sqrt(a_plus^2 + a_minus^2), A = cos(theta) =
(lam(B) B - a_minus)/a_plus, and for non-collinear pairs the azimuth phi maps
to eta = cos(mu) - cos(beta) cos(chi) in [-eta0, eta0], beta being the angle
between v_plus and v_minus.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "post_collide_sigma",
    "post_collide_omega",
    "energy_loss",
    "lambda_of_chi",
    "chart_lower_endpoint",
    "theta_from_B",
    "cos_theta_from_B",
    "dA_dB",
    "pair_frame",
    "sigma_from_angles",
    "build_chart",
    "CollisionChart",
]

#: tolerance for cosine-level comparisons (angles are never compared directly)
COS_TOL = 1e-10


def _as_vec(x):
    v = np.asarray(x, dtype=float)
    if v.shape[-1] != 3:
        raise ValueError("velocities must be 3-vectors")
    return v


def post_collide_sigma(v, vstar, sigma, e):
    """Apply the sigma-form collision map.  Broadcasts over leading axes.

    A zero relative velocity is a no-op (the pair is returned unchanged and
    no energy is exchanged).
    """
    v = _as_vec(v)
    vstar = _as_vec(vstar)
    sigma = _as_vec(sigma)
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)
    rel = v - vstar
    speed = np.linalg.norm(rel, axis=-1, keepdims=True)
    center = 0.5 * (v + vstar)
    shift = 0.5 * am * rel + 0.5 * ap * speed * sigma
    vp = center + shift
    vsp = center - shift
    noop = (speed == 0.0)
    if np.any(noop):
        vp = np.where(noop, v, vp)
        vsp = np.where(noop, vstar, vsp)
    return vp, vsp


def lambda_of_chi(cos_chi, e):
    """Contraction factor lam(cos chi) = a_minus c + sqrt(a_minus^2 (c^2-1) + a_plus^2).

    Ranges over [e, 1]: lam(0) = sqrt(e) (the geometric mean of the
    endpoints), lam(+-1) hits 1 and e.
    """
    c = np.asarray(cos_chi, dtype=float)
    if np.any(np.abs(c) > 1.0 + 1e-12):
        raise ValueError("cos(chi) must lie in [-1, 1]")
    c = np.clip(c, -1.0, 1.0)
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)
    rad = am * am * (c * c - 1.0) + ap * ap
    out = am * c + np.sqrt(rad)
    return out if out.ndim else float(out)


def post_collide_omega(v, vstar, omega, e):
    """Apply the omega-form collision map (center-of-momentum sphere).

    v' = (v_plus + lam |v_minus| omega)/2 and symmetrically for v*'; lam is
    evaluated at cos(chi) = omega . unit(v_minus).  Zero relative velocity is
    a no-op pair.
    """
    v = _as_vec(v)
    vstar = _as_vec(vstar)
    omega = _as_vec(omega)
    rel = v - vstar
    speed = np.linalg.norm(rel, axis=-1, keepdims=True)
    safe = np.where(speed == 0.0, 1.0, speed)
    cos_chi = np.sum(omega * rel, axis=-1, keepdims=True) / safe
    lam = lambda_of_chi(np.clip(cos_chi, -1.0, 1.0), e)
    vplus = v + vstar
    half = 0.5 * lam * speed * omega
    vp = 0.5 * vplus + half
    vsp = 0.5 * vplus - half
    noop = (speed == 0.0)
    if np.any(noop):
        vp = np.where(noop, v, vp)
        vsp = np.where(noop, vstar, vsp)
    return vp, vsp


def energy_loss(v, vstar, sigma, e):
    """Kinetic energy change |v'|^2 + |v*'|^2 - |v|^2 - |v*|^2 of a collision.

    Closed form -(1-e^2)/2 * (1 - unit(v-v*) . sigma)/2 * |v-v*|^2; zero for
    elastic collisions (e = 1) and for zero relative velocity.
    """
    v = _as_vec(v)
    vstar = _as_vec(vstar)
    sigma = _as_vec(sigma)
    rel = v - vstar
    speed2 = np.sum(rel * rel, axis=-1)
    speed = np.sqrt(speed2)
    safe = np.where(speed == 0.0, 1.0, speed)
    cos_th = np.sum(rel * sigma, axis=-1) / safe
    out = -0.25 * (1.0 - e * e) * (1.0 - cos_th) * speed2
    out = np.where(speed == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def chart_lower_endpoint(e):
    """Smallest admissible B = cos(chi): B0 = a_minus / sqrt(a_plus^2 + a_minus^2).

    This is where theta hits pi/2 (A = 0); elastic collisions give B0 = 0.
    """
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)
    return am / np.hypot(ap, am)


def cos_theta_from_B(B, e):
    """A = cos(theta) = (lam(B) B - a_minus) / a_plus for B in [B0, 1]."""
    b = np.asarray(B, dtype=float)
    lo = chart_lower_endpoint(e)
    if np.any(b < lo - 1e-12) or np.any(b > 1.0 + 1e-12):
        raise ValueError(
            f"B outside the admissible range [{lo:.6g}, 1] of the angle chart"
        )
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)
    a = (lambda_of_chi(np.clip(b, -1.0, 1.0), e) * np.clip(b, -1.0, 1.0) - am) / ap
    a = np.clip(a, 0.0, 1.0)
    return a if a.ndim else float(a)


def theta_from_B(B, e):
    """Deviation angle theta = arccos(A(B)); endpoints map to pi/2 and 0."""
    out = np.arccos(cos_theta_from_B(B, e))
    return out if np.ndim(out) else float(out)


def dA_dB(B, e):
    """Jacobian dA/dB of the chart, Eq. form [am B + R]^2 / (ap R) with
    R = sqrt(am^2 (B^2 - 1) + ap^2).  Identically 1 for elastic collisions."""
    b = np.asarray(B, dtype=float)
    lo = chart_lower_endpoint(e)
    if np.any(b < lo - 1e-12) or np.any(b > 1.0 + 1e-12):
        raise ValueError(
            f"B outside the admissible range [{lo:.6g}, 1] of the angle chart"
        )
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)
    rad = np.sqrt(am * am * (b * b - 1.0) + ap * ap)
    out = (am * b + rad) ** 2 / (ap * rad)
    return out if out.ndim else float(out)


def _orthonormal_completion(u):
    """Any unit vector orthogonal to unit vector u (used for collinear pairs)."""
    # pick the axis least aligned with u to avoid cancellation
    k = int(np.argmin(np.abs(u)))
    basis = np.zeros(3)
    basis[k] = 1.0
    w = basis - u * u[k]
    return w / np.linalg.norm(w)


def pair_frame(v, vstar):
    """Orthonormal frame (e1, e2, e3) adapted to a colliding pair.

    e1 = unit(v - v*); e2 = unit(v x v*) when the pair is non-collinear
    (otherwise an arbitrary completion); e3 = e2 x e1.  With this handedness
    v + v* has no e2 component and a nonnegative e3 component, which is the
    orientation the chart identities below assume.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    rel = v - vstar
    nrel = np.linalg.norm(rel)
    if nrel == 0.0:
        raise ValueError("pair_frame undefined for zero relative velocity")
    e1 = rel / nrel
    cross = np.cross(v, vstar)
    ncross = np.linalg.norm(cross)
    degenerate = ncross < 1e-14 * max(1.0, np.linalg.norm(v) * np.linalg.norm(vstar))
    if degenerate:
        e2 = _orthonormal_completion(e1)
    else:
        e2 = cross / ncross
    e3 = np.cross(e2, e1)
    return e1, e2, e3, degenerate


def sigma_from_angles(theta, phi, frame):
    """Unit vector with polar angle theta around e1 and azimuth phi in (e2, e3)."""
    e1, e2, e3 = frame
    th = np.asarray(theta, dtype=float)
    ph = np.asarray(phi, dtype=float)
    st = np.sin(th)
    return (np.cos(th)[..., None] * e1
            + (st * np.cos(ph))[..., None] * e2
            + (st * np.sin(ph))[..., None] * e3)


@dataclass(frozen=True)
class CollisionChart:
    """All angle-chart variables of one (v, v*, sigma) collision."""

    theta: float
    phi: float
    chi: float
    mu: float
    beta: float
    B: float
    eta: float
    eta0: float
    lam: float
    cos_theta: float
    cos_chi: float
    cos_mu: float
    cos_beta: float
    collinear: bool

    def dphi_dmu_direct(self):
        """|d phi / d mu| from the azimuth relation: sin(mu)/sqrt(eta0^2-eta^2)."""
        gap = self.eta0**2 - self.eta**2
        if gap <= 0.0:
            return np.inf
        return np.sin(self.mu) / np.sqrt(gap)

    def dphi_deta(self):
        """|d phi / d mu| |d mu / d eta| = (eta0^2 - eta^2)^(-1/2)."""
        gap = self.eta0**2 - self.eta**2
        if gap <= 0.0:
            return np.inf
        return 1.0 / np.sqrt(gap)


def build_chart(v, vstar, sigma, e):
    """Compute every chart variable for one collision and check consistency.

    Raises ValueError for zero relative velocity (no chart exists) and
    AssertionError if |eta| exceeds eta0 beyond rounding, which would mean
    the frame conventions are broken.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    ap = 0.5 * (1.0 + e)
    am = 0.5 * (1.0 - e)

    e1, e2, e3, collinear = pair_frame(v, vstar)
    cos_theta = float(np.clip(np.dot(sigma, e1), -1.0, 1.0))
    if cos_theta < -COS_TOL:
        raise ValueError("sigma lies outside the symmetrized hemisphere "
                         "(cos theta < 0)")
    cos_theta = max(cos_theta, 0.0)
    theta = float(np.arccos(cos_theta))
    phi = float(np.arctan2(np.dot(sigma, e3), np.dot(sigma, e2)))

    lam_vec = ap * sigma + am * e1
    lam = float(np.linalg.norm(lam_vec))
    omega = lam_vec / lam
    cos_chi = float(np.clip(np.dot(omega, e1), -1.0, 1.0))
    chi = float(np.arccos(cos_chi))

    vplus = v + vstar
    nplus = np.linalg.norm(vplus)
    if nplus == 0.0:
        # head-on pair with equal speeds: v* = -v, necessarily collinear;
        # the center-of-momentum direction is undefined and mu plays no role.
        cos_beta = 0.0
        cos_mu = 0.0
        eta0 = 0.0
        eta = 0.0
    else:
        uplus = vplus / nplus
        cos_beta = float(np.clip(np.dot(uplus, e1), -1.0, 1.0))
        cos_mu = float(np.clip(np.dot(omega, uplus), -1.0, 1.0))
        sin_beta = np.sqrt(max(0.0, 1.0 - cos_beta * cos_beta))
        eta0 = float(sin_beta * np.sqrt(max(0.0, ap * ap - (lam * cos_chi - am) ** 2))
                     / lam)
        eta = cos_mu - cos_beta * cos_chi
    assert abs(eta) <= eta0 + 1e-12, (
        f"chart inconsistency: |eta| = {abs(eta)} > eta0 = {eta0}"
    )
    return CollisionChart(
        theta=theta,
        phi=phi,
        chi=chi,
        mu=float(np.arccos(np.clip(cos_mu, -1.0, 1.0))),
        beta=float(np.arccos(cos_beta)),
        B=cos_chi,
        eta=float(eta),
        eta0=float(eta0),
        lam=lam,
        cos_theta=cos_theta,
        cos_chi=cos_chi,
        cos_mu=float(cos_mu),
        cos_beta=cos_beta,
        collinear=bool(collinear),
    )
