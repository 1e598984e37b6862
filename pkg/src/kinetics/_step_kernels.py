"""Per-step collision kernels (compiled and vectorized twins).

One simulation step consumes a flat array of uniforms with a fixed
layout: for C candidate pairs the first 2C entries drive a partial
Fisher-Yates draw of 2C distinct particle slots, then C acceptance
uniforms, C angle uniforms and C azimuth uniforms follow.  Both
backends consume the layout identically, so pair selection and
accept/reject decisions are bit-equal across them; post-collision
velocities can still differ in the last bits because transcendental
functions are evaluated by different libraries.

Momentum is conserved exactly per collision by construction: the second
particle receives `(v + v*) - v'` rather than an independently rounded
expression.
"""

from __future__ import annotations

import numpy as np

from .backend import njit_if_enabled
from .kernels import smooth_cut

__all__ = ["collide_numba", "collide_numpy", "UNIFORMS_PER_CANDIDATE"]

# Layout multiplier for the per-step uniform draw (2 pair slots +
# acceptance + angle + azimuth per candidate).
UNIFORMS_PER_CANDIDATE = 5


@njit_if_enabled()
def collide_numba(vel, perm, n_cand, u_all, a_plus, a_minus, gamma, n_moll,
                  rate_cap, breaks, c0, c1, c2, c3):
    """Apply one step's candidate collisions in place; returns accepted count."""
    n_part = vel.shape[0]
    two_c = 2 * n_cand
    n_breaks = breaks.shape[0]

    for j in range(two_c):
        k = j + int(u_all[j] * (n_part - j))
        if k >= n_part:
            k = n_part - 1
        tmp = perm[j]
        perm[j] = perm[k]
        perm[k] = tmp

    accepted = 0
    for i in range(n_cand):
        p = perm[2 * i]
        q = perm[2 * i + 1]
        rx = vel[p, 0] - vel[q, 0]
        ry = vel[p, 1] - vel[q, 1]
        rz = vel[p, 2] - vel[q, 2]
        r2 = rx * rx + ry * ry + rz * rz
        if r2 <= 0.0:
            continue
        r = np.sqrt(r2)
        ratio = r / n_moll
        if ratio >= 2.0:
            continue
        if ratio <= 1.0:
            cutval = 1.0
        else:
            ha = np.exp(-1.0 / (2.0 - ratio))
            hb = np.exp(-1.0 / (ratio - 1.0))
            cutval = ha / (ha + hb)
        rate = r ** gamma * cutval
        if u_all[two_c + i] * rate_cap >= rate:
            continue

        u_theta = u_all[two_c + n_cand + i]
        idx = np.searchsorted(breaks, u_theta, side="right") - 1
        if idx < 0:
            idx = 0
        elif idx > n_breaks - 2:
            idx = n_breaks - 2
        t = u_theta - breaks[idx]
        theta = ((c0[idx] * t + c1[idx]) * t + c2[idx]) * t + c3[idx]
        if theta < 0.0:
            theta = 0.0
        phi = 2.0 * np.pi * u_all[two_c + 2 * n_cand + i]

        ex = rx / r
        ey = ry / r
        ez = rz / r
        if abs(ex) < 0.5:
            ax, ay, az = 1.0, 0.0, 0.0
        else:
            ax, ay, az = 0.0, 1.0, 0.0
        bx = ay * ez - az * ey
        by = az * ex - ax * ez
        bz = ax * ey - ay * ex
        bn = np.sqrt(bx * bx + by * by + bz * bz)
        bx /= bn
        by /= bn
        bz /= bn
        cx = ey * bz - ez * by
        cy = ez * bx - ex * bz
        cz = ex * by - ey * bx

        st = np.sin(theta)
        ct = np.cos(theta)
        cp = np.cos(phi)
        sp = np.sin(phi)
        sx = ct * ex + st * (cp * bx + sp * cx)
        sy = ct * ey + st * (cp * by + sp * cy)
        sz = ct * ez + st * (cp * bz + sp * cz)

        px = vel[p, 0] + vel[q, 0]
        py = vel[p, 1] + vel[q, 1]
        pz = vel[p, 2] + vel[q, 2]
        v1x = 0.5 * px + 0.5 * (a_minus * rx + a_plus * r * sx)
        v1y = 0.5 * py + 0.5 * (a_minus * ry + a_plus * r * sy)
        v1z = 0.5 * pz + 0.5 * (a_minus * rz + a_plus * r * sz)
        vel[p, 0] = v1x
        vel[p, 1] = v1y
        vel[p, 2] = v1z
        vel[q, 0] = px - v1x
        vel[q, 1] = py - v1y
        vel[q, 2] = pz - v1z
        accepted += 1
    return accepted


def collide_numpy(vel, perm, n_cand, u_all, a_plus, a_minus, gamma, n_moll,
                  rate_cap, breaks, c0, c1, c2, c3):
    """Vectorized twin of :func:`collide_numba` with identical draw layout."""
    n_part = vel.shape[0]
    two_c = 2 * n_cand
    for j in range(two_c):
        k = j + int(u_all[j] * (n_part - j))
        if k >= n_part:
            k = n_part - 1
        perm[j], perm[k] = perm[k], perm[j]
    if n_cand == 0:
        return 0

    first = perm[0:two_c:2]
    second = perm[1:two_c:2]
    v1 = vel[first]
    v2 = vel[second]
    rel = v1 - v2
    r2 = np.einsum("ij,ij->i", rel, rel)
    r = np.sqrt(r2)
    with np.errstate(invalid="ignore"):
        rate = np.where(r2 > 0.0, r ** gamma * smooth_cut(r / n_moll), 0.0)
    acc = u_all[two_c:two_c + n_cand] * rate_cap < rate
    if not np.any(acc):
        return 0

    sel = np.nonzero(acc)[0]
    rel = rel[sel]
    r = r[sel]
    v1 = v1[sel]
    v2 = v2[sel]

    u_theta = u_all[two_c + n_cand:two_c + 2 * n_cand][sel]
    idx = np.clip(np.searchsorted(breaks, u_theta, side="right") - 1, 0, len(breaks) - 2)
    t = u_theta - breaks[idx]
    theta = np.clip(((c0[idx] * t + c1[idx]) * t + c2[idx]) * t + c3[idx], 0.0, None)
    phi = 2.0 * np.pi * u_all[two_c + 2 * n_cand:two_c + 3 * n_cand][sel]

    e1 = rel / r[:, None]
    helper = np.where(np.abs(e1[:, 0:1]) < 0.5, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e2 = np.cross(helper, e1)
    e2 /= np.linalg.norm(e2, axis=1, keepdims=True)
    e3 = np.cross(e1, e2)

    st = np.sin(theta)[:, None]
    sigma = (np.cos(theta)[:, None] * e1
             + st * (np.cos(phi)[:, None] * e2 + np.sin(phi)[:, None] * e3))

    vplus = v1 + v2
    v1_new = 0.5 * vplus + 0.5 * (a_minus * rel + (a_plus * r)[:, None] * sigma)
    vel[first[sel]] = v1_new
    vel[second[sel]] = vplus - v1_new
    return int(sel.size)
