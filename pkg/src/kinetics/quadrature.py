"""Panel-based Gauss-Legendre quadrature helpers.

All the heavyweight integrals in this package (angular kernel masses, the
scattering-angle functionals and their transformed-variable twins, radial
Fourier transforms) are evaluated on explicit panel decompositions: smooth on
each panel, with panel edges placed at the known breakpoints (cutoff
crossovers, mollifier edges, sine half-periods) and refined geometrically
toward integrable endpoint singularities.  This module holds the shared
plumbing.
"""

from functools import lru_cache

import numpy as np

#: deepest geometric refinement level (panel edges at span * 2**-k)
MAX_REFINE_LEVEL = 40


@lru_cache(maxsize=64)
def gauss_legendre(order):
    """Cached Gauss-Legendre nodes/weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(edges, order):
    """Nodes and weights for composite GL quadrature over consecutive panels.

    Parameters
    ----------
    edges : increasing 1-D array of panel boundaries
    order : GL order per panel

    Returns flat arrays (nodes, weights) covering [edges[0], edges[-1]].
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = gauss_legendre(order)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def geometric_edges(a, b, levels, toward="left"):
    """Panel edges on [a, b] refined geometrically toward one endpoint.

    ``levels`` extra edges are inserted at distances (b-a) * 2**-k from the
    refined endpoint, k = 1..levels (capped at MAX_REFINE_LEVEL).  The result
    always contains a and b.
    """
    if b <= a:
        raise ValueError("empty interval")
    levels = int(min(levels, MAX_REFINE_LEVEL))
    span = b - a
    offsets = span * np.ldexp(1.0, -np.arange(1, levels + 1))
    if toward == "left":
        interior = a + offsets
    elif toward == "right":
        interior = b - offsets
    else:
        raise ValueError("toward must be 'left' or 'right'")
    edges = np.unique(np.concatenate([[a, b], interior]))
    return edges


def integrate_panels(fn, edges, order):
    """Composite GL integral of a vectorized ``fn`` over the given panels."""
    nodes, weights = panel_nodes(edges, order)
    return float(np.dot(weights, fn(nodes)))


def integrate_to_tolerance(fn, edges, rel_tol, *, order=12, max_doublings=3,
                           abs_floor=1.0):
    """Integrate with error-controlled order doubling.

    Evaluates on the panel set at ``order`` and ``2*order`` nodes (and keeps
    doubling up to ``max_doublings`` times) until successive estimates agree to
    ``rel_tol`` relative to max(abs_floor, |I|).  Returns (value, est_error,
    converged).
    """
    prev = integrate_panels(fn, edges, order)
    for k in range(1, max_doublings + 1):
        cur = integrate_panels(fn, edges, order * 2**k)
        err = abs(cur - prev)
        if err <= rel_tol * max(abs_floor, abs(cur)):
            return cur, err, True
        prev = cur
    return prev, err, False
