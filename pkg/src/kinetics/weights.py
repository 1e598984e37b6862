"""Convex weight functions for moment functionals.

Three families, all convex, vanishing at 0, C^1, with closed-form first and
second derivatives:

* ``psi1``:      x**(1 + kappa/2)                       (homogeneous)
* ``psi2``:      (1 + x)**(1 + kappa/2) - 1             (shifted, >= psi1-type
                 growth but with bounded derivative ratios near 0)
* ``psi_trunc``: psi2 bent down to its tangent at x = m and cut to zero
                 beyond, i.e. psi2(x) - psi2(m) - psi2'(m) (x - m) on x <= m,
                 0 on x > m.  Compactly supported, C^1, nonnegative (a convex
                 function lies above its tangents), second derivative jumps
                 at m.

``psi_linear`` (psi(x) = x) is a degenerate member used as a surrogate in
identity tests: with it the collision functional collapses to the
energy-dissipation integral.
"""

from dataclasses import dataclass

import numpy as np

KINDS = ("psi1", "psi2", "psi_trunc", "linear")


@dataclass(frozen=True)
class WeightFunction:
    """Weight psi with closed-form psi, psi', psi''.

    kappa > 0 is the moment-order parameter (the weight grows like
    x**(1+kappa/2)); ``cutoff`` m is required for the truncated kind only.
    """

    kind: str
    kappa: float = 1.0
    cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}; choose {KINDS}")
        if self.kind != "linear" and not self.kappa > 0.0:
            raise ValueError(f"moment parameter kappa = {self.kappa} must be > 0")
        if self.kind == "psi_trunc":
            if self.cutoff is None or not self.cutoff > 0.0:
                raise ValueError("psi_trunc needs a positive cutoff m")

    # -- closed forms -----------------------------------------------------

    def value(self, x):
        x = np.asarray(x, dtype=float)
        p = 1.0 + 0.5 * self.kappa
        if self.kind == "linear":
            out = x.copy()
        elif self.kind == "psi1":
            out = x**p
        elif self.kind == "psi2":
            out = (1.0 + x) ** p - 1.0
        else:
            m = self.cutoff
            slope = p * (1.0 + m) ** (0.5 * self.kappa)
            out = np.where(
                x <= m,
                (1.0 + x) ** p - 1.0 - ((1.0 + m) ** p - 1.0) - slope * (x - m),
                0.0,
            )
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        p = 1.0 + 0.5 * self.kappa
        if self.kind == "linear":
            out = np.ones_like(x)
        elif self.kind == "psi1":
            out = p * x ** (0.5 * self.kappa)
        elif self.kind == "psi2":
            out = p * (1.0 + x) ** (0.5 * self.kappa)
        else:
            m = self.cutoff
            slope = p * (1.0 + m) ** (0.5 * self.kappa)
            out = np.where(x <= m,
                           p * (1.0 + x) ** (0.5 * self.kappa) - slope,
                           0.0)
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        p = 1.0 + 0.5 * self.kappa
        q = 0.5 * self.kappa * p
        if self.kind == "linear":
            out = np.zeros_like(x)
        elif self.kind == "psi1":
            out = q * x ** (0.5 * self.kappa - 1.0)
        elif self.kind == "psi2":
            out = q * (1.0 + x) ** (0.5 * self.kappa - 1.0)
        else:
            out = np.where(x <= self.cutoff,
                           q * (1.0 + x) ** (0.5 * self.kappa - 1.0),
                           0.0)
        return out if out.ndim else float(out)

    # -- derivative-ratio bounds used by the convexity sandwich -----------

    def derivative_ratio_bound(self, a):
        """eta1(a): a bound with psi'(a x) <= eta1(a) psi'(x) for all x >= 0,
        valid for a >= 1.

        For psi1 this is exact homogeneity a**(kappa/2); for psi2 it follows
        from (1 + a x) <= a (1 + x).
        """
        if a < 1.0:
            raise ValueError("ratio bounds are stated for a >= 1")
        if self.kind not in ("psi1", "psi2"):
            raise ValueError("ratio bounds defined for psi1/psi2 only")
        return a ** (0.5 * self.kappa)

    def second_derivative_ratio_bound(self, a):
        """eta2(a): psi''(a x) <= eta2(a) psi''(x) for a >= 1.

        a**(kappa/2) works for both families: psi1 scales like
        a**(kappa/2 - 1) <= a**(kappa/2); psi2 uses (1+ax) <= a(1+x) when
        kappa >= 2 and monotonicity of (1+x)**(kappa/2-1) when kappa < 2.
        """
        if a < 1.0:
            raise ValueError("ratio bounds are stated for a >= 1")
        if self.kind not in ("psi1", "psi2"):
            raise ValueError("ratio bounds defined for psi1/psi2 only")
        return a ** (0.5 * self.kappa)


def tangent_slope(kappa, m):
    """psi2'(m): the slope used by the truncated weight's linear extension."""
    return (1.0 + 0.5 * kappa) * (1.0 + m) ** (0.5 * kappa)


def linear_extension(kappa, m, x):
    """The affine piece p_(kappa,m)(x) = psi2'(m) x + psi2(m) - psi2'(m) m.

    The truncated-from-above weight (psi2 below m, this line beyond) equals
    psi_trunc + this line; the identity is exercised in tests.
    """
    x = np.asarray(x, dtype=float)
    p = 1.0 + 0.5 * kappa
    slope = tangent_slope(kappa, m)
    out = slope * x + ((1.0 + m) ** p - 1.0) - slope * m
    return out if out.ndim else float(out)


def capped_psi2(kappa, m, x):
    """psi2 continued by its tangent beyond m (the C^1 'bent' weight)."""
    x = np.asarray(x, dtype=float)
    p = 1.0 + 0.5 * kappa
    out = np.where(x <= m, (1.0 + x) ** p - 1.0, linear_extension(kappa, m, x))
    return out if out.ndim else float(out)
