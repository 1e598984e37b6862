"""Tests for the sphere-averaged weight functionals and dominance fits."""

import numpy as np
import pytest
from scipy import integrate

from kinetics.kernels import AngularKernel, CutoffAngularKernel, cap_crossover, eval_bn
from kinetics.povzner import (
    appendix_convexity_check,
    check_G_bound,
    check_H_bound,
    fit_constants,
    h_scaling_probe,
    hg_decompose,
    k_direct,
    k_transformed,
)
from kinetics.weights import WeightFunction

CUTOFF = CutoffAngularKernel(AngularKernel(s=0.25, K=1.0), 8.0)
PSI1 = WeightFunction("psi1", kappa=0.5)
PSI2 = WeightFunction("psi2", kappa=3.0)
LINEAR = WeightFunction("linear")

RNG = np.random.default_rng(20260825)
PAIRS = list(1.5 * RNG.standard_normal((6, 2, 3)))


def _angular_moment(cutoff):
    """2 pi * int (1 - cos th) b_n(cos th) sin th dth by adaptive quadrature."""
    theta_c = cap_crossover(cutoff)
    fn = lambda th: (1.0 - np.cos(th)) * eval_bn(cutoff, th) * np.sin(th)
    val, err = integrate.quad(fn, 0.0, 0.5 * np.pi, points=[theta_c], limit=200)
    return 2.0 * np.pi * val, err


def test_linear_weight_reduces_to_energy_dissipation():
    # psi(x) = x collapses the functional to the closed-form energy loss
    moment, err = _angular_moment(CUTOFF)
    for v, vstar in PAIRS[:3]:
        u2 = float(np.sum((v - vstar) ** 2))
        for e in (0.3, 0.8):
            oracle = -0.25 * (1.0 - e * e) * u2 * moment
            val = k_direct(v, vstar, LINEAR, CUTOFF, e, rel_tol=1e-9)
            assert val == pytest.approx(oracle, rel=1e-7, abs=10.0 * err * u2)


def test_linear_weight_elastic_limit_vanishes():
    v, vstar = PAIRS[0]
    scale = float(np.sum((v - vstar) ** 2))
    val = k_direct(v, vstar, LINEAR, CUTOFF, 1.0, rel_tol=1e-9)
    assert abs(val) < 1e-10 * scale


def test_direct_and_transformed_routes_agree():
    for weight in (PSI1, PSI2):
        for v, vstar in PAIRS[:4]:
            a = k_direct(v, vstar, weight, CUTOFF, 0.5, rel_tol=1e-9)
            b = k_transformed(v, vstar, weight, CUTOFF, 0.5, rel_tol=1e-9)
            ref = max(abs(a), abs(b), 1e-9)
            assert abs(a - b) <= 1e-7 * ref


def test_decomposition_totals_match_direct_route():
    for weight in (PSI1, PSI2):
        for v, vstar in PAIRS[:4]:
            parts = hg_decompose(v, vstar, weight, CUTOFF, 0.5, rel_tol=1e-9)
            total = parts.h1 - parts.h2 + parts.g
            direct = k_direct(v, vstar, weight, CUTOFF, 0.5, rel_tol=1e-9)
            ref = max(abs(total), abs(direct), 1e-9)
            assert abs(total - direct) <= 1e-6 * ref


def test_decomposition_sign_structure():
    for weight in (PSI1, PSI2):
        for v, vstar in PAIRS:
            parts = hg_decompose(v, vstar, weight, CUTOFF, 0.5, rel_tol=1e-8)
            scale = max(abs(parts.h1), 1.0)
            assert parts.h2 >= -1e-12 * scale
            assert parts.g >= -1e-10 * scale


def test_collinear_pair_has_no_curvature():
    v = np.array([1.0, 0.2, -0.3])
    parts = hg_decompose(v, 2.0 * v, PSI1, CUTOFF, 0.5, rel_tol=1e-8)
    assert parts.g == 0.0
    total = parts.h1 - parts.h2 + parts.g
    direct = k_direct(v, 2.0 * v, PSI1, CUTOFF, 0.5, rel_tol=1e-8)
    assert total == pytest.approx(direct, rel=1e-7)


def test_coincident_velocities_give_zero():
    v = np.array([0.4, -1.0, 2.0])
    assert k_direct(v, v, PSI1, CUTOFF, 0.5) == 0.0
    parts = hg_decompose(v, v, PSI1, CUTOFF, 0.5)
    assert (parts.h1, parts.h2, parts.g) == (0.0, 0.0, 0.0)


def test_sandwich_closed_form_for_quadratic_weight():
    # kappa = 2, psi1: mid = 2xy, lower margin 1.5xy, upper margin 6xy
    w = WeightFunction("psi1", kappa=2.0)
    x = np.array([0.3, 1.0, 4.0])
    y = np.array([0.7, 2.5, 0.1])
    lower, upper = appendix_convexity_check(w, x, y)
    np.testing.assert_allclose(lower, 1.5 * x * y, rtol=1e-13)
    np.testing.assert_allclose(upper, 6.0 * x * y, rtol=1e-13)


def test_sandwich_nonnegative_margins():
    x = 10.0 ** RNG.uniform(-3.0, 3.0, size=400)
    y = 10.0 ** RNG.uniform(-3.0, 3.0, size=400)
    for kind in ("psi1", "psi2"):
        for kappa in (0.5, 1.0, 3.0):
            w = WeightFunction(kind, kappa=kappa)
            lower, upper = appendix_convexity_check(w, x, y)
            scale = np.maximum(w.value(x + y), 1.0)
            assert np.all(lower >= -1e-9 * scale)
            assert np.all(upper >= -1e-9 * scale)


def test_sandwich_rejects_other_weight_kinds():
    with pytest.raises(ValueError):
        appendix_convexity_check(LINEAR, 1.0, 1.0)
    with pytest.raises(ValueError):
        appendix_convexity_check(
            WeightFunction("psi_trunc", kappa=1.0, cutoff=4.0), 1.0, 1.0
        )


def test_drift_scaling_exponent():
    for kappa in (0.5, 3.0):
        w = WeightFunction("psi1", kappa=kappa)
        slope, radii, values = h_scaling_probe(w, CUTOFF, 0.5, rel_tol=1e-6)
        assert slope == pytest.approx(2.0 + kappa, abs=0.05)
        assert len(radii) == len(values)


def test_fit_constants_feasible_with_valid_margins():
    pairs = 1.5 * np.random.default_rng(7).standard_normal((10, 2, 3))
    fit = fit_constants(pairs, PSI1, CUTOFF, 0.5, rel_tol=1e-7)
    assert fit.feasible
    assert fit.witness is None
    assert fit.c1 > 0.0 and fit.c2 >= 0.0 and fit.c_g >= 0.0
    assert fit.kappa_branch == "product"
    assert fit.h_margins.shape == (10,)
    assert np.all(fit.h_margins >= -1e-9)
    assert np.all(fit.g_margins >= -1e-9)
    # the public single-pair checks reproduce the fitted margins' signs
    v, vstar = pairs[0]
    hb = check_H_bound(v, vstar, PSI1, CUTOFF, 0.5, fit.c1, fit.c2)
    gb = check_G_bound(v, vstar, PSI1, CUTOFF, 0.5, fit.c_g)
    assert hb.margin >= -1e-9
    assert gb.margin >= -1e-9


def test_fit_constants_branch_switch():
    pairs = 1.5 * np.random.default_rng(7).standard_normal((6, 2, 3))
    fit = fit_constants(pairs, PSI2, CUTOFF, 0.5, rel_tol=1e-6)
    assert fit.kappa_branch == "weighted"
    assert fit.feasible


def test_fit_constants_respects_c1_floor():
    # a demanding floor on the good constant stays feasible: the fit pays
    # for it with a larger c2, and every margin remains nonnegative
    pairs = 1.5 * np.random.default_rng(7).standard_normal((6, 2, 3))
    base = fit_constants(pairs, PSI1, CUTOFF, 0.5, rel_tol=1e-6)
    forced = fit_constants(pairs, PSI1, CUTOFF, 0.5, rel_tol=1e-6, c1_floor=1e6)
    assert forced.feasible
    assert forced.c1 >= 1e6
    assert forced.c2 > base.c2
    assert np.all(forced.h_margins >= -1e-9 * np.abs(forced.h_values))
