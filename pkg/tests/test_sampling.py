"""Tests for inverse-CDF tables, initial-condition laws, and RNG streams."""

import numpy as np
import pytest
from scipy import integrate, stats

from kinetics.kernels import (
    AngularKernel,
    CutoffAngularKernel,
    sphere_mass_bn,
)
from kinetics.sampling import (
    INIT_STREAM,
    PAIR_STREAM,
    PROBE_STREAM,
    STEP_STREAM,
    build_theta_table,
    exact_theta_inverse,
    make_stream,
    radial_cdf,
    sample_bi_maxwellian,
    sample_maxwellian,
    sample_power_tail,
    sample_theta,
    theta_cdf,
)

HALF_PI = 0.5 * np.pi
SEED = 20260825

CUTOFFS = [
    CutoffAngularKernel(AngularKernel(s=0.25, K=1.0), 8.0),
    CutoffAngularKernel(AngularKernel(s=0.4, K=0.5), 100.0),
    # cap never crossed: pure n sin(theta) density
    CutoffAngularKernel(AngularKernel(s=0.25, K=1.0), 0.5),
]


def test_theta_table_mass_matches_sphere_mass():
    # table.mass is the polar integral; the spherical mass adds the azimuth
    for cutoff in CUTOFFS:
        table = build_theta_table(cutoff)
        oracle = sphere_mass_bn(cutoff, rel_tol=1e-12)
        assert 2.0 * np.pi * table.mass == pytest.approx(oracle, rel=1e-9)


def test_exact_inverse_is_exact():
    u = np.linspace(0.0, 1.0, 1001)
    for cutoff in CUTOFFS:
        theta = exact_theta_inverse(cutoff, u)
        assert np.all(np.diff(theta) >= 0.0)
        assert theta[0] == 0.0
        assert theta[-1] == pytest.approx(HALF_PI, rel=1e-14)
        np.testing.assert_allclose(theta_cdf(cutoff, theta), u, atol=1e-12)


def test_tabulated_inverse_tracks_exact_cdf():
    u = np.linspace(0.0, 1.0, 20001)
    for cutoff in CUTOFFS:
        table = build_theta_table(cutoff)
        theta = sample_theta(table, u)
        assert np.all(theta >= 0.0) and np.all(theta <= HALF_PI)
        assert np.all(np.diff(theta) >= -1e-12)
        err = np.max(np.abs(theta_cdf(cutoff, theta) - u))
        assert err < 5e-6


def test_sample_theta_clips_out_of_range_uniforms():
    table = build_theta_table(CUTOFFS[0])
    assert sample_theta(table, np.array([-0.5]))[0] == 0.0
    assert sample_theta(table, np.array([1.5]))[0] == pytest.approx(HALF_PI, rel=1e-12)


def test_power_tail_matches_beta_law():
    # with u = |v|^2 / (1 + |v|^2) the radius law maps to Beta(3/2, (q-3)/2)
    rng = np.random.default_rng(SEED)
    for q in (6.0, 9.0):
        v = sample_power_tail(q, 20000, rng)
        r2 = np.sum(v * v, axis=1)
        u = r2 / (1.0 + r2)
        res = stats.kstest(u, stats.beta(1.5, 0.5 * (q - 3.0)).cdf)
        assert res.pvalue > 1e-3


def test_power_tail_directions_isotropic():
    rng = np.random.default_rng(SEED)
    v = sample_power_tail(6.0, 40000, rng)
    unit = v / np.linalg.norm(v, axis=1, keepdims=True)
    assert np.max(np.abs(unit.mean(axis=0))) < 0.01
    np.testing.assert_allclose((unit**2).mean(axis=0), 1.0 / 3.0, atol=0.01)


def test_radial_cdf_against_quadrature_oracle():
    q = 6.0
    density = lambda r: r * r * (1.0 + r * r) ** (-0.5 * q)
    total, _ = integrate.quad(density, 0.0, np.inf)
    for r in (0.3, 1.0, 4.0):
        part, _ = integrate.quad(density, 0.0, r)
        assert float(radial_cdf(q, r)) == pytest.approx(part / total, abs=1e-8)
    assert float(radial_cdf(q, 0.0)) == 0.0
    assert float(radial_cdf(q, 1e9)) == pytest.approx(1.0, abs=1e-6)


def test_maxwellian_moments():
    rng = np.random.default_rng(SEED)
    t = 2.5
    n = 200000
    v = sample_maxwellian(t, n, rng)
    assert v.shape == (n, 3)
    se_mean = np.sqrt(t / n)
    assert np.max(np.abs(v.mean(axis=0))) < 5.0 * se_mean
    np.testing.assert_allclose(v.var(axis=0), t, rtol=5.0 * np.sqrt(2.0 / n))
    assert np.mean(np.sum(v * v, axis=1)) == pytest.approx(3.0 * t, rel=0.02)


def test_bi_maxwellian_moments_and_validation():
    rng = np.random.default_rng(SEED)
    t1, t2, frac = 0.5, 4.0, 0.3
    v = sample_bi_maxwellian(t1, t2, frac, 200000, rng)
    target = 3.0 * (frac * t1 + (1.0 - frac) * t2)
    assert np.mean(np.sum(v * v, axis=1)) == pytest.approx(target, rel=0.02)
    with pytest.raises(ValueError):
        sample_bi_maxwellian(t1, t2, 1.5, 10, rng)
    with pytest.raises(ValueError):
        sample_bi_maxwellian(-1.0, t2, 0.5, 10, rng)


def test_make_stream_determinism():
    a = make_stream(SEED, STEP_STREAM, word0=7).random(8)
    b = make_stream(SEED, STEP_STREAM, word0=7).random(8)
    np.testing.assert_array_equal(a, b)


def test_make_stream_independence():
    base = make_stream(SEED, STEP_STREAM).random(8)
    assert not np.array_equal(base, make_stream(SEED + 1, STEP_STREAM).random(8))
    assert not np.array_equal(base, make_stream(SEED, PROBE_STREAM).random(8))
    assert not np.array_equal(base, make_stream(SEED, STEP_STREAM, word0=1).random(8))
    assert not np.array_equal(
        base, make_stream(SEED, STEP_STREAM, word1=1).random(8)
    )


def test_make_stream_insensitive_to_draw_history():
    # drawing from one stream must not perturb another
    s1 = make_stream(SEED, STEP_STREAM, word0=1)
    _ = s1.random(1000)
    fresh = make_stream(SEED, STEP_STREAM, word0=2).random(4)
    np.testing.assert_array_equal(
        fresh, make_stream(SEED, STEP_STREAM, word0=2).random(4)
    )


def test_stream_salts_distinct():
    salts = {int(INIT_STREAM), int(STEP_STREAM), int(PROBE_STREAM), int(PAIR_STREAM)}
    assert len(salts) == 4
