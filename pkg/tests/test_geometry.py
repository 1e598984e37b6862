"""Collision maps, adapted frames, and the angle-chart change of variables."""

import numpy as np
import pytest

from kinetics.geometry import (
    build_chart,
    chart_lower_endpoint,
    cos_theta_from_B,
    dA_dB,
    energy_loss,
    lambda_of_chi,
    pair_frame,
    post_collide_omega,
    post_collide_sigma,
    sigma_from_angles,
    theta_from_B,
)

RNG = np.random.default_rng(20260825)
E_VALUES = (0.3, 0.5, 0.8, 1.0)


def _random_sigma(size):
    z = RNG.normal(size=(size, 3))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def test_sigma_map_conserves_momentum_and_matches_loss():
    v = RNG.normal(0.0, 1.4, (200, 3))
    vstar = RNG.normal(0.0, 1.4, (200, 3))
    sigma = _random_sigma(200)
    for e in E_VALUES:
        vp, vsp = post_collide_sigma(v, vstar, sigma, e)
        np.testing.assert_allclose(vp + vsp, v + vstar, atol=1e-12)
        actual = (
            np.einsum("ij,ij->i", vp, vp)
            + np.einsum("ij,ij->i", vsp, vsp)
            - np.einsum("ij,ij->i", v, v)
            - np.einsum("ij,ij->i", vstar, vstar)
        )
        np.testing.assert_allclose(actual, energy_loss(v, vstar, sigma, e), atol=1e-12)


def test_elastic_map_preserves_energy_exactly_in_closed_form():
    v = RNG.normal(size=(50, 3))
    vstar = RNG.normal(size=(50, 3))
    sigma = _random_sigma(50)
    assert np.all(energy_loss(v, vstar, sigma, 1.0) == 0.0)


def test_energy_loss_is_nonpositive():
    v = RNG.normal(size=(500, 3))
    vstar = RNG.normal(size=(500, 3))
    sigma = _random_sigma(500)
    for e in (0.3, 0.8):
        assert np.all(energy_loss(v, vstar, sigma, e) <= 0.0)


def test_zero_relative_velocity_is_a_noop():
    v = np.array([0.3, -1.0, 2.0])
    sigma = np.array([0.0, 0.0, 1.0])
    vp, vsp = post_collide_sigma(v, v, sigma, 0.5)
    np.testing.assert_array_equal(vp, v)
    np.testing.assert_array_equal(vsp, v)
    assert energy_loss(v, v, sigma, 0.5) == 0.0


def test_sigma_form_recovers_pre_collision_invariants():
    # sigma aligned with the relative velocity reproduces (v, v*) elastically
    v = np.array([1.0, 0.5, -0.2])
    vstar = np.array([-0.5, 0.1, 0.4])
    rel = v - vstar
    sigma = rel / np.linalg.norm(rel)
    vp, vsp = post_collide_sigma(v, vstar, sigma, 1.0)
    np.testing.assert_allclose(vp, v, atol=1e-14)
    np.testing.assert_allclose(vsp, vstar, atol=1e-14)


def test_lambda_range_and_endpoints():
    c = np.linspace(-1.0, 1.0, 501)
    for e in (0.3, 0.5, 0.8):
        lam = lambda_of_chi(c, e)
        assert np.all((lam >= e - 1e-12) & (lam <= 1.0 + 1e-12))
        np.testing.assert_allclose(lambda_of_chi(1.0, e), 1.0, rtol=1e-14)
        np.testing.assert_allclose(lambda_of_chi(-1.0, e), e, rtol=1e-14)
        np.testing.assert_allclose(lambda_of_chi(0.0, e), np.sqrt(e), rtol=1e-14)
    np.testing.assert_allclose(lambda_of_chi(c, 1.0), 1.0, rtol=1e-14)


def test_omega_and_sigma_forms_agree():
    # applying the sigma map and reading off the contracted direction omega
    # must give the same pair as the omega-form map
    v = RNG.normal(size=3)
    vstar = RNG.normal(size=3)
    sigma = _random_sigma(1)[0]
    for e in (0.3, 0.8):
        vp_s, vsp_s = post_collide_sigma(v, vstar, sigma, e)
        rel = v - vstar
        ap, am = 0.5 * (1 + e), 0.5 * (1 - e)
        lam_vec = ap * sigma + am * rel / np.linalg.norm(rel)
        omega = lam_vec / np.linalg.norm(lam_vec)
        vp_w, vsp_w = post_collide_omega(v, vstar, omega, e)
        np.testing.assert_allclose(vp_w, vp_s, atol=1e-12)
        np.testing.assert_allclose(vsp_w, vsp_s, atol=1e-12)


def test_pair_frame_orthonormal_and_oriented():
    for _ in range(20):
        v = RNG.normal(size=3)
        vstar = RNG.normal(size=3)
        e1, e2, e3, degenerate = pair_frame(v, vstar)
        gram = np.stack([e1, e2, e3]) @ np.stack([e1, e2, e3]).T
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
        rel = v - vstar
        np.testing.assert_allclose(e1, rel / np.linalg.norm(rel), atol=1e-12)
        assert not degenerate
        # orientation: v + v* has no e2 component, nonnegative e3 component
        assert abs(np.dot(v + vstar, e2)) < 1e-12
        assert np.dot(v + vstar, e3) >= -1e-12


def test_pair_frame_flags_collinear_pairs():
    v = np.array([1.0, 1.0, 0.0])
    _, _, _, degenerate = pair_frame(v, 2.0 * v)
    assert degenerate
    with pytest.raises(ValueError):
        pair_frame(v, v)


def test_sigma_from_angles_geometry():
    v = RNG.normal(size=3)
    vstar = RNG.normal(size=3)
    e1, e2, e3, _ = pair_frame(v, vstar)
    theta = np.array([0.0, 0.4, 1.2])
    phi = np.array([0.3, 2.0, -1.0])
    sigma = sigma_from_angles(theta, phi, (e1, e2, e3))
    np.testing.assert_allclose(np.linalg.norm(sigma, axis=-1), 1.0, atol=1e-12)
    np.testing.assert_allclose(sigma @ e1, np.cos(theta), atol=1e-12)


def test_chart_lower_endpoint_values():
    assert chart_lower_endpoint(1.0) == 0.0
    for e in (0.3, 0.5, 0.8):
        ap, am = 0.5 * (1 + e), 0.5 * (1 - e)
        expected = am / np.hypot(ap, am)
        np.testing.assert_allclose(chart_lower_endpoint(e), expected, rtol=1e-14)
        # endpoints of the chart: B0 -> theta = pi/2, B = 1 -> theta = 0
        np.testing.assert_allclose(theta_from_B(expected, e), 0.5 * np.pi, atol=1e-7)
        np.testing.assert_allclose(theta_from_B(1.0, e), 0.0, atol=1e-12)


def test_chart_jacobian_matches_finite_differences():
    for e in (0.3, 0.5, 0.8, 1.0):
        lo = chart_lower_endpoint(e)
        b = np.linspace(lo + 0.05, 0.995, 25)
        h = 1e-6
        fd = (cos_theta_from_B(b + h, e) - cos_theta_from_B(b - h, e)) / (2 * h)
        np.testing.assert_allclose(dA_dB(b, e), fd, rtol=5e-8)


def test_chart_jacobian_elastic_identity():
    b = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(dA_dB(b, 1.0), 1.0, rtol=1e-14)
    with pytest.raises(ValueError):
        dA_dB(chart_lower_endpoint(0.5) - 0.1, 0.5)


def test_chart_roundtrip_through_collision():
    # cos(chi) read from the applied collision map matches the chart A(B)
    for e in (0.3, 0.8):
        for _ in range(30):
            v = RNG.normal(size=3)
            vstar = RNG.normal(size=3)
            e1, e2, e3, _ = pair_frame(v, vstar)
            theta = RNG.uniform(0.05, 0.5 * np.pi - 0.05)
            sigma = sigma_from_angles(theta, RNG.uniform(0, 2 * np.pi), (e1, e2, e3))
            chart = build_chart(v, vstar, sigma, e)
            np.testing.assert_allclose(chart.cos_theta, np.cos(theta), atol=1e-12)
            np.testing.assert_allclose(
                cos_theta_from_B(chart.B, e), chart.cos_theta, atol=1e-10
            )
            np.testing.assert_allclose(chart.lam, lambda_of_chi(chart.B, e), atol=1e-12)
            assert abs(chart.eta) <= chart.eta0 + 1e-12


def test_build_chart_rejects_zero_relative_velocity():
    v = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        build_chart(v, v, np.array([0.0, 0.0, 1.0]), 0.5)
