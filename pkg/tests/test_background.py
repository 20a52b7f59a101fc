"""Curvature pipeline, presets and the concentration scalar."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hawkfol import (InitialDataSet, concentration_scalar, curvature_at, preset,
                     scalar_curvature)
from hawkfol.background import _fd_grad, _fd_hess
from hawkfol.errors import (ChartExceeded, DegenerateMetric, InvalidParams,
                            UnknownPreset)

ORIGIN = np.zeros(3)


def test_flat_curvature_vanishes(flat):
    c = curvature_at(flat, ORIGIN)
    assert c.scalar == pytest.approx(0.0, abs=1e-13)
    assert np.abs(c.ricci).max() < 1e-13
    assert np.abs(c.grad_scalar).max() < 1e-12
    assert np.abs(c.riemann).max() < 1e-13


def test_conformal_scalar_curvature_at_center(conformal):
    # g = (1 + eps |x|^2) delta has Sc(0) = -12 eps and hess Sc(0) = 60 eps^2 I
    c = curvature_at(conformal, ORIGIN)
    assert c.scalar == pytest.approx(-0.12, abs=1e-12)
    assert np.abs(c.grad_scalar).max() < 1e-11
    assert_allclose(c.hess_scalar, 0.006 * np.eye(3), atol=1e-9)
    assert_allclose(c.ricci, -0.04 * np.eye(3), atol=1e-13)


def test_conformal_hessian_against_fd_oracle(conformal):
    # independent oracle: direct stencils on the pointwise Sc map with
    # different steps than the implementation uses
    def sc_map(pts):
        return scalar_curvature(conformal, pts)

    pt = ORIGIN[None, :]
    grad = _fd_grad(sc_map, pt, 3.1e-3)[0]
    hess = _fd_hess(sc_map, pt, 4.3e-3)[0]
    c = curvature_at(conformal, ORIGIN)
    assert np.abs(c.grad_scalar - grad).max() < 1e-9
    assert np.abs(c.hess_scalar - hess).max() < 1e-7


def test_riemann_symmetries_and_contraction():
    ds = preset("schwarzschild_slice", mass=1.0)
    p = np.array([0.6, 0.1, -0.2])
    c = curvature_at(ds, p)
    rm = c.riemann
    assert np.abs(rm + rm.transpose(1, 0, 2, 3)).max() < 1e-12
    assert np.abs(rm + rm.transpose(0, 1, 3, 2)).max() < 1e-12
    assert np.abs(rm - rm.transpose(2, 3, 0, 1)).max() < 1e-12
    bianchi = rm + rm.transpose(0, 2, 3, 1) + rm.transpose(0, 3, 1, 2)
    assert np.abs(bianchi).max() < 1e-12
    g_inv = np.linalg.inv(ds.metric(p[None])[0])
    assert np.abs(np.einsum("ab,aibj->ij", g_inv, rm) - c.ricci).max() < 1e-12


def test_bianchi_and_contraction_in_fd_mode():
    ds = preset("conformal_quadratic", eps=0.05).with_finite_differences()
    c = curvature_at(ds, [0.2, -0.1, 0.15])
    rm = c.riemann
    bianchi = rm + rm.transpose(0, 2, 3, 1) + rm.transpose(0, 3, 1, 2)
    assert np.abs(bianchi).max() < 1e-8
    g_inv = np.linalg.inv(ds.metric(np.array([[0.2, -0.1, 0.15]]))[0])
    assert np.abs(np.einsum("ab,aibj->ij", g_inv, rm) - c.ricci).max() < 1e-8


@pytest.mark.parametrize("name,params", [
    ("conformal_quadratic", {"eps": 0.03}),
    ("schwarzschild_slice", {"mass": 1.0}),
    ("polynomial", {"g_quadratic": None}),
])
def test_finite_difference_agrees_with_closed_form(name, params):
    if name == "polynomial":
        rng = np.random.default_rng(3)
        c4 = rng.normal(size=(3, 3, 3, 3))
        c4 = c4 + c4.transpose(1, 0, 2, 3)
        c4 = 0.05 * (c4 + c4.transpose(0, 1, 3, 2))
        params = {"g_quadratic": c4}
    ds = preset(name, **params)
    ds_fd = ds.with_finite_differences()
    rng = np.random.default_rng(7)
    if name == "schwarzschild_slice":
        pts = rng.uniform(-1, 1, size=(100, 3))
        pts = 0.45 + 0.3 * np.abs(pts)  # keep away from the puncture
    else:
        pts = rng.uniform(-0.2, 0.2, size=(100, 3))
    for p in pts[:100]:
        c_cf = curvature_at(ds, p)
        c_fd = curvature_at(ds_fd, p)
        scale = max(np.abs(c_cf.ricci).max(), np.abs(c_cf.scalar), 1e-3)
        assert np.abs(c_fd.ricci - c_cf.ricci).max() < 1e-6 * scale
        assert abs(c_fd.scalar - c_cf.scalar) < 1e-6 * scale


class TestConcentrationScalar:
    def test_flat(self, flat):
        value, grad, hess = concentration_scalar(flat, ORIGIN)
        assert value == 0.0
        assert np.abs(grad).max() < 1e-13
        assert np.abs(hess).max() < 1e-10

    def test_constant_k(self, constant_k):
        # k = diag(1,0,0): f = 3/5 (tr k)^2 + 1/5 |k|^2 = 4/5 everywhere
        value, grad, _ = concentration_scalar(constant_k, [0.2, 0.1, 0.0])
        assert value == pytest.approx(0.8, abs=1e-13)
        assert np.abs(grad).max() < 1e-12

    def test_conformal(self, conformal):
        value, grad, hess = concentration_scalar(conformal, ORIGIN)
        assert value == pytest.approx(-0.12, abs=1e-12)
        assert np.abs(grad).max() < 1e-11
        assert_allclose(hess, 0.006 * np.eye(3), atol=1e-9)

    def test_gradient_matches_value_stencil(self, conformal_k):
        p = np.array([0.08, -0.03, 0.05])

        def f_map(pts):
            out = np.empty(pts.shape[0])
            for i, q in enumerate(pts):
                out[i] = concentration_scalar(conformal_k, q)[0]
            return out

        _, grad, _ = concentration_scalar(conformal_k, p)
        oracle = _fd_grad(f_map, p[None, :], 2e-3)[0]
        assert np.abs(grad - oracle).max() < 1e-5 * max(np.abs(grad).max(), 1.0)


class TestPresets:
    def test_unknown(self):
        with pytest.raises(UnknownPreset):
            preset("nope")

    def test_invalid_mass(self):
        with pytest.raises(InvalidParams):
            preset("schwarzschild_slice", mass=-1.0)

    def test_invalid_k(self):
        with pytest.raises(InvalidParams):
            preset("constant_k", k=[[0, 1, 0], [0, 0, 0], [0, 0, 0]])

    def test_schwarzschild_is_scalar_flat(self):
        ds = preset("schwarzschild_slice", mass=1.0)
        pts = np.array([[0.6, 0.0, 0.0], [0.4, 0.3, -0.2], [1.5, 0.2, 0.1]])
        assert np.abs(scalar_curvature(ds, pts)).max() < 1e-10

    def test_schwarzschild_rejects_puncture(self):
        ds = preset("schwarzschild_slice", mass=1.0)
        with pytest.raises(DegenerateMetric):
            ds.metric(np.zeros((1, 3)))

    def test_constant_k_invariants(self):
        a = 0.7
        ds = preset("constant_k", k=a * np.eye(3))
        c = curvature_at(ds, ORIGIN)
        assert c.tr_k == pytest.approx(3 * a, abs=1e-13)
        assert c.traceless_k_norm_sq == pytest.approx(0.0, abs=1e-13)
        assert c.traceless_k_norm_sq >= -1e-12

    def test_polynomial_ricci_from_quadratic_term(self):
        rng = np.random.default_rng(5)
        c4 = rng.normal(size=(3, 3, 3, 3))
        c4 = c4 + c4.transpose(1, 0, 2, 3)
        c4 = 0.1 * (c4 + c4.transpose(0, 1, 3, 2))
        ds = preset("polynomial", g_quadratic=c4)
        c_cf = curvature_at(ds, ORIGIN)
        c_fd = curvature_at(ds.with_finite_differences(), ORIGIN)
        assert np.abs(c_cf.ricci - c_fd.ricci).max() < 1e-7
        assert np.abs(c_cf.ricci).max() > 0.01  # the quadratic term does curve

    def test_polynomial_linear_k_gradient(self):
        k1 = np.zeros((3, 3, 3))
        k1[0] = np.diag([1.0, 0.5, -0.2])
        ds = preset("polynomial", k_linear=k1)
        c = curvature_at(ds, ORIGIN)
        assert np.abs(c.grad_k[0] - k1[0]).max() < 1e-12
        assert np.abs(c.grad_k[1:]).max() < 1e-12


def test_chart_exceeded():
    ds = preset("conformal_quadratic", eps=-0.25)  # chart radius 1.8
    with pytest.raises(ChartExceeded):
        curvature_at(ds, [2.0, 0.0, 0.0])


def test_degenerate_metric_detected():
    def bad_metric(pts):
        pts = np.asarray(pts)
        out = np.broadcast_to(np.diag([1.0, 1.0, -1.0]), pts.shape[:-1] + (3, 3))
        return out.copy()

    def zero_k(pts):
        pts = np.asarray(pts)
        return np.zeros(pts.shape[:-1] + (3, 3))

    ds = InitialDataSet(metric=bad_metric, k_tensor=zero_k)
    with pytest.raises(DegenerateMetric):
        curvature_at(ds, ORIGIN)


def test_derivative_mode_flag(conformal):
    assert conformal.derivative_mode == "closed_form"
    assert conformal.with_finite_differences().derivative_mode == "finite_difference"


def test_normal_coordinate_presets_centered(flat, conformal, constant_k):
    rng = np.random.default_rng(1)
    c4 = rng.normal(size=(3, 3, 3, 3))
    c4 = c4 + c4.transpose(1, 0, 2, 3)
    c4 = 0.1 * (c4 + c4.transpose(0, 1, 3, 2))
    poly = preset("polynomial", g_quadratic=c4)
    for ds in (flat, conformal, constant_k, poly):
        assert np.abs(ds.metric(ORIGIN[None])[0] - np.eye(3)).max() < 1e-15
        assert np.abs(ds.dmetric(ORIGIN[None])[0]).max() < 1e-15
