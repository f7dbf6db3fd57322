import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import spectral_grad, spectral_lap
from rfl.errors import GridMismatch, NonPositiveRadius
from rfl.geometry import (
    ConformalMetric,
    SphereMetric,
    SymTensorField,
    conformal_preset,
    fisher_logmean,
    grad_norm_sq,
    hessian,
    laplace_beltrami,
    ricci_tensor,
    scalar_curvature,
    sphere_quantities,
    sphere_ricci_norm_sq,
    sqrt_dirichlet,
    tensor_norm_sq,
    trace,
)
from rfl.gridcore import Grid2D, ScalarField, convergence_order, integrate_array

L2 = (2 * np.pi, 2 * np.pi)


def bump(n):
    g = Grid2D(n, n)
    return g, conformal_preset("bump1", g)


def test_flat_and_constant_metrics_have_zero_curvature():
    g = Grid2D(16, 16)
    assert np.all(scalar_curvature(ConformalMetric.flat(g)).values == 0)
    c = ConformalMetric.from_array(g, np.full(g.shape, 0.7))
    assert np.all(np.abs(scalar_curvature(c).values) <= 1e-12)


def test_scalar_curvature_matches_spectral_oracle_at_second_order():
    errs = []
    for n in (64, 128):
        g, m = bump(n)
        u = m.u.values
        exact = -2 * np.exp(-2 * u) * spectral_lap(u, L2)
        errs.append(np.max(np.abs(scalar_curvature(m).values - exact)))
    assert convergence_order(*errs) >= 1.9


def test_ricci_trace_equals_scalar_curvature():
    g, m = bump(32)
    tr = trace(m, ricci_tensor(m)).values
    assert np.max(np.abs(tr - scalar_curvature(m).values)) <= 1e-12


def test_ricci_components_match_oracle():
    g, m = bump(64)
    Ric = ricci_tensor(m)
    exact = -spectral_lap(m.u.values, L2)
    assert np.max(np.abs(Ric.xx - exact)) <= 2e-3 * np.max(np.abs(exact))
    assert np.all(Ric.xy == 0)


def test_laplace_beltrami_flat_and_integral():
    g, m = bump(32)
    X, Y = g.mesh()
    phi = ScalarField(g, np.sin(X) * np.cos(2 * Y))
    flat = laplace_beltrami(ConformalMetric.flat(g), phi).values
    assert np.allclose(flat * np.exp(-2 * m.u.values), laplace_beltrami(m, phi).values, rtol=1e-14)
    total = integrate_array(laplace_beltrami(m, phi).values * m.volume_element, g)
    assert abs(total) <= 1e-12


def test_laplace_beltrami_oracle_on_bumpy_metric():
    errs = []
    for n in (64, 128):
        g, m = bump(n)
        X, _ = g.mesh()
        exact = -np.exp(-2 * m.u.values) * np.sin(X)
        errs.append(np.max(np.abs(laplace_beltrami(m, ScalarField(g, np.sin(X))).values - exact)))
    assert convergence_order(*errs) >= 1.9


def test_grad_norm_sq_cases():
    g = Grid2D(64, 64)
    X, _ = g.mesh()
    phi = ScalarField(g, np.sin(X))
    flat = grad_norm_sq(ConformalMetric.flat(g), phi).values
    assert np.max(np.abs(flat - np.cos(X) ** 2)) <= 0.5 * g.hx**2
    c = ConformalMetric.from_array(g, np.full(g.shape, 0.3))
    assert np.allclose(grad_norm_sq(c, phi).values, np.exp(-0.6) * flat, rtol=1e-14)
    assert np.all(grad_norm_sq(c, ScalarField(g, np.ones(g.shape))).values == 0)


def test_hessian_flat_sine():
    g = Grid2D(64, 64)
    X, _ = g.mesh()
    H = hessian(ConformalMetric.flat(g), ScalarField(g, np.sin(X)))
    assert np.max(np.abs(H.xx + np.sin(X))) <= 1e-3
    assert np.max(np.abs(H.xy)) <= 1e-12 and np.max(np.abs(H.yy)) <= 1e-12


def test_hessian_of_constant_vanishes():
    g, m = bump(16)
    H = hessian(m, ScalarField(g, np.full(g.shape, 2.0)))
    assert all(np.max(np.abs(c)) <= 1e-12 for c in (H.xx, H.xy, H.yy))


def test_hessian_matches_spectral_covariant_hessian():
    """Oracle: spectral derivatives with the conformal Christoffel symbols."""
    errs = []
    for n in (64, 128):
        g, m = bump(n)
        X, Y = g.mesh()
        f = np.cos(X + Y) + 0.5 * np.sin(2 * Y)
        fx, fy = spectral_grad(f, L2)
        ux, uy = spectral_grad(m.u.values, L2)
        fxy = spectral_grad(fx, L2)[1]
        exact_xy = fxy - uy * fx - ux * fy
        H = hessian(m, ScalarField(g, f))
        errs.append(np.max(np.abs(H.xy - exact_xy)))
    assert convergence_order(*errs) >= 1.9


def test_hessian_trace_is_laplace_beltrami():
    g, m = bump(128)
    X, Y = g.mesh()
    f = ScalarField(g, np.exp(np.sin(X)) * np.cos(Y))
    tr = trace(m, hessian(m, f)).values
    assert np.max(np.abs(tr - laplace_beltrami(m, f).values)) <= 1e-8


def test_gauss_bonnet_on_torus():
    g = Grid2D(64, 64)
    for name in ("bump1", "bump2"):
        m = conformal_preset(name, g)
        assert abs(integrate_array(scalar_curvature(m).values * m.volume_element, g)) <= 1e-8


@given(st.floats(-2, 2))
def test_conformal_covariance(c):
    g, m = bump(16)
    shifted = ConformalMetric.from_array(g, m.u.values + c)
    assert np.allclose(shifted.volume_element, np.exp(2 * c) * m.volume_element, rtol=1e-12)
    assert np.allclose(scalar_curvature(shifted).values, np.exp(-2 * c) * scalar_curvature(m).values,
                       rtol=1e-10, atol=1e-11)


def test_tensor_norm_cases():
    g = Grid2D(8, 8)
    flat = ConformalMetric.flat(g)
    z = np.zeros(g.shape)
    assert np.all(tensor_norm_sq(flat, SymTensorField(g, z, z, z)).values == 0)
    assert np.all(tensor_norm_sq(flat, SymTensorField(g, np.ones(g.shape), z, z)).values == 1)


def test_tensor_field_validation():
    g = Grid2D(8, 8)
    with pytest.raises(ValueError):
        SymTensorField(g, np.zeros((4, 4)), np.zeros(g.shape), np.zeros(g.shape))


def test_grid_mismatch_raises():
    m = conformal_preset("flat", Grid2D(8, 8))
    with pytest.raises(GridMismatch):
        laplace_beltrami(m, ScalarField(Grid2D(16, 16), np.zeros((16, 16))))


def test_sphere_quantities():
    R, ric, area = sphere_quantities(SphereMetric(1.0))
    assert (R, ric) == (2.0, 1.0) and area == pytest.approx(4 * np.pi)
    R, ric, area = sphere_quantities(SphereMetric(2.0))
    assert (R, ric) == (0.5, 0.25) and area == pytest.approx(16 * np.pi)
    assert sphere_ricci_norm_sq(SphereMetric(2.0)) == pytest.approx(2 / 16)


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_sphere_curvature_scaling(r, lam):
    R1 = sphere_quantities(SphereMetric(r))[0]
    R2 = sphere_quantities(SphereMetric(lam * r))[0]
    assert R2 == pytest.approx(R1 / lam**2, rel=1e-12)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_sphere_rejects_nonpositive_radius(r):
    with pytest.raises(NonPositiveRadius):
        SphereMetric(r)


def test_integral_forms_agree_on_smooth_density():
    g, m = bump(128)
    X, Y = g.mesh()
    w = 1.0 + 0.3 * np.cos(X) * np.sin(Y)
    a, b = sqrt_dirichlet(m, w), fisher_logmean(m, w)
    lx, ly = spectral_grad(np.log(w), L2)
    exact = np.sum((lx**2 + ly**2) * w) * g.cell_volume
    assert a == pytest.approx(exact, rel=1e-3) and b == pytest.approx(exact, rel=1e-3)
