import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from borderlab.fields import (FieldError, constant_field, coordinate_scalar, frame_bump_field, gaussian_bump,
                              lifted_swirl, log_gaussian, multiply, radial_vector_field, rotational_field)
from borderlab.functionals import (boundary_flux, gradient_lp_norm, l1_norm, ln_gradient_norm, lp_norm, pairing,
                                   plane_normal_component, sphere_normal_component, surface_lp_norm,
                                   verify_parts_euclidean, verify_parts_hyperbolic, w1n_surface_norm)
from borderlab.geometry import Hemisphere, Sphere, VerticalPlane
from borderlab.quadrature import QuadratureError


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_gaussian_lp_norm_closed_form(p):
    s = 0.7
    # int exp(-p |x|^2 / s^2) over R^2 = pi s^2 / p
    assert lp_norm(gaussian_bump([0.3, -0.2], s), p).value == pytest.approx((np.pi * s**2 / p) ** (1 / p), rel=1e-9)


@pytest.mark.parametrize("s", [0.4, 1.3])
def test_planar_gradient_l2_is_scale_free(s):
    # ||grad exp(-|x|^2/s^2)||_{L^2(R^2)}^2 = pi for every s
    assert ln_gradient_norm(gaussian_bump([0.0, 0.0], s)).value == pytest.approx(np.sqrt(np.pi), rel=1e-9)


def test_gradient_l3_in_space_against_radial_quad():
    s = 0.6
    g = lambda r: (2 * r / s**2) * np.exp(-r * r / s**2)
    oracle = (4 * np.pi * quad(lambda r: g(r) ** 3 * r * r, 0, 10 * s, epsabs=0, epsrel=1e-13)[0]) ** (1 / 3)
    assert ln_gradient_norm(gaussian_bump([0.0, 0.1, 0.0], s)).value == pytest.approx(oracle, rel=1e-8)


@pytest.mark.parametrize("sigma", [0.3, 0.5])
def test_hyperbolic_volume_of_log_gaussian(sigma):
    # int exp(-(x^2 + log(y)^2)/sigma^2) dx dy / y^2 = pi sigma^2 exp(sigma^2 / 4)
    r = lp_norm(log_gaussian([0.0, 1.0], sigma), 1.0, "hyperbolic")
    assert r.value == pytest.approx(np.pi * sigma**2 * np.exp(sigma**2 / 4), rel=1e-9)


def test_pairing_against_scipy():
    f = rotational_field([0.1, 0.0], 0.5)
    phi = multiply(gaussian_bump([0.2, 0.3], 0.6), constant_field([1.0, 0.4]))
    dens = lambda y, x: float(np.sum(f([x, y]) * phi([x, y])))
    oracle = dblquad(dens, -4, 4, -4, 4, epsabs=1e-13, epsrel=1e-11)[0]
    assert pairing(f, phi) == pytest.approx(oracle, rel=1e-8, abs=1e-12)


def test_hyperbolic_pairing_against_scipy():
    f = lifted_swirl([0.0, 1.0], 0.3, 0.3)
    phi = frame_bump_field([0.15, 1.1], [1.0, 0.3], 0.3)
    dens = lambda y, x: float(np.sum(f([x, y]) * phi([x, y]))) / y**2
    lo, hi = phi.support
    oracle = dblquad(dens, lo[0], hi[0], lo[1], hi[1], epsabs=1e-13, epsrel=1e-10)[0]
    assert pairing(f, phi, "hyperbolic") == pytest.approx(oracle, rel=1e-7)


def test_basis_mismatch_and_support_errors():
    with pytest.raises(FieldError):
        pairing(lifted_swirl([0.0, 1.0]), frame_bump_field([0.0, 1.0], [1.0, 0.0]))
    with pytest.raises(QuadratureError):
        pairing(rotational_field([0.0, 0.0]), constant_field([1.0, 0.0]))


def test_fixed_resolution_reports_unknown_error():
    r = l1_norm(rotational_field([0.0, 0.0], 0.5), k=64, tol=None)
    assert r.k == 64 and np.isnan(r.error)


def test_sphere_gradient_norm_of_coordinate():
    # tangential gradient of x_1 on S^1 has magnitude |sin t|; its L^2 norm is sqrt(pi)
    assert surface_lp_norm(coordinate_scalar(0, 2), Sphere(), 2.0, 64, gradient=True) == pytest.approx(
        np.sqrt(np.pi), rel=1e-12)
    rep = w1n_surface_norm(coordinate_scalar(0, 2), Sphere(), 64)
    assert rep.value == pytest.approx(2 * np.sqrt(np.pi), rel=1e-12)


def test_boundary_flux_on_circle():
    one = constant_field([1.0, 0.0])
    assert boundary_flux(one, one, Sphere(), 64) == pytest.approx(np.pi, rel=1e-13)


def test_hemisphere_norm_matches_arc_quad():
    psi = log_gaussian([0.0, 1.0], 0.3)
    s = Hemisphere([0.0], 1.0)
    val = lambda t: float(psi([np.cos(t), np.sin(t)])[0]) / np.sin(t)
    oracle = quad(val, 1e-6, np.pi - 1e-6, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert surface_lp_norm(psi, s, 1.0, 96) == pytest.approx(oracle, rel=1e-9)


def test_parts_identities_hold(rng):
    f = rotational_field([0.1, -0.1], 0.6)
    chk = verify_parts_euclidean(f, gaussian_bump([0.8, 0.5], 0.5))
    assert chk.residual < 1e-8 and abs(chk.lhs) > 1e-6
    g = lifted_swirl([0.1, 1.0], 0.3, 0.3)
    chk = verify_parts_hyperbolic(g, log_gaussian([0.0, 0.9], 0.4))
    assert chk.residual < 1e-8 and abs(chk.lhs) > 1e-6


def test_parts_requires_divergence_free():
    with pytest.raises(FieldError):
        verify_parts_euclidean(radial_vector_field([0.0, 0.0]), gaussian_bump([1.0, 0.0]))


def test_normal_components():
    phi = multiply(gaussian_bump([0.0, 0.0], 2.0), constant_field([1.0, 0.0]))
    nc = sphere_normal_component(phi)
    x = np.array([[0.6, 0.8]])
    assert nc(x)[0] == pytest.approx(0.6 * float(gaussian_bump([0.0, 0.0], 2.0)(x)[0]))
    h = 1e-6
    fd = [(nc(x + d) - nc(x - d))[0] / (2 * h) for d in (np.array([[h, 0]]), np.array([[0, h]]))]
    assert np.allclose(nc.grad(x)[0], fd, atol=1e-8)
    frame = frame_bump_field([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 0.3)
    pc = plane_normal_component(frame, 0)
    assert pc.dim == 2
    assert pc(np.array([[0.1, 1.0]]))[0] == pytest.approx(frame(np.array([[0.0, 0.1, 1.0]]))[0, 0])


def test_gradient_lp_hyperbolic_scalar():
    psi = log_gaussian([0.0, 1.0], 0.4)
    lo, hi = psi.support
    dens = lambda y, x: float((y * np.linalg.norm(psi.grad([x, y])[0])) ** 3) / y**2
    oracle = dblquad(dens, lo[0], hi[0], lo[1], hi[1], epsabs=1e-13, epsrel=1e-10)[0] ** (1 / 3)
    assert gradient_lp_norm(psi, 3.0, "hyperbolic").value == pytest.approx(oracle, rel=1e-7)


def test_vertical_plane_norm():
    psi = log_gaussian([0.0, 0.0, 1.0], 0.3)
    # on {x_0 = 0}: induced density y^-2 dx_1 dy, same integral as in H^2
    val = surface_lp_norm(psi, VerticalPlane(0, 0.0), 1.0, 96)
    assert val == pytest.approx(np.pi * 0.09 * np.exp(0.09 / 4), rel=1e-9)
