import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from borderlab.decomposition import sphere_area
from borderlab.fields import (FieldError, constant_field, frame_bump_field, gaussian_bump, lifted_swirl,
                              log_gaussian, multiply, rotational_field)
from borderlab.functionals import pairing
from borderlab.geometry import GeometryError, on_surface, unit_normal
from borderlab.identities import (averaging_constant, coarea_weight, euclidean_averaged_pairing,
                                  hemisphere_from, hyperbolic_averaged_pairing, phi_jacobian, phi_map,
                                  verify_coarea)
from borderlab.quadrature import QuadratureError, sphere_rule

coord = st.floats(-2, 2, allow_nan=False)
height = st.floats(0.1, 3, allow_nan=False)


def test_phi_map_examples():
    assert np.allclose(phi_map([0.0, 1.0], [0.0]), [0.0, 1.0])
    assert np.allclose(phi_map([1.0, 1.0], [0.0]), np.array([1.0, 1.0]) / np.sqrt(2))
    assert np.allclose(phi_map([0.0, 0.0, 2.0], [0.0, 0.0]), [0.0, 0.0, 1.0])
    with pytest.raises(GeometryError):
        phi_map([0.0, 0.0], [0.0])


def test_phi_map_broadcasts():
    z = np.linspace(-1, 1, 5)[:, None]
    out = phi_map(np.array([0.2, 0.7]), z)
    assert out.shape == (5, 2) and np.allclose(np.linalg.norm(out, axis=-1), 1.0)
    assert np.all(out[:, -1] > 0)


@settings(max_examples=50)
@given(st.tuples(coord, coord, height).map(np.array),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 1)).map(np.array))
def test_hemisphere_round_trip(x, omega):
    omega = omega / np.linalg.norm(omega)
    s = hemisphere_from(x, omega)
    assert on_surface(x, s, 1e-9)
    assert np.allclose(unit_normal(x, s), omega, atol=1e-9)
    # the hemisphere's foot is the point that phi_map sends x to omega from
    assert np.allclose(phi_map(x, s.center), omega, atol=1e-9)


def test_hemisphere_from_rejects_horizontal_directions():
    with pytest.raises(GeometryError):
        hemisphere_from([0.0, 1.0], [1.0, 0.0])


@pytest.mark.parametrize("x", [[0.0, 1.0], [0.7, 0.3], [-1.5, 2.5]])
def test_phi_jacobian_integrates_to_half_circle(x):
    # z -> Phi_x(z) covers the open upper half circle once
    val = quad(lambda z: float(phi_jacobian(x, [z])), -np.inf, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert val == pytest.approx(np.pi, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_averaging_constant_reproduces_inner_products(n, rng):
    c = averaging_constant(n).c
    assert c == pytest.approx(n / sphere_area(n))
    rule = sphere_rule(n, 16)
    a, b = rng.normal(size=(2, n))
    assert c * float(rule.integrate(lambda w: (w @ a) * (w @ b))) == pytest.approx(a @ b, rel=1e-12)
    with pytest.raises(GeometryError):
        averaging_constant(1)


def test_coarea_weight_values():
    assert coarea_weight([0.3, 0.8]) == pytest.approx(np.pi, abs=1e-10)
    assert coarea_weight([0.1, -0.2, 1.4]) == pytest.approx(sphere_area(3) / 2, rel=1e-9)
    with pytest.raises(GeometryError):
        coarea_weight([0.0, 0.0, 0.0, 1.0])


@pytest.mark.parametrize("n", [2, 3])
def test_euclidean_averaging_equals_direct_pairing(n):
    c = np.zeros(n)
    f = rotational_field(c + 0.1, 0.5, axis=1) if n == 3 else rotational_field(c + 0.1, 0.5)
    phi = multiply(gaussian_bump(c - 0.1, 0.6), constant_field(np.arange(1.0, n + 1.0)))
    assert euclidean_averaged_pairing(f, phi) == pytest.approx(pairing(f, phi), rel=1e-8)


def test_hyperbolic_averaging_equals_direct_pairing():
    f = lifted_swirl([0.0, 1.0], 0.3, 0.3)
    phi = frame_bump_field([0.1, 1.1], [1.0, 0.3], 0.3)
    assert hyperbolic_averaged_pairing(f, phi) == pytest.approx(pairing(f, phi, "hyperbolic"), rel=1e-4)


def test_averaging_basis_checks():
    with pytest.raises(FieldError):
        euclidean_averaged_pairing(lifted_swirl([0.0, 1.0]), frame_bump_field([0.0, 1.0], [1.0, 0.0]))
    with pytest.raises(FieldError):
        hyperbolic_averaged_pairing(rotational_field([0.0, 0.0]), rotational_field([0.0, 0.0]))


def test_coarea_identity_and_contract():
    chk = verify_coarea(log_gaussian([0.1, 0.9], 0.35))
    assert chk.residual < 1e-4
    assert chk.weight == pytest.approx(np.pi)
    with pytest.raises(QuadratureError):
        verify_coarea(lambda x: x[:, 0])
