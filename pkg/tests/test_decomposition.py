import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from sklearn.base import clone

from borderlab.decomposition import (DecompositionError, HyperbolicDecomposer, PlateauMollifier,
                                     PolynomialMollifier, SphereDecomposer, bounded_ratio_suite, c_lambda,
                                     extend_to_ambient, probe_sup, radial_extension_gradient, sphere_decompose,
                                     sphere_points, sphere_params)
from borderlab.fields import constant_scalar, coordinate_scalar, gaussian_bump, log_gaussian

ETA = PlateauMollifier()


def test_plateau_profile_shape():
    r = np.linspace(0, 1.2, 121)
    v = ETA(r)
    assert np.all(v[r <= 0.5] == 1.0) and np.all(v[r >= 1.0] == 0.0)
    assert np.all(np.diff(v) <= 1e-15)
    h = 1e-6
    inner = r[(r > 0.01) & (r < 1.19)]
    assert np.allclose(ETA.deriv(inner), (ETA(inner + h) - ETA(inner - h)) / (2 * h), atol=1e-7)
    # C^3 at the breaks: first derivative vanishes on both sides
    assert abs(ETA.deriv(0.5 + 1e-9)) < 1e-20 and abs(ETA.deriv(1 - 1e-9)) < 1e-20


@pytest.mark.parametrize("m", [1, 2])
def test_polynomial_mollifier_has_unit_mass(m):
    eta = PolynomialMollifier(m)
    if m == 1:
        mass = quad(lambda v: eta(abs(v)), -1, 1, epsabs=0, epsrel=1e-13)[0]
    else:
        mass = 2 * np.pi * quad(lambda r: eta(r) * r, 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert mass == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("lam", [0.5, 0.1, 2.0**-10])
def test_c_lambda_circle_against_quad(lam):
    # chord length 2 sin(t/2) on the unit circle
    # the kernel vanishes beyond chord lam; split the arc at the plateau edge (chord lam/2)
    edge, end = 2 * np.arcsin(lam / 4), 2 * np.arcsin(lam / 2)
    oracle = 2 * sum(quad(lambda t: ETA(2 * np.sin(t / 2) / lam), a, b, epsabs=0, epsrel=1e-13)[0]
                     for a, b in ((0, edge), (edge, end)))
    assert c_lambda(lam, ETA, 2) == pytest.approx(oracle, rel=1e-12)


def test_c_lambda_two_sphere_against_quad():
    lam = 0.2
    oracle = 2 * np.pi * quad(lambda t: ETA(2 * np.sin(t / 2) / lam) * np.sin(t), 0, np.pi, epsabs=0,
                              epsrel=1e-13, limit=400)[0]
    assert c_lambda(lam, ETA, 3, x=[0.3, -0.4, 0.5]) == pytest.approx(oracle, rel=1e-12)


def test_c_lambda_domain():
    with pytest.raises(DecompositionError):
        c_lambda(1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_constant_has_no_rough_part(n):
    dec = SphereDecomposer(lam=0.2, probes=64).fit(constant_scalar(2.5, n))
    X = sphere_points(sphere_params(n, 12))
    assert np.allclose(dec.phi1(X), 0.0, atol=1e-12)
    assert np.allclose(dec.phi2_gradient(X), 0.0, atol=1e-12)


def test_large_lambda_uses_the_mean():
    # cos(theta) on the circle has mean 0, so phi2 vanishes and phi1 = phi
    dec = SphereDecomposer(lam=1.5).fit(coordinate_scalar(0, 2))
    X = sphere_points(sphere_params(2, 16))
    assert np.allclose(dec.phi2(X), 0.0, atol=1e-14)
    assert np.allclose(dec.phi1(X), X[:, 0])


def test_sphere_phi2_gradient_matches_fd():
    phi = gaussian_bump([0.8, 0.6], 0.5)
    dec = SphereDecomposer(lam=0.2).fit(phi)
    t = np.linspace(0.1, 6.0, 7)
    h = 1e-5
    fd = (dec.phi2(sphere_points((t + h)[:, None])) - dec.phi2(sphere_points((t - h)[:, None]))) / (2 * h)
    tangent = np.stack([-np.sin(t), np.cos(t)], -1)
    assert np.allclose(np.sum(dec.phi2_gradient(sphere_points(t[:, None])) * tangent, -1), fd, atol=1e-8)


def test_extension_gradient_scales_like_inverse_radius():
    dec = SphereDecomposer(lam=0.1, probes=128).fit(gaussian_bump([0.8, 0.6], 0.5))
    res = dec.as_result()
    u = np.array([[0.6, 0.8]])
    g1 = dec.extension_gradient(u)
    g2 = dec.extension_gradient(2 * u)
    assert np.allclose(g2, g1 / 2)
    assert abs(float(np.sum(g2 * u))) < 1e-12  # no radial component
    assert radial_extension_gradient(res, 2 * u[0])[0] == pytest.approx(np.linalg.norm(g1) / 2)
    with pytest.raises(DecompositionError):
        dec.extension_gradient(0.5 * u)


def test_sphere_decomposition_shrinks_with_lambda():
    phi = gaussian_bump([0.8, 0.6], 0.5)
    a = sphere_decompose(phi, 0.2, probes=256)
    b = sphere_decompose(phi, 0.05, probes=256)
    assert b.sup_phi1 < a.sup_phi1 and b.sup_grad_phi2 >= 0


def test_sklearn_contract():
    dec = SphereDecomposer(lam=0.3)
    assert clone(dec).get_params() == dec.get_params()
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        dec.phi2(np.array([[1.0, 0.0]]))
    out = dec.fit(gaussian_bump([1.0, 0.0], 0.5)).transform(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert out.shape == (2, 2)


@pytest.mark.parametrize("phi", [log_gaussian([1.0], 0.3), log_gaussian([0.2, 0.9], [0.4, 0.25])],
                         ids=["H1", "H2"])
def test_hyperbolic_frame_gradient_matches_fd(phi, rng):
    m = phi.dim
    dec = HyperbolicDecomposer(lam=0.2, p=m + 1.0).fit(phi)
    x = np.column_stack([rng.uniform(-0.3, 0.3, (6, m - 1)), rng.uniform(0.7, 1.2, 6)])
    h = 1e-6
    fd = np.stack([(dec.phi2(x + h * e) - dec.phi2(x - h * e)) / (2 * h) for e in np.eye(m)], -1)
    assert np.allclose(dec.phi2_frame_gradient(x), x[:, -1:] * fd, atol=1e-8)


def test_hyperbolic_mollification_preserves_constants_locally():
    # a log-Gaussian that is very wide is nearly constant; phi2 reproduces it
    phi = log_gaussian([0.0, 1.0], 50.0)
    dec = HyperbolicDecomposer(lam=0.1, p=3.0).fit(phi)
    x = np.array([[0.0, 1.0], [0.3, 0.8]])
    assert np.allclose(dec.phi2(x), phi(x), rtol=1e-5)


def test_hyperbolic_large_lambda_and_errors():
    phi = log_gaussian([1.0], 0.3)
    dec = HyperbolicDecomposer(lam=1.0, p=2.0).fit(phi)
    assert np.all(dec.phi2(np.array([[1.0], [0.5]])) == 0.0)
    with pytest.raises(DecompositionError):
        HyperbolicDecomposer(lam=0.1, p=2.0).fit(log_gaussian([0.0, 1.0], 0.3))
    with pytest.raises(DecompositionError):
        HyperbolicDecomposer(lam=-1.0).fit(phi)


def test_extension_to_ambient_transfers_gradient_bound(rng):
    phi = log_gaussian([0.1, 0.9], 0.35)
    ext = extend_to_ambient(phi)
    y = np.column_stack([rng.uniform(-0.4, 0.4, 200), rng.uniform(0.5, 1.5, 200)])
    on_s = np.column_stack([np.zeros(200), y])
    assert np.allclose(ext(on_s), phi(y))
    x = np.column_stack([rng.uniform(-1, 1, 400), rng.uniform(-0.4, 0.4, 400), rng.uniform(0.1, 1.5, 400)])
    gx = x[:, -1] * np.linalg.norm(ext.grad(x), axis=-1)
    rho = np.hypot(x[:, 0], x[:, 2])
    y = np.column_stack([x[:, 1], rho])
    gy = y[:, -1] * np.linalg.norm(phi.grad(y), axis=-1)
    assert np.all(gx <= gy + 1e-12)
    h = 1e-6
    fd = np.stack([(ext(x + h * e) - ext(x - h * e)) / (2 * h) for e in np.eye(3)], -1)
    assert np.allclose(ext.grad(x), fd, atol=1e-7)
    lo, hi = ext.support
    assert lo[-1] == 0.0 and hi[0] == -lo[0]


def test_probe_sup_polishes_beyond_grid():
    f = lambda P: -(P[:, 0] - 0.123456) ** 2
    params = np.linspace(0, 1, 11)[:, None]
    assert probe_sup(f, params, lambda p: p) > -1e-12
    assert probe_sup(f, params, lambda p: p, refine=0) < -1e-4


def test_bounded_ratio_suite():
    lams = [0.5, 0.25, 0.125, 0.0625]
    assert bounded_ratio_suite(lams, [1.0, 0.9, 0.5, 0.4]).passed
    bad = bounded_ratio_suite(lams, [0.1, 0.2, 0.4, 0.8])
    assert not bad.passed and bad.constant == 0.2


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.9))
def test_c_lambda_positive_and_below_circle(lam):
    c = c_lambda(lam)
    assert 0 < c < 2 * np.pi


def test_c_lambda_rotation_invariant():
    a = c_lambda(0.3, ETA, 3, x=[1.0, 0.0, 0.0])
    b = c_lambda(0.3, ETA, 3, x=[0.2, -0.7, 0.4])
    assert a == pytest.approx(b, rel=1e-10)


def test_cosine_rough_part_decays_quadratically():
    # phi1 = (1 - m_lam) cos(theta) for the first harmonic, and 1 - m_lam = O(lam^2)
    phi = coordinate_scalar(0, 2)
    lams = 2.0 ** -np.arange(4, 9)
    sups = [sphere_decompose(phi, l, probes=256).sup_phi1 for l in lams]
    slope = np.polyfit(np.log(lams), np.log(sups), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_hyperbolic_reproduces_constants_exactly():
    one = constant_scalar(1.0, 2)
    one.support = (np.array([-50.0, 0.01]), np.array([50.0, 100.0]))
    dec = HyperbolicDecomposer(lam=0.3, p=3.0).fit(one)
    x = np.array([[0.0, 1.0], [2.0, 0.3], [-1.0, 4.0]])
    assert np.allclose(dec.phi2(x), 1.0, atol=1e-8)
    assert np.allclose(dec.phi2_frame_gradient(x), 0.0, atol=1e-12)


def test_hyperbolic_zero_function():
    zero = constant_scalar(0.0, 1)
    zero.support = (np.array([0.5]), np.array([2.0]))
    parts = HyperbolicDecomposer(lam=0.2, p=2.0).fit(zero).transform(np.array([[1.0], [0.7]]))
    assert np.all(parts == 0.0)


def test_extension_restricts_to_phi2_on_sphere():
    dec = SphereDecomposer(lam=0.1).fit(gaussian_bump([0.0, 1.0], 0.4))
    X = sphere_points(sphere_params(2, 32))
    assert np.allclose(dec.extension(X), dec.phi2(X), atol=1e-10)
    assert np.allclose(dec.extension(3 * X), dec.phi2(X), atol=1e-10)
