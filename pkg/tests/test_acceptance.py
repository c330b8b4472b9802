"""Acceptance criteria 1-10, each reporting one PASS/FAIL line.

Tolerances are pinned here and never loosened by the code under test.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from conftest import record

from borderlab.cli import (euclidean_catalog_pair, gram_jacobian, hyperbolic_catalog, hyperbolic_catalog_field,
                           sphere_catalog)
from borderlab.decomposition import (HyperbolicDecomposer, SphereDecomposer, bounded_ratio_suite, c_lambda,
                                     hyperbolic_lemma_ratios, sphere_lemma_ratios, sphere_points, sphere_params)
from borderlab.fields import dilate_vector, gaussian_bump, log_gaussian, poly_bump
from borderlab.functionals import pairing, verify_parts_euclidean, verify_parts_hyperbolic
from borderlab.harness import (ConstantEstimator, get_family, hardy_bound, hardy_check, ratio, sharpness_family,
                               tube_family)
from borderlab.identities import coarea_weight, euclidean_averaged_pairing, phi_jacobian, verify_coarea

REL_AVERAGING = 1e-6
PARTS_RESIDUAL = 1e-6
JACOBIAN_REL = 1e-6
COAREA_WEIGHT_TOL = 1e-8
COAREA_IDENTITY_REL = 1e-4
SLOPE_TOL = 0.05
ADDITIVITY = 1e-10
HARDY_SLACK = 1e-6
DILATION_REL = 1e-6
DOUBLING_REL = 0.01


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@pytest.mark.parametrize("n", [2, 3])
def test_c1_averaging_reconstruction(n):
    rng = np.random.default_rng(100 + n)
    t0 = time.perf_counter()
    errs = []
    for _ in range(5):
        f, phi = euclidean_catalog_pair(rng, n)
        errs.append(_rel(euclidean_averaged_pairing(f, phi), pairing(f, phi, "euclidean")))
    elapsed = time.perf_counter() - t0
    ok = max(errs) < REL_AVERAGING and elapsed < 60.0
    record(1, f"averaging reconstruction n={n}", ok,
           f"max rel err {max(errs):.2e} < {REL_AVERAGING:g} over 5 pairs, {elapsed:.1f}s < 60s")
    assert ok


@pytest.mark.parametrize("n", [2, 3])
def test_c2_integration_by_parts(n):
    rng = np.random.default_rng(200 + n)
    ext, plane = [], []
    for _ in range(10):
        f, _ = euclidean_catalog_pair(rng, n)
        psi = gaussian_bump(rng.uniform(-0.6, 0.6, n) + 0.6 * rng.choice([-1, 1], n), rng.uniform(0.3, 0.7))
        ext.append(verify_parts_euclidean(f, psi).residual)
        g = hyperbolic_catalog_field(rng, n)
        psi_h = log_gaussian(np.append(rng.uniform(-0.3, 0.3, n - 1), rng.uniform(0.7, 1.3)), rng.uniform(0.3, 0.5))
        plane.append(verify_parts_hyperbolic(g, psi_h).residual)
    ok = max(ext) < PARTS_RESIDUAL and max(plane) < PARTS_RESIDUAL
    record(2, f"integration by parts n={n}", ok,
           f"exterior max {max(ext):.2e}, vertical-plane max {max(plane):.2e} < {PARTS_RESIDUAL:g} on 10 instances each")
    assert ok


def test_c3_jacobian_and_coarea_weight():
    rng = np.random.default_rng(300)
    worst = 0.0
    for i in range(100):
        n = 2 + i % 2
        x = np.append(rng.uniform(-1, 1, n - 1), rng.uniform(0.3, 2.0))
        z = rng.uniform(-1.5, 1.5, n - 1)
        worst = max(worst, _rel(float(phi_jacobian(x, z)), gram_jacobian(x, z)))
    ref2 = coarea_weight(np.array([0.0, 1.0]))
    spread = max(_rel(coarea_weight(np.array([rng.uniform(-2, 2), rng.uniform(0.2, 3.0)])), ref2)
                 for _ in range(10))
    ref3 = coarea_weight(np.array([0.0, 0.0, 1.0]))
    spread3 = max(_rel(coarea_weight(np.append(rng.uniform(-1, 1, 2), rng.uniform(0.3, 2.0))), ref3)
                  for _ in range(4))
    ok = (worst < JACOBIAN_REL and spread < COAREA_WEIGHT_TOL and spread3 < COAREA_WEIGHT_TOL
          and abs(ref2 - np.pi) < COAREA_WEIGHT_TOL)
    record(3, "Jacobian and coarea weight", ok,
           f"Jacobian vs Gram {worst:.2e} < {JACOBIAN_REL:g}; weight spread n=2 {spread:.2e}, n=3 {spread3:.2e}; "
           f"|w - pi| = {abs(ref2 - np.pi):.2e} < {COAREA_WEIGHT_TOL:g}")
    assert ok


def test_c4_coarea_identity():
    t0 = time.perf_counter()
    chk = verify_coarea(log_gaussian([0.0, 1.0], 0.3))
    elapsed = time.perf_counter() - t0
    ok = chk.residual < COAREA_IDENTITY_REL and elapsed < 300.0
    record(4, "coarea identity on an H^2 bump", ok,
           f"rel residual {chk.residual:.2e} < {COAREA_IDENTITY_REL:g}, {elapsed:.1f}s < 300s")
    assert ok


@pytest.mark.parametrize("n", [2, 3])
def test_c5_c_lambda_slope(n):
    lams = 2.0 ** -np.arange(3, 11)
    vals = [c_lambda(l, None, n) for l in lams]
    slope = float(np.polyfit(np.log(lams), np.log(vals), 1)[0])
    ok = abs(slope - (n - 1)) <= SLOPE_TOL
    record(5, f"c_lambda log-log slope n={n}", ok, f"slope {slope:.5f}, target {n - 1} +/- {SLOPE_TOL}")
    assert ok


def _pooled_suites(catalog, ratios_of):
    lams, r1, r2 = [], [], []
    for phi in catalog:
        grid, a, b = ratios_of(phi)
        lams.extend(grid)
        r1.extend(a)
        r2.extend(b)
    return bounded_ratio_suite(lams, r1), bounded_ratio_suite(lams, r2)


@pytest.mark.parametrize("case", ["sphere-2", "sphere-3", "hyperbolic-1", "hyperbolic-2"])
def test_c6_decomposition_certificates(case):
    kind, dim = case.split("-")
    dim = int(dim)
    rng = np.random.default_rng(600 + dim)
    additivity = 0.0
    if kind == "sphere":
        grid = 2.0 ** -np.arange(1, 11)
        catalog = sphere_catalog(dim)
        s1, s2 = _pooled_suites(catalog, lambda phi: (grid, *sphere_lemma_ratios(phi, grid)[:2]))
        X = sphere_points(sphere_params(dim, 16))
        for phi in catalog:
            dec = SphereDecomposer(lam=0.05).fit(phi)
            parts = dec.transform(X)
            additivity = max(additivity, float(np.max(np.abs(parts.sum(-1) - phi(X)))))
    else:
        grid = 2.0 ** -np.arange(1, 7)
        catalog = hyperbolic_catalog(dim)
        p = dim + 1.0
        s1, s2 = _pooled_suites(catalog, lambda phi: (grid, *hyperbolic_lemma_ratios(phi, grid, p)[:2]))
        for phi in catalog:
            dec = HyperbolicDecomposer(lam=0.1, p=p).fit(phi)
            # sample where the catalog bumps live, not the far tails of their supports
            X = np.column_stack([rng.uniform(-0.5, 0.5, (64, dim - 1)), np.exp(rng.uniform(-0.7, 0.4, 64))])
            parts = dec.transform(X)
            additivity = max(additivity, float(np.max(np.abs(parts.sum(-1) - phi(X)))))
    ok = s1.passed and s2.passed and additivity < ADDITIVITY
    record(6, f"decomposition certificates {case}", ok,
           f"phi1 fine max {s1.fine_max:.3g} <= C {s1.constant:.3g}; grad fine max {s2.fine_max:.3g} <= "
           f"C {s2.constant:.3g}; additivity {additivity:.1e} < {ADDITIVITY:g}")
    assert ok


HARDY_INPUTS = {
    2: [log_gaussian([0.0, 1.0], 0.3), log_gaussian([0.4, 0.6], [0.5, 0.2]), poly_bump([0.0, 1.0], 0.5)],
    3: [log_gaussian([0.0, 0.0, 1.0], 0.3), log_gaussian([0.2, -0.1, 0.7], [0.4, 0.3, 0.25]),
        poly_bump([0.0, 0.0, 1.0], 0.5)],
}


@pytest.mark.parametrize("n,p", [(2, 2.0), (2, 3.0), (3, 3.0)])
def test_c7_hardy(n, p):
    bound = hardy_bound(n, p)
    ratios = [hardy_check(phi, p) for phi in HARDY_INPUTS[n]]
    sharp = [r for _, r in sharpness_family(n, p, offsets=(0.5, 0.25, 0.125, 0.0625, 0.03125))]
    monotone = all(b > a for a, b in zip(sharp, sharp[1:])) and sharp[-1] <= bound + HARDY_SLACK
    ok = max(ratios) <= bound + HARDY_SLACK and monotone
    record(7, f"Hardy (n={n}, p={p:g})", ok,
           f"catalog max {max(ratios):.4f} <= {bound:.4f} + {HARDY_SLACK:g}; sharpness "
           + " < ".join(f"{r:.4f}" for r in sharp))
    assert ok


def test_c8_dilation_invariance():
    fam = tube_family()
    f, phi = fam.build(fam.start)
    base = ratio(f, phi, "EuclideanMain").ratio
    worst = 0.0
    for eps in (0.5, 2.0):
        r = ratio(dilate_vector(f, eps, 2.0), dilate_vector(phi, eps), "EuclideanMain").ratio
        worst = max(worst, _rel(r, base))
    ok = worst < DILATION_REL
    record(8, "EuclideanMain dilation invariance", ok, f"max rel change {worst:.2e} < {DILATION_REL:g}")
    assert ok


@pytest.mark.parametrize("name", ["tube", "lifted-hyperbolic", "low-order"])
def test_c9_constant_estimation(name):
    t0 = time.perf_counter()
    fam = get_family(name)
    a = ConstantEstimator(150, 5, 0, 96).fit(fam)
    b = ConstantEstimator(150, 5, 0, 192).fit(fam)
    again = ConstantEstimator(150, 5, 0, 96).fit(fam)
    elapsed = time.perf_counter() - t0
    change = _rel(a.constant_, b.constant_)
    ok = a.constant_ > 0 and change < DOUBLING_REL and again.constant_ == a.constant_ and elapsed < 600
    record(9, f"constant estimate {name}", ok,
           f"C >= {a.constant_:.5f} > 0; doubling change {change:.2e} < {DOUBLING_REL:g}; "
           f"seeded rerun identical={again.constant_ == a.constant_}; {elapsed:.0f}s")
    assert ok


@pytest.mark.parametrize("args", [
    ["verify-identities", "--dimension", "2", "--seed", "7"],
    ["decompose", "--space", "hyperbolic", "--dimension", "2", "--seed", "7"],
    ["estimate", "--seed", "3", "--budget", "30", "--family", "tube"],
], ids=["verify-identities", "decompose", "estimate"])
def test_c10_cli_determinism(tmp_path, args):
    out = tmp_path / "report.csv"
    blobs = []
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-m", "borderlab", *args, "--out", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        blobs.append((out.read_bytes(), out.with_suffix(".json").read_bytes()))
    ok = blobs[0] == blobs[1]
    record(10, f"CLI determinism ({args[0]})", ok, f"two seeded runs byte-identical={ok}")
    assert ok
