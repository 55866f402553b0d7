"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest; the
per-criterion lines are repeated in the pytest terminal summary.
"""

import math
import sys
import time
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from johncentroid.cli import run
from johncentroid.concentration import bad_set_measures, check_cap_bound, moment_sandwich_checks
from johncentroid.constructions import KBody, build_Q, make_body
from johncentroid.geom import JohnCertificate
from johncentroid.john import certificate_residuals, contact_rows, john_report, lift_decomposition, solve_mvie
from johncentroid.moments import centroid_height, half_volume_sign
from johncentroid.sampling import RngStream, hit_and_run, rejection_sample

from conftest import ACCEPTANCE_LINES, cube


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_c01_lifted_cube_certificate():
    start = time.perf_counter()
    worst = 0.0
    for n in (3, 11, 101):
        U = np.vstack([np.eye(n), -np.eye(n)])
        lifted = lift_decomposition(JohnCertificate(U, np.full(2 * n, 0.5)))
        worst = max(worst, *certificate_residuals(lifted))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-12 and elapsed < 1.0, f"max residual {worst:.2e}, {elapsed:.3f}s")


def test_c02_john_position_of_Q():
    details, ok = [], True
    for n in (4, 6, 8, 10):
        start = time.perf_counter()
        Q = build_Q(n)
        ell = solve_mvie(Q)
        elapsed = time.perf_counter() - start
        dc = float(np.linalg.norm(ell.center))
        dE = float(np.linalg.norm(ell.shape - np.eye(n)))
        touching = contact_rows(Q, ell)
        good = dc <= 1e-4 and dE <= 1e-4 and len(touching) == Q.n_rows == 2 * (n - 1) + 1 and elapsed < 10
        ok &= good
        details.append(f"n={n}: |c|={dc:.1e} |E-I|={dE:.1e} contacts={len(touching)} {elapsed:.2f}s")
    record(2, ok, "; ".join(details))


def _exact_centroid(a, s, lo, hi, n):
    mp.mp.dps = 200
    a, s, lo, hi = (mp.mpf(v) for v in (a, s, lo, hi))
    u_lo, u_hi = a + s * lo, a + s * hi
    m0 = (u_hi ** n - u_lo ** n) / (s * n)
    F = lambda u: u ** (n + 1) / (n + 1) - a * u ** n / n
    return float((F(u_hi) - F(u_lo)) / s ** 2 / m0)


def test_c03_closed_form_centroids():
    errs = {"cylinder": 0.0, "cone": 0.0, "q": 0.0, "l": 0.0}
    for n in (5, 50, 512):
        errs["cylinder"] = max(errs["cylinder"], abs(centroid_height(make_body("cylinder", n), n, 10).value
                                                     / ((n + 1) / 2) - 1))
        errs["cone"] = max(errs["cone"], abs(centroid_height(make_body("cone", n), n, 10).value / n - 1))
        errs["q"] = max(errs["q"], abs(centroid_height(make_body("q", n), n, 10_000).value) / n)
        ref = _exact_centroid(2.0, 1.0 / n, -1.0, n, n)
        errs["l"] = max(errs["l"], abs(centroid_height(make_body("l", n), n, 10).value / ref - 1))
    ok = errs["cylinder"] <= 1e-9 and errs["cone"] <= 1e-9 and errs["q"] <= 1e-9 and errs["l"] <= 1e-9
    record(3, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


def test_c04_cross_oracle_rejection():
    start = time.perf_counter()
    n = 8
    body = KBody(n)
    est = centroid_height(body, n, 100_000, seed=0)
    batch = rejection_sample(body, 100_000, rng=RngStream(0, (n, 7)))
    mean, se = batch.mean_stderr(batch.points[:, -1])
    z = (est.value - mean) / math.hypot(est.stderr, se)
    elapsed = time.perf_counter() - start
    record(4, abs(z) <= 3 and elapsed < 120,
           f"sphere {est.value:.5f}+-{est.stderr:.5f} vs rejection {mean:.5f}+-{se:.5f}, z={z:.2f}, {elapsed:.1f}s")


def test_c05_main_trend():
    start = time.perf_counter()
    ns = (64, 128, 256, 512)
    ests = [centroid_height(KBody(n), n, 200_000, seed=0) for n in ns]
    ratio = [(n - e.value) / n for n, e in zip(ns, ests)]
    ratio_se = [e.stderr / n for n, e in zip(ns, ests)]
    decreasing = all(ratio[i] - ratio[i + 1] > 3 * math.hypot(ratio_se[i], ratio_se[i + 1]) for i in range(3))
    norm = [(n - e.value) / math.sqrt(n * math.log(n)) for n, e in zip(ns, ests)]
    band = max(norm) / min(norm)
    elapsed = time.perf_counter() - start
    record(5, decreasing and band <= 3 and elapsed < 600,
           f"gap/n {[round(r, 4) for r in ratio]}, gap/sqrt(n log n) {[round(g, 3) for g in norm]}, "
           f"band {band:.3f}, {elapsed:.1f}s")


def test_c06_polytope_case():
    start = time.perf_counter()
    details, ok = [], True
    for n in (128, 256):
        eps = 1 / math.log(n)
        est = centroid_height(make_body("p", n, eps), n, 200_000, seed=0)
        target = eps * n / 5
        ok &= est.value - 3 * est.stderr >= target
        details.append(f"n={n}: {est.value:.3f}+-{est.stderr:.3f} vs {target:.3f}")
    elapsed = time.perf_counter() - start
    record(6, ok and elapsed < 600, "; ".join(details) + f", {elapsed:.1f}s")


def test_c07_half_volume():
    n = 256
    body = KBody(n)
    est = centroid_height(body, n, 200_000, seed=0)
    R = est.value - 5 * est.stderr
    sign = half_volume_sign(body, n, R, 200_000, seed=1)
    record(7, sign.verdict == "positive",
           f"R={R:.3f}, balance {sign.value:.3e}+-{sign.stderr:.1e} (x e^{sign.log_scale:.1f}), {sign.verdict}")


def test_c08_cap_bound():
    ts = [round(0.1 * k, 1) for k in range(1, 10)]
    checks = check_cap_bound([10, 100, 1000], ts, C3=0.5, N=100_000, seed=0)
    bound_ok = all(c.passed and c.lhs <= c.rhs for c in checks)
    mc_ok = all(c.details["mc_agrees"] for c in checks)
    record(8, bound_ok and mc_ok, f"{len(checks)} grid points, bound holds {bound_ok}, MC agrees {mc_ok}")


def test_c09_bad_sets():
    n = 256
    rep = bad_set_measures(n, 1 / math.log(n), N=100_000, seed=0)
    ok = (rep.o2.lhs + 3 * rep.o2.stderr < 0.25 and rep.small_l2_radius.passed
          and rep.implication_violations == 0)
    record(9, ok, f"O2 {rep.o2.lhs:.4f}+-{rep.o2.stderr:.4f}, "
                  f"rho_L2<=5sqrt(eps n) {rep.small_l2_radius.lhs:.4f}+-{rep.small_l2_radius.stderr:.4f}, "
                  f"implication violations {rep.implication_violations}/{rep.o2_members}")


def test_c10_cube_moment_comparisons():
    n = 16
    poly = cube(n)
    chains = 100
    batch = hit_and_run(poly, np.zeros(n), steps=1000 * n, chains=chains, rng=RngStream(0, (n, 10)))
    cert = john_report(poly).contacts
    rep = moment_sandwich_checks(batch, certificate=cert)
    finite = all(math.isfinite(c) for c in (rep.C9, rep.C10, rep.C11))
    ok = len(batch) == 100_000 and rep.median_l2.passed and rep.centroid_l2.passed and finite
    record(10, ok, f"M/sqrt2={rep.median_l2.lhs:.4f} <= L2={rep.median_l2.rhs:.4f}, "
                   f"|x|={rep.centroid_l2.lhs:.4f}, C9={rep.C9:.4f} C10={rep.C10:.3f} C11={rep.C11:.3f} "
                   f"C11_min={rep.C11_min:.4f}")


def test_c11_determinism(tmp_path):
    cube(4).save(tmp_path / "cube.json")
    cube_file = str(tmp_path / "cube.json")
    commands = {
        "sweep": ["sweep", "--body", "k", "--n-list", "64,128", "--samples", "20000", "--seed", "7"],
        "centroid": ["centroid", "--body", "p", "--n", "128", "--samples", "20000", "--seed", "3"],
        "halfvolume": ["halfvolume", "--body", "k", "--n", "64", "--R", "10", "--samples", "20000"],
        "construct": ["construct", "--body", "p", "--n", "64", "--profile-grid", "9", "--seed", "2"],
        "john": ["john", "--in", cube_file],
        "sample": ["sample", "--in", cube_file, "--count", "500", "--seed", "4"],
        "concentration": ["concentration", "--test", "badsets", "--n", "128", "--samples", "20000"],
    }
    mismatched = []
    for name, args in commands.items():
        outs = []
        for threads in ("1", "8", "1"):
            path = tmp_path / f"{name}_{threads}_{len(outs)}.out"
            code = run(args + ["--threads", threads, "--out", str(path)])
            assert code == 0, f"{name} exited {code}"
            outs.append(path.read_bytes() + Path(f"{path}.config.json").read_bytes())
        if len(set(outs)) != 1:
            mismatched.append(name)
    record(11, not mismatched, f"{len(commands)} commands x (1, 8, 1) threads, mismatches: {mismatched or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
