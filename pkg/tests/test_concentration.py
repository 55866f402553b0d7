import math

import numpy as np
import pytest

from johncentroid.concentration import (BoundCheck, bad_set_measures, borell_bound, borell_tail_check,
                                        cap_measure_exact, check_cap_bound, default_C0, gaussian_max_ratio,
                                        gaussian_norm_bounds, lipschitz_concentration_check,
                                        moment_sandwich_checks, small_ball_check)
from johncentroid.errors import InputError
from johncentroid.john import john_report
from johncentroid.sampling import RngStream, SampleBatch, hit_and_run

from conftest import cube


def _segment_batch(N=200_000):
    # midpoint grid is an exact quadrature stand-in for uniform [-1, 1]
    x = -1 + (np.arange(N) + 0.5) * 2 / N
    return SampleBatch(x[:, None], "segment", "rejection")


def test_bound_check_semantics():
    c = BoundCheck("x", {}, lhs=1.0, rhs=0.9, stderr=0.05)
    assert c.passed and c.margin == pytest.approx(-0.1)
    assert not BoundCheck("x", {}, 1.0, 0.9, 0.0).passed


@pytest.mark.parametrize("t", [0.0, 0.3, 0.8])
def test_cap_low_dimensions(t):
    assert cap_measure_exact(2, t) == pytest.approx(math.acos(t) / math.pi, rel=1e-12)
    assert cap_measure_exact(3, t) == pytest.approx((1 - t) / 2, rel=1e-12)
    with pytest.raises(InputError):
        cap_measure_exact(3, 1.0)


def test_cap_bound_grid_and_mc():
    checks = check_cap_bound([100], [0.3], N=50_000)
    assert checks[0].passed and checks[0].details["mc_agrees"]


def test_lipschitz_examples():
    lin = lipschitz_concentration_check(lambda x: x[:, 0], 1.0, 40, [0.1, 0.2], N=20_000)
    assert lin.passed
    const = lipschitz_concentration_check(lambda x: np.linalg.norm(x, axis=1), 1.0, 40, [0.1], N=5000)
    assert const.lhs == 0.0
    with pytest.raises(InputError):
        lipschitz_concentration_check(lambda x: 10 * x[:, 0], 1.0, 40, [0.1], N=100)


def test_bad_sets_implication_and_small_n():
    assert default_C0() == pytest.approx(12.0)
    rep = bad_set_measures(128, 1 / math.log(128), N=20_000)
    assert rep.implication_violations == 0
    small = bad_set_measures(16, 0.9, N=2000)  # reported, not asserted
    assert 0.0 <= small.o1.lhs <= 1.0


def test_borell_on_segment():
    batch = _segment_batch()
    check = borell_tail_check(batch, [1.2], delta=2 / 3)
    assert check.details["grid"][0]["tail"] == pytest.approx(0.2, abs=1e-4)
    assert check.rhs == pytest.approx(borell_bound(2 / 3, 1.2), rel=1e-3)
    assert check.passed
    # t = 1: bound equals 1 - delta
    assert borell_bound(2 / 3, 1.0) == pytest.approx(1 / 3)
    with pytest.raises(InputError):
        borell_tail_check(batch, [1.5], R=0.5)


def test_small_ball_on_segment():
    check = small_ball_check(_segment_batch(), [0.0, 0.25, 0.5, 1.0])
    ratios = [r["ratio"] for r in check.details["grid"] if r["ratio"] is not None]
    assert ratios == pytest.approx([1.0, 1.0, 1.0], abs=1e-4)
    assert check.details["grid"][0]["mu"] == 0.0


def test_sandwich_segment_ratio():
    rep = moment_sandwich_checks(_segment_batch(), directions=np.array([[1.0]]))
    assert rep.seminorms[0].details["ratio"] == pytest.approx(2 / math.sqrt(3), rel=1e-6)
    assert all(c.passed for c in rep.seminorms)


def test_sandwich_cube_with_certificate():
    n = 8
    poly = cube(n)
    batch = hit_and_run(poly, np.zeros(n), steps=400 * n, chains=50, rng=RngStream(2))
    cert = john_report(poly).contacts
    rep = moment_sandwich_checks(batch, certificate=cert)
    assert rep.median_l2.passed and rep.centroid_l2.passed
    assert rep.C10 == pytest.approx(4.0, rel=0.05)  # kappa^2 = 4/3 for uniform coordinates
    assert rep.C11_min == pytest.approx(1 / 3, rel=0.05)


def test_gaussian_norm_bounds():
    rep = gaussian_norm_bounds(128, 1 / math.log(128), N=4000)
    assert rep.pointwise_holds
    assert rep.mean_norm <= 2 * rep.mean_max_abs
    assert 0.8 < rep.c_double_prime < 1.2
    for n in (100, 10_000):
        r, _ = gaussian_max_ratio(n, N=400)
        assert 0.7 <= r <= 1.1
