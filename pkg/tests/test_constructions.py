import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from johncentroid.constructions import (KBody, PBody, QBody, a_prime_norm, build_L2, build_P, build_Q,
                                        epsilon_n, l2_rows, make_body, rho_L, rho_L2, rho_Q)
from johncentroid.errors import DomainError, InputError
from johncentroid.sampling import sample_sphere


def test_Q_rows():
    Q = build_Q(5)
    assert Q.n_rows == 2 * 4 + 1
    assert np.allclose(np.linalg.norm(Q.A, axis=1), 1.0)
    assert np.allclose(Q.b, 1.0)


def test_l2_row_count_and_norms():
    rows = l2_rows(4, 0.5)
    assert rows.shape == (24, 3)
    assert any(np.allclose(r, [0.5, math.sqrt(0.75), 0.0]) for r in rows)
    assert np.allclose(np.linalg.norm(rows, axis=1), 1.0)
    # 1 - eps = 1/sqrt(2) makes (i, j) and (j, i) rows coincide
    assert l2_rows(4, 1 - 1 / math.sqrt(2)).shape == (12, 3)


def test_epsilon_range():
    assert epsilon_n(256) == pytest.approx(1 / math.log(256))
    with pytest.raises(InputError):
        epsilon_n(16)
    with pytest.raises(InputError):
        build_L2(20, 0.4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_a_prime_norm_is_max_over_rows(seed):
    n, eps = 25, 0.45 + 0.5 * (seed % 7) / 7
    theta = sample_sphere(n - 1, seed)
    brute = np.max(l2_rows(n, eps) @ theta)
    assert a_prime_norm(theta, eps) == pytest.approx(brute, rel=1e-12)
    assert rho_L2(theta, n, eps) == pytest.approx(1 / brute, rel=1e-12)


def _on_boundary(poly, theta, t, rho):
    inner = np.append((1 - 1e-9) * rho * theta, t)
    outer = np.append((1 + 1e-7) * rho * theta, t)
    return poly.contains(inner) and not poly.contains(outer)


@pytest.mark.parametrize("t", [-0.5, 0.0, 3.0, 7.5])
def test_rho_Q_matches_polytope(t):
    n = 8
    Q = build_Q(n)
    for seed in range(5):
        theta = sample_sphere(n - 1, seed)
        assert _on_boundary(Q, theta, t, rho_Q(theta, t, n))


def test_rho_Q_domain():
    with pytest.raises(DomainError):
        rho_Q(np.array([1.0, 0.0]), 4.0, 3)
    with pytest.raises(InputError):
        rho_Q(np.array([1.0, 1.0]), 1.0, 3)


def test_P_profile_matches_polytope():
    n, eps = 20, 0.6
    P, body = build_P(n, eps), PBody(n, eps)
    for seed in range(5):
        theta = sample_sphere(n - 1, seed)
        prof = body.profile(theta)
        for t in np.linspace(prof.tmin + 0.01, prof.tmax - 0.01, 7):
            assert _on_boundary(P, theta, t, prof(t))


def test_K_profile_is_min_of_Q_and_L():
    n = 12
    body = KBody(n)
    theta = sample_sphere(n - 1, 4)
    prof = body.profile(theta)
    for t in np.linspace(-1, n, 25):
        assert prof(t) == pytest.approx(min(rho_Q(theta, t, n), rho_L(t, n)), abs=1e-12)
    x_in = np.append(0.999 * prof(2.0) * theta, 2.0)
    x_out = np.append(1.001 * prof(2.0) * theta, 2.0)
    assert body.contains(x_in) and not body.contains(x_out)


def test_bounding_boxes_contain_bodies():
    for kind in ("k", "q", "cone", "cylinder"):
        body = make_body(kind, 6)
        lo, hi = body.bounding_box()
        for seed in range(5):
            theta = sample_sphere(5, seed)
            prof = body.profile(theta)
            for t in np.linspace(prof.tmin, prof.tmax, 9):
                x = np.append(prof(t) * theta, t)
                assert np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)


def test_make_body_rejects_unknown():
    with pytest.raises(InputError):
        make_body("sphere", 5)
    assert isinstance(make_body("q", 5), QBody)


def test_radial_function_examples():
    n = 10
    e1 = np.eye(n - 1)[0]
    diag = (np.eye(n - 1)[0] + np.eye(n - 1)[1]) / math.sqrt(2)
    assert rho_Q(e1, 0.0, n) == pytest.approx(n / math.sqrt(n * n - 1))
    assert rho_Q(diag, -1.0, n) == pytest.approx(math.sqrt(2) * (n + 1) / math.sqrt(n * n - 1))
    m, eps = 100, 0.2  # 1 - eps >= sqrt(1 - (1 - eps)^2), so the major coefficient dominates on e1
    e1 = np.eye(m - 1)[0]
    diag = (np.eye(m - 1)[0] + np.eye(m - 1)[1]) / math.sqrt(2)
    assert rho_L2(e1, m, eps) == pytest.approx(1 / (1 - eps))
    assert 1 / rho_L2(diag, m, eps) == pytest.approx(((1 - eps) + math.sqrt(1 - (1 - eps) ** 2)) / math.sqrt(2))


def test_K_crossing_n100():
    n = 100
    theta = np.eye(n - 1)[0]
    tstar = float(KBody(n).crossing(theta[None, :])[0])
    assert (n - tstar) / math.sqrt(n * n - 1) == pytest.approx(2 + tstar / n)
    # along e1 the crossing lies below the base, so Q is inside L on all of [-1, n]
    assert tstar < -1
    assert len(KBody(n).profile(theta).segments) == 1
    spread = np.full(n - 1, 1 / math.sqrt(n - 1))
    assert -1 < float(KBody(n).crossing(spread[None, :])[0]) < n
    assert len(KBody(n).profile(spread).segments) == 2
