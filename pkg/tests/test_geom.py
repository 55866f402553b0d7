import numpy as np
import pytest

from johncentroid.errors import InputError
from johncentroid.geom import Ellipsoid, HPolytope, JohnCertificate, Segment, SliceProfile, chebyshev_ball, contains

from conftest import cube


def test_polytope_validation():
    with pytest.raises(InputError):
        HPolytope(np.zeros((2, 2)), np.ones(2))
    with pytest.raises(InputError):
        HPolytope(np.ones((3, 1)), np.ones(3))


def test_contains_and_dimension_check(cube4):
    pts = np.array([[0, 0, 0, 0], [1, 1, 1, 1], [1.01, 0, 0, 0]], dtype=float)
    assert list(contains(cube4, pts)) == [True, True, False]
    with pytest.raises(InputError):
        contains(cube4, np.zeros(3))


def test_json_roundtrip(tmp_path, cube4):
    path = tmp_path / "c.json"
    cube4.save(path)
    back = HPolytope.load(path)
    assert np.array_equal(back.A, cube4.A) and np.array_equal(back.b, cube4.b)
    assert back.to_json().keys() == {"name", "dim", "A", "b"}


def test_chebyshev_ball_of_box():
    box = HPolytope(np.vstack([np.eye(2), -np.eye(2)]), np.array([1.0, 3.0, 1.0, 1.0]))
    c, r = chebyshev_ball(box.A, box.b)
    assert r == pytest.approx(1.0)
    assert c[0] == pytest.approx(0.0)


def test_ellipsoid_containment():
    ell = Ellipsoid(np.zeros(3), np.eye(3))
    assert ell.contained_in(cube(3))
    assert not Ellipsoid(np.zeros(3), 1.1 * np.eye(3)).contained_in(cube(3))
    with pytest.raises(InputError):
        Ellipsoid(np.zeros(2), np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_certificate_trace_check():
    U = np.vstack([np.eye(2), -np.eye(2)])
    JohnCertificate(U, np.full(4, 0.5))
    with pytest.raises(InputError):
        JohnCertificate(U, np.full(4, 0.4))


def test_profile_validation_and_split():
    prof = SliceProfile.from_breaks([0.0, 1.0, 3.0], [(1.0, 1.0), (3.0, -1.0)])
    assert prof(0.5) == pytest.approx(1.5)
    assert prof(2.0) == pytest.approx(1.0)
    lo, hi = prof.split(2.0)
    assert lo.tmax == hi.tmin == 2.0
    with pytest.raises(InputError):  # discontinuous
        SliceProfile((Segment(0.0, 1.0, 1.0, 0.0), Segment(1.0, 2.0, 2.0, 0.0)))
    with pytest.raises(InputError):  # negative radius
        SliceProfile((Segment(0.0, 2.0, 1.0, -1.0),))
