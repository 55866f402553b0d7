"""Builders for the axial bodies Q, L, L2, K = Q & L, P = Q & L2, cylinder and cone.

Points are written ``x = (y, t)`` with ``y`` in R^(n-1) and ``t`` the axis
coordinate.  Every body here is rotationally described by a radius
``rho(theta, t)`` for ``theta`` on the unit sphere of R^(n-1).  The radius is
affine in ``t`` on at most two pieces, which is what the moments engine
integrates in closed form.

Segment tables are the vectorized form of a profile: arrays
``(intercept, slope, t_lo, t_hi)`` of shape ``(N, S)``.  Zero-length rows are
allowed there and contribute nothing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .geom import HPolytope, Segment, SliceProfile


def _check_n(n: int) -> None:
    if int(n) != n or n < 3:
        raise InputError(f"dimension must be an integer >= 3, got {n!r}")


def build_Q(n: int) -> HPolytope:
    """Cone over a cube, in John position: rows ``(+-sqrt(1-1/n^2) e_i, 1/n)`` and ``(0, -1)``."""
    _check_n(n)
    side = math.sqrt(1.0 - 1.0 / n**2)
    rows = []
    for i in range(n - 1):
        for sgn in (1.0, -1.0):
            row = np.zeros(n)
            row[i] = sgn * side
            row[-1] = 1.0 / n
            rows.append(row)
    apex = np.zeros(n)
    apex[-1] = -1.0
    rows.append(apex)
    A = np.array(rows)
    return HPolytope(A, np.ones(len(rows)), name=f"Q_{n}")


def _max_abs(theta) -> np.ndarray:
    return np.max(np.abs(np.asarray(theta, dtype=float)), axis=-1)


def q_slope(theta, n: int):
    """``1 / (max_i |theta_i| sqrt(n^2 - 1))``; ``rho_Q(theta, t) = q_slope * (n - t)``."""
    return 1.0 / (_max_abs(theta) * math.sqrt(n * n - 1.0))


def _check_unit(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(np.linalg.norm(theta, axis=-1) - 1.0) > 1e-9):
        raise InputError("theta must be a unit vector")
    return theta


def rho_Q(theta, t, n: int):
    theta = _check_unit(theta)
    t = np.asarray(t, dtype=float)
    if np.any((t < -1.0) | (t > n)):
        raise DomainError(f"t must lie in [-1, {n}]")
    out = q_slope(theta, n) * (n - t)
    return float(out) if np.ndim(out) == 0 else out


def rho_L(t, n: int):
    """Radius of ``L``: the cylinder-cone ``|y| <= 2 + t/n``."""
    return 2.0 + np.asarray(t, dtype=float) / n


def _check_epsilon(n: int, epsilon: float) -> None:
    if not (10.0 / n < epsilon < 1.0):
        raise InputError(f"epsilon must satisfy 10/n < epsilon < 1, got {epsilon!r} at n={n}")


def epsilon_n(n: int, c: float = 1.0) -> float:
    """``c / log n``, rejected unless ``10/n < eps < 1``."""
    _check_n(n)
    if c <= 0:
        raise InputError("c must be positive")
    eps = c / math.log(n)
    _check_epsilon(n, eps)
    return eps


def l2_coefficients(epsilon: float) -> tuple[float, float]:
    """``(1 - eps, sqrt(1 - (1 - eps)^2))``, the two coefficients of each row of A'."""
    major = 1.0 - epsilon
    return major, math.sqrt(1.0 - major * major)


def l2_rows(n: int, epsilon: float) -> np.ndarray:
    """Rows of A' in R^(n-1): ``+-(1-eps) e_i +- sqrt(1-(1-eps)^2) e_j`` over ordered ``i != j``.

    Only ``0 < eps < 1`` is required here; the bodies built from these rows
    enforce ``10/n < eps``.
    """
    _check_n(n)
    if not 0.0 < epsilon < 1.0:
        raise InputError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    major, minor = l2_coefficients(epsilon)
    d = n - 1
    rows = []
    for i, j in itertools.permutations(range(d), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            row = np.zeros(d)
            row[i] = si * major
            row[j] = sj * minor
            rows.append(row)
    rows = np.array(rows)
    # when 1 - eps = 1/sqrt(2) the (i, j) and (j, i) rows agree up to rounding
    _, keep = np.unique(np.round(rows, 12), axis=0, return_index=True)
    return rows[keep]


def build_L2(n: int, epsilon: float) -> HPolytope:
    """Cylinder over the unit ball of the A' norm, for ``t`` in ``[-1, n]``."""
    _check_epsilon(n, epsilon)
    U = l2_rows(n, epsilon)
    A = np.zeros((U.shape[0] + 2, n))
    A[: U.shape[0], :-1] = U
    A[-2, -1] = 1.0
    A[-1, -1] = -1.0
    b = np.ones(A.shape[0])
    b[-2] = float(n)
    return HPolytope(A, b, name=f"L2_{n}_{epsilon:.6g}")


def build_P(n: int, epsilon: float) -> HPolytope:
    """``P = Q & L2`` as one H-polytope.

    L2's ``-t <= 1`` row repeats Q's ``(0, -1)`` row and is dropped.
    """
    Q = build_Q(n)
    L2 = build_L2(n, epsilon)
    A = np.vstack([Q.A, L2.A[:-1]])
    b = np.concatenate([Q.b, L2.b[:-1]])
    return HPolytope(A, b, name=f"P_{n}_{epsilon:.6g}")


def a_prime_norm(theta, epsilon: float):
    """``max_{i != j} (1-eps)|y_i| + sqrt(1-(1-eps)^2)|y_j|`` along the last axis."""
    y = np.abs(np.asarray(theta, dtype=float))
    major, minor = l2_coefficients(epsilon)
    top2 = -np.partition(-y, 1, axis=-1)[..., :2]
    hi, lo = max(major, minor), min(major, minor)
    return hi * top2[..., 0] + lo * top2[..., 1]


def rho_L2(theta, n: int, epsilon: float):
    """Radius of the L2 cross-section, ``1 / ||theta||`` in the A' norm (independent of t)."""
    _check_epsilon(n, epsilon)
    theta = _check_unit(theta)
    out = 1.0 / a_prime_norm(theta, epsilon)
    return float(out) if np.ndim(out) == 0 else out


def _segments_to_profile(table, row: int = 0) -> SliceProfile:
    a, s, lo, hi = (np.atleast_2d(x)[row] for x in table)
    segs = tuple(Segment(float(l), float(h), float(ai), float(si))
                 for ai, si, l, h in zip(a, s, lo, hi) if h > l)
    return SliceProfile(segs)


class AxialBody:
    """A body described by radii ``rho(theta, t)`` around the ``t`` axis.

    Subclasses provide :meth:`segment_table`; :meth:`profile` is derived.
    ``isotropic`` bodies have the same profile for every ``theta``.
    """

    name = "body"
    isotropic = False

    def __init__(self, n: int):
        self.n = int(n)

    def segment_table(self, thetas):
        raise NotImplementedError

    def profile(self, theta) -> SliceProfile:
        return _segments_to_profile(self.segment_table(np.atleast_2d(theta)))

    def __call__(self, theta) -> SliceProfile:
        return self.profile(theta)

    def contains(self, x):
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class ProfileBody(AxialBody):
    """Wraps a plain ``theta -> SliceProfile`` callable."""

    def __init__(self, n: int, generator, isotropic: bool = False, name: str = "custom"):
        super().__init__(n)
        self.generator = generator
        self.isotropic = isotropic
        self.name = name

    def profile(self, theta) -> SliceProfile:
        return self.generator(theta)

    def segment_table(self, thetas):
        thetas = np.atleast_2d(thetas)
        profiles = [self.generator(th) for th in thetas]
        width = max(len(p.segments) for p in profiles)
        table = np.zeros((4, len(profiles), width))
        for r, p in enumerate(profiles):
            for k, seg in enumerate(p.segments):
                table[:, r, k] = (seg.intercept, seg.slope, seg.t_lo, seg.t_hi)
            table[2:, r, len(p.segments):] = p.tmax
        return tuple(table)


def _two_piece(a1, s1, a2, s2, tstar, tmin, tmax):
    """Rows ``[tmin, tstar]`` with line 1 and ``[tstar, tmax]`` with line 2 (tstar clipped)."""
    tstar = np.clip(tstar, tmin, tmax)
    N = tstar.shape[0]
    a = np.stack([np.broadcast_to(a1, (N,)), np.broadcast_to(a2, (N,))], axis=1)
    s = np.stack([np.broadcast_to(s1, (N,)), np.broadcast_to(s2, (N,))], axis=1)
    lo = np.stack([np.full(N, float(tmin)), tstar], axis=1)
    hi = np.stack([tstar, np.full(N, float(tmax))], axis=1)
    return a.astype(float), s.astype(float), lo, hi


class QBody(AxialBody):
    name = "q"

    def segment_table(self, thetas):
        thetas = np.atleast_2d(thetas)
        m = q_slope(thetas, self.n)
        n = self.n
        return ((n * m)[:, None], (-m)[:, None], np.full((len(m), 1), -1.0), np.full((len(m), 1), float(n)))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        y, t = x[..., :-1], x[..., -1]
        n = self.n
        tol = 1e-12
        return ((t >= -1 - tol) & (t <= n + tol)
                & (np.max(np.abs(y), axis=-1) * math.sqrt(n * n - 1) <= (n - t) * (1 + tol) + tol))

    def bounding_box(self):
        n = self.n
        half = (n + 1) / math.sqrt(n * n - 1.0)
        lo = np.full(n, -half)
        hi = np.full(n, half)
        lo[-1], hi[-1] = -1.0, float(n)
        return lo, hi


class LBody(AxialBody):
    name = "l"
    isotropic = True

    def segment_table(self, thetas):
        N = np.atleast_2d(thetas).shape[0]
        n = self.n
        return (np.full((N, 1), 2.0), np.full((N, 1), 1.0 / n), np.full((N, 1), -1.0), np.full((N, 1), float(n)))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        y, t = x[..., :-1], x[..., -1]
        tol = 1e-12
        return (t >= -1 - tol) & (t <= self.n + tol) & (np.linalg.norm(y, axis=-1) <= rho_L(t, self.n) * (1 + tol))

    def bounding_box(self):
        n = self.n
        lo = np.full(n, -3.0)
        hi = np.full(n, 3.0)
        lo[-1], hi[-1] = -1.0, float(n)
        return lo, hi


class KBody(AxialBody):
    """``K = Q & L``; only available as profiles plus a membership oracle."""

    name = "k"

    def crossing(self, thetas):
        """Height where ``rho_Q = rho_L``: solves ``m (n - t) = 2 + t/n``."""
        m = q_slope(np.atleast_2d(thetas), self.n)
        n = self.n
        return (m * n - 2.0) / (m + 1.0 / n)

    def segment_table(self, thetas):
        thetas = np.atleast_2d(thetas)
        n = self.n
        m = q_slope(thetas, n)
        tstar = (m * n - 2.0) / (m + 1.0 / n)
        return _two_piece(2.0, 1.0 / n, n * m, -m, tstar, -1.0, float(n))

    def contains(self, x):
        return QBody(self.n).contains(x) & LBody(self.n).contains(x)

    def bounding_box(self):
        qlo, qhi = QBody(self.n).bounding_box()
        llo, lhi = LBody(self.n).bounding_box()
        return np.maximum(qlo, llo), np.minimum(qhi, lhi)


class PBody(AxialBody):
    """``P = Q & L2``: constant A'-norm radius until Q takes over."""

    name = "p"

    def __init__(self, n: int, epsilon: float):
        super().__init__(n)
        _check_epsilon(n, epsilon)
        self.epsilon = float(epsilon)

    def rho_l2(self, thetas):
        return 1.0 / a_prime_norm(np.atleast_2d(thetas), self.epsilon)

    def segment_table(self, thetas):
        thetas = np.atleast_2d(thetas)
        n = self.n
        m = q_slope(thetas, n)
        r = self.rho_l2(thetas)
        tstar = n - r / m
        return _two_piece(r, 0.0, n * m, -m, tstar, -1.0, float(n))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        y = x[..., :-1]
        inside_l2 = a_prime_norm(y, self.epsilon) <= 1.0 + 1e-12
        return QBody(self.n).contains(x) & inside_l2

    def bounding_box(self):
        return QBody(self.n).bounding_box()


class CylinderBody(AxialBody):
    """Unit-radius cylinder of height ``n + 1`` (the base cancels from axis moments)."""

    name = "cylinder"
    isotropic = True

    def segment_table(self, thetas):
        N = np.atleast_2d(thetas).shape[0]
        return (np.ones((N, 1)), np.zeros((N, 1)), np.zeros((N, 1)), np.full((N, 1), self.n + 1.0))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        y, t = x[..., :-1], x[..., -1]
        return (t >= 0) & (t <= self.n + 1) & (np.linalg.norm(y, axis=-1) <= 1.0)

    def bounding_box(self):
        lo = np.full(self.n, -1.0)
        hi = np.full(self.n, 1.0)
        lo[-1], hi[-1] = 0.0, self.n + 1.0
        return lo, hi


class ConeBody(AxialBody):
    """Cone with radius ``t / (n + 1)`` on ``[0, n + 1]``."""

    name = "cone"
    isotropic = True

    def segment_table(self, thetas):
        N = np.atleast_2d(thetas).shape[0]
        return (np.zeros((N, 1)), np.full((N, 1), 1.0 / (self.n + 1)), np.zeros((N, 1)), np.full((N, 1), self.n + 1.0))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        y, t = x[..., :-1], x[..., -1]
        return (t >= 0) & (t <= self.n + 1) & (np.linalg.norm(y, axis=-1) <= t / (self.n + 1))

    def bounding_box(self):
        lo = np.full(self.n, -1.0)
        hi = np.full(self.n, 1.0)
        lo[-1], hi[-1] = 0.0, self.n + 1.0
        return lo, hi


def profile_K(theta, n: int) -> SliceProfile:
    return KBody(n).profile(_check_unit(theta))


def profile_P(theta, n: int, epsilon: float) -> SliceProfile:
    return PBody(n, epsilon).profile(_check_unit(theta))


def reference_profiles(n: int) -> dict[str, SliceProfile]:
    """Cylinder ``rho = 1`` and cone ``rho = t/(n+1)``, both on ``[0, n+1]``."""
    return {
        "cylinder": SliceProfile((Segment(0.0, n + 1.0, 1.0, 0.0),)),
        "cone": SliceProfile((Segment(0.0, n + 1.0, 0.0, 1.0 / (n + 1)),)),
    }


@dataclass(frozen=True)
class BodySpec:
    kind: str
    n: int
    epsilon: float | None = None

    def __post_init__(self):
        kinds = {"q", "l", "l2", "k", "p", "cylinder", "cone"}
        if self.kind not in kinds:
            raise InputError(f"unknown body kind {self.kind!r}; expected one of {sorted(kinds)}")
        _check_n(self.n)
        if self.kind in ("l2", "p"):
            if self.epsilon is None:
                raise InputError(f"body {self.kind!r} needs epsilon")
            _check_epsilon(self.n, self.epsilon)


def make_body(kind: str, n: int, epsilon: float | None = None) -> AxialBody:
    """Axial body by short name; ``p`` defaults ``epsilon`` to ``1/log n``."""
    kind = kind.lower()
    if kind == "p" and epsilon is None:
        epsilon = epsilon_n(n)
    spec = BodySpec(kind, n, epsilon)
    if spec.kind == "k":
        return KBody(n)
    if spec.kind == "p":
        return PBody(n, spec.epsilon)
    if spec.kind == "q":
        return QBody(n)
    if spec.kind == "l":
        return LBody(n)
    if spec.kind == "cylinder":
        return CylinderBody(n)
    if spec.kind == "cone":
        return ConeBody(n)
    raise InputError(f"body {kind!r} has no axial profile")
