"""Core domain types: H-polytopes, ellipsoids, John certificates, slice profiles."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConstructionError, InputError

MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class HPolytope:
    """The set ``{x : A x <= b}``.

    A strictly interior point must exist.  It is probed at ``witness`` if one is
    given, otherwise at the origin, and failing that by a Chebyshev-ball LP.
    """

    A: np.ndarray
    b: np.ndarray
    name: str = ""
    witness: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise InputError(f"A has shape {A.shape} but b has {b.shape[0]} entries")
        if A.shape[1] < 2:
            raise InputError("dimension must be at least 2")
        if np.any(np.linalg.norm(A, axis=1) == 0.0):
            raise InputError("every row normal must be nonzero")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.witness is not None:
            w = np.asarray(self.witness, dtype=float)
            if w.shape != (A.shape[1],) or not np.all(A @ w < b):
                raise ConstructionError("supplied witness is not strictly interior")
        elif not np.all(b > 0.0):
            center, radius = chebyshev_ball(A, b)
            if radius <= 1e-12:
                raise ConstructionError("polytope has empty interior")
            object.__setattr__(self, "witness", center)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def interior_point(self) -> np.ndarray:
        if self.witness is not None:
            return np.asarray(self.witness, dtype=float)
        return np.zeros(self.dim)

    def contains(self, x) -> bool | np.ndarray:
        return contains(self, x)

    def to_json(self) -> dict:
        return {"name": self.name, "dim": self.dim, "A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> HPolytope:
        try:
            A = np.asarray(data["A"], dtype=float)
            b = np.asarray(data["b"], dtype=float)
            dim = int(data["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed polytope JSON: {exc}") from exc
        if A.ndim != 2 or A.shape[1] != dim:
            raise InputError(f"declared dim {dim} does not match A of shape {A.shape}")
        return cls(A, b, name=str(data.get("name", "")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> HPolytope:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def affine_image(self, M, d) -> HPolytope:
        """Image ``{M x + d : x in self}`` for invertible ``M``."""
        M = np.asarray(M, dtype=float)
        d = np.asarray(d, dtype=float)
        Minv = np.linalg.inv(M)
        A = self.A @ Minv
        b = self.b + A @ d
        return HPolytope(A, b, name=self.name, witness=M @ self.interior_point() + d)


def chebyshev_ball(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the largest Euclidean ball in ``{A x <= b}``."""
    from scipy.optimize import linprog

    m, n = A.shape
    norms = np.linalg.norm(A, axis=1)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    res = linprog(
        cost,
        A_ub=np.hstack([A, norms[:, None]]),
        b_ub=b,
        bounds=[(None, None)] * n + [(0, None)],
        method="highs",
    )
    if res.status == 3:
        raise ConstructionError("polytope contains arbitrarily large balls (unbounded)")
    if res.status != 0:
        return np.zeros(n), 0.0
    return res.x[:n], float(res.x[-1])


def contains(poly: HPolytope, x) -> bool | np.ndarray:
    """Membership with relative slack ``1e-12 * (1 + |b_i|)``.

    ``x`` may be one point or a stack of points (last axis = dim).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != poly.dim:
        raise InputError(f"point has length {x.shape[-1]}, polytope dim is {poly.dim}")
    slack = MEMBERSHIP_RTOL * (1.0 + np.abs(poly.b))
    ok = np.all(x @ poly.A.T <= poly.b + slack, axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{center + shape @ u : |u| <= 1}`` with ``shape`` symmetric positive definite."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        E = np.array(self.shape, dtype=float)
        if E.shape != (c.size, c.size):
            raise InputError("shape must be n x n with n = len(center)")
        if np.max(np.abs(E - E.T), initial=0.0) > 1e-12:
            raise InputError("shape matrix is not symmetric")
        E = 0.5 * (E + E.T)
        if np.min(np.linalg.eigvalsh(E)) <= 0.0:
            raise InputError("shape matrix is not positive definite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "shape", E)

    @property
    def dim(self) -> int:
        return self.center.size

    def logdet(self) -> float:
        return float(np.linalg.slogdet(self.shape)[1])

    def contained_in(self, poly: HPolytope, tol: float = 1e-9) -> bool:
        support = np.linalg.norm(poly.A @ self.shape, axis=1) + poly.A @ self.center
        return bool(np.all(support <= poly.b + tol * (1.0 + np.abs(poly.b))))


@dataclass(frozen=True, eq=False)
class JohnCertificate:
    """Contact directions ``points[i]`` (unit rows) with positive ``weights[i]``."""

    points: np.ndarray
    weights: np.ndarray
    trace_tol: float = 1e-6

    def __post_init__(self):
        U = np.array(self.points, dtype=float)
        c = np.array(self.weights, dtype=float).reshape(-1)
        if U.ndim != 2 or U.shape[0] != c.size:
            raise InputError("points must be an (m, n) array matching weights")
        if np.any(np.abs(np.linalg.norm(U, axis=1) - 1.0) > 1e-12):
            raise InputError("contact points must be unit vectors")
        if np.any(c <= 0.0):
            raise InputError("weights must be positive")
        if abs(c.sum() - U.shape[1]) > self.trace_tol * U.shape[1]:
            raise InputError(f"weights sum to {c.sum()!r}, expected {U.shape[1]}")
        object.__setattr__(self, "points", U)
        object.__setattr__(self, "weights", c)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class Segment:
    t_lo: float
    t_hi: float
    intercept: float
    slope: float

    def __call__(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class SliceProfile:
    """Piecewise affine radius ``t -> rho(t)`` on ``[tmin, tmax]``."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise InputError("profile needs at least one segment")
        for seg in segs:
            if not seg.t_lo < seg.t_hi:
                raise InputError(f"empty segment [{seg.t_lo}, {seg.t_hi}]")
            scale = max(abs(seg.intercept), abs(seg.slope) * max(abs(seg.t_lo), abs(seg.t_hi)), 1.0)
            if min(seg(seg.t_lo), seg(seg.t_hi)) < -1e-12 * scale:
                raise InputError("profile radius is negative on a segment")
        for left, right in zip(segs, segs[1:]):
            if left.t_hi != right.t_lo:
                raise InputError("segments must tile the interval without gaps")
            vl, vr = left(left.t_hi), right(right.t_lo)
            if abs(vl - vr) > 1e-10 * max(abs(vl), abs(vr), 1.0):
                raise InputError("profile is discontinuous at a segment boundary")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_breaks(cls, breaks: Sequence[float], lines: Sequence[tuple[float, float]]) -> SliceProfile:
        return cls(tuple(Segment(lo, hi, a, s) for lo, hi, (a, s) in zip(breaks, breaks[1:], lines)))

    @property
    def tmin(self) -> float:
        return self.segments[0].t_lo

    @property
    def tmax(self) -> float:
        return self.segments[-1].t_hi

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any((t < self.tmin) | (t > self.tmax)):
            raise InputError("t outside the profile range")
        out = np.empty_like(t)
        for seg in self.segments:
            mask = (t >= seg.t_lo) & (t <= seg.t_hi)
            out[mask] = seg(t[mask])
        return out if out.ndim else float(out)

    def scaled(self, lam: float) -> SliceProfile:
        return SliceProfile(tuple(Segment(s.t_lo, s.t_hi, lam * s.intercept, lam * s.slope) for s in self.segments))

    def split(self, R: float) -> tuple[SliceProfile | None, SliceProfile | None]:
        """Pieces on ``[tmin, R]`` and ``[R, tmax]``; ``None`` where a piece is empty."""
        below, above = [], []
        for seg in self.segments:
            if seg.t_hi <= R:
                below.append(seg)
            elif seg.t_lo >= R:
                above.append(seg)
            else:
                below.append(Segment(seg.t_lo, R, seg.intercept, seg.slope))
                above.append(Segment(R, seg.t_hi, seg.intercept, seg.slope))
        return (SliceProfile(tuple(below)) if below else None,
                SliceProfile(tuple(above)) if above else None)
