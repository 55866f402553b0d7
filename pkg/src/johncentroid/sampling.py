"""Random streams, sphere sampling and uniform samplers in convex bodies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .errors import InputError, SamplingError
from .geom import HPolytope, contains

CHORD_TOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: ``(seed, index)`` fully determines the output.

    Philox is keyed through ``SeedSequence(seed, spawn_key=index)`` so sibling
    indices give statistically independent streams.
    """

    seed: int
    index: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise InputError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.seed), spawn_key=self.index)
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, *index: int) -> RngStream:
        return RngStream(self.seed, self.index + tuple(index))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator()


def sample_sphere(n: int, rng, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit sphere of R^n by normalizing Gaussians."""
    if n < 2:
        raise InputError("sphere dimension n must be at least 2")
    gen = _as_generator(rng)
    shape = (n,) if size is None else (size, n)
    g = gen.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def sphere_first_coordinate(n: int, size: int, rng) -> np.ndarray:
    """First coordinate of uniform points on S^(n-1), via ``g_1 / sqrt(g_1^2 + chi2_(n-1))``."""
    gen = _as_generator(rng)
    g1 = gen.standard_normal(size)
    rest = gen.chisquare(n - 1, size)
    return g1 / np.sqrt(g1 * g1 + rest)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    body_id: str
    method: str
    burn_in: int = 0
    thin: int = 1
    chains: int = 1

    def __post_init__(self):
        if self.method not in ("rejection", "hit-and-run"):
            raise InputError(f"unknown sampling method {self.method!r}")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean_stderr(self, values: np.ndarray) -> tuple[float, float]:
        """Mean of per-point ``values`` and its standard error.

        Hit-and-run batches use between-chain variance of chain means, which
        absorbs within-chain autocorrelation.
        """
        values = np.asarray(values, dtype=float)
        mean = float(values.mean())
        if self.method == "hit-and-run" and self.chains > 1:
            per_chain = values.reshape(self.chains, -1).mean(axis=1)
            return mean, float(per_chain.std(ddof=1) / math.sqrt(self.chains))
        return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def _membership(body) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(body, HPolytope):
        return lambda x: np.atleast_1d(contains(body, x))
    if hasattr(body, "contains"):
        return lambda x: np.atleast_1d(body.contains(x))
    if callable(body):
        return lambda x: np.atleast_1d(body(x))
    raise InputError("body must be an HPolytope, expose .contains, or be callable")


def _check_interior(member, x0: np.ndarray) -> None:
    n = x0.size
    delta = 1e-9 * (1.0 + np.linalg.norm(x0))
    probes = np.vstack([x0, x0 + delta * np.eye(n), x0 - delta * np.eye(n)])
    if not np.all(member(probes)):
        raise InputError("starting point is not strictly interior")


def _polytope_chords(poly: HPolytope, x: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact chord ``x + lam d`` for ``lam`` in ``(lo, hi)`` by the ratio test."""
    slack = poly.b[None, :] - x @ poly.A.T
    rate = d @ poly.A.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = slack / rate
    hi = np.min(np.where(rate > 0, ratio, np.inf), axis=1)
    lo = np.max(np.where(rate < 0, ratio, -np.inf), axis=1)
    if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
        raise SamplingError("unbounded chord: polytope is not bounded")
    return lo, hi


def _bisect_chords(member, x: np.ndarray, d: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Chord ends by bisection on membership, to ``CHORD_TOL`` along the ray."""
    span = 2.0 * radius

    def reach(direction):
        k = x.shape[0]
        lo = np.zeros(k)
        hi = np.full(k, span)
        if np.any(member(x + span * direction)):
            raise SamplingError("chord leaves no bounding radius: body unbounded or radius too small")
        while np.max(hi - lo) > CHORD_TOL:
            mid = 0.5 * (lo + hi)
            inside = member(x + mid[:, None] * direction)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return lo

    return -reach(-d), reach(d)


def hit_and_run(body, x0, steps: int, burn_in: int | None = None, thin: int | None = None,
                rng=0, bounding_radius: float | None = None, chains: int = 1,
                body_id: str = "") -> SampleBatch:
    """Hit-and-run chains started at ``x0``.

    Each chain runs ``burn_in`` discarded steps, then ``steps`` steps of which
    every ``thin``-th is kept.  H-polytopes use exact chords; other bodies are
    bisected on membership and need ``bounding_radius`` (body inside that
    ball around the origin).
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    burn_in = 10 * n * n if burn_in is None else int(burn_in)
    thin = n if thin is None else int(thin)
    if steps < thin or thin < 1:
        raise InputError("need steps >= thin >= 1")
    member = _membership(body)
    _check_interior(member, x0)
    exact = isinstance(body, HPolytope)
    if not exact and bounding_radius is None:
        raise InputError("bounding_radius is required for membership-oracle bodies")
    gen = _as_generator(rng)
    x = np.tile(x0, (chains, 1))
    kept = []
    for step in range(burn_in + steps):
        d = gen.standard_normal((chains, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        if exact:
            lo, hi = _polytope_chords(body, x, d)
        else:
            lo, hi = _bisect_chords(member, x, d, bounding_radius)
        lam = lo + (hi - lo) * gen.random(chains)
        x = x + lam[:, None] * d
        if step >= burn_in and (step - burn_in + 1) % thin == 0:
            kept.append(x.copy())
    pts = np.stack(kept, axis=1).reshape(-1, n)  # chain-major
    ok = member(pts)
    if not np.all(ok):
        # exact chords can land a rounding error outside; pull such points back
        bad = ~ok
        pts[bad] = x0 + (1.0 - 1e-12) * (pts[bad] - x0)
        if not np.all(member(pts)):
            raise SamplingError("hit-and-run produced a point outside the body")
    return SampleBatch(pts, body_id or getattr(body, "name", ""), "hit-and-run", burn_in, thin, chains)


def polytope_box(poly: HPolytope) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box of a bounded H-polytope (2n LPs)."""
    n = poly.dim
    lo, hi = np.empty(n), np.empty(n)
    for i in range(n):
        for sgn, out in ((1.0, lo), (-1.0, hi)):
            cost = np.zeros(n)
            cost[i] = sgn
            res = linprog(cost, A_ub=poly.A, b_ub=poly.b, bounds=[(None, None)] * n, method="highs")
            if res.status != 0:
                raise SamplingError("polytope is unbounded along a coordinate axis")
            out[i] = res.x[i]
    return lo, hi


def rejection_sample(body, count: int, rng=0, box=None, batch: int = 100_000,
                     body_id: str = "") -> SampleBatch:
    """Exact uniform samples by rejection from an axis-aligned box."""
    if box is None:
        box = polytope_box(body) if isinstance(body, HPolytope) else body.bounding_box()
    lo, hi = (np.asarray(v, dtype=float) for v in box)
    n = lo.size
    if n > 12:
        raise InputError("rejection sampling is limited to n <= 12")
    member = _membership(body)
    gen = _as_generator(rng)
    chunks, have, proposed = [], 0, 0
    while have < count:
        prop = lo + (hi - lo) * gen.random((batch, n))
        ok = member(prop)
        proposed += batch
        chunks.append(prop[ok])
        have += int(ok.sum())
        if proposed >= 10_000_000 and have / proposed < 1e-6:
            raise SamplingError(f"acceptance rate {have / proposed:.2e} below 1e-6")
    pts = np.concatenate(chunks)[:count]
    return SampleBatch(pts, body_id or getattr(body, "name", ""), "rejection")


def acceptance_rate(body, rng, box, proposals: int) -> tuple[float, float]:
    """Fraction of box proposals inside ``body`` and its binomial standard error."""
    lo, hi = (np.asarray(v, dtype=float) for v in box)
    gen = _as_generator(rng)
    prop = lo + (hi - lo) * gen.random((proposals, lo.size))
    p = float(np.mean(_membership(body)(prop)))
    return p, math.sqrt(max(p * (1 - p), 0.0) / proposals)


@dataclass
class NormStatistics:
    median: float
    l2: float
    mean_norm: float
    stderr: dict = field(default_factory=dict)


def norm_statistics(batch: SampleBatch, center=None, n_boot: int = 200, rng=0) -> NormStatistics:
    """Median of ``|X|``, ``(E|X|^2)^(1/2)`` and ``|E X|`` with bootstrap errors."""
    pts = batch.points if center is None else batch.points - np.asarray(center)
    if pts.shape[0] == 0:
        raise InputError("empty batch")
    norms = np.linalg.norm(pts, axis=1)

    def stats(idx):
        r = norms[idx]
        return np.median(r), math.sqrt(np.mean(r * r)), np.linalg.norm(pts[idx].mean(axis=0))

    full = stats(np.arange(norms.size))
    gen = _as_generator(rng)
    boots = np.array([stats(gen.integers(0, norms.size, norms.size)) for _ in range(n_boot)])
    se = boots.std(axis=0, ddof=1) if n_boot > 1 else np.zeros(3)
    return NormStatistics(float(full[0]), float(full[1]), float(full[2]),
                          {"median": float(se[0]), "l2": float(se[1]), "mean_norm": float(se[2])})
