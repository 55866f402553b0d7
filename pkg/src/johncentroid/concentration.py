"""Empirical checks of the concentration inequalities behind the construction.

Each check measures a left-hand side (with a standard error) and compares it
with a bound.  Universal constants with no known value are fitted and
reported; only parameter-free directions are treated as hard facts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betainc

from .constructions import a_prime_norm, q_slope, rho_L
from .errors import InputError
from .john import certificate_residuals
from .geom import JohnCertificate
from .sampling import RngStream, SampleBatch, sample_sphere, sphere_first_coordinate

DEFAULT_C3 = 0.5
DEFAULT_C4 = 0.125


def default_C0(C3: float = DEFAULT_C3) -> float:
    return math.sqrt(72.0 / C3)


@dataclass
class BoundCheck:
    """``lhs`` (measured, ``stderr``) against ``rhs``; passes when ``lhs <= rhs + 3 stderr``."""

    name: str
    parameters: dict
    lhs: float
    rhs: float
    stderr: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.lhs <= self.rhs + 3.0 * self.stderr)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        out["margin"] = self.margin
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _binomial_se(p: float, N: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / N)


# -- spherical caps -----------------------------------------------------------

def cap_measure_exact(n: int, t: float) -> float:
    """Normalized measure of ``{theta in S^(n-1) : theta_1 > t}`` for ``t`` in [0, 1)."""
    if n < 2:
        raise InputError("n must be at least 2")
    if not 0.0 <= t < 1.0:
        raise InputError("t must lie in [0, 1)")
    return 0.5 * float(betainc((n - 1) / 2.0, 0.5, 1.0 - t * t))


def cap_bound(n: int, t: float, C3: float = DEFAULT_C3) -> float:
    return 2.0 * math.exp(-C3 * t * t * n)


def check_cap_bound(n_grid, t_grid, C3: float = DEFAULT_C3, N: int = 0, seed: int = 0) -> list[BoundCheck]:
    """Exact cap measure against ``2 exp(-C3 t^2 n)`` on a grid.

    With ``N > 0`` each point also gets a Monte Carlo estimate; agreement with
    the exact value is judged with the binomial error of the exact value.
    """
    checks = []
    for n in n_grid:
        first = None
        if N > 0:
            first = sphere_first_coordinate(n, N, RngStream(seed, (int(n),)))
        for t in t_grid:
            exact = cap_measure_exact(n, t)
            details = {}
            if first is not None:
                mc = float(np.mean(first > t))
                se = _binomial_se(exact, N)
                details = {"mc": mc, "mc_stderr": se, "mc_agrees": abs(mc - exact) <= 3.0 * se}
            checks.append(BoundCheck("cap", {"n": int(n), "t": float(t), "C3": C3},
                                     exact, cap_bound(n, t, C3), 0.0, details))
    return checks


# -- Lipschitz concentration ----------------------------------------------------

def lipschitz_concentration_check(f: Callable[[np.ndarray], np.ndarray], b: float, n: int, t_grid,
                                  N: int = 100_000, seed: int = 0, C4: float = DEFAULT_C4,
                                  pairs: int = 1000) -> BoundCheck:
    """Deviation of ``f`` from its mean on S^(n-1) against ``4 exp(-C4 t^2 n)``.

    ``f`` maps an (N, n) array of unit vectors to N values.  The reported check
    is the grid point with the smallest margin; ``details['C4_fit']`` is the
    largest constant consistent with every measured point.
    """
    stream = RngStream(seed, (int(n),))
    x = sample_sphere(n, stream.substream(0), size=pairs)
    near = x + 1e-3 * sample_sphere(n, stream.substream(1), size=pairs)
    near /= np.linalg.norm(near, axis=1, keepdims=True)
    y = np.vstack([sample_sphere(n, stream.substream(2), size=pairs), near])
    x2 = np.vstack([x, x])
    gap = np.abs(f(x2) - f(y))
    if np.any(gap > b * np.linalg.norm(x2 - y, axis=1) * (1 + 1e-9) + 1e-12):
        raise InputError("f failed the Lipschitz spot check")
    vals = f(sample_sphere(n, stream.substream(3), size=N))
    dev = np.abs(vals - vals.mean())
    rows = []
    for t in t_grid:
        p = float(np.mean(dev >= b * t))
        rows.append({"t": float(t), "measure": p, "stderr": _binomial_se(p, N),
                     "bound": 4.0 * math.exp(-C4 * t * t * n)})
    worst = min(rows, key=lambda r: r["bound"] + 3 * r["stderr"] - r["measure"])
    fits = [math.log(4.0 / r["measure"]) / (r["t"] ** 2 * n) for r in rows if r["measure"] > 0]
    return BoundCheck("lipschitz", {"n": n, "b": b, "C4": C4, "N": N, "seed": seed},
                      worst["measure"], worst["bound"], worst["stderr"],
                      {"grid": rows, "C4_fit": min(fits) if fits else math.inf})


# -- bad sets of the main construction ------------------------------------------

@dataclass
class BadSetReport:
    o1: BoundCheck
    o2: BoundCheck
    small_l2_radius: BoundCheck
    o2_members: int
    implication_violations: int

    def to_json(self) -> dict:
        return {"o1": self.o1.to_json(), "o2": self.o2.to_json(),
                "small_l2_radius": self.small_l2_radius.to_json(),
                "o2_members": self.o2_members, "implication_violations": self.implication_violations}


def bad_set_measures(n: int, epsilon: float, C0: float | None = None, N: int = 100_000,
                     seed: int = 0, block: int = 4096) -> BadSetReport:
    """Sphere measures of the three exceptional direction sets, on S^(n-2).

    * ``O1``: ``rho_Q(theta, R0) <= rho_L(R0)`` with ``R0 = n - (C0/2) sqrt(n log n)``; bound 1/2.
    * ``O2``: ``rho_Q(theta, eps n) <= rho_L2(theta)``; bound 1/4.
    * ``rho_L2(theta) <= 5 sqrt(eps n)``; bound 1/4.

    Every sampled member of ``O2`` is also checked for
    ``rho_Q(theta, eps n) <= 4 sqrt(eps n)``.
    """
    if not (10.0 / n < epsilon < 1.0):
        raise InputError("epsilon must satisfy 10/n < epsilon < 1")
    C0 = default_C0() if C0 is None else C0
    R0 = n - 0.5 * C0 * math.sqrt(n * math.log(n))
    t_eps = epsilon * n
    cut = 5.0 * math.sqrt(epsilon * n)
    implied = 4.0 * math.sqrt(epsilon * n)
    root = RngStream(seed, (int(n), 1))
    c1 = c2 = c3 = viol = 0
    for k, start in enumerate(range(0, N, block)):
        theta = sample_sphere(n - 1, root.substream(k), size=min(block, N - start))
        m = q_slope(theta, n)
        rq_r0 = m * (n - R0)
        rq_eps = m * (n - t_eps)
        rl2 = 1.0 / a_prime_norm(theta, epsilon)
        in_o2 = rq_eps <= rl2
        c1 += int(np.sum(rq_r0 <= rho_L(R0, n)))
        c2 += int(np.sum(in_o2))
        c3 += int(np.sum(rl2 <= cut))
        viol += int(np.sum(in_o2 & (rq_eps > implied)))
    p1, p2, p3 = c1 / N, c2 / N, c3 / N
    params = {"n": n, "epsilon": epsilon, "N": N, "seed": seed}
    return BadSetReport(
        BoundCheck("O1", {**params, "C0": C0, "R0": R0}, p1, 0.5, _binomial_se(p1, N)),
        BoundCheck("O2", params, p2, 0.25, _binomial_se(p2, N)),
        BoundCheck("small_l2_radius", {**params, "threshold": cut}, p3, 0.25, _binomial_se(p3, N)),
        c2, viol,
    )


# -- log-concave measures -----------------------------------------------------------

def borell_bound(delta: float, t: float) -> float:
    return delta * ((1.0 - delta) / delta) ** ((t + 1.0) / 2.0)


def _radii(batch: SampleBatch, center) -> np.ndarray:
    pts = batch.points if center is None else batch.points - np.asarray(center)
    return np.linalg.norm(pts, axis=1)


def borell_tail_check(batch: SampleBatch, t_grid, delta: float = 2.0 / 3.0, R: float | None = None,
                      center=None) -> BoundCheck:
    """Tails ``P(|X| > t R)`` against Borell's bound with ``U`` the ball of radius ``R``.

    ``R`` defaults to the empirical ``delta``-quantile of ``|X|``; the bound uses
    the empirical ``P(|X| <= R)``, which must exceed 1/2.
    """
    r = _radii(batch, center)
    if R is None:
        R = float(np.quantile(r, delta))
    delta_hat = float(np.mean(r <= R))
    if delta_hat <= 0.5:
        raise InputError(f"P(|X| <= R) = {delta_hat} must exceed 1/2")
    rows = []
    for t in t_grid:
        tail, se = batch.mean_stderr(r > t * R)
        rows.append({"t": float(t), "tail": tail, "stderr": se, "bound": borell_bound(delta_hat, t)})
    worst = min(rows, key=lambda x: x["bound"] + 3 * x["stderr"] - x["tail"])
    return BoundCheck("borell", {"R": R, "delta": delta_hat, "n_points": len(batch)},
                      worst["tail"], worst["bound"], worst["stderr"], {"grid": rows})


def small_ball_check(batch: SampleBatch, t_grid, b: float = 2.0 / 3.0, center=None,
                     Cb: float | None = None) -> BoundCheck:
    """``mu(tU) / (t mu(U))`` for ``U`` the ball with ``mu(U) = b``; ``Cb`` defaults to the fitted max."""
    if not 0.0 < b < 1.0:
        raise InputError("b must lie in (0, 1)")
    r = _radii(batch, center)
    R = float(np.quantile(r, b))
    mu_U = float(np.mean(r <= R))
    rows = []
    for t in t_grid:
        if t == 0:
            rows.append({"t": 0.0, "mu": float(np.mean(r <= 0.0)), "ratio": None, "stderr": 0.0})
            continue
        mu, se = batch.mean_stderr(r <= t * R)
        rows.append({"t": float(t), "mu": mu, "ratio": mu / (t * mu_U), "stderr": se / (t * mu_U)})
    ratios = [x for x in rows if x["ratio"] is not None]
    worst = max(ratios, key=lambda x: x["ratio"])
    fitted = worst["ratio"]
    rhs = fitted if Cb is None else Cb
    return BoundCheck("small_ball", {"b": b, "R": R, "mu_U": mu_U, "Cb": Cb},
                      worst["ratio"], rhs, worst["stderr"], {"grid": rows, "Cb_fit": fitted})


@dataclass
class SandwichReport:
    seminorms: list[BoundCheck]
    median_l2: BoundCheck
    centroid_l2: BoundCheck
    C5: float
    C9: float
    C10: float
    C11: float
    C11_min: float

    def to_json(self) -> dict:
        return {"seminorms": [c.to_json() for c in self.seminorms], "median_l2": self.median_l2.to_json(),
                "centroid_l2": self.centroid_l2.to_json(),
                "constants": {"C5": self.C5, "C9": self.C9, "C10": self.C10, "C11": self.C11,
                              "C11_min": self.C11_min}}


def lp_norm(values: np.ndarray, p: float) -> float:
    return float(np.mean(np.abs(values) ** p) ** (1.0 / p))


def moment_sandwich_checks(batch: SampleBatch, directions=None, p: float = 1.0, q: float = 2.0,
                           certificate: JohnCertificate | None = None, center=None) -> SandwichReport:
    """Moment comparisons for a batch drawn from a body in John position.

    * seminorms ``|<x, u>|`` over ``directions``: ``||f||_p <= ||f||_q`` (hard),
      ratio ``||f||_q / ||f||_p`` gives the fitted ``C5 = ratio * p / q``;
    * ``M / sqrt(2) <= (E|X|^2)^(1/2)`` (hard), ``C9 = L2 / M``;
    * ``|E X| <= (E|X|^2)^(1/2)`` (hard).  With a contact ``certificate``,
      ``E|X|^2 = sum c_i E<X, u_i>^2 <= kappa^2 sum c_i (E|<X, u_i>|)^2 <= 3 kappa^2 (|x|^2 + 2n)``
      where ``kappa = max_i ||<X, u_i>||_2 / ||<X, u_i>||_1``; this gives
      ``C10 = 3 kappa^2`` and ``C11 = 6 kappa^2``.
    """
    if q <= p or p < 1:
        raise InputError("need q > p >= 1")
    X = batch.points if center is None else batch.points - np.asarray(center)
    n = X.shape[1]
    if directions is None:
        directions = certificate.points if certificate is not None else np.eye(n)
    directions = np.atleast_2d(directions)
    seminorms = []
    ratios = []
    for u in directions:
        f = X @ u
        lp, lq = lp_norm(f, p), lp_norm(f, q)
        ratios.append(lq / lp)
        seminorms.append(BoundCheck("lp_monotone", {"u": u, "p": p, "q": q}, lp, lq,
                                    0.0, {"ratio": lq / lp}))
    C5 = max(ratios) * p / q
    norms = np.linalg.norm(X, axis=1)
    M = float(np.median(norms))
    L2 = math.sqrt(float(np.mean(norms ** 2)))
    mean_norm = float(np.linalg.norm(X.mean(axis=0)))
    median_check = BoundCheck("median_l2", {"n": n}, M / math.sqrt(2.0), L2, 0.0, {"median": M, "C9_fit": L2 / M})
    centroid_check = BoundCheck("centroid_l2", {"n": n}, mean_norm, L2, 0.0)
    second = L2 ** 2
    if certificate is not None:
        rm, rv = certificate_residuals(certificate)
        F = X @ certificate.points.T
        kappa = float(np.max(np.sqrt(np.mean(F ** 2, axis=0)) / np.mean(np.abs(F), axis=0)))
        C10, C11 = 3.0 * kappa ** 2, 6.0 * kappa ** 2
        centroid_check.details.update({"certificate_residuals": [rm, rv], "kappa": kappa})
    else:
        C10, C11 = 1.0, max(0.0, second - mean_norm ** 2) / n
    C11_min = max(0.0, second - C10 * mean_norm ** 2) / n
    centroid_check.details.update({"second_moment": second, "bound": C10 * mean_norm ** 2 + C11 * n})
    return SandwichReport(seminorms, median_check, centroid_check, C5, L2 / M, C10, C11, C11_min)


# -- Gaussian comparison for the A' norm ----------------------------------------

@dataclass
class GaussianNormReport:
    mean_norm: float
    mean_max_abs: float
    mean_max: float
    sphere_mean_norm: float
    pointwise_holds: bool
    c_prime: float
    c_double_prime: float
    stderr: dict

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def gaussian_norm_bounds(n: int, epsilon: float, N: int = 20_000, seed: int = 0,
                         block: int = 2048) -> GaussianNormReport:
    """Gaussian and spherical means of the A' norm on R^(n-1).

    ``c_prime = 2 E max|g_i| / sqrt(log n)`` and
    ``c_double_prime = sqrt(n) E_sphere ||theta|| / E ||g||``.
    """
    d = n - 1
    root = RngStream(seed, (int(n), 2))
    norms, maxabs, maxes = [], [], []
    pointwise = True
    for k, start in enumerate(range(0, N, block)):
        g = root.substream(k).generator().standard_normal((min(block, N - start), d))
        a = a_prime_norm(g, epsilon)
        m = np.max(np.abs(g), axis=1)
        pointwise &= bool(np.all(a <= 2.0 * m))
        norms.append(a)
        maxabs.append(m)
        maxes.append(np.max(g, axis=1))
    norms, maxabs, maxes = (np.concatenate(v) for v in (norms, maxabs, maxes))
    sphere = np.concatenate([a_prime_norm(sample_sphere(d, root.substream(10_000 + k), size=min(block, N - s)), epsilon)
                             for k, s in enumerate(range(0, N, block))])
    se = {name: float(v.std(ddof=1) / math.sqrt(v.size))
          for name, v in (("mean_norm", norms), ("mean_max_abs", maxabs), ("mean_max", maxes),
                          ("sphere_mean_norm", sphere))}
    Eg, Em, Es = float(norms.mean()), float(maxabs.mean()), float(sphere.mean())
    return GaussianNormReport(Eg, Em, float(maxes.mean()), Es, pointwise,
                              2.0 * Em / math.sqrt(math.log(n)), math.sqrt(n) * Es / Eg, se)


def gaussian_max_ratio(n: int, N: int = 2000, seed: int = 0, block: int = 256) -> tuple[float, float]:
    """``E max_i g_i / sqrt(2 log n)`` over ``n`` standard Gaussians, with its standard error."""
    root = RngStream(seed, (int(n), 3))
    maxes = np.concatenate([root.substream(k).generator().standard_normal((min(block, N - s), n)).max(axis=1)
                            for k, s in enumerate(range(0, N, block))])
    scale = math.sqrt(2.0 * math.log(n))
    return float(maxes.mean() / scale), float(maxes.std(ddof=1) / math.sqrt(N) / scale)
