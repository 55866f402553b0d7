"""Axis moments of axial bodies.

For a body with slice radius ``rho(theta, t)`` the volume and first axis
moment are, up to the common factor ``kappa_(n-1)``, the sphere averages of

    M0(theta) = int rho^(n-1) dt,      M1(theta) = int rho^(n-1) t dt.

Radii are affine in ``t`` on each segment, so both inner integrals are exact.
They are evaluated in log form because ``rho^(n-1)`` overflows for n of a few
hundred.  The outer average over ``theta`` is Monte Carlo.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constructions import AxialBody, ProfileBody, make_body
from .errors import DomainError, GeometryError, InputError
from .geom import SliceProfile
from .sampling import RngStream, sample_sphere
from .signedlog import SignedLog, signed_add_arrays, signedlog_sum

BLOCK = 4096
_SERIES_TERMS = 40


class DegenerateBodyError(GeometryError):
    """All sampled slices have zero volume."""


def _unit_integrals(q: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``I0 = int_0^1 (1 - q y)^(n-1) dy`` and ``J = int_0^1 y (1 - q y)^(n-1) dy`` for q in [0, 1]."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log1p(-q)  # -inf at q == 1
        rn = np.exp(n * log_r)
        I0 = np.where(q > 0, -np.expm1(n * log_r) / (n * q), 1.0)
        J_closed = (I0 - rn) / (q * (n + 1))
    # series in q where the closed form cancels
    small = n * q < 0.5
    J = J_closed
    if np.any(small):
        qs = q[small]
        term = np.ones_like(qs)
        acc = term / 2.0
        for k in range(_SERIES_TERMS):
            term = term * (-qs) * (n - 1 - k) / (k + 1)
            acc = acc + term / (k + 3)
        J = np.array(J_closed, copy=True)
        J[small] = acc
    return I0, J


def segment_log_moments(a, s, t_lo, t_hi, n: int):
    """Vectorized ``int rho^(n-1) dt`` and ``int rho^(n-1) t dt`` over segments.

    Returns ``(log_m0, sign_m1, log_m1)``; zero-length or zero-radius segments
    give ``log_m0 = -inf`` and ``sign_m1 = 0``.
    """
    a, s, t_lo, t_hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, s, t_lo, t_hi)))
    u_lo = a + s * t_lo
    u_hi = a + s * t_hi
    scale = np.maximum(np.abs(a), np.abs(s) * np.maximum(np.abs(t_lo), np.abs(t_hi)))
    if np.any(np.minimum(u_lo, u_hi) < -1e-12 * np.maximum(scale, 1.0)):
        raise DomainError("negative radius on a segment")
    u_lo = np.maximum(u_lo, 0.0)
    u_hi = np.maximum(u_hi, 0.0)
    h = t_hi - t_lo
    u_max = np.maximum(u_lo, u_hi)
    live = (h > 0) & (u_max > 0)
    safe_max = np.where(live, u_max, 1.0)
    q = np.where(live, np.abs(u_hi - u_lo) / safe_max, 0.0)
    q = np.clip(q, 0.0, 1.0)
    I0, J = _unit_integrals(q, n)
    with np.errstate(divide="ignore"):
        base = np.log(np.where(live, h, 1.0)) + (n - 1) * np.log(safe_max)
        log_m0 = np.where(live, base + np.log(I0), -np.inf)
        increasing = u_hi >= u_lo
        bracket = np.where(increasing, t_hi * I0 - h * J, t_lo * I0 + h * J)
        sign_m1 = np.where(live, np.sign(bracket), 0.0)
        log_m1 = np.where(live & (bracket != 0), base + np.log(np.abs(bracket)), -np.inf)
    return log_m0, sign_m1.astype(np.int8), log_m1


def segment_moment(a: float, s: float, t_lo: float, t_hi: float, n: int, k: int) -> SignedLog:
    """``int_{t_lo}^{t_hi} (a + s t)^(n-1) t^k dt`` for ``k`` in {0, 1}."""
    if k not in (0, 1):
        raise InputError("k must be 0 or 1")
    if not t_lo <= t_hi:
        raise InputError("need t_lo <= t_hi")
    l0, s1, l1 = segment_log_moments(a, s, t_lo, t_hi, n)
    if k == 0:
        return SignedLog.from_log(float(l0))
    return SignedLog.from_log(float(l1), int(s1))


def profile_moments(profile: SliceProfile, n: int) -> tuple[SignedLog, SignedLog]:
    """``(M0, M1)`` of one profile, summed over its segments."""
    m0, m1 = [], []
    for seg in profile.segments:
        m0.append(segment_moment(seg.intercept, seg.slope, seg.t_lo, seg.t_hi, n, 0))
        m1.append(segment_moment(seg.intercept, seg.slope, seg.t_lo, seg.t_hi, n, 1))
    return signedlog_sum(m0), signedlog_sum(m1)


def _table_moments(table, n: int):
    """Per-row ``(log M0, sign M1, log M1)`` from a segment table of shape (N, S)."""
    a, s, lo, hi = (np.atleast_2d(np.asarray(x, dtype=float)) for x in table)
    l0, s1, l1 = segment_log_moments(a, s, lo, hi, n)
    with np.errstate(invalid="ignore"):
        top = np.max(l0, axis=1, keepdims=True)
        top_f = np.where(np.isfinite(top), top, 0.0)
        log_m0 = np.where(np.isfinite(top[:, 0]),
                          top_f[:, 0] + np.log(np.sum(np.exp(l0 - top_f), axis=1)), -np.inf)
    sign = s1[:, 0]
    mag = l1[:, 0]
    for k in range(1, l1.shape[1]):
        sign, mag = signed_add_arrays(sign, mag, s1[:, k], l1[:, k])
    return log_m0, sign, mag


def _split_table(table, R: float):
    a, s, lo, hi = (np.atleast_2d(np.asarray(x, dtype=float)) for x in table)
    hi_b = np.maximum(np.minimum(hi, R), lo)
    lo_a = np.minimum(np.maximum(lo, R), hi)
    return (a, s, lo, hi_b), (a, s, lo_a, hi)


@dataclass(frozen=True)
class MomentEstimate:
    """A Monte Carlo estimate.

    ``value`` and ``stderr`` are plain floats in units of ``exp(log_scale)``;
    heights use ``log_scale = 0``.  Sign integrals span hundreds of orders of
    magnitude, so they carry the scale separately.
    """

    value: float
    stderr: float
    n_samples: int
    seed: int
    log_scale: float = 0.0

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be nonnegative")

    @property
    def signed_value(self) -> SignedLog:
        if self.value == 0.0:
            return SignedLog.zero()
        return SignedLog(1 if self.value > 0 else -1, math.log(abs(self.value)) + self.log_scale)

    @property
    def verdict(self) -> str:
        """``positive``/``negative`` beyond 3 stderr, ``zero`` if exactly 0, else ``indeterminate``."""
        if self.value == 0.0 and self.stderr == 0.0:
            return "zero"
        if abs(self.value) > 3.0 * self.stderr:
            return "positive" if self.value > 0 else "negative"
        return "indeterminate"

    @property
    def sign(self) -> int | None:
        return {"positive": 1, "negative": -1, "zero": 0}.get(self.verdict)


def as_body(generator, n: int) -> AxialBody:
    if isinstance(generator, AxialBody):
        return generator
    if callable(generator):
        return ProfileBody(n, generator)
    raise InputError("generator must be an AxialBody or a callable theta -> SliceProfile")


def _axis_theta(n: int) -> np.ndarray:
    theta = np.zeros((1, n - 1))
    theta[0, 0] = 1.0
    return theta


def _per_theta(body: AxialBody, n: int, N: int, seed: int, fn, threads: int = 1):
    """Apply ``fn(segment_table)`` to blocks of sphere directions, in fixed block order.

    Block ``b`` always draws from stream ``(seed, n, b)``, so results do not
    depend on ``threads``.
    """
    root = RngStream(seed, (n,))
    sizes = [min(BLOCK, N - start) for start in range(0, N, BLOCK)]

    def run(block):
        thetas = sample_sphere(n - 1, root.substream(block), size=sizes[block])
        return fn(body.segment_table(thetas))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return [np.concatenate(cols) for cols in zip(*parts)]


def _ratio_estimate(log_m0, s1, log_m1, N: int, seed: int) -> MomentEstimate:
    finite = np.isfinite(log_m0)
    if not finite.any():
        raise DegenerateBodyError("all sampled slices have zero mass")
    L = np.max(log_m0[finite])
    w0 = np.exp(log_m0 - L)
    w1 = s1 * np.exp(log_m1 - L)
    total0 = float(np.sum(w0))
    t_hat = float(np.sum(w1)) / total0
    resid = w1 - t_hat * w0
    k = resid.size
    se = math.sqrt(float(np.sum(resid * resid)) * k / max(k - 1, 1)) / total0
    return MomentEstimate(t_hat, se, N, seed)


def centroid_height(generator, n: int, N: int = 100_000, seed: int = 0, threads: int = 1) -> MomentEstimate:
    """Axis coordinate of the centroid, ``E[M1] / E[M0]`` over sphere directions.

    Isotropic bodies are evaluated exactly (one profile, zero stderr).
    """
    body = as_body(generator, n)
    if body.isotropic:
        m0, m1 = profile_moments(body.profile(_axis_theta(n)), n)
        if m0.is_zero():
            raise DegenerateBodyError("profile has zero mass")
        return MomentEstimate(m1.ratio(m0), 0.0, N, seed)
    if N < 1000:
        raise InputError("need at least 1000 sphere samples")
    l0, s1, l1 = _per_theta(body, n, N, seed, lambda tab: _table_moments(tab, n), threads)
    return _ratio_estimate(l0, s1, l1, N, seed)


def _mean_estimate(sign, logmag, N: int, seed: int) -> MomentEstimate:
    finite = np.isfinite(logmag) & (sign != 0)
    if not finite.any():
        return MomentEstimate(0.0, 0.0, N, seed)
    L = float(np.max(logmag[finite]))
    vals = np.where(finite, sign * np.exp(np.where(finite, logmag, L) - L), 0.0)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return MomentEstimate(mean, se, N, seed, log_scale=L)


def _zero_stderr(est: MomentEstimate) -> MomentEstimate:
    return MomentEstimate(est.value, 0.0, est.n_samples, est.seed, est.log_scale)


def _check_R(body: AxialBody, n: int, R: float) -> None:
    prof = body.profile(_axis_theta(n))
    if not prof.tmin <= R <= prof.tmax:
        raise InputError(f"R={R} outside the profile range [{prof.tmin}, {prof.tmax}]")


def _first_moment_about(table, n: int, R: float):
    l0, s1, l1 = _table_moments(table, n)
    if R == 0.0:
        return s1, l1
    with np.errstate(divide="ignore"):
        shifted = l0 + math.log(abs(R))
    s0 = np.where(np.isfinite(l0), -np.sign(R), 0.0)
    return signed_add_arrays(s1, l1, s0, shifted)


def sign_integral_F(generator, n: int, R: float, N: int = 100_000, seed: int = 0,
                    threads: int = 1) -> MomentEstimate:
    """Sphere average of ``int rho^(n-1) (t - R) dt``; positive implies centroid height >= R."""
    body = as_body(generator, n)
    _check_R(body, n, R)
    fn = lambda tab: _first_moment_about(tab, n, R)
    if body.isotropic:
        sign, mag = fn(body.segment_table(_axis_theta(n)))
        return _zero_stderr(_mean_estimate(sign, mag, N, seed))
    sign, mag = _per_theta(body, n, N, seed, fn, threads)
    return _mean_estimate(sign, mag, N, seed)


def _half_volume_balance(table, n: int, R: float):
    below, above = _split_table(table, R)
    lb, _, _ = _table_moments(below, n)
    la, _, _ = _table_moments(above, n)
    pos = np.where(np.isfinite(la), 1, 0)
    neg = np.where(np.isfinite(lb), -1, 0)
    return signed_add_arrays(pos, la, neg, lb)


def half_volume_sign(generator, n: int, R: float, N: int = 100_000, seed: int = 0,
                     threads: int = 1) -> MomentEstimate:
    """Sphere average of ``int rho^(n-1) sign(t - R) dt``.

    Positive means more volume lies above height ``R`` than below it, so the
    ball of radius ``R`` around the origin holds less than half the volume.
    """
    body = as_body(generator, n)
    _check_R(body, n, R)
    fn = lambda tab: _half_volume_balance(tab, n, R)
    if body.isotropic:
        sign, mag = fn(body.segment_table(_axis_theta(n)))
        return _zero_stderr(_mean_estimate(sign, mag, N, seed))
    sign, mag = _per_theta(body, n, N, seed, fn, threads)
    return _mean_estimate(sign, mag, N, seed)


SWEEP_HEADER = ("n", "samples", "seed", "t_hat", "stderr", "gap", "gap_norm")


def sweep(kind: str, n_list, N: int = 200_000, seed: int = 0, threads: int = 1,
          epsilon_c: float = 1.0) -> list[dict]:
    """Centroid heights across dimensions, with ``gap = n - t_hat`` and ``gap / sqrt(n log n)``."""
    from .constructions import epsilon_n

    rows = []
    for n in n_list:
        n = int(n)
        eps = epsilon_n(n, epsilon_c) if kind == "p" else None
        est = centroid_height(make_body(kind, n, eps), n, N, seed, threads)
        gap = n - est.value
        rows.append({
            "n": n, "samples": N, "seed": seed, "t_hat": est.value, "stderr": est.stderr,
            "gap": gap, "gap_norm": gap / math.sqrt(n * math.log(n)),
        })
    return rows


def format_float(x: float) -> str:
    return repr(float(x))


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow([row[k] if isinstance(row[k], int) else format_float(row[k]) for k in SWEEP_HEADER])
    return buf.getvalue()
