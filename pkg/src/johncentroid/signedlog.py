"""Signed log-domain scalars.

Integrands like ``rho**(n-1)`` at n ~ 500 overflow doubles, so moments are
carried as ``(sign, log|x|)`` pairs.  Sums keep positive and negative parts
apart and combine them once, which makes the sign of the result exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

# Relative cancellation below this snaps to an exact zero.
CANCEL_RTOL = 1e-14


@dataclass(frozen=True)
class SignedLog:
    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if math.isnan(self.logmag):
            raise ValueError("logmag is NaN")
        if (self.sign == 0) != (self.logmag == -math.inf):
            raise ValueError("sign == 0 iff logmag == -inf")

    @classmethod
    def zero(cls) -> SignedLog:
        return cls(0, -math.inf)

    @classmethod
    def from_float(cls, x: float) -> SignedLog:
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, logmag: float, sign: int = 1) -> SignedLog:
        if logmag == -math.inf or sign == 0:
            return cls.zero()
        return cls(sign, float(logmag))

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    def __neg__(self) -> SignedLog:
        return SignedLog(-self.sign, self.logmag)

    def __add__(self, other: SignedLog) -> SignedLog:
        return signedlog_sum([self, other])

    def __sub__(self, other: SignedLog) -> SignedLog:
        return signedlog_sum([self, -other])

    def __mul__(self, other: SignedLog | float) -> SignedLog:
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(float(other))
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other: SignedLog | float) -> SignedLog:
        if not isinstance(other, SignedLog):
            other = SignedLog.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero SignedLog")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.logmag - other.logmag)

    def ratio(self, other: SignedLog) -> float:
        """``self / other`` as an ordinary float (for quantities of moderate size)."""
        return float(self / other)

    def is_zero(self) -> bool:
        return self.sign == 0


def _logsumexp(logs: np.ndarray) -> float:
    if logs.size == 0:
        return -math.inf
    top = np.max(logs)
    if top == -np.inf:
        return -math.inf
    return float(top + np.log(np.sum(np.exp(logs - top))))


def _combine(lpos: float, lneg: float) -> tuple[int, float]:
    """Signed difference exp(lpos) - exp(lneg) in log form."""
    if lneg == -math.inf:
        return (0, -math.inf) if lpos == -math.inf else (1, lpos)
    if lpos == -math.inf:
        return -1, lneg
    if lpos >= lneg:
        sign, big, small = 1, lpos, lneg
    else:
        sign, big, small = -1, lneg, lpos
    ratio = math.exp(small - big)
    if 1.0 - ratio <= CANCEL_RTOL:
        return 0, -math.inf
    return sign, big + math.log1p(-ratio)


def signedlog_sum(values: Iterable[SignedLog]) -> SignedLog:
    """Sum with exact sign: positive and negative parts are accumulated apart."""
    values = list(values)
    pos = np.array([v.logmag for v in values if v.sign > 0], dtype=float)
    neg = np.array([v.logmag for v in values if v.sign < 0], dtype=float)
    sign, logmag = _combine(_logsumexp(pos), _logsumexp(neg))
    return SignedLog.from_log(logmag, sign)


def signed_logsumexp(signs, logs) -> tuple[int, float]:
    """Array version of :func:`signedlog_sum` over flat ``signs``/``logs``."""
    signs = np.asarray(signs)
    logs = np.asarray(logs, dtype=float)
    pos = logs[signs > 0]
    neg = logs[signs < 0]
    return _combine(_logsumexp(pos), _logsumexp(neg))


def signed_add_arrays(s1, l1, s2, l2) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise signed log-domain addition with cancellation snapping."""
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    s1, l1, s2, l2 = np.broadcast_arrays(s1, l1, s2, l2)
    z1 = (s1 == 0) | (l1 == -np.inf)
    z2 = (s2 == 0) | (l2 == -np.inf)
    big = np.where(l1 >= l2, l1, l2)
    small = np.where(l1 >= l2, l2, l1)
    sbig = np.where(l1 >= l2, s1, s2)
    ssmall = np.where(l1 >= l2, s2, s1)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        ratio = np.exp(small - big)
        ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        same = sbig == ssmall
        mag = np.where(same, big + np.log1p(ratio), big + np.log1p(-np.minimum(ratio, 1.0)))
    sign = sbig.copy()
    cancel = (~same) & (1.0 - ratio <= CANCEL_RTOL)
    sign[cancel] = 0.0
    mag = np.where(cancel, -np.inf, mag)
    # one operand zero: result is the other operand
    sign = np.where(z1, s2, np.where(z2, s1, sign))
    mag = np.where(z1, l2, np.where(z2, l1, mag))
    both = z1 & z2
    sign = np.where(both, 0.0, sign)
    mag = np.where(both, -np.inf, mag)
    sign = np.where(mag == -np.inf, 0.0, sign)
    return sign.astype(np.int8), mag
