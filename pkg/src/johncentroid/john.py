"""Maximal-volume inscribed ellipsoid and John-position certificates.

The inscribed ellipsoid ``{c + E u : |u| <= 1}`` of ``{A x <= b}`` maximizes
``log det E`` subject to ``|E a_i| + <a_i, c> <= b_i`` for every row.  Each row
is a second-order cone constraint; we follow the central path of

    t * (-log det E) - sum_i log((b_i - <a_i, c>)^2 - |E a_i|^2)

with damped Newton steps.  The barrier has parameter ``2m``, so ``2m / t``
bounds the gap in ``log det``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import nnls

from .errors import CertificationError, ConvergenceError, InputError
from .geom import Ellipsoid, HPolytope, JohnCertificate, chebyshev_ball

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-10


def _duplication(n: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Matrix D with vec(E) = D @ vech(E) for symmetric E (row-major vec)."""
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    D = np.zeros((n * n, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        D[i * n + j, k] = 1.0
        D[j * n + i, k] = 1.0
    return D, pairs


class _Barrier:
    def __init__(self, A: np.ndarray, b: np.ndarray):
        self.A = A
        self.b = b
        m, n = A.shape
        self.m, self.n = m, n
        self.D, self.pairs = _duplication(n)
        self.pE = self.D.shape[1]
        # w_i = E a_i = (I kron a_i^T) vec(E) = Gw[i] @ vech(E)
        eye = np.eye(n)
        self.Gw = np.einsum("pq,ir->ipqr", eye, A).reshape(m, n, n * n) @ self.D

    def unpack(self, z):
        n = self.n
        c = z[:n]
        E = (self.D @ z[n:]).reshape(n, n)
        return c, E

    def pack(self, c, E):
        vech = np.array([E[i, j] for i, j in self.pairs])
        return np.concatenate([c, vech])

    def parts(self, z):
        c, E = self.unpack(z)
        s = self.b - self.A @ c
        W = self.A @ E  # row i is (E a_i)^T since E is symmetric
        gamma = s * s - np.einsum("ij,ij->i", W, W)
        return c, E, s, W, gamma

    def feasible(self, z) -> bool:
        c, E, s, W, gamma = self.parts(z)
        if np.any(s <= 0.0) or np.any(gamma <= 0.0):
            return False
        try:
            np.linalg.cholesky(E)
        except np.linalg.LinAlgError:
            return False
        return True

    def value(self, z, t) -> float:
        c, E, s, W, gamma = self.parts(z)
        sign, logdet = np.linalg.slogdet(E)
        return float(-t * logdet - np.sum(np.log(gamma)))

    def derivatives(self, z, t):
        n, m = self.n, self.m
        c, E, s, W, gamma = self.parts(z)
        F = np.linalg.inv(E)
        # -t log det E
        g_E = -t * (self.D.T @ F.reshape(-1))
        H_E = t * (self.D.T @ np.kron(F, F) @ self.D)
        # barrier: -log(s^2 - |w|^2); ds/dc = -a, dw/dvech = Gw
        Jy_s = s  # J y = (s, -w)
        Jy_w = -W
        # gradient of -log(gamma) w.r.t. y is -2 J y / gamma
        coef = -2.0 / gamma
        g_c = -(self.A.T @ (coef * Jy_s))
        g_v = np.einsum("i,ik,ikp->p", coef, Jy_w, self.Gw)
        grad = np.concatenate([g_c, g_E + g_v])
        # Hessian: G^T (-2J/gamma + 4 Jy Jy^T / gamma^2) G
        p = n + self.pE
        H = np.zeros((p, p))
        inv_g = 1.0 / gamma
        H[:n, :n] = -2.0 * (self.A.T * inv_g) @ self.A
        H[n:, n:] = 2.0 * np.einsum("i,ikp,ikq->pq", inv_g, self.Gw, self.Gw)
        # rank-one parts, gradient direction in z of (J y)^T y-map
        u = np.zeros((m, p))
        u[:, :n] = -self.A * Jy_s[:, None]
        u[:, n:] = np.einsum("ik,ikp->ip", Jy_w, self.Gw)
        H += 4.0 * (u * (inv_g ** 2)[:, None]).T @ u
        H[n:, n:] += H_E
        return grad, H


@dataclass
class MVIEResult:
    ellipsoid: Ellipsoid
    gap: float
    iterations: int


def solve_mvie(poly: HPolytope, tol: float = 1e-8, max_iter: int = 500) -> Ellipsoid:
    """Maximal-volume ellipsoid inscribed in ``poly``."""
    return solve_mvie_detailed(poly, tol=tol, max_iter=max_iter).ellipsoid


def solve_mvie_detailed(poly: HPolytope, tol: float = 1e-8, max_iter: int = 500) -> MVIEResult:
    if tol <= 0:
        raise InputError("tol must be positive")
    A, b = poly.A, poly.b
    bar = _Barrier(A, b)
    center, radius = chebyshev_ball(A, b)
    if radius <= 1e-12:
        from .errors import ConstructionError

        raise ConstructionError("polytope has empty interior")
    z = bar.pack(center, 0.5 * radius * np.eye(poly.dim))
    nu = 2.0 * bar.m
    t = 1.0
    mu = 8.0
    iters = 0
    while True:
        # centering
        while True:
            if iters >= max_iter:
                c, E = bar.unpack(z)
                raise ConvergenceError(
                    f"MVIE iteration cap {max_iter} hit at gap {nu / t:.3e}",
                    best=Ellipsoid(c, 0.5 * (E + E.T)),
                )
            iters += 1
            grad, H = bar.derivatives(z, t)
            try:
                fac = cho_factor(H)
                step = -cho_solve(fac, grad)
            except LinAlgError:
                step = -np.linalg.lstsq(H, grad, rcond=None)[0]
            dec2 = float(-grad @ step)
            if dec2 / 2.0 <= 1e-10:
                break
            f0 = bar.value(z, t)
            alpha = 1.0
            while alpha > 1e-8:
                trial = z + alpha * step
                if bar.feasible(trial) and bar.value(trial, t) <= f0 - 0.25 * alpha * dec2:
                    break
                alpha *= 0.5
            else:
                break
            z = trial
        if nu / t <= tol:
            break
        t *= mu
    c, E = bar.unpack(z)
    log.debug("MVIE converged in %d Newton steps, gap %.2e", iters, nu / t)
    return MVIEResult(Ellipsoid(c, 0.5 * (E + E.T)), nu / t, iters)


def _identity_system(U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Linear system in the weights for sum c u u^T = I and sum c u = 0."""
    n = U.shape[1]
    iu = np.triu_indices(n)
    outer = np.einsum("mi,mj->mij", U, U)[:, iu[0], iu[1]]
    G = np.vstack([outer.T, U.T])
    h = np.concatenate([np.eye(n)[iu], np.zeros(n)])
    return G, h


def fit_weights(U: np.ndarray) -> np.ndarray:
    """Nonnegative weights for John's identities over directions ``U``.

    NNLS picks a support; least squares on that support then returns the
    minimum-norm solution when it stays nonnegative.
    """
    G, h = _identity_system(U)
    w, _ = nnls(G, h, maxiter=50 * G.shape[1])
    support = w > WEIGHT_FLOOR
    if support.any():
        refined = np.zeros_like(w)
        refined[support] = np.linalg.lstsq(G[:, support], h, rcond=None)[0]
        if np.all(refined[support] > 0.0) and np.linalg.norm(G @ refined - h) <= np.linalg.norm(G @ w - h) + 1e-14:
            w = refined
    return w


def extract_contacts(poly: HPolytope, ell: Ellipsoid, slack_tol: float = 1e-6) -> JohnCertificate:
    """Contact directions and weights after mapping ``ell`` to the unit ball."""
    if not ell.contained_in(poly, tol=slack_tol):
        raise InputError("ellipsoid is not contained in the polytope")
    s = poly.b - poly.A @ ell.center
    W = poly.A @ ell.shape
    scaled = W / s[:, None]
    norms = np.linalg.norm(scaled, axis=1)
    touching = np.flatnonzero(1.0 - norms <= slack_tol)
    if touching.size < poly.dim:
        raise CertificationError(f"only {touching.size} touching rows, need at least {poly.dim}")
    U = scaled[touching] / norms[touching, None]
    w = fit_weights(U)
    keep = w > WEIGHT_FLOOR
    if keep.sum() < poly.dim:
        raise CertificationError("weight fit left fewer than n contact points")
    cert = JohnCertificate(U[keep], w[keep], trace_tol=1e-3)
    return cert


def contact_rows(poly: HPolytope, ell: Ellipsoid, slack_tol: float = 1e-6) -> np.ndarray:
    """Indices of the rows touching ``ell`` (same rule as :func:`extract_contacts`)."""
    s = poly.b - poly.A @ ell.center
    norms = np.linalg.norm(poly.A @ ell.shape, axis=1) / s
    return np.flatnonzero(1.0 - norms <= slack_tol)


def certificate_residuals(cert: JohnCertificate) -> tuple[float, float]:
    U, c = cert.points, cert.weights
    M = (U.T * c) @ U - np.eye(cert.dim)
    return float(np.linalg.norm(M)), float(np.linalg.norm(c @ U))


def lift_decomposition(cert: JohnCertificate, input_tol: float = 1e-10) -> JohnCertificate:
    """Lift a decomposition of the identity in R^(n-1) to one in R^n.

    Every ``u_i`` becomes ``(sqrt(1 - 1/n^2) u_i, 1/n)`` with weight
    ``c_i n^2 / (n^2 - 1)``, and ``(0, ..., 0, -1)`` joins with weight ``n/(n+1)``.
    """
    rm, rv = certificate_residuals(cert)
    if rm > input_tol or rv > input_tol:
        raise InputError(f"input certificate residuals ({rm:.2e}, {rv:.2e}) exceed {input_tol}")
    n = cert.dim + 1
    n2 = float(n * n)
    m = len(cert)
    V = np.empty((m + 1, n))
    V[:m, :-1] = np.sqrt(1.0 - 1.0 / n2) * cert.points
    V[:m, -1] = 1.0 / n
    V[m] = 0.0
    V[m, -1] = -1.0
    # renormalize against rounding in the square root
    V /= np.linalg.norm(V, axis=1)[:, None]
    w = np.empty(m + 1)
    w[:m] = cert.weights * n2 / (n2 - 1.0)
    w[m] = n / (n + 1.0)
    return JohnCertificate(V, w, trace_tol=cert.trace_tol)


@dataclass
class JohnReport:
    ellipsoid: Ellipsoid
    contacts: JohnCertificate | None
    residual_matrix: float
    residual_vector: float
    is_john_position: bool

    def to_json(self) -> dict:
        contacts = []
        if self.contacts is not None:
            contacts = [{"u": u.tolist(), "c": float(c)} for u, c in zip(self.contacts.points, self.contacts.weights)]
        return {
            "center": self.ellipsoid.center.tolist(),
            "shape": self.ellipsoid.shape.tolist(),
            "contacts": contacts,
            "residuals": {"matrix": self.residual_matrix, "vector": self.residual_vector},
            "is_john_position": self.is_john_position,
        }


def john_report(poly: HPolytope, tol: float = 1e-8, max_iter: int = 500,
                slack_tol: float = 1e-6, position_tol: float = 1e-4) -> JohnReport:
    ell = solve_mvie(poly, tol=tol, max_iter=max_iter)
    try:
        cert = extract_contacts(poly, ell, slack_tol=slack_tol)
    except CertificationError as exc:
        log.info("no John certificate: %s", exc)
        return JohnReport(ell, None, float("inf"), float("inf"), False)
    rm, rv = certificate_residuals(cert)
    unit_ball = (np.linalg.norm(ell.center) <= position_tol
                 and np.linalg.norm(ell.shape - np.eye(poly.dim)) <= position_tol)
    ok = rm <= position_tol and rv <= position_tol and unit_ball
    return JohnReport(ell, cert, rm, rv, bool(ok))
