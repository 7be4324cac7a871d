"""Fisher-metric geometry of ``sH++_a x sH++_b x R++^n``.

The metric at ``theta = (A, B, tau)`` is

    <xi, eta> = (b/p) tr(A^-1 xi_A A^-1 eta_A) + (a/p) tr(B^-1 xi_B B^-1 eta_B)
                + (1/n) (xi_tau / tau)^T (eta_tau / tau)

which equals the Fisher information of one ``n``-pixel frame divided by
``n p``. Gradients below are Riemannian gradients of the per-frame *cost*
(negative log-likelihood) with respect to this metric.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .cxlinalg import expm, hermitize, invsqrtm, sqrtm, unit_det_normalize
from .exceptions import DimensionMismatch
from .model import ThetaKron, quad_forms


@dataclass(frozen=True)
class Tangent:
    xi_a: np.ndarray
    xi_b: np.ndarray
    xi_tau: np.ndarray

    def __add__(self, other):
        return Tangent(self.xi_a + other.xi_a, self.xi_b + other.xi_b, self.xi_tau + other.xi_tau)

    def __mul__(self, c):
        return Tangent(c * self.xi_a, c * self.xi_b, c * self.xi_tau)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def zeros(cls, dims):
        return cls(np.zeros((dims.a, dims.a), complex), np.zeros((dims.b, dims.b), complex),
                   np.zeros(dims.n))


class GeodesicDistance(NamedTuple):
    """Squared geodesic distance and its unweighted components.

    ``total = (b/p) a_part + (a/p) b_part + tau_part / n``.
    """

    total: float
    a_part: float
    b_part: float
    tau_part: float


@dataclass(frozen=True)
class IcrbReport:
    total: float
    bound_a: float
    bound_b: float
    bound_tau: float


def _check(theta, xi):
    if (xi.xi_a.shape != theta.a_factor.shape or xi.xi_b.shape != theta.b_factor.shape
            or xi.xi_tau.shape != theta.textures.shape):
        raise DimensionMismatch("tangent vector does not match the base point")


def fisher_inner(theta, xi, eta):
    _check(theta, xi)
    _check(theta, eta)
    a, b = theta.a, theta.b
    p, n = a * b, theta.n
    ai = np.linalg.inv(theta.a_factor)
    bi = np.linalg.inv(theta.b_factor)
    ta = np.real(np.trace(ai @ xi.xi_a @ ai @ eta.xi_a))
    tb = np.real(np.trace(bi @ xi.xi_b @ bi @ eta.xi_b))
    tt = np.dot(xi.xi_tau / theta.textures, eta.xi_tau / theta.textures)
    return float(b / p * ta + a / p * tb + tt / n)


def project_factor(m, xi):
    """``xi - tr(M^-1 xi) / d * M``: orthogonal projection onto ``T_M sH++``."""
    xi = hermitize(np.asarray(xi))
    c = np.real(np.trace(np.linalg.solve(m, xi)))
    return xi - (c / m.shape[0]) * m


def project_tangent(theta, raw):
    """Project a raw ``(xi_A, xi_B, xi_tau)`` triple onto the tangent space."""
    xi_a, xi_b, xi_tau = raw
    xi = Tangent(np.asarray(xi_a), np.asarray(xi_b), np.asarray(xi_tau, dtype=float))
    _check(theta, xi)
    return Tangent(project_factor(theta.a_factor, xi.xi_a),
                   project_factor(theta.b_factor, xi.xi_b), xi.xi_tau.copy())


def _exp_factor(m, xi):
    m_half = sqrtm(m)
    m_ihalf = invsqrtm(m)
    out = m_half @ expm(m_ihalf @ xi @ m_ihalf) @ m_half
    # the exact map keeps det = 1 on tangent vectors; this only strips round-off
    return unit_det_normalize(hermitize(out))[0]


def exp_map(theta, xi):
    """Riemannian exponential ``(A exp(A^-1 xi_A), B exp(B^-1 xi_B), tau exp(xi_tau / tau))``."""
    _check(theta, xi)
    tau = theta.textures
    return ThetaKron(_exp_factor(theta.a_factor, xi.xi_a),
                     _exp_factor(theta.b_factor, xi.xi_b),
                     tau * np.exp(xi.xi_tau / tau))


def hpd_distance2(s0, s1):
    """Squared affine-invariant distance ``||logm(s0^-1/2 s1 s0^-1/2)||_F^2``."""
    w = scipy.linalg.eigvalsh(s1, s0)
    return float(np.sum(np.log(w) ** 2))


def geodesic_distance(theta0, theta1):
    if theta0.dims != theta1.dims:
        raise DimensionMismatch("parameter points have different dimensions")
    a, b, n = theta0.a, theta0.b, theta0.n
    p = a * b
    da = hpd_distance2(theta0.a_factor, theta1.a_factor) if a > 1 else 0.0
    db = hpd_distance2(theta0.b_factor, theta1.b_factor) if b > 1 else 0.0
    dt = float(np.sum(np.log(theta1.textures / theta0.textures) ** 2))
    return GeodesicDistance(b / p * da + a / p * db + dt / n, da, db, dt)


def euclidean_grad_parts(theta, patch):
    """Pieces of the cost derivative shared by the gradient and the tests.

    Returns ``(S_A, S_B, q)`` with ``S_A = sum_i M_i^T B^-T M_i^* / tau_i``,
    ``S_B = sum_i M_i A^-T M_i^H / tau_i`` and ``q`` the quadratic forms.
    """
    x = np.asarray(patch)
    a, b, n = theta.a, theta.b, theta.n
    if x.shape != (n, a * b):
        raise DimensionMismatch(f"patch shape {x.shape} != {(n, a * b)}")
    N = x.reshape(n, a, b)
    w = 1.0 / theta.textures
    a_inv = np.linalg.inv(theta.a_factor)
    b_inv = np.linalg.inv(theta.b_factor)
    s_a = np.einsum("i,ijl,lm,ikm->jk", w, N, b_inv.conj(), N.conj())
    s_b = np.einsum("i,ijl,jk,ikm->lm", w, N, a_inv.conj(), N.conj())
    q = quad_forms(x, theta.a_factor, theta.b_factor)
    return hermitize(s_a), hermitize(s_b), q


def riemannian_grad(theta, patch):
    """Riemannian gradient of the single-frame cost at ``theta``.

    ``( -(p/b) P_A(S_A), -(p/a) P_B(S_B), n (p tau - q) )`` with ``S_A``,
    ``S_B``, ``q`` from :func:`euclidean_grad_parts`. Zero exactly when
    ``theta`` is the single-frame MLE of ``patch``.
    """
    a, b, n = theta.a, theta.b, theta.n
    p = a * b
    s_a, s_b, q = euclidean_grad_parts(theta, patch)
    g_a = -(p / b) * project_factor(theta.a_factor, s_a)
    g_b = -(p / a) * project_factor(theta.b_factor, s_b)
    g_tau = n * (p * theta.textures - q)
    return Tangent(g_a, g_b, g_tau)


def icrb(dims, T):
    """Intrinsic Cramer-Rao bounds for ``T`` frames.

    ``total = ((a^2-1) + (b^2-1) + n) / (T p n)``; the component bounds are
    ``(a^2-1)/(b T n)`` on ``d^2(A)``, ``(b^2-1)/(a T n)`` on ``d^2(B)`` and
    ``1/(T p)`` on the per-pixel texture error ``||log(tau_hat/tau)||^2 / n``.
    """
    a, b, n = dims.a, dims.b, dims.n
    p = a * b
    if T < 1:
        raise ValueError("T must be positive")
    return IcrbReport(
        total=((a * a - 1) + (b * b - 1) + n) / (T * p * n),
        bound_a=(a * a - 1) / (b * T * n),
        bound_b=(b * b - 1) / (a * T * n),
        bound_tau=1.0 / (T * p),
    )
