"""Fixed-point maximum likelihood estimators.

``tyler_mle`` is the unstructured estimator; ``kron_mle`` the Kronecker one.
Both accept a single ``(n, p)`` patch (single-frame, H1 case) or a
``(T, n, p)`` stack whose textures are shared over time (pooled, H0 case).
"""

from dataclasses import dataclass

import numpy as np

from .cxlinalg import hermitize
from .exceptions import DimensionMismatch, InsufficientSamples, NotConverged
from .model import ThetaKron


@dataclass(frozen=True)
class FixedPointConfig:
    tol: float = 1e-9
    max_iter: int = 100
    raise_on_failure: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


# Detector default: single-frame unstructured fits with n close to p need
# hundreds of sweeps, and 1e-7 is far below the statistic's Monte-Carlo spread.
DETECTION_CONFIG = FixedPointConfig(tol=1e-7, max_iter=5000)


@dataclass(frozen=True)
class TylerEstimate:
    sigma: np.ndarray
    textures: np.ndarray
    iterations: int
    residual: float


def _as_stack(patches):
    x = np.asarray(patches)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3:
        raise DimensionMismatch(f"expected (n, p) or (T, n, p) data, got shape {x.shape}")
    return x


def _rel_change(new, old, axes):
    num = np.sqrt(np.sum(np.abs(new - old) ** 2, axis=axes))
    den = np.sqrt(np.sum(np.abs(old) ** 2, axis=axes))
    return num / den


def tyler_mle(patches, cfg=FixedPointConfig(), normalization="det"):
    """Tyler's M-estimator, pooled over time when given a stack.

    Iterates ``Sigma <- (p/n) sum_i (sum_t x x^H) / (sum_t x^H Sigma^-1 x)``
    from the identity. Textures are ``tau_i = sum_t q_it / (T p)`` at the
    converged scatter.

    Parameters
    ----------
    patches : ndarray, shape (n, p) or (T, n, p)
    cfg : FixedPointConfig
    normalization : {"det", "trace"}
        ``det`` gives a unit-determinant ``sigma``, ``trace`` one with trace
        ``p``.
    """
    x = _as_stack(patches)
    T, n, p = x.shape
    if n * T < p:
        # n*T = p is allowed: degenerate but has e.g. the scaled-basis fixed point
        raise InsufficientSamples(f"need n*T >= p, got n*T={n * T}, p={p}")
    if np.any(np.sum(np.abs(x) ** 2, axis=(0, 2)) == 0):
        raise InsufficientSamples("a pixel is zero at every time index")
    # per-pixel scatter summed over time
    outer = np.einsum("tij,tik->ijk", x, x.conj())
    sigma = np.eye(p, dtype=complex)
    residual = np.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        sinv = np.linalg.inv(sigma)
        q = np.real(np.einsum("ijk,kj->i", outer, sinv))
        new = (p / n) * np.einsum("ijk,i->jk", outer, 1.0 / q)
        new = hermitize(new)
        if normalization == "det":
            new = new / np.exp(np.linalg.slogdet(new)[1] / p)
        else:
            new = new * (p / np.real(np.trace(new)))
        residual = np.linalg.norm(new - sigma) / np.linalg.norm(sigma)
        sigma = new
        if residual <= cfg.tol:
            break
    if residual > cfg.tol and cfg.raise_on_failure:
        raise NotConverged(it, residual)
    sinv = np.linalg.inv(sigma)
    q = np.real(np.einsum("tij,jk,tik->ti", x.conj(), sinv, x))
    tau = q.sum(axis=0) / (T * p)
    return TylerEstimate(sigma=sigma, textures=tau, iterations=it, residual=float(residual))


def check_kron_existence(dims, T):
    """Heuristic sample-size guard for the Kronecker fixed point.

    Requires ``n T min(a, b) >= max(a, b)`` and ``n T >= max(a, b)^2 / p``;
    with ``b = 1`` this is the ``n T >= p`` condition of :func:`tyler_mle`.
    Sufficient conditions are not known in closed form; this only rejects
    obviously degenerate configurations.
    """
    a, b, n = dims.a, dims.b, dims.n
    nt = n * T
    if not (nt * min(a, b) >= max(a, b) and nt * a * b >= max(a, b) ** 2):
        raise InsufficientSamples(
            f"n*T={nt} samples too few for Kronecker factors a={a}, b={b}"
        )


def kron_fixed_point(x, a, b, tol=1e-9, max_iter=100):
    """Batched Kronecker fixed point.

    Parameters
    ----------
    x : ndarray, shape (F, T, n, p)
        ``F`` independent problems, each a stack of ``T`` frames sharing
        textures across time.
    a, b : int
    tol, max_iter
        Iteration stops once every problem's residual is ``<= tol``.

    Returns
    -------
    a_hat : ndarray, shape (F, a, a)
    b_hat : ndarray, shape (F, b, b)
    tau : ndarray, shape (F, n)
    iterations : int
    residual : ndarray, shape (F,)
    """
    F, T, n, p = x.shape
    if p != a * b:
        raise DimensionMismatch(f"sample length {p} != a*b = {a * b}")
    K = T * n
    xs = x.reshape(F, K, p)
    # row-major matrix view N = M^T, shape (a, b), one per (t, i)
    N = xs.reshape(F, K, a, b)
    Nt = np.swapaxes(N, -1, -2)

    a_hat = np.broadcast_to(np.eye(a, dtype=complex), (F, a, a)).copy()
    b_hat = np.broadcast_to(np.eye(b, dtype=complex), (F, b, b)).copy()
    tau = np.sum(np.abs(x) ** 2, axis=(1, 3)) / (T * p)
    residual = np.full(F, np.inf)
    it = 0
    for it in range(1, max_iter + 1):
        # textures are per pixel; broadcast over time
        sw = np.broadcast_to(np.sqrt(1.0 / tau)[:, None, :], (F, T, n)).reshape(F, K, 1, 1)
        # sum N conj(B^-1) N^H / tau as a Gram matrix, with conj(B^-1) = L L^H
        low = np.linalg.cholesky(np.linalg.inv(b_hat).conj())
        z = (sw * (N @ low[:, None])).transpose(0, 2, 1, 3).reshape(F, a, K * b)
        new_a = hermitize(z @ np.swapaxes(z, -1, -2).conj()) / (K * b)
        new_a /= np.exp(np.linalg.slogdet(new_a)[1] / a)[:, None, None]
        a_inv = np.linalg.inv(new_a)
        # sum N^T conj(A^-1) conj(N) / tau, same trick
        low = np.linalg.cholesky(a_inv.conj())
        z = (sw * (Nt @ low[:, None])).transpose(0, 2, 1, 3).reshape(F, b, K * a)
        new_b = hermitize(z @ np.swapaxes(z, -1, -2).conj()) / (K * a)
        new_b /= np.exp(np.linalg.slogdet(new_b)[1] / b)[:, None, None]
        b_inv = np.linalg.inv(new_b)
        kinv = (a_inv[:, :, None, :, None] * b_inv[:, None, :, None, :]).reshape(F, p, p)
        q = np.real(np.sum(xs.conj() * (xs @ np.swapaxes(kinv, -1, -2)), axis=-1)).reshape(F, T, n)
        new_tau = q.sum(axis=1) / (T * p)
        residual = np.maximum.reduce([
            _rel_change(new_a, a_hat, (-1, -2)),
            _rel_change(new_b, b_hat, (-1, -2)),
            np.max(np.abs(new_tau - tau) / tau, axis=-1),
        ])
        a_hat, b_hat, tau = new_a, new_b, new_tau
        if np.all(residual <= tol):
            break
    return a_hat, b_hat, tau, it, residual


def kron_mle(patches, dims=None, cfg=FixedPointConfig()):
    """Kronecker-structured MLE of ``(A, B, tau)``.

    Alternates the ``A`` update (given ``B``, ``tau``), the ``B`` update (given
    the new ``A``), then ``tau``; both factors are rescaled to unit determinant
    each sweep, which the texture update absorbs.

    Parameters
    ----------
    patches : ndarray, shape (n, p) or (T, n, p)
    dims : ModelDims
        Supplies ``a`` and ``b``; ``n`` must match the data.
    cfg : FixedPointConfig

    Returns
    -------
    theta : ThetaKron
    iterations : int
    residual : float
    """
    x = _as_stack(patches)
    T, n, p = x.shape
    if dims is None:
        raise TypeError("dims is required")
    if dims.p != p or dims.n != n:
        raise DimensionMismatch(f"data shape (n={n}, p={p}) does not match {dims}")
    check_kron_existence(dims, T)
    if np.any(np.sum(np.abs(x) ** 2, axis=(0, 2)) == 0):
        raise InsufficientSamples("a pixel is zero at every time index")
    a_hat, b_hat, tau, it, res = kron_fixed_point(x[None], dims.a, dims.b, cfg.tol, cfg.max_iter)
    res = float(res[0])
    if res > cfg.tol and cfg.raise_on_failure:
        raise NotConverged(it, res)
    return ThetaKron(a_hat[0], b_hat[0], tau[0]), it, res


def minimized_cost(tau, p, n_frames=1):
    """Cost at the texture MLE: ``n_frames * sum_i (p log tau_i + p)``.

    At the fixed point ``sum_t q_it / tau_i = n_frames * p`` for every pixel
    and the log-determinant term vanishes, so only the textures matter.
    """
    tau = np.asarray(tau)
    return n_frames * p * np.sum(np.log(tau) + 1.0, axis=-1)


def per_frame_mle(stack, dims, cfg=FixedPointConfig()):
    """Single-frame (H1) MLEs of every frame of a ``(T, n, p)`` stack at once.

    Returns
    -------
    a_hat, b_hat, tau : ndarrays with leading axis ``T``
    costs : ndarray, shape (T,)
        Minimized per-frame costs.
    """
    x = _as_stack(stack)
    T, n, p = x.shape
    if dims.p != p or dims.n != n:
        raise DimensionMismatch(f"data shape (n={n}, p={p}) does not match {dims}")
    check_kron_existence(dims, 1)
    if np.any(np.sum(np.abs(x) ** 2, axis=2) == 0):
        raise InsufficientSamples("a pixel is zero")
    a_hat, b_hat, tau, it, res = kron_fixed_point(x[:, None], dims.a, dims.b, cfg.tol, cfg.max_iter)
    if np.any(res > cfg.tol) and cfg.raise_on_failure:
        raise NotConverged(it, float(np.max(res)))
    return a_hat, b_hat, tau, minimized_cost(tau, p)
