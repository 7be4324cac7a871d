"""Scaled-Gaussian model with Kronecker-structured scatter.

A pixel patch is an ``(n, p)`` complex array (one row per pixel). A stack of
``T`` patches is a ``(T, n, p)`` array. Every likelihood-valued function here
returns a *cost*: the negative log-likelihood with the ``pi`` constants
dropped.
"""

from dataclasses import dataclass

import numpy as np

from .cxlinalg import PD_RTOL, kron_quad_form, sqrtm
from .exceptions import DimensionMismatch, NonPositiveTexture, NotPositiveDefinite


@dataclass(frozen=True)
class ModelDims:
    """Kronecker factor sizes and samples per patch (``p = a * b``)."""

    a: int
    b: int
    n: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1 or self.n < 1:
            raise ValueError(f"dimensions must be positive, got {self}")

    @property
    def p(self):
        return self.a * self.b

    @classmethod
    def unstructured(cls, p, n):
        """Dims of the plain (non-Kronecker) model: ``a = p``, ``b = 1``."""
        return cls(a=p, b=1, n=n)


@dataclass(frozen=True)
class ThetaKron:
    """Parameter point ``(A, B, tau)``.

    ``A`` and ``B`` are unit-determinant HPD factors, ``tau`` the positive
    texture vector. Instances built by the library satisfy the invariants;
    call :meth:`check` on externally constructed ones.
    """

    a_factor: np.ndarray
    b_factor: np.ndarray
    textures: np.ndarray

    @property
    def a(self):
        return self.a_factor.shape[0]

    @property
    def b(self):
        return self.b_factor.shape[0]

    @property
    def n(self):
        return self.textures.shape[0]

    @property
    def dims(self):
        return ModelDims(self.a, self.b, self.n)

    def check(self, det_tol=1e-10):
        for name, m in (("A", self.a_factor), ("B", self.b_factor)):
            if not np.allclose(m, m.conj().T, rtol=1e-12, atol=1e-12 * np.abs(m).max()):
                raise NotPositiveDefinite(f"{name} is not Hermitian")
            w = np.linalg.eigvalsh(m)
            if w[0] <= PD_RTOL * w[-1]:
                raise NotPositiveDefinite(f"{name} is not positive definite")
            if abs(np.prod(w) - 1) > det_tol:
                raise NotPositiveDefinite(f"{name} does not have unit determinant")
        t = self.textures
        if not (np.all(np.isfinite(t)) and np.all(t > 0)):
            raise NonPositiveTexture("textures must be finite and positive")
        return self

    @classmethod
    def identity(cls, dims, textures=None):
        tau = np.ones(dims.n) if textures is None else np.asarray(textures, dtype=float)
        return cls(np.eye(dims.a, dtype=complex), np.eye(dims.b, dtype=complex), tau)


def _check_patch(x, a, b, n=None):
    x = np.asarray(x)
    if x.shape[-1] != a * b:
        raise DimensionMismatch(f"sample length {x.shape[-1]} != a*b = {a * b}")
    if n is not None and x.shape[-2] != n:
        raise DimensionMismatch(f"patch has {x.shape[-2]} samples, textures have {n}")
    return x


def quad_forms(x, a_factor, b_factor):
    """``q_i = x_i^H (A ⊗ B)^{-1} x_i`` for every sample along the last axis."""
    return kron_quad_form(x, np.linalg.inv(a_factor), np.linalg.inv(b_factor))


def _logdet_kron(a_factor, b_factor):
    a, b = a_factor.shape[0], b_factor.shape[0]
    return b * np.linalg.slogdet(a_factor)[1] + a * np.linalg.slogdet(b_factor)[1]


def nll_patch(patch, theta):
    """Cost of one patch: ``sum_i p log tau_i + log|A ⊗ B| + q_i / tau_i``."""
    x = _check_patch(patch, theta.a, theta.b, theta.n)
    tau = np.asarray(theta.textures, dtype=float)
    if np.any(tau <= 0):
        raise NonPositiveTexture("textures must be positive")
    p = theta.a * theta.b
    q = quad_forms(x, theta.a_factor, theta.b_factor)
    n = x.shape[0]
    return float(p * np.sum(np.log(tau)) + n * _logdet_kron(theta.a_factor, theta.b_factor)
                 + np.sum(q / tau))


def nll_h0_stack(patches, theta0):
    """Cost of a ``(T, n, p)`` stack under one shared parameter point.

    Textures are per pixel and reused at every time index.
    """
    x = _check_patch(patches, theta0.a, theta0.b, theta0.n)
    if x.ndim == 2:
        x = x[None]
    tau = np.asarray(theta0.textures, dtype=float)
    if np.any(tau <= 0):
        raise NonPositiveTexture("textures must be positive")
    T, n, p = x.shape
    q = quad_forms(x, theta0.a_factor, theta0.b_factor)
    return float(T * p * np.sum(np.log(tau)) + T * n * _logdet_kron(theta0.a_factor, theta0.b_factor)
                 + np.sum(q / tau[None, :]))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_textures(nu, size, seed=None):
    """Gamma(nu, 1/nu) textures (unit mean). ``nu = inf`` gives all ones."""
    rng = _as_rng(seed)
    if np.isinf(nu):
        return np.ones(size)
    if nu <= 0:
        raise ValueError("shape parameter nu must be positive")
    return rng.gamma(shape=nu, scale=1.0 / nu, size=size)


def sample_sg_kron(a_mat, b_mat, nu, n, seed=None, textures=None, size=()):
    """Draw K-distributed samples with scatter ``A ⊗ B``.

    Each sample is ``sqrt(tau) (A ⊗ B)^{1/2} g`` with ``g`` standard circular
    complex Gaussian and ``tau ~ Gamma(nu, 1/nu)``.

    Parameters
    ----------
    a_mat, b_mat : ndarray
        HPD factors (need not be unit determinant).
    nu : float
        Texture shape parameter; ``np.inf`` yields Gaussian data.
    n : int
        Number of samples (pixels) per patch.
    seed : int or numpy.random.Generator, optional
    textures : array_like, shape (n,), optional
        Fixed textures to use instead of drawing them.
    size : tuple of int, optional
        Leading batch shape, e.g. ``(T,)`` for a stack of frames. Drawn
        textures are then shared along these axes (one texture per pixel).

    Returns
    -------
    ndarray, shape size + (n, p)
    """
    rng = _as_rng(seed)
    a_half = sqrtm(a_mat)
    b_half = sqrtm(b_mat)
    a, b = a_half.shape[0], b_half.shape[0]
    if textures is None:
        textures = sample_textures(nu, n, rng)
    textures = np.asarray(textures, dtype=float)
    shape = tuple(size) + (n, a, b)
    g = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    # row-major view of (A^1/2 ⊗ B^1/2) vec: A^1/2 G (B^1/2)^T
    y = a_half @ g @ b_half.T
    y = y * np.sqrt(textures)[:, None, None]
    return y.reshape(tuple(size) + (n, a * b))
