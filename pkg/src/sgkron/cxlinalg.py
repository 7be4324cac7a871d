"""Complex Hermitian matrix kernel.

All functions accept plain ``numpy`` arrays. Matrix-valued functions broadcast
over leading axes where noted, which is what the estimators rely on to process
many frames at once.

Samples of dimension ``p = a * b`` are paired with a Kronecker covariance
``A ⊗ B`` (``A`` is ``a x a``, ``B`` is ``b x b``). Under numpy's row-major
``np.kron``, entry ``x[j * b + l]`` belongs to row ``j`` of ``A`` and row ``l``
of ``B``, so ``x.reshape(a, b)`` is the natural matrix view. The column-stacked
matrix ``M`` with ``vec(M) = x`` is its transpose, of shape ``b x a``.
"""

import numpy as np

from .exceptions import DimensionMismatch, InvalidCoefficient, NotPositiveDefinite

# smallest eigenvalue must exceed this fraction of the largest
PD_RTOL = 1e-12

_SCALAR_FUNCS = {
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "invsqrt": lambda w: 1.0 / np.sqrt(w),
}


def hermitize(m):
    """Return ``(m + m^H) / 2`` (broadcasts over leading axes)."""
    return 0.5 * (m + np.swapaxes(m, -1, -2).conj())


def kron(a, b):
    """Kronecker product ``a ⊗ b`` of two square matrices."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_pd(w, what="matrix"):
    wmax = np.max(w, axis=-1, keepdims=True)
    if np.any(wmax <= 0) or np.any(w <= PD_RTOL * wmax):
        raise NotPositiveDefinite(f"{what} is not positive definite")


def herm_matfun(m, f):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Parameters
    ----------
    m : ndarray, shape (..., d, d)
        Hermitian matrix or stack of Hermitian matrices.
    f : {"log", "exp", "sqrt", "invsqrt"} or callable
        Scalar function applied to the eigenvalues. Callables are applied
        without any positivity check.

    Returns
    -------
    ndarray, shape (..., d, d)
        ``U f(L) U^H``, re-symmetrized.

    Raises
    ------
    NotPositiveDefinite
        For ``log``, ``sqrt`` and ``invsqrt`` when the smallest eigenvalue is
        not above ``PD_RTOL`` times the largest one.
    """
    m = np.asarray(m)
    w, u = np.linalg.eigh(m)
    if isinstance(f, str):
        if f not in _SCALAR_FUNCS:
            raise ValueError(f"unknown matrix function {f!r}")
        if f != "exp":
            _check_pd(w)
        fw = _SCALAR_FUNCS[f](w)
    else:
        fw = f(w)
    out = (u * fw[..., None, :]) @ np.swapaxes(u, -1, -2).conj()
    return hermitize(out)


def logm(m):
    return herm_matfun(m, "log")


def expm(m):
    return herm_matfun(m, "exp")


def sqrtm(m):
    return herm_matfun(m, "sqrt")


def invsqrtm(m):
    return herm_matfun(m, "invsqrt")


def hermitian_toeplitz(rho, dim):
    """Toeplitz matrix with entry ``rho ** (j - i)`` above the diagonal.

    The lower triangle holds the conjugates, so the result is exactly
    Hermitian with unit diagonal.
    """
    rho = complex(rho)
    if abs(rho) >= 1:
        raise InvalidCoefficient(f"|rho| must be < 1, got {abs(rho)}")
    if dim < 1:
        raise ValueError("dim must be positive")
    k = np.arange(dim)
    lag = k[None, :] - k[:, None]
    upper = rho ** np.abs(lag)
    return np.where(lag >= 0, upper, upper.conj())


def reshape_sample(x, a, b):
    """Return ``M`` (``b x a``) whose column stacking equals ``x``.

    Broadcasts over leading axes of ``x``.
    """
    x = np.asarray(x)
    if x.shape[-1] != a * b:
        raise DimensionMismatch(f"sample length {x.shape[-1]} != a*b = {a * b}")
    return np.swapaxes(x.reshape(x.shape[:-1] + (a, b)), -1, -2)


def unreshape_sample(m):
    """Column-stack ``M`` back to a vector (inverse of ``reshape_sample``)."""
    m = np.asarray(m)
    return np.swapaxes(m, -1, -2).reshape(m.shape[:-2] + (-1,))


def kron_quad_form(x, a_inv, b_inv):
    """Quadratic form ``x^H (A ⊗ B)^{-1} x`` without forming the Kronecker product.

    Uses ``x^H (A ⊗ B)^{-1} x = tr(A^{-T} M^H B^{-1} M)`` with ``vec(M) = x``.

    Parameters
    ----------
    x : ndarray, shape (..., p)
        Sample(s).
    a_inv, b_inv : ndarray
        Inverses of the Kronecker factors, shapes ``(a, a)`` and ``(b, b)``.

    Returns
    -------
    float or ndarray, shape (...)
    """
    x = np.asarray(x)
    a_inv = np.asarray(a_inv)
    b_inv = np.asarray(b_inv)
    a, b = a_inv.shape[-1], b_inv.shape[-1]
    if x.shape[-1] != a * b:
        raise DimensionMismatch(f"sample length {x.shape[-1]} != a*b = {a * b}")
    m = reshape_sample(x, a, b)
    # tr(A^{-T} C) = sum_{kj} (A^{-1})_{kj} C_{kj}
    mbm = np.swapaxes(m, -1, -2).conj() @ (b_inv @ m)
    return np.real(np.einsum("kj,...kj->...", a_inv, mbm))


def unit_det_normalize(m):
    """Scale an HPD matrix to unit determinant.

    Returns
    -------
    normalized : ndarray
        ``m / scale``.
    scale : float
        ``det(m) ** (1 / dim)``.
    """
    m = np.asarray(m)
    sign, logdet = np.linalg.slogdet(m)
    if np.any(np.real(sign) <= 0) or not np.all(np.isfinite(logdet)):
        raise NotPositiveDefinite("matrix is not positive definite")
    _check_pd(np.linalg.eigvalsh(m))
    scale = np.exp(logdet / m.shape[-1])
    return hermitize(m / scale[..., None, None] if np.ndim(scale) else m / scale), scale


def is_hpd(m, rtol=PD_RTOL):
    m = np.asarray(m)
    if not np.allclose(m, np.swapaxes(m, -1, -2).conj(), rtol=1e-12, atol=1e-12 * np.abs(m).max()):
        return False
    w = np.linalg.eigvalsh(m)
    return bool(np.all(w > rtol * w.max()))
