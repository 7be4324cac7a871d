import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sgkron.cxlinalg import (expm, herm_matfun, hermitian_toeplitz, invsqrtm, is_hpd, kron,
                             kron_quad_form, logm, reshape_sample, sqrtm, unit_det_normalize,
                             unreshape_sample)
from sgkron.exceptions import DimensionMismatch, InvalidCoefficient, NotPositiveDefinite

from conftest import rand_herm, rand_hpd


def test_kron_identity_and_diagonal():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    out = kron(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert np.array_equal(out, np.diag([3.0, 4.0, 6.0, 8.0]))


def test_kron_elementwise(rng):
    a, b = rand_herm(rng, 2), rand_herm(rng, 2)
    out = kron(a, b)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    assert out[2 * i + k, 2 * j + l] == pytest.approx(a[i, j] * b[k, l], rel=1e-14)


def test_matfun_basic_cases():
    assert np.allclose(logm(np.eye(3)), 0)
    assert np.allclose(expm(np.diag([0.0, np.log(2.0)])), np.diag([1.0, 2.0]))


def test_log_exp_roundtrip(rng):
    for _ in range(20):
        h = rand_herm(rng, 4)
        assert np.max(np.abs(logm(expm(h)) - h)) < 1e-10


def test_sqrt_and_invsqrt(rng):
    m = rand_hpd(rng, 5, unit_det=False)
    s = sqrtm(m)
    assert np.allclose(s @ s, m)
    assert np.allclose(invsqrtm(m) @ s, np.eye(5))


def test_matfun_callable_and_errors(rng):
    m = rand_hpd(rng, 3, unit_det=False)
    assert np.allclose(herm_matfun(m, lambda w: w ** 2), m @ m)
    with pytest.raises(NotPositiveDefinite):
        logm(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        sqrtm(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        herm_matfun(m, "cosh")


def test_matfun_broadcasts(rng):
    stack = np.stack([rand_hpd(rng, 3, unit_det=False) for _ in range(4)])
    out = logm(stack)
    for k in range(4):
        assert np.allclose(out[k], logm(stack[k]))


def test_toeplitz_cases():
    assert np.array_equal(hermitian_toeplitz(0, 3), np.eye(3))
    t = hermitian_toeplitz(0.3 + 0.7j, 2)
    assert np.allclose(t, [[1, 0.3 + 0.7j], [0.3 - 0.7j, 1]])
    t4 = hermitian_toeplitz(0.3 + 0.6j, 4)
    assert np.allclose(t4, t4.conj().T)
    assert np.all(np.linalg.eigvalsh(t4) > 0)
    assert t4[0, 3] == pytest.approx((0.3 + 0.6j) ** 3)


def test_toeplitz_rejects_unit_modulus():
    with pytest.raises(InvalidCoefficient):
        hermitian_toeplitz(0.6 + 0.8j, 3)


def test_reshape_roundtrip(rng):
    x = rng.standard_normal((5, 12)) + 1j * rng.standard_normal((5, 12))
    m = reshape_sample(x, 4, 3)
    assert m.shape == (5, 3, 4)
    # column stacking of M gives x back
    assert np.array_equal(m[0].T.reshape(-1), x[0])
    assert np.array_equal(unreshape_sample(m), x)
    with pytest.raises(DimensionMismatch):
        reshape_sample(x, 5, 3)


def test_quad_form_identity(rng):
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    assert kron_quad_form(x, np.eye(2), np.eye(3)) == pytest.approx(np.vdot(x, x).real)


def test_quad_form_dense_oracle(rng):
    for a, b in ((2, 3), (3, 2), (4, 3), (1, 5)):
        A, B = rand_hpd(rng, a, False), rand_hpd(rng, b, False)
        x = rng.standard_normal((7, a * b)) + 1j * rng.standard_normal((7, a * b))
        dense = np.real(np.einsum("ij,jk,ik->i", x.conj(), np.linalg.inv(np.kron(A, B)), x))
        got = kron_quad_form(x, np.linalg.inv(A), np.linalg.inv(B))
        assert np.allclose(got, dense, rtol=1e-12)


def test_quad_form_homogeneity(rng):
    A, B = rand_hpd(rng, 2), rand_hpd(rng, 3)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    base = kron_quad_form(x, np.linalg.inv(A), np.linalg.inv(B))
    assert kron_quad_form(x, np.linalg.inv(2.5 * A), np.linalg.inv(B)) == pytest.approx(base / 2.5)


def test_unit_det_normalize_cases(rng):
    m, s = unit_det_normalize(np.eye(3))
    assert np.allclose(m, np.eye(3)) and s == pytest.approx(1.0)
    m, s = unit_det_normalize(np.diag([2.0, 2.0]))
    assert np.allclose(m, np.eye(2)) and s == pytest.approx(2.0)
    h = rand_hpd(rng, 3, unit_det=False)
    m, s = unit_det_normalize(h)
    assert abs(np.linalg.det(m).real - 1) < 1e-10
    assert abs(s ** 3 - np.linalg.det(h).real) < 1e-10 * abs(np.linalg.det(h))
    with pytest.raises(NotPositiveDefinite):
        unit_det_normalize(np.diag([1.0, -2.0]))


def test_is_hpd(rng):
    assert is_hpd(rand_hpd(rng, 4))
    assert not is_hpd(np.diag([1.0, -1.0]))
    assert not is_hpd(np.array([[1.0, 2.0], [0.0, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 31))
def test_quad_form_nonnegative_property(a, b, seed):
    rng = np.random.default_rng(seed)
    A, B = rand_hpd(rng, a), rand_hpd(rng, b)
    x = rng.standard_normal((3, a * b)) + 1j * rng.standard_normal((3, a * b))
    q = kron_quad_form(x, np.linalg.inv(A), np.linalg.inv(B))
    assert np.all(q > 0)
