import math

import numpy as np
import pytest

from conftest import rng_for
from covertq.errors import DimMismatch, NotHermitian, NotPSD
from covertq.linalg import (
    dagger,
    eig_hermitian,
    eigvals_hermitian,
    mat_fn,
    partial_trace,
    support_projector,
    tensor,
    trace_norm,
)
from covertq.sampling import random_hermitian


def test_eig_identity():
    s = eig_hermitian(np.eye(2, dtype=complex))
    assert np.allclose(s.eigenvalues, [1.0, 1.0])


def test_eig_diagonal_signs():
    s = eig_hermitian(np.diag([1.0, -1.0]).astype(complex))
    assert np.allclose(s.eigenvalues, [-1.0, 1.0])
    # eigenvectors are standard basis vectors, reordered with the sort
    assert np.allclose(np.abs(s.eigenvectors), np.fliplr(np.eye(2)))


def test_eig_reconstruction_seeded():
    rng = rng_for(7)
    h = random_hermitian(rng, 6)
    s = eig_hermitian(h)
    rel = np.linalg.norm(s.reconstruct() - h) / np.linalg.norm(h)
    assert rel < 1e-10
    assert np.all(np.diff(s.eigenvalues) >= 0)


def test_eig_rejects_non_hermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(NotHermitian):
        eig_hermitian(m)


@pytest.mark.parametrize("dim", [1, 2, 3, 5, 8])
def test_eig_matches_lapack(dim):
    rng = rng_for(dim)
    h = random_hermitian(rng, dim)
    w = eigvals_hermitian(h)
    ref = np.linalg.eigvalsh(h)
    assert np.max(np.abs(w - ref)) < 1e-11 * max(1.0, np.max(np.abs(ref)))


def test_mat_fn_sqrt_diag():
    out = mat_fn(np.diag([4.0, 9.0]).astype(complex), math.sqrt)
    assert np.allclose(out, np.diag([2.0, 3.0]))


def test_mat_fn_log_identity():
    out = mat_fn(np.eye(3, dtype=complex), math.log2)
    assert np.allclose(out, 0.0)


def test_mat_fn_negative_power_on_support():
    out = mat_fn(np.diag([1.0, 0.0, 4.0]).astype(complex),
                 lambda x: x ** -0.2, support_tol=1e-12)
    assert np.allclose(np.diag(out).real, [1.0, 0.0, 4.0 ** -0.2])


def test_mat_fn_rejects_negative():
    with pytest.raises(NotPSD):
        mat_fn(np.diag([1.0, -0.5]).astype(complex), math.sqrt)


def test_mat_fn_identity_function_roundtrip():
    rng = rng_for(3)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    psd = g @ dagger(g)
    out = mat_fn(psd, lambda x: x)
    assert np.max(np.abs(out - psd)) < 1e-10 * np.max(np.abs(psd))


def test_tensor_identities():
    assert np.allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))
    out = tensor(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert np.allclose(np.diag(out).real, [0.0, 1.0, 0.0, 0.0])


def test_tensor_index_formula():
    rng = rng_for(11)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    out = tensor(a, b)
    for i in range(4):
        for j in range(4):
            assert out[i, j] == pytest.approx(a[i // 2, j // 2] * b[i % 2, j % 2])


def test_partial_trace_product_state():
    rng = rng_for(5)
    g1 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    g2 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = g1 @ dagger(g1)
    sig = g2 @ dagger(g2)
    red = partial_trace(tensor(rho, sig), [2, 3], [0])
    assert np.allclose(red, rho * np.trace(sig))


def test_partial_trace_bell_state():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    bell = np.outer(v, v.conj())
    assert np.allclose(partial_trace(bell, [2, 2], [1]), np.eye(2) / 2)


def test_partial_trace_preserves_trace():
    rng = rng_for(9)
    g = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = g @ dagger(g)
    rho /= np.trace(rho).real
    for keep in ([0], [1]):
        red = partial_trace(rho, [2, 3], keep)
        assert abs(np.trace(red).real - 1.0) < 1e-12


def test_partial_trace_is_linear():
    rng = rng_for(13)
    a = random_hermitian(rng, 6)
    b = random_hermitian(rng, 6)
    lhs = partial_trace(2.0 * a + 3.0 * b, [2, 3], [0])
    rhs = 2.0 * partial_trace(a, [2, 3], [0]) + 3.0 * partial_trace(b, [2, 3], [0])
    assert np.allclose(lhs, rhs)


def test_partial_trace_dim_mismatch():
    with pytest.raises(DimMismatch):
        partial_trace(np.eye(5, dtype=complex), [2, 2], [0])


def test_trace_norm_values():
    assert trace_norm(np.diag([1.0, -1.0]).astype(complex)) == pytest.approx(2.0)
    assert trace_norm(np.zeros((3, 3), dtype=complex)) == pytest.approx(0.0)


def test_trace_norm_matches_spectrum():
    rng = rng_for(17)
    h = random_hermitian(rng, 5)
    w = eigvals_hermitian(h)
    assert trace_norm(h) == pytest.approx(float(np.sum(np.abs(w))), abs=1e-11)


def test_trace_norm_triangle_inequality():
    rng = rng_for(19)
    for _ in range(25):
        a = random_hermitian(rng, 4)
        b = random_hermitian(rng, 4)
        assert trace_norm(a + b) <= trace_norm(a) + trace_norm(b) + 1e-9


def test_support_projector_idempotent():
    rng = rng_for(23)
    g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    psd = g @ dagger(g)  # rank 2
    p = support_projector(psd)
    assert np.max(np.abs(p @ p - p)) < 1e-10
    assert np.trace(p).real == pytest.approx(2.0, abs=1e-9)
