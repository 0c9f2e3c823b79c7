import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghz_selftest.linalg import (ContractError, apply_local, check_root_of_unity_observable, frobenius,
                                 hermitian_spectrum, mpow, random_unitary, tensor_product)
from ghz_selftest.observables import canonical_pair


def rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_tensor_product_identity_and_diagonal():
    assert np.allclose(tensor_product([np.eye(2), np.eye(2)]), np.eye(4))
    z = np.diag([1, -1])
    assert np.allclose(tensor_product([z, z]), np.diag([1, -1, -1, 1]))


def test_tensor_product_first_factor_most_significant():
    e0, e1 = np.array([[1], [0]]), np.array([[0], [1]])
    # |1> (x) |0> sits at index 2 when party 1 is most significant
    assert tensor_product([e1, e0]).ravel().tolist() == [0, 0, 1, 0]
    assert tensor_product([e0, e1]).ravel().tolist() == [0, 1, 0, 0]


def test_tensor_product_acts_factorwise():
    rng = np.random.default_rng(3)
    a, b = rand_c(rng, 2, 2), rand_c(rng, 2, 2)
    x, y = rand_c(rng, 2), rand_c(rng, 2)
    lhs = tensor_product([a, b]) @ np.kron(x, y)
    assert np.max(np.abs(lhs - np.kron(a @ x, b @ y))) < 1e-12


def test_tensor_product_empty_raises():
    with pytest.raises(ValueError):
        tensor_product([])


def test_tensor_product_associative():
    rng = np.random.default_rng(0)
    mats = [rng.integers(-2, 3, size=(2, 2)) * 2.0 ** rng.integers(-2, 3) for _ in range(3)]
    left = tensor_product([tensor_product(mats[:2]), mats[2]])
    right = tensor_product([mats[0], tensor_product(mats[1:])])
    assert np.max(np.abs(left - right)) < 1e-13


def test_hermitian_spectrum_examples():
    vals, _ = hermitian_spectrum(np.eye(3), 1e-9)
    assert np.allclose(vals, [1, 1, 1])
    vals, vecs = hermitian_spectrum(np.diag([2.0, -1.0]), 1e-9)
    assert np.allclose(vals, [-1, 2])
    assert np.allclose(np.abs(vecs), [[0, 1], [1, 0]])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8))
def test_hermitian_spectrum_reconstructs(seed, n):
    rng = np.random.default_rng(seed)
    x = rand_c(rng, n, n)
    h = x + x.conj().T
    vals, vecs = hermitian_spectrum(h, 1e-9)
    assert np.all(np.diff(vals) >= 0)
    rebuilt = (vecs * vals) @ vecs.conj().T
    assert frobenius(rebuilt - h) < 1e-9 * frobenius(h)
    assert frobenius(vecs.conj().T @ vecs - np.eye(n)) < 1e-10
    assert abs(vals.sum() - np.trace(h).real) < 1e-9 * n


def test_hermitian_spectrum_rejects_asymmetric():
    with pytest.raises(ContractError, match="not Hermitian"):
        hermitian_spectrum(np.array([[0, 1], [0, 0]], dtype=complex), 1e-9)


def test_root_of_unity_checks():
    assert check_root_of_unity_observable(np.diag([1, -1]), 2, 1e-9).ok
    rep = check_root_of_unity_observable(np.diag([1, np.exp(1j * np.pi / 3)]), 2, 1e-9)
    assert rep.is_unitary and not rep.order_d_holds
    _, t = canonical_pair(3, 2)
    assert check_root_of_unity_observable(t.matrix, 3, 1e-9).ok
    with pytest.raises(ValueError):
        check_root_of_unity_observable(np.ones((2, 3)), 2, 1e-9)


def test_frobenius_unitary_invariance():
    rng = np.random.default_rng(11)
    for n in (2, 5, 9):
        u = random_unitary(n, rng)
        m = rand_c(rng, n, n)
        assert abs(frobenius(u @ m @ u.conj().T) - frobenius(m)) < 1e-10


def test_mpow_negative_is_adjoint_power():
    u = random_unitary(4, np.random.default_rng(5))
    assert np.allclose(mpow(u, -3), np.linalg.matrix_power(u.conj().T, 3))
    assert np.allclose(mpow(u, 0), np.eye(4))


def test_apply_local_matches_kron():
    rng = np.random.default_rng(2)
    dims = (2, 3, 2)
    psi = rand_c(rng, 12)
    ops = [rand_c(rng, d, d) for d in dims]
    out = apply_local(psi, ops, dims)
    assert np.allclose(out.ravel(), tensor_product(ops) @ psi)
