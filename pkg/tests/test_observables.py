import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghz_selftest.linalg import check_root_of_unity_observable, frobenius, mpow
from ghz_selftest.observables import (PARTY_CLASSES, QuditObservable, band_observable_matrix, bell_coefficients,
                                      canonical_pair, clock_matrix, extraction_unitary,
                                      fourier_observable_matrix, fourier_matrix, ideal_observable,
                                      party_class, phase_unitary, resolved_ideal_matrix, t_eigenvector, theta)
from ghz_selftest.scenario import omega_power
from ghz_selftest.sos import pair_relations

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])


def test_fourier_matrix():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert np.allclose(fourier_matrix(2), h)
    f5 = fourier_matrix(5)
    assert frobenius(f5.conj().T @ f5 - np.eye(5)) < 1e-12
    assert abs(fourier_matrix(3)[1, 2] - cmath.exp(4j * math.pi / 3) / math.sqrt(3)) < 1e-15
    with pytest.raises(ValueError):
        fourier_matrix(1)


def test_clock_matrix():
    assert np.allclose(clock_matrix(2), np.diag([1, -1]))
    assert frobenius(mpow(clock_matrix(4), 4) - np.eye(4)) < 1e-12
    assert abs(np.trace(clock_matrix(3))) < 1e-14


def test_phase_unitaries():
    assert theta(1, 5) == 0
    for m, d in [(2, 2), (3, 4), (5, 3)]:
        assert np.allclose(phase_unitary("W", 1, m, d), np.eye(d))
    u = phase_unitary("U", 1, 2, 2)
    assert np.allclose(u, np.diag([1, cmath.exp(-1j * math.pi / 4)]))
    for kind in "UVW":
        p = phase_unitary(kind, 2, 3, 4)
        assert frobenius(p.conj().T @ p - np.eye(4)) < 1e-13
    with pytest.raises(ValueError):
        phase_unitary("X", 1, 2, 2)


def test_party_class():
    assert [party_class(i) for i in range(1, 7)] == ["first", "second", "odd", "even", "odd", "even"]


def test_qubit_observables_are_chsh_pauli_combinations():
    # hand-evaluated band forms for m = d = 2
    cases = {("first", 1): (SX - SY) / math.sqrt(2), ("first", 2): -(SX + SY) / math.sqrt(2),
             ("second", 1): SY, ("second", 2): -SX}
    for (cls, x), expected in cases.items():
        assert np.max(np.abs(ideal_observable(cls, x, 2, 2).matrix - expected)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(PARTY_CLASSES), st.integers(2, 5), st.integers(2, 6), st.data())
def test_fourier_and_band_paths_agree(cls, m, d, data):
    x = data.draw(st.integers(1, m))
    a = fourier_observable_matrix(cls, x, m, d)
    b = band_observable_matrix(cls, x, m, d)
    assert np.max(np.abs(a - b)) < 1e-10
    assert check_root_of_unity_observable(a, d, 1e-9).ok
    for n in range(1, d):
        assert abs(np.trace(mpow(a, n))) < 1e-12


def test_band_path_specific_case():
    a = ideal_observable("odd", 2, 3, 4, path="fourier").matrix
    b = ideal_observable("odd", 2, 3, 4, path="band").matrix
    assert np.max(np.abs(a - b)) < 1e-10


def test_ideal_observable_errors():
    with pytest.raises(ValueError):
        ideal_observable("third", 1, 2, 2)
    with pytest.raises(ValueError):
        ideal_observable("first", 3, 2, 2)
    with pytest.raises(ValueError):
        QuditObservable(np.diag([1, 1j]), 2)


def test_bell_coefficients():
    c = bell_coefficients(2, 2)
    assert abs(c.a[1] - 1 / math.sqrt(2)) < 1e-15
    assert c.mu_nu_tau == {}
    c = bell_coefficients(3, 5)
    for k in range(1, 5):
        assert abs(c.a[5 - k] - np.conj(c.a[k])) < 1e-14
        assert abs(abs(c.a[k]) - 1 / (2 * math.cos(math.pi / 6))) < 1e-14
    assert set(bell_coefficients(5, 3).mu_nu_tau) == {(a, k) for a in (1, 2, 3) for k in (1, 2)}
    assert all(v == 0 for v in bell_coefficients(3, 3).zeroed().a.values())


@pytest.mark.parametrize("cls", PARTY_CLASSES)
@pytest.mark.parametrize("m,d", [(2, 2), (3, 3), (4, 5), (3, 4)])
def test_combined_observable_unitarity(cls, m, d):
    c = bell_coefficients(m, d)
    sign = 1 if cls in ("first", "odd") else -1
    for x in range(1, m + 1):
        for k in range(1, d):
            a, b = resolved_ideal_matrix(cls, x, m, d), resolved_ideal_matrix(cls, x + sign, m, d)
            comb = c.a[k] * mpow(a, sign * k) + np.conj(c.a[k]) * mpow(b, sign * k)
            assert frobenius(comb.conj().T @ comb - np.eye(d)) < 1e-9


def test_canonical_pair():
    z, t = canonical_pair(2, 2)
    assert np.max(np.abs(t.matrix + SX)) < 1e-12
    for d in range(2, 7):
        assert abs(np.trace(canonical_pair(d, 3)[0].matrix)) < 1e-12
    _, t32 = canonical_pair(3, 2)
    assert frobenius(mpow(t32.matrix, 3) - np.eye(3)) < 1e-9


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_canonical_pair_relations(m, d):
    z, t = canonical_pair(d, m)
    rel = pair_relations(z.matrix, t.matrix, m, d)
    assert max(rel.values()) < 1e-9, rel


def test_t_eigenvectors():
    v = t_eigenvector(0, 2, 2)
    # eigenvalue +1 of -sigma_x, proportional to (1, -1)/sqrt(2)
    assert abs(np.vdot(v, v) - 1) < 1e-12
    assert abs(abs(np.vdot(np.array([1, -1]) / math.sqrt(2), v)) - 1) < 1e-12
    vecs = np.stack([t_eigenvector(r, 4, 3) for r in range(4)], axis=1)
    assert frobenius(vecs.conj().T @ vecs - np.eye(4)) < 1e-10
    _, t = canonical_pair(5, 2)
    for r in range(5):
        v = t_eigenvector(r, 5, 2)
        assert np.linalg.norm(t.matrix @ v - omega_power(r, 5) * v) < 1e-10
    with pytest.raises(ValueError):
        t_eigenvector(5, 5, 2)


@pytest.mark.parametrize("cls", PARTY_CLASSES)
@pytest.mark.parametrize("m,d", [(2, 2), (3, 3), (2, 5), (4, 3)])
def test_extraction_unitaries(cls, m, d):
    z, t = canonical_pair(d, m)
    w = extraction_unitary(cls, m, d)
    assert frobenius(w.conj().T @ w - np.eye(d)) < 1e-11
    assert np.max(np.abs(w @ z.matrix @ w.conj().T - resolved_ideal_matrix(cls, 2, m, d))) < 1e-9
    assert np.max(np.abs(w @ t.matrix @ w.conj().T - resolved_ideal_matrix(cls, 3, m, d))) < 1e-9


def test_extraction_first_qubit_case():
    z, _ = canonical_pair(2, 2)
    w = extraction_unitary("first", 2, 2)
    assert np.max(np.abs(w @ z.matrix @ w.conj().T - ideal_observable("first", 2, 2, 2).matrix)) < 1e-10


def test_pair_relation_needs_wrapped_exponent():
    # without the k -> k - d shift the squared-power relation fails once 2k >= d
    m, d, k = 3, 3, 2
    z, t = (o.matrix for o in canonical_pair(d, m))
    unwrapped = (omega_power(Fraction(k, m), d) * mpow(z, 2 * k) + omega_power(Fraction(-k, m), d) * mpow(t, 2 * k)
                 - mpow(z, k) @ mpow(t, k) - mpow(t, k) @ mpow(z, k))
    assert frobenius(unwrapped) > 1
    assert pair_relations(z, t, m, d)["obs23"] < 1e-9
