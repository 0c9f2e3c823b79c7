"""Acceptance suite: one test per criterion, each recording a PASS/FAIL summary line."""
import itertools
import math

import numpy as np
import pytest

from ghz_selftest.bell import (Realization, bell_operator, bell_value_from_correlators, born_probabilities,
                               correlators_from_probabilities, ghz_state, ideal_realization,
                               operator_correlators, quantum_value)
from ghz_selftest.bounds import (critical_visibility, local_bound, tsirelson_certificate, visibility_sweep)
from ghz_selftest.linalg import random_unitary
from ghz_selftest.observables import (PARTY_CLASSES, canonical_pair, extraction_unitary, resolved_ideal_matrix,
                                      t_eigenvector)
from ghz_selftest.scenario import BellScenario, omega_power
from ghz_selftest.sos import selftest_relation_suite, verify_ghz_structure, verify_sos_identity

GRID = [BellScenario(N, m, d) for N, m, d in itertools.product((2, 3, 4), (2, 3, 4), (2, 3, 4, 5))
        if d**N <= 4096]
_ROBUST = {}  # aggregates the two parametrized robustness cases into one summary line
SOS_SET = [BellScenario(*t) for t in [(2, 2, 2), (2, 2, 3), (2, 3, 3), (3, 2, 2), (3, 2, 3), (3, 3, 2), (4, 2, 2)]]


def random_observable(d, rng):
    u = random_unitary(d, rng)
    return u @ np.diag(np.exp(2j * np.pi * rng.integers(0, d, size=d) / d)) @ u.conj().T


def test_criterion_01_quantum_value_grid(acceptance):
    worst = 0.0
    for s in GRID:
        r = ideal_realization(s)
        worst = max(worst, abs(quantum_value(r.state, bell_operator(r)) - s.m ** (s.N - 1) * (s.d - 1)))
    ok = acceptance(1, worst < 1e-8, f"{len(GRID)} scenarios, max |value - m^(N-1)(d-1)| = {worst:.2e}")
    assert ok


def test_criterion_02_sos_identity(acceptance):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for s in SOS_SET:
        ideal = ideal_realization(s)
        draws = [ideal] + [Realization(s, ideal.state, [[random_observable(s.d, rng) for _ in range(s.m)]
                                                         for _ in range(s.N)]) for _ in range(20)]
        for r in draws:
            for n in range(1, s.N + 1):
                worst = max(worst, verify_sos_identity(n, r).identity_residual)
    ok = acceptance(2, worst < 1e-8, f"ideal + 20 random draws, all variants, max residual = {worst:.2e}")
    assert ok


def test_criterion_03_tsirelson_certificate(acceptance):
    gap, resid = math.inf, 0.0
    for s in SOS_SET:
        cert = tsirelson_certificate(s)
        gap, resid = min(gap, cert.min_gap_eigenvalue), max(resid, cert.ghz_eigen_residual)
    ok = acceptance(3, gap > -1e-8 and resid < 1e-8,
                    f"min eig(beta_Q I - I) = {gap:.2e}, max ||I GHZ - beta_Q GHZ|| = {resid:.2e}")
    assert ok


def test_criterion_04_classical_bound(acceptance):
    s = BellScenario(2, 2, 2)
    qubit = local_bound(s, method="enumerate", with_quantum=False).beta_local
    points = [t for t in GRID if t.strategy_count <= 10**8]
    ratios = []
    for t in points:
        ratios.append(local_bound(t, with_quantum=False).beta_local / (t.m ** (t.N - 1) * (t.d - 1)))
    ok = abs(qubit - math.sqrt(2)) < 1e-9 and max(ratios) < 1
    acceptance(4, ok, f"beta_L(2,2,2) - sqrt2 = {qubit - math.sqrt(2):.1e}; "
                      f"{len(points)} grid points, max beta_L/beta_Q = {max(ratios):.6f}")
    assert ok


def test_criterion_05_relation_suite(acceptance):
    worst = {}
    for s in SOS_SET:
        for name, v in selftest_relation_suite(ideal_realization(s)).maxima().items():
            worst[name] = max(worst.get(name, 0.0), v)
    top = max(worst.values())
    ok = acceptance(5, top < 1e-9, "max " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_06_extraction_unitaries(acceptance):
    worst = 0.0
    for m, d in itertools.product((2, 3, 4), repeat=2):
        z, t = canonical_pair(d, m)
        for cls in PARTY_CLASSES:
            w = extraction_unitary(cls, m, d)
            worst = max(worst, np.max(np.abs(w @ z.matrix @ w.conj().T - resolved_ideal_matrix(cls, 2, m, d))),
                        np.max(np.abs(w @ t.matrix @ w.conj().T - resolved_ideal_matrix(cls, 3, m, d))))
    t22 = canonical_pair(2, 2)[1].matrix
    pauli = np.max(np.abs(t22 + np.array([[0, 1], [1, 0]])))
    ok = acceptance(6, worst < 1e-9 and pauli < 1e-12,
                    f"max entrywise W-map error = {worst:.1e}, |T_22 + sigma_x| = {pauli:.1e}")
    assert ok


def test_criterion_07_t_eigenvectors(acceptance):
    worst = 0.0
    for m, d in itertools.product((2, 3), (2, 3, 4, 5)):
        t = canonical_pair(d, m)[1].matrix
        for r in range(d):
            v = t_eigenvector(r, d, m)
            worst = max(worst, np.linalg.norm(t @ v - omega_power(r, d) * v))
    ok = acceptance(7, worst < 1e-9, f"max ||T|r> - omega^r|r>|| = {worst:.1e}")
    assert ok


def test_criterion_08_ghz_structure(acceptance):
    rng = np.random.default_rng(8)
    phi = rng.normal(size=4) + 1j * rng.normal(size=4)
    phi /= np.linalg.norm(phi)
    s = BellScenario(3, 2, 3)
    good = verify_ghz_structure(np.kron(ghz_state(3, 3), phi), s, aux_dim=4)
    w = np.zeros(8)
    w[[1, 2, 4]] = 1 / math.sqrt(3)
    w_rep = verify_ghz_structure(w, BellScenario(3, 2, 2))
    off = np.zeros(27)
    off[1] = 1.0  # |0,0,1>
    mixed = math.sqrt(0.95) * ghz_state(3, 3) + math.sqrt(0.05) * off
    bad = verify_ghz_structure(mixed / np.linalg.norm(mixed), s)
    ok = good.verdict and not w_rep.verdict and not bad.verdict and bad.off_pattern_mass > 1e-3
    acceptance(8, ok, f"GHZ x aux verdict={good.verdict}; W off-mass={w_rep.off_pattern_mass:.3f}; "
                      f"5% admixture off-mass={bad.off_pattern_mass:.3f}")
    assert ok


def test_criterion_09_cross_path(acceptance):
    worst = 0.0
    for s in GRID:
        r = ideal_realization(s)
        qv = quantum_value(r.state, bell_operator(r))
        born = bell_value_from_correlators(correlators_from_probabilities(born_probabilities(r)))
        direct = bell_value_from_correlators(operator_correlators(r))
        worst = max(worst, abs(qv - born), abs(qv - direct))
    ok = acceptance(9, worst < 1e-8, f"{len(GRID)} scenarios, max path disagreement = {worst:.1e}")
    assert ok


@pytest.mark.parametrize("t", [(2, 2, 2), (2, 2, 3)])
def test_criterion_10_robustness(acceptance, t):
    s = BellScenario(*t)
    beta_l = local_bound(s, with_quantum=False).beta_local
    beta_q = s.m ** (s.N - 1) * (s.d - 1)
    grid = np.linspace(0, 1, 21)
    pts = visibility_sweep(s, grid, beta_l)
    vals = np.array([p.value for p in pts])
    chord = vals[0] + grid * (vals[-1] - vals[0])
    v_crit = critical_visibility(pts, beta_l)
    ok = (np.max(np.abs(vals - chord)) < 1e-9 and abs(vals[0]) < 1e-8 and abs(vals[-1] - beta_q) < 1e-9
          and abs(v_crit - beta_l / beta_q) < 1e-6)
    prev = _ROBUST.get(10, True)
    _ROBUST[10] = prev and ok
    _ROBUST.setdefault("detail", []).append(f"{t}: v*={v_crit:.6f} vs {beta_l / beta_q:.6f}")
    acceptance(10, _ROBUST[10], "; ".join(_ROBUST["detail"]))
    assert ok

