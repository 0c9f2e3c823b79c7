"""Classical bound by exhaustive deterministic enumeration, spectral bound and white-noise sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bell import (BellOperatorMatrix, alpha_configurations, bell_operator, bell_value_from_correlators,
                   beta_q_formula, correlators_from_strategy, ghz_state, ideal_realization, party_input,
                   quantum_value)
from .linalg import hermitian_spectrum
from .observables import BellCoefficients, bell_coefficients
from .scenario import (DEFAULT_STRATEGY_CAP, BellScenario, DeterministicStrategy, check_strategy_cap,
                       enumerate_strategies, omega_power, resolve_observable_index)

DEFAULT_SHARD_SIZE = 1 << 16
TIE_TOL = 1e-12


@dataclass(frozen=True)
class BoundsResult:
    beta_local: float
    argmax_strategy: DeterministicStrategy
    beta_quantum_spec: float
    beta_q_formula: float
    strategy_count_evaluated: int


def _value_table(coeffs: BellCoefficients, d: int) -> np.ndarray:
    """``F[e] = Re sum_k a_k omega^{k e}`` for e in 0..d-1."""
    return np.array([sum(coeffs.a[k] * omega_power(k * e, d) for k in range(1, d)).real
                     for e in range(d)])


def _shard_best(N: int, m: int, d: int, table: np.ndarray, start: int, stop: int):
    """Best strategy among prefixes ``start..stop-1`` (parties 1..N-1).

    The last party's outcome for each input is optimised in closed form: the
    functional is a sum over its inputs of terms depending only on that input's outcome.
    Returns ``(value, prefix_index, last_party_outcomes)``.
    """
    idx = np.arange(start, stop, dtype=np.int64)
    width = (N - 1) * m
    digits = np.empty((idx.size, width), dtype=np.int64)
    rest = idx.copy()
    for pos in range(width - 1, -1, -1):
        rest, digits[:, pos] = np.divmod(rest, d)

    def out(party, x):
        return digits[:, (party - 1) * m + (x - 1)]

    sign_last = 1 if N % 2 else -1  # (-1)^{N-1}
    g = np.zeros((idx.size, m, d))
    shifts = sign_last * np.arange(d)
    for alphas in alpha_configurations(m, N):
        s = np.zeros(idx.size, dtype=np.int64)
        for i in range(2, N):
            r = resolve_observable_index(party_input(alphas, i), m)
            s += (1 if i % 2 else -1) * (out(i, r.base_input) + int(r.phase_exponent))
        nxt = resolve_observable_index(alphas[0] + 1, m)
        e1 = out(1, alphas[0]) + s
        e2 = out(1, nxt.base_input) + int(nxt.phase_exponent) + s
        # party N sees input alpha_{N-1} (alpha_N = 1) with no index overflow
        x_last = alphas[N - 2]
        g[:, x_last - 1, :] += (table[(e1[:, None] + shifts[None, :]) % d]
                                + table[(-(e2[:, None] + shifts[None, :])) % d])
    best_b = np.empty((idx.size, m), dtype=np.int64)
    tot = np.zeros(idx.size)
    for x in range(m):
        gx = g[:, x, :]
        mx = gx.max(axis=1)
        best_b[:, x] = np.argmax(gx >= mx[:, None] - TIE_TOL, axis=1)  # smallest tied outcome
        tot += mx
    top = tot.max()
    j = int(np.argmax(tot >= top - TIE_TOL))
    return float(tot[j]), int(idx[j]), tuple(int(b) for b in best_b[j])


def _compose(scenario: BellScenario, prefix_index: int, last: Sequence[int]) -> DeterministicStrategy:
    N, m, d = scenario.as_tuple()
    digits = []
    for _ in range((N - 1) * m):
        prefix_index, r = divmod(prefix_index, d)
        digits.append(r)
    return DeterministicStrategy.from_flat(digits[::-1] + list(last), scenario)


def local_bound(scenario: BellScenario, coeffs: BellCoefficients | None = None, *,
                method: str = "fast", shards: int = 1, shard_size: int = DEFAULT_SHARD_SIZE,
                cap: int = DEFAULT_STRATEGY_CAP, with_quantum: bool = True) -> BoundsResult:
    """Exact maximum of the Bell functional over all deterministic strategies.

    ``method="fast"`` enumerates the outcome tables of parties 1..N-1 and maximises the
    last party analytically per input, which is exact. ``method="enumerate"`` walks every
    strategy through its correlator table. Ties go to the lexicographically smallest table.
    """
    N, m, d = scenario.as_tuple()
    check_strategy_cap(scenario, cap)
    coeffs = coeffs or bell_coefficients(m, d)
    if method == "fast":
        value, strategy = _local_fast(scenario, coeffs, shards, shard_size)
    elif method == "enumerate":
        value, strategy = _local_enumerate(scenario, coeffs, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    beta_spectral = float("nan")
    if with_quantum:
        beta_spectral = spectral_bound(bell_operator(ideal_realization(scenario)))
    return BoundsResult(value, strategy, beta_spectral, beta_q_formula(scenario), scenario.strategy_count)


def _local_fast(scenario, coeffs, shards, shard_size):
    N, m, d = scenario.as_tuple()
    table = _value_table(coeffs, d)
    n_prefix = d ** ((N - 1) * m)
    ranges = [(a, min(a + shard_size, n_prefix)) for a in range(0, n_prefix, shard_size)]
    if shards > 1 and len(ranges) > 1:
        with ProcessPoolExecutor(max_workers=shards) as pool:
            futures = [pool.submit(_shard_best, N, m, d, table, a, b) for a, b in ranges]
            results = [f.result() for f in futures]
    else:
        results = [_shard_best(N, m, d, table, a, b) for a, b in ranges]
    # combine in index order so the tie-break does not depend on worker count
    best = None
    for res in results:
        if best is None or res[0] > best[0] + TIE_TOL:
            best = res
    return best[0], _compose(scenario, best[1], best[2])


def _local_enumerate(scenario, coeffs, cap):
    best_val, best_strategy = -math.inf, None
    for strategy in enumerate_strategies(scenario, cap=cap):
        v = bell_value_from_correlators(correlators_from_strategy(strategy, scenario), coeffs)
        if v > best_val + TIE_TOL:
            best_val, best_strategy = v, strategy
    return best_val, best_strategy


def strategy_value(strategy: DeterministicStrategy, scenario: BellScenario,
                   coeffs: BellCoefficients | None = None) -> float:
    return bell_value_from_correlators(correlators_from_strategy(strategy, scenario),
                                       coeffs or bell_coefficients(scenario.m, scenario.d))


def spectral_bound(op: BellOperatorMatrix) -> float:
    vals, _ = hermitian_spectrum(op.matrix, tol=1e-9)
    return float(vals[-1])


@dataclass(frozen=True)
class TsirelsonCertificate:
    beta_q: float
    max_eigenvalue: float
    min_gap_eigenvalue: float  # smallest eigenvalue of beta_q I - I_hat
    ghz_eigen_residual: float  # || I_hat |GHZ> - beta_q |GHZ> ||

    def ok(self, tol: float = 1e-8) -> bool:
        return self.min_gap_eigenvalue > -tol and self.ghz_eigen_residual < tol


def tsirelson_certificate(scenario: BellScenario) -> TsirelsonCertificate:
    op = bell_operator(ideal_realization(scenario))
    beta = op.beta_q_formula
    n = op.matrix.shape[0]
    gap, _ = hermitian_spectrum(beta * np.eye(n) - op.matrix, tol=1e-9)
    psi = ghz_state(scenario.N, scenario.d)
    resid = float(np.linalg.norm(op.matrix @ psi - beta * psi))
    return TsirelsonCertificate(beta, spectral_bound(op), float(gap[0]), resid)


@dataclass(frozen=True)
class VisibilityPoint:
    v: float
    value: float
    violates: bool


def visibility_sweep(scenario: BellScenario, grid: Sequence[float],
                     beta_local: float | None = None) -> list[VisibilityPoint]:
    """Bell value of ``v |GHZ><GHZ| + (1 - v) I / d^N`` with the ideal observables."""
    for v in grid:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"visibility {v} outside [0, 1]")
    op = bell_operator(ideal_realization(scenario))
    pure = quantum_value(ghz_state(scenario.N, scenario.d), op)
    mixed = float(np.trace(op.matrix).real) / op.matrix.shape[0]
    if beta_local is None:
        beta_local = local_bound(scenario, with_quantum=False).beta_local
    points = []
    for v in grid:
        val = v * pure + (1 - v) * mixed
        points.append(VisibilityPoint(float(v), float(val), bool(val > beta_local + 1e-9)))
    return points


def critical_visibility(points: Sequence[VisibilityPoint], beta_local: float) -> float:
    """Visibility where the affine sweep crosses ``beta_local``, from its two extreme points."""
    lo = min(points, key=lambda p: p.v)
    hi = max(points, key=lambda p: p.v)
    if hi.v == lo.v:
        raise ValueError("need at least two distinct visibilities")
    slope = (hi.value - lo.value) / (hi.v - lo.v)
    if slope <= 0:
        raise ValueError("Bell value does not increase with visibility")
    return lo.v + (beta_local - lo.value) / slope
