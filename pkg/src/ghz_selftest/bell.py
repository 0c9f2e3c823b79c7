"""Bell operator assembly, GHZ state, Born probabilities and generalized correlators."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .linalg import (ContractError, apply_local, check_root_of_unity_observable, hermiticity_residual,
                     mpow)
from .observables import BellCoefficients, bell_coefficients, fourier_observable_matrix, party_class
from .scenario import BellScenario, ResourceCapExceeded, omega_power, resolve_observable_index

DEFAULT_DIM_CAP = 4096
IMAG_TOL = 1e-10


def beta_q_formula(scenario: BellScenario) -> float:
    """Closed-form maximal quantum value m^{N-1}(d-1), confirmed numerically on the ideal realization."""
    N, m, d = scenario.as_tuple()
    return float(m ** (N - 1) * (d - 1))


def check_dim_cap(scenario: BellScenario, cap: int = DEFAULT_DIM_CAP) -> None:
    if scenario.total_dim > cap:
        raise ResourceCapExceeded(
            f"Hilbert space dimension d^N = {scenario.total_dim} exceeds cap {cap}",
            scenario.total_dim, cap)


def ghz_state(N: int, d: int, cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    if N < 2 or d < 2:
        raise ValueError("N and d must be >= 2")
    dim = d**N
    if dim > cap:
        raise ResourceCapExceeded(f"GHZ dimension {dim} exceeds cap {cap}", dim, cap)
    psi = np.zeros(dim, dtype=complex)
    stride = sum(d**p for p in range(N))  # index of |i,i,...,i> is i * (1 + d + ... + d^{N-1})
    psi[np.arange(d) * stride] = 1 / math.sqrt(d)
    return psi


@dataclass(frozen=True)
class Realization:
    """Shared pure state plus ``observables[i][x]`` for party i+1, input x+1."""

    scenario: BellScenario
    state: np.ndarray
    observables: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        N, m, d = self.scenario.as_tuple()
        obs = tuple(tuple(np.asarray(getattr(a, "matrix", a), dtype=complex) for a in row)
                    for row in self.observables)
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "state", np.asarray(self.state, dtype=complex).ravel())
        if len(obs) != N or any(len(row) != m for row in obs):
            raise ValueError(f"need {N} parties with {m} observables each")
        for i, row in enumerate(obs, start=1):
            dims = {a.shape for a in row}
            if len(dims) != 1:
                raise ValueError(f"party {i}: observables have mismatched shapes {sorted(dims)}")
            for x, a in enumerate(row, start=1):
                rep = check_root_of_unity_observable(a, d, tol=1e-9)
                if not rep.ok:
                    raise ValueError(f"party {i} input {x}: not a valid d={d} observable "
                                     f"(residual {rep.max_residual:.3e})")
        if self.state.size != math.prod(self.local_dims):
            raise ValueError(f"state has dimension {self.state.size}, "
                             f"expected {math.prod(self.local_dims)} from local dims {self.local_dims}")
        norm = np.linalg.norm(self.state)
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"state is not normalized (norm {norm:.15f})")

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(row[0].shape[0] for row in self.observables)

    def observable(self, party: int, x: int) -> np.ndarray:
        """Observable for 1-based party and any index in ``[0, 2m]`` (cyclic phase convention)."""
        r = resolve_observable_index(x, self.scenario.m)
        return omega_power(r.phase_exponent, self.scenario.d) * self.observables[party - 1][r.base_input - 1]

    def replace(self, state=None, observables=None) -> "Realization":
        return Realization(self.scenario,
                           self.state if state is None else state,
                           self.observables if observables is None else observables)


def ideal_observables(scenario: BellScenario) -> tuple[tuple[np.ndarray, ...], ...]:
    N, m, d = scenario.as_tuple()
    return tuple(tuple(fourier_observable_matrix(party_class(i), x, m, d) for x in range(1, m + 1))
                 for i in range(1, N + 1))


def ideal_realization(scenario: BellScenario, cap: int = DEFAULT_DIM_CAP) -> Realization:
    return Realization(scenario, ghz_state(scenario.N, scenario.d, cap), ideal_observables(scenario))


@dataclass(frozen=True)
class BellOperatorMatrix:
    matrix: np.ndarray
    scenario: BellScenario
    beta_q_formula: float


def party_exponent_sign(i: int) -> int:
    """Party i enters the Bell operator with power (-1)^{i-1} k."""
    return 1 if i % 2 else -1


def alpha_configurations(m: int, N: int):
    """All (alpha_1, ..., alpha_N) with alpha_N = 1."""
    for head in itertools.product(range(1, m + 1), repeat=N - 1):
        yield head + (1,)


def party_input(alphas: Sequence[int], i: int) -> int:
    """Input index alpha_{i-1} + alpha_i - 1 used by party i >= 2 (may exceed m)."""
    return alphas[i - 2] + alphas[i - 1] - 1


def bell_operator(r: Realization, coeffs: BellCoefficients | None = None,
                  cap: int = DEFAULT_DIM_CAP) -> BellOperatorMatrix:
    s = r.scenario
    N, m, d = s.as_tuple()
    dim = math.prod(r.local_dims)
    if dim > cap:
        raise ResourceCapExceeded(f"operator dimension {dim} exceeds cap {cap}", dim, cap)
    coeffs = coeffs or bell_coefficients(m, d)
    out = np.zeros((dim, dim), dtype=complex)
    pw = _power_cache(r)
    for alphas in alpha_configurations(m, N):
        for k in range(1, d):
            first = coeffs.a[k] * pw(1, alphas[0], k) + np.conj(coeffs.a[k]) * pw(1, alphas[0] + 1, k)
            rest = first
            for i in range(2, N + 1):
                rest = np.kron(rest, pw(i, party_input(alphas, i), party_exponent_sign(i) * k))
            out += rest
    resid = hermiticity_residual(out)
    if resid > 1e-9 * max(1.0, np.linalg.norm(out)):
        raise ContractError(f"assembled Bell operator is not Hermitian (residual {resid:.3e})")
    return BellOperatorMatrix(out, s, beta_q_formula(s))


def _power_cache(r: Realization):
    cache = {}

    def pw(party: int, x: int, k: int) -> np.ndarray:
        key = (party, x, k)
        if key not in cache:
            cache[key] = mpow(r.observable(party, x), k)
        return cache[key]

    return pw


def quantum_value(state: np.ndarray, op: BellOperatorMatrix | np.ndarray) -> float:
    mat = op.matrix if isinstance(op, BellOperatorMatrix) else np.asarray(op)
    psi = np.asarray(state, dtype=complex).ravel()
    if psi.size != mat.shape[0]:
        raise ValueError(f"state dimension {psi.size} does not match operator {mat.shape}")
    val = np.vdot(psi, mat @ psi)
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


# -- probabilities and correlators -------------------------------------------------

@dataclass(frozen=True)
class ProbabilityTable:
    """``p[x_1-1, ..., x_N-1, a_1, ..., a_N]`` = p(a|x)."""

    scenario: BellScenario
    p: np.ndarray

    def __post_init__(self):
        N, m, d = self.scenario.as_tuple()
        shape = (m,) * N + (d,) * N
        if self.p.shape != shape:
            raise ValueError(f"probability array has shape {self.p.shape}, expected {shape}")

    def slice_sums(self) -> np.ndarray:
        N = self.scenario.N
        return self.p.sum(axis=tuple(range(N, 2 * N)))


@dataclass(frozen=True)
class CorrelatorTable:
    """``values[x_1-1, ..., x_N-1, k_1, ..., k_N]``; NaN marks a missing entry."""

    scenario: BellScenario
    values: np.ndarray

    def entry(self, inputs: Sequence[int], powers: Sequence[int]) -> complex:
        idx = tuple(x - 1 for x in inputs) + tuple(powers)
        return complex(self.values[idx])

    @classmethod
    def from_mapping(cls, scenario: BellScenario,
                     entries: Mapping[tuple[tuple[int, ...], tuple[int, ...]], complex]) -> "CorrelatorTable":
        N, m, d = scenario.as_tuple()
        vals = np.full((m,) * N + (d,) * N, np.nan, dtype=complex)
        for (xs, ks), v in entries.items():
            vals[tuple(x - 1 for x in xs) + tuple(ks)] = v
        return cls(scenario, vals)


def projectors(a: np.ndarray, d: int, tol: float = 1e-7) -> np.ndarray:
    """Stack of projectors ``M^b = (1/d) sum_k omega^{-bk} A^k`` for b = 0..d-1."""
    powers = [np.eye(a.shape[0], dtype=complex)]
    for _ in range(1, d):
        powers.append(powers[-1] @ a)
    out = np.zeros((d,) + a.shape, dtype=complex)
    for b in range(d):
        for k in range(d):
            out[b] += omega_power(-b * k, d) * powers[k]
    out /= d
    for b in range(d):
        err = np.linalg.norm(out[b] @ out[b] - out[b])
        if err > tol:
            raise ContractError(f"projector for outcome {b} is not idempotent (residual {err:.3e})")
    return out


def _batched_expectations(r: Realization, stacks: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    """``<psi| op_1[b_1] x ... x op_N[b_N] |psi>`` for every input setting and batch index.

    ``stacks[i][x]`` is an array ``(B, D_i, D_i)``. Result has shape ``(m,)*N + (B,)*N``.
    """
    N, m, _ = r.scenario.as_tuple()
    dims = r.local_dims
    psi_c = np.conj(r.state).reshape(dims)
    batch = stacks[0][0].shape[0]
    out = np.empty((m,) * N + (batch,) * N, dtype=complex)
    for xs in itertools.product(range(m), repeat=N):
        t = apply_local(r.state, [stacks[i][xs[i]] for i in range(N)], dims)
        out[xs] = np.tensordot(t, psi_c, axes=(list(range(N, 2 * N)), list(range(N))))
    return out


def born_probabilities(r: Realization) -> ProbabilityTable:
    N, m, d = r.scenario.as_tuple()
    stacks = [[projectors(r.observables[i][x], d) for x in range(m)] for i in range(N)]
    p = _batched_expectations(r, stacks)
    if np.max(np.abs(p.imag)) > 1e-9:
        raise ContractError("Born probabilities have a non-negligible imaginary part")
    p = p.real
    if p.min() < -1e-10:
        raise ContractError(f"negative probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    table = ProbabilityTable(r.scenario, p)
    worst = np.max(np.abs(table.slice_sums() - 1))
    if worst > 1e-9:
        raise ContractError(f"probability slices do not sum to one (worst deviation {worst:.3e})")
    return table


def operator_correlators(r: Realization) -> CorrelatorTable:
    """Correlators computed directly as ``<psi| A^{k_1} x ... x A^{k_N} |psi>``."""
    N, m, d = r.scenario.as_tuple()
    stacks = []
    for i in range(N):
        row = []
        for x in range(m):
            a = r.observables[i][x]
            pw = [np.eye(a.shape[0], dtype=complex)]
            for _ in range(1, d):
                pw.append(pw[-1] @ a)
            row.append(np.stack(pw))
        stacks.append(row)
    return CorrelatorTable(r.scenario, _batched_expectations(r, stacks))


def validate_probabilities(p: ProbabilityTable, tol: float = 1e-6) -> None:
    N = p.scenario.N
    if np.any(~np.isfinite(p.p)):
        raise ValueError("probability table contains non-finite entries")
    if p.p.min() < -1e-9:
        idx = np.unravel_index(np.argmin(p.p), p.p.shape)
        raise ValueError(f"negative probability {p.p[idx]:.3e} at inputs "
                         f"{tuple(int(i) + 1 for i in idx[:N])}, outcomes {tuple(int(i) for i in idx[N:])}")
    dev = np.abs(p.slice_sums() - 1)
    if dev.max() > tol:
        worst = np.unravel_index(np.argmax(dev), dev.shape)
        xs = tuple(int(i) + 1 for i in worst)
        raise ValueError(f"probability slice for inputs {xs} sums to {p.slice_sums()[worst]:.9f}, not 1")


def correlators_from_probabilities(p: ProbabilityTable) -> CorrelatorTable:
    """Fourier transform over outcomes: ``sum_a omega^{a.k} p(a|x)``."""
    validate_probabilities(p)
    N, _, d = p.scenario.as_tuple()
    axes = tuple(range(N, 2 * N))
    # ifftn carries exp(+2 pi i a k / d) / d per axis
    vals = np.fft.ifftn(p.p, axes=axes) * d**N
    return CorrelatorTable(p.scenario, vals)


def correlators_from_strategy(strategy, scenario: BellScenario) -> CorrelatorTable:
    """Correlator table of a deterministic strategy: ``omega^{sum_i a_i(x_i) k_i}``."""
    N, m, d = scenario.as_tuple()
    out = np.ones((m,) * N + (d,) * N, dtype=complex)
    ks = np.arange(d)
    for i in range(N):
        a_i = np.array([strategy.output(i + 1, x) for x in range(1, m + 1)])
        phase = np.exp(2j * np.pi * np.outer(a_i, ks) / d)  # (m, d)
        shape = [1] * (2 * N)
        shape[i] = m
        shape[N + i] = d
        out = out * phase.reshape(shape)
    return CorrelatorTable(scenario, out)


def bell_value_from_correlators(t: CorrelatorTable, coeffs: BellCoefficients | None = None,
                                scenario: BellScenario | None = None) -> float:
    """Evaluate the Bell functional term by term on a correlator table."""
    s = scenario or t.scenario
    N, m, d = s.as_tuple()
    coeffs = coeffs or bell_coefficients(m, d)
    total = 0j
    for alphas in alpha_configurations(m, N):
        others = [resolve_observable_index(party_input(alphas, i), m) for i in range(2, N + 1)]
        for k in range(1, d):
            for first_x, coef in ((alphas[0], coeffs.a[k]), (alphas[0] + 1, np.conj(coeffs.a[k]))):
                if coef == 0:
                    continue
                firsts = resolve_observable_index(first_x, m)
                res = [firsts] + others
                powers = [k] + [party_exponent_sign(i) * k for i in range(2, N + 1)]
                phase_exp = sum(ri.phase_exponent * p for ri, p in zip(res, powers))
                xs = tuple(ri.base_input for ri in res)
                ks = tuple(p % d for p in powers)
                val = t.entry(xs, ks)
                if not np.isfinite(val):
                    raise ValueError(f"correlator table is missing entry inputs={xs}, powers={ks}")
                total += coef * omega_power(phase_exp, d) * val
    if abs(total.imag) > 1e-9 * max(1.0, abs(total.real)):
        raise ArithmeticError(f"Bell functional has imaginary residue {total.imag:.3e}")
    return float(total.real)
