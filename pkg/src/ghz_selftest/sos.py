"""P and R operators, sum-of-squares identities, self-testing relations and GHZ structure checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bell import (Realization, alpha_configurations, bell_operator, beta_q_formula, party_exponent_sign,
                   party_input, quantum_value)
from .linalg import frobenius, mpow, tensor_product
from .observables import BellCoefficients, bell_coefficients
from .scenario import BellScenario, omega_power, resolve_observable_index


class EmptyIndexRangeError(LookupError):
    """Raised when an operator family has no members (R operators need m >= 3)."""


class DegenerateStateError(ValueError):
    """The state has no usable all-indices-equal component."""


def _check_variant(variant: int, N: int) -> None:
    if not isinstance(variant, int) or not 1 <= variant <= N:
        raise ValueError(f"variant must be 1 (main) or a party index 2..{N}, got {variant!r}")


def _check_alphas(alphas: Sequence[int], N: int, m: int) -> tuple[int, ...]:
    alphas = tuple(alphas)
    if len(alphas) == N - 1:
        alphas = alphas + (1,)
    if len(alphas) != N or alphas[-1] != 1:
        raise ValueError(f"alphas must list alpha_1..alpha_{N - 1} (alpha_{N} = 1), got {alphas}")
    if any(not isinstance(a, int) or not 1 <= a <= m for a in alphas):
        raise ValueError(f"alphas must lie in 1..{m}, got {alphas}")
    return alphas


def _check_k(k: int, d: int) -> None:
    if not isinstance(k, int) or not 1 <= k <= d - 1:
        raise ValueError(f"k must lie in 1..{d - 1}, got {k!r}")


def _resolved(obs: Sequence[np.ndarray], x: int, m: int, d: int) -> np.ndarray:
    r = resolve_observable_index(x, m)
    return omega_power(r.phase_exponent, d) * np.asarray(obs[r.base_input - 1])


def p_factors(variant: int, alphas: Sequence[int], k: int, r: Realization,
              coeffs: BellCoefficients | None = None) -> list[np.ndarray]:
    """Local factors of the product term subtracted from the identity in P."""
    N, m, d = r.scenario.as_tuple()
    _check_variant(variant, N)
    alphas = _check_alphas(alphas, N, m)
    _check_k(k, d)
    coeffs = coeffs or bell_coefficients(m, d)
    a, ac = coeffs.a[k], np.conj(coeffs.a[k])

    def pw(i, x, p):
        return mpow(r.observable(i, x), p)

    if variant == 1:
        factors = [a * pw(1, alphas[0], k) + ac * pw(1, alphas[0] + 1, k)]
    else:
        factors = [pw(1, alphas[0], k)]
    for i in range(2, N + 1):
        x = party_input(alphas, i)
        if i != variant:
            factors.append(pw(i, x, party_exponent_sign(i) * k))
        elif i % 2:
            factors.append(a * pw(i, x, k) + ac * pw(i, x + 1, k))
        else:
            factors.append(a * pw(i, x, -k) + ac * pw(i, x - 1, -k))
    return factors


def p_operator(variant: int, alphas: Sequence[int], k: int, r: Realization,
               coeffs: BellCoefficients | None = None) -> np.ndarray:
    """``I - (combined slot) x (powered observables)``; ``variant`` 1 is the main decomposition."""
    prod = tensor_product(p_factors(variant, alphas, k, r, coeffs))
    return np.eye(prod.shape[0]) - prod


def r_operator(variant: int, alpha: int, k: int, observables: Sequence[np.ndarray], m: int, d: int,
               coeffs: BellCoefficients | None = None) -> np.ndarray:
    """Local three-term operator acting on party ``variant`` (party 1 for the main decomposition).

    ``observables`` are that party's m matrices. Odd positions use conjugated
    mu and nu with power k; even positions use them unconjugated with power -k.
    """
    if m < 3:
        raise EmptyIndexRangeError(f"no R operators exist for m={m} (alpha ranges over 1..m-2)")
    if not isinstance(variant, int) or variant < 1:
        raise ValueError(f"invalid variant {variant!r}")
    if not isinstance(alpha, int) or not 1 <= alpha <= m - 2:
        raise ValueError(f"alpha must lie in 1..{m - 2}, got {alpha!r}")
    _check_k(k, d)
    if len(observables) != m:
        raise ValueError(f"expected {m} observables, got {len(observables)}")
    coeffs = coeffs or bell_coefficients(m, d)
    mu, nu, tau = coeffs.mu_nu_tau[(alpha, k)]
    if variant % 2:
        mu, nu, p = np.conj(mu), np.conj(nu), k
    else:
        p = -k
    return (mu * mpow(_resolved(observables, 2, m, d), p)
            + nu * mpow(_resolved(observables, alpha + 2, m, d), p)
            + tau * mpow(_resolved(observables, alpha + 3, m, d), p))


@dataclass
class SosReport:
    identity_residual: float = float("nan")
    per_term_p_norms: dict = field(default_factory=dict)     # (n, alphas, k) -> ||P psi||
    per_term_r_norms: dict = field(default_factory=dict)     # (n, alpha, k) -> ||R||_F
    trace_table: dict = field(default_factory=dict)          # (party, x, n) -> |Tr A^n|
    combined_unitarity: dict = field(default_factory=dict)   # (party, x, k) -> residual
    obs22: dict = field(default_factory=dict)                # party -> residual
    obs23: dict = field(default_factory=dict)
    newid1: dict = field(default_factory=dict)
    variant_residuals: dict = field(default_factory=dict)    # n -> identity residual
    quantum_gap: float = float("nan")                        # beta_Q - <psi|I|psi>
    sos_expectation: float = float("nan")                    # <psi| SOS |psi>

    def maxima(self) -> dict[str, float]:
        def mx(d):
            return max(d.values()) if d else 0.0
        ident = max(self.variant_residuals.values()) if self.variant_residuals else self.identity_residual
        return {
            "SOS_identity": 0.0 if math.isnan(ident) else ident,
            "P_residual": mx(self.per_term_p_norms),
            "R_norm": mx(self.per_term_r_norms),
            "trace": mx(self.trace_table),
            "combined_unitarity": mx(self.combined_unitarity),
            "obs22": mx(self.obs22),
            "obs23": mx(self.obs23),
            "newid1": mx(self.newid1),
        }

    def max_residual(self) -> float:
        return max(self.maxima().values())

    def failures(self, tol: float) -> list[str]:
        return [name for name, v in self.maxima().items() if not v < tol]


def _embed(local: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    return tensor_product([local if i == party else np.eye(dims[i - 1]) for i in range(1, len(dims) + 1)])


def sos_operator(variant: int, r: Realization, coeffs: BellCoefficients | None = None,
                 report: SosReport | None = None) -> np.ndarray:
    """Right-hand side ``1/2 sum P^dag P + m^{N-2}/2 sum R^dag R`` for one decomposition."""
    N, m, d = r.scenario.as_tuple()
    _check_variant(variant, N)
    coeffs = coeffs or bell_coefficients(m, d)
    dims = r.local_dims
    dim = math.prod(dims)
    out = np.zeros((dim, dim), dtype=complex)
    for alphas in alpha_configurations(m, N):
        for k in range(1, d):
            p = p_operator(variant, alphas, k, r, coeffs)
            out += 0.5 * (p.conj().T @ p)
            if report is not None:
                report.per_term_p_norms[(variant, alphas, k)] = float(np.linalg.norm(p @ r.state))
    if m >= 3:
        party_obs = r.observables[variant - 1]
        for alpha in range(1, m - 1):
            for k in range(1, d):
                loc = r_operator(variant, alpha, k, party_obs, m, d, coeffs)
                big = _embed(loc, variant, dims)
                out += m ** (N - 2) / 2 * (big.conj().T @ big)
                if report is not None:
                    report.per_term_r_norms[(variant, alpha, k)] = frobenius(loc)
    return out


def verify_sos_identity(variant: int, r: Realization, tol: float = 1e-8,
                        coeffs: BellCoefficients | None = None) -> SosReport:
    """Residual of ``beta_Q I - I_hat = SOS`` for any valid realization.

    The identity only uses ``A^d = I`` and unitarity, so it must hold for arbitrary
    observables; the realization constructor has already validated those.
    """
    N, m, d = r.scenario.as_tuple()
    _check_variant(variant, N)
    coeffs = coeffs or bell_coefficients(m, d)
    report = SosReport()
    op = bell_operator(r, coeffs)
    sos = sos_operator(variant, r, coeffs, report)
    beta = beta_q_formula(r.scenario)
    resid = frobenius(beta * np.eye(op.matrix.shape[0]) - op.matrix - sos)
    report.identity_residual = resid
    report.variant_residuals[variant] = resid
    report.quantum_gap = beta - quantum_value(r.state, op)
    report.sos_expectation = float(np.vdot(r.state, sos @ r.state).real)
    return report


def _obs22_residual(a2, a3, m, d):
    eye = np.eye(a2.shape[0])
    worst = 0.0
    for k in range(1, d):
        ph = omega_power(Fraction(2 * k - d, 2 * m), d)
        lhs = ph * mpow(a2, k) @ mpow(a3, -k) + np.conj(ph) * mpow(a3, k) @ mpow(a2, -k)
        worst = max(worst, frobenius(lhs - 2 * math.cos(math.pi / m) * eye))
    return worst


def _obs23_residual(a2, a3, m, d):
    """``omega^{s/m} A2^{2k} + omega^{-s/m} A3^{2k} = {A2^k, A3^k}`` with ``s = k`` or ``k - d``.

    The shift ``s = k - d`` applies once ``2k >= d``, where the exponent of the squared
    powers wraps around; without it the relation fails for those k.
    """
    worst = 0.0
    for k in range(1, d):
        s = k if 2 * k < d else k - d
        ph = omega_power(Fraction(s, m), d)
        lhs = ph * mpow(a2, 2 * k) + np.conj(ph) * mpow(a3, 2 * k)
        rhs = mpow(a2, k) @ mpow(a3, k) + mpow(a3, k) @ mpow(a2, k)
        worst = max(worst, frobenius(lhs - rhs))
    return worst


def _newid1_residual(a2, a3, m, d):
    worst = 0.0
    for x in range(1, d // 2 + 1):
        for t in range(4):
            lhs = np.trace(mpow(a2, x))
            rhs = omega_power(Fraction(2 * t * x, m), d) * np.trace(
                mpow(a2, (2 * t + 1) * x) @ mpow(a3, -2 * t * x))
            worst = max(worst, abs(lhs - rhs))
    return worst


def pair_relations(a2: np.ndarray, a3: np.ndarray, m: int, d: int) -> dict[str, float]:
    """Residuals of the trace and product relations every party's inputs 2 and 3 must obey."""
    return {"obs22": _obs22_residual(a2, a3, m, d),
            "obs23": _obs23_residual(a2, a3, m, d),
            "newid1": _newid1_residual(a2, a3, m, d)}


def combined_unitarity_residual(party: int, x: int, k: int, r: Realization,
                                coeffs: BellCoefficients | None = None) -> float:
    """Unitarity defect of the combined observable for party ``party`` at input ``x``.

    Odd positions (including party 1) combine ``A_x^k`` and ``A_{x+1}^k``; even
    positions combine ``A_x^{-k}`` and ``A_{x-1}^{-k}``.
    """
    m, d = r.scenario.m, r.scenario.d
    coeffs = coeffs or bell_coefficients(m, d)
    a, ac = coeffs.a[k], np.conj(coeffs.a[k])
    if party % 2:
        c = a * mpow(r.observable(party, x), k) + ac * mpow(r.observable(party, x + 1), k)
    else:
        c = a * mpow(r.observable(party, x), -k) + ac * mpow(r.observable(party, x - 1), -k)
    return frobenius(c.conj().T @ c - np.eye(c.shape[0]))


def selftest_relation_suite(r: Realization, tol: float = 1e-9,
                            coeffs: BellCoefficients | None = None) -> SosReport:
    """Every checkable relation: SOS identities for all variants, P and R residuals,
    traces of observable powers, combined-observable unitarity and the pair relations."""
    N, m, d = r.scenario.as_tuple()
    coeffs = coeffs or bell_coefficients(m, d)
    report = SosReport()
    op = bell_operator(r, coeffs)
    beta = beta_q_formula(r.scenario)
    eye = np.eye(op.matrix.shape[0])
    for n in range(1, N + 1):
        sos = sos_operator(n, r, coeffs, report)
        report.variant_residuals[n] = frobenius(beta * eye - op.matrix - sos)
        if n == 1:
            report.identity_residual = report.variant_residuals[1]
            report.sos_expectation = float(np.vdot(r.state, sos @ r.state).real)
    report.quantum_gap = beta - quantum_value(r.state, op)
    for i in range(1, N + 1):
        for x in range(1, m + 1):
            a = r.observables[i - 1][x - 1]
            for n in range(1, d):
                report.trace_table[(i, x, n)] = float(abs(np.trace(mpow(a, n))))
            for k in range(1, d):
                report.combined_unitarity[(i, x, k)] = combined_unitarity_residual(i, x, k, r, coeffs)
        rel = pair_relations(r.observable(i, 2), r.observable(i, 3), m, d)
        report.obs22[i], report.obs23[i], report.newid1[i] = rel["obs22"], rel["obs23"], rel["newid1"]
    return report


@dataclass(frozen=True)
class GhzStructureReport:
    off_pattern_mass: float
    diagonal_spread: float
    aux_state: np.ndarray | None
    verdict: bool


def verify_ghz_structure(state: np.ndarray, scenario: BellScenario, aux_dim: int = 1,
                         tol: float = 1e-9) -> GhzStructureReport:
    """Check that only all-indices-equal components ``psi_{i...i}`` survive and that they coincide.

    The state is read as ``(d,)*N`` system indices followed by one trailing
    auxiliary factor of dimension ``aux_dim``.
    """
    N, _, d = scenario.as_tuple()
    psi = np.asarray(state, dtype=complex).ravel()
    if aux_dim < 1 or psi.size != d**N * aux_dim:
        raise ValueError(f"state dimension {psi.size} != d^N * aux_dim = {d**N * aux_dim}")
    comps = psi.reshape((d,) * N + (aux_dim,))
    diag = np.stack([comps[(i,) * N] for i in range(d)])
    total = float(np.sum(np.abs(psi) ** 2))
    off = max(0.0, total - float(np.sum(np.abs(diag) ** 2)))
    spread = float(max(np.linalg.norm(diag[i] - diag[0]) for i in range(d)))
    ref = np.linalg.norm(diag[0])
    if ref < 1e-12:
        if off <= tol:
            raise DegenerateStateError("state is supported on the diagonal pattern but psi_{0...0} vanishes")
        return GhzStructureReport(off, spread, None, False)
    return GhzStructureReport(off, spread, diag[0] / ref, bool(off <= tol and spread <= tol))
