"""Concrete d x d matrices: Fourier and clock matrices, ideal party observables,
Bell coefficients, the canonical pair (Z_d, T_{d,m}) and extraction unitaries.

All phases are computed from exact rational exponents via ``omega_power``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .linalg import check_root_of_unity_observable, dagger
from .scenario import omega_power, resolve_observable_index

PARTY_CLASSES = ("first", "second", "odd", "even")


def _check_d(d: int) -> None:
    if not isinstance(d, int) or d < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")


def _check_x(x: int, m: int) -> None:
    if not isinstance(x, int) or not 1 <= x <= m:
        raise ValueError(f"input x={x!r} outside 1..{m}")


def party_class(i: int) -> str:
    """Class of party ``i`` (1-based): first, second, then odd/even by position."""
    if i < 1:
        raise ValueError(f"party index must be >= 1, got {i}")
    if i == 1:
        return "first"
    if i == 2:
        return "second"
    return "odd" if i % 2 else "even"


# measurement parameters, exact rationals
def gamma(x: int, m: int) -> Fraction:
    return (Fraction(x) - Fraction(1, 2)) / m


def zeta(x: int, m: int) -> Fraction:
    return Fraction(x, m)


def theta(x: int, m: int) -> Fraction:
    return Fraction(x - 1, m)


_CLASS_PARAM = {"first": gamma, "second": zeta, "odd": theta, "even": theta}


@dataclass(frozen=True)
class QuditObservable:
    matrix: np.ndarray
    d: int
    label: str = ""

    def __post_init__(self):
        # unitarity is held to 1e-10, the order-d condition to 1e-9
        unitary = check_root_of_unity_observable(self.matrix, self.d, tol=1e-10).is_unitary
        rep = check_root_of_unity_observable(self.matrix, self.d, tol=1e-9)
        if not (unitary and rep.order_d_holds):
            raise ValueError(f"{self.label or 'observable'} is not a d={self.d} root-of-unity "
                             f"unitary (residual {rep.max_residual:.3e})")


def fourier_matrix(d: int) -> np.ndarray:
    _check_d(d)
    f = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            f[i, j] = omega_power(i * j, d)
    return f / math.sqrt(d)


def clock_matrix(d: int) -> np.ndarray:
    _check_d(d)
    return np.diag([omega_power(i, d) for i in range(d)])


def phase_unitary(kind: str, x: int, m: int, d: int) -> np.ndarray:
    """Diagonal phase unitaries: U has ``omega^{-j gamma}``, V ``omega^{+j zeta}``, W ``omega^{-j theta}``."""
    _check_d(d)
    _check_x(x, m)
    if kind == "U":
        exps = [-j * gamma(x, m) for j in range(d)]
    elif kind == "V":
        exps = [j * zeta(x, m) for j in range(d)]
    elif kind == "W":
        exps = [-j * theta(x, m) for j in range(d)]
    else:
        raise ValueError(f"unknown phase unitary kind {kind!r}; expected U, V or W")
    return np.diag([omega_power(e, d) for e in exps])


def _check_class(cls: str) -> None:
    if cls not in PARTY_CLASSES:
        raise ValueError(f"unknown party class {cls!r}; expected one of {PARTY_CLASSES}")


def fourier_observable_matrix(cls: str, x: int, m: int, d: int) -> np.ndarray:
    """Ideal observable built by conjugating the clock matrix with Fourier and phase unitaries."""
    _check_class(cls)
    _check_x(x, m)
    f = fourier_matrix(d)
    om = clock_matrix(d)
    if cls == "first":
        u = phase_unitary("U", x, m, d)
        return u @ f @ om @ dagger(f) @ dagger(u)
    if cls == "second":
        v = phase_unitary("V", x, m, d)
        return v @ dagger(f) @ om @ f @ dagger(v)
    w = phase_unitary("W", x, m, d)
    if cls == "odd":
        return w @ f @ om @ dagger(f) @ dagger(w)
    return dagger(w) @ dagger(f) @ om @ f @ w


def band_observable_matrix(cls: str, x: int, m: int, d: int) -> np.ndarray:
    """Same observable written as a cyclic band matrix.

    first/odd parties carry ``|i><i+1|`` entries, second/even ``|i+1><i|``;
    the wrap-around entry has phase ``omega^{(1-d) p}`` with ``p`` the class parameter.
    """
    _check_class(cls)
    _check_x(x, m)
    _check_d(d)
    p = _CLASS_PARAM[cls](x, m)
    mat = np.zeros((d, d), dtype=complex)
    step = omega_power(p, d)
    wrap = omega_power((1 - d) * p, d)
    upper = cls in ("first", "odd")
    for i in range(d - 1):
        if upper:
            mat[i, i + 1] = step
        else:
            mat[i + 1, i] = step
    if upper:
        mat[d - 1, 0] = wrap
    else:
        mat[0, d - 1] = wrap
    return mat


def ideal_observable(cls: str, x: int, m: int, d: int, path: str = "fourier") -> QuditObservable:
    if path == "fourier":
        mat = fourier_observable_matrix(cls, x, m, d)
    elif path == "band":
        mat = band_observable_matrix(cls, x, m, d)
    else:
        raise ValueError(f"unknown construction path {path!r}")
    return QuditObservable(mat, d, f"O[{cls},x={x},m={m}] via {path}")


def resolved_ideal_matrix(cls: str, x: int, m: int, d: int) -> np.ndarray:
    """Ideal observable for any index in ``[0, 2m]`` using the cyclic phase convention."""
    r = resolve_observable_index(x, m)
    return omega_power(r.phase_exponent, d) * fourier_observable_matrix(cls, r.base_input, m, d)


@dataclass(frozen=True)
class BellCoefficients:
    """``a[k]`` for k in 1..d-1 and ``mu_nu_tau[(alpha, k)]`` for alpha in 1..m-2."""

    m: int
    d: int
    a: dict[int, complex]
    mu_nu_tau: dict[tuple[int, int], tuple[complex, complex, complex]] = field(default_factory=dict)

    def zeroed(self) -> "BellCoefficients":
        """Copy with every a_k set to zero (the trivial functional)."""
        return BellCoefficients(self.m, self.d, {k: 0j for k in self.a}, dict(self.mu_nu_tau))


def bell_coefficients(m: int, d: int) -> BellCoefficients:
    if m < 2 or d < 2:
        raise ValueError("m and d must be >= 2")
    c = 2 * math.cos(math.pi / (2 * m))
    a = {k: omega_power(Fraction(2 * k - d, 4 * m), d) / c for k in range(1, d)}
    s = math.sin
    table = {}
    for alpha in range(1, m - 1):
        for k in range(1, d):
            if alpha <= m - 3:
                mu = (omega_power(Fraction((alpha + 1) * (d - 2 * k), 2 * m), d) / c
                      * s(math.pi / m) / math.sqrt(s(math.pi * alpha / m) * s(math.pi * (alpha + 1) / m)))
                nu = (-omega_power(Fraction(d - 2 * k, 2 * m), d) / c
                      * math.sqrt(s(math.pi * (alpha + 1) / m)) / math.sqrt(s(math.pi * alpha / m)))
                tau = 1 / c * math.sqrt(s(math.pi * alpha / m)) / math.sqrt(s(math.pi * (alpha + 1) / m))
            else:
                root = math.sqrt(2 * math.cos(math.pi / m))
                mu = -omega_power(-k - Fraction(d - 2 * k, 2 * m), d) / (c * root)
                nu = -omega_power(Fraction(d - 2 * k, 2 * m), d) / (c * root)
                tau = root / c
            table[(alpha, k)] = (complex(mu), complex(nu), complex(tau))
    return BellCoefficients(m, d, a, table)


def canonical_pair(d: int, m: int) -> tuple[QuditObservable, QuditObservable]:
    """The pair (Z_d, T_{d,m}) that every party's inputs 2 and 3 reduce to."""
    _check_d(d)
    if m < 2:
        raise ValueError("m must be >= 2")
    z = clock_matrix(d)
    t = np.diag([omega_power(i + Fraction(1, m), d) for i in range(d)]).astype(complex)
    pref = 2j / d * math.sin(math.pi / m)
    for i in range(d):
        for j in range(d):
            sign = (-1) ** ((i == 0) + (j == 0))
            t[i, j] -= pref * sign * omega_power(Fraction(i + j, 2) - Fraction(d - 2, 2 * m), d)
    return QuditObservable(z, d, "Z_d"), QuditObservable(t, d, f"T_{{{d},{m}}}")


def t_eigenvector(r: int, d: int, m: int) -> np.ndarray:
    """Eigenvector of T_{d,m} with eigenvalue ``omega**r`` (already unit norm)."""
    _check_d(d)
    if not isinstance(r, int) or not 0 <= r < d:
        raise ValueError(f"r={r!r} outside 0..{d - 1}")
    pref = 2j / d * math.sin(math.pi / m) * omega_power(Fraction(-d, 2 * m), d)
    v = np.empty(d, dtype=complex)
    for q in range(d):
        sign = -1 if q == 0 else 1
        v[q] = sign * omega_power(Fraction(-q, 2), d) / (1 - omega_power(r - q - Fraction(1, m), d))
    return pref * v


_W_LINEAR = {"first": (-3, 2), "second": (-2, 1), "odd": (-1, 1), "even": (-1, 1)}


def extraction_unitary(cls: str, m: int, d: int) -> np.ndarray:
    """Unitary W with ``W Z_d W^dag = O_{cls,2}`` and ``W T_{d,m} W^dag = O_{cls,3}``."""
    _check_class(cls)
    _check_d(d)
    num, den = _W_LINEAR[cls]
    flip = cls in ("second", "even")
    w = np.zeros((d, d), dtype=complex)
    for i in range(d):
        row = d - 1 - i if flip else i
        for j in range(d):
            sign = -1 if j == 0 else 1
            w[row, j] = sign * omega_power(Fraction(num * i, den * m) + i * j + Fraction(j, 2), d)
    return w / math.sqrt(d)
