"""Scenario bookkeeping: (N, m, d), cyclic input indices and deterministic strategies."""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

DEFAULT_STRATEGY_CAP = 10**8


class ResourceCapExceeded(RuntimeError):
    """A requested enumeration or matrix would exceed its configured size cap."""

    def __init__(self, message: str, count: int, cap: int):
        super().__init__(message)
        self.count = count
        self.cap = cap


def omega_power(q, d: int) -> complex:
    """``omega**q`` with ``omega = exp(2 pi i / d)`` for rational (or integer) ``q``.

    The exponent is reduced modulo ``d`` exactly before conversion to floating point.
    """
    frac = Fraction(q) / d
    frac -= frac.numerator // frac.denominator
    if frac == 0:
        return 1.0 + 0.0j
    return cmath.exp(2j * cmath.pi * float(frac))


@dataclass(frozen=True)
class BellScenario:
    N: int
    m: int
    d: int

    def __post_init__(self):
        for name in ("N", "m", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v!r}")

    @property
    def total_dim(self) -> int:
        return self.d**self.N

    @property
    def strategy_count(self) -> int:
        return self.d ** (self.N * self.m)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.N, self.m, self.d)


@dataclass(frozen=True)
class ResolvedIndex:
    """Input ``x`` written as ``omega**phase_exponent`` times input ``base_input``."""

    base_input: int
    phase_exponent: Fraction


def resolve_observable_index(x: int, m: int) -> ResolvedIndex:
    """Map an input index onto ``1..m`` using ``A_{m+j} = omega A_j`` and ``A_0 = omega^-1 A_m``.

    Accepts ``x`` in ``[0, 2m]``; middle parties of the Bell operator see
    indices ``alpha_{i-1} + alpha_i - 1`` up to ``2m - 1``.
    """
    if not isinstance(x, int) or x < 0 or x > 2 * m:
        raise ValueError(f"input index {x!r} outside [0, {2 * m}] for m={m}")
    q, r = divmod(x - 1, m)
    return ResolvedIndex(r + 1, Fraction(q))


@dataclass(frozen=True)
class DeterministicStrategy:
    """Deterministic response table: ``outputs[i][x]`` is party ``i+1``'s outcome on input ``x+1``."""

    outputs: tuple[tuple[int, ...], ...]

    def output(self, party: int, x: int) -> int:
        """1-based party and input."""
        return self.outputs[party - 1][x - 1]

    def flattened(self) -> list[int]:
        return [a for row in self.outputs for a in row]

    @classmethod
    def from_flat(cls, flat: Sequence[int], scenario: BellScenario) -> "DeterministicStrategy":
        N, m, d = scenario.as_tuple()
        if len(flat) != N * m:
            raise ValueError(f"expected {N * m} outcomes, got {len(flat)}")
        if any(not 0 <= a < d for a in flat):
            raise ValueError(f"outcomes must lie in 0..{d - 1}")
        return cls(tuple(tuple(int(a) for a in flat[i * m:(i + 1) * m]) for i in range(N)))

    @classmethod
    def from_index(cls, index: int, scenario: BellScenario) -> "DeterministicStrategy":
        """Strategy number ``index`` in lexicographic order of the flattened table."""
        n = scenario.N * scenario.m
        if not 0 <= index < scenario.strategy_count:
            raise ValueError(f"strategy index {index} out of range")
        digits = []
        for _ in range(n):
            index, r = divmod(index, scenario.d)
            digits.append(r)
        return cls.from_flat(digits[::-1], scenario)


def check_strategy_cap(scenario: BellScenario, cap: int = DEFAULT_STRATEGY_CAP) -> None:
    count = scenario.strategy_count
    if count > cap:
        raise ResourceCapExceeded(
            f"{count} deterministic strategies exceed the enumeration cap {cap}; "
            f"shard the index range or raise the cap",
            count, cap)


def enumerate_strategies(scenario: BellScenario, start: int = 0, stop: int | None = None,
                         cap: int = DEFAULT_STRATEGY_CAP) -> Iterator[DeterministicStrategy]:
    """Stream strategies ``start..stop-1`` in lexicographic order of the flattened table.

    Any contiguous index range can be enumerated independently, which is how
    shards are split across workers.
    """
    check_strategy_cap(scenario, cap)
    total = scenario.strategy_count
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    first = DeterministicStrategy.from_index(start, scenario).flattened()
    for flat in _product_from(first, scenario.d, stop - start):
        yield DeterministicStrategy.from_flat(flat, scenario)


def _product_from(first: list[int], d: int, count: int) -> Iterator[tuple[int, ...]]:
    digits = list(first)
    for _ in range(count):
        yield tuple(digits)
        pos = len(digits) - 1
        while pos >= 0:
            digits[pos] += 1
            if digits[pos] < d:
                break
            digits[pos] = 0
            pos -= 1


def strategy_correlator(strategy: DeterministicStrategy, inputs: Sequence[int],
                        powers: Sequence[int], d: int) -> complex:
    """``omega**(sum_i a_i k_i)`` where ``a_i`` is party i's outcome on ``inputs[i]`` (1-based)."""
    if len(inputs) != len(strategy.outputs) or len(powers) != len(inputs):
        raise ValueError("inputs and powers must have one entry per party")
    total = 0
    for party, (x, k) in enumerate(zip(inputs, powers), start=1):
        if not 0 <= k < d:
            raise ValueError(f"power {k} outside 0..{d - 1}")
        total += strategy.output(party, x) * k
    return omega_power(total, d)
