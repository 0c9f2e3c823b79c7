"""Numerical verification of the multipartite GHZ Bell inequality and its self-testing certificate."""
from .bell import (BellOperatorMatrix, CorrelatorTable, ProbabilityTable, Realization, bell_operator,
                   bell_value_from_correlators, born_probabilities, correlators_from_probabilities,
                   ghz_state, ideal_realization, quantum_value)
from .bounds import BoundsResult, VisibilityPoint, local_bound, spectral_bound, visibility_sweep
from .observables import (QuditObservable, bell_coefficients, canonical_pair, extraction_unitary,
                          ideal_observable, t_eigenvector)
from .scenario import BellScenario, DeterministicStrategy, enumerate_strategies, resolve_observable_index
from .sos import SosReport, selftest_relation_suite, verify_ghz_structure, verify_sos_identity

__all__ = [
    "BellOperatorMatrix",
    "CorrelatorTable",
    "ProbabilityTable",
    "Realization",
    "bell_operator",
    "bell_value_from_correlators",
    "born_probabilities",
    "correlators_from_probabilities",
    "ghz_state",
    "ideal_realization",
    "quantum_value",
    "BoundsResult",
    "VisibilityPoint",
    "local_bound",
    "spectral_bound",
    "visibility_sweep",
    "QuditObservable",
    "bell_coefficients",
    "canonical_pair",
    "extraction_unitary",
    "ideal_observable",
    "t_eigenvector",
    "BellScenario",
    "DeterministicStrategy",
    "enumerate_strategies",
    "resolve_observable_index",
    "SosReport",
    "selftest_relation_suite",
    "verify_ghz_structure",
    "verify_sos_identity",
]

__version__ = "0.1.0"
