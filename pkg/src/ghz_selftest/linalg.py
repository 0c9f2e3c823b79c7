"""Dense complex linear algebra used throughout the package.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
Tensor products follow the Kronecker convention with the first factor
owning the most significant index, so party 1 is always leftmost.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class ContractError(ValueError):
    """An input violated a numerical precondition (e.g. non-Hermitian)."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def tensor_product(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of ``factors``; the first factor is most significant."""
    if len(factors) == 0:
        raise ValueError("tensor_product needs at least one factor")
    return reduce(np.kron, [as_matrix(f) if np.ndim(f) == 2 else np.asarray(f, dtype=complex)
                            for f in factors])


def mpow(a: np.ndarray, n: int) -> np.ndarray:
    """Integer matrix power. Negative powers use the adjoint, so ``a`` must be unitary."""
    if n >= 0:
        return np.linalg.matrix_power(a, n)
    return np.linalg.matrix_power(dagger(a), -n)


def hermiticity_residual(m: np.ndarray) -> float:
    return frobenius(m - dagger(m))


def hermitian_spectrum(m: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns) of a Hermitian matrix.

    Raises ContractError when ``||M - M^dag||_F > tol * ||M||_F``.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    asym = hermiticity_residual(m)
    scale = frobenius(m)
    if asym > tol * max(scale, 1.0):
        raise ContractError(f"matrix is not Hermitian: ||M - M^dag||_F = {asym:.3e}")
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    return vals, vecs


def max_eigenvalue(m: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    return float(hermitian_spectrum(m, tol)[0][-1])


@dataclass(frozen=True)
class RootOfUnityReport:
    is_unitary: bool
    order_d_holds: bool
    max_residual: float

    @property
    def ok(self) -> bool:
        return self.is_unitary and self.order_d_holds


def check_root_of_unity_observable(a: np.ndarray, d: int, tol: float = DEFAULT_TOL) -> RootOfUnityReport:
    """Check that ``a`` is unitary with ``a**d == 1`` (a valid d-outcome observable)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"observable must be square, got {a.shape}")
    eye = np.eye(a.shape[0])
    unitary_res = frobenius(dagger(a) @ a - eye)
    order_res = frobenius(np.linalg.matrix_power(a, d) - eye)
    return RootOfUnityReport(unitary_res <= tol, order_res <= tol, max(unitary_res, order_res))


def apply_local(state: np.ndarray, ops: Sequence[np.ndarray | None], dims: Sequence[int]) -> np.ndarray:
    """Apply ``ops[i]`` to tensor slot ``i`` of ``state`` without forming the full Kronecker product.

    ``None`` entries act as the identity. Each op may carry leading batch axes
    (shape ``(*batch, D, D)``); batch axes are prepended to the result in
    slot order.
    """
    psi = np.asarray(state, dtype=complex).reshape(dims)
    n_batch = 0
    for slot, op in enumerate(ops):
        if op is None:
            continue
        op = np.asarray(op)
        nb = op.ndim - 2
        axis = n_batch + slot
        psi = np.tensordot(op, psi, axes=([op.ndim - 1], [axis]))
        # tensordot puts op's batch + output axes first; move output axis back to its slot
        psi = np.moveaxis(psi, nb, nb + axis)
        # batch axes of this op now sit in front of the earlier batch axes; reorder
        if nb:
            order = list(range(nb, nb + n_batch)) + list(range(nb)) + list(range(nb + n_batch, psi.ndim))
            psi = psi.transpose(order)
        n_batch += nb
    return psi


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
