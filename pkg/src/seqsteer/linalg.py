"""Small dense complex linear algebra for single- and two-qubit operators.

Operators and density matrices are plain ``numpy`` arrays of shape ``(2, 2)``
or ``(4, 4)``; Bloch directions are real arrays of shape ``(3,)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-10
UNIT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SX, SY, SZ])


class BasisPair(NamedTuple):
    """Eigenvectors ``|k+>`` and ``|k->`` of ``k . sigma``."""

    plus: np.ndarray
    minus: np.ndarray


def as_matrix(m, dims=(2, 4)) -> np.ndarray:
    """Return ``m`` as a complex square matrix whose size is in ``dims``."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in dims:
        raise ValueError(f"expected a square matrix of size {dims}, got shape {arr.shape}")
    return arr


def as_bloch(v, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate a unit Bloch vector and return it as a float array."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"Bloch vector is not unit length (norm={norm!r})")
    return arr


def adjoint(m) -> np.ndarray:
    return np.conj(as_matrix(m)).T


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two single-qubit operators (``a`` scales ``b`` blocks)."""
    a = as_matrix(a, dims=(2,))
    b = as_matrix(b, dims=(2,))
    return np.kron(a, b)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def _checked_hermitian(m) -> np.ndarray:
    m = as_matrix(m)
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian within tolerance")
    return 0.5 * (m + m.conj().T)


def max_eig_2x2(a, d, b_re, b_im):
    """Largest eigenvalue of ``[[a, b], [conj(b), d]]``; vectorised over inputs."""
    half_tr = 0.5 * (a + d)
    half_diff = 0.5 * (a - d)
    return half_tr + np.sqrt(half_diff * half_diff + b_re * b_re + b_im * b_im)


def hermitian_max_eigenvalue(m) -> float:
    """Largest eigenvalue of a Hermitian 2x2 or 4x4 matrix.

    The input is symmetrised before solving. Qubit operators use the closed
    form; two-qubit operators go through LAPACK's ``eigvalsh``.
    """
    h = _checked_hermitian(m)
    if h.shape[0] == 2:
        return float(max_eig_2x2(h[0, 0].real, h[1, 1].real, h[0, 1].real, h[0, 1].imag))
    return float(np.linalg.eigvalsh(h)[-1])


def hermitian_min_eigenvalue(m) -> float:
    return -hermitian_max_eigenvalue(-as_matrix(m))


def bloch_operator(v) -> np.ndarray:
    """``v . sigma`` for a Bloch vector ``v``."""
    v = np.asarray(v, dtype=float)
    return np.tensordot(v, PAULIS, axes=1)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # first component with non-negligible magnitude made real and non-negative
    for c in vec:
        if abs(c) > 1e-12:
            return vec * (abs(c) / c)
    return vec


def bloch_to_basis(v) -> BasisPair:
    """Eigenbasis of ``v . sigma`` for a unit Bloch vector.

    Uses the polar form ``|k+> = (cos t/2, e^{i phi} sin t/2)`` and
    ``|k-> = (sin t/2, -e^{i phi} cos t/2)``, then fixes each global phase
    so the first non-zero component is real and non-negative.
    """
    x, y, z = as_bloch(v)
    theta = np.arctan2(np.hypot(x, y), z)
    phase = np.exp(1j * np.arctan2(y, x))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    plus = np.array([c, phase * s], dtype=complex)
    minus = np.array([s, -phase * c], dtype=complex)
    return BasisPair(_fix_phase(plus), _fix_phase(minus))


def outer(u, w=None) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    w = u if w is None else np.asarray(w, dtype=complex)
    return np.outer(u, w.conj())


def bloch_vector(rho) -> np.ndarray:
    """Bloch vector ``(Tr[rho X], Tr[rho Y], Tr[rho Z])`` of a qubit operator."""
    rho = as_matrix(rho, dims=(2,))
    return np.real(np.einsum("kij,ji->k", PAULIS, rho))
