"""Independent reference computations used only by the tests.

Nothing here imports from ``seqsteer``: Kraus operators are built from
``(I +/- u.sigma)/2`` and outcome statistics come from branching the state
forward through each measurement.
"""
import itertools

import numpy as np

I2 = np.eye(2)
PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex)


def dot_sigma(u):
    return np.einsum("k,kij->ij", np.asarray(u, float), PAULI)


def proj(u, a):
    return (I2 + a * dot_sigma(u)) / 2


def kraus(u, theta, a):
    return np.cos(theta) * proj(u, a) + np.sin(theta) * proj(u, -a)


def singlet():
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return np.outer(psi, psi).astype(complex)


def branch_probabilities(rho, alice, bob):
    """Outcome probabilities by sequential state update.

    ``alice`` and ``bob`` are lists of ``(direction, theta)``; the last entry
    on each side is read out projectively. Returns a dict keyed by outcome
    tuples ``(a1..aN, b1..bM)`` with values in {+1, -1}.
    """
    steps = [(0, u, t, k == len(alice) - 1) for k, (u, t) in enumerate(alice)]
    steps += [(1, u, t, k == len(bob) - 1) for k, (u, t) in enumerate(bob)]
    out = {}
    for outcomes in itertools.product((1, -1), repeat=len(steps)):
        state = np.array(rho, dtype=complex)
        for (side, u, t, last), a in zip(steps, outcomes):
            op = proj(u, a) if last else kraus(u, t, a)
            full = np.kron(op, I2) if side == 0 else np.kron(I2, op)
            state = full @ state @ full.conj().T
        out[outcomes] = float(np.real(np.trace(state)))
    return out


def branch_correlation(rho, alice, bob, i, j):
    n = len(alice)
    probs = branch_probabilities(rho, alice, bob)
    return sum(o[i] * o[n + j] * p for o, p in probs.items())


def random_unit(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_density(rng, dim=4):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def brute_bound(directions):
    """Bound by per-sign-vector eigen-decomposition of the full 2x2 operator."""
    d = np.asarray(directions, float)
    n = len(d)
    best = -np.inf
    for signs in itertools.product((1, -1), repeat=n):
        op = sum(s * dot_sigma(u) for s, u in zip(signs, d)) / n
        best = max(best, np.linalg.eigvalsh(op)[-1])
    return best
