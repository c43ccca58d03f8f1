"""Exact statistics of two-sided sequential measurement chains.

One two-qubit state is shared between a chain of Alices (qubit A) and a chain
of Bobs (qubit B). Every observer draws a setting uniformly from their own
family; all but the last observer on a side measure weakly and pass the
qubit on, the last one measures projectively.

Indices are zero-based: ``alice[0]`` is the first Alice. Outcome axes use
index 0 for +1 and index 1 for -1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .linalg import as_matrix, hermitian_min_eigenvalue
from .measurement import (
    MeasurementSetting,
    check_theta,
    kraus_pair,
    side_chain_operator,
    strength_factors,
)
from .settings import SettingFamily, antipode, chsh_families

OUTCOMES = (1, -1)
_SIGNS = np.array(OUTCOMES, dtype=float)


def singlet() -> np.ndarray:
    """Density matrix of ``(|01> - |10>)/sqrt2``."""
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def check_state(rho, tol: float = 1e-12) -> np.ndarray:
    """Validate a two-qubit density matrix (unit trace, Hermitian, PSD)."""
    rho = as_matrix(rho, dims=(4,))
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"state is not normalised (trace={tr!r})")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("state is not Hermitian")
    if hermitian_min_eigenvalue(rho) < -tol:
        raise ValueError("state is not positive semidefinite")
    return rho


def _as_family(family) -> SettingFamily:
    if isinstance(family, SettingFamily):
        return family
    return SettingFamily("custom", family)


@dataclass(frozen=True, eq=False)
class Observer:
    """One observer: a setting family and a measurement strength."""

    family: SettingFamily
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "family", _as_family(self.family))
        object.__setattr__(self, "theta", check_theta(self.theta))

    def setting(self, index: int) -> MeasurementSetting:
        return MeasurementSetting(self.family.directions[index], self.theta)

    @cached_property
    def kraus(self) -> np.ndarray:
        """Kraus operators, shape ``(n_settings, 2 outcomes, 2, 2)``."""
        return np.array([kraus_pair(self.setting(i)) for i in range(self.family.n)])

    @cached_property
    def effects(self) -> np.ndarray:
        """``sum_a a M_a^dag M_a`` per setting; the projective readout if theta is 0."""
        k = self.kraus
        return np.einsum("a,saji,sajk->sik", _SIGNS, k.conj(), k)

    @property
    def factors(self):
        return strength_factors(self.theta)


@dataclass(frozen=True, eq=False)
class ObserverChain:
    """Alice and Bob measurement chains.

    With ``paired=True`` the k-th Alice and the k-th Bob always share their
    setting index, as in a steering test where Bob announces the setting and
    Alice measures along it. Otherwise every observer draws independently.
    """

    alice: tuple
    bob: tuple
    paired: bool = False
    _slots: tuple = field(init=False, repr=False)

    def __post_init__(self):
        alice = tuple(o if isinstance(o, Observer) else Observer(*o) for o in self.alice)
        bob = tuple(o if isinstance(o, Observer) else Observer(*o) for o in self.bob)
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)
        for side, name in ((alice, "Alice"), (bob, "Bob")):
            if not side:
                raise ValueError(f"{name} side of the chain is empty")
            if side[-1].theta != 0.0:
                raise ValueError(f"last {name} must measure projectively (theta=0)")
        sizes = [o.family.n for o in alice]
        bob_slots = []
        for k, o in enumerate(bob):
            if self.paired and k < len(alice):
                if o.family.n != alice[k].family.n:
                    raise ValueError(f"paired observers at position {k} have different family sizes")
                bob_slots.append(k)
            else:
                bob_slots.append(len(sizes))
                sizes.append(o.family.n)
        object.__setattr__(self, "_slots", (tuple(sizes), tuple(range(len(alice))), tuple(bob_slots)))

    @property
    def n_alice(self) -> int:
        return len(self.alice)

    @property
    def n_bob(self) -> int:
        return len(self.bob)

    def assignments(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
        """All setting-index combinations ``(alice_idx, bob_idx)`` of equal probability."""
        sizes, a_slots, b_slots = self._slots
        for combo in itertools.product(*(range(s) for s in sizes)):
            yield tuple(combo[s] for s in a_slots), tuple(combo[s] for s in b_slots)

    def conditional_assignments(self, i: int, j: int, xi: int, yj: int):
        """Assignments with Alice ``i`` on setting ``xi`` and Bob ``j`` on ``yj``."""
        self._check_pair(i, j, xi, yj)
        sizes, a_slots, b_slots = self._slots
        if a_slots[i] == b_slots[j] and xi != yj:
            raise ValueError(f"Alice {i} and Bob {j} share a setting; xi={xi} and yj={yj} never co-occur")
        out = [(a, b) for a, b in self.assignments() if a[i] == xi and b[j] == yj]
        return out

    def _check_pair(self, i, j, xi, yj):
        if not 0 <= i < self.n_alice:
            raise IndexError(f"Alice index {i} out of range for {self.n_alice} Alices")
        if not 0 <= j < self.n_bob:
            raise IndexError(f"Bob index {j} out of range for {self.n_bob} Bobs")
        if not 0 <= xi < self.alice[i].family.n:
            raise IndexError(f"setting {xi} out of range for Alice {i}")
        if not 0 <= yj < self.bob[j].family.n:
            raise IndexError(f"setting {yj} out of range for Bob {j}")

    def settings(self, alice_idx, bob_idx):
        return (
            [o.setting(k) for o, k in zip(self.alice, alice_idx)],
            [o.setting(k) for o, k in zip(self.bob, bob_idx)],
        )


def steering_chain(family1, family2, theta_a1: float, theta_b1: float) -> ObserverChain:
    """Two Alices and two Bobs in the steering configuration.

    The first pair measures weakly along ``family1`` and the second pair
    projectively along ``family2``. Alices use the antipodes of Bob's
    directions so that singlet correlations come out positive.
    """
    f1, f2 = _as_family(family1), _as_family(family2)
    return ObserverChain(
        alice=(Observer(antipode(f1), theta_a1), Observer(antipode(f2), 0.0)),
        bob=(Observer(f1, theta_b1), Observer(f2, 0.0)),
        paired=True,
    )


def chsh_chain(thetas_a: Sequence[float], thetas_b: Sequence[float]) -> ObserverChain:
    """Chains where every Alice uses the CHSH Alice pair and every Bob the Bob pair.

    The last entries of ``thetas_a`` and ``thetas_b`` must be 0.
    """
    fa, fb = chsh_families()
    return ObserverChain(
        alice=tuple(Observer(fa, t) for t in thetas_a),
        bob=tuple(Observer(fb, t) for t in thetas_b),
    )


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Outcome probabilities for fixed settings.

    ``probs`` has one axis of length 2 per observer, Alices first.
    """

    probs: np.ndarray
    n_alice: int
    n_bob: int

    def marginal(self, alice: Sequence[int] = (), bob: Sequence[int] = ()) -> np.ndarray:
        keep = list(alice) + [self.n_alice + j for j in bob]
        drop = tuple(ax for ax in range(self.probs.ndim) if ax not in keep)
        out = self.probs.sum(axis=drop)
        # summed axes keep their relative order; reorder to the requested one
        order = sorted(keep)
        return np.transpose(out, [order.index(k) for k in keep]) if keep else out

    def correlation(self, i: int, j: int) -> float:
        """``sum a_i b_j P(a_i, b_j)``."""
        p = self.marginal([i], [j])
        return float(_SIGNS @ p @ _SIGNS)

    def outcome_strings(self) -> list[str]:
        """Labels like ``'+-|-+'`` in the flattened (C) order of ``probs``."""
        labels = []
        for idx in itertools.product((0, 1), repeat=self.n_alice + self.n_bob):
            chars = "".join("+-"[k] for k in idx)
            labels.append(chars[: self.n_alice] + "|" + chars[self.n_alice :])
        return labels


def _side_effects(settings) -> np.ndarray:
    n = len(settings)
    return np.array([side_chain_operator(settings, [OUTCOMES[k] for k in idx])
                     for idx in itertools.product((0, 1), repeat=n)])


def joint_distribution(state, alice_settings, bob_settings) -> JointDistribution:
    """Probabilities ``Tr[(H_A (x) H_B) rho]`` for every outcome string."""
    rho = check_state(state)
    for side, name in ((alice_settings, "Alice"), (bob_settings, "Bob")):
        if not side:
            raise ValueError(f"no {name} settings given")
        if side[-1].theta != 0.0:
            raise ValueError(f"last {name} setting must be projective")
    ha = _side_effects(alice_settings)
    hb = _side_effects(bob_settings)
    rho4 = rho.reshape(2, 2, 2, 2)
    p = np.real(np.einsum("aik,bjl,klij->ab", ha, hb, rho4))
    if p.min() < -1e-15:
        raise ArithmeticError(f"negative probability {p.min()!r}")
    p = np.clip(p, 0.0, None)
    n, m = len(alice_settings), len(bob_settings)
    return JointDistribution(p.reshape((2,) * (n + m)), n, m)


def chain_distribution(state, chain: ObserverChain, alice_idx, bob_idx) -> JointDistribution:
    return joint_distribution(state, *chain.settings(alice_idx, bob_idx))


def pair_correlation(state, chain: ObserverChain, i: int, j: int, xi: int, yj: int) -> float:
    """Correlation of Alice ``i`` and Bob ``j`` by direct summation of ``a b P``.

    Every other observer's setting is averaged uniformly (respecting pairing).
    """
    combos = chain.conditional_assignments(i, j, xi, yj)
    total = 0.0
    for a_idx, b_idx in combos:
        total += chain_distribution(state, chain, a_idx, b_idx).correlation(i, j)
    return total / len(combos)


def _side_observable(observers, idx, target: int) -> np.ndarray:
    # Heisenberg picture: pull the target's signed effect back through the
    # non-selective channels of the observers before it.
    op = observers[target].effects[idx[target]]
    for k in range(target - 1, -1, -1):
        m = observers[k].kraus[idx[k]]
        op = np.einsum("aji,jk,akl->il", m.conj(), op, m)
    return op


def correlation_observable(chain: ObserverChain, i: int, j: int, xi: int, yj: int) -> np.ndarray:
    """Two-qubit observable ``W`` with ``Tr[W rho]`` equal to the pair correlation."""
    combos = chain.conditional_assignments(i, j, xi, yj)
    cache_a: dict = {}
    cache_b: dict = {}
    ops_a, ops_b = [], []
    for a_idx, b_idx in combos:
        ka, kb = a_idx[: i + 1], b_idx[: j + 1]
        if ka not in cache_a:
            cache_a[ka] = _side_observable(chain.alice, ka, i)
        if kb not in cache_b:
            cache_b[kb] = _side_observable(chain.bob, kb, j)
        ops_a.append(cache_a[ka])
        ops_b.append(cache_b[kb])
    # mean of kron(A_c, B_c) over combinations
    w = np.einsum("cij,ckl->ikjl", np.array(ops_a), np.array(ops_b)).reshape(4, 4) / len(combos)
    return 0.5 * (w + w.conj().T)


def observable_correlation(state, chain: ObserverChain, i: int, j: int, xi: int, yj: int) -> float:
    rho = check_state(state)
    return float(np.real(np.trace(correlation_observable(chain, i, j, xi, yj) @ rho)))


def steering_correlations(state, chain: ObserverChain, i: int, j: int, direct: bool = False) -> np.ndarray:
    """Matched-setting correlations ``C(x^m, y^m)`` for ``m = 0..n-1``."""
    n = chain.alice[i].family.n
    if chain.bob[j].family.n != n:
        raise ValueError("steering needs the same number of settings on both sides")
    corr = pair_correlation if direct else observable_correlation
    return np.array([corr(state, chain, i, j, m, m) for m in range(n)])


def steering_value(state, chain: ObserverChain, i: int, j: int, direct: bool = False) -> float:
    from .nonlocality import steering_quantity

    return steering_quantity(steering_correlations(state, chain, i, j, direct=direct))


def chsh_correlations(state, chain: ObserverChain, i: int, j: int, direct: bool = False) -> np.ndarray:
    """2x2 table ``C[x, y]`` for the CHSH settings of Alice ``i`` and Bob ``j``."""
    corr = pair_correlation if direct else observable_correlation
    return np.array([[corr(state, chain, i, j, x, y) for y in range(2)] for x in range(2)])


def chsh_value(state, chain: ObserverChain, i: int, j: int, direct: bool = False) -> float:
    from .nonlocality import chsh_quantity

    c = chsh_correlations(state, chain, i, j, direct=direct)
    return chsh_quantity(c[0, 0], c[0, 1], c[1, 0], c[1, 1])


def post_first_round_state(state, family, theta_a: float, theta_b: float) -> np.ndarray:
    """Average state after the first Alice and Bob measure along a shared setting.

    Bob measures along each direction ``k`` of ``family`` with probability
    ``1/n`` and Alice along ``-k``; both outcomes are discarded.
    """
    rho = check_state(state)
    fam = _as_family(family)
    alice = Observer(antipode(fam), theta_a)
    bob = Observer(fam, theta_b)
    out = np.zeros((4, 4), dtype=complex)
    for k in range(fam.n):
        for ma in alice.kraus[k]:
            for mb in bob.kraus[k]:
                op = np.kron(ma, mb)
                out += op @ rho @ op.conj().T
    out /= fam.n
    return 0.5 * (out + out.conj().T)


def projective_steering(state, family) -> float:
    """Steering quantity of ``state`` with one projective observer per side."""
    fam = _as_family(family)
    chain = ObserverChain((Observer(antipode(fam)),), (Observer(fam),), paired=True)
    return steering_value(state, chain, 0, 0)
