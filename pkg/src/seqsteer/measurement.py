"""Unbiased optimal weak measurements on a qubit.

A measurement along Bloch direction ``k`` with strength ``theta`` has Kraus
operators ``M(+) = cos(theta) P+ + sin(theta) P-`` and
``M(-) = cos(theta) P- + sin(theta) P+``. ``theta = 0`` is projective and
``theta = pi/4`` leaves the state untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import I2, as_bloch, as_matrix, bloch_to_basis, hermitian_min_eigenvalue, outer

THETA_MAX = np.pi / 4


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 <= theta <= THETA_MAX) or np.isnan(theta):
        raise ValueError(f"measurement strength theta={theta!r} outside [0, pi/4]")
    return theta


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    """A measurement direction together with its strength ``theta``."""

    direction: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "direction", as_bloch(self.direction))
        object.__setattr__(self, "theta", check_theta(self.theta))

    @property
    def is_projective(self) -> bool:
        return self.theta == 0.0

    def __repr__(self):
        x, y, z = self.direction
        return f"MeasurementSetting(direction=({x:.6g}, {y:.6g}, {z:.6g}), theta={self.theta:.6g})"


class KrausPair(NamedTuple):
    m_plus: np.ndarray
    m_minus: np.ndarray


class StrengthFactors(NamedTuple):
    """Quality factor ``f = sin 2theta`` and information gain ``g = cos 2theta``."""

    f: float
    g: float


def strength_factors(theta: float) -> StrengthFactors:
    theta = check_theta(theta)
    return StrengthFactors(float(np.sin(2 * theta)), float(np.cos(2 * theta)))


def theta_from_g(g: float) -> float:
    """Inverse of ``g = cos 2theta`` on ``[0, pi/4]``."""
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"information gain g={g!r} outside [0, 1]")
    return 0.5 * float(np.arccos(g))


def projector(direction, outcome: int) -> np.ndarray:
    """Rank-one projector onto the ``outcome`` (+1 or -1) eigenvector of ``direction . sigma``."""
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    basis = bloch_to_basis(direction)
    return outer(basis.plus if outcome == 1 else basis.minus)


def kraus_pair(setting: MeasurementSetting) -> KrausPair:
    p_plus = projector(setting.direction, 1)
    p_minus = projector(setting.direction, -1)
    c, s = np.cos(setting.theta), np.sin(setting.theta)
    return KrausPair(c * p_plus + s * p_minus, c * p_minus + s * p_plus)


def kraus(setting: MeasurementSetting, outcome: int) -> np.ndarray:
    pair = kraus_pair(setting)
    return pair.m_plus if outcome == 1 else pair.m_minus


def side_chain_operator(settings: Sequence[MeasurementSetting], outcomes: Sequence[int]) -> np.ndarray:
    """Effect ``M1^† ... M_{N-1}^† Pi_N M_{N-1} ... M1`` for one side of a chain.

    Every setting but the last acts through its Kraus operator; the last one is
    read out projectively whatever its ``theta``.
    """
    if len(settings) == 0:
        raise ValueError("a measurement chain needs at least one observer")
    if len(settings) != len(outcomes):
        raise ValueError(f"{len(settings)} settings but {len(outcomes)} outcomes")
    h = projector(settings[-1].direction, outcomes[-1])
    for setting, outcome in zip(reversed(settings[:-1]), reversed(outcomes[:-1])):
        m = kraus(setting, outcome)
        h = m.conj().T @ h @ m
    return h


def check_density_matrix(rho, tol: float = 1e-12) -> np.ndarray:
    rho = as_matrix(rho)
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho)!r} differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    if hermitian_min_eigenvalue(rho) < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def nonselective_decoherence(rho, setting: MeasurementSetting) -> np.ndarray:
    """Outcome-averaged state ``F rho + (1 - F)(P+ rho P+ + P- rho P-)``."""
    rho = check_density_matrix(as_matrix(rho, dims=(2,)))
    f = np.sin(2 * setting.theta)
    p_plus = projector(setting.direction, 1)
    p_minus = I2 - p_plus
    return f * rho + (1 - f) * (p_plus @ rho @ p_plus + p_minus @ rho @ p_minus)


def selective_state(rho, setting: MeasurementSetting, outcome: int):
    """Normalised post-measurement state and probability for one outcome."""
    rho = check_density_matrix(as_matrix(rho, dims=(2,)))
    m = kraus(setting, outcome)
    unnorm = m @ rho @ m.conj().T
    prob = float(np.real(np.trace(unnorm)))
    if prob <= 0:
        raise ValueError("outcome has zero probability")
    return unnorm / prob, prob
