"""Steering and CHSH quantities, local bounds, and closed-form predictions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .linalg import as_bloch, bloch_to_basis, max_eig_2x2

MAX_SETTINGS = 20
CHSH_BOUND = 2.0
_CHUNK = 1 << 15


@dataclass(frozen=True)
class NonlocalityResult:
    kind: Literal["steering", "chsh"]
    value: float
    bound: float

    @property
    def violated(self) -> bool:
        return self.value > self.bound

    @property
    def margin(self) -> float:
        return self.value - self.bound


def steering_result(value: float, bound: float) -> NonlocalityResult:
    if not 0.0 < bound <= 1.0:
        raise ValueError(f"steering bound {bound} outside (0, 1]")
    return NonlocalityResult("steering", float(value), float(bound))


def chsh_result(value: float) -> NonlocalityResult:
    return NonlocalityResult("chsh", float(value), CHSH_BOUND)


def steering_quantity(correlations: Sequence[float]) -> float:
    """``|sum_m C(x^m, y^m)| / n`` over matched settings."""
    c = np.asarray(correlations, dtype=float).ravel()
    if c.size == 0:
        raise ValueError("no correlations given")
    return float(abs(c.sum()) / c.size)


def chsh_quantity(c00: float, c01: float, c10: float, c11: float) -> float:
    return float(abs(c00 + c01 + c10 - c11))


def _sign_vectors(n: int, start: int, stop: int) -> np.ndarray:
    # row r holds the signs of r's binary digits; bit set -> -1
    idx = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.int64)) & 1
    return 1.0 - 2.0 * bits


def classical_bound_with_signs(directions) -> tuple[float, np.ndarray]:
    """Local-hidden-state bound and a maximising sign vector.

    Enumerates all ``2**n`` sign vectors. For each one the largest eigenvalue
    of ``(1/n) sum_m A_m u_m . sigma`` is evaluated from the 2x2 matrix
    entries and compared against the Bloch-norm identity
    ``|sum_m A_m u_m| / n``; a disagreement above 1e-12 raises.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    n = len(dirs)
    if not 1 <= n <= MAX_SETTINGS:
        raise ValueError(f"number of settings n={n} outside [1, {MAX_SETTINGS}]")
    for d in dirs:
        as_bloch(d)
    best, best_signs = -np.inf, None
    for start in range(0, 1 << n, _CHUNK):
        signs = _sign_vectors(n, start, min(1 << n, start + _CHUNK))
        v = signs @ dirs / n
        # matrix entries of v . sigma: [[z, x - iy], [x + iy, -z]]
        eig = max_eig_2x2(v[:, 2], -v[:, 2], v[:, 0], -v[:, 1])
        norm = np.linalg.norm(v, axis=1)
        if np.max(np.abs(eig - norm)) > 1e-12:
            raise ArithmeticError("eigenvalue and Bloch-norm evaluations of the bound disagree")
        k = int(np.argmax(eig))
        if eig[k] > best:
            best, best_signs = float(eig[k]), signs[k].astype(int)
    return best, best_signs


def classical_bound(directions) -> float:
    return classical_bound_with_signs(directions)[0]


def analytic_steering_first_pair(g_a1: float, g_b1: float) -> float:
    """Steering of the first Alice-Bob pair: ``G_A1 * G_B1``."""
    for g in (g_a1, g_b1):
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"information gain {g} outside [0, 1]")
    return float(g_a1 * g_b1)


def _overlap_sums(family1, family2) -> tuple[float, float]:
    d1 = np.atleast_2d(np.asarray(getattr(family1, "directions", family1), dtype=float))
    d2 = np.atleast_2d(np.asarray(getattr(family2, "directions", family2), dtype=float))
    if len(d1) == 0 or len(d2) == 0:
        raise ValueError("setting families must be non-empty")
    b1 = [bloch_to_basis(k) for k in d1]
    b2 = [bloch_to_basis(l) for l in d2]
    flip, interference = 0.0, 0.0
    for kp, km in b1:
        for lp, lm in b2:
            kp_lp = np.vdot(kp, lp)
            km_lp = np.vdot(km, lp)
            flip += abs(kp_lp) ** 2 * abs(km_lp) ** 2
            interference += np.real(np.vdot(lm, kp) * np.vdot(lp, km) * np.vdot(km, lm) * kp_lp)
    norm = len(d1) * len(d2)
    return flip / norm, interference / norm


def analytic_steering_second_pair(f_a1: float, f_b1: float, family1, family2) -> float:
    """Steering of the second pair after the first pair measured weakly.

    ``family1`` holds the first pair's directions (n1 of them) and
    ``family2`` the second pair's (n2). The double sums over basis overlaps
    run over Bob-side bases.
    """
    for f in (f_a1, f_b1):
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"quality factor {f} outside [0, 1]")
    flip, interference = _overlap_sums(family1, family2)
    ff = f_a1 * f_b1
    return float(1.0 - 4.0 * (1.0 - 0.5 * ff) * flip - 2.0 * ff * interference)


def analytic_chsh_two_sided(f_a1, g_a1, f_b1, g_b1, g_a2=1.0, g_b2=1.0):
    """CHSH values ``(I_11, I_22, I_12, I_21)`` for two Alices and two Bobs.

    ``I_12`` pairs the first Alice with the second Bob and ``I_21`` the second
    Alice with the first Bob.
    """
    r2 = np.sqrt(2.0)
    i11 = 2 * r2 * g_a1 * g_b1
    i22 = r2 / 2 * (1 + f_a1) * g_a2 * (1 + f_b1) * g_b2
    i12 = r2 * g_a1 * (1 + f_b1) * g_b2
    i21 = r2 * g_b1 * (1 + f_a1) * g_a2
    return float(i11), float(i22), float(i12), float(i21)


def analytic_chsh_chain(r: int, s: int, alice_factors, bob_factors) -> float:
    """CHSH value of Alice ``r`` and Bob ``s`` (one-based) in N x M chains.

    ``alice_factors`` and ``bob_factors`` are sequences of ``(F, G)`` per
    observer. Every upstream observer contributes ``(1 + F) / 2``.
    """
    if not 1 <= r <= len(alice_factors):
        raise IndexError(f"Alice index r={r} out of range 1..{len(alice_factors)}")
    if not 1 <= s <= len(bob_factors):
        raise IndexError(f"Bob index s={s} out of range 1..{len(bob_factors)}")
    value = 2 * np.sqrt(2.0) / (2 ** (r - 1) * 2 ** (s - 1))
    for f, _ in alice_factors[: r - 1]:
        value *= 1 + f
    value *= alice_factors[r - 1][1]
    for f, _ in bob_factors[: s - 1]:
        value *= 1 + f
    value *= bob_factors[s - 1][1]
    return float(value)


def _bisect(fn, lo: float, hi: float, tol: float = 1e-9) -> float:
    f_lo = fn(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def double_violation_window(family, bound: float, family2=None, bound2: float | None = None):
    """Range of equal information gain ``G`` where both pairs steer.

    Returns ``(g_low, g_high)`` or ``None`` when the window is empty. The
    first pair needs ``G**2 > bound``; the second pair's steering falls with
    ``G`` and ``g_high`` is where it meets ``bound2`` (default ``bound``).
    """
    bound2 = bound if bound2 is None else bound2
    for b in (bound, bound2):
        if not 0.0 < b <= 1.0:
            raise ValueError(f"bound {b} outside (0, 1]")
    family2 = family if family2 is None else family2
    g_low = float(np.sqrt(bound))

    def second(g):
        f = np.sqrt(max(0.0, 1.0 - g * g))
        return analytic_steering_second_pair(f, f, family, family2) - bound2

    if second(0.0) <= 0:
        return None
    g_high = 1.0 if second(1.0) > 0 else _bisect(second, 0.0, 1.0)
    if g_low >= g_high:
        return None
    return g_low, g_high


def no_double_chsh_equal_strength(theta_grid) -> bool:
    """True if no equal strength in the grid gives both I_11 > 2 and I_22 > 2."""
    thetas = np.asarray(theta_grid, dtype=float).ravel()
    if np.any((thetas < 0) | (thetas > np.pi / 4)):
        raise ValueError("theta grid must lie in [0, pi/4]")
    f, g = np.sin(2 * thetas), np.cos(2 * thetas)
    i11 = 2 * np.sqrt(2.0) * g * g
    i22 = np.sqrt(2.0) / 2 * (1 + f) ** 2
    return bool(not np.any((i11 > CHSH_BOUND) & (i22 > CHSH_BOUND)))
