"""Finite-statistics emulation of sequential measurement experiments.

For every setting combination of a chain a fixed number of shots is drawn
from the exact outcome distribution. Combination ``c`` uses its own PCG64
stream seeded by ``SeedSequence(seed, spawn_key=(c,))``, so tables do not
depend on evaluation order.
"""
from __future__ import annotations

import csv
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .engine import ObserverChain, chain_distribution, check_state, singlet
from .nonlocality import chsh_quantity, steering_quantity

RNG_ALGORITHM = "numpy PCG64 via SeedSequence(seed, spawn_key=(combination,))"


class EstimatedQuantity(NamedTuple):
    value: float
    std_error: float
    shots_used: int


@dataclass(frozen=True, eq=False)
class ShotConfig:
    chain: ObserverChain
    shots_per_combination: int
    seed: int
    state: np.ndarray = field(default_factory=singlet)

    def __post_init__(self):
        if int(self.shots_per_combination) < 1:
            raise ValueError("shots_per_combination must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        check_state(self.state)


@dataclass(frozen=True, eq=False)
class CountTable:
    """Outcome counts, one row per setting combination.

    ``counts[c, o]`` is the number of shots of combination ``combos[c]``
    giving outcome string ``o`` (flattened with Alices first, index 0 = +1).
    """

    chain: ObserverChain
    combos: tuple
    counts: np.ndarray
    shots: int
    seed: int | None = None

    def rows(self, i: int, j: int, xi: int, yj: int) -> np.ndarray:
        sel = [c for c, (a, b) in enumerate(self.combos) if a[i] == xi and b[j] == yj]
        if not sel:
            raise KeyError(f"no counts for Alice {i} setting {xi} with Bob {j} setting {yj}")
        return self.counts[sel]

    def outcome_labels(self) -> list[str]:
        n, m = self.chain.n_alice, self.chain.n_bob
        labels = []
        for idx in itertools.product("+-", repeat=n + m):
            s = "".join(idx)
            labels.append(s[:n] + "|" + s[n:])
        return labels

    def write_csv(self, fh) -> None:
        n, m = self.chain.n_alice, self.chain.n_bob
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{k + 1}" for k in range(n)] + [f"y{k + 1}" for k in range(m)] + ["outcome", "count"])
        labels = self.outcome_labels()
        for (a, b), row in zip(self.combos, self.counts):
            for label, count in zip(labels, row):
                writer.writerow([*a, *b, label, f"{count:.12g}"])


def _combo_probs(config: ShotConfig, combo) -> np.ndarray:
    p = chain_distribution(config.state, config.chain, *combo).probs.ravel()
    return p / p.sum()


def _draw(config: ShotConfig, index: int, combo) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(config.seed), spawn_key=(index,))))
    return rng.multinomial(int(config.shots_per_combination), _combo_probs(config, combo))


def sample_counts(config: ShotConfig, max_workers: int | None = None) -> CountTable:
    """Multinomial draw of ``shots_per_combination`` shots for every combination."""
    combos = tuple(config.chain.assignments())
    jobs = list(enumerate(combos))
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda job: _draw(config, *job), jobs))
    else:
        rows = [_draw(config, *job) for job in jobs]
    return CountTable(config.chain, combos, np.array(rows, dtype=np.int64),
                      int(config.shots_per_combination), int(config.seed))


def expected_counts(config: ShotConfig) -> CountTable:
    """Noise-free table: shots times exact probabilities (non-integer)."""
    combos = tuple(config.chain.assignments())
    rows = np.array([config.shots_per_combination * _combo_probs(config, c) for c in combos])
    return CountTable(config.chain, combos, rows, int(config.shots_per_combination), None)


def _sign_product(chain: ObserverChain, i: int, j: int) -> np.ndarray:
    n, m = chain.n_alice, chain.n_bob
    signs = 1 - 2 * np.array(list(itertools.product((0, 1), repeat=n + m)))
    return (signs[:, i] * signs[:, n + j]).astype(float)


def _pooled_correlation(table: CountTable, i: int, j: int, xi: int, yj: int):
    rows = table.rows(i, j, xi, yj).astype(float)
    prod = _sign_product(table.chain, i, j)
    shots = rows.sum(axis=1)
    same = rows[:, prod > 0].sum(axis=1)
    corr = (2 * same - shots) / shots
    # Laplace-smoothed agreement rate keeps the error finite for tiny samples
    p = (same + 1) / (shots + 2)
    var = 4 * p * (1 - p) / shots
    return corr.mean(), var.sum() / len(rows) ** 2, int(shots.sum())


def estimate_correlation(table: CountTable, i: int, j: int, xi: int, yj: int) -> EstimatedQuantity:
    c, var, used = _pooled_correlation(table, i, j, xi, yj)
    return EstimatedQuantity(float(c), float(np.sqrt(var)), used)


def estimate_steering(table: CountTable, i: int, j: int) -> EstimatedQuantity:
    """Plug-in steering quantity of Alice ``i`` and Bob ``j`` over matched settings."""
    n = table.chain.alice[i].family.n
    if table.chain.bob[j].family.n != n:
        raise ValueError("steering needs the same number of settings on both sides")
    parts = [_pooled_correlation(table, i, j, m, m) for m in range(n)]
    value = steering_quantity([p[0] for p in parts])
    se = np.sqrt(sum(p[1] for p in parts)) / n
    return EstimatedQuantity(value, float(se), sum(p[2] for p in parts))


def estimate_chsh(table: CountTable, i: int, j: int) -> EstimatedQuantity:
    """Plug-in CHSH value of Alice ``i`` and Bob ``j``."""
    parts = {(x, y): _pooled_correlation(table, i, j, x, y) for x in range(2) for y in range(2)}
    value = chsh_quantity(parts[0, 0][0], parts[0, 1][0], parts[1, 0][0], parts[1, 1][0])
    se = np.sqrt(sum(p[1] for p in parts.values()))
    return EstimatedQuantity(value, float(se), sum(p[2] for p in parts.values()))
