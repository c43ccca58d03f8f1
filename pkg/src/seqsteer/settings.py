"""Built-in measurement-setting families and the CHSH direction set."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import as_bloch
from .nonlocality import classical_bound

PHI = (1 + np.sqrt(5)) / 2
_DISTINCT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SettingFamily:
    """Named list of Bloch directions an observer chooses between uniformly.

    ``bound`` caches the local-hidden-state bound of the family and is filled
    in automatically when omitted.
    """

    name: str
    directions: np.ndarray
    bound: float = float("nan")

    def __post_init__(self):
        dirs = np.array([as_bloch(d) for d in np.atleast_2d(np.asarray(self.directions, dtype=float))])
        if len(dirs) == 0:
            raise ValueError("a setting family needs at least one direction")
        for i, j in itertools.combinations(range(len(dirs)), 2):
            if abs(abs(float(dirs[i] @ dirs[j])) - 1.0) < _DISTINCT_TOL:
                raise ValueError(f"directions {i} and {j} of family {self.name!r} are equal or antipodal")
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        computed = classical_bound(dirs)
        if np.isnan(self.bound):
            object.__setattr__(self, "bound", computed)
        elif abs(self.bound - computed) > 1e-9:
            raise ValueError(f"cached bound {self.bound} disagrees with computed {computed}")

    @property
    def n(self) -> int:
        return len(self.directions)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, SettingFamily):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.directions, other.directions)

    def __hash__(self):
        return hash((self.name, self.directions.tobytes()))


def _normalize(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    return arr / np.linalg.norm(arr, axis=1)[:, None]


def _one_per_antipodal_pair(vertices: np.ndarray) -> np.ndarray:
    kept: list[np.ndarray] = []
    for v in vertices:
        if not any(abs(abs(float(v @ k)) - 1.0) < _DISTINCT_TOL for k in kept):
            kept.append(v)
    return np.array(kept)


@lru_cache(maxsize=None)
def family_xyz() -> SettingFamily:
    return SettingFamily("xyz", np.eye(3))


@lru_cache(maxsize=None)
def family_icosahedron() -> SettingFamily:
    """Six axes through opposite vertices of a regular icosahedron."""
    dirs = [(1, PHI, 0), (-1, PHI, 0), (0, 1, PHI), (0, -1, PHI), (PHI, 0, 1), (PHI, 0, -1)]
    return SettingFamily("ico6", _normalize(dirs))


@lru_cache(maxsize=None)
def family_dodecahedron() -> SettingFamily:
    """Ten axes through opposite vertices of a regular dodecahedron."""
    verts = [s for s in itertools.product((1, -1), repeat=3)]
    for a, b in itertools.product((1, -1), repeat=2):
        verts += [(0, a / PHI, b * PHI), (a / PHI, b * PHI, 0), (a * PHI, 0, b / PHI)]
    return SettingFamily("dod10", _one_per_antipodal_pair(_normalize(verts)))


def chsh_settings() -> tuple[np.ndarray, np.ndarray]:
    """Alice's and Bob's CHSH directions as ``(alice, bob)`` arrays of shape (2, 3).

    Alice measures ``Z`` then ``X``. Bob's two directions are
    ``-(X+Z)/sqrt2`` (setting 0) and ``(X-Z)/sqrt2`` (setting 1); in this order
    the singlet reaches ``|C00 + C01 + C10 - C11| = 2 sqrt2``.
    """
    r = 1 / np.sqrt(2)
    alice = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    bob = np.array([[-r, 0.0, -r], [r, 0.0, -r]])
    return alice, bob


def chsh_families() -> tuple[SettingFamily, SettingFamily]:
    alice, bob = chsh_settings()
    return SettingFamily("chsh_alice", alice), SettingFamily("chsh_bob", bob)


def antipode(family: SettingFamily) -> SettingFamily:
    name = family.name[1:] if family.name.startswith("-") else "-" + family.name
    return SettingFamily(name, -family.directions, family.bound)


FAMILIES = {
    "xyz": family_xyz,
    "ico6": family_icosahedron,
    "dod10": family_dodecahedron,
}


def get_family(name: str) -> SettingFamily:
    try:
        return FAMILIES[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown setting family {name!r}; choose from {sorted(FAMILIES)}") from None


def write_family_csv(family: SettingFamily, fh) -> None:
    """Write ``name,index,x,y,z`` rows for ``family`` to an open text file."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["name", "index", "x", "y", "z"])
    for i, (x, y, z) in enumerate(family.directions):
        writer.writerow([family.name, i, f"{x:.12g}", f"{y:.12g}", f"{z:.12g}"])
