"""Command-line front end: ``seqsteer {bound,window,sweep,sample,chain,families}``.

Options come from an optional JSON file (``--config``) and are overridden by
flags. Tables go to ``--out`` or standard output; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .engine import chsh_chain, singlet, steering_chain, steering_value, chsh_value
from .measurement import THETA_MAX, check_theta, strength_factors
from .nonlocality import (
    CHSH_BOUND,
    analytic_chsh_chain,
    analytic_chsh_two_sided,
    analytic_steering_first_pair,
    analytic_steering_second_pair,
    classical_bound_with_signs,
    double_violation_window,
)
from .sampler import RNG_ALGORITHM, ShotConfig, estimate_chsh, estimate_steering, sample_counts
from .settings import FAMILIES, SettingFamily, get_family, write_family_csv

SCENARIOS = ("steering2x2", "chsh2x2", "chainNxM", "bound", "window", "sample")
MODES = ("equal", "product", "a1", "b1")
OUTPUT_FORMAT = 1


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


_PI_RE = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?pi(?:\s*/\s*([0-9.eE+-]+))?\s*$")


def parse_number(text) -> float:
    """Float parser that also understands ``pi``, ``pi/4`` and ``3*pi/16``."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI_RE.match(str(text))
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(t) for t in text]
    return [parse_number(t) for t in str(text).split(",") if t.strip()]


def parse_family(spec) -> SettingFamily:
    """Family by name, or inline directions ``"x,y,z;x,y,z"``."""
    if isinstance(spec, SettingFamily):
        return spec
    if spec is None:
        raise ConfigError("no setting family given")
    if str(spec).lower() in FAMILIES:
        return get_family(str(spec))
    if ";" in str(spec) or "," in str(spec):
        rows = [parse_list(part) for part in str(spec).split(";") if part.strip()]
        if any(len(r) != 3 for r in rows):
            raise ConfigError(f"inline family {spec!r} must list 3 components per direction")
        arr = np.array(rows, dtype=float)
        arr /= np.linalg.norm(arr, axis=1)[:, None]
        return SettingFamily("inline", arr)
    raise ConfigError(f"unknown setting family {spec!r}; choose from {sorted(FAMILIES)} or give x,y,z;...")


@dataclass
class Grid:
    start: float = 0.0
    stop: float = THETA_MAX
    count: int = 21

    @classmethod
    def parse(cls, value) -> "Grid":
        if isinstance(value, Grid):
            return value
        if isinstance(value, dict):
            parts = [value.get("start", 0.0), value.get("stop", THETA_MAX), value.get("count", 21)]
        else:
            parts = [p for p in str(value).split(",")]
        if len(parts) != 3:
            raise ConfigError(f"grid must be start,stop,count; got {value!r}")
        start, stop = parse_number(parts[0]), parse_number(parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"grid count {parts[2]!r} is not an integer") from None
        return cls(start, stop, count)

    def validate(self):
        if self.count < 1:
            raise ConfigError("grid count must be at least 1")
        for t in (self.start, self.stop):
            if not 0.0 <= t <= THETA_MAX + 1e-15:
                raise ConfigError(f"grid endpoint {t} outside [0, pi/4]")

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        vals = np.linspace(self.start, self.stop, self.count)
        return np.clip(vals, 0.0, THETA_MAX)


@dataclass
class RunConfig:
    scenario: str = "steering2x2"
    family: str | None = None
    family2: str | None = None
    theta_a1: float | None = None
    theta_b1: float | None = None
    thetas_a: list | None = None
    thetas_b: list | None = None
    grid: Grid = field(default_factory=Grid)
    mode: str = "equal"
    shots: int = 10000
    seed: int = 0
    out: str | None = None
    counts_out: str | None = None

    @classmethod
    def from_sources(cls, file_values: dict, overrides: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        merged = {}
        for source in (file_values, overrides):
            for key, value in source.items():
                key = key.replace("-", "_")
                if key not in known:
                    raise ConfigError(f"unknown configuration key {key!r}")
                if value is not None:
                    merged[key] = value
        cfg = cls(**merged)
        cfg.grid = Grid.parse(cfg.grid)
        for name in ("theta_a1", "theta_b1"):
            if getattr(cfg, name) is not None:
                setattr(cfg, name, parse_number(getattr(cfg, name)))
        for name in ("thetas_a", "thetas_b"):
            if getattr(cfg, name) is not None:
                setattr(cfg, name, parse_list(getattr(cfg, name)))
        cfg.shots, cfg.seed = int(cfg.shots), int(cfg.seed)
        return cfg

    def validate(self, command: str | None = None):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown sweep mode {self.mode!r}; choose from {MODES}")
        self.grid.validate()
        thetas = [t for t in (self.theta_a1, self.theta_b1) if t is not None]
        thetas += list(self.thetas_a or []) + list(self.thetas_b or [])
        for t in thetas:
            try:
                check_theta(t)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        needs_family = self.scenario in ("steering2x2", "bound", "window", "sample")
        if command == "families":
            needs_family = False
        if needs_family and self.family is None:
            raise ConfigError(f"scenario {self.scenario} needs --family")
        if self.mode == "a1" and self.theta_b1 is None:
            raise ConfigError("mode a1 sweeps theta_a1 and needs --theta-b1")
        if self.mode == "b1" and self.theta_a1 is None:
            raise ConfigError("mode b1 sweeps theta_b1 and needs --theta-a1")
        if self.scenario == "chainNxM":
            if not self.thetas_a or not self.thetas_b:
                raise ConfigError("chain needs --thetas-a and --thetas-b")
            if self.thetas_a[-1] != 0.0 or self.thetas_b[-1] != 0.0:
                raise ConfigError("the last Alice and last Bob must be projective (theta 0)")
        if self.shots < 1:
            raise ConfigError("shots must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return self


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SEQSTEER_THREADS", "1")))
    except ValueError:
        return 1


def _map_rows(fn, items):
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def theta_pairs(cfg: RunConfig) -> list[tuple[float, float]]:
    grid = cfg.grid.values()
    if cfg.mode == "equal":
        return [(t, t) for t in grid]
    if cfg.mode == "product":
        return [(a, b) for a in grid for b in grid]
    if cfg.mode == "a1":
        return [(t, cfg.theta_b1) for t in grid]
    return [(cfg.theta_a1, t) for t in grid]


STEERING_COLUMNS = [
    "theta_a1", "theta_b1", "g_a1", "g_b1",
    "s_pair11", "s_pair11_oracle", "s_pair22", "s_pair22_oracle",
    "bound1", "bound2", "violated11", "violated22", "double_violation", "max_abs_diff",
]

CHSH_COLUMNS = [
    "theta_a1", "theta_b1", "g_a1", "g_b1",
    "i_11", "i_11_oracle", "i_22", "i_22_oracle", "i_12", "i_12_oracle", "i_21", "i_21_oracle",
    "bound", "violated11", "violated22", "violated12", "violated21", "max_abs_diff",
]


def steering_row(theta_a1, theta_b1, fam1: SettingFamily, fam2: SettingFamily) -> dict:
    rho = singlet()
    fa, ga = strength_factors(theta_a1)
    fb, gb = strength_factors(theta_b1)
    chain = steering_chain(fam1, fam2, theta_a1, theta_b1)
    s11 = steering_value(rho, chain, 0, 0)
    s22 = steering_value(rho, chain, 1, 1)
    o11 = analytic_steering_first_pair(ga, gb)
    o22 = analytic_steering_second_pair(fa, fb, fam1, fam2)
    return {
        "theta_a1": theta_a1, "theta_b1": theta_b1, "g_a1": ga, "g_b1": gb,
        "s_pair11": s11, "s_pair11_oracle": o11, "s_pair22": s22, "s_pair22_oracle": o22,
        "bound1": fam1.bound, "bound2": fam2.bound,
        "violated11": s11 > fam1.bound, "violated22": s22 > fam2.bound,
        "double_violation": s11 > fam1.bound and s22 > fam2.bound,
        "max_abs_diff": max(abs(s11 - o11), abs(s22 - o22)),
    }


def chsh_row(theta_a1, theta_b1) -> dict:
    rho = singlet()
    fa, ga = strength_factors(theta_a1)
    fb, gb = strength_factors(theta_b1)
    chain = chsh_chain([theta_a1, 0.0], [theta_b1, 0.0])
    engine = {
        "i_11": chsh_value(rho, chain, 0, 0), "i_22": chsh_value(rho, chain, 1, 1),
        "i_12": chsh_value(rho, chain, 0, 1), "i_21": chsh_value(rho, chain, 1, 0),
    }
    oracle = dict(zip(("i_11", "i_22", "i_12", "i_21"), analytic_chsh_two_sided(fa, ga, fb, gb)))
    row = {"theta_a1": theta_a1, "theta_b1": theta_b1, "g_a1": ga, "g_b1": gb}
    for key in ("i_11", "i_22", "i_12", "i_21"):
        row[key] = engine[key]
        row[key + "_oracle"] = oracle[key]
    row["bound"] = CHSH_BOUND
    for key in ("11", "22", "12", "21"):
        row["violated" + key] = engine["i_" + key] > CHSH_BOUND
    row["max_abs_diff"] = max(abs(engine[k] - oracle[k]) for k in engine)
    return row


def write_table(fh, columns, rows, comments=()) -> None:
    for line in comments:
        fh.write(f"# {line}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])


def read_table(fh) -> list[dict]:
    """Parse a table written by :func:`write_table` (comment lines skipped)."""
    lines = [line for line in fh if not line.startswith("#")]
    return [
        {k: (v if k in ("quantity", "outcome") else float(v)) for k, v in row.items()}
        for row in csv.DictReader(lines)
    ]


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.fh

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()


def cmd_bound(cfg: RunConfig) -> int:
    fam = parse_family(cfg.family)
    bound, signs = classical_bound_with_signs(fam.directions)
    print(f"family {fam.name}")
    print(f"n {fam.n}")
    print(f"bound {bound:.6f}")
    print("signs " + " ".join(f"{s:+d}" for s in signs))
    return 0


def cmd_window(cfg: RunConfig) -> int:
    fam = parse_family(cfg.family)
    fam2 = parse_family(cfg.family2) if cfg.family2 else fam
    window = double_violation_window(fam, fam.bound, fam2, fam2.bound)
    if window is None:
        print("no double-steering window")
    else:
        print(f"({window[0]:.4f}, {window[1]:.4f})")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.scenario not in ("steering2x2", "chsh2x2"):
        raise ConfigError("sweep needs scenario steering2x2 or chsh2x2")
    pairs = theta_pairs(cfg)
    if cfg.scenario == "steering2x2":
        fam1 = parse_family(cfg.family)
        fam2 = parse_family(cfg.family2) if cfg.family2 else fam1
        rows = _map_rows(lambda p: steering_row(p[0], p[1], fam1, fam2), pairs)
        columns = STEERING_COLUMNS
        header = [f"seqsteer {__version__} sweep steering2x2 family={fam1.name} family2={fam2.name}"]
    else:
        rows = _map_rows(lambda p: chsh_row(*p), pairs)
        columns = CHSH_COLUMNS
        header = [f"seqsteer {__version__} sweep chsh2x2"]
    with _Output(cfg.out) as fh:
        write_table(fh, columns, rows, header)
    return 0


SAMPLE_COLUMNS = ["quantity", "value", "std_error", "shots", "seed", "exact", "bound"]


def cmd_sample(cfg: RunConfig) -> int:
    kind = cfg.scenario if cfg.scenario in ("steering2x2", "chsh2x2") else "steering2x2"
    ta = cfg.theta_a1 if cfg.theta_a1 is not None else 0.34
    tb = cfg.theta_b1 if cfg.theta_b1 is not None else ta
    rho = singlet()
    rows = []
    if kind == "steering2x2":
        fam1 = parse_family(cfg.family)
        fam2 = parse_family(cfg.family2) if cfg.family2 else fam1
        chain = steering_chain(fam1, fam2, ta, tb)
        table = sample_counts(ShotConfig(chain, cfg.shots, cfg.seed), max_workers=_threads())
        for name, (i, j), bound in (("s_pair11", (0, 0), fam1.bound), ("s_pair22", (1, 1), fam2.bound)):
            est = estimate_steering(table, i, j)
            rows.append({"quantity": name, "value": est.value, "std_error": est.std_error,
                         "shots": est.shots_used, "seed": cfg.seed,
                         "exact": steering_value(rho, chain, i, j), "bound": bound})
        desc = f"steering2x2 family={fam1.name} family2={fam2.name}"
    else:
        chain = chsh_chain([ta, 0.0], [tb, 0.0])
        table = sample_counts(ShotConfig(chain, cfg.shots, cfg.seed), max_workers=_threads())
        for name, (i, j) in (("i_11", (0, 0)), ("i_22", (1, 1)), ("i_12", (0, 1)), ("i_21", (1, 0))):
            est = estimate_chsh(table, i, j)
            rows.append({"quantity": name, "value": est.value, "std_error": est.std_error,
                         "shots": est.shots_used, "seed": cfg.seed,
                         "exact": chsh_value(rho, chain, i, j), "bound": CHSH_BOUND})
        desc = "chsh2x2"
    comments = [
        f"seqsteer {__version__} format={OUTPUT_FORMAT} rng={RNG_ALGORITHM} seed={cfg.seed} "
        f"shots_per_combination={cfg.shots} {desc} theta_a1={fmt(ta)} theta_b1={fmt(tb)}",
        f"timestamp={datetime.now(timezone.utc).isoformat()}",
    ]
    with _Output(cfg.out) as fh:
        write_table(fh, SAMPLE_COLUMNS, rows, comments)
    if cfg.counts_out:
        with open(cfg.counts_out, "w", newline="") as fh:
            fh.write(f"# {comments[0]}\n")
            table.write_csv(fh)
    return 0


def cmd_chain(cfg: RunConfig) -> int:
    ta, tb = list(cfg.thetas_a), list(cfg.thetas_b)
    chain = chsh_chain(ta, tb)
    rho = singlet()
    fa = [strength_factors(t) for t in ta]
    fb = [strength_factors(t) for t in tb]
    rows = []
    for r in range(1, len(ta) + 1):
        for s in range(1, len(tb) + 1):
            engine = chsh_value(rho, chain, r - 1, s - 1)
            oracle = analytic_chsh_chain(r, s, fa, fb)
            rows.append({"r": r, "s": s, "i_engine": engine, "i_oracle": oracle,
                         "abs_diff": abs(engine - oracle), "violated": engine > CHSH_BOUND})
    with _Output(cfg.out) as fh:
        write_table(fh, ["r", "s", "i_engine", "i_oracle", "abs_diff", "violated"], rows,
                    [f"seqsteer {__version__} chain thetas_a={','.join(map(fmt, ta))} "
                     f"thetas_b={','.join(map(fmt, tb))}"])
    return 0


def cmd_families(cfg: RunConfig) -> int:
    names = [cfg.family] if cfg.family else sorted(FAMILIES)
    buf = io.StringIO()
    for k, name in enumerate(names):
        part = io.StringIO()
        write_family_csv(parse_family(name), part)
        lines = part.getvalue().splitlines(keepends=True)
        buf.writelines(lines if k == 0 else lines[1:])
    with _Output(cfg.out) as fh:
        fh.write(buf.getvalue())
    return 0


COMMANDS = {
    "bound": (cmd_bound, "bound"),
    "window": (cmd_window, "window"),
    "sweep": (cmd_sweep, None),
    "sample": (cmd_sample, "sample"),
    "chain": (cmd_chain, "chainNxM"),
    "families": (cmd_families, "bound"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with run options; flags override it")
    common.add_argument("--scenario", choices=SCENARIOS, default=None)
    common.add_argument("--family", default=None, help="xyz, ico6, dod10 or inline 'x,y,z;x,y,z'")
    common.add_argument("--family2", default=None, help="family of the second observer pair")
    common.add_argument("--theta-a1", default=None)
    common.add_argument("--theta-b1", default=None)
    common.add_argument("--thetas-a", default=None, help="comma-separated thetas of all Alices")
    common.add_argument("--thetas-b", default=None, help="comma-separated thetas of all Bobs")
    common.add_argument("--grid", default=None, help="start,stop,count in theta (pi allowed)")
    common.add_argument("--mode", choices=MODES, default=None)
    common.add_argument("--shots", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--counts-out", default=None)

    parser = argparse.ArgumentParser(prog="seqsteer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("bound", "window", "families"):
            p.add_argument("family_name", nargs="?", default=None)
    return parser


def config_from_args(args) -> RunConfig:
    file_values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides = {
        k: getattr(args, k)
        for k in ("scenario", "family", "family2", "theta_a1", "theta_b1", "thetas_a", "thetas_b",
                  "grid", "mode", "shots", "seed", "out", "counts_out")
    }
    if getattr(args, "family_name", None):
        overrides["family"] = args.family_name
    default_scenario = COMMANDS[args.command][1]
    if default_scenario and "scenario" not in file_values and overrides["scenario"] is None:
        overrides["scenario"] = default_scenario
    return RunConfig.from_sources(file_values, overrides).validate(args.command)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command][0](cfg)
    except (ValueError, KeyError, IndexError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"seqsteer {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
