"""Run configuration files.

Grammar: ``[section]`` headers, ``key = value`` lines, ``#`` comments.
Arrays are comma lists; matrices put one row per (indented continuation)
line, or separate rows with ``;``::

    [domain]
    lengths = 1.0, 1.0
    nodes = 64, 64

    [params]
    p = 3
    mu = 1, 1
    lambda = 0, -0.5
             -0.5, 0
    alpha = 1
    beta = 1

    [solver]
    dt = 0.1
    tol = 1e-8
    seed = 0

Matrix diagonals are ignored. A scalar broadcasts to the whole matrix.
"""
import configparser
import os
import re
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .grid import Domain
from .nehari import SystemParams
from .system_solver import ContinuationConfig

SEED_ENV = "NEHARI_FORGE_SEED"

_SOLVER_KEYS = {
    "dt": float,
    "min_dt": float,
    "tol": float,
    "max_iter": int,
    "guard_factor": float,
    "r_guard": float,
    "max_halvings": int,
}


@dataclass
class UnboundedSpec:
    mu: float = 1.0
    p: float = 3.0
    q: float = 2.0
    a_list: list = field(default_factory=lambda: [1.0, 10.0, 100.0])


@dataclass
class RunConfig:
    domain: Domain
    params: Optional[SystemParams]
    solver: ContinuationConfig
    seed: int = 0
    t: float = 1.0
    multipliers: list = field(default_factory=lambda: [1.0])
    workers: int = 1
    unbounded: UnboundedSpec = field(default_factory=UnboundedSpec)
    tolerances: dict = field(default_factory=dict)
    selftest_nodes: int = 32
    warnings: list = field(default_factory=list)


class _Source:
    """Parsed file plus a key -> line-number index for diagnostics."""

    def __init__(self, text, name):
        self.name = name
        self.parser = configparser.ConfigParser(
            inline_comment_prefixes=("#",), comment_prefixes=("#",), interpolation=None
        )
        try:
            self.parser.read_string(text, source=name)
        except configparser.Error as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        self.lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), start=1):
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                section = m.group(1).strip().lower()
                continue
            m = re.match(r"([A-Za-z_][\w.]*)\s*[=:]", line)
            if m and section is not None:
                self.lines[(section, m.group(1).lower())] = no

    def where(self, section, key):
        no = self.lines.get((section, key))
        return f"{self.name}:{no}" if no else f"{self.name} [{section}] {key}"

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key):
        return self.parser.get(section, key)

    def get(self, section, key, conv, default=None, required=False):
        if not self.has(section, key):
            if required:
                raise ConfigError(f"{self.name}: missing key '{key}' in [{section}]")
            return default
        try:
            return conv(self.raw(section, key))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{self.where(section, key)}: bad value for '{key}': {exc}") from exc


def parse_array(text):
    items = [x for x in re.split(r"[,\s]+", text.strip()) if x]
    if not items:
        raise ValueError("empty list")
    return [float(x) for x in items]


def parse_matrix(text):
    rows = [r for r in re.split(r"[;\n]", text.strip()) if r.strip()]
    parsed = [parse_array(r) for r in rows]
    if len(parsed) == 1 and len(parsed[0]) == 1:
        return float(parsed[0][0])
    if len({len(r) for r in parsed}) != 1 or len(parsed) != len(parsed[0]):
        raise ValueError("matrix must be square with one row per line")
    return np.array(parsed)


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, os.fspath(path))


def parse_config(text, name="<config>"):
    src = _Source(text, name)
    domain = _domain(src)
    params, notes = _params(src)
    solver_kwargs = {}
    for key, conv in _SOLVER_KEYS.items():
        val = src.get("solver", key, conv)
        if val is not None:
            solver_kwargs[key] = val
    try:
        solver = ContinuationConfig(**solver_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{name} [solver]: {exc}") from exc
    seed = src.get("solver", "seed", int, 0)
    if os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    t = src.get("solve", "t", float, 1.0)
    if not 0 <= t <= 1:
        raise ConfigError(f"{src.where('solve', 't')}: t must lie in [0, 1], got {t}")
    multipliers = src.get("sweep", "multipliers", parse_array, [1.0])
    workers = src.get("sweep", "workers", int, 1)
    unbounded = UnboundedSpec(
        mu=src.get("unbounded", "mu", float, 1.0),
        p=src.get("unbounded", "p", float, 3.0),
        q=src.get("unbounded", "q", float, 2.0),
        a_list=src.get("unbounded", "a", parse_array, [1.0, 10.0, 100.0]),
    )
    workers = src.get("unbounded", "workers", int, workers)
    tolerances = {}
    if src.parser.has_section("tolerances"):
        for key in src.parser.options("tolerances"):
            tolerances[key] = src.get("tolerances", key, float)
    nodes = src.get("selftest", "nodes", int, 32)
    return RunConfig(
        domain=domain,
        params=params,
        solver=solver,
        seed=seed,
        t=t,
        multipliers=multipliers,
        workers=max(1, workers),
        unbounded=unbounded,
        tolerances=tolerances,
        selftest_nodes=nodes,
        warnings=notes,
    )


def _domain(src):
    if not src.parser.has_section("domain"):
        return Domain.unit_square(32)
    nodes = src.get("domain", "nodes", parse_array, required=True)
    lengths = src.get("domain", "lengths", parse_array, [1.0] * len(nodes))
    dim = src.get("domain", "dimension", int, len(nodes))
    if dim != len(nodes) or dim != len(lengths):
        raise ConfigError(f"{src.where('domain', 'dimension')}: dimension {dim} does not match nodes/lengths")
    if any(n != int(n) for n in nodes):
        raise ConfigError(f"{src.where('domain', 'nodes')}: node counts must be integers")
    try:
        return Domain(tuple(lengths), tuple(int(n) for n in nodes))
    except ValueError as exc:
        raise ConfigError(f"{src.where('domain', 'nodes')}: {exc}") from exc


def _params(src):
    if not src.parser.has_section("params"):
        return None, []
    p = src.get("params", "p", float, required=True)
    mu = src.get("params", "mu", parse_array, required=True)
    ell = src.get("params", "ell", int, len(mu))
    if ell != len(mu):
        raise ConfigError(f"{src.where('params', 'mu')}: expected {ell} values of mu, got {len(mu)}")
    mats = {}
    for key, attr in (("lambda", "lam"), ("alpha", "alpha"), ("beta", "beta")):
        val = src.get("params", key, parse_matrix, required=True)
        if np.ndim(val) == 2 and np.shape(val)[0] != ell:
            raise ConfigError(f"{src.where('params', key)}: {key} must be {ell}x{ell}")
        mats[attr] = val
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            params = SystemParams(p, mu, mats["lam"], mats["alpha"], mats["beta"])
        except ValueError as exc:
            msg = str(exc)
            key = "alpha" if "alpha" in msg else "lambda" if "lambda" in msg else "mu" if "mu" in msg else "p"
            raise ConfigError(f"{src.where('params', key)}: {msg}") from exc
    return params, [str(w.message) for w in caught]
