"""Scenario-grid configuration files (YAML; JSON reports are accepted too)."""
from __future__ import annotations

import itertools
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .model import EtaSolverOptions
from .simulation import ProfileKind, Scenario

__all__ = ["ConfigError", "GridConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    k: int
    m: int
    seed: int
    profiles: tuple[ProfileKind, ...]
    triples: tuple[tuple[float, float, float], ...]
    solver: EtaSolverOptions = field(default_factory=EtaSolverOptions)

    def scenarios(self) -> list[Scenario]:
        out = []
        cells = itertools.product(self.profiles, self.triples)
        for idx, (kind, (alpha, beta, gamma)) in enumerate(cells):
            out.append(Scenario(alpha, beta, gamma, self.k, self.m, kind, scenario_seed(self.seed, idx)))
        return out

    def to_dict(self) -> dict[str, Any]:
        """Canonical form; feeding it back to ``parse_config`` gives an equal config."""
        return {
            "k": self.k,
            "m": self.m,
            "seed": self.seed,
            "profiles": [p.value for p in self.profiles],
            "scenarios": [{"alpha": a, "beta": b, "gamma": g} for a, b, g in self.triples],
            "solver": asdict(self.solver),
        }


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (``1e-6``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def scenario_seed(seed: int, idx: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(idx,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _where(node: yaml.Node | None, path: tuple) -> str:
    """Line of ``path`` inside the composed YAML tree, for diagnostics."""
    for key in path:
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            break
    if node is None:
        return ""
    return f"line {node.start_mark.line + 1}: "


class _Reader:
    def __init__(self, data: dict, tree: yaml.Node | None, source: str):
        self.data, self.tree, self.source = data, tree, source

    def fail(self, path: tuple, msg: str):
        dotted = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in path).lstrip(".")
        raise ConfigError(f"{self.source}: {_where(self.tree, path)}{dotted or '<root>'}: {msg}")

    def get(self, obj: dict, path: tuple, key: str, default: Any = ...):
        if key not in obj:
            if default is ...:
                self.fail(path, f"missing required field '{key}'")
            return default
        return obj[key]

    def positive_int(self, value, path):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        if value < 1:
            self.fail(path, f"must be positive, got {value}")
        return value

    def positive_float(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if not (value > 0 and np.isfinite(value)):
            self.fail(path, f"must be positive, got {value}")
        return float(value)

    def number_list(self, value, path):
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a non-empty list of numbers")
        return [self.positive_float(v, path + (i,)) for i, v in enumerate(value)]


def parse_config(text: str, source: str = "<config>") -> GridConfig:
    try:
        data = yaml.load(text, Loader=_Loader)
        tree = yaml.compose(text, Loader=_Loader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{source}: {where}{e.problem}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{source}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")

    # a run report embeds the canonical config it was produced from
    if "metadata" in data and isinstance(data["metadata"], dict) and "config" in data["metadata"]:
        data = data["metadata"]["config"]
        tree = None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: metadata.config is not a mapping")

    r = _Reader(data, tree, source)
    known = {"k", "m", "seed", "profiles", "grid", "scenarios", "solver"}
    for key in data:
        if key not in known:
            r.fail((key,), f"unknown field; expected one of {sorted(known)}")

    k = r.positive_int(r.get(data, (), "k"), ("k",))
    if k < 2:
        r.fail(("k",), f"need at least 2 categories, got {k}")
    m = r.positive_int(r.get(data, (), "m"), ("m",))
    seed = r.get(data, (), "seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        r.fail(("seed",), f"expected an unsigned 64-bit integer, got {seed!r}")

    raw_profiles = r.get(data, (), "profiles", [p.value for p in ProfileKind])
    if not isinstance(raw_profiles, list) or not raw_profiles:
        r.fail(("profiles",), "expected a non-empty list of profile kinds")
    profiles = []
    for i, p in enumerate(raw_profiles):
        try:
            profiles.append(ProfileKind(p))
        except ValueError:
            r.fail(("profiles", i), f"unknown profile {p!r}; expected one of {[q.value for q in ProfileKind]}")

    if ("grid" in data) == ("scenarios" in data):
        r.fail((), "give exactly one of 'grid' or 'scenarios'")
    triples: list[tuple[float, float, float]] = []
    if "grid" in data:
        grid = data["grid"]
        if not isinstance(grid, dict):
            r.fail(("grid",), "expected a mapping with alpha, beta and gamma lists")
        lists = [r.number_list(r.get(grid, ("grid",), name), ("grid", name)) for name in ("alpha", "beta", "gamma")]
        triples = list(itertools.product(*lists))
    else:
        rows = data["scenarios"]
        if not isinstance(rows, list) or not rows:
            r.fail(("scenarios",), "expected a non-empty list of {alpha, beta, gamma} mappings")
        for i, row in enumerate(rows):
            path = ("scenarios", i)
            if not isinstance(row, dict):
                r.fail(path, "expected a mapping with alpha, beta and gamma")
            extra = set(row) - {"alpha", "beta", "gamma"}
            if extra:
                r.fail(path, f"unknown fields {sorted(extra)}")
            triples.append(tuple(r.positive_float(r.get(row, path, n), path + (n,)) for n in ("alpha", "beta", "gamma")))

    solver_raw = r.get(data, (), "solver", {}) or {}
    if not isinstance(solver_raw, dict):
        r.fail(("solver",), "expected a mapping of solver options")
    names = {f.name for f in fields(EtaSolverOptions)}
    for key, value in solver_raw.items():
        if key not in names:
            r.fail(("solver", key), f"unknown solver option; expected one of {sorted(names)}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            r.fail(("solver", key), f"expected a number, got {value!r}")
    try:
        solver = EtaSolverOptions(**solver_raw)
    except (TypeError, ValueError) as e:
        r.fail(("solver",), str(e))

    return GridConfig(k, m, seed, tuple(profiles), tuple(triples), solver)


def load_config(path: str | Path) -> GridConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from e
    return parse_config(text, str(path))
