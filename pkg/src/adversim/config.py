"""Declarative experiment configs (TOML) and JSON-style object specs.

A config has an optional ``seed`` and ``[output]`` table plus one or more
``[[experiment]]`` tables.  Every table is checked against a fixed key set;
an unknown key is reported with the line and column where it appears.  See
the README for the full grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import tomli

from .core import FiniteTable, FunctionClass, GameSpec, LinearBall, Simplex, ThresholdGrid
from .distributions import Categorical, Distribution, PointMass, Uniform, UniformBox, UniformSphere
from .engine import ExperimentSpec, bound_for
from .trees import DeterministicStrategy, IIDStrategy, MarkovStrategy, ObliviousStrategy


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


# ---------------------------------------------------------------------------
# object specs shared by the config file and the command line

CLASS_KEYS = {
    "finite_table": {"kind", "values"},
    "linear_ball": {"kind", "dimension", "radius", "norm"},
    "simplex": {"kind", "dimension"},
    "thresholds": {"kind", "resolution", "margin"},
}
DIST_KEYS = {
    "uniform": {"kind"},
    "categorical": {"kind", "probs", "support"},
    "point": {"kind", "value"},
    "uniform_sphere": {"kind", "dim"},
    "uniform_box": {"kind", "dim", "radius"},
}
STRATEGY_KEYS = {
    "iid": {"kind", "dist"},
    "deterministic": {"kind", "sequence"},
    "markov": {"kind", "initial", "transition", "support"},
    "random_walk": {"kind", "start", "step"},
}


def _check_keys(d: dict, allowed: set, where: str, locate=None):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a table, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            line, col = locate(k) if locate else (None, None)
            raise ConfigError(f"unknown key {k!r} in {where}; allowed: {', '.join(sorted(allowed))}", line, col)


def _kind(d: dict, table: dict, where: str, locate=None) -> str:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where} needs a 'kind'")
    kind = d["kind"]
    if kind not in table:
        raise ConfigError(f"unknown {where} kind {kind!r}; choose from {', '.join(table)}")
    _check_keys(d, table[kind], f"{where} ({kind})", locate)
    return kind


def build_class(d: dict, locate=None) -> FunctionClass:
    kind = _kind(d, CLASS_KEYS, "class", locate)
    if kind == "finite_table":
        return FiniteTable(np.asarray(d["values"], dtype=float))
    if kind == "linear_ball":
        return LinearBall(int(d["dimension"]), float(d.get("radius", 1.0)), d.get("norm", "euclidean"))
    if kind == "simplex":
        return Simplex(int(d["dimension"]))
    res = d.get("resolution")
    return ThresholdGrid(None if res is None else int(res), float(d.get("margin", 0.0)))


def build_dist(d: dict, locate=None) -> Distribution:
    kind = _kind(d, DIST_KEYS, "distribution", locate)
    if kind == "uniform":
        return Uniform()
    if kind == "categorical":
        return Categorical(tuple(float(p) for p in d["probs"]), tuple(d.get("support", ())))
    if kind == "point":
        return PointMass(float(d["value"]))
    if kind == "uniform_sphere":
        return UniformSphere(int(d["dim"]))
    return UniformBox(int(d["dim"]), float(d.get("radius", 1.0)))


def default_dist(cls: FunctionClass) -> Distribution:
    """Uniform over the points a class is naturally defined on."""
    if isinstance(cls, FiniteTable):
        k = cls.n_points
        return Categorical(tuple(np.full(k, 1.0 / k)))
    if isinstance(cls, ThresholdGrid):
        return Uniform()
    if isinstance(cls, LinearBall) and cls.norm == "sup-dual":
        return UniformBox(cls.dimension)
    return UniformSphere(cls.dimension)


def build_strategy(d: dict, locate=None) -> ObliviousStrategy:
    kind = _kind(d, STRATEGY_KEYS, "strategy", locate)
    if kind == "iid":
        return IIDStrategy(build_dist(d["dist"], locate))
    if kind == "deterministic":
        return DeterministicStrategy(d["sequence"])
    if kind == "markov":
        return MarkovStrategy.finite_chain(d["initial"], np.asarray(d["transition"], dtype=float), d.get("support"))
    return MarkovStrategy.random_walk(float(d.get("start", 0.0)), float(d.get("step", 1.0)))


# ---------------------------------------------------------------------------
# config files

TOP_KEYS = {"seed", "output", "experiment"}
OUTPUT_KEYS = {"dir", "emit"}
EXPERIMENT_KEYS = {"id", "seed", "replicates", "horizon", "loss", "protocol", "noise_gamma", "analytic",
                   "prefix_comparator", "class", "learner", "adversary", "bound"}
LEARNER_KEYS = {
    "ew": {"kind", "eta", "resolution", "margin"},
    "discretized_ew": {"kind", "gamma", "a"},
    "ftl": {"kind"},
    "omd": {"kind", "hint", "eta", "budget"},
    "fixed": {"kind", "hypothesis"},
}
ADVERSARY_KEYS = {
    "constrained": {"kind", "constraint", "sigma", "delta", "norm", "policy", "scale"},
    "halving": {"kind"},
    "rademacher_labels": {"kind", "x_dist"},
    "hybrid": {"kind", "x_dist", "label_policy"},
    "iid": {"kind", "dist"},
    "oblivious": {"kind", "strategy"},
    "sequence": {"kind", "sequence"},
}
BOUND_KEYS = {
    "variance": {"kind", "sigma", "lambda"},
    "slow_change": {"kind", "delta", "lambda"},
    "smoothed_threshold": {"kind", "gamma"},
    "constant": {"kind", "value"},
}
EMITS = ("csv", "json", "svg")


@dataclass
class ExperimentEntry:
    spec: ExperimentSpec
    seed_explicit: bool
    bound_kind: str | None = None
    bound_params: dict = field(default_factory=dict)

    def bound(self):
        if self.bound_kind is None:
            return None
        return bound_for(self.bound_kind, self.spec.game, **self.bound_params)


@dataclass
class Config:
    experiments: list
    out_dir: str = "out"
    emit: tuple = ("csv", "json")
    seed: int | None = None


def _locator(text: str):
    lines = text.splitlines()

    def locate(key: str):
        pat = re.compile(r"(^|[\s.\[{,])(" + re.escape(key) + r"|\"" + re.escape(key) + r"\")\s*(=|\]|\.)")
        for i, line in enumerate(lines):
            stripped = line.split("#", 1)[0]
            m = pat.search(stripped)
            if m:
                return i + 1, m.start(2) + 1
        return None, None

    return locate


def _decode_error(exc: tomli.TOMLDecodeError) -> ConfigError:
    m = re.search(r"\(at line (\d+), column (\d+)\)", str(exc))
    msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
    if m:
        return ConfigError(f"config parse error: {msg}", int(m.group(1)), int(m.group(2)))
    return ConfigError(f"config parse error: {msg}")


def _spec_params(d: dict, drop=("kind",)) -> dict:
    return {k: v for k, v in d.items() if k not in drop}


def _adversary_params(d: dict, locate) -> dict:
    p = _spec_params(d)
    for key in ("x_dist", "dist"):
        if key in p:
            p[key] = build_dist(p[key], locate)
    if "strategy" in p:
        p["strategy"] = build_strategy(p["strategy"], locate)
    return p


def parse_config(text: str) -> Config:
    """Parse and validate a config document; raises ConfigError."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise _decode_error(exc) from None
    locate = _locator(text)
    _check_keys(raw, TOP_KEYS, "top level", locate)
    out = raw.get("output", {})
    _check_keys(out, OUTPUT_KEYS, "[output]", locate)
    emit = out.get("emit", ["csv", "json"])
    emit = [emit] if isinstance(emit, str) else list(emit)
    for e in emit:
        if e not in EMITS:
            line, col = locate("emit")
            raise ConfigError(f"unknown emit format {e!r}; choose from {', '.join(EMITS)}", line, col)
    exps = raw.get("experiment", [])
    if not exps:
        raise ConfigError("config defines no [[experiment]]")
    seed = raw.get("seed")
    entries = []
    seen = set()
    for i, e in enumerate(exps):
        _check_keys(e, EXPERIMENT_KEYS, f"experiment #{i + 1}", locate)
        for req in ("horizon", "class", "learner", "adversary"):
            if req not in e:
                raise ConfigError(f"experiment #{i + 1} is missing {req!r}")
        eid = str(e.get("id", f"experiment{i + 1}"))
        if eid in seen:
            raise ConfigError(f"duplicate experiment id {eid!r}", *locate("id"))
        seen.add(eid)
        try:
            cls = build_class(e["class"], locate)
            protocol = e.get("protocol", "supervised" if isinstance(cls, ThresholdGrid) else "plain")
            default_loss = "absolute" if protocol != "plain" else "linear"
            game = GameSpec(int(e["horizon"]), cls, e.get("loss", default_loss), protocol)
            lk = _kind(e["learner"], LEARNER_KEYS, "learner", locate)
            ak = _kind(e["adversary"], ADVERSARY_KEYS, "adversary", locate)
            bk = None
            bparams = {}
            if "bound" in e:
                bk = _kind(e["bound"], BOUND_KEYS, "bound", locate)
                bparams = _spec_params(e["bound"])
            spec = ExperimentSpec(game, lk, ak, _spec_params(e["learner"]), _adversary_params(e["adversary"], locate),
                                  int(e.get("replicates", 1)), int(e.get("seed", 0)), e.get("noise_gamma"),
                                  bool(e.get("analytic", False)), bool(e.get("prefix_comparator", False)), eid)
            entry = ExperimentEntry(spec, "seed" in e, bk, bparams)
            entry.bound()  # evaluate once so bad bound parameters fail at load time
        except ConfigError:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"experiment {eid!r}: {exc}") from None
        entries.append(entry)
    return Config(entries, str(out.get("dir", "out")), tuple(emit), None if seed is None else int(seed))


def load_config(path: str) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
