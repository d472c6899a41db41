"""Command-line front end: ``adversim simulate | complexity | verify``.

Exit codes: 0 success, 1 runtime failure (or a failed verification), 2 usage
or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__

log = logging.getLogger("adversim")


class UsageError(Exception):
    pass


def _emit_list(values) -> tuple:
    out = []
    for v in values or []:
        out.extend(x for x in v.split(",") if x)
    for e in out:
        if e not in ("csv", "json", "svg"):
            raise UsageError(f"unknown --emit format {e!r}; choose from csv, json, svg")
    return tuple(dict.fromkeys(out))


def _json_arg(text: str | None, what: str):
    if text is None:
        return None
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: invalid JSON ({exc.msg} at line {exc.lineno}, column {exc.colno})") from None


def _write(path: str, data: bytes):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _resolve_master_seed(seed):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy) & ((1 << 63) - 1)
    log.info("master seed: %d", seed)
    return seed


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    from dataclasses import replace

    from .config import ConfigError, load_config
    from .engine import run_game, verify_bound
    from .output import dumps_json, regret_svg, runs_csv, summary
    from .seeding import derive_seed

    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    master = _resolve_master_seed(args.seed if args.seed is not None else cfg.seed)
    emit = _emit_list(args.emit) or cfg.emit
    out_dir = args.out or cfg.out_dir
    collected = []
    for i, entry in enumerate(cfg.experiments):
        spec = entry.spec
        seed = spec.master_seed if entry.seed_explicit else derive_seed(master, i)
        reps = args.replicates if args.replicates is not None else spec.replicates
        spec = replace(spec, master_seed=seed, replicates=reps)
        log.info("experiment %s: seed %d, %d replicates", spec.id, seed, reps)
        try:
            records = run_game(spec, args.threads)
            bound = entry.bound()
            verdict = verify_bound(records, bound, spec.game) if bound is not None else None
        except Exception as exc:  # noqa: BLE001 - report and map to exit 1
            print(f"error: experiment {spec.id!r} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        collected.append((spec, records, bound, verdict))
    # single collector writes everything after all runs finished
    for spec, records, bound, verdict in collected:
        bval = None if bound is None else bound.value
        vstr = None if verdict is None else verdict["verdict"]
        base = os.path.join(out_dir, spec.id)
        if "csv" in emit:
            _write(os.path.join(base, "runs.csv"), runs_csv(records, bval))
        if "json" in emit:
            _write(os.path.join(base, "summary.json"), dumps_json(summary(records, bval, vstr)))
        if "svg" in emit:
            _write(os.path.join(base, "regret.svg"), regret_svg([(spec.id, records)], bval, spec.id))
        s = summary(records, bval, vstr)
        print(json.dumps({"experiment": spec.id, "mean_final_regret": s["mean_final_regret"],
                          "max_final_regret": s["max_final_regret"], "bound": s["bound"], "verdict": vstr}))
    return 0


# ---------------------------------------------------------------------------
# complexity


def cmd_complexity(args) -> int:
    from .complexity import (BudgetError, EstimateCI, classical_rademacher, covering_number, distdep_rademacher,
                             dudley_bound, worstcase_sequential_rademacher)
    from .config import ConfigError, build_class, build_dist, build_strategy, default_dist
    from .seeding import derived_rng
    from .trees import BinaryTree, IIDStrategy, load_tree, sample_tree_pairs

    modes = [m for m in ("classical", "worstcase", "distdep", "dudley", "cover") if getattr(args, m)]
    if len(modes) != 1:
        raise UsageError("choose exactly one of --classical, --worstcase, --distdep, --dudley, --cover")
    mode = modes[0]
    try:
        cls = build_class(_json_arg(args.cls, "--class"))
        dspec = _json_arg(args.dist, "--dist")
        dist = build_dist(dspec) if dspec is not None else default_dist(cls)
        sspec = _json_arg(args.strategy, "--strategy")
        if args.iid or sspec is None:
            strategy = IIDStrategy(dist)
        else:
            strategy = build_strategy(sspec)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    seed = _resolve_master_seed(args.seed)
    T = args.T
    try:
        if mode == "classical":
            res = classical_rademacher(cls, dist, T, args.n, seed=seed, threads=args.threads).to_json()
        elif mode == "worstcase":
            domain = _json_arg(args.domain, "--domain")
            res = EstimateCI.exact(worstcase_sequential_rademacher(cls, T, domain)).to_json()
        elif mode == "distdep":
            res = distdep_rademacher(cls, strategy, T, args.n, centered=args.centered,
                                     path_mode="leftmost" if args.leftmost else "full", seed=seed,
                                     threads=args.threads).to_json()
        elif mode == "dudley":
            res = dudley_bound(cls, strategy, T, args.n, seed=seed, threads=args.threads).to_json()
        else:
            if args.tree:
                with open(args.tree, encoding="utf-8") as fh:
                    tree = load_tree(fh.read())
            else:
                X, _ = sample_tree_pairs(strategy, T, derived_rng(seed, 0), 1)
                tree = BinaryTree(T, X[0])
            c = covering_number(cls, tree, args.alpha, args.p_norm)
            res = {"covering_number": int(c), "certified": c.certified, "lower_bound": c.lower_bound,
                   "upper_bound_only": c.upper_bound_only, "alpha": args.alpha, "depth": tree.depth}
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(res, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    from .output import dumps_json
    from .suites import DEFAULT_SEED, SUITES, run_suite

    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    seed = DEFAULT_SEED if args.seed is None else args.seed
    log.info("master seed: %d", seed)
    res = run_suite(args.suite, seed, args.threads)
    emit = _emit_list(args.emit) or ("csv", "json")
    if args.out:
        for name, data in res.files.items():
            if name.rsplit(".", 1)[-1] in emit:
                _write(os.path.join(args.out, args.suite, name), data)
    sys.stdout.write(res.files["verdict.json"].decode())
    return 0 if res.passed else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adversim", description="Online learning games against restricted adversaries.")
    p.add_argument("--version", action="version", version=f"adversim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (logged; reuse it to reproduce a run)")
    common.add_argument("--threads", type=int, help="worker threads (default: $ADVERSIM_THREADS or 1)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--emit", action="append", help="output formats: csv, json, svg (comma separated)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the experiments of a config file")
    s.add_argument("config")
    s.add_argument("--replicates", type=int, help="override every experiment's replicate count")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("complexity", parents=[common], help="estimate a complexity quantity")
    c.add_argument("--class", dest="cls", required=True, help="class spec (JSON text or file)")
    c.add_argument("--dist", help="point distribution spec (JSON); default uniform over the class's domain")
    c.add_argument("--strategy", help="oblivious strategy spec (JSON); default i.i.d. from --dist")
    c.add_argument("-T", type=int, required=True, help="horizon / tree depth")
    c.add_argument("-n", type=int, default=20000, help="Monte Carlo samples (trees for --dudley)")
    for flag in ("classical", "worstcase", "distdep", "dudley", "cover"):
        c.add_argument(f"--{flag}", action="store_true")
    c.add_argument("--centered", action="store_true", help="with --distdep: subtract conditional means")
    c.add_argument("--leftmost", action="store_true", help="with --distdep: use the leftmost path")
    c.add_argument("--iid", action="store_true", help="use the i.i.d. strategy built from --dist")
    c.add_argument("--domain", help="with --worstcase: finite domain as a JSON list")
    c.add_argument("--alpha", type=float, default=0.5, help="with --cover: scale")
    c.add_argument("--p-norm", type=float, default=2.0, help="with --cover: path-average norm")
    c.add_argument("--tree", help="with --cover: tree file in dump format (default: sampled from the strategy)")
    c.add_argument("--replicates", type=int, help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_complexity)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite")
    v.add_argument("--replicates", type=int, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(name)s: %(message)s",
                        stream=sys.stderr)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    try:
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "replicates", None) is not None and args.replicates < 1:
            raise UsageError("--replicates must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
