"""Command-line interface: ``reflcalc decide|oracle|bench|canonical``.

Exit codes: 0 provable, 1 not provable, 2 parse or usage error,
3 inconclusive (oracle only).
"""

from __future__ import annotations

import argparse
import json
import math
import random
import statistics
import sys
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from .decide import Logic, countermodel, decide
from .formula import (OMEGA, And, Dia, Formula, ParseError, Sequent, Var, check_label, label_str,
                      parse_formula, parse_sequent, signature)
from .kripke import Model, iter_bits, to_dot, to_json
from .oracle import Outcome, cross_check
from .tree import canonical_tree, rc_model, rcw_model, rj_model

EXIT_PROVABLE, EXIT_NOT_PROVABLE, EXIT_PARSE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
FORMATS = ("text", "json", "dot")


@dataclass(frozen=True)
class RunConfig:
    logic: Logic = Logic.RC
    fmt: str = "text"
    depth: int = 8
    size_cap: Optional[int] = None
    max_nodes: int = 4
    start: int = 64
    doublings: int = 5
    repeats: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}")
        for name in ("depth", "max_nodes", "start", "repeats"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name.replace('_', '-')} must be positive")
        if self.size_cap is not None and self.size_cap < 1:
            raise ValueError("size-cap must be positive")
        if self.doublings < 0:
            raise ValueError("doublings must be non-negative")
        if self.max_nodes > 5:
            raise ValueError("max-nodes must be at most 5")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        keys = cls.__dataclass_fields__
        given = {k: v for k, v in vars(args).items() if k in keys and v is not None}
        if "logic" in given:
            given["logic"] = Logic.coerce(given["logic"])
        return cls(**given)


def model_text(model: Model) -> str:
    lines = [f"nodes: {' '.join(map(str, sorted(model.nodes)))}"]
    if model.root is not None:
        lines.append(f"root: {model.root}")
    for label in model.labels:
        pairs = " ".join(f"{x}->{y}" for x, y in model.edges(label))
        lines.append(f"R_{label_str(label)}: {pairs}")
    for name in sorted(model.val):
        lines.append(f"{name}: {' '.join(map(str, iter_bits(model.val[name])))}")
    return "\n".join(lines)


def _emit_model(model: Model, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(to_json(model), indent=2)
    if fmt == "dot":
        return to_dot(model)
    return model_text(model)


def _read_input(arg: Optional[str]) -> str:
    if arg is None or arg == "-":
        return sys.stdin.read().strip()
    return arg


def _parse_error(exc: ParseError) -> int:
    print(f"parse error: {exc}", file=sys.stderr)
    return EXIT_PARSE


def cmd_decide(args: argparse.Namespace, cfg: RunConfig) -> int:
    try:
        sequent = parse_sequent(_read_input(args.sequent))
    except ParseError as exc:
        return _parse_error(exc)
    verdict = decide(sequent, cfg.logic)
    witness = None if verdict.provable else countermodel(sequent, cfg.logic)
    if cfg.fmt == "json":
        print(json.dumps({
            "sequent": str(sequent), "logic": cfg.logic.value, "provable": verdict.provable,
            "signature": [label_str(a) for a in sorted(verdict.signature)],
            "countermodel": to_json(witness) if witness else None}, indent=2))
    elif cfg.fmt == "dot":
        print(to_dot(witness) if witness else f"// {verdict}")
    else:
        print(verdict)
        if witness:
            print(model_text(witness))
    if args.countermodel:
        if witness is None:
            print("provable: no countermodel written", file=sys.stderr)
        else:
            dot = args.countermodel.endswith(".dot") or args.countermodel.endswith(".gv")
            with open(args.countermodel, "w") as fh:
                fh.write(to_dot(witness) if dot else json.dumps(to_json(witness), indent=2))
                fh.write("\n")
    return EXIT_PROVABLE if verdict.provable else EXIT_NOT_PROVABLE


def cmd_oracle(args: argparse.Namespace, cfg: RunConfig) -> int:
    try:
        sequent = parse_sequent(_read_input(args.sequent))
    except ParseError as exc:
        return _parse_error(exc)
    result = cross_check(sequent, cfg.logic, cfg.depth, cfg.size_cap, cfg.max_nodes)
    if cfg.fmt == "json":
        out = result.to_json()
        out.update(sequent=str(sequent), logic=cfg.logic.value)
        print(json.dumps(out, indent=2))
    elif cfg.fmt == "dot":
        print(to_dot(result.model) if result.model else f"// {sequent} : {result.outcome.value}")
    else:
        print(f"{sequent} : {result.outcome.value} in {cfg.logic}")
        if result.derivation:
            print(result.derivation.to_text())
        if result.model:
            print(model_text(result.model))
    return {Outcome.PROVABLE: EXIT_PROVABLE, Outcome.NOT_PROVABLE: EXIT_NOT_PROVABLE,
            Outcome.INCONCLUSIVE: EXIT_INCONCLUSIVE}[result.outcome]


def cmd_canonical(args: argparse.Namespace, cfg: RunConfig) -> int:
    try:
        formula = parse_formula(_read_input(args.formula))
        extra = [check_label(OMEGA if t.strip() in ("w", "ω") else int(t))
                 for t in args.signature.split(",") if t.strip()] if args.signature else []
    except ParseError as exc:
        return _parse_error(exc)
    except ValueError as exc:
        print(f"bad signature: {exc}", file=sys.stderr)
        return EXIT_PARSE
    S = signature(formula) | set(extra)
    build = {"tree": lambda f, S: canonical_tree(f), "rj": rj_model, "rc": rc_model, "rcw": rcw_model}
    model = build[args.stage](formula, S)
    print(_emit_model(model, cfg.fmt))
    return 0


# --------------------------------------------------------------------------
# benchmark ladders

_CYCLE = (0, 1, OMEGA)


def wide_family(size: int, rng: random.Random) -> Formula:
    """Left-deep conjunction of diamonds <a>x with labels cycling 0, 1, w."""
    k = max(1, (size + 1) // 3)
    f: Optional[Formula] = None
    for i in range(k):
        d = Dia(_CYCLE[i % 3], Var(rng.choice("pq")))
        f = d if f is None else And(f, d)
    return f


def chain_family(size: int, rng: random.Random) -> Formula:
    """Nested diamonds with alternating labels, broken by occasional conjunctions."""
    f: Formula = Var(rng.choice("pq"))
    labels = (OMEGA, 0, 1)
    i = 0
    while f.size < size - 1:
        f = Dia(labels[i % 3], f)
        if rng.random() < 0.2 and f.size < size - 2:
            f = And(Var(rng.choice("pq")), f)
        i += 1
    return f


FAMILIES = {"wide": wide_family, "chain": chain_family}


def bench_sequent(family: str, size: int, seed: int) -> Sequent:
    rng = random.Random(f"{family}:{size}:{seed}")
    gen = FAMILIES[family]
    return Sequent(gen(size // 2, rng), gen(size - size // 2, rng))


def time_decide(sequent: Sequent, logic: Logic, repeats: int) -> list[float]:
    out = []
    for _ in range(repeats):
        t = time.perf_counter()
        decide(sequent, logic)
        out.append(time.perf_counter() - t)
    return out


def fit_slope(sizes: Sequence[float], times: Sequence[float]) -> float:
    """Least-squares slope of log(time) against log(size)."""
    xs = [math.log(s) for s in sizes]
    ys = [math.log(max(t, 1e-9)) for t in times]
    return statistics.linear_regression(xs, ys).slope


def run_bench(cfg: RunConfig, logics: Sequence[Logic], families: Sequence[str]) -> dict:
    sizes = [cfg.start * 2 ** i for i in range(cfg.doublings + 1)]
    report = {"sizes": sizes, "repeats": cfg.repeats, "seed": cfg.seed, "runs": []}
    for family in families:
        sequents = [bench_sequent(family, n, cfg.seed) for n in sizes]
        for logic in logics:
            samples = [time_decide(s, logic, cfg.repeats) for s in sequents]
            medians = [statistics.median(x) for x in samples]
            run = {"family": family, "logic": logic.value,
                   "actual_sizes": [s.size for s in sequents], "median_seconds": medians}
            if len(sizes) > 1:
                run["slope"] = fit_slope(run["actual_sizes"], medians)
            else:
                run["stdev_seconds"] = statistics.stdev(samples[0]) if cfg.repeats > 1 else 0.0
            report["runs"].append(run)
    return report


def cmd_bench(args: argparse.Namespace, cfg: RunConfig) -> int:
    logics = [cfg.logic] if args.logic else list(Logic)
    families = [args.family] if args.family else list(FAMILIES)
    report = run_bench(cfg, logics, families)
    if cfg.fmt == "json":
        print(json.dumps(report, indent=2))
        return 0
    for run in report["runs"]:
        print(f"{run['family']} / {Logic(run['logic'])}")
        for n, t in zip(run["actual_sizes"], run["median_seconds"]):
            print(f"  size {n:6d}  median {t * 1000:10.3f} ms")
        if "slope" in run:
            print(f"  log-log slope {run['slope']:.2f}")
        else:
            print(f"  stdev {run['stdev_seconds'] * 1000:.3f} ms over {cfg.repeats} runs")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reflcalc", description="Reflection calculi RJ, RC and RCw.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, logic_default=True):
        p.add_argument("--logic", choices=[l.value for l in Logic],
                       default=None if not logic_default else "rc")
        p.add_argument("--format", dest="fmt", choices=FORMATS, default="text")

    p = sub.add_parser("decide", help="decide a sequent A |- B")
    common(p)
    p.add_argument("sequent", nargs="?", help="sequent text, or - / omitted to read stdin")
    p.add_argument("--countermodel", metavar="PATH", help="write the countermodel (.dot for DOT, else JSON)")
    p.set_defaults(handler=cmd_decide)

    p = sub.add_parser("oracle", help="cross-check a sequent by proof and model search")
    common(p)
    p.add_argument("sequent", nargs="?")
    p.add_argument("--depth", type=int)
    p.add_argument("--size-cap", dest="size_cap", type=int)
    p.add_argument("--max-nodes", dest="max_nodes", type=int)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("bench", help="time decide on doubling ladders and fit the log-log slope")
    common(p, logic_default=False)
    p.add_argument("--family", choices=list(FAMILIES))
    p.add_argument("--start", type=int)
    p.add_argument("--doublings", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("canonical", help="dump T[A], RJ_S[A], RC_S[A] or RCw_S[A]")
    common(p)
    p.add_argument("formula", nargs="?")
    p.add_argument("--stage", choices=["tree", "rj", "rc", "rcw"], default="tree")
    p.add_argument("--signature", help="extra labels for S, comma separated (w for omega)")
    p.set_defaults(handler=cmd_canonical)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    return args.handler(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
