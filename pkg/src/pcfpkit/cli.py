"""Command-line driver: ``pcfpkit reduce|check|stats|gen``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

from . import benchmarks, solver
from .eliminate import DEFAULT_COMMAND_BUDGET, BudgetExhausted, EliminationStats, auto_reduce
from .frontend import jsonfmt, prism
from .frontend.explicit import export_explicit
from .frontend.pipeline import SelectorError, parse_pipeline, run_pipeline
from .pcfp import (
    DEFAULT_STATE_LIMIT,
    ExplosionLimit,
    GoalSpec,
    IllFormedWarning,
    Pcfp,
    PcfpError,
    build_semantics,
    instantiate,
    mark_goal_states,
)
from .report import ReductionInfo, Side, render
from .unfold import UnfoldError

EXIT_OK, EXIT_INPUT, EXIT_CERTIFY, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("pcfpkit")


class UsageError(Exception):
    pass


def _parse_consts(items) -> dict:
    out = {}
    for item in items or ():
        for part in item.split(","):
            name, sep, value = part.partition("=")
            if not sep:
                raise UsageError(f"--const expects NAME=VALUE, got {part!r}")
            try:
                out[name.strip()] = int(value)
            except ValueError:
                raise UsageError(f"constant {name.strip()} must be an integer") from None
    return out


def load_model(path: str, consts: dict | None = None) -> Pcfp:
    """Read a PRISM-subset file or a PCFP JSON document."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        p = jsonfmt.parse_pcfp(text)
        return instantiate(p, consts) if consts else p
    return prism.parse_model(text, consts)


def _goal(p: Pcfp, prop: str | None) -> GoalSpec:
    if prop is None:
        if any(name == "goal" for name, _ in p.labels):
            prop = 'P=? [ F "goal" ]'
        else:
            raise UsageError('--prop is required unless the model defines label "goal"')
    return prism.parse_property(prop, p)


def _explicit(p: Pcfp, g: GoalSpec, state_limit: int):
    t = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        m = build_semantics(p, state_limit)
    m = mark_goal_states(m, g, p.consts)
    return m, time.perf_counter() - t


def _solve(m, g: GoalSpec, exact: bool):
    t = time.perf_counter()
    r = solver.solve_exact(m, g.objective) if exact else solver.solve(m, g.objective)
    return r.value, time.perf_counter() - t


def cmd_reduce(args) -> int:
    p = load_model(args.model, _parse_consts(args.const))
    g = _goal(p, args.prop)
    stats = EliminationStats()
    info = ReductionInfo()
    t = time.perf_counter()
    if args.pipeline:
        run = run_pipeline(p, parse_pipeline(Path(args.pipeline).read_text()), g,
                           budget=args.budget, strict=True)
        q, stats = run.program, run.stats
        info.unfolded = [d.args for d in parse_pipeline(Path(args.pipeline).read_text()) if d.op == "unfold"]
        for d, value in run.events:
            print(f"line {d.line}: {d.op}: {value}")
    else:
        q, info.unfolded = auto_reduce(p, g, stats=stats, budget=args.budget, strict=True)
    info.time = time.perf_counter() - t
    info.transitions_eliminated = stats.transitions_eliminated
    info.locations_eliminated = stats.locations_eliminated

    if args.emit_pcfp:
        Path(args.emit_pcfp).write_text(jsonfmt.serialize_pcfp(q))
    before, after = Side(p), Side(q)
    if args.certify or args.report or args.emit_model:
        for side in (before, after):
            m, side.build_time = _explicit(side.program, g, args.state_limit)
            st = solver.model_stats(m)
            side.states, side.transitions = st.states, st.transitions
            if args.certify or args.report:
                side.value, side.check_time = _solve(m, g, exact=args.certify)
            if side is after and args.emit_model:
                Path(args.emit_model).write_text(export_explicit(m))
    if args.certify:
        info.verdict = "PASS" if before.value == after.value else "FAIL"
    text = render(before, after, info)
    if args.report:
        Path(args.report).write_text(text)
    print(text, end="")
    return EXIT_CERTIFY if info.verdict == "FAIL" else EXIT_OK


def cmd_check(args) -> int:
    p = load_model(args.model, _parse_consts(args.const))
    g = _goal(p, args.prop)
    m, tb = _explicit(p, g, args.state_limit)
    value, tc = _solve(m, g, exact=args.exact)
    st = solver.model_stats(m)
    print(f"states: {st.states}")
    print(f"transitions: {st.transitions}")
    print(f"probability: {value}")
    if not isinstance(value, float):
        print(f"approx: {float(value):.12g}")
    print(f"build time [s]: {tb:.3f}")
    print(f"check time [s]: {tc:.3f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    p = load_model(args.model, _parse_consts(args.const))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        m = build_semantics(p, args.state_limit)
    st = solver.model_stats(m)
    print(f"states: {st.states}")
    print(f"transitions: {st.transitions}")
    print(f"actions: {st.actions}")
    print(f"PCFP locations: {len(p.locations)}")
    print(f"PCFP commands: {len(p.commands)}")
    print(f"PCFP transitions: {sum(len(c.destinations) for c in p.commands)}")
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "coin":
        text = benchmarks.gen_coin(args.n)
    else:
        if args.m is None:
            raise UsageError("gen expfamily needs --m")
        text = benchmarks.gen_expfamily(args.m)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcfpkit", description="Unfold and eliminate locations of probabilistic programs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, prop=True):
        sp.add_argument("model", help="PRISM-subset file or PCFP JSON")
        sp.add_argument("--const", action="append", metavar="NAME=VALUE", help="define constants")
        sp.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
        if prop:
            sp.add_argument("--prop", help='e.g. "P=? [ F x>=N & !f ]"')

    r = sub.add_parser("reduce", help="reduce a model and optionally certify the result")
    common(r)
    how = r.add_mutually_exclusive_group(required=True)
    how.add_argument("--pipeline", metavar="FILE")
    how.add_argument("--auto", action="store_true")
    r.add_argument("--emit-pcfp", metavar="OUT.json")
    r.add_argument("--emit-model", metavar="OUT.txt")
    r.add_argument("--report", metavar="OUT.txt")
    r.add_argument("--certify", action="store_true", help="solve both models exactly and compare")
    r.add_argument("--budget", type=int, default=DEFAULT_COMMAND_BUDGET, help="maximum number of commands")
    r.set_defaults(func=cmd_reduce)

    c = sub.add_parser("check", help="build and solve a model")
    common(c)
    c.add_argument("--exact", action="store_true")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("stats", help="size of the explicit model")
    common(s, prop=False)
    s.set_defaults(func=cmd_stats)

    g = sub.add_parser("gen", help="emit a benchmark model")
    g.add_argument("family", choices=["coin", "expfamily"])
    g.add_argument("--n", type=int, help="coin: value of N (omit to leave N undefined)")
    g.add_argument("--m", type=int, help="expfamily: number of variable pairs")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (BudgetExhausted, ExplosionLimit) as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (prism.ParseError, prism.ModelTypeError, PcfpError, UnfoldError, SelectorError, UsageError,
            benchmarks.BadParams, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
