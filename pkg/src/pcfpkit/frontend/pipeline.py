"""Line-oriented reduction scripts.

Each non-empty line is one directive::

    unfold f            # or unfold a,b  /  unfold("s")
    eliminate f=1       # label equalities, or a location name
    eliminate-all       # or eliminate_all()
    remove-unsat
    stats
    check
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from .. import eliminate as El
from ..pcfp import GoalSpec, IllFormedWarning, Pcfp, build_semantics, mark_goal_states
from ..unfold import unfold
from .prism import ParseError


class UnknownDirective(ParseError):
    pass


class SelectorError(LookupError):
    pass


@dataclass(frozen=True)
class Directive:
    op: str  # unfold, eliminate, eliminate-all, remove-unsat, stats, check
    args: tuple = ()
    line: int = 0


_ALIASES = {
    "unfold": "unfold",
    "eliminate": "eliminate",
    "eliminate-all": "eliminate-all",
    "eliminate_all": "eliminate-all",
    "remove-unsat": "remove-unsat",
    "remove_unsat": "remove-unsat",
    "stats": "stats",
    "check": "check",
}
_CALL = re.compile(r"^([A-Za-z_-]+)\s*\((.*)\)\s*;?$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


def _split_args(text: str) -> list:
    return [a.strip().strip("\"'") for a in re.split(r"[,\s]+", text.strip()) if a.strip()]


def parse_pipeline(text: str) -> list:
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CALL.match(line)
        if m:
            head, rest = m.group(1), m.group(2)
            args = _split_args(rest)
        else:
            head, _, rest = line.partition(" ")
            args = _split_args(rest) if head == "unfold" else ([rest.strip()] if rest.strip() else [])
        op = _ALIASES.get(head)
        if op is None:
            raise UnknownDirective(f"unknown directive {head!r}", lineno, 1)
        if op == "unfold":
            if not args or not all(_NAME.match(a) for a in args):
                raise ParseError("unfold needs one or more variable names", lineno, 1)
        elif op == "eliminate":
            if len(args) != 1 or not args[0]:
                raise ParseError("eliminate needs a location selector", lineno, 1)
        elif args:
            raise ParseError(f"{op} takes no arguments", lineno, 1)
        out.append(Directive(op, tuple(args), lineno))
    return out


def select_locations(p: Pcfp, selector: str) -> list:
    """Locations named ``selector``, or whose label contains all given equalities."""
    if selector in p.loc_index:
        return [selector]
    want = {}
    for part in re.split(r"\s*(?:,|&)\s*", selector.strip()):
        m = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(-?\d+|true|false)", part)
        if not m:
            raise SelectorError(f"bad location selector {selector!r}")
        v = m.group(2)
        want[m.group(1)] = {"true": 1, "false": 0}[v] if v in ("true", "false") else int(v)
    hits = [l.name for l in p.locations if all(l.label_map.get(k) == v for k, v in want.items())]
    if not hits:
        raise SelectorError(f"no location matches {selector!r}")
    return hits


@dataclass
class PipelineRun:
    program: Pcfp
    stats: El.EliminationStats = field(default_factory=El.EliminationStats)
    events: list = field(default_factory=list)


def run_pipeline(
    p: Pcfp,
    directives: list,
    goal: GoalSpec,
    *,
    budget: int = El.DEFAULT_COMMAND_BUDGET,
    strict: bool = False,
) -> PipelineRun:
    """Apply directives in order. ``stats`` and ``check`` record events."""
    from .. import solver

    run = PipelineRun(p)
    for d in directives:
        q = run.program
        if d.op == "unfold":
            q = unfold(q, set(d.args))
        elif d.op == "eliminate":
            for loc in select_locations(q, d.args[0]):
                if loc in q.loc_index:
                    q = El.eliminate_location(q, loc, goal, stats=run.stats)
        elif d.op == "eliminate-all":
            q = El.eliminate_all(q, goal, budget, run.stats, strict)
        elif d.op == "remove-unsat":
            q = El.remove_unsat_commands(q, run.stats)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IllFormedWarning)
                m = build_semantics(q)
            if d.op == "stats":
                run.events.append((d, solver.model_stats(m)))
            else:
                m = mark_goal_states(m, goal, q.consts)
                run.events.append((d, solver.solve(m, goal.objective).value))
        run.program = q
    return run
