"""Before/after comparison tables for a reduction run."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .pcfp import Pcfp


@dataclass
class Side:
    program: Pcfp
    states: int | None = None
    transitions: int | None = None
    build_time: float | None = None
    check_time: float | None = None
    value: Fraction | float | None = None


@dataclass
class ReductionInfo:
    time: float = 0.0
    transitions_eliminated: int = 0
    locations_eliminated: int = 0
    unfolded: list = field(default_factory=list)
    verdict: str | None = None  # "PASS", "FAIL" or None when not certified


def pcfp_transitions(p: Pcfp) -> int:
    return sum(len(c.destinations) for c in p.commands)


def _fmt_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, Fraction):
        if v.denominator < 10**12:
            return str(v)
        return f"{float(v):.12g} (exact, {v.denominator.bit_length()}-bit denominator)"
    return f"{v:.12g}"


def _fmt_time(t) -> str:
    return "-" if t is None else f"{t:.3f}"


def _fmt_int(n) -> str:
    return "-" if n is None else str(n)


def _delta(a, b) -> str:
    if a is None or b is None:
        return "-"
    return f"{b - a:+d}"


def render(before: Side, after: Side, info: ReductionInfo, timings: bool = True) -> str:
    """Table of model and program sizes before and after reduction.

    With ``timings=False`` the time rows are omitted, giving byte-identical
    output for identical inputs.
    """
    b_cmds, a_cmds = len(before.program.commands), len(after.program.commands)
    b_max = max((len(v) for v in before.program.commands_at.values()), default=0)
    a_max = max((len(v) for v in after.program.commands_at.values()), default=0)
    rows = [
        ("states", _fmt_int(before.states), _fmt_int(after.states), _delta(before.states, after.states)),
        ("transitions", _fmt_int(before.transitions), _fmt_int(after.transitions),
         _delta(before.transitions, after.transitions)),
        ("PCFP locations", str(len(before.program.locations)), str(len(after.program.locations)),
         _delta(len(before.program.locations), len(after.program.locations))),
        ("PCFP commands", str(b_cmds), str(a_cmds), _delta(b_cmds, a_cmds)),
        ("PCFP max commands/location", str(b_max), str(a_max), _delta(b_max, a_max)),
        ("PCFP transitions", str(pcfp_transitions(before.program)), str(pcfp_transitions(after.program)),
         _delta(pcfp_transitions(before.program), pcfp_transitions(after.program))),
    ]
    if timings:
        rows += [
            ("build time [s]", _fmt_time(before.build_time), _fmt_time(after.build_time), ""),
            ("check time [s]", _fmt_time(before.check_time), _fmt_time(after.check_time), ""),
        ]
    width = max(len(r[0]) for r in rows)
    cols = [max(len(r[i]) for r in rows + [("", "before", "after", "delta")]) for i in (1, 2, 3)]
    head = f"{'':<{width}}  {'before':>{cols[0]}}  {'after':>{cols[1]}}  {'delta':>{cols[2]}}"
    lines = [head, "-" * len(head)]
    lines += [f"{r[0]:<{width}}  {r[1]:>{cols[0]}}  {r[2]:>{cols[1]}}  {r[3]:>{cols[2]}}" for r in rows]
    lines.append("")
    lines.append(f"probability before: {_fmt_value(before.value)}")
    lines.append(f"probability after:  {_fmt_value(after.value)}")
    if info.unfolded:
        lines.append("unfolded: " + "; ".join(",".join(sorted(s)) for s in info.unfolded))
    lines.append(f"transition eliminations: {info.transitions_eliminated}")
    lines.append(f"location eliminations: {info.locations_eliminated}")
    if timings:
        lines.append(f"reduction time [s]: {_fmt_time(info.time)}")
    lines.append(f"certification: {info.verdict or 'not run'}")
    return "\n".join(lines) + "\n"
