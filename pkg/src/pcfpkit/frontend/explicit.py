"""Plain-text export of explicit models.

::

    STATES 3
    INITIAL 0
    0 c0 1 1/2
    0 c0 2 1/2
    GOAL 2

Transition lines are ``src action dst num/den``, ordered numerically by
source, then action name, then target.
"""

from __future__ import annotations

from fractions import Fraction

from ..pcfp import ExplicitModel
from .prism import ParseError


def export_explicit(m: ExplicitModel) -> str:
    lines = [f"STATES {m.num_states}", f"INITIAL {m.initial}"]
    rows = []
    for s, acts in enumerate(m.choices):
        for tag, dist in acts:
            action = tag or "-"
            if any(ch.isspace() for ch in action):
                raise ValueError(f"action name {action!r} contains whitespace")
            for q, t in dist:
                rows.append((s, action, t, q))
    rows.sort(key=lambda r: r[:3])
    lines += [f"{s} {a} {t} {q.numerator}/{q.denominator}" for s, a, t, q in rows]
    if m.goal is not None:
        lines += [f"GOAL {i}" for i, g in enumerate(m.goal) if g]
    return "\n".join(lines) + "\n"


def parse_explicit(text: str) -> ExplicitModel:
    """Inverse of :func:`export_explicit`. States come back as opaque ``("s", (i,))``."""
    n = initial = None
    trans: dict = {}
    goals = []
    has_goal = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "STATES" and len(parts) == 2:
                n = int(parts[1])
            elif parts[0] == "INITIAL" and len(parts) == 2:
                initial = int(parts[1])
            elif parts[0] == "GOAL" and len(parts) == 2:
                has_goal = True
                goals.append(int(parts[1]))
            elif len(parts) == 4:
                s, a, t, q = int(parts[0]), parts[1], int(parts[2]), Fraction(parts[3])
                trans.setdefault(s, {}).setdefault(a, []).append((q, t))
            else:
                raise ValueError(raw)
        except ValueError:
            raise ParseError(f"bad explicit-model line {raw!r}", lineno, 1) from None
    if n is None or initial is None:
        raise ParseError("missing STATES or INITIAL header")
    choices = [[] for _ in range(n)]
    for s, acts in trans.items():
        for a, dist in acts.items():
            choices[s].append((a, tuple(sorted(dist, key=lambda x: x[1]))))
    goal = None
    if has_goal:
        goal = [False] * n
        for g in goals:
            goal[g] = True
    return ExplicitModel(("s",), [("s", (i,)) for i in range(n)], choices, initial, {}, goal, {})
