"""Location and transition elimination on PCFPs.

All rewrites keep probabilities as exact fractions. Each rule refuses (with a
specific exception) instead of applying when a precondition cannot be
established, so a ``check_sat`` result of ``UNKNOWN`` never leads to an unsound
rewrite.

Rules assume the program is well-formed (the out-of-domain sink is
unreachable); the coverage checks below rely on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from . import expr as E
from .expr import Pred, Update
from .pcfp import Command, Destination, GoalSpec, Pcfp, check_potential_goal, goal_for_location
from .unfold import SymbolicBound, prune_unreachable, unfold, unfoldable_sets

log = logging.getLogger(__name__)

DEFAULT_COMMAND_BUDGET = 10_000


class EliminationError(Exception):
    pass


class PotentialGoalTarget(EliminationError):
    pass


class PotentialGoal(EliminationError):
    pass


class NoCommandsAtTarget(EliminationError):
    pass


class UncoveredTarget(NoCommandsAtTarget):
    """Some valuation entering the target enables none of its commands."""


class SinkTarget(EliminationError):
    pass


class IsInitial(EliminationError):
    pass


class HasSelfLoop(EliminationError):
    pass


class FullLoop(EliminationError):
    pass


class NotNop(EliminationError):
    pass


class NotSelfLoop(EliminationError):
    pass


class BudgetExhausted(EliminationError):
    pass


class NotIdempotent(EliminationError):
    pass


class TransitionRef(NamedTuple):
    command: int
    destination: int


@dataclass
class EliminationStats:
    transitions_eliminated: int = 0
    locations_eliminated: int = 0
    commands_removed: int = 0
    commands_created: int = 0
    # per ingoing command of the last eliminate_location call
    per_command: dict = field(default_factory=dict)

    def absorb(self, other: "EliminationStats") -> None:
        self.transitions_eliminated += other.transitions_eliminated
        self.locations_eliminated += other.locations_eliminated
        self.commands_removed += other.commands_removed
        self.commands_created += other.commands_created
        self.per_command = dict(other.per_command) or self.per_command


# ---------------------------------------------------------------------------
# helpers


def _domain_pred(p: Pcfp, names) -> Pred:
    parts = []
    for n in sorted(names):
        if n in p.var_index:
            v = p.variable(n)
            parts += [E.Cmp("<=", v.lo, E.Var(n)), E.Cmp("<=", E.Var(n), v.hi)]
    return E.conj(*parts)


def _unsat(p: Pcfp, phi: Pred) -> bool:
    return E.check_sat(phi, p.dom, p.consts).unsatisfiable


def _merge(dests) -> tuple:
    """Sum probabilities of destinations with equal update and target."""
    acc: dict = {}
    for d in dests:
        key = (d.update, d.target)
        acc[key] = acc.get(key, Fraction(0)) + d.prob
    return tuple(Destination(q, u, t) for (u, t), q in acc.items())


def _fresh_tag(base: str, used: set) -> str:
    tag, k = base, 0
    while tag in used:
        k += 1
        tag = f"{base}'{k}"
    used.add(tag)
    return tag


def _replace_command(p: Pcfp, index: int, new: list) -> Pcfp:
    cmds = p.commands[:index] + tuple(new) + p.commands[index + 1:]
    return p.replace(commands=cmds)


def _simplified(guard: Pred, prune: bool) -> Pred:
    return E.simplify(guard) if prune else guard


def multiplicity(p: Pcfp, t: TransitionRef) -> int:
    c = p.commands[t.command]
    target = c.destinations[t.destination].target
    return sum(1 for d in c.destinations if d.target == target)


def coverage_gap(p: Pcfp, guard: Pred, u: Update, target: str) -> Pred:
    """Valuations satisfying ``guard`` whose successor enables nothing at ``target``.

    Only in-domain successors are considered (well-formedness).
    """
    psis = [p.commands[ci].guard for ci in p.commands_at.get(target, ())]
    return E.conj(guard, E.wp(u, _domain_pred(p, u.written())), E.Not(E.disj(*(E.wp(u, s) for s in psis))))


def is_covered(p: Pcfp, guard: Pred, u: Update, target: str) -> bool:
    return _unsat(p, coverage_gap(p, guard, u, target))


# ---------------------------------------------------------------------------
# transition elimination


def eliminate_transition(
    p: Pcfp,
    t: TransitionRef,
    g: GoalSpec,
    *,
    prune: bool = True,
    stats: EliminationStats | None = None,
    check: bool = True,
) -> Pcfp:
    """Replace the command holding ``t`` by one command per command at its target.

    With ``prune`` guards are simplified and commands with unsatisfiable guards
    are dropped right away; without it the raw construction is returned.
    """
    gamma = p.commands[t.command]
    d1 = gamma.destinations[t.destination]
    l1 = d1.target
    if l1 is None:
        raise SinkTarget("cannot eliminate a transition into the sink")
    at_target = [p.commands[ci] for ci in p.commands_at.get(l1, ())]
    if check:
        if check_potential_goal(p, l1, g):
            raise PotentialGoalTarget(f"{l1} may contain goal states")
        if not at_target:
            raise NoCommandsAtTarget(f"{l1} has no commands")
        if not is_covered(p, gamma.guard, d1.update, l1):
            raise UncoveredTarget(f"some successor at {l1} enables no command")
    others = [d for i, d in enumerate(gamma.destinations) if i != t.destination]
    used = {c.tag for c in p.commands}
    used.discard(gamma.tag)
    new = []
    for i, psi_cmd in enumerate(at_target):
        guard = _simplified(E.conj(gamma.guard, E.wp(d1.update, psi_cmd.guard)), prune)
        if prune and (guard == E.FALSE or _unsat(p, guard)):
            continue
        branches = list(others)
        for d in psi_cmd.destinations:
            upd = E.compose(d1.update, d.update) if prune else d1.update.then(d.update)
            branches.append(Destination(d1.prob * d.prob, upd, d.target))
        new.append(Command(_fresh_tag(f"{gamma.tag}.{i}", used), gamma.source, guard, _merge(branches)))
    if stats is not None:
        stats.transitions_eliminated += 1
        stats.commands_created += len(new)
        stats.commands_removed += 1
    return _replace_command(p, t.command, new)


# ---------------------------------------------------------------------------
# location elimination


def check_eliminable(p: Pcfp, loc: str, g: GoalSpec) -> None:
    """Raise the reason why ``loc`` cannot be eliminated, if any."""
    if loc == p.initial:
        raise IsInitial(loc)
    if p.has_self_loop(loc):
        raise HasSelfLoop(loc)
    if check_potential_goal(p, loc, g):
        raise PotentialGoalTarget(loc)
    ingoing = p.ingoing(loc)
    if ingoing and not p.commands_at.get(loc):
        raise NoCommandsAtTarget(loc)
    for ci, di in ingoing:
        c = p.commands[ci]
        if not is_covered(p, c.guard, c.destinations[di].update, loc):
            raise UncoveredTarget(f"{loc} via {c.tag}")


def eliminate_location(
    p: Pcfp,
    loc: str,
    g: GoalSpec,
    *,
    prune: bool = True,
    stats: EliminationStats | None = None,
) -> Pcfp:
    """Eliminate all ingoing transitions of ``loc`` and delete it.

    Transitions are taken lowest multiplicity first, then in program order.
    ``stats.per_command`` records how many eliminations each originally
    ingoing command caused. With ``prune`` the program is first cleaned by
    ``remove_unsat_commands``, so commands that can never fire (such as a
    dead self-loop) do not block the elimination.
    """
    if prune:
        p = remove_unsat_commands(p)
        if loc not in p.loc_index:
            return p
    check_eliminable(p, loc, g)
    stats = stats if stats is not None else EliminationStats()
    stats.per_command = {}
    origin = {c.tag: c.tag for ci, _ in p.ingoing(loc) for c in [p.commands[ci]]}
    while True:
        ingoing = p.ingoing(loc)
        if not ingoing:
            break
        t = min((TransitionRef(ci, di) for ci, di in ingoing), key=lambda r: (multiplicity(p, r), r))
        parent = p.commands[t.command].tag
        root = origin.get(parent, parent)
        before = {c.tag for c in p.commands}
        p = eliminate_transition(p, t, g, prune=prune, stats=stats, check=False)
        for c in p.commands:
            if c.tag not in before:
                origin[c.tag] = root
        stats.per_command[root] = stats.per_command.get(root, 0) + 1
    stats.locations_eliminated += 1
    return p.replace(
        locations=tuple(l for l in p.locations if l.name != loc),
        commands=tuple(c for c in p.commands if c.source != loc),
    )


# ---------------------------------------------------------------------------
# unsatisfiable commands


def _possibly_enabled(p: Pcfp, loc: str) -> set:
    """Indices of commands at ``loc`` that some reachable state may enable."""
    here = p.commands_at.get(loc, [])
    entries = [
        (c.guard, d.update)
        for c in p.commands
        if c.source != loc
        for d in c.destinations
        if d.target == loc
    ]
    enabled: set = set()
    changed = True
    while changed:
        changed = False
        loops = [
            (p.commands[j].guard, d.update)
            for j in enabled
            for d in p.commands[j].destinations
            if d.target == loc
        ]
        for ci in here:
            if ci in enabled:
                continue
            phi = p.commands[ci].guard
            ctx = E.disj(*(E.conj(psi, E.wp(u, phi)) for psi, u in entries + loops))
            if not _unsat(p, ctx):
                enabled.add(ci)
                changed = True
    return enabled


def remove_unsat_commands(p: Pcfp, stats: EliminationStats | None = None) -> Pcfp:
    """Drop commands that can never be enabled, then unreachable locations.

    A command at a non-initial location is kept if its guard can hold after
    some transition entering the location from elsewhere, or after a
    self-loop of a command already known to be possibly enabled.
    """
    while True:
        n = len(p.commands)
        keep = [not _unsat(p, c.guard) for c in p.commands]
        p = p.replace(commands=tuple(c for c, k in zip(p.commands, keep) if k))
        drop: set = set()
        for l in p.locations:
            if l.name == p.initial:
                continue
            here = p.commands_at.get(l.name, [])
            if here:
                drop |= set(here) - _possibly_enabled(p, l.name)
        if drop:
            p = p.replace(commands=tuple(c for i, c in enumerate(p.commands) if i not in drop))
        p = prune_unreachable(p)
        removed = n - len(p.commands)
        if stats is not None:
            stats.commands_removed += removed
        if removed == 0:
            return p


# ---------------------------------------------------------------------------
# self-loops


def _self_loop(p: Pcfp, t: TransitionRef) -> tuple:
    c = p.commands[t.command]
    d = c.destinations[t.destination]
    if d.target != c.source:
        raise NotSelfLoop(f"{c.tag}: destination {t.destination} leaves {c.source}")
    if d.prob >= 1:
        raise FullLoop(f"{c.tag}: self-loop has probability 1")
    return c, d


def rescale_nop_self_loop(p: Pcfp, t: TransitionRef) -> Pcfp:
    c, d = _self_loop(p, t)
    if not E.is_nop(d.update):
        raise NotNop(f"{c.tag}: self-loop update is not nop")
    scale = 1 / (1 - d.prob)
    rest = [Destination(x.prob * scale, x.update, x.target) for i, x in enumerate(c.destinations) if i != t.destination]
    return _replace_command(p, t.command, [Command(c.tag, c.source, c.guard, tuple(rest))])


def eliminate_idempotent_self_loop(p: Pcfp, t: TransitionRef, g: GoalSpec, *, prune: bool = True) -> Pcfp:
    """Remove an idempotent self-loop by looking one step past it.

    The command ``phi -> p1:u1:l + sum pj:uj:lj`` is replaced by one command
    per other command ``psi`` at ``l`` (guard ``phi & wp(u1, psi)``) and one for
    itself (guard ``phi & wp(u1, phi)``, the loop probability spread over the
    remaining branches).
    """
    gamma, d1 = _self_loop(p, t)
    loc = gamma.source
    if E.check_idempotent(d1.update, p.dom, p.consts) is not E.Idempotence.YES:
        raise NotIdempotent(f"{gamma.tag}: update {E.show(d1.update)} is not known to be idempotent")
    if check_potential_goal(p, loc, g):
        after = E.wp(d1.update, goal_for_location(p, loc, g))
        if not _unsat(p, after):
            raise PotentialGoal(f"{loc} may contain goal states reached by the loop update")
    if not is_covered(p, gamma.guard, d1.update, loc):
        raise UncoveredTarget(f"{gamma.tag}: some state after the loop enables no command")
    others = [d for i, d in enumerate(gamma.destinations) if i != t.destination]
    compose = (lambda a, b: E.compose(a, b)) if prune else (lambda a, b: a.then(b))
    used = {c.tag for c in p.commands}
    used.discard(gamma.tag)
    new = []
    for ci in p.commands_at[loc]:
        cmd = p.commands[ci]
        if ci == t.command:
            continue
        guard = _simplified(E.conj(gamma.guard, E.wp(d1.update, cmd.guard)), prune)
        if prune and (guard == E.FALSE or _unsat(p, guard)):
            continue
        branches = others + [Destination(d1.prob * q.prob, compose(d1.update, q.update), q.target) for q in cmd.destinations]
        new.append(Command(_fresh_tag(f"{gamma.tag}.{len(new)}", used), loc, guard, _merge(branches)))
    guard = _simplified(E.conj(gamma.guard, E.wp(d1.update, gamma.guard)), prune)
    if not (prune and (guard == E.FALSE or _unsat(p, guard))):
        scale = d1.prob / (1 - d1.prob)
        branches = others + [Destination(d.prob * scale, compose(d1.update, d.update), d.target) for d in others]
        new.append(Command(_fresh_tag(f"{gamma.tag}.{len(new)}", used), loc, guard, _merge(branches)))
    if any(d.target == loc for d in others) or any(
        q.target == loc for ci in p.commands_at[loc] if ci != t.command for q in p.commands[ci].destinations
    ):
        log.info("idempotent loop elimination at %s introduces new self-loops", loc)
    return _replace_command(p, t.command, new)


# ---------------------------------------------------------------------------
# drivers


def eliminable_locations(p: Pcfp, g: GoalSpec) -> list:
    """Locations that satisfy every precondition of ``eliminate_location``.

    Ordered by ingoing transitions times outgoing commands, then program order.
    Locations without commands are excluded. Commands that can never fire
    are ignored (the check runs on ``remove_unsat_commands(p)``).
    """
    p = remove_unsat_commands(p)
    out = []
    for idx, l in enumerate(p.locations):
        if not p.commands_at.get(l.name):
            continue
        try:
            check_eliminable(p, l.name, g)
        except EliminationError:
            continue
        cost = len(p.ingoing(l.name)) * len(p.commands_at[l.name])
        out.append((cost, idx, l.name))
    return [name for _, _, name in sorted(out)]


def eliminate_all(
    p: Pcfp,
    g: GoalSpec,
    budget: int = DEFAULT_COMMAND_BUDGET,
    stats: EliminationStats | None = None,
    strict: bool = False,
) -> Pcfp:
    """Eliminate locations until none qualifies or the command budget is hit.

    Hitting the budget logs a warning, or raises ``BudgetExhausted`` when
    ``strict`` is set.
    """
    p = remove_unsat_commands(p, stats)
    while True:
        cands = eliminable_locations(p, g)
        if not cands:
            return p
        q = eliminate_location(p, cands[0], g, stats=stats)
        q = remove_unsat_commands(q, stats)
        if len(q.commands) > budget:
            if strict:
                raise BudgetExhausted(f"more than {budget} commands after eliminating {cands[0]}")
            log.warning("command budget %d exceeded; stopping elimination", budget)
            return q
        p = q


def suggest_unfold(p: Pcfp, g: GoalSpec, max_product: int = 1024) -> frozenset | None:
    """Unfoldable set whose unfolding makes the most locations eliminable."""
    best = None
    for names in unfoldable_sets(p):
        size = 1
        try:
            for n in names:
                v = p.variable(n)
                size *= E.evaluate(v.hi, {}, p.consts) - E.evaluate(v.lo, {}, p.consts) + 1
        except E.UnboundConstant:
            continue
        if size > max_product:
            continue
        try:
            q = remove_unsat_commands(unfold(p, names))
        except SymbolicBound:
            continue
        count = len(eliminable_locations(q, g))
        key = (-count, size, sorted(names))
        if best is None or key < best[0]:
            best = (key, names)
    if best is None or best[0][0] == 0:
        return None
    return best[1]


def auto_reduce(
    p: Pcfp,
    g: GoalSpec,
    growth: float = 1.0,
    max_rounds: int = 16,
    stats: EliminationStats | None = None,
    budget: int = DEFAULT_COMMAND_BUDGET,
    strict: bool = False,
) -> tuple[Pcfp, list]:
    """Alternate unfolding and elimination while the location count does not grow.

    Returns the program and the list of unfolded variable sets.
    """
    p = eliminate_all(p, g, budget, stats, strict)
    steps: list = []
    for _ in range(max_rounds):
        names = suggest_unfold(p, g)
        if names is None:
            break
        trial = EliminationStats()
        q = eliminate_all(unfold(p, names), g, budget, trial, strict)
        if len(q.locations) > growth * len(p.locations) or q == p:
            break
        if stats is not None:
            stats.absorb(trial)
        p = q
        steps.append(names)
    return p, steps
