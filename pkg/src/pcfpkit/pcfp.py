"""Probabilistic control-flow programs and their explicit MDP semantics."""

from __future__ import annotations

import enum
import logging
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from . import expr as E
from .expr import Pred, Update

log = logging.getLogger(__name__)

DEFAULT_STATE_LIMIT = 10_000_000


class PcfpError(Exception):
    pass


class ExplosionLimit(PcfpError):
    pass


class InvalidProgram(PcfpError):
    pass


class IllFormedWarning(UserWarning):
    """The out-of-domain sink state is reachable."""


@dataclass(frozen=True, slots=True)
class Variable:
    name: str
    lo: E.IntExpr
    hi: E.IntExpr
    init: E.IntExpr
    kind: str = "int"  # "int" or "bool"; bools always have bounds 0..1

    @staticmethod
    def boolean(name: str, init: bool | E.IntExpr = False) -> "Variable":
        return Variable(name, E.Lit(0), E.Lit(1), E.lit(int(init) if isinstance(init, bool) else init), "bool")

    @staticmethod
    def integer(name: str, lo, hi, init=None) -> "Variable":
        lo, hi = E.lit(lo), E.lit(hi)
        return Variable(name, lo, hi, lo if init is None else E.lit(init), "int")


@dataclass(frozen=True, slots=True)
class Location:
    """A control location.

    ``base`` is the name of the location before any unfolding and ``label``
    the sorted tuple of ``(variable, value)`` pairs of unfolded variables.
    """

    name: str
    base: str = ""
    label: tuple = ()

    def __post_init__(self):
        if not self.base:
            object.__setattr__(self, "base", self.name)
        object.__setattr__(self, "label", tuple(sorted(self.label)))

    @property
    def label_map(self) -> dict:
        return dict(self.label)


@dataclass(frozen=True, slots=True)
class Destination:
    prob: Fraction
    update: Update
    target: str | None  # None is the out-of-domain sink

    def __post_init__(self):
        object.__setattr__(self, "prob", Fraction(self.prob))


@dataclass(frozen=True, slots=True)
class Command:
    tag: str
    source: str
    guard: Pred
    destinations: tuple

    def __post_init__(self):
        object.__setattr__(self, "destinations", tuple(self.destinations))

    @property
    def total_prob(self) -> Fraction:
        return sum((d.prob for d in self.destinations), Fraction(0))


class Objective(enum.Enum):
    FORCED = "forced"
    MAXIMIZE = "max"
    MINIMIZE = "min"


@dataclass(frozen=True)
class GoalSpec:
    objective: Objective
    predicate: Pred

    @staticmethod
    def forced(pred: Pred) -> "GoalSpec":
        return GoalSpec(Objective.FORCED, pred)


@dataclass(frozen=True)
class Pcfp:
    """A program: locations, bounded variables, location-guided commands.

    ``unfolded`` keeps the declarations of variables that were moved into the
    location space, so goal predicates and labels can still mention them.
    Constants map names to values; ``None`` means the constant is symbolic.
    """

    locations: tuple
    variables: tuple
    commands: tuple
    initial: str
    constants: tuple = ()
    unfolded: tuple = ()
    labels: tuple = ()
    model_type: str = "dtmc"

    def __post_init__(self):
        for name in ("locations", "variables", "commands", "constants", "unfolded", "labels"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    # -- lookups ---------------------------------------------------------

    @cached_property
    def loc_index(self) -> dict:
        return {l.name: i for i, l in enumerate(self.locations)}

    @cached_property
    def var_index(self) -> dict:
        return {v.name: i for i, v in enumerate(self.variables)}

    def location(self, name: str) -> Location:
        return self.locations[self.loc_index[name]]

    def variable(self, name: str) -> Variable:
        for v in self.variables + self.unfolded:
            if v.name == name:
                return v
        raise KeyError(name)

    @cached_property
    def consts(self) -> dict:
        return dict(self.constants)

    @cached_property
    def dom(self) -> dict:
        """DomainMap over program variables and unfolded label variables."""
        return {v.name: (v.lo, v.hi) for v in self.unfolded + self.variables}

    @cached_property
    def commands_at(self) -> dict:
        out: dict = {l.name: [] for l in self.locations}
        for i, c in enumerate(self.commands):
            out.setdefault(c.source, []).append(i)
        return out

    def label_of(self, loc: str) -> dict:
        return self.location(loc).label_map

    def ingoing(self, loc: str) -> list:
        """``(command index, destination index)`` pairs targeting ``loc``."""
        return [
            (ci, di)
            for ci, c in enumerate(self.commands)
            for di, d in enumerate(c.destinations)
            if d.target == loc
        ]

    def has_self_loop(self, loc: str) -> bool:
        return any(
            d.target == loc for ci in self.commands_at.get(loc, ()) for d in self.commands[ci].destinations
        )

    @property
    def pcfp_transitions(self) -> int:
        return sum(len(c.destinations) for c in self.commands)

    def with_constants(self, **values: int) -> "Pcfp":
        return instantiate(self, values)

    def replace(self, **kw) -> "Pcfp":
        return replace(self, **kw)

    def validate(self) -> None:
        names = [v.name for v in self.variables + self.unfolded]
        if len(set(names)) != len(names):
            raise InvalidProgram("duplicate variable name")
        locs = self.loc_index
        if len(locs) != len(self.locations) or not self.locations:
            raise InvalidProgram("location names must be unique and non-empty")
        if self.initial not in locs:
            raise InvalidProgram(f"unknown initial location {self.initial}")
        tags = [c.tag for c in self.commands]
        if len(set(tags)) != len(tags):
            raise InvalidProgram("duplicate command tag")
        for c in self.commands:
            if c.source not in locs:
                raise InvalidProgram(f"command {c.tag}: unknown source {c.source}")
            if not c.destinations:
                raise InvalidProgram(f"command {c.tag} has no destinations")
            if c.total_prob != 1:
                raise InvalidProgram(f"command {c.tag}: probabilities sum to {c.total_prob}")
            for d in c.destinations:
                if not 0 < d.prob <= 1:
                    raise InvalidProgram(f"command {c.tag}: probability {d.prob} outside (0,1]")
                if d.target is not None and d.target not in locs:
                    raise InvalidProgram(f"command {c.tag}: unknown target {d.target}")


def single_location(variables: Iterable[Variable], commands: Iterable[tuple], *, name: str = "l0", **kw) -> Pcfp:
    """Build a one-location program from ``(guard, [(prob, update), ...])`` pairs."""
    cmds = []
    for i, (guard, branches) in enumerate(commands):
        dests = tuple(Destination(Fraction(p), u, name) for p, u in branches)
        cmds.append(Command(f"c{i}", name, guard, dests))
    return Pcfp((Location(name),), tuple(variables), tuple(cmds), name, **kw)


def instantiate(p: Pcfp, values: Mapping[str, int]) -> Pcfp:
    known = dict(p.constants)
    for k, v in values.items():
        if k not in known:
            raise KeyError(f"unknown constant {k}")
        known[k] = int(v)
    return replace(p, constants=tuple(known.items()))


def constants_bound(p: Pcfp) -> bool:
    return all(v is not None for _, v in p.constants)


# ---------------------------------------------------------------------------
# Explicit models


@dataclass
class ExplicitModel:
    """Explicit MDP: state ``i`` is ``(location, values)`` or ``None`` for the sink.

    ``choices[i]`` lists ``(tag, ((prob, target), ...))`` per available
    action; targets are merged and sorted by index.
    """

    variables: tuple
    states: list
    choices: list
    initial: int = 0
    location_labels: dict = field(default_factory=dict)
    goal: list | None = None
    location_bases: dict = field(default_factory=dict)

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def sink(self) -> int | None:
        for i, s in enumerate(self.states):
            if s is None:
                return i
        return None

    def is_chain(self) -> bool:
        return all(len(c) <= 1 for c in self.choices)

    def valuation(self, i: int) -> dict | None:
        """Full valuation of a state: program variables plus location label."""
        s = self.states[i]
        if s is None:
            return None
        loc, values = s
        nu = dict(self.location_labels.get(loc, ()))
        nu.update(zip(self.variables, values))
        return nu

    def goal_states(self) -> list:
        if self.goal is None:
            raise ValueError("goal mask not set; call mark_goal_states")
        return [i for i, g in enumerate(self.goal) if g]


def _in_domain_checker(order, bounds):
    los = tuple(b[0] for b in bounds)
    his = tuple(b[1] for b in bounds)
    n = len(order)

    def ok(v):
        for i in range(n):
            if not los[i] <= v[i] <= his[i]:
                return False
        return True

    return ok


def build_semantics(p: Pcfp, state_limit: int = DEFAULT_STATE_LIMIT) -> ExplicitModel:
    """Breadth-first exploration from the initial state.

    States are interned in discovery order, commands visited in program
    order. Out-of-domain successors and destinations into the sink location
    go to one absorbing sink state, with an ``IllFormedWarning``.
    """
    consts = p.consts
    order = tuple(v.name for v in p.variables)
    index = {n: i for i, n in enumerate(order)}
    bounds = [(E.evaluate(v.lo, {}, consts), E.evaluate(v.hi, {}, consts)) for v in p.variables]
    in_dom = _in_domain_checker(order, bounds)
    init_vals = tuple(E.evaluate(v.init, {}, consts) for v in p.variables)

    compiled: dict = {}
    for c in p.commands:
        guard = E.compile_pred(E.simplify(E.bind_constants(c.guard, consts)), index, consts)
        dests = [(d.prob, E.compile_update(d.update, order, consts), d.target) for d in c.destinations]
        compiled.setdefault(c.source, []).append((c.tag, guard, dests))

    states: list = [(p.initial, init_vals)]
    ids: dict = {(p.initial, init_vals): 0}
    choices: list = []
    sink_id = None
    if not in_dom(init_vals):
        raise InvalidProgram("initial valuation lies outside the variable domains")

    queue = deque([0])
    while queue:
        sid = queue.popleft()
        s = states[sid]
        if s is None:
            choices.append([])
            continue
        loc, v = s
        acts = []
        for tag, guard, dests in compiled.get(loc, ()):
            if not guard(v):
                continue
            dist: dict = {}
            for prob, upd, target in dests:
                nv = upd(v)
                if target is None or not in_dom(nv):
                    if sink_id is None:
                        sink_id = len(states)
                        states.append(None)
                        queue.append(sink_id)
                    t = sink_id
                else:
                    key = (target, nv)
                    t = ids.get(key)
                    if t is None:
                        t = len(states)
                        if t >= state_limit:
                            raise ExplosionLimit(f"more than {state_limit} states")
                        ids[key] = t
                        states.append(key)
                        queue.append(t)
                dist[t] = dist.get(t, 0) + prob
            acts.append((tag, tuple(sorted(((Fraction(q), t) for t, q in dist.items()), key=lambda x: x[1]))))
        choices.append(acts)

    if sink_id is not None:
        warnings.warn("out-of-domain sink state is reachable; program is not well-formed", IllFormedWarning, stacklevel=2)
    labels = {l.name: l.label for l in p.locations}
    bases = {l.name: l.base for l in p.locations}
    return ExplicitModel(order, states, choices, 0, labels, None, bases)


def check_well_formed(p: Pcfp) -> bool:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        return build_semantics(p).sink is None


def check_deterministic(p: Pcfp) -> bool:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        return build_semantics(p).is_chain()


def goal_for_location(p: Pcfp, loc: str, g: GoalSpec) -> Pred:
    """The goal predicate specialised by the location's label."""
    return E.simplify(E.substitute(g.predicate, p.label_of(loc)))


def check_potential_goal(p: Pcfp, loc: str, g: GoalSpec, budget: int = E.DEFAULT_BUDGET) -> bool:
    """May some state at ``loc`` satisfy the goal? ``Unknown`` counts as yes."""
    res = E.check_sat(goal_for_location(p, loc, g), p.dom, p.consts, budget)
    return not res.unsatisfiable


def mark_goal_states(m: ExplicitModel, g: GoalSpec | Pred, consts: Mapping | None = None) -> ExplicitModel:
    pred = g.predicate if isinstance(g, GoalSpec) else g
    pred = E.simplify(E.bind_constants(pred, consts or {}))
    goal = []
    for i in range(m.num_states):
        nu = m.valuation(i)
        goal.append(False if nu is None else bool(E.evaluate(pred, nu, consts)))
    return replace(m, goal=goal)
