"""Moving finite-domain variables into the location space."""

from __future__ import annotations

import itertools
from collections import deque

import networkx as nx

from . import expr as E
from .pcfp import Command, Destination, Location, Pcfp


class UnfoldError(Exception):
    pass


class SymbolicBound(UnfoldError):
    pass


class NotClosed(UnfoldError):
    pass


def dependency_graph(p: Pcfp) -> nx.DiGraph:
    """Edge ``x -> y`` iff some assignment to ``x`` reads ``y``."""
    g = nx.DiGraph()
    g.add_nodes_from(v.name for v in p.variables)
    for c in p.commands:
        for d in c.destinations:
            for block in d.update.blocks:
                for lhs, rhs in block:
                    for y in E.variables(rhs):
                        g.add_edge(lhs, y)
    return g


def directly_unfoldable(p: Pcfp) -> set:
    g = dependency_graph(p)
    return {x for x in g.nodes if all(y == x for y in g.successors(x))}


def unfoldable_sets(p: Pcfp) -> list:
    """Bottom strongly connected components, smallest first."""
    g = dependency_graph(p)
    cond = nx.condensation(g)
    bottoms = [
        frozenset(cond.nodes[n]["members"]) for n in cond.nodes if cond.out_degree(n) == 0
    ]
    return sorted(bottoms, key=lambda s: (len(s), sorted(s)))


def is_closed(p: Pcfp, names) -> bool:
    g = dependency_graph(p)
    names = set(names)
    return all(set(g.successors(x)) <= names for x in names if x in g)


def location_name(base: str, label) -> str:
    if not label:
        return base
    return base + "[" + ",".join(f"{k}={v}" for k, v in sorted(label)) + "]"


def _specialize_update(u: E.Update, nu: dict, names: frozenset):
    """Split an update into (rest of the update, new values of ``names``)."""
    flat = E.flatten(u)
    asg = flat.assignments()
    new_vals = dict(nu)
    rest = {}
    for lhs, rhs in asg.items():
        r = E.substitute(rhs, nu)
        if lhs in names:
            new_vals[lhs] = E.evaluate(r, {}, {})
        else:
            rest[lhs] = r
    return E.simplify_update(E.Update.of(rest)), new_vals


def unfold(p: Pcfp, names, prune: bool = True) -> Pcfp:
    """Unfold the dependency-closed variable set ``names``.

    Each location is split by the values of ``names``; commands are
    specialised by substitution. Commands whose specialised guard simplifies
    to ``false`` are dropped, and with ``prune`` locations that are
    unreachable in the location graph are removed.
    """
    names = frozenset(names)
    if not names:
        return p
    unknown = names - set(p.var_index)
    if unknown:
        raise KeyError(f"not a program variable: {sorted(unknown)}")
    if not is_closed(p, names):
        raise NotClosed(f"variable set {sorted(names)} is not closed under dependency")
    consts = p.consts
    order = sorted(names)
    ranges = []
    for n in order:
        v = p.variable(n)
        try:
            lo, hi = E.evaluate(v.lo, {}, consts), E.evaluate(v.hi, {}, consts)
        except E.UnboundConstant as exc:
            raise SymbolicBound(f"bounds of {n} depend on undefined constant {exc}") from None
        ranges.append((lo, hi))
    in_range = lambda vals: all(lo <= vals[n] <= hi for n, (lo, hi) in zip(order, ranges))

    combos = [dict(zip(order, c)) for c in itertools.product(*(range(lo, hi + 1) for lo, hi in ranges))]
    bound_cmds = [
        Command(c.tag, c.source, E.bind_constants(c.guard, consts),
                tuple(Destination(d.prob, E.bind_constants(d.update, consts), d.target) for d in c.destinations))
        for c in p.commands
    ]

    def new_loc(loc: Location, nu: dict) -> Location:
        label = tuple(sorted(loc.label + tuple(nu.items())))
        return Location(location_name(loc.base, label), loc.base, label)

    new_locs: dict = {}
    for loc in p.locations:
        for nu in combos:
            nl = new_loc(loc, nu)
            new_locs[(loc.name, tuple(sorted(nu.items())))] = nl

    commands = []
    for c in bound_cmds:
        loc = p.location(c.source)
        for nu in combos:
            key = tuple(sorted(nu.items()))
            guard = E.simplify(E.substitute(c.guard, nu))
            if guard == E.FALSE:
                continue
            dests = []
            for d in c.destinations:
                upd, vals = _specialize_update(d.update, nu, names)
                if d.target is None or not in_range(vals):
                    target = None
                else:
                    target = new_locs[(d.target, tuple(sorted((n, vals[n]) for n in order)))].name
                dests.append(Destination(d.prob, upd, target))
            commands.append(Command(location_name(c.tag, key), new_locs[(loc.name, key)].name, guard, tuple(dests)))

    init_nu = {n: E.evaluate(p.variable(n).init, {}, consts) for n in order}
    if not in_range(init_nu):
        raise UnfoldError("initial value outside the domain of an unfolded variable")
    initial = new_locs[(p.initial, tuple(sorted(init_nu.items())))].name
    variables = tuple(v for v in p.variables if v.name not in names)
    unfolded = p.unfolded + tuple(v for v in p.variables if v.name in names)
    q = Pcfp(tuple(new_locs.values()), variables, tuple(commands), initial,
             p.constants, unfolded, p.labels, p.model_type)
    return prune_unreachable(q) if prune else q


def reachable_locations(p: Pcfp) -> set:
    seen = {p.initial}
    todo = deque([p.initial])
    while todo:
        l = todo.popleft()
        for ci in p.commands_at.get(l, ()):
            for d in p.commands[ci].destinations:
                if d.target is not None and d.target not in seen:
                    seen.add(d.target)
                    todo.append(d.target)
    return seen


def prune_unreachable(p: Pcfp) -> Pcfp:
    """Remove locations (and their commands) unreachable in the location graph."""
    keep = reachable_locations(p)
    if len(keep) == len(p.locations):
        return p
    return p.replace(
        locations=tuple(l for l in p.locations if l.name in keep),
        commands=tuple(c for c in p.commands if c.source in keep),
    )
