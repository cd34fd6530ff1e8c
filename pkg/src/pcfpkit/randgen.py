"""Random programs, updates, predicates and explicit models for property tests."""

from __future__ import annotations

import random
import warnings
from fractions import Fraction

from . import expr as E
from .pcfp import (
    Command,
    Destination,
    ExplicitModel,
    GoalSpec,
    IllFormedWarning,
    Location,
    Objective,
    Pcfp,
    Variable,
    build_semantics,
)


def random_distribution(rng: random.Random, k: int, denom: int = 12) -> list:
    """``k`` positive fractions summing to one."""
    cuts = sorted(rng.sample(range(1, denom), k - 1)) if k > 1 else []
    bounds = [0] + cuts + [denom]
    return [Fraction(b - a, denom) for a, b in zip(bounds, bounds[1:])]


def random_int_expr(rng: random.Random, names: list, depth: int = 2) -> E.IntExpr:
    if depth == 0 or rng.random() < 0.35:
        if names and rng.random() < 0.65:
            return E.Var(rng.choice(names))
        return E.Lit(rng.randint(-2, 4))
    kind = rng.random()
    a = random_int_expr(rng, names, depth - 1)
    if kind < 0.45:
        return E.BinOp(rng.choice("+-"), a, random_int_expr(rng, names, depth - 1))
    if kind < 0.55:
        return E.BinOp("*", a, E.Lit(rng.randint(-2, 3)))
    if kind < 0.62:
        return E.BinOp("/", a, E.Lit(rng.choice((1, 2, 3, -2))))
    if kind < 0.7:
        return E.Neg(a)
    if kind < 0.85:
        return E.Call(rng.choice(("min", "max")), (a, random_int_expr(rng, names, depth - 1)))
    return E.Ite(random_pred(rng, names, depth - 1), a, random_int_expr(rng, names, depth - 1))


def random_pred(rng: random.Random, names: list, depth: int = 2) -> E.Pred:
    if depth == 0 or rng.random() < 0.4:
        if rng.random() < 0.05:
            return E.BoolLit(rng.random() < 0.5)
        left = E.Var(rng.choice(names)) if names else E.Lit(0)
        right = random_int_expr(rng, names, 1)
        return E.Cmp(rng.choice(E.CMP_OPS), left, right)
    kind = rng.random()
    if kind < 0.2:
        return E.Not(random_pred(rng, names, depth - 1))
    args = tuple(random_pred(rng, names, depth - 1) for _ in range(rng.randint(2, 3)))
    return E.And(args) if kind < 0.6 else E.Or(args)


def random_update(rng: random.Random, names: list, max_blocks: int = 2) -> E.Update:
    """Random chained update; each block assigns a random subset of ``names``."""
    blocks = []
    for _ in range(rng.randint(1, max_blocks)):
        chosen = [n for n in names if rng.random() < 0.5]
        blocks.append({n: random_int_expr(rng, names, 2) for n in chosen})
    out = E.NOP
    for b in blocks:
        out = out.then(E.Update.of(b))
    return out


def random_domain(rng: random.Random, nvars: int, max_size: int = 5) -> dict:
    dom = {}
    for i in range(nvars):
        lo = rng.randint(-2, 1)
        dom[f"v{i}"] = (lo, lo + rng.randint(0, max_size - 1))
    return dom


def _clamped(rng: random.Random, name: str, names: list, lo: int, hi: int) -> E.IntExpr:
    """An in-domain right-hand side for ``name``."""
    r = rng.random()
    if r < 0.3:
        return E.Lit(rng.randint(lo, hi))
    if r < 0.75:
        step = E.BinOp(rng.choice("+-"), E.Var(name), E.Lit(1))
        return E.Call("min", (E.Lit(hi), E.Call("max", (E.Lit(lo), step))))
    other = E.Var(rng.choice(names))
    return E.Call("min", (E.Lit(hi), E.Call("max", (E.Lit(lo), other))))


def _command_update(rng: random.Random, names: list, dom: dict, wild: float) -> E.Update:
    asg = {}
    for n in names:
        if rng.random() < 0.45:
            lo, hi = dom[n]
            if rng.random() < wild:
                asg[n] = E.BinOp(rng.choice("+-"), E.Var(n), E.Lit(rng.randint(1, 2)))
            else:
                asg[n] = _clamped(rng, n, names, lo, hi)
    return E.Update.of(asg)


def _guard(rng: random.Random, names: list, dom: dict, max_atoms: int = 2) -> E.Pred:
    atoms = []
    for _ in range(rng.randint(0, max_atoms)):
        n = rng.choice(names)
        lo, hi = dom[n]
        atoms.append(E.Cmp(rng.choice(("=", "!=", "<", "<=", ">", ">=")), E.Var(n), E.Lit(rng.randint(lo, hi))))
    if not atoms:
        return E.TRUE
    return E.And(tuple(atoms)) if rng.random() < 0.6 or len(atoms) == 1 else E.Or(tuple(atoms))


def random_pcfp(
    rng: random.Random,
    *,
    max_locations: int = 3,
    max_vars: int = 3,
    max_domain: int = 4,
    max_commands: int = 4,
    max_branches: int = 3,
    deterministic: bool | None = None,
    wild: float = 0.15,
) -> Pcfp:
    """One random program; not necessarily well-formed (see ``random_well_formed``).

    Locations ``l0``, ``l1``, ... share base ``p`` and carry a label ``pc``,
    so goals can single out locations. Deterministic programs partition each
    location's guards so that at most one command is enabled per state.
    """
    if deterministic is None:
        deterministic = rng.random() < 0.5
    nloc = rng.randint(1, max_locations)
    nvar = rng.randint(1, max_vars)
    names = [f"v{i}" for i in range(nvar)]
    dom = {}
    variables = []
    for n in names:
        lo = rng.randint(0, 1)
        hi = lo + rng.randint(1, max_domain - 1)
        dom[n] = (lo, hi)
        variables.append(Variable.integer(n, lo, hi, rng.randint(lo, hi)))
    locs = tuple(Location(f"l{i}", "p", (("pc", i),)) for i in range(nloc))
    ncmd = rng.randint(1, max_commands)
    by_loc: dict = {}
    for _ in range(ncmd):
        by_loc.setdefault(f"l{rng.randrange(nloc)}", []).append(None)
    commands = []
    k = 0
    for li in range(nloc):
        loc = f"l{li}"
        prev: list = []
        for _ in by_loc.get(loc, ()):
            guard = _guard(rng, names, dom, 2 if deterministic else 1)
            if deterministic:
                guard = E.conj(guard, *(E.Not(g) for g in prev))
                prev.append(guard)
            nb = rng.randint(1, max_branches)
            probs = random_distribution(rng, nb)
            dests = tuple(
                Destination(q, _command_update(rng, names, dom, wild), f"l{rng.randrange(nloc)}") for q in probs
            )
            commands.append(Command(f"c{k}", loc, guard, dests))
            k += 1
    pc = Variable.integer("pc", 0, nloc - 1, 0)
    return Pcfp(locs, tuple(variables), tuple(commands), "l0", (), (pc,), (), "dtmc" if deterministic else "mdp")


def random_well_formed(rng: random.Random, tries: int = 100, **kw) -> Pcfp:
    """Rejection-sample a program whose out-of-domain sink is unreachable."""
    for _ in range(tries):
        p = random_pcfp(rng, **kw)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllFormedWarning)
            if build_semantics(p).sink is None:
                return p
    raise RuntimeError("no well-formed program found")


def random_goal(rng: random.Random, p: Pcfp, objective: Objective | None = None) -> GoalSpec:
    """Goal restricted to one location, plus a random condition on the variables."""
    names = [v.name for v in p.variables]
    nloc = len(p.locations)
    pc = E.Cmp("=", E.Var("pc"), E.Lit(rng.randrange(nloc)))
    cond = _guard(rng, names, {v.name: (v.lo.value, v.hi.value) for v in p.variables})
    pred = E.conj(pc, cond) if rng.random() < 0.85 else cond
    if objective is None:
        objective = Objective.FORCED if p.model_type == "dtmc" else rng.choice((Objective.MAXIMIZE, Objective.MINIMIZE))
    return GoalSpec(objective, pred)


def random_chain(rng: random.Random, max_states: int = 12, max_succ: int = 3) -> ExplicitModel:
    n = rng.randint(2, max_states)
    choices = []
    for s in range(n):
        if rng.random() < 0.15:
            choices.append([])
            continue
        k = rng.randint(1, min(max_succ, n))
        targets = sorted(rng.sample(range(n), k))
        choices.append([("a", tuple(zip(random_distribution(rng, k), targets)))])
    goal = [rng.random() < 0.25 for _ in range(n)]
    return ExplicitModel(("s",), [("m", (i,)) for i in range(n)], choices, 0, {}, goal, {})


def random_mdp(rng: random.Random, max_states: int = 6, max_actions: int = 3, max_succ: int = 3) -> ExplicitModel:
    n = rng.randint(2, max_states)
    choices = []
    for s in range(n):
        acts = []
        for a in range(rng.randint(0 if rng.random() < 0.1 else 1, max_actions)):
            k = rng.randint(1, min(max_succ, n))
            targets = sorted(rng.sample(range(n), k))
            acts.append((f"a{a}", tuple(zip(random_distribution(rng, k), targets))))
        choices.append(acts)
    goal = [rng.random() < 0.25 for _ in range(n)]
    return ExplicitModel(("s",), [("m", (i,)) for i in range(n)], choices, 0, {}, goal, {})
