import logging
from fractions import Fraction

import pytest
from _oracles import explicit, value

from pcfpkit import eliminate as El
from pcfpkit import expr as E
from pcfpkit.benchmarks import expfamily
from pcfpkit.frontend import parse_property
from pcfpkit.pcfp import Command, Destination, GoalSpec, Location, Objective, Pcfp, Variable, check_deterministic
from pcfpkit.unfold import unfold

from conftest import COIN_PROP, load_coin

T = El.TransitionRef
X, Y = E.Var("x"), E.Var("y")
NF, FF = "coingame[f=0]", "coingame[f=1]"


def upd(**kw):
    return E.Update.of({k: E.lit(v) for k, v in kw.items()})


def labelled(names, variables, commands, initial=None, model_type="dtmc"):
    locs = tuple(Location(n, "p", (("pc", i),)) for i, n in enumerate(names))
    pc = Variable.integer("pc", 0, len(names) - 1, 0)
    return Pcfp(locs, tuple(variables), tuple(commands), initial or names[0], (), (pc,), (), model_type)


def goal_at(p, name, extra=E.TRUE, objective=Objective.FORCED):
    k = p.location(name).label_map["pc"]
    return GoalSpec(objective, E.conj(E.cmp("=", E.Var("pc"), k), extra))


@pytest.fixture
def unfolded(coin):
    return unfold(coin, {"f"})


def branch_set(cmd):
    return {(d.prob, E.flatten(d.update), d.target) for d in cmd.destinations}


# transition elimination


def test_coin_transition_elimination(unfolded, coin_goal):
    # the 1/2:nop branch from !f into f
    ci = next(i for i in unfolded.commands_at[NF] if unfolded.commands[i].tag == "c0[f=0]")
    di = next(j for j, d in enumerate(unfolded.commands[ci].destinations) if d.target == FF)
    q = El.remove_unsat_commands(unfolded)
    ci = next(i for i, c in enumerate(q.commands) if c.tag == "c0[f=0]")
    r = El.eliminate_transition(q, T(ci, di), coin_goal)
    new = [c for c in r.commands if c.tag.startswith("c0[f=0].")]
    assert len(new) == 1
    rng = E.conj(E.cmp("<", 0, X), E.cmp("<", X, 6))
    assert E.equivalent_on(new[0].guard, rng, ["x"], r.dom, r.consts)
    assert branch_set(new[0]) == {
        (Fraction(3, 4), E.Update.of({"x": E.BinOp("-", X, E.Lit(1))}), NF),
        (Fraction(1, 4), E.Update.of({"x": E.BinOp("+", X, E.Lit(2))}), NF),
    }


def test_unpruned_transition_keeps_unsat_command(unfolded, coin_goal):
    ci = next(i for i, c in enumerate(unfolded.commands) if c.tag == "c0[f=0]")
    di = next(j for j, d in enumerate(unfolded.commands[ci].destinations) if d.target == FF)
    r = El.eliminate_transition(unfolded, T(ci, di), coin_goal, prune=False)
    new = [c for c in r.commands if c.tag.startswith("c0[f=0].")]
    # one per command at f, including the one with guard 0<x<N & (x=0|x>=N)
    assert len(new) == len(unfolded.commands_at[FF])
    assert any(E.check_sat(c.guard, r.dom, r.consts).unsatisfiable for c in new)
    assert value(r, coin_goal) == value(unfolded, coin_goal)


def test_nop_transition_keeps_guards():
    x = Variable.integer("x", 0, 2, 0)
    psi = E.cmp("<=", X, 1)
    p = labelled(
        ["a", "b", "c"], [x],
        [Command("c0", "a", E.TRUE, (Destination(Fraction(1), E.NOP, "b"),)),
         Command("c1", "b", psi, (Destination(Fraction(1), upd(x=2), "c"),)),
         Command("c2", "b", E.Not(psi), (Destination(Fraction(1), E.NOP, "c"),))],
    )
    g = goal_at(p, "c")
    r = El.eliminate_transition(p, T(0, 0), g, prune=False)
    assert [c.guard for c in r.commands if c.source == "a"] == [E.conj(E.TRUE, psi), E.conj(E.TRUE, E.Not(psi))]


def test_multiplicity():
    x = Variable.integer("x", 0, 1, 0)
    c = Command("c0", "a", E.TRUE, (Destination(Fraction(1, 2), upd(x=0), "b"),
                                     Destination(Fraction(1, 2), upd(x=1), "b")))
    p = labelled(["a", "b"], [x], [c])
    assert El.multiplicity(p, T(0, 0)) == 2
    c = Command("c0", "a", E.TRUE, (Destination(Fraction(1, 2), upd(x=0), "a"),
                                     Destination(Fraction(1, 2), upd(x=1), "b")))
    assert El.multiplicity(labelled(["a", "b"], [x], [c]), T(0, 1)) == 1


def test_transition_errors(unfolded, coin_goal):
    back = next(i for i, c in enumerate(unfolded.commands) if c.tag == "c1[f=1]")
    # into the potential goal location !f
    with pytest.raises(El.PotentialGoalTarget):
        El.eliminate_transition(unfolded, T(back, 0), coin_goal)
    x = Variable.integer("x", 0, 2, 0)
    p = labelled(["a", "b"], [x], [Command("c0", "a", E.TRUE, (Destination(Fraction(1), E.NOP, "b"),))])
    with pytest.raises(El.NoCommandsAtTarget):
        El.eliminate_transition(p, T(0, 0), GoalSpec.forced(E.FALSE))
    p = labelled(["a", "b"], [x], [Command("c0", "a", E.TRUE, (Destination(Fraction(1), upd(x=2), "b"),)),
                                   Command("c1", "b", E.cmp("<", X, 2), (Destination(Fraction(1), E.NOP, "a"),))])
    with pytest.raises(El.UncoveredTarget):
        El.eliminate_transition(p, T(0, 0), GoalSpec.forced(E.FALSE))


def test_elimination_preserves_determinism(unfolded, coin_goal):
    ci = next(i for i, c in enumerate(unfolded.commands) if c.tag == "c0[f=0]")
    di = next(j for j, d in enumerate(unfolded.commands[ci].destinations) if d.target == FF)
    assert check_deterministic(El.eliminate_transition(unfolded, T(ci, di), coin_goal))


# location elimination


def test_eliminate_location_f(unfolded, coin_goal):
    r = El.eliminate_location(unfolded, FF, coin_goal)
    r = El.remove_unsat_commands(r)
    assert len(r.locations) == 1 and len(r.commands) == 2
    assert sum(len(c.destinations) for c in r.commands) == 3
    assert value(r, coin_goal) == value(unfolded, coin_goal) == Fraction(10, 37)


def test_eliminate_location_without_ingoing():
    x = Variable.integer("x", 0, 1, 0)
    p = labelled(["a", "b"], [x], [Command("c0", "a", E.TRUE, (Destination(Fraction(1), E.NOP, "a"),)),
                                   Command("c1", "b", E.TRUE, (Destination(Fraction(1), E.NOP, "a"),))])
    stats = El.EliminationStats()
    r = El.eliminate_location(p, "b", GoalSpec.forced(E.FALSE), stats=stats)
    assert [l.name for l in r.locations] == ["a"]
    assert stats.transitions_eliminated == 0


def test_eliminate_location_errors(unfolded, coin_goal):
    with pytest.raises(El.IsInitial):
        El.check_eliminable(unfolded, NF, coin_goal)
    with pytest.raises(El.HasSelfLoop):
        El.check_eliminable(unfolded, FF, coin_goal)  # the dead x=0|x>=N loop before cleanup
    El.check_eliminable(El.remove_unsat_commands(unfolded), FF, coin_goal)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_exponential_family(m):
    p = expfamily(m)
    g = parse_property("P=? [ F pc=2 ]", p)
    stats = El.EliminationStats()
    r = El.eliminate_location(p, "l", g, prune=False, stats=stats)
    assert stats.per_command == {"c0": 2**m - 1}
    assert stats.transitions_eliminated == 2**m - 1
    assert len(r.commands_at["lp"]) >= 2**m
    assert value(r, g) == value(p, g)


def test_exponential_family_candidates():
    p = expfamily(3)
    assert El.eliminable_locations(p, parse_property("P=? [ F pc=2 ]", p)) == ["l"]


# unsat commands


def test_remove_false_guard():
    x = Variable.integer("x", 0, 1, 0)
    p = labelled(["a"], [x], [Command("c0", "a", E.FALSE, (Destination(Fraction(1), E.NOP, "a"),)),
                              Command("c1", "a", E.TRUE, (Destination(Fraction(1), E.NOP, "a"),))])
    assert [c.tag for c in El.remove_unsat_commands(p).commands] == ["c1"]


def test_remove_dead_self_loop(unfolded):
    r = El.remove_unsat_commands(unfolded)
    assert "c2[f=1]" not in {c.tag for c in r.commands}
    assert canonical(r) == canonical(unfolded)


def canonical(p):
    from pcfpkit.solver import canonical_form

    return canonical_form(explicit(p))


def test_context_rule_respects_self_loops():
    # b is entered with x=0 only, but its own loop makes x=1 reachable there
    x = Variable.integer("x", 0, 2, 0)
    p = labelled(
        ["a", "b", "c"], [x],
        [Command("c0", "a", E.TRUE, (Destination(Fraction(1), upd(x=0), "b"),)),
         Command("c1", "b", E.cmp("=", X, 0), (Destination(Fraction(1, 2), upd(x=1), "b"),
                                               Destination(Fraction(1, 2), E.NOP, "c"))),
         Command("c2", "b", E.cmp("=", X, 1), (Destination(Fraction(1), upd(x=2), "c"),))],
    )
    r = El.remove_unsat_commands(p)
    assert {c.tag for c in r.commands} == {"c0", "c1", "c2"}
    g = goal_at(p, "c", E.cmp("=", X, 2))
    assert value(r, g) == value(p, g) == Fraction(1, 2)


# self-loops


def test_rescale_nop_two_branches():
    x = Variable.integer("x", 0, 1, 0)
    p = labelled(["a", "b"], [x], [Command("c0", "a", E.TRUE, (Destination(Fraction(1, 2), E.NOP, "a"),
                                                               Destination(Fraction(1, 2), upd(x=1), "b")))])
    r = El.rescale_nop_self_loop(p, T(0, 0))
    assert branch_set(r.commands[0]) == {(Fraction(1), upd(x=1), "b")}


def test_rescale_nop_three_branches():
    x = Variable.integer("x", 0, 2, 0)
    p = labelled(["a", "b", "c"], [x], [Command("c0", "a", E.TRUE, (
        Destination(Fraction(1, 4), E.NOP, "a"),
        Destination(Fraction(1, 4), upd(x=1), "b"),
        Destination(Fraction(1, 2), upd(x=2), "c")))])
    r = El.rescale_nop_self_loop(p, T(0, 0))
    assert branch_set(r.commands[0]) == {(Fraction(1, 3), upd(x=1), "b"), (Fraction(2, 3), upd(x=2), "c")}
    for name in ("b", "c"):
        g = goal_at(p, name)
        assert value(r, g) == value(p, g)


def test_rescale_errors():
    x = Variable.integer("x", 0, 1, 0)
    p = labelled(["a", "b"], [x], [Command("c0", "a", E.TRUE, (Destination(Fraction(1), E.NOP, "a"),)),
                                   Command("c1", "b", E.TRUE, (Destination(Fraction(1, 2), upd(x=1), "b"),
                                                               Destination(Fraction(1, 2), E.NOP, "a")))])
    with pytest.raises(El.FullLoop):
        El.rescale_nop_self_loop(p, T(0, 0))
    with pytest.raises(El.NotNop):
        El.rescale_nop_self_loop(p, T(1, 0))
    with pytest.raises(El.NotSelfLoop):
        El.rescale_nop_self_loop(p, T(1, 1))


def idempotent_program():
    x, y = Variable.integer("x", 0, 2, 0), Variable.integer("y", 0, 2, 2)
    phi, psi = E.cmp("<", X, 2), E.cmp("=", X, 2)
    return labelled(
        ["l", "lq", "l1", "l2"], [x, y],
        [Command("c0", "l", phi, (Destination(Fraction(1, 2), E.Update.of({"x": Y}), "l"),
                                  Destination(Fraction(1, 2), upd(y=0), "lq"))),
         Command("c1", "l", psi, (Destination(Fraction(1, 3), E.NOP, "l1"),
                                  Destination(Fraction(2, 3), upd(y=1), "l2")))],
    )


def test_idempotent_self_loop_rule():
    p = idempotent_program()
    g = goal_at(p, "l1")
    r = El.eliminate_idempotent_self_loop(p, T(0, 0), g)
    assert not any(d.target == "l" for c in r.commands for d in c.destinations)
    new = [c for c in r.commands if c.tag.startswith("c0.")]
    assert len(new) == 2
    via_psi = next(c for c in new if any(d.target == "l1" for d in c.destinations))
    assert E.equivalent_on(via_psi.guard, E.conj(E.cmp("<", X, 2), E.cmp("=", Y, 2)), ["x", "y"], r.dom)
    assert branch_set(via_psi) == {
        (Fraction(1, 2), upd(y=0), "lq"),
        (Fraction(1, 6), E.Update.of({"x": Y}), "l1"),
        (Fraction(1, 3), E.Update.of({"x": Y, "y": E.Lit(1)}), "l2"),
    }
    for name in ("lq", "l1", "l2"):
        for extra in (E.TRUE, E.cmp("=", Y, 0), E.cmp(">", X, 0)):
            g = goal_at(p, name, extra)
            assert value(r, g) == value(p, g)


def test_idempotent_rule_warns_on_new_self_loops(caplog):
    x = Variable.integer("x", 0, 2, 0)
    p = labelled(["l", "m"], [x], [
        Command("c0", "l", E.cmp("<", X, 2), (Destination(Fraction(1, 2), upd(x=1), "l"),
                                             Destination(Fraction(1, 2), E.NOP, "m"))),
        Command("c1", "l", E.cmp("=", X, 2), (Destination(Fraction(1), E.NOP, "l"),)),
    ])
    with caplog.at_level(logging.INFO, logger="pcfpkit.eliminate"):
        r = El.eliminate_idempotent_self_loop(p, T(0, 0), goal_at(p, "m"))
    assert "new self-loops" in caplog.text
    g = goal_at(p, "m")
    assert value(r, g) == value(p, g)


def test_idempotent_rule_preconditions():
    p = idempotent_program()
    x = Variable.integer("x", 0, 2, 0)
    q = labelled(["l", "m"], [x], [Command("c0", "l", E.cmp("<", X, 2), (
        Destination(Fraction(1, 2), E.Update.of({"x": E.BinOp("+", X, E.Lit(1))}), "l"),
        Destination(Fraction(1, 2), E.NOP, "m")))])
    with pytest.raises(El.NotIdempotent):
        El.eliminate_idempotent_self_loop(q, T(0, 0), goal_at(q, "m"))
    # goal at l reachable through the loop update
    with pytest.raises(El.PotentialGoal):
        El.eliminate_idempotent_self_loop(p, T(0, 0), goal_at(p, "l", E.cmp("=", X, 2)))
    # goal at l that the loop update can never produce is fine
    g = goal_at(p, "l", E.cmp("=", E.BinOp("-", X, Y), E.Lit(1)))
    r = El.eliminate_idempotent_self_loop(p, T(0, 0), g)
    assert value(r, g) == value(p, g)


# drivers


def test_eliminable_locations(coin, unfolded, coin_goal):
    assert El.eliminable_locations(unfolded, coin_goal) == [FF]
    assert El.eliminable_locations(coin, coin_goal) == []


def test_eliminate_all_coin(unfolded, coin_goal):
    r = El.eliminate_all(unfolded, coin_goal)
    assert len(r.locations) == 1 and len(r.commands) == 2
    assert sum(len(c.destinations) for c in r.commands) == 3


def test_eliminate_all_noop(coin, coin_goal):
    assert El.eliminate_all(coin, coin_goal) == El.remove_unsat_commands(coin)


def test_budget():
    p = expfamily(4)
    g = parse_property("P=? [ F pc=2 ]", p)
    with pytest.raises(El.BudgetExhausted):
        El.eliminate_all(p, g, budget=5, strict=True)
    assert len(El.eliminate_all(p, g, budget=5).commands) > 5


def test_suggest_unfold(coin, coin_goal):
    assert El.suggest_unfold(coin, coin_goal) == frozenset({"f"})
    sym = load_coin(None)
    assert El.suggest_unfold(sym, parse_property(COIN_PROP, sym)) == frozenset({"f"})
    x = Variable.integer("x", 0, 2, 0)
    y = Variable("y", E.Lit(0), E.Const("K"), E.Lit(0))
    p = Pcfp((Location("a"),), (x, y), (Command("c0", "a", E.TRUE, (
        Destination(Fraction(1), E.Update.of({"x": Y, "y": X}), "a"),)),), "a", (("K", None),))
    assert El.suggest_unfold(p, GoalSpec.forced(E.cmp("=", X, 1))) is None


def test_auto_reduce_coin(coin, coin_goal):
    stats = El.EliminationStats()
    r, steps = El.auto_reduce(coin, coin_goal, stats=stats)
    assert steps == [frozenset({"f"})]
    assert explicit(r).num_states == 8
    assert stats.locations_eliminated == 1
    assert value(r, coin_goal) == Fraction(10, 37)


def test_symbolic_reduction_then_instantiate():
    from pcfpkit.pcfp import instantiate

    sym = load_coin(None)
    g = parse_property(COIN_PROP, sym)
    r = El.eliminate_all(unfold(sym, {"f"}), g)
    assert len(r.locations) == 1
    for n in (4, 6, 10):
        assert value(instantiate(r, {"N": n}), g) == value(load_coin(n), g)
