import warnings
from fractions import Fraction

import pytest
from _oracles import explicit

from pcfpkit import expr as E
from pcfpkit.benchmarks import expfamily
from pcfpkit.eliminate import eliminate_all
from pcfpkit.pcfp import (
    Command,
    Destination,
    GoalSpec,
    IllFormedWarning,
    InvalidProgram,
    Location,
    Pcfp,
    Variable,
    build_semantics,
    check_deterministic,
    check_potential_goal,
    check_well_formed,
    instantiate,
    mark_goal_states,
    single_location,
)
from pcfpkit.unfold import unfold


def test_coin_semantics_has_13_states(coin):
    m = build_semantics(coin)
    assert m.num_states == 13
    assert m.is_chain()
    assert m.sink is None
    assert m.states[0] == ("coingame", (3, 0))


def test_reduced_coin_has_8_states(coin, coin_goal):
    r = eliminate_all(unfold(coin, {"f"}), coin_goal)
    assert build_semantics(r).num_states == 8


def test_empty_program_single_state():
    p = single_location([Variable.integer("x", 0, 2, 1)], [])
    m = build_semantics(p)
    assert m.num_states == 1 and m.choices == [[]]
    assert check_well_formed(p) and check_deterministic(p)


def test_well_formed(coin):
    assert check_well_formed(coin)
    tight = coin.replace(variables=(Variable("x", E.Lit(0), E.Const("N"), E.BinOp("/", E.Const("N"), E.Lit(2))),
                                    coin.variables[1]))
    assert not check_well_formed(tight)
    with pytest.warns(IllFormedWarning):
        m = build_semantics(tight)
    # x=5 with f set jumps to 7 > N
    assert m.sink is not None
    assert any(t == m.sink for acts in m.choices for _, d in acts for _, t in d)


def test_determinism():
    assert check_deterministic(expfamily(2))
    x = Variable.integer("x", 0, 1, 0)
    cmds = [(E.TRUE, [(Fraction(1), E.Update.of({"x": E.Lit(1)}))]), (E.TRUE, [(Fraction(1), E.NOP)])]
    assert not check_deterministic(single_location([x], cmds))


def test_coin_is_deterministic(coin):
    assert check_deterministic(coin)


def test_potential_goals(coin):
    u = unfold(coin, {"f"})
    g = GoalSpec.forced(E.conj(E.cmp("=", E.Var("x"), E.Const("N")), E.cmp("=", E.Var("f"), 0)))
    nf = next(l.name for l in u.locations if l.label_map["f"] == 0)
    ff = next(l.name for l in u.locations if l.label_map["f"] == 1)
    assert check_potential_goal(u, nf, g)
    assert not check_potential_goal(u, ff, g)
    assert not check_potential_goal(u, nf, GoalSpec.forced(E.FALSE))


def test_mark_goal_states(coin, coin_goal):
    m = mark_goal_states(build_semantics(coin), coin_goal, coin.consts)
    marked = sorted(m.states[i] for i, g in enumerate(m.goal) if g)
    assert marked == [("coingame", (6, 0)), ("coingame", (7, 0))]
    m = mark_goal_states(build_semantics(coin), GoalSpec.forced(E.TRUE), coin.consts)
    assert all(m.goal)


def test_goal_over_label_variable(coin):
    u = unfold(coin, {"f"})
    m = mark_goal_states(build_semantics(u), E.cmp("=", E.Var("f"), 1), u.consts)
    assert all(m.valuation(i)["f"] == 1 for i, g in enumerate(m.goal) if g)
    assert sum(m.goal) == 5


def test_validate_rejects_bad_probabilities():
    x = Variable.integer("x", 0, 1, 0)
    bad = Command("c0", "l0", E.TRUE, (Destination(Fraction(1, 2), E.NOP, "l0"),))
    with pytest.raises(InvalidProgram):
        Pcfp((Location("l0"),), (x,), (bad,), "l0").validate()


def test_validate_rejects_unknown_target():
    x = Variable.integer("x", 0, 1, 0)
    bad = Command("c0", "l0", E.TRUE, (Destination(Fraction(1), E.NOP, "nowhere"),))
    with pytest.raises(InvalidProgram):
        Pcfp((Location("l0"),), (x,), (bad,), "l0").validate()


def test_instantiate_symbolic_constant():
    from conftest import load_coin

    p = load_coin(None)
    with pytest.raises(E.UnboundConstant):
        build_semantics(p)
    assert build_semantics(instantiate(p, {"N": 6})).num_states == 13


def test_initial_out_of_domain():
    x = Variable.integer("x", 0, 1, 5)
    with pytest.raises(InvalidProgram):
        build_semantics(single_location([x], []))


def test_sink_destination_target():
    x = Variable.integer("x", 0, 1, 0)
    cmd = (E.TRUE, [(Fraction(1, 2), E.NOP), (Fraction(1, 2), E.Update.of({"x": E.Lit(7)}))])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllFormedWarning)
        m = build_semantics(single_location([x], [cmd]))
    assert m.num_states == 2 and m.states[1] is None and m.choices[1] == []


def test_valuation_includes_labels(coin):
    m = explicit(unfold(coin, {"f"}))
    assert set(m.valuation(0)) == {"x", "f"}
