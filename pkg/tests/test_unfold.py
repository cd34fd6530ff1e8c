import pytest
from _oracles import explicit

from pcfpkit import expr as E
from pcfpkit.benchmarks import expfamily
from pcfpkit.pcfp import Variable, single_location
from pcfpkit.solver import canonical_compare
from pcfpkit.unfold import (
    NotClosed,
    SymbolicBound,
    dependency_graph,
    directly_unfoldable,
    is_closed,
    unfold,
    unfoldable_sets,
)

from conftest import load_coin


def swap_program():
    x, y = Variable.integer("x", 0, 2, 0), Variable.integer("y", 0, 2, 1)
    return single_location([x, y], [(E.TRUE, [(1, E.Update.of({"x": E.Var("y"), "y": E.Var("x")}))])])


def test_dependency_graph_coin(coin):
    g = dependency_graph(coin)
    assert set(g.edges) == {("x", "x")}
    assert set(g.nodes) == {"x", "f"}


def test_dependency_edge_for_copy():
    assert ("x", "y") in dependency_graph(swap_program()).edges


def test_directly_unfoldable(coin):
    assert directly_unfoldable(coin) == {"x", "f"}
    assert directly_unfoldable(swap_program()) == set()
    fam = expfamily(3)
    assert directly_unfoldable(fam) == {v.name for v in fam.variables}


def test_unfoldable_sets():
    assert unfoldable_sets(load_coin()) == [frozenset({"f"}), frozenset({"x"})]
    assert unfoldable_sets(swap_program()) == [frozenset({"x", "y"})]
    x, y, z = (Variable.integer(n, 0, 1, 0) for n in "xyz")
    chain = single_location([x, y, z], [(E.TRUE, [(1, E.Update.of({"x": E.Var("y"), "y": E.Var("z"),
                                                                  "z": E.BinOp("-", E.Lit(1), E.Var("z"))}))])])
    assert unfoldable_sets(chain) == [frozenset({"z"})]


def test_unfold_f_expected_shape(coin):
    u = unfold(coin, {"f"})
    assert len(u.locations) == 2
    assert {l.label for l in u.locations} == {(("f", 0),), (("f", 1),)}
    assert u.initial == "coingame[f=0]"
    assert [v.name for v in u.variables] == ["x"]
    # the x-range command at f=0 keeps 2 branches, one of them moving to f=1
    at_nf = [u.commands[i] for i in u.commands_at["coingame[f=0]"]]
    assert len(at_nf) == 2
    first = at_nf[0]
    assert E.show(first.guard) == "0<x & x<6"
    assert {d.target for d in first.destinations} == {"coingame[f=0]", "coingame[f=1]"}
    assert canonical_compare(explicit(coin), explicit(u))


def test_unfold_x_gives_8_locations(coin):
    u = unfold(coin, {"x"}, prune=False)
    assert len(u.locations) == 8
    assert canonical_compare(explicit(coin), explicit(u))


def test_unfold_both(coin):
    u = unfold(unfold(coin, {"f"}), {"x"})
    assert canonical_compare(explicit(coin), explicit(u))
    assert u.variables == ()


def test_unfold_empty_is_identity(coin):
    assert unfold(coin, set()) is coin


def test_unfold_not_closed():
    p = swap_program()
    assert not is_closed(p, {"x"})
    with pytest.raises(NotClosed):
        unfold(p, {"x"})
    assert canonical_compare(explicit(p), explicit(unfold(p, {"x", "y"})))


def test_unfold_symbolic_bound():
    p = load_coin(None)
    with pytest.raises(SymbolicBound):
        unfold(p, {"x"})
    u = unfold(p, {"f"})
    assert len(u.locations) == 2


def test_unfold_unknown_variable(coin):
    with pytest.raises(KeyError):
        unfold(coin, {"zz"})
