import itertools

import pytest

from pcfpkit import expr as E
from pcfpkit.expr import And, BinOp, Call, Cmp, Const, Lit, Not, Or, Update, Var

x, y, f, N = Var("x"), Var("y"), Var("f"), Const("N")


def grid(dom):
    names = sorted(dom)
    for vals in itertools.product(*(range(lo, hi + 1) for lo, hi in (dom[n] for n in names))):
        yield dict(zip(names, vals))


def same_truth(a, b, dom, consts=None):
    return all(E.evaluate(a, nu, consts) == E.evaluate(b, nu, consts) for nu in grid(dom))


# evaluate


def test_evaluate_examples():
    assert E.evaluate(And((Cmp("<", Lit(0), x), Cmp("<", x, N))), {"x": 3}, {"N": 6}) is True
    assert E.evaluate(Or((Cmp("=", x, Lit(0)), Cmp(">=", x, N))), {"x": 3}, {"N": 6}) is False
    assert E.evaluate(BinOp("-", x, Lit(1)), {"x": 0}) == -1


def test_evaluate_errors():
    with pytest.raises(E.UnboundVariable):
        E.evaluate(x, {})
    with pytest.raises(E.UnboundConstant):
        E.evaluate(N, {}, {"N": None})
    with pytest.raises(E.DivisionByZero):
        E.evaluate(BinOp("/", x, N), {"x": 1}, {"N": 0})


def test_division_floors():
    assert E.evaluate(BinOp("/", Lit(-7), Lit(2)), {}) == -4
    assert E.evaluate(BinOp("/", Lit(7), Lit(2)), {}) == 3


def test_division_by_variable_rejected():
    with pytest.raises(ValueError):
        BinOp("/", x, y)


def test_min_max_ite():
    e = Call("min", (x, Lit(3)))
    assert E.evaluate(e, {"x": 5}) == 3
    assert E.evaluate(E.Ite(Cmp(">", x, Lit(0)), x, Lit(9)), {"x": 0}) == 9


# updates


def test_apply_update_examples():
    assert E.apply_update(Update.of({"x": BinOp("-", x, Lit(1))}), {"x": 3, "f": 0}) == {"x": 2, "f": 0}
    assert E.apply_update(Update.of({"x": y, "y": x}), {"x": 1, "y": 2}) == {"x": 2, "y": 1}
    plus2 = Update.of({"x": BinOp("+", x, Lit(2))})
    assert E.apply_update(plus2.then(plus2), {"x": 0}) == {"x": 4}


def test_update_canonical_and_nop():
    assert Update.of({"x": y, "y": x}) == Update.of({"y": x, "x": y})
    assert E.NOP == Update() and E.is_nop(Update.of({"x": x}))
    assert E.show(E.NOP) == "nop"


def test_compose_matches_chaining():
    u = Update.of({"x": BinOp("+", x, y), "y": Lit(1)})
    v = Update.of({"y": BinOp("*", x, Lit(2))})
    for nu in grid({"x": (0, 3), "y": (0, 3)}):
        assert E.apply_update(E.compose(u, v), nu) == E.apply_update(u.then(v), nu)


# substitution


def test_substitute_examples():
    g = And((Cmp("<", Lit(0), x), Not(Cmp("=", f, Lit(1)))))
    assert E.simplify(E.substitute(g, {"f": 0})) == Cmp("<", Lit(0), x)
    u = Update.of({"x": BinOp("-", x, Lit(1)), "f": Lit(1)})
    assert E.substitute(u, {"f": 0}) == Update.of({"x": BinOp("-", x, Lit(1))})
    assert E.simplify_int(E.substitute(BinOp("+", x, y), {"y": 2})) == E.simplify_int(BinOp("+", x, Lit(2)))


def test_substitute_evaluate_commute():
    e = BinOp("+", BinOp("*", x, Lit(3)), Call("max", (y, Lit(1))))
    for nu in grid({"x": (-1, 2), "y": (0, 3)}):
        assert E.evaluate(E.substitute(e, {"y": nu["y"]}), {"x": nu["x"]}) == E.evaluate(e, nu)


# wp


def test_wp_nop_is_identity():
    psi = Cmp("<=", x, Lit(3))
    assert E.wp(E.NOP, psi) == psi


def test_wp_substitutes():
    post = And((Cmp("<", Lit(0), x), Cmp("<", x, N)))
    got = E.wp(Update.of({"x": BinOp("+", x, Lit(2))}), post)
    assert got == And((Cmp("<", Lit(0), BinOp("+", x, Lit(2))), Cmp("<", BinOp("+", x, Lit(2)), N)))


def test_wp_swap_is_simultaneous():
    u = Update.of({"x": y, "y": x})
    pre = E.wp(u, Cmp("<", x, y))
    dom = {"x": (0, 3), "y": (0, 3)}
    assert same_truth(pre, Cmp("<", y, x), dom)
    for nu in grid(dom):
        assert E.evaluate(pre, nu) == E.evaluate(Cmp("<", x, y), E.apply_update(u, nu))


def test_wp_chaining_coherent():
    u1 = Update.of({"x": BinOp("+", x, y)})
    u2 = Update.of({"y": BinOp("-", x, Lit(1)), "x": Lit(0)})
    phi = Or((Cmp("=", x, y), Cmp(">", y, Lit(2))))
    dom = {"x": (0, 4), "y": (0, 4)}
    assert same_truth(E.wp(u1.then(u2), phi), E.wp(u1, E.wp(u2, phi)), dom)


# simplify


def test_simplify_examples():
    assert E.simplify(And((Cmp("<", Lit(0), x), E.TRUE))) == Cmp("<", Lit(0), x)
    assert E.simplify(Cmp("<", Lit(3), Lit(2))) == E.FALSE
    a = And((Cmp("<", Lit(0), x), Cmp("<", x, N)))
    s = E.simplify(And((a, a)))
    assert same_truth(s, a, {"x": (0, 7)}, {"N": 6})
    assert len(E.variables(s)) == 1 and E.show(s).count("&") == 1


def test_simplify_detects_complement():
    a = Cmp("<", x, Lit(3))
    assert E.simplify(And((a, Not(a)))) == E.FALSE
    assert E.simplify(Or((a, Not(a)))) == E.TRUE
    assert E.simplify(Not(Not(a))) == a


def test_simplify_ex2_guard_is_unsat():
    # 0<x<N & wp(nop, 0<x<N & f) with f unfolded to 1 leaves the same range
    rng = And((Cmp("<", Lit(0), x), Cmp("<", x, N)))
    phi = And((rng, Or((Cmp("=", x, Lit(0)), Cmp(">=", x, N)))))
    assert E.check_sat(phi, {"x": (Lit(0), BinOp("+", N, Lit(1)))}, {"N": 6}).unsatisfiable


# satisfiability


def test_check_sat_examples():
    dom = {"x": (Lit(0), BinOp("+", N, Lit(1))), "f": (Lit(0), Lit(1))}
    res = E.check_sat(And((Cmp("=", x, N), Cmp("=", f, Lit(0)))), dom, {"N": 6})
    assert res.satisfiable and res.witness == {"x": 6, "f": 0}
    res = E.check_sat(And((Cmp("<", Lit(0), x), Cmp("<", x, N))), dom, {"N": None})
    assert res.unknown


def test_check_sat_symbolic_refutation():
    # unsat for every N, so the refuter proves it without a value for N
    phi = And((Cmp("<", Lit(0), x), Cmp("<", x, N), Cmp(">=", x, N)))
    dom = {"x": (Lit(0), BinOp("+", N, Lit(1)))}
    assert E.check_sat(phi, dom, {"N": None}).unsatisfiable


def test_check_sat_budget_unknown():
    dom = {n: (Lit(0), Lit(99)) for n in "abcd"}
    phi = Cmp("=", BinOp("+", Var("a"), BinOp("*", Var("b"), Var("c"))), BinOp("*", Var("d"), Var("d")))
    assert E.check_sat(phi, dom, {}, budget=1000).unknown


def test_check_sat_only_enumerates_occurring_vars():
    dom = {"x": (Lit(0), Lit(3))} | {f"z{i}": (Lit(0), Lit(99)) for i in range(6)}
    assert E.check_sat(Cmp("=", x, Lit(2)), dom, {}, budget=10).satisfiable


# idempotence


def test_idempotence_examples():
    dom = {"x": (Lit(0), Lit(5)), "y": (Lit(0), Lit(5))}
    assert E.check_idempotent(Update.of({"x": y}), dom) is E.Idempotence.YES
    assert E.check_idempotent(Update.of({"x": BinOp("+", x, Lit(1))}), dom) is E.Idempotence.NO
    assert E.check_idempotent(E.NOP, dom) is E.Idempotence.YES
    assert E.check_idempotent(Update.of({"x": Call("max", (x, Lit(2)))}), dom) is E.Idempotence.YES
