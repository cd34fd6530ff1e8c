"""Generators for the coin game and the exponential elimination family."""

from __future__ import annotations

from fractions import Fraction

from . import expr as E
from .pcfp import Command, Destination, Location, Pcfp, Variable


class BadParams(ValueError):
    pass


COIN_PROPERTY = "P=? [ F x>=N & !f ]"
EXPFAMILY_PROPERTY = "P=? [ F pc=2 ]"


def gen_coin(n: int | None = None) -> str:
    """The coin game in the PRISM subset; ``n=None`` leaves ``N`` undefined."""
    if n is not None and (n < 2 or n % 2):
        raise BadParams("N must be an even number >= 2")
    const = "const int N;" if n is None else f"const int N = {n};"
    return f"""dtmc

{const}

module coingame
    x : [0..N+1] init N/2;
    f : bool init false;

    [] 0<x<N & !f -> 1/2: (x'=x-1) + 1/2: (f'=true);
    [] 0<x<N & f  -> 1/2: (x'=x-1) & (f'=false) + 1/2: (x'=x+2) & (f'=false);
    [] x=0 | x>=N -> 1: (x'=x);
endmodule
"""


def expfamily(m: int) -> Pcfp:
    """PCFP on which eliminating ``l`` needs ``2^m - 1`` transition eliminations.

    Locations carry a label variable ``pc``: ``lp`` (0, initial), ``l`` (1),
    ``l1`` (2) and ``l2`` (3). The single command at ``lp`` sets one ``y_i``
    with probability ``c/2^i`` where ``c = 2^m/(2^m-1)``.
    """
    if m < 1:
        raise BadParams("m must be >= 1")
    xs = [f"x{i}" for i in range(1, m + 1)]
    ys = [f"y{i}" for i in range(1, m + 1)]
    variables = tuple(
        [Variable.integer(x, 0, 1, 1 - (i % 2)) for i, x in enumerate(xs)]
        + [Variable.integer(y, 0, 1, 0) for y in ys]
    )
    locs = tuple(Location(name, "p", (("pc", k),)) for k, name in enumerate(("lp", "l", "l1", "l2")))
    total = 2**m - 1
    branches = tuple(
        Destination(Fraction(2 ** (m - i), total), E.Update.of({y: E.Lit(1)}), "l")
        for i, y in enumerate(ys, 1)
    )
    hit = E.disj(*(E.conj(E.cmp("=", E.Var(x), 1), E.cmp("=", E.Var(y), 1)) for x, y in zip(xs, ys)))
    reset = E.Update.of({v: E.Lit(0) for v in xs + ys})
    commands = (
        Command("c0", "lp", E.TRUE, branches),
        Command("c1", "l", hit, (Destination(Fraction(1), reset, "l1"),)),
        Command("c2", "l", E.simplify(E.Not(hit)), (Destination(Fraction(1), E.NOP, "l2"),)),
    )
    pc = Variable.integer("pc", 0, 3, 0)
    goal = E.cmp("=", E.Var("pc"), 2)
    return Pcfp(locs, variables, commands, "lp", (), (pc,), (("goal", goal),), "dtmc")


def gen_expfamily(m: int) -> str:
    from .frontend.jsonfmt import serialize_pcfp

    return serialize_pcfp(expfamily(m))
