"""Seeded random sentences and small sample relations shared by the tests."""

import random

from contlogic.hierarchy import RelationTable
from contlogic.logic import Dist, Half, Inf, Neg, Pred, Sup, TSub, Const, Var, f_max, f_min
from contlogic.numerics import Dyadic

VARS = ("x", "y")


def _term(rng, bound):
    if bound and rng.random() < 0.6:
        return Var(rng.choice(bound))
    return Const(rng.choice([f"pt[{rng.randrange(3)}]", "zero", f"c[{rng.randrange(6)}]"]))


def _atom(rng, bound):
    if bound and rng.random() < 0.5:
        n = rng.randrange(4)
        return Pred(f"P[2,{n}]" if rng.random() < 0.5 else f"P[3,{n}]", (_term(rng, bound),))
    return Dist(_term(rng, bound), _term(rng, bound))


def _matrix(rng, bound, depth):
    if depth == 0 or rng.random() < 0.3:
        return _atom(rng, bound)
    k = rng.randrange(5)
    a = _matrix(rng, bound, depth - 1)
    if k == 0:
        return Neg(a)
    if k == 1:
        return Half(a)
    b = _matrix(rng, bound, depth - 1)
    return (TSub, f_min, f_max)[k - 2](a, b)


def random_query(rng: random.Random):
    """(sentence, threshold, mode) with up to two quantifiers."""
    nq = rng.randrange(3)
    bound = VARS[:nq]
    phi = _matrix(rng, bound, 2)
    for v in reversed(bound):
        phi = (Sup if rng.random() < 0.5 else Inf)(v, phi)
    q = Dyadic.make(rng.randrange(9), 3)
    return phi, q, rng.choice(("closed", "open"))


def sample_relations():
    """Three relations per finite level, chosen so membership varies over n < 8."""
    table = RelationTable.from_predicate
    return {
        0: [RelationTable.from_tuples(1, 7, [(1,), (2,), (5,)]),
            table(1, 7, lambda n: n % 2 == 0),
            table(1, 7, lambda n: n in (2, 3, 5, 7))],
        1: [table(2, 3, lambda x, n: (x * n) % 2 == 0, "clamp"),
            table(2, 3, lambda x, n: x * x == n),
            table(2, 3, lambda x, n: (x + n) % 3 == 0)],
        2: [table(3, 3, lambda a, b, n: (a * b) % 4 == n % 4, "clamp"),
            table(3, 3, lambda a, b, n: a + b == n, "clamp"),
            table(3, 3, lambda a, b, n: a + n <= b + 1, "clamp")],
    }
