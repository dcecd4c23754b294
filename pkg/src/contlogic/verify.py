"""Instance corpora for the series lemmas, shared by the CLI and the test suite.

Every check here is local in the parameter: whether ``n`` passes depends only
on the slice ``R(..., n)`` and the extension value.  Exhaustive corpora
therefore enumerate every slice (and both extensions) once, placed in a table
whose slices all agree, plus one out-of-bound parameter per extension.  That
covers every behaviour of every table of the given shape.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterator

import numpy as np

from .hierarchy import (RelationTable, check_carry, check_forall_star, check_inf_sup,
                        check_swap, exists_member, forall_member, encode_exists_check,
                        encode_forall_check)
from .numerics import HALF, ONE, Dyadic, d_avg


def slice_corpus(arity: int, bound: int) -> Iterator[tuple[RelationTable, int]]:
    """``(table, n)`` covering every n-slice behaviour of ``arity``-ary tables with this bound."""
    side = bound + 1
    cells = side ** (arity - 1)
    for ext in ("false", "true"):
        for bits in range(1 << cells):
            flat = np.array([(bits >> i) & 1 for i in range(cells)], dtype=bool)
            sl = flat.reshape((side,) * (arity - 1)) if arity > 1 else flat.reshape(())
            table = np.repeat(sl[..., None], side, axis=-1) if arity > 1 else np.full(side, bool(bits & 1))
            yield RelationTable(arity, bound, table, ext), 0
        yield RelationTable.empty(arity, bound) if ext == "false" else RelationTable.full(arity, bound), bound + 1


def random_corpus(arity: int, bound: int, count: int, seed: int) -> Iterator[tuple[RelationTable, int]]:
    rng = random.Random(seed)
    side = bound + 1
    for _ in range(count):
        bits = rng.getrandbits(side ** arity)
        flat = np.array([(bits >> i) & 1 for i in range(side ** arity)], dtype=bool)
        ext = rng.choice(("false", "true"))
        yield RelationTable(arity, bound, flat.reshape((side,) * arity), ext), rng.randint(0, bound + 1)


def _report(lemma, corpus, instances, failures, **extra):
    return {"lemma": lemma, "corpus": corpus, "instances": instances, "failures": failures[:20],
            "failure_count": len(failures), **extra}


def verify_avg(step_exp: int = 6) -> dict:
    n = 1 << step_exp
    failures = []
    for i in range(n + 1):
        for j in range(n + 1):
            a, b = Dyadic.make(i, step_exp), Dyadic.make(j, step_exp)
            if d_avg(a, b) != (a + b).scale(-1):
                failures.append([str(a), str(b)])
    return _report("avg", f"grid 1/{n}", (n + 1) ** 2, failures)


def verify_carry(K_max: int = 10, K_min: int = 0) -> dict:
    failures, count = [], 0
    for K in range(K_min, K_max + 1):
        for bits in range(1 << (K + 1)):
            f = [ONE if (bits >> m) & 1 else HALF for m in range(K + 1)]
            lhs, rhs = check_carry(f, K)
            count += 1
            if lhs != rhs:
                failures.append({"K": K, "f": [str(v) for v in f]})
    span = f"K = {K_max}" if K_min == K_max else f"{K_min} <= K <= {K_max}"
    return _report("carry", f"all f: [0,K] -> {{1/2,1}}, {span}", count, failures)


def _corpora(max_arity, max_bound, sample_bound, samples, seed, min_arity=1):
    for arity in range(min_arity, max_arity + 1):
        for bound in range(max_bound + 1):
            yield from slice_corpus(arity, bound)
    if samples:
        yield from random_corpus(max_arity, sample_bound, samples, seed)


def verify_inf_sup(max_arity=3, max_bound=2, samples=10_000, sample_bound=3, seed=0) -> dict:
    failures, count = [], 0
    for R, n in _corpora(max_arity, max_bound, sample_bound, samples, seed):
        (a1, b1), (a2, b2) = check_inf_sup(R, n, R.bound + 1)
        count += 1
        if a1 != b1 or a2 != b2:
            failures.append({"table": R.to_json(), "n": n})
    return _report("inf-sup", f"arity <= {max_arity}, bound <= {max_bound}, + {samples} at bound {sample_bound}",
                   count, failures)


def verify_forall_star(max_arity=3, max_bound=2, samples=10_000, sample_bound=3, seed=0) -> dict:
    failures, count = [], 0
    for R, n in _corpora(max_arity, max_bound, sample_bound, samples, seed):
        lhs, rhs = check_forall_star(R, n, R.bound + 1)
        count += 1
        if lhs != rhs:
            failures.append({"table": R.to_json(), "n": n})
    return _report("forall-star", f"arity <= {max_arity}, bound <= {max_bound}, + {samples} at bound {sample_bound}",
                   count, failures)


def verify_swap(max_bound=2, K_max=3, samples=500, sample_bound=3, sample_K=4, seed=0) -> dict:
    """Both parts, J = 1, for N = 1 exhaustively and random N = 2 tables."""
    failures, count = [], 0
    for bound in range(max_bound + 1):
        for R, n in slice_corpus(3, bound):
            for K in range(K_max + 1):
                p1, p2 = check_swap(R, 1, K, (n,))
                count += 1
                if p1[0] != p1[1] or p2[0] != p2[1]:
                    failures.append({"table": R.to_json(), "n": n, "K": K})
    rng = random.Random(seed)
    for R, n in random_corpus(4, sample_bound, samples, seed):
        K = rng.randint(0, sample_K)
        J = rng.randint(1, 2)
        params = (rng.randint(0, sample_bound + 1),) * (J - 1) + (n,)
        p1, p2 = check_swap(R, J, K, params)
        count += 1
        if p1[0] != p1[1] or p2[0] != p2[1]:
            failures.append({"table": R.to_json(), "params": list(params), "J": J, "K": K})
    return _report("swap", f"N = 1, bound <= {max_bound}, K <= {K_max}; {samples} random N = 2", count, failures)


def encode_with_retry(R: RelationTable, n: int, extra: int = 3) -> tuple[bool, bool, int | None]:
    """Run both series criteria from range ``B`` upward until they match true membership.

    Returns the two membership facts and the least range at which both
    criteria agree with them, or ``None`` when ``B + extra`` is not enough.
    """
    truth_fa = forall_member(R, n, R.bound + 1)
    truth_ex = exists_member(R, n, R.bound + 1)
    for r in range(R.bound, R.bound + extra + 1):
        if encode_forall_check(R, n, r) == truth_fa and encode_exists_check(R, n, r) == truth_ex:
            return truth_fa, truth_ex, r
    return truth_fa, truth_ex, None


def verify_encode(max_N=1, max_bound=3, samples=1000, sample_bound=3, seed=0) -> dict:
    failures, count = [], 0
    ranges: dict[str, int] = {}
    corpus = itertools.chain(
        *(slice_corpus(N + 2, bound) for N in range(max_N + 1) for bound in range(max_bound + 1)),
        random_corpus(4, sample_bound, samples, seed) if samples else ())
    for R, n in corpus:
        _, _, r = encode_with_retry(R, n)
        count += 1
        key = "none" if r is None else f"B+{r - R.bound}"
        ranges[key] = ranges.get(key, 0) + 1
        if r is None:
            failures.append({"table": R.to_json(), "n": n})
    return _report("encode", f"N <= {max_N}, bound <= {max_bound}; {samples} random N = 2", count, failures,
                   ranges=dict(sorted(ranges.items())))


LEMMAS = {
    "avg": verify_avg,
    "carry": verify_carry,
    "inf-sup": verify_inf_sup,
    "forall-star": verify_forall_star,
    "swap": verify_swap,
    "encode": verify_encode,
}
