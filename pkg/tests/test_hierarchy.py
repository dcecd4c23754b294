import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contlogic.hierarchy import (ArityError, QuantPrefix, RelationTable, brute_prefix_holds, check_carry,
                                 check_forall_star, check_inf_sup, check_swap, chi_prefix_value,
                                 encode_exists_check, encode_forall_check, exists_member, exists_series,
                                 forall_member, forall_series, g_form, gamma_K, gamma_total, star, star_direct)
from contlogic.numerics import HALF, ONE, Dyadic, tail_weight
from contlogic.verify import encode_with_retry, random_corpus, slice_corpus


def tables(arity, bound):
    side = bound + 1
    return st.builds(
        lambda bits, ext: RelationTable(arity, bound, np.array(bits, dtype=bool).reshape((side,) * arity), ext),
        st.lists(st.booleans(), min_size=side ** arity, max_size=side ** arity),
        st.sampled_from(["false", "true"]),
    )


def test_table_basics_and_json(tmp_path):
    R = RelationTable.from_tuples(2, 3, [(0, 1), (2, 2)])
    assert R.holds(0, 1) and not R.holds(1, 0)
    assert not R.holds(9, 9)
    assert RelationTable.from_tuples(2, 3, [], extension="true").holds(9, 0)
    assert R.complement().holds(1, 0) and not R.complement().holds(0, 1)
    path = tmp_path / "r.json"
    path.write_text(json.dumps(R.to_json()))
    assert RelationTable.load(path) == R
    with pytest.raises(ValueError):
        RelationTable.from_tuples(2, 3, [(0, 4)])


def test_clamp_extension():
    R = RelationTable.from_tuples(1, 2, [(2,)], extension="clamp")
    assert R.holds(2) and R.holds(7) and not R.holds(1)


def test_brute_prefix_examples():
    assert brute_prefix_holds(RelationTable.full(2, 2), QuantPrefix.forall_vec(2), (0,), 3)
    assert not brute_prefix_holds(RelationTable.empty(2, 2), QuantPrefix.forall_vec(2), (0,), 3)
    # R(n, x1) iff x1 >= n, first coordinate is the parameter
    R = RelationTable.from_predicate(2, 5, lambda n, x: x >= n)
    prefix = QuantPrefix(((1, "E"),), (0,))
    assert brute_prefix_holds(R, prefix, (3,), 5)
    assert not brute_prefix_holds(R, QuantPrefix(((1, "A"),), (0,)), (3,), 5)


def test_prefix_validation():
    with pytest.raises(ValueError):
        QuantPrefix(((0, "A"), (0, "E")))
    with pytest.raises(ArityError):
        brute_prefix_holds(RelationTable.full(3, 1), QuantPrefix.forall_vec(2), (0,), 2)


def test_chi_prefix_value():
    R = RelationTable.from_tuples(1, 2, [(1,)])
    empty = QuantPrefix((), (0,))
    assert chi_prefix_value(R, empty, (1,), 2) == (ONE, HALF)
    assert chi_prefix_value(R, empty, (0,), 2)[1] == ONE
    for bound in range(3):
        for R, n in slice_corpus(2, bound):
            for prefix in (QuantPrefix.forall_vec(2), QuantPrefix.exists_vec(2)):
                chi, g = chi_prefix_value(R, prefix, (n,), bound + 1)
                assert (chi == ONE) == brute_prefix_holds(R, prefix, (n,), bound + 1)
                assert g in (HALF, ONE)


def test_star_examples():
    R = RelationTable.from_tuples(1, 3, [(0,), (2,)])
    S = star(R, QuantPrefix(((0, "A"),)))
    assert [S.holds(x) for x in range(6)] == [True, False, False, False, False, False]
    F = star(RelationTable.full(3, 2))
    assert F.bound == 3 and F.extension == "clamp"
    assert all(F.holds(*t) for t in itertools.product(range(6), repeat=3))


@settings(max_examples=60)
@given(tables(3, 2))
def test_star_matches_literal_expansion(R):
    prefix = QuantPrefix.forall_vec(3)
    S = star(R, prefix)
    for t in itertools.product(range(5), repeat=3):
        assert S.holds(*t) == star_direct(R, prefix, t)


def test_gamma_examples():
    one = lambda *a: ONE
    assert gamma_K(one, 3) == Dyadic(15, 4)
    assert gamma_total(lambda *a: HALF) == HALF
    f = [ONE, HALF, HALF]
    assert gamma_K(lambda m: f[m], 2) == Dyadic(11, 4)


@settings(max_examples=60)
@given(tables(2, 3), st.integers(0, 5), st.integers(4, 12))
def test_gamma_tail_bound(R, n, K):
    S = star(R)
    g = g_form(S)
    total = gamma_total(g, (n,), S.bound)
    assert total == forall_series(R)(n)
    assert abs(total - gamma_K(g, K, (n,))) <= tail_weight(K)


def test_carry_examples():
    assert check_carry([HALF] * 4, 3) == (True, True)
    for K in range(1, 6):
        assert check_carry([ONE] + [HALF] * K, K) == (False, False)
        assert check_carry([HALF] * K + [ONE], K) == (True, True)


def test_swap_full_table():
    for K in range(4):
        assert check_swap(RelationTable.full(3, 2), 1, K, (0,)) == ((True, True), (True, True))


def test_inf_sup_and_forall_star_small():
    for bound in range(2):
        for R, n in slice_corpus(3, bound):
            (a, b), (c, d) = check_inf_sup(R, n, bound + 1)
            assert a == b and c == d
            lhs, rhs = check_forall_star(R, n, bound + 1)
            assert lhs == rhs


def test_encode_examples():
    assert encode_forall_check(RelationTable.full(2, 3), 0)
    assert not encode_forall_check(RelationTable.empty(2, 3), 0)
    assert encode_exists_check(RelationTable.full(3, 2), 1)
    assert not encode_exists_check(RelationTable.empty(3, 2), 1)


def test_encode_with_retry_on_samples():
    ranges = {}
    for R, n in random_corpus(3, 2, 200, seed=11):
        fa, ex, r = encode_with_retry(R, n)
        assert r is not None
        assert fa == forall_member(R, n, R.bound + 1) and ex == exists_member(R, n, R.bound + 1)
        ranges[r - R.bound] = ranges.get(r - R.bound, 0) + 1
    assert set(ranges) <= {0, 1}


def test_series_ranges():
    R = RelationTable.from_predicate(3, 2, lambda x0, x1, n: x0 + x1 <= n)
    f, h = forall_series(R), exists_series(R)
    for t in itertools.product(range(5), repeat=2):
        assert HALF <= f(*t) <= ONE
        assert Dyadic(0) <= h(*t) <= HALF
