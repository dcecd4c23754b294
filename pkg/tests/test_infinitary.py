import json
import random

import pytest

from _fixtures import sample_relations
from contlogic.diagrams import REFUTED, UNKNOWN, VERIFIED, Budget
from contlogic.hierarchy import RelationTable
from contlogic.infinitary import (ZERO_ORD, EnumeratorRef, EnumeratorRegistry, InfinitaryError, Leaf, Lim,
                                  Node, NotationError, avg_code, ce_real_sequence, close_code, code_from_json,
                                  code_to_json, cut_check, encode_set_pi, encode_set_sigma, eval_inf, finite,
                                  fundamental, half_code, inner_product_code, item_problem, leaf, make_pi_code,
                                  make_sigma_code, neg_code, omega, ord_le, ord_lt, ord_max, ordinal_from_json,
                                  ordinal_to_json, recheck_cut, register_ordinal_generator, stream_code)
from contlogic.numerics import HALF, ONE, ZERO, Dyadic, pow2
from contlogic.structures import eval_qf


@pytest.fixture
def sig(interval):
    return interval.signature


def const_leaf(sig, value):
    return leaf(f"d(q(0), q({value}))", sig)


def test_ordinals():
    three = finite(3)
    assert ord_lt(finite(2), three) and not ord_lt(three, three) and ord_le(three, three)
    assert ord_lt(finite(40), omega()) and not ord_lt(omega(), finite(40))
    assert ord_lt(omega(), finite(1, omega())) and ord_lt(finite(5, omega()), omega(2))
    assert fundamental(omega(2), 3) == finite(3, omega())
    assert ord_max(finite(2), omega()) == omega()
    assert str(finite(2, omega())) == "w*1+2"
    for a in (finite(0), finite(4), omega(3), finite(2, omega(2))):
        assert ordinal_from_json(ordinal_to_json(a)) == a
    with pytest.raises(NotationError):
        omega(0)


def test_custom_ordinal_generator():
    register_ordinal_generator("evens", lambda m: finite(2 * m))
    assert ord_lt(finite(10), Lim("evens"))
    with pytest.raises(NotationError):
        register_ordinal_generator("evens", lambda m: finite(m))
    with pytest.raises(NotationError):
        fundamental(Lim("nowhere"), 0)


def test_node_validation(sig):
    a = const_leaf(sig, "1/2")
    with pytest.raises(InfinitaryError):
        leaf("sup x . d(x, q(0))", sig)
    with pytest.raises(NotationError):
        Node("Pi", 0, (), EnumeratorRef("list", ()))
    sigma = make_sigma_code(1, [], [(a, ())])
    with pytest.raises(NotationError):
        make_sigma_code(2, [], [(sigma, ())])
    with pytest.raises(NotationError):
        make_pi_code(1, [], [(sigma, ())])
    pi = make_pi_code(2, [], [(sigma, ())])
    assert item_problem(pi, (sigma, ())) is None
    assert item_problem(pi, (leaf("d(x, q(0))", sig), ())) is not None
    assert item_problem(pi, (leaf("d(x, q(0))", sig), ("x",))) is None


def test_spec_values(interval, sig):
    assert eval_inf(interval, make_sigma_code(1, [], []), 3) == eval_inf(interval, leaf("d(q(0), q(1))", sig), 0)
    e = eval_inf(interval, make_sigma_code(1, [], []), 3)
    assert (e.lo, e.hi) == (ONE, ONE)
    e = eval_inf(interval, make_pi_code(1, [], [(leaf("d(q(0), q(0))", sig), ())]), 0)
    assert (e.lo, e.hi) == (ZERO, ZERO)
    items = [(const_leaf(sig, v), ()) for v in ("0", "1/2", "1/4")]
    for T in (2, 5):
        e = eval_inf(interval, make_pi_code(1, [], items), T)
        assert (e.lo, e.hi) == (HALF, HALF)
    e = eval_inf(interval, make_sigma_code(1, [], items), 1)
    assert e.hi == ZERO


def test_truncation_monotone(interval, sig):
    items = [(const_leaf(sig, v), ()) for v in ("1/4", "3/4", "1/2")]
    code = make_pi_code(1, [], items)
    encs = [eval_inf(interval, code, T) for T in range(4)]
    assert [str(e) for e in encs] == ["[1/2^2, 1]", "[3/2^2, 1]", "[3/2^2, 3/2^2]", "[3/2^2, 3/2^2]"]
    assert all(b.within(a) for a, b in zip(encs, encs[1:]))


def test_leaf_matches_eval_qf(interval, sig):
    phi = leaf("avg(d(q(1/4), q(0)), d(q(1), q(0)))", sig)
    e = eval_inf(interval, phi, 0)
    assert e.pinned and e.lo == eval_qf(interval, phi.formula) == Dyadic(5, 3)


def test_item_variables(interval, sig):
    # sup over items with a quantified variable: sup_z d(z, q(1/2)) on the first four points
    code = make_pi_code(1, [], [(leaf("d(z, q(1/2))", sig), ("z",))])
    e = eval_inf(interval, code, 0, Budget(points=4))
    assert e.lo == HALF and e.hi == ONE
    closed = close_code(leaf("d(x, q(0))", sig), "Pi", ["x"])
    assert eval_inf(interval, closed, 0, Budget(points=2)).lo == ONE


def test_avg_half_neg(interval, sig):
    a, b = const_leaf(sig, "1/4"), const_leaf(sig, "3/4")
    e = eval_inf(interval, avg_code(a, b), 0)
    assert (e.lo, e.hi) == (HALF, HALF)
    assert eval_inf(interval, half_code(b), 0).lo == Dyadic(3, 3)
    assert eval_inf(interval, neg_code(a), 0).lo == Dyadic(3, 2)
    p = make_pi_code(1, [], [(a, ()), (b, ())])
    q = make_pi_code(1, [], [(HALF_LEAF(sig), ())])
    e = eval_inf(interval, avg_code(p, q), 8)
    assert (e.lo, e.hi) == (Dyadic(5, 3), Dyadic(5, 3))
    s = make_sigma_code(1, [], [(a, ())])
    with pytest.raises(InfinitaryError):
        avg_code(p, s)
    assert avg_code(p, q).kind == "Pi" and avg_code(s, a).kind == "Sigma"


def HALF_LEAF(sig):
    return const_leaf(sig, "1/2")


def test_inner_product_of_halves(interval, sig):
    finite_sum = eval_inf(interval, inner_product_code([HALF_LEAF(sig)] * 13), 12)
    assert (str(finite_sum.lo), str(finite_sum.hi)) == ("8191/2^14", "8191/2^14")
    code = inner_product_code([HALF_LEAF(sig)] * 30)
    assert code.notation == finite(1)
    e = eval_inf(interval, code, 12)
    assert (str(e.lo), str(e.hi)) == ("8191/2^14", "8193/2^14")
    assert e.contains(HALF) and e.width <= pow2(-12)


def test_inner_product_node_operands(interval, sig):
    p = make_pi_code(1, [], [(const_leaf(sig, "1/4"), ())])
    code = inner_product_code([p, p, p])
    assert code.notation == finite(3)
    e = eval_inf(interval, code, 4)
    assert (e.lo, e.hi) == (Dyadic(7, 5), Dyadic(7, 5))


def test_unbounded_stream_needs_notation():
    with pytest.raises(InfinitaryError):
        inner_product_code(EnumeratorRef("anything", ()))


def _chi_registry(sig, R):
    reg = EnumeratorRegistry()

    def chi(n):
        s = 0
        while True:
            yield (const_leaf(sig, "0" if R.holds(n, s) else "1/2"), ())
            s += 1

    reg.register("chi", chi)
    return reg


def test_reduction_through_inner_products(interval, sig):
    # phi_n = sum_s 2^-(s+1) psi_s sits below 1/2 exactly when some R(n, s) holds
    R = RelationTable.from_predicate(2, 5, lambda n, s: s > 0 and n % s == 0 and n > 1 and s < n)
    reg = _chi_registry(sig, R)
    for n in range(8):
        code = inner_product_code(EnumeratorRef("chi", (n,)), ZERO_ORD)
        v = cut_check(interval, code, HALF, ">", 8, Budget(steps=20_000), reg)
        member = any(R.holds(n, s) for s in range(6))
        assert (v.status == VERIFIED) == member
        assert recheck_cut(interval, code, HALF, ">", v, 8, registry=reg)
        if not member:
            assert v.status == UNKNOWN


def test_cut_checks(interval, sig):
    zero = leaf("d(q(0), q(0))", sig)
    assert cut_check(interval, zero, HALF, ">", 0).status == VERIFIED
    pinned = make_pi_code(1, [], [(HALF_LEAF(sig), ())])
    v = cut_check(interval, pinned, HALF, ">=", 2)
    assert v.status == VERIFIED
    assert recheck_cut(interval, pinned, HALF, ">=", v, 2)
    for budget in (Budget(), Budget().scaled(4)):
        assert cut_check(interval, pinned, HALF, ">", 2, budget).status != VERIFIED
    assert cut_check(interval, pinned, Dyadic(1, 2), ">", 2).status == REFUTED
    with pytest.raises((InfinitaryError, ValueError)):
        cut_check(interval, pinned, HALF, "<", 2)


def test_json_round_trip(interval, sig):
    a, b = const_leaf(sig, "1/4"), const_leaf(sig, "3/4")
    codes = [
        make_pi_code(1, [], [(a, ()), (b, ())]),
        avg_code(a, make_pi_code(2, ["x"], [(leaf("d(x, z)", sig), ("z",))])),
        inner_product_code([HALF_LEAF(sig)] * 3),
        neg_code(make_sigma_code(omega(), [], [(a, ())])),
        encode_set_sigma(sample_relations()[2][0], 2).code(3),
    ]
    for code in codes:
        data = code_to_json(code)
        assert code_from_json(json.loads(json.dumps(data)), sig) == code


@pytest.mark.parametrize("level", [0, 1, 2])
def test_encodings_exact(level):
    for R in sample_relations()[level]:
        for enc in (encode_set_sigma(R, level), encode_set_pi(R, level)):
            for n in range(8):
                e = eval_inf(enc.structure, enc.code(n), R.bound + 3)
                assert e.pinned and e.lo == enc.expected(n)


def test_encoding_level_zero_codes():
    R = RelationTable.from_tuples(1, 3, [(1,)])
    enc = encode_set_sigma(R, 0)
    assert enc.code(1).formula.right.name == "q(0)" and enc.expected(1) == ZERO
    assert enc.code(0).formula.right.name == "q(1/2^1)" and enc.expected(0) == HALF
    with pytest.raises(InfinitaryError):
        encode_set_sigma(RelationTable.full(2, 1), 0)
    with pytest.raises(InfinitaryError):
        encode_set_pi(RelationTable.full(2, 1), 2)
    with pytest.raises(NotationError):
        encode_set_sigma(R, omega())


def test_ce_sequence():
    p = ce_real_sequence(lambda s: 2 * s)
    assert p.approx(4, 10) == Dyadic(1, 2)
    assert p.approx(0, 3) == Dyadic(-1, 1)
    assert p.approx(5, 12) == HALF
    for n in range(10):
        for k in range(8):
            for k2 in range(8):
                assert abs(p.approx(n, k) - p.approx(n, k2)) <= pow2(-k) + pow2(-k2)
    with pytest.raises(InfinitaryError):
        ce_real_sequence([1, 2, 1]).approx(0, 5)
    fin = ce_real_sequence([3, 1])
    assert fin.approx(1, 50) == Dyadic(0) and fin.approx(3, 50) == Dyadic(-1, 1)


def test_registry_is_write_once():
    reg = EnumeratorRegistry()
    reg.register("mine", lambda: iter(()))
    with pytest.raises(InfinitaryError):
        reg.register("mine", lambda: iter(()))
    with pytest.raises(InfinitaryError):
        reg.register("avg", lambda: iter(()))
    assert "mine" in reg and "list" in reg


def test_invalid_stream_items_are_skipped(interval, sig):
    reg = EnumeratorRegistry()
    bad = make_pi_code(3, [], [])
    reg.register("mixed", lambda: iter([(const_leaf(sig, "1/4"), ()), (bad, ()), (const_leaf(sig, "1/2"), ())]))
    code = stream_code("Pi", 2, [], "mixed")
    e = eval_inf(interval, code, 5, registry=reg)
    assert (e.lo, e.hi) == (HALF, HALF)
