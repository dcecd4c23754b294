"""Acceptance criteria, one test each, with wall-clock limits.

Every test prints a single ``PASS``/``FAIL`` line with its measurements.
"""

import random
import time

import pytest

from _fixtures import random_query, sample_relations
from contlogic.cli import sample_family_path
from contlogic.diagrams import UNKNOWN, Budget, cross_check_lower_bounds, diagram_check, recheck_witness
from contlogic.infinitary import (ZERO_ORD, EnumeratorRef, EnumeratorRegistry, ce_real_sequence, encode_set_pi,
                                  encode_set_sigma, eval_inf, inner_product_code, leaf)
from contlogic.logic import parse_formula
from contlogic.numerics import HALF, ZERO, Dyadic, pow2
from contlogic.structures import (RelationFamily, compact_eval, make_interval_structure,
                                  make_lower_bound_structure)
from contlogic import verify


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, elapsed, limit, detail=""):
        line = f"[{'PASS' if ok and elapsed < limit else 'FAIL'}] {number:>2}. {title}: {elapsed:.2f}s (limit {limit}s)"
        with capsys.disabled():
            print(f"\n{line}{'  ' + detail if detail else ''}")
        assert ok, detail
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit}s"
    return emit


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def test_01_avg_identity(report):
    r, dt = timed(lambda: verify.verify_avg(6))
    report(1, "avg identity on the 1/64 grid", r["instances"] == 4225 and r["failure_count"] == 0, dt, 1,
           f"{r['instances']} pairs, {r['failure_count']} failures")


def test_02_carry(report):
    r, dt = timed(lambda: verify.verify_carry(10))
    report(2, "carry for all K <= 10", r["instances"] == 4094 and r["failure_count"] == 0, dt, 5,
           f"{r['instances']} functions, {r['failure_count']} failures")


def test_03_inf_sup_and_forall_star(report):
    def run():
        return verify.verify_inf_sup(), verify.verify_forall_star()
    (a, b), dt = timed(run)
    ok = a["failure_count"] == 0 and b["failure_count"] == 0
    report(3, "inf-sup and forall-star oracle equivalence", ok, dt, 60,
           f"{a['instances']} + {b['instances']} instances, {a['failure_count'] + b['failure_count']} mismatches")


def test_04_swap(report):
    r, dt = timed(verify.verify_swap)
    report(4, "swap, both parts", r["failure_count"] == 0, dt, 60,
           f"{r['instances']} instances, {r['failure_count']} mismatches")


def test_05_encode(report):
    r, dt = timed(verify.verify_encode)
    ok = r["failure_count"] == 0 and set(r["ranges"]) <= {"B+0", "B+1", "B+2", "B+3"}
    report(5, "encode against the brute oracle", ok, dt, 120,
           f"{r['instances']} instances, ranges {r['ranges']}, {r['failure_count']} mismatches")


def test_06_lower_bound_cross_check(report):
    fam = RelationFamily.load(sample_family_path())
    r, dt = timed(lambda: cross_check_lower_bounds(fam, 2, 8))
    ok = r["instances"] == 48 and not r["mismatches"]
    report(6, "lower-bound sentences vs membership", ok, dt, 60,
           f"{r['instances']} instances, {len(r['mismatches'])} mismatches")


def test_07_diagram_soundness(report):
    M = make_lower_bound_structure(RelationFamily.load(sample_family_path()))

    def run():
        rng = random.Random(20240607)
        counts, bad = {}, []
        for i in range(100):
            phi, q, mode = random_query(rng)
            v = diagram_check(M, phi, q, mode, Budget())
            big = diagram_check(M, phi, q, mode, Budget().scaled(4))
            counts[v.status] = counts.get(v.status, 0) + 1
            if v.status != UNKNOWN:
                if not recheck_witness(M, phi, q, mode, v):
                    bad.append((i, "witness"))
                if big.status != v.status:
                    bad.append((i, "flip"))
            if big.status != UNKNOWN and not recheck_witness(M, phi, q, mode, big):
                bad.append((i, "witness at 4x"))
        return counts, bad
    (counts, bad), dt = timed(run)
    report(7, "diagram witnesses and budget stability", not bad, dt, 60, f"verdicts {counts}, problems {bad}")


def test_08_compact_eval(report):
    M = make_interval_structure()
    texts = ["sup x . d(x, q(1/2))", "sup x . min(d(x, q(0)), d(x, q(1)))"]

    def run():
        return [compact_eval(M, parse_formula(t, M.signature), 10) for t in texts]
    encs, dt = timed(run)
    eps = pow2(-10)
    ok = all(e.contains(HALF) and HALF - eps <= e.lo and e.hi <= HALF + eps for e in encs)
    report(8, "compact evaluation near 1/2", ok, dt, 5, ", ".join(str(e) for e in encs))


def test_09_inner_product_series(report):
    M = make_interval_structure()
    reg = EnumeratorRegistry()

    def values(seed):
        rng = random.Random(seed)
        while True:
            yield Dyadic.make(rng.randrange(17), 4)

    def operands(seed):
        for v in values(seed):
            yield (leaf(f"d(q(0), q({v}))", M.signature), ())
    reg.register("seeded", operands)

    def run():
        worst, checked = ZERO, 0
        for seed in range(20):
            code = inner_product_code(EnumeratorRef("seeded", (seed,)), ZERO_ORD)
            gen = values(seed)
            direct = ZERO
            for s in range(64):
                direct = direct + next(gen).scale(-(s + 1))
            for T in range(13):
                e = eval_inf(M, code, T, registry=reg)
                tol = pow2(-(T + 1))
                if not (e.contains(direct) and e.hi - direct <= tol and direct - e.lo <= tol):
                    return None, (seed, T, str(e), str(direct))
                worst = max(worst, e.hi - e.lo)
                checked += 1
        return checked, worst
    (checked, info), dt = timed(run)
    report(9, "inner product vs direct series", checked == 260, dt, 10, f"{checked} enclosures checked; {info}")


def test_10_set_encodings(report):
    def run():
        count, bad = 0, []
        for level, rels in sample_relations().items():
            for i, R in enumerate(rels):
                for enc in (encode_set_sigma(R, level), encode_set_pi(R, level)):
                    for n in range(8):
                        e = eval_inf(enc.structure, enc.code(n), R.bound + 3)
                        count += 1
                        if not (e.pinned and e.lo == enc.expected(n)):
                            bad.append((level, i, enc.kind, n, str(e)))
        return count, bad
    (count, bad), dt = timed(run)
    report(10, "finite-level set encodings exact", count == 144 and not bad, dt, 30,
           f"{count} values, mismatches {bad}")


def test_11_ce_sequence(report):
    def run():
        p = ce_real_sequence(lambda s: 2 * s)
        bad = []
        for n in range(16):
            defined = HALF - pow2(-(n // 2)) if n % 2 == 0 else HALF
            for k in range(13):
                if abs(p.approx(n, k) - defined) > pow2(-k):
                    bad.append((n, k))
            if (p.approx(n, n // 2 + 2) < HALF) != (n % 2 == 0):
                bad.append((n, "parity"))
        return bad
    bad, dt = timed(run)
    report(11, "p_n approximations for c_s = 2s", not bad, dt, 5, f"problems {bad}")
