"""Semi-decision procedures for closed and open diagrams of prenex sentences.

A query asks whether ``phi^M <= q`` (closed) or ``phi^M < q`` (open).  The
procedures peel one quantifier at a time and follow the matching pattern:

* ``sup x . psi <= q``  iff  for all a, psi(a) <= q; refuted by (k, a) with psi(a) > q + 2^-k
* ``sup x . psi <  q``  iff  some k has psi(a) <= q - 2^-k for all a
* ``inf x . psi <= q``  iff  for all k some a has psi(a) < q + 2^-k
* ``inf x . psi <  q``  iff  some (k, a) has psi(a) <= q - 2^-k

Searches over ``(k, a)`` are dovetailed by ``k + index``.  Universal claims
over points are only settled by a completed exhaustive scan, which needs a
presentation that reports a finite scan size (the discrete structure does).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .hierarchy import exists_member, forall_member
from .logic import (Const, Dist, Formula, Inf, Pred, PrenexClass, Sup, Var, classify_prenex,
                    free_vars, render_term, split_prenex)
from .numerics import HALF, ONE, ZERO, Dyadic, Enclosure, clip_unit, pow2
from .structures import (LowerBoundStructure, Presentation, RelationFamily, compact_eval,
                         eval_qf_env, make_lower_bound_structure)

VERIFIED = "Verified"
REFUTED = "Refuted"
UNKNOWN = "Unknown"


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class Budget:
    """Search limits: points scanned per quantifier, largest ``k``, and inner evaluations."""

    points: int = 16
    precision: int = 16
    steps: int = 200_000

    def __post_init__(self):
        if self.points < 1 or self.steps < 1 or self.precision < 0:
            raise DiagramError("budget must allow at least one point and one step")

    def scaled(self, factor: int) -> Budget:
        return Budget(self.points * factor, self.precision * factor, self.steps * factor)

    def to_json(self) -> dict:
        return {"points": self.points, "precision": self.precision, "steps": self.steps}


@dataclass(frozen=True)
class DiagramQuery:
    sentence: Formula
    threshold: Dyadic
    mode: str  # "closed" for <= q, "open" for < q

    def __post_init__(self):
        if self.mode not in ("closed", "open"):
            raise DiagramError(f"unknown mode {self.mode!r}")
        if not self.threshold.is_truth_value:
            raise DiagramError(f"threshold {self.threshold} lies outside [0, 1]")
        if free_vars(self.sentence):
            raise DiagramError("diagram queries need a sentence")


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: dict | None = None
    budget: dict = field(default_factory=dict)
    range: int | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "witness": self.witness, "budget": self.budget,
                "range": self.range}


class _OutOfSteps(Exception):
    pass


class ThresholdEngine:
    """Shared search for ``value <= q`` / ``value < q`` over sup/inf trees.

    Subclasses describe how a node expands: ``expand`` returns ``("sup" |
    "inf", candidates, exhaustive)`` for a node, or ``None`` for a
    quantifier-free leaf.  Each candidate is ``(label, child, env)``, where the
    label is a JSON-ready dict that names the choice inside witnesses.
    """

    def __init__(self, M: Presentation, budget: Budget):
        self.M = M
        self.budget = budget
        self.used = 0

    def expand(self, obj, env):
        raise NotImplementedError

    def exact(self, obj, env) -> Dyadic:
        """Independent exact value, used only for re-checking exhaustive records."""
        raise NotImplementedError

    def tick(self):
        self.used += 1
        if self.used > self.budget.steps:
            raise _OutOfSteps

    def leaf(self, phi, env, q, mode):
        M = self.M
        if M.exact:
            self.tick()
            v = eval_qf_env(M, phi, env, 0)
            return (VERIFIED if _holds(v, q, mode) else REFUTED), {"value": str(v)}
        for k in range(self.budget.precision + 1):
            self.tick()
            v = eval_qf_env(M, phi, env, k)
            eps = pow2(-k)
            if mode == "closed":
                if v + eps <= q:
                    return VERIFIED, {"k": k, "value": str(v)}
                if q < v - eps:
                    return REFUTED, {"k": k, "value": str(v)}
            else:
                if v + eps < q:
                    return VERIFIED, {"k": k, "value": str(v)}
                if q <= v - eps:
                    return REFUTED, {"k": k, "value": str(v)}
        return UNKNOWN, None

    def tail_of(self, obj, label) -> Dyadic | None:
        """How far the node value can sit past the candidate ``label`` (``None``: unknown)."""
        return None

    def _tail_shortcut(self, obj, kind, cands, q, mode):
        # sup node: value <= child + t, so child below q - t settles it; inf node is dual
        for label, child, cenv in cands:
            t = self.tail_of(obj, label)
            if t is None:
                continue
            if kind == "sup":
                status, inner = self.check(child, cenv, q - t, mode)
                if status == VERIFIED:
                    return VERIFIED, {**label, "tail": str(t), "inner": inner}
            else:
                status, inner = self.check(child, cenv, q + t, mode)
                if status == REFUTED:
                    return REFUTED, {**label, "tail": str(t), "inner": inner}
        return None

    def check(self, obj, env, q, mode):
        node = self.expand(obj, env)
        if node is None:
            return self.leaf(obj, env, q, mode)
        kind, cands, exhaustive = node
        settled = self._tail_shortcut(obj, kind, cands, q, mode)
        if settled is not None:
            return settled
        if kind == "sup" and mode == "closed":
            return self._search(cands, exhaustive, q, REFUTED, +1, "closed", VERIFIED)
        if kind == "inf" and mode == "open":
            return self._search(cands, exhaustive, q, VERIFIED, -1, "open", REFUTED)
        if kind == "sup":
            # refuted by one candidate >= q; verified by a uniform gap below q
            return self._single_then_uniform(cands, exhaustive, q, "open", REFUTED, -1, "closed", VERIFIED)
        # verified by one candidate <= q; refuted by a uniform gap above q
        return self._single_then_uniform(cands, exhaustive, q, "closed", VERIFIED, +1, "open", REFUTED)

    def _search(self, cands, exhaustive, q, find, sign, clear, clear_status):
        """Dovetail (k, i) by k + i for ``find`` at threshold ``q + sign * 2^-k``.

        A candidate is cleared once its check at ``q`` itself comes out as
        ``clear_status``; no k can then succeed there.  If every candidate is
        cleared by an exhaustive scan, the opposite verdict is settled.
        """
        kmax = self.budget.precision
        cleared = set()
        for s in range(kmax + len(cands)):
            for k in range(min(s, kmax) + 1):
                i = s - k
                if i >= len(cands) or i in cleared:
                    continue
                label, child, cenv = cands[i]
                if k == 0:
                    status, _ = self.check(child, cenv, q, clear)
                    if status == clear_status:
                        cleared.add(i)
                        continue
                threshold = q + pow2(-k) if sign > 0 else q - pow2(-k)
                status, inner = self.check(child, cenv, threshold, "closed")
                if status == find:
                    return find, {**label, "k": k, "inner": inner}
        if exhaustive and len(cleared) == len(cands):
            return clear_status, {"exhaustive": len(cands)}
        return UNKNOWN, None

    def _single_then_uniform(self, cands, exhaustive, q, single_mode, single_status, sign,
                             uniform_mode, uniform_status):
        for label, child, cenv in cands:
            status, inner = self.check(child, cenv, q, single_mode)
            if status == single_status:
                return single_status, {**label, "inner": inner}
        if not exhaustive:
            return UNKNOWN, None
        for k in range(self.budget.precision + 1):
            threshold = q + pow2(-k) if sign > 0 else q - pow2(-k)
            if all(self.check(child, cenv, threshold, uniform_mode)[0] == uniform_status
                   for _, child, cenv in cands):
                return uniform_status, {"k": k, "exhaustive": len(cands)}
        return UNKNOWN, None

    def run(self, obj, q, mode):
        try:
            return self.check(obj, {}, q, mode)
        except _OutOfSteps:
            return UNKNOWN, None

    def recheck(self, obj, env, q, mode, status, w) -> bool:
        """Re-verify a verdict by following its witness, with exact evaluation at the ends."""
        want = status == VERIFIED
        node = self.expand(obj, env)
        if node is None:
            return _holds(eval_qf_env(self.M, obj, env, 0), q, mode) == want
        if "exhaustive" in w:
            return _holds(self.exact(obj, env), q, mode) == want
        kind, cands, _ = node
        label = {key: val for key, val in w.items() if key not in ("k", "inner", "tail")}
        match = [c for c in cands if c[0] == label]
        if not match:
            return False
        _, child, cenv = match[0]
        if "tail" in w:
            t = self.tail_of(obj, label)
            if t is None or str(t) != w["tail"]:
                return False
            return self.recheck(child, cenv, q - t if kind == "sup" else q + t, mode, status, w["inner"])
        k = w.get("k")
        if k is None:
            # a single candidate settles sup-open (refuted) or inf-closed (verified)
            return self.recheck(child, cenv, q, mode, status, w["inner"])
        if kind == "sup":
            return self.recheck(child, cenv, q + pow2(-k), "closed", REFUTED, w["inner"])
        return self.recheck(child, cenv, q - pow2(-k), "closed", VERIFIED, w["inner"])


class _FormulaEngine(ThresholdEngine):
    def __init__(self, M, budget, points, exhaustive):
        super().__init__(M, budget)
        self.points = points
        self.exhaustive = exhaustive
        self._pts = [M.rational_point(i) for i in range(points)]
        self._labels = [render_term(p) for p in self._pts]

    def expand(self, phi, env):
        if not isinstance(phi, (Sup, Inf)):
            return None
        cands = [({"var": phi.var, "point": label}, phi.body, {**env, phi.var: p})
                 for label, p in zip(self._labels, self._pts)]
        return ("sup" if isinstance(phi, Sup) else "inf"), cands, self.exhaustive

    def exact(self, phi, env):
        return exact_value(self.M, phi, self.points, env)


def _prepare(M: Presentation, phi: Formula, budget: Budget):
    if free_vars(phi):
        raise DiagramError(f"free variables {sorted(free_vars(phi))}")
    cls = classify_prenex(phi)  # raises on non-prenex input
    need = M.scan_size(phi)
    exhaustive = need is not None and budget.points >= need
    points = need if exhaustive else budget.points
    return cls, points, exhaustive


def _compact_check(M, phi, q, mode, budget):
    for k in range(budget.precision + 1):
        enc = compact_eval(M, phi, k)
        if mode == "closed":
            if enc.hi <= q:
                return VERIFIED, {"k": k, "enclosure": enc.to_json()}
            if q < enc.lo:
                return REFUTED, {"k": k, "enclosure": enc.to_json()}
        else:
            if enc.hi < q:
                return VERIFIED, {"k": k, "enclosure": enc.to_json()}
            if q <= enc.lo:
                return REFUTED, {"k": k, "enclosure": enc.to_json()}
    return UNKNOWN, None


def diagram_check(M: Presentation, phi: Formula, q: Dyadic, mode: str, budget: Budget | None = None,
                  klass: PrenexClass | None = None) -> Verdict:
    """Semi-decide ``phi^M <= q`` (``mode="closed"``) or ``phi^M < q`` (``mode="open"``)."""
    budget = budget or Budget()
    query = DiagramQuery(phi, q, mode)
    cls, points, exhaustive = _prepare(M, phi, budget)
    if klass is not None and cls != klass:
        raise DiagramError(f"sentence is {cls}, procedure expects {klass}")
    if M.compact and split_prenex(phi)[0]:
        status, witness = _compact_check(M, phi, q, mode, budget)
        return Verdict(status, witness, {**budget.to_json(), "used": None}, None)
    engine = _FormulaEngine(M, budget, points, exhaustive)
    status, witness = engine.run(query.sentence, q, mode)
    return Verdict(status, witness, {**budget.to_json(), "used": engine.used}, points - 1)


def closed_check(M: Presentation, phi: Formula, q: Dyadic, budget: Budget | None = None,
                 klass: PrenexClass | None = None) -> Verdict:
    return diagram_check(M, phi, q, "closed", budget, klass)


def open_check(M: Presentation, phi: Formula, q: Dyadic, budget: Budget | None = None,
               klass: PrenexClass | None = None) -> Verdict:
    return diagram_check(M, phi, q, "open", budget, klass)


# ---------------------------------------------------------------------------
# independent evaluation and witness re-checking


def exact_value(M: Presentation, phi: Formula, points: int, env: dict | None = None) -> Dyadic:
    """Plain nested max/min over the first ``points`` rational points."""
    if not M.exact:
        raise DiagramError("exact evaluation needs an exact presentation")
    env = env or {}
    if isinstance(phi, (Sup, Inf)):
        vals = [exact_value(M, phi.body, points, {**env, phi.var: M.rational_point(i)})
                for i in range(points)]
        return max(vals) if isinstance(phi, Sup) else min(vals)
    return eval_qf_env(M, phi, env, 0)


def _holds(v: Dyadic, q: Dyadic, mode: str) -> bool:
    return v <= q if mode == "closed" else v < q


def recheck_witness(M: Presentation, phi: Formula, q: Dyadic, mode: str, verdict: Verdict) -> bool:
    """Re-verify a verdict from scratch, following its witness down the prefix.

    Point witnesses are checked by substituting the point and testing the
    claimed inner inequality; exhaustive records are checked by plain exact
    evaluation over the recorded number of points.
    """
    if verdict.status == UNKNOWN:
        return True
    engine = _FormulaEngine(M, Budget(), verdict.range + 1, True)
    return engine.recheck(phi, {}, q, mode, verdict.status, verdict.witness)


# ---------------------------------------------------------------------------
# enclosures


def eval_enclosure(M: Presentation, phi: Formula, budget: Budget | None = None) -> Enclosure:
    """Sound enclosure of ``phi^M`` from the first ``budget.points`` rational points.

    Compact presentations get a two-sided grid enclosure; a completed
    exhaustive scan gives the exact value; otherwise a sup block only raises
    the lower end and an inf block only lowers the upper end.
    """
    budget = budget or Budget()
    if budget.points < 1:
        raise DiagramError("budget must allow at least one point")
    _, points, exhaustive = _prepare(M, phi, budget)
    if M.compact:
        return compact_eval(M, phi, budget.precision)
    if exhaustive and M.exact:
        v = exact_value(M, phi, points)
        return Enclosure(v, v)
    pts = [M.rational_point(i) for i in range(points)]
    k = budget.precision

    def go(f, env):
        if isinstance(f, Sup):
            encs = [go(f.body, {**env, f.var: p}) for p in pts]
            return Enclosure(max(e.lo for e in encs), ONE)
        if isinstance(f, Inf):
            encs = [go(f.body, {**env, f.var: p}) for p in pts]
            return Enclosure(ZERO, min(e.hi for e in encs))
        v = eval_qf_env(M, f, env, k)
        if M.exact:
            return Enclosure(v, v)
        return clip_unit(Enclosure(v - pow2(-k), v + pow2(-k)))

    return go(phi, {})


# ---------------------------------------------------------------------------
# lower-bound sentences and the cross-check harness


def build_lower_bound_sentences(N: int, n: int) -> tuple[Formula, Formula]:
    """``inf x1 . sup x2 ... P[2N,n](x1..xN)`` and ``sup x1 . inf x2 ... P[2N+1,n](x1..xN)``.

    For ``N = 0`` these degenerate to ``d(c[2n], zero)`` and ``d(c[2n+1], zero)``.
    """
    if N < 0 or n < 0:
        raise ValueError("N and n must be non-negative")
    if N == 0:
        return Dist(Const(f"c[{2 * n}]"), Const("zero")), Dist(Const(f"c[{2 * n + 1}]"), Const("zero"))
    xs = tuple(Var(f"x{i}") for i in range(1, N + 1))
    phi: Formula = Pred(f"P[{2 * N},{n}]", xs)
    psi: Formula = Pred(f"P[{2 * N + 1},{n}]", xs)
    for i in reversed(range(N)):
        name = xs[i].name
        phi = Inf(name, phi) if i % 2 == 0 else Sup(name, phi)
        psi = Sup(name, psi) if i % 2 == 0 else Inf(name, psi)
    return phi, psi


def cross_check_lower_bounds(fam: RelationFamily, N_max: int, n_max: int,
                             budget: Budget | None = None, N_min: int = 0) -> dict:
    """Compare diagram verdicts at 1/2 with brute membership for every ``N <= N_max``, ``n < n_max``."""
    missing = [a for N in range(N_min, N_max + 1) for a in (2 * N, 2 * N + 1) if a not in fam]
    if missing:
        raise DiagramError(f"relation family lacks levels {missing}")
    M = make_lower_bound_structure(fam)
    budget = budget or Budget(points=64)
    instances, mismatches = [], []
    for N in range(N_min, N_max + 1):
        R_even, R_odd = fam.level(2 * N), fam.level(2 * N + 1)
        for n in range(n_max):
            phi, psi = build_lower_bound_sentences(N, n)
            v_phi = closed_check(M, phi, HALF, budget)
            v_psi = open_check(M, psi, HALF, budget)
            expect_phi = forall_member(R_even, n, R_even.bound + 1)
            expect_psi = exists_member(R_odd, n, R_odd.bound + 1)
            for kind, verdict, expect in (("forall", v_phi, expect_phi), ("exists", v_psi, expect_psi)):
                row = {"N": N, "n": n, "kind": kind, "verdict": verdict.status, "member": expect,
                       "range": verdict.range}
                instances.append(row)
                if verdict.status != (VERIFIED if expect else REFUTED):
                    mismatches.append(row)
    return {"check": "lower-bound cross-check", "N_max": N_max, "n_max": n_max,
            "instances": len(instances), "mismatches": mismatches, "rows": instances}


__all__ = [
    "Budget", "DiagramError", "DiagramQuery", "REFUTED", "UNKNOWN", "VERIFIED", "Verdict",
    "build_lower_bound_sentences", "closed_check", "cross_check_lower_bounds", "diagram_check",
    "eval_enclosure", "exact_value", "open_check", "recheck_witness", "LowerBoundStructure",
]
