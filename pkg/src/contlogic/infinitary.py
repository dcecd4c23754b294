"""Computable infinitary formulas at desk scale.

A code is either a quantifier-free :class:`Leaf` or a :class:`Node`
``(kind, notation, vars, enum)``.  A Pi node is the supremum, and a Sigma node
the infimum, of ``sup_z phi_j`` (resp. ``inf_z phi_j``) over the items
``(phi_j, z)`` its enumerator produces.  Items must be codes of the dual kind
(or leaves) with strictly smaller notation; other items are skipped, so an
enumerator may produce junk without changing the meaning.

Enumerators are named streams in an :class:`EnumeratorRegistry`.  A handful
of transforms are built in (``list``, ``avg``, ``partial-sums``, ``half``,
``neg``, ``encode``); anything else is registered by name before use.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

from .diagrams import REFUTED, UNKNOWN, VERIFIED, Budget, ThresholdEngine, Verdict
from .hierarchy import RelationTable, exists_member, forall_member
from .logic import (Const, Dist, Formula, Half, Neg, Var, dyadic_const, f_avg, free_vars, is_quantifier_free,
                    parse_formula, render, substitute)
from .numerics import HALF, ONE, ZERO, Dyadic, Enclosure, intersect, pow2
from .structures import IntervalStructure, Presentation, RelationFamily, eval_qf_env


class InfinitaryError(ValueError):
    pass


class NotationError(InfinitaryError):
    pass


# ---------------------------------------------------------------------------
# ordinal notations


@dataclass(frozen=True)
class Zero:
    def __str__(self):
        return "0"


@dataclass(frozen=True)
class Succ:
    of: "Ordinal"

    def __str__(self):
        n, base = _split_finite(self)
        return str(n) if isinstance(base, Zero) else f"{base}+{n}"


@dataclass(frozen=True)
class Lim:
    """Limit of the strictly increasing sequence named ``generator``."""

    generator: str

    def __str__(self):
        return self.generator


Ordinal = Zero | Succ | Lim

ZERO_ORD = Zero()
SEARCH_DEPTH = 64


def _split_finite(a):
    n = 0
    while isinstance(a, Succ):
        a, n = a.of, n + 1
    return n, a


def finite(n: int, base: Ordinal = ZERO_ORD) -> Ordinal:
    if n < 0:
        raise NotationError("finite part must be non-negative")
    for _ in range(n):
        base = Succ(base)
    return base


def omega(k: int = 1) -> Lim:
    """Notation for ``omega * k``; its fundamental sequence is ``omega*(k-1) + m``."""
    if k < 1:
        raise NotationError("omega multiple must be positive")
    return Lim(f"w*{k}")


_ORDINAL_GENERATORS: dict[str, Callable[[int], Ordinal]] = {}


def register_ordinal_generator(name: str, fn: Callable[[int], Ordinal]) -> None:
    if name in _ORDINAL_GENERATORS or name.startswith("w*"):
        raise NotationError(f"ordinal generator {name} is already defined")
    _ORDINAL_GENERATORS[name] = fn


def fundamental(a: Lim, m: int) -> Ordinal:
    if a.generator.startswith("w*"):
        k = int(a.generator[2:])
        return finite(m) if k == 1 else finite(m, omega(k - 1))
    try:
        return _ORDINAL_GENERATORS[a.generator](m)
    except KeyError:
        raise NotationError(f"unknown ordinal generator {a.generator}") from None


def ord_lt(b: Ordinal, a: Ordinal, depth: int = SEARCH_DEPTH) -> bool:
    """``b < a`` along the constructed path of ``a``; limits are searched ``depth`` terms deep."""
    if isinstance(a, Zero):
        return False
    if isinstance(a, Succ):
        return b == a.of or ord_lt(b, a.of, depth)
    return any(b == g or ord_lt(b, g, depth) for g in (fundamental(a, m) for m in range(depth)))


def ord_le(b: Ordinal, a: Ordinal) -> bool:
    return b == a or ord_lt(b, a)


def ord_max(a: Ordinal, b: Ordinal) -> Ordinal:
    return b if ord_lt(a, b) else a


def ordinal_to_json(a: Ordinal):
    n, base = _split_finite(a)
    if isinstance(base, Zero):
        return n
    return {"lim": base.generator, "plus": n}


def ordinal_from_json(data) -> Ordinal:
    if isinstance(data, int):
        return finite(data)
    return finite(data.get("plus", 0), Lim(data["lim"]))


# ---------------------------------------------------------------------------
# codes


@dataclass(frozen=True)
class Leaf:
    formula: Formula

    def __post_init__(self):
        if not is_quantifier_free(self.formula):
            raise InfinitaryError("leaves must be quantifier-free")


@dataclass(frozen=True)
class EnumeratorRef:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Node:
    kind: str  # "Sigma" or "Pi"
    notation: Ordinal
    vars: tuple[str, ...]
    enum: EnumeratorRef

    def __post_init__(self):
        if isinstance(self.notation, int):
            object.__setattr__(self, "notation", finite(self.notation))
        if self.kind not in ("Sigma", "Pi"):
            raise InfinitaryError(f"unknown node kind {self.kind!r}")
        if isinstance(self.notation, Zero):
            raise NotationError("a node needs a positive notation")
        if len(set(self.vars)) != len(self.vars):
            raise InfinitaryError("repeated node variables")


InfCode = Leaf | Node

DUAL = {"Sigma": "Pi", "Pi": "Sigma"}


def notation_of(code: InfCode) -> Ordinal:
    return ZERO_ORD if isinstance(code, Leaf) else code.notation


def code_free_vars(code: InfCode) -> set[str]:
    return free_vars(code.formula) if isinstance(code, Leaf) else set(code.vars)


def item_problem(parent: Node, item) -> str | None:
    """Why ``item`` fails the membership condition for ``parent``, or ``None``."""
    try:
        code, zs = item
    except (TypeError, ValueError):
        return "items are (code, variables) pairs"
    if not isinstance(code, (Leaf, Node)):
        return "item is not a code"
    zs = tuple(zs)
    if len(set(zs)) != len(zs) or set(zs) & set(parent.vars):
        return "item variables must be fresh and distinct"
    if isinstance(code, Node) and code.kind != DUAL[parent.kind]:
        return f"{parent.kind} node items must be {DUAL[parent.kind]} codes"
    if not ord_lt(notation_of(code), parent.notation):
        return f"item notation {notation_of(code)} is not below {parent.notation}"
    if not code_free_vars(code) <= set(parent.vars) | set(zs):
        return "item has variables outside the node and item variables"
    return None


# ---------------------------------------------------------------------------
# enumerators


class _End(Exception):
    pass


class _Stream:
    """Replayable cache over a generator; positions past the end raise ``_End``."""

    def __init__(self, it: Iterator):
        self._it = it
        self._seen: list = []
        self._done = False

    def get(self, i: int):
        while len(self._seen) <= i and not self._done:
            try:
                self._seen.append(next(self._it))
            except StopIteration:
                self._done = True
        if i < len(self._seen):
            return self._seen[i]
        raise _End

    def length_within(self, T: int) -> int | None:
        """Stream length if it ends at or before position ``T``."""
        try:
            self.get(T + 1)
        except _End:
            return len(self._seen)
        return None


class EnumeratorRegistry:
    """Write-once map from enumerator names to deterministic item generators."""

    BUILTIN = ("list", "avg", "partial-sums", "half", "neg", "encode")

    def __init__(self):
        self._gens: dict[str, Callable[..., Iterable]] = {}
        self._cache: dict[EnumeratorRef, _Stream] = {}

    def register(self, name: str, fn: Callable[..., Iterable]) -> None:
        if name in self._gens or name in self.BUILTIN:
            raise InfinitaryError(f"enumerator {name} is already registered")
        self._gens[name] = fn

    def __contains__(self, name: str) -> bool:
        return name in self._gens or name in self.BUILTIN

    def stream(self, ref: EnumeratorRef) -> _Stream:
        s = self._cache.get(ref)
        if s is None:
            s = self._cache[ref] = _Stream(iter(self._generate(ref)))
        return s

    def item(self, ref: EnumeratorRef, i: int):
        return self.stream(ref).get(i)

    def _generate(self, ref: EnumeratorRef) -> Iterable:
        name, args = ref.name, ref.args
        if name == "list":
            return iter(args)
        if name == "half":
            return ((half_code(c, self), zs) for c, zs in self._raw(args[0]))
        if name == "neg":
            return ((neg_code(c, self), zs) for c, zs in self._raw(args[0]))
        if name == "avg":
            return self._avg_items(args[0], args[1])
        if name == "partial-sums":
            return self._partial_sums(*args)
        if name == "encode":
            return _encode_items(*args)
        try:
            fn = self._gens[name]
        except KeyError:
            raise InfinitaryError(f"unregistered enumerator {name}") from None
        return fn(*args)

    def _raw(self, ref):
        i = 0
        while True:
            try:
                yield self.item(ref, i)
            except _End:
                return
            i += 1

    def _avg_items(self, i, j):
        # Cantor order over pairs of stream positions; stops once both streams are spent
        sa, sb = self.stream(i.enum), self.stream(j.enum)
        for t in itertools.count():
            w = (math.isqrt(8 * t + 1) - 1) // 2
            la, lb = sa.length_within(w), sb.length_within(w)
            if la == 0 or lb == 0:
                return
            if la is not None and lb is not None and w > la + lb - 2:
                return
            l = t - w * (w + 1) // 2
            m = w - l
            try:
                a, b = sa.get(m), sb.get(l)
            except _End:
                yield None
                continue
            if a is None or b is None or item_problem(i, a) or item_problem(j, b):
                yield None
                continue
            yield _avg_item(a, b, i, j, self)

    def _partial_sums(self, ref, notation_json):
        # S_K = avg(psi_0, avg(psi_1, ... half(psi_K))); node sums are wrapped in a
        # one-item dual node so every item sits strictly below the outer notation
        operands = self.stream(ref)
        for K in itertools.count():
            try:
                terms = [_operand(operands.get(n)) for n in range(K + 1)]
            except _End:
                return
            acc = half_code(terms[-1], self)
            for psi in reversed(terms[:-1]):
                acc = avg_code(psi, acc, self)
            if isinstance(acc, Leaf):
                yield (acc, ())
            else:
                yield (wrap_code(acc, DUAL[acc.kind]), ())

    def tail(self, ref: EnumeratorRef, T: int) -> Dyadic | None:
        """Bound on how far the node value can move past item ``T`` (monotone streams only)."""
        if ref.name == "partial-sums":
            return pow2(-(T + 1))
        if ref.name == "half":
            inner = self.tail(ref.args[0], T)
            return None if inner is None else inner.scale(-1)
        if ref.name == "neg":
            return self.tail(ref.args[0], T)
        return None


def _operand(item):
    code = item[0] if isinstance(item, tuple) else item
    if isinstance(code, Node) and (code.kind != "Pi" or code.vars):
        raise InfinitaryError("inner products take Pi sentences")
    if not isinstance(code, (Leaf, Node)) or code_free_vars(code):
        raise InfinitaryError("inner products take Pi sentences")
    return code


DEFAULT_REGISTRY = EnumeratorRegistry()


# ---------------------------------------------------------------------------
# constructors


def _make_code(kind, a, xs, items):
    node = Node(kind, a, tuple(xs), EnumeratorRef("list", tuple((c, tuple(zs)) for c, zs in items)))
    for item in node.enum.args:
        problem = item_problem(node, item)
        if problem:
            raise NotationError(problem)
    return node


def make_pi_code(a: Ordinal, xs: Iterable[str], items: Iterable) -> Node:
    """Pi node (a supremum) over an explicit finite list of ``(code, vars)`` items."""
    return _make_code("Pi", a, xs, items)


def make_sigma_code(a: Ordinal, xs: Iterable[str], items: Iterable) -> Node:
    """Sigma node (an infimum) over an explicit finite list of ``(code, vars)`` items."""
    return _make_code("Sigma", a, xs, items)


def stream_code(kind: str, a: Ordinal, xs: Iterable[str], name: str, *args) -> Node:
    """Node over a registered enumerator; invalid items are skipped at evaluation."""
    return Node(kind, a, tuple(xs), EnumeratorRef(name, tuple(args)))


def leaf(text_or_formula, sig=None) -> Leaf:
    if isinstance(text_or_formula, str):
        if sig is None:
            raise InfinitaryError("parsing a leaf needs a signature")
        return Leaf(parse_formula(text_or_formula, sig))
    return Leaf(text_or_formula)


def close_code(code: InfCode, kind: str, xs: Iterable[str]) -> Node:
    """``sup_x code`` (``kind="Pi"``) or ``inf_x code`` (``kind="Sigma"``) as a new node."""
    xs = tuple(xs)
    rest = tuple(v for v in sorted(code_free_vars(code)) if v not in xs)
    inner = code if isinstance(code, Leaf) or code.kind == DUAL[kind] else wrap_code(code, DUAL[kind])
    return Node(kind, Succ(notation_of(inner)), rest, EnumeratorRef("list", ((inner, xs),)))


def wrap_code(code: InfCode, kind: str) -> Node:
    """One-item node of the given kind with the same value as ``code``."""
    if isinstance(code, Node) and code.kind == kind:
        inner = wrap_code(code, DUAL[kind])
        return wrap_code(inner, kind)
    return Node(kind, Succ(notation_of(code)), tuple(sorted(code_free_vars(code))),
                EnumeratorRef("list", ((code, ()),)))


def half_code(code: InfCode, registry: EnumeratorRegistry | None = None) -> InfCode:
    if isinstance(code, Leaf):
        return Leaf(Half(code.formula))
    return Node(code.kind, code.notation, code.vars, EnumeratorRef("half", (code.enum,)))


def neg_code(code: InfCode, registry: EnumeratorRegistry | None = None) -> InfCode:
    """``1 - code``; a Sigma node becomes a Pi node and vice versa."""
    if isinstance(code, Leaf):
        return Leaf(Neg(code.formula))
    return Node(DUAL[code.kind], code.notation, code.vars, EnumeratorRef("neg", (code.enum,)))


def _fresh(name, taken):
    while name in taken:
        name += "_r"
    return name


def rename_code(code: InfCode, mapping: dict[str, str]) -> InfCode:
    """Rename free variables of a code; nodes must carry explicit item lists."""
    if isinstance(code, Leaf):
        f = code.formula
        for old, new in mapping.items():
            if old in free_vars(f):
                f = substitute(f, old, Var(new))
        return Leaf(f)
    relevant = {o: n for o, n in mapping.items() if o in code.vars}
    if not relevant:
        return code
    if code.enum.name != "list":
        raise InfinitaryError("renaming is only supported for explicit item lists")
    items = tuple((rename_code(c, {o: n for o, n in relevant.items() if o not in zs}), zs)
                  for c, zs in code.enum.args)
    return Node(code.kind, code.notation, tuple(relevant.get(v, v) for v in code.vars),
                EnumeratorRef("list", items))


def _rename_apart(c, zs, avoid):
    mapping = {}
    for z in zs:
        if z in avoid:
            mapping[z] = _fresh(z, avoid | set(zs) | set(mapping.values()))
    if not mapping:
        return c, zs
    return rename_code(c, mapping), tuple(mapping.get(z, z) for z in zs)


def _avg_item(a, b, i, j, registry):
    (ca, za), (cb, zb) = a, b
    ca, za = _rename_apart(ca, tuple(za), set(j.vars))
    cb, zb = _rename_apart(cb, tuple(zb), set(i.vars) | set(za))
    kind = DUAL[i.kind]
    return avg_code(_as_kind(ca, kind), _as_kind(cb, kind), registry), za + zb


def _as_kind(code, kind):
    return code if isinstance(code, Leaf) or code.kind == kind else wrap_code(code, kind)


def avg_code(i: InfCode, j: InfCode, registry: EnumeratorRegistry | None = None) -> InfCode:
    """Code whose value is ``(i + j) / 2``.

    Leaves combine through the max/truncated-subtraction form of the mean.
    Nodes of one kind combine item by item, since the mean is increasing and
    continuous in each argument; a leaf facing a node is first wrapped as a
    one-item node of that kind.
    """
    if isinstance(i, Leaf) and isinstance(j, Leaf):
        return Leaf(f_avg(i.formula, j.formula))
    if isinstance(i, Node) and isinstance(j, Node) and i.kind != j.kind:
        raise InfinitaryError(f"cannot average a {i.kind} code with a {j.kind} code")
    kind = i.kind if isinstance(i, Node) else j.kind
    if isinstance(i, Leaf):
        i = wrap_code(i, kind)
    if isinstance(j, Leaf):
        j = wrap_code(j, kind)
    xs = tuple(sorted(set(i.vars) | set(j.vars)))
    return Node(kind, ord_max(i.notation, j.notation), xs, EnumeratorRef("avg", (i, j)))


def inner_product_code(codes: EnumeratorRef | Iterable[InfCode], notation: Ordinal | None = None) -> InfCode:
    """Pi code for ``sum_n 2^-(n+1) psi_n`` over a stream of Pi codes.

    Item ``K`` is the partial sum through ``psi_K``; the supremum of the
    partial sums is the series value, and truncating after item ``T``
    leaves at most ``2^-(T+1)``.  ``notation`` bounds the operands'
    notations; with node operands the result sits two steps above it.
    """
    if not isinstance(codes, EnumeratorRef):
        codes = EnumeratorRef("list", tuple((c, ()) for c in codes))
    if notation is None:
        if codes.name != "list":
            raise InfinitaryError("an operand notation bound is needed for unbounded streams")
        notation = ZERO_ORD
        for c, _ in codes.args:
            if isinstance(c, Node) and c.kind != "Pi":
                raise InfinitaryError("inner products take Pi codes")
            notation = ord_max(notation, notation_of(c))
    outer = Succ(ZERO_ORD) if isinstance(notation, Zero) else Succ(Succ(notation))
    return Node("Pi", outer, (), EnumeratorRef("partial-sums", (codes, ordinal_to_json(notation))))


# ---------------------------------------------------------------------------
# evaluation


def _items_upto(node: Node, T: int, registry: EnumeratorRegistry):
    """Valid items at positions ``0..T`` and whether the stream ended by then."""
    stream = registry.stream(node.enum)
    out = []
    for pos in range(T + 1):
        try:
            item = stream.get(pos)
        except _End:
            return out, True
        if item is not None and item_problem(node, item) is None:
            out.append((pos, item[0], tuple(item[1])))
    return out, stream.length_within(T) is not None


def eval_inf(M: Presentation, code: InfCode, T: int, budget: Budget | None = None,
             registry: EnumeratorRegistry | None = None, env: dict | None = None) -> Enclosure:
    """Enclosure of the value of a code using stream positions ``0..T``.

    A Pi node raises its lower end with every item seen; its upper end drops
    below 1 only when the stream is known to have ended (and no item
    quantifies variables) or when the stream carries a tail bound.  Sigma
    nodes are dual.  Item variables range over the first ``budget.points``
    rational points.  Enclosures for larger ``T`` lie inside those for
    smaller ``T``.
    """
    budget = budget or Budget(points=4)
    registry = registry or DEFAULT_REGISTRY
    env = env or {}
    if T < 0:
        raise InfinitaryError("truncation must be non-negative")
    missing = code_free_vars(code) - set(env)
    if missing:
        raise InfinitaryError(f"free variables {sorted(missing)}")
    if isinstance(code, Leaf):
        v = eval_qf_env(M, code.formula, env, budget.precision)
        if M.exact:
            return Enclosure(v, v)
        eps = pow2(-budget.precision)
        return Enclosure(max(ZERO, v - eps), min(ONE, v + eps))
    items, ended = _items_upto(code, T, registry)
    pts = [M.rational_point(i) for i in range(budget.points)]
    is_pi = code.kind == "Pi"
    per_item = []
    for pos, child, zs in items:
        encs = [eval_inf(M, child, T, budget, registry, {**env, **dict(zip(zs, choice))})
                for choice in itertools.product(pts, repeat=len(zs))]
        if is_pi:
            per_item.append((pos, zs, Enclosure(max(e.lo for e in encs), max(e.hi for e in encs))))
        else:
            per_item.append((pos, zs, Enclosure(min(e.lo for e in encs), min(e.hi for e in encs))))
    closed_form = ended and all(not zs for _, zs, _ in per_item)
    if is_pi:
        lo = max((e.lo for _, _, e in per_item), default=ZERO)
        hi = ONE
        if closed_form:
            hi = max((e.hi for _, _, e in per_item), default=ZERO)
        for pos, zs, e in per_item:
            t = registry.tail(code.enum, pos)
            if t is not None and not zs:
                hi = min(hi, e.hi + t)
        hi = min(hi, ONE)
    else:
        hi = min((e.hi for _, _, e in per_item), default=ONE)
        lo = ZERO
        if closed_form:
            lo = min((e.lo for _, _, e in per_item), default=ONE)
        for pos, zs, e in per_item:
            t = registry.tail(code.enum, pos)
            if t is not None and not zs:
                lo = max(lo, e.lo - t)
        lo = max(lo, ZERO)
    return Enclosure(lo, hi) if lo <= hi else intersect(Enclosure(lo, lo), Enclosure(hi, hi))


class _CodeEngine(ThresholdEngine):
    def __init__(self, M, budget, T, registry):
        super().__init__(M, budget)
        self.T = T
        self.registry = registry
        self._pts = [M.rational_point(i) for i in range(budget.points)]
        self._labels = [_term_label(p) for p in self._pts]

    def expand(self, code, env):
        if isinstance(code, Leaf):
            return None
        items, ended = _items_upto(code, self.T, self.registry)
        cands = []
        for pos, child, zs in items:
            for choice in itertools.product(range(len(self._pts)), repeat=len(zs)):
                label = {"item": pos, "points": {z: self._labels[c] for z, c in zip(zs, choice)}}
                cands.append((label, child, {**env, **{z: self._pts[c] for z, c in zip(zs, choice)}}))
        exhaustive = ended and all(not zs for _, _, zs in items)
        return ("sup" if code.kind == "Pi" else "inf"), cands, exhaustive

    def leaf(self, code, env, q, mode):
        return super().leaf(code.formula, env, q, mode)

    def tail_of(self, code, label):
        if label["points"]:
            return None
        return self.registry.tail(code.enum, label["item"])

    def exact(self, code, env):
        enc = eval_inf(self.M, code, self.T, self.budget, self.registry, env)
        if not enc.pinned:
            raise InfinitaryError("exhaustive record does not pin the value")
        return enc.lo

    def recheck(self, code, env, q, mode, status, w):
        if isinstance(code, Leaf):
            want = status == VERIFIED
            v = eval_qf_env(self.M, code.formula, env, 0)
            return (v <= q if mode == "closed" else v < q) == want
        return super().recheck(code, env, q, mode, status, w)


def _term_label(p):
    from .logic import render_term
    return render_term(p)


def cut_check(M: Presentation, code: InfCode, q: Dyadic, relation: str, T: int,
              budget: Budget | None = None, registry: EnumeratorRegistry | None = None) -> Verdict:
    """Semi-decide ``q`` in the right Dedekind cut of the value.

    ``relation=">"`` asks ``q > value`` and ``">="`` asks ``q >= value``.  The
    search follows the same four sup/inf patterns as the finitary diagrams,
    over stream items up to position ``T`` and item variables over rational
    points.
    """
    if relation not in (">", ">="):
        raise InfinitaryError(f"relation must be '>' or '>=', got {relation!r}")
    budget = budget or Budget(points=4)
    registry = registry or DEFAULT_REGISTRY
    if code_free_vars(code):
        raise InfinitaryError(f"free variables {sorted(code_free_vars(code))}")
    mode = "open" if relation == ">" else "closed"
    engine = _CodeEngine(M, budget, T, registry)
    status, witness = engine.run(code, q, mode)
    return Verdict(status, witness, {**budget.to_json(), "used": engine.used, "truncation": T}, None)


def recheck_cut(M: Presentation, code: InfCode, q: Dyadic, relation: str, verdict: Verdict, T: int,
                budget: Budget | None = None, registry: EnumeratorRegistry | None = None) -> bool:
    if verdict.status == UNKNOWN:
        return True
    engine = _CodeEngine(M, budget or Budget(points=4), T, registry or DEFAULT_REGISTRY)
    mode = "open" if relation == ">" else "closed"
    return engine.recheck(code, {}, q, mode, verdict.status, verdict.witness)


# ---------------------------------------------------------------------------
# set encodings


ZERO_C = Const("q(0)")


@dataclass(frozen=True)
class Encoding:
    """A sequence of codes over an interval structure, with its membership oracle."""

    kind: str
    level: int
    relation: RelationTable
    structure: IntervalStructure

    def code(self, n: int) -> InfCode:
        if self.level == 0:
            hit = self.relation.holds(n)
            if self.kind == "Sigma":
                other = ZERO if hit else HALF
            else:
                other = HALF if hit else ONE
            return Leaf(Dist(ZERO_C, dyadic_const(other)))
        N = self.level - 1
        width = self.relation.bound + 2
        sigma = Node("Sigma", finite(N + 1), (), EnumeratorRef("encode", (N, n, (), width)))
        return sigma if self.kind == "Sigma" else neg_code(sigma)

    def member(self, n: int) -> bool:
        if self.level == 0:
            return self.relation.holds(n)
        R = self.relation
        if self.kind == "Sigma":
            return exists_member(R, n, R.bound + 1)
        return forall_member(R, n, R.bound + 1)

    def expected(self, n: int) -> Dyadic:
        chi = ONE if self.member(n) else ZERO
        return HALF * (ONE - chi) if self.kind == "Sigma" else ONE - HALF * chi


def _encode_items(N, n, prefix, width):
    depth = len(prefix) + 1
    for x in range(width):
        xs = prefix + (x,)
        if depth == N + 1:
            name = "c[" + ",".join(str(v) for v in (N, n, *xs)) + "]"
            yield (Leaf(Dist(Const(name), ZERO_C)), ())
        else:
            # position depth+1 is an inf (Sigma) when depth is even
            kind = "Sigma" if depth % 2 == 0 else "Pi"
            yield (Node(kind, finite(N + 1 - depth), (), EnumeratorRef("encode", (N, n, xs, width))), ())


def _check_level(level):
    if not isinstance(level, int):
        raise NotationError("only finite levels are supported; limit levels are an extension point")
    if level < 0:
        raise NotationError("level must be non-negative")


def encode_set_sigma(R: RelationTable, level: int) -> Encoding:
    """Sigma codes with value ``(1 - chi_S(n)) / 2``.

    Level 0 reads ``S`` directly from a unary table; level ``N + 1`` takes
    ``S`` to be the exists-set of ``R`` (arity ``N + 2``, parameter last).
    """
    _check_level(level)
    if level == 0:
        if R.arity != 1:
            raise InfinitaryError("level 0 encodes a unary table")
        return Encoding("Sigma", 0, R, IntervalStructure())
    N = level - 1
    if R.arity != N + 2:
        raise InfinitaryError(f"level {level} needs a relation of arity {N + 2}")
    return Encoding("Sigma", level, R, IntervalStructure(RelationFamily({2 * N + 1: R})))


def encode_set_pi(R: RelationTable, level: int) -> Encoding:
    """Pi codes with value ``1 - chi_S(n) / 2``.

    Level ``N + 1`` takes ``S`` to be the forall-set of ``R``; the codes are
    negations of the Sigma codes for the complement relation.
    """
    _check_level(level)
    if level == 0:
        if R.arity != 1:
            raise InfinitaryError("level 0 encodes a unary table")
        return Encoding("Pi", 0, R, IntervalStructure())
    N = level - 1
    if R.arity != N + 2:
        raise InfinitaryError(f"level {level} needs a relation of arity {N + 2}")
    return Encoding("Pi", level, R, IntervalStructure(RelationFamily({2 * N + 1: R.complement()})))


# ---------------------------------------------------------------------------
# the sequence p_n


class CESequence:
    """``p_n = 1/2 - 2^-s`` when ``n = c_s``, else ``1/2``, for a one-to-one enumeration ``c``.

    ``c_0`` gets ``1/2 - 1 = -1/2``, exactly as the defining formula says.
    """

    def __init__(self, enumeration: Callable[[int], int] | Iterable[int], guard: int = 0):
        if callable(enumeration):
            self._it = (enumeration(s) for s in itertools.count())
        else:
            self._it = iter(enumeration)
        self.guard = guard
        self._seen: list[int] = []
        self._index: dict[int, int] = {}
        self._done = False

    def _run(self, steps: int):
        while len(self._seen) < steps and not self._done:
            try:
                c = next(self._it)
            except StopIteration:
                self._done = True
                break
            if c in self._index:
                raise InfinitaryError(f"enumeration repeats {c} (stages {self._index[c]} and {len(self._seen)})")
            self._index[c] = len(self._seen)
            self._seen.append(c)

    def approx(self, n: int, k: int) -> Dyadic:
        """Within ``2^-k`` of ``p_n``: a late stage ``s >= k`` moves the value by at most ``2^-k``."""
        self._run(max(k, self.guard))
        s = self._index.get(n)
        if s is not None and s < max(k, self.guard):
            return HALF - pow2(-s)
        return HALF


def ce_real_sequence(enumeration, guard: int = 0) -> CESequence:
    return CESequence(enumeration, guard)


# ---------------------------------------------------------------------------
# JSON


def code_to_json(code: InfCode) -> dict:
    if isinstance(code, Leaf):
        return {"leaf": render(code.formula)}
    return {"class": code.kind, "notation": ordinal_to_json(code.notation), "vars": list(code.vars),
            "enum": _ref_to_json(code.enum)}


def _ref_to_json(ref: EnumeratorRef) -> dict:
    if ref.name == "list":
        return {"name": "list", "items": [{"code": code_to_json(c), "vars": list(zs)} for c, zs in ref.args]}
    if ref.name in ("half", "neg"):
        return {"name": ref.name, "args": [_ref_to_json(ref.args[0])]}
    if ref.name == "avg":
        return {"name": "avg", "args": [code_to_json(ref.args[0]), code_to_json(ref.args[1])]}
    if ref.name == "partial-sums":
        return {"name": "partial-sums", "args": [_ref_to_json(ref.args[0]), ref.args[1]]}
    if ref.name == "encode":
        N, n, xs, width = ref.args
        return {"name": "encode", "args": [N, n, list(xs), width]}
    return {"name": ref.name, "args": list(ref.args)}


def code_from_json(data: dict, sig) -> InfCode:
    if "leaf" in data:
        return Leaf(parse_formula(data["leaf"], sig))
    return Node(data["class"], ordinal_from_json(data["notation"]), tuple(data.get("vars", ())),
                _ref_from_json(data["enum"], sig))


def _ref_from_json(data: dict, sig) -> EnumeratorRef:
    name = data["name"]
    if name == "list":
        return EnumeratorRef("list", tuple((code_from_json(it["code"], sig), tuple(it.get("vars", ())))
                                           for it in data["items"]))
    args = data.get("args", [])
    if name in ("half", "neg"):
        return EnumeratorRef(name, (_ref_from_json(args[0], sig),))
    if name == "avg":
        return EnumeratorRef(name, (code_from_json(args[0], sig), code_from_json(args[1], sig)))
    if name == "partial-sums":
        return EnumeratorRef(name, (_ref_from_json(args[0], sig), args[1]))
    if name == "encode":
        return EnumeratorRef(name, (args[0], args[1], tuple(args[2]), args[3]))
    return EnumeratorRef(name, tuple(args))
