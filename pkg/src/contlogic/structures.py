"""Computable presentations and the two built-in structures.

A :class:`Presentation` names its rational points by closed terms and
evaluates predicates and the metric on them to any requested precision.  The
discrete structure encodes a relation family through series values; the
interval structure is ``[0, 1]`` with a constant for every dyadic rational.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Mapping

from .hierarchy import ArityError, RelationTable, exists_series, forall_series
from .logic import (Const, Dist, Formula, Func, Half, Inf, Neg, Pred, Signature, Sup, Symbol,
                    TSub, Var, atoms, constant_modulus, constants_of, dyadic_const, free_vars,
                    is_quantifier_free, split_prenex)
from .numerics import HALF, ONE, ZERO, Dyadic, Enclosure, PrecisionError, clip_unit, \
    exponent_cap, intersect, pow2


class StructureError(ValueError):
    pass


class Presentation:
    """Contract for a computably presented metric structure.

    Subclasses provide the signature, an enumeration of rational points and
    evaluation of predicates and the metric on rational points with absolute
    error at most ``2^-k``.  ``exact`` means that error is always zero;
    ``compact`` enables grid-based two-sided quantifier evaluation.
    """

    exact = False
    compact = False

    @property
    def signature(self) -> Signature:
        raise NotImplementedError

    def rational_point(self, n: int) -> Const | Func:
        raise NotImplementedError

    def eval_predicate(self, name: str, points: tuple, k: int) -> Dyadic:
        raise NotImplementedError

    def metric_eval(self, p1, p2, k: int) -> Dyadic:
        raise NotImplementedError

    def scan_size(self, phi: Formula) -> int | None:
        """Number of leading rational points that decide every quantifier in ``phi``.

        ``None`` unless the structure can certify that quantifying over that
        finite set of points gives the exact value.
        """
        return None


def enumerate_rational_points(M: Presentation, n: int):
    if n < 0:
        raise ValueError("point index must be non-negative")
    return M.rational_point(n)


# ---------------------------------------------------------------------------
# quantifier-free evaluation


def _substitute_env(t, env):
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise StructureError(f"free variable {t.name}") from None
    if isinstance(t, Func):
        return Func(t.name, tuple(_substitute_env(a, env) for a in t.args))
    return t


def _atom_count(phi: Formula) -> int:
    memo: dict[int, int] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, (Dist, Pred)):
            out = 1
        elif isinstance(f, TSub):
            out = go(f.left) + go(f.right)
        else:
            out = go(f.body)
        memo[key] = out
        return out

    return go(phi)


def eval_qf_env(M: Presentation, phi: Formula, env: Mapping, k: int) -> Dyadic:
    """Value of a quantifier-free formula under an assignment of rational points."""
    if k > exponent_cap():
        raise PrecisionError(f"precision {k} exceeds the exponent cap")
    if M.exact:
        inner_k = k
    else:
        # tsub adds errors, neg keeps them, half halves them: atoms * 2^-k' <= 2^-k
        inner_k = k + max(0, math.ceil(math.log2(max(1, _atom_count(phi)))))
    memo: dict[int, Dyadic] = {}

    def go(f):
        key = id(f)
        out = memo.get(key)
        if out is not None:
            return out
        if isinstance(f, Dist):
            out = M.metric_eval(_substitute_env(f.left, env), _substitute_env(f.right, env), inner_k)
        elif isinstance(f, Pred):
            out = M.eval_predicate(f.name, tuple(_substitute_env(a, env) for a in f.args), inner_k)
        elif isinstance(f, Neg):
            out = ONE - go(f.body)
        elif isinstance(f, Half):
            out = go(f.body).scale(-1)
        elif isinstance(f, TSub):
            a, b = go(f.left), go(f.right)
            out = a - b if b < a else ZERO
        else:
            raise StructureError("quantifier inside a quantifier-free evaluation")
        memo[key] = out
        return out

    value = go(phi)
    if not M.exact:
        value = min(max(value, ZERO), ONE)
    return value


def eval_qf(M: Presentation, phi: Formula, k: int = 0) -> Dyadic:
    """``phi^M`` to within ``2^-k`` (exactly when ``M.exact``)."""
    if not is_quantifier_free(phi):
        raise StructureError("eval_qf needs a quantifier-free sentence")
    if free_vars(phi):
        raise StructureError(f"free variables {sorted(free_vars(phi))}")
    return eval_qf_env(M, phi, {}, k)


# ---------------------------------------------------------------------------
# relation families


class RelationFamily:
    """Finite stand-in for the family ``(R_N)``: level ``N`` has arity ``N // 2 + 2``."""

    def __init__(self, levels: Mapping[int, RelationTable]):
        self.levels = dict(levels)
        for N, R in self.levels.items():
            if R.arity != N // 2 + 2:
                raise ArityError(f"level {N} needs arity {N // 2 + 2}, got {R.arity}")

    def level(self, N: int) -> RelationTable:
        try:
            return self.levels[N]
        except KeyError:
            raise StructureError(f"relation family has no level {N}") from None

    def __contains__(self, N: int) -> bool:
        return N in self.levels

    @property
    def max_bound(self) -> int:
        return max((R.bound for R in self.levels.values()), default=0)

    def to_json(self) -> dict:
        return {"levels": {str(N): R.to_json() for N, R in sorted(self.levels.items())}}

    @classmethod
    def from_json(cls, data: dict) -> RelationFamily:
        return cls({int(N): RelationTable.from_json(t) for N, t in data["levels"].items()})

    @classmethod
    def load(cls, path) -> RelationFamily:
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def sample_family(max_level: int = 5, bound: int = 3) -> RelationFamily:
    """Divisibility-pattern relations used as the shipped sample family.

    Level ``N`` holds at ``(x_0, ..., x_M, n)`` when ``n + 1`` divides a
    weighted coordinate sum (shifted by ``N``), or when ``n`` is a multiple
    of 3 and the first coordinate is even.  Tuples beyond the bound take
    ``true`` on even levels and ``false`` on odd ones.
    """
    levels = {}
    for N in range(max_level + 1):
        arity = N // 2 + 2

        def pred(*t, N=N):
            *xs, n = t
            s = N + sum((i + 1) * x for i, x in enumerate(xs))
            return s % (n + 1) == 0 or (n % 3 == 0 and xs[0] % 2 == 0)

        levels[N] = RelationTable.from_predicate(arity, bound, pred, "true" if N % 2 == 0 else "false")
    return RelationFamily(levels)


# ---------------------------------------------------------------------------
# the discrete structure

_INDEX = re.compile(r"([A-Za-z_]+)\[(\d+(?:,\d+)*)\]$")


def _indexed(name: str, head: str) -> tuple[int, ...] | None:
    m = _INDEX.match(name)
    if not m or m.group(1) != head:
        return None
    return tuple(int(v) for v in m.group(2).split(","))


@dataclass(frozen=True)
class _Nat:
    value: int


@dataclass(frozen=True)
class _Spoke:
    index: int
    radius: Dyadic


class LowerBoundStructure(Presentation):
    """Naturals under the discrete metric, with series-valued constants and predicates.

    Symbols: ``zero`` (the point 0), ``pt[m]`` (the m-th distinguished point,
    which is m), ``c[n]`` and predicates ``P[a,n]``.  ``c[2n]`` sits at
    distance ``f_0(n)`` from ``zero`` and ``c[2n+1]`` at distance ``f_1(n)``;
    ``P[2N,n]`` and ``P[2N+1,n]`` are ``N``-ary and evaluate ``f_2N`` and
    ``f_2N+1`` at ``(x_1, ..., x_N, n)``, where ``f_a`` is the series encoding
    of level ``a`` of the family.

    Each ``c[n]`` is placed on its own spoke of a hedgehog centred at ``zero``
    (truncated at 1), which is a genuine metric extending the discrete one on
    the naturals.  Quantifiers range over the naturals, and predicates read a
    spoke point as ``zero``.  Every predicate has the constant modulus 1.
    """

    exact = True

    def __init__(self, family: RelationFamily):
        self.family = family
        self._series: dict[int, object] = {}
        self._signature = Signature(
            constants=("zero",),
            predicate_family=self._predicate_symbol,
            constant_family=lambda name: _indexed(name, "c") is not None and len(_indexed(name, "c")) == 1
            or _indexed(name, "pt") is not None and len(_indexed(name, "pt")) == 1,
        )

    @property
    def signature(self) -> Signature:
        return self._signature

    def _predicate_symbol(self, name: str) -> Symbol | None:
        idx = _indexed(name, "P")
        if idx is None or len(idx) != 2:
            return None
        return Symbol(name, idx[0] // 2, constant_modulus(1))

    def series(self, a: int):
        """``f_a`` as a function of ``(x_1, ..., x_N, n)``."""
        f = self._series.get(a)
        if f is None:
            R = self.family.level(a)
            f = forall_series(R) if a % 2 == 0 else exists_series(R)
            self._series[a] = f
        return f

    def constant_value(self, n: int) -> Dyadic:
        """Distance from ``c[n]`` to ``zero``."""
        return self.series(0)(n // 2) if n % 2 == 0 else self.series(1)((n - 1) // 2)

    def rational_point(self, n: int) -> Const:
        return Const(f"pt[{n}]")

    def _interpret(self, t):
        if isinstance(t, Const):
            if t.name == "zero":
                return _Nat(0)
            idx = _indexed(t.name, "pt")
            if idx is not None and len(idx) == 1:
                return _Nat(idx[0])
            idx = _indexed(t.name, "c")
            if idx is not None and len(idx) == 1:
                radius = self.constant_value(idx[0])
                return _Nat(0) if radius == ZERO else _Spoke(idx[0], radius)
        raise StructureError(f"uninterpreted term {t}")

    def metric_eval(self, p1, p2, k: int = 0) -> Dyadic:
        a, b = self._interpret(p1), self._interpret(p2)
        if a == b:
            return ZERO
        if isinstance(a, _Nat) and isinstance(b, _Nat):
            return ONE
        ra = a.radius if isinstance(a, _Spoke) else (ZERO if a.value == 0 else ONE)
        rb = b.radius if isinstance(b, _Spoke) else (ZERO if b.value == 0 else ONE)
        return min(ONE, ra + rb)

    def eval_predicate(self, name: str, points: tuple, k: int = 0) -> Dyadic:
        sym = self._predicate_symbol(name)
        if sym is None:
            raise StructureError(f"uninterpreted predicate {name}")
        if len(points) != sym.arity:
            raise ArityError(f"{name} takes {sym.arity} arguments")
        a, n = _indexed(name, "P")
        args = []
        for p in points:
            v = self._interpret(p)
            args.append(v.value if isinstance(v, _Nat) else 0)
        return self.series(a)(*args, n)

    def scan_size(self, phi: Formula) -> int | None:
        # values saturate past S and the metric cannot tell unnamed naturals
        # apart, so q quantified variables need S + q + 1 points
        S = 0
        for atom in atoms(phi):
            if isinstance(atom, Pred):
                a, _ = _indexed(atom.name, "P")
                S = max(S, self.series(a).saturation)
        for name in constants_of(phi):
            idx = _indexed(name, "pt")
            if idx is not None:
                S = max(S, idx[0])
        prefix, _ = split_prenex(phi)
        return S + len({v for _, v in prefix}) + 1


def make_lower_bound_structure(fam: RelationFamily) -> LowerBoundStructure:
    return LowerBoundStructure(fam)


# ---------------------------------------------------------------------------
# the unit interval


def dyadic_point(n: int) -> Dyadic:
    """The n-th dyadic of [0, 1]: 0, 1, 1/2, 1/4, 3/4, 1/8, 3/8, ..."""
    if n < 0:
        raise ValueError("index must be non-negative")
    if n < 2:
        return Dyadic(n)
    j = n - 1
    e = j.bit_length()
    return Dyadic(2 * (j - (1 << (e - 1))) + 1, e)


def dyadic_index(q: Dyadic) -> int:
    """Inverse of :func:`dyadic_point`."""
    if not q.is_truth_value:
        raise ValueError(f"{q} is outside [0, 1]")
    if q.exponent == 0:
        return q.mantissa
    e = q.exponent
    return (1 << (e - 1)) + (q.mantissa - 1) // 2 + 1


class IntervalStructure(Presentation):
    """``[0, 1]`` with the usual metric and a constant ``q(v)`` for each dyadic ``v``.

    With a relation family, constants ``c[N,n,x_1,...,x_{N+1}]`` take value
    ``(1 - chi_R(x_1, ..., x_{N+1}, n)) / 2`` for ``R`` the family's level
    ``2N + 1``.  ``extra`` adds further named constants with dyadic values.
    """

    exact = True
    compact = True

    def __init__(self, family: RelationFamily | None = None, extra: Mapping[str, Dyadic] | None = None):
        self.family = family
        self.extra = dict(extra or {})
        for name, v in self.extra.items():
            if not v.is_truth_value:
                raise StructureError(f"constant {name} = {v} lies outside [0, 1]")
        self._signature = Signature(constants=tuple(self.extra), constant_family=self._is_constant)

    @property
    def signature(self) -> Signature:
        return self._signature

    def _is_constant(self, name: str) -> bool:
        if name.startswith("q(") and name.endswith(")"):
            try:
                return Dyadic.parse(name[2:-1]).is_truth_value
            except ValueError:
                return False
        idx = _indexed(name, "c")
        if idx is None or self.family is None or len(idx) < 3:
            return False
        N = idx[0]
        return len(idx) == N + 3 and (2 * N + 1) in self.family

    def value_of(self, t) -> Dyadic:
        if isinstance(t, Dyadic):
            return t
        if not isinstance(t, Const):
            raise StructureError(f"uninterpreted term {t}")
        name = t.name
        if name in self.extra:
            return self.extra[name]
        if name.startswith("q(") and name.endswith(")"):
            v = Dyadic.parse(name[2:-1])
            if not v.is_truth_value:
                raise StructureError(f"{name} lies outside [0, 1]")
            return v
        idx = _indexed(name, "c")
        if idx is not None and self.family is not None and len(idx) >= 3:
            N, n, xs = idx[0], idx[1], idx[2:]
            if len(xs) != N + 1:
                raise StructureError(f"{name} needs {N + 1} coordinates")
            R = self.family.level(2 * N + 1)
            return ZERO if R.holds(*xs, n) else HALF
        raise StructureError(f"uninterpreted constant {name}")

    def rational_point(self, n: int) -> Const:
        return dyadic_const(dyadic_point(n))

    def metric_eval(self, p1, p2, k: int = 0) -> Dyadic:
        a, b = self.value_of(p1), self.value_of(p2)
        return a - b if b < a else b - a

    def eval_predicate(self, name, points, k=0):
        raise StructureError(f"uninterpreted predicate {name}")


def make_interval_structure(family: RelationFamily | None = None,
                            extra: Mapping[str, Dyadic] | None = None) -> IntervalStructure:
    return IntervalStructure(family, extra)


# ---------------------------------------------------------------------------
# grid evaluation on a compact structure


def lipschitz_constant(phi: Formula) -> Dyadic:
    """Lipschitz bound of ``phi`` in its variables (sup norm), assuming 1-Lipschitz atoms."""
    memo: dict[int, Dyadic] = {}

    def go(f):
        key = id(f)
        if key in memo:
            return memo[key]
        if isinstance(f, Dist):
            for t in (f.left, f.right):
                if isinstance(t, Func):
                    raise StructureError("function symbols are not supported by compact evaluation")
            vs = {t.name for t in (f.left, f.right) if isinstance(t, Var)}
            same = isinstance(f.left, Var) and isinstance(f.right, Var) and f.left == f.right
            out = ZERO if same else Dyadic(len(vs))
        elif isinstance(f, Pred):
            if free_vars(f):
                raise StructureError(f"predicate atom {f.name} is not known to be 1-Lipschitz")
            out = ZERO
        elif isinstance(f, (Neg, Sup, Inf)):
            out = go(f.body)
        elif isinstance(f, Half):
            out = go(f.body).scale(-1)
        else:
            out = go(f.left) + go(f.right)
        memo[key] = out
        return out

    return go(phi)


def _grid_enclosure(M, phi, j, env, slack):
    if isinstance(phi, (Sup, Inf)):
        size = (1 << j) + 1
        encs = [_grid_enclosure(M, phi.body, j, {**env, phi.var: Dyadic.make(i, j)}, slack)
                for i in range(size)]
        if isinstance(phi, Sup):
            lo = max(e.lo for e in encs)
            hi = max(e.hi for e in encs) + slack
        else:
            lo = min(e.lo for e in encs) - slack
            hi = min(e.hi for e in encs)
        return clip_unit(Enclosure(lo, hi))
    value = eval_qf_env(M, phi, env, 0)
    return Enclosure(value, value)


def compact_eval(M: Presentation, phi: Formula, k: int) -> Enclosure:
    """Two-sided enclosure of a prenex sentence, of width at most ``2^-k``.

    Quantified variables range over the grid ``i / 2^j``; every point of
    ``[0, 1]`` lies within ``2^-(j+1)`` of it, so each quantifier adds at most
    ``L * 2^-(j+1)`` slack for a matrix with Lipschitz constant ``L``.  Grids
    are refined from ``j = 0`` and successive enclosures intersected, so a
    larger ``k`` always yields a sub-enclosure.
    """
    if not M.compact:
        raise StructureError("compact evaluation needs a compact presentation")
    if free_vars(phi):
        raise StructureError(f"free variables {sorted(free_vars(phi))}")
    prefix, matrix = split_prenex(phi)
    L = lipschitz_constant(matrix)
    env_wrap = _DyadicEnv(M)
    target = pow2(-k)
    enc = Enclosure(ZERO, ONE)
    j = 0
    while True:
        slack = (L * pow2(-(j + 1)))
        enc = intersect(enc, _grid_enclosure(env_wrap, phi, j, {}, slack))
        if enc.width <= target or not prefix:
            return enc
        j += 1
        if j > exponent_cap():
            raise PrecisionError("grid refinement exceeded the exponent cap")


class _DyadicEnv(Presentation):
    """View of an interval presentation that accepts raw dyadics as points."""

    exact = True

    def __init__(self, M):
        self.M = M

    def metric_eval(self, p1, p2, k=0):
        return self.M.metric_eval(p1, p2, k)

    def eval_predicate(self, name, points, k=0):
        return self.M.eval_predicate(name, points, k)
