"""Quantifier prefixes over decidable relations and their series encodings.

Relations are finite tables over ``[0, bound]^arity`` plus an extension rule
for tuples outside the box.  With the ``"false"``/``"true"`` rules every
coordinate value above the bound behaves alike, and with ``"clamp"`` a tuple is
read at its coordinatewise clamp to the bound.  Either way, quantifying over
``[0, bound + 1]`` decides a prefix over all of N exactly.

Coordinate convention: for a relation of arity ``N + 2`` the tuple is read as
``(x_0, x_1, ..., x_N, n)``; the parameter ``n`` is last and ``x_0`` is the
coordinate absorbed by the series.  The forall-prefix is ``A x_0 E x_1 ...``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .numerics import HALF, ONE, ZERO, Dyadic, d_max, d_min, pow2

EXTENSIONS = ("false", "true", "clamp")


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class RelationTable:
    """A decidable relation on N^arity given by a finite table."""

    arity: int
    bound: int
    cells: np.ndarray
    extension: str = "false"

    def __post_init__(self):
        if self.arity < 0 or self.bound < 0:
            raise ValueError("arity and bound must be non-negative")
        if self.extension not in EXTENSIONS:
            raise ValueError(f"extension must be one of {EXTENSIONS}")
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (self.bound + 1,) * self.arity:
            raise ValueError(f"cell grid shape {cells.shape} does not match arity/bound")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_tuples(cls, arity: int, bound: int, tuples: Iterable[Sequence[int]],
                    extension: str = "false") -> RelationTable:
        cells = np.zeros((bound + 1,) * arity, dtype=bool)
        for t in tuples:
            t = tuple(int(v) for v in t)
            if len(t) != arity:
                raise ArityError(f"tuple {t} does not have arity {arity}")
            if any(v < 0 or v > bound for v in t):
                raise ValueError(f"tuple {t} lies outside [0, {bound}]^{arity}")
            cells[t] = True
        return cls(arity, bound, cells, extension)

    @classmethod
    def from_predicate(cls, arity: int, bound: int, pred: Callable[..., bool],
                       extension: str = "false") -> RelationTable:
        cells = np.zeros((bound + 1,) * arity, dtype=bool)
        for t in itertools.product(range(bound + 1), repeat=arity):
            cells[t] = bool(pred(*t))
        return cls(arity, bound, cells, extension)

    @classmethod
    def full(cls, arity: int, bound: int) -> RelationTable:
        return cls(arity, bound, np.ones((bound + 1,) * arity, dtype=bool), "true")

    @classmethod
    def empty(cls, arity: int, bound: int) -> RelationTable:
        return cls(arity, bound, np.zeros((bound + 1,) * arity, dtype=bool), "false")

    def holds(self, *args: int) -> bool:
        if len(args) != self.arity:
            raise ArityError(f"expected {self.arity} coordinates, got {len(args)}")
        b = self.bound
        for v in args:
            if v > b:
                if self.extension == "clamp":
                    return bool(self.cells[tuple(min(a, b) for a in args)])
                return self.extension == "true"
        return bool(self.cells[args])

    def grid(self, size: int) -> np.ndarray:
        """Membership on ``[0, size - 1]^arity`` as a boolean array."""
        idx = np.arange(size)
        if self.extension == "clamp":
            idx = np.minimum(idx, self.bound)
            return self.cells[np.ix_(*([idx] * self.arity))] if self.arity else self.cells.copy()
        out = np.full((size,) * self.arity, self.extension == "true", dtype=bool)
        inner = min(size, self.bound + 1)
        out[(slice(0, inner),) * self.arity] = self.cells[(slice(0, inner),) * self.arity]
        return out

    @cached_property
    def tuples(self) -> list[tuple[int, ...]]:
        return [tuple(int(v) for v in t) for t in np.argwhere(self.cells)]

    def complement(self) -> RelationTable:
        ext = {"false": "true", "true": "false", "clamp": "clamp"}[self.extension]
        return RelationTable(self.arity, self.bound, ~self.cells, ext)

    def to_json(self) -> dict:
        return {"arity": self.arity, "bound": self.bound,
                "tuples": [list(t) for t in self.tuples], "extension": self.extension}

    @classmethod
    def from_json(cls, data: dict) -> RelationTable:
        ext = data.get("extension", "false")
        if isinstance(ext, bool):
            ext = "true" if ext else "false"
        return cls.from_tuples(int(data["arity"]), int(data["bound"]), data.get("tuples", []), ext)

    @classmethod
    def load(cls, path) -> RelationTable:
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def __eq__(self, other):
        if not isinstance(other, RelationTable):
            return NotImplemented
        return (self.arity, self.bound, self.extension) == (other.arity, other.bound, other.extension) \
            and bool(np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.arity, self.bound, self.extension, self.cells.tobytes()))


@dataclass(frozen=True)
class QuantPrefix:
    """Quantifiers over named coordinates, outermost first, plus parameters."""

    quantifiers: tuple[tuple[int, str], ...]
    params: tuple[int, ...] = ()

    def __post_init__(self):
        coords = [c for c, _ in self.quantifiers] + list(self.params)
        if len(set(coords)) != len(coords):
            raise ValueError("a coordinate is used twice in the prefix")
        for _, q in self.quantifiers:
            if q not in ("A", "E"):
                raise ValueError(f"quantifier must be 'A' or 'E', got {q!r}")

    @property
    def arity(self) -> int:
        return len(self.quantifiers) + len(self.params)

    def check(self, R: RelationTable) -> None:
        coords = sorted([c for c, _ in self.quantifiers] + list(self.params))
        if coords != list(range(R.arity)):
            raise ArityError(f"prefix covers coordinates {coords}, table has arity {R.arity}")

    @property
    def alternating(self) -> bool:
        qs = [q for _, q in self.quantifiers]
        return all(a != b for a, b in zip(qs, qs[1:]))

    @classmethod
    def alternating_from(cls, first: str, arity: int) -> QuantPrefix:
        """Alternating prefix on coordinates ``0..arity-2``, parameter last."""
        if arity < 1:
            raise ArityError("need at least the parameter coordinate")
        other = "E" if first == "A" else "A"
        qs = tuple((i, first if i % 2 == 0 else other) for i in range(arity - 1))
        return cls(qs, (arity - 1,))

    @classmethod
    def forall_vec(cls, arity: int) -> QuantPrefix:
        return cls.alternating_from("A", arity)

    @classmethod
    def exists_vec(cls, arity: int) -> QuantPrefix:
        return cls.alternating_from("E", arity)


def _assignment(R: RelationTable, prefix: QuantPrefix, params: Sequence[int]) -> list:
    prefix.check(R)
    if len(params) != len(prefix.params):
        raise ArityError(f"expected {len(prefix.params)} parameters, got {len(params)}")
    point = [0] * R.arity
    for c, v in zip(prefix.params, params):
        point[c] = v
    return point


def brute_prefix_holds(R: RelationTable, prefix: QuantPrefix, params: Sequence[int],
                       range_: int) -> bool:
    """Evaluate the prefix by direct nested loops over ``[0, range_]``."""
    point = _assignment(R, prefix, params)
    qs = prefix.quantifiers

    def go(i: int) -> bool:
        if i == len(qs):
            return R.holds(*point)
        coord, q = qs[i]
        for v in range(range_ + 1):
            point[coord] = v
            r = go(i + 1)
            if q == "A" and not r:
                return False
            if q == "E" and r:
                return True
        return q == "A"

    return go(0)


def chi_prefix_value(R: RelationTable, prefix: QuantPrefix, params: Sequence[int],
                     range_: int) -> tuple[Dyadic, Dyadic]:
    """Inf/sup alternation of the indicator of ``R`` (A -> inf, E -> sup).

    Returns the value in {0, 1} and its G-form ``1 - value/2`` in {1/2, 1}.
    """
    point = _assignment(R, prefix, params)
    qs = prefix.quantifiers

    def go(i: int) -> Dyadic:
        if i == len(qs):
            return ONE if R.holds(*point) else ZERO
        coord, q = qs[i]
        acc = None
        for v in range(range_ + 1):
            point[coord] = v
            val = go(i + 1)
            acc = val if acc is None else (d_min(acc, val) if q == "A" else d_max(acc, val))
        return acc

    value = go(0)
    return value, ONE - value.scale(-1)


def star(R: RelationTable, prefix: QuantPrefix | None = None) -> RelationTable:
    """Bounded-quantifier transform ``A x_0' <= x_0  E x_1' <= x_1 ... R``.

    The result saturates one step above the input bound, so it is returned as
    a ``clamp`` table of bound ``R.bound + 1``.
    """
    prefix = prefix or QuantPrefix.forall_vec(R.arity)
    prefix.check(R)
    if not prefix.alternating:
        raise ValueError("star needs an alternating prefix")
    arr = R.grid(R.bound + 2)
    for coord, q in reversed(prefix.quantifiers):
        op = np.logical_and if q == "A" else np.logical_or
        arr = op.accumulate(arr, axis=coord)
    return RelationTable(R.arity, R.bound + 1, arr, "clamp")


def star_direct(R: RelationTable, prefix: QuantPrefix, args: Sequence[int]) -> bool:
    """R* at one tuple by literal expansion of the bounded quantifiers."""
    prefix.check(R)
    point = list(args)
    qs = prefix.quantifiers

    def go(i: int) -> bool:
        if i == len(qs):
            return R.holds(*point)
        coord, q = qs[i]
        top = args[coord]
        results = []
        for v in range(top + 1):
            point[coord] = v
            results.append(go(i + 1))
        point[coord] = top
        return all(results) if q == "A" else any(results)

    return go(0)


# ---------------------------------------------------------------------------
# weighted series


def gamma_K(f: Callable[..., Dyadic], K: int, args: Sequence[int] = ()) -> Dyadic:
    """``sum_{x0=0}^{K} 2^-(x0+1) f(x0, *args)``, exact."""
    if K < 0:
        raise ValueError("K must be non-negative")
    num = 0
    top = K + 1
    vals = [f(x0, *args) for x0 in range(K + 1)]
    emax = max(v.exponent for v in vals)
    for x0, v in enumerate(vals):
        num += v.mantissa << (emax - v.exponent + top - x0 - 1)
    return Dyadic.make(num, emax + top)


def gamma_total(f: Callable[..., Dyadic], args: Sequence[int] = (), bound: int = 0) -> Dyadic:
    """The full series, for ``f`` constant in ``x0`` beyond ``bound``."""
    tail = f(bound + 1, *args)
    if f(bound + 2, *args) != tail or f(bound + 3, *args) != tail:
        raise ValueError("f is not eventually constant beyond the given bound")
    return gamma_K(f, bound, args) + tail.scale(-(bound + 1))


def g_form(R_star: RelationTable) -> Callable[..., Dyadic]:
    """``G = 1 - chi/2`` for a starred table."""
    return lambda *t: HALF if R_star.holds(*t) else ONE


def h_form(R_star: RelationTable) -> Callable[..., Dyadic]:
    """``H = chi/2`` for a starred table."""
    return lambda *t: HALF if R_star.holds(*t) else ZERO


def forall_series(R: RelationTable) -> Callable[..., Dyadic]:
    """``(x_1..x_N, n) -> Gamma(1 - chi_{R*}/2; x_1..x_N, n)``."""
    S = star(R)
    return _series(g_form(S), S.bound)


def exists_series(R: RelationTable) -> Callable[..., Dyadic]:
    """``(x_1..x_N, n) -> Gamma(chi_{(not R)*}/2; x_1..x_N, n)``; complement first, then star."""
    S = star(R.complement())
    return _series(h_form(S), S.bound)


def _series(f, bound):
    cache: dict = {}

    def value(*args):
        key = tuple(min(a, bound) for a in args)
        out = cache.get(key)
        if out is None:
            out = cache[key] = gamma_total(f, key, bound)
        return out

    value.saturation = bound
    return value


def _alternate(fn: Callable[..., Dyadic], first: str, count: int, tail: Sequence[int],
               range_: int) -> Dyadic:
    """``Q_1 x_1 ... Q_count x_count fn(x_1..x_count, *tail)`` with inf/sup alternating."""
    point = [0] * count

    def go(i: int, q: str) -> Dyadic:
        if i == count:
            return fn(*point, *tail)
        acc = None
        nxt = "sup" if q == "inf" else "inf"
        for v in range(range_ + 1):
            point[i] = v
            val = go(i + 1, nxt)
            acc = val if acc is None else (d_min(acc, val) if q == "inf" else d_max(acc, val))
        return acc

    return go(0, first)


def encode_forall_value(R: RelationTable, n: int, range_: int) -> Dyadic:
    N = R.arity - 2
    return _alternate(forall_series(R), "inf", N, (n,), range_)


def encode_exists_value(R: RelationTable, n: int, range_: int) -> Dyadic:
    N = R.arity - 2
    return _alternate(exists_series(R), "sup", N, (n,), range_)


def _encode_pre(R: RelationTable, range_: int) -> None:
    if R.arity < 2:
        raise ArityError("encoding needs a relation of arity N + 2 >= 2")
    if range_ < R.bound:
        raise ValueError(f"range {range_} is below the table bound {R.bound}")


def encode_forall_check(R: RelationTable, n: int, range_: int | None = None) -> bool:
    """Series criterion for ``n`` in the forall-set of ``R``: inf-sup value <= 1/2."""
    range_ = R.bound if range_ is None else range_
    _encode_pre(R, range_)
    return encode_forall_value(R, n, range_) <= HALF


def encode_exists_check(R: RelationTable, n: int, range_: int | None = None) -> bool:
    """Series criterion for ``n`` in the exists-set of ``R``: sup-inf value < 1/2."""
    range_ = R.bound if range_ is None else range_
    _encode_pre(R, range_)
    return encode_exists_value(R, n, range_) < HALF


def forall_member(R: RelationTable, n: int, range_: int) -> bool:
    return brute_prefix_holds(R, QuantPrefix.forall_vec(R.arity), (n,), range_)


def exists_member(R: RelationTable, n: int, range_: int) -> bool:
    return brute_prefix_holds(R, QuantPrefix.exists_vec(R.arity), (n,), range_)


# ---------------------------------------------------------------------------
# lemma checks; each returns both sides so a failure shows which side moved


def check_carry(f: Sequence[Dyadic], K: int) -> tuple[bool, bool]:
    if len(f) < K + 1:
        raise ValueError(f"need values on [0, {K}]")
    for v in f:
        if v not in (HALF, ONE):
            raise ValueError(f"carry lemma needs values in {{1/2, 1}}, got {v}")
    lhs = gamma_K(lambda x0: f[x0], K) <= HALF
    rhs = all(f[m] == HALF for m in range(K))
    return lhs, rhs


def check_swap(R: RelationTable, J: int, K: int, params: Sequence[int],
               range_: int | None = None) -> tuple[tuple[bool, bool], tuple[bool, bool]]:
    """Both sides of both parts of the sum/quantifier interchange for ``G = 1 - chi_{R*}/2``.

    ``params`` is ``(x_1, ..., x_{J-1}, n)``; quantified coordinates
    ``x_J..x_N`` range over ``[0, range_]``.
    """
    N = R.arity - 2
    if not 1 <= J <= N:
        raise ArityError(f"need 1 <= J <= N = {N}, got J = {J}")
    if len(params) != J:
        raise ArityError(f"expected {J} parameters (x_1..x_{J-1}, n), got {len(params)}")
    S = star(R)
    range_ = S.bound if range_ is None else range_
    G = g_form(S)
    head, n = tuple(params[:-1]), params[-1]
    count = N - J + 1

    def series_then_quantify(first):
        fn = lambda *xs: gamma_K(G, K, (*head, *xs, n))
        return _alternate(fn, first, count, (), range_) <= HALF

    def quantify_then_series(first):
        inner = lambda x0: _alternate(lambda *xs: G(x0, *head, *xs, n), first, count, (), range_)
        return gamma_K(inner, K) <= HALF

    part1 = (series_then_quantify("sup"), quantify_then_series("sup"))
    part2 = (series_then_quantify("inf"), quantify_then_series("inf"))
    return part1, part2


def check_inf_sup(R: RelationTable, n: int, range_: int) -> tuple[tuple[bool, bool], tuple[bool, bool]]:
    """Indicator alternation equals 1 exactly on the forall-/exists-set."""
    fa, ex = QuantPrefix.forall_vec(R.arity), QuantPrefix.exists_vec(R.arity)
    return ((chi_prefix_value(R, fa, (n,), range_)[0] == ONE, brute_prefix_holds(R, fa, (n,), range_)),
            (chi_prefix_value(R, ex, (n,), range_)[0] == ONE, brute_prefix_holds(R, ex, (n,), range_)))


def check_forall_star(R: RelationTable, n: int, range_: int) -> tuple[bool, bool]:
    prefix = QuantPrefix.forall_vec(R.arity)
    return (brute_prefix_holds(star(R, prefix), prefix, (n,), range_),
            brute_prefix_holds(R, prefix, (n,), range_))


def check_encode(R: RelationTable, n: int, range_: int) -> tuple[tuple[bool, bool], tuple[bool, bool]]:
    return ((encode_forall_check(R, n, range_), forall_member(R, n, range_)),
            (encode_exists_check(R, n, range_), exists_member(R, n, range_)))
