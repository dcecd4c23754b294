"""Formulas of continuous logic over a metric signature.

The primitive connectives are ``neg`` (1 - x), ``half`` (x / 2) and truncated
subtraction ``-.``; quantifiers are ``sup`` and ``inf``.  ``min``, ``max`` and
``avg`` are accepted by the parser but expanded into primitives at parse time.

Grammar (whitespace insensitive)::

    formula := "sup" VAR "." formula | "inf" VAR "." formula | expr
    expr    := primary ("-." primary)*          # left associative
    primary := "neg(" formula ")" | "half(" formula ")"
             | ("min"|"max"|"avg") "(" formula "," formula ")"
             | "d(" term "," term ")" | PRED "(" [terms] ")"
             | "(" formula ")" | quantified formula
    term    := VAR | CONST | FUNC "(" terms ")" | "q(" DYADIC ")"

Names may carry an index suffix such as ``c[3]`` or ``P[2,5]``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .numerics import Dyadic

KEYWORDS = frozenset({"sup", "inf", "neg", "half", "min", "max", "avg", "d"})


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class CaptureError(ValueError):
    pass


class PrenexError(ValueError):
    pass


class CodeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# signatures


def identity_modulus(k: int) -> int:
    return k


def constant_modulus(c: int) -> Callable[[int], int]:
    return lambda k: c


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    modulus: Callable[[int], int] = field(default=identity_modulus, compare=False)

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"negative arity for {self.name}")


class Signature:
    """Predicate, function and constant symbols; the metric ``d`` is implicit.

    Infinite symbol families are supplied as resolver callables that map a
    name to a :class:`Symbol` (or to ``True`` for constants) and return
    ``None`` for names outside the family.
    """

    def __init__(self, predicates: Iterable[Symbol] = (), functions: Iterable[Symbol] = (),
                 constants: Iterable[str] = (), predicate_family=None,
                 function_family=None, constant_family=None):
        self._predicates = {}
        self._functions = {}
        self._constants = set()
        seen = set()
        for table, symbols in ((self._predicates, predicates), (self._functions, functions)):
            for sym in symbols:
                if sym.name in seen:
                    raise ValueError(f"duplicate symbol {sym.name}")
                seen.add(sym.name)
                table[sym.name] = sym
        for name in constants:
            if name in seen:
                raise ValueError(f"duplicate symbol {name}")
            seen.add(name)
            self._constants.add(name)
        self._predicate_family = predicate_family
        self._function_family = function_family
        self._constant_family = constant_family

    def predicate(self, name: str) -> Symbol | None:
        sym = self._predicates.get(name)
        if sym is None and self._predicate_family is not None:
            sym = self._predicate_family(name)
        return sym

    def function(self, name: str) -> Symbol | None:
        sym = self._functions.get(name)
        if sym is None and self._function_family is not None:
            sym = self._function_family(name)
        return sym

    def is_constant(self, name: str) -> bool:
        if name in self._constants:
            return True
        return bool(self._constant_family and self._constant_family(name))


# ---------------------------------------------------------------------------
# terms and formulas


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple


Term = Var | Const | Func


@dataclass(frozen=True)
class Dist:
    left: Term
    right: Term


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple


@dataclass(frozen=True)
class Neg:
    body: Formula


@dataclass(frozen=True)
class Half:
    body: Formula


@dataclass(frozen=True)
class TSub:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Sup:
    var: str
    body: Formula


@dataclass(frozen=True)
class Inf:
    var: str
    body: Formula


Formula = Dist | Pred | Neg | Half | TSub | Sup | Inf
Quantifier = (Sup, Inf)


def f_min(a: Formula, b: Formula) -> Formula:
    return TSub(a, TSub(a, b))


def f_max(a: Formula, b: Formula) -> Formula:
    return Neg(f_min(Neg(a), Neg(b)))


def f_avg(a: Formula, b: Formula) -> Formula:
    return f_max(TSub(a, Half(TSub(a, b))), TSub(b, Half(TSub(b, a))))


def dyadic_const(value: Dyadic) -> Const:
    """The interval-structure constant naming ``value``."""
    return Const(f"q({value})")


# ---------------------------------------------------------------------------
# traversal helpers


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Func):
        out = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    return set()


def free_vars(phi: Formula) -> set[str]:
    # formulas built by the avg/min/max helpers share subterms, so memoize by identity
    memo: dict[int, frozenset] = {}

    def go(f) -> frozenset:
        key = id(f)
        out = memo.get(key)
        if out is not None:
            return out
        if isinstance(f, Dist):
            out = frozenset(term_vars(f.left) | term_vars(f.right))
        elif isinstance(f, Pred):
            out = frozenset().union(*(term_vars(a) for a in f.args))
        elif isinstance(f, (Neg, Half)):
            out = go(f.body)
        elif isinstance(f, TSub):
            out = go(f.left) | go(f.right)
        else:
            out = go(f.body) - {f.var}
        memo[key] = out
        return out

    return set(go(phi))


def is_closed(phi: Formula) -> bool:
    return not free_vars(phi)


def is_quantifier_free(phi: Formula) -> bool:
    return all(not isinstance(f, (Sup, Inf)) for f in _nodes(phi))


def _nodes(phi: Formula) -> Iterator[Formula]:
    """Every distinct formula node of the DAG under ``phi``."""
    stack = [phi]
    seen = set()
    while stack:
        f = stack.pop()
        if id(f) in seen:
            continue
        seen.add(id(f))
        yield f
        if isinstance(f, TSub):
            stack.extend((f.right, f.left))
        elif isinstance(f, (Neg, Half, Sup, Inf)):
            stack.append(f.body)


def atoms(phi: Formula) -> Iterator[Dist | Pred]:
    stack = [phi]
    seen = set()
    while stack:
        f = stack.pop()
        if id(f) in seen:
            continue
        seen.add(id(f))
        if isinstance(f, (Dist, Pred)):
            yield f
        elif isinstance(f, TSub):
            stack.extend((f.right, f.left))
        else:
            stack.append(f.body)


def term_constants(t: Term) -> Iterator[str]:
    if isinstance(t, Const):
        yield t.name
    elif isinstance(t, Func):
        for a in t.args:
            yield from term_constants(a)


def constants_of(phi: Formula) -> set[str]:
    out = set()
    for a in atoms(phi):
        args = (a.left, a.right) if isinstance(a, Dist) else a.args
        for t in args:
            out.update(term_constants(t))
    return out


def substitute_term(t: Term, x: str, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.name == x else t
    if isinstance(t, Func):
        return Func(t.name, tuple(substitute_term(a, x, s) for a in t.args))
    return t


def substitute(phi: Formula, x: str, t: Term) -> Formula:
    """Replace free occurrences of ``x`` by ``t``; refuses variable capture."""
    tvars = term_vars(t)
    memo: dict[int, Formula] = {}

    def go(f: Formula, bound: frozenset) -> Formula:
        key = id(f)
        if not bound and key in memo:
            return memo[key]
        if isinstance(f, Dist):
            out = Dist(substitute_term(f.left, x, t), substitute_term(f.right, x, t))
            if out != f and tvars & bound:
                raise CaptureError(f"substituting for {x} would capture {sorted(tvars & bound)}")
        elif isinstance(f, Pred):
            out = Pred(f.name, tuple(substitute_term(a, x, t) for a in f.args))
            if out != f and tvars & bound:
                raise CaptureError(f"substituting for {x} would capture {sorted(tvars & bound)}")
        elif isinstance(f, Neg):
            out = Neg(go(f.body, bound))
        elif isinstance(f, Half):
            out = Half(go(f.body, bound))
        elif isinstance(f, TSub):
            out = TSub(go(f.left, bound), go(f.right, bound))
        elif f.var == x:
            out = f
        else:
            out = type(f)(f.var, go(f.body, bound | {f.var}))
        if not bound:
            memo[key] = out
        return out

    return go(phi, frozenset())


def close_sup(phi: Formula, x: str) -> Sup:
    return Sup(x, phi)


def close_inf(phi: Formula, x: str) -> Inf:
    return Inf(x, phi)


# ---------------------------------------------------------------------------
# prenex classification


@dataclass(frozen=True)
class PrenexClass:
    kind: str  # "QF", "Sigma" or "Pi"
    level: int = 0

    def __post_init__(self):
        if self.kind not in ("QF", "Sigma", "Pi"):
            raise ValueError(f"unknown prenex kind {self.kind}")
        if (self.kind == "QF") != (self.level == 0):
            raise ValueError("QF has level 0; Sigma/Pi need a positive level")

    def __str__(self) -> str:
        return "QF" if self.kind == "QF" else f"{self.kind}_{self.level}"


def split_prenex(phi: Formula) -> tuple[list[tuple[type, str]], Formula]:
    """Split off the quantifier spine; the matrix must be quantifier-free."""
    prefix = []
    while isinstance(phi, Quantifier):
        prefix.append((type(phi), phi.var))
        phi = phi.body
    if not is_quantifier_free(phi):
        raise PrenexError("formula is not in prenex form")
    return prefix, phi


def quantifier_blocks(phi: Formula) -> list[tuple[type, list[str]]]:
    prefix, _ = split_prenex(phi)
    blocks: list[tuple[type, list[str]]] = []
    for kind, var in prefix:
        if blocks and blocks[-1][0] is kind:
            blocks[-1][1].append(var)
        else:
            blocks.append((kind, [var]))
    return blocks


def classify_prenex(phi: Formula) -> PrenexClass:
    blocks = quantifier_blocks(phi)
    if not blocks:
        return PrenexClass("QF")
    return PrenexClass("Sigma" if blocks[0][0] is Inf else "Pi", len(blocks))


# ---------------------------------------------------------------------------
# rendering


def render_term(t: Term) -> str:
    if isinstance(t, Func):
        return f"{t.name}({', '.join(render_term(a) for a in t.args)})"
    return t.name


def render(phi: Formula) -> str:
    if isinstance(phi, Dist):
        return f"d({render_term(phi.left)}, {render_term(phi.right)})"
    if isinstance(phi, Pred):
        return f"{phi.name}({', '.join(render_term(a) for a in phi.args)})"
    if isinstance(phi, Neg):
        return f"neg({render(phi.body)})"
    if isinstance(phi, Half):
        return f"half({render(phi.body)})"
    if isinstance(phi, TSub):
        left = render(phi.left)
        if isinstance(phi.left, Quantifier):
            left = f"({left})"
        right = render(phi.right)
        if isinstance(phi.right, (TSub, Sup, Inf)):
            right = f"({right})"
        return f"{left} -. {right}"
    word = "sup" if isinstance(phi, Sup) else "inf"
    return f"{word} {phi.var} . {render(phi.body)}"


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<dyadic>q\(\s*[+-]?[0-9./^\s]+\))
      | (?P<name>[A-Za-z_][A-Za-z0-9_']*(?:\[\s*\d+(?:\s*,\s*\d+)*\s*\])?)
      | (?P<tsub>-\.)
      | (?P<punct>[().,])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "name":
            value = re.sub(r"\s+", "", value)
        elif kind == "dyadic":
            inner = value[2:-1]
            try:
                value = f"q({Dyadic.parse(inner)})"
            except ValueError as exc:
                raise ParseError(str(exc), start) from None
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens = _tokenize(text)
        self.i = 0
        self.used = {v for k, v, _ in self.tokens if k == "name"}
        self.scope: dict[str, str] = {}

    def peek(self, offset: int = 0):
        return self.tokens[self.i + offset]

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.tokens[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", tok[2])
        self.i += 1
        return tok

    def fresh(self, base: str) -> str:
        i = 1
        while f"{base}_{i}" in self.used:
            i += 1
        name = f"{base}_{i}"
        self.used.add(name)
        return name

    def formula(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "name" and value in ("sup", "inf"):
            self.take()
            _, var, vpos = self.take(kind="name")
            if var in KEYWORDS or self.sig.is_constant(var):
                raise ParseError(f"cannot bind {var!r}", vpos)
            self.take(".")
            internal = self.fresh(var) if var in self.scope.values() or var in self.scope else var
            saved = self.scope.get(var)
            self.scope[var] = internal
            body = self.formula()
            if saved is None:
                del self.scope[var]
            else:
                self.scope[var] = saved
            return (Sup if value == "sup" else Inf)(internal, body)
        left = self.primary()
        while self.peek()[0] == "tsub":
            self.take()
            left = TSub(left, self.primary())
        return left

    def primary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "punct" and value == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        if kind != "name":
            raise ParseError(f"unexpected {value or 'end of input'!r}", pos)
        if value in ("sup", "inf"):
            return self.formula()
        if value in ("neg", "half"):
            self.take()
            self.take("(")
            body = self.formula()
            self.take(")")
            return Neg(body) if value == "neg" else Half(body)
        if value in ("min", "max", "avg"):
            self.take()
            self.take("(")
            a = self.formula()
            self.take(",")
            b = self.formula()
            self.take(")")
            return {"min": f_min, "max": f_max, "avg": f_avg}[value](a, b)
        if value == "d":
            self.take()
            self.take("(")
            a = self.term()
            self.take(",")
            b = self.term()
            self.take(")")
            return Dist(a, b)
        sym = self.sig.predicate(value)
        if sym is None:
            raise ParseError(f"unknown predicate {value!r}", pos)
        self.take()
        args = self.arguments()
        if len(args) != sym.arity:
            raise ParseError(f"{value} expects {sym.arity} arguments, got {len(args)}", pos)
        return Pred(value, args)

    def arguments(self) -> tuple:
        self.take("(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.term())
            while self.peek()[1] == ",":
                self.take()
                args.append(self.term())
        self.take(")")
        return tuple(args)

    def term(self) -> Term:
        kind, value, pos = self.peek()
        if kind == "dyadic":
            self.take()
            if not self.sig.is_constant(value):
                raise ParseError(f"unknown constant {value!r}", pos)
            return Const(value)
        if kind != "name" or value in KEYWORDS:
            raise ParseError(f"expected a term, found {value or 'end of input'!r}", pos)
        self.take()
        if self.peek()[1] == "(":
            sym = self.sig.function(value)
            if sym is None:
                raise ParseError(f"unknown function {value!r}", pos)
            args = self.arguments()
            if len(args) != sym.arity:
                raise ParseError(f"{value} expects {sym.arity} arguments, got {len(args)}", pos)
            return Func(value, args)
        if value in self.scope:
            return Var(self.scope[value])
        if self.sig.is_constant(value):
            return Const(value)
        if "[" in value:
            raise ParseError(f"unknown constant {value!r}", pos)
        return Var(value)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse ``text`` into a formula over ``sig``.

    A quantifier that rebinds a variable already bound on the same path is
    renamed to a fresh ``name_i`` so no variable is bound twice along a path.
    """
    p = _Parser(text, sig)
    phi = p.formula()
    tok = p.peek()
    if tok[0] != "end":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2])
    return phi


# ---------------------------------------------------------------------------
# Goedel numbering


def _pair(a: int, b: int) -> int:
    return (a + b) * (a + b + 1) // 2 + b


def _unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    b = z - w * (w + 1) // 2
    return w - b, b


def _code_str(s: str) -> int:
    return int.from_bytes(b"\x01" + s.encode(), "big")


def _decode_str(n: int) -> str:
    raw = n.to_bytes((n.bit_length() + 7) // 8, "big")
    if not raw or raw[0] != 1:
        raise CodeError(f"{n} is not a string code")
    try:
        return raw[1:].decode()
    except UnicodeDecodeError:
        raise CodeError(f"{n} is not a string code") from None


def _code_list(items: list[int]) -> int:
    out = 0
    for item in reversed(items):
        out = 1 + _pair(item, out)
    return out


def _decode_list(n: int) -> list[int]:
    items = []
    while n:
        head, n = _unpair(n - 1)
        items.append(head)
    return items


def _code_term(t: Term) -> int:
    if isinstance(t, Var):
        return _pair(0, _code_str(t.name))
    if isinstance(t, Const):
        return _pair(1, _code_str(t.name))
    return _pair(2, _pair(_code_str(t.name), _code_list([_code_term(a) for a in t.args])))


def _decode_term(n: int) -> Term:
    tag, body = _unpair(n)
    if tag == 0:
        return Var(_decode_str(body))
    if tag == 1:
        return Const(_decode_str(body))
    if tag == 2:
        name, args = _unpair(body)
        return Func(_decode_str(name), tuple(_decode_term(a) for a in _decode_list(args)))
    raise CodeError(f"bad term tag {tag}")


def code_of(phi: Formula) -> int:
    """Injective Goedel number of a formula (Cantor pairing throughout)."""
    if isinstance(phi, Dist):
        return _pair(0, _pair(_code_term(phi.left), _code_term(phi.right)))
    if isinstance(phi, Pred):
        return _pair(1, _pair(_code_str(phi.name), _code_list([_code_term(a) for a in phi.args])))
    if isinstance(phi, Neg):
        return _pair(2, code_of(phi.body))
    if isinstance(phi, Half):
        return _pair(3, code_of(phi.body))
    if isinstance(phi, TSub):
        return _pair(4, _pair(code_of(phi.left), code_of(phi.right)))
    tag = 5 if isinstance(phi, Sup) else 6
    return _pair(tag, _pair(_code_str(phi.var), code_of(phi.body)))


def formula_of(n: int) -> Formula:
    if not isinstance(n, int) or n < 0:
        raise CodeError(f"{n!r} is not a natural number")
    tag, body = _unpair(n)
    if tag == 0:
        a, b = _unpair(body)
        return Dist(_decode_term(a), _decode_term(b))
    if tag == 1:
        name, args = _unpair(body)
        return Pred(_decode_str(name), tuple(_decode_term(a) for a in _decode_list(args)))
    if tag == 2:
        return Neg(formula_of(body))
    if tag == 3:
        return Half(formula_of(body))
    if tag == 4:
        a, b = _unpair(body)
        return TSub(formula_of(a), formula_of(b))
    if tag in (5, 6):
        var, inner = _unpair(body)
        return (Sup if tag == 5 else Inf)(_decode_str(var), formula_of(inner))
    raise CodeError(f"bad formula tag {tag}")
