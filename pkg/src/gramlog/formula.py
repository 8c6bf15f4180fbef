"""Letters with converse, modal formulas, negation normal form and a small parser.

Text syntax::

    p, q1          atoms
    ~A             negation
    A & B, A | B   conjunction, disjunction (left associative)
    A => B         implication, right associative, desugared to ~A | B
    [a]A, <a>A     box and diamond; ``a^-`` is the converse letter

``~``, ``[a]`` and ``<a>`` bind tightest, then ``&``, ``|``, ``=>``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ParseError

__all__ = [
    "Letter", "Formula", "Atom", "NegAtom", "Neg", "And", "Or", "Box", "Dia",
    "bar_letter", "bar_string", "nnf", "lneg", "is_nnf", "subformulas", "atoms",
    "letters", "parse_formula", "parse_letter", "format_word", "implies",
]


@dataclass(frozen=True, order=True)
class Letter:
    base: str
    positive: bool = True

    def bar(self) -> "Letter":
        return Letter(self.base, not self.positive)

    def __str__(self):
        return self.base if self.positive else f"{self.base}^-"

    def __repr__(self):
        return f"Letter({str(self)!r})"


def bar_letter(a: Letter) -> Letter:
    return a.bar()


def bar_string(u: Sequence[Letter]) -> tuple[Letter, ...]:
    """Reverse ``u`` and take the converse of every letter."""
    return tuple(a.bar() for a in reversed(u))


def format_word(u: Iterable[Letter]) -> str:
    u = list(u)
    return " ".join(str(a) for a in u) if u else "eps"


class Formula:
    """Common base; concrete nodes are frozen dataclasses with a cached hash."""

    __slots__ = ()

    def _init_cache(self, parts):
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + parts))

    def __hash__(self):
        return self._hash

    @property
    def size(self) -> int:
        return self._size

    def sort_key(self):
        """Deterministic scan order: smaller formulas first, then by text."""
        return (self._size, str(self))

    def __str__(self):
        return _show(self, 0)


def _cached(cls):
    cls.__hash__ = Formula.__hash__
    return cls


@_cached
@dataclass(frozen=True, eq=True)
class Atom(Formula):
    name: str
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.name,))
        object.__setattr__(self, "_size", 1)


@_cached
@dataclass(frozen=True, eq=True)
class NegAtom(Formula):
    name: str
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.name,))
        object.__setattr__(self, "_size", 2)


@_cached
@dataclass(frozen=True, eq=True)
class Neg(Formula):
    sub: Formula
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.sub,))
        object.__setattr__(self, "_size", self.sub.size + 1)


@_cached
@dataclass(frozen=True, eq=True)
class And(Formula):
    left: Formula
    right: Formula
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.left, self.right))
        object.__setattr__(self, "_size", self.left.size + self.right.size + 1)


@_cached
@dataclass(frozen=True, eq=True)
class Or(Formula):
    left: Formula
    right: Formula
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.left, self.right))
        object.__setattr__(self, "_size", self.left.size + self.right.size + 1)


@_cached
@dataclass(frozen=True, eq=True)
class Box(Formula):
    letter: Letter
    sub: Formula
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.letter, self.sub))
        object.__setattr__(self, "_size", self.sub.size + 1)


@_cached
@dataclass(frozen=True, eq=True)
class Dia(Formula):
    letter: Letter
    sub: Formula
    _hash: int = field(init=False, repr=False, compare=False)
    _size: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._init_cache((self.letter, self.sub))
        object.__setattr__(self, "_size", self.sub.size + 1)


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Neg(a), b)


def nnf(f: Formula) -> Formula:
    """Push negations down to atoms."""
    if isinstance(f, (Atom, NegAtom)):
        return f
    if isinstance(f, And):
        return And(nnf(f.left), nnf(f.right))
    if isinstance(f, Or):
        return Or(nnf(f.left), nnf(f.right))
    if isinstance(f, Box):
        return Box(f.letter, nnf(f.sub))
    if isinstance(f, Dia):
        return Dia(f.letter, nnf(f.sub))
    if isinstance(f, Neg):
        return _neg_nnf(f.sub)
    raise TypeError(f"not a formula: {f!r}")


def _neg_nnf(f: Formula) -> Formula:
    if isinstance(f, Atom):
        return NegAtom(f.name)
    if isinstance(f, NegAtom):
        return Atom(f.name)
    if isinstance(f, Neg):
        return nnf(f.sub)
    if isinstance(f, And):
        return Or(_neg_nnf(f.left), _neg_nnf(f.right))
    if isinstance(f, Or):
        return And(_neg_nnf(f.left), _neg_nnf(f.right))
    if isinstance(f, Box):
        return Dia(f.letter, _neg_nnf(f.sub))
    if isinstance(f, Dia):
        return Box(f.letter, _neg_nnf(f.sub))
    raise TypeError(f"not a formula: {f!r}")


def lneg(f: Formula) -> Formula:
    """Negation normal form of the negation of ``f``."""
    return _neg_nnf(f)


def is_nnf(f: Formula) -> bool:
    if isinstance(f, Neg):
        return False
    if isinstance(f, (Atom, NegAtom)):
        return True
    if isinstance(f, (And, Or)):
        return is_nnf(f.left) and is_nnf(f.right)
    return is_nnf(f.sub)


def _children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (And, Or)):
        return (f.left, f.right)
    if isinstance(f, (Neg, Box, Dia)):
        return (f.sub,)
    return ()


def subformulas(f: Formula) -> frozenset[Formula]:
    out: set[Formula] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in out:
            continue
        out.add(g)
        stack.extend(_children(g))
    return frozenset(out)


def atoms(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, (Atom, NegAtom)))


def letters(f: Formula) -> frozenset[Letter]:
    return frozenset(g.letter for g in subformulas(f) if isinstance(g, (Box, Dia)))


# --- printing -------------------------------------------------------------

def _show(f: Formula, ctx: int) -> str:
    # ctx: 0 top, 1 inside |, 2 inside &, 3 under a prefix operator
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, NegAtom):
        return "~" + f.name
    if isinstance(f, Neg):
        return "~" + _show(f.sub, 3)
    if isinstance(f, Box):
        return f"[{f.letter}]" + _show(f.sub, 3)
    if isinstance(f, Dia):
        return f"<{f.letter}>" + _show(f.sub, 3)
    if isinstance(f, Or):
        s = _show(f.left, 1) + " | " + _show(f.right, 2)
        return f"({s})" if ctx > 1 else s
    if isinstance(f, And):
        s = _show(f.left, 2) + " & " + _show(f.right, 3)
        return f"({s})" if ctx > 2 else s
    raise TypeError(f"not a formula: {f!r}")


# --- parsing --------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:\^-)?)|(?P<op>=>|->|[~!&|()\[\]<>]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(offset):
        line = max(i for i, s in enumerate(line_starts) if s <= offset)
        return line + 1, offset - line_starts[line] + 1

    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            skip = len(text[pos:]) - len(text[pos:].lstrip())
            line, col = where(pos + skip)
            raise ParseError(f"unexpected character {text[pos + skip]!r}", line, col)
        kind = "ident" if m.group("ident") else "op"
        value = m.group(kind)
        start = m.start(kind)
        out.append((kind, value, where(start)))
        pos = m.end()
    out.append(("end", "", where(len(text))))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        line, col = tok[2]
        raise ParseError(msg, line, col)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            self.fail(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self):
        f = self.implication()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self.peek()[1]!r}")
        return f

    def implication(self):
        left = self.disjunction()
        if self.peek()[1] in ("=>", "->"):
            self.take()
            return implies(left, self.implication())
        return left

    def disjunction(self):
        f = self.conjunction()
        while self.peek()[1] == "|":
            self.take()
            f = Or(f, self.conjunction())
        return f

    def conjunction(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def letter(self):
        tok = self.take()
        if tok[0] != "ident":
            self.fail("expected a modality letter", tok)
        return parse_letter(tok[1])

    def unary(self):
        tok = self.peek()
        if tok[1] in ("~", "!"):
            self.take()
            sub = self.unary()
            if isinstance(sub, Atom):
                return NegAtom(sub.name)
            return Neg(sub)
        if tok[1] == "[":
            self.take()
            a = self.letter()
            self.expect("]")
            return Box(a, self.unary())
        if tok[1] == "<":
            self.take()
            a = self.letter()
            self.expect(">")
            return Dia(a, self.unary())
        if tok[1] == "(":
            self.take()
            f = self.implication()
            self.expect(")")
            return f
        if tok[0] == "ident":
            self.take()
            if tok[1].endswith("^-"):
                self.fail("converse marker is only allowed on modality letters", tok)
            return Atom(tok[1])
        self.fail(f"unexpected {tok[1] or 'end of input'!r}")


def parse_letter(text: str) -> Letter:
    text = text.strip()
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*(\^-)?", text):
        raise ParseError(f"bad letter {text!r}")
    if text.endswith("^-"):
        return Letter(text[:-2], False)
    return Letter(text, True)


def parse_formula(text: str) -> Formula:
    """Parse ``text``; the result may contain ``Neg`` nodes (see ``nnf``)."""
    return _Parser(text).parse()
