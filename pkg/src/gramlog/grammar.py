"""Semi-Thue systems over a converse-closed alphabet and their languages.

``L_a(S)`` is the set of strings reachable from the one-letter string ``a`` by
zero or more rewrite steps, so ``a`` itself always belongs to it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .errors import EnumerationCapExceeded, NotContextFreeError, ParseError
from .formula import Letter, bar_string, format_word, parse_letter

Word = tuple[Letter, ...]


@dataclass(frozen=True, order=True)
class Production:
    lhs: Word
    rhs: Word

    def __post_init__(self):
        if not self.lhs:
            raise ValueError("production with empty left-hand side")
        object.__setattr__(self, "lhs", tuple(self.lhs))
        object.__setattr__(self, "rhs", tuple(self.rhs))

    @property
    def context_free(self) -> bool:
        return len(self.lhs) == 1

    def bar(self) -> "Production":
        return Production(bar_string(self.lhs), bar_string(self.rhs))

    def letters(self) -> set[Letter]:
        return set(self.lhs) | set(self.rhs)

    def __str__(self):
        return f"{format_word(self.lhs)} -> {format_word(self.rhs)}"


def _closed_alphabet(letters: Iterable[Letter]) -> frozenset[Letter]:
    out = set()
    for a in letters:
        out.add(a)
        out.add(a.bar())
    return frozenset(out)


@dataclass(frozen=True)
class SemiThueSystem:
    productions: frozenset[Production]
    alphabet: frozenset[Letter]

    @classmethod
    def of(cls, productions: Iterable[Production] = (), letters: Iterable[Letter] = ()):
        productions = frozenset(productions)
        used = set(letters)
        for p in productions:
            used |= p.letters()
        return cls(productions, _closed_alphabet(used))

    def __post_init__(self):
        for p in self.productions:
            missing = p.letters() - self.alphabet
            if missing:
                raise ValueError(f"letters {sorted(map(str, missing))} of {p} not in alphabet")
        for a in self.alphabet:
            if a.bar() not in self.alphabet:
                raise ValueError(f"alphabet not closed under converse: missing {a.bar()}")

    @property
    def context_free(self) -> bool:
        return all(p.context_free for p in self.productions)

    @property
    def is_closed(self) -> bool:
        return all(p.bar() in self.productions for p in self.productions)

    def with_letters(self, letters: Iterable[Letter]) -> "SemiThueSystem":
        return SemiThueSystem(self.productions, _closed_alphabet(set(self.alphabet) | set(letters)))

    def rules_for(self, a: Letter) -> list[Word]:
        """Right-hand sides of the context-free rules rewriting ``a``, sorted."""
        return sorted(p.rhs for p in self.productions if p.lhs == (a,))

    def sorted_productions(self) -> list[Production]:
        return sorted(self.productions)

    def __str__(self):
        return "{" + ", ".join(str(p) for p in self.sorted_productions()) + "}"


def require_context_free(system: SemiThueSystem) -> None:
    bad = [p for p in system.sorted_productions() if not p.context_free]
    if bad:
        raise NotContextFreeError(
            "deep nested-sequent provers need a context-free system; offending rule: " + str(bad[0]))


def close(system: SemiThueSystem) -> SemiThueSystem:
    """Smallest closed superset: add the converse image of every rule."""
    prods = set(system.productions)
    prods |= {p.bar() for p in system.productions}
    return SemiThueSystem(frozenset(prods), system.alphabet)


def _rewrites(system: SemiThueSystem, u: Word):
    for p in system.sorted_productions():
        n = len(p.lhs)
        for i in range(len(u) - n + 1):
            if u[i:i + n] == p.lhs:
                yield u[:i] + p.rhs + u[i + n:]


def one_step(system: SemiThueSystem, u: Sequence[Letter], v: Sequence[Letter]) -> bool:
    """True iff ``v`` is obtained from ``u`` by exactly one rule application."""
    v = tuple(v)
    return any(w == v for w in _rewrites(system, tuple(u)))


def derives_bounded(system: SemiThueSystem, u: Sequence[Letter], v: Sequence[Letter],
                    fuel: int) -> bool:
    """Breadth-first search for ``u =>* v`` using at most ``fuel`` rewrite steps."""
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    u, v = tuple(u), tuple(v)
    if u == v:
        return True
    seen = {u}
    frontier = [u]
    for _ in range(fuel):
        nxt = []
        for w in frontier:
            for x in _rewrites(system, w):
                if x == v:
                    return True
                if x not in seen:
                    seen.add(x)
                    nxt.append(x)
        if not nxt:
            return False
        frontier = nxt
    return False


# --- languages ------------------------------------------------------------

def _erasing(system: SemiThueSystem) -> bool:
    return any(len(p.rhs) < len(p.lhs) for p in system.productions)


def enumerate_language(system: SemiThueSystem, a: Letter, maxlen: int,
                       max_forms: int = 200_000) -> frozenset[Word]:
    """All strings of length at most ``maxlen`` derivable from ``a``.

    Without length-decreasing rules this is a breadth-first rewrite closure
    that drops forms longer than ``maxlen``. With erasing rules of a
    context-free system it saturates per-letter yield sets instead, which is
    exact because every sub-yield of a short string is short. The rewrite
    search raises ``EnumerationCapExceeded`` after ``max_forms`` forms.
    """
    if maxlen < 0:
        raise ValueError("maxlen must be non-negative")
    if _erasing(system):
        if not system.context_free:
            return _enumerate_rewriting(system, a, maxlen, max_forms, prune=False)
        return _enumerate_yields(system, maxlen)[a] if a in system.alphabet else (
            frozenset({(a,)}) if maxlen >= 1 else frozenset())
    return _enumerate_rewriting(system, a, maxlen, max_forms, prune=True)


def _enumerate_rewriting(system, a, maxlen, max_forms, prune):
    start = (a,)
    seen = {start}
    queue = deque([start])
    while queue:
        w = queue.popleft()
        for x in _rewrites(system, w):
            if prune and len(x) > maxlen:
                continue
            if x not in seen:
                seen.add(x)
                if len(seen) > max_forms:
                    raise EnumerationCapExceeded(
                        f"more than {max_forms} sentential forms reachable from {a}")
                queue.append(x)
    return frozenset(w for w in seen if len(w) <= maxlen)


def language_members(system: SemiThueSystem, a: Letter, words: Iterable[Sequence[Letter]]) -> frozenset[Word]:
    """The given words that belong to ``L_a(S)``, for a context-free system.

    Letter yields are saturated over the substrings of ``words`` only, which
    is exact because each letter of a derivation yields a contiguous piece of
    the final word.
    """
    require_context_free(system)
    words = {tuple(w) for w in words}
    subs = {w[i:j] for w in words for i in range(len(w) + 1) for j in range(i, len(w) + 1)}
    maxlen = max((len(w) for w in words), default=0)
    sigma = set(system.alphabet) | {a} | {x for w in words for x in w}
    ys = _enumerate_yields(system.with_letters(sigma), maxlen, subs)
    return frozenset(w for w in words if w in ys[a])


def _enumerate_yields(system: SemiThueSystem, maxlen: int,
                      within: set | None = None) -> dict[Letter, frozenset[Word]]:
    keep = (lambda w: True) if within is None else within.__contains__
    ys: dict[Letter, set[Word]] = {
        b: ({(b,)} if maxlen >= 1 and keep((b,)) else set()) for b in system.alphabet}
    rules = [(p.lhs[0], p.rhs) for p in system.sorted_productions()]
    changed = True
    while changed:
        changed = False
        for b, rhs in rules:
            combos = {()} if keep(()) else set()
            for c in rhs:
                combos = {w + y for w in combos for y in ys[c]
                          if len(w) + len(y) <= maxlen and keep(w + y)}
                if not combos:
                    break
            new = combos - ys[b]
            if new:
                ys[b] |= new
                changed = True
    return {b: frozenset(v) for b, v in ys.items()}


# --- context-free grammars ------------------------------------------------

@dataclass(frozen=True, order=True)
class Nonterminal:
    name: str

    def __str__(self):
        return self.name


def nonterminal_for(b: Letter) -> Nonterminal:
    return Nonterminal(f"N[{b}]")


@dataclass(frozen=True)
class Cfg:
    """Grammar with one nonterminal per letter; ``rules`` map nonterminal to bodies.

    Bodies are tuples mixing ``Nonterminal`` and terminal ``Letter`` symbols.
    """
    nonterminals: frozenset[Nonterminal]
    terminals: frozenset[Letter]
    start: Nonterminal
    rules: tuple[tuple[Nonterminal, tuple], ...]

    def with_start(self, start: Nonterminal) -> "Cfg":
        if start not in self.nonterminals:
            raise ValueError(f"unknown nonterminal {start}")
        return Cfg(self.nonterminals, self.terminals, start, self.rules)

    def __str__(self):
        lines = []
        for lhs, body in self.rules:
            rhs = " ".join(str(s) for s in body) or "eps"
            lines.append(f"{lhs} -> {rhs}")
        return "\n".join(lines)


def grammar_for(system: SemiThueSystem, letters: Iterable[Letter] = ()) -> Cfg:
    """Transcribe a context-free system; start symbol is left as the first letter."""
    require_context_free(system)
    sigma = sorted(_closed_alphabet(set(system.alphabet) | set(letters)))
    rules = []
    for b in sigma:
        nb = nonterminal_for(b)
        rules.append((nb, (b,)))
        for rhs in system.rules_for(b):
            rules.append((nb, tuple(nonterminal_for(c) for c in rhs)))
    nts = frozenset(nonterminal_for(b) for b in sigma)
    start = nonterminal_for(sigma[0]) if sigma else Nonterminal("N[]")
    return Cfg(nts | {start}, frozenset(sigma), start, tuple(rules))


def cfg_for(system: SemiThueSystem, a: Letter) -> Cfg:
    """Grammar generating ``L_a(S)``, with start symbol ``N[a]``."""
    return grammar_for(system, [a]).with_start(nonterminal_for(a))


# --- grammar files --------------------------------------------------------

class LoadedGrammar(NamedTuple):
    system: SemiThueSystem
    added: tuple[Production, ...]  # rules contributed by closing the file's rules


def _parse_word(text: str, line: int, col: int, source) -> Word:
    parts = text.split()
    if parts == ["eps"]:
        return ()
    out = []
    for part in parts:
        if part == "eps":
            raise ParseError("'eps' must stand alone", line, col, source)
        try:
            out.append(parse_letter(part))
        except ParseError as e:
            raise ParseError(e.message, line, col, source) from None
    return tuple(out)


def parse_grammar(text: str, source=None) -> LoadedGrammar:
    prods = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if line.count("->") != 1:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ParseError("expected exactly one '->'", lineno, col, source)
        left, right = line.split("->")
        lcol = len(left) - len(left.lstrip()) + 1
        rcol = len(left) + 3
        lhs = _parse_word(left, lineno, lcol, source)
        if not lhs:
            raise ParseError("empty left-hand side", lineno, lcol, source)
        if not right.strip():
            raise ParseError("empty right-hand side (write 'eps')", lineno, rcol, source)
        rhs = _parse_word(right, lineno, rcol, source)
        prods.append(Production(lhs, rhs))
    raw_system = SemiThueSystem.of(prods)
    closed = close(raw_system)
    added = tuple(sorted(closed.productions - raw_system.productions))
    return LoadedGrammar(closed, added)


def load_grammar(path) -> LoadedGrammar:
    path = Path(path)
    return parse_grammar(path.read_text(), source=str(path))


def dump_grammar(system: SemiThueSystem) -> str:
    return "".join(f"{p}\n" for p in system.sorted_productions())
