"""Finite automata, propagation automata and CFG/NFA intersection emptiness.

The emptiness test is the classic triple construction: a fact ``(N, p, q)``
records that nonterminal ``N`` derives a word labelling some path from ``p``
to ``q``. Facts are saturated with a worklist over a binarized grammar, so a
single run answers every (source, nonterminal, target) query for one graph.
Cost is O(|Q|^3 * |G|) per graph.
"""
from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import MissingInitialStateError, ParseError
from .formula import Letter, format_word, parse_letter
from .grammar import Cfg, Nonterminal, SemiThueSystem, Word, enumerate_language

State = Hashable
Transition = tuple  # (State, Letter, State)


@dataclass(frozen=True)
class Fsa:
    states: frozenset
    initials: frozenset
    finals: frozenset
    transitions: frozenset
    init_of: Mapping[Letter, State] | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("states", "initials", "finals", "transitions"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not self.initials <= self.states or not self.finals <= self.states:
            raise ValueError("initial and final states must be states")
        for s, a, t in self.transitions:
            if not isinstance(a, Letter):
                raise ValueError(f"silent or malformed transition {(s, a, t)!r}")
            if s not in self.states or t not in self.states:
                raise ValueError(f"transition {(s, a, t)!r} uses an unknown state")
        if self.init_of is not None:
            object.__setattr__(self, "init_of", dict(self.init_of))
            for a, s in self.init_of.items():
                if s not in self.initials:
                    raise ValueError(f"init state {s!r} of {a} is not initial")

    @property
    def alphabet(self) -> frozenset[Letter]:
        letters = {a for _, a, _ in self.transitions}
        if self.init_of:
            letters |= set(self.init_of)
        return frozenset(letters)

    def successors(self) -> dict:
        succ = defaultdict(list)
        for s, a, t in sorted(self.transitions, key=repr):
            succ[s, a].append(t)
        return succ

    def init_state(self, a: Letter) -> State:
        if not self.init_of or a not in self.init_of:
            raise MissingInitialStateError(f"automaton has no initial state for letter {a}")
        return self.init_of[a]

    def for_letter(self, a: Letter) -> "Fsa":
        """The automaton with only the initial state of ``a``."""
        return Fsa(self.states, {self.init_state(a)}, self.finals, self.transitions)


@dataclass(frozen=True)
class PropagationAutomaton(Fsa):
    """An automaton with one initial and one final state where every
    transition ``x -a-> y`` has its dual ``y -a^- -> x``."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.initials) != 1 or len(self.finals) != 1:
            raise ValueError("propagation automaton needs exactly one initial and one final state")
        for s, a, t in self.transitions:
            if (t, a.bar(), s) not in self.transitions:
                raise ValueError(f"transition {s} -{a}-> {t} has no dual")

    @property
    def initial(self):
        return next(iter(self.initials))

    @property
    def final(self):
        return next(iter(self.finals))


def tree_transitions(edges: Iterable[tuple]) -> frozenset:
    """Dual transitions for tree edges ``(parent, letter, child)``."""
    out = set()
    for x, a, y in edges:
        out.add((x, a, y))
        out.add((y, a.bar(), x))
    return frozenset(out)


def build_propagation_automaton(seq, i, j) -> PropagationAutomaton:
    """The automaton over the nodes of a nested sequent, from ``i`` to ``j``."""
    seq.check_node(i)
    seq.check_node(j)
    return PropagationAutomaton(frozenset(seq.node_ids()), {i}, {j}, tree_transitions(seq.edges()))


def remap(p: Fsa, assignment: Sequence[tuple] | Mapping) -> Fsa:
    """Image of ``p`` under the state substitution ``[x1 := y1, ...]``."""
    sub = dict(assignment)

    def f(s):
        return sub.get(s, s)

    cls = type(p)
    return cls(frozenset(map(f, p.states)), frozenset(map(f, p.initials)),
               frozenset(map(f, p.finals)),
               frozenset((f(s), a, f(t)) for s, a, t in p.transitions), p.init_of)


# --- CFG x NFA ------------------------------------------------------------

@dataclass(frozen=True, order=True)
class _Fresh:
    """Binarization helper: tail of an original rule body."""
    rule: int
    pos: int

    def __str__(self):
        return f"F{self.rule}.{self.pos}"


@dataclass(frozen=True, order=True)
class _Wrap:
    """Stands for a terminal inside a body of length two or more."""
    letter: Letter


class _Normal:
    """A grammar in the shape the worklist needs."""

    def __init__(self, cfg: Cfg):
        self.terminal = defaultdict(list)  # letter -> [N] with N -> letter
        self.unit = defaultdict(list)  # M -> [N] with N -> M
        self.as_left = defaultdict(list)  # M -> [(N, Z)] with N -> M Z
        self.as_right = defaultdict(list)  # M -> [(N, Y)] with N -> Y M
        self.eps = []  # N with N -> eps
        self.binary = []
        for idx, (lhs, body) in enumerate(cfg.rules):
            body = tuple(_Wrap(s) if isinstance(s, Letter) and len(body) > 1 else s for s in body)
            for s in body:
                if isinstance(s, _Wrap):
                    self.terminal[s.letter].append(s)
            if len(body) == 0:
                self.eps.append(lhs)
            elif len(body) == 1:
                (s,) = body
                if isinstance(s, Letter):
                    self.terminal[s].append(lhs)
                else:
                    self.unit[s].append(lhs)
            else:
                head = lhs
                for k in range(len(body) - 2):
                    tail = _Fresh(idx, k + 1)
                    self._bin(head, body[k], tail)
                    head = tail
                self._bin(head, body[-2], body[-1])
        for b in self.terminal:
            self.terminal[b] = sorted(set(self.terminal[b]), key=repr)
        self.nullable = self._nullable()

    def _bin(self, n, y, z):
        self.binary.append((n, y, z))
        self.as_left[y].append((n, z))
        self.as_right[z].append((n, y))

    def _nullable(self) -> dict:
        """Nullable symbols with the rule body that first made each nullable."""
        reason = {n: () for n in self.eps}
        changed = True
        while changed:
            changed = False
            for m, lhss in list(self.unit.items()):
                if m in reason:
                    for n in lhss:
                        if n not in reason:
                            reason[n] = (m,)
                            changed = True
            for n, y, z in self.binary:
                if n not in reason and y in reason and z in reason:
                    reason[n] = (y, z)
                    changed = True
        return reason


@lru_cache(maxsize=256)
def _normalize(cfg: Cfg) -> _Normal:
    return _Normal(cfg)


class Reachability:
    """Saturated facts ``(N, p, q)`` for one transition graph and grammar.

    Each fact remembers the first way it was derived, which makes witness
    extraction possible without a second search.
    """

    def __init__(self, states: Iterable, transitions: Iterable[Transition], cfg: Cfg):
        self.cfg = cfg
        self.states = frozenset(states)
        self.transitions = frozenset(transitions)
        g = _normalize(cfg)
        self._g = g
        self.reason: dict = {}
        by_start = defaultdict(list)  # (M, p) -> [q]
        by_end = defaultdict(list)  # (M, q) -> [p]
        work = deque()

        def add(fact, why):
            if fact in self.reason:
                return
            self.reason[fact] = why
            n, p, q = fact
            by_start[n, p].append(q)
            by_end[n, q].append(p)
            work.append(fact)

        for n in g.nullable:
            for p in sorted(self.states, key=repr):
                add((n, p, p), ("null",))
        for p, b, q in sorted(self.transitions, key=repr):
            for n in g.terminal.get(b, ()):
                add((n, p, q), ("term", b))
        while work:
            m, p, q = work.popleft()
            for n in g.unit.get(m, ()):
                add((n, p, q), ("unit", (m, p, q)))
            for n, z in g.as_left.get(m, ()):
                for r in list(by_start.get((z, q), ())):
                    add((n, p, r), ("bin", (m, p, q), (z, q, r)))
            for n, y in g.as_right.get(m, ()):
                for o in list(by_end.get((y, p), ())):
                    add((n, o, q), ("bin", (y, o, p), (m, p, q)))
        self._by_start = by_start

    def holds(self, p, n: Nonterminal, q) -> bool:
        return (n, p, q) in self.reason

    def targets(self, p, n: Nonterminal) -> list:
        return self._by_start.get((n, p), [])

    # --- witnesses --------------------------------------------------------

    def _tree(self, fact):
        """Binarized parse tree: ('nt', sym, [children], src, dst) or ('t', letter, src, dst)."""
        why = self.reason[fact]
        n, p, q = fact
        kind = why[0]
        if kind == "term":
            return ("nt", n, [("t", why[1], p, q)], p, q)
        if kind == "unit":
            return ("nt", n, [self._tree(why[1])], p, q)
        if kind == "bin":
            return ("nt", n, [self._tree(why[1]), self._tree(why[2])], p, q)
        body = self._g.nullable[n]
        return ("nt", n, [self._tree((s, p, p)) for s in body], p, q)

    @staticmethod
    def _flatten(node):
        """Undo binarization so every node matches an original rule."""
        if node[0] == "t":
            return node
        _, sym, kids, p, q = node
        flat = []
        for k in kids:
            k = Reachability._flatten(k)
            if k[0] == "nt" and isinstance(k[1], _Fresh):
                flat.extend(k[2])
            elif k[0] == "nt" and isinstance(k[1], _Wrap):
                flat.append(k[2][0])
            else:
                flat.append(k)
        return ("nt", sym, flat, p, q)

    def witness(self, p, n: Nonterminal, q) -> "Witness":
        """A word in the intersection, its state path and a derivation."""
        if not self.holds(p, n, q):
            raise KeyError((p, n, q))
        tree = self._flatten(self._tree((n, p, q)))
        leaves = []

        def walk(t):
            if t[0] == "t":
                leaves.append(t)
            else:
                for k in t[2]:
                    walk(k)

        walk(tree)
        word = tuple(t[1] for t in leaves)
        path = [p] + [t[3] for t in leaves]
        return Witness(word, tuple(path), tuple(_derivation(tree)))


def _derivation(tree) -> list[Word]:
    """Leftmost rewrite derivation read off a parse tree of a transcribed system.

    A node ``N[b]`` whose only child is the terminal ``b`` keeps ``b``; any
    other node rewrites ``b`` into the letters of its children.
    """
    def letter(node):
        name = node[1].name
        return parse_letter(name[2:-1])

    forms = []
    items = [tree]
    forms.append(tuple(letter(tree) if it[0] == "nt" else it[1] for it in items))
    while True:
        for idx, it in enumerate(items):
            if it[0] == "nt":
                break
        else:
            break
        kids = it[2]
        if len(kids) == 1 and kids[0][0] == "t" and kids[0][1] == letter(it):
            items[idx] = kids[0]
            continue
        items[idx:idx + 1] = kids
        forms.append(tuple(letter(x) if x[0] == "nt" else x[1] for x in items))
    return forms


@dataclass(frozen=True)
class Witness:
    word: Word
    path: tuple
    derivation: tuple[Word, ...]

    def to_json(self):
        return {
            "word": [str(a) for a in self.word],
            "path": list(self.path),
            "derivation": [[str(a) for a in f] for f in self.derivation],
        }


def intersection_nonempty(p: Fsa, g: Cfg) -> bool:
    """True iff the single-initial, single-final automaton ``p`` shares a word with ``g``."""
    if len(p.initials) != 1 or len(p.finals) != 1:
        raise ValueError("expected exactly one initial and one final state")
    (s,), (t,) = tuple(p.initials), tuple(p.finals)
    return Reachability(p.states, p.transitions, g).holds(s, g.start, t)


def word_automaton(word: Sequence[Letter]) -> Fsa:
    states = range(len(word) + 1)
    return Fsa(frozenset(states), {0}, {len(word)},
               frozenset((k, a, k + 1) for k, a in enumerate(word)))


def cfg_member(g: Cfg, word: Sequence[Letter]) -> bool:
    return intersection_nonempty(word_automaton(word), g)


class ReachabilityCache:
    """Memo of ``Reachability`` per transition graph.

    The propagation automaton of a sequent depends only on its edges, so the
    key is the (possibly remapped) state and transition sets. One instance is
    owned by one prover run.
    """

    def __init__(self, cfg: Cfg, maxsize: int = 4096):
        self.cfg = cfg
        self.maxsize = maxsize
        self._memo: dict = {}
        self.queries = 0
        self.hits = 0
        self.builds = 0

    def get(self, states: Iterable, transitions: Iterable) -> Reachability:
        key = (frozenset(states), frozenset(transitions))
        self.queries += 1
        r = self._memo.get(key)
        if r is not None:
            self.hits += 1
            return r
        self.builds += 1
        r = Reachability(key[0], key[1], self.cfg)
        if len(self._memo) >= self.maxsize:
            self._memo.pop(next(iter(self._memo)))
        self._memo[key] = r
        return r

    def stats(self) -> dict:
        rate = self.hits / self.queries if self.queries else 0.0
        return {"emptiness_queries": self.queries, "cache_hits": self.hits,
                "graphs_saturated": self.builds, "cache_hit_rate": round(rate, 4)}


# --- regular languages ----------------------------------------------------

def fsa_membership(a_fsa: Fsa, a: Letter, word: Sequence[Letter]) -> bool:
    """NFA simulation of ``word`` from the initial state of letter ``a``."""
    current = {a_fsa.init_state(a)}
    succ = a_fsa.successors()
    for b in word:
        current = {t for s in current for t in succ.get((s, b), ())}
        if not current:
            return False
    return bool(current & a_fsa.finals)


def fsa_words(a_fsa: Fsa, start: State, maxlen: int) -> frozenset[Word]:
    """All accepted words of length at most ``maxlen`` from ``start``."""
    succ = a_fsa.successors()
    out = set()
    layer = {(): {start}}
    for length in range(maxlen + 1):
        nxt = {}
        for w, sts in layer.items():
            if sts & a_fsa.finals:
                out.add(w)
            if length == maxlen:
                continue
            for (s, b), ts in succ.items():
                if s in sts:
                    nxt.setdefault(w + (b,), set()).update(ts)
        layer = nxt
    return frozenset(out)


def product_targets(transitions: Iterable[Transition], source, a_fsa: Fsa, a: Letter) -> set:
    """Graph states ``y`` such that some path from ``source`` to ``y`` spells a word of ``L(A_a)``.

    Plain breadth-first search over pairs (graph state, automaton state).
    """
    graph = defaultdict(list)
    for x, b, y in transitions:
        graph[x].append((b, y))
    succ = a_fsa.successors()
    start = (source, a_fsa.init_state(a))
    seen = {start}
    queue = deque([start])
    out = set()
    while queue:
        x, s = queue.popleft()
        if s in a_fsa.finals:
            out.add(x)
        for b, y in graph.get(x, ()):
            for t in succ.get((s, b), ()):
                if (y, t) not in seen:
                    seen.add((y, t))
                    queue.append((y, t))
    return out


@dataclass(frozen=True)
class Disagreement:
    letter: Letter
    word: Word
    in_fsa: bool
    in_grammar: bool

    def __str__(self):
        side = "automaton only" if self.in_fsa else "grammar only"
        return f"{self.letter}: {format_word(self.word)} ({side})"


@dataclass
class FsaCheckReport:
    maxlen: int
    disagreements: list[Disagreement]
    missing_init: list[Letter]

    @property
    def ok(self) -> bool:
        return not self.disagreements and not self.missing_init

    def to_json(self):
        return {
            "max_len": self.maxlen,
            "ok": self.ok,
            "missing_init": [str(a) for a in self.missing_init],
            "disagreements": [
                {"letter": str(d.letter), "word": [str(a) for a in d.word],
                 "in_fsa": d.in_fsa, "in_grammar": d.in_grammar}
                for d in self.disagreements],
        }


def check_fsa_matches_grammar(a_fsa: Fsa, system: SemiThueSystem, maxlen: int) -> FsaCheckReport:
    """Compare ``L(A_a)`` against ``L_a(S)`` on all words up to ``maxlen``, for every letter.

    Letters without an initial state are reported and treated as having the
    empty automaton language.
    """
    sigma = set(system.alphabet) | set(a_fsa.init_of or {})
    sigma |= {a.bar() for a in sigma}
    out = []
    missing = []
    for a in sorted(sigma):
        grammar_side = enumerate_language(system, a, maxlen)
        if a_fsa.init_of and a in a_fsa.init_of:
            fsa_side = fsa_words(a_fsa, a_fsa.init_of[a], maxlen)
        else:
            missing.append(a)
            fsa_side = frozenset()
        for w in sorted(fsa_side ^ grammar_side, key=lambda w: (len(w), w)):
            out.append(Disagreement(a, w, w in fsa_side, w in grammar_side))
    return FsaCheckReport(maxlen, out, missing)


# --- automaton files ------------------------------------------------------

def _letter(text, source):
    if not isinstance(text, str) or text in ("", "eps", "epsilon"):
        raise ParseError(f"silent or malformed transition label {text!r}", source=source)
    try:
        return parse_letter(text)
    except ParseError as e:
        raise ParseError(e.message, source=source) from None


def fsa_from_json(data: dict, source=None) -> Fsa:
    try:
        states = [str(s) for s in data["states"]]
        finals = [str(s) for s in data.get("finals", [])]
        init = {_letter(k, source): str(v) for k, v in data.get("init", {}).items()}
        delta = data.get("delta", [])
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed automaton: {e}", source=source) from None
    trans = set()
    for row in delta:
        if not isinstance(row, list) or len(row) != 3:
            raise ParseError(f"transition must be [src, letter, dst], got {row!r}", source=source)
        trans.add((str(row[0]), _letter(row[1], source), str(row[2])))
    try:
        return Fsa(frozenset(states), frozenset(init.values()), frozenset(finals),
                   frozenset(trans), init)
    except ValueError as e:
        raise ParseError(str(e), source=source) from None


def load_fsa(path) -> Fsa:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, str(path)) from None
    return fsa_from_json(data, source=str(path))


def fsa_to_json(a_fsa: Fsa) -> dict:
    return {
        "states": sorted(map(str, a_fsa.states)),
        "finals": sorted(map(str, a_fsa.finals)),
        "init": {str(a): str(s) for a, s in sorted((a_fsa.init_of or {}).items())},
        "delta": sorted([str(s), str(a), str(t)] for s, a, t in a_fsa.transitions),
    }

