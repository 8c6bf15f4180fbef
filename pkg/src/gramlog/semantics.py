"""Finite Kripke models, satisfaction, countermodel extraction and a small-model oracle."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import InternalError, ModelError
from .formula import (And, Atom, Box, Dia, Formula, Letter, Neg, NegAtom, Or, atoms, letters,
                      lneg, nnf, parse_letter, subformulas)
from .grammar import Production, SemiThueSystem, grammar_for, nonterminal_for
from .lang import Fsa, Reachability, product_targets, tree_transitions
from .prover_auto import is_A_stable
from .sequent import NestedSequent

Pair = tuple[str, str]


@dataclass(frozen=True)
class KripkeModel:
    """Worlds, one relation per letter (both polarities stored), and a valuation."""
    worlds: tuple[str, ...]
    rel: Mapping[Letter, frozenset[Pair]]
    val: Mapping[str, frozenset[str]]
    _succ: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ws = set(self.worlds)
        if len(ws) != len(self.worlds):
            raise ModelError("duplicate world names")
        for a, pairs in self.rel.items():
            for x, y in pairs:
                if x not in ws or y not in ws:
                    raise ModelError(f"relation {a} mentions unknown world in ({x}, {y})")
        for p, us in self.val.items():
            if not set(us) <= ws:
                raise ModelError(f"valuation of {p} mentions unknown worlds")
        succ = {}
        for a, pairs in self.rel.items():
            for x, y in pairs:
                succ.setdefault((a, x), []).append(y)
        object.__setattr__(self, "_succ", succ)

    @classmethod
    def from_positive(cls, worlds, rel: Mapping[Letter, Iterable[Pair]], val) -> "KripkeModel":
        """Build a converse-closed model: each relation also fixes its converse."""
        full: dict[Letter, set] = {}
        for a, pairs in rel.items():
            pairs = set(map(tuple, pairs))
            full.setdefault(a, set()).update(pairs)
            full.setdefault(a.bar(), set()).update((y, x) for x, y in pairs)
        return cls(tuple(worlds), {a: frozenset(v) for a, v in full.items()},
                   {p: frozenset(v) for p, v in val.items()})

    def relation(self, a: Letter) -> frozenset[Pair]:
        return self.rel.get(a, frozenset())

    def successors(self, a: Letter, x: str) -> list[str]:
        return self._succ.get((a, x), [])

    def converse_violations(self) -> list[tuple[Letter, Pair]]:
        out = []
        for a in sorted(self.rel):
            back = self.relation(a.bar())
            for x, y in sorted(self.rel[a]):
                if (y, x) not in back:
                    out.append((a, (x, y)))
        return out

    def to_json(self) -> dict:
        pos = sorted({a if a.positive else a.bar() for a in self.rel})
        return {
            "worlds": list(self.worlds),
            "rel": {str(a): [list(p) for p in sorted(self.relation(a))] for a in pos},
            "val": {p: sorted(self.val[p]) for p in sorted(self.val)},
        }


def model_from_json(data: dict) -> KripkeModel:
    """Load a model; a converse key ``a^-`` is optional but must agree with ``a``."""
    try:
        worlds = [str(w) for w in data["worlds"]]
        raw = {parse_letter(k): {(str(x), str(y)) for x, y in v}
               for k, v in data.get("rel", {}).items()}
        val = {str(p): frozenset(map(str, ws)) for p, ws in data.get("val", {}).items()}
    except (KeyError, TypeError, ValueError) as e:
        raise ModelError(f"malformed model: {e}") from None
    for a in sorted(raw):
        if a.positive or a.bar() not in raw:
            continue
        pos = raw[a.bar()]
        for x, y in sorted(raw[a]):
            if (y, x) not in pos:
                raise ModelError(f"converse closure broken: ({x}, {y}) in {a} but ({y}, {x}) not in {a.bar()}")
        for x, y in sorted(pos):
            if (y, x) not in raw[a]:
                raise ModelError(f"converse closure broken: ({x}, {y}) in {a.bar()} but ({y}, {x}) not in {a}")
    return KripkeModel.from_positive(worlds, raw, val)


def load_model(path) -> KripkeModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ModelError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    return model_from_json(data)


# --- satisfaction ---------------------------------------------------------

def truth_set(model: KripkeModel, f: Formula, _memo=None) -> frozenset[str]:
    """Worlds where ``f`` holds; atoms missing from the valuation are false everywhere."""
    memo = {} if _memo is None else _memo
    if f in memo:
        return memo[f]
    ws = frozenset(model.worlds)
    if isinstance(f, Atom):
        out = model.val.get(f.name, frozenset()) & ws
    elif isinstance(f, NegAtom):
        out = ws - model.val.get(f.name, frozenset())
    elif isinstance(f, Neg):
        out = ws - truth_set(model, f.sub, memo)
    elif isinstance(f, And):
        out = truth_set(model, f.left, memo) & truth_set(model, f.right, memo)
    elif isinstance(f, Or):
        out = truth_set(model, f.left, memo) | truth_set(model, f.right, memo)
    elif isinstance(f, Box):
        t = truth_set(model, f.sub, memo)
        out = frozenset(x for x in ws if all(y in t for y in model.successors(f.letter, x)))
    elif isinstance(f, Dia):
        t = truth_set(model, f.sub, memo)
        out = frozenset(x for x in ws if any(y in t for y in model.successors(f.letter, x)))
    else:
        raise TypeError(f"not a formula: {f!r}")
    memo[f] = out
    return out


def satisfies(model: KripkeModel, w: str, f: Formula) -> bool:
    if w not in model.worlds:
        raise ModelError(f"unknown world {w!r}")
    return w in truth_set(model, f)


def string_relation(model: KripkeModel, word: Iterable[Letter]) -> frozenset[Pair]:
    """Relational composition along ``word``; the empty word gives the identity."""
    cur = {(x, x) for x in model.worlds}
    for a in word:
        cur = {(x, z) for x, y in cur for z in model.successors(a, y)}
    return frozenset(cur)


def frame_violations(model: KripkeModel, system: SemiThueSystem) -> list[tuple[Production, Pair]]:
    """Pairs in ``R_v`` but not in ``R_u`` for each rule ``u -> v``."""
    out = []
    for p in system.sorted_productions():
        ru = string_relation(model, p.lhs)
        for pair in sorted(string_relation(model, p.rhs) - ru):
            out.append((p, pair))
    return out


def frame_satisfies(model: KripkeModel, system: SemiThueSystem) -> bool:
    return not model.converse_violations() and not frame_violations(model, system)


# --- countermodels --------------------------------------------------------

@dataclass
class Countermodel:
    model: KripkeModel
    world: str  # image of the root (or the falsifying world for searched models)
    nodes: dict = field(default_factory=dict)  # sequent node -> world


def _world(i) -> str:
    return f"w{i}"


def _valuation(seq: NestedSequent, worlds: dict) -> dict:
    names = set()
    for i in seq.node_ids():
        for f in seq.formulas(i):
            names |= atoms(f)
    return {p: frozenset(w for i, w in worlds.items() if NegAtom(p) in seq.formulas(i))
            for p in sorted(names)}


def _merged_transitions(seq: NestedSequent, merge: Mapping) -> frozenset:
    f = lambda s: merge.get(s, s)  # noqa: E731
    return frozenset((f(x), a, f(y)) for x, a, y in tree_transitions(seq.edges()))


def extract_countermodel_auto(seq: NestedSequent, automaton: Fsa,
                              loop_map: Mapping | None = None) -> Countermodel:
    """Model over the realised nodes; loop leaves are merged into their ancestors."""
    stable, loops = is_A_stable(seq, automaton)
    if not stable:
        raise ValueError("sequent is not stable for this automaton")
    if loop_map is not None and dict(loop_map) != loops:
        raise ValueError("loop map does not match the closest content-equal ancestors")
    nodes = {i: _world(i) for i in seq.node_ids() if i not in loops}
    trans = _merged_transitions(seq, loops)
    rel = {}
    for a in sorted(automaton.init_of or {}):
        rel[a] = frozenset((nodes[x], nodes[y]) for x in nodes
                           for y in product_targets(trans, x, automaton, a))
    model = KripkeModel(tuple(nodes.values()), rel, _valuation(seq, nodes))
    mapping = {i: nodes[loops.get(i, i)] for i in seq.node_ids()}
    return Countermodel(model, nodes[seq.root], mapping)


def extract_countermodel_grammar(seq: NestedSequent, witness, system: SemiThueSystem) -> Countermodel:
    """Model over the nodes outside the loop assignment; relations come from the grammar."""
    from .prover_grammar import check_stability_witness
    problems = check_stability_witness(seq, system, witness)
    if problems:
        raise ValueError("invalid stability witness: " + "; ".join(problems))
    lam = witness.lambda_map
    nodes = {i: _world(i) for i in seq.node_ids() if i not in lam}
    trans = _merged_transitions(seq, lam)
    sigma = set(system.alphabet) | {a for _, a, _ in seq.edges()}
    for i in seq.node_ids():
        for f in seq.formulas(i):
            sigma |= letters(f)
    sigma |= {a.bar() for a in sigma}
    reach = Reachability(nodes, trans, grammar_for(system, sigma))
    rel = {}
    for a in sorted(sigma):
        rel[a] = frozenset((nodes[x], nodes[y]) for x in nodes
                           for y in reach.targets(x, nonterminal_for(a)))
    model = KripkeModel(tuple(nodes.values()), rel, _valuation(seq, nodes))
    mapping = {i: nodes[lam.get(i, i)] for i in seq.node_ids()}
    return Countermodel(model, nodes[seq.root], mapping)


def verify_countermodel(model: KripkeModel, world: str, formula: Formula,
                        system: SemiThueSystem | None = None) -> list[str]:
    """Independent audit; an empty list means the model refutes ``formula`` at ``world``."""
    problems = []
    for a, (x, y) in model.converse_violations():
        problems.append(f"converse closure: ({x}, {y}) in {a} but not ({y}, {x}) in {a.bar()}")
    if system is not None:
        for p, (x, y) in frame_violations(model, system):
            problems.append(f"rule {p}: ({x}, {y}) in R_v but not in R_u")
    if world not in model.worlds:
        problems.append(f"unknown world {world}")
    elif satisfies(model, world, formula):
        problems.append(f"{formula} holds at {world}")
    return problems


# --- small-model search ---------------------------------------------------

def _positive_letters(system: SemiThueSystem, f: Formula) -> list[Letter]:
    used = set(letters(f))
    for p in system.productions:
        used |= p.letters()
    return sorted({a if a.positive else a.bar() for a in used})


def brute_force_search(system: SemiThueSystem, formula: Formula, max_worlds: int = 4,
                       engine: str = "auto", max_frame_bits: int = 12) -> Countermodel | None:
    """Smallest model with at most ``max_worlds`` worlds refuting ``formula``, if any.

    Relations range over the letters of ``formula`` and ``system``; others stay
    empty. ``engine="enumerate"`` walks every frame and valuation with numpy
    and is limited to ``max_frame_bits`` relation bits per size; ``"sat"``
    encodes the same search space as a propositional problem. ``"auto"``
    enumerates while the frame space is small and switches to SAT after.
    Every returned model has been re-checked with ``satisfies``.
    """
    if engine not in ("auto", "enumerate", "sat"):
        raise ValueError(f"unknown engine {engine!r}")
    target = lneg(nnf(formula))
    pos = _positive_letters(system, formula)
    for n in range(1, max_worlds + 1):
        bits = len(pos) * n * n
        use = engine
        if engine == "auto":
            use = "enumerate" if bits <= max_frame_bits else "sat"
        if use == "enumerate":
            if bits > max_frame_bits:
                raise ValueError(f"{bits} relation bits over {n} worlds exceeds max_frame_bits")
            found = _enumerate(system, target, pos, n)
        else:
            found = _sat(system, target, pos, n)
        if found is not None:
            model, w = found
            if not satisfies(model, w, target) or not frame_satisfies(model, system):
                raise InternalError("small-model search produced a model that does not verify")
            return Countermodel(model, w)
    return None


def _enumerate(system, target: Formula, pos: list[Letter], n: int, batch: int = 2048):
    names = sorted(atoms(target))
    worlds = [_world(i) for i in range(n)]
    nbits = len(pos) * n * n
    vbits = len(names) * n
    vals = ((np.arange(2 ** vbits)[:, None] >> np.arange(vbits)) & 1).astype(bool)
    vals = vals.reshape(-1, max(len(names), 1), n) if names else np.zeros((1, 1, n), bool)
    subs = sorted(subformulas(target), key=Formula.sort_key)
    for start in range(0, 2 ** nbits, batch):
        codes = np.arange(start, min(start + batch, 2 ** nbits))
        bits = ((codes[:, None] >> np.arange(nbits)) & 1).astype(bool)
        rel = {}
        for k, a in enumerate(pos):
            r = bits[:, k * n * n:(k + 1) * n * n].reshape(-1, n, n)
            rel[a] = r
            rel[a.bar()] = r.transpose(0, 2, 1)
        ok = np.ones(len(codes), bool)
        for p in system.productions:
            ru = _compose(rel, p.lhs, len(codes), n)
            rv = _compose(rel, p.rhs, len(codes), n)
            ok &= ~np.any(rv & ~ru, axis=(1, 2))
        if not ok.any():
            continue
        frames = codes[ok]
        sel = {a: r[ok] for a, r in rel.items()}
        truth = {}
        for f in subs:
            truth[f] = _truth(f, truth, sel, vals, names, len(frames), n)
        hit = np.argwhere(truth[target])
        if len(hit):
            fi, vi, wi = hit[0]
            rpos = {a: {(worlds[x], worlds[y]) for x, y in np.argwhere(sel[a][fi])} for a in pos}
            val = {p: {worlds[x] for x in range(n) if vals[vi, k, x]} for k, p in enumerate(names)}
            return KripkeModel.from_positive(worlds, rpos, val), worlds[wi]
    return None


def _compose(rel, word, frames, n):
    cur = np.broadcast_to(np.eye(n, dtype=bool), (frames, n, n))
    for a in word:
        r = rel.get(a)
        if r is None:
            return np.zeros((frames, n, n), bool)
        cur = (cur.astype(np.uint8) @ r.astype(np.uint8)) > 0
    return cur


def _truth(f, truth, rel, vals, names, frames, n):
    # result shape: (frames, valuations, worlds)
    shape = (frames, vals.shape[0], n)
    if isinstance(f, (Atom, NegAtom)):
        t = np.broadcast_to(vals[None, :, names.index(f.name), :], shape)
        return ~t if isinstance(f, NegAtom) else t
    if isinstance(f, And):
        return truth[f.left] & truth[f.right]
    if isinstance(f, Or):
        return truth[f.left] | truth[f.right]
    r = rel.get(f.letter)
    sub = truth[f.sub]
    if r is None:
        return np.full(shape, isinstance(f, Box))
    rr = r[:, None, :, :]
    if isinstance(f, Box):
        return ~np.any(rr & ~sub[:, :, None, :], axis=3)
    return np.any(rr & sub[:, :, None, :], axis=3)


class _Cnf:
    """Clause builder where literals may also be the constants True and False."""

    def __init__(self):
        self.top = 0
        self.clauses: list[list[int]] = []

    def var(self) -> int:
        self.top += 1
        return self.top

    def add(self, lits):
        out = []
        for x in lits:
            if x is True:
                return
            if x is not False:
                out.append(x)
        self.clauses.append(out)

    @staticmethod
    def neg(x):
        return (not x) if isinstance(x, bool) else -x


def _sat(system, target: Formula, pos: list[Letter], n: int):
    from pysat.solvers import Solver

    cnf = _Cnf()
    W = range(n)
    rvar = {a: {(x, y): cnf.var() for x in W for y in W} for a in pos}

    def R(a, x, y):
        if a in rvar:
            return rvar[a][x, y]
        if a.bar() in rvar:
            return rvar[a.bar()][y, x]
        return False

    names = sorted(atoms(target))
    vvar = {(p, x): cnf.var() for p in names for x in W}
    tvar = {}
    for f in sorted(subformulas(target), key=Formula.sort_key):
        for x in W:
            tvar[f, x] = cnf.var()
    neg = _Cnf.neg
    # one-directional encoding is enough in negation normal form
    for (f, x), t in tvar.items():
        if isinstance(f, Atom):
            cnf.add([-t, vvar[f.name, x]])
        elif isinstance(f, NegAtom):
            cnf.add([-t, -vvar[f.name, x]])
        elif isinstance(f, And):
            cnf.add([-t, tvar[f.left, x]])
            cnf.add([-t, tvar[f.right, x]])
        elif isinstance(f, Or):
            cnf.add([-t, tvar[f.left, x], tvar[f.right, x]])
        elif isinstance(f, Box):
            for y in W:
                cnf.add([-t, neg(R(f.letter, x, y)), tvar[f.sub, y]])
        elif isinstance(f, Dia):
            picks = []
            for y in W:
                e = cnf.var()
                cnf.add([-e, R(f.letter, x, y)])
                cnf.add([-e, tvar[f.sub, y]])
                picks.append(e)
            cnf.add([-t] + picks)

    def below(word):
        """Literals forced true whenever the composed relation holds."""
        cur = {(x, y): x == y for x in W for y in W}
        for a in word:
            nxt = {}
            for x in W:
                for y in W:
                    lit = cnf.var()
                    for z in W:
                        cnf.add([neg(cur[x, z]), neg(R(a, z, y)), lit])
                    nxt[x, y] = lit
            cur = nxt
        return cur

    def above(word):
        """Literals that imply the composed relation holds."""
        cur = {(x, y): x == y for x in W for y in W}
        for a in word:
            nxt = {}
            for x in W:
                for y in W:
                    lit = cnf.var()
                    picks = []
                    for z in W:
                        e = cnf.var()
                        cnf.add([-e, cur[x, z]])
                        cnf.add([-e, R(a, z, y)])
                        picks.append(e)
                    cnf.add([-lit] + picks)
                    nxt[x, y] = lit
            cur = nxt
        return cur

    for p in system.sorted_productions():
        lo, hi = below(p.rhs), above(p.lhs)
        for x in W:
            for y in W:
                cnf.add([neg(lo[x, y]), hi[x, y]])
    cnf.add([tvar[target, 0]])  # worlds are interchangeable, so the witness can be w0
    with Solver(name="minisat22", bootstrap_with=cnf.clauses) as s:
        if not s.solve():
            return None
        true = {v for v in s.get_model() if v > 0}
    worlds = [_world(i) for i in W]
    rpos = {a: {(worlds[x], worlds[y]) for (x, y), v in rvar[a].items() if v in true} for a in pos}
    val = {p: {worlds[x] for x in W if vvar[p, x] in true} for p in names}
    return KripkeModel.from_positive(worlds, rpos, val), worlds[0]
