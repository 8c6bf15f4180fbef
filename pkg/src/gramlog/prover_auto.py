"""Decision procedure driven by a user-supplied automaton for the axiom languages.

Diamond formulas are propagated through the tree as state-labelled copies:
``<a>A`` seeds ``init_a : A``, labels move along edges following automaton
transitions, and a label in a final state releases ``A`` itself. Search stops
on an atomic clash (valid) or on a stable sequent (refuted).

Scan order is fixed: lowest node id first, formulas by size then text.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .errors import BudgetExceeded, InternalError, MissingInitialStateError
from .formula import And, Box, Dia, Formula, Or, letters, lneg, nnf, subformulas
from .lang import Fsa
from .sequent import Labeled, NestedSequent

PROVED = "proved"
REFUTED = "refuted"


# --- local conditions -----------------------------------------------------

def is_saturated(seq: NestedSequent, i) -> bool:
    fs = seq.formulas(i)
    for f in fs:
        if lneg(f) in fs:
            return False
        if isinstance(f, Or) and not (f.left in fs and f.right in fs):
            return False
        if isinstance(f, And) and not (f.left in fs or f.right in fs):
            return False
    return True


def unrealised_boxes(seq: NestedSequent, i) -> list[Box]:
    kids = seq.children(i)
    out = []
    for f in seq.sorted_formulas(i):
        if isinstance(f, Box) and not any(b == f.letter and seq.has(j, f.sub) for b, j in kids):
            out.append(f)
    return out


def is_realised(seq: NestedSequent, i) -> bool:
    return not unrealised_boxes(seq, i)


def loop_ancestor(seq: NestedSequent, i, with_labels: bool = True):
    """Closest proper ancestor with the same content, or None."""
    c = seq.content(i, with_labels)
    for j in seq.ancestors(i):
        if seq.content(j, with_labels) == c:
            return j
    return None


# --- propagation ----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """First failing propagation clause: 1 init, 2 final, 3 down an edge, 4 up an edge."""
    clause: int
    node: int
    item: object  # the diamond formula (clause 1) or the labelled formula
    target: int
    add: object  # what has to be added at ``target``
    letter: object = None
    to_state: Optional[str] = None


def a_propagation_violation(seq: NestedSequent, automaton: Fsa, nodes=None) -> Violation | None:
    succ = automaton.successors()
    for i in (seq.node_ids() if nodes is None else nodes):
        for f in seq.sorted_formulas(i):
            if isinstance(f, Dia):
                lab = Labeled(automaton.init_state(f.letter), f.sub)
                if not seq.has(i, lab):
                    return Violation(1, i, f, i, lab)
        labs = seq.sorted_labeled(i)
        for x in labs:
            if x.state in automaton.finals and not seq.has(i, x.formula):
                return Violation(2, i, x, i, x.formula)
        for x in labs:
            for a, j in seq.children(i):
                for t in succ.get((x.state, a), ()):
                    lab = Labeled(t, x.formula)
                    if not seq.has(j, lab):
                        return Violation(3, i, x, j, lab, a, t)
        parent = seq.parent(i)
        if parent is not None:
            a = seq.edge_letter(i)
            for x in labs:
                for t in succ.get((x.state, a.bar()), ()):
                    lab = Labeled(t, x.formula)
                    if not seq.has(parent, lab):
                        return Violation(4, i, x, parent, lab, a, t)
    return None


def is_A_propagated(seq: NestedSequent, automaton: Fsa) -> bool:
    return a_propagation_violation(seq, automaton) is None


def is_A_stable(seq: NestedSequent, automaton: Fsa) -> tuple[bool, dict]:
    """Stability check; on success also returns the loop-node map (leaf -> ancestor)."""
    if not all(is_saturated(seq, i) for i in seq.node_ids()):
        return False, {}
    if not is_A_propagated(seq, automaton):
        return False, {}
    if not all(is_realised(seq, i) for i in seq.internal_nodes()):
        return False, {}
    loops = {}
    for i in seq.leaves():
        if is_realised(seq, i):
            continue
        j = loop_ancestor(seq, i)
        if j is None:
            return False, {}
        loops[i] = j
    return True, loops


# --- search ---------------------------------------------------------------

@dataclass
class AutoVerdict:
    outcome: str
    formula: Formula
    trace: list
    sequent: NestedSequent | None = None
    loop_map: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def proved(self) -> bool:
        return self.outcome == PROVED

    def to_json(self) -> dict:
        out = {"outcome": self.outcome, "formula": str(self.formula), "trace": self.trace,
               "stats": self.stats}
        if self.sequent is not None:
            out["sequent"] = self.sequent.to_json()
            out["loop_map"] = {str(k): v for k, v in sorted(self.loop_map.items())}
        return out


class _Run:
    def __init__(self, automaton: Fsa, bound: int, deadline: float | None):
        self.automaton = automaton
        self.succ = automaton.successors()
        self.bound = bound
        self.deadline = deadline
        self.steps = 0
        self.max_content = 0
        self.max_nodes = 0

    def _grow(self, seq: NestedSequent, i, items) -> None:
        if not seq.add_formulas(i, items):
            raise InternalError(f"step at node {i} added nothing")
        self._after(seq, i)

    def _after(self, seq, i):
        self.steps += 1
        size = seq.content_size(i)
        self.max_content = max(self.max_content, size)
        self.max_nodes = max(self.max_nodes, len(seq))
        if size > self.bound:
            raise InternalError(f"node {i} holds {size} items, above the bound {self.bound}")
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceeded("time budget exhausted")

    def next_step(self, seq: NestedSequent):
        nodes = seq.node_ids()
        for i in nodes:
            for f in seq.sorted_formulas(i):
                if isinstance(f, Or) and not (seq.has(i, f.left) and seq.has(i, f.right)):
                    return ("or", i, f)
        for i in nodes:
            for f in seq.sorted_formulas(i):
                if isinstance(f, And) and not seq.has(i, f.left) and not seq.has(i, f.right):
                    return ("and", i, f)
        v = a_propagation_violation(seq, self.automaton, nodes)
        if v is not None:
            return ("prop", v.node, v)
        for i in seq.internal_nodes():
            boxes = unrealised_boxes(seq, i)
            if boxes:
                return ("realise", i, boxes[0])
        return None

    def search(self, seq: NestedSequent, trace: list):
        clash = seq.find_clash()
        while True:
            if clash is not None:
                trace.append({"step": "clash", "node": clash[0], "atom": clash[1],
                              "hash": seq.digest()})
                return PROVED, None, None
            step = self.next_step(seq)
            if step is None:
                stable, loops = is_A_stable(seq, self.automaton)
                if stable:
                    trace.append({"step": "stable", "hash": seq.digest()})
                    return REFUTED, seq, loops
                step = self._leaf_expansion(seq)
                if step is None:
                    raise InternalError("no rule applies to an unstable sequent")
            kind, i, obj = step
            if kind == "and":
                return self._branch(seq, i, obj, trace)
            touched = self._apply(seq, kind, i, obj, trace)
            clash = seq.find_clash([touched])

    def _leaf_expansion(self, seq):
        for i in seq.leaves():
            boxes = unrealised_boxes(seq, i)
            if boxes and loop_ancestor(seq, i) is None:
                return ("expand", i, boxes[0])
        return None

    def _apply(self, seq, kind, i, obj, trace):
        if kind == "or":
            self._grow(seq, i, [obj.left, obj.right])
            trace.append({"step": "or", "node": i, "formula": str(obj), "hash": seq.digest()})
            return i
        if kind in ("realise", "expand"):
            j = seq.add_child(i, obj.letter, [obj.sub])
            self._after(seq, j)
            trace.append({"step": kind, "node": i, "formula": str(obj), "child": j,
                          "hash": seq.digest()})
            return j
        v: Violation = obj
        self._grow(seq, v.target, [v.add])
        entry = {"step": ("init", "final", "down", "up")[v.clause - 1], "node": v.node}
        if v.clause == 1:
            entry.update(formula=str(v.item), state=v.add.state)
        elif v.clause == 2:
            entry.update(formula=str(v.item.formula), state=v.item.state)
        else:
            entry.update(formula=str(v.item.formula), state=v.item.state, target=v.target,
                         letter=str(v.letter), to_state=v.to_state)
        entry["hash"] = seq.digest()
        trace.append(entry)
        return v.target

    def _branch(self, seq, i, f: And, trace):
        entry = {"step": "and", "node": i, "formula": str(f), "branches": []}
        trace.append(entry)
        for conj in (f.left, f.right):
            sub = seq.copy()
            self._grow(sub, i, [conj])
            branch = {"conjunct": str(conj), "hash": sub.digest(), "trace": []}
            entry["branches"].append(branch)
            outcome, stable, loops = self.search(sub, branch["trace"])
            if outcome == REFUTED:
                return outcome, stable, loops
        return PROVED, None, None


def node_bound(automaton: Fsa, formula: Formula) -> int:
    """Most items a node can hold: every subformula, bare or with any state."""
    return (len(automaton.states) + 1) * len(subformulas(formula))


def prove1(automaton: Fsa, formula: Formula, timeout: float | None = None) -> AutoVerdict:
    """Decide validity of ``formula`` in the logic whose axiom languages ``automaton`` accepts."""
    f = nnf(formula)
    missing = sorted(a for a in letters(f) if not automaton.init_of or a not in automaton.init_of)
    if missing:
        raise MissingInitialStateError(
            "automaton has no initial state for " + ", ".join(map(str, missing)))
    deadline = None if timeout is None else time.monotonic() + timeout
    run = _Run(automaton, node_bound(automaton, f), deadline)
    trace: list = []
    started = time.monotonic()
    outcome, stable, loops = run.search(NestedSequent([f]), trace)
    stats = {"steps": run.steps, "max_node_items": run.max_content, "node_bound": run.bound,
             "max_nodes": run.max_nodes, "seconds": round(time.monotonic() - started, 4)}
    return AutoVerdict(outcome, f, trace, stable, loops or {}, stats)
