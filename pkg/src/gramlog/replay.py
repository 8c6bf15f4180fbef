"""Independent checker for proof traces of both provers.

The checker rebuilds the sequent from the input formula, re-applies every
recorded step after confirming it is a legal rule instance, and compares the
resulting sequent hash with the recorded one. It shares only the data types
with the provers, never their search code.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError
from .formula import And, Atom, Box, Dia, Formula, NegAtom, Or, nnf, parse_formula, parse_letter
from .grammar import SemiThueSystem, one_step
from .lang import Fsa, tree_transitions
from .sequent import Labeled, NestedSequent


@dataclass
class ReplayReport:
    steps: int = 0
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


class _Bad(Exception):
    pass


def _need(cond, msg):
    if not cond:
        raise _Bad(msg)


def _formula(entry, key="formula") -> Formula:
    try:
        return parse_formula(entry[key])
    except (KeyError, ParseError) as e:
        raise _Bad(f"unreadable formula in {entry.get('step')}: {e}") from None


class _Checker:
    def __init__(self, automaton: Fsa | None = None, system: SemiThueSystem | None = None):
        self.automaton = automaton
        self.system = system
        self.report = ReplayReport()

    def run(self, seq: NestedSequent, trace: list, path: str) -> bool:
        """Replay one branch; True iff it ends in a clash."""
        for n, entry in enumerate(trace):
            where = f"{path}[{n}] {entry.get('step')}"
            try:
                kind = entry["step"]
                if kind == "clash":
                    self._clash(seq, entry)
                    _need(n == len(trace) - 1, "steps recorded after a clash")
                    self._hash(seq, entry)
                    return True
                if kind in ("stable", "exhausted"):
                    self._hash(seq, entry)
                    return False
                if kind == "and":
                    _need(n == len(trace) - 1, "steps recorded after a branching")
                    return self._branch(seq, entry, where)
                self._apply(seq, kind, entry)
                self.report.steps += 1
                self._hash(seq, entry)
            except _Bad as e:
                self.report.problems.append(f"{where}: {e}")
                return False
        return False

    def _hash(self, seq, entry):
        _need(seq.digest() == entry.get("hash"), "sequent hash differs from the recorded one")

    def _node(self, seq, entry, key="node"):
        i = entry.get(key)
        _need(i in seq, f"unknown node {i!r}")
        return i

    def _clash(self, seq, entry):
        i = self._node(seq, entry)
        p = entry.get("atom")
        _need(seq.has(i, Atom(p)) and seq.has(i, NegAtom(p)), f"no clash on {p} at node {i}")

    def _branch(self, seq, entry, where):
        i = self._node(seq, entry)
        f = _formula(entry)
        _need(isinstance(f, And) and seq.has(i, f), f"{f} is not a conjunction at node {i}")
        branches = entry.get("branches", [])
        _need(len(branches) in (1, 2), "a conjunction splits into one or two recorded branches")
        closed = True
        for k, br in enumerate(branches):
            c = _formula(br, "conjunct")
            _need(c == (f.left, f.right)[k], f"branch {k} does not add conjunct {k} of {f}")
            sub = seq.copy()
            sub.add_formulas(i, [c])
            self.report.steps += 1
            _need(sub.digest() == br.get("hash"), f"branch {k} hash differs")
            closed = self.run(sub, br.get("trace", []), f"{where}/{k}") and closed
        return closed and len(branches) == 2

    def _apply(self, seq, kind, entry):
        i = self._node(seq, entry)
        if kind == "or":
            f = _formula(entry)
            _need(isinstance(f, Or) and seq.has(i, f), f"{f} is not a disjunction at node {i}")
            _need(seq.add_formulas(i, [f.left, f.right]), "disjunction step adds nothing")
        elif kind in ("realise", "expand"):
            f = _formula(entry)
            _need(isinstance(f, Box) and seq.has(i, f), f"{f} is not a box at node {i}")
            if kind == "expand":
                _need(seq.is_leaf(i), f"expansion at non-leaf {i}")
            else:
                _need(not seq.is_leaf(i), f"realisation at leaf {i}")
            j = seq.add_child(i, f.letter, [f.sub])
            _need(j == entry.get("child"), f"fresh child is {j}, trace says {entry.get('child')}")
        elif kind in ("init", "final", "down", "up"):
            _need(self.automaton is not None, "automaton step in a grammar trace")
            self._auto(seq, kind, i, entry)
        elif kind == "prop":
            _need(self.system is not None, "grammar step in an automaton trace")
            self._prop(seq, i, entry)
        else:
            raise _Bad(f"unknown step {kind!r}")

    def _auto(self, seq, kind, i, entry):
        A = self.automaton
        f = _formula(entry)
        state = entry.get("state")
        if kind == "init":
            _need(isinstance(f, Dia) and seq.has(i, f), f"{f} is not a diamond at node {i}")
            s0 = A.init_state(f.letter)
            _need(state == s0, f"init state of {f.letter} is {s0}, trace says {state}")
            _need(seq.add_formulas(i, [Labeled(s0, f.sub)]), "init step adds nothing")
            return
        _need(seq.has(i, Labeled(state, f)), f"{state}:{f} not at node {i}")
        if kind == "final":
            _need(state in A.finals, f"{state} is not final")
            _need(seq.add_formulas(i, [f]), "final step adds nothing")
            return
        j = self._node(seq, entry, "target")
        a = parse_letter(entry.get("letter", ""))
        t = entry.get("to_state")
        if kind == "down":
            _need(seq.parent(j) == i and seq.edge_letter(j) == a, f"no {a}-edge from {i} to {j}")
            _need((state, a, t) in A.transitions, f"no transition {state} -{a}-> {t}")
        else:
            _need(seq.parent(i) == j and seq.edge_letter(i) == a, f"no {a}-edge from {j} to {i}")
            _need((state, a.bar(), t) in A.transitions, f"no transition {state} -{a.bar()}-> {t}")
        _need(seq.add_formulas(j, [Labeled(t, f)]), "propagation step adds nothing")

    def _prop(self, seq, i, entry):
        f = _formula(entry)
        _need(isinstance(f, Dia) and seq.has(i, f), f"{f} is not a diamond at node {i}")
        j = self._node(seq, entry, "target")
        w = entry.get("witness", {})
        word = tuple(parse_letter(x) for x in w.get("word", []))
        path = w.get("path", [])
        _need(len(path) == len(word) + 1 and path[0] == i and path[-1] == j,
              "witness path does not run from the diamond's node to the target")
        trans = tree_transitions(seq.edges())
        for k, a in enumerate(word):
            _need((path[k], a, path[k + 1]) in trans, f"no edge {path[k]} -{a}-> {path[k + 1]}")
        forms = [tuple(parse_letter(x) for x in form) for form in w.get("derivation", [])]
        _need(forms and forms[0] == (f.letter,) and forms[-1] == word,
              "derivation does not lead from the diamond's letter to the path word")
        for u, v in zip(forms, forms[1:]):
            _need(one_step(self.system, u, v), "derivation step is not a single rule application")
        _need(seq.add_formulas(j, [f.sub]), "propagation step adds nothing")


def replay(trace: list, formula: Formula, automaton: Fsa | None = None,
           system: SemiThueSystem | None = None) -> tuple[bool, ReplayReport]:
    """Replay ``trace`` from the one-node sequent holding ``nnf(formula)``.

    Returns whether every branch closed, plus the report of problems found.
    """
    checker = _Checker(automaton, system)
    closed = checker.run(NestedSequent([nnf(formula)]), trace, "trace")
    return closed, checker.report


def check_proof(trace: list, formula: Formula, automaton: Fsa | None = None,
                system: SemiThueSystem | None = None) -> ReplayReport:
    """Report for a claimed proof: any problem, or an unclosed branch, is listed."""
    closed, report = replay(trace, formula, automaton, system)
    if report.ok and not closed:
        report.problems.append("some branch does not end in a clash")
    return report
