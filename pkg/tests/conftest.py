import glob
from functools import lru_cache
from pathlib import Path

import pytest
from hypothesis import strategies as st

from gramlog.formula import And, Atom, Box, Dia, Letter, Neg, NegAtom, Or, parse_formula
from gramlog.grammar import Production, SemiThueSystem, close, load_grammar
from gramlog.lang import load_fsa

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

A, A_, B, B_ = Letter("a"), Letter("a", False), Letter("b"), Letter("b", False)
SIGMA = (A, A_, B, B_)


@lru_cache(maxsize=None)
def corpus_formulas():
    out = []
    for line in (CORPUS / "formulas.txt").read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(parse_formula(line))
    return tuple(out)


@lru_cache(maxsize=None)
def corpus_pairs():
    """(name, system, automaton) for every grammar that ships with an automaton."""
    out = []
    for path in sorted(glob.glob(str(CORPUS / "*.fsa.json"))):
        name = Path(path).name[:-len(".fsa.json")]
        out.append((name, load_grammar(CORPUS / f"{name}.thue").system, load_fsa(path)))
    return tuple(out)


def system(*rules: str) -> SemiThueSystem:
    """Closed system from rules written like ``"a -> a a"``."""
    from gramlog.grammar import parse_grammar
    return parse_grammar("\n".join(rules)).system


letters_st = st.sampled_from(SIGMA)
atom_names = st.sampled_from(["p", "q"])


def formulas(max_leaves=8, with_neg=True):
    leaves = st.one_of(atom_names.map(Atom), atom_names.map(NegAtom))

    def extend(children):
        opts = [
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(Box, letters_st, children),
            st.builds(Dia, letters_st, children),
        ]
        if with_neg:
            opts.append(st.builds(Neg, children))
        return st.one_of(*opts)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@st.composite
def cf_systems(draw, max_rules=3, max_rhs=3, letters=(A, B)):
    pool = list(letters) + [x.bar() for x in letters]
    rules = []
    for _ in range(draw(st.integers(0, max_rules))):
        lhs = draw(st.sampled_from(pool))
        rhs = draw(st.lists(st.sampled_from(pool), max_size=max_rhs))
        rules.append(Production((lhs,), tuple(rhs)))
    return close(SemiThueSystem.of(rules, pool))


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion_log(request):
    lines = request.config._acceptance_lines

    def log(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
        lines.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
