import pytest
from hypothesis import given, settings

from conftest import A, A_, B, B_, formulas
from gramlog.errors import ParseError
from gramlog.formula import (And, Atom, Box, Dia, Letter, Neg, NegAtom, Or, atoms, bar_letter,
                             bar_string, is_nnf, letters, lneg, nnf, parse_formula, parse_letter,
                             subformulas)

p, q = Atom("p"), Atom("q")


def test_bar_letter():
    assert bar_letter(A) == A_
    assert bar_letter(A_) == A
    assert bar_letter(bar_letter(B)) == B
    assert Letter("a", True) == A and Letter("a", True) is not Letter("a", False)


def test_bar_string():
    assert bar_string([A, B]) == (B_, A_)
    assert bar_string([]) == ()
    c = Letter("c")
    assert bar_string(bar_string([A, B_, c])) == (A, B_, c)


def test_nnf_examples():
    assert nnf(Neg(And(p, q))) == Or(NegAtom("p"), NegAtom("q"))
    assert nnf(Neg(Box(A, p))) == Dia(A, NegAtom("p"))
    assert nnf(Neg(Neg(p))) == p
    assert lneg(Dia(B_, q)) == Box(B_, NegAtom("q"))


def test_subformulas_examples():
    assert subformulas(p) == {p}
    assert subformulas(Or(p, q)) == {Or(p, q), p, q}
    f = Dia(A, And(p, q))
    assert subformulas(f) == {f, And(p, q), p, q}


def test_parser_precedence():
    assert parse_formula("p | q & r") == Or(p, And(q, Atom("r")))
    assert parse_formula("p => q => r") == Or(Neg(p), Or(Neg(q), Atom("r")))
    assert parse_formula("[a]p & <b^->q") == And(Box(A, p), Dia(B_, q))
    assert parse_formula("~[a]p") == Neg(Box(A, p))
    assert parse_formula("~p") == NegAtom("p")
    assert parse_formula("(p | q) & r") == And(Or(p, q), Atom("r"))
    assert parse_formula("p -> q") == parse_formula("p => q")


def test_parse_letter():
    assert parse_letter("a^-") == A_
    assert str(A_) == "a^-"
    with pytest.raises(ParseError):
        parse_letter("a^")


@pytest.mark.parametrize("text", ["p &", "[a p", "<>p", "p q", "(p", "p | | q", ""])
def test_parse_errors_have_position(text):
    with pytest.raises(ParseError) as e:
        parse_formula(text)
    assert e.value.column is not None


def test_atoms_and_letters():
    f = parse_formula("[a]p => <b^->q")
    assert atoms(f) == {"p", "q"}
    assert letters(f) == {A, B_}


@given(formulas(with_neg=False))
def test_printer_round_trip(f):
    assert parse_formula(str(f)) == f


@given(formulas())
def test_printer_round_trip_up_to_nnf(f):
    # ~p prints the same whether it is a negated atom or a negation node
    assert nnf(parse_formula(str(f))) == nnf(f)


@given(formulas())
def test_nnf_is_nnf_and_idempotent(f):
    g = nnf(f)
    assert is_nnf(g)
    assert nnf(g) == g


@given(formulas(with_neg=False))
def test_lneg_involution(f):
    assert lneg(lneg(f)) == f


@given(formulas())
def test_subformula_count_bounded_by_size(f):
    subs = subformulas(f)
    assert f in subs
    assert len(subs) <= f.size
    for g in subs:
        if g != f:
            assert g.size < f.size
