import itertools

import pytest
from hypothesis import given, settings

from conftest import A, A_, B, B_, cf_systems, system
from gramlog.errors import EnumerationCapExceeded, NotContextFreeError, ParseError
from gramlog.formula import bar_string
from gramlog.grammar import (Nonterminal, Production, SemiThueSystem, cfg_for, close,
                             derives_bounded, dump_grammar, enumerate_language, language_members,
                             one_step, parse_grammar, require_context_free)
from gramlog.lang import cfg_member


def test_close_examples():
    s = SemiThueSystem.of([Production((A,), (A, A))])
    assert close(s).productions == {Production((A,), (A, A)), Production((A_,), (A_, A_))}
    s = SemiThueSystem.of([Production((A,), (A_,))])
    assert close(s).productions == {Production((A,), (A_,)), Production((A_,), (A,))}


@given(cf_systems())
def test_close_is_least_closed_superset(s):
    c = close(s)
    assert c.is_closed
    assert s.productions <= c.productions
    assert close(c) == c
    assert all(p in s.productions or p.bar() in s.productions for p in c.productions)


def test_derives_bounded():
    k4 = system("a -> a a")
    assert derives_bounded(k4, (A,), (A,), 0)
    assert derives_bounded(k4, (A,), (A, A, A), 2)
    assert not derives_bounded(k4, (A,), (A, A, A), 1)
    assert not derives_bounded(SemiThueSystem.of([], [A, B]), (A,), (B,), 5)
    with pytest.raises(ValueError):
        derives_bounded(k4, (A,), (A,), -1)


def test_one_step():
    s = system("a -> b a")
    assert one_step(s, (A, A), (B, A, A))
    assert one_step(s, (A, A), (A, B, A))
    assert not one_step(s, (A,), (A,))


def test_cfg_for_transcription():
    g = cfg_for(system("a -> a a"), A)
    na = Nonterminal("N[a]")
    assert g.start == na
    bodies = {body for lhs, body in g.rules if lhs == na}
    assert bodies == {(na, na), (A,)}
    assert cfg_member(g, (A, A, A))
    assert not cfg_member(g, (A_,))


def test_cfg_for_keeps_erasing_rules():
    g = cfg_for(system("a -> eps"), A)
    assert (Nonterminal("N[a]"), ()) in g.rules
    assert cfg_member(g, ())


def test_cfg_for_rejects_non_context_free():
    s = SemiThueSystem.of([Production((A, B), (A,))])
    with pytest.raises(NotContextFreeError):
        cfg_for(s, A)


def test_enumerate_language_examples():
    assert enumerate_language(SemiThueSystem.of([], [A]), A, 3) == {(A,)}
    assert enumerate_language(system("a -> a a"), A, 3) == {(A,), (A, A), (A, A, A)}
    assert enumerate_language(system("a -> a^-"), A, 1) == {(A,), (A_,)}
    assert enumerate_language(system("a -> eps"), A, 2) == {(A,), ()}
    assert enumerate_language(system("a -> eps", "a -> a a"), A, 2) == {(), (A,), (A, A)}


def test_enumerate_language_cap():
    # erasing and not context-free: no length pruning, infinitely many forms
    s = SemiThueSystem.of([Production((A,), (A, A)), Production((A, A, A), ())])
    with pytest.raises(EnumerationCapExceeded):
        enumerate_language(s, A, 2, max_forms=50)


def _brute_words(maxlen, pool=(A, A_, B, B_)):
    for n in range(maxlen + 1):
        yield from itertools.product(pool, repeat=n)


@settings(max_examples=40, deadline=None)
@given(cf_systems(max_rules=3, max_rhs=2))
def test_closure_symmetry(s):
    for a in (A, B):
        left = enumerate_language(s, a, 5)
        right = enumerate_language(s, a.bar(), 5)
        assert {bar_string(w) for w in left} == right


@settings(max_examples=25, deadline=None)
@given(cf_systems(max_rules=3, max_rhs=2))
def test_cfg_membership_matches_enumeration(s):
    lang = enumerate_language(s, A, 5)
    g = cfg_for(s, A)
    for w in _brute_words(4, (A, A_, B)):
        assert cfg_member(g, w) == (w in lang)


@settings(max_examples=40, deadline=None)
@given(cf_systems())
def test_language_members_matches_enumeration(s):
    words = list(_brute_words(3))
    assert language_members(s, A, words) == enumerate_language(s, A, 3)


def test_parse_grammar_file_format():
    loaded = parse_grammar("# comment\na -> a a   # trailing\n\na^- -> eps\n")
    assert Production((A,), (A, A)) in loaded.system.productions
    assert Production((A_,), ()) in loaded.system.productions
    assert set(loaded.added) == {Production((A_,), (A_, A_)), Production((A,), ())}
    assert parse_grammar(dump_grammar(loaded.system)).system == loaded.system
    assert parse_grammar("a -> a^-").added == (Production((A_,), (A,)),)


@pytest.mark.parametrize("text,line", [("a -> b\nb c", 2), ("a -> \n", 1), ("-> a", 1),
                                       ("a -> b -> c", 1), ("a -> eps b", 1), ("a -> b^x", 1)])
def test_parse_grammar_errors(text, line):
    with pytest.raises(ParseError) as e:
        parse_grammar(text, source="g.thue")
    assert e.value.line == line
    assert str(e.value).startswith("g.thue:")


def test_non_context_free_accepted_as_data():
    s = parse_grammar("a b -> a").system
    assert not s.context_free and s.is_closed
    with pytest.raises(NotContextFreeError):
        require_context_free(s)
