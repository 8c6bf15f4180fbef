from hypothesis import given, strategies as st
import pytest

from conftest import A, B, B_, SIGMA, formulas
from gramlog.formula import Atom, NegAtom, parse_formula
from gramlog.sequent import Labeled, NestedSequent, UnknownNode

p, q, r = Atom("p"), Atom("q"), Atom("r")


def test_add_child_and_queries():
    seq = NestedSequent([p])
    j = seq.add_child(0, A, [q])
    assert j != 0 and len(seq) == 2
    assert seq.children(0) == [(A, j)]
    assert seq.parent(j) == 0 and seq.edge_letter(j) == A
    assert seq.height(0) == 0 and seq.height(j) == 1
    assert seq.ancestors(0) == [] and seq.ancestors(j) == [0]
    assert seq.leaves() == [j] and seq.internal_nodes() == [0]
    k = seq.add_child(j, B, [r])
    assert seq.ancestors(k) == [j, 0]
    assert seq.max_height() == 2


def test_fresh_ids_are_unique():
    seq = NestedSequent()
    ids = {seq.add_child(0, A) for _ in range(5)}
    assert len(ids) == 5 and 0 not in ids


def test_unknown_node():
    seq = NestedSequent()
    with pytest.raises(UnknownNode):
        seq.add_child(3, A)
    with pytest.raises(UnknownNode):
        seq.formulas(3)


def test_clash_detection():
    seq = NestedSequent([p, NegAtom("p")])
    assert seq.find_clash() == (0, "p")
    assert NestedSequent([p, NegAtom("q")]).find_clash() is None


def test_add_formulas_reports_growth():
    seq = NestedSequent([p])
    rev = seq.revision
    assert not seq.add_formulas(0, [p])
    assert seq.revision == rev
    assert seq.add_formulas(0, [Labeled("s", q)])
    assert seq.revision == rev + 1
    assert seq.has(0, Labeled("s", q)) and not seq.has(0, q)


def test_content_with_and_without_labels():
    seq = NestedSequent([p])
    j = seq.add_child(0, A, [p])
    assert seq.content(0) == seq.content(j)
    seq.add_formulas(j, [Labeled("s", p)])
    assert seq.content(0) != seq.content(j)
    assert seq.content(0, with_labels=False) == seq.content(j, with_labels=False)


def test_render():
    seq = NestedSequent([p, q])
    j = seq.add_child(0, A, [r])
    seq.add_child(j, B_, [Atom("s")])
    assert seq.render() == "p, q, <a>[ r, <b^->[ s ] ]"


def test_copy_is_independent():
    seq = NestedSequent([p])
    c = seq.copy()
    c.add_child(0, A, [q])
    c.add_formulas(0, [q])
    assert len(seq) == 1 and seq.formulas(0) == {p}


def test_json_round_trip():
    seq = NestedSequent([parse_formula("[a]p | <b>q")])
    j = seq.add_child(0, A, [p, Labeled("s1", q)])
    seq.add_child(j, B_, [NegAtom("q")])
    again = NestedSequent.from_json(seq.to_json())
    assert again.to_json() == seq.to_json()
    assert again.digest() == seq.digest()
    assert again.add_child(0, A) == 3


ops = st.lists(st.one_of(
    st.tuples(st.just("child"), st.integers(0, 50), st.sampled_from(SIGMA), formulas(max_leaves=3)),
    st.tuples(st.just("add"), st.integers(0, 50), formulas(max_leaves=3)),
), max_size=25)


@given(ops)
def test_random_operations_keep_tree_invariants(steps):
    seq = NestedSequent()
    seen = {0}
    for step in steps:
        nodes = seq.node_ids()
        i = nodes[step[1] % len(nodes)]
        before = {k: seq.content(k) for k in nodes}
        if step[0] == "child":
            j = seq.add_child(i, step[2], [step[3]])
            assert j not in seen
            seen.add(j)
        else:
            seq.add_formulas(i, [step[2]])
        for k, c in before.items():
            assert c[0] <= seq.content(k)[0] and c[1] <= seq.content(k)[1]
    assert sorted(seen) == seq.node_ids()
    for k in seq.node_ids():
        if k == seq.root:
            assert seq.parent(k) is None
        else:
            assert k in [c for _, c in seq.children(seq.parent(k))]
            assert seq.root in seq.ancestors(k)
        assert len(set(seq.ancestors(k))) == seq.height(k)
