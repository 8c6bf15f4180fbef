import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import A, A_, B, B_, SIGMA, corpus_pairs, formulas, system
from gramlog.errors import ModelError
from gramlog.formula import And, Atom, Box, Dia, NegAtom, Or, letters, nnf, parse_formula
from gramlog.grammar import SemiThueSystem
from gramlog.prover_auto import prove1
from gramlog.prover_grammar import prove
from gramlog.semantics import (KripkeModel, brute_force_search, extract_countermodel_auto,
                               extract_countermodel_grammar, frame_satisfies, frame_violations,
                               load_model, model_from_json, satisfies, string_relation,
                               verify_countermodel)
from gramlog.sequent import NestedSequent

p, q = Atom("p"), Atom("q")
EMPTY = SemiThueSystem.of([], SIGMA)


def model(worlds, rel, val):
    return KripkeModel.from_positive(worlds, rel, val)


def test_satisfies_examples():
    m = model(["w"], {}, {"p": ["w"]})
    assert satisfies(m, "w", p)
    assert satisfies(m, "w", Box(A, And(p, NegAtom("p"))))
    assert not satisfies(m, "w", Dia(A, p))
    assert not satisfies(m, "w", q)
    with pytest.raises(ModelError):
        satisfies(m, "v", p)


def test_converse_semantics():
    m = model(["x", "y"], {A: [("x", "y")]}, {"p": ["x"]})
    assert satisfies(m, "y", Dia(A_, p))
    assert satisfies(m, "x", parse_formula("p => [a]<a^->p"))


def test_frame_satisfies_examples():
    chain = model(["x", "y"], {A: [("x", "y")]}, {})
    assert frame_satisfies(chain, EMPTY)
    assert frame_satisfies(chain, system("a -> a a"))
    three = model(["x", "y", "z"], {A: [("x", "y"), ("y", "z")]}, {})
    assert not frame_satisfies(three, system("a -> a a"))
    assert ("x", "z") in {pair for _, pair in frame_violations(three, system("a -> a a"))}
    trans = model(["x", "y", "z"], {A: [("x", "y"), ("y", "z"), ("x", "z")]}, {})
    assert frame_satisfies(trans, system("a -> a a"))


def test_converse_violation_detected():
    m = KripkeModel(("x", "y"), {A: frozenset({("x", "y")})}, {})
    assert m.converse_violations() == [(A, ("x", "y"))]
    assert not frame_satisfies(m, EMPTY)


@st.composite
def models(draw, n_max=3):
    n = draw(st.integers(1, n_max))
    ws = [f"w{i}" for i in range(n)]
    pairs = st.lists(st.tuples(st.sampled_from(ws), st.sampled_from(ws)), max_size=5)
    rel = {a: draw(pairs) for a in (A, B)}
    val = {x: draw(st.lists(st.sampled_from(ws), max_size=n)) for x in ("p", "q")}
    return model(ws, rel, val)


@given(models(), st.lists(st.sampled_from(SIGMA), max_size=3),
       st.lists(st.sampled_from(SIGMA), max_size=3))
def test_string_relation_composes(m, u, v):
    ru, rv = string_relation(m, u), string_relation(m, v)
    composed = {(x, z) for x, y in ru for y2, z in rv if y == y2}
    assert string_relation(m, u + v) == composed
    assert string_relation(m, []) == {(w, w) for w in m.worlds}


@given(models(), formulas())
def test_nnf_preserves_truth(m, f):
    for w in m.worlds:
        assert satisfies(m, w, f) == satisfies(m, w, nnf(f))


def test_model_json_round_trip(tmp_path):
    m = model(["x", "y"], {A: [("x", "y")], B_: [("y", "y")]}, {"p": ["y"]})
    data = m.to_json()
    assert set(data["rel"]) == {"a", "b"}
    assert model_from_json(json.loads(json.dumps(data))) == m
    path = tmp_path / "m.json"
    path.write_text(json.dumps(data))
    assert load_model(path) == m


def test_model_json_rejects_broken_converse():
    data = {"worlds": ["x", "y"], "rel": {"a": [["x", "y"]], "a^-": [["x", "y"]]}, "val": {}}
    with pytest.raises(ModelError) as e:
        model_from_json(data)
    assert "(x, y)" in str(e.value)
    consistent = {"worlds": ["x", "y"], "rel": {"a": [["x", "y"]], "a^-": [["y", "x"]]}, "val": {}}
    assert model_from_json(consistent).relation(A_) == {("y", "x")}


def test_model_json_rejects_unknown_world():
    with pytest.raises(ModelError):
        model_from_json({"worlds": ["x"], "rel": {"a": [["x", "z"]]}, "val": {}})


def test_extract_auto_single_node():
    fsa = corpus_pairs()[0][2]
    seq = NestedSequent([NegAtom("p")])
    cm = extract_countermodel_auto(seq, fsa)
    assert cm.model.worlds == ("w0",)
    assert cm.model.val["p"] == {"w0"}
    assert not satisfies(cm.model, cm.world, NegAtom("p"))


def test_extract_auto_two_worlds():
    empty = next(a for n, _, a in corpus_pairs() if n == "empty")
    f = parse_formula("<a>p => p")
    v = prove1(empty, f)
    cm = extract_countermodel_auto(v.sequent, empty, v.loop_map)
    m = cm.model
    assert len(m.worlds) == 2
    (x, y), = m.relation(A)
    assert x == cm.world and m.val["p"] == {y}
    assert verify_countermodel(m, cm.world, f, EMPTY) == []


def test_extract_auto_loop_stays_finite():
    name, s, fsa = next(r for r in corpus_pairs() if r[0] == "k4")
    f = parse_formula("<a>[a]p | [a]p")
    v = prove1(fsa, f)
    assert v.loop_map
    cm = extract_countermodel_auto(v.sequent, fsa, v.loop_map)
    assert len(cm.model.worlds) == len(v.sequent) - len(v.loop_map)
    assert verify_countermodel(cm.model, cm.world, f, s) == []


def test_extract_auto_requires_stability():
    fsa = corpus_pairs()[0][2]
    with pytest.raises(ValueError):
        extract_countermodel_auto(NestedSequent([Or(p, q)]), fsa)


def test_extract_grammar_single_node():
    seq = NestedSequent([NegAtom("p"), NegAtom("q")])
    from gramlog.prover_grammar import StabilityWitness
    cm = extract_countermodel_grammar(seq, StabilityWitness({}), EMPTY)
    assert cm.model.worlds == ("w0",)
    assert not satisfies(cm.model, "w0", NegAtom("p"))
    assert not satisfies(cm.model, "w0", NegAtom("q"))


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(formulas(max_leaves=6))
def test_extracted_models_falsify_every_node_formula(f):
    for name, s, fsa in corpus_pairs()[:8]:
        v = prove(s, f)
        if v.outcome != "refuted":
            continue
        cm = extract_countermodel_grammar(v.sequent, v.witness, s)
        assert frame_satisfies(cm.model, s)
        for i in v.sequent.node_ids():
            for g in v.sequent.formulas(i):
                assert not satisfies(cm.model, cm.nodes[i], g)


def test_brute_force_examples():
    assert brute_force_search(EMPTY, parse_formula("p | ~p"), 2) is None
    found = brute_force_search(EMPTY, parse_formula("p => [a]p"), 2)
    assert found is not None and len(found.model.worlds) == 2
    assert brute_force_search(system("a -> a a"), parse_formula("[a]p => [a][a]p"), 3) is None


def test_verify_countermodel_flags_non_models():
    m = model(["w"], {}, {"p": ["w"]})
    assert verify_countermodel(m, "w", p) == ["p holds at w"]
    assert verify_countermodel(m, "w", q) == []


single_letter = st.recursive(
    st.sampled_from([p, q, NegAtom("p"), NegAtom("q")]),
    lambda c: st.one_of(st.builds(And, c, c), st.builds(Or, c, c),
                        st.builds(Box, st.sampled_from([A, A_]), c),
                        st.builds(Dia, st.sampled_from([A, A_]), c)),
    max_leaves=6)


@settings(max_examples=60, deadline=None)
@given(single_letter, st.sampled_from(["", "a -> a a", "a -> eps", "a -> a^-", "a -> a a^- a"]))
def test_search_engines_agree(f, rules):
    s = system(rules) if rules else SemiThueSystem.of([], [A])
    by_enum = brute_force_search(s, f, 3, engine="enumerate", max_frame_bits=9)
    by_sat = brute_force_search(s, f, 3, engine="sat")
    assert (by_enum is None) == (by_sat is None)
    if by_enum is not None:
        assert len(by_enum.model.worlds) == len(by_sat.model.worlds)


def test_enumerate_engine_guards_size():
    with pytest.raises(ValueError):
        brute_force_search(EMPTY, parse_formula("[a]p | <a>~p | [b]q"), 4,
                           engine="enumerate")
