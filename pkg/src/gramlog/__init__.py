"""Decision procedures for grammar logics with converse, via deep nested sequents."""
from .formula import Letter, nnf, parse_formula
from .grammar import SemiThueSystem, close, load_grammar, parse_grammar
from .lang import Fsa, check_fsa_matches_grammar, intersection_nonempty, load_fsa
from .prover_auto import prove1
from .prover_grammar import prove, prove2
from .semantics import KripkeModel, brute_force_search, satisfies

__all__ = [
    "Letter", "nnf", "parse_formula", "SemiThueSystem", "close", "load_grammar",
    "parse_grammar", "Fsa", "check_fsa_matches_grammar", "intersection_nonempty", "load_fsa",
    "prove1", "prove", "prove2", "KripkeModel", "brute_force_search", "satisfies",
]
__version__ = "0.1.0"
