"""Grammar-based proof search: no automaton, diamonds propagate along any tree
path whose label word is derivable from the diamond's letter.

``prove2`` explores sequents of bounded height and may answer "exhausted";
``prove`` deepens the bound until a definite answer. For regular systems the
loop terminates; for other context-free systems it is only a semi-decision
procedure, so callers can cap the height and the wall-clock time.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .errors import BudgetExceeded, InternalError, LambdaSearchCapExceeded
from .formula import And, Dia, Formula, Or, letters, lneg, nnf
from .grammar import SemiThueSystem, grammar_for, nonterminal_for, require_context_free
from .lang import Reachability, ReachabilityCache, tree_transitions
from .prover_auto import is_saturated, unrealised_boxes
from .sequent import NestedSequent

PROVED = "proved"
REFUTED = "refuted"
EXHAUSTED = "exhausted"
BUDGET = "budget"

DEFAULT_LAMBDA_CAP = 100_000


@dataclass(frozen=True)
class PropagationGap:
    """``<a>A`` at ``node`` reaches ``target`` but ``A`` is missing there."""
    node: int
    formula: Dia
    target: int


@dataclass
class StabilityWitness:
    lambda_map: dict  # unrealised leaf -> ancestor standing in for it

    def to_json(self):
        return {str(k): v for k, v in sorted(self.lambda_map.items())}


def _cache_for(system: SemiThueSystem, seq: NestedSequent) -> ReachabilityCache:
    require_context_free(system)
    lets = set()
    for i in seq.node_ids():
        for f in seq.formulas(i):
            lets |= letters(f)
    lets |= {a for _, a, _ in seq.edges()}
    return ReachabilityCache(grammar_for(system, lets))


def _reach(seq: NestedSequent, cache: ReachabilityCache, assignment=None) -> Reachability:
    nodes = seq.node_ids()
    edges = seq.edges()
    if assignment:
        f = lambda s: assignment.get(s, s)  # noqa: E731
        return cache.get({f(s) for s in nodes}, tree_transitions((f(x), a, f(y)) for x, a, y in edges))
    return cache.get(nodes, tree_transitions(edges))


def _gaps(seq: NestedSequent, reach: Reachability, assignment=None):
    """Propagation failures against ``reach``, scanning nodes then formulas then targets."""
    amap = assignment or {}
    nodes = seq.node_ids()
    for i in nodes:
        src = amap.get(i, i)
        for f in seq.sorted_formulas(i):
            if not isinstance(f, Dia):
                continue
            hit = set(reach.targets(src, nonterminal_for(f.letter)))
            if not hit:
                continue
            for j in nodes:
                if amap.get(j, j) in hit and not seq.has(j, f.sub):
                    yield PropagationGap(i, f, j)


def s_propagation_gap(seq: NestedSequent, system: SemiThueSystem,
                      cache: ReachabilityCache | None = None) -> PropagationGap | None:
    cache = cache or _cache_for(system, seq)
    return next(_gaps(seq, _reach(seq, cache)), None)


def is_S_propagated(seq: NestedSequent, system: SemiThueSystem,
                    cache: ReachabilityCache | None = None) -> bool:
    return s_propagation_gap(seq, system, cache) is None


def unrealised_leaves(seq: NestedSequent) -> list[int]:
    return [i for i in seq.leaves() if unrealised_boxes(seq, i)]


def lambda_candidates(seq: NestedSequent) -> dict | None:
    """Ancestors with equal (unlabelled) content for each unrealised leaf, closest first."""
    out = {}
    for x in unrealised_leaves(seq):
        c = seq.content(x, with_labels=False)
        cands = [j for j in seq.ancestors(x) if seq.content(j, with_labels=False) == c]
        if not cands:
            return None
        out[x] = cands
    return out


def find_lambda(seq: NestedSequent, cache: ReachabilityCache,
                cap: int = DEFAULT_LAMBDA_CAP) -> StabilityWitness | None:
    """Search loop-node assignments, closest ancestors first.

    An assignment works when the sequent stays propagated for the automaton
    in which every unrealised leaf is merged into its assigned ancestor.
    """
    cands = lambda_candidates(seq)
    if cands is None:
        return None
    leaves = sorted(cands)
    for count, choice in enumerate(itertools.product(*(cands[x] for x in leaves))):
        if count >= cap:
            raise LambdaSearchCapExceeded(f"tried {cap} loop-node assignments")
        lam = dict(zip(leaves, choice))
        if next(_gaps(seq, _reach(seq, cache, lam), lam), None) is None:
            return StabilityWitness(lam)
    return None


def _locally_stable(seq: NestedSequent, cache: ReachabilityCache) -> bool:
    if not all(is_saturated(seq, i) for i in seq.node_ids()):
        return False
    if next(_gaps(seq, _reach(seq, cache)), None) is not None:
        return False
    return all(not unrealised_boxes(seq, i) for i in seq.internal_nodes())


def is_S_stable(seq: NestedSequent, system: SemiThueSystem, cap: int = DEFAULT_LAMBDA_CAP,
                cache: ReachabilityCache | None = None) -> StabilityWitness | None:
    cache = cache or _cache_for(system, seq)
    if not _locally_stable(seq, cache):
        return None
    return find_lambda(seq, cache, cap)


def check_stability_witness(seq: NestedSequent, system: SemiThueSystem,
                            witness: StabilityWitness) -> list[str]:
    """Re-check every stability clause for a given assignment; returns problems found."""
    problems = []
    cache = _cache_for(system, seq)
    for i in seq.node_ids():
        if not is_saturated(seq, i):
            problems.append(f"node {i} is not saturated")
    gap = next(_gaps(seq, _reach(seq, cache)), None)
    if gap is not None:
        problems.append(f"{gap.formula} at {gap.node} not propagated to {gap.target}")
    for i in seq.internal_nodes():
        if unrealised_boxes(seq, i):
            problems.append(f"internal node {i} is not realised")
    lam = witness.lambda_map
    leaves = set(unrealised_leaves(seq))
    if set(lam) != leaves:
        problems.append(f"assignment covers {sorted(lam)} but unrealised leaves are {sorted(leaves)}")
    for x, y in lam.items():
        if x not in seq or y not in seq.ancestors(x):
            problems.append(f"{y} is not an ancestor of {x}")
        elif seq.content(x, with_labels=False) != seq.content(y, with_labels=False):
            problems.append(f"contents of {x} and {y} differ")
    if not problems:
        gap = next(_gaps(seq, _reach(seq, cache, lam), lam), None)
        if gap is not None:
            problems.append(
                f"with leaves merged, {gap.formula} at {gap.node} reaches {gap.target} unpropagated")
    return problems


# --- search ---------------------------------------------------------------

@dataclass
class GrammarVerdict:
    outcome: str
    formula: Formula | None
    trace: list
    sequent: NestedSequent | None = None
    witness: StabilityWitness | None = None
    k: int | None = None
    stats: dict = field(default_factory=dict)
    reason: str | None = None

    @property
    def proved(self) -> bool:
        return self.outcome == PROVED

    def to_json(self) -> dict:
        out = {"outcome": self.outcome,
               "formula": None if self.formula is None else str(self.formula),
               "k": self.k, "trace": self.trace, "stats": self.stats}
        if self.reason:
            out["reason"] = self.reason
        if self.sequent is not None:
            out["sequent"] = self.sequent.to_json()
        if self.witness is not None:
            out["lambda"] = self.witness.to_json()
        return out


class _Run:
    def __init__(self, system, cache, k, deadline, lambda_cap):
        self.system = system
        self.cache = cache
        self.k = k
        self.deadline = deadline
        self.lambda_cap = lambda_cap
        self.steps = 0

    def _tick(self):
        self.steps += 1
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
        reach = _reach(seq, self.cache)
        gap = next(_gaps(seq, reach), None)
        if gap is not None:
            return ("prop", gap.node, (gap, reach))
        for i in seq.internal_nodes():
            boxes = unrealised_boxes(seq, i)
            if boxes:
                return ("realise", i, boxes[0])
        return None

    def _leaf(self, seq: NestedSequent):
        """Unrealised leaf at height <= k; leaves without a look-alike ancestor go first."""
        pool = [x for x in unrealised_leaves(seq) if seq.height(x) <= self.k]
        if not pool:
            return None
        fresh = [x for x in pool if not any(
            seq.content(j, False) == seq.content(x, False) for j in seq.ancestors(x))]
        x = (fresh or pool)[0]
        return ("expand", x, unrealised_boxes(seq, x)[0])

    def search(self, seq: NestedSequent, trace: list):
        clash = seq.find_clash()
        while True:
            if clash is not None:
                trace.append({"step": "clash", "node": clash[0], "atom": clash[1],
                              "hash": seq.digest()})
                return PROVED, None, None
            step = self.next_step(seq)
            if step is None:
                if all(is_saturated(seq, i) for i in seq.node_ids()):
                    witness = find_lambda(seq, self.cache, self.lambda_cap)
                    if witness is not None:
                        trace.append({"step": "stable", "hash": seq.digest()})
                        return REFUTED, seq, witness
                step = self._leaf(seq)
                if step is None:
                    trace.append({"step": "exhausted", "k": self.k, "hash": seq.digest()})
                    return EXHAUSTED, None, None
            kind, i, obj = step
            if kind == "and":
                return self._branch(seq, i, obj, trace)
            clash = seq.find_clash([self._apply(seq, kind, i, obj, trace)])

    def _apply(self, seq, kind, i, obj, trace):
        self._tick()
        if kind == "or":
            if not seq.add_formulas(i, [obj.left, obj.right]):
                raise InternalError("disjunction step added nothing")
            trace.append({"step": "or", "node": i, "formula": str(obj), "hash": seq.digest()})
            return i
        if kind in ("realise", "expand"):
            if kind == "expand" and seq.height(i) > self.k:
                raise InternalError("expanding a leaf above the height bound")
            j = seq.add_child(i, obj.letter, [obj.sub])
            trace.append({"step": kind, "node": i, "formula": str(obj), "child": j,
                          "hash": seq.digest()})
            return j
        gap, reach = obj
        w = reach.witness(gap.node, nonterminal_for(gap.formula.letter), gap.target)
        if not seq.add_formulas(gap.target, [gap.formula.sub]):
            raise InternalError("propagation step added nothing")
        trace.append({"step": "prop", "node": gap.node, "formula": str(gap.formula),
                      "target": gap.target, "witness": w.to_json(), "hash": seq.digest()})
        return gap.target

    def _branch(self, seq, i, f: And, trace):
        entry = {"step": "and", "node": i, "formula": str(f), "branches": []}
        trace.append(entry)
        results = []
        for conj in (f.left, f.right):
            sub = seq.copy()
            sub.add_formulas(i, [conj])
            self._tick()
            branch = {"conjunct": str(conj), "hash": sub.digest(), "trace": []}
            entry["branches"].append(branch)
            res = self.search(sub, branch["trace"])
            if res[0] == REFUTED:
                return res
            results.append(res)
        if any(r[0] == EXHAUSTED for r in results):
            return EXHAUSTED, None, None
        return PROVED, None, None


def _initial(start) -> tuple[NestedSequent, Formula | None]:
    if isinstance(start, NestedSequent):
        return start.copy(), None
    f = nnf(start)
    return NestedSequent([f]), f


def prove2(system: SemiThueSystem, start, k: int, timeout: float | None = None,
           lambda_cap: int = DEFAULT_LAMBDA_CAP, cache: ReachabilityCache | None = None,
           deadline: float | None = None) -> GrammarVerdict:
    """One bounded round: leaves above height ``k`` are never expanded."""
    if k < 0:
        raise ValueError("height bound must be non-negative")
    seq, f = _initial(start)
    cache = cache or _cache_for(system, seq)
    if deadline is None and timeout is not None:
        deadline = time.monotonic() + timeout
    run = _Run(system, cache, k, deadline, lambda_cap)
    trace: list = []
    outcome, stable, witness = run.search(seq, trace)
    stats = {"k": k, "steps": run.steps, **cache.stats()}
    return GrammarVerdict(outcome, f, trace, stable, witness, k, stats)


def prove(system: SemiThueSystem, formula: Formula, max_k: int | None = None,
          timeout: float | None = None, lambda_cap: int = DEFAULT_LAMBDA_CAP) -> GrammarVerdict:
    """Iterative deepening over the height bound; never returns "exhausted".

    Without ``max_k`` or ``timeout`` this may run forever on a non-regular system.
    """
    require_context_free(system)
    f = nnf(formula)
    deadline = None if timeout is None else time.monotonic() + timeout
    seq0 = NestedSequent([f])
    cache = _cache_for(system, seq0)
    per_k = []
    started = time.monotonic()
    k = 0
    while True:
        if max_k is not None and k > max_k:
            return GrammarVerdict(BUDGET, f, [], k=k - 1, reason=f"height bound {max_k} reached",
                                  stats={"rounds": per_k})
        before = dict(cache.stats())
        try:
            v = prove2(system, f, k, lambda_cap=lambda_cap, cache=cache, deadline=deadline)
        except (BudgetExceeded, LambdaSearchCapExceeded) as e:
            return GrammarVerdict(BUDGET, f, [], k=k, reason=str(e), stats={"rounds": per_k})
        round_stats = dict(v.stats)
        round_stats["emptiness_queries"] -= before["emptiness_queries"]
        round_stats["cache_hits"] -= before["cache_hits"]
        round_stats["graphs_saturated"] -= before["graphs_saturated"]
        q = round_stats["emptiness_queries"]
        round_stats["cache_hit_rate"] = round(round_stats["cache_hits"] / q, 4) if q else 0.0
        round_stats["outcome"] = v.outcome
        per_k.append(round_stats)
        if v.outcome in (PROVED, REFUTED):
            v.formula = f
            v.stats = {"rounds": per_k, "seconds": round(time.monotonic() - started, 4)}
            return v
        k += 1


__all__ = [
    "PROVED", "REFUTED", "EXHAUSTED", "BUDGET", "GrammarVerdict", "StabilityWitness",
    "PropagationGap", "is_S_propagated", "s_propagation_gap", "is_S_stable", "find_lambda",
    "check_stability_witness", "prove2", "prove", "lambda_candidates", "unrealised_leaves",
    "lneg",
]
