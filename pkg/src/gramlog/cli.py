"""Command-line front end.

Exit codes: 0 valid (or check passed), 1 invalid (or check failed),
2 budget exhausted, 3 input or configuration error, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import BudgetExceeded, GramlogError, InternalError, ModelError, ParseError
from .formula import parse_formula
from .grammar import load_grammar
from .lang import check_fsa_matches_grammar, load_fsa
from .prover_auto import prove1
from .prover_grammar import DEFAULT_LAMBDA_CAP, prove
from .semantics import (extract_countermodel_auto, extract_countermodel_grammar, frame_violations,
                        load_model, satisfies, verify_countermodel)

EXIT_VALID, EXIT_INVALID, EXIT_BUDGET, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3, 4
_LABEL = {EXIT_VALID: "VALID", EXIT_INVALID: "INVALID", EXIT_BUDGET: "BUDGET-EXHAUSTED"}


class ConfigError(GramlogError):
    pass


@dataclass(frozen=True)
class RunConfig:
    method: str
    grammar: str
    fsa: str | None
    max_k: int | None
    timeout: float | None
    lambda_cap: int
    json: bool

    def validate(self):
        if self.method == "auto" and not self.fsa:
            raise ConfigError("--method auto needs --fsa")
        if self.max_k is not None and self.max_k < 0:
            raise ConfigError("--max-k must be non-negative")
        if self.timeout is not None and self.timeout <= 0:
            raise ConfigError("--timeout must be positive")
        if self.lambda_cap <= 0:
            raise ConfigError("--lambda-cap must be positive")


def _formula_text(args) -> list[str]:
    if args.batch:
        lines = Path(args.batch).read_text().splitlines()
        return [ln.split("#", 1)[0].strip() for ln in lines if ln.split("#", 1)[0].strip()]
    if args.formula_file:
        text = "\n".join(ln.split("#", 1)[0] for ln in Path(args.formula_file).read_text().splitlines())
        return [text.strip()]
    return [args.formula]


def run_one(cfg: RunConfig, text: str) -> tuple[int, dict]:
    """Prove one formula; returns the exit code and a JSON-ready report."""
    formula = parse_formula(text)
    system = load_grammar(cfg.grammar).system
    report = {"formula": text, "method": cfg.method}
    if cfg.method == "auto":
        automaton = load_fsa(cfg.fsa)
        try:
            verdict = prove1(automaton, formula, timeout=cfg.timeout)
        except BudgetExceeded as e:
            report.update(result=_LABEL[EXIT_BUDGET], reason=str(e))
            return EXIT_BUDGET, report
        report["verdict"] = verdict.to_json()
        if verdict.proved:
            report["result"] = _LABEL[EXIT_VALID]
            return EXIT_VALID, report
        cm = extract_countermodel_auto(verdict.sequent, automaton, verdict.loop_map)
    else:
        verdict = prove(system, formula, max_k=cfg.max_k, timeout=cfg.timeout,
                        lambda_cap=cfg.lambda_cap)
        report["verdict"] = verdict.to_json()
        if verdict.outcome == "budget":
            report.update(result=_LABEL[EXIT_BUDGET], reason=verdict.reason)
            return EXIT_BUDGET, report
        if verdict.proved:
            report["result"] = _LABEL[EXIT_VALID]
            return EXIT_VALID, report
        cm = extract_countermodel_grammar(verdict.sequent, verdict.witness, system)
    problems = verify_countermodel(cm.model, cm.world, formula, system)
    if problems:
        raise InternalError("extracted countermodel failed verification: " + "; ".join(problems))
    report.update(result=_LABEL[EXIT_INVALID], countermodel=cm.model.to_json(), world=cm.world)
    return EXIT_INVALID, report


def _safe_run(cfg: RunConfig, text: str) -> tuple[int, dict]:
    try:
        return run_one(cfg, text)
    except InternalError as e:
        return EXIT_INTERNAL, {"formula": text, "result": "INTERNAL-ERROR", "error": str(e)}
    except (GramlogError, OSError, ValueError) as e:
        return EXIT_INPUT, {"formula": text, "result": "ERROR", "error": str(e)}


def _summary(report: dict) -> str:
    lines = [f"{report['result']}: {report['formula']}"]
    if "error" in report:
        lines.append(f"  {report['error']}")
    if "reason" in report:
        lines.append(f"  {report['reason']}")
    v = report.get("verdict", {})
    if report["result"] == "VALID":
        steps = _count_steps(v.get("trace", []))
        extra = f", height bound {v['k']}" if v.get("k") is not None else ""
        lines.append(f"  proof with {steps} steps{extra} (--json prints the trace)")
    if "countermodel" in report:
        lines.append(f"  countermodel, formula false at {report['world']}:")
        lines.append("  " + json.dumps(report["countermodel"], sort_keys=True))
    return "\n".join(lines)


def _count_steps(trace) -> int:
    n = 0
    for e in trace:
        n += 1
        for br in e.get("branches", []):
            n += _count_steps(br["trace"])
    return n


def cmd_prove(args) -> int:
    cfg = RunConfig(args.method, args.grammar, args.fsa, args.max_k, args.timeout,
                    args.lambda_cap, args.json)
    cfg.validate()
    loaded = load_grammar(cfg.grammar)
    if loaded.added:
        print("note: closing the system added " + ", ".join(map(str, loaded.added)), file=sys.stderr)
    texts = _formula_text(args)
    if args.jobs > 1 and len(texts) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_safe_run, [cfg] * len(texts), texts))
    elif args.batch:
        results = [_safe_run(cfg, t) for t in texts]
    else:
        results = [run_one(cfg, texts[0])]
    if args.json:
        out = [r for _, r in results]
        print(json.dumps(out if args.batch else out[0], indent=2, sort_keys=True))
    else:
        for _, r in results:
            print(_summary(r))
    codes = [c for c, _ in results]
    for c in (EXIT_INTERNAL, EXIT_INPUT, EXIT_BUDGET, EXIT_INVALID):
        if c in codes:
            return c
    return EXIT_VALID


def cmd_validate_fsa(args) -> int:
    if args.max_len < 0:
        raise ConfigError("--max-len must be non-negative")
    system = load_grammar(args.grammar).system
    report = check_fsa_matches_grammar(load_fsa(args.fsa), system, args.max_len)
    if args.json:
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        for a in report.missing_init:
            print(f"missing initial state for {a}")
        for d in report.disagreements:
            print(f"disagreement {d}")
        print(("consistent" if report.ok else "inconsistent") + f" up to length {args.max_len}")
    return EXIT_VALID if report.ok else EXIT_INVALID


def cmd_check_model(args) -> int:
    model = load_model(args.model)
    system = load_grammar(args.grammar).system
    formula = parse_formula(args.formula)
    conv = model.converse_violations()
    rules = frame_violations(model, system)
    truth = {w: satisfies(model, w, formula) for w in model.worlds}
    if args.json:
        print(json.dumps({
            "frame_ok": not conv and not rules,
            "converse_violations": [[str(a), list(p)] for a, p in conv],
            "rule_violations": [[str(p), list(pair)] for p, pair in rules],
            "truth": truth,
        }, indent=2, sort_keys=True))
    else:
        for a, (x, y) in conv:
            print(f"converse closure broken: ({x}, {y}) in {a}")
        for p, (x, y) in rules:
            print(f"rule {p} violated by ({x}, {y})")
        print("frame ok" if not conv and not rules else "frame violates the system")
        for w, t in truth.items():
            print(f"{w}: {'true' if t else 'false'}")
    return EXIT_VALID if not conv and not rules else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gramlog",
                                     description="Provers for grammar logics with converse.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="decide validity of a formula")
    p.add_argument("--grammar", required=True, help="semi-Thue system file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--formula", help="formula text")
    src.add_argument("--formula-file", help="file holding one formula")
    src.add_argument("--batch", help="file with one formula per line")
    p.add_argument("--fsa", help="automaton file (JSON) for --method auto")
    p.add_argument("--method", choices=["auto", "grammar"], default="grammar")
    p.add_argument("--max-k", type=int, default=None, help="largest height bound to try")
    p.add_argument("--timeout", type=float, default=None, help="seconds per formula")
    p.add_argument("--lambda-cap", type=int, default=DEFAULT_LAMBDA_CAP,
                   help="loop-node assignments tried per stability check")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for --batch")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prove)

    v = sub.add_parser("validate-fsa", help="compare an automaton with a grammar on short words")
    v.add_argument("--grammar", required=True)
    v.add_argument("--fsa", required=True)
    v.add_argument("--max-len", type=int, default=5)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_validate_fsa)

    c = sub.add_parser("check-model", help="audit a Kripke model against a system and formula")
    c.add_argument("--model", required=True)
    c.add_argument("--grammar", required=True)
    c.add_argument("--formula", required=True)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_VALID
    try:
        return args.func(args)
    except InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ParseError, ModelError, ConfigError, GramlogError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
