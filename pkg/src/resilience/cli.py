"""Command-line front end.

Every subcommand writes one JSON document (to ``--out`` or standard output)
and exits with 0 when a result was computed, 1 on usage, parse or
validation errors, 2 when an enumeration budget is exceeded and 3 when an
iterative solver did not converge. Errors are reported as a JSON document on
standard error.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .errors import BudgetExceeded, NotConverged, ResilienceError, ValidationError
from .fixtures import DOCUMENTS, OBJECTIVES, STRATEGIES, fixtures, model_text
from .io import (dumps, load_model, model_to_dict, parse_objective, parse_strategy, result_to_dict,
                 strategy_to_dict, uniform_strategy)
from .model import BreakingPoint, Game, Objective, Strategy
from .numeric import fmt

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_NOT_CONVERGED = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    model: Optional[str] = None
    strategy: Optional[str] = None
    objective: Optional[str] = None
    semantics: str = "worst"
    numeric: str = "rational"
    precision: float = 1e-8
    k: Optional[int] = None
    budget: Optional[int] = None
    out: str = "-"
    dump_lp: Optional[str] = None
    emit_qp: Optional[str] = None
    rewrite_sinks: bool = False
    kind: Optional[str] = None  # transform kind
    lemmas: bool = False
    trials: int = 100
    seed: int = 0


class UsageError(ResilienceError):
    pass


def jsonable(value):
    """Recursively turn results into JSON-ready data. Fractions and floats
    become strings, plain ints (counts) stay numbers; dict keys keep their
    insertion order."""
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, (Fraction, float)):
        return fmt(value)
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, BreakingPoint):
        return str(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return [jsonable(v) for v in sorted(value, key=str)]
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


# ---------------------------------------------------------------------------
# Inputs


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_inputs(cfg: RunConfig) -> Tuple[Game, list]:
    if cfg.model is None:
        raise UsageError("--model is required")
    text = model_text(cfg.model) if cfg.model in DOCUMENTS else _read(cfg.model)
    return load_model(text, cfg.numeric, rewrite_sinks=cfg.rewrite_sinks)


def load_objective(cfg: RunConfig) -> Objective:
    if cfg.objective is not None:
        return parse_objective(cfg.objective, cfg.numeric)
    if cfg.model in OBJECTIVES:
        return parse_objective(OBJECTIVES[cfg.model], cfg.numeric)
    raise UsageError("--objective is required for models given as files")


def load_strategy(cfg: RunConfig, model: Game, required: bool = True) -> Optional[Strategy]:
    given = cfg.strategy
    if given is None:
        if required:
            raise UsageError("--strategy is required")
        return None
    if given.startswith("all-"):
        return uniform_strategy(model, given[4:])
    if given == "fixture":
        if cfg.model not in STRATEGIES:
            raise UsageError("--strategy fixture needs a fixture model")
        return parse_strategy(STRATEGIES[cfg.model], model, mode=cfg.numeric)
    return parse_strategy(_read(given), model, mode=cfg.numeric)


def _lp_text(log) -> str:
    return "".join(lp.to_text() for lp in log)


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Commands


def _evaluate(cfg: RunConfig) -> dict:
    from .evaluate import expected_breaking_point, worst_case_breaking_point

    model, diags = load_inputs(cfg)
    objective = load_objective(cfg)
    pi = load_strategy(cfg, model)
    log: Optional[list] = [] if cfg.dump_lp else None
    if cfg.semantics == "expected":
        report = expected_breaking_point(model, objective, pi, lp_log=log)
    else:
        report = worst_case_breaking_point(model, objective, pi, lp_log=log)
    if log is not None:
        _write(cfg.dump_lp, _lp_text(log))
    extra = {"case": report.case, "attained": report.attained}
    return result_to_dict(cfg.semantics, report.breaking_point, objective, jsonable(report.witness),
                          [str(d) for d in diags] + report.diagnostics, extra)


def _synthesize(cfg: RunConfig) -> dict:
    from .synthesis import synthesize_expected, synthesize_worst_transient

    model, diags = load_inputs(cfg)
    objective = load_objective(cfg)
    qp_log: Optional[list] = [] if cfg.emit_qp else None
    if cfg.semantics == "expected":
        report = synthesize_expected(model, objective, cfg.budget, precision=cfg.precision)
    else:
        report = synthesize_worst_transient(model, objective, cfg.k, cfg.budget, qp_log=qp_log)
    if qp_log is not None:
        _write(cfg.emit_qp, "".join(c.qp.to_text() for c in qp_log))
        report.diagnostics += [f"level {c.level} program: "
                               + ("exact values satisfy it with objective 0" if c.ok else
                                  f"violated {c.violated}, nonzero terms {c.nonzero_terms}")
                               for c in qp_log]
    extra = {"case": report.case, "attained": report.attained, "method": report.method.value,
             "strategy": None if report.strategy is None else strategy_to_dict(report.strategy, model)}
    return result_to_dict(cfg.semantics, report.breaking_point, objective, None,
                          [str(d) for d in diags] + report.diagnostics, extra)


TRANSFORMS = ("unfold", "gadget", "induced", "stopping", "binarize", "counter")


def _transform(cfg: RunConfig) -> dict:
    from . import transforms as tr

    model, _ = load_inputs(cfg)
    kind = cfg.kind
    if kind == "unfold":
        out = tr.unfold(model, cfg.k or 0)
    elif kind == "counter":
        out = tr.product_with_counter(model, cfg.k or 0)
    elif kind == "gadget":
        out = tr.expected_gadget_game(model)
    elif kind == "induced":
        out = tr.induced_mdp(model, load_strategy(cfg, model))
    elif kind == "stopping":
        out = tr.make_stopping(model)
    elif kind == "binarize":
        out = tr.binarize_actions(model)
    else:
        raise UsageError(f"--kind must be one of {', '.join(TRANSFORMS)}")
    return model_to_dict(out)


def _oracle(cfg: RunConfig) -> dict:
    from .synthesis import oracle_enumerate
    from .verification import check_lemma_suite

    model, _ = load_inputs(cfg)
    objective = load_objective(cfg)
    if cfg.lemmas:
        report = check_lemma_suite(model, objective, cfg.trials, cfg.seed)
        return {"lemmas": {"trials": report.trials, "passed": report.passed,
                           "failures": [{"check": f.check, "seed": f.seed, "detail": jsonable(f.detail)}
                                        for f in report.failures],
                           "seed": cfg.seed}}
    pi = load_strategy(cfg, model, required=False)
    k = 4 if cfg.k is None else cfg.k
    res = oracle_enumerate(model, objective, k, cfg.semantics, pi, cfg.budget)
    if res.breaking_point is None:
        extra = {"reference": f"not decided within {k} disturbances"}
        bp_doc = {"semantics": cfg.semantics, "objective": objective.text(),
                  "transient": "undecided", "frequency": "undecided"}
        bp_doc.update(extra)
        bp_doc["strategy"] = None if res.strategy is None else strategy_to_dict(res.strategy, model)
        return bp_doc
    extra = {"method": "enumeration",
             "strategy": None if res.strategy is None else strategy_to_dict(res.strategy, model)}
    return result_to_dict(cfg.semantics, res.breaking_point, objective, None, [], extra)


def _fixtures(cfg: RunConfig) -> dict:
    if cfg.model is None:
        return {name: {"objective": OBJECTIVES[name], "note": b.note} for name, b in fixtures().items()}
    if cfg.model not in DOCUMENTS:
        raise UsageError(f"unknown fixture {cfg.model!r}")
    return DOCUMENTS[cfg.model]


COMMANDS = {"evaluate": _evaluate, "synthesize": _synthesize, "transform": _transform,
            "oracle": _oracle, "fixtures": _fixtures}


def run(cfg: RunConfig) -> Tuple[int, dict]:
    """Execute one configuration; returns (exit code, document)."""
    if cfg.budget is not None:
        os.environ["RESIL_BUDGET"] = str(cfg.budget)
    try:
        doc = COMMANDS[cfg.command](cfg)
        return EXIT_OK, doc
    except BudgetExceeded as exc:
        return EXIT_BUDGET, _error("budget_exceeded", exc)
    except NotConverged as exc:
        return EXIT_NOT_CONVERGED, _error("not_converged", exc)
    except ValidationError as exc:
        return EXIT_USAGE, _error("validation", exc, [str(d) for d in exc.diagnostics])
    except (ResilienceError, OSError) as exc:
        return EXIT_USAGE, _error(type(exc).__name__, exc)


def _error(kind: str, exc: Exception, diagnostics: Sequence[str] = ()) -> dict:
    return {"error": kind, "message": str(exc), "diagnostics": list(diagnostics)}


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resilience",
                                     description="Breaking points of strategies in games with disturbances.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, objective=True):
        p.add_argument("--model", help="fixture name (FIG4, ...) or path to a model document")
        if objective:
            p.add_argument("--objective", help="e.g. reach:G:>2/5 or safety:B:>=9/10")
        p.add_argument("--numeric", choices=("rational", "float"), default="rational")
        p.add_argument("--budget", type=int, help="enumeration cap (also RESIL_BUDGET)")
        p.add_argument("--rewrite-sinks", action="store_true",
                       help="turn G/B-labelled states into sinks instead of rejecting them")
        p.add_argument("--out", default="-", help="output path, - for standard output")

    p = sub.add_parser("evaluate", help="breaking point of a given Player-1 strategy")
    common(p)
    p.add_argument("--strategy", required=True, help="path, all-<action>, or 'fixture'")
    p.add_argument("--semantics", choices=("worst", "expected"), default="worst")
    p.add_argument("--dump-lp", metavar="PATH", help="write every LP solved, in LP text format")

    p = sub.add_parser("synthesize", help="most resilient Player-1 strategy")
    common(p)
    p.add_argument("--semantics", choices=("worst", "expected"), default="worst")
    p.add_argument("--k", type=int, help="largest disturbance count to consider")
    p.add_argument("--precision", type=float, default=1e-8)
    p.add_argument("--emit-qp", metavar="PATH", help="write the level quadratic programs")

    p = sub.add_parser("transform", help="write a transformed model")
    common(p, objective=False)
    p.add_argument("--kind", required=True, choices=TRANSFORMS)
    p.add_argument("--k", type=int)
    p.add_argument("--strategy")

    p = sub.add_parser("oracle", help="brute-force reference results and the lemma checks")
    common(p)
    p.add_argument("--semantics", choices=("worst", "expected"), default="worst")
    p.add_argument("--strategy")
    p.add_argument("--k", type=int)
    p.add_argument("--lemmas", action="store_true", help="run the cross-check suite instead")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fixtures", help="list the bundled examples or print one model")
    p.add_argument("--model")
    p.add_argument("--out", default="-")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.command)
    for name in ("model", "strategy", "objective", "semantics", "numeric", "precision", "k", "budget",
                 "out", "dump_lp", "emit_qp", "rewrite_sinks", "kind", "lemmas", "trials", "seed"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    cfg = config_from_args(ns)
    code, doc = run(cfg)
    if code == EXIT_OK:
        try:
            _write(cfg.out, dumps(jsonable(doc)))
        except OSError as exc:
            sys.stderr.write(dumps(_error("OSError", exc)))
            return EXIT_USAGE
    else:
        sys.stderr.write(dumps(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
