"""JSON documents for models, strategies, objectives and results.

Probabilities and other exact quantities travel as strings (``"1/3"``,
``"0.25"``) so that rational mode survives a round trip. Unknown fields are
rejected; field order is irrelevant.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, StrategyIncompatible, ValidationError
from .model import (BOTTOM, Action, ActionKind, BreakingPoint, Diagnostic, Game, Objective,
                    Player, Strategy, validate)
from .numeric import fmt, parse_number

FORMAT_VERSION = "1"
SINK_LABELS = ("G", "B")
LOOP = "loop"


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None


def _expect(obj, kind, where):
    if not isinstance(obj, kind):
        raise ParseError(f"expected {kind.__name__}", field=where)
    return obj


def _fields(obj: dict, where: str, required, optional=()):
    _expect(obj, dict, where)
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)}", field=where)
    for key in required:
        if key not in obj:
            raise ParseError("missing field", field=f"{where}.{key}" if where else key)


def _prob(text, where, mode):
    try:
        return parse_number(text, mode)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a probability: {text!r}", field=where) from None


def load_model(text: str, mode: str = "rational", rewrite_sinks: bool = False,
               sink_labels=SINK_LABELS, sgd: bool = True) -> Tuple[Game, List[Diagnostic]]:
    """Parse and validate a model document.

    States labelled with one of ``sink_labels`` must be absorbing. With
    ``rewrite_sinks`` such states are turned into sinks (and the rewrite is
    reported as a warning); otherwise they are a validation error.
    """
    doc = _load_json(text)
    _fields(doc, "", ("version", "states", "transitions", "initial"))
    if doc["version"] != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc['version']!r}", field="version")
    names: List[str] = []
    owner: List[int] = []
    labels: Dict[str, set] = {}
    for i, st in enumerate(_expect(doc["states"], list, "states")):
        where = f"states[{i}]"
        _fields(st, where, ("id", "player"), ("labels",))
        sid = _expect(st["id"], str, f"{where}.id")
        if sid in names:
            raise ParseError(f"duplicate state id {sid!r}", field=f"{where}.id")
        if st["player"] not in (1, 2):
            raise ParseError("player must be 1 or 2", field=f"{where}.player")
        names.append(sid)
        owner.append(st["player"])
        for lab in _expect(st.get("labels", []), list, f"{where}.labels"):
            labels.setdefault(_expect(lab, str, f"{where}.labels"), set()).add(len(names) - 1)
    index = {n: i for i, n in enumerate(names)}

    def ref(name, where):
        if name not in index:
            raise ParseError(f"unknown state reference {name!r}", field=where)
        return index[name]

    def dist(entries, where):
        out: Dict[int, object] = {}
        for j, e in enumerate(_expect(entries, list, where)):
            w = f"{where}[{j}]"
            _fields(e, w, ("state", "prob"))
            t = ref(e["state"], f"{w}.state")
            out[t] = out.get(t, 0) + _prob(e["prob"], f"{w}.prob", mode)
        return out

    normal: List[List[Action]] = [[] for _ in names]
    disturb: List[List[Action]] = [[] for _ in names]
    for i, tr in enumerate(_expect(doc["transitions"], list, "transitions")):
        where = f"transitions[{i}]"
        _fields(tr, where, ("from", "action", "to"), ("kind",))
        s = ref(tr["from"], f"{where}.from")
        kind = tr.get("kind", "normal")
        if kind not in ("normal", "disturbance"):
            raise ParseError(f"unknown kind {kind!r}", field=f"{where}.kind")
        name = _expect(tr["action"], str, f"{where}.action")
        act = Action(name, ActionKind(kind), dist(tr["to"], f"{where}.to"))
        (disturb if kind == "disturbance" else normal)[s].append(act)
    initial = dist(doc["initial"], "initial")

    notes: List[Diagnostic] = []
    for lab in sink_labels:
        for s in sorted(labels.get(lab, ())):
            acts = normal[s] + disturb[s]
            is_sink = len(acts) == 1 and dict(acts[0].dist) == {s: 1}
            if is_sink:
                continue
            if rewrite_sinks:
                normal[s] = [Action(LOOP, ActionKind.NORMAL, {s: parse_number(1, mode)})]
                disturb[s] = []
                notes.append(Diagnostic("warning", f"{lab}-labelled state rewritten into a sink", names[s]))
            else:
                notes.append(Diagnostic("error", f"{lab}-labelled state is not a sink", names[s]))
    game = Game(tuple(names), tuple(owner), tuple(tuple(n + d) for n, d in zip(normal, disturb)),
                initial, {k: frozenset(v) for k, v in labels.items()})
    diags = notes + validate(game, sgd=sgd)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ValidationError(errors)
    return game, diags


def parse_model(text: str, mode: str = "rational", **kw) -> Game:
    return load_model(text, mode, **kw)[0]


def model_to_dict(game: Game) -> dict:
    states = []
    for s in game.states():
        labs = sorted(lab for lab, members in game.labels.items() if s in members)
        entry = {"id": game.names[s], "player": game.owner[s]}
        if labs:
            entry["labels"] = labs
        states.append(entry)
    transitions = []
    for s in game.states():
        for a in game.actions[s]:
            transitions.append({
                "from": game.names[s],
                "action": a.name,
                "kind": a.kind.value,
                "to": [{"state": game.names[t], "prob": fmt(p)} for t, p in sorted(a.dist.items())],
            })
    initial = [{"state": game.names[s], "prob": fmt(p)} for s, p in sorted(game.initial.items())]
    return {"version": FORMAT_VERSION, "states": states, "transitions": transitions, "initial": initial}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def serialize_model(game: Game) -> str:
    return dumps(model_to_dict(game))


# ---------------------------------------------------------------------------
# Strategies

_COUNTER_KEY = re.compile(r"^\((.*),(\d+)\)$")


def _strategy_key(key: str, model: Game):
    try:
        return model.index(key), None
    except KeyError:
        pass
    m = _COUNTER_KEY.match(key)
    if m:
        try:
            return model.index(m.group(1)), int(m.group(2))
        except KeyError:
            pass
    raise StrategyIncompatible(f"strategy names unknown state {key!r}")


def parse_strategy(text, model: Game, player: Player = Player.ONE, mode: str = "rational") -> Strategy:
    """Flat map from state (or ``"(state,counter)"``) to an action name or a
    map action -> probability."""
    doc = _load_json(text) if isinstance(text, str) else text
    _expect(doc, dict, "strategy")
    rule = {}
    counters = set()
    for key, val in doc.items():
        s, c = _strategy_key(key, model)
        counters.add(c)
        if isinstance(val, str):
            choice = {BOTTOM if val in ("_", "bot") else val: parse_number(1, mode)}
        elif isinstance(val, dict):
            choice = {}
            for a, p in val.items():
                choice[BOTTOM if a in ("_", "bot") else a] = _prob(p, f"{key}.{a}", mode)
        else:
            raise ParseError("strategy entries must be strings or maps", field=key)
        rule[(s, c)] = choice
    if None in counters and len(counters) > 1:
        raise StrategyIncompatible("mixes memoryless and step-counting entries")
    bound = None if counters <= {None} else max(c for c in counters)
    strategy = Strategy(player, rule, bound)
    strategy.check(model)
    return strategy


def strategy_to_dict(strategy: Strategy, model: Game) -> dict:
    out = {}
    for (s, c) in strategy.domain():
        key = model.names[s] if c is None else f"({model.names[s]},{c})"
        choice = strategy.rule[(s, c)]
        if len(choice) == 1 and list(choice.values())[0] == 1:
            out[key] = next(iter(choice))
        else:
            out[key] = {a: fmt(p) for a, p in sorted(choice.items())}
    return out


def uniform_strategy(model: Game, action: str) -> Strategy:
    """Player-1 strategy playing ``action`` wherever it exists and the only
    available action elsewhere (``all-a`` on the command line)."""
    rule = {}
    for s in model.states():
        if model.owner[s] != 1:
            continue
        names = [a.name for a in model.normal(s)]
        if action in names:
            rule[(s, None)] = {action: Fraction(1)}
        elif len(names) == 1:
            rule[(s, None)] = {names[0]: Fraction(1)}
        else:
            raise StrategyIncompatible(f"state {model.names[s]} has no action {action!r} and several others")
    return Strategy(Player.ONE, rule)


# ---------------------------------------------------------------------------
# Objectives

_OBJECTIVE = re.compile(r"^(reach|safety|safe):([^:]+):(>=|>)(.+)$")


def parse_objective(text: str, mode: str = "rational") -> Objective:
    """``reach:G:>2/5`` or ``safety:B:>=9/10``."""
    m = _OBJECTIVE.match(text.strip())
    if not m:
        raise ParseError(f"objective must look like reach:G:>2/5, got {text!r}", field="objective")
    kind = "safety" if m.group(1) in ("safety", "safe") else "reach"
    try:
        threshold = parse_number(m.group(4), mode)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad threshold {m.group(4)!r}", field="objective") from None
    try:
        return Objective(kind, m.group(2), threshold, m.group(3) == ">")
    except ValueError as exc:
        raise ParseError(str(exc), field="objective") from None


# ---------------------------------------------------------------------------
# Results


def _count_text(bp: BreakingPoint):
    t = bp.transient
    return fmt(t.value) if t.variant == "finite" else t.variant


def result_to_dict(semantics: str, bp: BreakingPoint, objective: Optional[Objective] = None,
                   witness=None, diagnostics=(), extra: Optional[dict] = None) -> dict:
    doc = {"semantics": semantics}
    if objective is not None:
        doc["objective"] = objective.text()
    doc["transient"] = _count_text(bp)
    doc["frequency"] = "unbreakable" if bp.is_unbreakable else fmt(bp.frequency)
    if extra:
        doc.update(extra)
    doc["witness"] = witness
    doc["diagnostics"] = list(diagnostics)
    return doc


_RESULT_FIELDS = ("semantics", "transient", "frequency")
_RESULT_OPTIONAL = ("objective", "witness", "diagnostics", "case", "attained", "method",
                    "strategy", "reference")


def parse_result(text: str) -> Tuple[str, BreakingPoint, dict]:
    doc = _load_json(text)
    _fields(doc, "", _RESULT_FIELDS, _RESULT_OPTIONAL)
    if doc["semantics"] not in ("expected", "worst"):
        raise ParseError("semantics must be expected or worst", field="semantics")
    t, f = doc["transient"], doc["frequency"]
    if t == "unbreakable":
        bp = BreakingPoint.unbreakable()
    elif t == "omega":
        bp = BreakingPoint.omega(parse_number(f))
    else:
        bp = BreakingPoint.finite(parse_number(t))
    return doc["semantics"], bp, doc
