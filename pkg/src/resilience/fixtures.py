"""Small worked examples shipped with the package.

Each bundle holds a model, an objective and a reference Player-1 strategy.
Models are written as documents and loaded through the regular parser, so
the fixtures double as parser tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict

from .io import parse_model, parse_objective, parse_strategy
from .model import Game, Objective, Strategy


@dataclass(frozen=True)
class Bundle:
    name: str
    model: Game
    objective: Objective
    strategy: Strategy
    note: str = ""


def _doc(states, transitions, initial):
    st = []
    for sid, player, *labels in states:
        entry = {"id": sid, "player": player}
        if labels:
            entry["labels"] = list(labels)
        st.append(entry)
    tr = []
    for src, action, kind, to in transitions:
        tr.append({"from": src, "action": action, "kind": kind,
                   "to": [{"state": t, "prob": p} for t, p in to]})
    return {"version": "1", "states": st, "transitions": tr,
            "initial": [{"state": s, "prob": p} for s, p in initial]}


def _sinks(*names):
    return [(n, "loop", "normal", [(n, "1")]) for n in names]


N, D = "normal", "disturbance"

DOCUMENTS = {
    # Two disturbable states; each disturbance sends half the mass to B.
    "FIG4": _doc(
        [("s0", 1), ("s1", 1), ("G", 1, "G"), ("B", 1, "B")],
        [("s0", "a", N, [("G", "1")]),
         ("s0", "d", D, [("s1", "1/2"), ("B", "1/2")]),
         ("s1", "a", N, [("G", "1")]),
         ("s1", "d", D, [("G", "1/2"), ("B", "1/2")])] + _sinks("G", "B"),
        [("s0", "1")]),
    # Player 1 needs to remember how many disturbances happened.
    "FIG6L": _doc(
        [("s0", 1), ("s1", 1), ("s2", 1), ("s3", 1), ("G", 1, "G"), ("B", 1, "B")],
        [("s0", "a", N, [("G", "1")]),
         ("s0", "d", D, [("s1", "1")]),
         ("s1", "a1", N, [("s2", "1")]),
         ("s1", "a2", N, [("s3", "1")]),
         ("s2", "a", N, [("G", "1/2"), ("B", "1/2")]),
         ("s3", "a", N, [("G", "1")]),
         ("s3", "d", D, [("B", "1")])] + _sinks("G", "B"),
        [("s0", "1/2"), ("s1", "1/2")]),
    # The worst adversary for the memoryless strategy needs memory.
    "FIG6R": _doc(
        [("s1", 1), ("s2", 1), ("s3", 1), ("G", 1, "G"), ("B", 1, "B")],
        [("s1", "a", N, [("s2", "1")]),
         ("s1", "d", D, [("G", "1/2"), ("B", "1/2")]),
         ("s2", "a", N, [("G", "1")]),
         ("s2", "d", D, [("s3", "1")]),
         ("s3", "a", N, [("G", "1")]),
         ("s3", "d", D, [("B", "1/2"), ("s1", "1/2")])] + _sinks("G", "B"),
        [("s1", "1")]),
    # Always disturbing in s1 keeps the play away from G; the long-run
    # fraction of disturbed steps is then 10/19.
    "FREQ19": _doc(
        [("s1", 1), ("s2", 1), ("G", 1, "G")],
        [("s1", "a", N, [("G", "1")]),
         ("s1", "d", D, [("s1", "1/10"), ("s2", "9/10")]),
         ("s2", "a", N, [("s1", "1")])] + _sinks("G"),
        [("s1", "1")]),
    "NODIST": _doc(
        [("s0", 1), ("s1", 1), ("G", 1, "G")],
        [("s0", "a", N, [("s1", "1")]),
         ("s1", "a", N, [("G", "1")])] + _sinks("G"),
        [("s0", "1")]),
}

OBJECTIVES = {
    "FIG4": "reach:G:>2/5",
    "FIG6L": "reach:G:>=3/4",
    "FIG6R": "reach:G:>=1/2",
    "FREQ19": "reach:G:>1/2",
    "NODIST": "reach:G:>1/2",
}

STRATEGIES = {
    "FIG4": {"s0": "a", "s1": "a", "G": "loop", "B": "loop"},
    # Counter = disturbances still to come: with none left the s3 branch is
    # safe, with one left the s2 branch cannot be disturbed.
    "FIG6L": {"(s0,0)": "a", "(s0,1)": "a", "(s1,0)": "a2", "(s1,1)": "a1",
              "(s2,0)": "a", "(s2,1)": "a", "(s3,0)": "a", "(s3,1)": "a",
              "(G,0)": "loop", "(G,1)": "loop", "(B,0)": "loop", "(B,1)": "loop"},
    "FIG6R": {"s1": "a", "s2": "a", "s3": "a", "G": "loop", "B": "loop"},
    "FREQ19": {"s1": "a", "s2": "a", "G": "loop"},
    "NODIST": {"s0": "a", "s1": "a", "G": "loop"},
}

NOTES = {
    "FIG4": "worst-case breaking point 2; reference expected value 1.1, exact optimum 6/5",
    "FIG6L": "best step-counting strategy breaks at 2, best memoryless one at 1",
    "FIG6R": "memoryless strategy breaks at 3 against a counting adversary",
    "FREQ19": "worst-case frequency 10/19",
    "NODIST": "no disturbance actions",
}


def model_text(name: str) -> str:
    return json.dumps(DOCUMENTS[name], indent=2)


def fixtures() -> Dict[str, Bundle]:
    out = {}
    for name, doc in DOCUMENTS.items():
        model = parse_model(json.dumps(doc))
        out[name] = Bundle(name, model, parse_objective(OBJECTIVES[name]),
                           parse_strategy(STRATEGIES[name], model), NOTES[name])
    return out
