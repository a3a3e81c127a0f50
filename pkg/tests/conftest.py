import json

import pytest

from resilience.fixtures import fixtures
from resilience.io import parse_model


@pytest.fixture(scope="session")
def fx():
    return fixtures()


def build(states, transitions, initial):
    """Model from compact tuples: states (id, player, *labels), transitions
    (from, action, kind, [(to, prob), ...]); sinks need their own loop."""
    doc = {
        "version": "1",
        "states": [dict({"id": s, "player": p}, **({"labels": list(l)} if l else {}))
                   for s, p, *l in states],
        "transitions": [{"from": f, "action": a, "kind": k,
                         "to": [{"state": t, "prob": str(p)} for t, p in to]}
                        for f, a, k, to in transitions],
        "initial": [{"state": s, "prob": str(p)} for s, p in initial],
    }
    return parse_model(json.dumps(doc))


def loops(*names):
    return [(n, "loop", "normal", [(n, 1)]) for n in names]


@pytest.fixture(scope="session")
def two_mec():
    """Two cycles that can only be kept alive by disturbing: the short one
    needs a disturbance 3/5 of the time, the long one 3/10 of the time."""
    states = [("x1", 1), ("x2", 1), ("y1", 1), ("y2", 1), ("y3", 1), ("y4", 1), ("G", 1, "G")]
    trans = [
        ("x1", "a", "normal", [("G", 1)]),
        ("x1", "d", "disturbance", [("x1", "1/3"), ("x2", "2/3")]),
        ("x2", "a", "normal", [("x1", 1)]),
        ("y1", "a", "normal", [("G", 1)]),
        ("y1", "d", "disturbance", [("y1", "2/9"), ("y2", "7/9")]),
        ("y2", "a", "normal", [("y3", 1)]),
        ("y3", "a", "normal", [("y4", 1)]),
        ("y4", "a", "normal", [("y1", 1)]),
    ] + loops("G")
    return build(states, trans, [("x1", "1/2"), ("y1", "1/2")])


# Acceptance lines are collected here and printed after the run, so they
# show up even when output capture is on.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
