"""Brute-force reference computations.

Everything here enumerates pure adversaries explicitly and evaluates each
resulting Markov chain exactly. Nothing goes through the LP-based code
paths, so these functions serve as independent oracles for the tests.
Only states reachable under the choices made so far are branched on, which
keeps the enumeration small on the instances it is meant for.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

from .chain import absorption, bottom_sccs, expected_total_cost
from .errors import BudgetExceeded
from .model import BOTTOM, Game, Objective, Strategy, action_cost
from .numeric import Number, breaks, budget_from_env

Key = Hashable
Options = Callable[[Key], Sequence[str]]
Step = Callable[[Key, str], Tuple[Dict[Key, Number], Number]]


def enumerate_reachable(initial: Sequence[Key], options: Options, step: Step,
                        budget: Optional[int] = None):
    """Yield ``(choice, order)`` for every assignment of options to the
    states reachable under it. ``order`` lists the reachable keys in
    discovery order."""
    budget = budget_from_env() if budget is None else budget
    count = 0
    choice: Dict[Key, str] = {}

    def frontier():
        seen = list(dict.fromkeys(initial))
        known = set(seen)
        pos = 0
        while pos < len(seen):
            key = seen[pos]
            pos += 1
            opts = options(key)
            if key not in choice:
                if len(opts) > 1:
                    return key, None
                choice[key] = opts[0]
            dist, _ = step(key, choice[key])
            for t in dist:
                if t not in known:
                    known.add(t)
                    seen.append(t)
        return None, seen

    def rec():
        nonlocal count
        forced = dict(choice)
        key, order = frontier()
        if key is None:
            count += 1
            if count > budget:
                raise BudgetExceeded(f"more than {budget} adversaries")
            yield {k: choice[k] for k in order}, order
        else:
            for o in options(key):
                choice[key] = o
                yield from rec()
                del choice[key]
        # Drop singleton choices added during this frontier pass.
        for k in list(choice):
            if k not in forced:
                del choice[k]

    yield from rec()


def _chain(order, choice, step, initial):
    pos = {k: i for i, k in enumerate(order)}
    rows, costs = [], []
    for k in order:
        dist, cost = step(k, choice[k])
        rows.append({pos[t]: p for t, p in dist.items()})
        costs.append(cost)
    init = {pos[k]: p for k, p in initial.items()}
    return rows, costs, init, pos


def _violation(rows, init, order, base_of, objective: Objective, model: Game):
    targets = objective.targets(model)
    hit = {i: Fraction(1) for i, k in enumerate(order) if base_of(k) in targets}
    probs = absorption(rows, hit)
    reach = sum(p * probs[i] for i, p in init.items())
    return reach if objective.kind == "safety" else 1 - reach


def _pi_choice(pi: Strategy, s: int, counter):
    return pi.choice(s, counter)


def _mix(model: Game, s: int, choice: Mapping[str, Number]) -> Dict[int, Number]:
    out: Dict[int, Number] = {}
    for name, w in choice.items():
        for t, p in model.action(s, name).dist.items():
            out[t] = out.get(t, 0) + w * p
    return out


# ---------------------------------------------------------------------------
# Worst case


@dataclass
class WorstOracle:
    level: Optional[int]  # fewest disturbances that break, None if > k
    adversary: Optional[Dict[str, str]]
    violation: Optional[Number]
    adversaries: int


def worst_case_oracle(model: Game, objective: Objective, pi: Strategy, k: int,
                      budget: Optional[int] = None) -> WorstOracle:
    """Fewest disturbances (at most ``k``) with which some pure step-counting
    adversary breaks ``pi``.

    States are (s, c) with c the remaining budget, starting at k; one
    enumeration at budget k covers every smaller budget, since an adversary
    that never drops below level k - j uses at most j disturbances.
    """
    thr, strict = objective.violation, objective.strict

    def pi_counter(c):
        if pi.bound is None:
            return None
        return max(pi.bound - (k - c), 0)

    def options(key):
        s, c = key
        if model.owner[s] == 1:
            opts = [BOTTOM]
            if c >= 1:
                opts += [d.name for d in model.disturbances(s)]
            return opts
        return [a.name for a in model.normal(s)]

    def step(key, name):
        s, c = key
        if model.owner[s] == 1:
            if name == BOTTOM:
                return {(t, c): p for t, p in _mix(model, s, pi.choice(s, pi_counter(c))).items()}, 0
            d = model.action(s, name)
            return {(t, c - 1): p for t, p in d.dist.items()}, action_cost(d)
        a = model.action(s, name)
        return {(t, c): p for t, p in a.dist.items()}, action_cost(a)

    initial = {(s, k): p for s, p in model.initial.items()}
    best: Tuple[Optional[int], Optional[dict], Optional[Number]] = (None, None, None)
    total = 0
    for choice, order in enumerate_reachable(list(initial), options, step, budget):
        total += 1
        rows, _, init, _ = _chain(order, choice, step, initial)
        v = _violation(rows, init, order, lambda key: key[0], objective, model)
        if not breaks(v, thr, strict):
            continue
        used = k - min(c for _, c in order)
        if best[0] is None or used < best[0]:
            named = {f"({model.names[s]},{c})": a for (s, c), a in choice.items()
                     if len(options((s, c))) > 1}
            best = (used, named, v)
    return WorstOracle(best[0], best[1], best[2], total)


@dataclass
class MemorylessDisturber:
    choice: Dict[str, str]
    violation: Number
    max_disturbances: Optional[int]  # None: unbounded along some path


def memoryless_disturbers(model: Game, objective: Objective, pi: Strategy,
                          budget: Optional[int] = None) -> List[MemorylessDisturber]:
    """All pure memoryless adversaries against a memoryless ``pi``, with the
    violation probability and the largest number of disturbances on any
    path (None when a disturbance lies on a reachable cycle)."""
    import networkx as nx

    if pi.bound is not None:
        raise ValueError("memoryless_disturbers expects a memoryless strategy")

    def options(s):
        if model.owner[s] == 1:
            return [BOTTOM] + [d.name for d in model.disturbances(s)]
        return [a.name for a in model.normal(s)]

    def step(s, name):
        if model.owner[s] == 1 and name == BOTTOM:
            return _mix(model, s, pi.choice(s)), 0
        a = model.action(s, name)
        return dict(a.dist), action_cost(a)

    out = []
    for choice, order in enumerate_reachable(list(model.initial), options, step, budget):
        rows, _, init, pos = _chain(order, choice, step, dict(model.initial))
        v = _violation(rows, init, order, lambda s: s, objective, model)
        g = nx.DiGraph()
        for s in order:
            g.add_node(s)
            for t in step(s, choice[s])[0]:
                w = 1 if model.owner[s] == 1 and choice[s] != BOTTOM else 0
                g.add_edge(s, t, weight=w)
        bounded = True
        for comp in nx.strongly_connected_components(g):
            sub = g.subgraph(comp)
            if any(d["weight"] for _, _, d in sub.edges(data=True)):
                bounded = False
        if bounded:
            dag = nx.condensation(g)
            weight = {}
            for u, v_, d in g.edges(data=True):
                cu, cv = dag.graph["mapping"][u], dag.graph["mapping"][v_]
                if cu != cv:
                    weight[(cu, cv)] = max(weight.get((cu, cv), 0), d["weight"])
            longest = {}
            for c in reversed(list(nx.topological_sort(dag))):
                longest[c] = max([weight[(c, t)] + longest[t] for t in dag.successors(c)], default=0)
            count = max(longest[dag.graph["mapping"][s]] for s in model.initial)
        else:
            count = None
        named = {model.names[s]: a for s, a in choice.items() if len(options(s)) > 1}
        out.append(MemorylessDisturber(named, v, count))
    return out


# ---------------------------------------------------------------------------
# Expected case


@dataclass
class ExpectedOracle:
    value: Optional[Number]  # None when no finite-cost adversary breaks pi
    points: List[Tuple[Number, Number]]  # (violation, cost) per pure adversary


def expected_oracle(model: Game, objective: Objective, pi: Strategy,
                    budget: Optional[int] = None) -> ExpectedOracle:
    """Minimum expected number of disturbances over adversaries that break
    ``pi`` with finitely many disturbances in expectation.

    Each pure memoryless adversary gives a point (violation probability,
    expected cost); adversaries with a recurrent disturbance have infinite
    cost and are skipped. Randomizing at the start mixes two points, and a
    single-constraint optimum is always such a mixture, so the value is the
    cheapest mixture whose violation reaches the threshold.
    """
    thr, strict = objective.violation, objective.strict

    def counter_after(c):
        return None if c is None else max(c - 1, 0)

    def options(key):
        s, c = key
        if model.owner[s] == 1:
            return [BOTTOM] + [d.name for d in model.disturbances(s)]
        return [a.name for a in model.normal(s)]

    def step(key, name):
        s, c = key
        if model.owner[s] == 1:
            if name == BOTTOM:
                return {(t, c): p for t, p in _mix(model, s, pi.choice(s, c)).items()}, 0
            d = model.action(s, name)
            return {(t, counter_after(c)): p for t, p in d.dist.items()}, action_cost(d)
        a = model.action(s, name)
        return {(t, c): p for t, p in a.dist.items()}, action_cost(a)

    initial = {(s, pi.bound): p for s, p in model.initial.items()}
    points = []
    for choice, order in enumerate_reachable(list(initial), options, step, budget):
        rows, costs, init, _ = _chain(order, choice, step, initial)
        recurrent = [comp for comp in bottom_sccs(rows)]
        if any(costs[i] != 0 for comp in recurrent for i in comp):
            continue
        v = _violation(rows, init, order, lambda key: key[0], objective, model)
        absorbing = {i for comp in recurrent for i in comp}
        cost = expected_total_cost(rows, costs, init, absorbing)
        points.append((v, cost))
    if not points or not breaks(max(v for v, _ in points), thr, strict):
        return ExpectedOracle(None, points)
    best = None
    for v1, c1 in points:
        if v1 >= thr:
            cand = c1
        else:
            cand = None
            for v2, c2 in points:
                if v2 > v1 and v2 >= thr:
                    lam = (thr - v1) / (v2 - v1)
                    mix = (1 - lam) * c1 + lam * c2
                    cand = mix if cand is None else min(cand, mix)
        if cand is not None and (best is None or cand < best):
            best = cand
    return ExpectedOracle(best, points)
