"""Random models and executable cross-checks between the transformations.

``generate`` builds seeded random games with disturbances. ``check_lemma_suite``
samples strategy triples and compares, exactly, quantities that two
different constructions must agree on:

(i)   path probabilities in the game vs. the induced MDP under the merged
      adversary,
(ii)  reachability in the game with step-counting strategies vs. the
      unfolded game with the corresponding memoryless strategies,
(iii) reachability in the game vs. the expected-case gadget game,
(iv)  level-by-level transient LP values vs. one LP over the unfolded MDP,
(v)   minimum mean payoff of each end component of the induced MDP from the
      occupation LP vs. brute force over pure memoryless policies.

``grid_search_expected`` is an independent float oracle for the expected
breaking point of small acyclic models with two disturbable states.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .chain import absorption, bottom_sccs, stationary
from .evaluate import transient_iterative_lp, unfolded_mdp_values, violation_target
from .graph import MEC, mec_decomposition
from .io import parse_model
from .model import BOTTOM, Game, Objective, Player, Strategy, action_cost, induced_mc
from .numeric import Number
from .solvers import min_mean_payoff_mec
from .transforms import expected_gadget_game, induced_mdp, unfold

CHECKS = ("induced_mdp", "unfolding", "gadget", "iterative_lp", "mean_payoff")


# ---------------------------------------------------------------------------
# Random models


@dataclass(frozen=True)
class RandomModelSpec:
    states: Tuple[int, int] = (3, 5)  # total, sinks included
    actions: Tuple[int, int] = (1, 2)  # normal actions per non-sink state
    disturbance_prob: float = 0.6  # chance a Player-1 state gets a disturbance
    support: Tuple[int, int] = (1, 3)
    player2_prob: float = 0.25
    sinks: str = "GB"  # "GB": one G and one B sink; "extra": also an unlabelled sink
    max_denominator: int = 4
    seed: int = 0


def _random_dist(rng: random.Random, targets: Sequence[str], spec: RandomModelSpec):
    k = rng.randint(spec.support[0], min(spec.support[1], len(targets)))
    chosen = rng.sample(list(targets), k)
    weights = [rng.randint(1, spec.max_denominator) for _ in chosen]
    total = sum(weights)
    return [{"state": t, "prob": str(Fraction(w, total))} for t, w in zip(chosen, weights)]


def generate_document(spec: RandomModelSpec) -> dict:
    rng = random.Random(spec.seed)
    sinks = [("G", ["G"]), ("B", ["B"])]
    if spec.sinks == "extra":
        sinks.append(("Z", []))
    elif spec.sinks != "GB":
        raise ValueError(f"unknown sink policy {spec.sinks!r}")
    total = rng.randint(max(spec.states[0], len(sinks) + 1), max(spec.states[1], len(sinks) + 1))
    inner = [f"s{i}" for i in range(total - len(sinks))]
    everything = inner + [n for n, _ in sinks]
    states, transitions = [], []
    for name in inner:
        player = 2 if rng.random() < spec.player2_prob else 1
        states.append({"id": name, "player": player})
        for j in range(rng.randint(*spec.actions)):
            transitions.append({"from": name, "action": f"a{j}", "kind": "normal",
                                "to": _random_dist(rng, everything, spec)})
        if player == 1 and rng.random() < spec.disturbance_prob:
            transitions.append({"from": name, "action": "d", "kind": "disturbance",
                                "to": _random_dist(rng, everything, spec)})
    for name, labels in sinks:
        entry = {"id": name, "player": 1}
        if labels:
            entry["labels"] = labels
        states.append(entry)
        transitions.append({"from": name, "action": "loop", "kind": "normal",
                            "to": [{"state": name, "prob": "1"}]})
    return {"version": "1", "states": states, "transitions": transitions,
            "initial": [{"state": inner[0], "prob": "1"}]}


def generate(spec: RandomModelSpec) -> Game:
    """Seeded random game; the same spec always gives the same model."""
    return parse_model(json.dumps(generate_document(spec)))


# ---------------------------------------------------------------------------
# Random strategies

_WEIGHTS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4))


def _random_choice(rng: random.Random, names: Sequence[str], mixed: bool) -> Dict[str, Number]:
    if len(names) > 1 and mixed and rng.random() < 0.5:
        a, b = rng.sample(list(names), 2)
        w = rng.choice(_WEIGHTS)
        return {a: w, b: 1 - w}
    return {rng.choice(list(names)): Fraction(1)}


def random_strategy(rng: random.Random, model: Game, player: Player, bound: Optional[int] = None,
                    mixed: bool = True) -> Strategy:
    counters = [None] if bound is None else list(range(bound + 1))
    rule = {}
    for s in model.states():
        if player is Player.DISTURBER:
            if model.owner[s] != 1:
                continue
            names = [BOTTOM] + [d.name for d in model.disturbances(s)]
        else:
            if model.owner[s] != (1 if player is Player.ONE else 2):
                continue
            names = [a.name for a in model.normal(s)]
        for c in counters:
            if player is Player.DISTURBER and c == 0:
                rule[(s, c)] = {BOTTOM: Fraction(1)}
            else:
                rule[(s, c)] = _random_choice(rng, names, mixed)
    return Strategy(player, rule, bound)


def _optional(strategy: Strategy) -> Optional[Strategy]:
    return strategy if strategy.rule else None


# ---------------------------------------------------------------------------
# Chains of games under memoryless choices


def _game_rows(game: Game, choose: Callable[[int], Mapping[str, Number]]):
    rows = []
    for s in game.states():
        row: Dict[int, Number] = {}
        for name, w in choose(s).items():
            for t, p in game.action(s, name).dist.items():
                row[t] = row.get(t, 0) + w * p
        rows.append(row)
    return rows


def _reach(rows, initial: Mapping[int, Number], targets) -> Number:
    vec = absorption(rows, {t: Fraction(1) for t in targets})
    return sum(p * vec[s] for s, p in initial.items())


def _paths(rows, initial, project, length: int) -> Dict[tuple, Number]:
    """Distribution over projected paths of the given length."""
    out: Dict[tuple, Number] = {}
    frontier = [((project(s),), s, p) for s, p in initial.items() if p]
    for _ in range(length):
        nxt = []
        for path, s, p in frontier:
            for t, q in rows[s].items():
                if q:
                    nxt.append((path + (project(t),), t, p * q))
        frontier = nxt
    for path, _, p in frontier:
        out[path] = out.get(path, 0) + p
    return out


def _label_states(game, label) -> set:
    return set(game.label(label))


# ---------------------------------------------------------------------------
# The five checks


@dataclass
class Failure:
    check: str
    seed: str
    detail: dict


@dataclass
class LemmaReport:
    trials: int
    passed: Dict[str, int] = field(default_factory=lambda: {c: 0 for c in CHECKS})
    failures: List[Failure] = field(default_factory=list)
    seeds: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _show(strategy: Optional[Strategy], model: Game):
    if strategy is None:
        return None
    out = {}
    for (s, c), dist in sorted(strategy.rule.items(), key=lambda kv: (kv[0][0], kv[0][1] or 0)):
        key = model.names[s] if c is None else f"({model.names[s]},{c})"
        out[key] = {a: str(p) for a, p in dist.items()}
    return out


def check_induced_mdp(model: Game, rng: random.Random, length: int = 5):
    pi = random_strategy(rng, model, Player.ONE)
    sigma = _optional(random_strategy(rng, model, Player.TWO))
    delta = random_strategy(rng, model, Player.DISTURBER)
    mc = induced_mc(model, pi, sigma, delta)
    lhs = _paths(mc.rows, mc.initial, lambda i: mc.origin[i][0], length)
    mdp = induced_mdp(model, pi)

    def merged(s):
        if mdp.owner[s] == 2:
            return sigma.choice(s)
        pi_name = mdp.actions[s][0].name
        return {pi_name if a == BOTTOM else a: w for a, w in delta.choice(s).items()}

    rhs = _paths(_game_rows(mdp, merged), mdp.initial, lambda s: s, length)
    return lhs == rhs, {"pi": pi, "sigma": sigma, "delta": delta}


def check_unfolding(model: Game, rng: random.Random, k: int = 2, objective: Optional[Objective] = None,
                    unfold_fn=unfold):
    pi = random_strategy(rng, model, Player.ONE, bound=k)
    sigma = _optional(random_strategy(rng, model, Player.TWO, bound=k))
    delta = random_strategy(rng, model, Player.DISTURBER, bound=k)
    mc = induced_mc(model, pi, sigma, delta)
    u = unfold_fn(model, k, reachable_only=False)
    ok = True
    values = {}
    for label in ("G", "B"):
        lhs = _reach(mc.rows, mc.initial, {i for i, o in enumerate(mc.origin) if o[0] in model.label(label)})

        def choose(j):
            key = u.origin[j]
            if key[0] == "state":
                _, s, i = key
                return (pi if model.owner[s] == 1 else sigma).choice(s, i)
            _, s, i, _a = key
            return delta.choice(s, i)

        rhs = _reach(_game_rows(u, choose), u.initial, _label_states(u, label))
        values[label] = (lhs, rhs)
        ok = ok and lhs == rhs
    return ok, {"pi": pi, "sigma": sigma, "delta": delta, "values": values}


def check_gadget(model: Game, rng: random.Random):
    pi = random_strategy(rng, model, Player.ONE)
    sigma = _optional(random_strategy(rng, model, Player.TWO))
    delta = random_strategy(rng, model, Player.DISTURBER)
    mc = induced_mc(model, pi, sigma, delta)
    g = expected_gadget_game(model)

    def choose(j):
        key = g.origin[j]
        if key[0] == "state":
            s = key[1]
            return (pi if model.owner[s] == 1 else sigma).choice(s)
        return delta.choice(key[1])

    rows = _game_rows(g, choose)
    ok = True
    values = {}
    for label in ("G", "B"):
        lhs = _reach(mc.rows, mc.initial, set(mc.label(label)))
        rhs = _reach(rows, g.initial, _label_states(g, label))
        values[label] = (lhs, rhs)
        ok = ok and lhs == rhs
    return ok, {"pi": pi, "sigma": sigma, "delta": delta, "values": values}


def check_iterative_lp(model: Game, rng: random.Random, objective: Objective, k: int = 2):
    bound = rng.choice([None, 1])
    pi = random_strategy(rng, model, Player.ONE, bound=bound)
    mdp = induced_mdp(model, pi)
    target, _, _ = violation_target(mdp, objective)
    levels = transient_iterative_lp(mdp, target, 2, True, k, stop_early=False).values
    direct = unfolded_mdp_values(mdp, target, k)
    monotone = all(a <= b for lo, hi in zip(levels, levels[1:]) for a, b in zip(lo, hi))
    return levels == direct and monotone, {"pi": pi, "levels": levels, "direct": direct}


def _brute_mean_payoff(mdp: Game, comp: MEC) -> Number:
    states = sorted(comp.states)
    options = [sorted(comp.actions[s]) for s in states]
    best = None
    for combo in itertools.product(*options):
        pick = dict(zip(states, combo))
        pos = {s: i for i, s in enumerate(states)}
        rows, costs = [], []
        for s in states:
            a = mdp.action(s, pick[s])
            rows.append({pos[t]: p for t, p in a.dist.items()})
            costs.append(action_cost(a))
        for bscc in bottom_sccs(rows):
            dist = stationary(rows, bscc)
            gain = sum(dist[i] * costs[i] for i in bscc)
            if best is None or gain < best:
                best = gain
    return best


def check_mean_payoff(model: Game, rng: random.Random):
    pi = random_strategy(rng, model, Player.ONE, mixed=False)
    mdp = induced_mdp(model, pi)
    pairs = []
    for comp in mec_decomposition(mdp):
        pairs.append((sorted(comp.states), min_mean_payoff_mec(mdp, comp), _brute_mean_payoff(mdp, comp)))
    return all(a == b for _, a, b in pairs), {"pi": pi, "components": pairs}


def check_lemma_suite(model: Game, objective: Objective, trials: int = 100, seed: int = 0,
                      k: int = 2, unfold_fn=unfold, checks: Sequence[str] = CHECKS) -> LemmaReport:
    """Run every check ``trials`` times with independent seeds.

    ``unfold_fn`` replaces the unfolding construction, which is how mutation
    tests inject a corrupted transform.
    """
    report = LemmaReport(trials)
    for t in range(trials):
        for name in checks:
            tag = f"{seed}:{name}:{t}"
            rng = random.Random(tag)
            report.seeds.append(tag)
            if name == "induced_mdp":
                ok, detail = check_induced_mdp(model, rng)
            elif name == "unfolding":
                ok, detail = check_unfolding(model, rng, k, objective, unfold_fn)
            elif name == "gadget":
                ok, detail = check_gadget(model, rng)
            elif name == "iterative_lp":
                ok, detail = check_iterative_lp(model, rng, objective, k)
            elif name == "mean_payoff":
                ok, detail = check_mean_payoff(model, rng)
            else:
                raise ValueError(f"unknown check {name!r}")
            if ok:
                report.passed[name] += 1
            else:
                shown = {key: (_show(v, model) if isinstance(v, Strategy) or v is None else v)
                         for key, v in detail.items()}
                report.failures.append(Failure(name, tag, shown))
    return report


def unfold_without_budget(model: Game, k: int, reachable_only: bool = True) -> Game:
    """Deliberately broken unfolding for mutation tests: disturbances do not
    consume budget."""
    from .model import Action

    u = unfold(model, k, reachable_only)
    index = {key: j for j, key in enumerate(u.origin)}
    actions = []
    for j, key in enumerate(u.origin):
        acts = list(u.actions[j])
        if key[0] == "gadget" and key[2] >= 1:
            _, s, i, _a = key
            fixed = []
            for a in acts:
                if a.is_disturbance:
                    base = model.action(s, a.name)
                    a = Action(a.name, a.kind, {index[("state", t, i)]: p for t, p in base.dist.items()}, a.cost)
                fixed.append(a)
            acts = fixed
        actions.append(tuple(acts))
    return Game(u.names, u.owner, tuple(actions), dict(u.initial), dict(u.labels), u.origin)


def interesting_objective(model: Game, pi: Strategy, rng: random.Random) -> Objective:
    """Objective whose violation threshold lies between what the adversary
    achieves without disturbances and with unlimited ones, so that random
    instances exercise the finite levels rather than breaking at once."""
    from .solvers import max_reach_mdp

    kind = rng.choice(["reach", "reach", "safety"])
    label = "G" if kind == "reach" else "B"
    base = Objective(kind, label, Fraction(1, 2))
    mdp = induced_mdp(model, pi)
    target, _, _ = violation_target(mdp, base)
    v0 = transient_iterative_lp(mdp, target, 2, True, 0).at(0, mdp.initial)
    vmax = max_reach_mdp(mdp, target).at(mdp.initial)
    if vmax <= v0:
        thr = (v0 + 1) / 2 if v0 < 1 else Fraction(1)
    else:
        thr = rng.choice([vmax, (v0 + vmax) / 2, v0 + (vmax - v0) / 4])
    strict = rng.random() < 0.5 or thr == vmax
    return Objective(kind, label, 1 - thr, strict)


# ---------------------------------------------------------------------------
# Grid-search oracle


def grid_search_expected(model: Game, objective: Objective, pi: Strategy, steps: int = 1000):
    """Minimum expected number of disturbances over randomized memoryless
    disturbers that disturb state s with probability x_s, scanned on a grid
    of ``steps + 1`` points per state. Needs a memoryless ``pi``, exactly two
    disturbable states and an induced MDP without cycles through them.

    Returns (minimum cost, argmin probabilities by state name, violation).
    """
    import numpy as np

    mdp = induced_mdp(model, pi)
    if any(mdp.owner[s] == 2 and len(mdp.actions[s]) > 1 for s in mdp.states()):
        raise ValueError("grid search handles Player-1-only models")
    dstates = [s for s in mdp.states() if mdp.owner[s] == 1 and len(mdp.actions[s]) > 1]
    if len(dstates) != 2:
        raise ValueError("grid search needs exactly two disturbable states")
    target, _, _ = violation_target(mdp, objective)
    n = mdp.n
    absorbing = [s for s in mdp.states() if s in target or mdp.is_sink(s)]
    live = [s for s in mdp.states() if s not in absorbing]
    pos = {s: i for i, s in enumerate(live)}

    def matrix(action_index):
        q = np.zeros((len(live), len(live)))
        r = np.zeros(len(live))
        c = np.zeros(len(live))
        for s in live:
            acts = mdp.actions[s]
            a = acts[min(action_index.get(s, 0), len(acts) - 1)]
            for t, p in a.dist.items():
                if t in pos:
                    q[pos[s], pos[t]] += float(p)
                elif t in target:
                    r[pos[s]] += float(p)
            c[pos[s]] = float(action_cost(a))
        return q, r, c

    q0, r0, c0 = matrix({})
    # Row of each disturbable state under its (single) disturbance.
    q1, r1, c1 = matrix({s: 1 for s in dstates})
    grid = np.linspace(0.0, 1.0, steps + 1)
    xs, ys = np.meshgrid(grid, grid, indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    m = xs.size
    i0, i1 = pos[dstates[0]], pos[dstates[1]]
    q = np.broadcast_to(q0, (m,) + q0.shape).copy()
    r = np.broadcast_to(r0, (m, len(live))).copy()
    c = np.broadcast_to(c0, (m, len(live))).copy()
    for idx, w in ((i0, xs), (i1, ys)):
        q[:, idx, :] = (1 - w)[:, None] * q0[idx] + w[:, None] * q1[idx]
        r[:, idx] = (1 - w) * r0[idx] + w * r1[idx]
        c[:, idx] = (1 - w) * c0[idx] + w * c1[idx]
    eye = np.eye(len(live))
    lhs = eye[None, :, :] - q
    reach = np.linalg.solve(lhs, r[:, :, None])[:, :, 0]
    cost = np.linalg.solve(lhs, c[:, :, None])[:, :, 0]
    init = np.zeros(len(live))
    for s, p in mdp.initial.items():
        init[pos[s]] += float(p)
    v = reach @ init
    k = cost @ init
    thr = float(objective.violation)
    ok = v >= thr - 1e-12 if objective.strict else v > thr + 1e-12
    if not ok.any():
        return None, None, None
    best = int(np.argmin(np.where(ok, k, np.inf)))
    names = {mdp.names[dstates[0]]: float(xs[best]), mdp.names[dstates[1]]: float(ys[best])}
    return float(k[best]), names, float(v[best])
