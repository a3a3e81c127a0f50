"""Quantitative kernels: reachability values, the threshold-constrained
shortest-path LP, value iteration for games, and mean payoffs of end
components."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .chain import can_reach
from .errors import BudgetExceeded, Infeasible, NotConverged
from .graph import MEC
from .lp import LinearProgram
from .model import Action, Game, Strategy, Player, action_cost
from .numeric import Number, budget_from_env, is_exact

# A row ``(const, {t: p})`` stands for the lower bound V_s >= const + sum p V_t.
Row = Tuple[Number, Mapping[int, Number]]


@dataclass
class ValueVector:
    values: List[Number]
    residual: float = 0.0
    strategy: Optional[Dict[int, str]] = None

    def at(self, initial: Mapping[int, Number]) -> Number:
        return sum(p * self.values[s] for s, p in initial.items())


def least_fixpoint(n: int, rows: Mapping[int, Sequence[Row]], fixed: Mapping[int, Number],
                   lp_log: Optional[list] = None, tag: str = "V") -> List[Number]:
    """Least solution of V_s = max over rows of (const + sum p V_t) with some
    states fixed, computed by the LP min sum V subject to the row bounds.
    All values are assumed to be non-negative."""
    exact = all(is_exact([c] + list(d.values())) for rs in rows.values() for c, d in rs) and is_exact(fixed.values())
    zero = Fraction(0) if exact else 0.0
    values = [zero] * n
    for s, v in fixed.items():
        values[s] = v
    # States that can reach a positive constant or a positive fixed value.
    graph = []
    seeds = [s for s, v in fixed.items() if v > 0]
    for s in range(n):
        if s in fixed:
            graph.append({})
            continue
        succ = {}
        for c, d in rows.get(s, ()):
            if c > 0:
                seeds.append(s)
            for t, p in d.items():
                if p > 0:
                    succ[t] = p
        graph.append(succ)
    live = can_reach(graph, seeds)
    unknown = [s for s in range(n) if s in live and s not in fixed]
    if not unknown:
        return values
    lp = LinearProgram(name=f"reach-{tag}")
    var = {s: lp.var(f"{tag}_{s}") for s in unknown}
    lp.objective = {v: 1 for v in var.values()}
    for s in unknown:
        for k, (c, d) in enumerate(rows.get(s, ())):
            coefs = {var[s]: Fraction(1) if exact else 1.0}
            rhs = c
            for t, p in d.items():
                if t in var:
                    coefs[var[t]] = coefs.get(var[t], 0) - p
                else:
                    rhs += p * values[t]
            lp.add(coefs, ">=", rhs, name=f"r_{s}_{k}")
    if lp_log is not None:
        lp_log.append(lp)
    res = lp.solve()
    if not res.ok:
        raise RuntimeError(f"reachability LP ended with status {res.status}")
    for s in unknown:
        values[s] = res.values[var[s]]
    return values


def _rows_of(game: Game, s: int) -> List[Row]:
    return [(0, a.dist) for a in game.actions[s]]


def max_reach_mdp(game: Game, target: Iterable[int], lp_log=None) -> ValueVector:
    """Maximal probability of reaching ``target`` when every choice (of either
    owner) is made by one maximizing controller."""
    target = set(target)
    one = Fraction(1) if game.exact() else 1.0
    rows = {s: _rows_of(game, s) for s in game.states() if s not in target}
    values = least_fixpoint(game.n, rows, {t: one for t in target}, lp_log)
    strategy = {}
    for s in game.states():
        if s in target:
            continue
        best = max(game.actions[s], key=lambda a: sum(p * values[t] for t, p in a.dist.items()))
        strategy[s] = best.name
    return ValueVector(values, 0.0, strategy)


def value_iteration_sweeps(game: Game, target: Iterable[int], done, max_sweeps: int = 100000) -> Optional[int]:
    """Number of Bellman sweeps of max-reach value iteration (starting from
    the indicator of ``target``) until ``done(value_at_initial)`` holds; None
    if it never does within ``max_sweeps``."""
    target = set(target)
    x = [1.0 if s in target else 0.0 for s in game.states()]
    init = [(s, float(p)) for s, p in game.initial.items()]
    for sweep in range(max_sweeps + 1):
        if done(sum(p * x[s] for s, p in init)):
            return sweep
        y = list(x)
        for s in game.states():
            if s not in target:
                y[s] = max(sum(float(p) * x[t] for t, p in a.dist.items()) for a in game.actions[s])
        if y == x:
            return None
        x = y
    return None


def fix_player1(game: Game, choice: Mapping[int, str]) -> Game:
    """Sub-model where Player-1 states keep only the chosen normal action
    (disturbance actions stay)."""
    actions = []
    for s in game.states():
        if s in choice:
            keep = tuple(a for a in game.actions[s] if a.name == choice[s] or a.is_disturbance)
            actions.append(keep)
        else:
            actions.append(game.actions[s])
    return Game(game.names, game.owner, tuple(actions), game.initial, game.labels, game.origin)


def player1_choices(game: Game) -> List[Tuple[int, List[str]]]:
    return [(s, [a.name for a in game.normal(s)])
            for s in game.states() if game.owner[s] == 1 and len(game.normal(s)) > 1]


def count_profiles(choices) -> int:
    total = 1
    for _, names in choices:
        total *= len(names)
    return total


def enumerate_player1(game: Game, budget: Optional[int] = None):
    """Yield every pure memoryless Player-1 choice map."""
    choices = player1_choices(game)
    budget = budget_from_env() if budget is None else budget
    if count_profiles(choices) > budget:
        raise BudgetExceeded(f"{count_profiles(choices)} Player-1 strategies exceed the budget {budget}")
    states = [s for s, _ in choices]
    for combo in itertools.product(*[names for _, names in choices]):
        yield dict(zip(states, combo))


def max_reach_sg(game: Game, target: Iterable[int], budget: Optional[int] = None) -> ValueVector:
    """Value of the reachability game where Player 2 (together with any
    disturbance actions) maximizes and Player 1 minimizes the probability of
    reaching ``target``. Exact by enumerating pure memoryless Player-1
    strategies; the returned strategy is Player 1's optimal one."""
    target = set(target)
    best = None
    for choice in enumerate_player1(game, budget):
        vec = max_reach_mdp(fix_player1(game, choice), target)
        score = sum(vec.values)
        if best is None or score < best[0]:
            best = (score, vec.values, choice)
    _, values, choice = best
    return ValueVector(values, 0.0, choice)


# ---------------------------------------------------------------------------
# Threshold-constrained stochastic shortest path (flow LP)


STOP = "stop"


@dataclass
class SSPResult:
    value: Number
    witness: Dict[int, Dict[str, Number]]
    flows: Dict[Tuple[int, str], Number]
    reach: Number
    lp: LinearProgram = field(repr=False, default=None)


def ssp_mcmp_lp(mdp: Game, target: Iterable[int], threshold: Number,
                initial: Optional[Mapping[int, Number]] = None, lp_log=None) -> SSPResult:
    """Minimum expected cost to reach ``target`` with probability at least
    ``threshold``.

    Flow variables x[s,a] >= 0 for non-target states; outflow minus inflow is
    at most the initial mass (the difference is mass that gives up), and the
    inflow into the target must reach the threshold. The witness is the
    memoryless randomized strategy x[s,a]/outflow plus an explicit ``stop``
    probability for the mass that gives up (stop = take no further
    disturbance; it can only raise the reach probability at zero cost).
    """
    target = set(target)
    init = dict(mdp.initial if initial is None else initial)
    exact = mdp.exact() and is_exact(init.values()) and is_exact([threshold])
    zero = Fraction(0) if exact else 0.0
    lp = LinearProgram(name="ssp-mcmp")
    xs: Dict[Tuple[int, str], str] = {}
    for s in mdp.states():
        if s in target:
            continue
        for a in mdp.actions[s]:
            xs[(s, a.name)] = lp.var(f"x_{s}_{a.name}")
    lp.objective = {xs[(s, a.name)]: action_cost(a) for s in mdp.states() if s not in target
                    for a in mdp.actions[s] if action_cost(a) != 0}
    inflow: Dict[int, Dict[str, Number]] = {s: {} for s in mdp.states()}
    for s in mdp.states():
        if s in target:
            continue
        for a in mdp.actions[s]:
            v = xs[(s, a.name)]
            for t, p in a.dist.items():
                inflow[t][v] = inflow[t].get(v, 0) + p
    for s in mdp.states():
        if s in target:
            continue
        coefs: Dict[str, Number] = {}
        for a in mdp.actions[s]:
            coefs[xs[(s, a.name)]] = coefs.get(xs[(s, a.name)], 0) + 1
        for v, p in inflow[s].items():
            coefs[v] = coefs.get(v, 0) - p
        lp.add(coefs, "<=", init.get(s, zero), name=f"flow_{s}")
    reach_coefs: Dict[str, Number] = {}
    for t in target:
        for v, p in inflow[t].items():
            reach_coefs[v] = reach_coefs.get(v, 0) + p
    start_mass = sum(init.get(t, zero) for t in target)
    lp.add(reach_coefs, ">=", threshold - start_mass, name="reach")
    if lp_log is not None:
        lp_log.append(lp)
    res = lp.solve()
    if res.status == "infeasible":
        raise Infeasible("target cannot be reached with the required probability")
    if not res.ok:
        raise RuntimeError(f"SSP LP ended with status {res.status}")
    flows = {key: res.values[v] for key, v in xs.items()}
    received: Dict[int, Number] = {s: zero for s in mdp.states()}
    for (s, name), x in flows.items():
        if x != 0:
            for t, p in mdp.action(s, name).dist.items():
                received[t] += x * p
    witness: Dict[int, Dict[str, Number]] = {}
    for s in mdp.states():
        if s in target:
            continue
        out = {a.name: flows[(s, a.name)] for a in mdp.actions[s]}
        supply = init.get(s, zero) + received[s]
        total = sum(out.values())
        if supply == 0:
            continue
        rule = {name: x / supply for name, x in out.items() if x != 0}
        rest = 1 - total / supply
        if rest != 0:
            rule[STOP] = rest
        witness[s] = rule
    reach = start_mass + sum(reach_coefs.get(v, 0) * res.values[v] for v in reach_coefs)
    return SSPResult(res.objective, witness, flows, reach, lp)


def evaluate_flow_witness(mdp: Game, target: Iterable[int], witness: Mapping[int, Mapping[str, Number]]):
    """(reach probability, expected cost) of the witness strategy, with
    ``stop`` treated as a jump to a non-target absorbing state."""
    from .chain import absorption, expected_total_cost

    target = set(target)
    n = mdp.n
    stop = n
    rows = []
    costs = []
    for s in mdp.states():
        row: Dict[int, Number] = {}
        cost = 0
        if s in target or s not in witness:
            rows.append({s: 1} if s in target else {stop: 1})
            costs.append(0)
            continue
        for name, w in witness[s].items():
            if name == STOP:
                row[stop] = row.get(stop, 0) + w
                continue
            a = mdp.action(s, name)
            cost += w * action_cost(a)
            for t, p in a.dist.items():
                row[t] = row.get(t, 0) + w * p
        rows.append(row)
        costs.append(cost)
    rows.append({stop: 1})
    costs.append(0)
    reach = absorption(rows, {t: 1 for t in target})
    prob = sum(p * reach[s] for s, p in mdp.initial.items())
    cost = expected_total_cost(rows, costs, mdp.initial, set(target) | {stop})
    return prob, cost


# ---------------------------------------------------------------------------
# Mean payoff of end components


def min_mean_payoff_mec(game: Game, component: MEC, opponent_only: bool = True,
                        budget: Optional[int] = None, weight=None) -> Number:
    """Minimum long-run average cost of staying inside ``component`` forever.

    ``weight(s, action)`` says how many steps an action counts for (default
    1); the value is then cost per counted step. The gadget games use it so
    that the auxiliary hop into a gadget state is not counted.

    With ``opponent_only`` every kept action belongs to the minimizer and the
    value is the occupation-measure LP over the component (optimal gains of a
    communicating MDP are state independent). Otherwise Player-1 states
    maximize: pure Player-1 choices inside the component are enumerated, and
    for each the minimizer picks the cheapest end component it can stay in.
    """
    if opponent_only:
        return _mdp_mean_payoff(game, component, weight)
    p1 = [s for s in sorted(component.states) if game.owner[s] == 1 and len(
        [n for n in component.actions[s] if not game.action(s, n).is_disturbance]) > 1]
    options = [sorted(n for n in component.actions[s] if not game.action(s, n).is_disturbance) for s in p1]
    budget = budget_from_env() if budget is None else budget
    total = 1
    for o in options:
        total *= len(o)
    if total > budget:
        raise BudgetExceeded("too many Player-1 strategies inside the component")
    from .graph import mec_decomposition

    best = None
    for combo in itertools.product(*options):
        fixed = dict(zip(p1, combo))

        def allowed(s, a, fixed=fixed):
            if a.name not in component.actions[s]:
                return False
            if s in fixed and not a.is_disturbance:
                return a.name == fixed[s]
            return True

        subs = mec_decomposition(game, component.states, allowed)
        if not subs:
            continue
        value = min(_mdp_mean_payoff(game, m, weight) for m in subs)
        if best is None or value > best:
            best = value
    if best is None:
        raise ValueError("component has no end component under any Player-1 strategy")
    return best


def _mdp_mean_payoff(game: Game, component: MEC, weight=None) -> Number:
    lp = LinearProgram(name="mean-payoff")
    xs = {}
    for s in sorted(component.states):
        for name in sorted(component.actions[s]):
            xs[(s, name)] = lp.var(f"x_{s}_{name}")
    lp.objective = {v: action_cost(game.action(s, name)) for (s, name), v in xs.items()}
    if weight is None:
        lp.add({v: 1 for v in xs.values()}, "=", 1, name="mass")
    else:
        lp.add({v: weight(s, name) for (s, name), v in xs.items()}, "=", 1, name="mass")
    for t in sorted(component.states):
        coefs: Dict[str, Number] = {}
        for name in component.actions[t]:
            v = xs[(t, name)]
            coefs[v] = coefs.get(v, 0) + 1
        for (s, name), v in xs.items():
            p = game.action(s, name).dist.get(t, 0)
            if p:
                coefs[v] = coefs.get(v, 0) - p
        lp.add(coefs, "=", 0, name=f"balance_{t}")
    res = lp.solve()
    if not res.ok:
        raise RuntimeError(f"mean-payoff LP ended with status {res.status}")
    return res.objective


# ---------------------------------------------------------------------------
# Threshold-constrained shortest path on games (value iteration)


def _lagrangian_vi(game: Game, target, lam: float, precision: float, max_iter: int):
    """Value iteration for max_P1 min_P2 E[cost - lam * 1{reach target}].

    Values start at 0, an upper bound for the minimizer because it can always
    stop disturbing; the iteration is monotone from there."""
    x = [0.0] * game.n
    for t in target:
        x[t] = -lam
    for it in range(max_iter):
        y = list(x)
        delta = 0.0
        for s in game.states():
            if s in target:
                continue
            vals = [float(action_cost(a)) + sum(float(p) * x[t] for t, p in a.dist.items())
                    for a in game.actions[s]]
            y[s] = max(vals) if game.owner[s] == 1 else min(vals)
            delta = max(delta, abs(y[s] - x[s]))
        x = y
        if delta < precision:
            return x, delta
    raise NotConverged("value iteration did not converge", residual=delta)


def _p1_greedy(game: Game, x, target):
    choice = {}
    for s in game.states():
        if game.owner[s] == 1 and s not in target and len(game.normal(s)) > 1:
            best = max(game.normal(s), key=lambda a: float(action_cost(a)) + sum(
                float(p) * x[t] for t, p in a.dist.items()))
            choice[s] = best.name
    return choice


def ssp_sg_vi(game: Game, target: Iterable[int], threshold: Number,
              precision: float = 1e-8, max_iter: int = 200000):
    """Approximate max over Player-1 strategies of the minimum expected cost
    with which Player 2 reaches ``target`` with probability >= threshold.

    The probability constraint is dualized: for a multiplier lam the game
    max_P1 min_P2 E[cost - lam * reach] is solved by value iteration, and the
    answer is max over lam of lam * threshold + that value (a concave
    function of lam for each fixed Player-1 strategy; pure memoryless
    Player-1 strategies suffice for every fixed lam). A geometric grid
    followed by golden-section refinement locates the maximum.

    Returns ``(value, player1_choice)``.
    """
    import math

    target = set(target)
    thr = float(threshold)
    init = [(s, float(p)) for s, p in game.initial.items()]
    reachable = float(max_reach_sg(game, target).at(game.initial))
    if reachable < thr - 1e-12:
        raise Infeasible(f"Player 1 keeps the target probability at {reachable} < {thr}")

    def score(lam):
        x, _ = _lagrangian_vi(game, target, lam, precision / 10, max_iter)
        return lam * thr + sum(p * x[s] for s, p in init), x

    grid = [0.0] + [2.0 ** (j / 2) for j in range(-16, 41)]
    scores = [score(l)[0] for l in grid]
    j = max(range(len(grid)), key=lambda i: (scores[i], -i))
    lo = grid[max(j - 1, 0)]
    hi = grid[min(j + 1, len(grid) - 1)]
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = score(c)[0], score(d)[0]
    while b - a > precision * max(1.0, b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = score(c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = score(d)[0]
    lam = (a + b) / 2
    value, x = score(lam)
    value = max(value, scores[j])
    if value > scores[j]:
        choice = _p1_greedy(game, x, target)
    else:
        choice = _p1_greedy(game, score(grid[j])[1], target)
    return value, choice
