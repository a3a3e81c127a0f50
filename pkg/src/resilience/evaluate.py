"""Breaking points of a fixed Player-1 strategy.

Both evaluations work on the induced MDP M_pi, where Player 2 and the
disturber act as one adversary trying to violate the objective. The adversary
"breaks" the strategy once the probability of the violation event reaches
1 - threshold (strict objectives) or exceeds it (non-strict objectives).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Set

from .errors import BudgetExceeded, Infeasible, PreconditionViolated
from .graph import MEC, compute_B, compute_R, union
from .model import BOTTOM, BreakingPoint, Game, Objective, Strategy
from .numeric import Number, breaks, budget_from_env, same, tolerance
from .solvers import (least_fixpoint, max_reach_mdp, min_mean_payoff_mec,
                      ssp_mcmp_lp, value_iteration_sweeps)
from .transforms import induced_mdp, weighted_mec_quotient

__all__ = [
    "EvalReport", "TransientLP", "expected_breaking_point", "worst_case_breaking_point",
    "transient_iterative_lp", "unfolded_mdp_values", "worst_case_frequency", "violation_target",
]


@dataclass
class EvalReport:
    breaking_point: BreakingPoint
    case: str
    attained: bool = True
    witness: Optional[Dict[str, Dict[str, Number]]] = None
    intermediate: Dict[str, object] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)
    model: Optional[Game] = None


def violation_target(mdp: Game, objective: Objective):
    """States the adversary wants to reach (with finitely many disturbances):
    the bad label for safety, the B-components for reachability.
    Returns (target states, B components or None, goal states or None)."""
    if objective.kind == "safety":
        return set(objective.targets(mdp)), None, None
    goal = set(objective.targets(mdp))
    comps = compute_B(mdp, goal)
    return union(comps), comps, goal


def _names(mdp: Game, states) -> List[str]:
    return [mdp.names[s] for s in sorted(states)]


def _comp_names(mdp: Game, comps: Sequence[MEC]) -> List[List[str]]:
    return [_names(mdp, c.states) for c in comps]


def _reach(mdp: Game, target) -> Number:
    return max_reach_mdp(mdp, target).at(mdp.initial)


def _strictly_above(value, threshold) -> bool:
    return value > threshold + tolerance(value, threshold)


# ---------------------------------------------------------------------------
# Expected breaking point


def expected_breaking_point(model: Game, objective: Objective, pi: Strategy,
                            lp_log: Optional[list] = None) -> EvalReport:
    """Expected breaking point of ``pi``: the minimum expected number of
    disturbances (or, when infinitely many are needed, the minimum expected
    disturbance frequency) with which the objective is violated."""
    mdp = induced_mdp(model, pi)
    thr = objective.violation
    strict = objective.strict
    bad, b_comps, goal = violation_target(mdp, objective)
    v_bad = _reach(mdp, bad)
    info = {"reach_B": v_bad, "B": _names(mdp, bad)}
    if b_comps is not None:
        info["B_components"] = _comp_names(mdp, b_comps)
    if breaks(v_bad, thr, strict):
        ssp = ssp_mcmp_lp(mdp, bad, thr, lp_log=lp_log)
        attained = strict or _strictly_above(ssp.reach, thr)
        witness = {mdp.names[s]: dict(rule) for s, rule in ssp.witness.items()}
        case = "Case 1" if objective.kind == "reach" else "safety: breakable"
        return EvalReport(BreakingPoint.finite(ssp.value), case, attained, witness, info, model=mdp)
    if objective.kind == "safety":
        return EvalReport(BreakingPoint.unbreakable(), "safety: unbreakable", True, None, info, model=mdp)
    r_comps = compute_R(mdp, goal)
    region = set(bad) | union(r_comps)
    v_region = _reach(mdp, region)
    info["R_components"] = _comp_names(mdp, r_comps)
    info["reach_BR"] = v_region
    if not breaks(v_region, thr, strict):
        return EvalReport(BreakingPoint.unbreakable(), "Case 2", True, None, info, model=mdp)
    payoff = {c: min_mean_payoff_mec(mdp, c) for c in r_comps}
    info["mean_payoffs"] = {",".join(_names(mdp, c.states)): payoff[c] for c in r_comps}
    wq = weighted_mec_quotient(mdp, r_comps, payoff)
    target = {wq.state_map[s] for s in bad} | {wq.s_plus}
    ssp = ssp_mcmp_lp(wq.quotient, target, thr, lp_log=lp_log)
    attained = strict or _strictly_above(ssp.reach, thr)
    q = wq.quotient
    witness = {q.names[s]: dict(rule) for s, rule in ssp.witness.items()}
    return EvalReport(BreakingPoint.omega(ssp.value), "Case 3", attained, witness, info, model=mdp)


# ---------------------------------------------------------------------------
# Worst-case breaking point


@dataclass
class TransientLP:
    level: Optional[int]  # smallest breaking level, None if not within k
    values: List[List[Number]]  # values[i][s] = max violation prob with i disturbances
    witness: Dict[str, Dict[str, Number]] = field(default_factory=dict)

    def at(self, i: int, initial: Mapping[int, Number]) -> Number:
        return sum(p * self.values[i][s] for s, p in initial.items())


def _level_rows(mdp: Game, target, prev: Optional[List[Number]]):
    rows = {}
    for s in mdp.states():
        if s in target:
            continue
        rs = []
        for a in mdp.actions[s]:
            if a.is_disturbance:
                if prev is None:
                    continue
                rs.append((sum(p * prev[t] for t, p in a.dist.items()), {}))
            else:
                rs.append((0, a.dist))
        rows[s] = rs
    return rows


def transient_iterative_lp(mdp: Game, target, threshold: Number, strict: bool, k: int,
                           lp_log: Optional[list] = None, stop_early: bool = True) -> TransientLP:
    """Sequence of reachability LPs on M_pi, one per disturbance budget.

    Level 0 is the max-reach LP without disturbance rows. Level i adds, for
    every disturbance d at s, the row V[s,i] >= T_d(s) . V[.,i-1] with the
    previous level's values as constants; the strategy's own actions and all
    Player-2 actions reference level i. Returns the smallest level whose value
    at the initial distribution breaks the threshold.
    """
    target = set(target)
    one = Fraction(1) if mdp.exact() else 1.0
    values: List[List[Number]] = []
    found = None
    for i in range(k + 1):
        rows = _level_rows(mdp, target, values[-1] if values else None)
        vec = least_fixpoint(mdp.n, rows, {t: one for t in target}, lp_log, tag=f"V{i}")
        values.append(vec)
        if found is None and breaks(sum(p * vec[s] for s, p in mdp.initial.items()), threshold, strict):
            found = i
            if stop_early:
                break
    result = TransientLP(found, values)
    result.witness = _transient_witness(mdp, target, values)
    return result


def _transient_witness(mdp: Game, target, values) -> Dict[str, Dict[str, Number]]:
    """Step-counting adversary read off the tight LP rows: at (s, i) pick the
    first action whose row attains V[s,i]."""
    out = {}
    for i, vec in enumerate(values):
        prev = values[i - 1] if i > 0 else None
        for s in mdp.states():
            if s in target or len(mdp.actions[s]) == 1:
                continue
            best = None
            for a in mdp.actions[s]:
                if a.is_disturbance:
                    if prev is None:
                        continue
                    val = sum(p * prev[t] for t, p in a.dist.items())
                else:
                    val = sum(p * vec[t] for t, p in a.dist.items())
                if same(val, vec[s]):
                    best = a
                    break
            if best is None:
                continue
            name = best.name
            if mdp.owner[s] == 1 and not best.is_disturbance:
                name = BOTTOM
            out[f"({mdp.names[s]},{i})"] = {name: Fraction(1)}
    return out


def unfolded_mdp_values(mdp: Game, target, k: int, lp_log: Optional[list] = None) -> List[List[Number]]:
    """Max violation probabilities from a single LP over the unfolded MDP
    S x {0..k}; used to cross-check the level-by-level LPs."""
    from .transforms import product_with_counter

    prod = product_with_counter(mdp, k)
    tgt = {j for j, o in enumerate(prod.origin) if o[1] in set(target)}
    vec = max_reach_mdp(prod, tgt, lp_log).values
    return [[vec[i * mdp.n + s] for s in mdp.states()] for i in range(k + 1)]


def worst_case_frequency(mdp: Game, bad: Set[int], r_comps: Sequence[MEC], threshold: Number,
                         strict: bool, payoffs: Optional[Mapping[MEC, Number]] = None):
    """Realistic worst-case disturbance frequency via component removal.

    B-states have frequency 0 and each component of R its minimum mean
    payoff. Components are removed in order of decreasing frequency (ties:
    smallest state-index set first) until the remaining region can no longer
    be reached with a breaking probability; the frequency of the last removed
    component is returned, together with the removal trace.
    """
    if payoffs is None:
        payoffs = {c: min_mean_payoff_mec(mdp, c) for c in r_comps}
    remaining = list(r_comps)
    if breaks(_reach(mdp, bad), threshold, strict):
        raise PreconditionViolated("B alone already breaks the strategy")
    if not breaks(_reach(mdp, set(bad) | union(remaining)), threshold, strict):
        raise PreconditionViolated("B and R together do not break the strategy")
    trace = []
    last = None
    while True:
        region = set(bad) | union(remaining)
        v = _reach(mdp, region)
        trace.append((last, v))
        if not breaks(v, threshold, strict):
            return last, trace
        top = max(payoffs[c] for c in remaining)
        pick = min((c for c in remaining if payoffs[c] == top), key=MEC.key)
        remaining.remove(pick)
        last = payoffs[pick]


def worst_case_breaking_point(model: Game, objective: Objective, pi: Strategy,
                              max_levels: Optional[int] = None,
                              lp_log: Optional[list] = None) -> EvalReport:
    """Worst-case breaking point of ``pi``: the least number of disturbances
    that almost surely suffices to violate the objective, or the realistic
    worst-case disturbance frequency when no finite number does."""
    mdp = induced_mdp(model, pi)
    thr = objective.violation
    strict = objective.strict
    max_levels = budget_from_env(10_000) if max_levels is None else max_levels
    bad, b_comps, goal = violation_target(mdp, objective)
    v_bad = _reach(mdp, bad)
    info: Dict[str, object] = {"reach_B": v_bad, "B": _names(mdp, bad)}
    if b_comps is not None:
        info["B_components"] = _comp_names(mdp, b_comps)

    if _strictly_above(v_bad, thr):
        sweeps = value_iteration_sweeps(mdp, bad, lambda v: v > float(thr) + 1e-12)
        info["vi_bound"] = sweeps
        limit = max_levels if sweeps is None else min(max_levels, max(sweeps, 0) + 1)
        lp = transient_iterative_lp(mdp, bad, thr, strict, limit, lp_log)
        if lp.level is None and limit < max_levels:
            # Floating-point VI bound was too tight; continue up to the cap.
            lp = transient_iterative_lp(mdp, bad, thr, strict, max_levels, lp_log)
        info["levels"] = [lp.at(i, mdp.initial) for i in range(len(lp.values))]
        if lp.level is None:
            report = EvalReport(BreakingPoint.omega(Fraction(0)), "Case 1", False, None, info, model=mdp)
            report.diagnostics.append(f"level budget {max_levels} exhausted before the threshold was crossed")
            raise BudgetExceeded(report.diagnostics[-1])
        return EvalReport(BreakingPoint.finite(lp.level), "Case 1", True, lp.witness, info, model=mdp)

    if same(v_bad, thr) and strict:
        rounds = len(mdp.disturbance_edges())
        lp = transient_iterative_lp(mdp, bad, thr, strict, rounds, lp_log)
        info["levels"] = [lp.at(i, mdp.initial) for i in range(len(lp.values))]
        if lp.level is not None:
            return EvalReport(BreakingPoint.finite(lp.level), "Case 2(a)", True, lp.witness, info, model=mdp)
        zero = Fraction(0) if mdp.exact() else 0.0
        return EvalReport(BreakingPoint.omega(zero), "Case 2(b)", False, None, info, model=mdp)

    if objective.kind == "safety":
        return EvalReport(BreakingPoint.unbreakable(), "Case 3: safety", True, None, info, model=mdp)
    r_comps = compute_R(mdp, goal)
    region = set(bad) | union(r_comps)
    v_region = _reach(mdp, region)
    info["R_components"] = _comp_names(mdp, r_comps)
    info["reach_BR"] = v_region
    if not breaks(v_region, thr, strict):
        return EvalReport(BreakingPoint.unbreakable(), "Case 3: unbreakable", True, None, info, model=mdp)
    payoffs = {c: min_mean_payoff_mec(mdp, c) for c in r_comps}
    info["mean_payoffs"] = {",".join(_names(mdp, c.states)): payoffs[c] for c in r_comps}
    freq, trace = worst_case_frequency(mdp, bad, r_comps, thr, strict, payoffs)
    info["removal_trace"] = trace
    return EvalReport(BreakingPoint.omega(freq), "Case 3: frequency", True, None, info, model=mdp)
