"""Markov chain analysis: absorption probabilities, bottom SCCs and stationary
distributions. All routines are exact when the chain holds Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Set

import networkx as nx

from .numeric import Number


def solve_linear(matrix: List[List[Number]], rhs: List[Number]) -> List[Number]:
    """Gaussian elimination with partial pivoting (exact for Fractions)."""
    n = len(rhs)
    a = [list(row) + [b] for row, b in zip(matrix, rhs)]
    exact = all(not isinstance(x, float) for row in a for x in row)
    for col in range(n):
        if exact:
            piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        else:
            piv = max(range(col, n), key=lambda r: abs(a[r][col]))
            if abs(a[piv][col]) < 1e-300:
                piv = None
        if piv is None:
            raise ZeroDivisionError("singular linear system")
        a[col], a[piv] = a[piv], a[col]
        pivot_row = a[col]
        inv = 1 / pivot_row[col] if not exact else Fraction(1) / pivot_row[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] * inv
                row = a[r]
                for c in range(col, n + 1):
                    if pivot_row[c] != 0:
                        row[c] -= factor * pivot_row[c]
    return [a[i][n] / a[i][i] for i in range(n)]


def graph_of(rows: Sequence[Mapping[int, Number]]) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(rows)))
    for s, row in enumerate(rows):
        for t, p in row.items():
            if p > 0:
                g.add_edge(s, t)
    return g


def can_reach(rows: Sequence[Mapping[int, Number]], targets: Iterable[int]) -> Set[int]:
    """States with a positive-probability path into ``targets``."""
    g = graph_of(rows).reverse(copy=False)
    result = set()
    for t in targets:
        if t not in result:
            result.add(t)
            result |= nx.descendants(g, t)
    return result


def absorption(rows: Sequence[Mapping[int, Number]], payoff: Mapping[int, Number]) -> List[Number]:
    """Expected terminal payoff: states in ``payoff`` are absorbing with the
    given value, every other state averages its successors. States that cannot
    reach a positive payoff get 0."""
    n = len(rows)
    positive = [s for s, v in payoff.items() if v != 0]
    live = can_reach([{} if s in payoff else row for s, row in enumerate(rows)], positive)
    unknown = [s for s in range(n) if s in live and s not in payoff]
    pos = {s: i for i, s in enumerate(unknown)}
    zero = Fraction(0)
    matrix, rhs = [], []
    for s in unknown:
        line = [zero] * len(unknown)
        line[pos[s]] += 1
        b = zero
        for t, p in rows[s].items():
            if t in payoff:
                b += p * payoff[t]
            elif t in pos:
                line[pos[t]] -= p
        matrix.append(line)
        rhs.append(b)
    values = [zero] * n
    for s, v in payoff.items():
        values[s] = v
    if unknown:
        for s, v in zip(unknown, solve_linear(matrix, rhs)):
            values[s] = v
    return values


def reach_probability(rows, targets: Iterable[int]) -> List[Number]:
    return absorption(rows, {t: Fraction(1) for t in targets})


def bottom_sccs(rows: Sequence[Mapping[int, Number]]) -> List[List[int]]:
    g = graph_of(rows)
    cond = nx.condensation(g)
    out = []
    for c in cond.nodes:
        if cond.out_degree(c) == 0:
            out.append(sorted(cond.nodes[c]["members"]))
    return sorted(out)


def stationary(rows: Sequence[Mapping[int, Number]], members: Sequence[int]) -> Dict[int, Number]:
    """Stationary distribution of a closed recurrent class."""
    members = list(members)
    pos = {s: i for i, s in enumerate(members)}
    k = len(members)
    zero = Fraction(0)
    # x (P - I) = 0 with one equation replaced by sum(x) = 1.
    matrix = [[zero] * k for _ in range(k)]
    for s in members:
        for t, p in rows[s].items():
            matrix[pos[t]][pos[s]] += p
    for i in range(k):
        matrix[i][i] -= 1
    matrix[-1] = [Fraction(1)] * k
    rhs = [zero] * (k - 1) + [Fraction(1)]
    return dict(zip(members, solve_linear(matrix, rhs)))


def long_run_profile(rows, costs, initial):
    """Per bottom SCC: (members, absorption probability, mean cost)."""
    out = []
    for comp in bottom_sccs(rows):
        dist = stationary(rows, comp)
        mean = sum(dist[s] * costs[s] for s in comp)
        reach = absorption(rows, {s: Fraction(1) for s in comp})
        prob = sum(p * reach[s] for s, p in initial.items())
        out.append((comp, prob, mean))
    return out


def expected_total_cost(rows, costs, initial, absorbing: Iterable[int]) -> Number:
    """Expected accumulated cost until ``absorbing`` is hit; assumes every
    state with positive cost is transient (cost is finite)."""
    absorbing = set(absorbing)
    n = len(rows)
    live = [s for s in range(n) if s not in absorbing]
    # Visits are finite only on transient states; restrict to states that
    # leave their recurrent structure eventually. Costs on recurrent states
    # must be zero, so we solve v = c + P v on states that can reach a
    # positive-cost transient state and set the rest to zero.
    positive = [s for s in live if costs[s] != 0]
    relevant = can_reach([{} if s in absorbing else row for s, row in enumerate(rows)], positive)
    unknown = [s for s in live if s in relevant]
    pos = {s: i for i, s in enumerate(unknown)}
    zero = Fraction(0)
    matrix, rhs = [], []
    for s in unknown:
        line = [zero] * len(unknown)
        line[pos[s]] += 1
        for t, p in rows[s].items():
            if t in pos:
                line[pos[t]] -= p
        matrix.append(line)
        rhs.append(costs[s])
    values = [zero] * n
    if unknown:
        for s, v in zip(unknown, solve_linear(matrix, rhs)):
            values[s] = v
    return sum(p * values[s] for s, p in initial.items())
