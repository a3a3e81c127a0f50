"""Solver-neutral linear programs and a dense two-phase simplex.

The simplex works over any ordered field; with Fractions it is exact, with
floats it uses a small pivot tolerance. Bland's rule keeps it from cycling.
Problem sizes in this package are small, so a dense tableau is enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from .numeric import FLOAT_TOL, Number, fmt


@dataclass
class Constraint:
    coefs: Dict[str, Number]
    rel: str  # "<=", ">=", "="
    rhs: Number
    name: Optional[str] = None


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: Optional[Number] = None
    values: Dict[str, Number] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass
class LinearProgram:
    """min/max c.x subject to linear rows, all variables non-negative."""

    variables: List[str] = field(default_factory=list)
    objective: Dict[str, Number] = field(default_factory=dict)
    sense: str = "min"
    constraints: List[Constraint] = field(default_factory=list)
    name: str = "lp"

    def __post_init__(self):
        self._known = set(self.variables)

    def var(self, name: str) -> str:
        if name not in self._known:
            self._known.add(name)
            self.variables.append(name)
        return name

    def add(self, coefs: Dict[str, Number], rel: str, rhs: Number, name=None) -> None:
        if rel not in ("<=", ">=", "="):
            raise ValueError(f"bad relation {rel!r}")
        for v in coefs:
            if v not in self._known:
                raise ValueError(f"constraint references undeclared variable {v!r}")
        self.constraints.append(Constraint(dict(coefs), rel, rhs, name))

    def solve(self) -> LPResult:
        return simplex(self)

    def to_text(self) -> str:
        """CPLEX-LP style rendering, for inspection with external tools."""
        def form(coefs):
            parts = []
            for v, c in coefs.items():
                if c == 0:
                    continue
                sign = "-" if c < 0 else "+"
                mag = abs(c)
                parts.append(f"{sign} {v}" if mag == 1 else f"{sign} {fmt(mag)} {v}")
            if not parts:
                return "0"
            text = " ".join(parts)
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.name}", "Minimize" if self.sense == "min" else "Maximize"]
        lines.append(f" obj: {form(self.objective)}")
        lines.append("Subject To")
        for i, c in enumerate(self.constraints):
            label = c.name or f"c{i}"
            lines.append(f" {label}: {form(c.coefs)} {c.rel} {fmt(c.rhs)}")
        lines.append("Bounds")
        for v in self.variables:
            lines.append(f" {v} >= 0")
        lines.append("End")
        return "\n".join(lines) + "\n"


def _exact(lp: LinearProgram) -> bool:
    nums = list(lp.objective.values())
    for c in lp.constraints:
        nums.extend(c.coefs.values())
        nums.append(c.rhs)
    return all(not isinstance(x, float) for x in nums)


def simplex(lp: LinearProgram) -> LPResult:
    exact = _exact(lp)
    eps = 0 if exact else FLOAT_TOL
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    names = list(lp.variables)
    col = {v: j for j, v in enumerate(names)}
    n = len(names)
    rows = []
    rels = []
    rhs = []
    for c in lp.constraints:
        r = [zero] * n
        for v, a in c.coefs.items():
            r[col[v]] += a
        b = c.rhs
        rel = c.rel
        if b < 0:
            r = [-x for x in r]
            b = -b
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append(r)
        rels.append(rel)
        rhs.append(one * b)
    m = len(rows)

    # Column layout: originals, slack/surplus, artificials.
    n_slack = sum(1 for r in rels if r != "=")
    n_art = sum(1 for r in rels if r != "<=")
    total = n + n_slack + n_art
    tableau = []
    basis = []
    art_cols = []
    s_idx, a_idx = n, n + n_slack
    for r, rel, b in zip(rows, rels, rhs):
        line = r + [zero] * (n_slack + n_art) + [b]
        if rel == "<=":
            line[s_idx] = one
            basis.append(s_idx)
            s_idx += 1
        else:
            if rel == ">=":
                line[s_idx] = -one
                s_idx += 1
            line[a_idx] = one
            basis.append(a_idx)
            art_cols.append(a_idx)
            a_idx += 1
        tableau.append(line)

    def reduced(costs):
        z = list(costs) + [zero]
        for i, bcol in enumerate(basis):
            cb = costs[bcol]
            if cb != 0:
                line = tableau[i]
                for j in range(total + 1):
                    if line[j] != 0:
                        z[j] -= cb * line[j]
        return z

    def pivot(r, c, z):
        line = tableau[r]
        p = line[c]
        if p != one:
            tableau[r] = line = [x / p for x in line]
        nz = [j for j in range(total + 1) if line[j] != 0]
        for i in range(m):
            if i != r:
                f = tableau[i][c]
                if f != 0:
                    row_i = tableau[i]
                    for j in nz:
                        row_i[j] -= f * line[j]
        f = z[c]
        if f != 0:
            for j in nz:
                z[j] -= f * line[j]
        basis[r] = c

    def run(z, allowed):
        while True:
            enter = next((j for j in range(total) if allowed[j] and z[j] < -eps), None)
            if enter is None:
                return "optimal"
            best = None
            for i in range(m):
                a = tableau[i][enter]
                if a > eps:
                    ratio = tableau[i][-1] / a
                    if best is None or ratio < best[0] - eps or (
                            abs(ratio - best[0]) <= eps and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            pivot(best[1], enter, z)

    allowed = [True] * total
    if art_cols:
        c1 = [zero] * total
        for j in art_cols:
            c1[j] = one
        z = reduced(c1)
        run(z, allowed)
        if -z[-1] > eps:
            return LPResult("infeasible")
        art = set(art_cols)
        # Drive remaining artificials out of the basis.
        i = 0
        while i < m:
            if basis[i] in art:
                j = next((j for j in range(n + n_slack) if abs(tableau[i][j]) > eps), None)
                if j is None:
                    del tableau[i]
                    del basis[i]
                    m -= 1
                    continue
                pivot(i, j, z)
            i += 1
        for j in art_cols:
            allowed[j] = False
            for line in tableau:
                line[j] = zero

    sign = one if lp.sense == "min" else -one
    c2 = [zero] * total
    for v, a in lp.objective.items():
        c2[col[v]] += sign * a
    z = reduced(c2)
    status = run(z, allowed)
    if status != "optimal":
        return LPResult(status)
    values = {v: zero for v in names}
    for i, bcol in enumerate(basis):
        if bcol < n:
            values[names[bcol]] = tableau[i][-1]
    obj = sum(lp.objective.get(v, 0) * values[v] for v in names)
    return LPResult("optimal", obj if exact else float(obj), values)
