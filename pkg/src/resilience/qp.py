"""Level-by-level quadratic programs for worst-case synthesis on stopping
games.

Level i has a variable V_{s,i} per state (probability of reaching the good
sinks with i disturbances left) and, from level 1 on, a variable V_{s,i,a}
per Player-1 state and normal action (the value after Player 1 commits to a
and Player 2 decides whether to disturb). Every constraint bounds a
variable by one of its options; the objective multiplies, per state, the
slacks of all options. On a feasible point each product is non-negative,
and the game's values are exactly the feasible point where all of them
vanish.

The programs are nonconvex. They are built, emitted and checked against the
exactly computed values; they are not solved globally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import AssumptionViolated, ParseError
from .lp import Constraint
from .model import Game, Objective
from .numeric import Number, fmt

Form = Dict[str, Number]  # variable -> coefficient; "" holds the constant
CONST = ""


@dataclass
class QuadraticProgram:
    name: str
    level: int
    variables: List[str] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    products: List[Tuple[Form, Form]] = field(default_factory=list)
    describe: Dict[str, str] = field(default_factory=dict)

    def form_value(self, form: Form, x: Mapping[str, Number]) -> Number:
        return sum(c * (1 if v == CONST else x[v]) for v, c in form.items())

    def objective(self, x: Mapping[str, Number]) -> Number:
        return sum(self.form_value(f, x) * self.form_value(g, x) for f, g in self.products)

    def violations(self, x: Mapping[str, Number], tol: Number = 0) -> List[str]:
        bad = []
        for i, c in enumerate(self.constraints):
            lhs = sum(k * x[v] for v, k in c.coefs.items())
            ok = {"<=": lhs <= c.rhs + tol, ">=": lhs >= c.rhs - tol,
                  "=": abs(lhs - c.rhs) <= tol}[c.rel]
            if not ok:
                bad.append(c.name or f"c{i}")
        return bad

    def nonzero_terms(self, x: Mapping[str, Number], tol: Number = 0) -> List[int]:
        return [i for i, (f, g) in enumerate(self.products)
                if abs(self.form_value(f, x) * self.form_value(g, x)) > tol]

    def to_text(self) -> str:
        lines = [f"\\ {self.name}", f"level {self.level}", "variables"]
        for v in self.variables:
            note = self.describe.get(v)
            lines.append(f" {v}" + (f"  \\ {note}" if note else ""))
        lines.append("minimize")
        for f, g in self.products:
            lines.append(f" ( {_form_text(f)} ) * ( {_form_text(g)} )")
        lines.append("subject to")
        for i, c in enumerate(self.constraints):
            lines.append(f" {c.name or f'c{i}'}: {_form_text(c.coefs)} {c.rel} {fmt(c.rhs)}")
        lines.append("end")
        return "\n".join(lines) + "\n"


def _form_text(form: Form) -> str:
    parts = []
    for v, c in form.items():
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {fmt(abs(c))}" + (f" {v}" if v != CONST else ""))
    return " ".join(parts) if parts else "+ 0"


_TERM = re.compile(r"([+-])\s+([0-9./e-]+)(?:\s+([A-Za-z_]\w*))?")


def _parse_form(text: str) -> Form:
    form: Form = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m:
            raise ParseError(f"cannot parse linear form near {text[pos:pos + 20]!r}")
        coef = Fraction(m.group(2))
        if m.group(1) == "-":
            coef = -coef
        key = m.group(3) or CONST
        form[key] = form.get(key, 0) + coef
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return {k: v for k, v in form.items() if v != 0}


def parse_qp_text(text: str) -> QuadraticProgram:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("\\ "):
        raise ParseError("missing header line", line=1)
    qp = QuadraticProgram(lines[0][2:].strip(), 0)
    section = None
    for no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("level "):
            qp.level = int(line.split()[1])
        elif line in ("variables", "minimize", "subject to"):
            section = line
        elif line == "end":
            break
        elif section == "variables":
            name, _, note = line.partition("\\")
            qp.variables.append(name.strip())
            if note.strip():
                qp.describe[name.strip()] = note.strip()
        elif section == "minimize":
            m = re.fullmatch(r"\(\s*(.*?)\s*\)\s*\*\s*\(\s*(.*?)\s*\)", line)
            if not m:
                raise ParseError("malformed product term", line=no)
            qp.products.append((_parse_form(m.group(1)), _parse_form(m.group(2))))
        elif section == "subject to":
            m = re.fullmatch(r"(\S+):\s*(.*?)\s*(<=|>=|=)\s*(\S+)", line)
            if not m:
                raise ParseError("malformed constraint", line=no)
            qp.constraints.append(Constraint(_parse_form(m.group(2)), m.group(3),
                                             Fraction(m.group(4)), m.group(1)))
        else:
            raise ParseError("line outside of any section", line=no)
    return qp


# ---------------------------------------------------------------------------
# Construction


def _good_states(game: Game, objective: Objective) -> set:
    if objective.kind == "reach":
        return set(objective.targets(game))
    bad = set(objective.targets(game))
    return {s for s in game.states() if game.is_sink(s) and s not in bad}


def check_assumptions(game: Game) -> None:
    """Raise AssumptionViolated unless the game is in the normal form the
    programs are written for: at most two normal actions per state (A1), at
    most one disturbance per Player-1 state (A2), and every action of a
    non-sink state leaks positive probability into a B-labelled sink (A3)."""
    sinks_b = {s for s in game.label("B") if game.is_sink(s)}
    for s in game.states():
        if game.is_sink(s):
            continue
        name = game.names[s]
        if len(game.normal(s)) > 2:
            raise AssumptionViolated(f"A1: state {name} has more than two actions")
        if len(game.disturbances(s)) > 1:
            raise AssumptionViolated(f"A2: state {name} has more than one disturbance action")
        for a in game.actions[s]:
            if not any(a.dist.get(t, 0) > 0 for t in sinks_b):
                raise AssumptionViolated(f"A3: action {a.name} at {name} never stops in B")


def _var(s: int, i: int, a: Optional[int] = None) -> str:
    return f"V_{s}_{i}" if a is None else f"V_{s}_{i}_{a}"


def _succ(dist, i: int, prev=None) -> Form:
    """Form for sum_t p(t) V_{t,i}, or the constant it takes on level values."""
    if prev is not None:
        return {CONST: sum(p * prev[t] for t, p in dist.items())}
    out: Form = {}
    for t, p in dist.items():
        out[_var(t, i)] = out.get(_var(t, i), 0) + p
    return out


def _minus(a: Form, b: Form) -> Form:
    out = dict(a)
    for v, c in b.items():
        out[v] = out.get(v, 0) - c
    return {v: c for v, c in out.items() if c != 0}


def _row(form: Form, rel: str, name: str) -> Constraint:
    coefs = {v: c for v, c in form.items() if v != CONST}
    return Constraint(coefs, rel, -form.get(CONST, 0), name)


def build_iterative_qp(game: Game, objective: Objective, level: int,
                       prev: Optional[Sequence[Number]] = None) -> QuadraticProgram:
    """Program for level ``level``; ``prev[s]`` are the level-(i-1) values
    (required for i >= 1)."""
    check_assumptions(game)
    if level > 0 and prev is None:
        raise ValueError("levels above 0 need the previous level's values")
    good = _good_states(game, objective)
    i = level
    qp = QuadraticProgram(f"level-{i}", i)
    one = Fraction(1)

    def declare(v, note):
        qp.variables.append(v)
        qp.describe[v] = note

    for s in game.states():
        declare(_var(s, i), f"({game.names[s]},{i})")
    for s in game.states():
        if game.owner[s] == 1 and not game.is_sink(s) and i > 0:
            for j, a in enumerate(game.normal(s)):
                declare(_var(s, i, j), f"({game.names[s]},{i},{a.name})")

    for s in game.states():
        v = {_var(s, i): one}
        if game.is_sink(s):
            target = one if s in good else Fraction(0)
            qp.constraints.append(Constraint({_var(s, i): one}, "=", target, f"sink_{s}"))
            continue
        slacks = []
        if game.owner[s] == 2 or i == 0:
            # Player 1 maximizes, Player 2 minimizes the good probability.
            rel = ">=" if game.owner[s] == 1 else "<="
            for j, a in enumerate(game.normal(s)):
                slack = _minus(v, _succ(a.dist, i))
                qp.constraints.append(_row(slack, rel, f"opt_{s}_{j}"))
                slacks.append(slack)
        else:
            disturb = game.disturbances(s)
            for j, a in enumerate(game.normal(s)):
                va = {_var(s, i, j): one}
                choose = _minus(v, va)
                qp.constraints.append(_row(choose, ">=", f"choose_{s}_{j}"))
                slacks.append(choose)
                follow = _minus(va, _succ(a.dist, i))
                qp.constraints.append(_row(follow, "<=", f"follow_{s}_{j}"))
                if disturb:
                    hit = _minus(va, _succ(disturb[0].dist, i - 1, prev))
                    qp.constraints.append(_row(hit, "<=", f"disturb_{s}_{j}"))
                    qp.products.append((follow, hit))
                else:
                    qp.products.append((follow, follow))
        if len(slacks) == 1:
            qp.products.append((slacks[0], slacks[0]))
        else:
            qp.products.append((slacks[0], slacks[1]))
    return qp


# ---------------------------------------------------------------------------
# Injection of exact values


def solution_from_values(game: Game, level: int, values: Sequence[Number],
                         prev: Optional[Sequence[Number]] = None) -> Dict[str, Number]:
    """Assignment of the level program from the level's state values: the
    gadget variables take Player 2's better option."""
    x = {_var(s, level): values[s] for s in game.states()}
    if level > 0:
        for s in game.states():
            if game.owner[s] != 1 or game.is_sink(s):
                continue
            disturb = game.disturbances(s)
            for j, a in enumerate(game.normal(s)):
                follow = sum(p * values[t] for t, p in a.dist.items())
                if disturb:
                    hit = sum(p * prev[t] for t, p in disturb[0].dist.items())
                    x[_var(s, level, j)] = min(follow, hit)
                else:
                    x[_var(s, level, j)] = follow
    return x


@dataclass
class LevelCheck:
    level: int
    qp: QuadraticProgram
    solution: Dict[str, Number]
    violated: List[str]
    nonzero_terms: List[int]
    objective: Number

    @property
    def ok(self) -> bool:
        return not self.violated and not self.nonzero_terms and self.objective == 0


def level_values(game: Game, objective: Objective, k: int, budget: Optional[int] = None):
    """Exact good-sink probabilities per level, from the level-wise exact
    solution used by synthesis (the game must be stopping)."""
    from .synthesis import _solve_level

    out = []
    fixed: Dict[Tuple[int, int], str] = {}
    for i in range(k + 1):
        from .numeric import budget_from_env
        choice, values, u = _solve_level(game, objective, i, fixed,
                                         budget_from_env() if budget is None else budget)
        fixed.update(choice)
        index = {o: j for j, o in enumerate(u.origin)}
        out.append([1 - values[index[("state", s, i)]] for s in game.states()])
    return out


def check_iterative_qps(game: Game, objective: Objective, k: int,
                        budget: Optional[int] = None) -> List[LevelCheck]:
    """Build the level programs of a stopping game, inject the exact values
    and report constraint violations and non-vanishing product terms."""
    check_assumptions(game)
    vals = level_values(game, objective, k, budget)
    out = []
    for i in range(k + 1):
        prev = vals[i - 1] if i > 0 else None
        qp = build_iterative_qp(game, objective, i, prev)
        x = solution_from_values(game, i, vals[i], prev)
        out.append(LevelCheck(i, qp, x, qp.violations(x), qp.nonzero_terms(x), qp.objective(x)))
    return out


def local_search(qp: QuadraticProgram, start: Mapping[str, Number], steps: int = 200):
    """Run a local nonlinear solver from ``start``; returns the best
    objective it finds among feasible points (float)."""
    import numpy as np
    from scipy.optimize import minimize

    names = list(qp.variables)
    pos = {v: i for i, v in enumerate(names)}

    def vec_form(form):
        coef = np.zeros(len(names))
        const = 0.0
        for v, c in form.items():
            if v == CONST:
                const += float(c)
            else:
                coef[pos[v]] += float(c)
        return coef, const

    prods = [(vec_form(f), vec_form(g)) for f, g in qp.products]

    def fun(x):
        return sum((a @ x + ca) * (b @ x + cb) for (a, ca), (b, cb) in prods)

    cons = []
    for c in qp.constraints:
        coef, _ = vec_form(c.coefs)
        rhs = float(c.rhs)
        if c.rel == "=":
            cons.append({"type": "eq", "fun": lambda x, a=coef, r=rhs: a @ x - r})
        elif c.rel == ">=":
            cons.append({"type": "ineq", "fun": lambda x, a=coef, r=rhs: a @ x - r})
        else:
            cons.append({"type": "ineq", "fun": lambda x, a=coef, r=rhs: r - a @ x})
    x0 = np.array([float(start[v]) for v in names])
    res = minimize(fun, x0, method="SLSQP", constraints=cons, bounds=[(0, 1)] * len(names),
                   options={"maxiter": steps, "ftol": 1e-14})
    feasible = all((c["fun"](res.x) >= -1e-9) if c["type"] == "ineq" else abs(c["fun"](res.x)) <= 1e-9
                   for c in cons)
    return float(res.fun) if feasible else float(fun(x0))
