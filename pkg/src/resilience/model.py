"""Core model types: games with disturbances, strategies, objectives and
breaking points.

One ``Game`` class covers every model in the package. A stochastic game with
disturbances (SGD) is a game whose Player-1 states may carry disturbance
actions; an MDP is a game where only one side makes decisions; a Markov chain
has a single action per state (see ``MarkovChain`` for the lightweight
version used by the analyses).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

from .errors import StrategyIncompatible
from .numeric import FLOAT_TOL, Number, fmt, is_exact

__all__ = [
    "ActionKind", "Player", "Action", "Game", "SGD", "Diagnostic", "validate",
    "Strategy", "Objective", "ExtendedCount", "BreakingPoint", "BOTTOM",
    "MarkovChain", "induced_mc", "compare_breaking_points", "action_cost",
]

BOTTOM = "⊥"


class ActionKind(enum.Enum):
    NORMAL = "normal"
    DISTURBANCE = "disturbance"


class Player(enum.Enum):
    ONE = 1
    TWO = 2
    DISTURBER = 3


@dataclass(frozen=True)
class Action:
    name: str
    kind: ActionKind
    dist: Mapping[int, Number]
    # Explicit cost; None means the canonical disturbance cost.
    cost: Optional[Number] = None

    @property
    def is_disturbance(self) -> bool:
        return self.kind is ActionKind.DISTURBANCE


def action_cost(action: Action) -> Number:
    if action.cost is not None:
        return action.cost
    return Fraction(1) if action.is_disturbance else Fraction(0)


@dataclass(frozen=True, eq=False)
class Game:
    """Explicit-state turn-based stochastic game.

    ``actions[s]`` lists normal actions first, then disturbance actions.
    ``origin`` optionally records, per state, where a state of a derived model
    comes from (e.g. ``("state", s, i)`` in an unfolding).
    """

    names: Tuple[str, ...]
    owner: Tuple[int, ...]
    actions: Tuple[Tuple[Action, ...], ...]
    initial: Mapping[int, Number]
    labels: Mapping[str, FrozenSet[int]] = field(default_factory=dict)
    origin: Optional[Tuple[tuple, ...]] = None

    @property
    def n(self) -> int:
        return len(self.names)

    def states(self) -> range:
        return range(len(self.names))

    @functools.cached_property
    def _index(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown state {name!r}") from None

    def normal(self, s: int) -> Tuple[Action, ...]:
        return tuple(a for a in self.actions[s] if not a.is_disturbance)

    def disturbances(self, s: int) -> Tuple[Action, ...]:
        return tuple(a for a in self.actions[s] if a.is_disturbance)

    def action(self, s: int, name: str) -> Action:
        for a in self.actions[s]:
            if a.name == name:
                return a
        raise KeyError(f"state {self.names[s]!r} has no action {name!r}")

    def label(self, name: str) -> FrozenSet[int]:
        return frozenset(self.labels.get(name, frozenset()))

    def is_sink(self, s: int) -> bool:
        acts = self.actions[s]
        return len(acts) == 1 and dict(acts[0].dist) == {s: 1}

    def exact(self) -> bool:
        values = [p for acts in self.actions for a in acts for p in a.dist.values()]
        return is_exact(values + list(self.initial.values()))

    def disturbance_edges(self):
        """All (state, disturbance action name) pairs."""
        return [(s, a.name) for s in self.states() for a in self.disturbances(s)]


SGD = Game


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    state: Optional[str] = None
    action: Optional[str] = None

    def __str__(self):
        where = ""
        if self.state is not None:
            where = f" at {self.state}"
            if self.action is not None:
                where += f"/{self.action}"
        return f"{self.severity}: {self.message}{where}"


def _check_distribution(dist, n, exact, diag, state, action, what):
    total = 0
    for t, p in dist.items():
        if not (isinstance(t, int) and 0 <= t < n):
            diag.append(Diagnostic("error", f"{what} targets unknown state {t!r}", state, action))
            continue
        if not p > 0:
            diag.append(Diagnostic("error", f"{what} has non-positive entry", state, action))
        if p > 1:
            diag.append(Diagnostic("error", f"{what} has entry above 1", state, action))
        total += p
    if exact:
        ok = total == 1
    else:
        ok = abs(total - 1) <= 1e-12
    if not ok:
        diag.append(Diagnostic("error", "distribution not normalized", state, action))


def validate(model: Game, sgd: bool = True) -> list:
    """Return a list of diagnostics; empty iff the model is well formed.

    With ``sgd=True`` the stricter SGD invariants apply (disturbances only on
    Player-1 states, labels subsets of the states).
    """
    diag = []
    exact = model.exact()
    n = model.n
    if len(model.owner) != n or len(model.actions) != n:
        diag.append(Diagnostic("error", "state tables have inconsistent lengths"))
        return diag
    if len(set(model.names)) != n:
        diag.append(Diagnostic("error", "duplicate state names"))
    for s in model.states():
        name = model.names[s]
        if model.owner[s] not in (1, 2):
            diag.append(Diagnostic("error", "owner must be 1 or 2", name))
        if not model.normal(s):
            diag.append(Diagnostic("error", "state has no available normal action", name))
        seen = set()
        for a in model.actions[s]:
            if a.name in seen:
                diag.append(Diagnostic("error", "duplicate action name", name, a.name))
            seen.add(a.name)
            if a.name == BOTTOM:
                diag.append(Diagnostic("error", "reserved action name", name, a.name))
            if a.is_disturbance and sgd and model.owner[s] == 2:
                diag.append(Diagnostic("error", "disturbance on Player-2 state", name, a.name))
            what = "disturbance transition" if a.is_disturbance else "transition"
            _check_distribution(a.dist, n, exact, diag, name, a.name, what)
    _check_distribution(model.initial, n, exact, diag, None, None, "initial distribution")
    for label, members in model.labels.items():
        if any(not (0 <= t < n) for t in members):
            diag.append(Diagnostic("error", f"label {label!r} names unknown states"))
    return diag


# ---------------------------------------------------------------------------
# Strategies and objectives


@dataclass(frozen=True)
class Strategy:
    """A (possibly randomized) decision rule.

    ``rule`` maps ``(state, counter)`` to a distribution over action names;
    memoryless strategies use counter ``None``. For step-counting strategies
    ``bound`` is k and counters range over 0..k. The counter tracks how many
    disturbances remain: it starts at k and drops by one on every
    disturbance. For Player 1 and Player 2 it saturates at 0, for the
    disturber it is a budget and counter 0 forces ``BOTTOM``.
    """

    player: Player
    rule: Mapping[Tuple[int, Optional[int]], Mapping[str, Number]]
    bound: Optional[int] = None

    @property
    def memoryless(self) -> bool:
        return self.bound is None

    def choice(self, s: int, counter: Optional[int] = None) -> Mapping[str, Number]:
        key = (s, None) if self.bound is None else (s, max(0, min(counter or 0, self.bound)))
        try:
            return self.rule[key]
        except KeyError:
            raise StrategyIncompatible(f"strategy undefined at state {s} counter {key[1]}") from None

    def is_pure(self) -> bool:
        return all(len(d) == 1 for d in self.rule.values())

    def domain(self):
        return sorted(self.rule, key=lambda k: (k[0], -1 if k[1] is None else k[1]))

    @staticmethod
    def pure(player: Player, choices: Mapping, bound: Optional[int] = None) -> "Strategy":
        rule = {}
        for key, act in choices.items():
            if not isinstance(key, tuple):
                key = (key, None)
            rule[key] = {act: Fraction(1)}
        return Strategy(player, rule, bound)

    def check(self, model: Game) -> None:
        """Raise StrategyIncompatible unless the rule is total and legal."""
        counters = [None] if self.bound is None else list(range(self.bound + 1))
        if self.player is Player.DISTURBER:
            states = [s for s in model.states() if model.owner[s] == 1]
        else:
            want = 1 if self.player is Player.ONE else 2
            states = [s for s in model.states() if model.owner[s] == want]
        for s in states:
            for c in counters:
                if (s, c) not in self.rule:
                    where = model.names[s] if c is None else f"({model.names[s]},{c})"
                    raise StrategyIncompatible(f"strategy missing state {where}")
                dist = self.rule[(s, c)]
                if self.player is Player.DISTURBER:
                    legal = {a.name for a in model.disturbances(s)} | {BOTTOM}
                    if c == 0 and set(dist) != {BOTTOM}:
                        raise StrategyIncompatible(
                            f"disturber must play {BOTTOM} with no budget at {model.names[s]}")
                else:
                    legal = {a.name for a in model.normal(s)}
                bad = set(dist) - legal
                if bad:
                    raise StrategyIncompatible(
                        f"illegal action(s) {sorted(bad)} at state {model.names[s]}")
                total = sum(dist.values())
                if (total != 1) if is_exact(dist.values()) else abs(total - 1) > FLOAT_TOL:
                    raise StrategyIncompatible(f"choice at {model.names[s]} is not a distribution")


@dataclass(frozen=True)
class Objective:
    """``kind`` is "safety" (avoid ``label``) or "reach" (reach ``label``).

    The objective asks for probability ``> threshold`` when ``strict`` and
    ``>= threshold`` otherwise.
    """

    kind: str
    label: str
    threshold: Number
    strict: bool = True

    def __post_init__(self):
        if self.kind not in ("safety", "reach"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")

    @property
    def violation(self) -> Number:
        """Probability the adversary must give to the complement event."""
        return 1 - self.threshold

    def text(self) -> str:
        cmp = ">" if self.strict else ">="
        kind = "reach" if self.kind == "reach" else "safety"
        return f"{kind}:{self.label}:{cmp}{fmt(self.threshold)}"

    def targets(self, model: Game) -> FrozenSet[int]:
        states = model.label(self.label)
        if not states:
            raise ValueError(f"label {self.label!r} is empty")
        return states


# ---------------------------------------------------------------------------
# Breaking points


@functools.total_ordering
@dataclass(frozen=True)
class ExtendedCount:
    """Finite value, omega (infinitely many) or unbreakable."""

    variant: str  # "finite" | "omega" | "unbreakable"
    value: Optional[Number] = None

    _RANK = {"finite": 0, "omega": 1, "unbreakable": 2}

    @staticmethod
    def finite(x: Number) -> "ExtendedCount":
        return ExtendedCount("finite", x)

    @staticmethod
    def omega() -> "ExtendedCount":
        return ExtendedCount("omega")

    @staticmethod
    def unbreakable() -> "ExtendedCount":
        return ExtendedCount("unbreakable")

    def __lt__(self, other):
        a, b = self._RANK[self.variant], self._RANK[other.variant]
        if a != b:
            return a < b
        if self.variant == "finite":
            return self.value < other.value
        return False

    def __eq__(self, other):
        if not isinstance(other, ExtendedCount):
            return NotImplemented
        return self.variant == other.variant and (
            self.variant != "finite" or self.value == other.value)

    def __hash__(self):
        return hash((self.variant, self.value if self.variant == "finite" else None))

    def __str__(self):
        if self.variant == "finite":
            return fmt(self.value)
        return self.variant


_UNBREAKABLE = "unbreakable"


@dataclass(frozen=True)
class BreakingPoint:
    transient: ExtendedCount
    frequency: object  # a Number, or the string "unbreakable"

    def __post_init__(self):
        t, f = self.transient, self.frequency
        if (t.variant == "unbreakable") != (f == _UNBREAKABLE):
            raise ValueError("unbreakable transient and frequency must coincide")
        if t.variant == "finite" and f != 0:
            raise ValueError("a finite transient breaking point has frequency 0")
        if f != _UNBREAKABLE and f > 0 and t.variant != "omega":
            raise ValueError("a positive frequency requires an omega transient")

    @staticmethod
    def finite(x: Number) -> "BreakingPoint":
        return BreakingPoint(ExtendedCount.finite(x), Fraction(0) if not isinstance(x, float) else 0.0)

    @staticmethod
    def omega(freq: Number) -> "BreakingPoint":
        return BreakingPoint(ExtendedCount.omega(), freq)

    @staticmethod
    def unbreakable() -> "BreakingPoint":
        return BreakingPoint(ExtendedCount.unbreakable(), _UNBREAKABLE)

    @property
    def is_unbreakable(self) -> bool:
        return self.transient.variant == "unbreakable"

    def __str__(self):
        f = self.frequency if self.frequency == _UNBREAKABLE else fmt(self.frequency)
        return f"({self.transient}, {f})"


def compare_breaking_points(a: BreakingPoint, b: BreakingPoint) -> int:
    """Three-way comparison: -1, 0 or 1.

    Unbreakable is maximal; omega values compare by frequency and exceed
    every finite value; finite values compare by transient count.
    """
    ra = ExtendedCount._RANK[a.transient.variant]
    rb = ExtendedCount._RANK[b.transient.variant]
    if ra != rb:
        return -1 if ra < rb else 1
    if a.transient.variant == "finite":
        x, y = a.transient.value, b.transient.value
    elif a.transient.variant == "omega":
        x, y = a.frequency, b.frequency
    else:
        return 0
    return (x > y) - (x < y)


# ---------------------------------------------------------------------------
# Markov chains induced by strategy triples


@dataclass(frozen=True, eq=False)
class MarkovChain:
    names: Tuple[str, ...]
    rows: Tuple[Mapping[int, Number], ...]
    costs: Tuple[Number, ...]
    initial: Mapping[int, Number]
    labels: Mapping[str, FrozenSet[int]]
    origin: Tuple[tuple, ...]

    @property
    def n(self) -> int:
        return len(self.names)

    def label(self, name: str) -> FrozenSet[int]:
        return frozenset(self.labels.get(name, frozenset()))


def _bound(strategy: Optional[Strategy]) -> int:
    return 0 if strategy is None or strategy.bound is None else strategy.bound


def induced_mc(model: Game, pi: Strategy, sigma: Optional[Strategy],
               delta: Optional[Strategy]) -> MarkovChain:
    """Markov chain of the model under Player 1, Player 2 and disturber.

    Chain states are pairs (s, n) where n counts disturbances so far, capped
    at the largest counter bound among the strategies (beyond it every
    counter has saturated). ``sigma``/``delta`` may be None when the model has
    no Player-2 states / the disturber never disturbs.
    """
    top = max(_bound(pi), _bound(sigma), _bound(delta))

    def counter(strategy, used):
        if strategy is None or strategy.bound is None:
            return None
        return max(strategy.bound - used, 0)

    index: Dict[Tuple[int, int], int] = {}
    names, rows, costs, origin = [], [], [], []
    pending = []

    def state_id(s, used):
        key = (s, min(used, top))
        if key not in index:
            index[key] = len(names)
            names.append(model.names[s] if top == 0 else f"({model.names[s]},{key[1]})")
            rows.append(None)
            costs.append(None)
            origin.append(key)
            pending.append(key)
        return index[key]

    init = {}
    for s, p in model.initial.items():
        i = state_id(s, 0)
        init[i] = init.get(i, 0) + p

    while pending:
        s, used = pending.pop()
        row: Dict[int, Number] = {}
        cost = 0

        def add(dist, weight, next_used):
            for t, p in dist.items():
                j = state_id(t, next_used)
                row[j] = row.get(j, 0) + weight * p

        if model.owner[s] == 1:
            if delta is None or not model.disturbances(s):
                dchoice = {BOTTOM: 1}
            else:
                dchoice = delta.choice(s, counter(delta, used))
            for dname, dp in dchoice.items():
                if dname == BOTTOM:
                    for aname, ap in pi.choice(s, counter(pi, used)).items():
                        add(model.action(s, aname).dist, dp * ap, used)
                else:
                    act = model.action(s, dname)
                    if not act.is_disturbance:
                        raise StrategyIncompatible(f"{dname} is not a disturbance at {model.names[s]}")
                    if delta.bound is not None and counter(delta, used) == 0:
                        raise StrategyIncompatible("disturbance beyond the disturber's budget")
                    add(act.dist, dp, used + 1)
                    cost += dp * action_cost(act)
        else:
            if sigma is None:
                acts = model.normal(s)
                if len(acts) != 1:
                    raise StrategyIncompatible(f"no Player-2 strategy for {model.names[s]}")
                choice = {acts[0].name: 1}
            else:
                choice = sigma.choice(s, counter(sigma, used))
            for aname, ap in choice.items():
                act = model.action(s, aname)
                add(act.dist, ap, used)
                cost += ap * action_cost(act)
        i = index[(s, used)]
        rows[i] = row
        costs[i] = cost

    labels = {}
    for lab, members in model.labels.items():
        labels[lab] = frozenset(i for i, (s, _) in enumerate(origin) if s in members)
    return MarkovChain(tuple(names), tuple(rows), tuple(costs), init, labels, tuple(origin))
