"""Game-to-game constructions.

Each construction returns a fresh ``Game``; its ``origin`` field records
where every state came from, which the verification suite uses to map
strategies between models.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import OverlappingComponents, StrategyIncompatible
from .graph import MEC
from .model import Action, ActionKind, BOTTOM, Game, Strategy
from .numeric import Number

PI_ACTION = "pi"


def _remap(dist: Mapping[int, Number], f) -> Dict[int, Number]:
    out: Dict[int, Number] = {}
    for t, p in dist.items():
        j = f(t)
        out[j] = out.get(j, 0) + p
    return out


def _labels(model: Game, origin_state) -> Dict[str, frozenset]:
    """Lift labels of the base model through ``origin_state(i) -> s or None``."""
    out = {}
    for lab, members in model.labels.items():
        out[lab] = frozenset(i for i, s in enumerate(origin_state) if s is not None and s in members)
    return out


def _mix(model: Game, s: int, choice: Mapping[str, Number]) -> Action:
    """Single normal action realizing a (possibly mixed) Player-1 choice."""
    if len(choice) == 1:
        (name,) = choice
        return model.action(s, name)
    dist: Dict[int, Number] = {}
    for name, w in choice.items():
        for t, p in model.action(s, name).dist.items():
            dist[t] = dist.get(t, 0) + w * p
    return Action(PI_ACTION, ActionKind.NORMAL, dist)


def product_with_counter(model: Game, k: int, saturate: bool = False) -> Game:
    """The model over S x {0..k}; the counter holds the number of
    disturbances still allowed, starts at k and drops on every disturbance.
    At counter 0 disturbances are unavailable, unless ``saturate`` is set, in
    which case they stay available and the counter stays at 0 (this is how a
    step-counting strategy perceives an adversary with a larger budget)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    def idx(s, i):
        return i * model.n + s

    names, owner, actions, origin = [], [], [], []
    for i in range(k + 1):
        for s in model.states():
            names.append(f"({model.names[s]},{i})")
            owner.append(model.owner[s])
            origin.append(("state", s, i))
            acts = []
            for a in model.actions[s]:
                if a.is_disturbance:
                    if i == 0 and not saturate:
                        continue
                    nxt = max(i - 1, 0)
                    acts.append(Action(a.name, a.kind, _remap(a.dist, lambda t: idx(t, nxt)), a.cost))
                else:
                    acts.append(Action(a.name, a.kind, _remap(a.dist, lambda t, i=i: idx(t, i)), a.cost))
            actions.append(tuple(acts))
    initial = {idx(s, k): p for s, p in model.initial.items()}
    base = [o[1] for o in origin]
    return Game(tuple(names), tuple(owner), tuple(actions), initial, _labels(model, base), tuple(origin))


def induced_mdp(model: Game, pi: Strategy) -> Game:
    """M_pi: Player-1 states keep pi's choice plus every disturbance action,
    Player-2 states are unchanged. A step-counting pi is first encoded in the
    state space with a saturating counter product."""
    if pi.bound is not None:
        base = product_with_counter(model, pi.bound, saturate=True)
        rule = {}
        for j, o in enumerate(base.origin):
            if base.owner[j] == 1:
                rule[(j, None)] = pi.choice(o[1], o[2])
        return induced_mdp(base, Strategy(pi.player, rule))
    actions = []
    for s in model.states():
        if model.owner[s] == 1:
            try:
                choice = pi.choice(s)
            except StrategyIncompatible:
                raise StrategyIncompatible(f"strategy missing state {model.names[s]}") from None
            for name in choice:
                a = model.action(s, name)
                if a.is_disturbance:
                    raise StrategyIncompatible(f"{name} is a disturbance at {model.names[s]}")
            actions.append((_mix(model, s, choice),) + model.disturbances(s))
        else:
            actions.append(model.actions[s])
    origin = model.origin or tuple(("state", s) for s in model.states())
    return Game(model.names, model.owner, tuple(actions), dict(model.initial),
                dict(model.labels), origin)


def unfold(model: Game, k: int, reachable_only: bool = True) -> Game:
    """The k-unfolded game G^{+k}.

    Player-1 state (s,i) picks a normal action a and moves to the Player-2
    gadget state (s,i,a); there Player 2 plays BOTTOM (follow a, stay at
    level i) or, when i >= 1, a disturbance d (follow d, drop to level i-1).
    Player-2 states (s,i) keep their actions at level i.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    keys: List[tuple] = []
    index: Dict[tuple, int] = {}

    def node(key):
        if key not in index:
            index[key] = len(keys)
            keys.append(key)
        return index[key]

    if reachable_only:
        order = []
        for s in model.initial:
            node(("state", s, k))
        pos = 0
        while pos < len(keys):
            key = keys[pos]
            pos += 1
            for succ in _unfold_successors(model, key):
                node(succ)
    else:
        for i in range(k, -1, -1):
            for s in model.states():
                node(("state", s, i))
                if model.owner[s] == 1:
                    for a in model.normal(s):
                        node(("gadget", s, i, a.name))

    names, owner, actions = [], [], []
    for key in keys:
        if key[0] == "state":
            _, s, i = key
            names.append(f"({model.names[s]},{i})")
            owner.append(model.owner[s])
            if model.owner[s] == 1:
                acts = [Action(a.name, ActionKind.NORMAL, {index[("gadget", s, i, a.name)]: Fraction(1)}, Fraction(0))
                        for a in model.normal(s)]
            else:
                acts = [Action(a.name, a.kind, _remap(a.dist, lambda t: index[("state", t, i)]), a.cost)
                        for a in model.actions[s]]
        else:
            _, s, i, aname = key
            names.append(f"({model.names[s]},{i},{aname})")
            owner.append(2)
            a = model.action(s, aname)
            acts = [Action(BOTTOM, ActionKind.NORMAL, _remap(a.dist, lambda t: index[("state", t, i)]), Fraction(0))]
            if i >= 1:
                for d in model.disturbances(s):
                    acts.append(Action(d.name, ActionKind.DISTURBANCE,
                                       _remap(d.dist, lambda t: index[("state", t, i - 1)]), d.cost))
        actions.append(tuple(acts))
    initial = {index[("state", s, k)]: p for s, p in model.initial.items()}
    base = [key[1] if key[0] == "state" else None for key in keys]
    return Game(tuple(names), tuple(owner), tuple(actions), initial, _labels(model, base), tuple(keys))


def _unfold_successors(model: Game, key):
    if key[0] == "state":
        _, s, i = key
        if model.owner[s] == 1:
            return [("gadget", s, i, a.name) for a in model.normal(s)]
        return [("state", t, i) for a in model.actions[s] for t in a.dist]
    _, s, i, aname = key
    out = [("state", t, i) for t in model.action(s, aname).dist]
    if i >= 1:
        out += [("state", t, i - 1) for d in model.disturbances(s) for t in d.dist]
    return out


def expected_gadget_game(model: Game) -> Game:
    """Game for expected-case synthesis: each Player-1 action a at s leads to
    a Player-2 state (s,a) which plays BOTTOM (cost 0, follow a) or a
    disturbance d (cost 1, follow d)."""
    keys: List[tuple] = [("state", s) for s in model.states()]
    for s in model.states():
        if model.owner[s] == 1:
            for a in model.normal(s):
                keys.append(("gadget", s, a.name))
    index = {key: i for i, key in enumerate(keys)}
    names, owner, actions = [], [], []
    for key in keys:
        if key[0] == "state":
            s = key[1]
            names.append(model.names[s])
            owner.append(model.owner[s])
            if model.owner[s] == 1:
                acts = [Action(a.name, ActionKind.NORMAL, {index[("gadget", s, a.name)]: Fraction(1)}, Fraction(0))
                        for a in model.normal(s)]
            else:
                acts = list(model.actions[s])
        else:
            _, s, aname = key
            names.append(f"({model.names[s]},{aname})")
            owner.append(2)
            a = model.action(s, aname)
            acts = [Action(BOTTOM, ActionKind.NORMAL, dict(a.dist), Fraction(0))]
            for d in model.disturbances(s):
                acts.append(Action(d.name, ActionKind.DISTURBANCE, dict(d.dist), Fraction(1)))
        actions.append(tuple(acts))
    base = [key[1] if key[0] == "state" else None for key in keys]
    return Game(tuple(names), tuple(owner), tuple(actions), dict(model.initial),
                _labels(model, base), tuple(keys))


def gadget_step_weight(game: Game):
    """Step weights for a gadget game: the hop from a Player-1 state into its
    gadget state is not a step of the original model."""
    def weight(s, name):
        o = game.origin[s] if game.origin else ("state",)
        return 0 if o[0] == "state" and game.owner[s] == 1 else 1
    return weight


@dataclass(frozen=True)
class WeightedQuotient:
    quotient: Game
    collapsed_of: Mapping[int, MEC]
    s_plus: int
    exit_cost: Mapping[int, Number]
    state_map: Mapping[int, int]


STAY = "stay"
PLUS = "s+"


def weighted_mec_quotient(game: Game, components: Sequence[MEC],
                          f: Mapping[MEC, Number]) -> WeightedQuotient:
    """Collapse each component into one state whose actions are the
    component's non-kept actions plus a ``stay`` action to the fresh terminal
    state s+ costing f(component). All other actions cost 0."""
    owner_of: Dict[int, int] = {}
    for ci, c in enumerate(components):
        for s in c.states:
            if s in owner_of:
                raise OverlappingComponents(f"state {game.names[s]} is in two components")
            owner_of[s] = ci
    zero = Fraction(0)
    state_map: Dict[int, int] = {}
    names, owner, origin = [], [], []
    for s in game.states():
        if s not in owner_of:
            state_map[s] = len(names)
            names.append(game.names[s])
            owner.append(game.owner[s])
            origin.append(("state", s))
    collapsed_index = []
    for ci, c in enumerate(components):
        q = len(names)
        collapsed_index.append(q)
        names.append("{" + ",".join(game.names[s] for s in sorted(c.states)) + "}")
        owner.append(2)
        origin.append(("mec", ci))
        for s in c.states:
            state_map[s] = q
    plus = len(names)
    names.append(PLUS)
    owner.append(2)
    origin.append(("plus",))

    actions: List[Tuple[Action, ...]] = []
    for q, o in enumerate(origin):
        if o[0] == "state":
            s = o[1]
            acts = [Action(a.name, a.kind, _remap(a.dist, state_map.__getitem__), zero)
                    for a in game.actions[s]]
        elif o[0] == "mec":
            c = components[o[1]]
            acts = []
            for s in sorted(c.states):
                for a in game.actions[s]:
                    if a.name not in c.actions[s]:
                        acts.append(Action(f"{game.names[s]}:{a.name}", a.kind,
                                           _remap(a.dist, state_map.__getitem__), zero))
            acts.append(Action(STAY, ActionKind.NORMAL, {plus: Fraction(1)}, f[c]))
        else:
            acts = [Action("loop", ActionKind.NORMAL, {plus: Fraction(1)}, zero)]
        actions.append(tuple(acts))
    initial = _remap(game.initial, state_map.__getitem__)
    labels = {lab: frozenset(state_map[s] for s in members) for lab, members in game.labels.items()}
    quotient = Game(tuple(names), tuple(owner), tuple(actions), initial, labels, tuple(origin))
    return WeightedQuotient(
        quotient,
        {collapsed_index[ci]: c for ci, c in enumerate(components)},
        plus,
        {collapsed_index[ci]: f[c] for ci, c in enumerate(components)},
        state_map,
    )


DEFAULT_EPSILON = Fraction(1, 10000)


def make_stopping(game: Game, epsilon: Number = DEFAULT_EPSILON,
                  sink: Optional[int] = None) -> Game:
    """Every action of a non-sink state leaks ``epsilon`` to ``sink`` (the
    B-labelled sink by default, a fresh one if there is none) and keeps the
    rest of its mass scaled by ``1 - epsilon``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    names = list(game.names)
    owner = list(game.owner)
    origin = list(game.origin or tuple(("state", s) for s in game.states()))
    extra = None
    if sink is None:
        candidates = sorted(s for s in game.label("B") if game.is_sink(s))
        if candidates:
            sink = candidates[0]
        else:
            sink = extra = len(names)
            names.append("stop")
            owner.append(1)
            origin.append(("sink",))
    actions = []
    for s in game.states():
        if game.is_sink(s):
            actions.append(game.actions[s])
            continue
        acts = []
        for a in game.actions[s]:
            dist = {t: (1 - epsilon) * p for t, p in a.dist.items()}
            dist[sink] = dist.get(sink, 0) + epsilon
            acts.append(Action(a.name, a.kind, dist, a.cost))
        actions.append(tuple(acts))
    labels = dict(game.labels)
    if extra is not None:
        actions.append((Action("loop", ActionKind.NORMAL, {extra: Fraction(1)}),))
        labels["B"] = frozenset(set(labels.get("B", frozenset())) | {extra})
    return Game(tuple(names), tuple(owner), tuple(actions), dict(game.initial), labels, tuple(origin))


NEXT = "next"


def binarize_actions(game: Game) -> Game:
    """At most two normal choices and at most one disturbance per state.

    A Player-1 state with disturbances d0..d(m-1) becomes a chain: the state
    itself offers d0, then passes to an intermediary offering d1, and so on.
    The last chain state is the root of a left-leaning choice chain over the
    normal actions: each node offers one original action or ``next``. The
    disturbance outcome does not depend on Player 1's choice, so putting the
    disturbances first preserves the game's value.
    """
    names = list(game.names)
    owner = list(game.owner)
    origin = list(game.origin or tuple(("state", s) for s in game.states()))
    actions: List[Optional[Tuple[Action, ...]]] = [None] * game.n

    def fresh(s, tag):
        names.append(f"{game.names[s]}~{tag}")
        owner.append(game.owner[s])
        origin.append(("aux", s, tag))
        actions.append(None)
        return len(names) - 1

    for s in game.states():
        normal = list(game.normal(s))
        dists = list(game.disturbances(s))
        if len(normal) <= 2 and len(dists) <= 1:
            actions[s] = game.actions[s]
            continue
        counter = 0
        node = s
        # Disturbance chain.
        for j, d in enumerate(dists[:-1] if dists else []):
            counter += 1
            nxt = fresh(s, counter)
            actions[node] = (Action(NEXT, ActionKind.NORMAL, {nxt: Fraction(1)}, Fraction(0)), d)
            node = nxt
        last_d = (dists[-1],) if dists else ()
        # Normal-action chain rooted at ``node``.
        pending = normal
        while len(pending) > 2:
            counter += 1
            nxt = fresh(s, counter)
            actions[node] = (pending[0], Action(NEXT, ActionKind.NORMAL, {nxt: Fraction(1)}, Fraction(0))) + last_d
            last_d = ()
            node = nxt
            pending = pending[1:]
        actions[node] = tuple(pending) + last_d
    return Game(tuple(names), tuple(owner), tuple(actions), dict(game.initial), dict(game.labels), tuple(origin))
