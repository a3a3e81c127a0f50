"""Qualitative graph analyses: maximal end components, the component sets used
by the breaking-point algorithms, and the Player-2 avoidance fixpoint."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Set

import networkx as nx

from .model import Action, Game

ActionFilter = Callable[[int, Action], bool]


@dataclass(frozen=True)
class MEC:
    states: FrozenSet[int]
    actions: Mapping[int, FrozenSet[str]]

    def key(self):
        return tuple(sorted(self.states))

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, MEC) and self.key() == other.key() and dict(self.actions) == dict(other.actions)


def _support(a: Action):
    return [t for t, p in a.dist.items() if p > 0]


def mec_decomposition(game: Game, states: Optional[Iterable[int]] = None,
                      allowed: Optional[ActionFilter] = None) -> List[MEC]:
    """Maximal end components of the sub-model on ``states`` using the actions
    accepted by ``allowed``; actions leaving ``states`` are dropped.

    Iterated SCC refinement: split into SCCs, drop actions that leave their
    SCC, drop states left without actions, repeat until stable.
    """
    alive: Set[int] = set(game.states() if states is None else states)
    acts: Dict[int, List[Action]] = {}
    for s in alive:
        acts[s] = [a for a in game.actions[s]
                   if (allowed is None or allowed(s, a)) and all(t in alive for t in _support(a))]
    changed = True
    comp_of: Dict[int, int] = {}
    while changed:
        changed = False
        dead = {s for s in alive if not acts[s]}
        if dead:
            changed = True
            alive -= dead
            for s in alive:
                acts[s] = [a for a in acts[s] if all(t in alive for t in _support(a))]
            continue
        g = nx.DiGraph()
        g.add_nodes_from(alive)
        for s in alive:
            for a in acts[s]:
                for t in _support(a):
                    g.add_edge(s, t)
        comp_of = {}
        for i, comp in enumerate(nx.strongly_connected_components(g)):
            for s in comp:
                comp_of[s] = i
        for s in alive:
            keep = [a for a in acts[s] if all(comp_of[t] == comp_of[s] for t in _support(a))]
            if len(keep) != len(acts[s]):
                acts[s] = keep
                changed = True
    groups: Dict[int, Set[int]] = {}
    for s in alive:
        groups.setdefault(comp_of[s], set()).add(s)
    mecs = [MEC(frozenset(g), {s: frozenset(a.name for a in acts[s]) for s in g})
            for g in groups.values()]
    return sorted(mecs, key=MEC.key)


def is_end_component(game: Game, states: Set[int], actions: Mapping[int, Iterable[str]]) -> bool:
    """Closed under the given actions, every state has one, strongly connected."""
    if not states:
        return False
    g = nx.DiGraph()
    g.add_nodes_from(states)
    for s in states:
        names = list(actions.get(s, ()))
        if not names:
            return False
        for name in names:
            for t in _support(game.action(s, name)):
                if t not in states:
                    return False
                g.add_edge(s, t)
    return nx.is_strongly_connected(g)


def certify_mec(game: Game, mec: MEC, states: Optional[Iterable[int]] = None,
                allowed: Optional[ActionFilter] = None) -> bool:
    """Brute-force certificate that ``mec`` is an end component that no larger
    set of states extends. Exponential in the number of outside states; meant
    for small instances."""
    universe = set(game.states() if states is None else states)

    def staying(s, region):
        return [a.name for a in game.actions[s]
                if (allowed is None or allowed(s, a)) and all(t in region for t in _support(a))]

    if not is_end_component(game, set(mec.states), mec.actions):
        return False
    # Action maximality: every allowed staying action must be kept.
    for s in mec.states:
        if set(staying(s, mec.states)) != set(mec.actions[s]):
            return False
    outside = sorted(universe - set(mec.states))
    for r in range(1, len(outside) + 1):
        for extra in itertools.combinations(outside, r):
            region = set(mec.states) | set(extra)
            if is_end_component(game, region, {s: staying(s, region) for s in region}):
                return False
    return True


def union(components: Iterable[MEC]) -> Set[int]:
    out: Set[int] = set()
    for c in components:
        out |= c.states
    return out


def compute_B(mdp: Game, goal: Iterable[int]) -> List[MEC]:
    """Components outside ``goal`` in which the adversary can stay forever
    without disturbing.

    ``mdp`` is an induced MDP: Player-1 states carry the strategy's single
    normal action plus their disturbance actions. Equivalent to keeping the
    MECs of M_pi minus the goal that are closed under the strategy's actions,
    computed on the disturbance-free sub-model so that zero-disturbance
    pockets inside larger components are found as well.
    """
    goal = set(goal)
    rest = [s for s in mdp.states() if s not in goal]
    return mec_decomposition(mdp, rest, allowed=lambda s, a: not a.is_disturbance)


def compute_B_closed(mdp: Game, goal: Iterable[int]) -> List[MEC]:
    """Literal reading: MECs of M_pi minus goal whose Player-1 states keep
    the strategy's action inside the component."""
    goal = set(goal)
    rest = [s for s in mdp.states() if s not in goal]
    out = []
    for m in mec_decomposition(mdp, rest):
        ok = True
        for s in m.states:
            if mdp.owner[s] == 1:
                for a in mdp.normal(s):
                    if any(t not in m.states for t in _support(a)):
                        ok = False
        if ok:
            out.append(m)
    return out


def compute_R(mdp: Game, goal: Iterable[int]) -> List[MEC]:
    """MECs of M_pi minus goal that can only be kept by disturbing: every
    Player-1 state whose strategy action exits has a disturbance action.
    Components made entirely of B-states are excluded."""
    goal = set(goal)
    rest = [s for s in mdp.states() if s not in goal]
    b_states = union(compute_B(mdp, goal))
    out = []
    for m in mec_decomposition(mdp, rest):
        if m.states <= b_states:
            continue
        ok = True
        for s in m.states:
            if mdp.owner[s] != 1:
                continue
            exits = any(t not in m.states for a in mdp.normal(s) for t in _support(a))
            if exits and not mdp.disturbances(s):
                ok = False
        if ok:
            out.append(m)
    return out


def player2_avoid_set(game: Game, goal: Iterable[int]) -> Set[int]:
    """Greatest set E outside ``goal`` from which Player 2 keeps the play in E
    with probability 1. Player-1 states leave E when some action can exit;
    Player-2 states leave when every action can exit. Disturbance-kind
    actions count as Player-2 choices wherever they appear."""
    goal = set(goal)
    region = {s for s in game.states() if s not in goal}
    changed = True
    while changed:
        changed = False
        for s in sorted(region):
            exits = [any(t not in region for t in _support(a)) for a in game.actions[s]]
            if game.owner[s] == 1:
                normal_exit = [e for e, a in zip(exits, game.actions[s]) if not a.is_disturbance]
                dist_stay = [not e for e, a in zip(exits, game.actions[s]) if a.is_disturbance]
                # A disturbance can override Player 1's exit.
                remove = any(normal_exit) and not any(dist_stay)
            else:
                remove = all(exits)
            if remove:
                region.discard(s)
                changed = True
    return region


def attractor_positive(game: Game, targets: Iterable[int]) -> Set[int]:
    """States with some path (any choices) into ``targets``."""
    g = nx.DiGraph()
    g.add_nodes_from(game.states())
    for s in game.states():
        for a in game.actions[s]:
            for t in _support(a):
                g.add_edge(t, s)
    out: Set[int] = set()
    for t in targets:
        if t not in out:
            out.add(t)
            out |= nx.descendants(g, t)
    return out
