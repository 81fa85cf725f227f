"""Directed follow graph: homophily-based wiring, follow/unfollow dynamics,
and influence scoring.

Initial edges form independently per ordered pair with a probability that
depends on opinion-sign agreement and on whether the followee is an
influencer (same sign + influencer > same sign + regular > different sign).
Afterwards the graph evolves: agents follow recommended authors with the
follow variant of the reaction kernel (which compares the two agents'
opinions directly) and drop each existing edge with a fixed per-step
probability. Exact-zero opinions count as pro by convention, so the sign
partition is total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .kernels import ReactionParams, Rng, follow_params, reaction_probability
from .model import Agent, stance_sign


class UnknownAgent(KeyError):
    pass


@dataclass(frozen=True)
class NetworkInitParams:
    """Connection probabilities for initial wiring; ordering is enforced."""

    same_sign_influencer: float = 0.4
    same_sign_regular: float = 0.2
    cross_sign: float = 0.05

    def __post_init__(self) -> None:
        p_i, p_s, p_d = self.same_sign_influencer, self.same_sign_regular, self.cross_sign
        if not 0.0 <= p_d < p_s < p_i <= 1.0:
            raise ValueError(
                "init probabilities must satisfy 0 <= cross < same-regular "
                f"< same-influencer <= 1, got ({p_i}, {p_s}, {p_d})"
            )


@dataclass(frozen=True)
class ConnectionDynamicsParams:
    follow: ReactionParams = field(default_factory=follow_params)
    unfollow_prob: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 <= self.unfollow_prob <= 1.0:
            raise ValueError("unfollow_prob must be in [0, 1]")


class SocialGraph:
    """Follow graph; an edge (i, j) means i follows j. No self-loops, no
    duplicate edges; follower sets are kept mirrored for O(1) scoring."""

    def __init__(self, nodes: Iterable[int] = ()):
        self._following: dict[int, set[int]] = {}
        self._followers: dict[int, set[int]] = {}
        for n in nodes:
            self.add_node(n)

    def add_node(self, node: int) -> None:
        self._following.setdefault(node, set())
        self._followers.setdefault(node, set())

    def _check(self, node: int) -> None:
        if node not in self._following:
            raise UnknownAgent(node)

    @property
    def nodes(self) -> list[int]:
        return sorted(self._following)

    @property
    def node_count(self) -> int:
        return len(self._following)

    @property
    def edge_count(self) -> int:
        return sum(len(f) for f in self._following.values())

    def has_edge(self, follower: int, followee: int) -> bool:
        self._check(follower)
        return followee in self._following[follower]

    def add_edge(self, follower: int, followee: int) -> bool:
        """Insert an edge; returns False for duplicates. Self-loops are errors."""
        self._check(follower)
        self._check(followee)
        if follower == followee:
            raise ValueError("self-follows are not allowed")
        if followee in self._following[follower]:
            return False
        self._following[follower].add(followee)
        self._followers[followee].add(follower)
        return True

    def remove_edge(self, follower: int, followee: int) -> bool:
        self._check(follower)
        if followee not in self._following[follower]:
            return False
        self._following[follower].discard(followee)
        self._followers[followee].discard(follower)
        return True

    def following(self, node: int) -> set[int]:
        self._check(node)
        return set(self._following[node])

    def followers(self, node: int) -> set[int]:
        self._check(node)
        return set(self._followers[node])

    def follower_count(self, node: int) -> int:
        self._check(node)
        return len(self._followers[node])

    def copy(self) -> "SocialGraph":
        g = SocialGraph(self._following)
        for follower, followees in self._following.items():
            g._following[follower] = set(followees)
        for followee, followers in self._followers.items():
            g._followers[followee] = set(followers)
        return g

    def edges(self) -> list[tuple[int, int]]:
        return sorted(
            (i, j) for i, followees in self._following.items() for j in followees
        )

    def to_adjacency(self) -> dict[str, list[int]]:
        """Adjacency-list form used in snapshots: {agent_id: [followee ids]}."""
        return {str(i): sorted(f) for i, f in self._following.items()}

    @classmethod
    def from_adjacency(cls, adj: Mapping[str, Sequence[int]]) -> "SocialGraph":
        g = cls(int(k) for k in adj)
        for follower, followees in adj.items():
            for followee in followees:
                g.add_edge(int(follower), int(followee))
        return g

    def __eq__(self, other) -> bool:
        return isinstance(other, SocialGraph) and self._following == other._following


def init_network(agents: Sequence[Agent], params: NetworkInitParams, rng: Rng) -> SocialGraph:
    """Wire the initial graph, one bernoulli per ordered pair in (i, j) order."""
    graph = SocialGraph(a.id for a in agents)
    ordered = sorted(agents, key=lambda a: a.id)
    for a_i in ordered:
        for a_j in ordered:
            if a_i.id == a_j.id:
                continue
            if stance_sign(a_i.opinion) == stance_sign(a_j.opinion):
                p = params.same_sign_influencer if a_j.is_influencer else params.same_sign_regular
            else:
                p = params.cross_sign
            if rng.bernoulli(p):
                graph.add_edge(a_i.id, a_j.id)
    return graph


def follow_probability(o_i: float, o_j: float, params: ConnectionDynamicsParams) -> float:
    """Follow chance from the two agents' opinions directly (no assessment)."""
    return reaction_probability(o_i, o_j, params.follow)


@dataclass
class ConnectionChanges:
    """What one evolution pass did; unfollow_draws counts edges exposed to
    the dissolution coin, which the added edges of the same pass are too."""

    added: list[tuple[int, int]] = field(default_factory=list)
    removed: list[tuple[int, int]] = field(default_factory=list)
    unfollow_draws: int = 0


def evolve_connections(
    graph: SocialGraph,
    agents_by_id: Mapping[int, Agent],
    candidates: Mapping[int, Iterable[int]],
    params: ConnectionDynamicsParams,
    rng: Rng,
) -> ConnectionChanges:
    """One evolution pass for the agents present in ``candidates``.

    Per agent in ascending id order: first a follow draw for every
    not-yet-followed candidate author (ascending id), then an unfollow draw
    for every current out-edge (ascending followee id), just-created edges
    included. Passing every agent exactly once per step therefore gives each
    edge exactly one dissolution draw per step. Mutates the graph in place.
    """
    changes = ConnectionChanges()
    for agent_id in sorted(candidates):
        agent = agents_by_id[agent_id]
        for author_id in sorted(set(candidates[agent_id])):
            if author_id == agent_id or graph.has_edge(agent_id, author_id):
                continue
            other = agents_by_id[author_id]
            if rng.bernoulli(follow_probability(agent.opinion, other.opinion, params)):
                graph.add_edge(agent_id, author_id)
                changes.added.append((agent_id, author_id))
        for followee in sorted(graph.following(agent_id)):
            changes.unfollow_draws += 1
            if rng.bernoulli(params.unfollow_prob):
                graph.remove_edge(agent_id, followee)
                changes.removed.append((agent_id, followee))
    return changes


def influence_score(graph: SocialGraph, agent_id: int) -> float:
    """Follower count normalized by the other-node count; bounded in [0, 1]."""
    if graph.node_count < 2:
        raise ValueError("influence scores need at least two nodes")
    count = graph.follower_count(agent_id)  # raises UnknownAgent
    return count / (graph.node_count - 1)
