"""Discrete-time simulation engine.

Each iteration has two phases. In the posting phase every agent, in id
order, flips its posting coin and on success publishes a fresh post. In the
interaction phase every agent, again in id order, receives up to ``n_recs``
recommendations ranked by the authors' influence scores, assesses each
served message, and draws like / repost / comment reactions independently;
reposts and comments generate reply text and join the message pool
(becoming recommendable from the next iteration, since eligibility is
snapshotted when the interaction phase starts). After an agent's
interactions its follow edges evolve, with the authors of its current
recommendations as follow candidates.

Every mutation goes through the same apply helpers that event replay uses,
so folding the event log over a freshly initialized state reproduces the
final counters, seen-sets, graph, and memories exactly. All randomness
comes from one seeded stream in a fixed order: at initialization, per agent
in id order, opinion draws (resampled until the sign matches for
influencers) then persona draws, then the pairwise wiring coins; per
iteration, the posting coin per agent in id order with the stub's
post-text draws inline on success, then per agent in id order and per
served message in rank order the assessment noise (if any) followed by the
like, repost, and comment coins with reply-text draws inline, then that
agent's follow coins (candidate authors ascending) and unfollow coins
(followees ascending).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import kernels
from .gateway import Gateway, GatewayError
from .graph import (
    ConnectionDynamicsParams,
    NetworkInitParams,
    SocialGraph,
    evolve_connections,
    init_network,
)
from .kernels import (
    BimodalOpinions,
    NormalOpinions,
    OpinionDistribution,
    PostingParams,
    ReactionParams,
    Rng,
    SigmoidParams,
    distribution_from_dict,
    posting_probability,
    reaction_probability,
    sample_opinion,
)
from .model import (
    DEFAULT_MEMORY_CAPACITY,
    DEFAULT_TOPIC,
    ActionKind,
    Agent,
    MemoryEntry,
    MemoryKind,
    Message,
    MessageKind,
    Role,
    SessionEvent,
    Topic,
    validate_population,
)

SNAPSHOT_FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


class ReplayMismatch(RuntimeError):
    pass


def _reaction_to_dict(p: ReactionParams) -> dict:
    return {
        "base_prob": p.base_prob,
        "strength_weight": p.strength_weight,
        "cross_ideology": p.cross_ideology,
        "exponent": p.exponent,
        "sigmoid": {"steepness": p.sigmoid.steepness, "midpoint": p.sigmoid.midpoint},
    }


def _reaction_from_dict(d: dict) -> ReactionParams:
    sig = d.get("sigmoid", {})
    return ReactionParams(
        base_prob=d["base_prob"],
        strength_weight=d["strength_weight"],
        cross_ideology=d["cross_ideology"],
        exponent=d.get("exponent", 10.0),
        sigmoid=SigmoidParams(
            steepness=sig.get("steepness", 10.0), midpoint=sig.get("midpoint", 0.5)
        ),
    )


@dataclass(frozen=True)
class SimulationConfig:
    """Full parameterization of one agent-phase run."""

    n_regular: int = 24
    n_influencers_pro: int = 3
    n_influencers_contra: int = 3
    n_iterations: int = 10
    n_recs: int = 8
    posting: PostingParams = field(default_factory=PostingParams)
    distribution: OpinionDistribution = field(default_factory=BimodalOpinions)
    reaction_like: ReactionParams = field(default_factory=kernels.like_params)
    reaction_repost: ReactionParams = field(default_factory=kernels.repost_params)
    reaction_comment: ReactionParams = field(default_factory=kernels.comment_params)
    network_init: NetworkInitParams = field(default_factory=NetworkInitParams)
    connection: ConnectionDynamicsParams = field(default_factory=ConnectionDynamicsParams)
    topic: Topic = DEFAULT_TOPIC
    memory_capacity: int = DEFAULT_MEMORY_CAPACITY
    seed: int = 42

    @property
    def n_agents(self) -> int:
        return self.n_regular + self.n_influencers_pro + self.n_influencers_contra

    def __post_init__(self) -> None:
        if min(self.n_regular, self.n_influencers_pro, self.n_influencers_contra) < 0:
            raise ConfigError("population counts must be >= 0")
        if self.n_agents < 1:
            raise ConfigError("population must not be empty")
        if self.n_iterations < 0:
            raise ConfigError("n_iterations must be >= 0")
        if self.n_recs < 0:
            raise ConfigError("n_recs must be >= 0")
        if self.memory_capacity < 1:
            raise ConfigError("memory_capacity must be >= 1")

    @classmethod
    def polarized(cls, seed: int = 42, **overrides) -> "SimulationConfig":
        overrides.setdefault("distribution", BimodalOpinions(mu1=0.8, mu2=-0.8, sigma=0.1))
        return cls(seed=seed, **overrides)

    @classmethod
    def moderate(cls, seed: int = 42, **overrides) -> "SimulationConfig":
        overrides.setdefault("distribution", NormalOpinions(mu=0.0, sigma=0.1))
        return cls(seed=seed, **overrides)

    def to_dict(self) -> dict:
        return {
            "n_regular": self.n_regular,
            "n_influencers_pro": self.n_influencers_pro,
            "n_influencers_contra": self.n_influencers_contra,
            "n_iterations": self.n_iterations,
            "n_recs": self.n_recs,
            "posting": {
                "regular_prob": self.posting.regular_prob,
                "influencer_prob": self.posting.influencer_prob,
            },
            "distribution": self.distribution.to_dict(),
            "reaction_like": _reaction_to_dict(self.reaction_like),
            "reaction_repost": _reaction_to_dict(self.reaction_repost),
            "reaction_comment": _reaction_to_dict(self.reaction_comment),
            "network_init": {
                "same_sign_influencer": self.network_init.same_sign_influencer,
                "same_sign_regular": self.network_init.same_sign_regular,
                "cross_sign": self.network_init.cross_sign,
            },
            "connection": {
                "follow": _reaction_to_dict(self.connection.follow),
                "unfollow_prob": self.connection.unfollow_prob,
            },
            "topic": self.topic.to_dict(),
            "memory_capacity": self.memory_capacity,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        base = cls()
        posting = d.get("posting")
        network = d.get("network_init")
        connection = d.get("connection")
        return cls(
            n_regular=d.get("n_regular", base.n_regular),
            n_influencers_pro=d.get("n_influencers_pro", base.n_influencers_pro),
            n_influencers_contra=d.get("n_influencers_contra", base.n_influencers_contra),
            n_iterations=d.get("n_iterations", base.n_iterations),
            n_recs=d.get("n_recs", base.n_recs),
            posting=PostingParams(**posting) if posting else base.posting,
            distribution=(
                distribution_from_dict(d["distribution"])
                if "distribution" in d
                else base.distribution
            ),
            reaction_like=(
                _reaction_from_dict(d["reaction_like"])
                if "reaction_like" in d
                else base.reaction_like
            ),
            reaction_repost=(
                _reaction_from_dict(d["reaction_repost"])
                if "reaction_repost" in d
                else base.reaction_repost
            ),
            reaction_comment=(
                _reaction_from_dict(d["reaction_comment"])
                if "reaction_comment" in d
                else base.reaction_comment
            ),
            network_init=NetworkInitParams(**network) if network else base.network_init,
            connection=(
                ConnectionDynamicsParams(
                    follow=_reaction_from_dict(connection["follow"]),
                    unfollow_prob=connection["unfollow_prob"],
                )
                if connection
                else base.connection
            ),
            topic=Topic.from_dict(d["topic"]) if "topic" in d else base.topic,
            memory_capacity=d.get("memory_capacity", base.memory_capacity),
            seed=d.get("seed", base.seed),
        )


@dataclass
class SimulationState:
    """Everything a run accumulates; serializable as a snapshot."""

    agents: dict[int, Agent] = field(default_factory=dict)
    graph: SocialGraph = field(default_factory=SocialGraph)
    messages: dict[int, Message] = field(default_factory=dict)
    seen: dict[int, set[int]] = field(default_factory=dict)
    events: list[SessionEvent] = field(default_factory=list)
    iteration: int = 0
    next_message_id: int = 1
    churn: list[dict] = field(default_factory=list)

    def agent_ids(self) -> list[int]:
        return sorted(self.agents)

    def append_event(
        self,
        actor: int,
        action: ActionKind,
        target: Optional[int],
        payload: Optional[str] = None,
        timestamp: float = 0,
    ) -> SessionEvent:
        ev = SessionEvent(
            seq=len(self.events) + 1,
            actor=actor,
            action=action,
            target=target,
            payload=payload,
            timestamp=timestamp,
        )
        self.events.append(ev)
        return ev

    def allocate_message_id(self) -> int:
        mid = self.next_message_id
        self.next_message_id += 1
        return mid

    def to_dict(self) -> dict:
        return {
            "agents": [self.agents[i].to_dict() for i in sorted(self.agents)],
            "graph": self.graph.to_adjacency(),
            "messages": [self.messages[i].to_dict() for i in sorted(self.messages)],
            "seen": {str(i): sorted(s) for i, s in self.seen.items()},
            "events": [e.to_dict() for e in self.events],
            "iteration": self.iteration,
            "next_message_id": self.next_message_id,
            "churn": self.churn,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationState":
        state = cls(
            agents={a["id"]: Agent.from_dict(a) for a in d["agents"]},
            graph=SocialGraph.from_adjacency(d["graph"]),
            messages={m["id"]: Message.from_dict(m) for m in d["messages"]},
            seen={int(k): set(v) for k, v in d["seen"].items()},
            events=[SessionEvent.from_dict(e) for e in d["events"]],
            iteration=d["iteration"],
            next_message_id=d["next_message_id"],
            churn=list(d.get("churn", [])),
        )
        return state

    def clone(self) -> "SimulationState":
        return copy.deepcopy(self)


# ---------------------------------------------------------------------------
# State mutation helpers, shared by the live engine and event replay.


def _timestamp_fields(timestamp: float) -> dict:
    if isinstance(timestamp, int) and not isinstance(timestamp, bool):
        return {"created_iteration": timestamp, "created_at": None}
    return {"created_iteration": None, "created_at": timestamp}


def apply_create(
    state: SimulationState,
    actor: int,
    kind: MessageKind,
    text: str,
    timestamp: float,
    parent_id: Optional[int] = None,
    stance_meta: Optional[float] = None,
    expected_id: Optional[int] = None,
) -> Message:
    """Create a message, update parent counters and author memory."""
    mid = state.allocate_message_id()
    if expected_id is not None and expected_id != mid:
        raise ReplayMismatch(f"log says message id {expected_id}, engine allocated {mid}")
    msg = Message(
        id=mid,
        author_id=actor,
        kind=kind,
        text=text,
        parent_id=parent_id,
        stance_meta=stance_meta,
        **_timestamp_fields(timestamp),
    )
    state.messages[mid] = msg
    agent = state.agents[actor]
    iteration = msg.created_iteration if msg.created_iteration is not None else state.iteration
    if kind is MessageKind.POST:
        agent.remember(MemoryEntry(MemoryKind.AUTHORED_POST, mid, iteration))
    elif kind is MessageKind.COMMENT:
        state.messages[parent_id].comments += 1
        agent.remember(MemoryEntry(MemoryKind.COMMENTED, parent_id, iteration))
        agent.remember(MemoryEntry(MemoryKind.AUTHORED_COMMENT, mid, iteration))
    else:
        state.messages[parent_id].reposts += 1
        agent.remember(MemoryEntry(MemoryKind.REPOSTED, parent_id, iteration))
        agent.remember(MemoryEntry(MemoryKind.AUTHORED_REPOST, mid, iteration))
    return msg


def apply_like(state: SimulationState, actor: int, mid: int, timestamp: float) -> None:
    state.messages[mid].likes += 1
    iteration = timestamp if isinstance(timestamp, int) else state.iteration
    state.agents[actor].remember(MemoryEntry(MemoryKind.LIKED, mid, iteration))


def apply_served(state: SimulationState, actor: int, mid: int, timestamp: float) -> None:
    state.seen.setdefault(actor, set()).add(mid)
    iteration = timestamp if isinstance(timestamp, int) else state.iteration
    state.agents[actor].remember(MemoryEntry(MemoryKind.SAW_MESSAGE, mid, iteration))


def replay_events(initial: SimulationState, events: Iterable[SessionEvent]) -> SimulationState:
    """Fold an event log over an initialized state.

    The log is self-contained given the initial state: create events carry
    the text, fresh posts carry their own id (verified against the
    deterministic id counter), replies carry the parent id and receive the
    next sequential id.
    """
    state = initial.clone()
    for ev in events:
        if ev.action is ActionKind.CREATE_POST:
            actor_opinion = state.agents[ev.actor].opinion
            apply_create(
                state,
                ev.actor,
                MessageKind.POST,
                ev.payload or "",
                ev.timestamp,
                stance_meta=actor_opinion,
                expected_id=ev.target,
            )
        elif ev.action in (ActionKind.CREATE_COMMENT, ActionKind.CREATE_REPOST):
            kind = (
                MessageKind.COMMENT
                if ev.action is ActionKind.CREATE_COMMENT
                else MessageKind.REPOST
            )
            apply_create(
                state,
                ev.actor,
                kind,
                ev.payload or "",
                ev.timestamp,
                parent_id=ev.target,
                stance_meta=state.agents[ev.actor].opinion,
            )
        elif ev.action is ActionKind.LIKE:
            apply_like(state, ev.actor, ev.target, ev.timestamp)
        elif ev.action is ActionKind.FEED_SERVED:
            apply_served(state, ev.actor, ev.target, ev.timestamp)
        elif ev.action is ActionKind.FOLLOW:
            state.graph.add_edge(ev.actor, ev.target)
        elif ev.action is ActionKind.UNFOLLOW:
            state.graph.remove_edge(ev.actor, ev.target)
        state.events.append(ev)
        if isinstance(ev.timestamp, int) and not isinstance(ev.timestamp, bool):
            state.iteration = max(state.iteration, ev.timestamp)
    return state


# ---------------------------------------------------------------------------
# Engine proper.


def initialize(config: SimulationConfig, gateway: Gateway, rng: Rng) -> SimulationState:
    """Create the population, personas, and initial follow graph.

    Agent ids are assigned in creation order: regulars first, then the pro
    influencers, then the contra influencers. Influencer opinions are
    redrawn until the sign matches the designated side, which a bimodal
    draw alone cannot guarantee.
    """
    agents: dict[int, Agent] = {}
    next_id = 0
    roster = (
        [(Role.REGULAR, 0)] * config.n_regular
        + [(Role.INFLUENCER, 1)] * config.n_influencers_pro
        + [(Role.INFLUENCER, -1)] * config.n_influencers_contra
    )
    for role, forced_side in roster:
        opinion = sample_opinion(config.distribution, rng)
        if forced_side:
            for _ in range(1000):
                if forced_side > 0 and opinion > 0:
                    break
                if forced_side < 0 and opinion < 0:
                    break
                opinion = sample_opinion(config.distribution, rng)
            else:
                raise ConfigError(
                    "could not draw an influencer opinion with the designated sign"
                )
        persona = gateway.generate_persona(opinion, rng)
        agents[next_id] = Agent(
            id=next_id,
            username=persona.username,
            biography=persona.biography,
            personality=persona.personality,
            opinion=opinion,
            role=role,
            memory_capacity=config.memory_capacity,
        )
        next_id += 1
    population = [agents[i] for i in sorted(agents)]
    validate_population(population)
    return SimulationState(
        agents=agents,
        graph=init_network(population, config.network_init, rng),
        seen={a.id: set() for a in population},
    )


def recommend_for_agent(
    state: SimulationState,
    agent_id: int,
    n: int,
    pool_ids: Optional[Iterable[int]] = None,
) -> list[Message]:
    """Top-n unseen, not-own messages ranked by author influence.

    Ties between equally influential authors go to the newer message
    (higher id), keeping feeds fresh and the ordering deterministic.
    """
    if n <= 0:
        return []
    ids = pool_ids if pool_ids is not None else sorted(state.messages)
    seen = state.seen.get(agent_id, set())
    divisor = max(1, state.graph.node_count - 1)
    eta: dict[int, float] = {}
    eligible: list[Message] = []
    for mid in ids:
        msg = state.messages[mid]
        if msg.author_id == agent_id or mid in seen:
            continue
        if msg.author_id not in eta:
            eta[msg.author_id] = state.graph.follower_count(msg.author_id) / divisor
        eligible.append(msg)
    eligible.sort(key=lambda m: (-eta[m.author_id], -m.id))
    return eligible[:n]


def step(
    state: SimulationState, config: SimulationConfig, gateway: Gateway, rng: Rng
) -> SimulationState:
    """Advance one iteration in place (also returns the state).

    Gateway failures abort the step and propagate with iteration context.
    """
    t = state.iteration + 1
    state.iteration = t
    try:
        _run_iteration(state, config, gateway, rng, t)
    except GatewayError as exc:
        raise type(exc)(f"iteration {t}: {exc}") from exc
    return state


def _run_iteration(
    state: SimulationState, config: SimulationConfig, gateway: Gateway, rng: Rng, t: int
) -> None:
    agent_ids = state.agent_ids()

    # Posting phase.
    for aid in agent_ids:
        agent = state.agents[aid]
        if rng.bernoulli(posting_probability(agent, config.posting)):
            draft = gateway.generate_message(agent, config.topic, MessageKind.POST, None, rng)
            msg = apply_create(
                state, aid, MessageKind.POST, draft.text, t, stance_meta=draft.stance_meta
            )
            state.append_event(aid, ActionKind.CREATE_POST, msg.id, draft.text, t)

    # Interaction phase. Eligibility is frozen here: replies created below
    # only become recommendable next iteration.
    pool_ids = sorted(state.messages)
    follows = unfollow_draws = unfollows = 0
    for aid in agent_ids:
        agent = state.agents[aid]
        recs = recommend_for_agent(state, aid, config.n_recs, pool_ids)
        for msg in recs:
            apply_served(state, aid, msg.id, t)
            state.append_event(aid, ActionKind.FEED_SERVED, msg.id, None, t)
            assessed = gateway.assess_opinion(agent, msg, config.topic, rng)
            if rng.bernoulli(reaction_probability(agent.opinion, assessed, config.reaction_like)):
                apply_like(state, aid, msg.id, t)
                state.append_event(aid, ActionKind.LIKE, msg.id, None, t)
            if rng.bernoulli(
                reaction_probability(agent.opinion, assessed, config.reaction_repost)
            ):
                draft = gateway.generate_message(
                    agent, config.topic, MessageKind.REPOST, msg, rng
                )
                apply_create(
                    state,
                    aid,
                    MessageKind.REPOST,
                    draft.text,
                    t,
                    parent_id=msg.id,
                    stance_meta=draft.stance_meta,
                )
                state.append_event(aid, ActionKind.CREATE_REPOST, msg.id, draft.text, t)
            if rng.bernoulli(
                reaction_probability(agent.opinion, assessed, config.reaction_comment)
            ):
                draft = gateway.generate_message(
                    agent, config.topic, MessageKind.COMMENT, msg, rng
                )
                apply_create(
                    state,
                    aid,
                    MessageKind.COMMENT,
                    draft.text,
                    t,
                    parent_id=msg.id,
                    stance_meta=draft.stance_meta,
                )
                state.append_event(aid, ActionKind.CREATE_COMMENT, msg.id, draft.text, t)
        changes = evolve_connections(
            state.graph,
            state.agents,
            {aid: [m.author_id for m in recs]},
            config.connection,
            rng,
        )
        for follower, followee in changes.added:
            state.append_event(follower, ActionKind.FOLLOW, followee, None, t)
        for follower, followee in changes.removed:
            state.append_event(follower, ActionKind.UNFOLLOW, followee, None, t)
        follows += len(changes.added)
        unfollow_draws += changes.unfollow_draws
        unfollows += len(changes.removed)

    state.churn.append(
        {
            "iteration": t,
            "follows": follows,
            "unfollow_draws": unfollow_draws,
            "unfollows": unfollows,
        }
    )


def run(config: SimulationConfig, gateway: Gateway, rng: Optional[Rng] = None) -> SimulationState:
    """Initialize and advance the configured number of iterations."""
    rng = rng if rng is not None else Rng(config.seed)
    state = initialize(config, gateway, rng)
    for _ in range(config.n_iterations):
        step(state, config, gateway, rng)
    return state


# ---------------------------------------------------------------------------
# Diagnostics.

STAT_COLUMNS = (
    "avg_followers",
    "avg_followees",
    "avg_posts",
    "avg_likes",
    "avg_comments",
    "avg_reposts",
)


@dataclass
class PlatformStats:
    """Per-role activity means at the end of a run."""

    rows: dict[str, dict[str, float]]

    def row(self, name: str) -> dict[str, float]:
        return self.rows[name]


def compute_stats(state: SimulationState) -> PlatformStats:
    """Mean followers, followees, and authored/given activity per role."""
    per_agent: dict[int, dict[str, float]] = {
        aid: dict.fromkeys(STAT_COLUMNS, 0.0) for aid in state.agents
    }
    for aid in state.agents:
        per_agent[aid]["avg_followers"] = state.graph.follower_count(aid)
        per_agent[aid]["avg_followees"] = len(state.graph.following(aid))
    kind_column = {
        MessageKind.POST: "avg_posts",
        MessageKind.COMMENT: "avg_comments",
        MessageKind.REPOST: "avg_reposts",
    }
    for msg in state.messages.values():
        if msg.author_id in per_agent:
            per_agent[msg.author_id][kind_column[msg.kind]] += 1
    for ev in state.events:
        if ev.action is ActionKind.LIKE and ev.actor in per_agent:
            per_agent[ev.actor]["avg_likes"] += 1

    def means(ids: list[int]) -> dict[str, float]:
        if not ids:
            return dict.fromkeys(STAT_COLUMNS, 0.0)
        return {
            col: sum(per_agent[i][col] for i in ids) / len(ids) for col in STAT_COLUMNS
        }

    influencers = [a.id for a in state.agents.values() if a.is_influencer]
    regular = [a.id for a in state.agents.values() if not a.is_influencer]
    return PlatformStats(
        rows={
            "overall": means(sorted(state.agents)),
            "influencers": means(influencers),
            "regular": means(regular),
        }
    )
