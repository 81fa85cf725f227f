"""Domain vocabulary shared by the simulation engine and the newsfeed service.

Agents hold a fixed opinion in [-1, 1] (sign = side of the debate, magnitude =
intensity), author messages, and remember a bounded window of their own
activity. Every state change in a run, whether caused by an artificial agent
or by a human participant, is also appended to an event log from which the
final counters, seen-sets, and follow graph can be rebuilt.

All types serialize to plain JSON dicts with snake_case field names and
opinions as decimal numbers.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

DEFAULT_MEMORY_CAPACITY = 10


class ModelError(ValueError):
    """Base class for domain validation failures."""


class DuplicateUsername(ModelError):
    pass


class OpinionOutOfRange(ModelError):
    pass


class Role(str, Enum):
    REGULAR = "regular"
    INFLUENCER = "influencer"


class MessageKind(str, Enum):
    POST = "post"
    COMMENT = "comment"
    REPOST = "repost"


class MemoryKind(str, Enum):
    AUTHORED_POST = "authored_post"
    AUTHORED_COMMENT = "authored_comment"
    AUTHORED_REPOST = "authored_repost"
    SAW_MESSAGE = "saw_message"
    LIKED = "liked"
    COMMENTED = "commented"
    REPOSTED = "reposted"


class ActionKind(str, Enum):
    CREATE_POST = "create_post"
    CREATE_COMMENT = "create_comment"
    CREATE_REPOST = "create_repost"
    LIKE = "like"
    FOLLOW = "follow"
    UNFOLLOW = "unfollow"
    FEED_SERVED = "feed_served"


def validate_opinion(value: float) -> float:
    """Reject opinions outside [-1, 1]; returns the value unchanged."""
    if not -1.0 <= value <= 1.0:
        raise OpinionOutOfRange(f"opinion {value!r} outside [-1, 1]")
    return float(value)


def clamp_opinion(value: float) -> float:
    return max(-1.0, min(1.0, float(value)))


def stance_sign(opinion: float) -> int:
    """Side of the debate an opinion belongs to; zero counts as pro (+1)."""
    return 1 if opinion >= 0 else -1


@dataclass(frozen=True)
class Topic:
    """Discussion topic handed to content generators."""

    name: str
    description: str

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ModelError("topic description must be non-empty")

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description}

    @classmethod
    def from_dict(cls, d: dict) -> "Topic":
        return cls(name=d["name"], description=d["description"])


DEFAULT_TOPIC = Topic(
    name="Universal Basic Income",
    description="focusing on economic, social and ethical implications",
)


@dataclass(frozen=True)
class MemoryEntry:
    kind: MemoryKind
    message_id: int
    iteration: int

    def __post_init__(self) -> None:
        if self.iteration < 0:
            raise ModelError("memory entry iteration must be >= 0")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "message_id": self.message_id,
            "iteration": self.iteration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MemoryEntry":
        return cls(MemoryKind(d["kind"]), d["message_id"], d["iteration"])


@dataclass
class Agent:
    """One simulated user. The opinion is fixed for the life of a run.

    Human participants get a synthetic record with ``opinion=None`` so that
    their messages and follow edges live in the same graph and log as the
    artificial population's.
    """

    id: int
    username: str
    biography: str
    personality: str
    opinion: Optional[float]
    role: Role = Role.REGULAR
    memory_capacity: int = DEFAULT_MEMORY_CAPACITY
    memory: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.opinion is not None:
            validate_opinion(self.opinion)
        if self.memory_capacity < 1:
            raise ModelError("memory capacity must be >= 1")
        self.memory = deque(self.memory, maxlen=self.memory_capacity)

    @property
    def is_influencer(self) -> bool:
        return self.role is Role.INFLUENCER

    def remember(self, entry: MemoryEntry) -> None:
        """Append to the FIFO history; the oldest entry falls off at capacity."""
        self.memory.append(entry)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "username": self.username,
            "biography": self.biography,
            "personality": self.personality,
            "opinion": self.opinion,
            "role": self.role.value,
            "memory_capacity": self.memory_capacity,
            "memory": [e.to_dict() for e in self.memory],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Agent":
        return cls(
            id=d["id"],
            username=d["username"],
            biography=d["biography"],
            personality=d["personality"],
            opinion=d["opinion"],
            role=Role(d["role"]),
            memory_capacity=d["memory_capacity"],
            memory=deque(MemoryEntry.from_dict(e) for e in d["memory"]),
        )


@dataclass
class Message:
    """A post, comment, or repost. Counters mirror the event log.

    ``stance_meta`` carries the author's opinion at creation time for
    internal scoring and testing; it is never rendered to participants.
    Agent-phase messages carry ``created_iteration``; participant messages
    carry ``created_at`` (epoch seconds).
    """

    id: int
    author_id: int
    kind: MessageKind
    text: str
    parent_id: Optional[int] = None
    created_iteration: Optional[int] = None
    created_at: Optional[float] = None
    likes: int = 0
    comments: int = 0
    reposts: int = 0
    stance_meta: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind is MessageKind.POST and self.parent_id is not None:
            raise ModelError("posts cannot have a parent")
        if self.kind is not MessageKind.POST and self.parent_id is None:
            raise ModelError(f"{self.kind.value} requires a parent message")
        if min(self.likes, self.comments, self.reposts) < 0:
            raise ModelError("counters must be non-negative")
        if self.stance_meta is not None:
            validate_opinion(self.stance_meta)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "author_id": self.author_id,
            "kind": self.kind.value,
            "text": self.text,
            "parent_id": self.parent_id,
            "created_iteration": self.created_iteration,
            "created_at": self.created_at,
            "likes": self.likes,
            "comments": self.comments,
            "reposts": self.reposts,
            "stance_meta": self.stance_meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Message":
        return cls(
            id=d["id"],
            author_id=d["author_id"],
            kind=MessageKind(d["kind"]),
            text=d["text"],
            parent_id=d["parent_id"],
            created_iteration=d["created_iteration"],
            created_at=d["created_at"],
            likes=d["likes"],
            comments=d["comments"],
            reposts=d["reposts"],
            stance_meta=d["stance_meta"],
        )


@dataclass(frozen=True)
class SessionEvent:
    """One recorded interaction; the unit of persistence and replay.

    ``target`` is the message acted on (the parent for comments/reposts,
    the new message id for fresh posts) or the agent id for follow edges.
    ``timestamp`` is the iteration index in the agent phase and epoch
    seconds in the human phase.
    """

    seq: int
    actor: int
    action: ActionKind
    target: Optional[int]
    payload: Optional[str] = None
    timestamp: float = 0

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "actor": self.actor,
            "action": self.action.value,
            "target": self.target,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionEvent":
        return cls(
            seq=d["seq"],
            actor=d["actor"],
            action=ActionKind(d["action"]),
            target=d["target"],
            payload=d["payload"],
            timestamp=d["timestamp"],
        )


def validate_population(agents: Iterable[Agent]) -> None:
    """Check population-wide invariants before a run starts.

    Usernames must be unique, every opinion present and in range, and all
    memory queues sized to the same capacity.
    """
    seen_names: set[str] = set()
    capacities: set[int] = set()
    for agent in agents:
        if agent.username in seen_names:
            raise DuplicateUsername(f"username {agent.username!r} appears twice")
        seen_names.add(agent.username)
        if agent.opinion is None:
            raise OpinionOutOfRange(f"agent {agent.id} has no opinion")
        validate_opinion(agent.opinion)
        capacities.add(agent.memory_capacity)
    if len(capacities) > 1:
        raise ModelError(f"mixed memory capacities in population: {sorted(capacities)}")


def recompute_counters(events: Iterable[SessionEvent]) -> dict[int, dict[str, int]]:
    """Tally likes/comments/reposts per message id from an event log."""
    counts: dict[int, dict[str, int]] = {}

    def bump(mid: int, key: str) -> None:
        counts.setdefault(mid, {"likes": 0, "comments": 0, "reposts": 0})[key] += 1

    for ev in events:
        if ev.action is ActionKind.LIKE:
            bump(ev.target, "likes")
        elif ev.action is ActionKind.CREATE_COMMENT:
            bump(ev.target, "comments")
        elif ev.action is ActionKind.CREATE_REPOST:
            bump(ev.target, "reposts")
    return counts


def dumps_canonical(obj) -> str:
    """Stable JSON encoding used for snapshots and logs (byte-reproducible)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
