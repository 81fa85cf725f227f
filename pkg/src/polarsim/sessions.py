"""Human-participant sessions over frozen condition snapshots.

A session deep-copies the snapshot state, adds a synthetic participant
record (no opinion, regular role) to the population and graph, and then
accepts interactions for a bounded wall-clock window. Artificial agents
generate nothing during a session; the only state changes are the
participant's own posts, comments, reposts, likes, and follow edges, all
recorded as events. Feed requests re-rank the frozen pool per request
through the bias quota, drawing ranking noise from a per-session seeded
stream so even the stochastic term replays.

Served payloads never contain stance tags, opinion values, or roles.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import SimulationState, apply_create, apply_like, apply_served
from .feed import Bias, ConditionSpec, FeedWeights, page_slice, rank_candidates
from .kernels import Rng
from .model import (
    ActionKind,
    Agent,
    Message,
    MessageKind,
    Role,
    SessionEvent,
)


class SessionError(RuntimeError):
    """Base class; ``code`` doubles as the wire-format error code."""

    code = "session_error"


class SessionExpired(SessionError):
    code = "session_expired"


class DuplicateLike(SessionError):
    code = "duplicate_like"


class UnknownTarget(SessionError):
    code = "unknown_target"


class UnknownSession(SessionError):
    code = "unknown_session"


class EmptyText(SessionError):
    code = "empty_text"


DEFAULT_DURATION_S = 600.0
DEFAULT_PAGE_SIZE = 10
PARTICIPANT_USERNAME = "participant"


def _message_payload(msg: Message, usernames: dict[int, str], own_id: int) -> dict:
    return {
        "id": msg.id,
        "username": usernames[msg.author_id],
        "kind": msg.kind.value,
        "text": msg.text,
        "created_iteration": msg.created_iteration,
        "created_at": msg.created_at,
        "likes": msg.likes,
        "comments": msg.comments,
        "reposts": msg.reposts,
        "is_own": msg.author_id == own_id,
    }


@dataclass
class Session:
    """One participant's isolated platform instance."""

    id: str
    condition: ConditionSpec
    state: SimulationState
    participant_id: int
    started_at: float
    duration_s: float = DEFAULT_DURATION_S
    rng: Rng = field(default_factory=lambda: Rng(0))
    weights: FeedWeights = field(default_factory=FeedWeights)
    page_size: int = DEFAULT_PAGE_SIZE
    seed: int = 0
    session_start_seq: int = 0
    interacted_authors: set[int] = field(default_factory=set)
    liked_messages: set[int] = field(default_factory=set)

    # -- plumbing -----------------------------------------------------------

    def remaining_s(self, now: float) -> float:
        return max(0.0, self.started_at + self.duration_s - now)

    def is_expired(self, now: float) -> bool:
        return now > self.started_at + self.duration_s

    def _require_active(self, now: float) -> None:
        if self.is_expired(now):
            raise SessionExpired(f"session {self.id} ended after {self.duration_s:.0f}s")

    def _usernames(self) -> dict[int, str]:
        return {a.id: a.username for a in self.state.agents.values()}

    def _is_artificial(self, agent_id: int) -> bool:
        return agent_id != self.participant_id and agent_id in self.state.agents

    def session_events(self) -> list[SessionEvent]:
        return self.state.events[self.session_start_seq :]

    # -- recommendation -----------------------------------------------------

    def user_opinion_estimate(self) -> Optional[float]:
        """Mean true opinion of the distinct artificial users interacted with."""
        if not self.interacted_authors:
            return None
        opinions = [self.state.agents[a].opinion for a in sorted(self.interacted_authors)]
        return sum(opinions) / len(opinions)

    def _candidate_posts(self) -> list[Message]:
        return [
            m
            for m in self.state.messages.values()
            if m.kind is MessageKind.POST and m.author_id != self.participant_id
        ]

    def get_feed(self, page: int, now: float) -> tuple[list[dict], bool]:
        """Serve one page: quota-constrained ranking, own posts atop page 1.

        Reading stays available after expiry; only interactions are
        rejected. Every served item is logged as a feed exposure event.
        """
        candidates = self._candidate_posts()
        author_opinion = {
            m.author_id: self.state.agents[m.author_id].opinion for m in candidates
        }
        pools = rank_candidates(
            candidates, author_opinion, self.user_opinion_estimate(), self.weights, self.rng
        )
        items, has_more = page_slice(pools, self.condition.bias, page, self.page_size)
        if page == 1:
            own = [
                m
                for m in self.state.messages.values()
                if m.kind is MessageKind.POST and m.author_id == self.participant_id
            ]
            own.sort(key=lambda m: -m.id)
            items = own + items
        usernames = self._usernames()
        payloads = []
        for msg in items:
            payload = _message_payload(msg, usernames, self.participant_id)
            payload["comment_items"] = [
                _message_payload(c, usernames, self.participant_id)
                for c in sorted(
                    (
                        m
                        for m in self.state.messages.values()
                        if m.kind is MessageKind.COMMENT and m.parent_id == msg.id
                    ),
                    key=lambda m: m.id,
                )
            ]
            payloads.append(payload)
            apply_served(self.state, self.participant_id, msg.id, now)
            self.state.append_event(
                self.participant_id, ActionKind.FEED_SERVED, msg.id, None, now
            )
        return payloads, has_more

    # -- interactions -------------------------------------------------------

    def _require_message(self, mid: int) -> Message:
        msg = self.state.messages.get(mid)
        if msg is None:
            raise UnknownTarget(f"message {mid} does not exist")
        return msg

    def _note_author(self, agent_id: int) -> None:
        if self._is_artificial(agent_id):
            self.interacted_authors.add(agent_id)

    def create_post(self, text: str, now: float) -> SessionEvent:
        self._require_active(now)
        if not text or not text.strip():
            raise EmptyText("post text must be non-empty")
        msg = apply_create(
            self.state, self.participant_id, MessageKind.POST, text.strip(), now
        )
        return self.state.append_event(
            self.participant_id, ActionKind.CREATE_POST, msg.id, msg.text, now
        )

    def like(self, mid: int, now: float) -> SessionEvent:
        self._require_active(now)
        msg = self._require_message(mid)
        if mid in self.liked_messages:
            raise DuplicateLike(f"message {mid} already liked")
        self.liked_messages.add(mid)
        apply_like(self.state, self.participant_id, mid, now)
        self._note_author(msg.author_id)
        return self.state.append_event(self.participant_id, ActionKind.LIKE, mid, None, now)

    def comment(self, mid: int, text: str, now: float) -> SessionEvent:
        self._require_active(now)
        msg = self._require_message(mid)
        if not text or not text.strip():
            raise EmptyText("comment text must be non-empty")
        apply_create(
            self.state,
            self.participant_id,
            MessageKind.COMMENT,
            text.strip(),
            now,
            parent_id=mid,
        )
        self._note_author(msg.author_id)
        return self.state.append_event(
            self.participant_id, ActionKind.CREATE_COMMENT, mid, text.strip(), now
        )

    def repost(self, mid: int, now: float) -> SessionEvent:
        self._require_active(now)
        msg = self._require_message(mid)
        apply_create(
            self.state, self.participant_id, MessageKind.REPOST, "", now, parent_id=mid
        )
        self._note_author(msg.author_id)
        return self.state.append_event(
            self.participant_id, ActionKind.CREATE_REPOST, mid, None, now
        )

    def follow(self, agent_id: int, now: float) -> Optional[SessionEvent]:
        """Idempotent: refollowing is a no-op and logs nothing."""
        self._require_active(now)
        if not self._is_artificial(agent_id):
            raise UnknownTarget(f"agent {agent_id} does not exist")
        if self.state.graph.has_edge(self.participant_id, agent_id):
            return None
        self.state.graph.add_edge(self.participant_id, agent_id)
        self._note_author(agent_id)
        return self.state.append_event(
            self.participant_id, ActionKind.FOLLOW, agent_id, None, now
        )

    def unfollow(self, agent_id: int, now: float) -> Optional[SessionEvent]:
        self._require_active(now)
        if not self._is_artificial(agent_id):
            raise UnknownTarget(f"agent {agent_id} does not exist")
        if not self.state.graph.remove_edge(self.participant_id, agent_id):
            return None
        return self.state.append_event(
            self.participant_id, ActionKind.UNFOLLOW, agent_id, None, now
        )

    def record_interaction(
        self, action: ActionKind, target: Optional[int], now: float, payload: Optional[str] = None
    ) -> Optional[SessionEvent]:
        """Dispatch one participant interaction by action kind."""
        if action is ActionKind.CREATE_POST:
            return self.create_post(payload or "", now)
        if action is ActionKind.LIKE:
            return self.like(target, now)
        if action is ActionKind.CREATE_COMMENT:
            return self.comment(target, payload or "", now)
        if action is ActionKind.CREATE_REPOST:
            return self.repost(target, now)
        if action is ActionKind.FOLLOW:
            return self.follow(target, now)
        if action is ActionKind.UNFOLLOW:
            return self.unfollow(target, now)
        raise ValueError(f"unsupported participant action {action}")

    # -- discovery ----------------------------------------------------------

    def suggested_users(self, limit: int = 5) -> list[dict]:
        """Most-followed artificial users the participant doesn't follow yet."""
        followed = self.state.graph.following(self.participant_id)
        rows = [
            a
            for a in self.state.agents.values()
            if a.id != self.participant_id and a.id not in followed
        ]
        rows.sort(key=lambda a: (-self.state.graph.follower_count(a.id), a.id))
        return [
            {
                "agent_id": a.id,
                "username": a.username,
                "biography": a.biography,
                "followers": self.state.graph.follower_count(a.id),
            }
            for a in rows[:limit]
        ]

    def profile(self, handle: str) -> Optional[dict]:
        """Public profile by username; None when the handle is unknown."""
        agent = next(
            (a for a in self.state.agents.values() if a.username == handle), None
        )
        if agent is None:
            return None
        usernames = self._usernames()
        posts = []
        for msg in sorted(
            (
                m
                for m in self.state.messages.values()
                if m.kind is MessageKind.POST and m.author_id == agent.id
            ),
            key=lambda m: -m.id,
        ):
            payload = _message_payload(msg, usernames, self.participant_id)
            payload["comment_items"] = [
                _message_payload(c, usernames, self.participant_id)
                for c in sorted(
                    (
                        m
                        for m in self.state.messages.values()
                        if m.kind is MessageKind.COMMENT and m.parent_id == msg.id
                    ),
                    key=lambda m: m.id,
                )
            ]
            posts.append(payload)
        return {
            "agent_id": agent.id,
            "username": agent.username,
            "biography": agent.biography,
            "followers": self.state.graph.follower_count(agent.id),
            "followees": len(self.state.graph.following(agent.id)),
            "posts": posts,
            "is_followed": self.state.graph.has_edge(self.participant_id, agent.id)
            if agent.id != self.participant_id
            else None,
            "is_self": agent.id == self.participant_id,
        }


def create_session(
    session_id: str,
    snapshot_state: SimulationState,
    condition: ConditionSpec,
    seed: int,
    now: Optional[float] = None,
    duration_s: float = DEFAULT_DURATION_S,
    weights: Optional[FeedWeights] = None,
    page_size: int = DEFAULT_PAGE_SIZE,
) -> Session:
    """Spin up an isolated session over a deep copy of the snapshot."""
    state = snapshot_state.clone()
    participant_id = max(state.agents) + 1 if state.agents else 0
    username = PARTICIPANT_USERNAME
    taken = {a.username for a in state.agents.values()}
    suffix = 2
    while username in taken:
        username = f"{PARTICIPANT_USERNAME}{suffix}"
        suffix += 1
    capacity = next(iter(state.agents.values())).memory_capacity if state.agents else 10
    state.agents[participant_id] = Agent(
        id=participant_id,
        username=username,
        biography="Study participant.",
        personality="",
        opinion=None,
        role=Role.REGULAR,
        memory_capacity=capacity,
    )
    state.graph.add_node(participant_id)
    state.seen.setdefault(participant_id, set())
    started = now if now is not None else time.time()
    return Session(
        id=session_id,
        condition=condition,
        state=state,
        participant_id=participant_id,
        started_at=started,
        duration_s=duration_s,
        rng=Rng(seed),
        weights=weights or FeedWeights(),
        page_size=page_size,
        seed=seed,
        session_start_seq=len(state.events),
    )
