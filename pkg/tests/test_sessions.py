"""Session semantics: freezing, interactions, expiry, opinion estimate."""

import pytest

from polarsim.engine import SimulationConfig, replay_events, run
from polarsim.feed import Bias, ConditionSpec, Polarization
from polarsim.gateway import Gateway
from polarsim.model import ActionKind, MessageKind
from polarsim.sessions import (
    DuplicateLike,
    EmptyText,
    SessionExpired,
    UnknownTarget,
    create_session,
)


@pytest.fixture(scope="module")
def snapshot_state():
    return run(SimulationConfig.polarized(seed=21), Gateway())


def make_session(snapshot_state, bias=Bias.PRO, now=1000.0, duration=600.0, seed=5):
    return create_session(
        "s1",
        snapshot_state,
        ConditionSpec(Polarization.POLARIZED, bias),
        seed=seed,
        now=now,
        duration_s=duration,
    )


class TestSessionSetup:
    def test_participant_record(self, snapshot_state):
        session = make_session(snapshot_state)
        participant = session.state.agents[session.participant_id]
        assert participant.opinion is None
        assert not participant.is_influencer
        assert session.participant_id not in snapshot_state.agents

    def test_snapshot_not_mutated(self, snapshot_state):
        before = len(snapshot_state.messages)
        session = make_session(snapshot_state)
        session.create_post("hello", 1001.0)
        session.like(next(iter(snapshot_state.messages)), 1001.0)
        assert len(snapshot_state.messages) == before

    def test_frozen_agents_author_nothing_new(self, snapshot_state):
        session = make_session(snapshot_state)
        agent_messages_before = {
            m.id for m in session.state.messages.values()
            if m.author_id != session.participant_id
        }
        session.get_feed(1, 1001.0)
        session.create_post("participant words", 1002.0)
        mid = next(iter(snapshot_state.messages))
        session.like(mid, 1003.0)
        session.comment(mid, "reply", 1004.0)
        agent_messages_after = {
            m.id for m in session.state.messages.values()
            if m.author_id != session.participant_id
        }
        assert agent_messages_before == agent_messages_after


class TestFeedServing:
    def test_no_stance_fields_in_payloads(self, snapshot_state):
        session = make_session(snapshot_state)
        posts, _ = session.get_feed(1, 1001.0)
        forbidden = {"stance_meta", "opinion", "role", "author_id"}
        for item in posts:
            assert not forbidden & set(item)
            for comment in item["comment_items"]:
                assert not forbidden & set(comment)

    def test_own_posts_prepended_newest_first(self, snapshot_state):
        session = make_session(snapshot_state)
        session.create_post("first", 1001.0)
        session.create_post("second", 1002.0)
        posts, _ = session.get_feed(1, 1003.0)
        assert posts[0]["text"] == "second"
        assert posts[1]["text"] == "first"
        assert posts[0]["is_own"] and posts[1]["is_own"]
        assert not posts[2]["is_own"]

    def test_own_posts_only_on_page_one(self, snapshot_state):
        session = make_session(snapshot_state)
        session.create_post("mine", 1001.0)
        page2, _ = session.get_feed(2, 1002.0)
        assert all(not item["is_own"] for item in page2)

    def test_feed_served_events_logged(self, snapshot_state):
        session = make_session(snapshot_state)
        posts, _ = session.get_feed(1, 1001.0)
        served = [e for e in session.session_events() if e.action is ActionKind.FEED_SERVED]
        assert len(served) == len(posts)

    def test_reading_allowed_after_expiry(self, snapshot_state):
        session = make_session(snapshot_state)
        posts, _ = session.get_feed(1, 5000.0)
        assert posts

    def test_pro_bias_mix(self, snapshot_state):
        session = make_session(snapshot_state, bias=Bias.PRO)
        posts, _ = session.get_feed(1, 1001.0)
        authors = {a.username: a for a in session.state.agents.values()}
        pro = sum(1 for p in posts if authors[p["username"]].opinion > 0)
        assert pro == 7


class TestInteractions:
    def test_like_idempotent(self, snapshot_state):
        session = make_session(snapshot_state)
        mid = next(iter(snapshot_state.messages))
        before = session.state.messages[mid].likes
        session.like(mid, 1001.0)
        with pytest.raises(DuplicateLike):
            session.like(mid, 1002.0)
        assert session.state.messages[mid].likes == before + 1

    def test_comment_creates_linked_message(self, snapshot_state):
        session = make_session(snapshot_state)
        mid = next(iter(snapshot_state.messages))
        before = session.state.messages[mid].comments
        session.comment(mid, "a reply", 1001.0)
        assert session.state.messages[mid].comments == before + 1
        created = max(session.state.messages)
        msg = session.state.messages[created]
        assert msg.kind is MessageKind.COMMENT
        assert msg.parent_id == mid
        assert msg.author_id == session.participant_id
        assert msg.stance_meta is None

    def test_repost_increments_counter(self, snapshot_state):
        session = make_session(snapshot_state)
        mid = next(iter(snapshot_state.messages))
        before = session.state.messages[mid].reposts
        session.repost(mid, 1001.0)
        assert session.state.messages[mid].reposts == before + 1

    def test_unknown_targets(self, snapshot_state):
        session = make_session(snapshot_state)
        with pytest.raises(UnknownTarget):
            session.like(999_999, 1001.0)
        with pytest.raises(UnknownTarget):
            session.follow(999, 1001.0)

    def test_empty_text_rejected(self, snapshot_state):
        session = make_session(snapshot_state)
        with pytest.raises(EmptyText):
            session.create_post("   ", 1001.0)

    def test_follow_idempotent_and_unfollow(self, snapshot_state):
        session = make_session(snapshot_state)
        assert session.follow(0, 1001.0) is not None
        assert session.follow(0, 1002.0) is None  # no event, no error
        follow_events = [
            e for e in session.session_events() if e.action is ActionKind.FOLLOW
        ]
        assert len(follow_events) == 1
        assert session.unfollow(0, 1003.0) is not None
        assert not session.state.graph.has_edge(session.participant_id, 0)
        assert session.unfollow(0, 1004.0) is None

    def test_follow_cannot_target_participant(self, snapshot_state):
        session = make_session(snapshot_state)
        with pytest.raises(UnknownTarget):
            session.follow(session.participant_id, 1001.0)

    def test_interactions_rejected_after_expiry(self, snapshot_state):
        session = make_session(snapshot_state, duration=10.0)
        mid = next(iter(snapshot_state.messages))
        session.like(mid, 1005.0)
        with pytest.raises(SessionExpired):
            session.create_post("late", 1011.0)
        with pytest.raises(SessionExpired):
            session.comment(mid, "late", 1011.0)

    def test_dispatcher_covers_actions(self, snapshot_state):
        session = make_session(snapshot_state)
        mid = next(iter(snapshot_state.messages))
        assert session.record_interaction(ActionKind.LIKE, mid, 1001.0) is not None
        assert (
            session.record_interaction(ActionKind.CREATE_POST, None, 1002.0, "hi") is not None
        )
        assert session.record_interaction(ActionKind.FOLLOW, 0, 1003.0) is not None


class TestOpinionEstimate:
    def test_none_before_interactions(self, snapshot_state):
        assert make_session(snapshot_state).user_opinion_estimate() is None

    def test_mean_of_distinct_authors(self, snapshot_state):
        session = make_session(snapshot_state)
        agents = session.state.agents
        pro = next(a for a in agents.values() if a.opinion is not None and a.opinion > 0)
        contra = next(a for a in agents.values() if a.opinion is not None and a.opinion < 0)
        session.follow(pro.id, 1001.0)
        session.follow(contra.id, 1002.0)
        estimate = session.user_opinion_estimate()
        assert estimate == pytest.approx((pro.opinion + contra.opinion) / 2)

    def test_repeat_interactions_do_not_reweight(self, snapshot_state):
        session = make_session(snapshot_state)
        author = next(
            a for a in session.state.agents.values() if a.opinion is not None and a.opinion < 0
        )
        messages = [
            m for m in session.state.messages.values() if m.author_id == author.id
        ][:2]
        assert messages, "author needs at least one message"
        for i, msg in enumerate(messages):
            session.like(msg.id, 1001.0 + i)
        session.follow(author.id, 1005.0)
        assert session.user_opinion_estimate() == pytest.approx(author.opinion)


class TestSessionReplay:
    def test_session_events_replay_onto_snapshot(self, snapshot_state):
        session = make_session(snapshot_state)
        mid = next(iter(snapshot_state.messages))
        session.get_feed(1, 1001.0)
        session.create_post("mine", 1002.0)
        session.like(mid, 1003.0)
        session.comment(mid, "reply", 1004.0)
        session.repost(mid, 1005.0)
        session.follow(0, 1006.0)

        base = snapshot_state.clone()
        base.agents[session.participant_id] = session.state.agents[
            session.participant_id
        ].__class__.from_dict(
            {
                **session.state.agents[session.participant_id].to_dict(),
                "memory": [],
            }
        )
        base.graph.add_node(session.participant_id)
        base.seen.setdefault(session.participant_id, set())
        replayed = replay_events(base, session.session_events())
        assert replayed.graph == session.state.graph
        assert {m: replayed.messages[m].to_dict() for m in replayed.messages} == {
            m: session.state.messages[m].to_dict() for m in session.state.messages
        }


class TestDiscovery:
    def test_suggested_users_exclude_followed(self, snapshot_state):
        session = make_session(snapshot_state)
        first = session.suggested_users(limit=3)
        assert len(first) == 3
        top = first[0]["username"]
        top_agent = next(a for a in session.state.agents.values() if a.username == top)
        session.follow(top_agent.id, 1001.0)
        after = session.suggested_users(limit=3)
        assert top not in [u["username"] for u in after]

    def test_suggested_sorted_by_followers(self, snapshot_state):
        session = make_session(snapshot_state)
        rows = session.suggested_users(limit=10)
        counts = [u["followers"] for u in rows]
        assert counts == sorted(counts, reverse=True)

    def test_profile_fields(self, snapshot_state):
        session = make_session(snapshot_state)
        some = session.state.agents[0]
        payload = session.profile(some.username)
        assert payload["username"] == some.username
        assert "opinion" not in payload and "stance_meta" not in str(payload["posts"])
        assert payload["followers"] == session.state.graph.follower_count(0)
        assert payload["is_self"] is False

    def test_profile_unknown_handle(self, snapshot_state):
        assert make_session(snapshot_state).profile("nobody_here") is None
