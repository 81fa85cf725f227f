"""REST service hosting the human-participant phase.

Endpoints (JSON bodies, errors as 4xx with ``{code, message}``):

    POST   /sessions                                  create a session
    GET    /sessions/{sid}                            timer / condition info
    GET    /sessions/{sid}/feed?page=P                serve one feed page
    POST   /sessions/{sid}/posts                      participant post
    POST   /sessions/{sid}/messages/{mid}/likes       like (idempotent, 409 on repeat)
    POST   /sessions/{sid}/messages/{mid}/comments    comment
    POST   /sessions/{sid}/messages/{mid}/reposts     repost
    POST   /sessions/{sid}/follows                    follow an agent
    DELETE /sessions/{sid}/follows/{agent_id}         unfollow
    GET    /sessions/{sid}/suggested-users            discovery panel
    GET    /users/{handle}?session_id=SID             public profile
    GET    /sessions/{sid}/events                     full session event log

Sessions are independent: each owns a deep copy of its condition snapshot
and a lock, so concurrent requests to distinct sessions never contend.
Every event is also appended to a per-session JSON-lines file.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
import uuid
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .conditions import condition_path
from .feed import Bias, ConditionSpec, FeedWeights, Polarization
from .sessions import (
    DEFAULT_DURATION_S,
    DEFAULT_PAGE_SIZE,
    DuplicateLike,
    Session,
    SessionError,
    SessionExpired,
    UnknownSession,
    UnknownTarget,
    create_session,
)
from .storage import EventLogWriter, load_snapshot, write_atomic

_HTTP_STATUS = {
    SessionExpired.code: 409,
    DuplicateLike.code: 409,
    UnknownTarget.code: 404,
    UnknownSession.code: 404,
    "empty_text": 400,
    "unknown_condition": 404,
    "unknown_user": 404,
}


class ConditionBody(BaseModel):
    polarization: Polarization
    bias: Bias


class CreateSessionBody(BaseModel):
    condition: ConditionBody
    seed: Optional[int] = None
    duration_s: Optional[float] = Field(default=None, gt=0)


class TextBody(BaseModel):
    text: str


class FollowBody(BaseModel):
    agent_id: int


class _SessionHandle:
    def __init__(self, session: Session, log_path: Optional[Path]):
        self.session = session
        self.lock = threading.Lock()
        self.writer = EventLogWriter(log_path) if log_path else None
        self.flushed = 0
        if log_path is not None:
            # The seed makes the session's ranking-noise stream replayable.
            write_atomic(
                log_path.with_suffix(".meta.json"),
                json.dumps(
                    {
                        "session_id": session.id,
                        "condition": session.condition.to_dict(),
                        "seed": session.seed,
                        "started_at": session.started_at,
                        "duration_s": session.duration_s,
                        "participant_id": session.participant_id,
                    },
                    indent=2,
                    sort_keys=True,
                )
                + "\n",
            )

    def flush_events(self) -> None:
        if self.writer is None:
            return
        events = self.session.session_events()
        for ev in events[self.flushed :]:
            self.writer.append(ev)
        self.flushed = len(events)

    def close(self) -> None:
        self.flush_events()
        if self.writer is not None:
            self.writer.close()


def create_app(
    snapshot_dir: Path,
    log_dir: Optional[Path] = None,
    clock: Callable[[], float] = time.time,
    page_size: int = DEFAULT_PAGE_SIZE,
    default_duration_s: float = DEFAULT_DURATION_S,
    weights: Optional[FeedWeights] = None,
) -> FastAPI:
    """Build the service around the condition snapshots found in a directory."""
    snapshot_dir = Path(snapshot_dir)
    if not snapshot_dir.is_dir():
        raise FileNotFoundError(f"snapshot directory {snapshot_dir} does not exist")
    snapshots = {}
    for polarization in Polarization:
        for bias in Bias:
            path = condition_path(snapshot_dir, polarization, bias)
            if path.exists():
                snapshots[(polarization, bias)] = load_snapshot(path)
    if not snapshots:
        raise FileNotFoundError(f"no condition snapshots in {snapshot_dir}")
    log_dir = Path(log_dir) if log_dir else snapshot_dir / "session_logs"

    handles: dict[str, _SessionHandle] = {}

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        for handle in handles.values():
            handle.close()

    app = FastAPI(title="polarsim feed service", lifespan=lifespan)
    # The participant UI is served from a different origin than the API.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def fail(code: str, message: str) -> JSONResponse:
        return JSONResponse(
            status_code=_HTTP_STATUS.get(code, 400),
            content={"code": code, "message": message},
        )

    @app.exception_handler(SessionError)
    async def _session_error(_req: Request, exc: SessionError):
        return fail(exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422, content={"code": "invalid_request", "message": str(exc.errors())}
        )

    def handle_of(sid: str) -> _SessionHandle:
        handle = handles.get(sid)
        if handle is None:
            raise UnknownSession(f"session {sid} does not exist")
        return handle

    @app.post("/sessions")
    def create(body: CreateSessionBody):
        key = (body.condition.polarization, body.condition.bias)
        snap = snapshots.get(key)
        if snap is None:
            return fail(
                "unknown_condition",
                f"no snapshot prepared for {key[0].value}/{key[1].value}",
            )
        sid = uuid.uuid4().hex[:12]
        seed = body.seed if body.seed is not None else secrets.randbits(63)
        session = create_session(
            sid,
            snap.state,
            ConditionSpec(polarization=key[0], bias=key[1]),
            seed=seed,
            now=clock(),
            duration_s=body.duration_s or default_duration_s,
            weights=weights,
            page_size=page_size,
        )
        handles[sid] = _SessionHandle(session, log_dir / f"{sid}.jsonl")
        return {"session_id": sid, "duration_s": session.duration_s}

    @app.get("/sessions/{sid}")
    def info(sid: str):
        handle = handle_of(sid)
        with handle.lock:
            s = handle.session
            return {
                "session_id": s.id,
                "condition": s.condition.to_dict(),
                "duration_s": s.duration_s,
                "remaining_s": s.remaining_s(clock()),
                "participant": s.state.agents[s.participant_id].username,
            }

    @app.get("/sessions/{sid}/feed")
    def feed(sid: str, page: int = 1):
        handle = handle_of(sid)
        with handle.lock:
            posts, has_more = handle.session.get_feed(page, clock())
            handle.flush_events()
            return {"posts": posts, "page": page, "has_more": has_more}

    @app.post("/sessions/{sid}/posts")
    def post(sid: str, body: TextBody):
        handle = handle_of(sid)
        with handle.lock:
            event = handle.session.create_post(body.text, clock())
            handle.flush_events()
            return {"message_id": event.target, "seq": event.seq}

    @app.post("/sessions/{sid}/messages/{mid}/likes")
    def like(sid: str, mid: int):
        handle = handle_of(sid)
        with handle.lock:
            event = handle.session.like(mid, clock())
            handle.flush_events()
            return {"message_id": mid, "likes": handle.session.state.messages[mid].likes, "seq": event.seq}

    @app.post("/sessions/{sid}/messages/{mid}/comments")
    def comment(sid: str, mid: int, body: TextBody):
        handle = handle_of(sid)
        with handle.lock:
            handle.session.comment(mid, body.text, clock())
            handle.flush_events()
            msg = handle.session.state.messages[mid]
            return {"message_id": mid, "comments": msg.comments}

    @app.post("/sessions/{sid}/messages/{mid}/reposts")
    def repost(sid: str, mid: int):
        handle = handle_of(sid)
        with handle.lock:
            handle.session.repost(mid, clock())
            handle.flush_events()
            msg = handle.session.state.messages[mid]
            return {"message_id": mid, "reposts": msg.reposts}

    @app.post("/sessions/{sid}/follows")
    def follow(sid: str, body: FollowBody):
        handle = handle_of(sid)
        with handle.lock:
            handle.session.follow(body.agent_id, clock())
            handle.flush_events()
            return {"agent_id": body.agent_id, "following": True}

    @app.delete("/sessions/{sid}/follows/{agent_id}")
    def unfollow(sid: str, agent_id: int):
        handle = handle_of(sid)
        with handle.lock:
            handle.session.unfollow(agent_id, clock())
            handle.flush_events()
            return {"agent_id": agent_id, "following": False}

    @app.get("/sessions/{sid}/suggested-users")
    def suggested(sid: str, limit: int = 5):
        handle = handle_of(sid)
        with handle.lock:
            return {"users": handle.session.suggested_users(limit)}

    @app.get("/users/{handle}")
    def profile(handle: str, session_id: str):
        session_handle = handle_of(session_id)
        with session_handle.lock:
            payload = session_handle.session.profile(handle)
            if payload is None:
                return fail("unknown_user", f"no user named {handle!r}")
            return payload

    @app.get("/sessions/{sid}/events")
    def events(sid: str):
        handle = handle_of(sid)
        with handle.lock:
            return {"events": [e.to_dict() for e in handle.session.session_events()]}

    return app
