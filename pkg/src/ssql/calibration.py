"""Human-in-the-loop threshold search over a scored candidate list.

Candidates are held sorted by descending similarity. Each round probes the
candidate at index floor((n-1)/2) of the remaining list. A "yes" accepts
the probed candidate and everything scored above it, and continues below;
a "no" discards the probed candidate and everything below it, and
continues above. Every answer strictly shrinks the remaining list, so a
session asks at most floor(log2(n0)) + 1 questions.

When the answerer is consistent with some score threshold t* (yes exactly
when score >= t*), the final accepted set is exactly the candidates with
score >= t*.

A session is a single-writer state machine: callers must serialize
answer() per session (the service layer holds a per-session lock).
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    EmptyCandidatesError,
    SessionDoneError,
    SessionNotDoneError,
    SessionNotFoundError,
)
from .index import ScoredCandidate


class SessionState(str, Enum):
    AWAITING_ANSWER = "awaiting_answer"
    DONE = "done"


def probe_index(n: int) -> int:
    if n < 1:
        raise ValueError("remaining list must be non-empty")
    return (n - 1) // 2


def probe_of(remaining: list[ScoredCandidate]) -> int:
    """Image id of the 50th-percentile candidate of a descending list."""
    return remaining[probe_index(len(remaining))].image_id


def _sorted_candidates(candidates: list[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(candidates, key=lambda c: (-c.score, c.image_id))


@dataclass
class CalibrationSession:
    session_id: str
    remaining: list[ScoredCandidate]
    accepted: list[int] = field(default_factory=list)
    questions: list[tuple[int, bool]] = field(default_factory=list)
    state: SessionState = SessionState.AWAITING_ANSWER
    pending_probe: int | None = None
    initial_count: int = 0
    score_of: dict[int, float] = field(default_factory=dict)
    touched_at: float = field(default_factory=time.time)

    @classmethod
    def start(
        cls, candidates: list[ScoredCandidate], session_id: str | None = None
    ) -> "CalibrationSession":
        if not candidates:
            raise EmptyCandidatesError("cannot calibrate over zero candidates")
        for c in candidates:
            if not math.isfinite(c.score):
                raise ValueError(f"candidate {c.image_id} has non-finite score")
        ids = [c.image_id for c in candidates]
        if len(set(ids)) != len(ids):
            raise ValueError("candidate ids must be unique")
        ordered = _sorted_candidates(candidates)
        session = cls(
            session_id=session_id if session_id is not None else uuid.uuid4().hex,
            remaining=ordered,
            initial_count=len(ordered),
            score_of={c.image_id: c.score for c in ordered},
        )
        session.pending_probe = probe_of(session.remaining)
        return session

    @property
    def done(self) -> bool:
        return self.state is SessionState.DONE

    def question_budget(self) -> int:
        return int(math.floor(math.log2(self.initial_count))) + 1

    def answer(self, relevant: bool) -> None:
        if self.done:
            raise SessionDoneError(f"session {self.session_id} is finished")
        m = probe_index(len(self.remaining))
        probed = self.remaining[m]
        self.questions.append((probed.image_id, bool(relevant)))
        if relevant:
            # probed candidate and everything above it are confirmed relevant
            self.accepted.extend(c.image_id for c in self.remaining[: m + 1])
            self.remaining = self.remaining[m + 1 :]
        else:
            # probed candidate and everything below it are discarded
            self.remaining = self.remaining[:m]
        if self.remaining:
            self.pending_probe = probe_of(self.remaining)
        else:
            self.pending_probe = None
            self.state = SessionState.DONE
        self.touched_at = time.time()

    def results(self) -> list[int]:
        if not self.done:
            raise SessionNotDoneError(f"session {self.session_id} is still running")
        return sorted(self.accepted, key=lambda i: (-self.score_of[i], i))

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "remaining": [[c.image_id, c.score] for c in self.remaining],
            "accepted": list(self.accepted),
            "questions": [[i, answer] for i, answer in self.questions],
            "state": self.state.value,
            "pending_probe": self.pending_probe,
            "initial_count": self.initial_count,
            "scores": {str(i): s for i, s in self.score_of.items()},
            "touched_at": self.touched_at,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CalibrationSession":
        return cls(
            session_id=doc["session_id"],
            remaining=[ScoredCandidate(int(i), float(s)) for i, s in doc["remaining"]],
            accepted=[int(i) for i in doc["accepted"]],
            questions=[(int(i), bool(a)) for i, a in doc["questions"]],
            state=SessionState(doc["state"]),
            pending_probe=doc["pending_probe"],
            initial_count=int(doc["initial_count"]),
            score_of={int(i): float(s) for i, s in doc["scores"].items()},
            touched_at=float(doc["touched_at"]),
        )


class SessionStore:
    """In-memory session registry with idle expiry and optional JSON
    snapshots for resumability across process restarts."""

    def __init__(self, ttl_seconds: float = 3600.0, persist_dir: str | Path | None = None):
        self._ttl = ttl_seconds
        self._persist_dir = Path(persist_dir) if persist_dir is not None else None
        if self._persist_dir is not None:
            self._persist_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, CalibrationSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def create(self, candidates: list[ScoredCandidate]) -> CalibrationSession:
        session = CalibrationSession.start(candidates)
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.Lock()
        self.save(session)
        return session

    def get(self, session_id: str) -> CalibrationSession:
        self._evict_expired()
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None and self._persist_dir is not None:
            session = self._load_snapshot(session_id)
        if session is None:
            raise SessionNotFoundError(f"no session {session_id!r}")
        session.touched_at = time.time()
        return session

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.Lock()
                self._locks[session_id] = lock
            return lock

    def save(self, session: CalibrationSession) -> None:
        if self._persist_dir is None:
            return
        path = self._persist_dir / f"{session.session_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(session.to_dict()))
        tmp.replace(path)

    def _load_snapshot(self, session_id: str) -> CalibrationSession | None:
        if not session_id.replace("-", "").isalnum():
            return None
        path = self._persist_dir / f"{session_id}.json"
        if not path.exists():
            return None
        session = CalibrationSession.from_dict(json.loads(path.read_text()))
        if time.time() - session.touched_at > self._ttl:
            return None
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks.setdefault(session.session_id, threading.Lock())
        return session

    def _evict_expired(self) -> None:
        now = time.time()
        with self._registry_lock:
            stale = [
                sid for sid, s in self._sessions.items()
                if now - s.touched_at > self._ttl
            ]
            for sid in stale:
                del self._sessions[sid]
                self._locks.pop(sid, None)
