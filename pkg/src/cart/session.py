"""Session state machine: transcript injection, edit handling, metrics.

A session owns one shared document and a total-order op log. The
network layer (server.py) feeds it messages; the simulator drives it
directly with a virtual clock. All methods run on the session's single
logical executor, so no locking happens here.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from . import collab, metrics
from .collab import AttributedDoc, EditOp, SYSTEM_AUTHOR
from .formatter import TimedWord
from .scenario import (ChunkMap, GROUP_SIZE, RoleAssignment, ScenarioKind,
                       advance_rotation, assign_roles, rotation_members)

PROTOCOL_VERSION = 1
HISTORY_LIMIT = 10_000

LOBBY = "lobby"
RUNNING = "running"
FINISHED = "finished"


class InvalidConfig(ValueError):
    pass


class NotEnoughUsers(RuntimeError):
    pass


class AlreadyRunning(RuntimeError):
    pass


class AlreadyFinished(RuntimeError):
    pass


class RevisionTooOld(RuntimeError):
    pass


class UnknownUser(RuntimeError):
    pass


@dataclass
class SessionConfig:
    scenario: ScenarioKind
    transcript: list[TimedWord]
    reference_text: str | None = None
    media_uri: str | None = None
    speedup: float = 1.0

    def validate(self) -> None:
        if not self.transcript:
            raise InvalidConfig("transcript must not be empty")
        if self.speedup <= 0:
            raise InvalidConfig("speedup must be positive")
        last_start = 0.0
        for w in self.transcript:
            if w.start_s < last_start:
                raise InvalidConfig("word start times must be non-decreasing")
            last_start = w.start_s


@dataclass
class OpRecord:
    """One applied op; `revision` is the revision it produced."""
    revision: int
    author: int
    op: EditOp
    server_time_ms: int

    def to_json(self) -> dict:
        return {
            "revision": self.revision,
            "author": self.author,
            "components": self.op.to_json(),
            "server_time_ms": self.server_time_ms,
        }


def envelope(msg_type: str, session: str, sender: int, payload: dict,
             server_time_ms: int) -> dict:
    return {
        "v": PROTOCOL_VERSION,
        "type": msg_type,
        "session": session,
        "sender": sender,
        "payload": payload,
        "server_time_ms": server_time_ms,
    }


@dataclass
class SessionStats:
    transform_pairs: int = 0        # (incoming op, concurrent server op) pairs
    human_conflicts: int = 0        # both sides of the pair were human edits
    edits_by_user: dict[int, int] = field(default_factory=dict)


class Session:
    def __init__(self, config: SessionConfig, session_id: str | None = None):
        config.validate()
        self.id = session_id or secrets.token_hex(8)
        self.config = config
        self.phase = LOBBY
        self.users: list[int] = []
        self.assignments: list[RoleAssignment] = []
        self.doc = AttributedDoc()
        self.oplog: list[OpRecord] = []
        self.injected_upto = 0
        self.clock_origin_ms: int | None = None
        self.stats = SessionStats()
        self.chunk_map: ChunkMap | None = None

    # -- lifecycle ---------------------------------------------------

    def join(self, user: int) -> dict:
        if self.phase == FINISHED:
            raise AlreadyFinished(self.id)
        if user == SYSTEM_AUTHOR:
            raise InvalidConfig("author id 0 is reserved for the system")
        if user not in self.users:
            if len(self.users) >= GROUP_SIZE:
                raise InvalidConfig("session already has a full group")
            self.users.append(user)
            if len(self.users) == GROUP_SIZE:
                self.assignments = assign_roles(self.config.scenario, self.users)
                members = rotation_members(self.assignments)
                if members:
                    self.chunk_map = ChunkMap(tuple(members))
        return self.snapshot_payload(user)

    def assignment_for(self, user: int) -> RoleAssignment | None:
        for a in self.assignments:
            if a.user == user:
                return a
        return None

    def snapshot_payload(self, user: int) -> dict:
        a = self.assignment_for(user)
        return {
            "user": user,
            "assignment": a.to_dict() if a else None,
            "phase": self.phase,
            "revision": self.doc.revision,
            "content": self.doc.content,
            "authors": list(self.doc.authors),
            "injection_cursor": self.doc.injection_cursor,
            "clock_origin_ms": self.clock_origin_ms,
            "media_uri": self.config.media_uri,
            "users": list(self.users),
        }

    def start_playback(self, now_ms: int) -> int:
        if self.phase == RUNNING:
            raise AlreadyRunning(self.id)
        if self.phase == FINISHED:
            raise AlreadyFinished(self.id)
        if len(self.users) < GROUP_SIZE:
            raise NotEnoughUsers(f"{len(self.users)}/{GROUP_SIZE} users joined")
        self.phase = RUNNING
        self.clock_origin_ms = now_ms
        return now_ms

    # -- playback / injection ----------------------------------------

    def injection_tick(self, now_ms: int) -> list[dict]:
        """Inject every word whose end time has passed; returns Inject payloads."""
        if self.phase != RUNNING:
            return []
        elapsed_s = (now_ms - self.clock_origin_ms) / 1000.0 * self.config.speedup
        out = []
        words = self.config.transcript
        while self.injected_upto < len(words) and words[self.injected_upto].end_s <= elapsed_s:
            word = words[self.injected_upto]
            op = collab.inject_word(self.doc, word.text)
            record = self._apply(op, SYSTEM_AUTHOR, now_ms)
            self.injected_upto += 1
            out.append({
                "word": {"w": word.text, "s": word.start_s, "e": word.end_s},
                "index": self.injected_upto - 1,
                "components": record.op.to_json(),
                "revision": record.revision,
            })
        return out

    def playback_complete(self) -> bool:
        return self.injected_upto >= len(self.config.transcript)

    # -- edits ---------------------------------------------------------

    def handle_edit(self, user: int, op: EditOp, now_ms: int) -> OpRecord:
        if self.phase != RUNNING:
            raise AlreadyFinished(f"session not running: {self.phase}")
        if user not in self.users:
            raise UnknownUser(str(user))
        if op.base_revision > self.doc.revision:
            raise collab.RevisionMismatch(
                f"op from the future: {op.base_revision} > {self.doc.revision}")
        first_concurrent = op.base_revision  # records with revision > base
        if self.oplog and first_concurrent < self.oplog[0].revision - 1:
            raise RevisionTooOld(
                f"base revision {op.base_revision} is outside retained history")
        for record in self.oplog[first_concurrent - self._log_offset():]:
            rebased = EditOp(op.base_revision, record.op.components)
            op, _ = collab.transform(op, rebased)
            self.stats.transform_pairs += 1
            if record.author != SYSTEM_AUTHOR:
                self.stats.human_conflicts += 1
        applied = self._apply(op, user, now_ms)
        self.stats.edits_by_user[user] = self.stats.edits_by_user.get(user, 0) + 1
        return applied

    def _log_offset(self) -> int:
        # oplog[k] produced revision k + 1 + offset (offset > 0 after trimming)
        return self.oplog[0].revision - 1 if self.oplog else 0

    def _apply(self, op: EditOp, author: int, now_ms: int) -> OpRecord:
        self.doc = collab.apply(self.doc, op)
        record = OpRecord(self.doc.revision, author, op, now_ms)
        self.oplog.append(record)
        if len(self.oplog) > HISTORY_LIMIT:
            del self.oplog[: len(self.oplog) - HISTORY_LIMIT]
        return record

    # -- chunk bookkeeping --------------------------------------------

    def note_paragraph(self, index: int) -> None:
        if self.chunk_map is not None and index == len(self.chunk_map.owners):
            self.chunk_map = advance_rotation(self.chunk_map, index)

    # -- finalization ---------------------------------------------------

    def baseline_text(self) -> str:
        """The pure injection stream, without any user edits."""
        return " ".join(w.text for w in self.config.transcript[: self.injected_upto])

    def finalize(self, now_ms: int) -> metrics.MetricsDelta | None:
        if self.phase == FINISHED:
            raise AlreadyFinished(self.id)
        self.phase = FINISHED
        if self.config.reference_text is None:
            return None
        return metrics.reduction_report(
            self.config.reference_text,
            self.baseline_text(),
            self.doc.content,
            self.stats.edits_by_user,
        )

    # -- persistence -----------------------------------------------------

    def persist(self, directory: str | Path,
                delta: metrics.MetricsDelta | None = None) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / "oplog.ndjson", "w", encoding="utf-8") as fh:
            for record in self.oplog:
                fh.write(json.dumps(record.to_json(), ensure_ascii=False,
                                    sort_keys=True) + "\n")
        (directory / "final.txt").write_text(self.doc.content, encoding="utf-8")
        (directory / "baseline.txt").write_text(self.baseline_text(), encoding="utf-8")
        if self.config.reference_text is not None:
            (directory / "reference.txt").write_text(
                self.config.reference_text, encoding="utf-8")
        if delta is not None:
            (directory / "metrics.json").write_text(
                json.dumps(delta.to_dict(), ensure_ascii=False, sort_keys=True,
                           indent=2) + "\n",
                encoding="utf-8")
        return directory


def load_transcript(data: dict) -> list[TimedWord]:
    """Parse the timed-transcript JSON: {"words": [{"w","s","e"}, ...]}."""
    if not isinstance(data, dict) or "words" not in data:
        raise InvalidConfig('transcript JSON must have a "words" array')
    words = []
    for item in data["words"]:
        try:
            words.append(TimedWord(str(item["w"]), float(item["s"]), float(item["e"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"bad transcript word {item!r}: {exc}") from exc
    return words


def dump_transcript(words: list[TimedWord]) -> dict:
    return {"words": [{"w": w.text, "s": w.start_s, "e": w.end_s} for w in words]}


def replay_oplog(lines) -> AttributedDoc:
    """Rebuild the document by replaying an op-log (ndjson lines)."""
    doc = AttributedDoc()
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        op = EditOp.from_json(rec["revision"] - 1, rec["components"])
        doc = collab.apply(doc, op)
    return doc
