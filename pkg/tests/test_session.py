import json

import pytest

from cart.collab import Delete, EditOp, Insert, Retain, RevisionMismatch, SYSTEM_AUTHOR
from cart.formatter import TimedWord
from cart.scenario import ScenarioKind
from cart.session import (
    AlreadyFinished,
    AlreadyRunning,
    HISTORY_LIMIT,
    InvalidConfig,
    NotEnoughUsers,
    RevisionTooOld,
    Session,
    SessionConfig,
    UnknownUser,
    dump_transcript,
    load_transcript,
    replay_oplog,
)

WORDS = [
    TimedWord("das", 0.0, 0.3),
    TimedWord("wetter", 0.4, 0.9),
    TimedWord("ist", 1.0, 1.2),
    TimedWord("heute", 1.3, 1.8),
    TimedWord("gut", 1.9, 2.2),
]


def make_session(scenario=ScenarioKind.A, reference=None, speedup=1.0):
    config = SessionConfig(scenario=scenario, transcript=list(WORDS),
                           reference_text=reference, speedup=speedup)
    return Session(config, session_id="t-session")


def started_session(**kw):
    s = make_session(**kw)
    for u in (1, 2, 3):
        s.join(u)
    s.start_playback(now_ms=0)
    return s


# ---------------------------------------------------------------------------
# config and lifecycle


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SessionConfig(ScenarioKind.A, []).validate()
    with pytest.raises(InvalidConfig):
        SessionConfig(ScenarioKind.A, list(WORDS), speedup=0).validate()
    out_of_order = [TimedWord("b", 2.0, 2.5), TimedWord("a", 0.0, 0.5)]
    with pytest.raises(InvalidConfig):
        SessionConfig(ScenarioKind.A, out_of_order).validate()


def test_join_assigns_roles_when_full():
    s = make_session(scenario=ScenarioKind.B)
    assert s.join(1)["assignment"] is None
    s.join(2)
    snap = s.join(3)
    assert snap["assignment"]["audio_delay_s"] == 20.0
    assert snap["users"] == [1, 2, 3]


def test_join_rejects_system_author_and_fourth_user():
    s = make_session()
    with pytest.raises(InvalidConfig):
        s.join(0)
    for u in (1, 2, 3):
        s.join(u)
    with pytest.raises(InvalidConfig):
        s.join(4)
    # rejoining an existing user is fine (reconnect)
    assert s.join(2)["user"] == 2


def test_start_requires_full_group():
    s = make_session()
    s.join(1)
    with pytest.raises(NotEnoughUsers):
        s.start_playback(0)
    s.join(2), s.join(3)
    s.start_playback(0)
    with pytest.raises(AlreadyRunning):
        s.start_playback(10)


def test_finalize_closes_the_session():
    s = started_session()
    s.finalize(now_ms=5000)
    with pytest.raises(AlreadyFinished):
        s.finalize(now_ms=6000)
    with pytest.raises(AlreadyFinished):
        s.handle_edit(1, EditOp.build(s.doc.revision, [Retain(len(s.doc.content))]), 0)
    with pytest.raises(AlreadyFinished):
        s.join(1)


# ---------------------------------------------------------------------------
# injection


def test_injection_follows_word_end_times():
    s = started_session()
    assert s.injection_tick(350) and s.doc.content == "das"
    assert s.injection_tick(950) and s.doc.content == "das wetter"
    assert s.injection_tick(950) == []  # nothing newly due
    s.injection_tick(3000)
    assert s.doc.content == "das wetter ist heute gut"
    assert s.playback_complete()
    assert s.baseline_text() == s.doc.content


def test_injection_respects_speedup():
    s = started_session(speedup=10.0)
    # 250 real ms at 10x = 2.5 virtual seconds: every word is due
    s.injection_tick(250)
    assert s.playback_complete()


def test_injection_payload_shape():
    s = started_session()
    (payload,) = s.injection_tick(350)
    assert payload["word"] == {"w": "das", "s": 0.0, "e": 0.3}
    assert payload["index"] == 0
    assert payload["revision"] == 1


def test_no_injection_before_start_or_after_finish():
    s = make_session()
    for u in (1, 2, 3):
        s.join(u)
    assert s.injection_tick(10_000) == []
    s.start_playback(0)
    s.injection_tick(3000)
    s.finalize(4000)
    assert s.injection_tick(10_000) == []


# ---------------------------------------------------------------------------
# edits


def test_edit_applies_and_is_attributed():
    s = started_session()
    s.injection_tick(3000)
    n = len(s.doc.content)
    op = EditOp.build(s.doc.revision, [Retain(4), Delete(6), Insert("Wetter", 2),
                                       Retain(n - 10)])
    record = s.handle_edit(2, op, now_ms=3100)
    assert s.doc.content == "das Wetter ist heute gut"
    assert record.author == 2
    assert s.doc.authors[4:10] == bytes([2] * 6)
    assert s.stats.edits_by_user == {2: 1}


def test_edit_rejects_unknown_user_and_future_revision():
    s = started_session()
    s.injection_tick(3000)
    op = EditOp.build(s.doc.revision, [Retain(len(s.doc.content))])
    with pytest.raises(UnknownUser):
        s.handle_edit(8, op, 0)
    with pytest.raises(RevisionMismatch):
        s.handle_edit(1, EditOp.build(99, [Retain(1)]), 0)


def test_stale_edit_is_rebased_through_newer_ops():
    s = started_session()
    s.injection_tick(950)          # "das wetter"
    stale_rev = s.doc.revision
    stale = EditOp.build(stale_rev, [Retain(4), Delete(6), Insert("Wetter", 1)])
    s.injection_tick(3000)         # three more injections land first
    s.handle_edit(1, stale, now_ms=3100)
    assert s.doc.content == "das Wetter ist heute gut"
    assert s.stats.transform_pairs == 3
    assert s.stats.human_conflicts == 0


def test_concurrent_human_edits_count_as_conflicts():
    s = started_session()
    s.injection_tick(3000)
    base = s.doc.revision
    n = len(s.doc.content)
    first = EditOp.build(base, [Retain(4), Delete(6), Insert("Wetter", 1), Retain(n - 10)])
    second = EditOp.build(base, [Retain(n - 3), Delete(3), Insert("schoen", 2)])
    s.handle_edit(1, first, 3100)
    s.handle_edit(2, second, 3101)
    assert s.doc.content == "das Wetter ist heute schoen"
    assert s.stats.human_conflicts == 1


def test_revision_too_old_after_history_trim():
    s = started_session()
    s.injection_tick(3000)
    # fabricate a trimmed log: keep only the newest record
    del s.oplog[:-1]
    with pytest.raises(RevisionTooOld):
        s.handle_edit(1, EditOp.build(0, []), 0)
    assert HISTORY_LIMIT >= 1000  # sessions retain a deep history


def test_chunk_rotation_bookkeeping():
    s = make_session(scenario=ScenarioKind.C)
    for u in (1, 2, 3):
        s.join(u)
    assert s.chunk_map is not None
    s.note_paragraph(0)
    s.note_paragraph(1)
    s.note_paragraph(1)  # repeat announcements are ignored
    assert s.chunk_map.owners == [1, 2]


# ---------------------------------------------------------------------------
# finalization, persistence, replay


def test_finalize_reports_reduction():
    ref = "das Klima ist heute gut"
    s = started_session(reference=ref)
    s.injection_tick(3000)
    n = len(s.doc.content)
    s.handle_edit(1, EditOp.build(s.doc.revision,
                                  [Retain(4), Delete(6), Insert("Klima", 1),
                                   Retain(n - 10)]), 3100)
    delta = s.finalize(4000)
    assert delta.baseline.wer == pytest.approx(1 / 5)
    assert delta.edited.wer == 0.0
    assert delta.relative_wer_reduction == pytest.approx(1.0)


def test_finalize_without_reference_returns_none():
    s = started_session()
    s.injection_tick(3000)
    assert s.finalize(4000) is None


def test_persist_writes_expected_files(tmp_path):
    ref = "das Wetter ist heute gut"
    s = started_session(reference=ref)
    s.injection_tick(3000)
    delta = s.finalize(4000)
    out = s.persist(tmp_path / "out", delta)
    names = sorted(p.name for p in out.iterdir())
    assert names == ["baseline.txt", "final.txt", "metrics.json",
                     "oplog.ndjson", "reference.txt"]
    assert (out / "final.txt").read_text(encoding="utf-8") == s.doc.content
    assert (out / "reference.txt").read_text(encoding="utf-8") == ref
    metrics_doc = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert metrics_doc["schema"] == "cart-metrics-delta/1"


def test_replay_reproduces_document(tmp_path):
    s = started_session()
    s.injection_tick(3000)
    n = len(s.doc.content)
    s.handle_edit(2, EditOp.build(s.doc.revision,
                                  [Retain(4), Delete(6), Insert("Wetter", 2),
                                   Retain(n - 10)]), 3100)
    s.finalize(4000)
    out = s.persist(tmp_path / "out")
    lines = (out / "oplog.ndjson").read_text(encoding="utf-8").splitlines()
    doc = replay_oplog(lines)
    assert doc.content == s.doc.content
    assert doc.authors == s.doc.authors
    assert doc.revision == s.doc.revision


def test_replay_is_deterministic(tmp_path):
    s = started_session()
    s.injection_tick(3000)
    s.finalize(4000)
    out = s.persist(tmp_path / "out")
    lines = (out / "oplog.ndjson").read_text(encoding="utf-8").splitlines()
    assert replay_oplog(lines) == replay_oplog(lines)


# ---------------------------------------------------------------------------
# transcript (de)serialization


def test_transcript_round_trip():
    data = dump_transcript(WORDS)
    assert load_transcript(data) == WORDS


def test_load_transcript_rejects_garbage():
    with pytest.raises(InvalidConfig):
        load_transcript({"nope": []})
    with pytest.raises(InvalidConfig):
        load_transcript({"words": [{"w": "ok", "s": 0.0}]})
    with pytest.raises(InvalidConfig):
        load_transcript({"words": [{"w": "two words", "s": 0.0, "e": 1.0}]})
