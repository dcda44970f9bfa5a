"""Simulated-editor harness: error seeding, transcript selection and
desk-scale replication of the collaborative correction workflow.

The experiment runner drives a real Session on a virtual clock. Agents
compare the injected text against the reference, notice errors with a
per-error difficulty gate (so three parallel agents of equal skill find
the same errors a single owner would), and submit fixes through the
normal edit path, including transformation against concurrent ops.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass
from importlib import resources

from . import collab, metrics
from .collab import Delete, EditOp, Insert, Retain
from .formatter import TimedWord, format_transcript_indexed
from .normalizer import normalize
from .scenario import PROOFREADER, ScenarioKind, assign_roles
from .session import Session, SessionConfig


class TargetUnreachable(ValueError):
    pass


# ---------------------------------------------------------------- fixtures

@dataclass(frozen=True)
class ModelRow:
    service: str
    overall: float
    chunks: tuple[float, float, float, float]


@dataclass(frozen=True)
class ModelTable:
    rows: tuple[ModelRow, ...]


def load_model_table() -> ModelTable:
    raw = json.loads(
        resources.files("cart").joinpath("fixtures", "model_table.json").read_text("utf-8"))
    rows = tuple(ModelRow(r["service"], r["overall"], tuple(r["chunks"]))
                 for r in raw["rows"])
    return ModelTable(rows)


@dataclass(frozen=True)
class TranscriptSelection:
    overall: str
    chunks: tuple[str, str, str, str]


def select_transcripts(table: ModelTable, overall_target: float,
                       chunk_targets: tuple[float, float, float, float]) -> TranscriptSelection:
    """Pick the service closest to the overall target and, per chunk, the
    closest service among those not already picked for an earlier chunk.

    All values are WER percentages. Ties resolve to the earlier table row.
    """
    overall = min(table.rows, key=lambda r: abs(r.overall - overall_target)).service
    used: set[str] = set()
    chunks: list[str] = []
    for idx, target in enumerate(chunk_targets):
        candidates = [r for r in table.rows if r.service not in used]
        best = min(candidates, key=lambda r: abs(r.chunks[idx] - target))
        used.add(best.service)
        chunks.append(best.service)
    return TranscriptSelection(overall, tuple(chunks))


# ------------------------------------------------------------ text synthesis

_VOCAB = (
    "das der die ein eine und oder aber wenn dann weil denn mit ohne für "
    "gegen durch über unter neben zwischen nach vor seit bei von aus zu im "
    "am wir ihr sie man es sich nicht auch noch schon sehr ganz mehr weniger "
    "viele wenige heute morgen gestern immer oft selten nie hier dort überall "
    "Wasser Licht Energie Zelle Körper Gehirn Pflanze Tier Mensch Welt Erde "
    "Sonne Mond Stern Himmel Meer Wald Berg Stadt Land Haus Schule Arbeit "
    "Zeit Jahr Tag Nacht Stunde Minute Frage Antwort Beispiel Grund Ziel "
    "Weg Anfang Ende Teil Ganze Menge Zahl Größe Farbe Form Klang Stimme "
    "Sprache Wort Satz Text Bild Ton Film Musik Forschung Wissenschaft "
    "Experiment Ergebnis Studie Theorie Methode System Prozess Struktur "
    "Funktion Wirkung Ursache Folge Veränderung Entwicklung Bewegung Kraft "
    "macht sieht hört findet zeigt erklärt beschreibt untersucht entsteht "
    "wächst lebt stirbt beginnt endet bleibt wird kann muss soll will darf "
    "gehört entdeckt erkennt versteht vergleicht misst zählt rechnet denkt "
    "klein groß alt neu jung schnell langsam stark schwach hell dunkel warm "
    "kalt leicht schwer einfach schwierig wichtig möglich nötig bekannt"
).split()

_SENTENCE_ENDS = [".", ".", ".", ".", "?", "!"]


def synthesize_reference(n_words: int, seed: int = 0) -> str:
    """Deterministic German-like reference text with punctuation and casing.

    Uses no digits, abbreviations or contractions, so the normalized word
    count equals the raw word count.
    """
    rng = random.Random(f"ref:{seed}")
    words: list[str] = []
    while len(words) < n_words:
        length = min(rng.randint(6, 14), n_words - len(words))
        sentence = [rng.choice(_VOCAB) for _ in range(length)]
        sentence[0] = sentence[0][0].upper() + sentence[0][1:]
        if length >= 8 and rng.random() < 0.6:
            k = rng.randint(3, length - 2)
            sentence[k - 1] += ","
        sentence[-1] += rng.choice(_SENTENCE_ENDS)
        words.extend(sentence)
    return " ".join(words)


def synth_timed_words(text: str, wpm: float = 135.0) -> list[TimedWord]:
    """Evenly timed words at the given speaking rate."""
    dt = 60.0 / wpm
    return [TimedWord(w, k * dt, (k + 1) * dt)
            for k, w in enumerate(text.split())]


# ------------------------------------------------------------- error seeding

def _mangle(word: str, rng: random.Random) -> str:
    """Produce a plausible misrecognition of word, distinct after normalization."""
    core = word.strip(".,!?;:")
    for _ in range(8):
        choice = rng.randrange(4)
        if choice == 0 and len(core) > 3:
            i = rng.randrange(len(core) - 1)
            cand = core[:i] + core[i + 1] + core[i] + core[i + 2:]
        elif choice == 1 and len(core) > 3:
            i = rng.randrange(len(core))
            cand = core[:i] + core[i + 1:]
        elif choice == 2:
            cand = core + rng.choice(["en", "er", "e", "t", "s"])
        else:
            cand = rng.choice(_VOCAB)
        if cand and normalize(cand) and normalize(cand) != normalize(core):
            return word.replace(core, cand) if core and core in word else cand
    return core + "ung"


def _corrupt(tokens: list[str], k: int, seed: int, mix=(0.6, 0.2, 0.2)) -> str:
    rng = random.Random(f"seed_errors:{seed}:{k}")
    positions = sorted(rng.sample(range(len(tokens)), min(k, len(tokens))))
    plan = {}
    for pos in positions:
        r = rng.random()
        if r < mix[0]:
            plan[pos] = ("sub", _mangle(tokens[pos], rng))
        elif r < mix[0] + mix[1]:
            plan[pos] = ("del", None)
        else:
            plan[pos] = ("ins", rng.choice(_VOCAB))
    out: list[str] = []
    for i, tok in enumerate(tokens):
        action = plan.get(i)
        if action is None:
            out.append(tok)
        elif action[0] == "sub":
            out.append(action[1])
        elif action[0] == "ins":
            out.append(tok)
            out.append(action[1])
        # del: skip the token
    return " ".join(out)


def seed_errors(ref: str, target_wer: float, seed: int) -> str:
    """Corrupt ref to the target WER (+-0.005), 60/20/20 sub/del/ins mix."""
    if not 0.0 <= target_wer <= 0.5:
        raise ValueError(f"target WER out of range: {target_wer}")
    if target_wer == 0.0:
        return ref
    tokens = ref.split()
    n_norm = len(normalize(ref).split())
    if n_norm == 0:
        raise TargetUnreachable("reference has no words")
    k = max(1, round(target_wer * n_norm))
    best = None
    for _ in range(20):
        out = _corrupt(tokens, k, seed)
        measured = metrics.wer(ref, out).wer
        error = abs(measured - target_wer)
        if best is None or error < best[0]:
            best = (error, out)
        if error <= 0.005:
            return out
        if measured == 0:
            k += 1
            continue
        new_k = max(1, round(k * target_wer / measured))
        k = new_k if new_k != k else k + (1 if measured < target_wer else -1)
        if k < 1:
            raise TargetUnreachable(f"cannot reach WER {target_wer}")
    raise TargetUnreachable(
        f"could not reach WER {target_wer} within +-0.005 (best {best[0]:.4f} off)")


# ----------------------------------------------------------------- agents

@dataclass(frozen=True)
class AgentProfile:
    detect_prob: float = 0.40
    reaction_mean_s: float = 1.5
    reaction_sd_s: float = 0.5
    typing_wpm: float = 40.0
    fix_accuracy: float = 0.95

    def __post_init__(self):
        if not 0.0 <= self.detect_prob <= 1.0:
            raise ValueError("detect_prob must be in [0, 1]")
        if not 0.0 <= self.fix_accuracy <= 1.0:
            raise ValueError("fix_accuracy must be in [0, 1]")
        if self.typing_wpm <= 0:
            raise ValueError("typing_wpm must be positive")

    @staticmethod
    def from_dict(data: dict) -> "AgentProfile":
        return AgentProfile(**data)


DEFAULT_PROFILE = AgentProfile()

PERFECT_PROFILE = AgentProfile(detect_prob=1.0, fix_accuracy=1.0,
                               reaction_mean_s=0.5, reaction_sd_s=0.1,
                               typing_wpm=10_000.0)

ZERO_SKILL_PROFILE = AgentProfile(detect_prob=0.0, fix_accuracy=0.0)


# -------------------------------------------------------------- experiment

@dataclass
class _ErrorRegion:
    """A maximal run of misaligned words: hyp span [hyp_lo, hyp_hi) should
    read as ref words [ref_lo, ref_hi)."""
    ref_lo: int
    ref_hi: int
    hyp_lo: int
    hyp_hi: int
    target: str                       # replacement text ("" for spurious words)
    kind: str                         # replace | extra | missing
    span: tuple[int, int] | None = None
    revision: int = 0                 # revision at which span is valid
    orig_span: tuple[int, int] | None = None   # span before any fix
    orig_revision: int = 0
    fixed_at_ms: int | None = None

    @property
    def edit_count(self) -> int:
        return max(self.ref_hi - self.ref_lo, self.hyp_hi - self.hyp_lo)


@dataclass
class ExperimentResult:
    delta: metrics.MetricsDelta
    scenario: ScenarioKind
    seed: int
    transform_pairs: int
    human_conflicts: int
    detected_regions: int
    fix_ops: int

    def to_dict(self) -> dict:
        out = self.delta.to_dict()
        out["scenario"] = self.scenario.value
        out["seed"] = self.seed
        out["transform_pairs"] = self.transform_pairs
        out["human_conflicts"] = self.human_conflicts
        return out


def _token_key(tok: str) -> str:
    return tok.strip(".,!?;:\"'«»„“”()[]").casefold()


def _find_regions(hyp_tokens: list[str], ref_tokens: list[str]) -> list[_ErrorRegion]:
    alignment = metrics.word_align([_token_key(t) for t in ref_tokens],
                                   [_token_key(t) for t in hyp_tokens])
    regions: list[_ErrorRegion] = []
    i = j = 0
    run_start: tuple[int, int] | None = None
    for pair in alignment.pairs + [metrics.AlignedPair("", "", metrics.MATCH)]:
        if pair.tag == metrics.MATCH:
            if run_start is not None:
                ref_lo, hyp_lo = run_start
                target = " ".join(ref_tokens[ref_lo:i])
                if hyp_lo == j:
                    kind = "missing"     # hyp lacks these ref words
                elif ref_lo == i:
                    kind = "extra"       # hyp has spurious words
                else:
                    kind = "replace"
                regions.append(_ErrorRegion(ref_lo, i, hyp_lo, j, target, kind))
                run_start = None
        else:
            if run_start is None:
                run_start = (i, j)
        if pair.ref is not None:
            i += 1
        if pair.hyp is not None:
            j += 1
    return regions


class _VirtualSession:
    """Session plus per-revision snapshots and span transforms."""

    def __init__(self, config: SessionConfig):
        self.session = Session(config)
        self.contents: list[str] = [""]  # contents[rev] = doc content

    def record_snapshot(self) -> None:
        self.contents.append(self.session.doc.content)

    def op_for_revision(self, revision: int) -> EditOp:
        return self.session.oplog[revision - 1].op

    def revision_at(self, time_ms: int) -> int:
        # latest revision whose op was applied at or before time_ms
        lo, hi = 0, len(self.session.oplog)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.session.oplog[mid].server_time_ms <= time_ms:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def transform_span(self, span: tuple[int, int], rev_from: int,
                       rev_to: int) -> tuple[int, int]:
        start, end = span
        zero_width = start == end
        for rev in range(rev_from + 1, rev_to + 1):
            op = self.op_for_revision(rev)
            start = collab.transform_position(start, op, bias_right=not zero_width)
            end = collab.transform_position(end, op, bias_right=False)
            if end < start:
                end = start
        return start, end


def run_experiment(scenario: ScenarioKind, agents: list[AgentProfile],
                   transcript: list[TimedWord], ref: str, seed: int,
                   speedup: float = 1.0, _trace: dict | None = None) -> ExperimentResult:
    """Replay the correction workflow with simulated editors.

    Deterministic for identical inputs; `speedup` rescales every virtual
    timestamp identically, so results do not depend on it.
    """
    scenario = ScenarioKind(scenario)
    if len(agents) != 3:
        raise ValueError("exactly 3 agent profiles required")
    scale = 1000.0 / speedup                  # virtual ms per real second
    lag_ms = int(0.3 * scale)                 # replica staleness window

    users = [1, 2, 3]
    assignments = assign_roles(scenario, users)
    vs = _VirtualSession(SessionConfig(scenario, transcript, reference_text=ref,
                                       speedup=speedup))
    session = vs.session
    for u in users:
        session.join(u)
    session.start_playback(0)

    hyp_tokens = [w.text for w in transcript]
    ref_tokens = ref.split()
    regions = _find_regions(hyp_tokens, ref_tokens)

    _, word_paragraph = format_transcript_indexed(transcript, "chunked")

    n_slots = sum(isinstance(a.ownership, int) for a in assignments)

    def owners_of(region: _ErrorRegion) -> list[int]:
        anchor = min(region.hyp_lo, len(transcript) - 1)
        par = word_paragraph[anchor]
        out = []
        for a in assignments:
            if a.ownership == "all" or a.role == PROOFREADER:
                out.append(a.user)
            elif par % n_slots == a.ownership:
                out.append(a.user)
        return out

    # Event queue: (time_ms, seq, kind, payload)
    events: list = []
    seq = 0

    def push(t: int, kind: str, payload) -> None:
        nonlocal seq
        heapq.heappush(events, (max(0, t), seq, kind, payload))
        seq += 1

    for idx, w in enumerate(transcript):
        # +1 so integer truncation cannot leave the word just short of due
        push(int(w.end_s * scale) + 1, "inject", idx)

    word_span: dict[int, tuple[int, int, int]] = {}  # word idx -> (start, end, rev)
    pending_regions: dict[int, list[_ErrorRegion]] = {}
    for region in regions:
        anchor = region.hyp_lo if region.kind == "missing" else region.hyp_hi - 1
        anchor = min(max(anchor, 0), len(transcript) - 1)
        pending_regions.setdefault(anchor, []).append(region)

    def schedule_fixes(region: _ErrorRegion, t_injected: int) -> None:
        rng = random.Random(f"difficulty:{seed}:{region.ref_lo}")
        u_detect = rng.random()
        u_fix = rng.random()
        for user in owners_of(region):
            profile = agents[user - 1]
            if u_detect >= profile.detect_prob or u_fix >= profile.fix_accuracy:
                continue
            a = next(x for x in assignments if x.user == user)
            arng = random.Random(f"agent:{seed}:{user}:{region.ref_lo}")
            reaction_s = max(0.2, arng.gauss(profile.reaction_mean_s,
                                             profile.reaction_sd_s))
            words_typed = max(1, region.ref_hi - region.ref_lo)
            typing_s = 60.0 * words_typed / profile.typing_wpm
            t_fix = t_injected + int((a.audio_delay_s + reaction_s + typing_s) * scale)
            push(t_fix, "fix", (region, user))

    def word_span_at(idx: int, revision: int) -> tuple[int, int]:
        s, e, rev = word_span[idx]
        return vs.transform_span((s, e), rev, revision)

    def locate_region(region: _ErrorRegion) -> None:
        # Span in doc coordinates once all of the region's words exist.
        rev = session.doc.revision
        if region.kind == "missing":
            if region.hyp_lo < len(transcript):
                s = word_span_at(region.hyp_lo, rev)[0]
            else:  # missing words at the very end
                s = word_span_at(len(transcript) - 1, rev)[1]
            region.span = (s, s)
        else:
            s = word_span_at(region.hyp_lo, rev)[0]
            e = word_span_at(region.hyp_hi - 1, rev)[1]
            region.span = (s, e)
        region.revision = rev
        region.orig_span = region.span
        region.orig_revision = rev

    stats_fix_ops = 0
    detected = set()

    def handle_inject(t: int, idx: int) -> None:
        for payload in session.injection_tick(t):
            vs.record_snapshot()
            comps = payload["components"]
            pos = comps[0].get("retain", 0)
            insert = next(c for c in comps if "insert" in c)
            text = insert["insert"]
            word = payload["word"]["w"]
            start = pos + (len(text) - len(word))
            word_span[payload["index"]] = (start, start + len(word),
                                           payload["revision"])
            for region in pending_regions.pop(payload["index"], []):
                locate_region(region)
                schedule_fixes(region, t)

    def build_fix_op(region: _ErrorRegion, duplicate: bool, user: int) -> EditOp | None:
        if duplicate:
            # A second corrector selected the raw mistake before the first fix
            # reached their replica.  Their delete goes through and cancels
            # against the first fix's delete; the retype is abandoned once the
            # replica catches up mid-edit.
            (s, e), base_rev = region.orig_span, region.orig_revision
            if s >= e:
                return None
            content = vs.contents[base_rev]
            return EditOp.build(base_rev, [
                Retain(s), Delete(e - s), Retain(len(content) - e)])
        (s, e), base_rev = region.span, region.revision
        content = vs.contents[base_rev]
        comps: list = []
        if region.kind == "extra":
            if s >= e:
                return None
            if e < len(content) and content[e] == " ":
                e += 1
            elif s > 0 and content[s - 1] == " ":
                s -= 1
            comps = [Retain(s), Delete(e - s)]
        elif region.kind == "missing":
            at_word_start = s < len(content) and (s == 0 or content[s - 1] == " ")
            text = region.target + " " if at_word_start else " " + region.target
            comps = [Retain(s), Insert(text, user)]
        else:
            if s >= e:
                return None
            comps = [Retain(s), Delete(e - s), Insert(region.target, user)]
        comps.append(Retain(len(content) - sum(
            c.n for c in comps if isinstance(c, (Retain, Delete)))))
        return EditOp.build(base_rev, comps)

    def reanchor(region: _ErrorRegion, record) -> None:
        # Position of the fix's insert (or deletion point) in the new doc.
        pos = 0
        new_span = None
        for c in record.op.components:
            if isinstance(c, Retain):
                pos += c.n
            elif isinstance(c, Insert):
                text = c.text
                lead = len(text) - len(text.lstrip())
                trail = len(text) - len(text.rstrip())
                new_span = (pos + lead, pos + len(text) - trail)
                break
            else:
                new_span = (pos, pos)
        region.span = new_span if new_span is not None else (pos, pos)
        region.revision = record.revision

    def verify_and_repair(region: _ErrorRegion, user: int, t: int) -> None:
        # Duplicate concurrent fixes can stack copies of the target or race a
        # word injection.  The words flanking a region always align, so the
        # stretch between them must read exactly as the target; rewrite it if
        # anything else ended up there.
        current = session.doc.revision
        content = session.doc.content
        s0 = (word_span_at(region.hyp_lo - 1, current)[1]
              if region.hyp_lo > 0 else 0)
        right_idx = region.hyp_lo if region.kind == "missing" else region.hyp_hi
        if right_idx < len(transcript) and right_idx in word_span:
            e0 = word_span_at(right_idx, current)[0]
        else:
            e0 = len(content)
            right_idx = None
        if region.target:
            lead = " " if s0 > 0 else ""
            trail = " " if right_idx is not None else ""
            expected = lead + region.target + trail
        else:
            lead = ""
            expected = " " if s0 > 0 and right_idx is not None else ""
        if content[s0:e0] == expected:
            region.span = (s0 + len(lead), s0 + len(lead) + len(region.target))
            region.revision = current
            return
        op = EditOp.build(current, [
            Retain(s0), Delete(e0 - s0), Insert(expected, user),
            Retain(len(content) - e0)])
        record = session.handle_edit(user, op, t)
        vs.record_snapshot()
        region.span = (s0 + len(lead), s0 + len(lead) + len(region.target))
        region.revision = record.revision

    def handle_fix(t: int, region: _ErrorRegion, user: int) -> None:
        nonlocal stats_fix_ops
        if region.span is None:
            return
        detected.add((region.ref_lo, region.hyp_lo))
        duplicate = region.fixed_at_ms is not None
        if duplicate and (region.kind != "replace"
                          or t - region.fixed_at_ms >= lag_ms):
            return  # the agent can see it is already handled
        op = build_fix_op(region, duplicate, user)
        if op is None:
            return
        record = session.handle_edit(user, op, t)
        vs.record_snapshot()
        stats_fix_ops += 1
        if duplicate:
            verify_and_repair(region, user, t)
            return
        region.fixed_at_ms = t
        reanchor(region, record)
        verify_and_repair(region, user, t)

    while events:
        t, _, kind, payload = heapq.heappop(events)
        if kind == "inject":
            handle_inject(t, payload)
        else:
            region, user = payload
            handle_fix(t, region, user)

    end_ms = int(transcript[-1].end_s * scale) + 1 if transcript else 0
    if _trace is not None:
        _trace.update(session=session, regions=regions, word_span=word_span,
                      vs=vs, detected=detected)
    delta = session.finalize(end_ms)
    return ExperimentResult(
        delta=delta,
        scenario=scenario,
        seed=seed,
        transform_pairs=session.stats.transform_pairs,
        human_conflicts=session.stats.human_conflicts,
        detected_regions=len(detected),
        fix_ops=stats_fix_ops,
    )
