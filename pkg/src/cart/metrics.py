"""Word-level alignment and accuracy metrics.

WER is computed as (S+D+I)/N on a minimal word-level Levenshtein
alignment of the normalized texts. Punctuation and capitalisation errors
are counted on a separate case-insensitive alignment whose tokens keep
their original surface form, so each word can be compared against its
aligned partner's casing and trailing punctuation.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

from .normalizer import normalize

MATCH = "match"
SUBSTITUTION = "substitution"
DELETION = "deletion"
INSERTION = "insertion"


class EmptyReference(ValueError):
    """Reference has no words but the hypothesis does."""


@dataclass(frozen=True)
class AlignedPair:
    ref: str | None
    hyp: str | None
    tag: str


@dataclass
class Alignment:
    pairs: list[AlignedPair]

    @property
    def substitutions(self) -> int:
        return sum(p.tag == SUBSTITUTION for p in self.pairs)

    @property
    def deletions(self) -> int:
        return sum(p.tag == DELETION for p in self.pairs)

    @property
    def insertions(self) -> int:
        return sum(p.tag == INSERTION for p in self.pairs)

    @property
    def cost(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def wer(self) -> float:
        if self.ref_len == 0:
            return 0.0
        return (self.substitutions + self.deletions + self.insertions) / self.ref_len

    def to_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_len": self.ref_len,
            "wer": round(self.wer, 6),
        }


@dataclass
class MetricsDelta:
    baseline: WerReport
    edited: WerReport
    relative_wer_reduction: float
    punct_errors_baseline: int
    punct_errors_edited: int
    punct_error_delta: float
    cap_errors_baseline: int
    cap_errors_edited: int
    cap_error_delta: float
    per_user_edit_counts: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema": "cart-metrics-delta/1",
            "baseline": self.baseline.to_dict(),
            "edited": self.edited.to_dict(),
            "relative_wer_reduction": round(self.relative_wer_reduction, 6),
            "punct_errors_baseline": self.punct_errors_baseline,
            "punct_errors_edited": self.punct_errors_edited,
            "punct_error_delta": round(self.punct_error_delta, 6),
            "cap_errors_baseline": self.cap_errors_baseline,
            "cap_errors_edited": self.cap_errors_edited,
            "cap_error_delta": round(self.cap_error_delta, 6),
            "per_user_edit_counts": {str(k): v for k, v in sorted(self.per_user_edit_counts.items())},
        }


def word_align(ref_words: list[str], hyp_words: list[str]) -> Alignment:
    """Minimal-cost word alignment with a deterministic backtrace.

    Equal-cost ties prefer match > substitution > deletion > insertion.
    Uses a band-doubling Levenshtein so near-identical long texts align
    in O(n * cost) instead of O(n * m).
    """
    n, m = len(ref_words), len(hyp_words)
    if n == 0:
        return Alignment([AlignedPair(None, h, INSERTION) for h in hyp_words])
    if m == 0:
        return Alignment([AlignedPair(r, None, DELETION) for r in ref_words])

    # Map tokens to ints for fast equality in the inner loop.
    ids: dict[str, int] = {}
    ref_ids = [ids.setdefault(w, len(ids)) for w in ref_words]
    hyp_ids = [ids.setdefault(w, len(ids)) for w in hyp_words]

    band = max(16, abs(n - m) + 1)
    while True:
        dist = _banded_dp(ref_ids, hyp_ids, band)
        if dist is not None and dist[0] < band:
            cost, rows = dist
            break
        band *= 2
        if band > n + m:
            band = n + m + 1

    return _backtrace(ref_words, hyp_words, ref_ids, hyp_ids, rows, band)


INF = 1 << 30


def _banded_dp(ref_ids, hyp_ids, band):
    """DP restricted to |i - j| <= band. Returns (cost, rows) or None.

    rows[i][k] is the cost at (i, j) with k = j - i + band.
    """
    n, m = len(ref_ids), len(hyp_ids)
    if abs(n - m) > band:
        return None
    width = 2 * band + 1
    rows = [None] * (n + 1)
    row0 = [INF] * width
    for j in range(0, min(m, band) + 1):
        row0[j + band] = j
    rows[0] = row0
    prev = row0
    for i in range(1, n + 1):
        cur = [INF] * width
        ri = ref_ids[i - 1]
        lo = max(0, i - band)
        hi = min(m, i + band)
        for j in range(lo, hi + 1):
            k = j - i + band
            if j == 0:
                cur[k] = i
                continue
            best = prev[k] + (0 if ri == hyp_ids[j - 1] else 1)  # diag: k same in prev row
            if k + 1 < width:
                d = prev[k + 1] + 1  # deletion: (i-1, j)
                if d < best:
                    best = d
            if k - 1 >= 0:
                d = cur[k - 1] + 1  # insertion: (i, j-1)
                if d < best:
                    best = d
            cur[k] = best
        rows[i] = cur
        prev = cur
    cost = rows[n][m - n + band] if 0 <= m - n + band < width else INF
    if cost >= INF:
        return None
    return cost, rows


def _backtrace(ref_words, hyp_words, ref_ids, hyp_ids, rows, band):
    n, m = len(ref_ids), len(hyp_ids)
    width = 2 * band + 1
    pairs: list[AlignedPair] = []
    i, j = n, m

    def cell(i, j):
        k = j - i + band
        if 0 <= k < width and rows[i] is not None:
            return rows[i][k]
        return INF

    while i > 0 or j > 0:
        cur = cell(i, j)
        if i > 0 and j > 0 and ref_ids[i - 1] == hyp_ids[j - 1] and cell(i - 1, j - 1) == cur:
            pairs.append(AlignedPair(ref_words[i - 1], hyp_words[j - 1], MATCH))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and ref_ids[i - 1] != hyp_ids[j - 1] and cell(i - 1, j - 1) + 1 == cur:
            pairs.append(AlignedPair(ref_words[i - 1], hyp_words[j - 1], SUBSTITUTION))
            i, j = i - 1, j - 1
        elif i > 0 and cell(i - 1, j) + 1 == cur:
            pairs.append(AlignedPair(ref_words[i - 1], None, DELETION))
            i -= 1
        else:
            pairs.append(AlignedPair(None, hyp_words[j - 1], INSERTION))
            j -= 1
    pairs.reverse()
    return Alignment(pairs)


def wer(ref: str, hyp: str) -> WerReport:
    """WER on normalized token streams."""
    ref_tokens = normalize(ref).split()
    hyp_tokens = normalize(hyp).split()
    if not ref_tokens and hyp_tokens:
        raise EmptyReference("reference normalizes to zero words")
    a = word_align(ref_tokens, hyp_tokens)
    return WerReport(a.substitutions, a.deletions, a.insertions, len(ref_tokens))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _project(text: str) -> tuple[list[str], list[str]]:
    """Split into core words plus the punctuation trailing each word.

    Pure-punctuation tokens attach to the preceding word's projection.
    """
    cores: list[str] = []
    puncts: list[str] = []
    for tok in text.split():
        start = 0
        while start < len(tok) and _is_punct(tok[start]):
            start += 1
        end = len(tok)
        while end > start and _is_punct(tok[end - 1]):
            end -= 1
        core = tok[start:end]
        trailing = tok[end:]
        if not core:
            if puncts:
                puncts[-1] += tok
            continue
        cores.append(core)
        puncts.append(trailing)
    return cores, puncts


def _surface_alignment(ref: str, hyp: str):
    ref_cores, ref_puncts = _project(ref)
    hyp_cores, hyp_puncts = _project(hyp)
    a = word_align([w.casefold() for w in ref_cores],
                   [w.casefold() for w in hyp_cores])
    i = j = 0
    rows = []
    for p in a.pairs:
        r_core = r_punct = h_core = h_punct = None
        if p.ref is not None:
            r_core, r_punct = ref_cores[i], ref_puncts[i]
            i += 1
        if p.hyp is not None:
            h_core, h_punct = hyp_cores[j], hyp_puncts[j]
            j += 1
        rows.append((p.tag, r_core, r_punct, h_core, h_punct))
    return rows


def punctuation_errors(ref: str, hyp: str) -> int:
    """Mismatches between per-word trailing punctuation over the alignment."""
    count = 0
    for _tag, _r, r_punct, _h, h_punct in _surface_alignment(ref, hyp):
        if (r_punct or "") != (h_punct or ""):
            count += 1
    return count


def capitalization_errors(ref: str, hyp: str) -> int:
    """Aligned word pairs equal case-insensitively but not case-sensitively."""
    count = 0
    for _tag, r_core, _rp, h_core, _hp in _surface_alignment(ref, hyp):
        if r_core is None or h_core is None:
            continue
        if r_core != h_core and r_core.casefold() == h_core.casefold():
            count += 1
    return count


def _relative_reduction(baseline: float, edited: float) -> float:
    if baseline <= 0:
        return 0.0
    return 1.0 - edited / baseline


def reduction_report(ref: str, baseline_hyp: str, edited_hyp: str,
                     edit_log: dict[int, int] | None = None) -> MetricsDelta:
    baseline = wer(ref, baseline_hyp)
    edited = wer(ref, edited_hyp)
    punct_b = punctuation_errors(ref, baseline_hyp)
    punct_e = punctuation_errors(ref, edited_hyp)
    cap_b = capitalization_errors(ref, baseline_hyp)
    cap_e = capitalization_errors(ref, edited_hyp)
    return MetricsDelta(
        baseline=baseline,
        edited=edited,
        relative_wer_reduction=_relative_reduction(baseline.wer, edited.wer),
        punct_errors_baseline=punct_b,
        punct_errors_edited=punct_e,
        punct_error_delta=_relative_reduction(punct_b, punct_e),
        cap_errors_baseline=cap_b,
        cap_errors_edited=cap_e,
        cap_error_delta=_relative_reduction(cap_b, cap_e),
        per_user_edit_counts=dict(edit_log or {}),
    )
