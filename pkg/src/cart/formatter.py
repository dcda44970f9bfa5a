"""Transcript paragraphing and caption-block segmentation.

Paragraphs hold 800-1000 characters (100-200 in chunked mode), break
early on sentence-ending characters and are forced apart by silences of
more than five seconds. Caption blocks hold 60-80 characters, end on
sentence-ending characters, and long blocks split into two lines with
the break between characters 30 and 60.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

SENTENCE_ENDERS = ".!?;"
LINE_BREAK_PUNCT = ".,!?;:"

# A word "ends a sentence" if an ender is its last character, optionally
# followed by closing quotes or brackets.
_ENDER_RE = re.compile(r"[.!?;][\"'»«„“”)\]]*$")

PARAGRAPH_WINDOWS = {"standard": (800, 1000), "chunked": (100, 200)}
CAPTION_WINDOW = (60, 80)
LINE_BREAK_RANGE = (30, 60)
SILENCE_BREAK_S = 5.0


@dataclass(frozen=True)
class TimedWord:
    text: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if " " in self.text or not self.text:
            raise ValueError(f"word must be a single non-empty token: {self.text!r}")
        if self.start_s < 0 or self.end_s < self.start_s:
            raise ValueError(f"bad word timing: {self.start_s}..{self.end_s}")


@dataclass
class Paragraph:
    text: str
    forced: bool = False      # ended by silence or oversized word, may be short
    oversized: bool = False   # single word longer than the window

    @property
    def char_len(self) -> int:
        return len(self.text)


@dataclass
class CaptionBlock:
    lines: tuple[str, ...]
    forced: bool = False      # ended by a sentence ender before the window
    oversized: bool = False

    @property
    def total_len(self) -> int:
        return sum(len(line) for line in self.lines)


def _ends_sentence(word: str) -> bool:
    return bool(_ENDER_RE.search(word))


def _segment_words(texts: list[str], gaps_force: list[bool],
                   min_len: int, max_len: int):
    """Greedy segmentation shared by paragraphs and caption blocks.

    Yields (segment_text, forced, oversized, word_indices). A silence
    before word k (gaps_force[k]) flushes the open segment as forced.
    """
    cur: list[str] = []
    cur_len = 0
    cur_idx: list[int] = []

    def flush(forced, oversized=False):
        nonlocal cur, cur_len, cur_idx
        seg = (" ".join(cur), forced, oversized, cur_idx)
        cur, cur_len, cur_idx = [], 0, []
        return seg

    out = []
    for k, word in enumerate(texts):
        if cur and gaps_force[k]:
            out.append(flush(forced=True))
        if cur and cur_len + 1 + len(word) > max_len:
            out.append(flush(forced=False))
        if not cur and len(word) > max_len:
            out.append((word, True, True, [k]))
            continue
        cur.append(word)
        cur_idx.append(k)
        cur_len = cur_len + 1 + len(word) if cur_len else len(word)
        if cur_len >= min_len and _ends_sentence(word):
            out.append(flush(forced=False))
    if cur:
        out.append(flush(forced=True))  # final segment, any length
    return out


def format_transcript(words: list[TimedWord], mode: str = "standard") -> list[Paragraph]:
    paragraphs, _ = format_transcript_indexed(words, mode)
    return paragraphs


def format_transcript_indexed(words: list[TimedWord], mode: str = "standard"):
    """Like format_transcript but also returns each word's paragraph index."""
    if mode not in PARAGRAPH_WINDOWS:
        raise ValueError(f"unknown mode: {mode}")
    min_len, max_len = PARAGRAPH_WINDOWS[mode]
    texts = [w.text for w in words]
    gaps = [False] * len(words)
    for k in range(1, len(words)):
        gaps[k] = words[k].start_s - words[k - 1].end_s > SILENCE_BREAK_S
    word_paragraph = [0] * len(words)
    paragraphs = []
    for text, forced, oversized, idx in _segment_words(texts, gaps, min_len, max_len):
        for k in idx:
            word_paragraph[k] = len(paragraphs)
        paragraphs.append(Paragraph(text, forced=forced, oversized=oversized))
    return paragraphs, word_paragraph


def format_captions(text: str) -> list[CaptionBlock]:
    """Segment text into caption blocks of 60-80 characters.

    A sentence ender closes the block wherever it appears; such blocks
    (and the last one) may fall short of the window and are flagged.
    """
    min_len, max_len = CAPTION_WINDOW
    words = text.split()
    blocks: list[CaptionBlock] = []
    cur: list[str] = []
    cur_len = 0

    def flush(forced, oversized=False):
        nonlocal cur, cur_len
        seg = " ".join(cur)
        blocks.append(CaptionBlock(split_caption_lines(seg),
                                   forced=forced, oversized=oversized))
        cur, cur_len = [], 0

    for word in words:
        if cur and cur_len + 1 + len(word) > max_len:
            flush(forced=False)
        if not cur and len(word) > max_len:
            cur, cur_len = [word], len(word)
            flush(forced=True, oversized=True)
            continue
        cur.append(word)
        cur_len = cur_len + 1 + len(word) if cur_len else len(word)
        if _ends_sentence(word):
            flush(forced=cur_len < min_len)
    if cur:
        flush(forced=True)
    return blocks


def split_caption_lines(block_text: str) -> tuple[str, ...]:
    """Split a caption block into at most two lines.

    The first line's length must land in [30, 60]. Candidates, best
    first: after a punctuation character, at any non-word character,
    hard split at 60. The rightmost candidate wins.
    """
    lo, hi = LINE_BREAK_RANGE
    if len(block_text) <= hi:
        return (block_text,)
    # i is the index of the candidate character; line1 = text[:i+1] for
    # punctuation, text[:i] for whitespace.
    best_ws = None
    for i in range(min(hi, len(block_text) - 2), lo - 2, -1):
        ch = block_text[i]
        if ch in LINE_BREAK_PUNCT and lo <= i + 1 <= hi:
            line1 = block_text[:i + 1]
            rest = block_text[i + 1:]
            if rest.startswith(" "):
                rest = rest[1:]
            if rest:
                return (line1, rest)
        if best_ws is None and not (ch.isalnum() or ch == "_"):
            if ch.isspace() and lo <= i <= hi and block_text[:i] and block_text[i + 1:]:
                best_ws = (block_text[:i], block_text[i + 1:])
            elif not ch.isspace() and lo <= i + 1 <= hi and block_text[i + 1:]:
                best_ws = (block_text[:i + 1], block_text[i + 1:])
    if best_ws:
        return best_ws
    return (block_text[:hi], block_text[hi:])
