"""German text standardisation applied before computing word accuracy.

The pipeline runs eight rules in a fixed order:

1. collapse all whitespace to single spaces
2. fold German diacritics (ae/oe/ue/ss)
3. spell out currency and other symbols
4. expand common abbreviations (dictionary file)
5. expand common contractions (dictionary file)
6. spell out Arabic numbers as German cardinals
7. lowercase and strip punctuation
8. remove repeated, leading and trailing spaces

The order matters: symbols and abbreviations must be expanded while case
and punctuation are still intact, and numbers must be verbalised before
digits would survive into the output.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources

_DIACRITICS = {
    "ä": "ae", "ö": "oe", "ü": "ue", "ß": "ss",
    "Ä": "Ae", "Ö": "Oe", "Ü": "Ue", "ẞ": "Ss",
}
_DIACRITIC_RE = re.compile("|".join(_DIACRITICS))

# Symbol spell-outs (rule 3). Values are inserted with surrounding spaces;
# rule 8 cleans up any doubling.
_SYMBOLS = {
    "€": "Euro",
    "$": "Dollar",
    "£": "Pfund",
    "¥": "Yen",
    "%": "Prozent",
    "‰": "Promille",
    "§": "Paragraph",
    "&": "und",
    "°": "Grad",
    "+": "plus",
    "=": "gleich",
}
_SYMBOL_RE = re.compile("|".join(re.escape(s) for s in _SYMBOLS))

_APOSTROPHES_RE = re.compile("[’‘ʼ`´]")

_WS_RE = re.compile(r"\s+")
_MULTISPACE_RE = re.compile(" {2,}")
_DIGITS_RE = re.compile(r"\d+")

MAX_NUMBER = 999_999

_UNITS = ["null", "eins", "zwei", "drei", "vier", "fünf", "sechs",
          "sieben", "acht", "neun"]
_TEENS = ["zehn", "elf", "zwölf", "dreizehn", "vierzehn", "fünfzehn",
          "sechzehn", "siebzehn", "achtzehn", "neunzehn"]
_TENS = [None, None, "zwanzig", "dreißig", "vierzig", "fünfzig",
         "sechzig", "siebzig", "achtzig", "neunzig"]


class DictionaryError(ValueError):
    """Raised for malformed dictionary files."""


@dataclass
class NormalizationResult:
    content: str
    warnings: list[str] = field(default_factory=list)


def fold_diacritics(text: str) -> str:
    """Replace ä/ö/ü/ß (any case) with their two-letter forms."""
    return _DIACRITIC_RE.sub(lambda m: _DIACRITICS[m.group(0)], text)


def number_to_german(n: int) -> str:
    """Spell a cardinal 0..999999 as a single compound German word.

    Raises ValueError outside the supported range; normalize() catches
    that and keeps the digits with a warning instead.
    """
    if n < 0 or n > MAX_NUMBER:
        raise ValueError(f"number out of supported range: {n}")
    if n == 0:
        return _UNITS[0]

    def under_hundred(k: int) -> str:
        if k == 0:
            return ""
        if k < 10:
            return _UNITS[k]
        if k < 20:
            return _TEENS[k - 10]
        tens, unit = divmod(k, 10)
        if unit == 0:
            return _TENS[tens]
        unit_word = "ein" if unit == 1 else _UNITS[unit]
        return unit_word + "und" + _TENS[tens]

    def under_thousand(k: int, multiplier: bool = False) -> str:
        hundreds, rest = divmod(k, 100)
        word = ""
        if hundreds:
            word += ("ein" if hundreds == 1 else _UNITS[hundreds]) + "hundert"
        word += under_hundred(rest)
        if multiplier and word.endswith("eins"):
            word = word[:-1]  # "eins" only stands alone; "eintausend" etc.
        return word

    thousands, rest = divmod(n, 1000)
    word = ""
    if thousands:
        word += under_thousand(thousands, multiplier=True) + "tausend"
    word += under_thousand(rest)
    return word


def _load_dictionary(name: str) -> dict[str, str]:
    path = resources.files("cart").joinpath("data", name)
    entries: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise DictionaryError(f"{name}:{lineno}: expected short<TAB>long")
        short, long = line.split("\t", 1)
        if not short or not long.strip():
            raise DictionaryError(f"{name}:{lineno}: empty field")
        entries[short] = long.strip()
    return entries


def _compile_dictionary(entries: dict[str, str]) -> tuple[re.Pattern, dict[str, str]]:
    # Keys and long forms are diacritic-folded at load time because the
    # dictionaries apply after the folding rule has already run.
    folded = {fold_diacritics(k): fold_diacritics(v) for k, v in entries.items()}
    keys = sorted(folded, key=len, reverse=True)
    pattern = re.compile(
        r"(?<![\w.])(" + "|".join(re.escape(k) for k in keys) + r")(?!\w)"
    )
    return pattern, folded


_ABBREV_RE, _ABBREVIATIONS = _compile_dictionary(_load_dictionary("abbreviations.tsv"))
_CONTRACTION_RE, _CONTRACTIONS = _compile_dictionary(_load_dictionary("contractions.tsv"))


def _strip_punctuation(text: str) -> str:
    return "".join(
        ch for ch in text if not unicodedata.category(ch).startswith("P")
    )


def _verbalize_numbers(text: str, warnings: list[str]) -> str:
    def repl(m: re.Match) -> str:
        n = int(m.group(0))
        try:
            return fold_diacritics(number_to_german(n))
        except ValueError:
            warnings.append(f"number out of range, digits kept: {m.group(0)}")
            return m.group(0)

    return _DIGITS_RE.sub(repl, text)


def normalize_verbose(text: str) -> NormalizationResult:
    """Run the full eight-rule pipeline, collecting warnings."""
    warnings: list[str] = []
    s = _WS_RE.sub(" ", text)                                   # 1
    s = fold_diacritics(s)                                      # 2
    s = _SYMBOL_RE.sub(lambda m: f" {_SYMBOLS[m.group(0)]} ", s)  # 3
    s = _MULTISPACE_RE.sub(" ", s)
    s = _ABBREV_RE.sub(lambda m: _ABBREVIATIONS[m.group(1)], s)   # 4
    s = _APOSTROPHES_RE.sub("'", s)
    s = _CONTRACTION_RE.sub(lambda m: _CONTRACTIONS[m.group(1)], s)  # 5
    s = _verbalize_numbers(s, warnings)                         # 6
    s = _strip_punctuation(s.lower())                           # 7
    s = _MULTISPACE_RE.sub(" ", s).strip()                      # 8
    return NormalizationResult(s, warnings)


def normalize(text: str) -> str:
    """Standardise text for word-accuracy comparison. Total function."""
    return normalize_verbose(text).content
