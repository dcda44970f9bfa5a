import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cart.metrics import (
    DELETION,
    EmptyReference,
    INSERTION,
    MATCH,
    SUBSTITUTION,
    capitalization_errors,
    punctuation_errors,
    reduction_report,
    wer,
    word_align,
)


def oracle_cost(ref, hyp):
    """Plain quadratic Levenshtein, written independently of the banded DP."""
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ref[i - 1] != hyp[j - 1])
            cur[j] = min(sub, prev[j] + 1, cur[j - 1] + 1)
        prev = cur
    return prev[m]


def alignment_cost(alignment):
    return sum(p.tag != MATCH for p in alignment.pairs)


def check_alignment_shape(ref, hyp, alignment):
    """The pair sequence must spell out ref and hyp exactly, in order."""
    got_ref = [p.ref for p in alignment.pairs if p.ref is not None]
    got_hyp = [p.hyp for p in alignment.pairs if p.hyp is not None]
    assert got_ref == list(ref)
    assert got_hyp == list(hyp)
    for p in alignment.pairs:
        if p.tag == MATCH:
            assert p.ref == p.hyp
        elif p.tag == SUBSTITUTION:
            assert p.ref is not None and p.hyp is not None and p.ref != p.hyp
        elif p.tag == DELETION:
            assert p.ref is not None and p.hyp is None
        else:
            assert p.tag == INSERTION and p.ref is None and p.hyp is not None


def test_exhaustive_small():
    # Every pair over a 3-symbol alphabet up to length 4: cost must equal
    # the oracle and the alignment must be structurally valid.
    symbols = "abc"
    seqs = [list(p) for k in range(4)
            for p in itertools.product(symbols, repeat=k)]
    for ref in seqs:
        for hyp in seqs:
            alignment = word_align(ref, hyp)
            assert alignment_cost(alignment) == oracle_cost(ref, hyp), (ref, hyp)
            check_alignment_shape(ref, hyp, alignment)


def test_random_pairs_match_oracle():
    rng = random.Random(99)
    symbols = "abcde"
    for _ in range(1500):
        ref = [rng.choice(symbols) for _ in range(rng.randint(0, 8))]
        hyp = [rng.choice(symbols) for _ in range(rng.randint(0, 8))]
        alignment = word_align(ref, hyp)
        assert alignment_cost(alignment) == oracle_cost(ref, hyp), (ref, hyp)
        check_alignment_shape(ref, hyp, alignment)


def test_long_similar_sequences():
    # Band-doubling must stay exact on long, mostly-matching inputs.
    rng = random.Random(7)
    base = [f"w{i}" for i in range(3000)]
    hyp = list(base)
    for _ in range(60):
        k = rng.randrange(len(hyp))
        action = rng.randrange(3)
        if action == 0:
            hyp[k] = "x"
        elif action == 1:
            del hyp[k]
        else:
            hyp.insert(k, "y")
    alignment = word_align(base, hyp)
    assert alignment_cost(alignment) == oracle_cost(base, hyp)


def test_backtrace_prefers_match_over_substitution():
    alignment = word_align(["a", "b"], ["a", "b"])
    assert [p.tag for p in alignment.pairs] == [MATCH, MATCH]


def test_wer_counts():
    report = wer("das ist ein Test", "das ist kein Test Satz")
    assert report.substitutions == 1
    assert report.insertions == 1
    assert report.deletions == 0
    assert report.ref_len == 4
    assert report.wer == pytest.approx(0.5)


def test_wer_normalizes_before_scoring():
    # Case, punctuation and number formatting differences are not errors.
    assert wer("Zweihundert Euro!", "200 €").wer == 0.0
    assert wer("Die Straße", "die strasse").wer == 0.0


def test_wer_empty_reference():
    assert wer("", "").wer == 0.0
    with pytest.raises(EmptyReference):
        wer("", "etwas")


def test_wer_identical_is_zero():
    text = "Heute scheint die Sonne über dem Meer."
    assert wer(text, text).wer == 0.0


@given(st.lists(st.sampled_from("abcde"), max_size=8),
       st.lists(st.sampled_from("abcde"), max_size=8))
@settings(max_examples=400, deadline=None)
def test_alignment_cost_property(ref, hyp):
    assert alignment_cost(word_align(ref, hyp)) == oracle_cost(ref, hyp)


def test_punctuation_errors():
    ref = "Hallo, Welt! Wie geht es?"
    assert punctuation_errors(ref, ref) == 0
    assert punctuation_errors(ref, "Hallo Welt! Wie geht es?") == 1
    # a swapped mark counts once, not as one missing plus one added
    assert punctuation_errors(ref, "Hallo. Welt! Wie geht es?") == 1
    assert punctuation_errors("Ende.", "Ende!") == 1


def test_capitalization_errors():
    ref = "Der Hund läuft"
    assert capitalization_errors(ref, ref) == 0
    assert capitalization_errors(ref, "der Hund läuft") == 1
    assert capitalization_errors(ref, "der hund läuft") == 2
    # A different word is a WER error, not a capitalization error.
    assert capitalization_errors(ref, "Die Hund läuft") == 0


def test_reduction_report():
    ref = "eins zwei drei vier"
    delta = reduction_report(ref, "eins xxx drei vier", ref)
    assert delta.baseline.wer == pytest.approx(0.25)
    assert delta.edited.wer == 0.0
    assert delta.relative_wer_reduction == pytest.approx(1.0)


def test_reduction_report_no_change():
    ref = "eins zwei drei vier"
    hyp = "eins xxx drei vier"
    delta = reduction_report(ref, hyp, hyp)
    assert delta.relative_wer_reduction == pytest.approx(0.0)


def test_reduction_report_serializes():
    delta = reduction_report("a b", "a x", "a b", {1: 3})
    data = delta.to_dict()
    assert data["schema"] == "cart-metrics-delta/1"
    assert data["per_user_edit_counts"] == {"1": 3}
    assert 0.0 <= data["relative_wer_reduction"] <= 1.0
