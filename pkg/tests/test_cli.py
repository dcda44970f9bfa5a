import json

import pytest

from cart.cli import main
from cart.session import dump_transcript
from cart.sim import synth_timed_words


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_normalize_file(tmp_path, capsys):
    path = write(tmp_path, "in.txt", "Das kostet 42 €.")
    assert main(["normalize", path]) == 0
    out = capsys.readouterr().out.strip()
    assert out == "das kostet zweiundvierzig euro"


def test_normalize_stdin(monkeypatch, capsys):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO("Hallo Welt!"))
    assert main(["normalize"]) == 0
    assert capsys.readouterr().out.strip() == "hallo welt"


def test_eval_reports_wer(tmp_path, capsys):
    ref = write(tmp_path, "ref.txt", "das wetter ist gut")
    hyp = write(tmp_path, "hyp.txt", "das wetter war gut")
    assert main(["eval", ref, hyp]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["substitutions"] == 1
    assert report["wer"] == 0.25


def test_eval_delta(tmp_path, capsys):
    ref = write(tmp_path, "ref.txt", "das wetter ist gut")
    base = write(tmp_path, "base.txt", "das wetter war gut")
    edited = write(tmp_path, "edited.txt", "das wetter ist gut")
    assert main(["eval-delta", ref, base, edited]) == 0
    delta = json.loads(capsys.readouterr().out)
    assert delta["relative_wer_reduction"] == 1.0


def test_fmt_paragraphs_and_captions(tmp_path, capsys):
    words = synth_timed_words("dies ist ein kurzer testsatz .".replace(" .", "."))
    path = write(tmp_path, "t.json", json.dumps(dump_transcript(words)))
    assert main(["fmt", "paragraphs", path]) == 0
    out = capsys.readouterr().out
    assert "dies ist ein kurzer" in out
    assert main(["fmt", "captions", path, ]) == 0
    assert "dies ist ein kurzer" in capsys.readouterr().out


def test_replay_prints_final_text(tmp_path, capsys):
    lines = [
        {"revision": 1, "author": 0,
         "components": [{"insert": "hallo", "author": 0}], "server_time_ms": 0},
        {"revision": 2, "author": 0,
         "components": [{"retain": 5}, {"insert": " welt", "author": 0}],
         "server_time_ms": 1},
    ]
    path = write(tmp_path, "oplog.ndjson",
                 "\n".join(json.dumps(x) for x in lines) + "\n")
    assert main(["replay", path]) == 0
    assert capsys.readouterr().out.strip() == "hallo welt"


def test_sim_command(tmp_path, capsys):
    assert main(["sim", "--scenario", "C", "--words", "150",
                 "--seed", "3", "--speedup", "100"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["scenario"] == "C"
    assert 0.0 <= result["relative_wer_reduction"] <= 1.0


def test_sim_with_profile_file(tmp_path, capsys):
    profile = write(tmp_path, "p.json", json.dumps({
        "detect_prob": 1.0, "fix_accuracy": 1.0,
        "reaction_mean_s": 0.5, "reaction_sd_s": 0.1, "typing_wpm": 9000}))
    assert main(["sim", "--words", "150", "--seed", "1",
                 "--speedup", "100", "--profile", profile]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["edited"]["wer"] == 0.0


def test_sweep_command(capsys):
    assert main(["sweep", "--scenarios", "A,C", "--seeds", "2",
                 "--words", "150", "--speedup", "100"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = [json.loads(line) for line in lines]
    assert [r["scenario"] for r in rows] == ["A", "C"]
    assert all(0.0 <= r["mean_wer_reduction"] <= 1.0 for r in rows)


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
