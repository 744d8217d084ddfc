import json
from pathlib import Path

import pytest

from lyricopt.cli import (
    EXIT_BACKEND,
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_OK,
    AppConfig,
    ConfigError,
    atomic_write,
    run,
)

SAMPLE = Path(__file__).parent.parent / "samples" / "demo_song.jsonl"


def translate(tmp_path, *extra, name="out.jsonl"):
    out = tmp_path / name
    code = run(["translate", str(SAMPLE), str(out), "--mock", "--samples1", "8", "--samples2", "8", *extra])
    return code, out


def test_translate_writes_line_and_paragraph_records(tmp_path):
    code, out = translate(tmp_path, "--seed", "7")
    assert code == EXIT_OK
    records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    kinds = [r["record"] for r in records]
    assert kinds.count("paragraph") == 2 and kinds.count("line") == 7
    assert all(isinstance(r["chinese"], str) for r in records if r["record"] == "line")


def test_translate_is_byte_identical(tmp_path):
    _, a = translate(tmp_path, "--seed", "7", name="a.jsonl")
    _, b = translate(tmp_path, "--seed", "7", "--parallelism", "1", name="b.jsonl")
    assert a.read_bytes() == b.read_bytes()


def test_eval_round_trip(tmp_path, capsys):
    _, out = translate(tmp_path, "--mock-mode", "exhaustive")
    report = tmp_path / "report.json"
    code = run(["eval", str(out), str(SAMPLE), "--report", str(report), "--score", "--mock"])
    assert code == EXIT_OK
    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["length_accuracy"] == 1.0 and data["rhyme_score"] == 1.0
    assert "bleu" in data and "mean_r_bas" in data
    assert data["counts"] == {"paragraphs": 2, "lines": 7}
    assert "LA" in capsys.readouterr().out


def test_eval_missing_paragraph(tmp_path):
    out = tmp_path / "out.jsonl"
    out.write_text("", encoding="utf-8")
    assert run(["eval", str(out), str(SAMPLE)]) == EXIT_INPUT


def test_missing_input_is_input_error(tmp_path):
    assert run(["translate", str(tmp_path / "nope.jsonl"), str(tmp_path / "o.jsonl"), "--mock"]) == EXIT_INPUT


def write_config(tmp_path, data):
    path = tmp_path / "cfg.yaml"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfg = write_config(tmp_path, {"weights": {"lambda9": 1}})
    code, _ = translate(tmp_path, "--config", cfg)
    assert code == EXIT_CONFIG
    assert "weights.lambda9" in capsys.readouterr().err


@pytest.mark.parametrize(
    "data, key",
    [
        ({"samples_pass1": 0}, "samples_pass1"),
        ({"seed": "seven"}, "seed"),
        ({"weights": {"beta": 0.5}}, "weights"),
        ({"generation": {"top_p": 2}}, "generation"),
        ({"scorer": {"kind": "http"}}, "scorer.endpoint"),
        ({"colour": "blue"}, "colour"),
    ],
)
def test_config_errors(data, key):
    with pytest.raises(ConfigError, match=key):
        AppConfig.from_mapping(data)


def test_config_yaml_and_defaults(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("samples_pass1: 5\nweights:\n  lambda1: 4\n", encoding="utf-8")
    app = AppConfig.load(path)
    cfg = app.pipeline()
    assert cfg.samples_pass1 == 5 and cfg.weights.lambda1 == 4 and cfg.weights.lambda2 == 3


def test_bad_yaml(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("a: [1, 2\n", encoding="utf-8")
    assert run(["rhyme", "唱", "--config", str(path)]) == EXIT_CONFIG


def test_backend_failure_exit_code_and_no_partial_output(tmp_path):
    cfg = write_config(tmp_path, {"generator": {"kind": "mock", "fail_on": ["I walk alone along the shore"]}})
    out = tmp_path / "out.jsonl"
    out.write_text("previous\n", encoding="utf-8")
    code = run(["translate", str(SAMPLE), str(out), "--config", cfg, "--samples1", "4", "--samples2", "4"])
    assert code == EXIT_BACKEND
    assert out.read_text(encoding="utf-8") == "previous\n"


def test_atomic_write_cleans_up(tmp_path):
    target = tmp_path / "x.txt"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as fh:
            fh.write("half")
            raise RuntimeError
    assert list(tmp_path.iterdir()) == []


def test_filter_command(tmp_path, capsys):
    src = tmp_path / "pairs.jsonl"
    rows = [{"english": f"e{i}", "chinese": f"中{i}", "r_bas": s} for i, s in enumerate([2, 3, 4, 4])]
    src.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    out = tmp_path / "kept.jsonl"
    assert run(["filter", str(src), str(out), "--mode", "HQ"]) == EXIT_OK
    assert "kept 2/4" in capsys.readouterr().out
    assert run(["filter", str(src), str(out), "--mode", "Q", "--mock"]) == EXIT_OK
    assert "kept 3/4" in capsys.readouterr().out
    assert len(out.read_text(encoding="utf-8").splitlines()) == 3


def test_filter_scores_missing_with_mock(tmp_path):
    src = tmp_path / "pairs.jsonl"
    src.write_text(json.dumps({"english": "sing a song", "chinese": "唱首歌"}) + "\n", encoding="utf-8")
    assert run(["filter", str(src), str(tmp_path / "o.jsonl"), "--mock"]) == EXIT_OK


def test_rebalance_command(tmp_path):
    src = tmp_path / "labeled.jsonl"
    src.write_text("".join(json.dumps({"i": i, "label": 4}) + "\n" for i in range(200)), encoding="utf-8")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(["rebalance", str(src), str(a), "--plan", "basic", "--seed", "1"]) == EXIT_OK
    assert run(["rebalance", str(src), str(b), "--plan", "basic", "--seed", "1"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert 50 < len(a.read_text().splitlines()) < 150


def test_rebalance_plan_file(tmp_path):
    src = tmp_path / "labeled.jsonl"
    src.write_text(json.dumps({"label": "x"}) + "\n", encoding="utf-8")
    plan = tmp_path / "plan.yaml"
    plan.write_text("factors:\n  x: 3\n", encoding="utf-8")
    out = tmp_path / "o.jsonl"
    assert run(["rebalance", str(src), str(out), "--plan", str(plan)]) == EXIT_OK
    assert len(out.read_text().splitlines()) == 3
    plan.write_text("factors:\n  x: -1\n", encoding="utf-8")
    assert run(["rebalance", str(src), str(out), "--plan", str(plan)]) == EXIT_CONFIG


def test_rebalance_missing_label(tmp_path):
    src = tmp_path / "labeled.jsonl"
    src.write_text(json.dumps({"other": 1}) + "\n", encoding="utf-8")
    assert run(["rebalance", str(src), str(tmp_path / "o"), "--plan", "basic"]) == EXIT_INPUT


def test_rhyme_and_syllables(capsys):
    assert run(["rhyme", "和我再一起唱"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "江阳"
    assert run(["syllables", "You are sixteen going on seventeen"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "10"
