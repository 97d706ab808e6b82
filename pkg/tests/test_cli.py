import json

import pytest

from lifeloop import dsl
from lifeloop.cli import main, parse_profile
from lifeloop.traces import ConstantSpeed, Noise, PausePattern, PiecewiseSpeed


@pytest.fixture()
def canonical_file(tmp_path):
    path = tmp_path / "still_walking.story"
    path.write_text(dsl.CANONICAL_SCRIPT, encoding="utf-8")
    return str(path)


@pytest.fixture()
def trace_file(tmp_path):
    path = tmp_path / "lap.trace"
    assert main(["gen-trace", "--profile", "constant:9", "--duration", "40",
                 "--rate", "20", "--seed", "1", "--out", str(path)]) == 0
    return str(path)


def test_validate_canonical_exits_zero(canonical_file, capsys):
    assert main(["validate", canonical_file]) == 0
    assert capsys.readouterr().err == ""


def test_validate_builtin_alias():
    assert main(["validate", "canonical"]) == 0


def test_validate_broken_script_exits_one(tmp_path, capsys):
    bad = dsl.CANONICAL_SCRIPT.replace("segment 0 90", "segment 0 100", 1)
    path = tmp_path / "broken.story"
    path.write_text(bad, encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "SegmentOverlap" in err
    assert str(path) in err


def test_usage_error_exits_two(capsys):
    assert main(["simulate"]) == 2
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_compile_writes_graph_json(canonical_file, tmp_path):
    out = tmp_path / "graph.json"
    assert main(["compile", canonical_file, "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["name"] == "still_walking"
    assert len([n for n in data["nodes"] if n["kind"] == "spine_scene"]) == 4


def test_simulate_is_byte_deterministic(canonical_file, trace_file, tmp_path, capsys):
    out1, out2 = tmp_path / "a.directives", tmp_path / "b.directives"
    assert main(["simulate", "--script", canonical_file, "--trace", trace_file,
                 "--out", str(out1)]) == 0
    first_stdout = capsys.readouterr().out
    assert main(["simulate", "--script", canonical_file, "--trace", trace_file,
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert capsys.readouterr().out == first_stdout
    assert "lap[0] time=40.000" in first_stdout


def test_gen_trace_same_seed_same_file(tmp_path):
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    for out in (a, b):
        assert main(["gen-trace", "--profile", "noise:9,0.5", "--duration", "10",
                     "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_trace_profile_requires_duration(tmp_path, capsys):
    out = tmp_path / "x.trace"
    assert main(["gen-trace", "--profile", "constant:9", "--out", str(out)]) == 2
    assert "--duration" in capsys.readouterr().err


def test_bad_profile_exits_two(tmp_path, capsys):
    out = tmp_path / "x.trace"
    assert main(["gen-trace", "--profile", "warp:9", "--duration", "4",
                 "--out", str(out)]) == 2


def test_parse_profile_formats():
    p, needs = parse_profile("constant:9")
    assert p == ConstantSpeed(9.0) and needs
    p, needs = parse_profile("piecewise:10x9,5x0")
    assert p == PiecewiseSpeed(((10.0, 9.0), (5.0, 0.0))) and not needs
    p, needs = parse_profile("pauses:9:45@3,130@5")
    assert p == PausePattern(9.0, ((45.0, 3.0), (130.0, 5.0))) and needs
    p, needs = parse_profile("noise:9,0.5")
    assert p == Noise(9.0, 0.5) and needs


def test_config_file_overrides(tmp_path, canonical_file, trace_file, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trigger_window": 0.4}))
    out1 = tmp_path / "default.directives"
    out2 = tmp_path / "tuned.directives"
    assert main(["simulate", "--script", canonical_file, "--trace", trace_file,
                 "--out", str(out1)]) == 0
    assert main(["simulate", "--script", canonical_file, "--trace", trace_file,
                 "--out", str(out2), "--config", str(cfg)]) == 0
    # same rotation, different config hash in the header
    h1 = out1.read_text().splitlines()[2]
    h2 = out2.read_text().splitlines()[2]
    assert h1.startswith("#config_hash=") and h1 != h2

    # env var path is honored too
    monkeypatch.setenv("LIFELOOP_CONFIG", str(cfg))
    out3 = tmp_path / "env.directives"
    assert main(["simulate", "--script", canonical_file, "--trace", trace_file,
                 "--out", str(out3)]) == 0
    assert out3.read_text().splitlines()[2] == h2
