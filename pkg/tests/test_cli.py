from __future__ import annotations

import json
import subprocess
import sys

import pytest

from trp.cli import (
    EXIT_INTERNAL,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    ConfigError,
    ExperimentConfig,
    build_parser,
    config_from_args,
    parse_render,
    render,
    resolve,
    run,
)
from trp.level import load_level, serialize_level

FAST = ["--iterations", "20", "--max-moves", "30"]


def test_play(tmp_path, capsys):
    assert run(["play", "--domain", "dungeon", "--seed", "3", "--out", str(tmp_path), *FAST]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"success", "moves", "visited", "deaths"}
    assert json.loads((tmp_path / "summary.json").read_text()) == summary
    trace = json.loads((tmp_path / "trace.json").read_text())
    assert "visited_positions" in trace
    overlay = (tmp_path / "overlay.txt").read_text().splitlines()
    assert len(overlay) == 9 and all(len(r) == 13 for r in overlay)


def test_generate_and_evaluate(tmp_path, capsys):
    out = tmp_path / "gen"
    code = run(["generate", "--domain", "dungeon", "-n", "3", "--seed", "5", "--out", str(out), "--debug", *FAST])
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert [e["seed"] for e in manifest] == [5, 6, 7]
    assert all(e["status"] == "ok" and (e["t"], e["s"], e["e"]) == (1, 2, 0.25) for e in manifest)
    for e in manifest:
        assert (out / e["file"]).exists()
        assert (out / f"gen_{e['seed']}.sketch.txt").exists()
        assert (out / f"gen_{e['seed']}.threats.csv").read_text().startswith("col,row,cause")
    capsys.readouterr()
    csv_path = tmp_path / "report.csv"
    assert run(["evaluate", "--domain", "dungeon", str(out), "--csv", str(csv_path)]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("playable,plagiarism_mean")
    assert csv_path.read_text().splitlines()[1].startswith("gen,")


def test_variety_manifest_records_params(tmp_path, dungeon):
    out = tmp_path / "v"
    assert run(["generate", "--domain", "dungeon", "-n", "4", "--mode", "variety", "--out", str(out), *FAST]) == 0
    for e in json.loads((out / "manifest.json").read_text()):
        assert e["t"] in dungeon.ranges.t and e["s"] in dungeon.ranges.s and e["e"] in dungeon.ranges.e


def test_markov_generate(tmp_path, dungeon):
    out = tmp_path / "m"
    assert run(["generate", "--domain", "dungeon", "-n", "2", "--method", "markov", "--out", str(out)]) == 0
    lvl = load_level(out / "gen_0.lvl", dungeon.alphabet)
    assert (lvl.width, lvl.height) == (13, 9)


def test_render_round_trip(tmp_path, dungeon, capsys):
    path = dungeon.level_paths["level1"]
    assert run(["render", str(path)]) == EXIT_OK
    text = capsys.readouterr().out
    assert parse_render(text) == path.read_text()
    assert "+  key" in text
    level = load_level(path, dungeon.alphabet)
    assert parse_render(render(level)) == serialize_level(level)
    assert render(level, legend=False) == serialize_level(level)


def test_exit_codes(tmp_path, capsys):
    assert run(["evaluate", "--domain", "dungeon", str(tmp_path / "missing")]) == EXIT_IO
    assert run(["render", str(tmp_path / "missing.lvl")]) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    assert run(["generate", "--config", str(bad)]) == EXIT_USAGE
    bad.write_text("{not json")
    assert run(["generate", "--config", str(bad)]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    capsys.readouterr()


def test_internal_error_code(monkeypatch, tmp_path, capsys):
    import trp.cli as cli

    def boom(*_a, **_k):
        raise KeyError("x")

    monkeypatch.setattr(cli, "cmd_generate", boom)
    assert run(["generate", "--domain", "dungeon", "--out", str(tmp_path)]) == EXIT_INTERNAL
    assert "internal error" in capsys.readouterr().err


def test_invalid_overrides(tmp_path, capsys):
    assert run(["generate", "--domain", "dungeon", "--e", "2.0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert run(["generate", "--domain", "dungeon", "--iterations", "0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert not (tmp_path / "manifest.json").exists()
    assert "config error" in capsys.readouterr().err


def test_config_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"domain": "platformer", "population": 7, "kit": {"s": 12}, "base_seed": 4}))
    args = build_parser().parse_args(["generate", "--config", str(cfg), "--s", "10", "--seed", "9"])
    config, config_dir = config_from_args(args)
    assert config_dir == tmp_path
    assert (config.domain, config.population, config.base_seed, config.kit["s"]) == ("platformer", 7, 9, 10)
    setup = resolve(config, config_dir)
    assert setup.kit.s == 10 and setup.kit.t == 2 and setup.population == 7


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="chaotic")
    with pytest.raises(ConfigError):
        ExperimentConfig(kit={"alpha": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json({"domain": "dungeon", "extra": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(population=0)


def test_ranges_override(tmp_path):
    setup = resolve(ExperimentConfig(ranges={"s": [3]}))
    assert setup.ranges.s == (3,) and setup.ranges.t == (1, 2, 3)


def test_experiment_small(tmp_path, capsys):
    out = tmp_path / "exp"
    assert run(["experiment", "--domain", "dungeon", "-n", "3", "--out", str(out), *FAST]) == EXIT_OK
    table = capsys.readouterr().out
    assert [line.split()[0] for line in table.splitlines()] == ["trp-fixed", "trp-variety", "markov"]
    csv_lines = (out / "results.csv").read_text().splitlines()
    assert csv_lines[0].startswith("label,playable") and len(csv_lines) == 4
    for arm in ("trp-fixed", "trp-variety", "markov"):
        assert len(list((out / arm).glob("gen_*.lvl"))) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trp", "render", "--no-legend",
                           str(resolve(ExperimentConfig()).domain.level_paths["level1"])],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("wwwwwwwwwwwww")
