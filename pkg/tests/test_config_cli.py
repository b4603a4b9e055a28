"""Config validation diagnostics and the three CLI subcommands."""

import json
import os

import pytest

from april_sim.cli import main
from april_sim.config import RunConfig, default_config, toy_policy_config
from april_sim.errors import ConfigError


def test_default_config_round_trips_through_json():
    cfg = default_config()
    again = RunConfig.from_json_dict(json.loads(json.dumps(cfg.to_json_dict())))
    assert again == cfg


def test_invalid_values_name_the_offending_key():
    with pytest.raises(ConfigError, match="engine"):
        RunConfig.from_json_dict({"engine": {"d1": -1}})
    with pytest.raises(ConfigError, match="scheduler"):
        RunConfig.from_json_dict({"scheduler": {"rollout_batch_size": 0}})
    with pytest.raises(ConfigError, match="workload.correlate_within_group"):
        RunConfig.from_json_dict({"workload": {"correlate_within_group": 1.5}})
    with pytest.raises(ConfigError, match="run.badger"):
        RunConfig.from_json_dict({"run": {"badger": 1}})
    with pytest.raises(ConfigError, match="unknown config section"):
        RunConfig.from_json_dict({"engnie": {}})


def test_overrides_replace_values():
    cfg = default_config().with_overrides(**{"run.seed": 9, "scheduler.mode": "baseline"})
    assert cfg.run.seed == 9
    assert cfg.scheduler.mode == "baseline"
    with pytest.raises(ConfigError):
        cfg.with_overrides(**{"nope.x": 1})


def test_toy_preset_is_policy_driven():
    cfg = toy_policy_config()
    assert cfg.workload.mode == "policy_driven"
    assert cfg.train.vocab_size == 4


def _test_scale_config(tmp_path, **extra) -> str:
    cfg = {
        "workload": {"parameters": {"mu_ln": 5.0, "sigma_ln": 1.0}},
        "engine": {"max_slots": 16, "l_max": 256},
        "scheduler": {
            "rollout_batch_size": 4,
            "samples_per_prompt": 2,
            "over_sampling_batch_size": 8,
        },
        "run": {"steps": 5, "seed": 3},
    }
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_run_writes_outputs_and_is_deterministic(tmp_path):
    cfg = _test_scale_config(tmp_path)
    out1 = tmp_path / "a"
    names = ("steps.jsonl", "summary.json", "samples.csv", "events.jsonl")
    assert main(["run", "--config", cfg, "--out", str(out1), "--manifest", "--events"]) == 0
    first = {name: (out1 / name).read_bytes() for name in names}
    assert main(["run", "--config", cfg, "--out", str(out1), "--manifest", "--events"]) == 0
    for name in names:
        assert (out1 / name).read_bytes() == first[name]
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["resolved_config"]["run"]["output_dir"] == str(out1)
    assert summary["steps"] == 5
    lines = (out1 / "steps.jsonl").read_text().splitlines()
    assert len(lines) == 5
    first = json.loads(lines[0])
    assert {
        "step", "tokens_generated", "rollout_wall_time", "train_wall_time",
        "throughput", "idle_fraction", "completed_groups", "carried_in_tokens",
        "offpolicy_fraction", "offpolicy_sample_fraction", "staleness_histogram",
        "sigma_batch", "sigma_instance", "mean_reward", "buffer_size_after",
    } <= set(first)
    manifest = (out1 / "samples.csv").read_text().splitlines()
    assert manifest[0] == "step,instance_id,sample_index,start_version,complete_version,tokens"
    assert len(manifest) == 1 + 5 * 4 * 2  # header + steps * N * G


def test_cli_flag_overrides_are_echoed(tmp_path):
    cfg = _test_scale_config(tmp_path)
    out = tmp_path / "o"
    assert main(["run", "--config", cfg, "--out", str(out), "--seed", "11",
                 "--steps", "2", "--mode", "baseline"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    resolved = summary["resolved_config"]
    assert resolved["run"]["seed"] == 11
    assert resolved["run"]["steps"] == 2
    assert resolved["scheduler"]["mode"] == "baseline"


def test_cli_zero_steps_is_success(tmp_path):
    cfg = _test_scale_config(tmp_path)
    out = tmp_path / "z"
    assert main(["run", "--config", cfg, "--out", str(out), "--steps", "0"]) == 0
    assert (out / "steps.jsonl").read_text() == ""
    assert json.loads((out / "summary.json").read_text())["steps"] == 0


def test_cli_invalid_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"engine": {"d1": -5}}))
    assert main(["run", "--config", str(path)]) == 2
    assert "d1" in capsys.readouterr().err


def test_cli_compare_pairs_runs(tmp_path):
    cfg = _test_scale_config(tmp_path)
    out = tmp_path / "cmp"
    assert main(["compare", "--config", cfg, "--out", str(out),
                 "--seeds", "1", "2", "3"]) == 0
    comparison = json.loads((out / "comparison.json").read_text())
    assert comparison["seeds"] == [1, 2, 3]
    assert len(comparison["per_seed"]) == 3
    assert comparison["mean_improvement"] is not None
    for seed in (1, 2, 3):
        for mode in ("baseline", "april"):
            assert (out / f"{mode}-seed{seed}" / "steps.jsonl").exists()


def test_cli_compare_constant_lengths_degenerate(tmp_path):
    cfg = _test_scale_config(
        tmp_path,
        workload={"distribution": "constant", "parameters": {"value": 50}},
        scheduler={
            "rollout_batch_size": 4,
            "samples_per_prompt": 2,
            "over_sampling_batch_size": 4,
        },
    )
    out = tmp_path / "cmp0"
    assert main(["compare", "--config", cfg, "--out", str(out), "--seeds", "5"]) == 0
    comparison = json.loads((out / "comparison.json").read_text())
    assert abs(comparison["mean_improvement"]) < 0.01


def test_cli_histogram_writes_loadable_csv(tmp_path):
    cfg = _test_scale_config(tmp_path)
    out = tmp_path / "h"
    assert main(["histogram", "--config", cfg, "--out", str(out), "--draws", "5000"]) == 0
    lines = (out / "histogram.csv").read_text().splitlines()
    assert lines[0] == "bin_upper,count,mass"
    uppers = [int(line.split(",")[0]) for line in lines[1:]]
    assert uppers == sorted(uppers)
    assert uppers[-1] == 256
    counts = [int(line.split(",")[1]) for line in lines[1:]]
    assert sum(counts) == 5000


def test_cli_env_var_supplies_output_root(tmp_path, monkeypatch):
    cfg = _test_scale_config(tmp_path)
    monkeypatch.setenv("APRIL_BENCH_OUT", str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    assert main(["run", "--config", cfg, "--steps", "1"]) == 0
    assert (tmp_path / "root" / "run-april-seed3" / "summary.json").exists()
