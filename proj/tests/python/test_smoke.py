import json
import os
from pathlib import Path

import pytest

import stagehpo

CONFIGS = Path(os.environ.get("STAGEHPO_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def test_tree_stats_for_grid():
    stats = stagehpo.tree_stats(CONFIGS / "resnet_grid.json")
    assert stats["trials"] == 108
    assert stats["trial_epochs"] == 21600
    assert stats["stage_epochs"] == 6240
    assert stats["savings_ratio_exact"] == "45/13"


def test_run_config_in_memory():
    config = json.loads((CONFIGS / "four_trials.json").read_text())
    report = stagehpo.run_config(config)
    assert report["tree"]["stage_count"] == 7
    assert report["policies"]["stage_based"]["epochs_trained"] == 29
    assert report["policies"]["trial_based"]["epochs_trained"] == 44
    assert report["ratios"]["gpu_hours"] > 1.0

    stage_only = stagehpo.run_config(config, policy="stage")
    assert "trial_based" not in stage_only["policies"]


def test_run_writes_artifacts_and_compare_reads_them(tmp_path):
    report = stagehpo.run(CONFIGS / "resnet_sha.json", seed=0, out_dir=tmp_path)
    funnel = report["policies"]["stage_based"]["sha_funnel"]
    assert [(f["participants"], f["survivors"]) for f in funnel] == [(108, 36), (36, 12)]
    for name in ("report.json", "trace_stage_based.csv", "gantt_trial_based.svg"):
        assert (tmp_path / name).exists()

    result = stagehpo.compare([tmp_path / "report.json", tmp_path / "missing.json"])
    assert result["rows"] == 1
    assert len(result["errors"]) == 1
    assert result["csv"].splitlines()[1].startswith("resnet_sha,both,")

    svg = stagehpo.export_gantt(tmp_path / "trace_stage_based.csv")
    assert svg.startswith("<svg") and 'class="bar"' in svg


def test_schedule_and_decimals():
    segments = stagehpo.expand_step_schedule("lr", "0.5", "0.2", [40, 60, 80], 200)
    assert segments == [("lr=0.5", 40), ("lr=0.1", 60), ("lr=0.02", 80), ("lr=0.004", 20)]
    assert stagehpo.decimal_multiply("0.1", "0.2") == "0.02"


def test_errors_surface_as_exceptions(tmp_path):
    config = json.loads((CONFIGS / "four_trials.json").read_text())
    with pytest.raises(stagehpo.StagehpoError, match="policy"):
        stagehpo.run_config(config, policy="sideways")
    config["cluster"]["nodes"] = 0
    with pytest.raises(stagehpo.StagehpoError, match="cluster"):
        stagehpo.tree_stats(config)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ValueError):
        stagehpo.tree_stats(broken)
