import json
import os

import pytest
from click.testing import CliRunner

from src.cli import EXIT_USER_ERROR, cli
from src.pipeline import NarrativePipeline
from src.ui.console import ConsoleReporter
from src.utils.config import ConfigManager
from src.utils.io import STATUS_UP_TO_DATE, RunManifest, read_csv

pytestmark = pytest.mark.slow

STAGES = ["ingest", "extract", "embed", "build", "project", "cluster", "report"]


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    runner = CliRunner()
    result = runner.invoke(cli, ["fixture", "--out", str(root / "fixture"), "--n", "60"])
    assert result.exit_code == 0, result.output
    config = str(root / "fixture" / "config.json")
    for name in ("a", "b"):
        for stage in STAGES:
            result = runner.invoke(cli, [stage, "--config", config, "--out", str(root / name)])
            assert result.exit_code == 0, f"{stage}: {result.output}"
    return root, config, runner


def _tree(directory):
    files = {}
    for base, _, names in os.walk(directory):
        for name in names:
            path = os.path.join(base, name)
            with open(path, "rb") as f:
                files[os.path.relpath(path, directory)] = f.read()
    return files


def test_reports_are_byte_identical_across_runs(workspace):
    root, _, _ = workspace
    first, second = _tree(str(root / "a" / "reports")), _tree(str(root / "b" / "reports"))
    assert "labels.csv" in first and "clusters.svg" in first
    assert first == second


def test_reports_describe_the_run(workspace):
    root, _, _ = workspace
    with open(root / "a" / "reports" / "summary.json", encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["articles"] == 60
    assert summary["analyzed"] == 58
    assert summary["k"] >= 2
    with open(root / "a" / "reports" / "labels.csv", encoding="utf-8") as f:
        text = f.read()
    assert text.startswith("# umap ")
    assert "seed 0" in text


def test_second_extract_is_served_from_the_cache(workspace):
    root, config, _ = workspace
    manager = ConfigManager(config)
    manager.load_config()
    pipeline = NarrativePipeline(manager.to_run_config(output_dir=str(root / "a")), ConsoleReporter(quiet=True))
    summary = pipeline.extract()
    assert summary["requests"] == 0
    assert summary["cache_hits"] == 60
    assert summary["parse_error"] == 2


def test_unchanged_stage_is_skipped(workspace):
    root, config, runner = workspace
    result = runner.invoke(cli, ["cluster", "--config", config, "--out", str(root / "a")])
    assert result.exit_code == 0
    assert RunManifest(str(root / "a")).last("cluster")["status"] == STATUS_UP_TO_DATE


def test_report_before_cluster_names_the_missing_stage(workspace):
    root, config, runner = workspace
    out = str(root / "early")
    assert runner.invoke(cli, ["ingest", "--config", config, "--out", out]).exit_code == 0
    result = runner.invoke(cli, ["report", "--config", config, "--out", out])
    assert result.exit_code == EXIT_USER_ERROR
    assert "`cluster`" in result.output


def test_unknown_option_is_a_user_error(workspace):
    _, config, runner = workspace
    result = runner.invoke(cli, ["cluster", "--config", config, "--bogus"])
    assert result.exit_code == EXIT_USER_ERROR


def test_post_processing_feeds_the_reports(workspace):
    root, config, runner = workspace
    out = str(root / "a")
    with open(os.path.join(out, "cluster_model.json"), encoding="utf-8") as f:
        k = json.load(f)["k"]
    result = runner.invoke(cli, ["post", "--config", config, "--out", out, "--drop", str(k - 1)])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, "final_model.json"), encoding="utf-8") as f:
        final = json.load(f)
    assert final["k"] == k - 1
    assert final["post_ops"][0]["op"] == "drop"

    assert runner.invoke(cli, ["report", "--config", config, "--out", out]).exit_code == 0
    with open(os.path.join(out, "reports", "summary.json"), encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["k"] == k - 1
    assert summary["dropped"] > 0
    kept = summary["analyzed"] - summary["dropped"]
    columns, rows = read_csv(os.path.join(out, "reports", "syncretism.csv"))
    count, share = columns.index("count"), columns.index("share")
    assert any(int(row[count]) > 0 for row in rows)
    for row in rows:
        assert float(row[share]) == pytest.approx(int(row[count]) / kept, abs=5e-5)

    result = runner.invoke(cli, ["post", "--config", config, "--out", out, "--drop", str(k + 5)])
    assert result.exit_code == EXIT_USER_ERROR


def test_baseline_and_dimension_study(workspace):
    root, config, runner = workspace
    out = str(root / "b")
    for command in ("baseline", "dimstudy"):
        result = runner.invoke(cli, [command, "--config", config, "--out", out])
        assert result.exit_code == 0, f"{command}: {result.output}"
    with open(os.path.join(out, "reports", "dim_study.csv"), encoding="utf-8") as f:
        rows = [line for line in f if not line.startswith("#")]
    assert rows[0].strip() == "method,dimension,average_similarity"
    assert len(rows) == 1 + 3 * 3
    assert os.path.isfile(os.path.join(out, "reports", "baseline_comparison.csv"))
