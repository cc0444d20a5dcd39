import json
import os
import tempfile

import pytest

from src.utils.config import ConfigManager, RunConfig
from src.utils.errors import ConfigError


def test_config_load_and_save():
    with tempfile.TemporaryDirectory() as tmpdir:
        config_path = os.path.join(tmpdir, 'config.json')
        config = ConfigManager(config_path)
        config.set('theme', 'amber')
        config.set('umap.n_neighbors', 20)
        config2 = ConfigManager(config_path)
        config2.load_config()
        assert config2.get('theme') == 'amber'
        assert config2.get('umap.n_neighbors') == 20
        assert config2.get('umap.min_dist') == 0.1


def test_defaults_validate(tmp_path):
    run = ConfigManager(str(tmp_path / "missing" / "config.json")).to_run_config()
    assert isinstance(run, RunConfig)
    assert run.svd_dim == 34
    assert run.keywords == ("Israel", "Palestine", "Gaza", "Hamas")
    assert run.label_threshold == 0.20 and run.table_threshold == 0.05
    assert run.k_min == 2 and run.k_max == 40


def test_explicit_missing_file_is_rejected(tmp_path):
    with pytest.raises(ConfigError):
        ConfigManager(str(tmp_path / "nope.json")).load_config()


def test_all_problems_reported_at_once(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "keywords": [],
        "svd": {"dim": 0},
        "umap": {"n_components": 7},
        "clustering": {"k_min": 5, "k_max": 3},
        "thresholds": {"label": 1.5},
        "colour": "red",
    }))
    manager = ConfigManager(str(path))
    manager.load_config()
    with pytest.raises(ConfigError) as excinfo:
        manager.to_run_config()
    problems = excinfo.value.problems
    assert len(problems) >= 6
    text = "\n".join(problems)
    for fragment in ("keywords", "svd.dim", "n_components", "k_min", "thresholds.label", "colour"):
        assert fragment in text


def test_toml_config_and_relative_paths(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        'corpus_path = "data/corpus.jsonl"\n'
        'seed = 7\n'
        '[chat]\nmode = "stub"\nstub_dir = "stubs"\n'
        '[embedder]\nmode = "hash"\ndimension = 64\n'
        '[svd]\ndim = 8\n'
    )
    manager = ConfigManager(str(path))
    manager.load_config()
    run = manager.to_run_config(seed=11)
    assert run.seed == 11
    assert run.corpus_path == os.path.join(str(tmp_path), "data", "corpus.jsonl")
    assert run.chat.stub_dir == os.path.join(str(tmp_path), "stubs")
    assert run.embedder.model_id == "hash-64-0"


def test_stub_mode_requires_directory(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"chat": {"mode": "stub"}}))
    manager = ConfigManager(str(path))
    manager.load_config()
    with pytest.raises(ConfigError, match="stub_dir"):
        manager.to_run_config()


def test_tokens_come_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("NARRATIVEMAP_CHAT_TOKEN", "secret")
    run = ConfigManager(str(tmp_path / "config.json")).to_run_config()
    assert run.chat.api_key == "secret"
    assert "secret" not in json.dumps(run.digest_params())


def test_post_ops_shape_is_checked(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"clustering": {"post_ops": [{"op": "merge", "clusters": [1]}, {"op": "split"}]}}))
    manager = ConfigManager(str(path))
    manager.load_config()
    with pytest.raises(ConfigError) as excinfo:
        manager.to_run_config()
    assert len(excinfo.value.problems) == 2
