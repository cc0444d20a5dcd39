"""
Configuration manager for NarrativeMap
"""

import copy
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from src.core.embedder import EmbedderConfig
from src.core.llm_client import ChatConfig
from src.operations.projection import UmapParams
from src.operations.reduction import SCOPES
from src.utils.errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

THEMES = ("green_on_black", "amber", "dos_blue")
DIM_STUDY_METHODS = ("svd", "pca", "umap")
PATH_KEYS = ("corpus_path", "output_dir", "chat.stub_dir")

DEFAULTS: Dict[str, Any] = {
    "corpus_path": "corpus.jsonl",
    "keywords": ["Israel", "Palestine", "Gaza", "Hamas"],
    "output_dir": "out",
    "seed": 42,
    "theme": "green_on_black",
    "aws_profile": None,
    "chat": {
        "mode": "http",
        "base_url": "http://localhost:8000/v1",
        "model": "meta-llama/Meta-Llama-3-8B-Instruct",
        "api_key_env": "NARRATIVEMAP_CHAT_TOKEN",
        "max_retries": 3,
        "retry_backoff": 1.0,
        "concurrency": 4,
        "timeout": 120.0,
        "max_tokens": 512,
        "max_chars": 24000,
        "stub_dir": None,
        "extra_body": {},
    },
    "embedder": {
        "mode": "http",
        "base_url": "http://localhost:8080/v1",
        "model": "intfloat/e5-large",
        "api_key_env": "NARRATIVEMAP_EMBED_TOKEN",
        "dimension": 1024,
        "prefix": "",
        "batch_size": 32,
        "max_retries": 3,
        "retry_backoff": 1.0,
        "concurrency": 4,
        "timeout": 60.0,
        "seed": 0,
        "anisotropy": 0.0,
    },
    "svd": {"dim": 34, "fit_scope": "per-role"},
    "umap": {"n_neighbors": 15, "min_dist": 0.1, "n_components": 2, "n_epochs": 500, "metric": "euclidean"},
    "clustering": {"k_min": 2, "k_max": 40, "post_ops": []},
    "thresholds": {"label": 0.20, "table": 0.05},
    "components": {},
    "baseline": {"cluster_pairs": []},
    "dimstudy": {
        "dims": [2, 4, 8, 16, 34, 64, 128, 256, 512, 1024],
        "methods": ["svd", "pca", "umap"],
        "max_vectors": 2000,
        "key_actors": 8,
    },
    "publish": {"uri": None},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one pipeline run"""

    corpus_path: str
    keywords: Tuple[str, ...]
    output_dir: str
    seed: int
    theme: str
    aws_profile: Optional[str]
    chat: ChatConfig
    embedder: EmbedderConfig
    svd_dim: int
    fit_scope: str
    umap: UmapParams
    k_min: int
    k_max: int
    post_ops: Tuple[Dict[str, Any], ...]
    label_threshold: float
    table_threshold: float
    components: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    cluster_pairs: Tuple[Tuple[int, int], ...] = ()
    dimstudy_dims: Tuple[int, ...] = ()
    dimstudy_methods: Tuple[str, ...] = DIM_STUDY_METHODS
    dimstudy_max_vectors: int = 2000
    key_actors: int = 8
    publish_uri: Optional[str] = None

    def digest_params(self) -> Dict[str, Any]:
        """Settings that shape the outputs; endpoint tokens excluded"""
        return {
            "keywords": list(self.keywords),
            "seed": self.seed,
            "chat_model": self.chat.model_id,
            "max_chars": self.chat.max_chars,
            "embedder_model": self.embedder.model_id,
            "embedder_prefix": self.embedder.prefix,
            "svd_dim": self.svd_dim,
            "fit_scope": self.fit_scope,
            "umap": self.umap.to_dict(),
            "k_min": self.k_min,
            "k_max": self.k_max,
            "post_ops": list(self.post_ops),
            "thresholds": {"label": self.label_threshold, "table": self.table_threshold},
            "components": {name: list(ids) for name, ids in self.components.items()},
            "cluster_pairs": [list(pair) for pair in self.cluster_pairs],
            "theme": self.theme,
        }


def _merge(base: Dict[str, Any], override: Mapping[str, Any], prefix: str, unknown: List[str]) -> None:
    for key, value in override.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            unknown.append(dotted)
            continue
        if isinstance(base[key], dict) and base[key] and isinstance(value, Mapping):
            _merge(base[key], value, f"{dotted}.", unknown)
        else:
            base[key] = copy.deepcopy(value)


def validate_post_ops(ops: Any) -> List[str]:
    problems = []
    if not isinstance(ops, list):
        return ["clustering.post_ops must be a list"]
    for position, op in enumerate(ops):
        where = f"clustering.post_ops[{position}]"
        if not isinstance(op, Mapping) or op.get("op") not in ("drop", "merge"):
            problems.append(f"{where} must be {{'op': 'drop', 'cluster': id}} or {{'op': 'merge', 'clusters': [a, b]}}")
        elif op["op"] == "drop" and not isinstance(op.get("cluster"), int):
            problems.append(f"{where}: drop needs an integer 'cluster'")
        elif op["op"] == "merge" and not (
            isinstance(op.get("clusters"), list) and len(op["clusters"]) == 2
            and all(isinstance(c, int) for c in op["clusters"])
        ):
            problems.append(f"{where}: merge needs 'clusters': [a, b]")
    return problems


class ConfigManager:
    """Loads JSON or TOML settings on top of the defaults; keys are dotted paths"""

    def __init__(self, config_path: Optional[str] = "config.json"):
        self.config_path = config_path
        self.config = copy.deepcopy(DEFAULTS)
        self.unknown_keys: List[str] = []

    @property
    def base_dir(self) -> str:
        if self.config_path:
            return os.path.dirname(os.path.abspath(self.config_path))
        return os.getcwd()

    def load_config(self) -> Dict[str, Any]:
        if self.config_path and os.path.exists(self.config_path):
            try:
                if self.config_path.endswith(".toml"):
                    with open(self.config_path, "rb") as f:
                        data = tomllib.load(f)
                else:
                    with open(self.config_path, "r", encoding="utf-8") as f:
                        data = json.load(f)
            except (OSError, ValueError) as e:
                raise ConfigError([f"cannot read {self.config_path}: {e}"]) from e
            if not isinstance(data, Mapping):
                raise ConfigError([f"{self.config_path} must hold a table of settings"])
            self.unknown_keys = []
            _merge(self.config, data, "", self.unknown_keys)
        elif self.config_path and self.config_path != "config.json":
            raise ConfigError([f"config file not found: {self.config_path}"])
        return self.config

    def save_config(self) -> None:
        if not self.config_path:
            return
        if self.config_path.endswith(".toml"):
            raise ConfigError([f"cannot write TOML config {self.config_path}; use a .json file"])
        with open(self.config_path, "w", encoding="utf-8") as f:
            json.dump(self.config, f, indent=2, sort_keys=True)
            f.write("\n")

    def get(self, key: str, default: Any = None) -> Any:
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, Mapping) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, key: str, value: Any) -> None:
        parts = key.split(".")
        node = self.config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        self.save_config()

    def _path(self, key: str) -> Optional[str]:
        value = self.get(key)
        if not value or value.startswith("s3://") or os.path.isabs(value):
            return value
        return os.path.normpath(os.path.join(self.base_dir, value))

    def _section(self, name: str, cls, drop: Tuple[str, ...], problems: List[str], **extra):
        values = {k: v for k, v in self.get(name).items() if k not in drop}
        values.update(extra)
        try:
            return cls(**values)
        except TypeError as e:
            problems.append(f"{name}: {e}")
            return cls()

    def to_run_config(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
        """Validate everything and report all problems at once"""
        problems = [f"unknown config key: {key}" for key in self.unknown_keys]

        keywords = self.get("keywords")
        if not isinstance(keywords, list) or not keywords or not all(isinstance(k, str) and k.strip() for k in keywords):
            problems.append("keywords must be a non-empty list of non-empty strings")
            keywords = []
        if self.get("theme") not in THEMES:
            problems.append(f"theme must be one of {THEMES}")
        run_seed = self.get("seed") if seed is None else seed
        if not isinstance(run_seed, int) or run_seed < 0:
            problems.append("seed must be a non-negative integer")
            run_seed = 0

        chat = self._section(
            "chat", ChatConfig, ("api_key_env",), problems,
            api_key=os.environ.get(self.get("chat.api_key_env") or ""),
            stub_dir=self._path("chat.stub_dir"),
        )
        if chat.mode not in ("http", "stub"):
            problems.append(f"chat.mode must be 'http' or 'stub', got {chat.mode!r}")
        if chat.mode == "stub" and not chat.stub_dir:
            problems.append("chat.stub_dir is required when chat.mode is 'stub'")
        if chat.concurrency < 1 or chat.max_retries < 1:
            problems.append("chat.concurrency and chat.max_retries must be >= 1")
        if chat.max_chars < 1:
            problems.append("chat.max_chars must be >= 1")

        embedder = self._section(
            "embedder", EmbedderConfig, ("api_key_env",), problems,
            api_key=os.environ.get(self.get("embedder.api_key_env") or ""),
        )
        problems.extend(embedder.problems())

        svd_dim = self.get("svd.dim")
        if not isinstance(svd_dim, int) or svd_dim < 1:
            problems.append("svd.dim must be a positive integer")
        elif svd_dim > embedder.dimension:
            problems.append(f"svd.dim ({svd_dim}) exceeds embedder.dimension ({embedder.dimension})")
        if self.get("svd.fit_scope") not in SCOPES:
            problems.append(f"svd.fit_scope must be one of {SCOPES}")

        umap = self._section("umap", UmapParams, (), problems)
        problems.extend(umap.problems())

        k_min, k_max = self.get("clustering.k_min"), self.get("clustering.k_max")
        if not (isinstance(k_min, int) and isinstance(k_max, int) and 2 <= k_min <= k_max):
            problems.append("clustering.k_min and clustering.k_max must be integers with 2 <= k_min <= k_max")
        problems.extend(validate_post_ops(self.get("clustering.post_ops")))

        for name in ("label", "table"):
            value = self.get(f"thresholds.{name}")
            if not isinstance(value, (int, float)) or not 0.0 < value <= 1.0:
                problems.append(f"thresholds.{name} must lie in (0, 1]")

        components: Dict[str, Tuple[int, ...]] = {}
        for name, ids in (self.get("components") or {}).items():
            if not isinstance(ids, list) or not all(isinstance(i, int) for i in ids):
                problems.append(f"components.{name} must be a list of cluster ids")
            else:
                components[name] = tuple(ids)

        pairs = self.get("baseline.cluster_pairs") or []
        if not all(isinstance(p, list) and len(p) == 2 and all(isinstance(i, int) for i in p) for p in pairs):
            problems.append("baseline.cluster_pairs must be a list of [a, b] cluster id pairs")
            pairs = []

        dims = self.get("dimstudy.dims")
        if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
            problems.append("dimstudy.dims must be a non-empty list of positive integers")
            dims = []
        methods = self.get("dimstudy.methods")
        if not isinstance(methods, list) or not methods or any(m not in DIM_STUDY_METHODS for m in methods):
            problems.append(f"dimstudy.methods must be drawn from {DIM_STUDY_METHODS}")
            methods = list(DIM_STUDY_METHODS)
        for key in ("dimstudy.max_vectors", "dimstudy.key_actors"):
            if not isinstance(self.get(key), int) or self.get(key) < 1:
                problems.append(f"{key} must be a positive integer")

        if problems:
            raise ConfigError(problems)

        return RunConfig(
            corpus_path=self._path("corpus_path"),
            keywords=tuple(keywords),
            output_dir=os.path.abspath(output_dir) if output_dir else self._path("output_dir"),
            seed=run_seed,
            theme=self.get("theme"),
            aws_profile=self.get("aws_profile"),
            chat=chat,
            embedder=embedder,
            svd_dim=svd_dim,
            fit_scope=self.get("svd.fit_scope"),
            umap=umap,
            k_min=k_min,
            k_max=k_max,
            post_ops=tuple(self.get("clustering.post_ops")),
            label_threshold=float(self.get("thresholds.label")),
            table_threshold=float(self.get("thresholds.table")),
            components=components,
            cluster_pairs=tuple(tuple(p) for p in pairs),
            dimstudy_dims=tuple(dims),
            dimstudy_methods=tuple(methods),
            dimstudy_max_vectors=self.get("dimstudy.max_vectors"),
            key_actors=self.get("dimstudy.key_actors"),
            publish_uri=self.get("publish.uri"),
        )
