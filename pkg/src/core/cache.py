"""
Content-addressed response cache and vector store files
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

VECTOR_STORE_VERSION = 1


def content_key(*parts: str) -> str:
    """Hex SHA-256 over the concatenated parts"""
    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode("utf-8"))
    return digest.hexdigest()


class ContentCache:
    """One JSON record per request, stored under its content key"""

    def __init__(self, root: str):
        self.root = Path(root)
        self.logger = logging.getLogger(__name__)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[Dict[str, Any]]:
        path = self._path(key)
        if not path.is_file():
            with self._lock:
                self.misses += 1
            return None
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            self.logger.warning(f"Ignoring unreadable cache entry {path}: {e}")
            with self._lock:
                self.misses += 1
            return None
        with self._lock:
            self.hits += 1
        return record

    def put(self, key: str, record: Dict[str, Any]) -> None:
        path = self._path(key)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as f:
                    json.dump(record, f, ensure_ascii=False)
                os.replace(tmp, path)
            except Exception:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

    def __contains__(self, key: str) -> bool:
        return self._path(key).is_file()

    def reset_stats(self) -> None:
        self.hits = 0
        self.misses = 0


def save_vector_store(path: str, keys: Sequence[str], vectors: np.ndarray, model: str) -> None:
    """Write keys and an N x D float64 matrix to a versioned .npz file"""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(keys):
        raise ValueError(f"vector store needs {len(keys)} rows, got shape {matrix.shape}")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(
            f,
            version=np.array(VECTOR_STORE_VERSION),
            model=np.array(model),
            dimension=np.array(matrix.shape[1]),
            keys=np.array(list(keys), dtype=str),
            vectors=matrix,
        )


def load_vector_store(path: str) -> Tuple[List[str], np.ndarray, str]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != VECTOR_STORE_VERSION:
            raise ValueError(f"unsupported vector store version {version} in {path}")
        keys = [str(k) for k in data["keys"]]
        vectors = np.array(data["vectors"], dtype=np.float64)
        model = str(data["model"])
    return keys, vectors, model
