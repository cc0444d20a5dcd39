"""
Deterministic artifact files and the hash-chained run manifest
"""

import csv
import hashlib
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.utils.errors import StorageError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
STATUS_RAN = "ran"
STATUS_UP_TO_DATE = "up-to-date"


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def params_digest(params: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(params).encode("utf-8")).hexdigest()


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_json(path: str, data: Any) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_jsonl(path: str, records: Iterable[Mapping[str, Any]]) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(canonical_json(record) + "\n")


def read_jsonl(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              header: Sequence[str] = ()) -> None:
    """CSV preceded by '# ' comment lines describing the run"""
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in header:
            f.write(f"# {line}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    """Columns and rows, skipping '#' header lines"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def hash_files(paths: Iterable[str], root: str) -> Dict[str, str]:
    """Relative path -> SHA-256 for every existing file"""
    hashes = {}
    for path in paths:
        if os.path.isfile(path):
            hashes[os.path.relpath(path, root).replace(os.sep, "/")] = sha256_file(path)
    return hashes


class RunManifest:
    """Append-only list of command runs; each entry hashes the one before it"""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.path = os.path.join(out_dir, MANIFEST_FILE)
        self.logger = logging.getLogger(__name__)
        self.entries: List[Dict[str, Any]] = []
        if os.path.exists(self.path):
            try:
                self.entries = read_json(self.path)["entries"]
            except (OSError, ValueError, KeyError) as e:
                raise StorageError(f"corrupt run manifest {self.path}: {e}") from e

    def last(self, command: str) -> Optional[Dict[str, Any]]:
        for entry in reversed(self.entries):
            if entry["command"] == command:
                return entry
        return None

    def is_up_to_date(self, command: str, digest: str, inputs: Sequence[str], outputs: Sequence[str]) -> bool:
        """Same parameters, same input bytes and untouched outputs as the last run of `command`"""
        previous = self.last(command)
        if previous is None or previous["params"] != digest:
            return False
        if any(not os.path.isfile(path) for path in outputs):
            return False
        return (previous["inputs"] == hash_files(inputs, self.out_dir)
                and previous["outputs"] == hash_files(outputs, self.out_dir))

    def record(self, command: str, digest: str, inputs: Sequence[str], outputs: Sequence[str],
               seed: int, status: str = STATUS_RAN) -> Dict[str, Any]:
        previous = self.entries[-1] if self.entries else None
        entry = {
            "seq": len(self.entries) + 1,
            "command": command,
            "status": status,
            "params": digest,
            "inputs": hash_files(inputs, self.out_dir),
            "outputs": hash_files(outputs, self.out_dir),
            "seed": seed,
            "prev": params_digest(previous) if previous else None,
        }
        self.entries.append(entry)
        write_json(self.path, {"entries": self.entries})
        self.logger.debug(f"Manifest entry {entry['seq']}: {command} ({status})")
        return entry

    def verify_chain(self) -> bool:
        for previous, entry in zip(self.entries, self.entries[1:]):
            if entry["prev"] != params_digest(previous):
                return False
        return True
