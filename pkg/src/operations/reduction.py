"""
Truncated SVD reducers for actant embeddings (micro dimension reduction)
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from src.core.actants import ROLES, ActantRole
from src.utils.errors import ReductionError

logger = logging.getLogger(__name__)

REDUCER_FORMAT = "narrativemap-reducers"
REDUCER_VERSION = 1
POOLED = "pooled"
SCOPES = ("per-role", POOLED)


@dataclass(frozen=True)
class SvdReducer:
    """Top-d right singular vectors; `mean` is set only on the pca path"""

    scope: str
    components: np.ndarray
    singular_values: np.ndarray
    degenerate: bool = False
    mean: Optional[np.ndarray] = None

    @property
    def input_dim(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @property
    def role(self) -> Optional[ActantRole]:
        return ActantRole.from_label(self.scope)


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each column positive"""
    pivots = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[pivots, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def fit_svd(vectors: np.ndarray, d: int, scope: str = POOLED, center: bool = False) -> SvdReducer:
    """Fit a rank-d reducer on the rows of `vectors`; uncentered unless `center`"""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2:
        raise ReductionError(f"expected an N x D matrix, got shape {matrix.shape}")
    n, dim = matrix.shape
    if d < 1:
        raise ReductionError("target dimension must be >= 1")
    if n < d:
        raise ReductionError(f"{scope}: only {n} vectors for target dimension {d}; choose d <= {n}")
    if dim < d:
        raise ReductionError(f"{scope}: input dimension {dim} is below target dimension {d}")
    mean = None
    if center:
        mean = matrix.mean(axis=0)
        matrix = matrix - mean
    _, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    components = _fix_signs(vt[:d].T.copy())
    singular_values = sigma[:d].copy()
    tolerance = (sigma[0] if sigma.size else 0.0) * max(n, dim) * np.finfo(np.float64).eps
    rank = int(np.sum(sigma > tolerance))
    degenerate = rank < d
    if degenerate:
        singular_values[rank:] = 0.0
        logger.warning(f"{scope}: data rank {rank} is below target dimension {d}; padded with zero singular values")
    return SvdReducer(scope=scope, components=components, singular_values=singular_values,
                      degenerate=degenerate, mean=mean)


def fit_pca(vectors: np.ndarray, d: int, scope: str = POOLED) -> SvdReducer:
    """PCA is the SVD of mean-centered data"""
    return fit_svd(vectors, d, scope=scope, center=True)


def reduce(v: np.ndarray, reducer: SvdReducer) -> np.ndarray:
    """Project one vector to the reducer's d coordinates"""
    vector = np.asarray(v, dtype=np.float64)
    if vector.shape != (reducer.input_dim,):
        raise ReductionError(f"vector dimension {vector.shape[-1]} does not match reducer input {reducer.input_dim}")
    if reducer.mean is not None:
        vector = vector - reducer.mean
    return reducer.components.T @ vector


def reduce_many(matrix: np.ndarray, reducer: SvdReducer) -> np.ndarray:
    rows = np.asarray(matrix, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != reducer.input_dim:
        raise ReductionError(f"matrix shape {rows.shape} does not match reducer input {reducer.input_dim}")
    if reducer.mean is not None:
        rows = rows - reducer.mean
    return rows @ reducer.components


def fit_reducers(
    vectors_by_role: Mapping[ActantRole, np.ndarray], d: int, scope: str = "per-role"
) -> Dict[ActantRole, SvdReducer]:
    """One reducer per role, or a single pooled reducer shared by all roles"""
    if scope not in SCOPES:
        raise ReductionError(f"fit scope must be one of {SCOPES}, got {scope!r}")
    missing = [role.value for role in ROLES if role not in vectors_by_role]
    if missing:
        raise ReductionError(f"no vectors for role(s): {', '.join(missing)}")
    if scope == POOLED:
        pooled = fit_svd(np.vstack([vectors_by_role[role] for role in ROLES]), d, scope=POOLED)
        return {role: pooled for role in ROLES}
    return {role: fit_svd(vectors_by_role[role], d, scope=role.value) for role in ROLES}


def _reducer_to_dict(role: ActantRole, reducer: SvdReducer) -> Dict:
    return {
        "role": role.value,
        "scope": reducer.scope,
        "d": reducer.dim,
        "D": reducer.input_dim,
        "components": reducer.components.ravel(order="C").tolist(),
        "singular_values": reducer.singular_values.tolist(),
        "degenerate": reducer.degenerate,
        "mean": reducer.mean.tolist() if reducer.mean is not None else None,
    }


def save_reducers(path: str, reducers: Mapping[ActantRole, SvdReducer]) -> None:
    payload = {
        "format": REDUCER_FORMAT,
        "version": REDUCER_VERSION,
        "reducers": [_reducer_to_dict(role, reducers[role]) for role in ROLES],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_reducers(path: str) -> Dict[ActantRole, SvdReducer]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != REDUCER_FORMAT or payload.get("version") != REDUCER_VERSION:
        raise ReductionError(f"{path} is not a version {REDUCER_VERSION} reducer file")
    reducers = {}
    for entry in payload["reducers"]:
        components = np.asarray(entry["components"], dtype=np.float64).reshape(entry["D"], entry["d"])
        mean = entry.get("mean")
        reducers[ActantRole(entry["role"])] = SvdReducer(
            scope=entry["scope"],
            components=components,
            singular_values=np.asarray(entry["singular_values"], dtype=np.float64),
            degenerate=bool(entry["degenerate"]),
            mean=np.asarray(mean, dtype=np.float64) if mean is not None else None,
        )
    return reducers
