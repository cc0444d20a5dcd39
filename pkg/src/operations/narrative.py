"""
Narrative-structured embeddings: six reduced actant blocks, concatenated in role order
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.actants import ROLES, ActantialModel, ActantRole
from src.operations.reduction import SvdReducer, reduce
from src.utils.errors import ReductionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NarrativeEmbedding:
    blocks: Tuple[np.ndarray, ...]

    @property
    def concat(self) -> np.ndarray:
        return np.concatenate(self.blocks)

    def block(self, role: ActantRole) -> np.ndarray:
        return self.blocks[role.index]


def build_narrative_embedding(
    actant_vectors: Mapping[ActantRole, Optional[np.ndarray]],
    reducers: Mapping[ActantRole, SvdReducer],
) -> NarrativeEmbedding:
    """Reduce each present actant; missing actants become zero blocks"""
    missing = [role.value for role in ROLES if role not in reducers]
    if missing:
        raise ReductionError(f"no reducer for role(s): {', '.join(missing)}")
    blocks = []
    for role in ROLES:
        vector = actant_vectors.get(role)
        reducer = reducers[role]
        blocks.append(reduce(vector, reducer) if vector is not None else np.zeros(reducer.dim))
    return NarrativeEmbedding(tuple(blocks))


def role_vectors(
    models: Mapping[str, ActantialModel], lookup: Mapping[str, np.ndarray]
) -> Dict[ActantRole, np.ndarray]:
    """Primary-actor vectors per role across the corpus (non-unique), for fitting reducers"""
    stacked: Dict[ActantRole, List[np.ndarray]] = {role: [] for role in ROLES}
    for model in models.values():
        for role in ROLES:
            primary = model.primary(role)
            if primary is not None:
                stacked[role].append(lookup[primary])
    dimension = len(next(iter(lookup.values()))) if lookup else 0
    return {
        role: np.vstack(rows) if rows else np.zeros((0, dimension))
        for role, rows in stacked.items()
    }


def build_embedding_matrix(
    models: Mapping[str, ActantialModel],
    lookup: Mapping[str, np.ndarray],
    reducers: Mapping[ActantRole, SvdReducer],
) -> Tuple[List[str], np.ndarray]:
    """Article ids and the N x 6d narrative matrix, in the order of `models`"""
    ids = list(models)
    rows = []
    for article_id in ids:
        model = models[article_id]
        vectors = {role: lookup[model.primary(role)] if model.primary(role) is not None else None for role in ROLES}
        rows.append(build_narrative_embedding(vectors, reducers).concat)
    width = sum(reducers[role].dim for role in ROLES)
    matrix = np.vstack(rows) if rows else np.zeros((0, width))
    logger.info(f"Built {matrix.shape[0]} narrative embeddings of dimension {width}")
    return ids, matrix


def save_embedding_matrix(matrix_path: str, ids_path: str, ids: Sequence[str], matrix: np.ndarray) -> None:
    Path(matrix_path).parent.mkdir(parents=True, exist_ok=True)
    np.save(matrix_path, np.asarray(matrix, dtype=np.float64), allow_pickle=False)
    Path(ids_path).write_text(json.dumps(list(ids)), encoding="utf-8")


def load_embedding_matrix(matrix_path: str, ids_path: str) -> Tuple[List[str], np.ndarray]:
    matrix = np.load(matrix_path, allow_pickle=False)
    ids = json.loads(Path(ids_path).read_text(encoding="utf-8"))
    if len(ids) != matrix.shape[0]:
        raise ReductionError(f"{ids_path} lists {len(ids)} ids for {matrix.shape[0]} rows")
    return ids, matrix
