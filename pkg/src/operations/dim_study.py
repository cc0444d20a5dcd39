"""
Similarity-versus-dimension study for SVD, PCA and UMAP reductions
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.embedder import cosine_similarity_matrix, normalize_rows
from src.operations.projection import UmapParams, umap_embed
from src.operations.reduction import SvdReducer, fit_pca, fit_svd, reduce_many
from src.utils.errors import ReductionError

logger = logging.getLogger(__name__)

METHODS = ("svd", "pca", "umap")
DEFAULT_DIMS = (2, 4, 8, 16, 34, 64, 128, 256, 512, 1024)


@dataclass
class DimStudyResult:
    """Average sub-diagonal similarity per (method, dimension); None marks an unavailable entry"""

    dims: Tuple[int, ...]
    methods: Tuple[str, ...]
    full_dimension: int
    baseline: float
    values: Dict[Tuple[str, int], Optional[float]] = field(default_factory=dict)

    def get(self, method: str, dim: int) -> Optional[float]:
        return self.values[(method, dim)]

    def to_rows(self) -> List[List[str]]:
        rows = []
        for method in self.methods:
            for dim in self.dims:
                value = self.values[(method, dim)]
                rows.append([method, str(dim), "unavailable" if value is None else f"{value:.6f}"])
        return rows


def average_subdiagonal_similarity(vectors) -> float:
    """Mean pairwise cosine similarity over i > j; zero vectors contribute 0"""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ReductionError("average similarity needs at least 2 vectors")
    unit = normalize_rows(matrix)
    total = unit.sum(axis=0)
    diagonal = float(np.sum(unit * unit))
    pairs = matrix.shape[0] * (matrix.shape[0] - 1) / 2
    return float((total @ total - diagonal) / 2 / pairs)


def _reduce(method: str, vectors: np.ndarray, dim: int, umap_params: UmapParams, seed: int) -> Optional[np.ndarray]:
    n, full = vectors.shape
    if dim > full or n < dim:
        return None
    if method == "svd":
        return reduce_many(vectors, fit_svd(vectors, dim))
    if method == "pca":
        return reduce_many(vectors, fit_pca(vectors, dim))
    if dim + 1 >= n:
        return None
    params = UmapParams(
        n_neighbors=umap_params.n_neighbors,
        min_dist=umap_params.min_dist,
        n_components=dim,
        n_epochs=umap_params.n_epochs,
        metric=umap_params.metric,
    )
    return umap_embed(vectors, params, seed=seed, max_components=None)


def dim_study(
    vectors,
    dims: Sequence[int] = DEFAULT_DIMS,
    methods: Sequence[str] = METHODS,
    umap_params: Optional[UmapParams] = None,
    seed: int = 0,
) -> DimStudyResult:
    """Every reduction starts from the full-dimension vectors"""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise ReductionError("dimension study needs at least 2 vectors")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ReductionError(f"unknown reduction method(s): {', '.join(unknown)}")
    umap_params = umap_params or UmapParams()
    result = DimStudyResult(
        dims=tuple(int(d) for d in dims),
        methods=tuple(methods),
        full_dimension=matrix.shape[1],
        baseline=average_subdiagonal_similarity(matrix),
    )
    for method in result.methods:
        for dim in result.dims:
            reduced = _reduce(method, matrix, dim, umap_params, seed)
            if reduced is None:
                logger.warning(f"{method} at dimension {dim} is unavailable for {matrix.shape[0]} x {matrix.shape[1]} input")
                result.values[(method, dim)] = None
                continue
            result.values[(method, dim)] = average_subdiagonal_similarity(reduced)
            logger.debug(f"{method}@{dim}: {result.values[(method, dim)]:.4f}")
    logger.info(f"Dimension study over {matrix.shape[0]} vectors; full-dimension similarity {result.baseline:.4f}")
    return result


@dataclass(frozen=True)
class ActorSimilarity:
    actors: Tuple[str, ...]
    full: np.ndarray
    reduced: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.full - self.reduced

    def max_abs_difference(self) -> float:
        return float(np.max(np.abs(self.difference))) if self.actors else 0.0


def actor_similarity_study(actors: Sequence[str], vectors, reducer: SvdReducer) -> ActorSimilarity:
    """Cosine matrices of key actors before and after reduction"""
    matrix = np.asarray(vectors, dtype=np.float64)
    if matrix.shape[0] != len(actors):
        raise ReductionError(f"{len(actors)} actors but {matrix.shape[0]} vectors")
    return ActorSimilarity(
        actors=tuple(actors),
        full=cosine_similarity_matrix(matrix),
        reduced=cosine_similarity_matrix(reduce_many(matrix, reducer)),
    )
