"""
Ward agglomerative clustering, silhouette model selection and manual post-processing
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

from src.utils.errors import ClusteringError

logger = logging.getLogger(__name__)

DROPPED = -1


@dataclass(frozen=True)
class Dendrogram:
    """N-1 merges (cluster_a, cluster_b, merge_cost, new_size); new clusters get ids N, N+1, ..."""

    merges: np.ndarray
    n_points: int

    def __len__(self) -> int:
        return self.merges.shape[0]


@dataclass(frozen=True)
class ClusterModel:
    k: int
    labels: np.ndarray
    silhouette: Optional[float]
    scores: Dict[int, float] = field(default_factory=dict)
    post_ops: Tuple[Dict[str, Any], ...] = ()

    @property
    def active(self) -> np.ndarray:
        return self.labels != DROPPED

    def cluster_sizes(self) -> Dict[int, int]:
        ids, counts = np.unique(self.labels[self.active], return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "labels": [int(label) for label in self.labels],
            "silhouette": self.silhouette,
            "scores": {str(k): v for k, v in sorted(self.scores.items())},
            "post_ops": list(self.post_ops),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClusterModel":
        return cls(
            k=int(data["k"]),
            labels=np.asarray(data["labels"], dtype=np.int64),
            silhouette=data.get("silhouette"),
            scores={int(k): float(v) for k, v in data.get("scores", {}).items()},
            post_ops=tuple(data.get("post_ops", [])),
        )


def _points(points: np.ndarray) -> np.ndarray:
    data = np.asarray(points, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    return data


def ward_cluster(points: np.ndarray) -> Dendrogram:
    """Lance-Williams Ward agglomeration with cached row minima; ties go to the smallest (i, j)"""
    data = _points(points)
    n = data.shape[0]
    if n < 2:
        raise ClusteringError("ward clustering needs at least 2 points")
    dist = squareform(pdist(data))
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    cluster_ids = np.arange(n)
    row_value = np.full(n, np.inf)
    row_arg = np.full(n, -1, dtype=np.int64)

    def refresh(row: int) -> None:
        tail = dist[row, row + 1:]
        if tail.size == 0 or not active[row]:
            row_value[row], row_arg[row] = np.inf, -1
            return
        column = int(np.argmin(tail))
        row_value[row], row_arg[row] = tail[column], row + 1 + column

    for row in range(n):
        refresh(row)

    merges = np.zeros((n - 1, 4))
    for step in range(n - 1):
        i = int(np.argmin(row_value))
        j = int(row_arg[i])
        cost = row_value[i]
        n_i, n_j = sizes[i], sizes[j]
        first, second = sorted((int(cluster_ids[i]), int(cluster_ids[j])))
        merges[step] = (first, second, cost, n_i + n_j)

        others = active.copy()
        others[[i, j]] = False
        n_k = sizes[others]
        squared = ((n_i + n_k) * dist[i, others] ** 2 + (n_j + n_k) * dist[j, others] ** 2
                   - n_k * cost ** 2) / (n_i + n_j + n_k)
        updated = np.sqrt(np.maximum(squared, 0.0))
        dist[i, others] = updated
        dist[others, i] = updated
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        active[j] = False
        sizes[i] = n_i + n_j
        cluster_ids[i] = n + step

        stale = np.flatnonzero(active & ((row_arg == i) | (row_arg == j)))
        refresh(j)
        refresh(i)
        for row in stale:
            refresh(int(row))
        lower = np.flatnonzero(active[:i])
        lower = lower[(row_arg[lower] != i) & (row_arg[lower] != j)]
        candidate = dist[lower, i]
        better = (candidate < row_value[lower]) | ((candidate == row_value[lower]) & (i < row_arg[lower]))
        row_value[lower[better]] = candidate[better]
        row_arg[lower[better]] = i
    return Dendrogram(merges, n)


def _renumber(groups: List[List[int]], n: int) -> np.ndarray:
    """Labels 0..k-1 by descending size, ties by smallest member id"""
    ordered = sorted(groups, key=lambda members: (-len(members), min(members)))
    labels = np.empty(n, dtype=np.int64)
    for label, members in enumerate(ordered):
        labels[members] = label
    return labels


def cut(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Undo the last k-1 merges"""
    n = dendrogram.n_points
    if not 1 <= k <= n:
        raise ClusteringError(f"k must lie in [1, {n}], got {k}")
    members: Dict[int, List[int]] = {i: [i] for i in range(n)}
    for step in range(n - k):
        first, second = int(dendrogram.merges[step, 0]), int(dendrogram.merges[step, 1])
        members[n + step] = members.pop(first) + members.pop(second)
    return _renumber(list(members.values()), n)


def silhouette_from_distances(distances: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette; singleton clusters contribute 0"""
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ClusteringError("silhouette needs at least 2 clusters")
    index = np.searchsorted(clusters, labels)
    onehot = np.zeros((labels.size, clusters.size))
    onehot[np.arange(labels.size), index] = 1.0
    counts = onehot.sum(axis=0)
    sums = distances @ onehot
    own_count = counts[index]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = sums[np.arange(labels.size), index] / (own_count - 1.0)
        means = sums / counts
    means[np.arange(labels.size), index] = np.inf
    b = means.min(axis=1)
    denominator = np.maximum(a, b)
    scores = np.zeros(labels.size)
    valid = (own_count > 1) & (denominator > 0)
    scores[valid] = (b[valid] - a[valid]) / denominator[valid]
    return float(scores.mean())


def silhouette(points: np.ndarray, labels: np.ndarray) -> float:
    """Silhouette over non-dropped points"""
    data = _points(points)
    labels = np.asarray(labels)
    keep = labels != DROPPED
    return silhouette_from_distances(squareform(pdist(data[keep])), labels[keep])


def select_k(points: np.ndarray, k_min: int = 2, k_max: int = 40) -> Tuple[int, ClusterModel]:
    """Best dendrogram cut by silhouette; ties go to the smaller k"""
    data = _points(points)
    n = data.shape[0]
    if k_min < 2 or k_min > k_max:
        raise ClusteringError(f"invalid k range [{k_min}, {k_max}]")
    if k_max >= n:
        raise ClusteringError(f"k_max ({k_max}) must be below the number of points ({n})")
    dendrogram = ward_cluster(data)
    distances = squareform(pdist(data))
    scores: Dict[int, float] = {}
    best_k, best_score, best_labels = k_min, -np.inf, None
    for k in range(k_min, k_max + 1):
        labels = cut(dendrogram, k)
        score = silhouette_from_distances(distances, labels)
        scores[k] = score
        if score > best_score:
            best_k, best_score, best_labels = k, score, labels
    logger.info(f"Selected k={best_k} (silhouette {best_score:.4f}) from k in [{k_min}, {k_max}]")
    return best_k, ClusterModel(k=best_k, labels=best_labels, silhouette=best_score, scores=scores)


def _check_id(model: ClusterModel, cluster_id: int) -> None:
    if not 0 <= cluster_id < model.k:
        raise ClusteringError(f"cluster id {cluster_id} outside [0, {model.k})")


def _rescore(model: ClusterModel, points: np.ndarray, labels: np.ndarray, k: int, op: Dict[str, Any]) -> ClusterModel:
    try:
        score: Optional[float] = silhouette(points, labels)
    except ClusteringError:
        logger.warning(f"Silhouette undefined after {op}: fewer than 2 clusters remain")
        score = None
    return replace(model, k=k, labels=labels, silhouette=score, post_ops=model.post_ops + (op,))


def drop_cluster(model: ClusterModel, cluster_id: int, points: np.ndarray) -> ClusterModel:
    """Exclude a cluster from reports; higher ids shift down by one"""
    _check_id(model, cluster_id)
    labels = model.labels.copy()
    labels[labels == cluster_id] = DROPPED
    labels[labels > cluster_id] -= 1
    op = {"op": "drop", "cluster": cluster_id, "articles": int(np.sum(model.labels == cluster_id))}
    logger.info(f"Dropped cluster {cluster_id} ({op['articles']} articles)")
    return _rescore(model, points, labels, model.k - 1, op)


def merge_clusters(model: ClusterModel, id_a: int, id_b: int, points: np.ndarray) -> ClusterModel:
    """Merge two clusters into the smaller id; ids above the larger shift down by one"""
    _check_id(model, id_a)
    _check_id(model, id_b)
    if id_a == id_b:
        raise ClusteringError("cannot merge a cluster with itself")
    keep, gone = sorted((id_a, id_b))
    labels = model.labels.copy()
    labels[labels == gone] = keep
    labels[labels > gone] -= 1
    op = {"op": "merge", "clusters": [keep, gone]}
    logger.info(f"Merged cluster {gone} into {keep}")
    return _rescore(model, points, labels, model.k - 1, op)


def apply_post_ops(model: ClusterModel, ops: List[Dict[str, Any]], points: np.ndarray) -> ClusterModel:
    """Replay drop/merge operations in order"""
    for op in ops:
        kind = op.get("op")
        if kind == "drop":
            model = drop_cluster(model, int(op["cluster"]), points)
        elif kind == "merge":
            first, second = op["clusters"]
            model = merge_clusters(model, int(first), int(second), points)
        else:
            raise ClusteringError(f"unknown post-processing operation {op!r}")
    return model
