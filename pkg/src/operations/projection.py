"""
UMAP projection: exact k-NN, fuzzy simplicial graph and seeded SGD layout
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numba
import numpy as np
import scipy.sparse
from scipy.optimize import curve_fit
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh
from scipy.spatial.distance import cdist

from src.utils.errors import ProjectionError

logger = logging.getLogger(__name__)

SPREAD = 1.0
NEGATIVE_SAMPLE_RATE = 5
SMOOTH_K_ITERATIONS = 64
SMOOTH_K_TOLERANCE = 1e-5
METRICS = ("euclidean", "cosine")
DENSE_EIGEN_LIMIT = 2000
KNN_CHUNK = 1024
SNAP_BITS = 30


@dataclass(frozen=True)
class UmapParams:
    n_neighbors: int = 15
    min_dist: float = 0.1
    n_components: int = 2
    n_epochs: int = 500
    metric: str = "euclidean"

    def problems(self, n_points: Optional[int] = None, max_components: Optional[int] = 3) -> List[str]:
        found = []
        if self.n_neighbors < 2:
            found.append("umap.n_neighbors must be >= 2")
        if n_points is not None and self.n_neighbors >= n_points:
            found.append(f"umap.n_neighbors ({self.n_neighbors}) must be below the number of points ({n_points})")
        if not 0.0 <= self.min_dist < SPREAD:
            found.append(f"umap.min_dist must lie in [0, {SPREAD})")
        if self.n_components < 1 or (max_components is not None and self.n_components > max_components):
            found.append(f"umap.n_components must lie in [1, {max_components}]")
        if self.n_epochs < 1:
            found.append("umap.n_epochs must be >= 1")
        if self.metric not in METRICS:
            found.append(f"umap.metric must be one of {METRICS}")
        return found

    def to_dict(self) -> Dict:
        record = asdict(self)
        record.update(spread=SPREAD, negative_sample_rate=NEGATIVE_SAMPLE_RATE)
        return record


@dataclass
class KnnResult:
    indices: np.ndarray
    distances: np.ndarray

    @property
    def k(self) -> int:
        return self.indices.shape[1]


@dataclass
class FuzzyGraph:
    weights: scipy.sparse.csr_matrix
    rho: np.ndarray
    sigma: np.ndarray
    degenerate: np.ndarray

    @property
    def n_points(self) -> int:
        return self.weights.shape[0]


def knn(points: np.ndarray, k: int, metric: str = "euclidean") -> KnnResult:
    """Exact k nearest neighbours, self excluded, ties to the smaller index"""
    data = np.asarray(points, dtype=np.float64)
    n = data.shape[0]
    if k >= n:
        raise ProjectionError(f"k={k} must be below the number of points ({n})")
    if k < 1:
        raise ProjectionError("k must be >= 1")
    if metric not in METRICS:
        raise ProjectionError(f"unsupported metric {metric!r}")
    indices = np.empty((n, k), dtype=np.int64)
    distances = np.empty((n, k), dtype=np.float64)
    for start in range(0, n, KNN_CHUNK):
        stop = min(start + KNN_CHUNK, n)
        with np.errstate(invalid="ignore", divide="ignore"):
            block = cdist(data[start:stop], data, metric=metric)
        # cosine distance to a zero vector is undefined; treat it as orthogonal
        block[np.isnan(block)] = 1.0
        block[np.arange(stop - start), np.arange(start, stop)] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(block, order, axis=1)
    return KnnResult(indices, distances)


def smooth_knn_dist(distances: np.ndarray, target: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point rho and sigma so that sum(exp(-max(0, d - rho) / sigma)) = target"""
    n = distances.shape[0]
    rho = distances[:, 0].copy()
    offsets = np.maximum(distances - rho[:, None], 0.0)
    degenerate = np.all(offsets == 0.0, axis=1)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    mid = np.ones(n)
    done = degenerate.copy()
    for _ in range(SMOOTH_K_ITERATIONS):
        active = ~done
        if not active.any():
            break
        psum = np.exp(-offsets[active] / mid[active, None]).sum(axis=1)
        converged = np.abs(psum - target) < SMOOTH_K_TOLERANCE
        too_wide = psum > target
        rows = np.flatnonzero(active)
        hi[rows[too_wide]] = mid[rows[too_wide]]
        lo[rows[~too_wide]] = mid[rows[~too_wide]]
        finite = np.isfinite(hi[rows])
        mid[rows] = np.where(finite, (lo[rows] + hi[rows]) / 2.0, mid[rows] * 2.0)
        # keep the sigma that met the tolerance
        mid[rows[converged]] = np.where(too_wide[converged], hi[rows[converged]], lo[rows[converged]])
        done[rows[converged]] = True
    mid[degenerate] = 1.0
    if degenerate.any():
        logger.warning(f"{int(degenerate.sum())} point(s) have identical neighbour distances; sigma set to 1.0")
    return rho, mid, degenerate


def fuzzy_graph(knn_result: KnnResult, target: Optional[float] = None) -> FuzzyGraph:
    """Symmetrized fuzzy union W = A + A^T - A*A^T of the directed membership graph"""
    indices, distances = knn_result.indices, knn_result.distances
    n, k = indices.shape
    target = np.log2(k) if target is None else target
    rho, sigma, degenerate = smooth_knn_dist(distances, target)
    weights = np.exp(-np.maximum(distances - rho[:, None], 0.0) / sigma[:, None])
    directed = scipy.sparse.csr_matrix(
        (weights.ravel(), (np.repeat(np.arange(n), k), indices.ravel())), shape=(n, n)
    )
    transpose = directed.T.tocsr()
    symmetric = (directed + transpose - directed.multiply(transpose)).tocsr()
    symmetric.eliminate_zeros()
    symmetric.sort_indices()
    return FuzzyGraph(symmetric, rho, sigma, degenerate)


def find_ab_params(spread: float, min_dist: float) -> Tuple[float, float]:
    """Least-squares fit of 1 / (1 + a x^(2b)) to the offset exponential membership curve"""

    def curve(x, a, b):
        return 1.0 / (1.0 + a * x ** (2 * b))

    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(curve, xv, yv)
    return float(params[0]), float(params[1])


def _fix_column_signs(vectors: np.ndarray) -> np.ndarray:
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def spectral_layout(graph: FuzzyGraph, n_components: int) -> Optional[np.ndarray]:
    """Eigenvectors of the normalized Laplacian, or None when not feasible"""
    n = graph.n_points
    if n_components + 1 >= n:
        return None
    n_parts, _ = connected_components(graph.weights, directed=False)
    if n_parts > 1:
        logger.info(f"Graph has {n_parts} connected components; using random initialisation")
        return None
    degrees = np.asarray(graph.weights.sum(axis=1)).ravel()
    inv_sqrt = scipy.sparse.diags(1.0 / np.sqrt(degrees))
    laplacian = scipy.sparse.identity(n) - inv_sqrt @ graph.weights @ inv_sqrt
    k = n_components + 1
    try:
        if n <= DENSE_EIGEN_LIMIT:
            eigenvalues, eigenvectors = np.linalg.eigh(laplacian.toarray())
        else:
            eigenvalues, eigenvectors = eigsh(
                laplacian, k, which="SM", v0=np.ones(n), tol=1e-4, maxiter=n * 5
            )
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as e:
        logger.warning(f"Spectral initialisation failed ({e}); using random initialisation")
        return None
    order = np.argsort(eigenvalues, kind="stable")[1:k]
    return _fix_column_signs(eigenvectors[:, order])


def initial_layout(graph: FuzzyGraph, n_components: int, rng: np.random.Generator) -> Tuple[np.ndarray, str]:
    spectral = spectral_layout(graph, n_components)
    if spectral is not None:
        expansion = 10.0 / np.abs(spectral).max()
        layout = spectral * expansion + rng.normal(scale=0.0001, size=spectral.shape)
        mode = "spectral"
    else:
        layout = rng.uniform(low=-10.0, high=10.0, size=(graph.n_points, n_components))
        mode = "random"
    span = layout.max(axis=0) - layout.min(axis=0)
    span[span == 0.0] = 1.0
    return 10.0 * (layout - layout.min(axis=0)) / span, mode


def make_epochs_per_sample(weights: np.ndarray, n_epochs: int) -> np.ndarray:
    result = -1.0 * np.ones(weights.shape[0], dtype=np.float64)
    n_samples = n_epochs * (weights / weights.max())
    result[n_samples > 0] = float(n_epochs) / n_samples[n_samples > 0]
    return result


@numba.njit(cache=True)
def _clip(value):
    if value > 4.0:
        return 4.0
    if value < -4.0:
        return -4.0
    return value


@numba.njit(cache=True)
def _sgd_layout(embedding, head, tail, n_vertices, epochs_per_sample, a, b, n_epochs, negative_sample_rate, seed):
    np.random.seed(seed)
    dim = embedding.shape[1]
    epochs_per_negative_sample = epochs_per_sample / negative_sample_rate
    epoch_of_next_negative_sample = epochs_per_negative_sample.copy()
    epoch_of_next_sample = epochs_per_sample.copy()
    alpha = 1.0
    for n in range(n_epochs):
        for i in range(epochs_per_sample.shape[0]):
            if epoch_of_next_sample[i] > n:
                continue
            j = head[i]
            k = tail[i]
            dist_squared = 0.0
            for d in range(dim):
                diff = embedding[j, d] - embedding[k, d]
                dist_squared += diff * diff
            if dist_squared > 0.0:
                grad_coeff = -2.0 * a * b * dist_squared ** (b - 1.0) / (a * dist_squared ** b + 1.0)
            else:
                grad_coeff = 0.0
            for d in range(dim):
                grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[k, d]))
                embedding[j, d] += grad_d * alpha
                embedding[k, d] -= grad_d * alpha
            epoch_of_next_sample[i] += epochs_per_sample[i]

            n_neg_samples = int((n - epoch_of_next_negative_sample[i]) / epochs_per_negative_sample[i])
            for _ in range(n_neg_samples):
                k = np.random.randint(0, n_vertices)
                if k == j:
                    continue
                dist_squared = 0.0
                for d in range(dim):
                    diff = embedding[j, d] - embedding[k, d]
                    dist_squared += diff * diff
                if dist_squared > 0.0:
                    grad_coeff = 2.0 * b / ((0.001 + dist_squared) * (a * dist_squared ** b + 1.0))
                else:
                    grad_coeff = 0.0
                for d in range(dim):
                    if grad_coeff > 0.0:
                        grad_d = _clip(grad_coeff * (embedding[j, d] - embedding[k, d]))
                    else:
                        grad_d = 0.0
                    embedding[j, d] += grad_d * alpha
            epoch_of_next_negative_sample[i] += n_neg_samples * epochs_per_negative_sample[i]
        alpha = 1.0 - float(n + 1) / float(n_epochs)
    return embedding


def optimize_layout(graph: FuzzyGraph, params: UmapParams, seed: int = 0) -> np.ndarray:
    """Seeded single-threaded SGD with 5 negative samples per positive edge"""
    coo = graph.weights.tocoo()
    if coo.nnz == 0:
        raise ProjectionError("cannot lay out an empty graph")
    weights = coo.data.copy()
    keep = weights >= weights.max() / float(params.n_epochs)
    head = coo.row[keep].astype(np.int64)
    tail = coo.col[keep].astype(np.int64)
    weights = weights[keep]
    a, b = find_ab_params(SPREAD, params.min_dist)
    rng = np.random.default_rng(seed)
    embedding, mode = initial_layout(graph, params.n_components, rng)
    logger.debug(f"UMAP layout: {len(weights)} edges, {mode} initialisation, a={a:.4f} b={b:.4f}")
    epochs_per_sample = make_epochs_per_sample(weights, params.n_epochs)
    sgd_seed = int(rng.integers(0, 2**31 - 1))
    return _sgd_layout(
        np.ascontiguousarray(embedding, dtype=np.float64),
        head,
        tail,
        graph.n_points,
        epochs_per_sample,
        a,
        b,
        params.n_epochs,
        float(NEGATIVE_SAMPLE_RATE),
        sgd_seed,
    )


def snap_to_grid(points: np.ndarray) -> np.ndarray:
    """Center on the column mean and round to a power-of-two grid 2^-30 below the data scale

    Translated copies of a point set land on the same coordinates, so their distances are bitwise equal.
    """
    centered = points - points.mean(axis=0)
    scale = float(np.abs(centered).max()) if centered.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return centered
    grid = 2.0 ** (np.floor(np.log2(scale)) - SNAP_BITS)
    return np.round(centered / grid) * grid


def umap_embed(points: np.ndarray, params: UmapParams, seed: int = 0, max_components: Optional[int] = 3) -> np.ndarray:
    """knn -> fuzzy graph -> layout"""
    data = np.asarray(points, dtype=np.float64)
    problems = params.problems(n_points=data.shape[0], max_components=max_components)
    if problems:
        raise ProjectionError("; ".join(problems))
    if params.metric == "euclidean":
        data = snap_to_grid(data)
    neighbours = knn(data, params.n_neighbors, params.metric)
    graph = fuzzy_graph(neighbours)
    layout = optimize_layout(graph, params, seed=seed)
    logger.info(f"Projected {data.shape[0]} points to {params.n_components} dimensions")
    return layout
