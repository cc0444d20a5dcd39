import numpy as np
import pytest
from scipy.spatial.distance import pdist

from src.operations.projection import (
    UmapParams,
    find_ab_params,
    fuzzy_graph,
    knn,
    smooth_knn_dist,
    snap_to_grid,
    spectral_layout,
    umap_embed,
)
from src.utils.errors import ProjectionError


def test_knn_excludes_self_and_breaks_ties_by_index():
    points = np.array([[0.0], [1.0], [-1.0], [3.0]])
    result = knn(points, 2)
    assert result.indices[0].tolist() == [1, 2]
    assert result.distances[0].tolist() == [1.0, 1.0]
    assert result.indices[3].tolist() == [1, 0]
    with pytest.raises(ProjectionError):
        knn(points, 4)


def test_smooth_knn_hits_target(rng):
    distances = np.sort(rng.uniform(0.5, 3.0, size=(10, 6)), axis=1)
    rho, sigma, degenerate = smooth_knn_dist(distances, np.log2(6))
    assert not degenerate.any()
    sums = np.exp(-np.maximum(distances - rho[:, None], 0.0) / sigma[:, None]).sum(axis=1)
    assert np.allclose(sums, np.log2(6), atol=1e-3)
    assert np.array_equal(rho, distances[:, 0])


def test_identical_distances_are_degenerate():
    _, sigma, degenerate = smooth_knn_dist(np.ones((2, 3)), np.log2(3))
    assert degenerate.all()
    assert sigma.tolist() == [1.0, 1.0]


def test_fuzzy_graph_is_symmetric_with_unit_nearest_weights(rng):
    graph = fuzzy_graph(knn(rng.normal(size=(30, 4)), 5))
    dense = graph.weights.toarray()
    assert np.allclose(dense, dense.T)
    assert dense.max() <= 1.0 + 1e-12
    assert np.all(np.diag(dense) == 0.0)
    assert np.allclose(dense.max(axis=1), 1.0)


def test_ab_params_for_default_min_dist():
    a, b = find_ab_params(1.0, 0.1)
    assert a == pytest.approx(1.577, rel=2e-2)
    assert b == pytest.approx(0.895, rel=2e-2)


def test_spectral_layout_needs_connected_graph(rng):
    left = rng.normal(size=(10, 2))
    points = np.vstack([left, left + 1000.0])
    graph = fuzzy_graph(knn(points, 3))
    assert spectral_layout(graph, 2) is None


def test_params_problems():
    assert UmapParams().problems(n_points=100) == []
    problems = UmapParams(n_neighbors=1, min_dist=1.0, n_components=4, n_epochs=0, metric="l1").problems(n_points=50)
    assert len(problems) == 5
    assert "n_neighbors (15)" in UmapParams().problems(n_points=10)[0]


def test_umap_is_seeded(rng):
    points = np.vstack([rng.normal(size=(20, 8)), rng.normal(size=(20, 8)) + 6.0])
    params = UmapParams(n_neighbors=8, n_epochs=60)
    first = umap_embed(points, params, seed=7)
    assert first.shape == (40, 2)
    assert np.array_equal(first, umap_embed(points, params, seed=7))
    assert not np.array_equal(first, umap_embed(points, params, seed=8))
    with pytest.raises(ProjectionError):
        umap_embed(points, UmapParams(n_neighbors=40))


def test_knn_matches_brute_force(rng):
    points = rng.normal(size=(50, 5))
    result = knn(points, 10)
    for i in range(50):
        scan = sorted((float(np.sqrt(np.sum((points[i] - points[j]) ** 2))), j) for j in range(50) if j != i)[:10]
        assert result.indices[i].tolist() == [j for _, j in scan]
        assert np.allclose(result.distances[i], [d for d, _ in scan])


def test_snap_to_grid_ignores_translation(rng):
    points = rng.normal(size=(60, 10))
    snapped = snap_to_grid(points)
    assert np.array_equal(snapped, snap_to_grid(points + 3.7))
    assert np.allclose(snapped, points - points.mean(axis=0), atol=1e-8)
    assert np.array_equal(snap_to_grid(np.ones((4, 2))), np.zeros((4, 2)))


def test_shifted_input_gives_the_same_layout(rng):
    points = rng.normal(size=(60, 10))
    params = UmapParams(n_neighbors=10, n_epochs=100)
    first = umap_embed(points, params, seed=3)
    shifted = umap_embed(points + 3.7, params, seed=3)
    assert np.array_equal(pdist(first), pdist(shifted))


def test_layout_keeps_blob_neighbourhoods(rng):
    centers = rng.normal(scale=10.0, size=(3, 20))
    points = np.vstack([center + rng.normal(size=(30, 20)) for center in centers])
    layout = umap_embed(points, UmapParams(n_neighbors=15, n_epochs=200), seed=0)
    before, after = knn(points, 15).indices, knn(layout, 15).indices
    overlap = [len(set(a) & set(b)) / len(set(a) | set(b)) for a, b in zip(before, after)]
    assert np.mean(overlap) >= 0.3
