import numpy as np
import pytest

from src.core.actants import ROLES, ActantRole
from src.operations.narrative import (
    build_embedding_matrix,
    build_narrative_embedding,
    load_embedding_matrix,
    role_vectors,
    save_embedding_matrix,
)
from src.operations.reduction import (
    POOLED,
    fit_pca,
    fit_reducers,
    fit_svd,
    load_reducers,
    reduce,
    reduce_many,
    save_reducers,
)
from src.utils.errors import ReductionError
from tests.conftest import make_model


@pytest.mark.parametrize("seed", range(20))
def test_svd_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(int(rng.integers(12, 40)), int(rng.integers(10, 30))))
    d = int(rng.integers(1, 10))
    reducer = fit_svd(matrix, d)
    _, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    assert np.allclose(reducer.singular_values, sigma[:d])
    assert np.allclose(reducer.components.T @ reducer.components, np.eye(d), atol=1e-10)
    for k in range(d):
        column = reducer.components[:, k]
        assert np.allclose(np.abs(column), np.abs(vt[k]), atol=1e-8)
        assert column[np.argmax(np.abs(column))] > 0
    projected = reduce_many(matrix, reducer)
    assert np.allclose(np.linalg.norm(projected, axis=0), sigma[:d])
    residual = np.linalg.norm(matrix - projected @ reducer.components.T)
    assert residual == pytest.approx(np.sqrt(np.sum(sigma[d:] ** 2)), rel=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_pca_is_centered_svd(seed):
    matrix = np.random.default_rng(seed).normal(loc=3.0, size=(30, 12))
    pca = fit_pca(matrix, 4)
    centered = fit_svd(matrix - matrix.mean(axis=0), 4)
    assert np.array_equal(pca.components, centered.components)
    assert np.array_equal(reduce_many(matrix, pca), reduce_many(matrix - matrix.mean(axis=0), centered))
    assert np.allclose(reduce_many(matrix, pca).mean(axis=0), 0.0, atol=1e-10)


def test_rank_one_data_is_degenerate():
    matrix = np.outer(np.arange(1.0, 9.0), np.eye(5)[0])
    reducer = fit_svd(matrix, 3)
    assert reducer.degenerate
    assert np.allclose(reducer.components[:, 0], np.eye(5)[0])
    assert reducer.singular_values[1:].tolist() == [0.0, 0.0]


def test_reduce_is_linear(rng):
    reducer = fit_svd(rng.normal(size=(20, 10)), 3)
    u, v = rng.normal(size=10), rng.normal(size=10)
    assert np.allclose(reduce(2.0 * u - v, reducer), 2.0 * reduce(u, reducer) - reduce(v, reducer))
    assert np.allclose(reduce(np.zeros(10), reducer), 0.0)
    with pytest.raises(ReductionError):
        reduce(np.zeros(9), reducer)


def test_fit_errors(rng):
    with pytest.raises(ReductionError, match="choose d <= 3"):
        fit_svd(rng.normal(size=(3, 10)), 5)
    with pytest.raises(ReductionError):
        fit_svd(rng.normal(size=(10, 4)), 5)
    vectors = {role: rng.normal(size=(6, 8)) for role in ROLES[:5]}
    with pytest.raises(ReductionError, match="Opponent"):
        fit_reducers(vectors, 2)


def test_pooled_scope_shares_one_reducer(rng):
    vectors = {role: rng.normal(size=(6, 8)) for role in ROLES}
    reducers = fit_reducers(vectors, 2, scope=POOLED)
    assert len({id(r) for r in reducers.values()}) == 1
    per_role = fit_reducers(vectors, 2)
    assert per_role[ActantRole.HELPER].scope == "Helper"
    assert per_role[ActantRole.HELPER].role is ActantRole.HELPER


def test_reducers_file_round_trip(tmp_path, rng):
    reducers = fit_reducers({role: rng.normal(size=(6, 8)) for role in ROLES}, 3)
    reducers[ActantRole.OBJECT] = fit_pca(rng.normal(size=(6, 8)), 3, scope="Object")
    path = str(tmp_path / "reducers.json")
    save_reducers(path, reducers)
    loaded = load_reducers(path)
    sample = rng.normal(size=8)
    for role in ROLES:
        assert np.allclose(reduce(sample, loaded[role]), reduce(sample, reducers[role]))
    assert loaded[ActantRole.OBJECT].mean is not None


def _lookup(names, dimension, rng):
    return {name: rng.normal(size=dimension) for name in names}


def test_missing_actants_become_zero_blocks(rng):
    reducers = fit_reducers({role: rng.normal(size=(10, 16)) for role in ROLES}, 4)
    vectors = {ActantRole.SUBJECT: rng.normal(size=16), ActantRole.OBJECT: rng.normal(size=16)}
    embedding = build_narrative_embedding(vectors, reducers)
    assert embedding.concat.shape == (24,)
    assert np.allclose(embedding.block(ActantRole.SUBJECT), reduce(vectors[ActantRole.SUBJECT], reducers[ActantRole.SUBJECT]))
    for role in ROLES[2:]:
        assert not embedding.block(role).any()


def test_subject_object_swap_is_visible(rng):
    lookup = _lookup(["Israel", "Hamas", "UN"], 16, rng)
    models = {
        "a": make_model(subject="Israel", object="Hamas", sender="UN"),
        "b": make_model(subject="Hamas", object="Israel", sender="UN"),
    }
    reducers = fit_reducers({role: rng.normal(size=(10, 16)) for role in ROLES}, 4, scope=POOLED)
    ids, matrix = build_embedding_matrix(models, lookup, reducers)
    assert ids == ["a", "b"]
    assert not np.allclose(matrix[0], matrix[1])
    assert np.allclose(matrix[0, :4], matrix[1, 4:8])
    assert np.allclose(matrix[0, 8:12], matrix[1, 8:12])


def test_role_vectors_keep_repeats(rng):
    lookup = _lookup(["Israel", "Hamas"], 8, rng)
    models = {
        "a": make_model(subject="Israel", object="Hamas"),
        "b": make_model(subject="Israel"),
    }
    stacked = role_vectors(models, lookup)
    assert stacked[ActantRole.SUBJECT].shape == (2, 8)
    assert stacked[ActantRole.OBJECT].shape == (1, 8)
    assert stacked[ActantRole.HELPER].shape == (0, 8)


def test_embedding_matrix_files(tmp_path, rng):
    matrix = rng.normal(size=(3, 6))
    save_embedding_matrix(str(tmp_path / "m.npy"), str(tmp_path / "ids.json"), ["x", "y", "z"], matrix)
    ids, loaded = load_embedding_matrix(str(tmp_path / "m.npy"), str(tmp_path / "ids.json"))
    assert ids == ["x", "y", "z"]
    assert np.array_equal(loaded, matrix)
    (tmp_path / "short.json").write_text('["x"]')
    with pytest.raises(ReductionError):
        load_embedding_matrix(str(tmp_path / "m.npy"), str(tmp_path / "short.json"))
