import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from src.core.actants import ROLES
from src.core.cache import ContentCache
from src.core.corpus import Corpus
from src.core.embedder import EmbedderConfig, embed_texts
from src.operations.baseline import baseline_whole_text, compare_pipelines
from src.operations.clustering import select_k
from src.operations.dim_study import dim_study
from src.operations.narrative import build_embedding_matrix, role_vectors
from src.operations.projection import UmapParams, umap_embed
from src.operations.reduction import fit_reducers
from tests.conftest import make_article, make_model

pytestmark = pytest.mark.slow

UMAP = UmapParams(n_neighbors=10, n_epochs=200)


def _narrative_matrix(models, config, cache, d=8):
    actors = sorted({a for m in models.values() for a in m.primaries.values() if a is not None})
    lookup = dict(zip(actors, embed_texts(actors, config, cache)))
    reducers = fit_reducers(role_vectors(models, lookup), d)
    return build_embedding_matrix(models, lookup, reducers)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gaussian_blobs_are_recovered(seed):
    rng = np.random.default_rng(seed)
    centres = rng.normal(scale=10.0, size=(3, 204))
    points = np.vstack([centre + rng.normal(size=(30, 204)) for centre in centres])
    truth = np.repeat([0, 1, 2], 30)
    layout = umap_embed(points, UMAP, seed=seed)
    k, model = select_k(layout, 2, 10)
    assert k == 3
    assert adjusted_rand_score(truth, model.labels) >= 0.95


def _role_swap_corpus():
    models, articles, truth = {}, [], {}
    for i in range(20):
        helper, opponent = f"helper {i}", f"opponent {i}"
        body = f"Report {i} on the fighting near the border crossing and talks in the capital."
        for group, (su, ob, se, re) in enumerate([("Israel", "Hamas", "United States", "Gaza"),
                                                   ("Hamas", "Israel", "Gaza", "United States")]):
            article_id = f"g{group}-{i:02d}"
            models[article_id] = make_model(subject=su, object=ob, sender=se, receiver=re,
                                            helper=helper, opponent=opponent)
            articles.append(make_article(article_id, body=body))
            truth[article_id] = group
    return models, Corpus(articles), truth


def test_role_swap_separates_narratives_but_not_whole_text(tmp_path):
    models, corpus, truth = _role_swap_corpus()
    config = EmbedderConfig(mode="hash", dimension=64, seed=5, concurrency=1)
    cache = ContentCache(str(tmp_path / "cache"))
    ids, matrix = _narrative_matrix(models, config, cache)
    _, model = select_k(umap_embed(matrix, UMAP, seed=3), 2, 6)
    narrative = {a: int(c) for a, c in zip(ids, model.labels)}
    assert adjusted_rand_score([truth[a] for a in ids], model.labels) >= 0.9

    baseline = baseline_whole_text(corpus, config, cache, UMAP, 2, 6, seed=3)
    baseline_labels = baseline.assignment()
    assert adjusted_rand_score([truth[a] for a in baseline.ids], baseline.model.labels) <= 0.1
    assert compare_pipelines(narrative, baseline_labels).overall_ari <= 0.1


def test_articles_without_helper_or_opponent_form_an_island(tmp_path):
    rng = np.random.default_rng(11)
    models = {}
    for i in range(50):
        lacking = i % 5 == 0
        models[f"a{i:02d}"] = make_model(
            subject="protesters", object="ceasefire", sender="students", receiver="university",
            helper=None if lacking else f"ally {rng.integers(8)}",
            opponent=None if lacking else f"rival {rng.integers(8)}",
        )
    config = EmbedderConfig(mode="hash", dimension=64, seed=2, anisotropy=0.7, concurrency=1)
    ids, matrix = _narrative_matrix(models, config, ContentCache(str(tmp_path)))
    lacking = np.array([models[a].is_missing(ROLES[4]) for a in ids])
    assert not matrix[lacking][:, 32:].any()

    _, model = select_k(umap_embed(matrix, UMAP, seed=4), 2, 10)
    island = np.bincount(model.labels[lacking]).argmax()
    members = model.labels == island
    assert lacking[members].mean() >= 0.9
    assert members[lacking].mean() >= 0.9


def test_dimension_study_reproduces_the_qualitative_findings(tmp_path):
    rng = np.random.default_rng(8)
    names = [f"{first} {second}" for first in ("Israeli", "Palestinian", "American", "Egyptian", "Qatari", "Iranian")
             for second in ("officials", "civilians", "soldiers", "hostages", "students", "diplomats",
                            "journalists", "aid workers", "protesters", "leaders", "families", "negotiators",
                            "doctors", "police", "settlers", "refugees", "ministers", "militants", "voters", "clerics")]
    actors = [names[i] for i in rng.integers(len(names), size=500)]
    config = EmbedderConfig(mode="hash", dimension=256, seed=0, anisotropy=0.3, concurrency=1)
    vectors = np.vstack(embed_texts(actors, config, ContentCache(str(tmp_path))))
    result = dim_study(vectors, dims=[2, 8, 34], umap_params=UMAP, seed=0)
    for dim in (2, 8, 34):
        assert result.get("pca", dim) < result.get("svd", dim)
    assert result.get("umap", 34) > result.get("svd", 34)
