"""
Whole-text embedding baseline and its comparison with the narrative pipeline
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import adjusted_rand_score

from src.core.cache import ContentCache
from src.core.corpus import Corpus
from src.core.embedder import EmbedderConfig, embed_texts
from src.operations.clustering import DROPPED, ClusterModel, select_k
from src.operations.projection import UmapParams, umap_embed
from src.utils.errors import AnalysisError

logger = logging.getLogger(__name__)


@dataclass
class BaselineResult:
    ids: List[str]
    vectors: np.ndarray
    projection: np.ndarray
    model: ClusterModel

    def assignment(self) -> Dict[str, int]:
        return {article_id: int(label) for article_id, label in zip(self.ids, self.model.labels)}


def baseline_whole_text(
    corpus: Corpus,
    embedder_config: EmbedderConfig,
    cache: ContentCache,
    umap_params: Optional[UmapParams] = None,
    k_min: int = 2,
    k_max: int = 40,
    seed: int = 0,
    backend=None,
) -> BaselineResult:
    """One vector per article body, then the same projection and ward selection as the narrative pipeline"""
    if len(corpus) < 3:
        raise AnalysisError("the baseline needs at least 3 articles")
    ids = corpus.ids
    vectors = np.vstack(embed_texts([corpus.get(a).body for a in ids], embedder_config, cache, backend=backend))
    projection = umap_embed(vectors, umap_params or UmapParams(), seed=seed)
    k_max = min(k_max, len(ids) - 1)
    _, model = select_k(projection, k_min=min(k_min, k_max), k_max=k_max)
    logger.info(f"Whole-text baseline: {len(ids)} articles, k={model.k}")
    return BaselineResult(ids, vectors, projection, model)


@dataclass
class PipelineComparison:
    overall_ari: float
    pair_ari: Dict[Tuple[int, int], float] = field(default_factory=dict)
    n_articles: int = 0

    def to_rows(self) -> List[List[str]]:
        rows = [["all", "", str(self.n_articles), f"{self.overall_ari:.6f}"]]
        for (a, b), score in sorted(self.pair_ari.items()):
            rows.append([str(a), str(b), "", f"{score:.6f}"])
        return rows


def compare_pipelines(
    narrative: Mapping[str, int],
    baseline: Mapping[str, int],
    cluster_pairs: Sequence[Tuple[int, int]] = (),
) -> PipelineComparison:
    """Adjusted Rand index between the two labelings, overall and restricted to chosen narrative cluster pairs"""
    shared = sorted(a for a in narrative if a in baseline and narrative[a] != DROPPED)
    if not shared:
        raise AnalysisError("the two labelings share no articles")
    left = [narrative[a] for a in shared]
    right = [baseline[a] for a in shared]
    comparison = PipelineComparison(float(adjusted_rand_score(left, right)), n_articles=len(shared))
    for first, second in cluster_pairs:
        members = [a for a in shared if narrative[a] in (first, second)]
        if not members:
            raise AnalysisError(f"narrative clusters {first} and {second} have no articles")
        comparison.pair_ari[(int(first), int(second))] = float(
            adjusted_rand_score([narrative[a] for a in members], [baseline[a] for a in members])
        )
    return comparison
