"""
Pipeline stages over the output directory: each command reads its upstream artifacts and writes its own
"""

import logging
import os
from collections import Counter
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.actants import ROLES
from src.core.cache import ContentCache, load_vector_store, save_vector_store
from src.core.corpus import Corpus, filter_by_keywords, load_corpus, weekly_counts, word_count_stats, write_corpus
from src.core.embedder import embed_texts
from src.core.extraction import ExtractionRecord, Extractor
from src.core.llm_client import create_chat_client
from src.core.s3_client import S3Client
from src.operations.analysis import (
    actor_table,
    component_timeline,
    label_clusters,
    missing_actant_stats,
    source_shares,
    syncretism_report,
    top_actors_by_source,
)
from src.operations.baseline import baseline_whole_text, compare_pipelines
from src.operations.clustering import DROPPED, ClusterModel, apply_post_ops, select_k
from src.operations.dim_study import actor_similarity_study, dim_study
from src.operations.narrative import build_embedding_matrix, load_embedding_matrix, role_vectors, save_embedding_matrix
from src.operations.projection import umap_embed
from src.operations.reduction import fit_reducers, fit_svd, save_reducers
from src.ui.console import ConsoleReporter
from src.ui.plots import plot_clusters, plot_timeline
from src.ui.themes import ThemeManager
from src.utils.config import RunConfig
from src.utils.errors import ClusteringError, MissingArtifactError, UserInputError
from src.utils.io import (
    STATUS_RAN,
    STATUS_UP_TO_DATE,
    RunManifest,
    params_digest,
    read_csv,
    read_json,
    read_jsonl,
    sha256_file,
    write_csv,
    write_json,
    write_jsonl,
)

COMMANDS = ("ingest", "extract", "embed", "build", "project", "cluster", "post", "report", "baseline", "dimstudy")
# stages backed by a content cache always run so their hit rate is reported
CACHED_COMMANDS = ("extract", "embed")

CORPUS_FILE = "corpus.jsonl"
CORPUS_STATS_FILE = "corpus_stats.csv"
EXTRACTIONS_FILE = "extractions.jsonl"
VECTORS_FILE = "actant_vectors.npz"
REDUCERS_FILE = "reducers.json"
MATRIX_FILE = "narrative_embeddings.npy"
MATRIX_IDS_FILE = "narrative_ids.json"
PROJECTION_FILE = "projection.csv"
CLUSTER_MODEL_FILE = "cluster_model.json"
CLUSTERS_FILE = "clusters.csv"
K_SCORES_FILE = "k_scores.csv"
FINAL_MODEL_FILE = "final_model.json"
REPORTS_DIR = "reports"


class NarrativePipeline:
    """Runs pipeline commands against one output directory"""

    def __init__(self, run: RunConfig, reporter: Optional[ConsoleReporter] = None, s3_client: Optional[S3Client] = None):
        self.run = run
        self.out_dir = run.output_dir
        self.theme = ThemeManager(run.theme).initialize_colors()
        self.reporter = reporter or ConsoleReporter(self.theme)
        self.s3_client = s3_client
        self.logger = logging.getLogger(__name__)
        os.makedirs(self.out_dir, exist_ok=True)
        self.manifest = RunManifest(self.out_dir)

    def path(self, *parts: str) -> str:
        return os.path.join(self.out_dir, *parts)

    def _s3(self) -> S3Client:
        if self.s3_client is None:
            self.s3_client = S3Client(self.run.aws_profile)
        return self.s3_client

    def _require(self, name: str, command: str) -> str:
        path = self.path(name)
        if not os.path.isfile(path):
            raise MissingArtifactError(name, command)
        return path

    def _header(self, extra: Sequence[str] = ()) -> List[str]:
        umap = " ".join(f"{key}={value}" for key, value in sorted(self.run.umap.to_dict().items()))
        return [
            f"umap {umap} (library defaults unless configured)",
            f"embedding dimension {self.run.embedder.dimension}, svd dimension {self.run.svd_dim} per role "
            f"({self.run.fit_scope}), narrative dimension {6 * self.run.svd_dim}",
            f"thresholds label={self.run.label_threshold:g} table={self.run.table_threshold:g}",
            f"seed {self.run.seed}",
            *extra,
        ]

    def _stage(self, command: str, inputs: List[str], outputs: List[str], work, extra_params: Any = None) -> Dict[str, Any]:
        """Run `work` unless the manifest shows identical inputs, parameters and outputs"""
        digest = params_digest({"command": command, "config": self.run.digest_params(), "extra": extra_params})
        if command not in CACHED_COMMANDS and self.manifest.is_up_to_date(command, digest, inputs, outputs):
            self.logger.info(f"{command}: inputs unchanged, outputs up to date")
            self.manifest.record(command, digest, inputs, outputs, self.run.seed, STATUS_UP_TO_DATE)
            return {"status": STATUS_UP_TO_DATE}
        summary = work()
        self.manifest.record(command, digest, inputs, outputs, self.run.seed, STATUS_RAN)
        summary["status"] = STATUS_RAN
        self.reporter.summary(command, summary)
        return summary

    def _corpus(self) -> Corpus:
        return load_corpus(self._require(CORPUS_FILE, "ingest"))

    def _records(self) -> List[ExtractionRecord]:
        return [ExtractionRecord.from_dict(r) for r in read_jsonl(self._require(EXTRACTIONS_FILE, "extract"))]

    def _models(self):
        return {r.article_id: r.model for r in self._records() if r.ok}

    # ingest

    def ingest(self) -> Dict[str, Any]:
        outputs = [self.path(CORPUS_FILE), self.path(CORPUS_STATS_FILE)]
        inputs = [] if self.run.corpus_path.startswith("s3://") else [self.run.corpus_path]

        def work():
            raw = load_corpus(self.run.corpus_path, s3_client=self._s3() if self.run.corpus_path.startswith("s3://") else None)
            corpus = filter_by_keywords(raw, self.run.keywords)
            write_corpus(corpus, outputs[0])
            stats = word_count_stats(corpus)
            write_csv(outputs[1], ["source", "articles", "mean_words", "median_words", "share"],
                      [[s, v["articles"], f"{v['mean_words']:.2f}", f"{v['median_words']:.1f}", f"{v['share']:.4f}"]
                       for s, v in stats.items()],
                      header=[f"keywords {', '.join(self.run.keywords)}"])
            return {"loaded": len(raw), "kept": len(corpus), "line_issues": len(raw.issues)}

        return self._stage("ingest", inputs, outputs, work)

    # extract

    def extract(self) -> Dict[str, Any]:
        corpus_path = self._require(CORPUS_FILE, "ingest")
        output = self.path(EXTRACTIONS_FILE)

        def work():
            corpus = load_corpus(corpus_path)
            cache = ContentCache(self.path("cache", "chat"))
            chat = self.run.chat
            extractor = Extractor(create_chat_client(chat), cache, chat.model_id, chat.max_chars, chat.concurrency)
            records = extractor.extract_corpus(corpus)
            write_jsonl(output, [r.to_dict() for r in records])
            counts = Counter(r.status for r in records)
            return {
                "articles": len(records),
                "ok": counts["ok"],
                "parse_error": counts["parse_error"],
                "endpoint_error": counts["endpoint_error"],
                "cache_hits": cache.hits,
                "requests": extractor.requests,
                "truncated": sum(r.truncated for r in records),
            }

        return self._stage("extract", [corpus_path], [output], work)

    # embed

    def embed(self) -> Dict[str, Any]:
        extractions = self._require(EXTRACTIONS_FILE, "extract")
        output = self.path(VECTORS_FILE)

        def work():
            models = self._models()
            actors = sorted({a for m in models.values() for a in m.primaries.values() if a is not None})
            if not actors:
                raise UserInputError("no actors to embed; every extraction failed")
            cache = ContentCache(self.path("cache", "embed"))
            vectors = embed_texts(actors, self.run.embedder, cache)
            save_vector_store(output, actors, np.vstack(vectors), self.run.embedder.model_id)
            return {"actors": len(actors), "cache_hits": cache.hits, "model": self.run.embedder.model_id}

        return self._stage("embed", [extractions], [output], work)

    # build

    def build(self) -> Dict[str, Any]:
        extractions = self._require(EXTRACTIONS_FILE, "extract")
        vectors_path = self._require(VECTORS_FILE, "embed")
        outputs = [self.path(REDUCERS_FILE), self.path(MATRIX_FILE), self.path(MATRIX_IDS_FILE)]

        def work():
            lookup = self._lookup(vectors_path)
            models = self._models()
            reducers = fit_reducers(role_vectors(models, lookup), self.run.svd_dim, self.run.fit_scope)
            save_reducers(outputs[0], reducers)
            ids, matrix = build_embedding_matrix(models, lookup, reducers)
            save_embedding_matrix(outputs[1], outputs[2], ids, matrix)
            degenerate = sorted({r.scope for r in reducers.values() if r.degenerate})
            return {"articles": len(ids), "dimension": matrix.shape[1], "degenerate": ", ".join(degenerate) or "none"}

        return self._stage("build", [extractions, vectors_path], outputs, work)

    def _lookup(self, vectors_path: str) -> Dict[str, np.ndarray]:
        keys, vectors, model = load_vector_store(vectors_path)
        if model != self.run.embedder.model_id:
            raise UserInputError(f"{VECTORS_FILE} was embedded with {model!r} but the config names "
                                 f"{self.run.embedder.model_id!r}; run `embed` again")
        return dict(zip(keys, vectors))

    # project

    def project(self) -> Dict[str, Any]:
        matrix_path = self._require(MATRIX_FILE, "build")
        ids_path = self._require(MATRIX_IDS_FILE, "build")
        output = self.path(PROJECTION_FILE)

        def work():
            ids, matrix = load_embedding_matrix(matrix_path, ids_path)
            layout = umap_embed(matrix, self.run.umap, seed=self.run.seed)
            columns = ["id"] + [f"c{i}" for i in range(layout.shape[1])]
            write_csv(output, columns, [[a, *(repr(float(v)) for v in row)] for a, row in zip(ids, layout)],
                      header=self._header())
            return {"articles": len(ids), "components": layout.shape[1]}

        return self._stage("project", [matrix_path, ids_path], [output], work)

    def _projection(self) -> Tuple[List[str], np.ndarray]:
        _, rows = read_csv(self._require(PROJECTION_FILE, "project"))
        ids = [row[0] for row in rows]
        return ids, np.array([[float(v) for v in row[1:]] for row in rows], dtype=np.float64)

    # cluster

    def cluster(self) -> Dict[str, Any]:
        projection = self._require(PROJECTION_FILE, "project")
        outputs = [self.path(CLUSTER_MODEL_FILE), self.path(CLUSTERS_FILE), self.path(K_SCORES_FILE)]

        def work():
            ids, points = self._projection()
            k_max = min(self.run.k_max, len(ids) - 1)
            if k_max < self.run.k_min:
                raise ClusteringError(f"{len(ids)} articles are too few for k_min={self.run.k_min}")
            k, model = select_k(points, self.run.k_min, k_max)
            write_json(outputs[0], {"ids": ids, **model.to_dict()})
            write_csv(outputs[1], ["id", "cluster"], [[a, int(c)] for a, c in zip(ids, model.labels)],
                      header=self._header([f"k {k} silhouette {model.silhouette:.6f}"]))
            write_csv(outputs[2], ["k", "silhouette"], [[kk, f"{s:.6f}"] for kk, s in sorted(model.scores.items())],
                      header=self._header())
            self.reporter.k_scores(model.scores, k)
            return {"articles": len(ids), "k": k, "silhouette": f"{model.silhouette:.4f}"}

        return self._stage("cluster", [projection], outputs, work)

    def _base_model(self) -> Tuple[List[str], ClusterModel]:
        data = read_json(self._require(CLUSTER_MODEL_FILE, "cluster"))
        return data["ids"], ClusterModel.from_dict(data)

    # post

    def post(self, drops: Sequence[int] = (), merges: Sequence[Tuple[int, int]] = ()) -> Dict[str, Any]:
        """Replay config post_ops, then merges and drops whose ids refer to the clusters after the config ops"""
        base_path = self._require(CLUSTER_MODEL_FILE, "cluster")
        projection = self._require(PROJECTION_FILE, "project")
        output = self.path(FINAL_MODEL_FILE)
        cli_ops = [{"op": "merge", "clusters": [int(a), int(b)]} for a, b in merges]
        cli_ops += [{"op": "drop", "cluster": int(c)} for c in drops]

        def work():
            ids, base = self._base_model()
            _, points = self._projection()
            model = apply_post_ops(base, list(self.run.post_ops), points)
            model = apply_post_ops(model, translate_ops(cli_ops, model.k), points)
            write_json(output, {"base": sha256_file(base_path), "ids": ids, **model.to_dict()})
            score = "undefined" if model.silhouette is None else f"{model.silhouette:.4f}"
            return {"operations": len(model.post_ops), "k": model.k, "silhouette": score}

        return self._stage("post", [base_path, projection], [output], work, extra_params=cli_ops)

    def _final_model(self) -> Tuple[List[str], ClusterModel]:
        """The post-processed model when it belongs to the current clustering, otherwise config ops replayed"""
        ids, base = self._base_model()
        final_path = self.path(FINAL_MODEL_FILE)
        if os.path.isfile(final_path):
            data = read_json(final_path)
            if data.get("base") == sha256_file(self.path(CLUSTER_MODEL_FILE)):
                return data["ids"], ClusterModel.from_dict(data)
            self.logger.warning(f"{FINAL_MODEL_FILE} belongs to an earlier clustering; replaying config post_ops")
        if self.run.post_ops:
            _, points = self._projection()
            base = apply_post_ops(base, list(self.run.post_ops), points)
        return ids, base

    # report

    def report(self, publish_uri: Optional[str] = None) -> Dict[str, Any]:
        base_path = self._require(CLUSTER_MODEL_FILE, "cluster")
        inputs = [self._require(CORPUS_FILE, "ingest"), self._require(EXTRACTIONS_FILE, "extract"),
                  self._require(PROJECTION_FILE, "project"), base_path, self.path(FINAL_MODEL_FILE)]
        reports = self.path(REPORTS_DIR)
        names = ["labels.csv", "actor_table.csv", "syncretism.csv", "source_shares.csv", "missing_actants.csv",
                 "timeline.csv", "timeline_clusters.csv", "top_actors_by_source.csv", "word_counts.csv",
                 "weekly_counts.csv", "clusters.svg", "timeline.svg", "summary.json"]
        outputs = [os.path.join(reports, name) for name in names]
        uri = publish_uri or self.run.publish_uri

        def work():
            summary = self._write_reports(reports)
            if uri:
                uploaded = self._s3().upload_directory(reports, uri)
                summary["published"] = f"{len(uploaded)} file(s) to {uri}"
            return summary

        return self._stage("report", inputs, outputs, work, extra_params=uri)

    def _write_reports(self, reports: str) -> Dict[str, Any]:
        corpus = self._corpus()
        all_models = self._models()
        ids, model = self._final_model()
        proj_ids, points = self._projection()
        if proj_ids != ids:
            raise UserInputError(f"{PROJECTION_FILE} and {CLUSTER_MODEL_FILE} disagree; run `cluster` again")
        assignment = {a: int(c) for a, c in zip(ids, model.labels)}
        models = {a: all_models[a] for a in ids}
        analyzed = {a: m for a, m in models.items() if assignment[a] != DROPPED}
        score = "undefined" if model.silhouette is None else f"{model.silhouette:.6f}"
        header = self._header([f"k {model.k} silhouette {score} post_ops {len(model.post_ops)}"])
        out = lambda name: os.path.join(reports, name)  # noqa: E731

        labels = label_clusters(models, assignment, self.run.label_threshold)
        sizes = model.cluster_sizes()
        write_csv(out("labels.csv"), ["cluster", "articles", "label"],
                  [[s.cluster_id, sizes[s.cluster_id], s.label] for s in labels], header=header)
        write_csv(out("actor_table.csv"), ["cluster", "role", "rank", "actor", "share"],
                  actor_table(models, assignment, self.run.table_threshold).to_rows(), header=header)
        write_csv(out("syncretism.csv"), ["pair", "count", "share", "top_actors", "by_source"],
                  syncretism_report(analyzed, corpus).to_rows(), header=header)
        shares = source_shares(assignment, corpus)
        write_csv(out("source_shares.csv"), ["cluster", "source", "share"],
                  [[c, s, f"{v:.4f}"] for c, row in shares.items() for s, v in row.items()], header=header)
        write_csv(out("missing_actants.csv"), ["scope", "role", "share"],
                  missing_actant_stats(models, assignment).to_rows(), header=header)

        components = {name: list(c) for name, c in self.run.components.items()} or {"all": sorted(sizes)}
        dated = corpus.subset(ids)
        timeline = component_timeline(assignment, dated, components, group_by_source=True)
        write_csv(out("timeline.csv"), ["component", "source", "week", "articles"], timeline.to_rows(), header=header)
        per_cluster = component_timeline(assignment, dated, components, per_cluster=True)
        write_csv(out("timeline_clusters.csv"), ["component", "cluster", "week", "articles"],
                  per_cluster.to_rows(), header=header)
        top = top_actors_by_source(analyzed, corpus)
        write_csv(out("top_actors_by_source.csv"), ["source", "role", "rank", "actor", "share"],
                  [[source, role.value, rank, actor, f"{share:.4f}"]
                   for source, by_role in top.items() for role in ROLES
                   for rank, (actor, share) in enumerate(by_role[role], start=1)], header=header)
        stats = word_count_stats(corpus)
        write_csv(out("word_counts.csv"), ["source", "articles", "mean_words", "median_words", "share"],
                  [[s, v["articles"], f"{v['mean_words']:.2f}", f"{v['median_words']:.1f}", f"{v['share']:.4f}"]
                   for s, v in stats.items()], header=header)
        write_csv(out("weekly_counts.csv"), ["week", "source", "articles"],
                  [[week, source, n] for (week, source), n in weekly_counts(corpus, group_by_source=True).items()],
                  header=header)

        plot_clusters(out("clusters.svg"), points, model.labels, {s.cluster_id: s.label for s in labels}, self.theme)
        plot_timeline(out("timeline.svg"), timeline, self.theme)
        write_json(out("summary.json"), {
            "articles": len(corpus),
            "analyzed": len(ids),
            "dropped": int(np.sum(~model.active)),
            "k": model.k,
            "silhouette": model.silhouette,
            "post_ops": list(model.post_ops),
            "labels": {str(s.cluster_id): s.label for s in labels},
            "header": header,
        })
        self.reporter.cluster_labels(labels, sizes)
        return {"clusters": model.k, "analyzed": len(ids), "reports": reports}

    # baseline

    def baseline(self) -> Dict[str, Any]:
        corpus_path = self._require(CORPUS_FILE, "ingest")
        base_path = self._require(CLUSTER_MODEL_FILE, "cluster")
        reports = self.path(REPORTS_DIR)
        outputs = [os.path.join(reports, "baseline_clusters.csv"), os.path.join(reports, "baseline_comparison.csv")]

        def work():
            corpus = load_corpus(corpus_path)
            ids, model = self._final_model()
            cache = ContentCache(self.path("cache", "embed"))
            result = baseline_whole_text(corpus, self.run.embedder, cache, self.run.umap,
                                         self.run.k_min, self.run.k_max, seed=self.run.seed)
            header = self._header([f"baseline k {result.model.k} silhouette {result.model.silhouette:.6f}"])
            write_csv(outputs[0], ["id", "cluster"], [[a, int(c)] for a, c in zip(result.ids, result.model.labels)],
                      header=header)
            narrative = {a: int(c) for a, c in zip(ids, model.labels)}
            comparison = compare_pipelines(narrative, result.assignment(), self.run.cluster_pairs)
            write_csv(outputs[1], ["cluster_a", "cluster_b", "articles", "adjusted_rand_index"],
                      comparison.to_rows(), header=header)
            return {"baseline_k": result.model.k, "overall_ari": f"{comparison.overall_ari:.4f}"}

        return self._stage("baseline", [corpus_path, base_path, self.path(FINAL_MODEL_FILE)], outputs, work)

    # dimstudy

    def dimstudy(self) -> Dict[str, Any]:
        extractions = self._require(EXTRACTIONS_FILE, "extract")
        vectors_path = self._require(VECTORS_FILE, "embed")
        reports = self.path(REPORTS_DIR)
        outputs = [os.path.join(reports, "dim_study.csv"), os.path.join(reports, "actor_similarity.csv")]

        def work():
            lookup = self._lookup(vectors_path)
            models = self._models()
            actors = [m.primary(role) for m in models.values() for role in ROLES if m.primary(role) is not None]
            if len(actors) > self.run.dimstudy_max_vectors:
                rng = np.random.default_rng(self.run.seed)
                chosen = np.sort(rng.choice(len(actors), self.run.dimstudy_max_vectors, replace=False))
                actors = [actors[i] for i in chosen]
            pooled = np.vstack([lookup[a] for a in actors])
            result = dim_study(pooled, self.run.dimstudy_dims, self.run.dimstudy_methods,
                               self.run.umap, seed=self.run.seed)
            header = self._header([f"pooled actant vectors {pooled.shape[0]}, full-dimension similarity "
                                   f"{result.baseline:.6f}"])
            write_csv(outputs[0], ["method", "dimension", "average_similarity"], result.to_rows(), header=header)

            key = [actor for actor, _ in Counter(actors).most_common(self.run.key_actors)]
            d = min(self.run.svd_dim, pooled.shape[0], pooled.shape[1])
            study = actor_similarity_study(key, np.vstack([lookup[a] for a in key]), fit_svd(pooled, d))
            rows = [[a, b, f"{study.full[i, j]:.6f}", f"{study.reduced[i, j]:.6f}", f"{study.difference[i, j]:.6f}"]
                    for i, a in enumerate(key) for j, b in enumerate(key) if i < j]
            write_csv(outputs[1], ["actor_a", "actor_b", "full", "reduced", "difference"], rows, header=header)
            self.reporter.dim_study(result)
            return {"vectors": pooled.shape[0], "max_abs_difference": f"{study.max_abs_difference():.4f}"}

        return self._stage("dimstudy", [extractions, vectors_path], outputs, work)


def translate_ops(ops: Sequence[Dict[str, Any]], k: int) -> List[Dict[str, Any]]:
    """Rewrite ops whose ids all refer to one starting numbering of k clusters into ops applied in sequence"""
    translated: List[Dict[str, Any]] = []
    current: Dict[int, Optional[int]] = {cluster: cluster for cluster in range(k)}

    def now(cluster: int) -> int:
        if cluster not in current:
            raise UserInputError(f"cluster id {cluster} outside [0, {k})")
        value = current[cluster]
        if value is None:
            raise UserInputError(f"cluster {cluster} was already removed by an earlier operation")
        return value

    def shift(removed: int, merged_into: Optional[int]) -> None:
        for original, value in current.items():
            if value is None:
                continue
            if value == removed:
                current[original] = merged_into
            elif value > removed:
                current[original] = value - 1

    for op in ops:
        if op["op"] == "drop":
            target = now(op["cluster"])
            translated.append({"op": "drop", "cluster": target})
            shift(target, None)
        else:
            a, b = (now(c) for c in op["clusters"])
            keep, gone = sorted((a, b))
            translated.append({"op": "merge", "clusters": [keep, gone]})
            shift(gone, keep)
    return translated
