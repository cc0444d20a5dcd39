"""
Report tables over clustered actantial models: labels, actor shares, syncretisms, sources, timelines
"""

import logging
from collections import Counter, OrderedDict, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.core.actants import ROLES, ActantialModel, ActantRole, actor_key, role_codes, role_pair_name
from src.core.corpus import Corpus, WeekKey
from src.core.extraction import detect_syncretisms
from src.operations.clustering import DROPPED
from src.utils.errors import AnalysisError

logger = logging.getLogger(__name__)

LABEL_THRESHOLD = 0.20
TABLE_THRESHOLD = 0.05
TABLE_TOP = 3
SHARE_TOLERANCE = 1e-9

Models = Mapping[str, ActantialModel]
Assignment = Mapping[str, int]
ActorShare = Tuple[str, float]
RolePair = Tuple[ActantRole, ActantRole]
ROLE_PAIRS: Tuple[RolePair, ...] = tuple(combinations(ROLES, 2))


class _ActorCounter:
    """Counts actors by normalized key and remembers the raw surface forms seen for each key"""

    def __init__(self, casefold: bool = True):
        self.casefold = casefold
        self.counts: Counter = Counter()
        self.surfaces: Dict[str, Counter] = defaultdict(Counter)

    def add(self, actor: Optional[str]) -> None:
        if not actor:
            return
        key = actor_key(actor, casefold=self.casefold)
        self.counts[key] += 1
        self.surfaces[key][actor] += 1

    def display(self, key: str) -> str:
        forms = self.surfaces[key]
        return min(forms, key=lambda form: (-forms[form], form))

    def ranked(self) -> List[Tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda item: (-item[1], item[0]))


def _clusters(assignment: Assignment) -> "OrderedDict[int, List[str]]":
    members: Dict[int, List[str]] = defaultdict(list)
    for article_id, cluster in assignment.items():
        if cluster != DROPPED:
            members[int(cluster)].append(article_id)
    return OrderedDict((cluster, sorted(members[cluster])) for cluster in sorted(members))


def _models_for(models: Models, article_ids: Iterable[str]) -> List[ActantialModel]:
    missing = [a for a in article_ids if a not in models]
    if missing:
        raise AnalysisError(f"no actantial model for article(s): {', '.join(missing[:5])}")
    return [models[a] for a in article_ids]


def _reaches(share: float, threshold: float) -> bool:
    return share >= threshold - SHARE_TOLERANCE


@dataclass(frozen=True)
class ClusterLabelSpec:
    cluster_id: int
    entries: Tuple[Tuple[str, str], ...]
    label_threshold: float = LABEL_THRESHOLD

    @property
    def label(self) -> str:
        return ", ".join(f"{actor} ({codes})" for actor, codes in self.entries)

    def __str__(self) -> str:
        return self.label or f"cluster {self.cluster_id}"


def _modal_actor(members: Sequence[ActantialModel], role: ActantRole) -> Optional[Tuple[str, str, float]]:
    counter = _ActorCounter()
    for model in members:
        counter.add(model.primary(role))
    if not counter.counts:
        return None
    key, count = counter.ranked()[0]
    return key, counter.display(key), count / len(members)


def label_clusters(models: Models, assignment: Assignment, threshold: float = LABEL_THRESHOLD) -> List[ClusterLabelSpec]:
    """Most common primary actor per role, kept at >= threshold share and grouped by actor"""
    labels = []
    for cluster, article_ids in _clusters(assignment).items():
        members = _models_for(models, article_ids)
        grouped: "OrderedDict[str, Tuple[str, List[ActantRole]]]" = OrderedDict()
        for role in ROLES:
            modal = _modal_actor(members, role)
            if modal is None or not _reaches(modal[2], threshold):
                continue
            key, display, _ = modal
            grouped.setdefault(key, (display, []))[1].append(role)
        entries = tuple((display, role_codes(roles)) for display, roles in grouped.values())
        labels.append(ClusterLabelSpec(cluster, entries, threshold))
    return labels


@dataclass
class ActorFrequencyTable:
    """Top actors per (cluster, role) as (surface form, share of cluster articles)"""

    rows: Dict[Tuple[int, ActantRole], List[ActorShare]] = field(default_factory=dict)
    min_share: float = TABLE_THRESHOLD
    top: int = TABLE_TOP

    def get(self, cluster: int, role: ActantRole) -> List[ActorShare]:
        return self.rows.get((cluster, role), [])

    def to_rows(self) -> List[List[str]]:
        out = []
        for (cluster, role), shares in sorted(self.rows.items(), key=lambda item: (item[0][0], item[0][1].index)):
            for rank, (actor, share) in enumerate(shares, start=1):
                out.append([str(cluster), role.value, str(rank), actor, f"{share:.4f}"])
        return out


def _top_shares(members: Sequence[ActantialModel], role: ActantRole, min_share: float, top: int) -> List[ActorShare]:
    counter = _ActorCounter()
    for model in members:
        counter.add(model.primary(role))
    shares = []
    for key, count in counter.ranked():
        share = count / len(members)
        if not _reaches(share, min_share):
            break
        shares.append((counter.display(key), share))
        if len(shares) == top:
            break
    return shares


def actor_table(models: Models, assignment: Assignment, min_share: float = TABLE_THRESHOLD,
                top: int = TABLE_TOP) -> ActorFrequencyTable:
    table = ActorFrequencyTable(min_share=min_share, top=top)
    for cluster, article_ids in _clusters(assignment).items():
        members = _models_for(models, article_ids)
        for role in ROLES:
            table.rows[(cluster, role)] = _top_shares(members, role, min_share, top)
    return table


@dataclass(frozen=True)
class SyncretismRow:
    pair: RolePair
    count: int
    share: float
    top_actors: Tuple[ActorShare, ...] = ()
    by_source: Tuple[Tuple[str, int], ...] = ()

    @property
    def name(self) -> str:
        return role_pair_name(self.pair)


@dataclass
class SyncretismTable:
    rows: List[SyncretismRow]
    n_articles: int

    def get(self, pair: RolePair) -> SyncretismRow:
        for row in self.rows:
            if row.pair == pair:
                return row
        raise KeyError(role_pair_name(pair))

    def to_rows(self) -> List[List[str]]:
        out = []
        for row in self.rows:
            actors = "; ".join(f"{actor} {share:.2f}" for actor, share in row.top_actors)
            sources = "; ".join(f"{source} {count}" for source, count in row.by_source)
            out.append([row.name, str(row.count), f"{row.share:.4f}", actors, sources])
        return out


def syncretism_report(models: Models, corpus: Optional[Corpus] = None, casefold: bool = True,
                      top: int = TABLE_TOP) -> SyncretismTable:
    """Share of articles per role pair whose primary actors coincide"""
    article_ids = sorted(models)
    counts: Counter = Counter()
    actors: Dict[RolePair, _ActorCounter] = {pair: _ActorCounter(casefold) for pair in ROLE_PAIRS}
    sources: Dict[RolePair, Counter] = {pair: Counter() for pair in ROLE_PAIRS}
    for article_id in article_ids:
        model = models[article_id]
        for pair in detect_syncretisms(model, casefold=casefold):
            counts[pair] += 1
            actors[pair].add(model.primary(pair[0]))
            if corpus is not None:
                sources[pair][corpus.get(article_id).source] += 1
    total = len(article_ids)
    rows = []
    for pair in ROLE_PAIRS:
        count = counts[pair]
        top_actors = tuple(
            (actors[pair].display(key), n / count) for key, n in actors[pair].ranked()[:top]
        ) if count else ()
        by_source = tuple(sorted(sources[pair].items(), key=lambda item: (-item[1], item[0])))
        rows.append(SyncretismRow(pair, count, count / total if total else 0.0, top_actors, by_source))
    rows.sort(key=lambda row: (-row.count, ROLE_PAIRS.index(row.pair)))
    return SyncretismTable(rows, total)


@dataclass
class MissingActantStats:
    overall: Dict[ActantRole, float]
    per_cluster: Dict[int, Dict[ActantRole, float]] = field(default_factory=dict)

    def to_rows(self) -> List[List[str]]:
        out = [["all", role.value, f"{self.overall[role]:.4f}"] for role in ROLES]
        for cluster, shares in self.per_cluster.items():
            out.extend([str(cluster), role.value, f"{shares[role]:.4f}"] for role in ROLES)
        return out


def _missing_shares(members: Sequence[ActantialModel]) -> Dict[ActantRole, float]:
    if not members:
        return {role: 0.0 for role in ROLES}
    return {role: sum(model.is_missing(role) for model in members) / len(members) for role in ROLES}


def missing_actant_stats(models: Models, assignment: Optional[Assignment] = None) -> MissingActantStats:
    """Share of articles with no actor for each role, overall and per cluster"""
    if assignment is None:
        overall_ids = sorted(models)
    else:
        overall_ids = sorted(a for a, cluster in assignment.items() if cluster != DROPPED)
    stats = MissingActantStats(overall=_missing_shares(_models_for(models, overall_ids)))
    if assignment is not None:
        for cluster, article_ids in _clusters(assignment).items():
            stats.per_cluster[cluster] = _missing_shares(_models_for(models, article_ids))
    return stats


def source_shares(assignment: Assignment, corpus: Corpus) -> "OrderedDict[int, OrderedDict[str, float]]":
    """Fraction of each cluster's articles per source; every corpus source appears"""
    sources = corpus.sources
    table: "OrderedDict[int, OrderedDict[str, float]]" = OrderedDict()
    for cluster, article_ids in _clusters(assignment).items():
        counts = Counter(corpus.get(a).source for a in article_ids)
        table[cluster] = OrderedDict((source, counts[source] / len(article_ids)) for source in sources)
    return table


@dataclass
class ComponentTimeline:
    """Weekly article counts per component (and optionally per source or cluster) over the corpus weeks"""

    weeks: List[WeekKey]
    series: "OrderedDict[Tuple, List[int]]"

    def counts(self, key: Tuple) -> "OrderedDict[WeekKey, int]":
        return OrderedDict((week, n) for week, n in zip(self.weeks, self.series[key]) if n)

    def total(self) -> int:
        return sum(sum(values) for values in self.series.values())

    def to_rows(self) -> List[List[str]]:
        return [[*map(str, key), week, str(n)] for key, values in self.series.items()
                for week, n in zip(self.weeks, values)]


def component_timeline(
    assignment: Assignment,
    corpus: Corpus,
    components: Mapping[str, Iterable[int]],
    group_by_source: bool = False,
    per_cluster: bool = False,
) -> ComponentTimeline:
    """Series keys are (component[, cluster][, source])"""
    owner: Dict[int, str] = {}
    members: Dict[str, List[int]] = OrderedDict()
    for name, clusters in components.items():
        members[name] = sorted(set(int(c) for c in clusters))
        for cluster in members[name]:
            if cluster in owner:
                raise AnalysisError(f"cluster {cluster} belongs to both {owner[cluster]!r} and {name!r}")
            owner[cluster] = name
    undated = [article.id for article in corpus if article.week is None]
    if undated:
        raise AnalysisError(f"{len(undated)} article(s) have no publication date, e.g. {undated[0]}")
    weeks = sorted({article.week for article in corpus})
    position = {week: i for i, week in enumerate(weeks)}
    sources = corpus.sources

    series: "OrderedDict[Tuple, List[int]]" = OrderedDict()
    for name, clusters in members.items():
        prefixes = [(name, cluster) for cluster in clusters] if per_cluster else [(name,)]
        for prefix in prefixes:
            keys = [prefix + (source,) for source in sources] if group_by_source else [prefix]
            for key in keys:
                series[key] = [0] * len(weeks)

    for article_id, cluster in assignment.items():
        name = owner.get(int(cluster))
        if name is None or cluster == DROPPED:
            continue
        article = corpus.get(article_id)
        key: Tuple = (name, int(cluster)) if per_cluster else (name,)
        if group_by_source:
            key += (article.source,)
        series[key][position[article.week]] += 1
    return ComponentTimeline(weeks, series)


def top_actors_by_source(models: Models, corpus: Corpus, top: int = TABLE_TOP) -> "OrderedDict[str, Dict[ActantRole, List[ActorShare]]]":
    """Most common primary actors per source and role, shares over the source's articles"""
    by_source: Dict[str, List[ActantialModel]] = defaultdict(list)
    for article_id in sorted(models):
        by_source[corpus.get(article_id).source].append(models[article_id])
    table: "OrderedDict[str, Dict[ActantRole, List[ActorShare]]]" = OrderedDict()
    for source in corpus.sources:
        members = by_source.get(source, [])
        table[source] = {role: _top_shares(members, role, 0.0, top) if members else [] for role in ROLES}
    return table
