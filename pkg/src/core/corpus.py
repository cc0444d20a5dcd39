"""
Corpus loading, keyword filtering and time bucketing
"""

import hashlib
import json
import logging
import statistics
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from src.utils.errors import CorpusError, UserInputError

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("id", "source", "body")
KNOWN_KEYS = ("id", "source", "url", "title", "body", "published_at")

WeekKey = str
TimelineKey = Union[WeekKey, Tuple[WeekKey, str]]


def parse_published_at(value: Any) -> date:
    """Parse an ISO-8601 date or datetime into a UTC calendar date"""
    if isinstance(value, datetime):
        parsed = value
    elif isinstance(value, date):
        return value
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        try:
            parsed = datetime.fromisoformat(text)
        except ValueError:
            return date.fromisoformat(text[:10])
    else:
        raise ValueError(f"not a date: {value!r}")
    if parsed.tzinfo is not None:
        parsed = parsed.astimezone(timezone.utc)
    return parsed.date()


def iso_week(day: date) -> WeekKey:
    year, week, _ = day.isocalendar()
    return f"{year}-W{week:02d}"


@dataclass(frozen=True)
class Article:
    """One document of the corpus"""

    id: str
    source: str
    body: str
    title: str = ""
    url: Optional[str] = None
    published_at: Optional[date] = None
    extra: Dict[str, Any] = field(default_factory=dict, compare=False)
    word_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "word_count", len(self.body.split()))

    @property
    def week(self) -> Optional[WeekKey]:
        return iso_week(self.published_at) if self.published_at else None

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "id": self.id,
            "source": self.source,
            "url": self.url,
            "title": self.title,
            "published_at": self.published_at.isoformat() if self.published_at else None,
            "body": self.body,
        }
        record.update(self.extra)
        return record


@dataclass
class Corpus:
    """Ordered collection of articles with unique ids"""

    articles: List[Article] = field(default_factory=list)
    provenance: str = ""
    issues: List[Tuple[int, str]] = field(default_factory=list)

    def __post_init__(self):
        self._index: Dict[str, int] = {}
        for position, article in enumerate(self.articles):
            if article.id in self._index:
                raise CorpusError(f"duplicate article id {article.id!r}")
            self._index[article.id] = position

    def __iter__(self) -> Iterator[Article]:
        return iter(self.articles)

    def __len__(self) -> int:
        return len(self.articles)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self._index

    def get(self, article_id: str) -> Article:
        return self.articles[self._index[article_id]]

    @property
    def ids(self) -> List[str]:
        return [a.id for a in self.articles]

    @property
    def sources(self) -> List[str]:
        return sorted({a.source for a in self.articles})

    def subset(self, ids: Sequence[str], provenance: Optional[str] = None) -> "Corpus":
        wanted = set(ids)
        return Corpus(
            [a for a in self.articles if a.id in wanted],
            provenance=provenance if provenance is not None else self.provenance,
        )


def _article_from_record(record: Dict[str, Any]) -> Article:
    missing = [key for key in REQUIRED_KEYS if not isinstance(record.get(key), str) or not record.get(key)]
    if missing:
        raise ValueError(f"missing required key(s): {', '.join(missing)}")
    published = record.get("published_at")
    return Article(
        id=record["id"],
        source=record["source"],
        body=record["body"],
        title=record.get("title") or "",
        url=record.get("url"),
        published_at=parse_published_at(published) if published else None,
        extra={k: v for k, v in record.items() if k not in KNOWN_KEYS},
    )


def parse_corpus_text(text: str, provenance: str = "") -> Corpus:
    """Parse JSON-Lines text; bad lines are skipped and collected on Corpus.issues"""
    articles: List[Article] = []
    issues: List[Tuple[int, str]] = []
    first_line: Dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if not isinstance(record, dict):
                raise ValueError("line is not a JSON object")
            article = _article_from_record(record)
        except (ValueError, TypeError) as e:
            issues.append((line_no, str(e)))
            continue
        if article.id in first_line:
            issues.append((line_no, f"duplicate id {article.id!r} (lines {first_line[article.id]} and {line_no})"))
            continue
        first_line[article.id] = line_no
        articles.append(article)
    for line_no, message in issues:
        logger.warning(f"{provenance or 'corpus'} line {line_no}: {message}")
    return Corpus(articles, provenance=provenance, issues=issues)


def load_corpus(path: str, s3_client=None) -> Corpus:
    """Load a JSON-Lines corpus from a local path, an s3:// object, or every .jsonl object under an s3:// prefix/"""
    try:
        if path.startswith("s3://"):
            if s3_client is None:
                from src.core.s3_client import S3Client

                s3_client = S3Client()
            text = s3_client.read_prefix(path) if path.endswith("/") else s3_client.read_text(path)
        else:
            text = Path(path).read_text(encoding="utf-8")
    except Exception as e:
        logger.error(f"Failed to read corpus {path}: {e}")
        raise CorpusError(f"cannot read corpus {path}: {e}") from e
    corpus = parse_corpus_text(text, provenance=path)
    logger.info(f"Loaded {len(corpus)} articles from {path} ({len(corpus.issues)} line issue(s))")
    return corpus


def write_corpus(corpus: Corpus, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for article in corpus:
            f.write(json.dumps(article.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def corpus_digest(corpus: Corpus) -> str:
    digest = hashlib.sha256()
    for article in corpus:
        digest.update(json.dumps(article.to_dict(), ensure_ascii=False, sort_keys=True).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def filter_by_keywords(corpus: Corpus, keywords: Sequence[str]) -> Corpus:
    """Keep articles whose title or body contains any keyword (case-insensitive)"""
    if not keywords:
        raise UserInputError("keyword list must not be empty")
    if any(not isinstance(k, str) or not k.strip() for k in keywords):
        raise UserInputError("keywords must be non-empty strings")
    needles = [k.casefold() for k in keywords]
    kept = []
    for article in corpus:
        haystack = f"{article.title}\n{article.body}".casefold()
        if any(needle in haystack for needle in needles):
            kept.append(article)
    logger.info(f"Keyword filter kept {len(kept)} of {len(corpus)} articles")
    return Corpus(kept, provenance=f"{corpus.provenance} | keywords={list(keywords)}")


def weekly_counts(corpus: Corpus, group_by_source: bool = False) -> "OrderedDict[TimelineKey, int]":
    """Article counts per ISO week, optionally split by source"""
    undated = [a.id for a in corpus if a.published_at is None]
    if undated:
        raise UserInputError(f"{len(undated)} article(s) lack published_at, e.g. {undated[0]!r}")
    counts: Counter = Counter()
    for article in corpus:
        key: TimelineKey = (article.week, article.source) if group_by_source else article.week
        counts[key] += 1
    return OrderedDict(sorted(counts.items()))


def word_count_stats(corpus: Corpus) -> Dict[str, Dict[str, float]]:
    """Article count, mean and median word count, and corpus share per source"""
    by_source: Dict[str, List[int]] = {}
    for article in corpus:
        by_source.setdefault(article.source, []).append(article.word_count)
    total = len(corpus)
    stats = {}
    for source in sorted(by_source):
        counts = by_source[source]
        stats[source] = {
            "articles": len(counts),
            "mean_words": statistics.fmean(counts),
            "median_words": float(statistics.median(counts)),
            "share": len(counts) / total,
        }
    return stats
