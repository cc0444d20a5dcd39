import json

import numpy as np
import pytest

from src.core.actants import ActantialModel
from src.core.corpus import Article, Corpus, parse_published_at
from src.core.embedder import EmbedderConfig


def make_article(article_id, source="aljazeera", body="Gaza news", published_at="2023-10-09", title=""):
    return Article(
        id=article_id,
        source=source,
        body=body,
        title=title,
        published_at=parse_published_at(published_at) if published_at else None,
    )


def make_model(subject=None, object=None, sender=None, receiver=None, helper=None, opponent=None):
    return ActantialModel.from_primaries(
        subject=subject, object=object, sender=sender, receiver=receiver, helper=helper, opponent=opponent
    )


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(records, name="corpus.jsonl"):
        path = tmp_path / name
        path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def small_corpus():
    return Corpus([
        make_article("a1", "aljazeera", "Israel and Gaza", "2023-10-09"),
        make_article("a2", "washingtonpost", "Hamas statement", "2023-10-10"),
        make_article("a3", "aljazeera", "Ceasefire talks", "2023-10-17"),
        make_article("a4", "washingtonpost", "Aid convoy", "2023-10-18"),
    ])


@pytest.fixture
def hash_config():
    return EmbedderConfig(mode="hash", dimension=64, seed=3, concurrency=1, batch_size=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
