import json

import pytest

from src.core.corpus import (
    Corpus,
    corpus_digest,
    filter_by_keywords,
    load_corpus,
    parse_corpus_text,
    weekly_counts,
    word_count_stats,
    write_corpus,
)
from src.utils.errors import CorpusError, UserInputError
from tests.conftest import make_article


def _record(article_id, body="Gaza today", source="aljazeera", published_at="2023-10-09", **extra):
    return {"id": article_id, "source": source, "body": body, "published_at": published_at, **extra}


def test_load_counts_words(write_jsonl):
    path = write_jsonl([_record("a"), _record("b", body="a b c"), _record("c")])
    corpus = load_corpus(path)
    assert len(corpus) == 3
    assert corpus.get("b").word_count == 3
    assert corpus.ids == ["a", "b", "c"]


def test_bad_lines_are_collected(write_jsonl):
    path = write_jsonl([_record("a"), {"id": "b", "source": "s"}, _record("c")])
    corpus = load_corpus(path)
    assert corpus.ids == ["a", "c"]
    assert [line for line, _ in corpus.issues] == [2]


def test_duplicate_id_names_both_lines(write_jsonl):
    path = write_jsonl([_record("x1"), _record("a"), _record("b"), _record("c"), _record("a")])
    corpus = load_corpus(path)
    assert len(corpus) == 4
    (line, message), = corpus.issues
    assert line == 5
    assert "2" in message and "5" in message


def test_parse_skips_blank_and_non_object_lines():
    text = "\n".join([json.dumps(_record("a")), "", "[1, 2]", "not json", json.dumps(_record("b"))])
    corpus = parse_corpus_text(text, provenance="inline")
    assert corpus.ids == ["a", "b"]
    assert [line for line, _ in corpus.issues] == [3, 4]
    assert "JSON object" in corpus.issues[0][1]


def test_unreadable_file(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(str(tmp_path / "absent.jsonl"))


def test_corpus_rejects_duplicate_ids():
    with pytest.raises(CorpusError):
        Corpus([make_article("a"), make_article("a")])


def test_load_is_deterministic(write_jsonl):
    path = write_jsonl([_record("a", url="https://x"), _record("b")])
    assert corpus_digest(load_corpus(path)) == corpus_digest(load_corpus(path))


def test_write_then_load_preserves_articles(tmp_path, small_corpus):
    path = tmp_path / "out" / "corpus.jsonl"
    write_corpus(small_corpus, str(path))
    again = load_corpus(str(path))
    assert corpus_digest(again) == corpus_digest(small_corpus)


def test_filter_by_keywords():
    corpus = Corpus([
        make_article("a", body="…in Gaza today…"),
        make_article("b", body="no match here"),
        make_article("c", body="GAZA strip"),
        make_article("d", body="nothing", title="Hamas leaders"),
    ])
    kept = filter_by_keywords(corpus, ["Israel", "Palestine", "Gaza", "Hamas"])
    assert kept.ids == ["a", "c", "d"]
    assert filter_by_keywords(corpus, ["gaza"]).ids == ["a", "c"]
    assert filter_by_keywords(corpus, ["Israel"]).ids == []
    assert filter_by_keywords(kept, ["Israel", "Palestine", "Gaza", "Hamas"]).ids == kept.ids


@pytest.mark.parametrize("keywords", [[], ["Gaza", ""], ["  "]])
def test_filter_rejects_bad_keywords(keywords, small_corpus):
    with pytest.raises(UserInputError):
        filter_by_keywords(small_corpus, keywords)


def test_weekly_counts_same_iso_week():
    corpus = Corpus([make_article("a", published_at="2023-10-09"), make_article("b", published_at="2023-10-10")])
    assert dict(weekly_counts(corpus)) == {"2023-W41": 2}


def test_weekly_counts_empty():
    assert weekly_counts(Corpus([])) == {}


def test_weekly_counts_by_source_matches_grouping():
    rows = [("a", "s1", "2023-10-09"), ("b", "s2", "2023-10-10"), ("c", "s3", "2023-10-20"),
            ("d", "s1", "2023-10-21"), ("e", "s2", "2024-01-01")]
    corpus = Corpus([make_article(i, source=s, published_at=d) for i, s, d in rows])
    counts = weekly_counts(corpus, group_by_source=True)
    assert sum(counts.values()) == 5
    expected = {}
    for article in corpus:
        key = (article.week, article.source)
        expected[key] = expected.get(key, 0) + 1
    assert dict(counts) == expected
    assert ("2024-W01", "s2") in counts


def test_weekly_counts_needs_dates():
    with pytest.raises(UserInputError):
        weekly_counts(Corpus([make_article("a", published_at=None)]))


def test_word_count_stats(small_corpus):
    stats = word_count_stats(small_corpus)
    assert set(stats) == {"aljazeera", "washingtonpost"}
    assert stats["aljazeera"]["articles"] == 2
    assert stats["aljazeera"]["mean_words"] == pytest.approx(2.5)
    assert sum(s["share"] for s in stats.values()) == pytest.approx(1.0)


def test_extra_fields_survive(write_jsonl):
    path = write_jsonl([_record("a", section="world")])
    article = load_corpus(path).get("a")
    assert article.extra == {"section": "world"}
    assert json.loads(json.dumps(article.to_dict()))["section"] == "world"
