import json
from unittest.mock import MagicMock

import pytest

from src.core.actants import ROLES, ActantialModel, ActantRole, RelationAxis, role_codes
from src.core.cache import ContentCache
from src.core.corpus import Corpus
from src.core.extraction import (
    ExtractionRecord,
    Extractor,
    detect_syncretisms,
    extract_corpus,
    parse_actants,
    render_prompt,
)
from src.core.llm_client import ChatConfig, Completion, StubChatClient, write_stub_response
from src.utils.errors import ActantParseError, EndpointError, UserInputError
from tests.conftest import make_article, make_model

GOLDEN_HEAD = (
    'According to the Actantial Model by Greimas with the actant label set ["Sender", "Receiver", "Subject", '
    '"Object", "Helper", "Opponent"], the actants are defined as follows:\n\n'
    "* Subject: The character who carries out the action and desires the Object.\n"
    "* Object: The character or thing that is desired.\n"
    "* Sender: The character who initiates the action and communicates the Object.\n"
    "* Receiver: The character who receives the action or the Object.\n"
    "* Helper: The character who assists the Subject in achieving its goal.\n"
    "* Opponent: The character who opposes the Subject in achieving its goal.\n\n"
    "Based on this Actantial Model and the actant label set, please recognize the actants in the given article.\n\n"
    "Article: "
)
GOLDEN_TAIL = (
    "\n\nQuestion: What are the main actants in the text? Provide the answer in the following JSON format: "
    '{"Actant Label": ["Actant Name"]}. If there is no corresponding actant, return the following empty list: '
    '{"Actant Label": []}.\n\nAnswer:'
)


def test_roles_and_codes():
    assert [r.value for r in ROLES] == ["Subject", "Object", "Sender", "Receiver", "Helper", "Opponent"]
    assert [r.code for r in ROLES] == ["Su", "Ob", "Se", "Re", "He", "Op"]
    assert role_codes([ActantRole.SENDER, ActantRole.SUBJECT]) == "SuSe"
    covered = {role for axis in RelationAxis for role in axis.roles}
    assert covered == set(ROLES)


def test_model_normalizes_actors():
    model = ActantialModel({ActantRole.SUBJECT: ("  Israeli   army ", ""), ActantRole.HELPER: ()})
    assert model.actors[ActantRole.SUBJECT] == ("Israeli army",)
    assert model.primary(ActantRole.SUBJECT) == "Israeli army"
    assert model.primary(ActantRole.HELPER) is None
    assert model.is_missing(ActantRole.OPPONENT)


def test_prompt_golden():
    body = "X attacked Y."
    assert render_prompt(body) == GOLDEN_HEAD + body + GOLDEN_TAIL
    assert "Article: X attacked Y.\n" in render_prompt(body)
    assert '{"Actant Label": ["Actant Name"]}' in render_prompt("anything")


def test_prompts_differ_only_in_article():
    first, second = render_prompt("one"), render_prompt("two words")
    assert first.replace("one", "") == second.replace("two words", "")


def test_empty_body_rejected():
    with pytest.raises(UserInputError):
        render_prompt("   ")


def test_parse_worked_example():
    raw = ('{"Subject": ["Israel"], "Object": ["Gaza"], "Sender": ["Israel"], "Receiver": ["Gaza"], '
           '"Helper": ["United States"], "Opponent": ["Hamas"]}')
    model = parse_actants(raw)
    assert model.primary(ActantRole.SUBJECT) == "Israel"
    assert model.primary(ActantRole.HELPER) == "United States"


def test_parse_empty_sentinel():
    raw = '{"Subject": [], "Object": [], "Sender": [], "Receiver": [], "Helper": [], "Opponent": []}'
    model = parse_actants(raw)
    assert all(model.is_missing(role) for role in ROLES)


def test_parse_fenced_strings_and_extra_keys():
    raw = 'Sure!\n```json\n{"subject": "A", "OBJECT": ["B", " C "], "Theme": ["x"], "Helper": "{braces}"}\n```'
    model = parse_actants(raw)
    assert model.actors[ActantRole.SUBJECT] == ("A",)
    assert model.actors[ActantRole.OBJECT] == ("B", "C")
    assert model.actors[ActantRole.HELPER] == ("{braces}",)
    assert model.is_missing(ActantRole.SENDER)


def test_parse_repairs_trailing_commas():
    raw = '```json\n{"Subject": ["Israel",], "Opponent": ["Hamas"],}\n```'
    model = parse_actants(raw)
    assert model.primary(ActantRole.SUBJECT) == "Israel"
    assert model.primary(ActantRole.OPPONENT) == "Hamas"


@pytest.mark.parametrize("raw", ["", "no json here", "{not json", '["Subject"]', "{'Subject': ['x']"])
def test_parse_failure_keeps_raw(raw):
    with pytest.raises(ActantParseError) as excinfo:
        parse_actants(raw)
    assert excinfo.value.raw == raw


def test_syncretisms():
    pair = (ActantRole.SUBJECT, ActantRole.SENDER)
    assert detect_syncretisms(make_model(subject="Israel", sender="Israel", object="Gaza")) == {pair}
    assert detect_syncretisms(make_model(subject="israel", sender="Israel ")) == {pair}
    assert detect_syncretisms(make_model(subject="israel", sender="Israel "), casefold=False) == frozenset()
    distinct = make_model(subject="a", object="b", sender="c", receiver="d", helper="e", opponent="f")
    assert detect_syncretisms(distinct) == frozenset()
    everyone = make_model(**{role.value.lower(): "X" for role in ROLES})
    assert len(detect_syncretisms(everyone)) == 15


def test_record_status_invariant():
    with pytest.raises(ValueError):
        ExtractionRecord("a", "raw", None, "ok")
    with pytest.raises(ValueError):
        ExtractionRecord("a", "raw", make_model(subject="x"), "parse_error")
    record = ExtractionRecord("a", "raw", make_model(subject="x"), "ok", attempts=2, truncated=True)
    assert ExtractionRecord.from_dict(json.loads(json.dumps(record.to_dict()))) == record


def _corpus(n=3):
    return Corpus([make_article(f"a{i}", body=f"Article number {i} about Gaza") for i in range(n)])


def test_extract_uses_cache_on_second_run(tmp_path):
    stub_dir = tmp_path / "stubs"
    write_stub_response(str(stub_dir), "_default", {"Subject": ["Israel"], "Object": ["Gaza"]})
    cache = ContentCache(str(tmp_path / "cache"))
    client = StubChatClient(str(stub_dir))
    extractor = Extractor(client, cache, model_id="stub", concurrency=2)
    first = extractor.extract_corpus(_corpus())
    assert [r.article_id for r in first] == ["a0", "a1", "a2"]
    assert all(r.ok for r in first)
    assert client.calls == 3
    second = extractor.extract_corpus(_corpus())
    assert client.calls == 3
    assert cache.hits == 3 and extractor.requests == 0
    assert [r.model for r in second] == [r.model for r in first]


def test_endpoint_failure_is_isolated(tmp_path):
    client = MagicMock()

    def complete(prompt, article_id=None):
        if article_id == "a1":
            raise EndpointError("HTTP 500", attempts=3)
        return Completion('{"Subject": "Hamas"}', attempts=1)

    client.complete.side_effect = complete
    records = Extractor(client, ContentCache(str(tmp_path)), model_id="m").extract_corpus(_corpus())
    assert [r.status for r in records] == ["ok", "endpoint_error", "ok"]
    assert records[1].attempts == 3
    assert records[0].model.primary(ActantRole.SUBJECT) == "Hamas"


def test_cache_key_depends_on_model_id(tmp_path):
    client = MagicMock()
    client.complete.return_value = Completion('{"Subject": "A"}', attempts=1)
    cache = ContentCache(str(tmp_path))
    Extractor(client, cache, model_id="m1").extract_corpus(_corpus(1))
    Extractor(client, cache, model_id="m2").extract_corpus(_corpus(1))
    assert client.complete.call_count == 2


def test_long_bodies_are_truncated(tmp_path):
    client = MagicMock()
    client.complete.return_value = Completion("nothing useful", attempts=1)
    corpus = Corpus([make_article("long", body="word " * 100)])
    record, = Extractor(client, ContentCache(str(tmp_path)), model_id="m", max_chars=50).extract_corpus(corpus)
    assert record.truncated
    assert record.status == "parse_error"
    prompt = client.complete.call_args[0][0]
    assert "Article: " + ("word " * 10) + "\n" in prompt


def test_extract_corpus_from_endpoint_config(tmp_path):
    stub_dir = str(tmp_path / "stubs")
    write_stub_response(stub_dir, "_default", {"Subject": ["Israel"], "Opponent": ["Hamas"]})
    write_stub_response(stub_dir, "a1", "I cannot answer that.")
    config = ChatConfig(mode="stub", stub_dir=stub_dir, concurrency=1)
    records = extract_corpus(_corpus(), config, ContentCache(str(tmp_path / "cache")))
    assert [r.status for r in records] == ["ok", "parse_error", "ok"]
    assert records[2].model.primary(ActantRole.OPPONENT) == "Hamas"
    with pytest.raises(EndpointError):
        extract_corpus(_corpus(), ChatConfig(mode="stub"), ContentCache(str(tmp_path / "other")))
