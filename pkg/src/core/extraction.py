"""
Actant extraction: prompt rendering, answer parsing and corpus-wide extraction
"""

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from src.core.actants import ROLES, ActantialModel, ActantRole, actor_key
from src.core.cache import ContentCache, content_key
from src.core.corpus import Article, Corpus
from src.core.llm_client import ChatConfig, create_chat_client
from src.utils.errors import ActantParseError, EndpointError, UserInputError

logger = logging.getLogger(__name__)

ARTICLE_PLACEHOLDER = "{{ article }}"

PROMPT_TEMPLATE = (
    'According to the Actantial Model by Greimas with the actant label set ["Sender", "Receiver", '
    '"Subject", "Object", "Helper", "Opponent"], the actants are defined as follows:\n'
    "\n"
    "* Subject: The character who carries out the action and desires the Object.\n"
    "* Object: The character or thing that is desired.\n"
    "* Sender: The character who initiates the action and communicates the Object.\n"
    "* Receiver: The character who receives the action or the Object.\n"
    "* Helper: The character who assists the Subject in achieving its goal.\n"
    "* Opponent: The character who opposes the Subject in achieving its goal.\n"
    "\n"
    "Based on this Actantial Model and the actant label set, please recognize the actants in the given article.\n"
    "\n"
    "Article: {{ article }}\n"
    "\n"
    "Question: What are the main actants in the text? Provide the answer in the following JSON format: "
    '{"Actant Label": ["Actant Name"]}. If there is no corresponding actant, return the following empty list: '
    '{"Actant Label": []}.\n'
    "\n"
    "Answer:"
)

STATUS_OK = "ok"
STATUS_PARSE_ERROR = "parse_error"
STATUS_ENDPOINT_ERROR = "endpoint_error"

_CODE_FENCE = re.compile(r"```[A-Za-z]*")
_TRAILING_COMMA = re.compile(r",\s*([}\]])")

RolePair = Tuple[ActantRole, ActantRole]


def render_prompt(article_body: str) -> str:
    """Fill the actantial prompt with one article"""
    if not article_body or not article_body.strip():
        raise UserInputError("article body must not be empty")
    return PROMPT_TEMPLATE.replace(ARTICLE_PLACEHOLDER, article_body)


def _first_object(text: str) -> Optional[str]:
    """First balanced {...} region, ignoring braces inside JSON strings"""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(text)):
            char = text[pos]
            if in_string:
                if escaped:
                    escaped = False
                elif char == "\\":
                    escaped = True
                elif char == '"':
                    in_string = False
            elif char == '"':
                in_string = True
            elif char == "{":
                depth += 1
            elif char == "}":
                depth -= 1
                if depth == 0:
                    return text[start:pos + 1]
        start = text.find("{", start + 1)
    return None


def _repair(text: str) -> str:
    text = _CODE_FENCE.sub("", text)
    return _TRAILING_COMMA.sub(r"\1", text)


def _decode(raw: str) -> Optional[Dict[str, Any]]:
    region = _first_object(raw)
    if region is None:
        return None
    try:
        value = json.loads(region)
    except (json.JSONDecodeError, RecursionError):
        return None
    return value if isinstance(value, dict) else None


def _actor_list(value: Any) -> List[str]:
    if isinstance(value, str):
        return [value]
    if isinstance(value, list):
        return [item for item in value if isinstance(item, str)]
    return []


def parse_actants(raw: str) -> ActantialModel:
    """Turn raw model output into an ActantialModel; one repair pass on bad JSON"""
    data = _decode(raw)
    if data is None:
        data = _decode(_repair(raw))
    if data is None:
        raise ActantParseError("no parseable JSON object in model output", raw=raw)
    actors: Dict[ActantRole, List[str]] = {}
    for label, value in data.items():
        role = ActantRole.from_label(str(label))
        if role is not None and role not in actors:
            actors[role] = _actor_list(value)
    return ActantialModel(actors={role: tuple(names) for role, names in actors.items()})


def detect_syncretisms(model: ActantialModel, casefold: bool = True) -> FrozenSet[RolePair]:
    """Role pairs whose primary actors coincide after normalization"""
    keys = {}
    for role in ROLES:
        primary = model.primary(role)
        if primary is not None:
            keys[role] = actor_key(primary, casefold=casefold)
    return frozenset(
        (first, second)
        for first, second in combinations(ROLES, 2)
        if first in keys and second in keys and keys[first] == keys[second]
    )


@dataclass
class ExtractionRecord:
    """Outcome of extracting one article"""

    article_id: str
    raw_response: str
    model: Optional[ActantialModel]
    status: str
    attempts: int = 0
    truncated: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        if (self.status == STATUS_OK) != (self.model is not None):
            raise ValueError("status 'ok' requires a model and only 'ok' may carry one")

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> Dict[str, Any]:
        return {
            "article_id": self.article_id,
            "status": self.status,
            "attempts": self.attempts,
            "truncated": self.truncated,
            "error": self.error,
            "model": self.model.to_dict() if self.model else None,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExtractionRecord":
        model = data.get("model")
        return cls(
            article_id=data["article_id"],
            raw_response=data.get("raw_response", ""),
            model=ActantialModel.from_dict(model) if model is not None else None,
            status=data["status"],
            attempts=int(data.get("attempts", 0)),
            truncated=bool(data.get("truncated", False)),
            error=data.get("error"),
        )


class Extractor:
    """Runs the prompt over a corpus with caching and bounded concurrency"""

    def __init__(self, client, cache: ContentCache, model_id: str, max_chars: int = 24000, concurrency: int = 4):
        self.client = client
        self.cache = cache
        self.model_id = model_id
        self.max_chars = max_chars
        self.concurrency = max(1, concurrency)
        self.logger = logging.getLogger(__name__)
        self.requests = 0
        self._lock = threading.Lock()

    def _prompt_for(self, article: Article) -> Tuple[str, bool]:
        body = article.body
        truncated = self.max_chars > 0 and len(body) > self.max_chars
        if truncated:
            body = body[: self.max_chars]
            self.logger.debug(f"Truncated article {article.id} to {self.max_chars} characters")
        return render_prompt(body), truncated

    def _extract_one(self, article: Article) -> ExtractionRecord:
        prompt, truncated = self._prompt_for(article)
        key = content_key(prompt, self.model_id)
        cached = self.cache.get(key)
        if cached is not None:
            raw, attempts = cached["raw_response"], 0
        else:
            try:
                with self._lock:
                    self.requests += 1
                completion = self.client.complete(prompt, article_id=article.id)
            except EndpointError as e:
                return ExtractionRecord(article.id, "", None, STATUS_ENDPOINT_ERROR,
                                        attempts=e.attempts, truncated=truncated, error=str(e))
            raw, attempts = completion.text, completion.attempts
            self.cache.put(key, {"model": self.model_id, "article_id": article.id, "raw_response": raw})
        try:
            model = parse_actants(raw)
        except ActantParseError as e:
            return ExtractionRecord(article.id, raw, None, STATUS_PARSE_ERROR,
                                    attempts=attempts, truncated=truncated, error=str(e))
        return ExtractionRecord(article.id, raw, model, STATUS_OK, attempts=attempts, truncated=truncated)

    def extract_corpus(self, corpus: Corpus) -> List[ExtractionRecord]:
        """One record per article, in corpus order"""
        self.cache.reset_stats()
        self.requests = 0
        with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
            records = list(pool.map(self._extract_one, corpus.articles))
        summary = {status: sum(r.status == status for r in records)
                   for status in (STATUS_OK, STATUS_PARSE_ERROR, STATUS_ENDPOINT_ERROR)}
        self.logger.info(
            f"Extracted {len(records)} articles: {summary}, cache hits {self.cache.hits}, "
            f"requests {self.requests}, truncated {sum(r.truncated for r in records)}"
        )
        return records


def extract_corpus(corpus: Corpus, endpoint_config: ChatConfig, cache: ContentCache) -> List[ExtractionRecord]:
    client = create_chat_client(endpoint_config)
    extractor = Extractor(
        client,
        cache,
        model_id=endpoint_config.model_id,
        max_chars=endpoint_config.max_chars,
        concurrency=endpoint_config.concurrency,
    )
    return extractor.extract_corpus(corpus)
