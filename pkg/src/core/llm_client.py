"""
Chat-completion clients for actant extraction
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import openai
from openai import OpenAI
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from src.utils.errors import EndpointError

TRANSIENT_ERRORS = (
    openai.APIConnectionError,
    openai.APITimeoutError,
    openai.RateLimitError,
    openai.InternalServerError,
)


@dataclass(frozen=True)
class ChatConfig:
    """Connection and decoding settings for the chat endpoint"""

    mode: str = "http"
    base_url: str = "http://localhost:8000/v1"
    model: str = "meta-llama/Meta-Llama-3-8B-Instruct"
    api_key: Optional[str] = None
    max_retries: int = 3
    retry_backoff: float = 1.0
    concurrency: int = 4
    timeout: float = 120.0
    max_tokens: int = 512
    max_chars: int = 24000
    stub_dir: Optional[str] = None
    extra_body: Dict[str, Any] = field(default_factory=dict)

    @property
    def model_id(self) -> str:
        return "stub" if self.mode == "stub" else self.model


@dataclass
class Completion:
    text: str
    attempts: int = 1


class ChatClient:
    """OpenAI-compatible chat endpoint with greedy decoding and bounded retry"""

    def __init__(self, config: ChatConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self._client: Optional[OpenAI] = None

    def initialize(self) -> None:
        """Create the SDK client; SDK-level retries are disabled in favour of tenacity"""
        self._client = OpenAI(
            base_url=self.config.base_url,
            api_key=self.config.api_key or "EMPTY",
            timeout=self.config.timeout,
            max_retries=0,
        )
        self.logger.info(f"Chat client ready for {self.config.model} at {self.config.base_url}")

    def decoding_params(self) -> Dict[str, Any]:
        # sampling disabled: the request payload is the determinism contract
        params: Dict[str, Any] = {
            "temperature": 0.0,
            "top_p": 1.0,
            "n": 1,
            "max_tokens": self.config.max_tokens,
        }
        if self.config.extra_body:
            params["extra_body"] = dict(self.config.extra_body)
        return params

    def build_messages(self, prompt: str) -> List[Dict[str, str]]:
        return [{"role": "user", "content": prompt}]

    def complete(self, prompt: str, article_id: Optional[str] = None) -> Completion:
        """Send one prompt and return the raw answer text"""
        if self._client is None:
            self.initialize()
        retrying = Retrying(
            stop=stop_after_attempt(max(1, self.config.max_retries)),
            wait=wait_exponential(multiplier=self.config.retry_backoff, max=30),
            retry=retry_if_exception_type(TRANSIENT_ERRORS),
            reraise=True,
        )
        attempts = 0
        try:
            for attempt in retrying:
                with attempt:
                    attempts = attempt.retry_state.attempt_number
                    response = self._client.chat.completions.create(
                        model=self.config.model,
                        messages=self.build_messages(prompt),
                        **self.decoding_params(),
                    )
            content = response.choices[0].message.content
            return Completion(text=content or "", attempts=attempts)
        except Exception as e:
            self.logger.error(f"Chat request failed for article {article_id} after {attempts} attempt(s): {e}")
            raise EndpointError(f"chat endpoint failed: {e}", attempts=attempts) from e


class StubChatClient:
    """Serves canned answers from a fixture directory, one file per article id"""

    DEFAULT_FILE = "_default.json"

    def __init__(self, stub_dir: str):
        self.stub_dir = Path(stub_dir)
        self.logger = logging.getLogger(__name__)
        self.calls = 0

    def initialize(self) -> None:
        if not self.stub_dir.is_dir():
            raise EndpointError(f"stub directory not found: {self.stub_dir}")

    def complete(self, prompt: str, article_id: Optional[str] = None) -> Completion:
        self.calls += 1
        candidates = []
        if article_id is not None:
            candidates.append(self.stub_dir / f"{article_id}.json")
        candidates.append(self.stub_dir / self.DEFAULT_FILE)
        for path in candidates:
            if path.is_file():
                return Completion(text=path.read_text(encoding="utf-8"), attempts=1)
        self.logger.error(f"No canned response for article {article_id} in {self.stub_dir}")
        raise EndpointError(f"no canned response for article {article_id}", attempts=1)


def create_chat_client(config: ChatConfig):
    """Pick the HTTP or stub client for the configured mode"""
    if config.mode == "stub":
        if not config.stub_dir:
            raise EndpointError("chat.mode is 'stub' but chat.stub_dir is not set")
        client = StubChatClient(config.stub_dir)
    else:
        client = ChatClient(config)
    client.initialize()
    return client


def write_stub_response(stub_dir: str, article_id: str, payload: Any) -> None:
    """Write a canned answer; dicts are serialized as the model would print them"""
    os.makedirs(stub_dir, exist_ok=True)
    text = payload if isinstance(payload, str) else json.dumps(payload, ensure_ascii=False)
    Path(stub_dir, f"{article_id}.json").write_text(text, encoding="utf-8")
