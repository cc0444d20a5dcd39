"""
Text embeddings: OpenAI-compatible endpoint, offline hash embedder, cosine similarity
"""

import hashlib
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from openai import OpenAI
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from src.core.cache import ContentCache, content_key
from src.core.llm_client import TRANSIENT_ERRORS
from src.utils.errors import DimensionMismatchError, EndpointError, UserInputError

logger = logging.getLogger(__name__)

EmbeddingVector = np.ndarray
EmbedFn = Callable[[Sequence[str]], List[EmbeddingVector]]


class ZeroVectorWarning(UserWarning):
    """Cosine similarity requested for an all-zero vector"""


@dataclass(frozen=True)
class EmbedderConfig:
    """Embedding endpoint settings; mode 'hash' runs fully offline"""

    mode: str = "http"
    base_url: str = "http://localhost:8080/v1"
    model: str = "intfloat/e5-large"
    dimension: int = 1024
    prefix: str = ""
    batch_size: int = 32
    api_key: Optional[str] = None
    max_retries: int = 3
    retry_backoff: float = 1.0
    concurrency: int = 4
    timeout: float = 60.0
    seed: int = 0
    anisotropy: float = 0.0

    def problems(self) -> List[str]:
        found = []
        if self.mode not in ("http", "hash"):
            found.append(f"embedder.mode must be 'http' or 'hash', got {self.mode!r}")
        if self.dimension <= 0:
            found.append("embedder.dimension must be > 0")
        if self.batch_size < 1:
            found.append("embedder.batch_size must be >= 1")
        if self.concurrency < 1:
            found.append("embedder.concurrency must be >= 1")
        if not 0.0 <= self.anisotropy < 1.0:
            found.append("embedder.anisotropy must lie in [0, 1)")
        return found

    @property
    def model_id(self) -> str:
        if self.mode != "hash":
            return self.model
        suffix = f"-a{self.anisotropy:g}" if self.anisotropy else ""
        return f"hash-{self.dimension}-{self.seed}{suffix}"


def _seeded_unit(text: str, dimension: int, seed: int) -> EmbeddingVector:
    digest = hashlib.sha256(f"{text}\x00{seed}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    vector = rng.standard_normal(dimension)
    return vector / np.linalg.norm(vector)


def hash_embedding(text: str, dimension: int, seed: int = 0, anisotropy: float = 0.0) -> EmbeddingVector:
    """Deterministic unit vector from a PRNG seeded by SHA-256(text, seed).

    With anisotropy a > 0 every vector leans toward one shared direction, so two
    distinct texts have an expected cosine similarity of about a, the way real
    sentence encoders occupy a narrow cone.
    """
    if dimension <= 0:
        raise UserInputError("dimension must be > 0")
    if not 0.0 <= anisotropy < 1.0:
        raise UserInputError("anisotropy must lie in [0, 1)")
    vector = _seeded_unit(text, dimension, seed)
    if anisotropy:
        shared = _seeded_unit("", dimension, seed + 1)
        vector = np.sqrt(1.0 - anisotropy) * vector + np.sqrt(anisotropy) * shared
        vector = vector / np.linalg.norm(vector)
    return vector


class HashEmbedder:
    """Offline embedder so the whole pipeline runs without network access"""

    def __init__(self, dimension: int, seed: int = 0, anisotropy: float = 0.0):
        self.dimension = dimension
        self.seed = seed
        self.anisotropy = anisotropy

    def embed_batch(self, texts: Sequence[str]) -> List[EmbeddingVector]:
        return [hash_embedding(text, self.dimension, self.seed, self.anisotropy) for text in texts]


class EmbeddingClient:
    """OpenAI-compatible /embeddings endpoint with bounded retry"""

    def __init__(self, config: EmbedderConfig):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self._client = OpenAI(
            base_url=config.base_url,
            api_key=config.api_key or "EMPTY",
            timeout=config.timeout,
            max_retries=0,
        )

    def embed_batch(self, texts: Sequence[str]) -> List[EmbeddingVector]:
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
                    response = self._client.embeddings.create(model=self.config.model, input=list(texts))
        except Exception as e:
            self.logger.error(f"Embedding request for {len(texts)} text(s) failed after {attempts} attempt(s): {e}")
            raise EndpointError(f"embedding endpoint failed: {e}", attempts=attempts) from e
        rows = sorted(response.data, key=lambda item: item.index)
        vectors = [np.asarray(row.embedding, dtype=np.float64) for row in rows]
        for vector in vectors:
            if vector.shape[0] != self.config.dimension:
                raise DimensionMismatchError(self.config.dimension, vector.shape[0], self.config.model)
        return vectors


def create_embedder(config: EmbedderConfig):
    if config.mode == "hash":
        return HashEmbedder(config.dimension, config.seed, config.anisotropy)
    return EmbeddingClient(config)


def embed_texts(
    texts: Sequence[str],
    config: EmbedderConfig,
    cache: ContentCache,
    backend=None,
) -> List[EmbeddingVector]:
    """One vector per text, order-aligned, served from the cache where possible"""
    if any(not isinstance(t, str) or not t for t in texts):
        raise UserInputError("embed_texts needs non-empty strings")
    backend = backend or create_embedder(config)
    keys = [content_key(config.prefix, text, config.model_id) for text in texts]
    vectors: Dict[int, EmbeddingVector] = {}
    pending: Dict[str, List[int]] = {}
    for position, key in enumerate(keys):
        if key in pending:
            pending[key].append(position)
            continue
        cached = cache.get(key)
        if cached is not None:
            vectors[position] = np.asarray(cached["vector"], dtype=np.float64)
        else:
            pending[key] = [position]
    todo = list(pending)
    batches = [todo[i:i + config.batch_size] for i in range(0, len(todo), config.batch_size)]
    failed: List[str] = []

    def run(batch: List[str]) -> None:
        inputs = [config.prefix + texts[pending[key][0]] for key in batch]
        try:
            result = backend.embed_batch(inputs)
        except EndpointError as e:
            failed.extend(texts[pending[key][0]] for key in batch)
            logger.warning(f"Embedding batch of {len(batch)} failed: {e}")
            return
        for key, vector in zip(batch, result):
            if vector.shape[0] != config.dimension:
                raise DimensionMismatchError(config.dimension, vector.shape[0], config.model_id)
            cache.put(key, {"model": config.model_id, "text": texts[pending[key][0]], "vector": vector.tolist()})
            for position in pending[key]:
                vectors[position] = np.asarray(vector, dtype=np.float64)

    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        list(pool.map(run, batches))
    if failed:
        raise EndpointError(f"{len(failed)} text(s) could not be embedded", failed=sorted(set(failed)))
    logger.debug(f"Embedded {len(texts)} text(s), {len(todo)} requested from the backend")
    return [vectors[position] for position in range(len(texts))]


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between a and b; 0.0 with a warning for zero vectors"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UserInputError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        warnings.warn("cosine similarity of a zero vector is defined as 0", ZeroVectorWarning, stacklevel=2)
        return 0.0
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Unit-norm rows; zero rows stay zero"""
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe


def cosine_similarity_matrix(matrix: np.ndarray) -> np.ndarray:
    unit = normalize_rows(matrix)
    return np.clip(unit @ unit.T, -1.0, 1.0)
