"""
Bundled synthetic news corpus with canned extraction answers for offline runs
"""

import json
import logging
import os
import random
from datetime import date, timedelta
from typing import Dict, List, Optional, Tuple

from src.core.actants import ROLES, ActantialModel, ActantRole
from src.core.corpus import Article, Corpus, write_corpus
from src.core.llm_client import write_stub_response
from src.utils.errors import UserInputError

logger = logging.getLogger(__name__)

SOURCES = ("aljazeera", "washingtonpost")
START_DATE = date(2023, 10, 9)
MIN_ARTICLES = 40
MISSING_HELPER_OPPONENT_EVERY = 5
PARSE_FAILURE_EVERY = 29

# (Subject, Object, Sender, Receiver, Helper, Opponent); lists are drawn from per article
NARRATIVES: Tuple[Tuple, ...] = (
    ("Israel", "security", "Israel", ["Israeli citizens", "the hostages"], "United States", "Hamas"),
    ("Palestinians", "survival", ["international community", "Palestinians"], "Palestinians",
     ["aid organizations", "UNRWA"], "Israel"),
    ("United States", "regional stability", "United States", ["Israel", "Middle East"],
     ["Qatar", "Egypt"], ["Iran", "Hezbollah"]),
    ("students", "ceasefire", "students", "university", ["protesters", "faculty"], ["university", "police"]),
)

FILLER = (
    "Officials spoke on condition of anonymity.",
    "The situation remained tense throughout the week.",
    "Analysts expect the talks to continue.",
    "Witnesses described scenes of destruction.",
    "The statement drew sharp reactions.",
    "Negotiators met again on Tuesday.",
)
KEYWORDS = ("Gaza", "Israel", "Hamas", "Palestine")


def _pick(rng: random.Random, slot) -> str:
    return rng.choice(slot) if isinstance(slot, list) else slot


def synthetic_models(n: int, seed: int = 0) -> List[ActantialModel]:
    """One actantial model per article; every fifth article has no Helper or Opponent"""
    rng = random.Random(seed)
    models = []
    for i in range(n):
        template = NARRATIVES[i % len(NARRATIVES)]
        actors: Dict[ActantRole, Tuple[str, ...]] = {
            role: (_pick(rng, slot),) for role, slot in zip(ROLES, template)
        }
        if i % MISSING_HELPER_OPPONENT_EVERY == 4:
            actors[ActantRole.HELPER] = ()
            actors[ActantRole.OPPONENT] = ()
        models.append(ActantialModel(actors=actors))
    return models


def _body(rng: random.Random, model: ActantialModel) -> str:
    subject = model.primary(ActantRole.SUBJECT)
    goal = model.primary(ActantRole.OBJECT)
    sentences = [
        f"In {rng.choice(KEYWORDS)}, {subject} pressed on in pursuit of {goal}.",
        f"{model.primary(ActantRole.SENDER)} framed the effort as serving {model.primary(ActantRole.RECEIVER)}.",
    ]
    if not model.is_missing(ActantRole.HELPER):
        sentences.append(f"Support came from {model.primary(ActantRole.HELPER)}.")
    if not model.is_missing(ActantRole.OPPONENT):
        sentences.append(f"{model.primary(ActantRole.OPPONENT)} stood in the way.")
    sentences.extend(rng.sample(FILLER, 3))
    return " ".join(sentences)


def _answer(model: ActantialModel, style: int) -> str:
    """Canned model output in a few of the shapes real chat models produce"""
    payload = model.to_dict()
    if style == 0:
        return json.dumps(payload, ensure_ascii=False)
    if style == 1:
        return "```json\n" + json.dumps(payload, indent=2, ensure_ascii=False) + "\n```"
    text = json.dumps(payload, indent=1, ensure_ascii=False)
    return "Here is the actantial model:\n" + text[:-1].rstrip() + ",\n}"


def synthetic_corpus(n: int = 60, seed: int = 0) -> Tuple[Corpus, List[ActantialModel]]:
    if n < MIN_ARTICLES:
        raise UserInputError(f"the synthetic corpus needs at least {MIN_ARTICLES} articles, got {n}")
    rng = random.Random(seed + 1)
    models = synthetic_models(n, seed)
    articles = []
    for i, model in enumerate(models):
        source = SOURCES[rng.random() < 0.45]
        published = START_DATE + timedelta(days=(i * 7 * 8) // n + rng.randrange(3))
        articles.append(Article(
            id=f"art-{i:04d}",
            source=source,
            title=f"{model.primary(ActantRole.SUBJECT)} and the question of {model.primary(ActantRole.OBJECT)}",
            url=f"https://news.example/{source}/{i:04d}",
            published_at=published,
            body=_body(rng, model),
        ))
    return Corpus(articles, provenance=f"synthetic fixture n={n} seed={seed}"), models


def write_fixture(out_dir: str, n: int = 60, seed: int = 0) -> Dict[str, str]:
    """Corpus, stub answers and an offline config (stub chat + hash embedder)"""
    corpus, models = synthetic_corpus(n, seed)
    corpus_path = os.path.join(out_dir, "corpus.jsonl")
    stub_dir = os.path.join(out_dir, "stubs")
    config_path = os.path.join(out_dir, "config.json")
    write_corpus(corpus, corpus_path)
    for i, (article, model) in enumerate(zip(corpus, models)):
        answer = "I cannot identify the actants in this article." if i % PARSE_FAILURE_EVERY == 7 else _answer(model, i % 3)
        write_stub_response(stub_dir, article.id, answer)
    config = {
        "corpus_path": "corpus.jsonl",
        "output_dir": "out",
        "seed": seed,
        "chat": {"mode": "stub", "stub_dir": "stubs", "concurrency": 2},
        "embedder": {"mode": "hash", "dimension": 256, "seed": seed, "anisotropy": 0.3},
        "svd": {"dim": 8},
        "umap": {"n_neighbors": 10, "n_epochs": 200},
        "clustering": {"k_min": 2, "k_max": 8, "post_ops": []},
        "components": {"all": list(range(8))},
        "dimstudy": {"dims": [2, 8, 34], "methods": ["svd", "pca", "umap"], "max_vectors": 500, "key_actors": 6},
    }
    with open(config_path, "w", encoding="utf-8") as f:
        json.dump(config, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote synthetic fixture with {n} articles to {out_dir}")
    return {"corpus": corpus_path, "stubs": stub_dir, "config": config_path}


def expected_model(models: List[ActantialModel], article_id: str) -> Optional[ActantialModel]:
    """Ground-truth model behind a fixture article id"""
    index = int(article_id.split("-")[1])
    return models[index] if 0 <= index < len(models) else None
