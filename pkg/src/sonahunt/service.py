"""HTTP search service.

Read-only JSON API over a loaded index and lexicon:

* ``GET  /api/health``      readiness, point count, vector dim
* ``GET  /api/words/{id}``  word detail with definitions and synonyms
* ``POST /api/search``      description (or raw vector) to ranked words

Text queries are embedded with the whitespace-average embedder over a
word-vector table configured at startup; clients holding vectors from an
offline model submit ``query_vector`` instead. The service never runs
neural models.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .embedding import WordVectorTable, embed_average, normalize
from .errors import AllTokensOutOfVocabularyError, ZeroVectorError
from .evaluation import dedup_hits
from .index import HnswIndex, language_filter, search
from .lexicon import Lexicon

MAX_LIMIT = 100
FETCH_MULTIPLIER = 5


@dataclass(slots=True)
class ServiceState:
    index: HnswIndex | None = None
    lexicon: Lexicon | None = None
    word_table: WordVectorTable | None = None
    ready: bool = False


class SearchRequest(BaseModel):
    query: str | None = None
    query_vector: list[float] | None = None
    language: str | None = None
    limit: int = 10


class SearchHitOut(BaseModel):
    rank: int
    word_id: int
    word_surface: str
    score: float
    matched_definition_id: int
    matched_definition_text: str
    matched_definition_language: str


class SearchResponse(BaseModel):
    hits: list[SearchHitOut]
    timing_ms: float


@dataclass(slots=True)
class _DefinitionOut:
    definition_id: int
    language: str
    text: str


@dataclass(slots=True)
class _SynonymOut:
    word_id: int
    surface: str


@dataclass(slots=True)
class WordDetail:
    word_id: int
    surface: str
    language: str
    definitions: list[_DefinitionOut] = field(default_factory=list)
    synonyms: list[_SynonymOut] = field(default_factory=list)


def create_app(state: ServiceState, cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="sonahunt", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    app.state.service = state

    def require_ready() -> tuple[HnswIndex, Lexicon]:
        if not state.ready or state.index is None or state.lexicon is None:
            raise HTTPException(status_code=503, detail="index is loading")
        return state.index, state.lexicon

    @app.get("/api/health")
    def health() -> dict:
        if not state.ready or state.index is None:
            return {"status": "loading"}
        return {
            "status": "ok",
            "points": len(state.index),
            "dim": state.index.dim,
        }

    @app.get("/api/words/{word_id}")
    def word_detail(word_id: int) -> WordDetail:
        _, lexicon = require_ready()
        entry = lexicon.word(word_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown word_id {word_id}")
        definitions = [
            _DefinitionOut(d, lexicon.definitions[d].language, lexicon.definitions[d].text)
            for d in lexicon.definitions_of.get(word_id, ())
        ]
        synonyms = [
            _SynonymOut(s, lexicon.words[s].surface)
            for s in lexicon.synonyms_of.get(word_id, ())
        ]
        return WordDetail(
            word_id=entry.word_id,
            surface=entry.surface,
            language=entry.language,
            definitions=definitions,
            synonyms=synonyms,
        )

    @app.post("/api/search")
    def handle_search(request: SearchRequest) -> SearchResponse:
        index, lexicon = require_ready()
        if (request.query is None) == (request.query_vector is None):
            raise HTTPException(
                status_code=400, detail="provide exactly one of 'query' and 'query_vector'"
            )
        if not (1 <= request.limit <= MAX_LIMIT):
            raise HTTPException(status_code=400, detail=f"limit must be in 1..{MAX_LIMIT}")

        started = time.perf_counter()
        if request.query is not None:
            if not request.query.strip():
                raise HTTPException(status_code=400, detail="empty query text")
            if state.word_table is None:
                raise HTTPException(
                    status_code=422, detail="text queries need a word-vector table; submit query_vector"
                )
            try:
                vector = embed_average(request.query, state.word_table)
            except AllTokensOutOfVocabularyError:
                raise HTTPException(
                    status_code=422, detail="no word of the description is in the vocabulary"
                ) from None
        else:
            raw = np.asarray(request.query_vector, dtype=np.float32)
            if raw.shape != (index.dim,):
                raise HTTPException(
                    status_code=400, detail=f"query_vector must have {index.dim} components"
                )
            try:
                vector = normalize(raw)
            except ZeroVectorError:
                raise HTTPException(status_code=400, detail="query_vector is zero") from None

        predicate = language_filter(request.language) if request.language else None
        hits = search(index, vector, k=request.limit * FETCH_MULTIPLIER, filter=predicate)
        deduped = dedup_hits(hits, request.limit)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        out = []
        for rank, hit in enumerate(deduped, start=1):
            word = lexicon.words[hit.payload.word_id]
            definition = lexicon.definitions[hit.payload.definition_id]
            out.append(
                SearchHitOut(
                    rank=rank,
                    word_id=hit.payload.word_id,
                    word_surface=word.surface,
                    score=hit.score,
                    matched_definition_id=hit.payload.definition_id,
                    matched_definition_text=definition.text,
                    matched_definition_language=definition.language,
                )
            )
        return SearchResponse(hits=out, timing_ms=elapsed_ms)

    return app
