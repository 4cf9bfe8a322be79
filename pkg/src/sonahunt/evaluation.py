"""End-to-end retrieval evaluation.

Two protocols share the same judging machinery:

* unlabeled: every eligible dictionary definition queries the index with
  its own vector; the hit equal to the query definition is excluded, hits
  are deduplicated to words, and the word's synonym-derived relevant set
  judges the ranking. Optionally only queries in certain definition
  languages run (the cross-lingual setting).
* labeled: external (query text, target word sense) pairs; the query text
  is embedded by a configured embedder, nothing is excluded, and the
  target word plus its synonyms judge the ranking, grouped per query
  language.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .embedding import EmbeddingSet
from .errors import (
    DataError,
    EmptyJudgmentsError,
    MalformedRecordError,
    MissingEmbeddingError,
    MissingTargetError,
)
from .ground_truth import GroundTruth, retrievable_relevant_set
from .index import HnswIndex, SearchHit, search
from .lexicon import Lexicon, filter_eligible_queries
from .metrics import EvalReport, QueryJudgment, RankedResult, aggregate

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class UnlabeledEvalConfig:
    """Knobs for the unlabeled protocol.

    ``candidates_to_retrieve`` is the output cap applied after word
    deduplication; ``fetch_multiplier`` times that many raw definition
    hits are fetched beforehand so dedup does not starve the list.
    """

    candidates_to_retrieve: int = 100
    fetch_multiplier: int = 5
    query_language_filter: Callable[[str], bool] | None = None
    ef_search: int | None = None


def non_estonian(language: str) -> bool:
    """Query-language predicate for the cross-lingual setting."""
    return language != "et"


@dataclass(frozen=True, slots=True)
class LabeledItem:
    target_word_id: int
    target_definition_id: int
    query_language: str
    query_text: str


@dataclass(slots=True)
class LabeledDataset:
    items: list[LabeledItem] = field(default_factory=list)

    def languages(self) -> list[str]:
        return sorted({item.query_language for item in self.items})


def load_labeled_dataset(path: str | Path, lexicon: Lexicon | None = None) -> LabeledDataset:
    """Parse ``target_word_id<TAB>target_definition_id<TAB>query_language<TAB>query_text``
    records; target ids are checked against the lexicon when one is given."""
    path = Path(path)
    items: list[LabeledItem] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise MalformedRecordError(path, line_no, "record", f"expected 4 fields, got {len(fields)}")
            try:
                word_id, definition_id = int(fields[0]), int(fields[1])
            except ValueError:
                raise MalformedRecordError(path, line_no, "id", "non-integer id") from None
            language, text = fields[2].strip(), fields[3].strip()
            if not language or not text:
                raise MalformedRecordError(path, line_no, "query", "empty language or text")
            if lexicon is not None:
                entry = lexicon.definition(definition_id)
                if entry is None or entry.word_id != word_id:
                    raise MissingTargetError(
                        f"{path}:{line_no}: definition {definition_id} of word {word_id} not in lexicon"
                    )
            items.append(LabeledItem(word_id, definition_id, language, text))
    return LabeledDataset(items=items)


def dedup_hits(hits: Sequence[SearchHit], limit: int) -> list[SearchHit]:
    """Keep the first (best) hit of each word, in order, up to ``limit``."""
    seen: set[int] = set()
    kept: list[SearchHit] = []
    for hit in hits:
        word_id = hit.payload.word_id
        if word_id in seen:
            continue
        seen.add(word_id)
        kept.append(hit)
        if len(kept) == limit:
            break
    return kept


def dedup_to_words(hits: Sequence[SearchHit], limit: int, query_id: int = 0) -> RankedResult:
    deduped = dedup_hits(hits, limit)
    return RankedResult(query_id=query_id, word_ids=tuple(h.payload.word_id for h in deduped))


def run_unlabeled_eval(
    index: HnswIndex,
    lexicon: Lexicon,
    gt: GroundTruth,
    embeddings: EmbeddingSet,
    cfg: UnlabeledEvalConfig | None = None,
) -> EvalReport:
    """Judge every eligible definition as a query against the index.

    Missing vectors abort the run: silently skipping queries would bias a
    model comparison, which is the protocol's whole point.
    """
    cfg = cfg or UnlabeledEvalConfig()
    eligible = sorted(filter_eligible_queries(lexicon))
    if cfg.query_language_filter is not None:
        eligible = [
            d for d in eligible if cfg.query_language_filter(lexicon.definitions[d].language)
        ]
    fetch = cfg.fetch_multiplier * cfg.candidates_to_retrieve
    ef = max(cfg.ef_search if cfg.ef_search is not None else index.params.ef_search, fetch)

    judgments: list[QueryJudgment] = []
    rel_sizes: list[int] = []
    for definition_id in eligible:
        vector = embeddings.entries.get(definition_id)
        if vector is None:
            raise MissingEmbeddingError(definition_id)
        word_id = lexicon.definitions[definition_id].word_id
        hits = search(index, vector, k=fetch, ef=ef)
        hits = [h for h in hits if h.payload.definition_id != definition_id]
        ranked = dedup_to_words(hits, cfg.candidates_to_retrieve, query_id=definition_id)
        relevant = retrievable_relevant_set(gt, word_id, definition_id, lexicon)
        judgments.append(QueryJudgment(ranked=ranked, relevant=frozenset(relevant)))
        rel_sizes.append(len(relevant))

    if not judgments:
        raise EmptyJudgmentsError("no eligible queries matched the language filter")
    return aggregate(judgments, rel_sizes)


def run_labeled_eval(
    index: HnswIndex,
    lexicon: Lexicon,
    gt: GroundTruth,
    dataset: LabeledDataset,
    query_embedder: Callable[[str], np.ndarray],
    cfg: UnlabeledEvalConfig | None = None,
) -> dict[str, EvalReport]:
    """One report per query language.

    Credit goes to the target word (any sense) or a synonym; whether the
    best-ranked hit of the target word was the linked sense is reported
    separately as the ``linked_sense_rate`` extra.
    """
    cfg = cfg or UnlabeledEvalConfig()
    if not dataset.items:
        raise EmptyJudgmentsError("labeled dataset is empty")
    indexed_words = set(np.asarray(index.word_ids, dtype=np.uint64).tolist())
    fetch = cfg.fetch_multiplier * cfg.candidates_to_retrieve
    ef = max(cfg.ef_search if cfg.ef_search is not None else index.params.ef_search, fetch)

    by_language: dict[str, list[LabeledItem]] = {}
    for item in dataset.items:
        by_language.setdefault(item.query_language, []).append(item)

    reports: dict[str, EvalReport] = {}
    for language in sorted(by_language):
        judgments: list[QueryJudgment] = []
        rel_sizes: list[int] = []
        linked_sense_hits = 0
        target_appearances = 0
        skipped = 0
        for query_no, item in enumerate(by_language[language]):
            entry = lexicon.definition(item.target_definition_id)
            if entry is None or entry.word_id != item.target_word_id:
                raise MissingTargetError(
                    f"definition {item.target_definition_id} of word {item.target_word_id} not in lexicon"
                )
            if item.target_word_id not in indexed_words:
                raise MissingTargetError(
                    f"target word {item.target_word_id} has no indexed definition"
                )
            try:
                vector = query_embedder(item.query_text)
            except DataError as exc:
                skipped += 1
                logger.warning("skipping %r (%s): %s", item.query_text, language, exc)
                continue
            hits = search(index, vector, k=fetch, ef=ef)
            deduped = dedup_hits(hits, cfg.candidates_to_retrieve)
            relevant = {
                w for w in gt.for_word(item.target_word_id) if w in indexed_words
            }
            for hit in deduped:
                if hit.payload.word_id == item.target_word_id:
                    target_appearances += 1
                    if hit.payload.definition_id == item.target_definition_id:
                        linked_sense_hits += 1
                    break
            ranked = RankedResult(
                query_id=query_no, word_ids=tuple(h.payload.word_id for h in deduped)
            )
            judgments.append(QueryJudgment(ranked=ranked, relevant=frozenset(relevant)))
            rel_sizes.append(len(relevant))
        if not judgments:
            raise EmptyJudgmentsError(f"no judgable queries for language {language!r}")
        report = aggregate(judgments, rel_sizes)
        report.extras["linked_sense_rate"] = (
            linked_sense_hits / target_appearances if target_appearances else 0.0
        )
        if skipped:
            report.extras["skipped_queries"] = float(skipped)
        reports[language] = report
    return reports
