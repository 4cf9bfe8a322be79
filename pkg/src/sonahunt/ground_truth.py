"""Relevance sets derived from the synonymy graph.

For every word, the relevant set is the word itself plus its mirrored
synonyms: a user describing a concept should accept any of them as a hit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import DefinitionWordMismatchError, UnknownWordError
from .lexicon import Lexicon


@dataclass(slots=True)
class GroundTruth:
    relevant: dict[int, set[int]]

    def for_word(self, word_id: int) -> set[int]:
        try:
            return self.relevant[word_id]
        except KeyError:
            raise UnknownWordError(f"word_id {word_id} not in ground truth") from None


def build_ground_truth(lexicon: Lexicon) -> GroundTruth:
    """relevant[w] = {w} plus the mirrored synonyms of w, for every word."""
    relevant = {
        word_id: {word_id, *lexicon.synonyms_of.get(word_id, ())}
        for word_id in lexicon.words
    }
    return GroundTruth(relevant=relevant)


def retrievable_relevant_set(
    gt: GroundTruth,
    query_word: int,
    query_definition: int,
    lexicon: Lexicon,
) -> set[int]:
    """Relevant words that can actually appear when the query definition
    itself is excluded from results.

    A word counts when it has at least one definition other than the query
    definition. The size of this set is the |Rel| denominator for average
    precision: an unattainable word must not bound a perfect system's score
    below 1.
    """
    if query_word not in lexicon.words:
        raise UnknownWordError(f"word_id {query_word} not in lexicon")
    entry = lexicon.definition(query_definition)
    if entry is None or entry.word_id != query_word:
        raise DefinitionWordMismatchError(
            f"definition {query_definition} does not belong to word {query_word}"
        )
    retrievable = set()
    for word_id in gt.for_word(query_word):
        definitions = lexicon.definitions_of.get(word_id, ())
        other = len(definitions) - (1 if query_definition in definitions else 0)
        if other >= 1:
            retrievable.add(word_id)
    return retrievable


def dump_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    """Inspection dump: ``word_id<TAB>comma-separated relevant ids``."""
    with open(path, "w", encoding="utf-8") as fh:
        for word_id in sorted(gt.relevant):
            ids = ",".join(str(w) for w in sorted(gt.relevant[word_id]))
            fh.write(f"{word_id}\t{ids}\n")
