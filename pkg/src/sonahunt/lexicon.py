"""Dictionary data model: words, definitions, and symmetric synonymy.

Input is three line-delimited UTF-8 files (tab-separated fields, blank
lines and ``#`` comments ignored):

* words:        ``word_id<TAB>language<TAB>surface``
* definitions:  ``definition_id<TAB>word_id<TAB>language<TAB>text``
* synonyms:     ``source_word_id<TAB>target_word_id[<TAB>relation_type]``

The optional third synonym column carries a relation type; anything other
than ``word`` (sense-level links) is dropped with a counted warning, as are
self-loops and duplicate pairs. One-directional synonym links are mirrored
into a symmetric relation during finalization.

A finalized :class:`Lexicon` is immutable by convention and safe for
concurrent reads.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    DanglingReferenceError,
    MalformedRecordError,
    MissingDefinitionError,
)

# IDs are declared unsigned 64-bit in the file schema, but the relational
# store keeps them in SQLite INTEGER columns (signed 64-bit).
MAX_ID = 2**63 - 1

WORD_RELATION = "word"


@dataclass(frozen=True, slots=True)
class WordEntry:
    word_id: int
    surface: str
    language: str


@dataclass(frozen=True, slots=True)
class DefinitionEntry:
    definition_id: int
    word_id: int
    text: str
    language: str


@dataclass(frozen=True, slots=True)
class SynonymRelation:
    source_word_id: int
    target_word_id: int


@dataclass(slots=True)
class LoadWarnings:
    """Counts of records dropped during parsing."""

    self_synonyms: int = 0
    non_word_relations: int = 0
    duplicate_relations: int = 0


@dataclass(slots=True)
class LexiconStats:
    word_count: int
    definition_count_by_language: dict[str, int]
    raw_synonym_count: int
    mirrored_synonym_count: int
    avg_synonyms_per_word: float


@dataclass(slots=True)
class Lexicon:
    """Finalized dictionary: referentially closed, synonymy mirrored."""

    words: dict[int, WordEntry]
    definitions: dict[int, DefinitionEntry]
    synonyms: set[tuple[int, int]]
    raw_synonym_count: int
    warnings: LoadWarnings = field(default_factory=LoadWarnings)
    # lookup maps, built at finalization
    definitions_of: dict[int, tuple[int, ...]] = field(default_factory=dict)
    synonyms_of: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def word(self, word_id: int) -> WordEntry | None:
        return self.words.get(word_id)

    def definition(self, definition_id: int) -> DefinitionEntry | None:
        return self.definitions.get(definition_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lexicon):
            return NotImplemented
        return (
            self.words == other.words
            and self.definitions == other.definitions
            and self.synonyms == other.synonyms
            and self.raw_synonym_count == other.raw_synonym_count
            and self.definitions_of == other.definitions_of
            and self.synonyms_of == other.synonyms_of
        )


def _records(path: Path) -> Iterator[tuple[int, list[str]]]:
    """Yield (line_no, fields) for data lines, skipping blanks and comments."""
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield line_no, line.split("\t")


def _parse_id(path: Path, line_no: int, field_name: str, raw: str) -> int:
    try:
        value = int(raw, 10)
    except ValueError:
        raise MalformedRecordError(path, line_no, field_name, f"not an integer: {raw!r}") from None
    if value < 0:
        raise MalformedRecordError(path, line_no, field_name, "negative id")
    if value > MAX_ID:
        raise MalformedRecordError(path, line_no, field_name, f"id exceeds supported range (> {MAX_ID})")
    return value


def _parse_language(path: Path, line_no: int, raw: str) -> str:
    lang = raw.strip()
    if not lang or " " in lang or len(lang) > 8:
        raise MalformedRecordError(path, line_no, "language", f"bad language code: {raw!r}")
    return lang


def load_words(path: str | Path) -> dict[int, WordEntry]:
    path = Path(path)
    words: dict[int, WordEntry] = {}
    for line_no, fields in _records(path):
        if len(fields) != 3:
            raise MalformedRecordError(path, line_no, "record", f"expected 3 fields, got {len(fields)}")
        word_id = _parse_id(path, line_no, "word_id", fields[0])
        language = _parse_language(path, line_no, fields[1])
        surface = fields[2].strip()
        if not surface:
            raise MalformedRecordError(path, line_no, "surface", "empty surface form")
        if word_id in words:
            raise MalformedRecordError(path, line_no, "word_id", f"duplicate word_id {word_id}")
        words[word_id] = WordEntry(word_id, surface, language)
    return words


def load_definitions(path: str | Path, words: dict[int, WordEntry]) -> dict[int, DefinitionEntry]:
    path = Path(path)
    definitions: dict[int, DefinitionEntry] = {}
    for line_no, fields in _records(path):
        if len(fields) != 4:
            raise MalformedRecordError(path, line_no, "record", f"expected 4 fields, got {len(fields)}")
        definition_id = _parse_id(path, line_no, "definition_id", fields[0])
        word_id = _parse_id(path, line_no, "word_id", fields[1])
        language = _parse_language(path, line_no, fields[2])
        text = fields[3].strip()
        if not text:
            raise MalformedRecordError(path, line_no, "text", "empty definition text")
        if definition_id in definitions:
            raise MalformedRecordError(path, line_no, "definition_id", f"duplicate definition_id {definition_id}")
        if word_id not in words:
            raise DanglingReferenceError(
                f"{path}:{line_no}: definition {definition_id} references unknown word_id {word_id}"
            )
        definitions[definition_id] = DefinitionEntry(definition_id, word_id, text, language)
    return definitions


def load_synonyms(
    path: str | Path, words: dict[int, WordEntry], warnings: LoadWarnings
) -> list[SynonymRelation]:
    """Parse synonym records, dropping self-loops, sense-level relations
    and duplicates (each with a counted warning)."""
    path = Path(path)
    seen: set[tuple[int, int]] = set()
    relations: list[SynonymRelation] = []
    for line_no, fields in _records(path):
        if len(fields) not in (2, 3):
            raise MalformedRecordError(path, line_no, "record", f"expected 2 or 3 fields, got {len(fields)}")
        if len(fields) == 3 and fields[2].strip() != WORD_RELATION:
            warnings.non_word_relations += 1
            continue
        source = _parse_id(path, line_no, "source_word_id", fields[0])
        target = _parse_id(path, line_no, "target_word_id", fields[1])
        for endpoint in (source, target):
            if endpoint not in words:
                raise DanglingReferenceError(
                    f"{path}:{line_no}: synonym references unknown word_id {endpoint}"
                )
        if source == target:
            warnings.self_synonyms += 1
            continue
        if (source, target) in seen:
            warnings.duplicate_relations += 1
            continue
        seen.add((source, target))
        relations.append(SynonymRelation(source, target))
    return relations


def mirror_synonyms(relations: Iterable[SynonymRelation]) -> list[SynonymRelation]:
    """Symmetric closure with duplicates removed, sorted for determinism.

    Idempotent: mirroring an already-symmetric relation set is a no-op.
    """
    pairs: set[tuple[int, int]] = set()
    for rel in relations:
        pairs.add((rel.source_word_id, rel.target_word_id))
        pairs.add((rel.target_word_id, rel.source_word_id))
    return [SynonymRelation(s, t) for s, t in sorted(pairs)]


def _finalize(
    words: dict[int, WordEntry],
    definitions: dict[int, DefinitionEntry],
    raw_relations: list[SynonymRelation],
    warnings: LoadWarnings,
) -> Lexicon:
    mirrored = mirror_synonyms(raw_relations)
    synonyms = {(r.source_word_id, r.target_word_id) for r in mirrored}

    defs_of: dict[int, list[int]] = {}
    for entry in definitions.values():
        defs_of.setdefault(entry.word_id, []).append(entry.definition_id)

    missing = [w for w in words if w not in defs_of]
    if missing:
        shown = ", ".join(str(w) for w in sorted(missing)[:5])
        raise MissingDefinitionError(
            f"{len(missing)} word(s) have no definition (e.g. word_id {shown})"
        )

    syns_of: dict[int, list[int]] = {}
    for source, target in synonyms:
        syns_of.setdefault(source, []).append(target)

    return Lexicon(
        words=words,
        definitions=definitions,
        synonyms=synonyms,
        raw_synonym_count=len(raw_relations),
        warnings=warnings,
        definitions_of={w: tuple(sorted(ids)) for w, ids in defs_of.items()},
        synonyms_of={w: tuple(sorted(ids)) for w, ids in syns_of.items()},
    )


def load_lexicon(
    words_path: str | Path, definitions_path: str | Path, synonyms_path: str | Path
) -> Lexicon:
    """Load and finalize a lexicon from the three record files."""
    warnings = LoadWarnings()
    words = load_words(words_path)
    definitions = load_definitions(definitions_path, words)
    raw_relations = load_synonyms(synonyms_path, words, warnings)
    return _finalize(words, definitions, raw_relations, warnings)


def lexicon_stats(lexicon: Lexicon) -> LexiconStats:
    """Summary counts for a finalized lexicon.

    ``avg_synonyms_per_word`` divides the mirrored relation count by the
    number of words appearing in at least one relation (0.0 when there are
    no relations).
    """
    by_language: dict[str, int] = {}
    for entry in lexicon.definitions.values():
        by_language[entry.language] = by_language.get(entry.language, 0) + 1

    words_with_synonyms = len(lexicon.synonyms_of)
    mirrored = len(lexicon.synonyms)
    avg = mirrored / words_with_synonyms if words_with_synonyms else 0.0

    return LexiconStats(
        word_count=len(lexicon.words),
        definition_count_by_language=dict(sorted(by_language.items())),
        raw_synonym_count=lexicon.raw_synonym_count,
        mirrored_synonym_count=mirrored,
        avg_synonyms_per_word=avg,
    )


def filter_eligible_queries(lexicon: Lexicon) -> set[int]:
    """Definition IDs usable as evaluation queries.

    A definition qualifies when its word has at least two definitions or at
    least one synonym, i.e. some ground-truth definition other than the
    query itself exists.
    """
    eligible: set[int] = set()
    for word_id, def_ids in lexicon.definitions_of.items():
        if len(def_ids) >= 2 or word_id in lexicon.synonyms_of:
            eligible.update(def_ids)
    return eligible


# --- persistence -----------------------------------------------------------

_SCHEMA = """
CREATE TABLE words (
    word_id  INTEGER PRIMARY KEY,
    language TEXT NOT NULL,
    surface  TEXT NOT NULL
);
CREATE TABLE definitions (
    definition_id INTEGER PRIMARY KEY,
    word_id       INTEGER NOT NULL REFERENCES words(word_id),
    language      TEXT NOT NULL,
    text          TEXT NOT NULL
);
CREATE TABLE synonyms (
    source_word_id INTEGER NOT NULL,
    target_word_id INTEGER NOT NULL,
    PRIMARY KEY (source_word_id, target_word_id)
) WITHOUT ROWID;
CREATE TABLE meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""

STORE_FILENAME = "lexicon.sqlite"


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    """Persist a finalized lexicon into a single-file SQLite store."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists():
        path.unlink()
    con = sqlite3.connect(path)
    try:
        con.executescript(_SCHEMA)
        con.executemany(
            "INSERT INTO words VALUES (?, ?, ?)",
            ((w.word_id, w.language, w.surface) for w in lexicon.words.values()),
        )
        con.executemany(
            "INSERT INTO definitions VALUES (?, ?, ?, ?)",
            (
                (d.definition_id, d.word_id, d.language, d.text)
                for d in lexicon.definitions.values()
            ),
        )
        con.executemany("INSERT INTO synonyms VALUES (?, ?)", sorted(lexicon.synonyms))
        meta = {
            "raw_synonym_count": lexicon.raw_synonym_count,
            "self_synonyms": lexicon.warnings.self_synonyms,
            "non_word_relations": lexicon.warnings.non_word_relations,
            "duplicate_relations": lexicon.warnings.duplicate_relations,
        }
        con.executemany("INSERT INTO meta VALUES (?, ?)", [(k, str(v)) for k, v in meta.items()])
        con.commit()
    finally:
        con.close()


def open_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon previously written by :func:`save_lexicon`."""
    con = sqlite3.connect(Path(path))
    try:
        words = {
            row[0]: WordEntry(row[0], row[2], row[1])
            for row in con.execute("SELECT word_id, language, surface FROM words")
        }
        definitions = {
            row[0]: DefinitionEntry(row[0], row[1], row[3], row[2])
            for row in con.execute(
                "SELECT definition_id, word_id, language, text FROM definitions"
            )
        }
        relations = [
            SynonymRelation(row[0], row[1])
            for row in con.execute("SELECT source_word_id, target_word_id FROM synonyms")
        ]
        meta = dict(con.execute("SELECT key, value FROM meta"))
    finally:
        con.close()

    warnings = LoadWarnings(
        self_synonyms=int(meta.get("self_synonyms", 0)),
        non_word_relations=int(meta.get("non_word_relations", 0)),
        duplicate_relations=int(meta.get("duplicate_relations", 0)),
    )
    lexicon = _finalize(words, definitions, relations, warnings)
    # stored relations are already mirrored; keep the original raw count
    lexicon.raw_synonym_count = int(meta.get("raw_synonym_count", len(relations)))
    return lexicon
