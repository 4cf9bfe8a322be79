"""Shared fixture builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from sonahunt.embedding import hash_embedder
from sonahunt.index import IndexedPoint, Payload


def write_tsv(path: Path, rows: list[tuple]) -> Path:
    path.write_text("".join("\t".join(str(f) for f in row) + "\n" for row in rows), encoding="utf-8")
    return path


def write_lexicon_files(
    directory: Path,
    words: list[tuple],
    definitions: list[tuple],
    synonyms: list[tuple],
) -> tuple[Path, Path, Path]:
    return (
        write_tsv(directory / "words.tsv", words),
        write_tsv(directory / "definitions.tsv", definitions),
        write_tsv(directory / "synonyms.tsv", synonyms),
    )


def tiny_lexicon_rows() -> tuple[list[tuple], list[tuple], list[tuple]]:
    """3 words, 4 definitions, 2 one-directional synonym lines."""
    words = [
        (1, "et", "koer"),
        (2, "et", "peni"),
        (3, "et", "kass"),
    ]
    definitions = [
        (10, 1, "et", "koduloom kes haugub"),
        (11, 1, "en", "a domestic animal that barks"),
        (12, 2, "et", "koer kõnekeeles"),
        (13, 3, "et", "koduloom kes näub"),
    ]
    synonyms = [
        (1, 2),
        (2, 3),
    ]
    return words, definitions, synonyms


def synonym_pair_rows(
    pairs: int,
    second_language: str = "et",
) -> tuple[list[tuple], list[tuple], list[tuple]]:
    """``pairs`` synonym pairs; each word has exactly one definition and the
    two definitions of a pair share identical text (so a text-hashing
    embedder maps them to identical vectors). Synonym links are
    one-directional; mirroring doubles them.

    Word ids: pair i -> (2i+1, 2i+2); definition ids: (1001+2i, 1002+2i).
    The second word's definition carries ``second_language``.
    """
    words: list[tuple] = []
    definitions: list[tuple] = []
    synonyms: list[tuple] = []
    for i in range(pairs):
        first, second = 2 * i + 1, 2 * i + 2
        words.append((first, "et", f"sona{first}"))
        words.append((second, "et", f"sona{second}"))
        shared_text = f"moiste {i} kirjeldus millel on sama sisu"
        definitions.append((1001 + 2 * i, first, "et", shared_text))
        definitions.append((1002 + 2 * i, second, second_language, shared_text))
        synonyms.append((first, second))
    return words, definitions, synonyms


def random_unit_vectors(n: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n, dim)).astype(np.float32)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors.astype(np.float32)


def embedding_like_vectors(n: int, dim: int, intrinsic: int = 24, seed: int = 0) -> np.ndarray:
    """Random normalized vectors with the geometry of sentence embeddings.

    Text-encoder outputs occupy a low-dimensional manifold inside their
    ambient space, which is what makes graph ANN search effective on them;
    isotropic Gaussian noise has no such structure and defeats any
    fixed-degree proximity graph. Sampling from a random ``intrinsic``-dim
    subspace reproduces the realistic regime.
    """
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((intrinsic, dim)).astype(np.float32)
    latent = rng.standard_normal((n, intrinsic)).astype(np.float32)
    vectors = latent @ projection
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.ascontiguousarray(vectors, dtype=np.float32)


def random_points(n: int, dim: int, seed: int, languages: tuple[str, ...] = ("et",)) -> list[IndexedPoint]:
    vectors = random_unit_vectors(n, dim, seed)
    return [
        IndexedPoint(
            vector=vectors[i],
            payload=Payload(
                definition_id=i + 1,
                word_id=(i // 2) + 1,
                language=languages[i % len(languages)],
            ),
        )
        for i in range(n)
    ]


def hash_points(texts: list[str], dim: int, seed: int) -> list[IndexedPoint]:
    return [
        IndexedPoint(
            vector=hash_embedder(text, dim, seed),
            payload=Payload(definition_id=i + 1, word_id=i + 1, language="et"),
        )
        for i, text in enumerate(texts)
    ]
