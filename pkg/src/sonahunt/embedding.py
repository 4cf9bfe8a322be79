"""Definition and query vectors.

Vectors are plain ``numpy.float32`` arrays, normalized to unit length on
ingest so that cosine similarity reduces to a dot product. Three sources
exist:

* precomputed embedding files (any offline model) in the ``EMB1`` binary
  format,
* the whitespace-average baseline over a static word-vector table,
* a deterministic hash embedder for tests and synthetic fixtures.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AllTokensOutOfVocabularyError,
    BadMagicError,
    DataError,
    DimMismatchError,
    MalformedRecordError,
    TruncatedFileError,
    ZeroVectorError,
)

MAGIC = b"EMB1"
NORM_TOLERANCE = 1e-5


def normalize(vector: np.ndarray) -> np.ndarray:
    """Scale to unit Euclidean norm. Raises :class:`ZeroVectorError` on
    zero or non-finite input."""
    v = np.asarray(vector, dtype=np.float32)
    if not np.all(np.isfinite(v)):
        raise ZeroVectorError("vector has NaN or Inf components")
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if norm <= 0.0:
        raise ZeroVectorError("cannot normalize a zero vector")
    return (v / np.float32(norm)).astype(np.float32)


def is_normalized(vector: np.ndarray, tolerance: float = NORM_TOLERANCE) -> bool:
    norm = float(np.linalg.norm(np.asarray(vector, dtype=np.float64)))
    return abs(norm - 1.0) <= tolerance


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two already-normalized vectors."""
    return float(np.dot(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))


def hash_embedder(text: str, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-embedding of ``text``.

    Same (text, dim, seed) always yields the same unit vector; distinct
    texts collide only with negligible probability. Stable across runs and
    platforms (keyed BLAKE2 digest feeding a PCG64 stream).
    """
    if dim < 2:
        raise ValueError("hash_embedder requires dim >= 2")
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=16, key=key).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))
    raw = rng.standard_normal(dim)
    return normalize(raw.astype(np.float32))


# --- word-vector table (whitespace-average baseline) ------------------------


@dataclass(slots=True)
class WordVectorTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_word_vector_table(path: str | Path) -> WordVectorTable:
    """Parse a text word-vector table.

    First line is ``<vocab_size> <dim>``; each following line is
    ``token c1 c2 ... cdim`` with space-separated decimals.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MalformedRecordError(path, 1, "header", "expected '<vocab_size> <dim>'")
        try:
            vocab_size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise MalformedRecordError(path, 1, "header", "non-integer header fields") from None
        if dim < 1:
            raise MalformedRecordError(path, 1, "dim", "dimension must be positive")
        for line_no, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise MalformedRecordError(
                    path, line_no, "components", f"expected {dim} components, got {len(parts) - 1}"
                )
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError:
                raise MalformedRecordError(path, line_no, "components", "non-numeric component") from None
            vectors[parts[0]] = vec
    if len(vectors) != vocab_size:
        raise MalformedRecordError(
            path, 1, "vocab_size", f"header says {vocab_size} tokens, file has {len(vectors)}"
        )
    return WordVectorTable(dim=dim, vectors=vectors)


def embed_average(text: str, table: WordVectorTable) -> np.ndarray:
    """Whitespace-tokenize, drop out-of-vocabulary tokens, average the
    rest, normalize. Token order does not matter."""
    tokens = text.split()
    found = [table.vectors[t] for t in tokens if t in table.vectors]
    if not found:
        raise AllTokensOutOfVocabularyError(f"no known token in {text!r}")
    mean = np.mean(np.stack(found).astype(np.float64), axis=0)
    return normalize(mean.astype(np.float32))


# --- embedding sets (offline-model boundary) --------------------------------


@dataclass(slots=True)
class EmbeddingSet:
    """Vectors for a collection of definitions, keyed by definition_id."""

    dim: int
    entries: dict[int, np.ndarray]
    model_name: str = "unknown"

    def __len__(self) -> int:
        return len(self.entries)


def write_embedding_set(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Write the binary ``EMB1`` format.

    Layout (little-endian): magic ``EMB1``, dim as u32, count as u64, then
    count records of (definition_id u64, dim x f32). Records are written in
    ascending definition_id order so identical sets produce identical bytes.
    """
    record = np.dtype([("id", "<u8"), ("vec", "<f4", (embeddings.dim,))])
    block = np.empty(len(embeddings.entries), dtype=record)
    for i, definition_id in enumerate(sorted(embeddings.entries)):
        vec = embeddings.entries[definition_id]
        if vec.shape != (embeddings.dim,):
            raise DimMismatchError(
                f"definition {definition_id}: vector dim {vec.shape} does not match set dim {embeddings.dim}"
            )
        block[i] = (definition_id, vec)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", embeddings.dim))
        fh.write(struct.pack("<Q", len(embeddings.entries)))
        fh.write(block.tobytes())


def load_embedding_set(path: str | Path) -> EmbeddingSet:
    """Read an ``EMB1`` file; the model name defaults to the file stem."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise BadMagicError(f"{path}: expected magic {MAGIC!r}, got {data[:4]!r}")
    if len(data) < 16:
        raise TruncatedFileError(f"{path}: header truncated")
    dim = struct.unpack_from("<I", data, 4)[0]
    count = struct.unpack_from("<Q", data, 8)[0]
    if dim < 1:
        raise DimMismatchError(f"{path}: header dim {dim} is not positive")
    record = np.dtype([("id", "<u8"), ("vec", "<f4", (dim,))])
    expected = 16 + count * record.itemsize
    if len(data) != expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} bytes for {count} records of dim {dim}, got {len(data)}"
        )
    block = np.frombuffer(data, dtype=record, count=count, offset=16)
    entries: dict[int, np.ndarray] = {}
    for i in range(count):
        definition_id = int(block["id"][i])
        if definition_id in entries:
            raise DataError(f"{path}: duplicate definition_id {definition_id}")
        entries[definition_id] = np.array(block["vec"][i], dtype=np.float32)
    vectors_ok = count == 0 or bool(np.all(np.isfinite(block["vec"])))
    if not vectors_ok:
        raise DataError(f"{path}: embedding file contains NaN or Inf components")
    return EmbeddingSet(dim=dim, entries=entries, model_name=path.stem)
