"""HNSW approximate nearest-neighbor index with payload filtering.

A multi-layer navigable small-world graph over unit-length float32
vectors. Distance is ``1 - dot`` (cosine on normalized input); results
are ranked by descending score with ties broken by ascending
definition_id.

The index is append-only and immutable once built: construction happens
in :func:`build_index`, after which any number of threads may search
concurrently. The traversal hot loops live in a kernel module (compiled
extension when available, NumPy fallback otherwise); see ``kernels.py``.

``brute_force_search`` is the exact oracle used to measure recall and to
pin down search semantics: HNSW search with ``ef`` at least the index
size and no filter must match it exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from types import ModuleType
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..embedding import NORM_TOLERANCE
from ..errors import (
    DimMismatchError,
    DuplicateDefinitionIdError,
    TruncatedFileError,
    UnnormalizedVectorError,
    VersionMismatchError,
)
from . import kernels

MAGIC = b"HNSW"
VERSION = 1


@dataclass(frozen=True, slots=True)
class Payload:
    definition_id: int
    word_id: int
    language: str


@dataclass(frozen=True, slots=True)
class IndexedPoint:
    vector: np.ndarray
    payload: Payload


@dataclass(frozen=True, slots=True)
class SearchHit:
    payload: Payload
    score: float


@dataclass(frozen=True, slots=True)
class HnswParams:
    m: int = 16
    ef_construction: int = 200
    ef_search: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.ef_construction < self.m:
            raise ValueError("ef_construction must be >= m")
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")


@dataclass(frozen=True, slots=True)
class LanguageFilter:
    """Payload predicate matching a fixed set of language codes.

    Recognized by the index so the per-point mask is computed vectorized
    and cached; arbitrary callables are re-evaluated per search.
    """

    languages: frozenset[str]

    def __call__(self, payload: Payload) -> bool:
        return payload.language in self.languages


def language_filter(*languages: str) -> LanguageFilter:
    return LanguageFilter(frozenset(languages))


class HnswIndex:
    """Built index state. Construct via :func:`build_index` or :func:`load_index`."""

    def __init__(
        self,
        params: HnswParams,
        dim: int,
        vectors: np.ndarray,
        definition_ids: np.ndarray,
        word_ids: np.ndarray,
        languages: list[str],
        language_idx: np.ndarray,
        levels: np.ndarray,
        adj: np.ndarray,
        counts: np.ndarray,
        entry_point: int,
        max_level: int,
        kernel: ModuleType | None = None,
    ) -> None:
        self.params = params
        self.dim = dim
        self.vectors = vectors
        self.definition_ids = definition_ids
        self.word_ids = word_ids
        self.languages = languages
        self.language_idx = language_idx
        self.levels = levels
        self.adj = adj
        self.counts = counts
        self.entry_point = entry_point
        self.max_level = max_level
        self.kernel = kernel if kernel is not None else kernels.default_kernel()
        self.adj_start, self.count_start = _layout(levels, params.m)
        self._mask_cache: dict[frozenset[str], np.ndarray] = {}

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def m0(self) -> int:
        return 2 * self.params.m

    def payload(self, node: int) -> Payload:
        return Payload(
            definition_id=int(self.definition_ids[node]),
            word_id=int(self.word_ids[node]),
            language=self.languages[self.language_idx[node]],
        )

    def iter_points(self) -> Iterator[IndexedPoint]:
        for node in range(len(self)):
            yield IndexedPoint(vector=self.vectors[node], payload=self.payload(node))

    def mask_for(self, predicate: Callable[[Payload], bool]) -> np.ndarray:
        if isinstance(predicate, LanguageFilter):
            cached = self._mask_cache.get(predicate.languages)
            if cached is None:
                wanted = [i for i, lang in enumerate(self.languages) if lang in predicate.languages]
                cached = np.isin(self.language_idx, wanted).astype(np.uint8)
                self._mask_cache[predicate.languages] = cached
            return cached
        return np.fromiter(
            (predicate(self.payload(i)) for i in range(len(self))), dtype=np.uint8, count=len(self)
        )

    def slot(self, node: int, level: int) -> np.ndarray:
        """Used portion of a node's neighbor list at one level (a view)."""
        offset = int(self.adj_start[node]) + (0 if level == 0 else self.m0 + (level - 1) * self.params.m)
        count = int(self.counts[self.count_start[node] + level])
        return self.adj[offset : offset + count]


def _layout(levels: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-node offsets into the flat adjacency and count arrays."""
    m0 = 2 * m
    adj_start = np.zeros(len(levels), dtype=np.int64)
    count_start = np.zeros(len(levels), dtype=np.int64)
    if len(levels) > 1:
        block_sizes = m0 + levels.astype(np.int64) * m
        np.cumsum(block_sizes[:-1], out=adj_start[1:])
        np.cumsum(levels[:-1].astype(np.int64) + 1, out=count_start[1:])
    return adj_start, count_start


def _sample_levels(n: int, m: int, seed: int) -> np.ndarray:
    """Geometric level assignment with multiplier 1/ln(m), seeded."""
    rng = np.random.Generator(np.random.PCG64(seed))
    mult = 1.0 / math.log(m)
    uniform = 1.0 - rng.random(n)  # (0, 1], avoids log(0)
    return np.floor(-np.log(uniform) * mult).astype(np.int32)


def _validate_points(points: Sequence[IndexedPoint]) -> tuple[np.ndarray, int]:
    dim = int(np.asarray(points[0].vector).shape[0])
    vectors = np.empty((len(points), dim), dtype=np.float32)
    seen: set[int] = set()
    for i, point in enumerate(points):
        vec = np.asarray(point.vector, dtype=np.float32)
        if vec.shape != (dim,):
            raise DimMismatchError(
                f"point {i} (definition {point.payload.definition_id}) has dim {vec.shape}, expected ({dim},)"
            )
        if point.payload.definition_id in seen:
            raise DuplicateDefinitionIdError(
                f"definition_id {point.payload.definition_id} appears more than once"
            )
        seen.add(point.payload.definition_id)
        vectors[i] = vec
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)[0]
    if bad.size:
        raise UnnormalizedVectorError(
            f"point {bad[0]} has norm {norms[bad[0]]:.6f}; vectors must be unit length"
        )
    return vectors, dim


def build_index(
    points: Sequence[IndexedPoint],
    params: HnswParams | None = None,
    kernel: ModuleType | None = None,
) -> HnswIndex:
    """Insert all points into a fresh graph.

    Deterministic for a fixed seed, insertion order, and kernel. The
    finished graph is connectivity-repaired, canonically ordered, and
    passes :func:`audit`.
    """
    params = params or HnswParams()
    kern = kernel if kernel is not None else kernels.default_kernel()
    n = len(points)
    if n == 0:
        return HnswIndex(
            params, 0,
            np.empty((0, 0), dtype=np.float32),
            np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64),
            [], np.empty(0, dtype=np.uint16), np.empty(0, dtype=np.int32),
            np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32),
            entry_point=-1, max_level=-1, kernel=kern,
        )

    vectors, dim = _validate_points(points)
    definition_ids = np.array([p.payload.definition_id for p in points], dtype=np.uint64)
    word_ids = np.array([p.payload.word_id for p in points], dtype=np.uint64)
    languages = sorted({p.payload.language for p in points})
    lang_to_idx = {lang: i for i, lang in enumerate(languages)}
    language_idx = np.array([lang_to_idx[p.payload.language] for p in points], dtype=np.uint16)

    m, m0 = params.m, 2 * params.m
    levels = _sample_levels(n, m, params.seed)
    adj_start, count_start = _layout(levels, m)
    total_adj = int(adj_start[-1]) + m0 + int(levels[-1]) * m
    total_slots = int(count_start[-1]) + int(levels[-1]) + 1
    adj = np.full(total_adj, -1, dtype=np.int32)
    counts = np.zeros(total_slots, dtype=np.int32)

    entry_point = 0
    max_level = int(levels[0])
    for node in range(1, n):
        node_level = int(levels[node])
        query = vectors[node]
        entries = np.array([entry_point], dtype=np.int32)
        for level in range(max_level, node_level, -1):
            ids, _ = kern.search_layer(
                vectors, adj, counts, adj_start, count_start,
                m, m0, level, entries, query, 1,
            )
            entries = ids
        for level in range(min(node_level, max_level), -1, -1):
            ids, dists = kern.search_layer(
                vectors, adj, counts, adj_start, count_start,
                m, m0, level, entries, query, params.ef_construction,
            )
            selected = kern.select_heuristic(vectors, ids, dists, m)
            kern.link_node(
                vectors, adj, counts, adj_start, count_start,
                m, m0, level, node, selected,
            )
            entries = ids
        if node_level > max_level:
            entry_point = node
            max_level = node_level

    index = HnswIndex(
        params, dim, vectors, definition_ids, word_ids, languages, language_idx,
        levels, adj, counts, entry_point, max_level, kernel=kern,
    )
    _repair_connectivity(index)
    _canonicalize(index)
    return index


def _reachable(index: HnswIndex, level: int) -> np.ndarray:
    """Nodes reachable from the entry point along one level's edges."""
    n = len(index)
    reached = np.zeros(n, dtype=bool)
    stack = [index.entry_point]
    reached[index.entry_point] = True
    while stack:
        node = stack.pop()
        for neighbor in index.slot(node, level).tolist():
            if not reached[neighbor]:
                reached[neighbor] = True
                stack.append(neighbor)
    return reached


def _force_edge(index: HnswIndex, level: int, source: int, target: int) -> None:
    """Append target to source's slot, evicting the worst neighbor if full."""
    m, m0 = index.params.m, index.m0
    cap = m0 if level == 0 else m
    offset = int(index.adj_start[source]) + (0 if level == 0 else m0 + (level - 1) * m)
    slot_idx = index.count_start[source] + level
    count = int(index.counts[slot_idx])
    if target in index.adj[offset : offset + count]:
        return
    if count < cap:
        index.adj[offset + count] = target
        index.counts[slot_idx] = count + 1
        return
    neighbors = index.adj[offset : offset + count]
    dists = 1.0 - index.kernel.dots_batch(index.vectors, neighbors, index.vectors[source])
    worst = int(np.lexsort((neighbors, dists))[-1])
    index.adj[offset + worst] = target


def _repair_connectivity(index: HnswIndex) -> None:
    """Reattach any node unreachable from the entry point at its levels.

    Insertion normally leaves every level connected; pruning of reverse
    edges can in rare cases orphan a node, which would make exhaustive
    search miss it. Each orphan gets an edge from its nearest reached
    node (both directions).
    """
    if len(index) == 0:
        return
    for level in range(index.max_level, -1, -1):
        members = np.nonzero(index.levels >= level)[0]
        for _ in range(len(members) + 8):
            reached = _reachable(index, level)
            missing = members[~reached[members]]
            if missing.size == 0:
                break
            orphan = int(missing[0])
            reached_ids = np.nonzero(reached)[0].astype(np.int64)
            dists = 1.0 - index.kernel.dots_batch(index.vectors, reached_ids, index.vectors[orphan])
            nearest = int(reached_ids[np.lexsort((reached_ids, dists))[0]])
            _force_edge(index, level, nearest, orphan)
            _force_edge(index, level, orphan, nearest)
        else:
            raise RuntimeError(f"connectivity repair did not converge at level {level}")


def _canonicalize(index: HnswIndex) -> None:
    """Sort every neighbor list ascending so that the in-memory graph,
    its serialized form, and a reloaded copy are all identical."""
    for node in range(len(index)):
        for level in range(int(index.levels[node]) + 1):
            slot = index.slot(node, level)
            slot.sort()


def audit(index: HnswIndex) -> list[str]:
    """Structural invariant check; returns a list of violations (empty = pass)."""
    problems: list[str] = []
    n = len(index)
    if n == 0:
        return problems
    m, m0 = index.params.m, index.m0
    if not (0 <= index.entry_point < n):
        problems.append(f"entry_point {index.entry_point} out of range")
        return problems
    if int(index.levels[index.entry_point]) != index.max_level:
        problems.append("entry_point level does not equal max_level")
    if int(index.levels.max()) != index.max_level:
        problems.append("max_level does not match highest node level")
    norms = np.linalg.norm(index.vectors.astype(np.float64), axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        problems.append("stored vectors are not unit length")
    for node in range(n):
        for level in range(int(index.levels[node]) + 1):
            slot = index.slot(node, level)
            cap = m0 if level == 0 else m
            if len(slot) > cap:
                problems.append(f"node {node} level {level}: degree {len(slot)} exceeds cap {cap}")
            if len(np.unique(slot)) != len(slot):
                problems.append(f"node {node} level {level}: duplicate neighbors")
            for neighbor in slot.tolist():
                if not (0 <= neighbor < n):
                    problems.append(f"node {node} level {level}: neighbor {neighbor} out of range")
                elif int(index.levels[neighbor]) < level:
                    problems.append(
                        f"node {node} level {level}: neighbor {neighbor} does not exist at this level"
                    )
                if neighbor == node:
                    problems.append(f"node {node} level {level}: self loop")
    for level in range(index.max_level + 1):
        members = np.nonzero(index.levels >= level)[0]
        reached = _reachable(index, level)
        if not bool(reached[members].all()):
            stranded = members[~reached[members]]
            problems.append(f"level {level}: {stranded.size} node(s) unreachable from entry point")
    return problems


# --- search ------------------------------------------------------------------

FILTERED_EF_FACTOR = 4


def _validate_query(index: HnswIndex, query: np.ndarray) -> np.ndarray:
    q = np.ascontiguousarray(query, dtype=np.float32)
    if q.shape != (index.dim,):
        raise DimMismatchError(f"query dim {q.shape} does not match index dim ({index.dim},)")
    norm = float(np.linalg.norm(q.astype(np.float64)))
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise UnnormalizedVectorError(f"query norm {norm:.6f}; normalize before searching")
    return q


def _hits_from(index: HnswIndex, node_ids: np.ndarray, dists: np.ndarray, k: int) -> list[SearchHit]:
    """Rank candidates by (dist, definition_id) and keep the best k."""
    order = np.lexsort((index.definition_ids[node_ids], dists))[:k]
    return [
        SearchHit(payload=index.payload(int(node_ids[i])), score=1.0 - float(dists[i]))
        for i in order
    ]


def search(
    index: HnswIndex,
    query: np.ndarray,
    k: int,
    ef: int | None = None,
    filter: Callable[[Payload], bool] | None = None,
) -> list[SearchHit]:
    """Approximate top-k by cosine similarity.

    ``ef`` defaults to the index's ef_search parameter and is clamped to
    at least k; with a filter present the effective ef is raised fourfold
    because matches are collected during traversal, not post-filtered.
    With ef at least the index size and no filter the result equals
    :func:`brute_force_search` exactly.
    """
    if len(index) == 0:
        return []
    q = _validate_query(index, query)
    ef_eff = max(ef if ef is not None else index.params.ef_search, k)
    mask = None
    if filter is not None:
        mask = index.mask_for(filter)
        ef_eff *= FILTERED_EF_FACTOR

    entries = np.array([index.entry_point], dtype=np.int32)
    for level in range(index.max_level, 0, -1):
        ids, _ = index.kernel.search_layer(
            index.vectors, index.adj, index.counts, index.adj_start, index.count_start,
            index.params.m, index.m0, level, entries, q, 1,
        )
        entries = ids
    node_ids, dists = index.kernel.search_layer(
        index.vectors, index.adj, index.counts, index.adj_start, index.count_start,
        index.params.m, index.m0, 0, entries, q, ef_eff, mask,
    )
    return _hits_from(index, node_ids, dists, k)


class BruteForceSearcher:
    """Exact top-k oracle over the same scoring and tie-break rules."""

    def __init__(self, points: Iterable[IndexedPoint], kernel: ModuleType | None = None) -> None:
        points = list(points)
        self.kernel = kernel if kernel is not None else kernels.default_kernel()
        if points:
            self.vectors, self.dim = _validate_points(points)
        else:
            self.vectors, self.dim = np.empty((0, 0), dtype=np.float32), 0
        self.payloads = [p.payload for p in points]
        self.definition_ids = np.array([p.payload.definition_id for p in points], dtype=np.uint64)

    def search(
        self,
        query: np.ndarray,
        k: int,
        filter: Callable[[Payload], bool] | None = None,
    ) -> list[SearchHit]:
        n = len(self.payloads)
        if n == 0:
            return []
        q = np.ascontiguousarray(query, dtype=np.float32)
        if q.shape != (self.dim,):
            raise DimMismatchError(f"query dim {q.shape} does not match point dim ({self.dim},)")
        norm = float(np.linalg.norm(q.astype(np.float64)))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise UnnormalizedVectorError(f"query norm {norm:.6f}; normalize before searching")
        dists = 1.0 - self.kernel.dots_all(self.vectors, q)
        if filter is not None:
            keep = np.fromiter((filter(p) for p in self.payloads), dtype=bool, count=n)
            indices = np.nonzero(keep)[0]
        else:
            indices = np.arange(n)
        if indices.size == 0:
            return []
        sub_dists = dists[indices]
        if k < indices.size:
            # exact tie handling: take everything not after the kth distance
            kth = np.partition(sub_dists, k - 1)[k - 1]
            close = np.nonzero(sub_dists <= kth)[0]
            indices = indices[close]
            sub_dists = sub_dists[close]
        order = np.lexsort((self.definition_ids[indices], sub_dists))[:k]
        return [
            SearchHit(payload=self.payloads[int(indices[i])], score=1.0 - float(sub_dists[i]))
            for i in order
        ]


def brute_force_search(
    points: Sequence[IndexedPoint],
    query: np.ndarray,
    k: int,
    filter: Callable[[Payload], bool] | None = None,
) -> list[SearchHit]:
    """One-shot exact search; see :class:`BruteForceSearcher` for repeated use."""
    return BruteForceSearcher(points).search(query, k, filter)


def recall_at_k(approx: Sequence[SearchHit], exact: Sequence[SearchHit], k: int) -> float:
    """Fraction of the exact top-k found by the approximate top-k."""
    approx_ids = {hit.payload.definition_id for hit in approx[:k]}
    exact_ids = {hit.payload.definition_id for hit in exact[:k]}
    return len(approx_ids & exact_ids) / k


# --- serialization -----------------------------------------------------------


def serialize_index(index: HnswIndex, path: str | Path) -> None:
    """Versioned little-endian binary dump; see docs/FORMATS.md."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(index)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        p = index.params
        fh.write(struct.pack("<IIIq", p.m, p.ef_construction, p.ef_search, p.seed))
        fh.write(struct.pack("<IQ", index.dim, n))
        fh.write(struct.pack("<qi", index.entry_point, index.max_level))
        fh.write(struct.pack("<H", len(index.languages)))
        for lang in index.languages:
            encoded = lang.encode("utf-8")
            fh.write(struct.pack("<B", len(encoded)))
            fh.write(encoded)
        if n == 0:
            return
        fh.write(index.levels.astype("<i4").tobytes())
        fh.write(index.definition_ids.astype("<u8").tobytes())
        fh.write(index.word_ids.astype("<u8").tobytes())
        fh.write(index.language_idx.astype("<u2").tobytes())
        fh.write(index.vectors.astype("<f4").tobytes())
        fh.write(index.counts.astype("<i4").tobytes())
        used = [index.slot(node, level)
                for node in range(n)
                for level in range(int(index.levels[node]) + 1)]
        fh.write(np.concatenate(used).astype("<i4").tobytes())


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise TruncatedFileError(f"{self.path}: truncated at byte {self.pos}")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        raw = self.take(dt.itemsize * count)
        return np.frombuffer(raw, dtype=dt).copy()


def load_index(path: str | Path, kernel: ModuleType | None = None) -> HnswIndex:
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic = reader.take(4)
    if magic != MAGIC:
        raise VersionMismatchError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = reader.unpack("<B")
    if version != VERSION:
        raise VersionMismatchError(f"{path}: unsupported index version {version}")
    m, ef_construction, ef_search, seed = reader.unpack("<IIIq")
    params = HnswParams(m=m, ef_construction=ef_construction, ef_search=ef_search, seed=seed)
    dim, n = reader.unpack("<IQ")
    entry_point, max_level = reader.unpack("<qi")
    (n_langs,) = reader.unpack("<H")
    languages = []
    for _ in range(n_langs):
        (lang_len,) = reader.unpack("<B")
        languages.append(reader.take(lang_len).decode("utf-8"))
    if n == 0:
        return HnswIndex(
            params, dim,
            np.empty((0, dim), dtype=np.float32),
            np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64),
            languages, np.empty(0, dtype=np.uint16), np.empty(0, dtype=np.int32),
            np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32),
            entry_point=-1, max_level=-1, kernel=kernel,
        )
    levels = reader.array("<i4", n)
    definition_ids = reader.array("<u8", n)
    word_ids = reader.array("<u8", n)
    language_idx = reader.array("<u2", n)
    vectors = reader.array("<f4", n * int(dim)).reshape(n, int(dim))
    adj_start, count_start = _layout(levels, m)
    total_slots = int(count_start[-1]) + int(levels[-1]) + 1
    counts = reader.array("<i4", total_slots)
    used_total = int(counts.sum())
    used = reader.array("<i4", used_total)
    if reader.pos != len(reader.data):
        raise TruncatedFileError(f"{path}: {len(reader.data) - reader.pos} trailing bytes")

    m0 = 2 * m
    total_adj = int(adj_start[-1]) + m0 + int(levels[-1]) * m
    adj = np.full(total_adj, -1, dtype=np.int32)
    cursor = 0
    slot_index = 0
    for node in range(int(n)):
        for level in range(int(levels[node]) + 1):
            count = int(counts[slot_index])
            offset = int(adj_start[node]) + (0 if level == 0 else m0 + (level - 1) * m)
            adj[offset : offset + count] = used[cursor : cursor + count]
            cursor += count
            slot_index += 1
    return HnswIndex(
        params, int(dim), np.ascontiguousarray(vectors), definition_ids, word_ids,
        languages, language_idx, levels, adj, counts,
        entry_point=int(entry_point), max_level=int(max_level), kernel=kernel,
    )
