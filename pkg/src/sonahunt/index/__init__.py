"""Approximate nearest-neighbor index (HNSW) with an exact brute-force oracle."""

from .hnsw import (
    BruteForceSearcher,
    HnswIndex,
    HnswParams,
    IndexedPoint,
    LanguageFilter,
    Payload,
    SearchHit,
    audit,
    brute_force_search,
    build_index,
    language_filter,
    load_index,
    recall_at_k,
    search,
    serialize_index,
)
from .kernels import ACTIVE_KERNEL_NAME, available_kernels, default_kernel, get_kernel

__all__ = [
    "ACTIVE_KERNEL_NAME",
    "BruteForceSearcher",
    "HnswIndex",
    "HnswParams",
    "IndexedPoint",
    "LanguageFilter",
    "Payload",
    "SearchHit",
    "audit",
    "available_kernels",
    "brute_force_search",
    "build_index",
    "default_kernel",
    "get_kernel",
    "language_filter",
    "load_index",
    "recall_at_k",
    "search",
    "serialize_index",
]
