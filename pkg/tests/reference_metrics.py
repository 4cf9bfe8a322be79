"""Naive, literal metric implementations used as the testing oracle.

Written straight from the formulas with no shared code paths with the
package: list slicing, membership tests, and statistics.median_low.
"""

from __future__ import annotations

import statistics
from typing import Sequence


def naive_precision_at_k(res: Sequence[int], rel: set[int], k: int) -> float:
    return len([w for w in res[:k] if w in rel]) / k


def naive_average_precision(res: Sequence[int], rel: set[int], rel_size: int) -> float:
    total = 0.0
    for i in range(1, len(res) + 1):
        if res[i - 1] in rel:
            total += naive_precision_at_k(res, rel, i)
    return total / rel_size


def naive_reciprocal_rank(res: Sequence[int], rel: set[int]) -> float:
    ranks = [i for i in range(1, len(res) + 1) if res[i - 1] in rel]
    return 1.0 / min(ranks) if ranks else 0.0


def naive_first_relevant_rank(res: Sequence[int], rel: set[int], cap: int = 1000) -> int:
    ranks = [i for i in range(1, len(res) + 1) if res[i - 1] in rel]
    return min(ranks) if ranks else cap


def naive_accuracy_at_k(res: Sequence[int], rel: set[int], k: int) -> int:
    return 1 if any(w in rel for w in res[:k]) else 0


def naive_aggregate(
    queries: Sequence[tuple[Sequence[int], set[int], int]],
    cap: int = 1000,
) -> dict:
    """queries: (res, rel, rel_size) triples."""
    count = len(queries)
    report = {
        "MAP": sum(naive_average_precision(r, s, z) for r, s, z in queries) / count,
        "MP@1": sum(naive_precision_at_k(r, s, 1) for r, s, _ in queries) / count,
        "MP@10": sum(naive_precision_at_k(r, s, 10) for r, s, _ in queries) / count,
        "MRR": sum(naive_reciprocal_rank(r, s) for r, s, _ in queries) / count,
        "Acc@1": sum(naive_accuracy_at_k(r, s, 1) for r, s, _ in queries) / count,
        "Acc@10": sum(naive_accuracy_at_k(r, s, 10) for r, s, _ in queries) / count,
        "MedianRank": statistics.median_low(
            naive_first_relevant_rank(r, s, cap) for r, s, _ in queries
        ),
    }
    return report


def random_judgment(rng, universe: int = 500) -> tuple[list[int], set[int], int]:
    """A random (res, rel, rel_size) triple mimicking protocol output."""
    res_len = int(rng.integers(0, 100))
    res = list(rng.choice(universe, size=res_len, replace=False)) if res_len else []
    rel_size = int(rng.integers(1, 12))
    rel = set(int(x) for x in rng.choice(universe, size=rel_size, replace=False))
    return [int(x) for x in res], rel, rel_size
