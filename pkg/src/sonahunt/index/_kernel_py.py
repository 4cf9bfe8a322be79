"""Pure NumPy search kernel.

Reference implementation of the hot loops; the compiled kernel in
``_kernel.pyx`` mirrors the algorithm exactly (visitation order, tie
breaking, stop conditions), differing only in float accumulation order.

Graph memory layout shared by both kernels:

* ``vectors``     float32, C-contiguous, shape (n, dim), rows unit length
* ``levels``      int32[n], top layer of each node
* ``adj``         int32 neighbor ids, one fixed-capacity block per node:
                  node i's block starts at ``adj_start[i]``; the level-0
                  slot (capacity 2m) sits at offset 0 and the level-L slot
                  (capacity m) at offset ``2m + (L-1)*m``
* ``counts``      int32, used length of each (node, level) slot, indexed
                  by ``count_start[i] + level``

Distances are ``1 - dot`` on unit vectors. All internal orderings compare
``(dist, node_id)`` lexicographically so every run is deterministic.
"""

from __future__ import annotations

import heapq

import numpy as np

NAME = "python"


def slot_offset(adj_start: np.ndarray, m: int, m0: int, node: int, level: int) -> int:
    if level == 0:
        return int(adj_start[node])
    return int(adj_start[node]) + m0 + (level - 1) * m


def slot_capacity(m: int, m0: int, level: int) -> int:
    return m0 if level == 0 else m


def dots_all(vectors: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Dot products of the query against every row.

    einsum instead of BLAS: its per-row accumulation is identical no
    matter how many rows are in the batch, so search and brute force see
    bitwise-equal distances.
    """
    return np.einsum("ij,j->i", vectors, query, dtype=np.float64)


def dots_batch(vectors: np.ndarray, ids: np.ndarray, query: np.ndarray) -> np.ndarray:
    if len(ids) == 0:
        return np.empty(0, dtype=np.float64)
    return np.einsum("ij,j->i", vectors[ids], query, dtype=np.float64)


def search_layer(
    vectors: np.ndarray,
    adj: np.ndarray,
    counts: np.ndarray,
    adj_start: np.ndarray,
    count_start: np.ndarray,
    m: int,
    m0: int,
    level: int,
    entry_ids: np.ndarray,
    query: np.ndarray,
    ef: int,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Beam search on one graph layer.

    Returns up to ``ef`` node ids with their distances, sorted ascending by
    (dist, id). Only mask-passing nodes enter the result set, but the beam
    traverses through masked-out nodes so selective filters cannot strand
    the search.
    """
    n = vectors.shape[0]
    visited = np.zeros(n, dtype=bool)
    candidates: list[tuple[float, int]] = []  # min-heap
    results: list[tuple[float, int]] = []  # max-heap via negated keys

    def result_push(dist: float, node: int) -> None:
        heapq.heappush(results, (-dist, -node))
        if len(results) > ef:
            heapq.heappop(results)

    def worst() -> tuple[float, int]:
        if len(results) < ef:
            return (np.inf, -1)
        return (-results[0][0], -results[0][1])

    unique_entries = []
    for entry in entry_ids:
        entry = int(entry)
        if not visited[entry]:
            visited[entry] = True
            unique_entries.append(entry)
    entry_dists = 1.0 - dots_batch(vectors, np.array(unique_entries, dtype=np.int64), query)
    for entry, dist in zip(unique_entries, entry_dists.tolist()):
        heapq.heappush(candidates, (dist, entry))
        if mask is None or mask[entry]:
            result_push(dist, entry)

    while candidates:
        c_dist, c = heapq.heappop(candidates)
        worst_dist, _ = worst()
        if c_dist > worst_dist:
            break
        offset = slot_offset(adj_start, m, m0, c, level)
        count = int(counts[count_start[c] + level])
        neighbors = adj[offset : offset + count]
        fresh = neighbors[~visited[neighbors]]
        if fresh.size == 0:
            continue
        visited[fresh] = True
        dists = 1.0 - dots_batch(vectors, fresh, query)
        for node, dist in zip(fresh.tolist(), dists.tolist()):
            worst_dist, worst_id = worst()
            if (dist, node) < (worst_dist, worst_id) or len(results) < ef:
                heapq.heappush(candidates, (dist, node))
                if mask is None or mask[node]:
                    result_push(dist, node)

    ordered = sorted((-d, -i) for d, i in results)
    out_ids = np.array([i for _, i in ordered], dtype=np.int32)
    out_dists = np.array([d for d, _ in ordered], dtype=np.float64)
    return out_ids, out_dists


def link_node(
    vectors: np.ndarray,
    adj: np.ndarray,
    counts: np.ndarray,
    adj_start: np.ndarray,
    count_start: np.ndarray,
    m: int,
    m0: int,
    level: int,
    node: int,
    selected: np.ndarray,
) -> None:
    """Write ``node``'s neighbor slot and the reverse edges at one level.

    A reverse slot that overflows its capacity is re-pruned with the
    selection heuristic over its current neighbors plus the new node.
    """
    cap = slot_capacity(m, m0, level)
    offset = slot_offset(adj_start, m, m0, node, level)
    adj[offset : offset + len(selected)] = selected
    counts[count_start[node] + level] = len(selected)

    for other in selected.tolist():
        slot = count_start[other] + level
        count = int(counts[slot])
        other_offset = slot_offset(adj_start, m, m0, other, level)
        if count < cap:
            adj[other_offset + count] = node
            counts[slot] = count + 1
            continue
        cand_ids = np.empty(count + 1, dtype=np.int32)
        cand_ids[:count] = adj[other_offset : other_offset + count]
        cand_ids[count] = node
        cand_dists = 1.0 - dots_batch(vectors, cand_ids, vectors[other])
        order = np.lexsort((cand_ids, cand_dists))
        pruned = select_heuristic(vectors, cand_ids[order], cand_dists[order], cap)
        adj[other_offset : other_offset + len(pruned)] = pruned
        adj[other_offset + len(pruned) : other_offset + cap] = -1
        counts[slot] = len(pruned)


def select_heuristic(
    vectors: np.ndarray,
    cand_ids: np.ndarray,
    cand_dists: np.ndarray,
    max_m: int,
    keep_pruned: bool = True,
) -> np.ndarray:
    """Diversity-aware neighbor selection.

    Scans candidates in ascending (dist, id) order; a candidate is kept
    only if it is at least as close to the anchor as to every already
    selected node. With ``keep_pruned``, discarded candidates backfill the
    remaining capacity in scan order.
    """
    selected: list[int] = []
    discarded: list[int] = []
    for node, dist in zip(cand_ids.tolist(), cand_dists.tolist()):
        if len(selected) == max_m:
            break
        keep = True
        for chosen in selected:
            to_chosen = 1.0 - float(
                np.einsum("j,j->", vectors[node], vectors[chosen], dtype=np.float64)
            )
            if to_chosen < dist:
                keep = False
                break
        if keep:
            selected.append(node)
        else:
            discarded.append(node)
    if keep_pruned:
        for node in discarded:
            if len(selected) == max_m:
                break
            selected.append(node)
    return np.array(selected, dtype=np.int32)
