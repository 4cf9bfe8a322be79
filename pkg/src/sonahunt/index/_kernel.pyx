# cython: language_level=3
"""Compiled search kernel.

Same contract and algorithm as ``_kernel_py`` (see its docstring for the
shared graph layout); distances accumulate in double precision inside a
single fused loop instead of going through BLAS.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport calloc, free, malloc

cnp.import_array()

NAME = "cython"

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64
ctypedef cnp.float32_t f32
ctypedef cnp.uint8_t u8


cdef inline double _dot(const f32[:, ::1] vectors, Py_ssize_t row, const f32[::1] query) noexcept:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(query.shape[0]):
        acc += (<double> vectors[row, j]) * (<double> query[j])
    return acc


cdef inline double _dot_rows(const f32[:, ::1] vectors, Py_ssize_t a, Py_ssize_t b) noexcept:
    cdef Py_ssize_t j
    cdef double acc = 0.0
    for j in range(vectors.shape[1]):
        acc += (<double> vectors[a, j]) * (<double> vectors[b, j])
    return acc


cdef inline bint _before(double d1, i32 i1, double d2, i32 i2, bint reverse) noexcept:
    # lexicographic (dist, id); reverse=True turns the heap into a max-heap
    if d1 != d2:
        return d1 > d2 if reverse else d1 < d2
    return i1 > i2 if reverse else i1 < i2


cdef inline void _heap_push(double* hd, i32* hi, int* size, double d, i32 node, bint reverse) noexcept:
    cdef int i = size[0]
    cdef int parent
    cdef double td
    cdef i32 ti
    hd[i] = d
    hi[i] = node
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _before(hd[i], hi[i], hd[parent], hi[parent], reverse):
            td = hd[i]; hd[i] = hd[parent]; hd[parent] = td
            ti = hi[i]; hi[i] = hi[parent]; hi[parent] = ti
            i = parent
        else:
            break


cdef inline void _heap_pop(double* hd, i32* hi, int* size, bint reverse) noexcept:
    cdef int n = size[0] - 1
    cdef int i = 0
    cdef int child
    cdef double td
    cdef i32 ti
    hd[0] = hd[n]
    hi[0] = hi[n]
    size[0] = n
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _before(hd[child + 1], hi[child + 1], hd[child], hi[child], reverse):
            child += 1
        if _before(hd[child], hi[child], hd[i], hi[i], reverse):
            td = hd[i]; hd[i] = hd[child]; hd[child] = td
            ti = hi[i]; hi[i] = hi[child]; hi[child] = ti
            i = child
        else:
            break


def dots_all(object vectors_obj, object query_obj):
    cdef const f32[:, ::1] vectors = vectors_obj
    cdef const f32[::1] query = query_obj
    cdef Py_ssize_t n = vectors.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _dot(vectors, i, query)
    return out_arr


def dots_batch(object vectors_obj, object ids_obj, object query_obj):
    cdef const f32[:, ::1] vectors = vectors_obj
    cdef const f32[::1] query = query_obj
    ids_arr = np.ascontiguousarray(ids_obj, dtype=np.int64)
    cdef const i64[::1] ids = ids_arr
    cdef Py_ssize_t b = ids.shape[0]
    out_arr = np.empty(b, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    for i in range(b):
        out[i] = _dot(vectors, ids[i], query)
    return out_arr


def search_layer(
    object vectors_obj,
    object adj_obj,
    object counts_obj,
    object adj_start_obj,
    object count_start_obj,
    int m,
    int m0,
    int level,
    object entry_obj,
    object query_obj,
    int ef,
    object mask_obj = None,
):
    cdef const f32[:, ::1] vectors = vectors_obj
    cdef const i32[::1] adj = adj_obj
    cdef const i32[::1] counts = counts_obj
    cdef const i64[::1] adj_start = adj_start_obj
    cdef const i64[::1] count_start = count_start_obj
    entry_arr = np.ascontiguousarray(entry_obj, dtype=np.int32)
    cdef const i32[::1] entries = entry_arr
    cdef const f32[::1] query = query_obj
    cdef bint use_mask = mask_obj is not None
    cdef const u8[::1] mask
    if use_mask:
        mask = mask_obj

    cdef Py_ssize_t n = vectors.shape[0]
    cdef u8* visited = <u8*> calloc(n, sizeof(u8))
    # every node is pushed at most once, so n slots suffice
    cdef double* cand_d = <double*> malloc(n * sizeof(double))
    cdef i32* cand_i = <i32*> malloc(n * sizeof(i32))
    cdef double* res_d = <double*> malloc((ef + 1) * sizeof(double))
    cdef i32* res_i = <i32*> malloc((ef + 1) * sizeof(i32))
    if visited == NULL or cand_d == NULL or cand_i == NULL or res_d == NULL or res_i == NULL:
        free(visited); free(cand_d); free(cand_i); free(res_d); free(res_i)
        raise MemoryError()

    cdef int cand_size = 0
    cdef int res_size = 0
    cdef int count, k
    cdef i32 node, neighbor
    cdef i64 offset
    cdef double dist, c_dist
    cdef Py_ssize_t e
    cdef i32[::1] out_ids_v
    cdef double[::1] out_dists_v

    try:
        for e in range(entries.shape[0]):
            node = entries[e]
            if visited[node]:
                continue
            visited[node] = 1
            dist = 1.0 - _dot(vectors, node, query)
            _heap_push(cand_d, cand_i, &cand_size, dist, node, False)
            if not use_mask or mask[node]:
                _heap_push(res_d, res_i, &res_size, dist, node, True)
                if res_size > ef:
                    _heap_pop(res_d, res_i, &res_size, True)

        while cand_size > 0:
            c_dist = cand_d[0]
            node = cand_i[0]
            _heap_pop(cand_d, cand_i, &cand_size, False)
            if res_size >= ef and c_dist > res_d[0]:
                break
            if level == 0:
                offset = adj_start[node]
            else:
                offset = adj_start[node] + m0 + (level - 1) * m
            count = counts[count_start[node] + level]
            for k in range(count):
                neighbor = adj[offset + k]
                if visited[neighbor]:
                    continue
                visited[neighbor] = 1
                dist = 1.0 - _dot(vectors, neighbor, query)
                if res_size >= ef and not _before(dist, neighbor, res_d[0], res_i[0], False):
                    continue
                _heap_push(cand_d, cand_i, &cand_size, dist, neighbor, False)
                if not use_mask or mask[neighbor]:
                    _heap_push(res_d, res_i, &res_size, dist, neighbor, True)
                    if res_size > ef:
                        _heap_pop(res_d, res_i, &res_size, True)

        out_ids = np.empty(res_size, dtype=np.int32)
        out_dists = np.empty(res_size, dtype=np.float64)
        out_ids_v = out_ids
        out_dists_v = out_dists
        k = res_size - 1
        while res_size > 0:
            out_dists_v[k] = res_d[0]
            out_ids_v[k] = res_i[0]
            _heap_pop(res_d, res_i, &res_size, True)
            k -= 1
        return out_ids, out_dists
    finally:
        free(visited)
        free(cand_d)
        free(cand_i)
        free(res_d)
        free(res_i)


def link_node(
    object vectors_obj,
    object adj_obj,
    object counts_obj,
    object adj_start_obj,
    object count_start_obj,
    int m,
    int m0,
    int level,
    int node,
    object selected_obj,
):
    cdef const f32[:, ::1] vectors = vectors_obj
    cdef i32[::1] adj = adj_obj
    cdef i32[::1] counts = counts_obj
    cdef const i64[::1] adj_start = adj_start_obj
    cdef const i64[::1] count_start = count_start_obj
    selected_arr = np.ascontiguousarray(selected_obj, dtype=np.int32)
    cdef const i32[::1] selected = selected_arr

    cdef int cap = m0 if level == 0 else m
    cdef int n_selected = selected.shape[0]
    cdef i64 offset = adj_start[node] if level == 0 else adj_start[node] + m0 + (level - 1) * m
    cdef i64 other_offset
    cdef i64 slot
    cdef int count, i, j, k, n_kept, n_dropped
    cdef i32 other, cand_id
    cdef double cand_dist, to_chosen
    cdef bint keep
    # overflow pruning scratch, cap+1 candidates at most
    cdef double* dists = <double*> malloc((cap + 1) * sizeof(double))
    cdef i32* ids = <i32*> malloc((cap + 1) * sizeof(i32))
    cdef i32* kept = <i32*> malloc((cap + 1) * sizeof(i32))
    cdef i32* dropped = <i32*> malloc((cap + 1) * sizeof(i32))
    if dists == NULL or ids == NULL or kept == NULL or dropped == NULL:
        free(dists); free(ids); free(kept); free(dropped)
        raise MemoryError()

    try:
        for i in range(n_selected):
            adj[offset + i] = selected[i]
        counts[count_start[node] + level] = n_selected

        for i in range(n_selected):
            other = selected[i]
            slot = count_start[other] + level
            count = counts[slot]
            other_offset = adj_start[other] if level == 0 else adj_start[other] + m0 + (level - 1) * m
            if count < cap:
                adj[other_offset + count] = node
                counts[slot] = count + 1
                continue
            # gather current neighbors plus the new node, insertion-sorted
            # by (dist to `other`, id)
            for j in range(count):
                ids[j] = adj[other_offset + j]
                dists[j] = 1.0 - _dot_rows(vectors, other, ids[j])
            ids[count] = node
            dists[count] = 1.0 - _dot_rows(vectors, other, node)
            for j in range(1, count + 1):
                cand_dist = dists[j]
                cand_id = ids[j]
                k = j - 1
                while k >= 0 and _before(cand_dist, cand_id, dists[k], ids[k], False):
                    dists[k + 1] = dists[k]
                    ids[k + 1] = ids[k]
                    k -= 1
                dists[k + 1] = cand_dist
                ids[k + 1] = cand_id
            n_kept = 0
            n_dropped = 0
            for j in range(count + 1):
                if n_kept == cap:
                    break
                keep = True
                for k in range(n_kept):
                    to_chosen = 1.0 - _dot_rows(vectors, ids[j], kept[k])
                    if to_chosen < dists[j]:
                        keep = False
                        break
                if keep:
                    kept[n_kept] = ids[j]
                    n_kept += 1
                else:
                    dropped[n_dropped] = ids[j]
                    n_dropped += 1
            for j in range(n_dropped):
                if n_kept == cap:
                    break
                kept[n_kept] = dropped[j]
                n_kept += 1
            for j in range(n_kept):
                adj[other_offset + j] = kept[j]
            for j in range(n_kept, cap):
                adj[other_offset + j] = -1
            counts[slot] = n_kept
    finally:
        free(dists)
        free(ids)
        free(kept)
        free(dropped)


def select_heuristic(
    object vectors_obj,
    object cand_ids_obj,
    object cand_dists_obj,
    int max_m,
    bint keep_pruned = True,
):
    cdef const f32[:, ::1] vectors = vectors_obj
    cand_ids_arr = np.ascontiguousarray(cand_ids_obj, dtype=np.int32)
    cand_dists_arr = np.ascontiguousarray(cand_dists_obj, dtype=np.float64)
    cdef const i32[::1] cand_ids = cand_ids_arr
    cdef const double[::1] cand_dists = cand_dists_arr
    cdef Py_ssize_t total = cand_ids.shape[0]

    selected_arr = np.empty(min(total, max_m), dtype=np.int32)
    cdef i32[::1] selected = selected_arr
    cdef i32* discarded = <i32*> malloc(total * sizeof(i32)) if total > 0 else NULL
    if total > 0 and discarded == NULL:
        raise MemoryError()

    cdef int n_selected = 0
    cdef int n_discarded = 0
    cdef Py_ssize_t i
    cdef int j
    cdef bint keep
    cdef double dist, to_chosen

    try:
        for i in range(total):
            if n_selected == max_m:
                break
            dist = cand_dists[i]
            keep = True
            for j in range(n_selected):
                to_chosen = 1.0 - _dot_rows(vectors, cand_ids[i], selected[j])
                if to_chosen < dist:
                    keep = False
                    break
            if keep:
                selected[n_selected] = cand_ids[i]
                n_selected += 1
            else:
                discarded[n_discarded] = cand_ids[i]
                n_discarded += 1
        if keep_pruned:
            for j in range(n_discarded):
                if n_selected == max_m:
                    break
                selected[n_selected] = discarded[j]
                n_selected += 1
        return selected_arr[:n_selected].copy()
    finally:
        free(discarded)
