"""Canonical forms of matchings under the automorphism group of Q_n.

The automorphism group of the hypercube is the hyperoctahedral group: every
automorphism is a coordinate permutation followed by an XOR translation,
``v -> pi(v) ^ t``, giving n! * 2^n elements.  A canonical key is the
lexicographically smallest encoding of (sorted edge images, sorted mark
images) over the whole group, so two (matching, marks) pairs get equal keys
exactly when some automorphism maps one onto the other.

Group action tables are materialized as numpy arrays per dimension, which
keeps the full-group scan cheap at the dimensions where isomorph rejection
is actually used (n <= 6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Iterable

import numpy as np

from .cube import Matching, Vertex, edge_index_map, edge_order

MAX_GROUP_DIM = 6  # n! * 2^n tables beyond this stop being desk-scale


def group_size(n: int) -> int:
    return math.factorial(n) << n


def _check_group_dim(n: int) -> None:
    if not 1 <= n <= MAX_GROUP_DIM:
        raise ValueError(
            f"automorphism tables are materialized for 1 <= n <= {MAX_GROUP_DIM}, got {n}"
        )


@lru_cache(maxsize=None)
def vertex_maps(n: int) -> np.ndarray:
    """Array of shape (n! * 2^n, 2^n): row g maps vertex v to row[v].

    Rows are ordered by (permutation, translation), both in lexicographic
    order, so the identity is row 0.
    """
    _check_group_dim(n)
    size = 1 << n
    v = np.arange(size, dtype=np.uint32)
    rows = []
    for perm in permutations(range(n)):
        pv = np.zeros(size, dtype=np.uint32)
        for i in range(n):
            pv |= ((v >> i) & 1) << perm[i]
        for t in range(size):
            rows.append(pv ^ t)
    out = np.array(rows, dtype=np.uint32)
    return out.astype(np.uint8 if size <= 256 else np.uint16)


@lru_cache(maxsize=None)
def edge_maps(n: int) -> np.ndarray:
    """Array of shape (n! * 2^n, E): row g maps edge id e to row[e]."""
    _check_group_dim(n)
    order = edge_order(n)
    idx = edge_index_map(n)
    vm = vertex_maps(n).astype(np.int64)
    bases = np.array([b for b, _ in order], dtype=np.int64)
    others = np.array([b | (1 << (d - 1)) for b, d in order], dtype=np.int64)
    ea = vm[:, bases]
    eb = vm[:, others]
    x = ea ^ eb  # always a power of two
    nb = ea & ~x
    log = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        log[1 << i] = i
    flat = np.full((1 << n) * n, -1, dtype=np.int64)
    for (b, d), i in idx.items():
        flat[b * n + (d - 1)] = i
    mapped = flat[nb * n + log[x]]
    if (mapped < 0).any():
        raise AssertionError("edge image outside edge table")
    return mapped.astype(np.uint8 if len(order) <= 256 else np.uint16)


@dataclass(frozen=True)
class CanonicalKey:
    """Orbit-invariant encoding of a (matching, marks) pair."""

    data: bytes

    @property
    def hex(self) -> str:
        return self.data.hex()

    def __str__(self) -> str:
        return self.hex


def _edge_ids(m: Matching) -> list[int]:
    idx = edge_index_map(m.dim)
    return sorted(idx[(e.base.bits, e.dir)] for e in m.edges)


def _mark_bits(marks: Iterable[Vertex]) -> list[int]:
    return sorted(v.bits for v in marks)


def _pack(n: int, edge_row: Iterable[int], mark_row: Iterable[int]) -> bytes:
    edges = list(edge_row)
    marks = list(mark_row)
    head = bytes([n, len(edges), len(marks)])
    body = b"".join(int(x).to_bytes(2, "big") for x in edges)
    body += b"".join(int(x).to_bytes(2, "big") for x in marks)
    return head + body


def canonical_key(m: Matching, marks: frozenset[Vertex] = frozenset()) -> CanonicalKey:
    """Lexicographically minimal encoding of (matching, marks) over the
    hyperoctahedral group.  Invariant under applying any group element to
    both the matching and the marks."""
    n = m.dim
    for v in marks:
        if v.dim != n:
            raise ValueError("mark dimension differs from matching dimension")
    eids = _edge_ids(m)
    mbits = _mark_bits(marks)
    if not eids and not mbits:
        return CanonicalKey(_pack(n, [], []))
    em = edge_maps(n)
    vm = vertex_maps(n)
    parts = []
    if eids:
        parts.append(np.sort(em[:, eids].astype(np.uint16), axis=1))
    if mbits:
        parts.append(np.sort(vm[:, mbits].astype(np.uint16), axis=1))
    rows = parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)
    best = rows[np.lexsort(rows.T[::-1])[0]]
    k = len(eids)
    return CanonicalKey(_pack(n, best[:k].tolist(), best[k:].tolist()))


def stabilizer_indices(m: Matching, marks: frozenset[Vertex] = frozenset()) -> np.ndarray:
    """Indices of the group elements fixing both the matching and marks."""
    n = m.dim
    eids = _edge_ids(m)
    mbits = _mark_bits(marks)
    order = group_size(n)
    keep = np.ones(order, dtype=bool)
    if eids:
        rows = np.sort(edge_maps(n)[:, eids], axis=1)
        keep &= (rows == np.array(eids, dtype=rows.dtype)).all(axis=1)
    if mbits:
        rows = np.sort(vertex_maps(n)[:, mbits], axis=1)
        keep &= (rows == np.array(mbits, dtype=rows.dtype)).all(axis=1)
    return np.nonzero(keep)[0]


def orbit_size(m: Matching, marks: frozenset[Vertex] = frozenset()) -> int:
    """Number of distinct images of (matching, marks) under the group,
    computed as group order over stabilizer order."""
    stab = len(stabilizer_indices(m, marks))
    return group_size(m.dim) // stab


def set_stabilizer_indices(n: int, bits: Iterable[int]) -> np.ndarray:
    """Indices of group elements fixing a vertex set (given as bit values)."""
    target = sorted(bits)
    if not target:
        return np.arange(group_size(n))
    rows = np.sort(vertex_maps(n)[:, target], axis=1)
    keep = (rows == np.array(target, dtype=rows.dtype)).all(axis=1)
    return np.nonzero(keep)[0]
