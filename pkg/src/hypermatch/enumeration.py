"""Exhaustive generation of maximal matchings of Q_n up to isomorphism.

A matching is maximal exactly when its uncovered vertex set is independent,
so maximal matchings split into classes by the isomorphism type of their
uncovered set: enumerate independent sets up to isomorphism, then for each
representative set U enumerate the perfect matchings of Q_n - U.  Two
matchings with the same uncovered representative are isomorphic iff some
element of U's setwise stabilizer maps one to the other, so isomorph
rejection inside a class only scans the stabilizer, and matchings from
different classes are never isomorphic.

Also provides the DIMACS CNF export of the same constraint system and the
generator of matchings one edge away from acquiring half-layer structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

import numpy as np

from . import canon
from .cube import (
    Edge,
    Matching,
    Vertex,
    almost_half_layers_in,
    edge_index_map,
    edge_order,
    half_layers_in,
    neighbor,
)


@dataclass(frozen=True)
class UncoveredClass:
    """One isomorphism class of independent vertex sets."""

    vertices: frozenset[Vertex]
    key: canon.CanonicalKey
    orbit: int


def _independent_set_members(n: int) -> Iterator[tuple[int, ...]]:
    """All independent sets of Q_n as ascending vertex tuples, in
    lexicographic order of the tuples (empty set first)."""
    size = 1 << n
    nbr_masks = [0] * size
    for v in range(size):
        for i in range(n):
            nbr_masks[v] |= 1 << (v ^ (1 << i))

    def rec(start: int, chosen: list[int], blocked: int) -> Iterator[tuple[int, ...]]:
        yield tuple(chosen)
        for v in range(start, size):
            if blocked & (1 << v):
                continue
            chosen.append(v)
            yield from rec(v + 1, chosen, blocked | nbr_masks[v])
            chosen.pop()

    yield from rec(0, [], 0)


def uncovered_classes(n: int) -> list[UncoveredClass]:
    """One representative per isomorphism class of the vertex sets a
    matching of Q_n can leave uncovered: independent sets of even size
    (a matching always leaves 2^n - 2|M| vertices exposed).  The empty
    set is included; counts with and without it are both of interest.
    """
    if n < 1:
        raise ValueError("dimension must be at least 1")
    vm = canon.vertex_maps(n)
    seen: set[bytes] = set()
    out: list[UncoveredClass] = []
    empty = Matching(n, frozenset())
    for members in _independent_set_members(n):
        if len(members) % 2:
            continue
        key_bytes = bytes(members)
        if key_bytes in seen:
            continue
        if not members:
            seen.add(key_bytes)
            out.append(UncoveredClass(frozenset(), canon.canonical_key(empty), 1))
            continue
        rows = np.sort(vm[:, list(members)].astype(np.uint8), axis=1)
        uniq = np.unique(rows, axis=0)
        for row in uniq:
            seen.add(row.tobytes())
        marks = frozenset(Vertex(n, b) for b in members)
        out.append(
            UncoveredClass(marks, canon.canonical_key(empty, marks), int(len(uniq)))
        )
    return out


def _perfect_matchings_of_complement(
    n: int, excluded_mask: int
) -> Iterator[tuple[int, ...]]:
    """Perfect matchings of Q_n minus the excluded vertices, as strictly
    increasing tuples of edge ids (lowest-uncovered-first backtracking)."""
    size = 1 << n
    full = ((1 << size) - 1) & ~excluded_mask
    idx = edge_index_map(n)
    # edge id lookup: the edge covering (a, b) with a < b has base a
    eid_for = [[0] * n for _ in range(size)]
    for v in range(size):
        for i in range(n):
            w = v ^ (1 << i)
            base = min(v, w)
            eid_for[v][i] = idx[(base, i + 1)]

    out: list[int] = []

    def rec(avail: int) -> Iterator[tuple[int, ...]]:
        if not avail:
            yield tuple(out)
            return
        a = (avail & -avail).bit_length() - 1
        for i in range(n):
            b = a ^ (1 << i)
            bb = 1 << b
            if avail & bb:
                out.append(eid_for[a][i])
                yield from rec(avail & ~(1 << a) & ~bb)
                out.pop()

    yield from rec(full)


@dataclass(frozen=True)
class MatchingClass:
    """One isomorphism class of maximal matchings: a representative (as
    edge ids), its global orbit size, and the group elements fixing it
    (indices into the full group, always a subgroup of the uncovered set's
    stabilizer)."""

    edge_ids: tuple[int, ...]
    orbit: int
    stabilizer: tuple[int, ...]


def iter_class_representatives(
    n: int, uncovered_bits: Iterable[int]
) -> Iterator[MatchingClass]:
    """Stream one representative per isomorphism class of maximal matchings
    whose uncovered set is exactly the given one.  Deduplication scans the
    stabilizer of the uncovered set."""
    members = sorted(uncovered_bits)
    stab = canon.set_stabilizer_indices(n, members)
    em = canon.edge_maps(n)[stab]
    h = len(stab)
    g = canon.group_size(n)
    excluded = 0
    for b in members:
        excluded |= 1 << b
    seen: set[bytes] = set()
    for eids in _perfect_matchings_of_complement(n, excluded):
        if not eids:
            # dimension too small for any edge: the empty matching
            yield MatchingClass(eids, 1, tuple(int(x) for x in stab))
            return
        key = bytes(eids)
        if key in seen:
            continue
        arr = np.array(eids, dtype=em.dtype)
        images = np.sort(em[:, list(eids)], axis=1)
        uniq = np.unique(images, axis=0)
        for row in uniq:
            seen.add(row.tobytes())
        fixes = (images == arr).all(axis=1)
        yield MatchingClass(
            eids, g * len(uniq) // h, tuple(int(x) for x in stab[fixes])
        )


def matching_from_edge_ids(n: int, eids: Iterable[int]) -> Matching:
    order = edge_order(n)
    return Matching(
        n, frozenset(Edge(Vertex(n, order[e][0]), order[e][1]) for e in eids)
    )


@dataclass(frozen=True)
class EnumerationCounts:
    non_isomorphic: int
    with_duplicates: int


def maximal_matchings(
    n: int,
    required_uncovered: frozenset[Vertex] = frozenset(),
    sink: Optional[Callable[[Matching, int], None]] = None,
) -> EnumerationCounts:
    """Enumerate maximal matchings of Q_n whose uncovered vertex set is
    exactly ``required_uncovered``, one representative per isomorphism
    class.  ``sink`` receives each representative with its orbit size;
    the returned counts accumulate classes and orbit sizes."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    bits = sorted(v.bits for v in required_uncovered)
    for v in required_uncovered:
        if v.dim != n:
            raise ValueError("uncovered vertex dimension mismatch")
    for i, a in enumerate(bits):
        for b in bits[i + 1:]:
            if (a ^ b).bit_count() == 1:
                raise ValueError("required uncovered set is not independent")
    classes = 0
    total = 0
    for rep in iter_class_representatives(n, bits):
        classes += 1
        total += rep.orbit
        if sink is not None:
            sink(matching_from_edge_ids(n, rep.edge_ids), rep.orbit)
    return EnumerationCounts(classes, total)


# ---------------------------------------------------------------------------
# DIMACS CNF export of the matching constraint system.
# ---------------------------------------------------------------------------


def emit_dimacs(
    n: int,
    require_maximal: bool = True,
    forced_uncovered: frozenset[Vertex] = frozenset(),
    excluded: Iterable[Matching] = (),
) -> str:
    """CNF with one variable per edge and one per vertex: matching
    exclusivity, coverage linkage in both directions, optional maximality,
    forced-uncovered units, and one blocking clause per excluded matching.

    Variables number edges first, in (base, dir) lexicographic order, then
    vertices by bits.
    """
    order = edge_order(n)
    idx = edge_index_map(n)
    size = 1 << n
    nedges = len(order)

    def evar(base: int, dir: int) -> int:
        return idx[(base, dir)] + 1

    def vvar(v: int) -> int:
        return nedges + v + 1

    clauses: list[list[int]] = []
    incident: list[list[int]] = [[] for _ in range(size)]
    for base, dir in order:
        e = evar(base, dir)
        incident[base].append(e)
        incident[base | (1 << (dir - 1))].append(e)

    for v in range(size):
        ids = sorted(incident[v])
        for i, a in enumerate(ids):
            for b in ids[i + 1:]:
                clauses.append([-a, -b])
    for v in range(size):
        clauses.append(sorted(incident[v]) + [-vvar(v)])
    for base, dir in order:
        e = evar(base, dir)
        clauses.append([-e, vvar(base)])
        clauses.append([-e, vvar(base | (1 << (dir - 1)))])
    if require_maximal:
        for base, dir in order:
            clauses.append([vvar(base), vvar(base | (1 << (dir - 1)))])
    for w in sorted(v.bits for v in forced_uncovered):
        clauses.append([-vvar(w)])
    for f in excluded:
        banned = {idx[(e.base.bits, e.dir)] + 1 for e in f.edges}
        clauses.append([e for e in range(1, nedges + 1) if e not in banned])

    lines = [f"p cnf {nedges + size} {len(clauses)}"]
    for c in clauses:
        lines.append(" ".join(str(x) for x in c) + " 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Matchings one edge away from half-layer structure.
# ---------------------------------------------------------------------------


def has_c_structure(m: Matching) -> bool:
    """True when the matching contains a half-layer, or an almost half-layer
    whose missing edge's endpoints are both pinned sideways (the structure
    that blocks some endpoint pair)."""
    if half_layers_in(m):
        return True
    for desc in almost_half_layers_in(m):
        assert desc.missing is not None
        u = desc.missing
        v = neighbor(u, desc.dir)
        for j in range(1, m.dim + 1):
            if j == desc.dir:
                continue
            if m.contains_pair(u, neighbor(u, j)) and m.contains_pair(v, neighbor(v, j)):
                return True
    return False


@dataclass(frozen=True)
class OneEdgeAwayInstance:
    """A matching that acquires blocking structure when ``completion`` is
    added back."""

    matching: Matching
    completion: Edge


def one_edge_away_instances(
    n: int, violating_maximal: Optional[Iterable[Matching]] = None
) -> list[OneEdgeAwayInstance]:
    """Matchings of Q_n with no blocking structure such that one edge
    addition creates some.

    Two steps: shrink structure-carrying maximal matchings edge by edge to
    the minimal configurations that still carry structure, then drop one
    more edge from each minimal configuration.
    """
    if n < 4:
        raise ValueError("one-edge-away generation needs dimension >= 4")
    if violating_maximal is None:
        collected: list[Matching] = []
        for cls in uncovered_classes(n):
            bits = sorted(v.bits for v in cls.vertices)
            for rep in iter_class_representatives(n, bits):
                m = matching_from_edge_ids(n, rep.edge_ids)
                if has_c_structure(m):
                    collected.append(m)
        violating_maximal = collected

    minimal: dict[bytes, Matching] = {}
    memo: set[bytes] = set()
    frontier: list[Matching] = []
    for m in violating_maximal:
        k = canon.canonical_key(m).data
        if k not in memo:
            memo.add(k)
            frontier.append(m)
    while frontier:
        nxt: list[Matching] = []
        for m in frontier:
            shrinkable = False
            for e in m.sorted_edges():
                m2 = Matching(n, m.edges - {e})
                if has_c_structure(m2):
                    shrinkable = True
                    k2 = canon.canonical_key(m2).data
                    if k2 not in memo:
                        memo.add(k2)
                        nxt.append(m2)
            if not shrinkable:
                minimal.setdefault(canon.canonical_key(m).data, m)
        frontier = nxt

    out: list[OneEdgeAwayInstance] = []
    seen_out: set[bytes] = set()
    for _k, m in sorted(minimal.items()):
        for e in m.sorted_edges():
            m2 = Matching(n, m.edges - {e})
            if has_c_structure(m2):
                raise AssertionError("minimal configuration was not minimal")
            k2 = canon.canonical_key(m2).data
            if k2 in seen_out:
                continue
            seen_out.add(k2)
            out.append(OneEdgeAwayInstance(m2, e))
    return out
