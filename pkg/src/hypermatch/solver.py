"""Exact backtracking search for Hamilton paths and cycles of Q_n.

The search works on integer bitmasks: vertex v occupies bit v of a
2^n-bit mask.  Forced edges are contracted into chains that are traversed
atomically, and two sound prunes run at every node:

* the remaining walk alternates parities, pinning the minority class size;
* every not-yet-visited vertex other than the target needs at least two
  potential path edges left (bit-sliced degree count);
* the unvisited region must be reachable from the current vertex
  (shift-based flood fill).

Neighbors expand in increasing direction order up to dimension 5; above
that they expand fewest-onward-moves first (ties in direction order),
which keeps 64-and-more-vertex searches from thrashing.  Both orders are
fixed, so identical inputs yield identical certificates.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .certificates import CycleCertificate, PathCertificate
from .cube import Matching, Vertex, edge_order, parity


@lru_cache(maxsize=None)
def _tables(n: int):
    size = 1 << n
    full = (1 << size) - 1
    bit = tuple(1 << v for v in range(size))
    nbrs = tuple(tuple(v ^ (1 << i) for i in range(n)) for v in range(size))
    nbmask = tuple(sum(bit[w] for w in nb) for nb in nbrs)
    half = []
    for i in range(n):
        h = 0
        for v in range(size):
            if not v & (1 << i):
                h |= bit[v]
        half.append((h, 1 << i))
    odd_mask = 0
    for v in range(size):
        if v.bit_count() & 1:
            odd_mask |= bit[v]
    return size, full, bit, nbrs, nbmask, tuple(half), odd_mask


def _forced_chains(n: int, pairs: Sequence[tuple[int, int]]):
    """Contract a forced edge set into chains.

    Returns (fdeg, chain_other, chain_mask, chain_seq) or None when the
    forced set admits no Hamilton path at all (degree > 2 or a cycle).
    """
    size = 1 << n
    fdeg = [0] * size
    fadj: dict[int, list[int]] = {}
    seen = set()
    for a, b in pairs:
        key = (a, b) if a < b else (b, a)
        if key in seen:
            continue
        seen.add(key)
        if (a ^ b).bit_count() != 1:
            return None
        fdeg[a] += 1
        fdeg[b] += 1
        if fdeg[a] > 2 or fdeg[b] > 2:
            return None
        fadj.setdefault(a, []).append(b)
        fadj.setdefault(b, []).append(a)

    chain_other: dict[int, int] = {}
    chain_mask: dict[int, int] = {}
    chain_seq: dict[int, tuple[int, ...]] = {}
    visited: set[int] = set()
    for x in sorted(fadj):
        if x in visited or fdeg[x] != 1:
            continue
        seq = [x]
        visited.add(x)
        cur, prev = x, -1
        while True:
            nxt = [w for w in fadj[cur] if w != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seq.append(cur)
            visited.add(cur)
        mask = 0
        for w in seq:
            mask |= 1 << w
        chain_other[x] = cur
        chain_other[cur] = x
        chain_mask[x] = chain_mask[cur] = mask
        chain_seq[x] = tuple(seq)
        chain_seq[cur] = tuple(reversed(seq))
    if len(visited) < len(fadj):
        return None  # some forced component is a cycle
    return fdeg, chain_other, chain_mask, chain_seq


def solve_path_bits(
    n: int,
    pairs: Sequence[tuple[int, int]],
    u: int,
    v: int,
    removed_mask: int = 0,
) -> Optional[list[int]]:
    """Hamilton path of Q_n minus removed vertices, from u to v, containing
    every forced pair.  Returns the vertex list or None; the search is
    exhaustive, so None is definitive."""
    size, full, bit, nbrs, nbmask, half, odd_mask = _tables(n)
    full &= ~removed_mask
    bu, bv = bit[u], bit[v]
    if u == v or not full & bu or not full & bv:
        return None
    prep = _forced_chains(n, pairs)
    if prep is None:
        return None
    fdeg, chain_other, chain_mask, chain_seq = prep
    for a, b in pairs:
        if not full & bit[a] or not full & bit[b]:
            return None
    if fdeg[u] == 2 or fdeg[v] == 2:
        return None

    path = [u]
    visited = bu
    cur = u
    if fdeg[u] == 1:
        cmask = chain_mask[u]
        if cmask & ~full:
            return None
        visited |= cmask
        path = list(chain_seq[u])
        cur = chain_other[u]
        if cur == v:
            return path if visited == full else None
    if visited == full:
        return None  # u == everything but v unreachable

    if size > 512:
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * size))
    constrained_order = n >= 6

    def rec(cur: int, visited: int) -> bool:
        avail = full & ~visited
        # parity prune: the remaining walk alternates, so the minority class
        # is pinned exactly (bipartite balance)
        remaining = avail.bit_count()
        odd_left = (avail & odd_mask).bit_count()
        first_odd = not cur.bit_count() & 1
        need = (remaining + 1) // 2
        if (odd_left if first_odd else remaining - odd_left) != need:
            return False
        # degree prune: non-target avail vertices need >= 2 usable edges
        s = avail | bit[cur]
        ge1 = 0
        ge2 = 0
        for h, sh in half:
            t = ((s & h) << sh) | ((s >> sh) & h)
            ge2 |= ge1 & t
            ge1 |= t
        if avail & ~ge2 & ~bv or not ge1 & bv:
            return False
        # connectivity prune: the whole unvisited region must be reachable
        reach = nbmask[cur] & avail
        if reach != avail:
            prev = -1
            while reach != prev:
                prev = reach
                nb = 0
                for h, sh in half:
                    nb |= ((reach & h) << sh) | ((reach >> sh) & h)
                reach = (reach | nb) & avail
                if reach == avail:
                    break
            if reach != avail:
                return False
        if constrained_order:
            order = sorted(
                (w for w in nbrs[cur] if avail & bit[w]),
                key=lambda w: (nbmask[w] & avail).bit_count(),
            )
        else:
            order = nbrs[cur]
        for w in order:
            bw = bit[w]
            if not avail & bw:
                continue
            if w == v:
                if fdeg[v]:
                    continue
                if avail == bw:
                    path.append(w)
                    return True
                continue
            fd = fdeg[w]
            if fd == 0:
                path.append(w)
                if rec(w, visited | bw):
                    return True
                path.pop()
            elif fd == 1:
                cmask = chain_mask[w]
                if avail & cmask != cmask:
                    continue
                end = chain_other[w]
                seq = chain_seq[w]
                if end == v:
                    if avail == cmask:
                        path.extend(seq)
                        return True
                    continue
                path.extend(seq)
                if rec(end, visited | cmask):
                    return True
                del path[-len(seq):]
            # fd == 2: chain interior, only reachable along its chain
        return False

    return path if rec(cur, visited) else None


def solve_cycle_bits(
    n: int,
    pairs: Sequence[tuple[int, int]],
    removed_mask: int = 0,
) -> Optional[list[int]]:
    """Hamilton cycle of Q_n minus removed vertices containing every forced
    pair.  None is definitive.

    With a forced edge available, its lowest endpoint anchors the cycle:
    a cycle through the edge is exactly a Hamilton path between its
    endpoints (plus the implicit closing edge), so one path search decides.
    Without forced edges the anchor's two cycle edges are enumerated.
    """
    size, full, bit, nbrs, _, _, _ = _tables(n)
    full &= ~removed_mask
    count = full.bit_count()
    if count < 3:
        return None
    prep = _forced_chains(n, pairs)
    if prep is None:
        return None
    for a, b in pairs:
        if not full & bit[a] or not full & bit[b]:
            return None

    covered = sorted({x for p in pairs for x in p})
    if covered:
        anchor = covered[0]
        partner = next(b if a == anchor else a for a, b in pairs if anchor in (a, b))
        rest = [
            (a, b) for a, b in pairs if frozenset((a, b)) != frozenset((anchor, partner))
        ]
        sub = solve_path_bits(n, rest, anchor, partner, removed_mask)
        return sub  # closing edge is the forced one

    anchor = (full & -full).bit_length() - 1
    cand = [w for w in nbrs[anchor] if full & bit[w]]
    for i, w1 in enumerate(cand):
        for w2 in cand[i + 1:]:
            sub = solve_path_bits(n, pairs, w1, w2, removed_mask | bit[anchor])
            if sub is not None:
                return [anchor] + sub
    return None


# ---------------------------------------------------------------------------
# Public wrappers over the bit-level search.
# ---------------------------------------------------------------------------


def _matching_pairs(forced: Matching) -> list[tuple[int, int]]:
    return forced.pairs()


def hamilton_path(
    n: int,
    forced: Matching,
    u: Vertex,
    v: Vertex,
    removed: Iterable[Vertex] = (),
) -> Optional[PathCertificate]:
    """Exhaustive search for a Hamilton path of Q_n (minus ``removed``)
    between u and v containing every forced edge."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    if forced.dim != n or u.dim != n or v.dim != n:
        raise ValueError("dimension mismatch")
    if u == v:
        raise ValueError("endpoints must differ")
    removed_bits = {r.bits for r in removed}
    if u.bits in removed_bits or v.bits in removed_bits:
        raise ValueError("endpoint is a removed vertex")
    for e in forced.edges:
        a, b = e.endpoint_bits()
        if a in removed_bits or b in removed_bits:
            raise ValueError("forced edge touches a removed vertex")
    removed_mask = sum(1 << b for b in removed_bits)
    bits = solve_path_bits(n, forced.pairs(), u.bits, v.bits, removed_mask)
    return None if bits is None else PathCertificate.from_bits(n, bits)


def hamilton_cycle(n: int, forced: Matching) -> Optional[CycleCertificate]:
    """Exhaustive search for a Hamilton cycle of Q_n containing every forced
    edge."""
    if n < 2:
        raise ValueError("cycles need dimension at least 2")
    if forced.dim != n:
        raise ValueError("dimension mismatch")
    bits = solve_cycle_bits(n, forced.pairs())
    return None if bits is None else CycleCertificate.from_bits(n, bits)


@dataclass(frozen=True)
class TwoDistinctResult:
    """Outcome of the second-path search: both certificates when two
    edge-distinct Hamilton paths exist, the first one alone when it is
    unique, or nothing at all."""

    first: Optional[PathCertificate]
    second: Optional[PathCertificate]

    @property
    def outcome(self) -> str:
        if self.first is None:
            return "none"
        return "two" if self.second is not None else "only-one"


def two_distinct_paths(n: int, forced: Matching, u: Vertex, v: Vertex) -> TwoDistinctResult:
    """Find two Hamilton paths between u and v extending ``forced`` that
    differ in at least one edge.

    Strategy: find one path, then re-run the search once per hypercube edge
    absent from it, with that edge forced in addition.  The first success is
    the second path; exhausting all edges proves uniqueness.
    """
    if forced.dim != n or u.dim != n or v.dim != n:
        raise ValueError("dimension mismatch")
    pairs = forced.pairs()
    first_bits = solve_path_bits(n, pairs, u.bits, v.bits)
    if first_bits is None:
        return TwoDistinctResult(None, None)
    used = {frozenset(p) for p in zip(first_bits, first_bits[1:])}
    for base, dir in edge_order(n):
        other = base | (1 << (dir - 1))
        if frozenset((base, other)) in used:
            continue
        second_bits = solve_path_bits(n, pairs + [(base, other)], u.bits, v.bits)
        if second_bits is not None:
            return TwoDistinctResult(
                PathCertificate.from_bits(n, first_bits),
                PathCertificate.from_bits(n, second_bits),
            )
    return TwoDistinctResult(PathCertificate.from_bits(n, first_bits), None)


def endpoint_mask(n: int, pairs: Sequence[tuple[int, int]], u: int) -> int:
    """Bitmask of vertices reachable from u by a Hamilton path containing
    all forced pairs (always of parity opposite to u)."""
    mask = 0
    pu = bin(u).count("1") & 1
    for w in range(1 << n):
        if (bin(w).count("1") & 1) == pu:
            continue
        if solve_path_bits(n, pairs, u, w) is not None:
            mask |= 1 << w
    return mask


def endpoint_set(n: int, m: Matching, u: Vertex) -> set[Vertex]:
    """All vertices v admitting a Hamilton path from u to v extending m."""
    if n < 2:
        raise ValueError("endpoint sets need dimension at least 2")
    if m.dim != n or u.dim != n:
        raise ValueError("dimension mismatch")
    mask = endpoint_mask(n, m.pairs(), u.bits)
    return {Vertex(n, w) for w in range(1 << n) if mask & (1 << w)}
