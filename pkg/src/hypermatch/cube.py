"""Hypercube combinatorics: vertices, edges, matchings and layer structure.

Vertices of the n-dimensional hypercube are encoded as unsigned integers
where bit (i-1) holds coordinate i.  Two vertices are adjacent when they
differ in exactly one bit; the position of that bit (1-based) is the
*direction* of the edge.  A *layer* is all edges of one direction, a
*half-layer* is the half of a layer whose 0-side endpoints share a parity,
and an *almost half-layer* is a half-layer minus a single edge.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .errors import NotUniquelyExtendableError

MAX_DIM = 24  # keeps vertex sets addressable in flat bitset arrays

EVEN = 0
ODD = 1

PARITY_NAMES = {EVEN: "even", ODD: "odd"}


def _check_dim(dim: int) -> None:
    if not 1 <= dim <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {dim}")


@dataclass(frozen=True, order=True)
class Vertex:
    """A hypercube vertex: ``bits`` holds coordinate i at bit (i-1).

    Dimension 0 is allowed only as the degenerate left part of a full-width
    projection.
    """

    dim: int
    bits: int

    def __post_init__(self) -> None:
        if self.dim != 0:
            _check_dim(self.dim)
        if not 0 <= self.bits < (1 << self.dim):
            raise ValueError(f"bits {self.bits:#x} out of range for Q_{self.dim}")

    def coordinate(self, i: int) -> int:
        if not 1 <= i <= self.dim:
            raise ValueError(f"coordinate {i} out of range for Q_{self.dim}")
        return (self.bits >> (i - 1)) & 1

    def __str__(self) -> str:
        return format(self.bits, f"0{self.dim}b")


def parity(v: Vertex) -> int:
    """Parity of a vertex: EVEN (0) or ODD (1) popcount."""
    return v.bits.bit_count() & 1


def neighbor(v: Vertex, i: int) -> Vertex:
    """The neighbor of ``v`` in direction ``i`` (flip bit i-1); involutive."""
    if not 1 <= i <= v.dim:
        raise ValueError(f"direction {i} out of range for Q_{v.dim}")
    return Vertex(v.dim, v.bits ^ (1 << (i - 1)))


@dataclass(frozen=True, order=True)
class Edge:
    """A hypercube edge keyed by its 0-side endpoint and direction.

    ``base`` is the endpoint whose coordinate ``dir`` is 0; the other
    endpoint is ``base`` with bit (dir-1) set.
    """

    base: Vertex
    dir: int

    def __post_init__(self) -> None:
        if not 1 <= self.dir <= self.base.dim:
            raise ValueError(f"direction {self.dir} out of range for Q_{self.base.dim}")
        if self.base.bits & (1 << (self.dir - 1)):
            raise ValueError("edge base must have its direction coordinate clear")

    @property
    def dim(self) -> int:
        return self.base.dim

    def endpoints(self) -> tuple[Vertex, Vertex]:
        return self.base, Vertex(self.dim, self.base.bits | (1 << (self.dir - 1)))

    def endpoint_bits(self) -> tuple[int, int]:
        b = self.base.bits
        return b, b | (1 << (self.dir - 1))

    def __str__(self) -> str:
        a, b = self.endpoints()
        return f"{a}-{b}"


def edge_between(u: Vertex, v: Vertex) -> Edge:
    """The edge joining two adjacent vertices."""
    if u.dim != v.dim:
        raise ValueError("endpoints have different dimensions")
    diff = u.bits ^ v.bits
    if diff.bit_count() != 1:
        raise ValueError(f"{u} and {v} are not adjacent")
    return Edge(Vertex(u.dim, u.bits & ~diff), diff.bit_length())


def edge_from_bits(dim: int, a: int, b: int) -> Edge:
    return edge_between(Vertex(dim, a), Vertex(dim, b))


@dataclass(frozen=True)
class Matching:
    """A set of pairwise vertex-disjoint hypercube edges."""

    dim: int
    edges: frozenset[Edge]

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        seen: set[int] = set()
        for e in self.edges:
            if e.dim != self.dim:
                raise ValueError("edge dimension differs from matching dimension")
            for b in e.endpoint_bits():
                if b in seen:
                    raise ValueError(f"vertex {b:0{self.dim}b} covered twice")
                seen.add(b)

    @classmethod
    def from_pairs(cls, dim: int, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls(dim, frozenset(edge_from_bits(dim, a, b) for a, b in pairs))

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges, key=lambda e: (e.base.bits, e.dir))

    def pairs(self) -> list[tuple[int, int]]:
        return [e.endpoint_bits() for e in self.sorted_edges()]

    def covered_bits(self) -> set[int]:
        out: set[int] = set()
        for e in self.edges:
            a, b = e.endpoint_bits()
            out.add(a)
            out.add(b)
        return out

    def covers(self, v: Vertex) -> bool:
        return v.bits in self.covered_bits()

    def partner(self, v: Vertex) -> Optional[Vertex]:
        """The matched partner of ``v``, or None if uncovered."""
        for e in self.edges:
            a, b = e.endpoint_bits()
            if v.bits == a:
                return Vertex(self.dim, b)
            if v.bits == b:
                return Vertex(self.dim, a)
        return None

    def contains_pair(self, u: Vertex, v: Vertex) -> bool:
        if (u.bits ^ v.bits).bit_count() != 1:
            return False
        return edge_between(u, v) in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.sorted_edges())


def spanned_directions(m: Matching) -> set[int]:
    """The set of directions in which the matching has at least one edge."""
    return {e.dir for e in m.edges}


def edge_order(n: int) -> list[tuple[int, int]]:
    """All edges of Q_n as (base_bits, dir), sorted lexicographically.

    This ordering is the package-wide edge numbering: canonical keys and
    CNF variable indices both use it.
    """
    out = []
    for base in range(1 << n):
        for dir in range(1, n + 1):
            if not base & (1 << (dir - 1)):
                out.append((base, dir))
    return out


def edge_index_map(n: int) -> dict[tuple[int, int], int]:
    """Map (base_bits, dir) to its 0-based position in :func:`edge_order`."""
    return {key: i for i, key in enumerate(edge_order(n))}


@dataclass(frozen=True)
class HalfLayerDesc:
    """Describes a (possibly almost) half-layer found inside a matching.

    ``side_parity`` is the parity of the 0-side endpoints.  For an almost
    half-layer, ``missing`` is the 0-side endpoint of the single absent edge.
    """

    dir: int
    side_parity: int
    missing: Optional[Vertex] = None

    def covers_bits(self, bits: int) -> bool:
        # v is covered by the (full) half-layer iff the 0-side endpoint of
        # its direction-`dir` edge has parity `side_parity`.
        side = (bits.bit_count() + ((bits >> (self.dir - 1)) & 1)) & 1
        return side == self.side_parity


def half_layer_edges(n: int, dir: int, side_parity: int) -> frozenset[Edge]:
    """All edges of the given half-layer of Q_n (2^(n-2) of them)."""
    if n < 2:
        raise ValueError("half-layers need dimension >= 2")
    out = []
    for base in range(1 << n):
        if base & (1 << (dir - 1)):
            continue
        if base.bit_count() & 1 == side_parity:
            out.append(Edge(Vertex(n, base), dir))
    return frozenset(out)


def _layer_bases_by_parity(m: Matching, dir: int) -> tuple[set[int], set[int]]:
    even, odd = set(), set()
    for e in m.edges:
        if e.dir == dir:
            (odd if e.base.bits.bit_count() & 1 else even).add(e.base.bits)
    return even, odd


def half_layers_in(m: Matching) -> list[HalfLayerDesc]:
    """Descriptors of every full half-layer contained in the matching."""
    if m.dim < 2:
        raise ValueError("half-layers need dimension >= 2")
    full = 1 << (m.dim - 2)
    out = []
    for dir in sorted(spanned_directions(m)):
        even, odd = _layer_bases_by_parity(m, dir)
        if len(even) == full:
            out.append(HalfLayerDesc(dir, EVEN))
        if len(odd) == full:
            out.append(HalfLayerDesc(dir, ODD))
    return out


def almost_half_layers_in(m: Matching) -> list[HalfLayerDesc]:
    """Descriptors of every almost half-layer (half-layer minus one edge)
    contained in the matching, with the missing 0-side vertex identified."""
    if m.dim < 2:
        raise ValueError("half-layers need dimension >= 2")
    full = 1 << (m.dim - 2)
    if full - 1 <= 0:
        return []
    out = []
    for dir in range(1, m.dim + 1):
        even, odd = _layer_bases_by_parity(m, dir)
        for side_parity, present in ((EVEN, even), (ODD, odd)):
            if len(present) != full - 1:
                continue
            cls = {
                base
                for base in range(1 << m.dim)
                if not base & (1 << (dir - 1)) and base.bit_count() & 1 == side_parity
            }
            (missing,) = cls - present
            out.append(HalfLayerDesc(dir, side_parity, Vertex(m.dim, missing)))
    return out


@dataclass(frozen=True)
class CConditionReport:
    """Which of the three path obstructions hold for (matching, u, v).

    c1: a half-layer of the matching covers both endpoints.
    c2: an almost half-layer misses exactly the edge uv, and for some
        other direction j both uu^j and vv^j are matched; stored as
        (descriptor, i, j) where i is the almost half-layer's direction.
    c3: the endpoints are matched to each other.
    """

    c1: Optional[HalfLayerDesc] = None
    c2: Optional[tuple[HalfLayerDesc, int, int]] = None
    c3: bool = False

    @property
    def any(self) -> bool:
        return self.c1 is not None or self.c2 is not None or self.c3

    def to_dict(self) -> dict:
        out: dict = {"c3": self.c3}
        if self.c1 is not None:
            out["c1"] = {"dir": self.c1.dir, "side_parity": PARITY_NAMES[self.c1.side_parity]}
        else:
            out["c1"] = None
        if self.c2 is not None:
            desc, i, j = self.c2
            out["c2"] = {
                "dir": i,
                "side_parity": PARITY_NAMES[desc.side_parity],
                "missing": str(desc.missing),
                "pinned_direction": j,
            }
        else:
            out["c2"] = None
        return out


def c_condition_report(m: Matching, u: Vertex, v: Vertex) -> CConditionReport:
    """Classify the obstructions blocking a Hamilton path from u to v that
    extends the matching.  Symmetric in u and v."""
    if u.dim != v.dim or u.dim != m.dim:
        raise ValueError("dimension mismatch between matching and endpoints")
    if m.dim < 2:
        raise ValueError("condition report needs dimension >= 2")
    if parity(u) == parity(v):
        raise ValueError("endpoints must have opposite parity")

    c1 = None
    for desc in half_layers_in(m):
        if desc.covers_bits(u.bits) and desc.covers_bits(v.bits):
            c1 = desc
            break

    c2 = None
    diff = u.bits ^ v.bits
    if diff.bit_count() == 1:
        i = diff.bit_length()
        for desc in almost_half_layers_in(m):
            if desc.dir != i or desc.missing is None:
                continue
            miss_a = desc.missing.bits
            miss_b = miss_a | (1 << (i - 1))
            if {miss_a, miss_b} != {u.bits, v.bits}:
                continue
            for j in range(1, m.dim + 1):
                if j == i:
                    continue
                if m.contains_pair(u, neighbor(u, j)) and m.contains_pair(v, neighbor(v, j)):
                    c2 = (desc, i, j)
                    break
            if c2 is not None:
                break

    c3 = m.contains_pair(u, v)
    return CConditionReport(c1=c1, c2=c2, c3=c3)


def unique_extension(m: Matching) -> Matching:
    """Complete a matching with half-layer or almost-half-layer structure to
    a perfect matching using only edges of the structure's direction."""
    dirs = {d.dir for d in half_layers_in(m)} | {d.dir for d in almost_half_layers_in(m)}
    if not dirs:
        raise NotUniquelyExtendableError(
            "matching has neither a half-layer nor an almost half-layer"
        )
    if len(dirs) > 1:
        raise NotUniquelyExtendableError(
            f"half-layer structure in more than one direction: {sorted(dirs)}"
        )
    (i,) = dirs
    bit = 1 << (i - 1)
    covered = m.covered_bits()
    added = set()
    for w in range(1 << m.dim):
        if w in covered:
            continue
        if w ^ bit in covered:
            raise NotUniquelyExtendableError(
                f"vertex {w:0{m.dim}b} is uncovered but its direction-{i} partner is covered"
            )
        if not w & bit:
            added.add(Edge(Vertex(m.dim, w), i))
    return Matching(m.dim, m.edges | frozenset(added))


def project(v: Vertex, d: int) -> tuple[Vertex, Vertex]:
    """Split a vertex into its high n-d coordinates (L) and low d (R)."""
    if not 1 <= d <= v.dim:
        raise ValueError(f"split position {d} out of range for Q_{v.dim}")
    return Vertex(v.dim - d, v.bits >> d), Vertex(d, v.bits & ((1 << d) - 1))


def embed(left: Vertex, right: Vertex) -> Vertex:
    """Inverse of :func:`project`: reassemble a vertex from its halves."""
    return Vertex(left.dim + right.dim, (left.bits << right.dim) | right.bits)


def subcube_matching(m: Matching, left: Vertex, d: int) -> Matching:
    """The edges of ``m`` lying inside the d-dimensional subcube whose high
    coordinates equal ``left``, reindexed to that subcube."""
    mask = (1 << d) - 1
    edges = []
    for e in m.edges:
        if e.dir > d:
            continue
        if e.base.bits >> d == left.bits:
            edges.append(Edge(Vertex(d, e.base.bits & mask), e.dir))
    return Matching(d, frozenset(edges))


class DirectionRelabeling:
    """A coordinate permutation moving a chosen set of directions to the
    low-order bits.  Applies to vertices, matchings and certificates, and
    inverts exactly; inputs spanning arbitrary directions are normalized on
    the way in and mapped back on the way out."""

    def __init__(self, dim: int, new_to_old: tuple[int, ...]):
        if sorted(new_to_old) != list(range(1, dim + 1)):
            raise ValueError("relabeling must be a permutation of 1..dim")
        self.dim = dim
        self.new_to_old = new_to_old
        self.old_to_new = [0] * (dim + 1)
        for new, old in enumerate(new_to_old, start=1):
            self.old_to_new[old] = new

    @classmethod
    def spanned_to_low(cls, dim: int, dirs: Iterable[int]) -> "DirectionRelabeling":
        spanned = sorted(set(dirs))
        rest = [i for i in range(1, dim + 1) if i not in set(spanned)]
        return cls(dim, tuple(spanned + rest))

    def apply_bits(self, bits: int) -> int:
        out = 0
        for new, old in enumerate(self.new_to_old, start=1):
            if bits & (1 << (old - 1)):
                out |= 1 << (new - 1)
        return out

    def invert_bits(self, bits: int) -> int:
        out = 0
        for new, old in enumerate(self.new_to_old, start=1):
            if bits & (1 << (new - 1)):
                out |= 1 << (old - 1)
        return out

    def apply_vertex(self, v: Vertex) -> Vertex:
        return Vertex(v.dim, self.apply_bits(v.bits))

    def invert_vertex(self, v: Vertex) -> Vertex:
        return Vertex(v.dim, self.invert_bits(v.bits))

    def apply_matching(self, m: Matching) -> Matching:
        return Matching.from_pairs(
            m.dim, [(self.apply_bits(a), self.apply_bits(b)) for a, b in m.pairs()]
        )

    def invert_matching(self, m: Matching) -> Matching:
        return Matching.from_pairs(
            m.dim, [(self.invert_bits(a), self.invert_bits(b)) for a, b in m.pairs()]
        )


# ---------------------------------------------------------------------------
# Matching text format.
#
# First line `dim <n>`, then one edge per line as two binary strings of
# length n (coordinate 1 is the rightmost character).  `#` starts a comment;
# blank lines are ignored.
# ---------------------------------------------------------------------------

_DIM_RE = re.compile(r"^dim\s+(\d+)$")


def parse_matching(text: str) -> Matching:
    dim = None
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dim is None:
            m = _DIM_RE.match(line)
            if not m:
                raise ValueError(f"line {lineno}: expected 'dim <n>' header, got {raw!r}")
            dim = int(m.group(1))
            _check_dim(dim)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected two vertices, got {raw!r}")
        bits = []
        for p in parts:
            if len(p) != dim or set(p) - {"0", "1"}:
                raise ValueError(f"line {lineno}: {p!r} is not a {dim}-bit string")
            bits.append(int(p, 2))
        pairs.append((bits[0], bits[1]))
    if dim is None:
        raise ValueError("missing 'dim <n>' header")
    return Matching.from_pairs(dim, pairs)


def format_matching(m: Matching) -> str:
    lines = [f"dim {m.dim}"]
    for e in m.sorted_edges():
        a, b = e.endpoints()
        lines.append(f"{a} {b}")
    return "\n".join(lines) + "\n"
