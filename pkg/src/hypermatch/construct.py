"""Scalable constructions: Gray codes, subcube threading, and the
extension of few-direction matchings into Hamilton cycles and paths.

A matching spanning at most d directions lives inside the 2^(n-d) canonical
d-dimensional subcubes once its directions are normalized to the low-order
bits.  Cycles and paths of Q_n are then assembled from exact per-subcube
searches (dimension at most the solver cap) threaded along Gray codes of
the quotient cube, so the exact solver never runs above dimension d except
in the explicitly capped full-cube fallback branches.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

from .certificates import CycleCertificate, PathCertificate
from .cube import (
    DirectionRelabeling,
    Matching,
    Vertex,
    c_condition_report,
    spanned_directions,
    unique_extension,
)
from .errors import ConjectureCounterexampleError, UnsupportedFallbackError
from .solver import endpoint_mask, solve_cycle_bits, solve_path_bits

DEFAULT_SOLVER_CAP = 5  # matches the exhaustively verified base dimension
DEFAULT_FULL_SEARCH_CAP = 7  # full-cube fallback searches stay desk-scale


def _solver_cap(override: Optional[int]) -> int:
    if override is not None:
        return override
    return int(os.environ.get("HYPERMATCH_SOLVER_CAP", DEFAULT_SOLVER_CAP))


def _full_cap(override: Optional[int]) -> int:
    if override is not None:
        return override
    return int(os.environ.get("HYPERMATCH_NCAP", DEFAULT_FULL_SEARCH_CAP))


# ---------------------------------------------------------------------------
# Gray-code constructions (no search involved).
# ---------------------------------------------------------------------------


def gray_cycle(m: int) -> CycleCertificate:
    """The reflected binary code as a Hamilton cycle of Q_m."""
    if m < 2:
        raise ValueError("a Hamilton cycle needs dimension >= 2")
    return CycleCertificate.from_bits(m, [k ^ (k >> 1) for k in range(1 << m)])


def _parity(bits: int) -> int:
    return bits.bit_count() & 1


def _gray_path_bits(m: int, a: int, b: int) -> list[int]:
    if m == 1:
        return [a, b]
    if m == 2:
        # opposite parity in Q_2 means adjacent; go around the square
        j = 1 if (a ^ b) & 2 else 2
        jb = 1 << (j - 1)
        return [a, a ^ jb, b ^ jb, b]
    i = ((a ^ b) & -(a ^ b)).bit_length()  # lowest differing coordinate
    ib = 1 << (i - 1)
    lo_mask = ib - 1

    def split(x: int) -> int:
        return (x & lo_mask) | ((x >> i) << (i - 1))

    def unsplit(side: int, loc: int) -> int:
        return (loc & lo_mask) | ((loc >> (i - 1)) << i) | (side << (i - 1))

    side_a = (a >> (i - 1)) & 1
    want = _parity(a) ^ 1
    w = None
    for loc in range(1 << (m - 1)):
        cand = unsplit(side_a, loc)
        if _parity(cand) == want:
            w = cand
            break
    assert w is not None
    first = _gray_path_bits(m - 1, split(a), split(w))
    second = _gray_path_bits(m - 1, split(w ^ ib), split(b))
    return [unsplit(side_a, x) for x in first] + [
        unsplit(side_a ^ 1, x) for x in second
    ]


def gray_path(m: int, a: Vertex, b: Vertex) -> PathCertificate:
    """A Hamilton path of Q_m between prescribed opposite-parity endpoints,
    built by recursive splitting (no backtracking search)."""
    if m < 1 or a.dim != m or b.dim != m:
        raise ValueError("dimension mismatch")
    if _parity(a.bits) == _parity(b.bits):
        raise ValueError("endpoints must have opposite parity")
    return PathCertificate.from_bits(m, _gray_path_bits(m, a.bits, b.bits))


def _gray_path_avoiding_bits(m: int, a: int, b: int, z: int) -> list[int]:
    if m == 2:
        return [a, a ^ b ^ z, b]
    i = ((a ^ b) & -(a ^ b)).bit_length()
    ib = 1 << (i - 1)
    lo_mask = ib - 1

    def split(x: int) -> int:
        return (x & lo_mask) | ((x >> i) << (i - 1))

    def unsplit(side: int, loc: int) -> int:
        return (loc & lo_mask) | ((loc >> (i - 1)) << i) | (side << (i - 1))

    side_a = (a >> (i - 1)) & 1
    side_z = (z >> (i - 1)) & 1
    if side_z == side_a:
        # detour inside a's half, then a plain path through the other half
        want = _parity(a)
        w = None
        for loc in range(1 << (m - 1)):
            cand = unsplit(side_a, loc)
            if cand != a and cand != z and _parity(cand) == want:
                w = cand
                break
        assert w is not None
        first = _gray_path_avoiding_bits(m - 1, split(a), split(w), split(z))
        second = _gray_path_bits(m - 1, split(w ^ ib), split(b))
        return [unsplit(side_a, x) for x in first] + [
            unsplit(side_a ^ 1, x) for x in second
        ]
    want = _parity(a) ^ 1
    w = None
    for loc in range(1 << (m - 1)):
        cand = unsplit(side_a, loc)
        if cand != (b ^ ib) and _parity(cand) == want:
            w = cand
            break
    assert w is not None
    first = _gray_path_bits(m - 1, split(a), split(w))
    second = _gray_path_avoiding_bits(m - 1, split(w ^ ib), split(b), split(z))
    return [unsplit(side_a, x) for x in first] + [
        unsplit(side_a ^ 1, x) for x in second
    ]


def gray_path_avoiding(m: int, a: Vertex, b: Vertex, z: Vertex) -> PathCertificate:
    """A path from a to b covering every vertex of Q_m except z, for a and b
    of equal parity opposite to z's."""
    if m < 2 or a.dim != m or b.dim != m or z.dim != m:
        raise ValueError("dimension mismatch")
    if len({a.bits, b.bits, z.bits}) != 3:
        raise ValueError("endpoints and the avoided vertex must be distinct")
    if _parity(a.bits) != _parity(b.bits) or _parity(a.bits) == _parity(z.bits):
        raise ValueError("need equal-parity endpoints and an avoided vertex of the other parity")
    return PathCertificate.from_bits(m, _gray_path_avoiding_bits(m, a.bits, b.bits, z.bits))


# ---------------------------------------------------------------------------
# Cube sequences and junction threading.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubeSequence:
    """m subcubes of dimension d strung along a path of the quotient cube:
    ``trail`` lists the subcube identifiers (adjacent consecutively),
    ``matchings`` the per-subcube matchings (local, dimension d)."""

    d: int
    trail: tuple[Vertex, ...]
    matchings: tuple[Matching, ...]

    def __post_init__(self) -> None:
        if len(self.trail) != len(self.matchings):
            raise ValueError("one matching per trail cube required")
        for a, b in zip(self.trail, self.trail[1:]):
            if (a.bits ^ b.bits).bit_count() != 1:
                raise ValueError("trail cubes must be consecutive neighbors")
        for m in self.matchings:
            if m.dim != self.d:
                raise ValueError("matching dimension differs from cube dimension")


@dataclass(frozen=True)
class HalfLayerSequence:
    """A per-cube chain of half-layers of one direction whose 0-side
    endpoints share a global parity; local parity alternates along the
    trail."""

    dir: int
    global_parity: int


@dataclass(frozen=True)
class SequencePathResult:
    path: Optional[PathCertificate]
    witness: Optional[HalfLayerSequence]
    junction_choices: tuple[int, ...]


def _half_layer_presence(d: int, pairs: Sequence[tuple[int, int]]) -> set[tuple[int, int]]:
    """(dir, local side parity) of every full half-layer inside the pairs."""
    full = 1 << (d - 2)
    count: dict[tuple[int, int], int] = {}
    for a, b in pairs:
        dir = (a ^ b).bit_length()
        base = min(a, b)
        count[(dir, base.bit_count() & 1)] = count.get((dir, base.bit_count() & 1), 0) + 1
    return {key for key, c in count.items() if c == full}


class _Threader:
    """Left-to-right junction threading of a cube sequence.

    At dimension >= 5 junction feasibility is decided structurally (entry
    parity plus half-layer-sequence coverage pinned at the far endpoint);
    below that the threading backtracks over junction choices exactly.
    """

    def __init__(self, d: int, trail: Sequence[int], mats: Sequence[list[tuple[int, int]]]):
        self.d = d
        self.trail = list(trail)
        self.mats = [list(m) for m in mats]
        self.m = len(self.trail)
        self.tp = [_parity(t) for t in self.trail]
        self.structs = [_half_layer_presence(d, m) if d >= 2 else set() for m in self.mats]
        self.trust = d >= 5
        self.junction_counts: list[int] = []

    def _suffix_blocked_dirs(self, j: int, v_local: int) -> list[tuple[int, int]]:
        """Directions whose half-layer sequence over cubes j..m-1 covers the
        far endpoint, with the global side parity of each."""
        out = []
        gv = (self.tp[self.m - 1] + _parity(v_local)) & 1
        for i in range(1, self.d + 1):
            p_side = (gv + ((v_local >> (i - 1)) & 1)) & 1
            if all(
                (i, (p_side + self.tp[idx]) & 1) in self.structs[idx]
                for idx in range(j, self.m)
            ):
                out.append((i, p_side))
        return out

    def _suffix_avail_mask(self, j: int, v_local: int) -> int:
        """Local entries of cube j from which cubes j..m-1 can still be
        threaded to the far endpoint (structural form, exact for d >= 5)."""
        d = self.d
        if j == self.m - 1:
            return endpoint_mask(d, self.mats[j], v_local)
        gv = (self.tp[self.m - 1] + _parity(v_local)) & 1
        need_lp = (1 + gv + self.tp[j]) & 1
        mask = 0
        blocked = self._suffix_blocked_dirs(j, v_local)
        for r in range(1 << d):
            if _parity(r) != need_lp:
                continue
            covered = False
            for i, p_side in blocked:
                if ((self.tp[j] + _parity(r) + ((r >> (i - 1)) & 1)) & 1) == p_side:
                    covered = True
                    break
            if not covered:
                mask |= 1 << r
        return mask

    def full_blocking_witness(self, u_local: int, v_local: int) -> Optional[HalfLayerSequence]:
        """A half-layer sequence over the whole trail covering both
        endpoints, if one exists."""
        gu = (self.tp[0] + _parity(u_local)) & 1
        for i, p_side in self._suffix_blocked_dirs(0, v_local):
            if ((gu + ((u_local >> (i - 1)) & 1)) & 1) == p_side:
                return HalfLayerSequence(dir=i, global_parity=p_side)
        return None

    def thread(self, u_local: int, v_local: int) -> Optional[list[list[int]]]:
        """Local per-cube segments of a Hamilton path of the sequence, or
        None when no single-crossing threading exists."""
        if self.m == 1:
            seg = solve_path_bits(self.d, self.mats[0], u_local, v_local)
            return None if seg is None else [seg]
        if self.trust:
            segments = []
            entry = u_local
            for j in range(self.m - 1):
                w = endpoint_mask(self.d, self.mats[j], entry) & self._suffix_avail_mask(
                    j + 1, v_local
                )
                if not w:
                    return None
                self.junction_counts.append(w.bit_count())
                r = (w & -w).bit_length() - 1
                seg = solve_path_bits(self.d, self.mats[j], entry, r)
                if seg is None:
                    raise ConjectureCounterexampleError(
                        "per-cube search failed on a junction promised by the "
                        "endpoint analysis",
                        instance=(self.d, tuple(self.mats[j]), entry, r),
                    )
                segments.append(seg)
                entry = r
            seg = solve_path_bits(self.d, self.mats[self.m - 1], entry, v_local)
            if seg is None:
                raise ConjectureCounterexampleError(
                    "final cube rejected an entry inside its endpoint set",
                    instance=(self.d, tuple(self.mats[self.m - 1]), entry, v_local),
                )
            segments.append(seg)
            return segments
        return self._thread_exact(0, u_local, v_local)

    def _thread_exact(self, j: int, entry: int, v_local: int) -> Optional[list[list[int]]]:
        if j == self.m - 1:
            seg = solve_path_bits(self.d, self.mats[j], entry, v_local)
            return None if seg is None else [seg]
        w = endpoint_mask(self.d, self.mats[j], entry)
        while w:
            r = (w & -w).bit_length() - 1
            w &= w - 1
            rest = self._thread_exact(j + 1, r, v_local)
            if rest is not None:
                seg = solve_path_bits(self.d, self.mats[j], entry, r)
                assert seg is not None
                self.junction_counts.append(1)
                return [seg] + rest
        return None


def _lift(trail_bits: int, d: int, seg: Sequence[int]) -> list[int]:
    return [(trail_bits << d) | x for x in seg]


def _subcube_pairs(m: Matching, left_bits: int, d: int) -> list[tuple[int, int]]:
    mask = (1 << d) - 1
    out = []
    for a, b in m.pairs():
        if a >> d == left_bits and b >> d == left_bits:
            out.append((a & mask, b & mask))
    return out


def sequence_path(seq: CubeSequence, u: Vertex, v: Vertex) -> SequencePathResult:
    """Thread a Hamilton path through a cube sequence from u (first cube)
    to v (last cube), extending every per-cube matching.

    Returns the path, or the blocking half-layer sequence as a witness when
    the endpoints are jointly covered by one.  For d below 5 a miss may
    carry no witness (the threading is the guaranteed construction only
    from dimension 5 up).
    """
    d = seq.d
    if len(seq.trail) < 2:
        raise ValueError("a cube sequence needs at least two cubes")
    n = seq.trail[0].dim + d
    if u.dim != n or v.dim != n:
        raise ValueError("endpoint dimension mismatch")
    if (u.bits >> d) != seq.trail[0].bits or (v.bits >> d) != seq.trail[-1].bits:
        raise ValueError("endpoints must lie in the first and last cube")
    if (u.bits.bit_count() + v.bits.bit_count()) % 2 == 0:
        raise ValueError("endpoints must have opposite global parity")
    mask = (1 << d) - 1
    threader = _Threader(
        d,
        [t.bits for t in seq.trail],
        [m.pairs() for m in seq.matchings],
    )
    u_loc, v_loc = u.bits & mask, v.bits & mask
    witness = threader.full_blocking_witness(u_loc, v_loc)
    if witness is not None:
        return SequencePathResult(None, witness, ())
    segments = threader.thread(u_loc, v_loc)
    if segments is None:
        if threader.trust:
            raise ConjectureCounterexampleError(
                "threading failed without a blocking half-layer sequence",
                instance=(seq, u, v),
            )
        return SequencePathResult(None, None, ())
    bits: list[int] = []
    for t, seg in zip(seq.trail, segments):
        bits.extend(_lift(t.bits, d, seg))
    return SequencePathResult(
        PathCertificate.from_bits(n, bits),
        None,
        tuple(threader.junction_counts),
    )


# ---------------------------------------------------------------------------
# Cube attachment (detour splicing).
# ---------------------------------------------------------------------------


def _find_detour(
    d: int,
    candidate_paths: Sequence[Sequence[int]],
    forbidden: set[frozenset[int]],
    other_pairs: list[tuple[int, int]],
) -> Optional[tuple[int, int, list[int]]]:
    """Lowest free edge over the candidate paths admitting a Hamilton path
    of the adjacent cube between the corresponding vertices.  Returns
    (path_index, edge_position, detour_path)."""
    cands = []
    for pi, p in enumerate(candidate_paths):
        for pos in range(len(p) - 1):
            a, b = p[pos], p[pos + 1]
            if frozenset((a, b)) in forbidden:
                continue
            cands.append((min(a, b), max(a, b), pi, pos))
    for _lo, _hi, pi, pos in sorted(cands):
        a, b = candidate_paths[pi][pos], candidate_paths[pi][pos + 1]
        detour = solve_path_bits(d, other_pairs, a, b)
        if detour is not None:
            return pi, pos, detour
    return None


def _splice(
    own: Sequence[int], pos: int, detour: Sequence[int], own_left: int, other_left: int, d: int
) -> list[int]:
    out = _lift(own_left, d, own[: pos + 1])
    out.extend(_lift(other_left, d, detour))
    out.extend(_lift(own_left, d, own[pos + 1:]))
    return out


def attach_cube(
    z1: PathCertificate, z2: PathCertificate, m1: Matching, m2: Matching
) -> PathCertificate:
    """Merge an adjacent cube into one of two same-start Hamilton paths.

    Some edge of z1 or z2 outside m1 admits a Hamilton path of the second
    cube between its counterparts; replacing the edge by that detour yields
    a Hamilton path of the two-cube graph (dimension d+1, second cube on
    the high bit) from the shared start to an end of z1 or z2.
    """
    d = m1.dim
    if z1.dim != d or z2.dim != d or m2.dim != d:
        raise ValueError("dimension mismatch")
    if z1.vertices[0] != z2.vertices[0]:
        raise ValueError("paths must share their start vertex")
    if z1.edge_pairs() == z2.edge_pairs():
        raise ValueError("paths must be distinct")
    forbidden = {frozenset(e.endpoint_bits()) for e in m1.edges}
    found = _find_detour(d, [z1.bits(), z2.bits()], forbidden, m2.pairs())
    if found is None:
        raise ConjectureCounterexampleError(
            "no free edge admits a detour through the attached cube",
            instance=(z1, z2, m1, m2),
        )
    pi, pos, detour = found
    own = (z1.bits(), z2.bits())[pi]
    return PathCertificate.from_bits(d + 1, _splice(own, pos, detour, 0, 1, d))


# ---------------------------------------------------------------------------
# Disjoint covering paths for obstructed endpoint pairs.
# ---------------------------------------------------------------------------


def _split_along(bits: int, k: int) -> tuple[int, int]:
    """Drop coordinate k: (its value, the remaining bits packed down)."""
    side = (bits >> (k - 1)) & 1
    low = bits & ((1 << (k - 1)) - 1)
    high = (bits >> k) << (k - 1)
    return side, high | low


def _unsplit_along(side: int, local: int, k: int) -> int:
    low = local & ((1 << (k - 1)) - 1)
    high = (local >> (k - 1)) << k
    return high | low | (side << (k - 1))


def _open_cycle_at(cycle: list[int], at: int, partner: Optional[int]) -> list[int]:
    """Orient a cycle into a path starting at ``at`` whose dropped edge is
    not the matched edge at ``at``."""
    pos = cycle.index(at)
    rot = cycle[pos:] + cycle[:pos]
    if partner is not None:
        # dropping the first edge of the reversed walk keeps the matched one
        if rot[1] != partner:
            rot = [rot[0]] + rot[1:][::-1]
    elif rot[1] < rot[-1]:
        rot = [rot[0]] + rot[1:][::-1]
    return rot


def disjoint_paths(
    d: int, m: Matching, u: Vertex, v: Vertex
) -> tuple[tuple[Vertex, ...], tuple[Vertex, ...]]:
    """Two vertex-disjoint paths from u and from v that jointly cover Q_d
    and extend the matching's direction-wise completion, ending at
    non-adjacent vertices of opposite parity.  Requires an obstruction
    (covering half-layer or pinned almost half-layer) for the pair."""
    if d < 5:
        raise ValueError("disjoint covering paths need dimension >= 5")
    if m.dim != d or u.dim != d or v.dim != d:
        raise ValueError("dimension mismatch")
    report = c_condition_report(m, u, v)
    if report.c3 or m.contains_pair(u, v):
        raise ValueError("endpoints must not be matched to each other")
    if report.c1 is None and report.c2 is None:
        raise ValueError("the pair carries no covering or pinned obstruction")
    full = unique_extension(m)
    fpairs = full.pairs()
    partner = {a: b for a, b in fpairs} | {b: a for a, b in fpairs}

    if report.c1 is not None:
        i = report.c1.dir
        diff = u.bits ^ v.bits
        ks = [k for k in range(1, d + 1) if k != i and diff & (1 << (k - 1))]
        if not ks:
            raise ConjectureCounterexampleError(
                "covered endpoints at distance below the structural minimum",
                instance=(m, u, v),
            )
        k = ks[0]

        def side_pairs(side: int) -> list[tuple[int, int]]:
            out = []
            for a, b in fpairs:
                if (a >> (k - 1)) & 1 == side and (b >> (k - 1)) & 1 == side:
                    out.append((_split_along(a, k)[1], _split_along(b, k)[1]))
            return out

        su, _ = _split_along(u.bits, k)
        sv, vloc = _split_along(v.bits, k)
        uloc = _split_along(u.bits, k)[1]

        cyc_u = solve_cycle_bits(d - 1, side_pairs(su))
        if cyc_u is None:
            raise ConjectureCounterexampleError(
                "no cycle through the u-side perfect matching", instance=(m, u, v)
            )
        pu = _split_along(partner[u.bits], k)[1]
        zu_path = _open_cycle_at(cyc_u, uloc, pu)
        zu_loc = zu_path[-1]

        pv = _split_along(partner[v.bits], k)[1]
        cyc_v = solve_cycle_bits(d - 1, side_pairs(sv))
        if cyc_v is None:
            raise ConjectureCounterexampleError(
                "no cycle through the v-side perfect matching", instance=(m, u, v)
            )
        zv_path = _open_cycle_at(cyc_v, vloc, pv)
        if zv_path[-1] == zu_loc:
            # endpoint would sit opposite z_u; force a different last edge
            zv_path = None
            for w in sorted(x for x in (vloc ^ (1 << t) for t in range(d - 1))
                            if x != pv and x != zu_loc):
                forced = side_pairs(sv) + [(vloc, w)]
                cyc = solve_cycle_bits(d - 1, forced)
                if cyc is not None:
                    zv_path = _open_cycle_at(cyc, vloc, pv)
                    assert zv_path[-1] == w
                    break
            if zv_path is None:
                raise ConjectureCounterexampleError(
                    "no alternative cycle end beside the blocked one",
                    instance=(m, u, v),
                )
        path_u = [_unsplit_along(su, x, k) for x in zu_path]
        path_v = [_unsplit_along(sv, x, k) for x in zv_path]
        return (
            tuple(Vertex(d, x) for x in path_u),
            tuple(Vertex(d, x) for x in path_v),
        )

    if report.c2 is None:
        raise ValueError("the pair carries no covering or pinned obstruction")
    _desc, i, j = report.c2
    jb = 1 << (j - 1)
    zu = u.bits ^ jb
    removed_mask = (1 << u.bits) | (1 << zu)
    reduced = [p for p in fpairs if u.bits not in p and zu not in p]
    zv_path = None
    for k in range(1, d + 1):
        if k == i or k == j:
            continue
        cand = v.bits ^ (1 << (k - 1))
        seg = solve_path_bits(d, reduced, v.bits, cand, removed_mask)
        if seg is not None:
            zv_path = seg
            break
    if zv_path is None:
        raise ConjectureCounterexampleError(
            "no covering cycle avoids the pinned pair", instance=(m, u, v)
        )
    return (
        (u, Vertex(d, zu)),
        tuple(Vertex(d, x) for x in zv_path),
    )


# ---------------------------------------------------------------------------
# Hamilton cycle extension.
# ---------------------------------------------------------------------------


def _relabel_low(n: int, m: Matching, d: int) -> tuple[DirectionRelabeling, Matching]:
    dirs = spanned_directions(m)
    if len(dirs) > d:
        raise ValueError(f"matching spans {len(dirs)} directions, more than d={d}")
    relabel = DirectionRelabeling.spanned_to_low(n, sorted(dirs))
    return relabel, relabel.apply_matching(m)


def extend_to_cycle(
    n: int,
    d: int,
    m: Matching,
    solver_cap: Optional[int] = None,
    full_cap: Optional[int] = None,
) -> CycleCertificate:
    """Extend a matching of Q_n spanning at most d directions into a
    Hamilton cycle.

    The spanned directions are normalized onto the low bits; a Gray cycle
    of the quotient cube orders the subcubes, each subcube contributes a
    cycle through its own matching opened at the entry vertex, and the
    start cube is closed with a single prescribed-endpoint path.
    """
    cap = _solver_cap(solver_cap)
    ncap = _full_cap(full_cap)
    if not 2 <= d <= n:
        raise ValueError("need 2 <= d <= n")
    if d > cap:
        raise UnsupportedFallbackError(
            f"subcube dimension {d} above the verified solver cap {cap}"
        )
    if m.dim != n:
        raise ValueError("matching dimension mismatch")
    relabel, mn = _relabel_low(n, m, d)

    def finish(bits: list[int]) -> CycleCertificate:
        return CycleCertificate.from_bits(n, [relabel.invert_bits(x) for x in bits])

    covered = mn.covered_bits()
    if n == d or len(covered) == 1 << n:
        if n > d and n > ncap:
            raise UnsupportedFallbackError(
                f"perfect matching fallback needs a full Q_{n} search, cap is {ncap}"
            )
        bits = solve_cycle_bits(n, mn.pairs())
        if bits is None:
            raise ConjectureCounterexampleError(
                "no Hamilton cycle through the matching", instance=m
            )
        return finish(bits)

    mask = (1 << d) - 1
    v1 = min(x for x in range(1 << n) if x not in covered)
    l1 = v1 >> d
    if n - d == 1:
        order = [l1, l1 ^ 1]
    else:
        seq = [k ^ (k >> 1) for k in range(1 << (n - d))]
        pos = seq.index(l1)
        order = seq[pos:] + seq[:pos]

    local_pairs = {c: _subcube_pairs(mn, c, d) for c in order}
    segments: list[list[int]] = []
    v_prev = v1
    for c in order[1:]:
        u_t = (c << d) | (v_prev & mask)
        cyc = solve_cycle_bits(d, local_pairs[c])
        if cyc is None:
            raise ConjectureCounterexampleError(
                "subcube matching admits no Hamilton cycle",
                instance=(d, tuple(local_pairs[c])),
            )
        u_loc = u_t & mask
        pairs_set = {frozenset(p) for p in local_pairs[c]}
        pos = cyc.index(u_loc)
        rot = cyc[pos:] + cyc[:pos]
        nxt, prv = rot[1], rot[-1]
        eligible = [
            w for w in sorted((nxt, prv)) if frozenset((u_loc, w)) not in pairs_set
        ]
        v_loc = eligible[0]
        if v_loc == prv:
            seg = rot
        else:
            seg = [rot[0]] + rot[1:][::-1]
        segments.append(_lift(c, d, seg))
        v_prev = (c << d) | seg[-1]

    u1 = (order[0] << d) | (v_prev & mask)
    z1 = solve_path_bits(d, local_pairs[order[0]], u1 & mask, v1 & mask)
    if z1 is None:
        raise ConjectureCounterexampleError(
            "start cube rejected the closing prescribed-endpoint path",
            instance=(d, tuple(local_pairs[order[0]]), u1 & mask, v1 & mask),
        )
    bits = _lift(order[0], d, z1)
    for seg in segments:
        bits.extend(seg)
    return finish(bits)


# ---------------------------------------------------------------------------
# Hamilton path extension between prescribed endpoints.
# ---------------------------------------------------------------------------


def _second_path_bits(
    d: int, pairs: list[tuple[int, int]], u: int, v: int, first: list[int]
) -> Optional[list[int]]:
    """A second Hamilton path differing from ``first`` in some edge, found
    by forcing each absent edge in turn."""
    from .cube import edge_order

    used = set(zip(first, first[1:])) | set(zip(first[1:], first))
    for base, dir in edge_order(d):
        other = base | (1 << (dir - 1))
        if (base, other) in used:
            continue
        second = solve_path_bits(d, pairs + [(base, other)], u, v)
        if second is not None:
            return second
    return None


def _blocking_dirs_over_cubes(
    d: int,
    cubes: Sequence[int],
    structs: dict[int, set[tuple[int, int]]],
    gu: int,
    u_loc: int,
    gv: int,
    v_loc: int,
) -> list[int]:
    """Directions carrying a half-layer in every listed cube, aligned on one
    global side parity, covering both endpoints."""
    out = []
    for i in range(1, d + 1):
        p_u = (gu + ((u_loc >> (i - 1)) & 1)) & 1
        p_v = (gv + ((v_loc >> (i - 1)) & 1)) & 1
        if p_u != p_v:
            continue
        if all((i, (p_u + _parity(c)) & 1) in structs[c] for c in cubes):
            out.append(i)
    return out


def _thread_with_detour(
    d: int,
    trail: list[int],
    mats: dict[int, list[tuple[int, int]]],
    u_loc: int,
    v_loc: int,
    special: int,
    z_bits: int,
) -> list[int]:
    """Thread the trail like :class:`_Threader` but grow the cube at
    ``trail[special]`` with a detour covering the skipped cube ``z_bits``,
    using the two lowest junction choices at the adjacent boundary."""
    thr = _Threader(d, trail, [mats[c] for c in trail])
    m = thr.m
    z_pairs = mats[z_bits]
    bits: list[int] = []

    def two_lowest(w: int) -> tuple[int, int]:
        if w.bit_count() < 2:
            raise ConjectureCounterexampleError(
                "fewer than two junction choices at the detour boundary",
                instance=(d, tuple(trail), special, z_bits),
            )
        r1 = (w & -w).bit_length() - 1
        w2 = w & (w - 1)
        return r1, (w2 & -w2).bit_length() - 1

    entry = u_loc
    if special < m - 1:
        for j in range(m - 1):
            w = endpoint_mask(d, thr.mats[j], entry) & thr._suffix_avail_mask(j + 1, v_loc)
            if not w:
                raise ConjectureCounterexampleError(
                    "junction starved despite the avoided-cube choice",
                    instance=(d, tuple(trail), j),
                )
            if j == special:
                r1, r2 = two_lowest(w)
                seg1 = solve_path_bits(d, thr.mats[j], entry, r1)
                seg2 = solve_path_bits(d, thr.mats[j], entry, r2)
                if seg1 is None or seg2 is None:
                    raise ConjectureCounterexampleError(
                        "junction candidate lost its in-cube path",
                        instance=(d, tuple(trail), j),
                    )
                forbidden = {frozenset(p) for p in thr.mats[j]}
                found = _find_detour(d, [seg1, seg2], forbidden, z_pairs)
                if found is None:
                    raise ConjectureCounterexampleError(
                        "no free edge of either junction path admits the "
                        "skipped-cube detour",
                        instance=(d, tuple(trail), special, z_bits),
                    )
                pi, pos, det = found
                own = (seg1, seg2)[pi]
                bits.extend(_splice(own, pos, det, trail[j], z_bits, d))
                entry = own[-1]
            else:
                r = (w & -w).bit_length() - 1
                seg = solve_path_bits(d, thr.mats[j], entry, r)
                assert seg is not None
                bits.extend(_lift(trail[j], d, seg))
                entry = r
        last = solve_path_bits(d, thr.mats[m - 1], entry, v_loc)
        if last is None:
            raise ConjectureCounterexampleError(
                "final cube rejected a promised entry", instance=(d, tuple(trail))
            )
        bits.extend(_lift(trail[m - 1], d, last))
        return bits

    # the detour cube is the trail's last: vary the entry junction instead
    for j in range(m - 2):
        w = endpoint_mask(d, thr.mats[j], entry) & thr._suffix_avail_mask(j + 1, v_loc)
        if not w:
            raise ConjectureCounterexampleError(
                "junction starved despite the avoided-cube choice",
                instance=(d, tuple(trail), j),
            )
        r = (w & -w).bit_length() - 1
        seg = solve_path_bits(d, thr.mats[j], entry, r)
        assert seg is not None
        bits.extend(_lift(trail[j], d, seg))
        entry = r
    w = endpoint_mask(d, thr.mats[m - 2], entry) & endpoint_mask(
        d, thr.mats[m - 1], v_loc
    )
    if not w:
        raise ConjectureCounterexampleError(
            "junction starved at the final boundary", instance=(d, tuple(trail))
        )
    r1, r2 = two_lowest(w)
    s1 = solve_path_bits(d, thr.mats[m - 1], r1, v_loc)
    s2 = solve_path_bits(d, thr.mats[m - 1], r2, v_loc)
    if s1 is None or s2 is None:
        raise ConjectureCounterexampleError(
            "junction candidate lost its in-cube path", instance=(d, tuple(trail))
        )
    rev1, rev2 = s1[::-1], s2[::-1]
    forbidden = {frozenset(p) for p in thr.mats[m - 1]}
    found = _find_detour(d, [rev1, rev2], forbidden, z_pairs)
    if found is None:
        raise ConjectureCounterexampleError(
            "no free edge of either junction path admits the skipped-cube detour",
            instance=(d, tuple(trail), special, z_bits),
        )
    pi, pos, det = found
    own = (rev1, rev2)[pi]
    chosen_r = own[-1]
    seg = solve_path_bits(d, thr.mats[m - 2], entry, chosen_r)
    if seg is None:
        raise ConjectureCounterexampleError(
            "penultimate cube rejected the chosen junction", instance=(d, tuple(trail))
        )
    bits.extend(_lift(trail[m - 2], d, seg))
    spliced = _splice(own, pos, det, trail[m - 1], z_bits, d)
    bits.extend(reversed(spliced))
    return bits


def extend_to_path(
    n: int,
    d: int,
    m: Matching,
    u: Vertex,
    v: Vertex,
    solver_cap: Optional[int] = None,
    full_cap: Optional[int] = None,
) -> Optional[PathCertificate]:
    """Extend a matching of Q_n spanning at most d directions into a
    Hamilton path between u and v, or report impossibility.

    Returns None exactly when one of the obstructions holds for the pair
    (a covering half-layer, a pinned almost half-layer, or the endpoints
    being matched).  Otherwise assembles a certificate by case analysis on
    where the endpoints live relative to the d-dimensional subcubes, with
    full-cube fallback searches capped by ``full_cap``.
    """
    cap = _solver_cap(solver_cap)
    ncap = _full_cap(full_cap)
    if not 5 <= d <= n:
        raise ValueError("need 5 <= d <= n")
    if d > cap:
        raise UnsupportedFallbackError(
            f"subcube dimension {d} above the verified solver cap {cap}"
        )
    if m.dim != n or u.dim != n or v.dim != n:
        raise ValueError("dimension mismatch")
    if (u.bits.bit_count() + v.bits.bit_count()) % 2 == 0:
        raise ValueError("endpoints must have opposite parity")
    relabel, mn = _relabel_low(n, m, d)
    un = relabel.apply_bits(u.bits)
    vn = relabel.apply_bits(v.bits)
    report = c_condition_report(mn, Vertex(n, un), Vertex(n, vn))
    if report.any:
        return None

    def finish(bits: list[int]) -> PathCertificate:
        return PathCertificate.from_bits(n, [relabel.invert_bits(x) for x in bits])

    def full_search() -> PathCertificate:
        if n > ncap:
            raise UnsupportedFallbackError(
                f"unsupported: perfect-structure fallback needs a full Q_{n} "
                f"search, cap is {ncap}"
            )
        bits = solve_path_bits(n, mn.pairs(), un, vn)
        if bits is None:
            raise ConjectureCounterexampleError(
                "full-cube search failed with no obstruction present",
                instance=(m, u, v),
            )
        return finish(bits)

    if n == d:
        bits = solve_path_bits(n, mn.pairs(), un, vn)
        if bits is None:
            raise ConjectureCounterexampleError(
                "no path despite obstruction-free endpoints", instance=(m, u, v)
            )
        return finish(bits)

    q = n - d
    mask = (1 << d) - 1
    ul, ur = un >> d, un & mask
    vl, vr = vn >> d, vn & mask
    mats = {c: _subcube_pairs(mn, c, d) for c in range(1 << q)}
    structs = {c: _half_layer_presence(d, mats[c]) for c in mats}
    gu = _parity(un)
    gv = _parity(vn)

    if ul != vl:
        if _parity(ul) != _parity(vl):
            # endpoints' cubes are joinable by a quotient Hamilton path
            trail = _gray_path_bits(q, ul, vl) if q > 1 else [ul, vl]
            thr = _Threader(d, trail, [mats[c] for c in trail])
            if thr.full_blocking_witness(ur, vr) is not None:
                raise ConjectureCounterexampleError(
                    "blocking sequence without a global half-layer",
                    instance=(m, u, v),
                )
            segments = thr.thread(ur, vr)
            if segments is None:
                raise ConjectureCounterexampleError(
                    "threading starved without an obstruction", instance=(m, u, v)
                )
            bits = []
            for c, seg in zip(trail, segments):
                bits.extend(_lift(c, d, seg))
            return finish(bits)
        # same quotient parity: avoid one cube, then splice it back in
        chosen_z = None
        for z in range(1 << q):
            if _parity(z) == _parity(ul):
                continue
            cubes = [c for c in range(1 << q) if c != z]
            if not _blocking_dirs_over_cubes(d, cubes, structs, gu, ur, gv, vr):
                chosen_z = z
                break
        if chosen_z is None:
            raise ConjectureCounterexampleError(
                "every avoidable cube leaves a blocking sequence; a global "
                "half-layer should have been reported",
                instance=(m, u, v),
            )
        trail = _gray_path_avoiding_bits(q, ul, vl, chosen_z)
        zprime = min(chosen_z ^ (1 << t) for t in range(q))
        special = trail.index(zprime)
        bits = _thread_with_detour(d, trail, mats, ur, vr, special, chosen_z)
        return finish(bits)

    # endpoints share a cube
    mstar = mats[ul]
    ystar = solve_path_bits(d, mstar, ur, vr)
    if n > d + 1:
        seq = [k ^ (k >> 1) for k in range(1 << q)]
        pos = seq.index(ul)
        ring = (seq[pos:] + seq[:pos])[1:]
        thr = _Threader(d, ring, [mats[c] for c in ring])
        if ystar is not None:
            pairs_set = {frozenset(p) for p in mstar}
            cands = []
            for t in range(len(ystar) - 1):
                a, b = ystar[t], ystar[t + 1]
                if frozenset((a, b)) in pairs_set:
                    continue
                cands.append((min(a, b), max(a, b), t))
            for _lo, _hi, t in sorted(cands):
                a, b = ystar[t], ystar[t + 1]
                for w, zz in ((a, b), (b, a)):
                    if thr.full_blocking_witness(w, zz) is not None:
                        continue
                    segments = thr.thread(w, zz)
                    if segments is None:
                        raise ConjectureCounterexampleError(
                            "ring threading starved without an obstruction",
                            instance=(m, u, v),
                        )
                    detour = []
                    for c, seg in zip(ring, segments):
                        detour.extend(_lift(c, d, seg))
                    if w != a:
                        # threaded from b's side: walk the detour towards b
                        detour.reverse()
                    bits = (
                        _lift(ul, d, ystar[: t + 1])
                        + detour
                        + _lift(ul, d, ystar[t + 1:])
                    )
                    return finish(bits)
            covered = mn.covered_bits()
            uncovered = {x for x in range(1 << n) if x not in covered}
            if uncovered <= {un, vn}:
                return full_search()
            raise ConjectureCounterexampleError(
                "no spliceable edge although the matching is far from perfect",
                instance=(m, u, v),
            )
        # no in-cube path: split the pair apart with disjoint covering paths
        local = Matching.from_pairs(d, mstar)
        zu_path, zv_path = disjoint_paths(d, local, Vertex(d, ur), Vertex(d, vr))
        zu = zu_path[-1].bits
        zv = zv_path[-1].bits
        if thr.full_blocking_witness(zu, zv) is not None:
            return full_search()
        segments = thr.thread(zu, zv)
        if segments is None:
            raise ConjectureCounterexampleError(
                "ring threading starved without an obstruction", instance=(m, u, v)
            )
        bits = _lift(ul, d, [x.bits for x in zu_path])
        for c, seg in zip(ring, segments):
            bits.extend(_lift(c, d, seg))
        bits.extend(_lift(ul, d, [x.bits for x in reversed(zv_path)]))
        return finish(bits)

    # n == d + 1: a single adjacent cube remains
    ldag = ul ^ 1
    mdag = mats[ldag]
    if ystar is not None:
        second = _second_path_bits(d, mstar, ur, vr, ystar)
        if second is None:
            raise ConjectureCounterexampleError(
                "a unique in-cube path where two are promised", instance=(m, u, v)
            )
        att = attach_cube(
            PathCertificate.from_bits(d, ystar),
            PathCertificate.from_bits(d, second),
            Matching.from_pairs(d, mstar),
            Matching.from_pairs(d, mdag),
        )
        bits = [x ^ (ul << d) for x in att.bits()]
        return finish(bits)
    local = Matching.from_pairs(d, mstar)
    zu_path, zv_path = disjoint_paths(d, local, Vertex(d, ur), Vertex(d, vr))
    zu = zu_path[-1].bits
    zv = zv_path[-1].bits
    seg = solve_path_bits(d, mdag, zu, zv)
    if seg is None:
        return full_search()
    bits = _lift(ul, d, [x.bits for x in zu_path])
    bits.extend(_lift(ldag, d, seg))
    bits.extend(_lift(ul, d, [x.bits for x in reversed(zv_path)]))
    return finish(bits)

