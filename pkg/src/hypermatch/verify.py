"""Campaign runners for the computer-assisted verification results.

Campaigns fan out one worker per uncovered-vertex class; workers share
nothing and a reducer merges counts and failure lists, so reports are
deterministic for a fixed configuration.  ``wall_time`` is informational
and excluded from the deterministic JSON form.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Iterable, Optional, Sequence

from . import canon
from .cube import (
    Edge,
    Matching,
    Vertex,
    edge_order,
    half_layer_edges,
)
from .enumeration import (
    MatchingClass,
    has_c_structure,
    iter_class_representatives,
    matching_from_edge_ids,
    one_edge_away_instances,
    uncovered_classes,
)
from .solver import solve_path_bits


@dataclass(frozen=True)
class Failure:
    part: str  # "maximal" | "one_edge_away" | "sample"
    matching_pairs: tuple[tuple[int, int], ...]
    u: int
    v: int
    reason: str

    def to_dict(self, dim: int) -> dict:
        return {
            "part": self.part,
            "matching": [
                [format(a, f"0{dim}b"), format(b, f"0{dim}b")]
                for a, b in self.matching_pairs
            ],
            "u": format(self.u, f"0{dim}b"),
            "v": format(self.v, f"0{dim}b"),
            "reason": self.reason,
        }

    def to_plain(self) -> list:
        return [self.part, [list(p) for p in self.matching_pairs], self.u, self.v, self.reason]

    @classmethod
    def from_plain(cls, rec: list) -> "Failure":
        part, pairs, u, v, reason = rec
        return cls(part, tuple((a, b) for a, b in pairs), u, v, reason)


@dataclass
class CampaignReport:
    kind: str
    dim: int
    classes_done: int = 0
    matchings_checked: int = 0
    pairs_checked: int = 0
    skipped_pairs: int = 0
    non_isomorphic: int = 0
    with_duplicates: int = 0
    one_edge_away_count: int = 0
    failures: list[Failure] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def confirmed(self) -> bool:
        return not self.failures

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "schema": 1,
            "kind": self.kind,
            "dim": self.dim,
            "classes_done": self.classes_done,
            "matchings_checked": self.matchings_checked,
            "pairs_checked": self.pairs_checked,
            "skipped_pairs": self.skipped_pairs,
            "non_isomorphic": self.non_isomorphic,
            "with_duplicates": self.with_duplicates,
            "one_edge_away_instances": self.one_edge_away_count,
            "confirmed": self.confirmed,
            "failures": [f.to_dict(self.dim) for f in self.failures],
        }
        if include_timing:
            out["wall_time_s"] = round(self.wall_time, 3)
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, threads)
    return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# Cycle conjecture campaign: maximal matchings leaving vertex 0 exposed,
# one Hamilton path check per odd endpoint.
# ---------------------------------------------------------------------------


def _cycle_worker(args: tuple[int, tuple[int, ...]]) -> dict:
    n, uncovered = args
    odd = [w for w in range(1 << n) if w.bit_count() & 1]
    matchings = 0
    pairs = 0
    failures: list[Failure] = []
    for rep in iter_class_representatives(n, uncovered):
        epairs = _edge_pairs(n, rep.edge_ids)
        matchings += 1
        for v in odd:
            pairs += 1
            if solve_path_bits(n, epairs, 0, v) is None:
                failures.append(Failure("maximal", tuple(epairs), 0, v, "no_path"))
    return {
        "matchings": matchings,
        "pairs": pairs,
        "orbit_total": 0,
        "failures": [f.to_plain() for f in failures],
    }


def _edge_pairs(n: int, eids: Sequence[int]) -> list[tuple[int, int]]:
    order = edge_order(n)
    return [(order[e][0], order[e][0] | (1 << (order[e][1] - 1))) for e in eids]


def _run_class_tasks(
    worker,
    tasks: list,
    threads: int,
    checkpoint: Optional[str] = None,
) -> list[dict]:
    """Run one worker per uncovered class.  With ``checkpoint``, completed
    class results are appended as JSON lines keyed by the class's uncovered
    vertex tuple, and a rerun skips them."""
    done: dict[str, dict] = {}
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rec = json.loads(line)
                    done[rec["class"]] = rec["result"]

    def key(task) -> str:
        return ",".join(str(b) for b in task[1])

    pending = [t for t in tasks if key(t) not in done]
    if threads <= 1 or len(pending) <= 1:
        fresh = ((t, worker(t)) for t in pending)
    else:
        ctx = get_context("fork")
        pool = ctx.Pool(processes=threads)
        fresh = zip(pending, pool.imap(worker, pending, chunksize=1))
    sink = open(checkpoint, "a") if checkpoint else None
    try:
        for t, res in fresh:
            done[key(t)] = res
            if sink is not None:
                sink.write(json.dumps({"class": key(t), "result": res}) + "\n")
                sink.flush()
    finally:
        if sink is not None:
            sink.close()
        if threads > 1 and len(pending) > 1:
            pool.close()
            pool.join()
    return [done[key(t)] for t in tasks]


def verify_cycle_conjecture(
    d: int, threads: Optional[int] = None, checkpoint: Optional[str] = None
) -> CampaignReport:
    """Check, for every maximal matching of Q_d leaving vertex 0 uncovered,
    that a Hamilton path from 0 to each odd vertex extends it."""
    if d < 2:
        raise ValueError("cycle campaign needs dimension >= 2")
    start = time.perf_counter()
    # warm shared tables before forking workers
    canon.edge_maps(d)
    tasks = []
    for cls in uncovered_classes(d):
        bits = sorted(v.bits for v in cls.vertices)
        if not bits:
            continue  # perfect matchings leave nothing exposed
        t = bits[0]
        shifted = tuple(sorted(b ^ t for b in bits))  # translate a member onto 0
        tasks.append((d, shifted))
    report = CampaignReport(kind="cycle_conjecture", dim=d)
    for res in _run_class_tasks(_cycle_worker, tasks, _resolve_threads(threads), checkpoint):
        report.classes_done += 1
        report.matchings_checked += res["matchings"]
        report.pairs_checked += res["pairs"]
        report.failures.extend(Failure.from_plain(f) for f in res["failures"])
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# Path conjecture campaign: all maximal matchings, all endpoint pairs free
# of obstructions, two edge-distinct Hamilton paths each; then the same over
# the one-edge-away instances.
# ---------------------------------------------------------------------------


def _c_blocked(
    n: int,
    partner: dict[int, int],
    hl_descs: list[tuple[int, int]],
    ahl_descs: list[tuple[int, int, int]],
    u: int,
    v: int,
) -> bool:
    """Bits-level check whether any obstruction blocks the pair.

    hl_descs: (dir, side_parity) of full half-layers in the matching.
    ahl_descs: (dir, side_parity, missing_base) of almost half-layers.
    """
    if partner.get(u) == v:
        return True
    for dir, side in hl_descs:
        bit = 1 << (dir - 1)
        su = (u.bit_count() + (1 if u & bit else 0)) & 1
        sv = (v.bit_count() + (1 if v & bit else 0)) & 1
        if su == side and sv == side:
            return True
    diff = u ^ v
    if diff.bit_count() == 1:
        i = diff.bit_length()
        bit = 1 << (i - 1)
        for dir, _side, missing in ahl_descs:
            if dir != i:
                continue
            if {missing, missing | bit} != {u, v}:
                continue
            for j in range(1, n + 1):
                if j == i:
                    continue
                jb = 1 << (j - 1)
                if partner.get(u) == u ^ jb and partner.get(v) == v ^ jb:
                    return True
    return False


def _matching_structure(n: int, epairs: Sequence[tuple[int, int]]):
    """Partner map plus half-layer and almost-half-layer descriptors."""
    partner: dict[int, int] = {}
    by_dir: dict[int, list[int]] = {}
    for a, b in epairs:
        partner[a] = b
        partner[b] = a
        dir = (a ^ b).bit_length()
        by_dir.setdefault(dir, []).append(min(a, b))
    full = 1 << (n - 2)
    hl: list[tuple[int, int]] = []
    ahl: list[tuple[int, int, int]] = []
    for dir in range(1, n + 1):
        bases = by_dir.get(dir, [])
        even = [b for b in bases if not b.bit_count() & 1]
        odd = [b for b in bases if b.bit_count() & 1]
        for side, present in ((0, even), (1, odd)):
            if len(present) == full:
                hl.append((dir, side))
            elif len(present) == full - 1 and full > 1:
                bit = 1 << (dir - 1)
                cls = {
                    w
                    for w in range(1 << n)
                    if not w & bit and w.bit_count() & 1 == side
                }
                (missing,) = cls - set(present)
                ahl.append((dir, side, missing))
    return partner, hl, ahl


def _two_distinct_bits(n: int, epairs: list[tuple[int, int]], u: int, v: int) -> str:
    """Outcome of the two-distinct-paths check: 'two', 'only-one', 'none'."""
    first = solve_path_bits(n, epairs, u, v)
    if first is None:
        return "none"
    used = set(zip(first, first[1:])) | set(zip(first[1:], first))
    for base, dir in edge_order(n):
        other = base | (1 << (dir - 1))
        if (base, other) in used:
            continue
        if solve_path_bits(n, epairs + [(base, other)], u, v) is not None:
            return "two"
    return "only-one"


def _dedup_pairs(
    n: int, stab: Sequence[int], pairs: list[tuple[int, int]]
) -> list[tuple[int, int]]:
    """Keep one endpoint pair per orbit of the matching's stabilizer
    (equivalent to deduplication by canonical key with the pair marked)."""
    if len(stab) <= 1:
        return pairs
    vm = canon.vertex_maps(n)
    rows = [vm[g] for g in stab]
    kept = []
    for u, v in pairs:
        key = (u, v) if u < v else (v, u)
        best = key
        for row in rows:
            a, b = int(row[u]), int(row[v])
            cand = (a, b) if a < b else (b, a)
            if cand < best:
                best = cand
                break
        if best == key:
            kept.append((u, v))
    return kept


def _pair_sweep(
    n: int,
    epairs: list[tuple[int, int]],
    stab: Sequence[int],
    part: str,
    failures: list[Failure],
) -> tuple[int, int]:
    """Run the two-path check over all obstruction-free opposite-parity
    pairs, deduplicated under the matching's stabilizer.  Returns
    (checked, skipped)."""
    partner, hl, ahl = _matching_structure(n, epairs)
    evens = [w for w in range(1 << n) if not w.bit_count() & 1]
    odds = [w for w in range(1 << n) if w.bit_count() & 1]
    all_pairs = [(u, v) for u in evens for v in odds]
    all_pairs = _dedup_pairs(n, stab, all_pairs)
    checked = 0
    skipped = 0
    for u, v in all_pairs:
        if _c_blocked(n, partner, hl, ahl, u, v):
            skipped += 1
            continue
        checked += 1
        outcome = _two_distinct_bits(n, epairs, u, v)
        if outcome != "two":
            reason = "no_path" if outcome == "none" else "no_second_path"
            failures.append(Failure(part, tuple(epairs), u, v, reason))
    return checked, skipped


def _path_worker(args: tuple[int, tuple[int, ...]]) -> dict:
    n, uncovered = args
    matchings = 0
    orbit_total = 0
    pairs = 0
    skipped = 0
    failures: list[Failure] = []
    violating: list[tuple[int, ...]] = []
    for rep in iter_class_representatives(n, uncovered):
        matchings += 1
        orbit_total += rep.orbit
        epairs = _edge_pairs(n, rep.edge_ids)
        m = matching_from_edge_ids(n, rep.edge_ids)
        if has_c_structure(m):
            violating.append(rep.edge_ids)
        c, s = _pair_sweep(n, epairs, rep.stabilizer, "maximal", failures)
        pairs += c
        skipped += s
    return {
        "matchings": matchings,
        "orbit_total": orbit_total,
        "pairs": pairs,
        "skipped": skipped,
        "failures": [f.to_plain() for f in failures],
        "violating": [list(e) for e in violating],
    }


def verify_path_conjecture(
    d: int, threads: Optional[int] = None, checkpoint: Optional[str] = None
) -> CampaignReport:
    """Check that every obstruction-free endpoint pair of every maximal
    matching of Q_d admits two edge-distinct Hamilton paths, then run the
    same sweep over the one-edge-away instances."""
    if d < 2:
        raise ValueError("path campaign needs dimension >= 2")
    start = time.perf_counter()
    canon.edge_maps(d)
    tasks = []
    for cls in uncovered_classes(d):
        tasks.append((d, tuple(sorted(v.bits for v in cls.vertices))))
    report = CampaignReport(kind="path_conjecture", dim=d)
    violating: list[Matching] = []
    for res in _run_class_tasks(_path_worker, tasks, _resolve_threads(threads), checkpoint):
        report.classes_done += 1
        report.matchings_checked += res["matchings"]
        report.pairs_checked += res["pairs"]
        report.skipped_pairs += res["skipped"]
        report.non_isomorphic += res["matchings"]
        report.with_duplicates += res["orbit_total"]
        report.failures.extend(Failure.from_plain(f) for f in res["failures"])
        for eids in res["violating"]:
            violating.append(matching_from_edge_ids(d, tuple(eids)))

    if d >= 4:
        instances = one_edge_away_instances(d, violating_maximal=violating)
        report.one_edge_away_count = len(instances)
        for inst in instances:
            epairs = [e.endpoint_bits() for e in inst.matching.sorted_edges()]
            stab = canon.stabilizer_indices(inst.matching)
            c, s = _pair_sweep(
                d, epairs, [int(x) for x in stab], "one_edge_away", report.failures
            )
            report.pairs_checked += c
            report.skipped_pairs += s
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# Necessity spot-checks: constructed obstruction instances must admit no
# Hamilton path.
# ---------------------------------------------------------------------------


def verify_necessity(n: int, sample_budget: int = 60, seed: int = 0) -> CampaignReport:
    """Sample matchings with a live obstruction for some endpoint pair and
    confirm the solver finds no Hamilton path for any of them."""
    if not 4 <= n <= 5:
        raise ValueError("necessity checks run on dimensions 4 and 5")
    import random

    rng = random.Random(seed)
    start = time.perf_counter()
    report = CampaignReport(kind="necessity", dim=n)
    per_kind = max(1, sample_budget // 3)

    def check(m: Matching, u: int, v: int) -> None:
        report.pairs_checked += 1
        epairs = [e.endpoint_bits() for e in m.sorted_edges()]
        if solve_path_bits(n, epairs, u, v) is not None:
            report.failures.append(
                Failure("sample", tuple(epairs), u, v, "path_despite_obstruction")
            )

    size = 1 << n

    # half-layer covering both endpoints
    for _ in range(per_kind):
        dir = rng.randrange(1, n + 1)
        side = rng.randrange(2)
        m = _with_random_same_direction_edges(
            Matching(n, half_layer_edges(n, dir, side)), dir, rng
        )
        covered_by_layer = [
            w
            for w in range(size)
            if ((w.bit_count() + ((w >> (dir - 1)) & 1)) & 1) == side
        ]
        us = [w for w in covered_by_layer if not w.bit_count() & 1]
        vs = [w for w in covered_by_layer if w.bit_count() & 1]
        check(m, rng.choice(us), rng.choice(vs))
        report.matchings_checked += 1

    # almost half-layer missing exactly uv, with both u and v pinned sideways
    for _ in range(per_kind):
        dir = rng.randrange(1, n + 1)
        u = rng.randrange(size)
        v = u ^ (1 << (dir - 1))
        side = min(u, v).bit_count() & 1
        edges = set(half_layer_edges(n, dir, side))
        edges.discard(Edge(Vertex(n, min(u, v)), dir))
        j = rng.choice([j for j in range(1, n + 1) if j != dir])
        for a in (u, v):
            edges.add(Edge(Vertex(n, min(a, a ^ (1 << (j - 1)))), j))
        check(Matching(n, frozenset(edges)), u, v)
        report.matchings_checked += 1

    # endpoints matched to each other
    for _ in range(per_kind):
        m = _random_matching(n, rng)
        if not m.edges:
            continue
        e = rng.choice(m.sorted_edges())
        a, b = e.endpoint_bits()
        check(m, a, b)
        report.matchings_checked += 1

    report.wall_time = time.perf_counter() - start
    return report


def _with_random_same_direction_edges(m: Matching, dir: int, rng) -> Matching:
    """Extend a half-layer matching by a random subset of the remaining
    same-direction edges (the only extensions that keep it a matching)."""
    bit = 1 << (dir - 1)
    covered = m.covered_bits()
    edges = set(m.edges)
    for w in range(1 << m.dim):
        if w & bit or w in covered or (w | bit) in covered:
            continue
        if rng.random() < 0.5:
            edges.add(Edge(Vertex(m.dim, w), dir))
            covered.add(w)
            covered.add(w | bit)
    return Matching(m.dim, frozenset(edges))


def _random_matching(n: int, rng) -> Matching:
    size = 1 << n
    verts = list(range(size))
    rng.shuffle(verts)
    covered: set[int] = set()
    edges = []
    target = rng.randrange(1, size // 2)
    for a in verts:
        if a in covered:
            continue
        dirs = list(range(n))
        rng.shuffle(dirs)
        for d in dirs:
            b = a ^ (1 << d)
            if b not in covered:
                edges.append(Edge(Vertex(n, min(a, b)), (a ^ b).bit_length()))
                covered.add(a)
                covered.add(b)
                break
        if len(edges) >= target:
            break
    return Matching(n, frozenset(edges))


# ---------------------------------------------------------------------------
# The bipartite-closure counterexample: a matching of opposite-parity pairs
# that no Hamilton path over hypercube edges can extend, certified by a
# parity count instead of a search.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BqnWitness:
    """Layered matching of opposite-parity vertex pairs plus the counting
    certificate that rules out any extending Hamilton path."""

    dim: int
    weight_threshold: int
    mid_count: int  # binom(n-1, threshold)
    pairs: tuple[tuple[Vertex, Vertex], ...]
    neg_endpoints_min: int  # forced path endpoints of the minority parity
    pos_endpoints_max: int  # available endpoints of the majority parity
    imbalance: int  # guaranteed lower bound on the balance-sum magnitude

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "bqn_witness",
            "dim": self.dim,
            "weight_threshold": self.weight_threshold,
            "mid_count": self.mid_count,
            "pair_count": len(self.pairs),
            "neg_endpoints_min": self.neg_endpoints_min,
            "pos_endpoints_max": self.pos_endpoints_max,
            "imbalance": self.imbalance,
            "pairs": [[str(a), str(b)] for a, b in self.pairs],
        }


def binomial_slack_holds(m: int) -> bool:
    """The counting inequality the construction rests on: the middle
    binomial coefficient plus three fits under either tail sum."""
    mid = math.comb(m, m // 2)
    low = sum(math.comb(m, i) for i in range(m // 2))
    high = sum(math.comb(m, i) for i in range(m // 2 + 1, m + 1))
    return mid + 3 <= low <= high


def bqn_counterexample(n: int) -> BqnWitness:
    """Build the layered pairing whose endpoints exhaust one parity class
    of the low-and-middle weight region, so no Hamilton path of Q_n can
    contain it.  Needs n >= 9 for the binomial slack."""
    if n < 9:
        raise ValueError("the layered construction needs dimension >= 9")
    m = n - 1
    if not binomial_slack_holds(m):
        raise AssertionError(f"binomial slack fails at m={m}")
    h = m // 2
    k = math.comb(m, h)
    size = 1 << n

    def weight(v: int) -> int:
        return (v >> 1).bit_count()  # weight over coordinates 2..n

    g1 = [v for v in range(size) if not v & 1]
    mid0 = [v for v in g1 if weight(v) == h]
    low = [v for v in g1 if weight(v) < h]
    up = [v for v in g1 if weight(v) > h]
    low_all = sorted(low + [v | 1 for v in low])
    up_all = sorted(up + [v | 1 for v in up])

    xs = sorted(mid0)[:k]
    p = xs[0].bit_count() & 1
    ys = [v for v in low_all if v.bit_count() & 1 != p][: k + 3]
    zs = [v for v in up_all if v.bit_count() & 1 == p][: k + 3]
    if len(xs) != k or len(ys) != k + 3 or len(zs) != k + 3:
        raise AssertionError("insufficient vertices in a layer")

    pairs: list[tuple[int, int]] = []
    for i in range(k):
        pairs.append((xs[i], ys[i]))
    for i in range(k):
        pairs.append((xs[i] | 1, zs[i]))
    for i in range(3):
        pairs.append((ys[k + i], zs[k + i]))

    used = [w for pair in pairs for w in pair]
    if len(set(used)) != len(used):
        raise AssertionError("pairing is not vertex-disjoint")
    for a, b in pairs:
        if (a.bit_count() & 1) == (b.bit_count() & 1):
            raise AssertionError("pair endpoints share a parity")

    neg_min = 2 * k + 3  # pair endpoints of parity opposite to p inside Low+Mid
    pos_max = k + 1  # parity-p candidates: the k mid vertices plus one path end
    witness = BqnWitness(
        dim=n,
        weight_threshold=h,
        mid_count=k,
        pairs=tuple(
            (Vertex(n, a), Vertex(n, b)) for a, b in pairs
        ),
        neg_endpoints_min=neg_min,
        pos_endpoints_max=pos_max,
        imbalance=neg_min - 2 * pos_max,
    )
    return witness
