import random

import pytest

from hypermatch.cube import Matching, edge_order


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running verification campaigns")
    config.addinivalue_line("markers", "ci_full: optional full-tier campaigns")


def random_matching(n, rng, max_edges=None, dirs=None):
    """Random matching built by greedy pairing; optionally direction-limited."""
    allowed = list(range(n)) if dirs is None else [d - 1 for d in dirs]
    covered = set()
    pairs = []
    verts = list(range(1 << n))
    rng.shuffle(verts)
    limit = max_edges if max_edges is not None else rng.randrange(0, (1 << n) // 2 + 1)
    for a in verts:
        if len(pairs) >= limit:
            break
        if a in covered:
            continue
        ds = allowed[:]
        rng.shuffle(ds)
        for t in ds:
            b = a ^ (1 << t)
            if b not in covered:
                pairs.append((a, b))
                covered.add(a)
                covered.add(b)
                break
    return Matching.from_pairs(n, pairs)


def random_maximal_pairs(n, rng):
    covered = set()
    pairs = []
    verts = list(range(1 << n))
    rng.shuffle(verts)
    for a in verts:
        if a in covered:
            continue
        ds = list(range(n))
        rng.shuffle(ds)
        for t in ds:
            b = a ^ (1 << t)
            if b not in covered:
                pairs.append((a, b))
                covered.add(a)
                covered.add(b)
                break
    return pairs


def brute_force_maximal_matchings(n):
    """Every maximal matching of Q_n as a frozenset of edge ids (a matching
    is maximal iff its uncovered set is independent)."""
    order = edge_order(n)
    edges = [(b, b | (1 << (d - 1))) for b, d in order]
    out = []

    def rec(i, chosen, covered):
        if i == len(edges):
            unc = [v for v in range(1 << n) if not covered & (1 << v)]
            for ai, a in enumerate(unc):
                for b in unc[ai + 1:]:
                    if (a ^ b).bit_count() == 1:
                        return
            out.append(frozenset(chosen))
            return
        a, b = edges[i]
        rec(i + 1, chosen, covered)
        if not covered & (1 << a) and not covered & (1 << b):
            chosen.append(i)
            rec(i + 1, chosen, covered | (1 << a) | (1 << b))
            chosen.pop()

    rec(0, [], 0)
    return out


def naive_path_exists(n, pairs, u, v):
    """Unpruned ordering enumeration; shares nothing with the solver."""
    size = 1 << n
    forced = {frozenset(p) for p in pairs}
    hit = []

    def rec(cur, seen, path):
        if hit:
            return
        if len(path) == size:
            if cur == v:
                eset = {frozenset((path[i], path[i + 1])) for i in range(size - 1)}
                if forced <= eset:
                    hit.append(1)
            return
        for i in range(n):
            w = cur ^ (1 << i)
            if w not in seen:
                if w == v and len(path) != size - 1:
                    continue
                seen.add(w)
                path.append(w)
                rec(w, seen, path)
                seen.discard(w)
                path.pop()

    rec(u, {u}, [u])
    return bool(hit)


@pytest.fixture
def rng():
    return random.Random(20240817)
