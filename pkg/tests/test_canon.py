import math
from itertools import permutations

import pytest

from hypermatch.canon import (
    canonical_key,
    edge_maps,
    group_size,
    orbit_size,
    stabilizer_indices,
    vertex_maps,
)
from hypermatch.cube import Matching, Vertex, edge_order


def brute_group(n):
    """All automorphisms as explicit vertex maps (independent of canon)."""
    out = []
    for perm in permutations(range(n)):
        for t in range(1 << n):
            table = []
            for v in range(1 << n):
                img = 0
                for i in range(n):
                    if v & (1 << i):
                        img |= 1 << perm[i]
                table.append(img ^ t)
            out.append(table)
    return out


def apply_to_matching(table, m):
    return Matching.from_pairs(
        m.dim, [(table[a], table[b]) for a, b in m.pairs()]
    )


def apply_to_marks(table, marks, n):
    return frozenset(Vertex(n, table[v.bits]) for v in marks)


def all_matchings(n):
    order = edge_order(n)
    edges = [(b, b | (1 << (d - 1))) for b, d in order]
    out = []

    def rec(i, chosen, covered):
        out.append(frozenset(chosen))
        for j in range(i, len(edges)):
            a, b = edges[j]
            if not covered & (1 << a) and not covered & (1 << b):
                chosen.append(j)
                rec(j + 1, chosen, covered | (1 << a) | (1 << b))
                chosen.pop()

    rec(0, [], 0)
    return out


def matching_from_ids(n, ids):
    order = edge_order(n)
    return Matching.from_pairs(
        n, [(order[e][0], order[e][0] | (1 << (order[e][1] - 1))) for e in ids]
    )


def test_group_tables_against_brute():
    for n in (1, 2, 3):
        brute = brute_group(n)
        vm = vertex_maps(n)
        assert len(vm) == group_size(n) == len(brute)
        got = sorted(tuple(int(x) for x in row) for row in vm)
        want = sorted(tuple(t) for t in brute)
        assert got == want


def test_single_edges_share_key():
    keys = set()
    for base, dir in edge_order(3):
        m = Matching.from_pairs(3, [(base, base | (1 << (dir - 1)))])
        keys.add(canonical_key(m).data)
    assert len(keys) == 1


def test_q2_perfect_matchings():
    # Aut(Q_2) has 2! * 4 = 8 elements; both perfect matchings are isomorphic
    pm1 = Matching.from_pairs(2, [(0b00, 0b01), (0b10, 0b11)])
    pm2 = Matching.from_pairs(2, [(0b00, 0b10), (0b01, 0b11)])
    single = Matching.from_pairs(2, [(0b00, 0b01)])
    assert canonical_key(pm1) == canonical_key(pm2)
    assert canonical_key(pm1) != canonical_key(single)
    assert group_size(2) == 8


def test_orbit_invariance(rng):
    brute = brute_group(4)
    for _ in range(25):
        ids = rng.sample(range(len(edge_order(4))), 3)
        try:
            m = matching_from_ids(4, ids)
        except ValueError:
            continue
        marks = frozenset(
            Vertex(4, rng.randrange(16)) for _ in range(rng.randrange(3))
        )
        key = canonical_key(m, marks)
        for _ in range(100):
            table = rng.choice(brute)
            gm = apply_to_matching(table, m)
            gmarks = apply_to_marks(table, marks, 4)
            assert canonical_key(gm, gmarks) == key


def test_orbit_size_examples():
    assert orbit_size(Matching(3, frozenset())) == 1
    single = Matching.from_pairs(2, [(0b00, 0b01)])
    assert orbit_size(single) == 4
    # cross-check by explicit orbit enumeration
    brute = brute_group(2)
    images = {frozenset(apply_to_matching(t, single).pairs()) for t in brute}
    assert len(images) == 4


def test_orbit_stabilizer_product():
    for n in (2, 3):
        for ids in ([], [0], [0, 5]):
            try:
                m = matching_from_ids(n, [i for i in ids if i < len(edge_order(n))])
            except ValueError:
                continue
            stab = len(stabilizer_indices(m))
            assert orbit_size(m) * stab == group_size(n)


@pytest.mark.parametrize("n", [2, 3])
def test_completeness_small(n):
    # canonical keys partition all matchings exactly like brute-force orbits
    brute = brute_group(n)
    ms = all_matchings(n)
    by_key = {}
    for ids in ms:
        m = matching_from_ids(n, ids)
        by_key.setdefault(canonical_key(m).data, set()).add(ids)
    seen = set()
    brute_orbits = 0
    for ids in ms:
        if ids in seen:
            continue
        brute_orbits += 1
        m = matching_from_ids(n, ids)
        orbit = set()
        from hypermatch.cube import edge_index_map

        idx = edge_index_map(n)
        for t in brute:
            gm = apply_to_matching(t, m)
            orbit.add(frozenset(idx[(e.base.bits, e.dir)] for e in gm.edges))
        seen |= orbit
        # the orbit must be exactly one key-class
        keys = {canonical_key(matching_from_ids(n, o)).data for o in orbit}
        assert len(keys) == 1
        assert by_key[keys.pop()] == orbit
    assert brute_orbits == len(by_key)


def test_maximal_matching_orbit_sum_q3():
    # summed orbit sizes over non-isomorphic maximal matchings equal the
    # independent brute-force count
    from conftest import brute_force_maximal_matchings

    brute = brute_force_maximal_matchings(3)
    reps = {}
    for ids in brute:
        m = matching_from_ids(3, sorted(ids))
        reps.setdefault(canonical_key(m).data, m)
    total = sum(orbit_size(m) for m in reps.values())
    assert total == len(brute) == 17


def test_key_hex_serialization():
    m = Matching.from_pairs(2, [(0, 1)])
    key = canonical_key(m)
    assert key.hex == key.data.hex()
    assert str(key) == key.hex
    assert all(c in "0123456789abcdef" for c in key.hex)


def test_group_dim_guard():
    with pytest.raises(ValueError):
        vertex_maps(7)
    assert math.factorial(5) * 32 == group_size(5) == len(edge_maps(5))
