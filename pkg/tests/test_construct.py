import pytest

from conftest import random_matching, random_maximal_pairs

from hypermatch.certificates import PathCertificate, validate_cycle, validate_path
from hypermatch.construct import (
    CubeSequence,
    HalfLayerSequence,
    attach_cube,
    disjoint_paths,
    extend_to_cycle,
    extend_to_path,
    gray_cycle,
    gray_path,
    gray_path_avoiding,
    sequence_path,
)
from hypermatch.cube import (
    EVEN,
    Edge,
    Matching,
    Vertex,
    half_layer_edges,
    unique_extension,
)
from hypermatch.errors import UnsupportedFallbackError
from hypermatch.solver import (
    solve_cycle_bits,
    solve_path_bits,
    two_distinct_paths,
)


def bits_of(cert):
    return [v.bits for v in cert.vertices]


def test_gray_cycle_examples():
    assert bits_of(gray_cycle(2)) == [0b00, 0b01, 0b11, 0b10]
    assert bits_of(gray_cycle(3)) == [0, 1, 3, 2, 6, 7, 5, 4]
    for m in range(2, 11):
        validate_cycle(gray_cycle(m))
    with pytest.raises(ValueError):
        gray_cycle(1)


def test_gray_path_examples():
    assert bits_of(gray_path(1, Vertex(1, 0), Vertex(1, 1))) == [0, 1]
    p = gray_path(3, Vertex(3, 0b000), Vertex(3, 0b111))
    validate_path(p, u=Vertex(3, 0), v=Vertex(3, 7))
    # Q_2 has exactly two Hamilton paths from 00; the 00->10 one is unique
    assert bits_of(gray_path(2, Vertex(2, 0b00), Vertex(2, 0b10))) == [
        0b00,
        0b01,
        0b11,
        0b10,
    ]
    with pytest.raises(ValueError):
        gray_path(2, Vertex(2, 0), Vertex(2, 3))


def test_gray_path_all_pairs(rng):
    for m in range(1, 8):
        for _ in range(15):
            a = rng.randrange(1 << m)
            b = rng.choice(
                [x for x in range(1 << m) if (x ^ a).bit_count() % 2 == 1]
            )
            p = gray_path(m, Vertex(m, a), Vertex(m, b))
            validate_path(p, u=Vertex(m, a), v=Vertex(m, b))


def test_gray_path_avoiding_examples():
    assert bits_of(
        gray_path_avoiding(2, Vertex(2, 0b00), Vertex(2, 0b11), Vertex(2, 0b01))
    ) == [0b00, 0b10, 0b11]
    p = gray_path_avoiding(3, Vertex(3, 0b000), Vertex(3, 0b011), Vertex(3, 0b001))
    validate_path(p, u=Vertex(3, 0), v=Vertex(3, 3), removed=[Vertex(3, 1)])
    assert 0b001 not in bits_of(p)
    with pytest.raises(ValueError):
        gray_path_avoiding(2, Vertex(2, 0), Vertex(2, 1), Vertex(2, 2))


def test_gray_path_avoiding_random(rng):
    for m in range(2, 8):
        for _ in range(15):
            a = rng.randrange(1 << m)
            b = rng.choice(
                [x for x in range(1 << m) if x != a and (x ^ a).bit_count() % 2 == 0]
            )
            z = rng.choice(
                [x for x in range(1 << m) if (x ^ a).bit_count() % 2 == 1]
            )
            p = gray_path_avoiding(m, Vertex(m, a), Vertex(m, b), Vertex(m, z))
            validate_path(p, u=Vertex(m, a), v=Vertex(m, b), removed=[Vertex(m, z)])


def test_extend_to_cycle_q3_example():
    m = Matching.from_pairs(3, [(0b000, 0b001)])
    cert = extend_to_cycle(3, 2, m)
    validate_cycle(cert, forced=m)


def test_extend_to_cycle_cross_check_q6(rng):
    for _ in range(8):
        pairs = random_maximal_pairs(5, rng)
        m = Matching.from_pairs(6, pairs)  # maximal matching of one subcube
        cert = extend_to_cycle(6, 5, m)
        validate_cycle(cert, forced=m)
        assert solve_cycle_bits(6, m.pairs()) is not None


def test_extend_to_cycle_q8_structural(rng):
    m = random_matching(8, rng, max_edges=40, dirs=[1, 2, 3, 4, 5])
    cert = extend_to_cycle(8, 5, m)
    validate_cycle(cert, forced=m)
    # the trail visits each of the 2^(8-5) subcubes exactly once
    subcubes = []
    for v in cert.vertices:
        c = v.bits >> 5
        if not subcubes or subcubes[-1] != c:
            subcubes.append(c)
    assert len([c for i, c in enumerate(subcubes) if c not in subcubes[:i]]) == 8


def test_extend_to_cycle_relabels_arbitrary_directions(rng):
    # spans directions {2, 4, 6} of Q_6; must be normalized and mapped back
    m = random_matching(6, rng, max_edges=12, dirs=[2, 4, 6])
    cert = extend_to_cycle(6, 5, m)
    validate_cycle(cert, forced=m)


def test_extend_to_cycle_perfect_fallback(rng):
    layer = Matching(
        6, half_layer_edges(6, 1, 0) | half_layer_edges(6, 1, 1)
    )  # the full direction-1 layer is a perfect matching
    cert = extend_to_cycle(6, 5, layer)
    validate_cycle(cert, forced=layer)
    with pytest.raises(UnsupportedFallbackError):
        extend_to_cycle(8, 5, Matching(
            8, half_layer_edges(8, 1, 0) | half_layer_edges(8, 1, 1)
        ), full_cap=7)


def test_extend_to_cycle_errors():
    with pytest.raises(ValueError):
        extend_to_cycle(3, 1, Matching(3, frozenset()))
    with pytest.raises(UnsupportedFallbackError):
        extend_to_cycle(8, 6, Matching(8, frozenset()))
    with pytest.raises(ValueError):
        # spans 3 directions but d=2
        extend_to_cycle(
            3, 2, Matching.from_pairs(3, [(0, 1), (2, 6), (5, 7)])
        )


def test_extend_to_cycle_agreement_with_solver(rng):
    # feasibility agreement at n = d+1 and d+2 (certificates may differ)
    for n in (6, 7):
        for _ in range(6):
            m = random_matching(n, rng, max_edges=12, dirs=[1, 2, 3, 4, 5])
            cert = extend_to_cycle(n, 5, m)
            validate_cycle(cert, forced=m)


def test_sequence_path_empty_cubes():
    seq = CubeSequence(
        5,
        (Vertex(1, 0), Vertex(1, 1)),
        (Matching(5, frozenset()), Matching(5, frozenset())),
    )
    u, v = Vertex(6, 0), Vertex(6, 0b100011)
    res = sequence_path(seq, u, v)
    assert res.witness is None
    validate_path(res.path, u=u, v=v)
    assert res.junction_choices and min(res.junction_choices) >= 4  # 2^(5-3)


def test_sequence_path_blocked_returns_witness():
    h1 = Matching(5, half_layer_edges(5, 1, 0))
    h2 = Matching(5, half_layer_edges(5, 1, 1))
    seq = CubeSequence(5, (Vertex(1, 0), Vertex(1, 1)), (h1, h2))
    u, v = Vertex(6, 0), Vertex(6, 0b100011)
    res = sequence_path(seq, u, v)
    assert res.path is None
    assert res.witness == HalfLayerSequence(dir=1, global_parity=0)


@pytest.mark.ci_full
def test_sequence_path_blocked_confirmed_by_direct_search():
    # the 64-vertex realization of the blocked two-cube sequence really has
    # no Hamilton path (expensive unsatisfiability proof)
    h1 = Matching(5, half_layer_edges(5, 1, 0))
    pairs = h1.pairs() + [
        ((1 << 5) | a, (1 << 5) | b)
        for a, b in Matching(5, half_layer_edges(5, 1, 1)).pairs()
    ]
    assert solve_path_bits(6, pairs, 0, 0b100011) is None


def test_sequence_path_three_cubes(rng):
    mats = tuple(
        Matching.from_pairs(5, random_maximal_pairs(5, rng)) for _ in range(3)
    )
    seq = CubeSequence(5, (Vertex(2, 0), Vertex(2, 1), Vertex(2, 3)), mats)
    u = Vertex(7, 0)
    v = Vertex(7, (3 << 5) | 1)
    res = sequence_path(seq, u, v)
    assert res.path is not None
    forced = Matching.from_pairs(
        7,
        [(a, b) for a, b in mats[0].pairs()]
        + [((1 << 5) | a, (1 << 5) | b) for a, b in mats[1].pairs()]
        + [((3 << 5) | a, (3 << 5) | b) for a, b in mats[2].pairs()],
    )
    off_trail = [Vertex(7, (2 << 5) | x) for x in range(32)]
    validate_path(res.path, forced=forced, u=u, v=v, removed=off_trail)


def test_sequence_path_validation():
    seq = CubeSequence(
        5,
        (Vertex(1, 0), Vertex(1, 1)),
        (Matching(5, frozenset()), Matching(5, frozenset())),
    )
    with pytest.raises(ValueError):
        sequence_path(seq, Vertex(6, 0), Vertex(6, 0b100001))  # same parity
    with pytest.raises(ValueError):
        CubeSequence(5, (Vertex(2, 0), Vertex(2, 3)), (Matching(5, frozenset()),) * 2)


def test_attach_cube_empty_matching():
    r = two_distinct_paths(5, Matching(5, frozenset()), Vertex(5, 0), Vertex(5, 1))
    att = attach_cube(
        r.first, r.second, Matching(5, frozenset()), Matching(5, frozenset())
    )
    validate_path(att, u=Vertex(6, 0))
    assert att.vertices[-1].bits in (r.first.vertices[-1].bits, r.second.vertices[-1].bits)
    assert len(att.vertices) == 64


def test_attach_cube_random(rng):
    for _ in range(6):
        m1 = Matching.from_pairs(5, random_maximal_pairs(5, rng))
        m2 = Matching.from_pairs(5, random_maximal_pairs(5, rng))
        us = [w for w in range(32) if w.bit_count() % 2 == 0]
        u = Vertex(5, rng.choice(us))
        vs = [w for w in range(32) if w.bit_count() % 2 == 1]
        r = None
        for vb in vs:
            r = two_distinct_paths(5, m1, u, Vertex(5, vb))
            if r.outcome == "two":
                break
        assert r is not None and r.outcome == "two"
        att = attach_cube(r.first, r.second, m1, m2)
        forced = Matching.from_pairs(
            6, m1.pairs() + [((1 << 5) | a, (1 << 5) | b) for a, b in m2.pairs()]
        )
        validate_path(att, forced=forced, u=Vertex(6, u.bits))


def test_attach_cube_errors():
    r = two_distinct_paths(5, Matching(5, frozenset()), Vertex(5, 0), Vertex(5, 1))
    with pytest.raises(ValueError):
        attach_cube(r.first, r.first, Matching(5, frozenset()), Matching(5, frozenset()))
    shifted = PathCertificate.from_bits(5, bits_of(r.second)[::-1])
    with pytest.raises(ValueError):
        attach_cube(r.first, shifted, Matching(5, frozenset()), Matching(5, frozenset()))


def test_disjoint_paths_c1(rng):
    m = Matching(5, half_layer_edges(5, 1, EVEN))
    u, v = Vertex(5, 0), Vertex(5, 0b00111)
    zu_path, zv_path = disjoint_paths(5, m, u, v)
    assert zu_path[0] == u and zv_path[0] == v
    allbits = {x.bits for x in zu_path} | {x.bits for x in zv_path}
    assert len(allbits) == 32 and len(zu_path) + len(zv_path) == 32
    zu, zv = zu_path[-1], zv_path[-1]
    assert (zu.bits ^ zv.bits).bit_count() != 1
    assert (zu.bits.bit_count() + zv.bits.bit_count()) % 2 == 1
    # both fragments together extend the direction-wise completion
    used = set()
    for p in (zu_path, zv_path):
        for a, b in zip(p, p[1:]):
            used.add(frozenset((a.bits, b.bits)))
    for e in unique_extension(m).edges:
        assert frozenset(e.endpoint_bits()) in used


def test_disjoint_paths_c2():
    u, v = Vertex(5, 0b00000), Vertex(5, 0b00001)
    edges = set(half_layer_edges(5, 1, EVEN))
    edges.discard(Edge(Vertex(5, 0), 1))
    edges.add(Edge(Vertex(5, 0b00000), 2))
    edges.add(Edge(Vertex(5, 0b00001), 2))
    m = Matching(5, frozenset(edges))
    zu_path, zv_path = disjoint_paths(5, m, u, v)
    assert [x.bits for x in zu_path] == [0b00000, 0b00010]  # u, u^j with j=2
    assert len(zu_path) + len(zv_path) == 32
    zu, zv = zu_path[-1], zv_path[-1]
    assert (zu.bits ^ zv.bits).bit_count() != 1


def test_disjoint_paths_requires_obstruction():
    with pytest.raises(ValueError):
        disjoint_paths(5, Matching(5, frozenset()), Vertex(5, 0), Vertex(5, 1))
    m = Matching.from_pairs(5, [(0, 1)])
    with pytest.raises(ValueError):
        disjoint_paths(5, m, Vertex(5, 0), Vertex(5, 1))


def test_extend_to_path_empty_q6(rng):
    for _ in range(5):
        us = [w for w in range(64) if w.bit_count() % 2 == 0]
        vs = [w for w in range(64) if w.bit_count() % 2 == 1]
        u, v = Vertex(6, rng.choice(us)), Vertex(6, rng.choice(vs))
        cert = extend_to_path(6, 5, Matching(6, frozenset()), u, v)
        validate_path(cert, u=u, v=v)
        assert solve_path_bits(6, [], u.bits, v.bits) is not None


def test_extend_to_path_c1_lifted_none():
    # a global half-layer of Q_6 covering both endpoints blocks the pair
    m = Matching(6, half_layer_edges(6, 1, EVEN))
    u = Vertex(6, 0)
    v = Vertex(6, 0b000111)
    assert extend_to_path(6, 5, m, u, v) is None


def test_extend_to_path_c3_none():
    m = Matching.from_pairs(6, [(0, 1)])
    assert extend_to_path(6, 5, m, Vertex(6, 0), Vertex(6, 1)) is None


def test_extend_to_path_q7_subcube_maximal(rng):
    for _ in range(4):
        pairs = random_maximal_pairs(5, rng)
        m = Matching.from_pairs(7, pairs)
        us = [w for w in range(128) if w.bit_count() % 2 == 0]
        vs = [w for w in range(128) if w.bit_count() % 2 == 1]
        u, v = Vertex(7, rng.choice(us)), Vertex(7, rng.choice(vs))
        cert = extend_to_path(7, 5, m, u, v)
        if cert is None:
            continue
        validate_path(cert, forced=m, u=u, v=v)


def test_extend_to_path_same_cube_cases(rng):
    # endpoints inside the same subcube, n = d+1 and n > d+1
    for n in (6, 7):
        for _ in range(6):
            m = random_matching(n, rng, max_edges=10, dirs=[1, 2, 3, 4, 5])
            us = [w for w in range(1 << 5) if w.bit_count() % 2 == 0]
            vs = [w for w in range(1 << 5) if w.bit_count() % 2 == 1]
            u, v = Vertex(n, rng.choice(us)), Vertex(n, rng.choice(vs))
            cert = extend_to_path(n, 5, m, u, v)
            if cert is None:
                continue
            validate_path(cert, forced=m, u=u, v=v)


def test_extend_to_path_case12_same_quotient_parity(rng):
    # endpoints in different subcubes with equal quotient parity at n=7
    for _ in range(4):
        m = random_matching(7, rng, max_edges=20, dirs=[1, 2, 3, 4, 5])
        u = Vertex(7, 0)
        v = Vertex(7, (0b11 << 5) | 1)  # quotient parities match, one flip inside
        cert = extend_to_path(7, 5, m, u, v)
        if cert is None:
            continue
        validate_path(cert, forced=m, u=u, v=v)


def test_extend_to_path_determinism(rng):
    m = random_matching(6, rng, max_edges=10, dirs=[1, 2, 3, 4, 5])
    u, v = Vertex(6, 0), Vertex(6, 0b111110)
    a = extend_to_path(6, 5, m, u, v)
    b = extend_to_path(6, 5, m, u, v)
    assert (a is None) == (b is None)
    if a is not None:
        assert bits_of(a) == bits_of(b)


def test_extend_to_path_validation():
    with pytest.raises(ValueError):
        extend_to_path(6, 4, Matching(6, frozenset()), Vertex(6, 0), Vertex(6, 1))
    with pytest.raises(ValueError):
        extend_to_path(6, 5, Matching(6, frozenset()), Vertex(6, 0), Vertex(6, 3))


def test_solver_cap_env_override(monkeypatch):
    m = Matching(8, frozenset())
    with pytest.raises(UnsupportedFallbackError):
        extend_to_cycle(8, 6, m)
    monkeypatch.setenv("HYPERMATCH_SOLVER_CAP", "6")
    cert = extend_to_cycle(8, 6, m)
    validate_cycle(cert)
    monkeypatch.setenv("HYPERMATCH_NCAP", "5")
    perfect = Matching(6, half_layer_edges(6, 1, 0) | half_layer_edges(6, 1, 1))
    with pytest.raises(UnsupportedFallbackError):
        extend_to_cycle(6, 5, perfect)


@pytest.mark.slow
def test_extend_to_cycle_feasibility_agreement_100(rng):
    # both the construction and a direct search find a cycle, 100 instances
    # split over n = d+1 and n = d+2
    for n, count in ((6, 50), (7, 50)):
        for _ in range(count):
            m = random_matching(n, rng, max_edges=14, dirs=[1, 2, 3, 4, 5])
            cert = extend_to_cycle(n, 5, m)
            validate_cycle(cert, forced=m)
            assert solve_cycle_bits(n, m.pairs()) is not None


def test_sequence_path_junction_floor_three_cubes(rng):
    mats = tuple(
        Matching.from_pairs(5, random_maximal_pairs(5, rng)) for _ in range(3)
    )
    seq = CubeSequence(5, (Vertex(2, 0), Vertex(2, 1), Vertex(2, 3)), mats)
    res = sequence_path(seq, Vertex(7, 0), Vertex(7, (3 << 5) | 1))
    if res.path is not None and res.junction_choices:
        assert min(res.junction_choices) >= 1
