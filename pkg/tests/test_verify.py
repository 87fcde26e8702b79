import json
import math

import pytest

from hypermatch.canon import canonical_key
from hypermatch.construct import gray_path, gray_path_avoiding
from hypermatch.cube import Matching, Vertex
from hypermatch.solver import solve_path_bits
from hypermatch.verify import (
    binomial_slack_holds,
    bqn_counterexample,
    verify_cycle_conjecture,
    verify_necessity,
    verify_path_conjecture,
)


def chi(bits):
    return 1 if bits.bit_count() % 2 == 0 else -1


def test_cycle_conjecture_small():
    for d in (2, 3):
        r = verify_cycle_conjecture(d, threads=1)
        assert r.confirmed
    r = verify_cycle_conjecture(4, threads=1)
    assert r.confirmed
    assert r.matchings_checked == 9  # non-perfect classes of Q_4


def test_path_conjecture_d4_finds_obstructions():
    r = verify_path_conjecture(4, threads=1)
    assert not r.confirmed
    assert r.non_isomorphic == 17 and r.with_duplicates == 2000
    assert r.one_edge_away_count > 0
    sizes = {len(f.matching_pairs) for f in r.failures if f.part == "maximal"}
    assert 7 in sizes  # a maximal but not perfect obstruction
    assert any(
        f.reason == "no_path" and len(f.matching_pairs) == 7
        for f in r.failures
        if f.part == "maximal"
    )


def test_path_conjecture_d4_golden_obstruction_classes():
    # the failing matchings form a stable set of isomorphism classes
    r = verify_path_conjecture(4, threads=1)
    keys = sorted(
        {
            canonical_key(Matching.from_pairs(4, list(f.matching_pairs))).hex
            for f in r.failures
            if f.part == "maximal"
        }
    )
    r2 = verify_path_conjecture(4, threads=1)
    keys2 = sorted(
        {
            canonical_key(Matching.from_pairs(4, list(f.matching_pairs))).hex
            for f in r2.failures
            if f.part == "maximal"
        }
    )
    assert keys == keys2
    # five perfect-matching classes plus three maximal non-perfect ones
    assert len(keys) == 8


def test_campaign_determinism_and_json():
    a = verify_cycle_conjecture(3, threads=1).to_json()
    b = verify_cycle_conjecture(3, threads=1).to_json()
    assert a == b
    data = json.loads(a)
    assert data["schema"] == 1 and data["kind"] == "cycle_conjecture"
    assert "wall_time_s" not in data
    timed = json.loads(verify_cycle_conjecture(3, threads=1).to_json(include_timing=True))
    assert "wall_time_s" in timed


def test_checkpoint_resume(tmp_path):
    ck = tmp_path / "resume.jsonl"
    r1 = verify_cycle_conjecture(4, threads=1, checkpoint=str(ck))
    lines = [l for l in ck.read_text().splitlines() if l.strip()]
    assert len(lines) == r1.classes_done
    # drop half the checkpoint and resume
    ck.write_text("\n".join(lines[: len(lines) // 2]) + "\n")
    r2 = verify_cycle_conjecture(4, threads=1, checkpoint=str(ck))
    assert r1.to_json() == r2.to_json()


def test_parallel_matches_serial():
    a = verify_cycle_conjecture(4, threads=1)
    b = verify_cycle_conjecture(4, threads=2)
    assert a.to_json() == b.to_json()


def test_necessity_campaigns():
    for n in (4, 5):
        r = verify_necessity(n, sample_budget=18, seed=5)
        assert r.confirmed
        assert r.pairs_checked >= 18


def test_necessity_determinism():
    a = verify_necessity(4, sample_budget=12, seed=9).to_json()
    b = verify_necessity(4, sample_budget=12, seed=9).to_json()
    assert a == b


def test_bqn_n9():
    w = bqn_counterexample(9)
    assert w.weight_threshold == 4
    assert w.mid_count == math.comb(8, 4) == 70
    assert len(w.pairs) == 2 * 70 + 3 == 143
    used = [x.bits for p in w.pairs for x in p]
    assert len(set(used)) == len(used)
    for a, b in w.pairs:
        assert (a.bits.bit_count() + b.bits.bit_count()) % 2 == 1
    assert w.imbalance > 0


def test_bqn_range():
    for n in range(9, 15):
        w = bqn_counterexample(n)
        assert w.imbalance > 0
        assert len(w.pairs) == 2 * w.mid_count + 3
    with pytest.raises(ValueError):
        bqn_counterexample(8)


def test_binomial_slack():
    # the inequality the construction rests on, checked directly
    assert math.comb(8, 4) + 3 == 73 <= sum(math.comb(8, i) for i in range(4)) == 93
    for m in range(8, 17):
        assert binomial_slack_holds(m)
    assert not binomial_slack_holds(6)


def test_balance_identity_on_split_covers(rng):
    # splitting a Hamilton path of Q_m into vertex-disjoint segments keeps
    # half the endpoint-parity sum equal to the covered region's parity sum
    for m in (2, 3, 4):
        verts = list(range(1 << m))
        for _ in range(12):
            us = [w for w in verts if w.bit_count() % 2 == 0]
            vs = [w for w in verts if w.bit_count() % 2 == 1]
            u, v = rng.choice(us), rng.choice(vs)
            bits = solve_path_bits(m, [], u, v)
            assert bits is not None
            cuts = sorted(
                rng.sample(range(1, len(bits)), rng.randrange(0, min(4, len(bits) - 1)))
            )
            segments = []
            prev = 0
            for c in cuts + [len(bits)]:
                segments.append(bits[prev:c])
                prev = c
            lhs = sum(chi(s[0]) + chi(s[-1]) for s in segments) / 2
            rhs = sum(chi(w) for w in verts)
            assert lhs == rhs == 0


def test_balance_identity_on_punctured_cube(rng):
    # same identity on Q_m minus one vertex, where the parity sum is -chi(z)
    for m in (3, 4):
        for _ in range(8):
            a = rng.randrange(1 << m)
            b = rng.choice(
                [x for x in range(1 << m) if x != a and (x ^ a).bit_count() % 2 == 0]
            )
            z = rng.choice(
                [x for x in range(1 << m) if (x ^ a).bit_count() % 2 == 1]
            )
            p = gray_path_avoiding(m, Vertex(m, a), Vertex(m, b), Vertex(m, z))
            bits = [x.bits for x in p.vertices]
            cuts = sorted(
                rng.sample(range(1, len(bits)), rng.randrange(0, 3))
            )
            segments = []
            prev = 0
            for c in cuts + [len(bits)]:
                segments.append(bits[prev:c])
                prev = c
            lhs = sum(chi(s[0]) + chi(s[-1]) for s in segments) / 2
            assert lhs == -chi(z)
