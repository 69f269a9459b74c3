import itertools

import numpy as np
import pytest

from superhost import cube_new, ipmap, kernels, record_stream, seeded_config
from superhost.config import DEFAULT_CONFIG
from superhost.estimator import estimate_cs_load, hot_threshold
from superhost.recovery import (BufferPool, HotColumnSet, TupleSpaceOverflow, candidate_tuples,
                                check_tuple, find_hot_columns, recover_all, recover_cs)

THETA = 1024


def host_in_cs(rng, cfg, cs):
    lp = int(rng.integers(0, 1 << cfg.lp_bits))
    return ipmap.unmangle(ipmap.join_ip(lp, cs, cfg), cfg)


def host_flows(rng, host, n):
    oip = rng.choice(1 << 32, size=n, replace=False).astype(np.uint32)
    return np.full(n, host, dtype=np.uint32), oip


def build(cfg, rng, hosts, background=0):
    iips, oips = [], []
    for h, n in hosts:
        i, o = host_flows(rng, h, n)
        iips.append(i)
        oips.append(o)
    if background:
        iips.append(rng.integers(0, 1 << 32, background, dtype=np.uint64).astype(np.uint32))
        oips.append(rng.integers(0, 1 << 32, background, dtype=np.uint64).astype(np.uint32))
    cube = cube_new(cfg)
    record_stream(cube, (np.concatenate(iips), np.concatenate(oips)))
    return cube


def test_empty_cs():
    cube = cube_new(DEFAULT_CONFIG)
    hot = find_hot_columns(cube, 3, hot_threshold(THETA, 0, 4096))
    assert hot.per_array == [[], [], []]
    assert recover_cs(cube, 3, THETA) == []
    assert recover_all(cube, THETA).records == []


def test_hot_columns_match_bit_loop(small_cfg, rng):
    cube = cube_new(small_cfg)
    cube.buf[:] = rng.integers(0, 256, cube.nbytes, dtype=np.uint8) & rng.integers(0, 256, cube.nbytes, dtype=np.uint8)
    tbn = 5.5
    hot = find_hot_columns(cube, 2, tbn)
    bits = np.unpackbits(cube.buf, bitorder="little")
    for i in range(small_cfg.num_ra):
        expect = []
        for j in range(small_cfg.col_counts[i]):
            off = small_cfg.column_bit_offset(2, i, j)
            if small_cfg.g - bits[off:off + small_cfg.g].sum() <= tbn:
                expect.append(j)
        assert hot.per_array[i] == expect


def test_planted_4theta_columns_are_hot():
    cfg = DEFAULT_CONFIG
    hits = 0
    rng = np.random.default_rng(21)
    tbn = hot_threshold(THETA, 0, cfg.g)
    for _ in range(100):
        host = host_in_cs(rng, cfg, 0)
        i, o = host_flows(rng, host, 4 * THETA)
        cube = cube_new(cfg)
        record_stream(cube, (i, o))
        lp = ipmap.split_ip(ipmap.mangle(host, cfg), cfg).lp
        cols = ipmap.tuple_of(lp, cfg)
        hits += all(cube.zero_count_column(0, a, c) <= tbn for a, c in enumerate(cols))
    assert hits >= 99


def test_check_tuple_planted_and_fake():
    cfg = DEFAULT_CONFIG
    rng = np.random.default_rng(3)
    host = host_in_cs(rng, cfg, 5)
    small = host_in_cs(rng, cfg, 5)
    cube = build(cfg, rng, [(host, 4 * THETA), (small, 40)])
    tbn = hot_threshold(THETA, 0, cfg.g)
    lp = ipmap.split_ip(ipmap.mangle(host, cfg), cfg).lp
    rec = check_tuple(cube, 5, ipmap.tuple_of(lp, cfg), tbn)
    assert rec is not None and rec.ip == host and rec.cs_idx == 5
    assert rec.estimate == pytest.approx(4 * THETA, rel=0.1)

    small_lp = ipmap.split_ip(ipmap.mangle(small, cfg), cfg).lp
    assert check_tuple(cube, 5, ipmap.tuple_of(small_lp, cfg), tbn) is None


def test_check_tuple_cp_mismatch_skips_union(monkeypatch):
    cfg = DEFAULT_CONFIG
    cols = list(ipmap.tuple_of(12345, cfg))
    cols[0] ^= 1  # flip a checking-part bit

    def forbidden(*a, **k):
        raise AssertionError("union column computed for an inconsistent tuple")

    monkeypatch.setattr(kernels.BACKEND, "and_zero_count", forbidden)
    assert check_tuple(cube_new(cfg), 0, cols, 4000.0) is None


def test_candidate_tuples_equal_product_filter(rng):
    cfg = DEFAULT_CONFIG
    lps = rng.integers(0, 1 << 28, 6).tolist()
    per = [sorted({ipmap.ra_column_index(lp, i, cfg) for lp in lps}
                  | set(rng.integers(0, 4096, 6).tolist())) for i in range(3)]
    hot = HotColumnSet(per)
    brute = [t for t in itertools.product(*per) if ipmap.lp_from_tuple(t, cfg) is not None]
    assert sorted(candidate_tuples(hot, cfg)) == sorted(brute)
    assert set(ipmap.tuple_of(lp, cfg) for lp in lps) <= set(brute)


def test_recover_cs_five_planted():
    perfect = 0
    runs = 50
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        cfg = seeded_config(seed)
        cs = seed % cfg.num_cs
        hosts = [(host_in_cs(rng, cfg, cs), int(n)) for n in rng.integers(2048, 16385, 5)]
        cube = build(cfg, rng, hosts, background=200_000)
        got = {rec.ip for rec in recover_cs(cube, cs, THETA)}
        perfect += got == {h for h, _ in hosts}
    assert perfect >= 0.95 * runs


def test_recover_all_across_sketches_and_self_consistent():
    cfg = seeded_config(99)
    rng = np.random.default_rng(99)
    hosts = [(host_in_cs(rng, cfg, cs), 3000 + 100 * cs) for cs in (0, 3, 3, 7, 15)]
    cube = build(cfg, rng, hosts, background=100_000)
    res = recover_all(cube, THETA)
    assert res.overflows == []
    assert {r.ip for r in res.records} == {h for h, _ in hosts}
    ests = [r.estimate for r in res.records]
    assert ests == sorted(ests, reverse=True)
    for rec in res.records:
        assert rec.estimate >= THETA
        rp, lp = ipmap.split_ip(ipmap.mangle(rec.ip, cfg), cfg)
        assert rp == rec.cs_idx
        load = estimate_cs_load(cube, rp)
        hot = find_hot_columns(cube, rp, hot_threshold(THETA, load.epsilon, cfg.g))
        for i, c in enumerate(ipmap.tuple_of(lp, cfg)):
            assert c in hot.per_array[i]
    # deterministic regardless of worker count
    assert recover_all(cube, THETA, workers=4).records == res.records


def test_tuple_cap_overflow():
    cfg = DEFAULT_CONFIG
    rng = np.random.default_rng(8)
    hosts = [(host_in_cs(rng, cfg, 2), 3000) for _ in range(3)]
    cube = build(cfg, rng, hosts)
    with pytest.raises(TupleSpaceOverflow) as exc:
        recover_cs(cube, 2, THETA, tuple_cap=8)
    assert exc.value.report.tuple_count == 27
    res = recover_all(cube, THETA, tuple_cap=8)
    assert [o.cs_idx for o in res.overflows] == [2]
    assert res.records == []


def test_buffer_pool_bounds_concurrency():
    pool = BufferPool(2, 64)
    with pool.acquire() as a, pool.acquire() as b:
        assert a is not b
        assert pool._free.empty()
    with pool.acquire() as c:
        assert c is a or c is b
