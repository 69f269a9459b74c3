import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from superhost import cube_new, ipmap, record_stream
from superhost.config import DEFAULT_CONFIG, SketchConfig
from superhost.estimator import (EPSILON_CAP, corrected_estimate, estimate_cs_load,
                                 hot_threshold, linear_estimate, shared_bit_prob)

G = 4096


def column_zeros(rng, n, g=G):
    """Zero bits left after hashing n distinct outer addresses into one column."""
    oips = rng.choice(1 << 32, size=n, replace=False).astype(np.uint32)
    cfg = DEFAULT_CONFIG.replace(g=g, bv_seed=int(rng.integers(0, 1 << 32)))
    rows = ipmap.row_index_v(oips, cfg)
    return g - len(np.unique(rows))


def test_linear_estimate_values():
    assert linear_estimate(G, G) == 0
    expect = float(G * mpmath.log(2))
    assert linear_estimate(G, 2048) == pytest.approx(expect, rel=1e-14)
    assert abs(linear_estimate(G, 2048) - 2839.2) < 0.1
    assert linear_estimate(G, 0) == math.inf


def test_linear_estimate_simulation():
    rng = np.random.default_rng(1)
    ests = [linear_estimate(G, column_zeros(rng, 1000)) for _ in range(100)]
    assert abs(np.median(ests) - 1000) <= 100


def test_shared_bit_prob():
    assert shared_bit_prob(0, DEFAULT_CONFIG) == 0
    one = SketchConfig(r=4, num_ra=2, num_va=0, g=64, cbn=(14, 14), clbs=(0, 14), va_seeds=())
    # two arrays: product of two equal factors
    eta = one.col_counts[0] * one.g
    assert shared_bit_prob(eta, one) == pytest.approx((1 - math.exp(-1)) ** 2, rel=1e-12)
    grid = np.linspace(0, 1e8, 200)
    vals = [shared_bit_prob(x, DEFAULT_CONFIG) for x in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_shared_bit_prob_single_factor():
    # a single-array value, evaluated through one factor of the product
    cfg = SketchConfig(r=4, num_ra=2, num_va=0, g=64, cbn=(14, 14), clbs=(0, 14), va_seeds=())
    factor = math.sqrt(shared_bit_prob(cfg.col_counts[0] * cfg.g, cfg))
    assert factor == pytest.approx(float(1 - mpmath.exp(-1)), rel=1e-12)
    assert round(factor, 4) == 0.6321


@given(st.integers(1, G))
def test_corrected_reduces_to_linear(z):
    assert corrected_estimate(z, 0.0, G) == linear_estimate(G, z)


def test_corrected_zero_point_and_clamp():
    eps = 0.25
    assert corrected_estimate(int(G * (1 - eps)), eps, G) == pytest.approx(0, abs=1e-9)
    assert corrected_estimate(G, eps, G) == 0.0
    assert corrected_estimate(0, eps, G) == math.inf
    with pytest.raises(ValueError):
        corrected_estimate(10, 1.0, G)


@given(st.integers(1, G - 1), st.floats(0, 0.9))
def test_estimates_strictly_decrease_in_z(z, eps):
    assert linear_estimate(G, z) > linear_estimate(G, z + 1)
    a, b = corrected_estimate(z, eps, G), corrected_estimate(z + 1, eps, G)
    assert a > b or a == b == 0.0


def test_corrected_beats_uncorrected_under_sharing():
    # Several hosts share few columns per array; the target's union column
    # carries bits from others with per-bit probability epsilon.
    rng = np.random.default_rng(7)
    arrays, cols, g = 4, 4, G
    n_target, n_bg_hosts, n_bg = 1000, 20, 500
    eta = n_target + n_bg_hosts * n_bg
    cfg = SketchConfig(r=4, num_ra=3, num_va=1, g=g, cbn=(2, 2, 2, 2), clbs=(0, 2, 4),
                       validate=False)
    eps = shared_bit_prob(eta, cfg)
    better = []
    for _ in range(100):
        bits = np.zeros((arrays, cols, g), dtype=bool)
        target_cols = rng.integers(0, cols, arrays)
        for host in range(n_bg_hosts + 1):
            n = n_target if host == 0 else n_bg
            hcols = target_cols if host == 0 else rng.integers(0, cols, arrays)
            rows = rng.integers(0, g, n)
            for a in range(arrays):
                bits[a, hcols[a], rows] = True
        union = np.logical_and.reduce([bits[a, target_cols[a]] for a in range(arrays)])
        z = int(g - union.sum())
        unc, cor = linear_estimate(g, z), corrected_estimate(z, eps, g)
        better.append(abs(cor - n_target) < abs(unc - n_target))
    assert eps > 0.01
    assert np.mean(better) > 0.5


def test_hot_threshold_values():
    expect = float(G * mpmath.exp(-0.25))
    assert hot_threshold(1024, 0.0, G) == pytest.approx(expect, rel=1e-14)
    assert abs(hot_threshold(1024, 0.0, G) - 3190.1) < 0.2
    for theta in (1, 100, 5000):
        assert hot_threshold(theta, 0, G) == pytest.approx(G * math.exp(-theta / G))
    assert hot_threshold(1024, 0.1, G, "inverted") == pytest.approx(G * 0.9 * math.exp(-0.25))
    assert hot_threshold(10 ** 6, 0.5, G) == 0.0
    with pytest.raises(ValueError):
        hot_threshold(1024, 0, G, "other")


@given(st.integers(1, 20000), st.floats(0, 0.9), st.sampled_from(["paper", "inverted"]))
def test_hot_threshold_monotone(theta, eps, formula):
    a, b = hot_threshold(theta, eps, G, formula), hot_threshold(theta + 1, eps, G, formula)
    assert a > b or a == b == 0.0
    assert a <= G


def test_two_theta_host_is_hot():
    rng = np.random.default_rng(11)
    tbn = hot_threshold(1024, 0, G)
    hits = sum(column_zeros(rng, 2048) <= tbn for _ in range(300))
    assert hits / 300 >= 0.99


@pytest.mark.parametrize("n", [256, 1024, 4096])
def test_lone_host_union_estimate(n):
    rng = np.random.default_rng(n)
    ests = [linear_estimate(G, column_zeros(rng, n)) for _ in range(100)]
    assert abs(np.median(ests) - n) <= 0.1 * n


def _flows_into_cs(rng, cfg, cs, n_flows):
    # random hosts whose mangled address selects sketch cs, one flow each
    lp = rng.integers(0, 1 << cfg.lp_bits, n_flows, dtype=np.uint64)
    m = ((lp << np.uint64(cfg.r)) | np.uint64(cs)).astype(np.uint32)
    iip = ipmap.unmangle_v(m, cfg)
    oip = rng.integers(0, 1 << 32, n_flows, dtype=np.uint64).astype(np.uint32)
    return iip, oip


def test_estimate_cs_load():
    cfg = SketchConfig(r=2, num_ra=3, num_va=1, g=256, cbn=(11, 11, 12, 8), clbs=(0, 10, 20))
    empty = estimate_cs_load(cube_new(cfg), 1)
    assert empty.eta == 0 and empty.epsilon == 0
    rng = np.random.default_rng(5)
    F = cfg.col_counts[0] * cfg.g // 4
    rel = []
    for _ in range(50):
        cube = cube_new(cfg)
        iip, oip = _flows_into_cs(rng, cfg, 1, F)
        record_stream(cube, (iip, oip))
        rel.append(estimate_cs_load(cube, 1).eta / F)
    assert abs(np.median(rel) - 1) <= 0.1


def test_estimate_cs_load_monotone_and_saturated():
    cfg = SketchConfig(r=2, num_ra=3, num_va=1, g=16, cbn=(11, 11, 12, 4), clbs=(0, 10, 20))
    rng = np.random.default_rng(9)
    cube = cube_new(cfg)
    last = 0.0
    for _ in range(5):
        record_stream(cube, _flows_into_cs(rng, cfg, 0, 2000))
        eta = estimate_cs_load(cube, 0).eta
        assert eta > last
        last = eta
    # saturate restoring array 0 of sketch 2
    lo = cfg.column_bit_offset(2, 0, 0) // 8
    cube.buf[lo:lo + cfg.col_counts[0] * cfg.g // 8] = 0xFF
    sat = estimate_cs_load(cube, 2)
    assert sat.eta == math.inf and sat.epsilon == EPSILON_CAP < 1
