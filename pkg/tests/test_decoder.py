import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcldpc import codes
from qcldpc.decoder import (DecoderConfig, box_plus, box_plus_reduce,
                            channel_llrs, decode, decode_batch, sigma_from_snr)

FIX = "src/qcldpc/fixtures"


def box_plus_exact(x1, x2):
    """Closed form ln((1+e^{x1+x2})/(e^{x1}+e^{x2})), stabilized."""
    m = np.maximum.reduce([np.zeros_like(x1 + x2), x1 + x2, x1, x2])
    num = np.exp(0.0 - m) + np.exp(x1 + x2 - m)
    den = np.exp(x1 - m) + np.exp(x2 - m)
    return np.log(num) - np.log(den)


def test_box_plus_oracle_million_pairs():
    rng = np.random.default_rng(7)
    x1 = rng.uniform(-15.75, 15.75, 1_000_000)
    x2 = rng.uniform(-15.75, 15.75, 1_000_000)
    assert np.max(np.abs(box_plus(x1, x2) - box_plus_exact(x1, x2))) < 1e-9


def test_box_plus_fold_degree6_tanh_form():
    rng = np.random.default_rng(8)
    xs = rng.uniform(-12.0, 12.0, (2000, 6))
    folded = box_plus_reduce(xs, axis=1)
    tanh_form = 2.0 * np.arctanh(np.prod(np.tanh(xs / 2.0), axis=1))
    assert np.max(np.abs(folded - tanh_form)) < 1e-9


def test_box_plus_neutral_element():
    x = np.array([-3.0, 0.5, 12.0])
    assert np.allclose(box_plus(x, np.full(3, 1e30)), x, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-15.75, 15.75), st.floats(-15.75, 15.75))
def test_box_plus_properties(x1, x2):
    v = box_plus(x1, x2)
    assert v == pytest.approx(box_plus(x2, x1))         # commutative
    assert abs(v) <= min(abs(x1), abs(x2)) + 1e-12      # magnitude contraction
    if x1 * x2 > 0:
        assert v >= -1e-12
    if x1 * x2 < 0:
        assert v <= 1e-12


def test_sigma_from_snr():
    # Eb/N0 = 0 dB, rate 1/2: sigma = 1
    assert sigma_from_snr(0.0, 0.5) == pytest.approx(1.0)
    assert sigma_from_snr(6.0, 0.3) == pytest.approx(
        np.sqrt(1.0 / (0.6 * 10 ** 0.6)))


def test_channel_llrs():
    y = np.array([0.5, -20.0, 0.0])
    l = channel_llrs(y, 1.0, sat=15.75)
    assert l[0] == pytest.approx(1.0)
    assert l[1] == -15.75
    assert l[2] == 0.0
    with pytest.raises(ValueError):
        channel_llrs(np.array([np.nan]), 1.0)
    with pytest.raises(ValueError):
        channel_llrs(y, 0.0)


@pytest.fixture(scope="module")
def c1():
    return codes.lift(codes.load_exponent_matrix(f"{FIX}/c1.txt"))


def test_noiseless_converges_first_iteration(c1):
    llrs = np.full(c1.n, 10.0)
    for sched in ("flooding", "column", "row"):
        res = decode(c1, llrs, DecoderConfig(schedule=sched))
        assert res.converged and res.iterations == 1
        assert not res.bits.any()


def _reference_decode(g, llrs, cfg):
    """Straightforward scalar implementation of all three schedules."""
    sat = cfg.sat
    llrs = np.clip(llrs, -sat, sat)
    v2c = {}
    for i in range(g.n):
        for j in g.vn_neighbors[i]:
            v2c[(i, j)] = llrs[i]
    c2v_mem = {}
    tot = llrs.copy()
    if cfg.schedule == "column":
        layers = ([z - 1 for z in cfg.perm] if cfg.perm else range(g.n_b))
    elif cfg.schedule == "row":
        layers = ([z - 1 for z in cfg.perm] if cfg.perm else range(g.m_b))

    def cn_out(j, i):
        acc = None
        for i2 in g.cn_neighbors[j]:
            if i2 == i:
                continue
            acc = v2c[(i2, j)] if acc is None else float(
                box_plus(acc, v2c[(i2, j)]))
        return np.clip(acc, -sat, sat)

    for _ in range(cfg.max_iter):
        if cfg.schedule == "flooding":
            c2v = {(i, j): cn_out(j, i)
                   for i in range(g.n) for j in g.vn_neighbors[i]}
            for i in range(g.n):
                s = llrs[i] + sum(c2v[(i, j)] for j in g.vn_neighbors[i])
                tot[i] = np.clip(s, -sat, sat)
                for j in g.vn_neighbors[i]:
                    v2c[(i, j)] = np.clip(s - c2v[(i, j)], -sat, sat)
        elif cfg.schedule == "column":
            for z in layers:
                for i in np.nonzero(g.vn_layer == z)[0]:
                    c2v = {j: cn_out(j, i) for j in g.vn_neighbors[i]}
                    s = llrs[i] + sum(c2v.values())
                    tot[i] = np.clip(s, -sat, sat)
                    for j in g.vn_neighbors[i]:
                        v2c[(i, j)] = np.clip(s - c2v[j], -sat, sat)
        else:
            for zr in layers:
                for j in np.nonzero(g.cn_layer == zr)[0]:
                    loc = {i: np.clip(tot[i] - c2v_mem.get((i, j), 0.0),
                                      -sat, sat) for i in g.cn_neighbors[j]}
                    for i in g.cn_neighbors[j]:
                        acc = None
                        for i2 in g.cn_neighbors[j]:
                            if i2 != i:
                                acc = loc[i2] if acc is None else float(
                                    box_plus(acc, loc[i2]))
                        new = np.clip(acc, -sat, sat)
                        tot[i] = np.clip(loc[i] + new, -sat, sat)
                        c2v_mem[(i, j)] = new
        bits = (tot < 0).astype(np.int8)
        if not ((g.H @ bits) % 2).any():
            return bits, True
    return (tot < 0).astype(np.int8), False


@pytest.mark.parametrize("sched,perm", [
    ("flooding", None), ("column", None), ("row", None),
    ("column", (3, 1, 4, 2, 5, 7, 6, 9, 10, 8)),
])
def test_matches_scalar_reference(c1, sched, perm):
    rng = np.random.default_rng(11)
    sigma = sigma_from_snr(3.5, 0.3)
    cfg = DecoderConfig(schedule=sched, perm=perm, max_iter=8)
    for _ in range(4):
        y = 1.0 + sigma * rng.standard_normal(c1.n)
        llrs = channel_llrs(y, sigma)
        res = decode(c1, llrs, cfg)
        ref_bits, ref_conv = _reference_decode(c1, llrs, cfg)
        assert np.array_equal(res.bits, ref_bits)
        assert res.converged == ref_conv


@pytest.mark.parametrize("sched", ["flooding", "column", "row"])
def test_matches_scalar_reference_irregular(sched):
    # mixed VN degrees exercise the padded edge tables
    g = codes.lift(codes.load_exponent_matrix(f"{FIX}/c2.txt"))
    rng = np.random.default_rng(17)
    sigma = sigma_from_snr(3.0, 0.75)
    cfg = DecoderConfig(schedule=sched, max_iter=6)
    for _ in range(2):
        y = 1.0 + sigma * rng.standard_normal(g.n)
        llrs = channel_llrs(y, sigma)
        res = decode(g, llrs, cfg)
        ref_bits, ref_conv = _reference_decode(g, llrs, cfg)
        assert np.array_equal(res.bits, ref_bits)
        assert res.converged == ref_conv


def test_batch_matches_single(c1):
    rng = np.random.default_rng(3)
    sigma = sigma_from_snr(4.0, 0.3)
    llrs = channel_llrs(1.0 + sigma * rng.standard_normal((6, c1.n)), sigma)
    cfg = DecoderConfig(schedule="column", max_iter=15)
    bits, conv, iters, totals = decode_batch(c1, llrs, cfg)
    for f in range(6):
        res = decode(c1, llrs[f], cfg)
        assert np.array_equal(bits[f], res.bits)
        assert conv[f] == res.converged and iters[f] == res.iterations
        assert np.allclose(totals[f], res.totals)


def test_totals_are_clipped(c1):
    rng = np.random.default_rng(5)
    sigma = sigma_from_snr(5.0, 0.3)
    llrs = channel_llrs(1.0 + sigma * rng.standard_normal((2, c1.n)), sigma)
    cfg = DecoderConfig(schedule="flooding", max_iter=5, sat=7.5)
    _, _, _, totals = decode_batch(c1, llrs, cfg)
    assert np.max(np.abs(totals)) <= 7.5 + 1e-12


def test_bad_perm_rejected(c1):
    with pytest.raises(ValueError):
        decode(c1, np.zeros(c1.n),
               DecoderConfig(schedule="column", perm=(1, 2, 3)))
    with pytest.raises(ValueError):
        decode(c1, np.zeros(c1.n), DecoderConfig(schedule="zigzag"))
    with pytest.raises(ValueError):
        decode(c1, np.zeros(5), DecoderConfig())
