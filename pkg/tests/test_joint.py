import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogmem.channel import ConditionalChannel, gaussian_channel
from analogmem.errors import DimensionMismatch
from analogmem.joint import (
    MappingTable,
    SourceModel,
    coding_variants,
    effective_channel,
    evaluate,
    naive_mapping,
    optimal_decoder,
    optimal_encoder,
    solve_joint,
    write_mapping_json,
)

from conftest import random_channel
from oracles import awgn_mmse

SRC = SourceModel(n_points=401)


def identity_channel(n):
    return ConditionalChannel(np.linspace(0.0, 1.0, n), np.arange(n + 1.0), np.eye(n))


def brute_mse(src, ch, enc, dec):
    """Expected squared error by explicit double loop."""
    total = 0.0
    for s, w, v in zip(src.grid, src.weights, enc):
        for r, p in enumerate(ch.matrix[v]):
            total += w * p * (dec[r] - s) ** 2
    return total


def test_source_grid_moments_exact():
    src = SourceModel(mean=1.5, variance=4.0, n_points=500)
    assert src.weights.sum() == pytest.approx(1.0)
    assert src.weights @ src.grid == pytest.approx(1.5, abs=1e-12)
    assert src.weights @ (src.grid - 1.5) ** 2 == pytest.approx(4.0, abs=1e-12)


def test_naive_midpoint_and_endpoint():
    ch = ConditionalChannel.from_matrix(np.eye(5), v_grid=np.linspace(0.5, 3.0, 5))
    src = SourceModel(n_points=201)
    nm = naive_mapping(src, ch)
    assert nm.encoder[100] == 2  # source mean -> middle level
    assert nm.encoder[-1] == 4  # mean + 4 sigma -> highest level
    assert nm.encoder[0] == 0


def test_decoder_for_sign_encoder_is_half_normal_mean():
    ch = identity_channel(2)
    src = SourceModel(n_points=2000, span=6.0)
    dec = optimal_decoder(src, ch, (src.grid > 0).astype(int))
    np.testing.assert_allclose(dec, [-math.sqrt(2 / math.pi), math.sqrt(2 / math.pi)], atol=1e-3)


def test_uninformative_channel_gives_zero_db():
    ch = ConditionalChannel.from_matrix(np.tile([0.25, 0.25, 0.5], (4, 1)))
    nm = naive_mapping(SRC, ch)
    dec = optimal_decoder(SRC, ch, nm.encoder)
    np.testing.assert_allclose(dec, 0.0, atol=1e-12)
    res = evaluate(SRC, ch, MappingTable(nm.encoder, dec))
    assert res.mse == pytest.approx(1.0, abs=1e-12)
    assert res.snr_db == pytest.approx(0.0, abs=1e-10)
    joint = solve_joint(SRC, ch)
    assert joint.mse == pytest.approx(1.0, abs=1e-12)


def test_constant_mean_decoder_gives_variance():
    ch = random_channel(np.random.default_rng(1), 3, 5)
    res = evaluate(SRC, ch, MappingTable(np.zeros(SRC.n_points, int), np.zeros(5)))
    assert res.mse == pytest.approx(SRC.variance)


def test_noiseless_encoder_is_nearest_centroid():
    ch = identity_channel(4)
    cent = np.array([-1.5, -0.4, 0.5, 1.4])
    enc = optimal_encoder(SRC, ch, cent)
    expect = np.abs(SRC.grid[:, None] - cent[None, :]).argmin(axis=1)
    np.testing.assert_array_equal(enc, expect)


def test_single_level_encoder_is_constant():
    ch = ConditionalChannel.from_matrix([[0.3, 0.7]])
    assert np.all(optimal_encoder(SRC, ch, [-1.0, 1.0]) == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_rows=st.integers(1, 5), n_cols=st.integers(1, 6))
def test_encoder_is_exhaustive_optimum(seed, n_rows, n_cols):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, n_rows, n_cols)
    dec = rng.normal(size=n_cols)
    src = SourceModel(n_points=31)
    enc = optimal_encoder(src, ch, dec)
    for i, s in enumerate(src.grid):
        costs = [sum(p * (dec[r] - s) ** 2 for r, p in enumerate(ch.matrix[v])) for v in range(n_rows)]
        assert costs[enc[i]] <= min(costs) + 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_rows=st.integers(1, 5), n_cols=st.integers(1, 6))
def test_decoder_never_worse_than_any_other(seed, n_rows, n_cols):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, n_rows, n_cols)
    src = SourceModel(n_points=31)
    enc = rng.integers(n_rows, size=src.n_points)
    best = brute_mse(src, ch, enc, optimal_decoder(src, ch, enc))
    assert best <= brute_mse(src, ch, enc, rng.normal(size=n_cols)) + 1e-12
    assert best <= brute_mse(src, ch, enc, naive_mapping(src, ch).decoder) + 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_rows=st.integers(2, 6), n_cols=st.integers(2, 10))
def test_variant_ordering_and_mse_formula(seed, n_rows, n_cols):
    ch = random_channel(np.random.default_rng(seed), n_rows, n_cols)
    src = SourceModel(n_points=61)
    res = coding_variants(src, ch, seed=seed)
    m = {k: v.mse for k, v in res.items()}
    assert m["joint"] <= m["decoder_only"] + 1e-12 <= m["naive"] + 2e-12
    assert m["joint"] <= m["encoder_only"] + 1e-12 <= m["naive"] + 2e-12
    for r in res.values():
        assert r.mse == pytest.approx(brute_mse(src, ch, r.mapping.encoder, r.mapping.decoder), abs=1e-10)
    trace = np.array(res["joint"].trace)
    assert np.all(np.diff(trace) <= 1e-12)


def test_evaluate_matches_solver_report():
    ch = random_channel(np.random.default_rng(3), 5, 8)
    res = solve_joint(SRC, ch)
    assert evaluate(SRC, ch, res.mapping).mse == pytest.approx(res.mse, abs=1e-14)
    assert res.trace[-1] == pytest.approx(res.mse, abs=1e-14)


@pytest.mark.parametrize("sigma_n", [0.5, 1.0])
def test_awgn_with_power_penalty_reaches_mmse(sigma_n):
    v = np.linspace(-4, 4, 161)
    r = np.linspace(-4 - 7 * sigma_n, 4 + 7 * sigma_n, 2001)
    ch = gaussian_channel(v, r, v, np.full(v.size, sigma_n))
    c = 1 / (1 + sigma_n**2)
    res = solve_joint(SRC, ch, init=naive_mapping(SRC, ch), power_weight=c * (1 - c))
    assert res.mse == pytest.approx(awgn_mmse(1.0, sigma_n**2), rel=0.02)
    assert res.power == pytest.approx(1.0, rel=0.05)


def test_effective_channel_cases():
    ch = identity_channel(8)
    src = SourceModel(n_points=64)
    enc = np.repeat(np.arange(8), 8)
    dec = optimal_decoder(src, ch, enc)
    eff = effective_channel(src, ch, MappingTable(enc, dec), n_bins=8)
    assert np.allclose(eff.matrix.sum(axis=1), 1.0)
    # noiseless: each source point lands in one bin, and bins rise with the source
    assert np.all(eff.matrix.max(axis=1) == 1.0)
    assert np.all(np.diff(eff.matrix.argmax(axis=1)) >= 0)

    flat = ConditionalChannel.from_matrix(np.tile([0.2, 0.8], (3, 1)))
    nm = naive_mapping(src, flat)
    eff = effective_channel(src, flat, nm)
    assert np.allclose(eff.matrix, eff.matrix[0])


def test_naive_effective_channel_copies_rows():
    r = np.linspace(3.0, 7.0, 41)
    ch = gaussian_channel(np.linspace(0.5, 3.0, 6), r, np.linspace(3.5, 6.5, 6), np.full(6, 0.2))
    nm = naive_mapping(SRC, ch)
    eff = effective_channel(SRC, ch, nm, n_bins=ch.n_reads)
    # the naive decoder is affine and increasing, so bins map one-to-one onto read cells
    for i in (0, SRC.n_points // 2, SRC.n_points - 1):
        np.testing.assert_allclose(eff.matrix[i], ch.matrix[nm.encoder[i]], atol=1e-12)


def test_mapping_checks_and_json(tmp_path):
    ch = random_channel(np.random.default_rng(0), 3, 4)
    with pytest.raises(DimensionMismatch):
        evaluate(SRC, ch, MappingTable(np.zeros(5, int), np.zeros(4)))
    with pytest.raises(DimensionMismatch):
        evaluate(SRC, ch, MappingTable(np.full(SRC.n_points, 3), np.zeros(4)))
    res = solve_joint(SRC, ch)
    write_mapping_json(res, SRC, ch, tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    back = MappingTable.from_dict(doc["mapping"])
    np.testing.assert_array_equal(back.encoder, res.mapping.encoder)
    assert doc["snr_db"] == pytest.approx(res.snr_db)
