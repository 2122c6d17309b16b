import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogmem.capacity import blahut_arimoto
from analogmem.channel import (
    ConditionalChannel,
    MeasurementSet,
    SynthPcmParams,
    discretize_reads,
    estimate_kde,
    gaussian_channel,
    linear_voltage_grid,
    read_measurements_csv,
    resistance_grid,
    restrict_writes,
    sample_measurements,
    silverman_bandwidth,
    synth_pcm_channel,
    uniform_resistance_grid,
    voltage_grid,
    write_measurements_csv,
)
from analogmem.errors import (
    CsvSchemaError,
    DataError,
    EmptyIndexSet,
    EmptyVoltageBin,
    IndexOutOfRange,
    InvalidGrid,
    InvalidParams,
    NonPositiveResistance,
    ThresholdOutOfRange,
    UnsortedThresholds,
)

from conftest import random_channel


# grids and the channel type


def test_voltage_grid_rejects_unsorted_and_nan():
    with pytest.raises(InvalidGrid):
        voltage_grid([1.0, 0.5])
    with pytest.raises(InvalidGrid):
        voltage_grid([0.5, np.nan])
    with pytest.raises(InvalidGrid):
        voltage_grid([])


def test_resistance_grid_requires_uniform_spacing():
    resistance_grid([3.0, 3.5, 4.0])
    with pytest.raises(InvalidGrid):
        resistance_grid([3.0, 3.5, 4.5])
    with pytest.raises(InvalidGrid):
        resistance_grid([3.0])


def test_channel_rejects_bad_rows():
    with pytest.raises(InvalidGrid):
        ConditionalChannel.from_matrix([[0.5, 0.6]])
    with pytest.raises(InvalidGrid):
        ConditionalChannel.from_matrix([[1.5, -0.5]])
    with pytest.raises(InvalidGrid):
        ConditionalChannel([0.0], [0.0, 1.0, 2.0], [[1.0]])


def test_channel_is_read_only():
    ch = ConditionalChannel.from_matrix(np.eye(2))
    with pytest.raises(ValueError):
        ch.matrix[0, 0] = 0.5


def test_channel_json_round_trip(tmp_path):
    ch = random_channel(np.random.default_rng(1), 3, 5)
    ch.save(tmp_path / "c.json", tag="x")
    back = ConditionalChannel.load(tmp_path / "c.json")
    np.testing.assert_array_equal(back.matrix, ch.matrix)
    np.testing.assert_array_equal(back.r_grid, ch.r_grid)
    with pytest.raises(DataError):
        ConditionalChannel.load(tmp_path / "missing.json")


# KDE estimation


def test_kde_point_mass_lands_in_one_cell():
    r_grid = uniform_resistance_grid(3.0, 7.0, 40)
    r0 = 10**5.05
    meas = MeasurementSet(np.zeros(50), np.full(50, 1.0), np.full(50, r0))
    ch = estimate_kde(meas, [1.0], r_grid, bandwidth=0.01)
    j = np.searchsorted(r_grid, np.log10(r0)) - 1
    assert ch.matrix[0, j] > 0.999


def test_kde_point_mass_auto_bandwidth_falls_back_to_half_cell():
    r_grid = uniform_resistance_grid(3.0, 7.0, 40)
    meas = MeasurementSet(np.zeros(5), np.full(5, 1.0), np.full(5, 10**5.05))
    ch = estimate_kde(meas, [1.0], r_grid)
    assert ch.matrix[0].max() > 0.38
    assert np.isclose(ch.matrix[0].sum(), 1.0)


def test_kde_recovers_lognormal_moments():
    # Monte-Carlo oracle: samples from log10 R ~ N(5, 0.2)
    rng = np.random.default_rng(7)
    x = rng.normal(5.0, 0.2, 10_000)
    meas = MeasurementSet(np.zeros(x.size), np.full(x.size, 2.0), 10**x)
    ch = estimate_kde(meas, [2.0], uniform_resistance_grid(3.0, 7.0, 2000))
    c = ch.cell_centers
    mean = ch.matrix[0] @ c
    std = np.sqrt(ch.matrix[0] @ (c - mean) ** 2)
    assert abs(mean - 5.0) < 0.02
    assert abs(std - 0.2) / 0.2 < 0.10


def test_kde_disjoint_clusters_do_not_overlap():
    rng = np.random.default_rng(2)
    lo, hi = rng.normal(3.6, 0.02, 200), rng.normal(6.4, 0.02, 200)
    meas = MeasurementSet(
        np.zeros(400), np.r_[np.full(200, 0.5), np.full(200, 3.0)], 10 ** np.r_[lo, hi]
    )
    ch = estimate_kde(meas, [0.5, 3.0], uniform_resistance_grid(3.0, 7.0, 800))
    assert np.minimum(ch.matrix[0], ch.matrix[1]).sum() < 1e-6


def test_kde_requires_two_records_per_level():
    meas = MeasurementSet([0, 0, 0], [1.0, 1.0, 2.0], [1e4, 2e4, 3e4])
    with pytest.raises(EmptyVoltageBin):
        estimate_kde(meas, [1.0, 2.0], uniform_resistance_grid(3, 6, 30))


def test_measurements_reject_non_positive_resistance():
    with pytest.raises(NonPositiveResistance):
        MeasurementSet([0], [1.0], [0.0])


def test_silverman_bandwidth_matches_formula():
    x = np.random.default_rng(0).normal(0, 2.0, 500)
    iqr = np.subtract(*np.percentile(x, [75, 25])) / 1.349
    expect = 0.9 * min(x.std(ddof=1), iqr) * 500**-0.2
    assert silverman_bandwidth(x) == pytest.approx(expect)
    assert silverman_bandwidth(np.ones(10)) == 0.0


# measurement CSV


def test_csv_round_trip(tmp_path):
    meas = sample_measurements(SynthPcmParams(), [1.0, 2.0], 5, np.random.default_rng(0))
    write_measurements_csv(meas, tmp_path / "m.csv")
    back = read_measurements_csv(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.resistance, meas.resistance)
    np.testing.assert_array_equal(back.v_wl, meas.v_wl)


def test_csv_header_typo_names_the_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("device_id,v_wl_volt,resistance_ohms\n0,1.0,1000\n")
    with pytest.raises(CsvSchemaError, match="v_wl_volt") as e:
        read_measurements_csv(p)
    assert e.value.line == 1


def test_csv_bad_value_reports_line(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("device_id,v_wl_volts,resistance_ohms\n0,1.0,1000\n0,abc,1000\n")
    with pytest.raises(CsvSchemaError, match="line 3"):
        read_measurements_csv(p)
    p.write_text("device_id,v_wl_volts,resistance_ohms\n0,1.0\n")
    with pytest.raises(CsvSchemaError, match="line 2"):
        read_measurements_csv(p)


def test_csv_missing_file(tmp_path):
    with pytest.raises(DataError):
        read_measurements_csv(tmp_path / "nope.csv")


# synthetic surrogate


def test_huge_noise_gives_near_uniform_rows_and_no_capacity():
    p = SynthPcmParams(noise_floor=100.0)
    ch = synth_pcm_channel(p, linear_voltage_grid(0.5, 3, 10), uniform_resistance_grid(3, 7.5, 100))
    assert np.ptp(ch.matrix, axis=1).max() < 1e-3
    assert blahut_arimoto(ch).capacity_bits < 1e-3


def test_plateau_row_centered_at_r_set():
    p = SynthPcmParams(dip_depth=0.0)
    r = uniform_resistance_grid(3.0, 7.5, 450)
    ch = synth_pcm_channel(p, [0.0], r)
    peak = ch.cell_centers[ch.matrix[0].argmax()]
    assert abs(peak - p.r_set) <= (r[1] - r[0])


def test_mean_curve_non_monotone_iff_dip():
    v = linear_voltage_grid(0.5, 3.0, 40)
    assert np.any(np.diff(SynthPcmParams().mean(v)) < 0)
    assert np.all(np.diff(SynthPcmParams(dip_depth=0.0).mean(v)) > 0)


def test_synth_params_validation():
    with pytest.raises(InvalidParams):
        SynthPcmParams(r_set=7.0, r_max=6.0)
    with pytest.raises(InvalidParams):
        SynthPcmParams(v_onset=3.0, v_melt=2.0)
    with pytest.raises(InvalidParams):
        SynthPcmParams(noise_floor=0.0)
    with pytest.raises(InvalidParams):
        SynthPcmParams.from_dict({"nosie_floor": 0.1})


# transforms


def test_discretize_all_interior_points_is_identity():
    ch = random_channel(np.random.default_rng(3), 4, 9)
    out = discretize_reads(ch, ch.r_grid[1:-1])
    np.testing.assert_allclose(out.matrix, ch.matrix, atol=1e-15)


def test_discretize_no_thresholds_is_one_column():
    ch = random_channel(np.random.default_rng(3), 4, 9)
    out = discretize_reads(ch, [])
    np.testing.assert_allclose(out.matrix, np.ones((4, 1)))
    assert blahut_arimoto(out).capacity_bits == pytest.approx(0.0, abs=1e-12)


def test_discretize_disjoint_rows_gives_identity():
    r = uniform_resistance_grid(3.0, 7.0, 400)
    ch = gaussian_channel([0.0, 1.0], r, [4.0, 6.0], [0.05, 0.05])
    out = discretize_reads(ch, [5.0])
    np.testing.assert_allclose(out.matrix, np.eye(2), atol=1e-9)


def test_discretize_errors():
    ch = random_channel(np.random.default_rng(3), 2, 9)
    with pytest.raises(UnsortedThresholds):
        discretize_reads(ch, [5.0, 3.0])
    with pytest.raises(ThresholdOutOfRange):
        discretize_reads(ch, [0.0])
    with pytest.raises(ThresholdOutOfRange):
        discretize_reads(ch, [9.5])


def test_restrict_writes_cases():
    ch = synth_pcm_channel(SynthPcmParams(), linear_voltage_grid(0.5, 3, 40), uniform_resistance_grid(3, 7.5, 64))
    same = restrict_writes(ch, range(40))
    np.testing.assert_array_equal(same.matrix, ch.matrix)
    one = restrict_writes(ch, [0])
    assert one.n_writes == 1 and blahut_arimoto(one).capacity_bits == pytest.approx(0.0, abs=1e-12)
    sub = restrict_writes(ch, [30, 3, 17, 5])
    np.testing.assert_array_equal(sub.matrix, ch.matrix[[3, 5, 17, 30]])
    np.testing.assert_array_equal(sub.v_grid, ch.v_grid[[3, 5, 17, 30]])
    with pytest.raises(EmptyIndexSet):
        restrict_writes(ch, [])
    with pytest.raises(IndexOutOfRange):
        restrict_writes(ch, [40])


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n_rows=st.integers(1, 5),
    n_cols=st.integers(2, 12),
    data=st.data(),
)
def test_discretize_preserves_row_sums_and_order(seed, n_rows, n_cols, data):
    ch = random_channel(np.random.default_rng(seed), n_rows, n_cols)
    k = data.draw(st.integers(0, n_cols - 1))
    picks = sorted(data.draw(st.sets(st.integers(1, n_cols - 1), min_size=k, max_size=k)))
    out = discretize_reads(ch, ch.r_grid[picks])
    assert out.n_reads == len(picks) + 1
    np.testing.assert_allclose(out.matrix.sum(axis=1), 1.0, atol=1e-12)
    # merged masses equal sums over the original cells
    bounds = [0, *picks, n_cols]
    expect = np.stack([ch.matrix[:, a:b].sum(axis=1) for a, b in zip(bounds[:-1], bounds[1:])], axis=1)
    np.testing.assert_allclose(out.matrix, expect, atol=1e-12)
