import numpy as np
import pytest

from analogmem.capacity import blahut_arimoto
from analogmem.channel import discretize_reads, gaussian_channel, restrict_writes, uniform_resistance_grid
from analogmem.errors import InvalidCounts, InvalidParams, SearchSpaceTooLarge
from analogmem.levels import (
    AnnealSchedule,
    capacity_surface,
    exhaustive_read_levels,
    optimize_read_levels,
    refine_edges,
    search_space_size,
    write_surface_csv,
)

from conftest import default_channel

FAST = AnnealSchedule(initial_temp=0.05, cooling_rate=0.8, steps_per_temp=60, min_temp=1e-3)


def two_gaussians(sep=1.0, std=0.3, n_cells=100):
    r = uniform_resistance_grid(3.0, 7.0, n_cells)
    return gaussian_channel([0.0, 1.0], r, [5.0 - sep / 2, 5.0 + sep / 2], [std, std])


def scan_single_threshold(ch):
    """Direct scan: capacity for every interior threshold of a 2-row channel."""
    return max(blahut_arimoto(discretize_reads(ch, [t])).capacity_bits for t in ch.r_grid[1:-1])


def test_symmetric_pair_threshold_at_midpoint():
    ch = two_gaussians()
    d = optimize_read_levels(ch, 2, 2, FAST)
    cell = ch.r_grid[1] - ch.r_grid[0]
    assert abs(d.read_thresholds[0] - 5.0) <= cell + 1e-12
    assert d.capacity_bits == pytest.approx(scan_single_threshold(ch), abs=1e-6)


def test_symmetric_well_separated_pair_gives_one_bit():
    d = optimize_read_levels(two_gaussians(sep=2.0, std=0.1), 2, 2, FAST)
    assert d.capacity_bits == pytest.approx(1.0, abs=1e-6)


def test_exhaustive_matches_threshold_scan():
    ch = two_gaussians(sep=0.6, std=0.4, n_cells=60)
    assert exhaustive_read_levels(ch, 2, 2).capacity_bits == pytest.approx(scan_single_threshold(ch), abs=1e-9)


def test_full_refinement_recovers_analog_capacity():
    ch = default_channel(12, 8)
    d = optimize_read_levels(ch, ch.n_reads, ch.n_writes, FAST)
    assert d.capacity_bits == pytest.approx(blahut_arimoto(ch).capacity_bits, abs=1e-6)


def test_single_write_has_no_capacity():
    d = optimize_read_levels(default_channel(64, 10), 4, 1, FAST)
    assert d.capacity_bits == pytest.approx(0.0, abs=1e-9)


def test_design_capacity_matches_its_channel():
    ch = default_channel(64, 10)
    d = optimize_read_levels(ch, 4, 3, FAST.with_seed(3))
    assert len(d.read_thresholds) + 1 == d.n_reads == 4
    assert np.all(np.diff(d.read_thresholds) > 0)
    assert blahut_arimoto(d.channel(ch)).capacity_bits == pytest.approx(d.capacity_bits, abs=1e-4)


def test_annealer_is_deterministic_per_seed():
    ch = default_channel(64, 10)
    a = optimize_read_levels(ch, 3, 3, FAST.with_seed(11))
    b = optimize_read_levels(ch, 3, 3, FAST.with_seed(11))
    assert a.write_indices == b.write_indices and a.edge_indices == b.edge_indices
    np.testing.assert_array_equal(a.trace, b.trace)


def test_best_so_far_trace_is_monotone():
    d = optimize_read_levels(default_channel(64, 10), 4, 3, FAST)
    assert np.all(np.diff(d.trace) >= 0)


def test_exhaustive_plateau_bounded_by_analog():
    ch = default_channel(16, 5)
    analog = blahut_arimoto(ch).capacity_bits
    caps = [exhaustive_read_levels(ch, k, 5).capacity_bits for k in (2, 3, 4, 6)]
    assert np.all(np.diff(caps) >= -1e-6)
    assert caps[-1] <= analog + 1e-6


def test_count_and_size_errors():
    ch = default_channel(64, 10)
    with pytest.raises(InvalidCounts):
        optimize_read_levels(ch, 1, 2)
    with pytest.raises(InvalidCounts):
        optimize_read_levels(ch, 3, 11)
    with pytest.raises(InvalidCounts):
        optimize_read_levels(ch, 3, 0)
    assert search_space_size(ch, 5, 5) > 10**7
    with pytest.raises(SearchSpaceTooLarge):
        exhaustive_read_levels(ch, 5, 5)


def test_schedule_validation():
    with pytest.raises(InvalidParams):
        AnnealSchedule(cooling_rate=1.0)
    with pytest.raises(InvalidParams):
        AnnealSchedule(initial_temp=1e-5)
    assert AnnealSchedule().n_temps == 135


def test_refine_edges_keeps_existing_thresholds():
    ch = default_channel(64, 10)
    edges = refine_edges(ch, (0, 5, 9), (20, 40), 6)
    assert len(edges) == 5 and {20, 40} <= set(edges)
    assert list(edges) == sorted(set(edges))


def test_surface_rows_non_decreasing_and_near_noiseless_pair(tmp_path):
    ch = default_channel(96, 12)
    designs = capacity_surface(ch, [2, 4, 8], [2, 4], FAST)
    grid = {(d.n_writes, d.n_reads): d.capacity_bits for d in designs}
    for w in (2, 4):
        row = [grid[(w, r)] for r in (2, 4, 8)]
        assert np.all(np.diff(row) >= -2e-3)
    # the two extreme levels of the synthetic device barely overlap
    assert grid[(2, 2)] == pytest.approx(1.0, abs=1e-3)
    write_surface_csv(designs, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "n_writes,n_reads,capacity_bits,thresholds_json,write_indices_json"
    assert len(lines) == 7


def test_restricted_design_channel_uses_chosen_rows():
    ch = default_channel(64, 10)
    d = optimize_read_levels(ch, 3, 2, FAST)
    sub = restrict_writes(ch, d.write_indices)
    np.testing.assert_array_equal(d.channel(ch).v_grid, sub.v_grid)
