import logging
import math

import numpy as np
import pytest

from memory.detector import build_signal_library, geometry_preset
from memory.errors import HoughError
from memory.hough import (
    BankGrid,
    HoughAccumulator,
    HoughBinning,
    HoughPeak,
    PlanarDetector,
    PlanarTrack,
    accumulate,
    assign_bank,
    build_banks,
    find_peak,
    pattern_points,
    peak_stability_study,
    stability_summary,
    trace_track,
)
from utils.helper import parse_points


def line_points(phi_deg, rho, count=11):
    phi = math.radians(phi_deg)
    normal = np.array([math.cos(phi), math.sin(phi)])
    along = np.array([-math.sin(phi), math.cos(phi)])
    offsets = np.arange(count) - (count - 1) / 2
    return [tuple(rho * normal + t * along) for t in offsets]


class TestBinning:
    def test_default_layout(self):
        binning = HoughBinning()
        assert binning.n_phi == 18 and binning.n_rho == 21
        assert binning.phi_samples()[0] == -90.0 and binning.phi_samples()[-1] == 80.0
        assert binning.rho_lower == -10.5 and binning.rho_upper == 10.5

    def test_phi_bin_must_divide_half_turn(self):
        with pytest.raises(HoughError):
            HoughBinning(phi_bin=7.0)

    def test_phi_samples_are_lower_bin_edges(self):
        np.testing.assert_array_equal(HoughBinning(phi_bin=30.0).phi_samples(), [-90.0, -60.0, -30.0, 0.0, 30.0, 60.0])
        np.testing.assert_array_equal(HoughBinning(rho_bin=2.0, rho_max=4.0).rho_centers(), [-4.0, -2.0, 0.0, 2.0, 4.0])

    def test_rho_index_rounds_to_nearest_centre(self):
        binning = HoughBinning()
        np.testing.assert_array_equal(binning.rho_index([-0.51, -0.49, 0.0, 2.4, 2.6]), [9, 10, 10, 12, 13])


class TestAccumulate:
    def test_single_point_votes_once_per_phi(self):
        acc = accumulate([(1.0, 0.0)])
        np.testing.assert_array_equal(acc.counts.sum(axis=1), np.ones(18))
        assert acc.total == 18

    def test_vertical_line(self):
        points = [(2.0, float(y)) for y in range(-5, 6)]
        acc = accumulate(points)
        peak = find_peak(acc)
        assert (peak.phi, peak.rho, peak.votes) == (0.0, 2.0, 11)

    def test_vote_conservation(self):
        rng = np.random.default_rng(0)
        points = rng.uniform(-5, 5, size=(37, 2))
        binning = HoughBinning(phi_bin=5.0, rho_bin=0.5, rho_max=8.0)
        acc = accumulate(points, binning)
        assert acc.total == 37 * binning.n_phi

    def test_out_of_range_rho_extends_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="memory.hough"):
            acc = accumulate([(25.0, 0.0)], HoughBinning(rho_max=10.0))
        assert "extended" in caplog.text
        assert acc.binning.rho_max == 25.0
        assert acc.total == 18

    def test_merge_matches_single_pass(self):
        a, b = line_points(30.0, 3.0), line_points(-60.0, -2.0)
        binning = HoughBinning(rho_max=15.0)
        merged = accumulate(a, binning).merge(accumulate(b, binning))
        np.testing.assert_array_equal(merged.counts, accumulate(a + b, binning).counts)

    def test_merge_needs_same_binning(self):
        with pytest.raises(HoughError):
            accumulate([(0.0, 1.0)]).merge(accumulate([(0.0, 1.0)], HoughBinning(rho_bin=0.5)))

    def test_frame_is_long_form(self):
        frame = accumulate([(1.0, 1.0)]).to_frame()
        assert list(frame.columns) == ["phi", "rho", "votes"]
        assert len(frame) == 18 * 21
        assert frame["votes"].sum() == 18

    def test_empty_input(self):
        with pytest.raises(HoughError):
            accumulate([])


class TestFindPeak:
    def test_tie_prefers_smaller_phi_then_lower_sign(self):
        binning = HoughBinning()
        counts = np.zeros((binning.n_phi, binning.n_rho), dtype=np.int64)
        rho_col = int(binning.rho_index(2.0))
        counts[list(binning.phi_samples()).index(-30.0), rho_col] = 4
        counts[list(binning.phi_samples()).index(30.0), rho_col] = 4
        peak = find_peak(HoughAccumulator(counts, binning))
        assert (peak.phi, peak.rho, peak.votes) == (-30.0, 2.0, 4)

    def test_tie_prefers_smaller_rho(self):
        binning = HoughBinning()
        counts = np.zeros((binning.n_phi, binning.n_rho), dtype=np.int64)
        phi_row = list(binning.phi_samples()).index(40.0)
        counts[phi_row, int(binning.rho_index(-3.0))] = 2
        counts[phi_row, int(binning.rho_index(1.0))] = 2
        assert find_peak(HoughAccumulator(counts, binning)).rho == 1.0

    def test_no_votes(self):
        binning = HoughBinning()
        with pytest.raises(HoughError):
            find_peak(HoughAccumulator(np.zeros((binning.n_phi, binning.n_rho)), binning))

    def test_recovers_lines_at_bin_centres(self):
        rng = np.random.default_rng(1)
        phis = rng.choice(HoughBinning().phi_samples(), size=100)
        rhos = rng.integers(-8, 9, size=100)
        for phi, rho in zip(phis, rhos):
            peak = find_peak(accumulate(line_points(float(phi), float(rho))))
            assert (peak.phi, peak.rho, peak.votes) == (float(phi), float(rho), 11)

    def test_dropping_one_point_keeps_the_peak(self):
        for phi, rho in [(-50.0, -1.0), (0.0, 4.0), (70.0, 6.0), (-90.0, 3.0)]:
            points = line_points(phi, rho)
            for skip in range(len(points)):
                peak = find_peak(accumulate(points[:skip] + points[skip + 1:]))
                assert (peak.phi, peak.rho) == (phi, rho)


class TestBanks:
    def test_worked_example(self):
        # i = floor(40 / 10) = 4, j = floor(9.99 / 1) = 9, 21 rho cells
        assert assign_bank(HoughPeak(-50.0, -0.51, 5), BankGrid()) == 93

    def test_single_cell_grid(self):
        grid = BankGrid(phi_cell=180.0, rho_cell=21.0)
        for phi, rho in [(-90.0, -10.0), (0.0, 0.0), (80.0, 10.0)]:
            assert assign_bank(HoughPeak(phi, rho, 1), grid) == 0

    def test_neighbouring_bins_across_a_boundary(self):
        grid = BankGrid()
        assert assign_bank(HoughPeak(0.0, -1.0, 3), grid) != assign_bank(HoughPeak(0.0, 0.0, 3), grid)
        assert assign_bank(HoughPeak(-10.0, 2.0, 3), grid) != assign_bank(HoughPeak(0.0, 2.0, 3), grid)

    def test_outside_grid(self):
        with pytest.raises(HoughError):
            assign_bank(HoughPeak(0.0, 11.0, 1), BankGrid())

    def test_grid_follows_binning(self):
        grid = BankGrid.for_binning(HoughBinning(rho_bin=0.5, rho_max=4.0), rho_cell=1.0)
        assert grid.rho_min == -4.25 and grid.rho_max == 4.25
        assert grid.n_phi_cells == 18 and grid.n_rho_cells == 9

    def test_library_partition(self):
        g = geometry_preset("v24")
        library = build_signal_library(g, 4, np.random.default_rng(2))
        banks = build_banks(library, g)
        assert all(isinstance(b, int) for b in banks.assignments)
        assert sorted(i for members in banks.banks().values() for i in members) == [0, 1, 2, 3]
        frame = banks.to_frame()
        assert list(frame.columns) == ["pattern", "bank", "phi", "rho", "votes"]
        assert (frame["votes"] >= 1).all()

    def test_pattern_points_use_bending_coordinate(self):
        g = geometry_preset("v24")
        library = build_signal_library(g, 1, np.random.default_rng(3))
        points = pattern_points(library.patterns[0].value, g)
        assert [round(z, 9) for z, _ in points] == [1.0, 2.0, 3.0]
        assert all(abs(u) <= 2.0 for _, u in points)


class TestPlanarStudy:
    def test_track_crosses_every_row(self):
        det = PlanarDetector()
        track = trace_track(det, PlanarTrack())
        assert det.cells == 360
        assert track.popcount == 12
        rows = sorted(int(i) // det.cols for i in np.flatnonzero(track.bits))
        assert rows == list(range(12))

    def test_clean_conditions_never_move_the_peak(self):
        frame = peak_stability_study(gammas=(0.0, 0.05), etas=(1.0, 0.95), trials=3, seed=4)
        assert len(frame) == 12
        assert set(frame.columns) >= {"scan", "eta", "gamma", "trial", "phi", "rho", "votes", "unchanged"}
        clean = frame[(frame["eta"] == 1.0) & (frame["gamma"] == 0.0)]
        assert clean["unchanged"].all()
        assert frame.attrs["reference"]["votes"] >= 1

    def test_study_is_reproducible(self):
        a = peak_stability_study(gammas=(0.04,), etas=(0.96,), trials=4, seed=7)
        b = peak_stability_study(gammas=(0.04,), etas=(0.96,), trials=4, seed=7)
        assert a.equals(b)

    def test_summary_per_scan_point(self):
        frame = peak_stability_study(gammas=(0.0, 0.1), etas=(1.0,), trials=2, seed=1)
        summary = stability_summary(frame)
        assert len(summary) == 3
        assert summary["trials"].tolist() == [2, 2, 2]

    def test_needs_trials(self):
        with pytest.raises(HoughError):
            peak_stability_study(trials=0)


class TestPointParsing:
    def test_pairs_split_on_spaces_and_semicolons(self):
        assert parse_points("2,-1 2,0;2,1") == [(2.0, -1.0), (2.0, 0.0), (2.0, 1.0)]
        assert parse_points(" 0.5,1e-1 ") == [(0.5, 0.1)]

    @pytest.mark.parametrize("text", ["1,2,3", "a,b", "1", "", "  ;  "])
    def test_malformed_input(self, text):
        with pytest.raises(HoughError):
            parse_points(text)

    def test_parsed_points_feed_the_accumulator(self):
        peak = find_peak(accumulate(parse_points(" ".join(f"2,{y}" for y in range(-5, 6)))))
        assert (peak.phi, peak.rho, peak.votes) == (0.0, 2.0, 11)
