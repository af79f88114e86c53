"""Noise-variance estimation and grid-search selection of the process noise."""

import math

import numpy as np
import pytest

from ascankit.adapt import default_noise_window, default_q_grid, estimate_r, select_q
from ascankit.metrics import psnr
from ascankit.model import (
    DataError,
    InfinitePsnrError,
    NumericsError,
    RoiSpec,
    Trace,
    Volume,
)
from ascankit.rts import denoise_trace
from ascankit.synth import default_spec, synth_trace, synth_volume

ROI = RoiSpec(1408, 1664)


class TestEstimateR:
    def test_silent_window_gives_zero(self):
        assert estimate_r(Trace([0.0, 0.0, 0.0, 0.0], 1e-6), 4) == 0.0

    def test_alternating_unit_window_gives_one(self):
        assert estimate_r(Trace([1.0, -1.0, 1.0, -1.0], 1e-6), 4) == 1.0

    def test_recovers_gaussian_noise_variance(self):
        rng = np.random.default_rng(2024)
        samples = rng.normal(0.0, 0.3, size=10_000)
        r = estimate_r(Trace(samples, 1e-6), 10_000)
        assert abs(r - 0.09) <= 0.05 * 0.09

    def test_uses_only_the_head(self):
        trace = Trace([2.0, 2.0, 100.0, 100.0], 1e-6)
        assert estimate_r(trace, 2) == 4.0

    def test_window_of_one_is_first_sample_squared(self):
        assert estimate_r(Trace([-3.0, 9.0], 1e-6), 1) == 9.0

    @pytest.mark.parametrize("window", [0, -1, 5])
    def test_rejects_window_outside_trace(self, window):
        with pytest.raises(DataError, match="noise window"):
            estimate_r(Trace([1.0, 2.0, 3.0, 4.0], 1e-6), window)

    def test_scale_quadratic_for_power_of_two_factors(self):
        rng = np.random.default_rng(6)
        samples = rng.standard_normal(50)
        base = estimate_r(Trace(samples, 1e-6), 20)
        for alpha in (0.25, 2.0, 1024.0):
            scaled = estimate_r(Trace(samples * alpha, 1e-6), 20)
            assert scaled == alpha * alpha * base


class TestDefaultNoiseWindow:
    @pytest.mark.parametrize(
        "nt,expected",
        [(1, 1), (8, 8), (16, 16), (100, 16), (320, 16), (321, 17), (2048, 103)],
    )
    def test_five_percent_with_floor_and_cap(self, nt, expected):
        assert default_noise_window(nt) == expected

    def test_rejects_empty_trace_length(self):
        with pytest.raises(DataError):
            default_noise_window(0)


class TestDefaultQGrid:
    def test_spans_six_decades_below_the_anchor(self):
        grid = default_q_grid([4.0])
        assert grid.shape == (15,)
        assert grid[0] == pytest.approx(4e-6, rel=1e-12)
        assert grid[-1] == pytest.approx(4e-1, rel=1e-12)
        assert np.all(np.diff(grid) > 0)

    def test_anchors_to_the_median(self):
        assert np.array_equal(default_q_grid([100.0, 4.0, 1.0]), default_q_grid([4.0]))

    def test_rejects_empty_input(self):
        with pytest.raises(DataError):
            default_q_grid([])

    def test_zero_median_is_a_numerics_error(self):
        with pytest.raises(NumericsError, match="median"):
            default_q_grid([0.0, 0.0, 1.0])


def _example_volume():
    spec = default_spec(seed=42, noise_sigma=0.2)
    mask = {(x, y) for x in range(4) for y in range(4)}
    volume, _, _ = synth_volume(spec, 4, 4, mask)
    return volume


class TestSelectQ:
    def test_single_candidate_grid_is_final(self):
        volume = _example_volume()
        report = select_q(volume, [2.5e-4], n_sample=3, seed=1, roi=ROI)
        assert report.grid == (2.5e-4,)
        assert set(report.best_q_per_trace) == {2.5e-4}
        assert report.q_final == 2.5e-4

    def test_identical_traces_pick_identical_winners(self):
        part = synth_trace(default_spec(seed=3, noise_sigma=0.2))
        tiled = np.tile(part.trace.samples, 4)
        volume = Volume(nx=2, ny=2, nt=2048, dt=part.trace.dt, data=tiled)
        grid = np.geomspace(1e-6, 1e-2, 5)
        report = select_q(volume, grid, n_sample=4, seed=0, roi=ROI)
        assert len(set(report.best_q_per_trace)) == 1
        assert len(set(report.best_psnr_per_trace)) == 1

    def test_selection_is_deterministic_and_argmax_valid(self):
        volume = _example_volume()
        grid = np.geomspace(1e-6, 1e-1, 11)
        first = select_q(volume, grid, n_sample=8, seed=0, roi=ROI)
        second = select_q(volume, grid, n_sample=8, seed=0, roi=ROI)
        assert first.sampled_trace_ids == second.sampled_trace_ids
        assert first.best_q_per_trace == second.best_q_per_trace
        assert first.best_psnr_per_trace == second.best_psnr_per_trace
        assert first.q_final == second.q_final

        # Exhaustive check: every reported winner really is the strict argmax
        # of that trace's score curve, with ties keeping the lowest index.
        for (x, y), r, best_q, best_score in zip(
            first.sampled_trace_ids,
            first.r_per_trace,
            first.best_q_per_trace,
            first.best_psnr_per_trace,
        ):
            trace = volume.trace(x, y)
            scores = []
            for q_cand in first.grid:
                try:
                    scores.append(psnr(denoise_trace(trace, q_cand, r), ROI))
                except InfinitePsnrError:
                    scores.append(math.inf)
            winner = max(range(len(scores)), key=lambda i: (scores[i], -i))
            assert best_q == first.grid[winner]
            assert best_score == scores[winner]

    def test_final_value_is_mean_of_winners_within_grid_span(self):
        volume = _example_volume()
        grid = np.geomspace(1e-6, 1e-1, 11)
        report = select_q(volume, grid, n_sample=8, seed=0, roi=ROI)
        assert report.q_final == float(np.mean(report.best_q_per_trace))
        assert min(report.grid) <= report.q_final <= max(report.grid)
        assert all(q in report.grid for q in report.best_q_per_trace)

    def test_auto_grid_comes_from_sampled_noise(self):
        volume = _example_volume()
        report = select_q(volume, None, n_sample=8, seed=0, roi=ROI)
        want = default_q_grid(report.r_per_trace)
        assert report.grid == tuple(float(g) for g in want)

    def test_silent_trace_scores_unbounded_and_keeps_first_candidate(self):
        # An exactly silent trace denoises to itself with r = 0; its envelope
        # carries no power outside the roi, so every candidate's score is
        # +inf and the tie-break keeps the first grid entry.
        part = synth_trace(default_spec(seed=9, noise_sigma=0.2))
        data = np.concatenate([np.zeros(2048), part.trace.samples])
        volume = Volume(nx=1, ny=2, nt=2048, dt=part.trace.dt, data=data)
        grid = [1e-5, 1e-4, 1e-3]
        report = select_q(volume, grid, n_sample=2, seed=0, roi=ROI)
        silent = report.sampled_trace_ids.index((0, 0))
        assert report.best_psnr_per_trace[silent] == math.inf
        assert report.best_q_per_trace[silent] == 1e-5
        assert report.r_per_trace[silent] == 0.0

    @pytest.mark.parametrize("n_sample", [0, -2, 17])
    def test_rejects_sample_count_outside_volume(self, n_sample):
        with pytest.raises(DataError, match="n_sample"):
            select_q(_example_volume(), [1e-4], n_sample=n_sample, seed=0, roi=ROI)

    def test_rejects_empty_grid(self):
        with pytest.raises(DataError, match="non-empty"):
            select_q(_example_volume(), [], n_sample=2, seed=0, roi=ROI)

    @pytest.mark.parametrize("bad", [0.0, -1e-4, float("nan"), float("inf")])
    def test_rejects_nonpositive_or_nonfinite_candidates(self, bad):
        with pytest.raises(DataError, match="grid"):
            select_q(_example_volume(), [1e-4, bad], n_sample=2, seed=0, roi=ROI)

    def test_rejects_roi_past_end_of_trace(self):
        with pytest.raises(DataError):
            select_q(
                _example_volume(),
                [1e-4],
                n_sample=2,
                seed=0,
                roi=RoiSpec(0, 4096),
            )
