"""Adaptive choice of the filter's noise variances.

The measurement-noise variance R comes from the quiet leading samples of each
trace.  The process-noise variance Q is picked by scoring a grid of
candidates on a sample of traces (each candidate runs the full
denoise-and-score path) and averaging the per-trace winners.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .metrics import psnr
from .model import (
    DataError,
    InfinitePsnrError,
    NumericsError,
    QSelectionReport,
    RoiSpec,
    Trace,
    Volume,
    validate_volume,
)
from .rts import denoise_trace

__all__ = [
    "estimate_r",
    "default_noise_window",
    "default_q_grid",
    "select_q",
]

#: Number of points in the auto-derived candidate grid.
_GRID_POINTS = 15
#: The auto grid spans [1e-6, 1e-1] times the sampled noise floor.
_GRID_LO = 1e-6
_GRID_HI = 1e-1


def estimate_r(trace: Trace, noise_window: int) -> float:
    """Mean-square of the first ``noise_window`` samples."""
    w = int(noise_window)
    n = len(trace)
    if not 1 <= w <= n:
        raise DataError(f"noise window {w} outside [1, {n}]")
    head = trace.samples[:w]
    return float(head @ head / w)


def default_noise_window(nt: int) -> int:
    """5% of the trace length, rounded up, at least 16 samples, capped at nt."""
    nt = int(nt)
    if nt < 1:
        raise DataError("trace length must be >= 1")
    return min(nt, max(16, math.ceil(0.05 * nt)))


def default_q_grid(r_values: Sequence[float]) -> np.ndarray:
    """Log-spaced candidate grid anchored to the median noise estimate."""
    rs = np.asarray(list(r_values), dtype=np.float64)
    if rs.size == 0:
        raise DataError("need at least one noise estimate to anchor the grid")
    anchor = float(np.median(rs))
    if not (math.isfinite(anchor) and anchor > 0.0):
        raise NumericsError(
            "median noise estimate is zero; cannot anchor the candidate grid"
        )
    return np.geomspace(_GRID_LO * anchor, _GRID_HI * anchor, _GRID_POINTS)


def select_q(
    volume: Volume,
    grid: Optional[Sequence[float]] = None,
    *,
    n_sample: int = 32,
    seed: int = 0,
    noise_window: Optional[int] = None,
    roi: RoiSpec,
) -> QSelectionReport:
    """Score candidate process-noise values on sampled traces.

    Draws ``n_sample`` distinct traces with a seeded generator, denoises each
    with every grid candidate (using that trace's own noise estimate), scores
    the result's envelope PSNR over ``roi``, and keeps the per-trace argmax.
    Ties keep the lowest-index grid entry; an unbounded PSNR counts as +inf.
    The final value is the arithmetic mean of the winners.

    When ``grid`` is omitted it is derived from the sampled traces via
    :func:`default_q_grid`.
    """
    validate_volume(volume)
    roi.checked_for(volume.nt)
    n_traces = volume.nx * volume.ny
    n_sample = int(n_sample)
    if not 1 <= n_sample <= n_traces:
        raise DataError(
            f"n_sample {n_sample} outside [1, {n_traces}] for this volume"
        )
    if noise_window is None:
        noise_window = default_noise_window(volume.nt)

    rng = np.random.default_rng(seed)
    flat_ids = rng.choice(n_traces, size=n_sample, replace=False)
    ids = [(int(i) // volume.ny, int(i) % volume.ny) for i in flat_ids]

    traces = [volume.trace(x, y) for x, y in ids]
    rs = [estimate_r(t, noise_window) for t in traces]

    if grid is None:
        grid_arr = default_q_grid(rs)
    else:
        grid_arr = np.asarray(list(grid), dtype=np.float64)
        if grid_arr.size == 0:
            raise DataError("q grid must be non-empty")
        if not np.all(np.isfinite(grid_arr)) or (grid_arr <= 0.0).any():
            raise DataError("q grid values must be finite and > 0")
    grid_list = [float(g) for g in grid_arr]

    best_qs = []
    best_scores = []
    for trace, r in zip(traces, rs):
        best_q = grid_list[0]
        best_score = -math.inf
        for q_cand in grid_list:
            denoised = denoise_trace(trace, q_cand, r)
            try:
                score = psnr(denoised, roi)
            except InfinitePsnrError:
                score = math.inf
            if score > best_score:
                best_score = score
                best_q = q_cand
        best_qs.append(best_q)
        best_scores.append(best_score)

    return QSelectionReport(
        grid=tuple(grid_list),
        sampled_trace_ids=tuple(ids),
        best_q_per_trace=tuple(best_qs),
        q_final=float(np.mean(best_qs)),
        r_per_trace=tuple(rs),
        best_psnr_per_trace=tuple(best_scores),
    )
