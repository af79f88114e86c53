"""Envelope extraction, image reconstruction, and PSNR scoring."""

from __future__ import annotations

import math

import numpy as np

from .model import (
    DataError,
    EnvelopeImage,
    InfinitePsnrError,
    RoiSpec,
    Trace,
    Volume,
    validate_volume,
)

__all__ = ["envelope", "reconstruct", "psnr", "psnr_gain"]


def envelope(trace: Trace) -> Trace:
    """Magnitude of the discrete analytic signal of a trace.

    Built in the frequency domain: positive frequencies doubled, negative
    frequencies zeroed, DC (and Nyquist for even lengths) kept as is.
    """
    s = trace.samples
    n = s.size
    if n < 2:
        raise DataError("envelope needs at least 2 samples")
    spectrum = np.fft.fft(s)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1 : n // 2] = 2.0
    else:
        weights[1 : (n + 1) // 2] = 2.0
    analytic = np.fft.ifft(spectrum * weights)
    return Trace(np.abs(analytic), trace.dt)


def reconstruct(volume: Volume) -> EnvelopeImage:
    """Project a volume to an image: pixel (x, y) is that trace's envelope peak."""
    validate_volume(volume)
    pixels = np.empty((volume.nx, volume.ny))
    for x in range(volume.nx):
        for y in range(volume.ny):
            pixels[x, y] = envelope(volume.trace(x, y)).samples.max()
    return EnvelopeImage(nx=volume.nx, ny=volume.ny, pixels=pixels)


def psnr(trace: Trace, roi: RoiSpec) -> float:
    """Peak-signal-to-noise ratio of a trace's envelope, in dB.

    The signal level is the envelope maximum inside the ROI; the noise power
    is the mean-square envelope outside it.  Zero noise power is reported as
    InfinitePsnrError rather than a value; a zero peak over non-zero noise
    yields ``-inf``.
    """
    n = len(trace)
    roi.checked_for(n)
    if roi.t_lo == 0 and roi.t_hi == n:
        raise DataError("roi covers the whole trace; no noise region remains")
    env = envelope(trace).samples
    inside = env[roi.t_lo : roi.t_hi]
    outside = np.concatenate((env[: roi.t_lo], env[roi.t_hi :]))
    noise_power = float(outside @ outside / outside.size)
    if noise_power == 0.0:
        raise InfinitePsnrError("noise power outside the roi is zero")
    peak = float(inside.max())
    if peak == 0.0:
        return float("-inf")
    return 10.0 * math.log10(peak * peak / noise_power)


def psnr_gain(before: Trace, after: Trace, roi: RoiSpec) -> float:
    """PSNR improvement of ``after`` over ``before`` on a shared ROI, in dB."""
    if len(before) != len(after):
        raise DataError(
            f"traces differ in length: {len(before)} vs {len(after)}"
        )
    return psnr(after, roi) - psnr(before, roi)
