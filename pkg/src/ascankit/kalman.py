"""Forward scalar Kalman filter.

One step of the recursion, given the previous posterior (x, p) and the new
measurement y:

    p_prior = f * p * f + q
    gain    = p_prior * h / (h * p_prior * h + r)
    x_prior = f * x + gu
    x_post  = x_prior + gain * (y - h * x_prior)
    p_post  = (1 - gain * h) * p_prior

The posterior variance is evaluated as ``r * p_prior / (h*h*p_prior + r)``,
which is the same quantity exactly but avoids the cancellation in
``1 - gain*h`` when the gain is close to 1/h.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from .model import (
    DegenerateModelError,
    FilterParams,
    FilterTrajectory,
    Trace,
)

__all__ = ["kf_step", "kf_filter", "random_walk_params"]


def kf_step(
    x_prev_post: float,
    p_prev_post: float,
    y_k: float,
    params: FilterParams,
) -> Tuple[float, float, float, float, float]:
    """Advance the filter by one sample.

    Returns ``(x_prior, p_prior, gain, x_post, p_post)``.  Raises
    DegenerateModelError when the gain denominator ``h^2*p_prior + r`` is zero.
    """
    f, h, gu, q, r = params.f, params.h, params.gu, params.q, params.r
    p_prior = f * p_prev_post * f + q
    denom = h * p_prior * h + r
    if denom == 0.0:
        raise DegenerateModelError("gain denominator h^2*p_prior + r is zero")
    gain = p_prior * h / denom
    x_prior = f * x_prev_post + gu
    x_post = x_prior + gain * (y_k - h * x_prior)
    p_post = r * p_prior / denom
    return x_prior, p_prior, gain, x_post, p_post


def kf_filter(trace: Trace, params: FilterParams) -> FilterTrajectory:
    """Run the forward filter over a whole trace.

    The recursion starts from ``(params.x0, params.p0)`` as the posterior at
    the step before the first sample, so every sample (including the first)
    passes through one full predict/update cycle.
    """
    f, h, gu, q, r = params.f, params.h, params.gu, params.q, params.r
    x = params.x0
    p = params.p0
    ys = trace.samples.tolist()
    x_prior = []
    p_prior = []
    x_post = []
    p_post = []
    gains = []
    for k, y in enumerate(ys):
        pp = f * p * f + q
        denom = h * pp * h + r
        if denom == 0.0:
            raise DegenerateModelError(
                f"gain denominator h^2*p_prior + r is zero at sample {k}"
            )
        g = pp * h / denom
        xp = f * x + gu
        x = xp + g * (y - h * xp)
        p = r * pp / denom
        x_prior.append(xp)
        p_prior.append(pp)
        x_post.append(x)
        p_post.append(p)
        gains.append(g)
    return FilterTrajectory(
        x_prior=np.asarray(x_prior),
        p_prior=np.asarray(p_prior),
        x_post=np.asarray(x_post),
        p_post=np.asarray(p_post),
        gain=np.asarray(gains),
    )


def random_walk_params(trace: Trace, q: float, r: float) -> FilterParams:
    """Parameters for the fixed random-walk measurement model.

    The state transition and measurement maps are identity with no drift; the
    state estimate is seeded from the first sample with variance ``r``.
    """
    return FilterParams(
        f=1.0,
        h=1.0,
        gu=0.0,
        q=q,
        r=r,
        x0=float(trace.samples[0]),
        p0=float(r),
    )
