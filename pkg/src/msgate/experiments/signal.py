"""Frequency and ripple extraction from sampled populations."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NoOscillation

MIN_RANGE = 0.1
HYSTERESIS = 0.3


def extract_oscillation_frequency(times, series, window: float = 0.3, iters: int = 8) -> float:
    """Angular frequency of a population that starts at a maximum, e.g. ``cos^2(w t / 2)``.

    The first minimum is located coarsely (lowest sample before the series,
    having entered the bottom 30% of its range, climbs back into the top
    30%; a small ripple cannot fake that), then refined by a least-squares parabola over a window of
    half-width ``window * t_min`` (clipped to stay symmetric inside the
    data) that is re-centred on the vertex until it settles. The window spans many
    periods of any fast ripple, which therefore averages out. Returns
    ``pi / t_min``.
    """
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(series, dtype=np.float64)
    if t.size < 5:
        raise NoOscillation("series too short")
    lo, hi = float(y.min()), float(y.max())
    if hi - lo < MIN_RANGE:
        raise NoOscillation(f"dynamic range {hi - lo:.3g} < {MIN_RANGE}")
    rng = hi - lo
    down = np.nonzero(y < lo + HYSTERESIS * rng)[0]
    i_a = down[0]
    up = np.nonzero(y[i_a:] > hi - HYSTERESIS * rng)[0]
    i_b = i_a + up[0] if up.size else y.size
    i_m = int(np.argmin(y[:i_b]))
    if i_m == y.size - 1:
        raise NoOscillation("series does not reach its first minimum")
    t_m = t[i_m]
    if t_m <= t[0]:
        raise NoOscillation("minimum at the start of the series")
    for _ in range(iters):
        half = min(window * (t_m - t[0]), t[-1] - t_m, t_m - t[0])
        sel = np.abs(t - t_m) <= half
        if sel.sum() < 5:
            break
        c2, c1, _c0 = np.polyfit(t[sel] - t_m, y[sel], 2)
        if c2 <= 0:
            break
        shift = -c1 / (2.0 * c2)
        t_m = t_m + shift
        if abs(shift) < 1e-9 * t_m:
            break
    return math.pi / (t_m - t[0])


def ripple_amplitude(times, series, period: float) -> float:
    """Largest deviation of ``series`` from its running mean over ``period``.

    Samples must be uniform; the edges (half a period each side) are dropped.
    """
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(series, dtype=np.float64)
    dt = t[1] - t[0]
    w = max(3, int(round(period / dt)) | 1)
    if y.size <= w:
        raise ValueError("series shorter than the smoothing period")
    smooth = np.convolve(y, np.ones(w) / w, mode="valid")
    core = y[w // 2: w // 2 + smooth.size]
    return float(np.abs(core - smooth).max())
