"""Evaluation metrics for chaotic forecasts.

NRMSE, AMI-based embedding-delay selection, the Rosenstein largest
Lyapunov exponent, and the two power-spectral-density variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

PSD_DB_FLOOR = -300.0


@dataclass
class MetricsReport:
    nrmse: np.ndarray
    ami_delay: int | None = None
    lyapunov_target: float | None = None
    lyapunov_predicted: float | None = None
    psd1_target: np.ndarray | None = None
    psd1_predicted: np.ndarray | None = None
    psd2_target: np.ndarray | None = None
    psd2_predicted: np.ndarray | None = None


def nrmse(pred, target) -> float:
    """sqrt(sum((pred - target)^2) / sum(target^2)) for one component."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape or pred.size == 0:
        raise ValueError("pred and target must be equal-length, non-empty")
    energy = np.sum(target**2)
    if energy <= 0:
        raise ValueError("target has zero energy")
    return float(np.sqrt(np.sum((pred - target) ** 2) / energy))


def nrmse_components(pred, target) -> np.ndarray:
    """Per-component NRMSE for (T, d) series."""
    pred = np.atleast_2d(np.asarray(pred, dtype=float).T).T
    target = np.atleast_2d(np.asarray(target, dtype=float).T).T
    return np.array([nrmse(pred[:, c], target[:, c]) for c in range(target.shape[1])])


def _ami(series: np.ndarray, lag: int, bins: int) -> float:
    """Histogram-estimated average mutual information in bits at one lag."""
    x = series[:-lag] if lag > 0 else series
    y = series[lag:]
    joint, _, _ = np.histogram2d(x, y, bins=bins)
    joint /= joint.sum()
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    denom = np.outer(px, py)[nz]
    return float(np.sum(joint[nz] * np.log2(joint[nz] / denom)))


def ami_first_minimum(series, max_lag: int, bins: int = 64) -> int:
    """Smallest lag at which the AMI reaches a local minimum.

    Returns ``max_lag`` when no local minimum exists within range.
    """
    series = np.asarray(series, dtype=float)
    if series.size <= 2 * max_lag:
        raise ValueError("series too short for the requested max_lag")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if np.ptp(series) <= 0:
        raise ValueError("constant series has no mutual-information structure")
    ami = np.array([_ami(series, t, bins) for t in range(max_lag + 2)])
    for t in range(1, max_lag + 1):
        if ami[t] < ami[t - 1] and ami[t] <= ami[t + 1]:
            return t
    return max_lag


def delay_embed(series: np.ndarray, delay: int, dim: int) -> np.ndarray:
    """(T - (dim-1)*delay, dim) delay-coordinate embedding."""
    n = series.size - (dim - 1) * delay
    if n < 1:
        raise ValueError("series too short for this embedding")
    return np.stack([series[i * delay : i * delay + n] for i in range(dim)], axis=1)


def divergence_curve(
    series,
    delay: int,
    embed_dim: int = 3,
    max_steps: int | None = None,
    theiler: int | None = None,
) -> np.ndarray:
    """Mean log nearest-neighbor divergence versus expansion step.

    Each embedded point is paired with its nearest neighbor outside a
    Theiler exclusion window; entry s is the mean over pairs of
    log(distance after s steps).
    """
    series = np.asarray(series, dtype=float)
    pts = delay_embed(series, delay, embed_dim)
    n = pts.shape[0]
    if theiler is None:
        theiler = delay * embed_dim
    if max_steps is None:
        max_steps = min(500, n // 10)
    tree = cKDTree(pts)
    k_query = min(2 * theiler + 2, n)
    dists, idxs = tree.query(pts, k=k_query)
    neighbor = np.full(n, -1)
    for i in range(n):
        for d, j in zip(dists[i], idxs[i]):
            if abs(j - i) > theiler and d > 0:
                neighbor[i] = j
                break
    valid = neighbor >= 0
    if valid.sum() < 10:
        raise ValueError("too few neighbor pairs for divergence tracking")
    i_idx = np.nonzero(valid)[0]
    j_idx = neighbor[valid]
    curve = np.empty(max_steps + 1)
    for s in range(max_steps + 1):
        keep = (i_idx + s < n) & (j_idx + s < n)
        if keep.sum() < 10:
            curve = curve[:s]
            break
        d = np.linalg.norm(pts[i_idx[keep] + s] - pts[j_idx[keep] + s], axis=1)
        d = np.maximum(d, 1e-300)
        curve[s] = np.mean(np.log(d))
    return curve


def _best_linear_fit(curve: np.ndarray, fit_range: tuple[int, int]) -> float:
    """Fit the initial range, then re-fit over the best linear region."""
    lo, hi = fit_range
    hi = min(hi, len(curve))
    steps = np.arange(len(curve))
    slope0 = np.polyfit(steps[lo:hi], curve[lo:hi], 1)[0]
    # scan end (and a few start) points; keep the window whose fit has the
    # highest R^2, preferring longer windows on near-ties
    best = (-np.inf, slope0)
    min_len = max(8, (hi - lo) // 4)
    for s0 in range(lo, lo + 4):
        for s1 in range(s0 + min_len, len(curve) + 1):
            x = steps[s0:s1]
            y = curve[s0:s1]
            slope, icpt = np.polyfit(x, y, 1)
            resid = y - (slope * x + icpt)
            ss_tot = np.sum((y - y.mean()) ** 2)
            if ss_tot <= 0:
                continue
            r2 = 1.0 - np.sum(resid**2) / ss_tot
            score = r2 + 1e-4 * (s1 - s0)
            if score > best[0]:
                best = (score, slope)
    return best[1]


def lyapunov_rosenstein(
    series,
    delay: int,
    embed_dim: int = 3,
    sample_dt: float = 1.0,
    fit_range: tuple[int, int] | None = None,
    theiler: int | None = None,
    max_steps: int | None = None,
    decimate: int = 1,
) -> float:
    """Largest Lyapunov exponent (per time unit) of a scalar series."""
    series = np.asarray(series, dtype=float)
    if decimate > 1:
        series = series[::decimate]
        sample_dt = sample_dt * decimate
    curve = divergence_curve(series, delay, embed_dim, max_steps, theiler)
    if fit_range is None:
        fit_range = (0, max(10, len(curve) // 4))
    slope = _best_linear_fit(curve, fit_range)
    return slope / sample_dt


def psd_method1(series, sample_dt: float = 1.0) -> np.ndarray:
    """One-sided dB spectrum 20*log10(2|FFT(x)|/T), floored at -300 dB.

    Returns a (n_bins, 2) table of (frequency, value); frequencies are in
    cycles per time unit.
    """
    series = np.asarray(series, dtype=float)
    n = series.size
    mag = np.abs(np.fft.rfft(series)) / n
    with np.errstate(divide="ignore"):
        vals = 20.0 * np.log10(2.0 * mag)
    vals = np.maximum(vals, PSD_DB_FLOOR)
    freqs = np.fft.rfftfreq(n, d=sample_dt)
    return np.column_stack([freqs, vals])


def psd_method2(series, sample_dt: float = 1.0) -> np.ndarray:
    """One-sided linear spectrum |FFT(x)/T|^2 as a (frequency, value) table."""
    series = np.asarray(series, dtype=float)
    n = series.size
    vals = np.abs(np.fft.rfft(series) / n) ** 2
    freqs = np.fft.rfftfreq(n, d=sample_dt)
    return np.column_stack([freqs, vals])
