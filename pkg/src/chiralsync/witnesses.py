"""Synchronisation witnesses computed over finite time windows.

All time integrals are trapezoidal on the sample grid of the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import connected_components

__all__ = [
    "WindowSpec",
    "Spectrum",
    "SyncMatrix",
    "DegenerateWindowError",
    "default_window",
    "window_starts",
    "pearson",
    "shifted_pearson",
    "collective_index",
    "windowed_fourier",
    "spectrogram",
    "dominant_peaks",
    "sync_matrix",
    "detect_communities",
]


class DegenerateWindowError(ValueError):
    pass


@dataclass(frozen=True)
class WindowSpec:
    t_start: float
    delta_t: float
    stride: Optional[float] = None
    shift_search: float = 0.0

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.stride is None:
            object.__setattr__(self, "stride", self.delta_t / 4)
        if not self.stride > 0:
            raise ValueError("stride must be positive")
        if self.shift_search < 0:
            raise ValueError("shift_search must be non-negative")

    @property
    def t_end(self) -> float:
        return self.t_start + self.delta_t

    def at(self, t_start: float) -> "WindowSpec":
        return WindowSpec(t_start, self.delta_t, self.stride, self.shift_search)


def default_window(frequencies, t_start: float = 0.0) -> WindowSpec:
    """Twenty periods of the slowest oscillator, stride a quarter of that,
    delay search over one slowest period."""
    slow_period = 2 * np.pi / float(np.min(frequencies))
    dt = 20 * slow_period
    return WindowSpec(t_start, dt, dt / 4, slow_period)


def window_starts(times, window: WindowSpec) -> np.ndarray:
    """Window start times that fit (with the shift margin) inside ``times``."""
    last = times[-1] - window.delta_t - window.shift_search
    if last < window.t_start - 1e-12:
        return np.empty(0)
    count = int(np.floor((last - window.t_start) / window.stride + 1e-9)) + 1
    return window.t_start + window.stride * np.arange(count)


def _window_slice(times: np.ndarray, window: WindowSpec) -> slice:
    step = times[1] - times[0] if times.size > 1 else 0.0
    tol = 1e-9 * max(step, 1.0)
    if window.t_start < times[0] - tol or window.t_end > times[-1] + tol:
        raise ValueError(
            f"window [{window.t_start}, {window.t_end}] is not covered by samples on [{times[0]}, {times[-1]}]"
        )
    lo = int(np.searchsorted(times, window.t_start - tol))
    hi = int(np.searchsorted(times, window.t_end + tol, side="right"))
    if hi - lo < 3:
        raise DegenerateWindowError("window holds fewer than three samples")
    return slice(lo, hi)


def _trapezoid_weights(tw: np.ndarray) -> np.ndarray:
    d = np.diff(tw)
    w = np.zeros_like(tw)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def _pearson_scan(tw: np.ndarray, a: np.ndarray, bs: np.ndarray, w: Optional[np.ndarray] = None) -> np.ndarray:
    """Trapezoidal windowed Pearson of ``a`` against every row of ``bs``."""
    w = _trapezoid_weights(tw) if w is None else w
    span = tw[-1] - tw[0]
    da = a - (w @ a) / span
    db = bs - (bs @ w)[:, None] / span
    va = w @ (da * da)
    vb = (db * db) @ w
    if va <= 1e-28 * (w @ (a * a)) or np.any(vb <= 1e-28 * ((bs * bs) @ w)):
        raise DegenerateWindowError("degenerate window: a signal has zero variance")
    return np.clip((db @ (w * da)) / np.sqrt(va * vb), -1.0, 1.0)


def _pearson_samples(tw: np.ndarray, a: np.ndarray, b: np.ndarray, w: Optional[np.ndarray] = None) -> float:
    return float(_pearson_scan(tw, a, b[None], w)[0])


def pearson(times, a, b, window: WindowSpec) -> float:
    """Windowed Pearson correlation of two real signals sampled on ``times``."""
    times = np.asarray(times, dtype=float)
    sl = _window_slice(times, window)
    return _pearson_samples(times[sl], np.asarray(a, dtype=float)[sl], np.asarray(b, dtype=float)[sl])


@dataclass(frozen=True)
class ShiftedPearson:
    value: float
    best_shift: float


def shifted_pearson(times, a, b, window: WindowSpec, shift_search: Optional[float] = None) -> ShiftedPearson:
    """Pearson factor maximised over a delay of ``b`` relative to ``a``.

    ``a`` is read on the window, ``b`` on the window moved forward by
    ``delta`` in ``[0, shift_search]``.  The delay is scanned on the sampling
    grid, then refined locally (parabolic vertex followed by a bounded scalar
    search) with ``b`` evaluated through a cubic spline.
    """
    times = np.asarray(times, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shift_search = window.shift_search if shift_search is None else shift_search
    if shift_search < 0:
        raise ValueError("shift_search must be non-negative")
    step = times[1] - times[0]
    if window.t_end + shift_search > times[-1] + 1e-9 * max(step, 1.0):
        raise ValueError("insufficient margin after the window for the delay search")
    sl = _window_slice(times, window)
    tw = times[sl]
    aw = a[sl]
    n_shift = int(np.floor(shift_search / step + 1e-9))
    lo = sl.start
    width = sl.stop - sl.start
    weights = _trapezoid_weights(tw)
    values = _pearson_scan(tw, aw, sliding_window_view(b[lo : lo + n_shift + width], width), weights)
    k_best = int(np.argmax(values))
    best_val = float(values[k_best])
    best_shift = k_best * step
    if n_shift == 0 or best_val >= 1.0:
        return ShiftedPearson(best_val, best_shift)

    seg_lo = max(lo - 2, 0)
    seg_hi = min(lo + n_shift + width + 2, times.size)
    spline = CubicSpline(times[seg_lo:seg_hi], b[seg_lo:seg_hi])

    def neg(delta):
        return -_pearson_samples(tw, aw, spline(tw + delta), weights)

    centre = best_shift
    if 0 < k_best < n_shift:
        y0, y1, y2 = values[k_best - 1 : k_best + 2]
        curv = y0 - 2 * y1 + y2
        if curv < 0:
            centre = best_shift + 0.5 * step * (y0 - y2) / curv
    lo_b = max(0.0, centre - step)
    hi_b = min(shift_search, centre + step)
    if hi_b > lo_b:
        res = minimize_scalar(neg, bounds=(lo_b, hi_b), method="bounded", options={"xatol": 1e-10 * max(step, 1)})
        if -res.fun > best_val:
            best_val, best_shift = float(-res.fun), float(res.x)
    return ShiftedPearson(min(best_val, 1.0), best_shift)


def collective_index(times, signals: Sequence, subset: Sequence[int], window: WindowSpec, shifted: bool = True) -> float:
    """Product of pairwise (optionally delay-optimised) Pearson factors over a node subset."""
    subset = list(subset)
    if len(subset) < 2:
        raise ValueError("collective_index needs at least two nodes")
    value = 1.0
    for i, j in combinations(subset, 2):
        try:
            if shifted:
                p = shifted_pearson(times, signals[i], signals[j], window).value
            else:
                p = pearson(times, signals[i], signals[j], window)
        except DegenerateWindowError:
            bad = i if np.ptp(np.asarray(signals[i])) == 0 else j
            raise DegenerateWindowError(f"degenerate signal at node {bad}") from None
        value *= p
    return value


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    window: WindowSpec

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.amplitudes)


def windowed_fourier(times, signal, window: WindowSpec, freq_grid) -> Spectrum:
    """Windowed transform ``(1/dt) int exp(+i eps tau) s(tau) dtau``.

    The kernel sign makes a tone ``exp(-i eps0 tau)`` (how a mode of
    frequency eps0 evolves here) peak at ``+eps0``.  Real signals have a
    magnitude spectrum symmetric in eps, so the sign does not matter for them.
    """
    freq_grid = np.asarray(freq_grid, dtype=float).reshape(-1)
    if freq_grid.size == 0:
        raise ValueError("empty frequency grid")
    times = np.asarray(times, dtype=float)
    sl = _window_slice(times, window)
    tw = times[sl]
    sw = np.asarray(signal)[sl]
    kernel = np.exp(1j * np.outer(freq_grid, tw))
    amps = np.trapezoid(kernel * sw, tw, axis=1) / (tw[-1] - tw[0])
    return Spectrum(freq_grid, amps, window)


def spectrogram(times, signal, window: WindowSpec, starts, freq_grid) -> np.ndarray:
    """Magnitudes of ``windowed_fourier`` for windows at each of ``starts``.

    Shape (n_windows, n_freq).  The kernel is built once per window length
    in time relative to the window start (the start phase drops out of the
    magnitude), which assumes a uniform sampling grid.
    """
    freq_grid = np.asarray(freq_grid, dtype=float).reshape(-1)
    if freq_grid.size == 0:
        raise ValueError("empty frequency grid")
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal)
    kernels: dict = {}
    rows = []
    for start in starts:
        sl = _window_slice(times, window.at(float(start)))
        tw = times[sl]
        width = tw.size
        if width not in kernels:
            tau = tw - tw[0]
            kernels[width] = np.exp(1j * np.outer(freq_grid, tau)) * _trapezoid_weights(tau) / (tau[-1] - tau[0])
        rows.append(np.abs(kernels[width] @ signal[sl]))
    return np.array(rows).reshape(len(rows), freq_grid.size)


def dominant_peaks(spectrum: Spectrum, rel_threshold: float = 0.2, min_separation: Optional[float] = None) -> list[tuple[float, float]]:
    """Local maxima of ``|f|`` above ``rel_threshold * max|f|``, largest first.

    Maxima closer than ``min_separation`` to a stronger accepted peak are
    dropped; the default, two resolution widths ``2 * 2pi / delta_t``, removes
    the rectangular window's first sidelobes (about 22% of the main lobe).
    """
    mag = spectrum.magnitude
    if mag.size == 0 or mag.max() <= 0:
        return []
    if min_separation is None:
        min_separation = 2 * 2 * np.pi / spectrum.window.delta_t
    padded = np.concatenate(([-np.inf], mag, [-np.inf]))
    is_peak = (padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])
    idx = np.flatnonzero(is_peak & (mag >= rel_threshold * mag.max()))
    idx = idx[np.argsort(-mag[idx], kind="stable")]
    kept = []
    for k in idx:
        f = spectrum.frequencies[k]
        if all(abs(f - spectrum.frequencies[q]) > min_separation for q in kept):
            kept.append(k)
    return [(float(spectrum.frequencies[k]), float(mag[k])) for k in kept]


@dataclass
class SyncMatrix:
    values: np.ndarray
    window: WindowSpec
    shifts: Optional[np.ndarray] = None
    kind: str = "Re<a>"


def sync_matrix(
    times, signals, window: WindowSpec, shifted: bool = True, kind: str = "Re<a>", pairs=None
) -> SyncMatrix:
    """Pairwise Pearson matrix for one window.

    Degenerate pairs, and pairs left out of ``pairs`` when it is given, are NaN.
    """
    n = len(signals)
    if pairs is None:
        pairs = combinations(range(n), 2)
        vals = np.eye(n)
    else:
        pairs = [tuple(sorted(p)) for p in pairs]
        vals = np.full((n, n), np.nan)
        np.fill_diagonal(vals, 1.0)
    shifts = np.zeros((n, n)) if shifted else None
    for i, j in pairs:
        try:
            if shifted:
                # delay either way; keep the better orientation
                fw = shifted_pearson(times, signals[i], signals[j], window)
                bw = shifted_pearson(times, signals[j], signals[i], window)
                best = fw if fw.value >= bw.value else bw
                vals[i, j] = vals[j, i] = best.value
                shifts[i, j] = fw.best_shift if best is fw else -bw.best_shift
                shifts[j, i] = -shifts[i, j]
            else:
                vals[i, j] = vals[j, i] = pearson(times, signals[i], signals[j], window)
        except DegenerateWindowError:
            vals[i, j] = vals[j, i] = np.nan
    return SyncMatrix(vals, window, shifts, kind)


def detect_communities(sync: SyncMatrix, threshold: float = 0.9) -> tuple[list[tuple[int, ...]], tuple[int, ...]]:
    """Connected components of the graph ``|Pearson| >= threshold``.

    Returns the communities (size >= 2) and the unsynchronised singletons.
    """
    vals = np.nan_to_num(np.asarray(sync.values, dtype=float), nan=0.0)
    linked = np.abs(vals) >= threshold
    np.fill_diagonal(linked, False)
    _, labels = connected_components(linked.astype(np.int8), directed=False)
    communities, singles = [], []
    for lab in np.unique(labels):
        members = tuple(int(i) for i in np.flatnonzero(labels == lab))
        (communities if len(members) > 1 else singles).append(members)
    communities.sort()
    return communities, tuple(m[0] for m in sorted(singles))
