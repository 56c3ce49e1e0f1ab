import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from chiralsync.witnesses import (
    DegenerateWindowError,
    Spectrum,
    SyncMatrix,
    WindowSpec,
    collective_index,
    default_window,
    detect_communities,
    dominant_peaks,
    pearson,
    shifted_pearson,
    spectrogram,
    sync_matrix,
    window_starts,
    windowed_fourier,
)

T = np.linspace(0, 200, 20001)
W = WindowSpec(0.0, 20 * np.pi)  # ten periods of a unit-frequency tone
SIGNALS = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


def _signal(coeffs, t=T):
    a, b, c = coeffs
    return a * np.sin(t) + b * np.cos(1.7 * t) + c * np.sin(0.3 * t + 1)


def test_window_validation():
    with pytest.raises(ValueError):
        WindowSpec(0.0, 0.0)
    with pytest.raises(ValueError):
        WindowSpec(0.0, 1.0, stride=-1.0)
    with pytest.raises(ValueError):
        WindowSpec(0.0, 1.0, shift_search=-0.1)
    assert WindowSpec(0.0, 8.0).stride == 2.0


def test_default_window():
    w = default_window([1.0, 2.0], t_start=5.0)
    assert w.delta_t == pytest.approx(40 * np.pi)
    assert w.stride == pytest.approx(10 * np.pi)
    assert w.shift_search == pytest.approx(2 * np.pi)
    assert w.t_start == 5.0


def test_window_starts_fit_inside():
    w = WindowSpec(0.0, 50.0, 10.0, 5.0)
    starts = window_starts(T, w)
    np.testing.assert_allclose(starts, np.arange(0, 146, 10.0))
    assert window_starts(T[:100], w).size == 0


def test_pearson_identity():
    assert pearson(T, np.sin(T), np.sin(T), W) == pytest.approx(1.0, abs=1e-12)


def test_pearson_anti_phase():
    assert pearson(T, np.sin(T), -np.sin(T), W) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_orthogonal():
    assert abs(pearson(T, np.sin(T), np.cos(T), W)) <= 1e-6


def test_pearson_degenerate():
    with pytest.raises(DegenerateWindowError):
        pearson(T, np.ones_like(T), np.sin(T), W)


def test_pearson_window_outside_samples():
    with pytest.raises(ValueError):
        pearson(T, np.sin(T), np.sin(T), WindowSpec(190.0, 20.0))


@given(a=SIGNALS, b=SIGNALS)
def test_pearson_bounded_and_symmetric(a, b):
    x, y = _signal(a), _signal(b)
    assume(np.ptp(x[:6300]) > 1e-3 and np.ptp(y[:6300]) > 1e-3)
    p = pearson(T, x, y, W)
    assert -1.0 <= p <= 1.0
    assert p == pytest.approx(pearson(T, y, x, W), abs=1e-12)


@given(a=SIGNALS, scale=st.floats(0.01, 100), offset=st.floats(-10, 10))
def test_pearson_affine_invariance(a, scale, offset):
    x = _signal(a)
    assume(np.ptp(x[:6300]) > 1e-2)
    y = np.sin(T + 0.4)
    p = pearson(T, x, y, W)
    assert pearson(T, scale * x + offset, y, W) == pytest.approx(p, abs=1e-9)
    assert pearson(T, -scale * x + offset, y, W) == pytest.approx(-p, abs=1e-9)


@given(a=SIGNALS, b=SIGNALS, shift=st.floats(0, 6))
def test_shifted_not_below_plain(a, b, shift):
    x, y = _signal(a), _signal(b)
    assume(np.ptp(x[:7000]) > 1e-3 and np.ptp(y[:7000]) > 1e-3)
    assert shifted_pearson(T, x, y, W, shift).value >= pearson(T, x, y, W) - 1e-12


@pytest.mark.parametrize("delay", [0.7, 2.0, 4.5])
def test_shifted_recovers_delay(delay):
    a = np.sin(T)
    b = np.sin(T - delay)
    res = shifted_pearson(T, a, b, W, 2 * np.pi)
    assert res.value == pytest.approx(1.0, abs=1e-4)
    assert res.best_shift == pytest.approx(delay, abs=1e-3)


def test_shifted_identical_zero_shift():
    res = shifted_pearson(T, np.sin(T), np.sin(T), W, 3.0)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.best_shift == 0.0


def test_shifted_needs_margin():
    with pytest.raises(ValueError, match="margin"):
        shifted_pearson(T, np.sin(T), np.sin(T), WindowSpec(150.0, 45.0), 10.0)


def test_collective_identical_signals():
    sig = [np.sin(T)] * 4
    assert collective_index(T, sig, [0, 1, 2, 3], W) == pytest.approx(1.0, abs=1e-12)


def test_collective_pair_equals_pearson():
    sig = [np.sin(T), np.sin(T) + 0.3 * np.cos(2.3 * T)]
    assert collective_index(T, sig, [0, 1], W, shifted=False) == pytest.approx(pearson(T, sig[0], sig[1], W))


def test_collective_names_degenerate_node():
    sig = [np.sin(T), np.zeros_like(T), np.cos(T)]
    with pytest.raises(DegenerateWindowError, match="node 1"):
        collective_index(T, sig, [0, 1, 2], W)
    with pytest.raises(ValueError):
        collective_index(T, sig, [0], W)


def test_fourier_pure_tone_on_grid():
    eps0 = 1.0
    grid = np.linspace(0.5, 1.5, 101)
    spec = windowed_fourier(T, np.exp(-1j * eps0 * T), W, grid)
    assert grid[np.argmax(spec.magnitude)] == eps0
    assert spec.magnitude.max() == pytest.approx(1.0, abs=1e-6)


def test_fourier_constant_signal():
    grid = np.linspace(-0.5, 0.5, 11)
    spec = windowed_fourier(T, np.full(T.size, 2.5 + 0j), W, grid)
    assert grid[np.argmax(spec.magnitude)] == 0.0
    assert spec.magnitude.max() == pytest.approx(2.5)


def test_fourier_empty_grid():
    with pytest.raises(ValueError):
        windowed_fourier(T, np.sin(T), W, [])


@given(a=SIGNALS, b=SIGNALS, alpha=st.floats(-3, 3))
def test_fourier_linear(a, b, alpha):
    grid = np.linspace(0.1, 2.0, 17)
    x, y = _signal(a), _signal(b)
    lhs = windowed_fourier(T, x + alpha * y, W, grid).amplitudes
    rhs = windowed_fourier(T, x, W, grid).amplitudes + alpha * windowed_fourier(T, y, W, grid).amplitudes
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_peaks_pure_tone():
    grid = np.linspace(0.2, 3.0, 561)
    peaks = dominant_peaks(windowed_fourier(T, np.cos(1.5 * T), WindowSpec(0.0, 120.0), grid))
    assert len(peaks) == 1
    assert peaks[0][0] == pytest.approx(1.5, abs=0.01)


def test_peaks_two_tones_sorted():
    grid = np.linspace(0.2, 3.0, 561)
    sig = np.cos(1.5 * T) + 0.6 * np.cos(2.5 * T)
    peaks = dominant_peaks(windowed_fourier(T, sig, WindowSpec(0.0, 120.0), grid))
    assert [round(f, 2) for f, _ in peaks] == [1.5, 2.5]
    assert peaks[0][1] > peaks[1][1]


def test_peaks_zero_signal():
    grid = np.linspace(0.2, 3.0, 57)
    assert dominant_peaks(windowed_fourier(T, np.zeros_like(T), W, grid)) == []


def test_sync_matrix_properties():
    sig = [np.sin(T), np.sin(T - 1.0), np.cos(2.9 * T), np.zeros_like(T)]
    sm = sync_matrix(T, sig, WindowSpec(0.0, 60.0, shift_search=2 * np.pi))
    v = sm.values
    np.testing.assert_allclose(np.diag(v), 1.0)
    assert v[0, 1] == pytest.approx(1.0, abs=1e-4)
    assert np.isnan(v[0, 3]) and np.isnan(v[3, 2])
    finite = v[np.isfinite(v)]
    assert np.all(np.abs(finite) <= 1.0)
    np.testing.assert_array_equal(np.nan_to_num(v), np.nan_to_num(v.T))


def test_sync_matrix_pair_subset():
    sig = [np.sin(T), np.sin(T), np.cos(2.9 * T)]
    sm = sync_matrix(T, sig, W, shifted=False, pairs=[(1, 0)])
    assert sm.values[0, 1] == pytest.approx(1.0)
    assert np.isnan(sm.values[0, 2])


def test_communities_all_ones():
    sm = SyncMatrix(np.ones((4, 4)), W)
    assert detect_communities(sm) == ([(0, 1, 2, 3)], ())


def test_communities_block_diagonal():
    v = np.zeros((5, 5))
    v[:2, :2] = 1
    v[2:, 2:] = 1
    assert detect_communities(SyncMatrix(v, W)) == ([(0, 1), (2, 3, 4)], ())


def test_communities_singletons():
    v = np.eye(3)
    v[0, 1] = v[1, 0] = 0.95
    assert detect_communities(SyncMatrix(v, W), 0.9) == ([(0, 1)], (2,))


def test_spectrogram_matches_windowed_fourier():
    grid = np.linspace(0.2, 2.0, 37)
    sig = np.cos(1.1 * T) + 0.4 * np.sin(1.7 * T)
    w = WindowSpec(0.0, 40.0, 13.0)
    starts = window_starts(T, w)
    rows = spectrogram(T, sig, w, starts, grid)
    ref = np.array([windowed_fourier(T, sig, w.at(float(s)), grid).magnitude for s in starts])
    np.testing.assert_allclose(rows, ref, atol=1e-10)


def test_shift_scan_matches_pointwise():
    a, b = np.sin(T), np.sin(T - 0.37) + 0.2 * np.cos(2.2 * T)
    w = WindowSpec(10.0, 40.0)
    res = shifted_pearson(T, a, b, w, 3.0)
    k = round(res.best_shift / (T[1] - T[0]))
    grid_best = max(pearson(T, a, np.roll(b, -j), w) for j in range(301))
    assert res.value >= grid_best - 1e-12
    assert abs(k * (T[1] - T[0]) - res.best_shift) <= T[1] - T[0]
