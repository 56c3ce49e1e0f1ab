"""scikit-learn style wrappers around cluster prediction and community detection.

Both estimators label nodes: ``labels_[k]`` is a cluster index or -1.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin

from .dynamics import assemble_drift, predict_clusters, spectral_analysis
from .network import NetworkSpec
from .witnesses import WindowSpec, default_window, detect_communities, sync_matrix, window_starts

__all__ = ["SpectralClusterPredictor", "SyncCommunityDetector"]


class SpectralClusterPredictor(ClusterMixin, BaseEstimator):
    """Predict synchronised clusters of a network from its drift spectrum.

    ``fit`` takes a NetworkSpec in place of a feature matrix.
    """

    def __init__(self, slow_gap: Optional[float] = None, support_threshold: float = 0.05, horizon: Optional[float] = None):
        self.slow_gap = slow_gap
        self.support_threshold = support_threshold
        self.horizon = horizon

    def fit(self, X: NetworkSpec, y=None):
        if not isinstance(X, NetworkSpec):
            raise TypeError("SpectralClusterPredictor.fit expects a NetworkSpec")
        self.decomposition_ = spectral_analysis(assemble_drift(X))
        self.prediction_ = predict_clusters(
            self.decomposition_,
            slow_gap=self.slow_gap,
            support_threshold=self.support_threshold,
            horizon=self.horizon,
        )
        self.labels_ = self.prediction_.labels(X.n_nodes)
        self.n_nodes_ = X.n_nodes
        return self


class SyncCommunityDetector(TransformerMixin, ClusterMixin, BaseEstimator):
    """Pearson-based community detection on sampled node signals.

    ``X`` has shape (n_times, n_nodes) and is sampled on ``times``.  The
    window defaults to the last admissible window of ``default_window``
    built from ``frequencies``; one of ``window`` or ``frequencies`` is needed.
    ``transform`` returns the (n_nodes, n_nodes) Pearson matrix, so each node
    is embedded by its correlations with every other node.
    """

    def __init__(self, times=None, window: Optional[WindowSpec] = None, frequencies=None, threshold: float = 0.9, shifted: bool = True):
        self.times = times
        self.window = window
        self.frequencies = frequencies
        self.threshold = threshold
        self.shifted = shifted

    def _resolve_window(self, times: np.ndarray) -> WindowSpec:
        if self.window is not None:
            return self.window
        if self.frequencies is None:
            raise ValueError("set either window or frequencies")
        base = default_window(self.frequencies)
        starts = window_starts(times, base)
        if starts.size == 0:
            raise ValueError("signal too short for the default window")
        return base.at(float(starts[-1]))

    def _matrix(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must have shape (n_times, n_nodes)")
        times = np.asarray(self.times, dtype=float) if self.times is not None else np.arange(X.shape[0], dtype=float)
        if times.shape[0] != X.shape[0]:
            raise ValueError("times and X disagree on the number of samples")
        window = self._resolve_window(times)
        return sync_matrix(times, list(X.T), window, self.shifted)

    def fit(self, X, y=None):
        self.sync_ = self._matrix(X)
        self.communities_, self.singletons_ = detect_communities(self.sync_, self.threshold)
        labels = np.full(X.shape[1] if hasattr(X, "shape") else len(X[0]), -1)
        for k, comm in enumerate(self.communities_):
            labels[list(comm)] = k
        self.labels_ = labels
        return self

    def transform(self, X):
        return self._matrix(X).values
