"""Mean-amplitude dynamics and spectral analysis of the drift matrix.

The mean amplitudes obey ``d<a>/dt = M <a>`` with

    M[k, k] = (w_k - Gamma_k) / 2 - i eps_k
    M[r, s] = -gamma            for every edge s -> r

so row index is the driven node and column index the driver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .network import NetworkSpec, degree_profile, require_valid

__all__ = [
    "DriftMatrix",
    "SpectralDecomposition",
    "MeanTrajectory",
    "Cluster",
    "ClusterPrediction",
    "assemble_drift",
    "propagate_means",
    "analytic_dimer",
    "analytic_trimer",
    "spectral_analysis",
    "predict_clusters",
    "matched_support_threshold",
]

ODE_RTOL = 1e-10
# above this eigenvector condition number the eigen path is not trusted
CONDITION_LIMIT = 1e8


@dataclass(frozen=True)
class DriftMatrix:
    m: np.ndarray
    spec: NetworkSpec

    @property
    def n(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of a drift matrix, slowest-decaying first.

    ``vectors[:, k]`` is the unit-norm right eigenvector of ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray
    condition: float
    diagonalizable: bool
    stability: str
    residuals: np.ndarray

    @property
    def decay_rates(self) -> np.ndarray:
        return -self.values.real

    @property
    def frequencies(self) -> np.ndarray:
        return -self.values.imag

    @property
    def lifetimes(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.values.real < 0, -1.0 / self.values.real, np.inf)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(v.real), float(v.imag)] for v in self.values],
            "frequencies": self.frequencies.tolist(),
            "lifetimes": [float(x) if np.isfinite(x) else None for x in self.lifetimes],
            "squared_components": (np.abs(self.vectors) ** 2).T.tolist(),
            "condition": float(self.condition),
            "diagonalizable": bool(self.diagonalizable),
            "stability": self.stability,
        }


@dataclass(frozen=True)
class MeanTrajectory:
    times: np.ndarray
    amplitudes: np.ndarray  # (n_times, n_nodes) complex
    method: str = "eigen"

    def signal(self, node: int) -> np.ndarray:
        return self.amplitudes[:, node].real


@dataclass(frozen=True)
class Cluster:
    nodes: tuple[int, ...]
    mode: int
    frequency: float
    lifetime: float


@dataclass(frozen=True)
class ClusterPrediction:
    clusters: list[Cluster]
    unassigned: tuple[int, ...]
    slow_modes: tuple[int, ...]
    thresholds: dict = field(default_factory=dict)
    degenerate: bool = False

    def labels(self, n_nodes: int) -> np.ndarray:
        """Per-node cluster index, -1 for unassigned nodes."""
        out = np.full(n_nodes, -1, dtype=int)
        for k, c in enumerate(self.clusters):
            out[list(c.nodes)] = k
        return out

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {
                    "nodes": list(c.nodes),
                    "mode": c.mode,
                    "frequency": c.frequency,
                    "lifetime": c.lifetime if np.isfinite(c.lifetime) else None,
                }
                for c in self.clusters
            ],
            "unassigned": list(self.unassigned),
            "slow_modes": list(self.slow_modes),
            "thresholds": self.thresholds,
            "degenerate": self.degenerate,
        }


def assemble_drift(spec: NetworkSpec) -> DriftMatrix:
    profile = degree_profile(spec)
    m = -spec.gamma * spec.adjacency.T.astype(complex)
    m[np.diag_indices_from(m)] = 0.5 * (spec.pump_rates - profile.gamma_total) - 1j * spec.frequencies
    m.flags.writeable = False
    return DriftMatrix(m, spec)


def _as_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise ValueError("empty time grid")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def _integrate_linear(m: np.ndarray, y0: np.ndarray, t: np.ndarray) -> np.ndarray:
    if t.size == 1 and t[0] == 0.0:
        return y0[None, :].copy()
    sol = solve_ivp(
        lambda _t, y: m @ y,
        (0.0, t[-1]),
        y0.astype(complex),
        method="DOP853",
        t_eval=t,
        rtol=ODE_RTOL,
        atol=ODE_RTOL * max(np.abs(y0).max(), 1e-300),
    )
    if not sol.success:
        raise RuntimeError(f"mean-amplitude integration failed: {sol.message}")
    return sol.y.T


def propagate_means(drift: DriftMatrix, a0, times, method: str = "auto") -> MeanTrajectory:
    """Solve ``d<a>/dt = M <a>`` on a time grid starting at 0.

    Args:
        drift: drift matrix.
        a0: initial complex amplitudes, one per node.
        times: strictly increasing grid, ``times[0] == 0``.
        method: ``"eigen"`` (modal expansion), ``"ode"`` (DOP853 at rtol 1e-10)
            or ``"auto"`` which takes the eigen path unless the eigenvector
            basis is ill-conditioned.
    """
    t = _as_times(times)
    if t[0] != 0.0:
        raise ValueError("times must start at 0")
    a0 = np.asarray(a0, dtype=complex).reshape(-1)
    if a0.size != drift.n:
        raise ValueError(f"a0 has {a0.size} entries, network has {drift.n} nodes")
    if method not in ("auto", "eigen", "ode"):
        raise ValueError(f"unknown method {method!r}")

    if method != "ode":
        vals, vecs = np.linalg.eig(drift.m)
        cond = np.linalg.cond(vecs)
        if cond < CONDITION_LIMIT:
            coeffs = np.linalg.solve(vecs, a0)
            amps = (np.exp(np.outer(t, vals)) * coeffs) @ vecs.T
            return MeanTrajectory(t, amps, "eigen")
        if method == "eigen":
            raise np.linalg.LinAlgError(f"eigenvector basis ill-conditioned (cond={cond:.3g})")
    return MeanTrajectory(t, _integrate_linear(drift.m, a0, t), "ode")


def _transfer(lam_src, lam_tgt, t):
    """Response of a target node to a unit driver amplitude through one edge.

    Integral of exp(lam_tgt (t - s)) exp(lam_src s) ds over [0, t], i.e.
    (e^{lam_src t} - e^{lam_tgt t}) / (lam_src - lam_tgt), with the
    confluent limit t e^{lam t} when the two rates coincide.
    """
    d = lam_src - lam_tgt
    if abs(d) < 1e-12 * max(abs(lam_src), abs(lam_tgt), 1.0):
        return t * np.exp(lam_tgt * t)
    return (np.exp(lam_src * t) - np.exp(lam_tgt * t)) / d


def analytic_dimer(spec: NetworkSpec, a0, t):
    """Closed-form mean amplitudes of the oriented dimer 0 -> 1.

    Returns the pair ``(<a_0(t)>, <a_1(t)>)``; ``t`` may be an array.
    """
    if spec.n_nodes != 2 or spec.edges != [(0, 1)]:
        raise ValueError("analytic_dimer needs the oriented dimer 0 -> 1")
    g = spec.gamma
    w1, w2 = spec.pump_rates
    e1, e2 = spec.frequencies
    t = np.asarray(t, dtype=float)
    a1_0, a2_0 = np.asarray(a0, dtype=complex)
    decay1 = np.exp(-0.5 * t * (g - w1 + 2j * e1))
    decay2 = np.exp(-0.5 * t * (g - w2 + 2j * e2))
    denom = (w1 - w2) - 2j * (e1 - e2)
    if abs(denom) < 1e-12 * max(abs(w1) + abs(e1), 1.0):
        cross = -g * t * decay2
    else:
        cross = 2 * g * (decay2 - decay1) / denom
    return decay1 * a1_0, decay2 * a2_0 + cross * a1_0


def analytic_trimer(kind: str, spec: NetworkSpec, a0, t):
    """Closed-form mean amplitudes of the trimer-out / trimer-in motifs.

    The central node is index 1.  ``kind="out"`` is 1 -> 0, 1 -> 2;
    ``kind="in"`` is 0 -> 1, 2 -> 1.  All nodes share one pump rate.
    """
    expected = {"out": [(1, 0), (1, 2)], "in": [(0, 1), (2, 1)]}
    if kind not in expected:
        raise ValueError(f"kind must be 'out' or 'in', got {kind!r}")
    if spec.n_nodes != 3 or sorted(spec.edges) != expected[kind]:
        raise ValueError(f"spec is not the trimer-{kind} motif")
    if np.ptp(spec.pump_rates) != 0:
        raise ValueError("analytic_trimer assumes a uniform pump rate")
    g = spec.gamma
    w = spec.pump_rates[0]
    e = spec.frequencies
    t = np.asarray(t, dtype=float)
    a = np.asarray(a0, dtype=complex)
    # outer nodes have one edge, the centre two
    lam = np.array([-0.5 * (g - w + 2j * e[0]), -0.5 * (2 * g - w + 2j * e[1]), -0.5 * (g - w + 2j * e[2])])
    free = [np.exp(lam[k] * t) * a[k] for k in range(3)]
    if kind == "out":
        return (
            free[0] - g * _transfer(lam[1], lam[0], t) * a[1],
            free[1],
            free[2] - g * _transfer(lam[1], lam[2], t) * a[1],
        )
    return (
        free[0],
        free[1] - g * _transfer(lam[0], lam[1], t) * a[0] - g * _transfer(lam[2], lam[1], t) * a[2],
        free[2],
    )


def spectral_analysis(drift: DriftMatrix) -> SpectralDecomposition:
    m = np.asarray(drift.m)
    try:
        vals, vecs = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigen-solver did not converge: {exc}") from exc
    # stable sort on (-Re, Im) so ties are reproducible
    order = np.lexsort((vals.imag, -vals.real))
    vals = vals[order]
    vecs = vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    norm_m = np.linalg.norm(m, 2)
    residuals = np.linalg.norm(m @ vecs - vecs * vals, axis=0)
    if np.any(residuals > 1e-9 * max(norm_m, 1e-300)):
        raise np.linalg.LinAlgError(f"eigenpair residual {residuals.max():.3g} exceeds 1e-9 ||M||")
    cond = float(np.linalg.cond(vecs))
    tol = 1e-12 * norm_m
    top = vals.real.max()
    if top < -tol:
        stability = "stable"
    elif top <= tol:
        stability = "marginal"
    else:
        stability = "unstable"
    return SpectralDecomposition(vals, vecs, cond, cond < CONDITION_LIMIT, stability, residuals)


def _slow_mode_count(decay: np.ndarray, slow_gap: Optional[float]) -> tuple[int, bool]:
    """Number of leading (slowest) modes considered slow, and a degeneracy flag."""
    n = decay.size
    if n == 1:
        return 1, True
    if slow_gap is not None:
        span = abs(decay[-1])
        return int(np.sum(decay - decay[0] <= slow_gap * span)), False
    floor = 1e-12 * max(np.abs(decay).max(), 1e-300)
    shifted = np.maximum(decay - min(decay[0], 0.0), 0.0) + floor
    ratios = shifted[1:] / shifted[:-1]
    k = int(np.argmax(ratios))
    if ratios[k] <= 1.0 + 1e-9:
        return n, True
    return k + 1, False


def matched_support_threshold(pearson_threshold: float) -> float:
    """Weight ratio at which a second tone drags a Pearson factor below ``pearson_threshold``.

    A signal ``s1 + r s2`` (unit tones, distinct frequencies) correlates with
    ``s1`` at about ``1/sqrt(1 + r^2)``, so the matching ratio is ``1/p^2 - 1``.
    """
    if not 0 < pearson_threshold <= 1:
        raise ValueError("pearson_threshold must lie in (0, 1]")
    return 1.0 / pearson_threshold**2 - 1.0


def predict_clusters(
    decomp: SpectralDecomposition,
    slow_gap: Optional[float] = None,
    support_threshold: float = 0.05,
    support_floor: float = 1e-12,
    rate_tol: float = 5e-2,
    horizon: Optional[float] = None,
    a0=None,
) -> ClusterPrediction:
    """Predict synchronised clusters from the slow pseudo-normal modes.

    Slow modes are those above the largest relative gap in the sorted decay
    rates, or, when ``slow_gap`` is given, every mode whose decay rate is
    within ``slow_gap * |fastest decay rate|`` of the slowest one.

    A node's late-time signal is governed by the slowest mode that has a
    non-negligible component on it (weight ``|v_i|^2 / max_j |v_j|^2`` above
    ``support_floor``).  Modes whose decay rates agree within
    ``rate_tol * (slowest decay rate)`` compete on equal footing: the node goes
    to the heaviest of them unless the runner-up carries at least
    ``support_threshold`` of its weight, in which case the node is frustrated
    and left unassigned.  Nodes whose governing mode is not slow, and modes
    governing a single node, produce no cluster.

    With ``horizon`` set, the prediction targets a finite time instead of
    t -> infinity: node i's weight on mode m is
    ``|v_im c_m|^2 exp(2 Re(lambda_m) horizon)`` with ``c = V^{-1} a0``
    (``a0`` defaults to all ones).  Every mode is eligible, the node goes to
    its heaviest mode and is frustrated when the runner-up reaches
    ``support_threshold`` of that weight.  This resolves nearly degenerate
    decay rates that have not separated by the horizon.
    """
    vals = decomp.values
    n_nodes, n_modes = decomp.vectors.shape
    decay = -vals.real
    owner = np.full(n_nodes, -1)

    if horizon is not None:
        init = np.ones(n_nodes, dtype=complex) if a0 is None else np.asarray(a0, dtype=complex)
        coeff = np.linalg.lstsq(decomp.vectors, init, rcond=None)[0]
        weights = np.abs(decomp.vectors * coeff) ** 2 * np.exp(2 * vals.real * float(horizon))
        slow = set(range(n_modes))
        degenerate = False
        for i in range(n_nodes):
            row = weights[i]
            if not row.max() > 0:
                continue
            ranked = np.argsort(-row, kind="stable")
            if ranked.size > 1 and row[ranked[1]] >= support_threshold * row[ranked[0]]:
                continue
            owner[i] = ranked[0]
    else:
        n_slow, degenerate = _slow_mode_count(decay, slow_gap)
        slow = set(range(n_slow))

        weights = np.abs(decomp.vectors) ** 2
        weights = weights / weights.max(axis=0, keepdims=True)
        scale = max(abs(decay[0]), 1e-12 * max(np.abs(vals).max(), 1e-300))
        tie = rate_tol * scale

        for i in range(n_nodes):
            cands = np.flatnonzero(weights[i] >= support_floor)
            if cands.size == 0:
                continue
            best_rate = decay[cands].min()
            group = cands[decay[cands] <= best_rate + tie]
            ranked = group[np.argsort(-weights[i, group], kind="stable")]
            if ranked.size > 1 and weights[i, ranked[1]] >= support_threshold * weights[i, ranked[0]]:
                continue
            if ranked[0] in slow:
                owner[i] = ranked[0]

    clusters = []
    for mode in sorted(set(owner[owner >= 0].tolist())):
        members = tuple(int(i) for i in np.flatnonzero(owner == mode))
        if len(members) < 2:
            owner[list(members)] = -1
            continue
        lam = vals[mode]
        lifetime = -1.0 / lam.real if lam.real < 0 else np.inf
        clusters.append(Cluster(members, int(mode), float(-lam.imag), float(lifetime)))
    unassigned = tuple(int(i) for i in np.flatnonzero(owner < 0))
    return ClusterPrediction(
        clusters,
        unassigned,
        tuple(sorted(slow)),
        {
            "slow_gap": slow_gap,
            "support_threshold": support_threshold,
            "support_floor": support_floor,
            "rate_tol": rate_tol,
            "horizon": horizon,
        },
        degenerate or not clusters,
    )


def default_initial_amplitudes(n: int) -> np.ndarray:
    return np.ones(n, dtype=complex)
