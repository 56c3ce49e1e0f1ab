"""Scenario configuration, end-to-end pipelines and figure recipes.

A scenario is a JSON document::

    {
      "name": "dimer",
      "network": {...},            # NetworkSpec document, a motif or a random draw
      "initial_amplitudes": null,  # list of numbers or [re, im] pairs; default all ones
      "time": {"horizon": 2000.0, "sample_step": null},
      "window": null,              # {"delta_t", "stride", "shift_search", "t_start"}
      "analyses": {...},           # see Analyses
      "time_unit": 1.0,            # scaled time = t * time_unit in curve exports
      "output_dir": "out",
      "seed": null
    }

``network`` may hold ``{"motif": name, "frequencies", "pump_rates", "gamma",
...}`` or ``{"random": {"n", "edge_prob", "eps_min", "eps_max", "gamma",
"pump_rate", "require_connected", "equal_spacing"}}``; the random draw uses
the scenario seed.
"""

from __future__ import annotations

import time as _time
from dataclasses import asdict, dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import exports
from .discord import DiscordCurve, discord_trajectory
from .dynamics import (
    ClusterPrediction,
    MeanTrajectory,
    assemble_drift,
    default_initial_amplitudes,
    matched_support_threshold,
    predict_clusters,
    propagate_means,
    spectral_analysis,
)
from .moments import (
    CovarianceTrajectory,
    assemble_noise,
    covariance_metadata,
    propagate_covariance,
    spec_hash,
)
from .network import (
    InvalidNetworkError,
    NetworkSpec,
    motif,
    random_oriented_network,
    require_valid,
)
from .witnesses import (
    DegenerateWindowError,
    Spectrum,
    SyncMatrix,
    WindowSpec,
    collective_index,
    default_window,
    detect_communities,
    spectrogram,
    sync_matrix,
    window_starts,
    windowed_fourier,
)

__all__ = [
    "ScenarioError",
    "Analyses",
    "Scenario",
    "SyncReport",
    "load_scenario",
    "run_scenario",
    "figure_scenarios",
    "reproduce_figure",
    "FIGURE_IDS",
]

FIGURE_IDS = (2, 3, 4, 5, 6, 7, 8)
SIGNAL_KINDS = {"mean": "Re<a>", "x2": "<x^2>", "xy": "<xy+yx>"}
CLUSTER_MODES = ("asymptotic", "horizon")
SAMPLES_PER_PERIOD = 20

GAMMA = 0.05
PUMP = 0.9 * GAMMA
NETWORK_SEED = 13


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario document."""


@dataclass(frozen=True)
class Analyses:
    """Which pipeline stages run.

    ``pairs`` restricts Pearson curves (default: every pair).  ``signals``
    picks the witnessed series: ``mean`` (Re<a_k>), ``x2`` (<x_k^2>) and
    ``xy`` (<x_k y_k + y_k x_k>); the last two need the covariance.
    """

    means: bool = True
    covariance: bool = False
    pearson: bool = False
    shifted: bool = True
    pairs: Optional[tuple] = None
    signals: tuple = ("mean",)
    fourier: bool = False
    fourier_nodes: Optional[tuple] = None
    discord_pairs: tuple = ()
    clusters: bool = False
    cluster_mode: str = "asymptotic"
    sync_threshold: float = 0.9
    collective: bool = False

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "Analyses":
        data = dict(data or {})
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ScenarioError(f"unknown analyses keys: {sorted(unknown)}")
        for key in ("pairs", "discord_pairs"):
            if data.get(key) is not None:
                data[key] = tuple(tuple(int(x) for x in p) for p in data[key])
        for key in ("signals", "fourier_nodes"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def needs_covariance(self) -> bool:
        return self.covariance or bool(self.discord_pairs) or any(s != "mean" for s in self.signals)


@dataclass(frozen=True)
class Scenario:
    network: dict
    horizon: float
    sample_step: Optional[float] = None
    initial_amplitudes: Optional[tuple] = None
    window: Optional[dict] = None
    analyses: Analyses = field(default_factory=Analyses)
    time_unit: float = 1.0
    output_dir: Optional[str] = None
    seed: Optional[int] = None
    name: str = "scenario"

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("scenario document must be a JSON object")
        try:
            t = data["time"]
            amps = data.get("initial_amplitudes")
            if amps is not None:
                amps = tuple(complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in amps)
            scenario = cls(
                network=data["network"],
                horizon=float(t["horizon"]),
                sample_step=None if t.get("sample_step") is None else float(t["sample_step"]),
                initial_amplitudes=amps,
                window=data.get("window"),
                analyses=Analyses.from_dict(data.get("analyses")),
                time_unit=float(data.get("time_unit", 1.0)),
                output_dir=data.get("output_dir"),
                seed=data.get("seed"),
                name=str(data.get("name", "scenario")),
            )
        except KeyError as exc:
            raise ScenarioError(f"scenario is missing key {exc}") from None
        except TypeError as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from None
        return scenario

    def to_dict(self) -> dict:
        amps = None
        if self.initial_amplitudes is not None:
            amps = [[complex(a).real, complex(a).imag] for a in self.initial_amplitudes]
        return {
            "name": self.name,
            "network": self.network,
            "initial_amplitudes": amps,
            "time": {"horizon": self.horizon, "sample_step": self.sample_step},
            "window": self.window,
            "analyses": self.analyses.to_dict(),
            "time_unit": self.time_unit,
            "output_dir": self.output_dir,
            "seed": self.seed,
        }

    def build_network(self) -> NetworkSpec:
        try:
            return self._build_network()
        except (ScenarioError, InvalidNetworkError):
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ScenarioError(f"bad network block: {exc}") from None

    def _build_network(self) -> NetworkSpec:
        doc = self.network
        if not isinstance(doc, dict):
            raise ScenarioError("network must be an object")
        if "random" in doc:
            params = dict(doc["random"])
            equal = params.pop("equal_spacing", False)
            if self.seed is None:
                raise ScenarioError("a random network needs a scenario seed")
            spec = random_oriented_network(seed=int(self.seed), **params)
            if equal:
                freqs = np.linspace(params["eps_min"], params["eps_max"], spec.n_nodes)
                spec = spec.with_params(frequencies=freqs)
            return spec
        if "motif" in doc:
            params = dict(doc)
            name = params.pop("motif")
            if "branch_lens" in params:
                params["branch_lens"] = tuple(params["branch_lens"])
            return motif(name, params.pop("frequencies"), params.pop("pump_rates"), params.pop("gamma"), **params)
        return NetworkSpec.from_dict(doc)

    def validate(self, spec: NetworkSpec) -> None:
        require_valid(spec)
        n = spec.n_nodes
        if not self.horizon > 0:
            raise ScenarioError("horizon must be positive")
        if self.sample_step is not None and not self.sample_step > 0:
            raise ScenarioError("sample_step must be positive")
        if self.initial_amplitudes is not None and len(self.initial_amplitudes) != n:
            raise ScenarioError(f"{len(self.initial_amplitudes)} initial amplitudes for {n} nodes")
        a = self.analyses
        for i, j in tuple(a.pairs or ()) + tuple(a.discord_pairs):
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ScenarioError(f"invalid node pair ({i},{j}) for {n} nodes")
        for k in a.fourier_nodes or ():
            if not 0 <= k < n:
                raise ScenarioError(f"invalid Fourier node {k}")
        bad = set(a.signals) - set(SIGNAL_KINDS)
        if bad:
            raise ScenarioError(f"unknown signals {sorted(bad)}")
        if a.cluster_mode not in CLUSTER_MODES:
            raise ScenarioError(f"cluster_mode must be one of {CLUSTER_MODES}")

    def time_grid(self, spec: NetworkSpec) -> np.ndarray:
        step = self.sample_step
        if step is None:
            step = 2 * np.pi / float(spec.frequencies.max()) / SAMPLES_PER_PERIOD
        count = int(np.ceil(self.horizon / step - 1e-9))
        return np.linspace(0.0, self.horizon, count + 1)

    def window_spec(self, spec: NetworkSpec) -> WindowSpec:
        if self.window is None:
            return default_window(spec.frequencies)
        w = self.window
        return WindowSpec(float(w.get("t_start", 0.0)), float(w["delta_t"]), w.get("stride"), float(w.get("shift_search", 0.0)))


def load_scenario(path) -> Scenario:
    try:
        data = exports.read_json(path)
    except ValueError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    return Scenario.from_dict(data)


@dataclass
class SyncReport:
    """Everything a scenario run produced, in memory."""

    scenario: Scenario
    spec: NetworkSpec
    means: MeanTrajectory
    covariance: Optional[CovarianceTrajectory] = None
    window: Optional[WindowSpec] = None
    window_starts: np.ndarray = field(default_factory=lambda: np.empty(0))
    sync_matrices: dict = field(default_factory=dict)  # signal kind -> list[SyncMatrix]
    pearson_curves: dict = field(default_factory=dict)  # signal kind -> (pairs, (n_windows, n_pairs))
    spectrograms: dict = field(default_factory=dict)  # node -> (n_windows, n_freq) magnitudes
    freq_grid: Optional[np.ndarray] = None
    late_spectra: dict = field(default_factory=dict)  # node -> Spectrum
    prediction: Optional[ClusterPrediction] = None
    late_sync: Optional[SyncMatrix] = None
    communities: list = field(default_factory=list)
    singletons: tuple = ()
    collective: dict = field(default_factory=dict)  # community -> per-window values
    discord: list = field(default_factory=list)
    scenario_hash: str = ""
    wall_clock: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def summary(self) -> dict:
        """Deterministic digest (no timing) written to ``summary.json``."""
        out = {
            "scenario": self.scenario.name,
            "scenario_hash": self.scenario_hash,
            "network": self.spec.to_dict(),
            "conventions": {
                "signal": "Re<a_k>",
                "pearson": "windowed, trapezoidal, delay-maximised when shifted",
                "discord": "D(i->j) measures node i",
                "time_unit": self.scenario.time_unit,
                "node_indexing": "0-based",
            },
            "n_samples": int(self.means.times.size),
            "horizon": float(self.means.times[-1]),
        }
        if self.window is not None:
            out["window"] = {
                "delta_t": self.window.delta_t,
                "stride": self.window.stride,
                "shift_search": self.window.shift_search,
                "n_windows": int(self.window_starts.size),
            }
        if self.pearson_curves:
            out["late_pearson"] = {
                kind: {f"{i}-{j}": _finite(vals[-1, k]) for k, (i, j) in enumerate(pairs)}
                for kind, (pairs, vals) in self.pearson_curves.items()
                if vals.shape[0]
            }
        if self.late_spectra:
            out["late_peak_frequency"] = {
                str(k): float(s.frequencies[np.argmax(s.magnitude)]) for k, s in self.late_spectra.items()
            }
        if self.prediction is not None:
            out["predicted_clusters"] = self.prediction.to_dict()
        if self.late_sync is not None:
            out["detected_communities"] = [list(c) for c in self.communities]
            out["unsynchronised"] = list(self.singletons)
        if self.discord:
            out["discord_late"] = {
                f"{c.i}-{c.j}": {"forward": float(c.forward[-1]), "backward": float(c.backward[-1])}
                for c in self.discord
            }
            out["discord_max"] = {
                f"{c.i}-{c.j}": {"forward": float(c.forward.max()), "backward": float(c.backward.max())}
                for c in self.discord
            }
        return out


def _finite(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _signals(kind: str, means: MeanTrajectory, cov: Optional[CovarianceTrajectory], n: int) -> list:
    if kind == "mean":
        return [means.signal(k) for k in range(n)]
    q = cov.quadratures()
    if kind == "x2":
        return [q[:, 2 * k, 2 * k] for k in range(n)]
    return [2.0 * q[:, 2 * k, 2 * k + 1] for k in range(n)]


def _freq_grid(spec: NetworkSpec, window: WindowSpec) -> np.ndarray:
    resolution = 2 * np.pi / window.delta_t
    lo = 0.5 * float(spec.frequencies.min())
    hi = 1.25 * float(spec.frequencies.max())
    return np.arange(lo, hi + resolution / 16, resolution / 8)


def _with_context(exc: Exception, name: str) -> Exception:
    try:
        wrapped = type(exc)(f"[scenario {name}] {exc}")
    except Exception:
        return exc
    return wrapped


def run_scenario(scenario: Scenario, output_dir=None, write: bool = True) -> SyncReport:
    """Run every flagged stage, then write the exports under ``output_dir``.

    Data files are deterministic for a fixed scenario; wall-clock timings go
    to ``timing.json`` only.
    """
    try:
        return _run(scenario, output_dir, write)
    except (ScenarioError, InvalidNetworkError):
        raise
    except Exception as exc:
        wrapped = _with_context(exc, scenario.name)
        if wrapped is exc:
            raise
        raise wrapped from exc


def _run(scenario: Scenario, output_dir, write: bool) -> SyncReport:
    clock = {}
    t0 = _time.perf_counter()
    spec = scenario.build_network()
    scenario.validate(spec)
    a = scenario.analyses
    n = spec.n_nodes
    times = scenario.time_grid(spec)
    drift = assemble_drift(spec)
    a0 = (
        default_initial_amplitudes(n)
        if scenario.initial_amplitudes is None
        else np.asarray(scenario.initial_amplitudes, dtype=complex)
    )
    means = propagate_means(drift, a0, times)
    clock["means"] = _time.perf_counter() - t0

    report = SyncReport(scenario, spec, means, scenario_hash=spec_hash(spec))
    if a.needs_covariance:
        t1 = _time.perf_counter()
        report.covariance = propagate_covariance(drift, assemble_noise(spec), times)
        clock["covariance"] = _time.perf_counter() - t1

    needs_windows = a.pearson or a.fourier or a.clusters or a.collective
    if needs_windows:
        window = scenario.window_spec(spec)
        starts = window_starts(times, window)
        if starts.size == 0:
            raise ScenarioError("horizon too short for a single analysis window")
        report.window, report.window_starts = window, starts
        late = window.at(float(starts[-1]))

    if a.pearson:
        t1 = _time.perf_counter()
        pairs = list(a.pairs) if a.pairs is not None else list(combinations(range(n), 2))
        for kind in a.signals:
            sig = _signals(kind, means, report.covariance, n)
            mats = [sync_matrix(times, sig, window.at(float(s)), a.shifted, SIGNAL_KINDS[kind], pairs) for s in starts]
            report.sync_matrices[kind] = mats
            vals = np.array([[m.values[i, j] for i, j in pairs] for m in mats]).reshape(len(mats), len(pairs))
            report.pearson_curves[kind] = (pairs, vals)
        clock["pearson"] = _time.perf_counter() - t1

    if a.fourier:
        t1 = _time.perf_counter()
        grid = _freq_grid(spec, window)
        report.freq_grid = grid
        nodes = a.fourier_nodes if a.fourier_nodes is not None else range(n)
        for k in nodes:
            sig = means.amplitudes[:, k].real
            report.spectrograms[k] = spectrogram(times, sig, window, starts, grid)
            report.late_spectra[k] = windowed_fourier(times, sig, late, grid)
        clock["fourier"] = _time.perf_counter() - t1

    if a.clusters or a.collective:
        t1 = _time.perf_counter()
        sig = _signals("mean", means, None, n)
        report.late_sync = sync_matrix(times, sig, late, a.shifted)
        report.communities, report.singletons = detect_communities(report.late_sync, a.sync_threshold)
        if a.clusters:
            decomp = spectral_analysis(drift)
            if a.cluster_mode == "horizon":
                report.prediction = predict_clusters(
                    decomp,
                    support_threshold=matched_support_threshold(a.sync_threshold),
                    horizon=late.t_start + late.delta_t / 2,
                    a0=a0,
                )
            else:
                report.prediction = predict_clusters(decomp)
        if a.collective:
            for comm in report.communities:
                vals = []
                for s in starts:
                    try:
                        vals.append(collective_index(times, sig, comm, window.at(float(s)), a.shifted))
                    except DegenerateWindowError:
                        vals.append(np.nan)
                report.collective[comm] = np.array(vals)
        clock["clusters"] = _time.perf_counter() - t1

    if a.discord_pairs:
        t1 = _time.perf_counter()
        report.discord = [discord_trajectory(report.covariance, i, j) for i, j in a.discord_pairs]
        clock["discord"] = _time.perf_counter() - t1

    clock["total"] = _time.perf_counter() - t0
    report.wall_clock = clock
    out = output_dir if output_dir is not None else scenario.output_dir
    if write and out is not None:
        _write_report(report, Path(out))
    return report


def _scaled_rows(report: SyncReport, values: np.ndarray) -> np.ndarray:
    s = report.window_starts
    return np.column_stack([s, s * report.scenario.time_unit, values])


def _write_report(report: SyncReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    sc = report.scenario
    a = sc.analyses
    files = report.files
    files.append(exports.write_json(out / "network.json", report.spec.to_dict()))
    files.append(exports.write_json(out / "scenario.json", sc.to_dict()))
    if a.means:
        files.append(exports.write_means(out / "means.csv", report.means, {"spec_hash": report.scenario_hash}))
    if report.covariance is not None and a.covariance:
        files.extend(exports.write_covariance(out / "covariance.csv", report.covariance, covariance_metadata(report.spec)))
    window_meta = {}
    if report.window is not None:
        w = report.window
        window_meta = {"delta_t": w.delta_t, "stride": w.stride, "shift_search": w.shift_search, "time_unit": sc.time_unit}
    for kind, (pairs, vals) in report.pearson_curves.items():
        cols = ["t_start", "t_scaled"] + [f"p{i}_{j}" for i, j in pairs]
        meta = {**window_meta, "signal": SIGNAL_KINDS[kind], "shifted": a.shifted}
        files.append(exports.write_table(out / f"pearson_{kind}.csv", cols, _scaled_rows(report, vals), meta))
        files.append(exports.write_sync_matrix(out / f"sync_late_{kind}.csv", report.sync_matrices[kind][-1]))
    for k, mags in report.spectrograms.items():
        cols = ["t_start", "t_scaled"] + [f"f{q}" for q in range(report.freq_grid.size)]
        meta = {**window_meta, "node": k, "frequencies": report.freq_grid}
        files.append(exports.write_table(out / f"spectrogram_node{k}.csv", cols, _scaled_rows(report, mags), meta))
        files.append(exports.write_spectrum(out / f"spectrum_late_node{k}.csv", report.late_spectra[k], {"node": k}))
    if report.late_sync is not None:
        files.append(exports.write_sync_matrix(out / "sync_late_clusters.csv", report.late_sync))
    if report.prediction is not None:
        decomp = spectral_analysis(assemble_drift(report.spec))
        files.append(exports.write_json(out / "spectral.json", decomp.to_dict()))
    if report.late_sync is not None:
        doc = {
            "detected": [list(c) for c in report.communities],
            "unsynchronised": list(report.singletons),
            "threshold": a.sync_threshold,
        }
        if report.prediction is not None:
            doc["predicted"] = report.prediction.to_dict()
        files.append(exports.write_json(out / "clusters.json", doc))
    if report.collective:
        cols = ["t_start", "t_scaled"] + ["S_" + "_".join(map(str, c)) for c in report.collective]
        vals = np.column_stack(list(report.collective.values()))
        files.append(exports.write_table(out / "collective.csv", cols, _scaled_rows(report, vals), window_meta))
    for curve in report.discord:
        files.append(exports.write_discord(out / f"discord_{curve.i}_{curve.j}.csv", curve))
    files.append(exports.write_json(out / "summary.json", report.summary()))
    files.append(exports.write_json(out / "timing.json", report.wall_clock))


# figure recipes


def _dimer_net(w2: float) -> dict:
    return {"motif": "dimer", "frequencies": [1.0, 1.9], "pump_rates": [PUMP, w2], "gamma": GAMMA}


def figure_scenarios(fig_id: int, seed: Optional[int] = None) -> dict[str, Scenario]:
    """Scenarios behind one figure, keyed by sub-panel name."""
    unit = GAMMA - PUMP
    horizon = 10.0 / unit
    if fig_id == 2:
        an = Analyses(pearson=True, pairs=((0, 1),), fourier=True)
        return {"dimer": Scenario(_dimer_net(0.0), horizon, analyses=an, time_unit=unit, name="dimer")}
    if fig_id == 3:
        an = Analyses(pearson=True, pairs=((0, 1),), signals=("mean", "x2", "xy"), covariance=True, discord_pairs=((0, 1),))
        return {
            "source_pumped": Scenario(_dimer_net(0.0), horizon, analyses=an, time_unit=unit, name="dimer_source_pumped"),
            "equal_pumps": Scenario(_dimer_net(PUMP), horizon, analyses=an, time_unit=unit, name="dimer_equal_pumps"),
        }
    if fig_id == 4:
        out = {}
        for kind in ("out", "in", "through"):
            net = {"motif": f"trimer_{kind}", "frequencies": [1.5, 2.0, 2.5], "pump_rates": PUMP, "gamma": GAMMA}
            an = Analyses(pearson=True, fourier=True, discord_pairs=((0, 1), (1, 2), (0, 2)))
            out[f"trimer_{kind}"] = Scenario(net, horizon, analyses=an, time_unit=unit, name=f"trimer_{kind}")
        return out
    if fig_id == 5:
        net = {"motif": "chain", "size": 5, "frequencies": [1.2, 1.4, 1.6, 1.8, 2.0], "pump_rates": PUMP, "gamma": GAMMA}
        an = Analyses(pearson=True, pairs=tuple((0, k) for k in range(1, 5)), discord_pairs=((0, 1), (1, 2), (2, 3), (3, 4)))
        return {"chain": Scenario(net, horizon, analyses=an, time_unit=unit, name="chain")}
    if fig_id == 6:
        levels = np.linspace(1.2, 2.2, 5)
        net = {
            "motif": "branching",
            "trunk_len": 3,
            "branch_lens": [2, 2],
            "frequencies": levels[[0, 1, 2, 3, 4, 3, 4]].tolist(),
            "pump_rates": PUMP,
            "gamma": GAMMA,
        }
        an = Analyses(
            pearson=True,
            pairs=tuple((0, k) for k in range(1, 7)),
            discord_pairs=((0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (5, 6)),
        )
        return {"branching": Scenario(net, horizon, analyses=an, time_unit=unit, name="branching")}
    if fig_id in (7, 8):
        net = {
            "random": {
                "n": 15,
                "edge_prob": 0.15,
                "eps_min": 1.2,
                "eps_max": 4.0,
                "gamma": GAMMA,
                "pump_rate": PUMP,
                "require_connected": True,
                "equal_spacing": True,
            }
        }
        an = Analyses(means=False, clusters=True, cluster_mode="horizon", collective=fig_id == 7)
        name = "random_network" if fig_id == 7 else "random_network_modes"
        return {"network": Scenario(net, horizon, analyses=an, time_unit=unit, seed=NETWORK_SEED if seed is None else seed, name=name)}
    raise ValueError(f"figure id must be one of {FIGURE_IDS}, got {fig_id}")


def reproduce_figure(fig_id: int, output_dir, seed: Optional[int] = None) -> list[Path]:
    """Write the plot-ready data of one figure under ``output_dir``."""
    out = Path(output_dir)
    files: list[Path] = []
    index = {"figure": fig_id, "panels": {}}
    for panel, scenario in figure_scenarios(fig_id, seed).items():
        report = run_scenario(scenario, out / panel)
        files.extend(report.files)
        index["panels"][panel] = {
            "directory": panel,
            "time_unit": scenario.time_unit,
            "time_axis": "t_scaled = t * time_unit",
        }
        if fig_id == 8:
            files.append(_write_mode_table(report, out / panel / "slow_modes.csv"))
    files.append(exports.write_json(out / "figure.json", index))
    return files


def _write_mode_table(report: SyncReport, path: Path, count: int = 3) -> Path:
    """Squared eigenvector components of the modes governing the predicted clusters."""
    decomp = spectral_analysis(assemble_drift(report.spec))
    modes = [c.mode for c in report.prediction.clusters] if report.prediction else []
    if len(modes) < count:
        modes += [m for m in range(decomp.values.size) if m not in modes][: count - len(modes)]
    modes = sorted(modes[:count] if len(modes) > count else modes, key=lambda m: -decomp.values[m].real)
    weights = np.abs(decomp.vectors[:, modes]) ** 2
    rows = np.column_stack([np.arange(report.spec.n_nodes), weights])
    meta = {
        "modes": modes,
        "eigenvalues": [[float(decomp.values[m].real), float(decomp.values[m].imag)] for m in modes],
    }
    return exports.write_table(path, ["node"] + [f"mode{m}" for m in modes], rows, meta)
