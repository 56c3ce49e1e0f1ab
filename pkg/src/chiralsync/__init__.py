"""Synchronisation in chiral networks of incoherently pumped quantum oscillators."""

from .discord import (
    DiscordCurve,
    TwoModeGaussian,
    discord_brute_force,
    discord_trajectory,
    gaussian_discord,
    gaussian_entropy,
    random_two_mode_state,
    reduce_two_mode,
)
from .dynamics import (
    ClusterPrediction,
    DriftMatrix,
    MeanTrajectory,
    SpectralDecomposition,
    analytic_dimer,
    analytic_trimer,
    assemble_drift,
    matched_support_threshold,
    predict_clusters,
    propagate_means,
    spectral_analysis,
)
from .estimators import SpectralClusterPredictor, SyncCommunityDetector
from .moments import (
    CovarianceState,
    CovarianceTrajectory,
    QuadratureCovariance,
    assemble_noise,
    fock_oracle,
    physicality_check,
    propagate_covariance,
    steady_covariance,
    to_quadrature,
)
from .network import (
    NetworkSpec,
    degree_profile,
    load_network,
    motif,
    random_oriented_network,
    save_network,
    validate_network,
)
from .runner import Scenario, load_scenario, reproduce_figure, run_scenario
from .witnesses import (
    WindowSpec,
    collective_index,
    default_window,
    detect_communities,
    dominant_peaks,
    pearson,
    shifted_pearson,
    sync_matrix,
    windowed_fourier,
)

__version__ = "0.1.0"
