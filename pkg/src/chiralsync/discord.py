"""Two-mode Gaussian quantum discord.

Internally covariances use the vacuum-unit convention (vacuum = identity),
i.e. four times the quadrature covariance with vacuum variance 1/4.
Mode order inside a two-mode matrix is (x_i, y_i, x_j, y_j); "measured"
selects which of the two modes the Gaussian measurement acts on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .moments import CovarianceTrajectory, QuadratureCovariance, symplectic_eigenvalues

__all__ = [
    "TwoModeGaussian",
    "reduce_two_mode",
    "entropy_function",
    "gaussian_entropy",
    "gaussian_discord",
    "discord_brute_force",
    "DiscordCurve",
    "discord_trajectory",
    "random_two_mode_state",
]

PHYSICAL_TOL = 1e-9


@dataclass(frozen=True)
class TwoModeGaussian:
    sigma: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return self.sigma[:2, :2]

    @property
    def beta(self) -> np.ndarray:
        return self.sigma[2:, 2:]

    @property
    def gamma(self) -> np.ndarray:
        return self.sigma[:2, 2:]

    @property
    def invariants(self) -> tuple[float, float, float, float]:
        """(A, B, C, D) = (det alpha, det beta, det gamma, det sigma)."""
        return (
            float(np.linalg.det(self.alpha)),
            float(np.linalg.det(self.beta)),
            float(np.linalg.det(self.gamma)),
            float(np.linalg.det(self.sigma)),
        )

    def swapped(self) -> "TwoModeGaussian":
        p = [2, 3, 0, 1]
        return TwoModeGaussian(self.sigma[np.ix_(p, p)])


def _check_physical(sigma: np.ndarray) -> np.ndarray:
    nu = symplectic_eigenvalues(sigma)
    if nu.min() < 1 - PHYSICAL_TOL:
        raise ValueError(f"unphysical covariance: symplectic eigenvalue {nu.min():.12g} < 1")
    return np.maximum(nu, 1.0)


def reduce_two_mode(q: QuadratureCovariance, i: int, j: int) -> TwoModeGaussian:
    """Extract modes (i, j) from a global quadrature covariance and rescale by 4."""
    if i == j:
        raise ValueError("reduce_two_mode needs two distinct nodes")
    idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
    sigma = 4.0 * np.asarray(q.sigma)[np.ix_(idx, idx)]
    _check_physical(sigma)
    return TwoModeGaussian(sigma)


def entropy_function(nu):
    """Entropy in nats of a thermal mode with symplectic eigenvalue ``nu``."""
    nu = np.asarray(nu, dtype=float)
    nu = np.where((nu < 1) & (nu >= 1 - PHYSICAL_TOL), 1.0, nu)
    if np.any(nu < 1):
        raise ValueError("symplectic eigenvalue below 1")
    plus = (nu + 1) / 2
    minus = (nu - 1) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(minus > 0, minus * np.log(np.where(minus > 0, minus, 1.0)), 0.0)
    return plus * np.log(plus) - term


def gaussian_entropy(sigma) -> float:
    """Von Neumann entropy (nats) of a Gaussian state with vacuum-unit covariance."""
    nu = _check_physical(np.asarray(sigma, dtype=float))
    return float(np.sum(entropy_function(nu)))


def _min_conditional_det(A, B, C, D):
    """Infimum over Gaussian measurements on the second mode of the
    conditional determinant of the first mode (vacuum units).  Vectorised."""
    A, B, C, D = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (A, B, C, D)))
    heterodyne_like = (D - A * B) ** 2 <= (1 + B) * C**2 * (A + D)
    bm1 = B - 1
    safe = np.where(bm1 > 1e-14, bm1, 1.0)
    root = np.sqrt(np.maximum(C**2 + bm1 * (D - A), 0.0))
    e1 = (2 * C**2 + bm1 * (D - A) + 2 * np.abs(C) * root) / safe**2
    # a pure measured marginal carries no correlations
    e1 = np.where(bm1 > 1e-14, e1, A)
    disc = C**4 + (D - A * B) ** 2 - 2 * C**2 * (A * B + D)
    e2 = (A * B - C**2 + D - np.sqrt(np.maximum(disc, 0.0))) / (2 * B)
    return np.where(heterodyne_like, e1, e2)


def _two_mode_invariants(sigmas: np.ndarray):
    A = np.linalg.det(sigmas[..., :2, :2])
    B = np.linalg.det(sigmas[..., 2:, 2:])
    C = np.linalg.det(sigmas[..., :2, 2:])
    D = np.linalg.det(sigmas)
    return A, B, C, D


def _two_mode_symplectic(sigmas: np.ndarray):
    nu = symplectic_eigenvalues(sigmas)
    return nu[..., 0], nu[..., 1]


def _discord_batch(sigmas: np.ndarray, e_min=None) -> np.ndarray:
    """Discord with measurement on the second mode for a stack of 4x4 covariances."""
    A, B, C, D = _two_mode_invariants(sigmas)
    if e_min is None:
        e_min = _min_conditional_det(A, B, C, D)
    nu_m, nu_p = _two_mode_symplectic(sigmas)
    if np.any(nu_m < 1 - PHYSICAL_TOL):
        raise ValueError(f"unphysical covariance: symplectic eigenvalue {nu_m.min():.12g} < 1")
    value = (
        entropy_function(np.sqrt(np.maximum(B, 1.0)))
        - entropy_function(np.maximum(nu_m, 1.0))
        - entropy_function(np.maximum(nu_p, 1.0))
        + entropy_function(np.sqrt(np.maximum(e_min, 1.0)))
    )
    value = np.where((value < 0) & (value > -1e-10), 0.0, value)
    return np.maximum(value, 0.0)


def _discord_from_emin(tm: TwoModeGaussian, e_min: float) -> float:
    return float(_discord_batch(tm.sigma[None], np.atleast_1d(e_min))[0])


def _oriented(tm: TwoModeGaussian, measured: int) -> TwoModeGaussian:
    if measured not in (0, 1):
        raise ValueError("measured must be 0 (first mode) or 1 (second mode)")
    return tm if measured == 1 else tm.swapped()


def gaussian_discord(tm: TwoModeGaussian, measured: int = 1) -> float:
    """Gaussian discord with a Gaussian measurement on mode ``measured``.

    ``S(measured) - S(joint) + inf_meas S(unmeasured | outcome)``, using the
    closed-form infimum of the conditional determinant.
    """
    tm = _oriented(tm, measured)
    _check_physical(tm.sigma)
    return float(_discord_batch(tm.sigma[None])[0])


def _conditional_det(tm: TwoModeGaussian, r: float, phi: float) -> float:
    lam = np.exp(2 * r)
    c, s = np.cos(phi), np.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    seed = rot @ np.diag([lam, 1 / lam]) @ rot.T
    cond = tm.alpha - tm.gamma @ np.linalg.solve(tm.beta + seed, tm.gamma.T)
    return float(np.linalg.det(cond))


def discord_brute_force(tm: TwoModeGaussian, measured: int = 1, grid_size: int = 41, r_max: float = 5.0) -> float:
    """Discord by direct minimisation over single-mode Gaussian measurement seeds.

    Seeds are ``R(phi) diag(e^{2r}, e^{-2r}) R(phi)^T`` with r in [0, r_max]
    and phi in [0, pi): a grid scan followed by Nelder-Mead from the best
    grid points, clamped to the box.
    """
    tm = _oriented(tm, measured)
    _check_physical(tm.sigma)
    rs = np.linspace(0.0, r_max, grid_size)
    phis = np.linspace(0.0, np.pi, grid_size, endpoint=False)
    grid = np.array([[_conditional_det(tm, r, p) for p in phis] for r in rs])

    # refine in (u, v) = r (cos 2phi, sin 2phi), smooth through r = 0
    def objective(x):
        r = min(np.hypot(x[0], x[1]), r_max)
        return _conditional_det(tm, r, 0.5 * np.arctan2(x[1], x[0]))

    best = grid.min()
    for flat in np.argsort(grid, axis=None)[:3]:
        ir, ip = np.unravel_index(flat, grid.shape)
        x0 = rs[ir] * np.array([np.cos(2 * phis[ip]), np.sin(2 * phis[ip])])
        res = minimize(
            objective,
            x0=x0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000, "initial_simplex": x0 + 0.1 * np.array([[0, 0], [1, 0], [0, 1]])},
        )
        best = min(best, float(res.fun))
    return _discord_from_emin(tm, best)


@dataclass(frozen=True)
class DiscordCurve:
    times: np.ndarray
    forward: np.ndarray  # D(i -> j): measurement on i
    backward: np.ndarray  # D(j -> i): measurement on j
    i: int
    j: int


def discord_trajectory(traj: CovarianceTrajectory, i: int, j: int) -> DiscordCurve:
    """Discord between nodes i and j along a covariance trajectory, both directions.

    ``forward`` is D(i -> j), measuring node i; ``backward`` is D(j -> i),
    measuring node j.  Frames with
    symplectic eigenvalues in [1 - 1e-9, 1) are projected back to physical.
    """
    quad = traj.quadratures()
    idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1]
    sig = 4.0 * quad[:, idx][:, :, idx]
    sig = 0.5 * (sig + sig.transpose(0, 2, 1))
    nu_m, _ = _two_mode_symplectic(sig)
    bad = np.flatnonzero(nu_m < 1 - PHYSICAL_TOL)
    if bad.size:
        k = bad[0]
        hint = " (covariance is growing; precision lost)" if traj.growing else ""
        raise ValueError(f"unphysical frame at t={traj.times[k]}: symplectic eigenvalue {nu_m[k]:.12g} < 1{hint}")
    perm = [2, 3, 0, 1]
    fwd = _discord_batch(sig[:, perm][:, :, perm])
    bwd = _discord_batch(sig)
    return DiscordCurve(traj.times, fwd, bwd, i, j)


def _random_symplectic_orthogonal(rng) -> np.ndarray:
    """Passive two-mode transform: a random 2x2 unitary in quadrature form."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    o = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            x, y = u[a, b].real, u[a, b].imag
            o[2 * a : 2 * a + 2, 2 * b : 2 * b + 2] = [[x, -y], [y, x]]
    return o


def random_two_mode_state(rng, max_squeeze: float = 1.0, max_thermal: float = 3.0) -> TwoModeGaussian:
    """Random physical two-mode covariance ``S diag(nu) S^T``.

    ``S`` is drawn in Bloch-Messiah form (passive, single-mode squeezers, passive).
    """
    nu = 1.0 + rng.uniform(0.0, max_thermal, size=2)
    r = rng.uniform(0.0, max_squeeze, size=2)
    squeeze = np.diag([np.exp(r[0]), np.exp(-r[0]), np.exp(r[1]), np.exp(-r[1])])
    s = _random_symplectic_orthogonal(rng) @ squeeze @ _random_symplectic_orthogonal(rng)
    sigma = s @ np.diag([nu[0], nu[0], nu[1], nu[1]]) @ s.T
    return TwoModeGaussian(0.5 * (sigma + sigma.T))
