"""Second-moment (covariance) dynamics of the Gaussian network state.

Ordering is ``chi = (a_1..a_N, a_1^dag..a_N^dag)`` and ``C`` holds central,
symmetrized moments ``C_kj = <d chi_k d chi_j + d chi_j d chi_k> / 2``.  With
``B = blockdiag(M, M*)`` the moments obey

    dC/dt = B C + C B^T + [[0, S], [S, 0]],   S = (W + Gamma + gamma (A + A^T)) / 2.

Quadratures are ``x = (a + a^dag)/2``, ``y = -i (a - a^dag)/2`` (vacuum variance 1/4),
ordered ``(x_1, y_1, ..., x_N, y_N)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .dynamics import DriftMatrix, assemble_drift, spectral_analysis
from .network import NetworkSpec, degree_profile, require_valid

__all__ = [
    "NoiseMatrix",
    "CovarianceState",
    "CovarianceTrajectory",
    "QuadratureCovariance",
    "UnphysicalStateError",
    "NoStationaryStateError",
    "assemble_noise",
    "vacuum_covariance",
    "propagate_covariance",
    "steady_covariance",
    "lyapunov_residual",
    "to_quadrature",
    "from_quadrature",
    "symplectic_form",
    "symplectic_eigenvalues",
    "physicality_check",
    "FockResult",
    "fock_oracle",
    "covariance_metadata",
    "spec_hash",
]

ODE_RTOL = 1e-10
SYMMETRY_TOL = 1e-9
MARGIN_TOL = 1e-9


class UnphysicalStateError(ValueError):
    pass


class NoStationaryStateError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseMatrix:
    s: np.ndarray


@dataclass(frozen=True)
class CovarianceState:
    c: np.ndarray
    time: float = 0.0

    @property
    def n_modes(self) -> int:
        return self.c.shape[0] // 2

    def number_block(self) -> np.ndarray:
        """The (a, a^dag) block ``<a_k a_j^dag + a_j^dag a_k> / 2``."""
        n = self.n_modes
        return self.c[:n, n:]


@dataclass(frozen=True)
class CovarianceTrajectory:
    times: np.ndarray
    c: np.ndarray  # (n_times, 2N, 2N) complex
    growing: bool = False

    @property
    def n_modes(self) -> int:
        return self.c.shape[1] // 2

    def frame(self, k: int) -> CovarianceState:
        return CovarianceState(self.c[k], float(self.times[k]))

    def quadratures(self) -> np.ndarray:
        """Real quadrature covariances, shape (n_times, 2N, 2N)."""
        return _quadrature_stack(self.c)

    def x_variance(self, node: int) -> np.ndarray:
        """``<x_k^2>`` (central) along the trajectory."""
        q = self.quadratures()
        return q[:, 2 * node, 2 * node]

    def xy_symmetrized(self, node: int) -> np.ndarray:
        """``<x_k y_k + y_k x_k>`` (central) along the trajectory."""
        q = self.quadratures()
        return 2.0 * q[:, 2 * node, 2 * node + 1]


@dataclass(frozen=True)
class QuadratureCovariance:
    sigma: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.sigma.shape[0] // 2


def assemble_noise(spec: NetworkSpec) -> NoiseMatrix:
    profile = degree_profile(spec)
    adj = spec.adjacency.astype(float)
    s = 0.5 * (np.diag(spec.pump_rates + profile.gamma_total) + spec.gamma * (adj + adj.T))
    s.flags.writeable = False
    return NoiseMatrix(s)


def vacuum_covariance(n: int) -> CovarianceState:
    c = np.zeros((2 * n, 2 * n), dtype=complex)
    c[:n, n:] = 0.5 * np.eye(n)
    c[n:, :n] = 0.5 * np.eye(n)
    return CovarianceState(c, 0.0)


def _block_drift(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    b = np.zeros((2 * n, 2 * n), dtype=complex)
    b[:n, :n] = m
    b[n:, n:] = m.conj()
    return b


def _block_noise(s: np.ndarray) -> np.ndarray:
    n = s.shape[0]
    d = np.zeros((2 * n, 2 * n), dtype=complex)
    d[:n, n:] = s
    d[n:, :n] = s
    return d


def _check_state(c: np.ndarray) -> None:
    n2 = c.shape[0]
    if c.shape != (n2, n2) or n2 % 2:
        raise ValueError(f"covariance must be 2N x 2N, got {c.shape}")
    if np.max(np.abs(c - c.T)) > SYMMETRY_TOL * max(np.abs(c).max(), 1.0):
        raise ValueError("covariance is not complex-symmetric")
    n = n2 // 2
    x = c[:n, n:]
    if np.max(np.abs(x - x.conj().T)) > SYMMETRY_TOL * max(np.abs(x).max(), 1.0):
        raise ValueError("(a, a^dag) block is not Hermitian")
    if np.any(np.diag(x).real < 0.5 - SYMMETRY_TOL):
        raise ValueError("symmetrized occupation below the vacuum value 1/2")


def propagate_covariance(
    drift: DriftMatrix,
    noise: NoiseMatrix,
    times,
    c0: Optional[CovarianceState] = None,
) -> CovarianceTrajectory:
    """Integrate the moment equation with DOP853 at rtol 1e-10.

    The default initial state is the vacuum.  Unstable spectra still
    integrate; the returned trajectory carries ``growing=True``.
    """
    m = np.asarray(drift.m)
    n = m.shape[0]
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0 or t[0] < 0 or (t.size > 1 and np.any(np.diff(t) <= 0)):
        raise ValueError("times must be a non-empty increasing grid starting at t >= 0")
    c0 = vacuum_covariance(n) if c0 is None else c0
    _check_state(c0.c)
    t0 = c0.time
    if t[0] < t0:
        raise ValueError("time grid starts before the initial state")

    b = _block_drift(m)
    d = _block_noise(np.asarray(noise.s))
    dim = 2 * n

    def rhs(_t, y):
        c = y.reshape(dim, dim)
        bc = b @ c
        return (bc + bc.T + d).ravel()

    y0 = c0.c.astype(complex).ravel()
    if t[-1] == t0:
        out = np.repeat(c0.c[None], t.size, axis=0)
    else:
        sol = solve_ivp(
            rhs,
            (t0, t[-1]),
            y0,
            method="DOP853",
            t_eval=t,
            rtol=ODE_RTOL,
            atol=ODE_RTOL * 1e-2,
        )
        if not sol.success:
            raise RuntimeError(f"covariance integration failed: {sol.message}")
        out = sol.y.T.reshape(t.size, dim, dim)
    scale = np.maximum(np.abs(out).max(axis=(1, 2)), 1.0)
    asym = np.abs(out - out.transpose(0, 2, 1)).max(axis=(1, 2)) / scale
    if np.any(asym > SYMMETRY_TOL):
        k = int(np.argmax(asym))
        raise RuntimeError(f"complex symmetry lost at t={t[k]} (asymmetry {asym[k]:.3g})")
    out = 0.5 * (out + out.transpose(0, 2, 1))
    growing = spectral_analysis(drift).stability != "stable"
    return CovarianceTrajectory(t, out, growing)


def steady_covariance(drift: DriftMatrix, noise: NoiseMatrix) -> CovarianceState:
    """Stationary covariance, solving ``B C + C B^T + D = 0``."""
    decomp = spectral_analysis(drift)
    if decomp.stability != "stable":
        raise NoStationaryStateError(f"no stationary covariance: spectrum is {decomp.stability}")
    b = _block_drift(np.asarray(drift.m))
    d = _block_noise(np.asarray(noise.s))
    # B is complex, so this is a Sylvester problem with B^T, not B^H
    c = scipy.linalg.solve_sylvester(b, b.T, -d)
    c = 0.5 * (c + c.T)
    return CovarianceState(c, np.inf)


def lyapunov_residual(drift: DriftMatrix, noise: NoiseMatrix, state: CovarianceState) -> float:
    b = _block_drift(np.asarray(drift.m))
    d = _block_noise(np.asarray(noise.s))
    return float(np.linalg.norm(b @ state.c + state.c @ b.T + d, 2))


def _quadrature_map(n: int) -> np.ndarray:
    """Matrix L with (x_1, y_1, ..., x_N, y_N) = L chi."""
    lam = np.zeros((2 * n, 2 * n), dtype=complex)
    for k in range(n):
        lam[2 * k, k] = 0.5
        lam[2 * k, n + k] = 0.5
        lam[2 * k + 1, k] = -0.5j
        lam[2 * k + 1, n + k] = 0.5j
    return lam


def _quadrature_stack(c: np.ndarray) -> np.ndarray:
    n = c.shape[-1] // 2
    lam = _quadrature_map(n)
    q = lam @ c @ lam.T
    return q.real


def to_quadrature(state: CovarianceState, tol: float = 1e-9) -> QuadratureCovariance:
    n = state.n_modes
    lam = _quadrature_map(n)
    q = lam @ state.c @ lam.T
    resid = np.abs(q.imag).max()
    if resid > tol * max(np.abs(q).max(), 1.0):
        raise UnphysicalStateError(f"quadrature covariance has imaginary residue {resid:.3g}")
    sigma = 0.5 * (q.real + q.real.T)
    return QuadratureCovariance(sigma)


def from_quadrature(q: QuadratureCovariance, time: float = 0.0) -> CovarianceState:
    n = q.n_modes
    inv = np.linalg.inv(_quadrature_map(n))
    return CovarianceState(inv @ q.sigma @ inv.T, time)


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a real covariance in (x_1, y_1, ...) ordering.

    Eigenvalues of the Hermitian ``sigma^1/2 i Omega sigma^1/2`` (similar to
    ``i Omega sigma``) come in +/- pairs and stay accurate when degenerate.
    Accepts a single matrix or a stack of shape (..., 2N, 2N).
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[-1] // 2
    w, u = np.linalg.eigh(0.5 * (sigma + np.swapaxes(sigma, -1, -2)))
    root = (u * np.sqrt(np.maximum(w, 0.0))[..., None, :]) @ np.swapaxes(u, -1, -2)
    return np.linalg.eigvalsh(root @ (1j * symplectic_form(n)) @ root)[..., n:]


def physicality_check(q: QuadratureCovariance, raise_on_violation: bool = True) -> float:
    """Smallest symplectic eigenvalue minus 1/4 (the vacuum value here)."""
    sigma = q.sigma
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * max(np.abs(sigma).max(), 1.0):
        raise ValueError("quadrature covariance is not symmetric")
    margin = float(symplectic_eigenvalues(sigma).min() - 0.25)
    if raise_on_violation and margin < -MARGIN_TOL:
        raise UnphysicalStateError(f"symplectic margin {margin:.3g} violates the uncertainty relation")
    return margin


# --- truncated-Fock oracle -------------------------------------------------


@dataclass(frozen=True)
class FockResult:
    times: np.ndarray
    means: np.ndarray  # (n_times, N)
    c: np.ndarray  # (n_times, 2N, 2N) central symmetrized moments
    leakage: float


def _mode_ops(n_modes: int, cutoff: int) -> list[sp.csr_matrix]:
    dim = cutoff + 1
    a1 = sp.diags(np.sqrt(np.arange(1, dim)), 1, shape=(dim, dim), format="csr", dtype=complex)
    eye = sp.identity(dim, format="csr", dtype=complex)
    ops = []
    for k in range(n_modes):
        op = sp.identity(1, format="csr", dtype=complex)
        for j in range(n_modes):
            op = sp.kron(op, a1 if j == k else eye, format="csr")
        ops.append(op)
    return ops


def _liouvillian(h, jumps) -> sp.csr_matrix:
    """Column-stacking superoperator: vec(A rho B) = (B^T kron A) vec(rho)."""
    dim = h.shape[0]
    eye = sp.identity(dim, format="csr", dtype=complex)
    lv = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for rate, op in jumps:
        opd = op.conj().T
        ndn = (opd @ op).tocsr()
        lv = lv + rate * (
            sp.kron(op.conj(), op) - 0.5 * sp.kron(eye, ndn) - 0.5 * sp.kron(ndn.T, eye)
        )
    return lv.tocsr()


def _coherent(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    logfact = np.cumsum(np.log(np.maximum(n, 1)))
    psi = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * alpha**n
    return psi / np.linalg.norm(psi)


def _expectation_rows(observables, dim: int) -> sp.csr_matrix:
    """Sparse rows r with r @ vec(rho) = tr(O rho) for column-stacked vec(rho)."""
    rows, cols, vals = [], [], []
    for k, op in enumerate(observables):
        coo = sp.coo_matrix(op)
        # tr(O rho) = sum_ij O_ij rho_ji, and rho_ji sits at j + i*dim
        rows.append(np.full(coo.nnz, k))
        cols.append(coo.col + coo.row * dim)
        vals.append(coo.data)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(observables), dim * dim),
    )


def fock_oracle(
    spec: NetworkSpec,
    cutoff: int,
    times,
    a0=None,
    leakage_budget: float = 1e-6,
) -> FockResult:
    """Integrate the network master equation in a truncated number basis.

    Each edge s -> r contributes a collective jump ``a_s + a_r`` at rate gamma
    and the Hamiltonian ``(i gamma / 2)(a_s^dag a_r - a_r^dag a_s)``; each node
    a pump jump ``a_k^dag`` at rate w_k.  Dissipators use the convention
    ``D[o] rho = o rho o^dag - {o^dag o, rho}/2``, which reproduces
    ``d<a>/dt = M <a>`` and the moment equation exactly.

    The initial state is a product of coherent states with amplitudes ``a0``
    (vacuum by default).  Raises if the population of any mode's top Fock
    level exceeds ``leakage_budget`` at any requested time.
    """
    require_valid(spec)
    n = spec.n_nodes
    if n > 3:
        raise ValueError("fock_oracle supports at most 3 nodes")
    t = np.asarray(times, dtype=float).reshape(-1)
    if t[0] != 0.0 or (t.size > 1 and np.any(np.diff(t) <= 0)):
        raise ValueError("times must start at 0 and increase")
    a0 = np.zeros(n, dtype=complex) if a0 is None else np.asarray(a0, dtype=complex)

    ops = _mode_ops(n, cutoff)
    g = spec.gamma
    h = sp.csr_matrix(ops[0].shape, dtype=complex)
    for k, op in enumerate(ops):
        h = h + spec.frequencies[k] * (op.conj().T @ op)
    jumps = []
    for s, r in spec.edges:
        h = h + 0.5j * g * (ops[s].conj().T @ ops[r] - ops[r].conj().T @ ops[s])
        jumps.append((g, (ops[s] + ops[r]).tocsr()))
    for k, op in enumerate(ops):
        if spec.pump_rates[k] > 0:
            jumps.append((spec.pump_rates[k], op.conj().T.tocsr()))
    lv = _liouvillian(h.tocsr(), jumps)

    psi = np.ones(1, dtype=complex)
    for k in range(n):
        psi = np.kron(psi, _coherent(a0[k], cutoff))
    rho0 = np.outer(psi, psi.conj())
    dim = rho0.shape[0]

    if t.size == 1:
        vecs = rho0.reshape(-1, order="F")[None, :]
    elif np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0):
        vecs = expm_multiply(lv, rho0.reshape(-1, order="F"), start=0.0, stop=t[-1], num=t.size, endpoint=True)
    else:
        vecs = [rho0.reshape(-1, order="F")]
        for dt in np.diff(t):
            vecs.append(expm_multiply(lv * dt, vecs[-1]))
        vecs = np.array(vecs)

    top = np.zeros((n, dim), dtype=bool)
    levels = np.indices((cutoff + 1,) * n).reshape(n, -1)
    for k in range(n):
        top[k] = levels[k] == cutoff

    chi_ops = ops + [op.conj().T.tocsr() for op in ops]
    k2 = len(chi_ops)
    firsts = _expectation_rows(chi_ops, dim)
    seconds = _expectation_rows([p @ q for p in chi_ops for q in chi_ops], dim)
    ex = (firsts @ vecs.T).T
    sec = (seconds @ vecs.T).T.reshape(t.size, k2, k2)
    cov = 0.5 * (sec + sec.transpose(0, 2, 1)) - ex[:, :, None] * ex[:, None, :]
    means = ex[:, :n]
    diag_idx = np.arange(dim) * (dim + 1)
    pops = vecs[:, diag_idx].real
    leak = max(float(pops[:, top[k]].sum(axis=1).max()) for k in range(n))
    if leak > leakage_budget:
        raise RuntimeError(
            f"truncation leakage {leak:.3g} exceeds budget {leakage_budget:.3g}; try cutoff >= {cutoff + 10}"
        )
    return FockResult(t, means, cov, leak)


def covariance_metadata(spec: NetworkSpec) -> dict:
    return {
        "ordering": "chi = (a_1..a_N, a_1^dag..a_N^dag)",
        "moments": "central, symmetrized",
        "quadrature_convention": "x=(a+a^dag)/2, y=-i(a-a^dag)/2, vacuum variance 1/4",
        "storage": "lower triangle, row-major, real and imaginary parts interleaved",
        "spec_hash": spec_hash(spec),
    }


def spec_hash(spec: NetworkSpec) -> str:
    payload = json.dumps(spec.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
