"""Oriented oscillator networks.

Nodes are incoherently pumped harmonic oscillators, directed edges are
cascaded (chiral) couplings sharing a single rate ``gamma``.  The adjacency
convention is ``A[i, j] = 1`` for an edge ``i -> j`` (source drives target).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "NetworkSpec",
    "DegreeProfile",
    "ValidationReport",
    "InvalidNetworkError",
    "validate_network",
    "degree_profile",
    "motif",
    "MOTIFS",
    "random_oriented_network",
    "save_network",
    "load_network",
]

REJECTION_BUDGET = 1_000_000


class InvalidNetworkError(ValueError):
    """Raised when an operation needs a valid network and gets an invalid one."""


@dataclass(frozen=True)
class NetworkSpec:
    """Oriented directed graph plus per-node oscillator parameters.

    Attributes:
        adjacency: (n, n) 0/1 integer matrix, ``adjacency[i, j] == 1`` means i -> j.
        frequencies: natural angular frequency of each node.
        pump_rates: incoherent pump rate of each node.
        gamma: cascaded coupling rate shared by every edge.
        seed: generator seed, if the network was drawn at random.
    """

    adjacency: np.ndarray
    frequencies: np.ndarray
    pump_rates: np.ndarray
    gamma: float
    seed: Optional[int] = None

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=np.int64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidNetworkError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        freqs = np.array(self.frequencies, dtype=float).reshape(-1)
        pumps = np.array(self.pump_rates, dtype=float).reshape(-1)
        if freqs.shape != (n,) or pumps.shape != (n,):
            raise InvalidNetworkError(
                f"expected {n} frequencies and pump rates, got {freqs.size} and {pumps.size}"
            )
        for arr in (adj, freqs, pumps):
            arr.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "pump_rates", pumps)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edge list as (source, target) pairs, row-major order."""
        src, tgt = np.nonzero(self.adjacency)
        return [(int(s), int(t)) for s, t in zip(src, tgt)]

    @classmethod
    def from_edges(cls, n_nodes, edges, frequencies, pump_rates, gamma, seed=None):
        adj = np.zeros((n_nodes, n_nodes), dtype=np.int64)
        for s, t in edges:
            if not (0 <= s < n_nodes and 0 <= t < n_nodes):
                raise InvalidNetworkError(f"edge ({s},{t}) references a node outside 0..{n_nodes - 1}")
            adj[s, t] = 1
        pumps = np.broadcast_to(np.asarray(pump_rates, dtype=float), (n_nodes,))
        return cls(adj, frequencies, pumps, gamma, seed)

    def with_params(self, **changes) -> "NetworkSpec":
        kwargs = dict(
            adjacency=self.adjacency,
            frequencies=self.frequencies,
            pump_rates=self.pump_rates,
            gamma=self.gamma,
            seed=self.seed,
        )
        kwargs.update(changes)
        if np.ndim(kwargs["pump_rates"]) == 0:
            kwargs["pump_rates"] = np.full(self.n_nodes, float(kwargs["pump_rates"]))
        return NetworkSpec(**kwargs)

    def to_dict(self) -> dict:
        out = {
            "n_nodes": self.n_nodes,
            "edges": [list(e) for e in self.edges],
            "frequencies": self.frequencies.tolist(),
            "pump_rates": self.pump_rates.tolist(),
            "gamma": self.gamma,
        }
        if self.seed is not None:
            out["seed"] = int(self.seed)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        try:
            return cls.from_edges(
                int(data["n_nodes"]),
                [tuple(e) for e in data.get("edges", [])],
                data["frequencies"],
                data["pump_rates"],
                data["gamma"],
                data.get("seed"),
            )
        except KeyError as exc:
            raise InvalidNetworkError(f"network document is missing key {exc}") from None

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (
            np.array_equal(self.adjacency, other.adjacency)
            and np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.pump_rates, other.pump_rates)
            and self.gamma == other.gamma
            and self.seed == other.seed
        )

    __hash__ = None


@dataclass(frozen=True)
class DegreeProfile:
    out_degree: np.ndarray
    in_degree: np.ndarray
    gamma_total: np.ndarray


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.violations)


def validate_network(spec: NetworkSpec) -> ValidationReport:
    """Check orientation, loop-freeness and parameter signs.

    Node indices in the messages are 0-based.
    """
    report = ValidationReport()
    adj = spec.adjacency
    n = spec.n_nodes
    if n < 1:
        report.violations.append("network has no nodes")
    bad_entries = np.argwhere((adj != 0) & (adj != 1))
    for i, j in bad_entries:
        report.violations.append(f"non-binary adjacency entry at ({i},{j})")
    for i in np.flatnonzero(np.diag(adj)):
        report.violations.append(f"self-loop at {i}")
    both = (adj != 0) & (adj.T != 0)
    for i, j in np.argwhere(np.triu(both, k=1)):
        report.violations.append(f"bidirectional pair ({i},{j})")
    for i in np.flatnonzero(~(spec.frequencies > 0)):
        report.violations.append(f"non-positive frequency at {i}")
    for i in np.flatnonzero(~(spec.pump_rates >= 0)):
        report.violations.append(f"negative pump rate at {i}")
    if not spec.gamma > 0:
        report.violations.append(f"coupling rate gamma={spec.gamma} must be positive")
    return report


def require_valid(spec: NetworkSpec) -> None:
    report = validate_network(spec)
    if not report.ok:
        raise InvalidNetworkError(str(report))


def degree_profile(spec: NetworkSpec) -> DegreeProfile:
    require_valid(spec)
    out_deg = spec.adjacency.sum(axis=1)
    in_deg = spec.adjacency.sum(axis=0)
    return DegreeProfile(out_deg, in_deg, spec.gamma * (out_deg + in_deg))


def _chain_edges(nodes):
    return [(a, b) for a, b in zip(nodes[:-1], nodes[1:])]


def _motif_edges(name: str, size=None, trunk_len=None, branch_lens=None):
    if name == "dimer":
        return 2, [(0, 1)]
    if name == "trimer_out":
        return 3, [(1, 0), (1, 2)]
    if name == "trimer_in":
        return 3, [(0, 1), (2, 1)]
    if name == "trimer_through":
        return 3, [(0, 1), (1, 2)]
    if name == "nonloop_ring":
        return 3, [(0, 1), (1, 2), (0, 2)]
    if name == "loop_ring":
        return 3, [(0, 1), (1, 2), (2, 0)]
    if name == "chain":
        if size is None or size < 1:
            raise ValueError("chain needs a positive size")
        return size, _chain_edges(list(range(size)))
    if name == "branching":
        if trunk_len is None or branch_lens is None:
            raise ValueError("branching needs trunk_len and branch_lens")
        if trunk_len < 1 or any(b < 1 for b in branch_lens):
            raise ValueError("trunk and branch lengths must be positive")
        edges = _chain_edges(list(range(trunk_len)))
        nxt = trunk_len
        for length in branch_lens:
            branch = [trunk_len - 1] + list(range(nxt, nxt + length))
            edges += _chain_edges(branch)
            nxt += length
        return nxt, edges
    raise ValueError(f"unknown motif {name!r}; choose from {sorted(MOTIFS)}")


MOTIFS = frozenset(
    {"dimer", "trimer_out", "trimer_in", "trimer_through", "nonloop_ring", "loop_ring", "chain", "branching"}
)


def motif(
    name: str,
    frequencies: Sequence[float],
    pump_rates,
    gamma: float,
    *,
    size: Optional[int] = None,
    trunk_len: Optional[int] = None,
    branch_lens: Optional[Sequence[int]] = None,
) -> NetworkSpec:
    """Build one of the catalogue geometries.

    Node numbering is 0-based.  Trimer motifs put the central node at index 1;
    ``branching`` numbers the trunk first, then each branch in turn, so
    ``branching(trunk_len=3, branch_lens=(2, 2))`` is 0->1->2, 2->3->4, 2->5->6.

    Args:
        name: one of ``MOTIFS``.
        frequencies: one natural frequency per node.
        pump_rates: scalar (uniform) or one rate per node.
        gamma: global coupling rate.
        size: node count for ``chain``.
        trunk_len, branch_lens: shape of ``branching``.
    """
    n, edges = _motif_edges(name, size=size, trunk_len=trunk_len, branch_lens=branch_lens)
    freqs = np.asarray(frequencies, dtype=float).reshape(-1)
    if freqs.size != n:
        raise ValueError(f"motif {name!r} has {n} nodes but {freqs.size} frequencies were given")
    pumps = np.asarray(pump_rates, dtype=float).reshape(-1)
    if pumps.size == 1:
        pumps = np.full(n, pumps[0])
    if pumps.size != n:
        raise ValueError(f"motif {name!r} has {n} nodes but {pumps.size} pump rates were given")
    return NetworkSpec.from_edges(n, edges, freqs, pumps, gamma)


def random_oriented_network(
    n: int,
    edge_prob: float,
    eps_min: float,
    eps_max: float,
    gamma: float,
    seed: int,
    pump_rate: float = 0.0,
    max_attempts: int = REJECTION_BUDGET,
    require_connected: bool = False,
) -> NetworkSpec:
    """Random oriented graph with frequencies separated by more than ``gamma``.

    Every unordered pair gets an edge with probability ``edge_prob``; its
    orientation is a fair coin.  Frequencies are drawn uniformly in
    ``[eps_min, eps_max]`` and the whole draw is rejected until all pairwise
    gaps exceed ``gamma``.  With ``require_connected`` the edge draw is
    repeated until the graph is weakly connected (an isolated pumped node has
    no loss channel and grows without bound).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    if not eps_max - eps_min > (n - 1) * gamma:
        raise ValueError(
            f"frequency range {eps_max - eps_min} cannot hold {n} nodes separated by more than gamma={gamma}"
        )
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for attempt in range(max_attempts):
        present = rng.random(iu.size) < edge_prob
        flip = rng.random(iu.size) < 0.5
        adj = np.zeros((n, n), dtype=np.int64)
        adj[np.where(flip, ju, iu)[present], np.where(flip, iu, ju)[present]] = 1
        if not require_connected or n == 1:
            break
        n_comp, _ = connected_components(adj, directed=True, connection="weak")
        if n_comp == 1:
            break
    else:
        raise RuntimeError(f"no weakly connected graph after {max_attempts} attempts")

    for _ in range(max_attempts):
        freqs = rng.uniform(eps_min, eps_max, size=n)
        if n == 1 or np.min(np.diff(np.sort(freqs))) > gamma:
            break
    else:
        raise RuntimeError(f"frequency gap constraint not met after {max_attempts} attempts")
    return NetworkSpec(adj, freqs, np.full(n, float(pump_rate)), gamma, seed)


def save_network(spec: NetworkSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2))


def load_network(path) -> NetworkSpec:
    return NetworkSpec.from_dict(json.loads(Path(path).read_text()))
