import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chiralsync.dynamics import (
    analytic_dimer,
    analytic_trimer,
    assemble_drift,
    matched_support_threshold,
    predict_clusters,
    propagate_means,
    spectral_analysis,
)
from chiralsync.network import InvalidNetworkError, NetworkSpec, motif, random_oriented_network

from conftest import GAMMA, PUMP, UNIT

FIG4 = [1.5, 2.0, 2.5]


def _rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def test_driven_dimer_drift_matrix(driven_dimer):
    m = assemble_drift(driven_dimer).m
    expected = np.array([[-0.0025 - 1.0j, 0.0], [-0.05, -0.025 - 1.9j]])
    np.testing.assert_allclose(m, expected, atol=1e-15)


def test_isolated_node_drift():
    spec = NetworkSpec(np.zeros((1, 1)), [1.3], [0.0], GAMMA)
    np.testing.assert_allclose(assemble_drift(spec).m, [[-1.3j]])


def test_nonloop_ring_lower_triangular():
    spec = motif("nonloop_ring", FIG4, PUMP, GAMMA)
    m = assemble_drift(spec).m
    assert np.all(np.triu(m, 1) == 0)
    degrees = np.array([2, 2, 2])
    np.testing.assert_allclose(np.diag(m), 0.5 * (PUMP - degrees * GAMMA) - 1j * np.array(FIG4))


def test_drift_rejects_invalid():
    with pytest.raises(InvalidNetworkError):
        assemble_drift(NetworkSpec(np.array([[0, 1], [1, 0]]), [1, 2], [0, 0], GAMMA))


@given(seed=st.integers(0, 10_000), p=st.floats(0.05, 0.8))
def test_drift_transpose_consistency(seed, p):
    spec = random_oriented_network(8, p, 1.0, 2.0, GAMMA, seed)
    m = assemble_drift(spec).m
    off = ~np.eye(8, dtype=bool)
    assert np.array_equal((m != 0) & off, (spec.adjacency.T != 0) & off)


def test_dag_is_triangular_in_topological_order():
    spec = random_oriented_network(9, 0.4, 1.0, 2.0, GAMMA, seed=5)
    adj = spec.adjacency
    # for a random oriented graph the draw may contain cycles; take the DAG part
    dag = np.triu(adj)
    spec = NetworkSpec(dag, spec.frequencies, spec.pump_rates, GAMMA)
    m = assemble_drift(spec).m
    assert np.all(np.triu(m, 1) == 0)
    vals = np.sort_complex(np.linalg.eigvals(m))
    np.testing.assert_allclose(vals, np.sort_complex(np.diag(m)), atol=1e-12)


def test_zero_initial_state_stays_zero(driven_dimer):
    traj = propagate_means(assemble_drift(driven_dimer), [0, 0], np.linspace(0, 100, 11))
    assert np.all(traj.amplitudes == 0)


def test_dimer_matches_closed_form(driven_dimer):
    t = np.linspace(0, 10 / UNIT, 4001)
    traj = propagate_means(assemble_drift(driven_dimer), [1, 1], t)
    a1, a2 = analytic_dimer(driven_dimer, [1, 1], t)
    assert _rel(traj.amplitudes[:, 0], a1) < 1e-8
    assert _rel(traj.amplitudes[:, 1], a2) < 1e-8


def test_marginal_node_constant_modulus():
    # marginal means pump equals the node's own loss w = Gamma
    isolated = NetworkSpec(np.zeros((1, 1)), [1.0], [0.0], GAMMA)
    traj = propagate_means(assemble_drift(isolated), [0.7 + 0.2j], np.linspace(0, 500, 101))
    np.testing.assert_allclose(np.abs(traj.amplitudes[:, 0]), abs(0.7 + 0.2j), rtol=1e-12)
    source = motif("dimer", [1.0, 1.9], [GAMMA, 0.0], GAMMA)
    traj = propagate_means(assemble_drift(source), [0.7 + 0.2j, 0], np.linspace(0, 500, 101))
    np.testing.assert_allclose(np.abs(traj.amplitudes[:, 0]), abs(0.7 + 0.2j), rtol=1e-12)


def test_eigen_and_ode_paths_agree():
    spec = random_oriented_network(6, 0.5, 1.0, 2.0, GAMMA, seed=11, pump_rate=PUMP)
    drift = assemble_drift(spec)
    t = np.linspace(0, 300, 301)
    a0 = np.linspace(1, 2, 6) + 0.3j
    eig = propagate_means(drift, a0, t, method="eigen")
    ode = propagate_means(drift, a0, t, method="ode")
    assert eig.method == "eigen" and ode.method == "ode"
    assert _rel(ode.amplitudes, eig.amplitudes) < 1e-8


def test_defective_matrix_falls_back_to_ode():
    # equal frequencies and pumps along a chain make M a Jordan block
    spec = NetworkSpec.from_edges(3, [(0, 1), (1, 2)], [1.0, 1.0, 1.0], [0.0, GAMMA, 0.0], GAMMA)
    drift = assemble_drift(spec)
    traj = propagate_means(drift, [1, 0, 0], np.linspace(0, 50, 51))
    assert traj.method == "ode"
    with pytest.raises(np.linalg.LinAlgError):
        propagate_means(drift, [1, 0, 0], np.linspace(0, 50, 51), method="eigen")


def test_propagate_rejects_bad_grid(driven_dimer):
    drift = assemble_drift(driven_dimer)
    with pytest.raises(ValueError):
        propagate_means(drift, [1, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        propagate_means(drift, [1, 1, 1], [0.0, 1.0])


@given(
    a=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
    b=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
)
def test_propagation_is_linear(a, b):
    spec = motif("trimer_in", FIG4, PUMP, GAMMA)
    drift = assemble_drift(spec)
    t = np.linspace(0, 200, 41)
    x0, y0 = np.array([1, 0.5j, -1]), np.array([0.2, 1, 0.3 - 0.1j])
    lhs = propagate_means(drift, a * x0 + b * y0, t).amplitudes
    rhs = a * propagate_means(drift, x0, t).amplitudes + b * propagate_means(drift, y0, t).amplitudes
    scale = max(np.abs(rhs).max(), 1e-12)
    assert np.abs(lhs - rhs).max() <= 1e-9 * scale + 1e-14


def test_analytic_dimer_at_zero(driven_dimer):
    a1, a2 = analytic_dimer(driven_dimer, [0.3 + 1j, -2.0], 0.0)
    assert a1 == 0.3 + 1j and a2 == -2.0


def test_analytic_dimer_confluent_limit():
    spec = motif("dimer", [1.0, 1.0], [PUMP, PUMP], GAMMA)
    t = np.linspace(0, 400, 201)
    traj = propagate_means(assemble_drift(spec), [1, 1], t, method="ode")
    a1, a2 = analytic_dimer(spec, [1, 1], t)
    assert _rel(traj.amplitudes[:, 1], a2) < 1e-8


def test_marginal_dimer_keeps_only_driver_frequency():
    spec = motif("dimer", [1.0, 1.9], [GAMMA, 0.0], GAMMA)
    t = np.linspace(3000, 3200, 8001)
    _, a2 = analytic_dimer(spec, [1, 1], t)
    spectrum = np.abs(np.fft.fft(a2))
    freqs = 2 * np.pi * np.fft.fftfreq(t.size, t[1] - t[0])
    assert abs(abs(freqs[np.argmax(spectrum)]) - 1.0) < 0.04


@pytest.mark.parametrize("kind, name", [("out", "trimer_out"), ("in", "trimer_in")])
def test_trimer_closed_forms(kind, name):
    spec = motif(name, FIG4, PUMP, GAMMA)
    t = np.linspace(0, 10 / UNIT, 2001)
    a0 = [1, 1, 1]
    traj = propagate_means(assemble_drift(spec), a0, t)
    closed = analytic_trimer(kind, spec, a0, t)
    for k in range(3):
        assert _rel(traj.amplitudes[:, k], closed[k]) < 1e-8
    for k, value in enumerate(analytic_trimer(kind, spec, [0.1, 2j, 3], 0.0)):
        assert value == [0.1, 2j, 3][k]


def test_transfer_confluent_limit():
    from chiralsync.dynamics import _transfer

    lam = -0.02 - 1.5j
    t = np.linspace(0, 200, 11)
    near = _transfer(lam + 1e-7, lam, t)
    np.testing.assert_allclose(_transfer(lam, lam, t), near, rtol=1e-5, atol=1e-12)
    np.testing.assert_allclose(_transfer(lam, lam, t), t * np.exp(lam * t))


def test_analytic_trimer_rejects_wrong_topology():
    with pytest.raises(ValueError):
        analytic_trimer("out", motif("trimer_in", FIG4, PUMP, GAMMA), [1, 1, 1], 0.0)


def test_spectrum_nonloop_ring_is_diagonal():
    drift = assemble_drift(motif("nonloop_ring", FIG4, PUMP, GAMMA))
    dec = spectral_analysis(drift)
    np.testing.assert_allclose(np.sort_complex(dec.values), np.sort_complex(np.diag(drift.m)), atol=1e-12)


def test_spectrum_driven_dimer(driven_dimer):
    dec = spectral_analysis(assemble_drift(driven_dimer))
    np.testing.assert_allclose(dec.values.real, [-0.0025, -0.025], atol=1e-14)
    np.testing.assert_allclose(dec.frequencies, [1.0, 1.9], atol=1e-14)
    assert dec.stability == "stable"
    np.testing.assert_allclose(dec.lifetimes, [400.0, 40.0])


@given(seed=st.integers(0, 10_000))
def test_spectrum_trace_and_residuals(seed):
    spec = random_oriented_network(10, 0.3, 1.0, 3.0, GAMMA, seed, pump_rate=PUMP)
    drift = assemble_drift(spec)
    dec = spectral_analysis(drift)
    tr = np.trace(drift.m)
    assert abs(dec.values.sum() - tr) <= 1e-9 * abs(tr)
    assert np.all(dec.residuals <= 1e-9 * np.linalg.norm(drift.m, 2))
    assert np.all(np.diff(dec.values.real) <= 0)


def test_stability_classes():
    marginal = motif("dimer", [1.0, 1.9], [GAMMA, 0.0], GAMMA)
    assert spectral_analysis(assemble_drift(marginal)).stability == "marginal"
    unstable = NetworkSpec(np.zeros((1, 1)), [1.0], [0.1], GAMMA)
    assert spectral_analysis(assemble_drift(unstable)).stability == "unstable"


def test_predict_dimer_one_cluster(driven_dimer):
    pred = predict_clusters(spectral_analysis(assemble_drift(driven_dimer)))
    assert len(pred.clusters) == 1
    cluster = pred.clusters[0]
    assert cluster.nodes == (0, 1)
    assert cluster.frequency == pytest.approx(1.0)
    assert cluster.lifetime == pytest.approx(400.0)
    assert pred.unassigned == ()


def test_predict_loop_ring_no_cluster():
    pred = predict_clusters(spectral_analysis(assemble_drift(motif("loop_ring", FIG4, PUMP, GAMMA))))
    assert pred.clusters == []
    assert pred.unassigned == (0, 1, 2)
    assert pred.degenerate


def test_predict_trimer_through_partial():
    spec = motif("trimer_through", FIG4, PUMP, GAMMA)
    pred = predict_clusters(spectral_analysis(assemble_drift(spec)))
    assert [c.nodes for c in pred.clusters] == [(0, 1)]
    assert pred.unassigned == (2,)


def test_predict_trimer_in_frustrated_centre():
    spec = motif("trimer_in", FIG4, PUMP, GAMMA)
    pred = predict_clusters(spectral_analysis(assemble_drift(spec)))
    assert pred.clusters == []


@given(seed=st.integers(0, 5000), shift=st.floats(-0.5, 5.0))
def test_prediction_invariant_under_frequency_shift(seed, shift):
    spec = random_oriented_network(10, 0.3, 1.0, 3.0, GAMMA, seed, pump_rate=PUMP)
    base = predict_clusters(spectral_analysis(assemble_drift(spec)))
    moved = spec.with_params(frequencies=spec.frequencies + shift + 1.0)
    other = predict_clusters(spectral_analysis(assemble_drift(moved)))
    assert sorted(c.nodes for c in base.clusters) == sorted(c.nodes for c in other.clusters)
    assert base.unassigned == other.unassigned


@given(seed=st.integers(0, 5000))
def test_prediction_partition(seed):
    spec = random_oriented_network(12, 0.25, 1.2, 4.0, GAMMA, seed, pump_rate=PUMP)
    dec = spectral_analysis(assemble_drift(spec))
    for pred in (predict_clusters(dec), predict_clusters(dec, slow_gap=1.0), predict_clusters(dec, horizon=1000.0)):
        nodes = [k for c in pred.clusters for k in c.nodes] + list(pred.unassigned)
        assert sorted(nodes) == list(range(12))


def test_horizon_mode_dimer(driven_dimer):
    dec = spectral_analysis(assemble_drift(driven_dimer))
    late = predict_clusters(dec, horizon=2000.0, support_threshold=matched_support_threshold(0.9))
    assert [c.nodes for c in late.clusters] == [(0, 1)]
    # before the transient has died out node 1 still carries its own tone
    early = predict_clusters(dec, horizon=0.0, support_threshold=matched_support_threshold(0.9))
    assert early.clusters == []


def test_matched_support_threshold():
    assert matched_support_threshold(0.9) == pytest.approx(1 / 0.81 - 1)
    assert matched_support_threshold(1.0) == 0.0
    with pytest.raises(ValueError):
        matched_support_threshold(0.0)


def test_prediction_export(driven_dimer):
    doc = predict_clusters(spectral_analysis(assemble_drift(driven_dimer))).to_dict()
    assert doc["clusters"][0]["nodes"] == [0, 1]
    assert doc["thresholds"]["support_threshold"] == 0.05
