import numpy as np
import pytest

from stabcal.channels import NoiseLayout
from stabcal.circuits import build_graph_circuit, sample_coherent_errors, transpile
from stabcal.cost import NoisyCost, PureCost
from stabcal.optimize import (
    OptimizerSettings,
    epsilon_metrics,
    minimize,
)
from stabcal.pauli import Graph, graph_stabilizers


def prepared(graph, eps_mag, seed):
    circuit = transpile(build_graph_circuit(graph))
    circuit = circuit.with_epsilons(sample_coherent_errors(circuit, eps_mag, seed))
    return circuit, graph_stabilizers(graph)


class TestSettings:
    def test_validation(self):
        with pytest.raises(ValueError):
            OptimizerSettings(max_iters=0)
        with pytest.raises(ValueError):
            OptimizerSettings(learning_rate=-1)
        with pytest.raises(ValueError):
            OptimizerSettings(grad_tolerance=0)

    def test_defaults(self):
        s = OptimizerSettings()
        assert s.max_iters == 500
        assert s.learning_rate == 0.01
        assert s.grad_tolerance == 1e-7
        assert s.adaptive


class TestEpsilonMetrics:
    def test_zero_at_recovery(self):
        circuit, _ = prepared(Graph.line(3), 0.01, 1)
        grouping = {k: k.split(":")[0] for k in circuit.param_keys}
        m = epsilon_metrics(-circuit.epsilon_vector(), circuit.epsilons, grouping)
        assert all(abs(v) < 1e-15 for v in m.values())

    def test_zero_theta_gives_error_norms(self):
        circuit, _ = prepared(Graph.line(3), 0.01, 2)
        grouping = {k: k.split(":")[0] for k in circuit.param_keys}
        m = epsilon_metrics(
            np.zeros(len(circuit.param_keys)), circuit.epsilons, grouping
        )
        for fam in ("rz", "rx", "rzx"):
            expected = np.sqrt(
                sum(
                    circuit.epsilons[k] ** 2
                    for k in circuit.param_keys
                    if k.startswith(fam + ":")
                )
            )
            assert np.isclose(m[fam], expected)

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError):
            epsilon_metrics([0.0], {"ry:0": 0.0}, {"ry:0": "ry"})


class TestMinimize:
    def test_noiseless_recovery(self):
        circuit, stabs = prepared(Graph.line(4), 0.01, 3)
        trace = minimize(PureCost(circuit, stabs))
        assert trace.converged
        resid = trace.final_theta + circuit.epsilon_vector()
        assert np.abs(resid).max() < 1e-4
        assert abs(trace.final_cost + 4) < 1e-6

    def test_ghz_pair_recovery(self):
        from stabcal.circuits import build_ghz_circuit
        from stabcal.pauli import ghz_stabilizers

        circuit = transpile(build_ghz_circuit(2))
        circuit = circuit.with_epsilons(sample_coherent_errors(circuit, 0.01, 12))
        trace = minimize(PureCost(circuit, ghz_stabilizers(2)))
        assert trace.converged
        assert np.abs(trace.final_theta + circuit.epsilon_vector()).max() < 1e-4

    def test_zero_errors_converges_immediately(self):
        circuit, stabs = prepared(Graph.line(3), 0.0, 4)
        trace = minimize(PureCost(circuit, stabs))
        assert trace.converged and trace.num_iterations == 1
        assert np.allclose(trace.final_theta, 0.0)

    def test_final_cost_not_above_initial(self):
        circuit, stabs = prepared(Graph.grid(2, 2), 0.01, 5)
        trace = minimize(PureCost(circuit, stabs))
        assert trace.iterations[-1][1] <= trace.iterations[0][1] + 1e-12

    def test_metrics_shrink(self):
        circuit, stabs = prepared(Graph.line(3), 0.01, 6)
        trace = minimize(PureCost(circuit, stabs))
        first = trace.epsilon_metrics_history[0]
        last = trace.epsilon_metrics_history[-1]
        for fam in ("rz", "rx", "rzx"):
            assert last[fam] <= first[fam]
            assert last[fam] < 1e-4

    def test_noisy_recovery_small(self):
        circuit, stabs = prepared(Graph.line(3), 0.01, 7)
        layout = NoiseLayout.gate_aligned_pauli(circuit, 0.01, seed=8)
        trace = minimize(
            NoisyCost(circuit, layout, stabs),
            OptimizerSettings(grad_tolerance=1e-6),
        )
        assert trace.converged
        resid = trace.final_theta + circuit.epsilon_vector()
        assert np.abs(resid).max() < 1e-3

    def test_gradient_descent_mode(self):
        circuit, stabs = prepared(Graph.line(2), 0.005, 9)
        trace = minimize(
            PureCost(circuit, stabs),
            OptimizerSettings(adaptive=False, learning_rate=0.2, max_iters=500),
        )
        assert trace.converged

    def test_unconverged_flag(self):
        circuit, stabs = prepared(Graph.line(3), 0.01, 10)
        trace = minimize(PureCost(circuit, stabs), OptimizerSettings(max_iters=3))
        assert not trace.converged and trace.num_iterations == 3

    def test_deterministic_traces(self):
        circuit, stabs = prepared(Graph.line(3), 0.01, 11)
        t1 = minimize(PureCost(circuit, stabs), OptimizerSettings(max_iters=50))
        t2 = minimize(PureCost(circuit, stabs), OptimizerSettings(max_iters=50))
        assert t1.iterations == t2.iterations
        assert np.array_equal(t1.final_theta, t2.final_theta)
