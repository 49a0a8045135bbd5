import math

import numpy as np
import pytest

from stabcal.channels import NoiseLayout, PauliChannel
from stabcal.circuits import build_ghz_circuit, transpile
from stabcal.ghz_analytic import (
    END_CHANNEL_PROBS,
    MOMENT1_PROBS,
    MOMENT2_PROBS,
    VARIANTS,
    composed_moment_probs,
    cx_block,
    cx_exponential,
    ghz_cost_depol,
    ghz_cost_end_pauli,
    ghz_cost_moment_pauli,
    ghz_cost_noiseless,
    landscape,
    simulate_depol,
    simulate_end_pauli,
    simulate_moment_pauli,
    simulate_noiseless,
)

THETAS = np.linspace(-math.pi, math.pi, 101)


class TestClosedFormValues:
    def test_noiseless_minimum(self):
        assert abs(ghz_cost_noiseless(-0.5, 0.5) + 2.0) < 1e-12

    def test_noiseless_zero_crossing(self):
        # total flip angle twice around: sin vanishes
        assert abs(ghz_cost_noiseless(0.7, math.pi - 0.7)) < 1e-12

    def test_noiseless_quarter_point(self):
        expected = -math.sqrt(2) / 2 - 0.5
        assert abs(ghz_cost_noiseless(-math.pi / 2, 0.0) - expected) < 1e-12

    def test_noiseless_slope_at_quarter_point(self):
        # analytic differentiation gives -sqrt(2)/4 - 1/2 at a quarter turn
        h = 1e-7
        slope = (
            ghz_cost_noiseless(-math.pi / 2 + h, 0.0)
            - ghz_cost_noiseless(-math.pi / 2 - h, 0.0)
        ) / (2 * h)
        assert abs(slope - (-math.sqrt(2) / 4 - 0.5)) < 1e-7

    def test_end_pauli_minimum_value(self):
        assert abs(ghz_cost_end_pauli(-0.3, 0.3) - (-1.16)) < 1e-12

    def test_end_pauli_reduces_to_noiseless(self):
        trivial = {"II": 1.0}
        for t in (-1.0, 0.2, 2.5):
            assert ghz_cost_end_pauli(t, 0.1, trivial) == pytest.approx(
                ghz_cost_noiseless(t, 0.1)
            )

    def test_end_pauli_validation(self):
        with pytest.raises(ValueError):
            ghz_cost_end_pauli(0, 0, {"II": 0.5})

    def test_depol_values(self):
        assert abs(ghz_cost_depol(-0.1, 0.1, 0.2) - (-1.28)) < 1e-12
        assert ghz_cost_depol(0.4, 0.0, 0.0) == ghz_cost_noiseless(0.4, 0.0)
        for t in (-2.0, 0.0, 1.0):
            assert ghz_cost_depol(t, 0.3, 1.0) == 0.0
        with pytest.raises(ValueError):
            ghz_cost_depol(0, 0, 1.2)

    def test_moment_pauli_trivial_channels(self):
        ident = {"II": 1.0, "ZI": 0.0, "XI": 0.0, "YI": 0.0}
        ident2 = {"II": 1.0, "ZI": 0.0, "IZ": 0.0, "XI": 0.0, "IX": 0.0}
        for t in (-1.3, 0.0, 0.8):
            got = ghz_cost_moment_pauli(t, 0.2, ident, ident2)
            s = math.sin((math.pi + t + 0.2) / 2)
            assert abs(got - (-2 * s * s)) < 1e-12

    def test_composed_probs_sum_to_one(self):
        p = composed_moment_probs()
        assert abs(sum(p.values()) - 1.0) < 1e-12
        assert np.isclose(p["IZ"], 0.08)


class TestGateParametrizations:
    def test_both_reduce_to_cnot(self):
        cnot = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        assert np.allclose(cx_block(math.pi), cnot)
        assert np.allclose(cx_exponential(math.pi), cnot)

    def test_exponential_form_is_a_one_parameter_group(self):
        for a, b in [(0.3, 0.5), (-1.0, 0.4)]:
            assert np.allclose(
                cx_exponential(a) @ cx_exponential(b), cx_exponential(a + b)
            )


class TestClosedFormsMatchSimulation:
    @pytest.mark.parametrize("variant", VARIANTS)
    def test_grid_agreement(self, variant):
        rows = landscape(variant, epsilon=0.37, thetas=THETAS)
        assert max(r[3] for r in rows) < 1e-12

    def test_grid_agreement_other_epsilon(self):
        for variant in VARIANTS:
            rows = landscape(variant, epsilon=0.0, thetas=THETAS[::10])
            assert max(r[3] for r in rows) < 1e-12

    def test_moment_pauli_gap_is_identically_zero(self):
        # closed form == pushed-to-the-end prediction, so agreement with the
        # interleaved simulation certifies a vanishing remainder everywhere
        for t in THETAS:
            sim = simulate_moment_pauli(float(t), 0.37)
            pred = ghz_cost_moment_pauli(float(t), 0.37)
            assert abs(sim - pred) < 1e-12


class TestStationaryPoint:
    @pytest.mark.parametrize(
        "fn",
        [
            ghz_cost_noiseless,
            ghz_cost_end_pauli,
            lambda t, e: ghz_cost_depol(t, e, 0.2),
            ghz_cost_moment_pauli,
        ],
    )
    def test_first_difference_vanishes_at_recovered_angle(self, fn):
        eps, h = 0.31, 1e-6
        diff = (fn(-eps + h, eps) - fn(-eps - h, eps)) / (2 * h)
        assert abs(diff) < 1e-8


class TestAgainstPackageSimulator:
    def test_end_pauli_matches_simulator_primitives(self):
        # same scenario driven through the package density machinery
        from stabcal.ghz_analytic import _H2, cx_block  # scenario operators
        from stabcal.simulator import DensityMatrix, apply_channel, expectation
        from stabcal.pauli import PauliString

        ch = PauliChannel.from_probs(END_CHANNEL_PROBS)
        for t in np.linspace(-math.pi, math.pi, 21):
            u = cx_block(math.pi + t + 0.37) @ _H2
            psi = u[:, 0]
            # module convention: first tensor factor = qubit 1 of the package
            rho = DensityMatrix.from_matrix(2, np.outer(psi, psi.conj()))
            rho = apply_channel(rho, _relabeled(ch))
            got = -expectation(rho, PauliString.from_label("XX")) - expectation(
                rho, PauliString.from_label("ZZ")
            )
            assert abs(got - ghz_cost_end_pauli(float(t), 0.37)) < 1e-12

    def test_effective_channel_matches_composed_probs(self):
        # scenario labels put the control first; package labels put qubit 0
        # first, and the native chain's control is qubit 0, so they coincide
        circuit = transpile(build_ghz_circuit(2))
        from stabcal.channels import effective_end_channel

        p1 = PauliChannel.from_probs(MOMENT1_PROBS)
        p2 = PauliChannel.from_probs(MOMENT2_PROBS)
        layout = NoiseLayout(((), (), (p1,), (), (p2,)))
        out = effective_end_channel(layout, circuit)
        expected = composed_moment_probs()
        got = out.prob_map()
        assert set(got) == {k for k, v in expected.items() if v > 0}
        for label, value in got.items():
            assert np.isclose(value, expected[label], atol=1e-14)


def _relabeled(ch: PauliChannel) -> PauliChannel:
    # the scenario's dense vectors put the control on the most significant
    # bit, i.e. package qubit 1, so channel labels reverse when crossing over
    return PauliChannel.from_probs(
        {lbl[::-1]: p for lbl, p in ch.prob_map().items()}
    )
