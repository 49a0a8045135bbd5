"""Stabilizer-expectation cost functions and their derivatives.

The base cost is C(theta) = -sum_i <S_i> on the circuit's output state; its
global minimum -n certifies the target stabilizer state.  Noisy variants
either simulate the per-moment channels exactly or rescale each term by the
chi factor of the channels pushed to the end of the circuit; the difference
of those two is the remainder gap.

Gradients come in two exact flavours: the quarter-turn parameter-shift rule
(the reference path, one pair of shifted evaluations per gate occurrence)
and an adjoint-state sweep that recovers the full gradient for the price of
about three simulations, used by the optimizer loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (
    DepolarizingChannel,
    NoiseLayout,
    PauliChannel,
    chi_factor,
    conjugated_layout_channels,
)
from .circuits import ParamCircuit
from .pauli import StabilizerSet
from .simulator import (
    NOISY_QUBIT_CAP,
    PURE_QUBIT_CAP,
    DensityMatrix,
    ResourceLimitError,
    StateVector,
    _parity_table,
    _phase_unit,
    _spread_bits,
    expectation,
    rho_apply_moment,
    rho_apply_pauli_left,
    rho_transpose,
    run_noisy,
    run_pure,
    vec_apply_gate,
    vec_apply_pauli,
)

ADJOINT_DENSITY_CAP = 10  # adjoint sweep stores one state per moment


@dataclass(frozen=True)
class CostReport:
    total: float
    per_stabilizer: tuple[float, ...]
    theta: tuple[float, ...]

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "per_stabilizer": list(self.per_stabilizer),
            "theta": list(self.theta),
        }


def _report(per_stab, theta) -> CostReport:
    per = tuple(float(v) for v in per_stab)
    return CostReport(float(sum(per)), per, tuple(np.asarray(theta, float).tolist()))


def _stab_operator_flat(n: int, stabs: StabilizerSet, weights=None) -> np.ndarray:
    """-sum_i w_i S_i as a dense operator in the interleaved density layout."""
    spread = _spread_bits(n)
    cols = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << (2 * n), dtype=complex)
    ws = [1.0] * len(stabs) if weights is None else list(weights)
    for w, s in zip(ws, stabs):
        rows = spread[cols ^ np.int64(s.xs)]
        signs = 1.0 - 2.0 * _parity_table(n, s.zs)
        eta = _phase_unit(s.phase_exp + (s.xs & s.zs).bit_count())
        np.add.at(out, 2 * rows + spread[cols], -w * eta * signs)
    return out


class PureCost:
    """C(theta) = -sum_i <S_i> on the noiseless statevector."""

    def __init__(self, circuit: ParamCircuit, stabs: StabilizerSet):
        if circuit.n != stabs.n:
            raise ValueError("circuit and stabilizers disagree on register size")
        if circuit.n > PURE_QUBIT_CAP:
            raise ResourceLimitError(
                f"{circuit.n} qubits exceeds the {PURE_QUBIT_CAP}-qubit statevector cap"
            )
        self.circuit = circuit
        self.stabs = stabs

    def report(self, theta) -> CostReport:
        psi = run_pure(self.circuit, theta)
        return _report([-expectation(psi, s) for s in self.stabs], theta)

    def value(self, theta) -> float:
        return self.report(theta).total

    def value_shifted(self, theta, gate_shifts) -> float:
        psi = run_pure(self.circuit, theta, gate_shifts)
        return float(sum(-expectation(psi, s) for s in self.stabs))

    def _weights(self):
        return None

    def value_and_grad(self, theta):
        """Adjoint-state sweep: forward once, then peel moments off both the
        state and the back-propagated observable image."""
        c, n = self.circuit, self.circuit.n
        angles = _angles(c, theta)
        psi = StateVector.zero(n).amplitudes
        for moment, row in zip(c.moments, angles):
            for g, a in zip(moment.gates, row):
                psi = vec_apply_gate(psi, n, g, a)
        ws = self._weights() or [1.0] * len(self.stabs)
        b = np.zeros_like(psi)
        for w, s in zip(ws, self.stabs):
            b += -w * vec_apply_pauli(psi, n, s)
        value = float(np.vdot(psi, b).real)
        grad = np.zeros(len(c.param_keys))
        kidx = c.key_index()
        # The generator commutes with its own moment, so each derivative can
        # be evaluated against the pre-moment state pair.
        for q in range(c.num_moments - 1, -1, -1):
            moment, row = c.moments[q], angles[q]
            for g, a in zip(moment.gates, row):
                psi = vec_apply_gate(psi, n, g, -a)
                b = vec_apply_gate(b, n, g, -a)
            for g in moment.gates:
                pg = g.generator(n)
                grad[kidx[g.param_key]] += np.vdot(
                    b, vec_apply_pauli(psi, n, pg)
                ).imag
        return value, grad


class EndChannelScaledCost(PureCost):
    """Noisy cost predicted by rescaling each term with its chi factor.

    The channel stack is applied analytically: chi_i multiplies C_i, no
    density matrix is ever formed.  `channels` may be a single channel or a
    sequence composing to the effective end-of-circuit map.
    """

    def __init__(self, circuit, stabs, channels):
        super().__init__(circuit, stabs)
        if isinstance(channels, (PauliChannel, DepolarizingChannel)):
            channels = (channels,)
        self.channels = tuple(channels)
        self.chis = tuple(chi_factor(self.channels, s) for s in stabs)

    def report(self, theta) -> CostReport:
        psi = run_pure(self.circuit, theta)
        return _report(
            [-x * expectation(psi, s) for x, s in zip(self.chis, self.stabs)], theta
        )

    def value_shifted(self, theta, gate_shifts) -> float:
        psi = run_pure(self.circuit, theta, gate_shifts)
        return float(
            sum(-x * expectation(psi, s) for x, s in zip(self.chis, self.stabs))
        )

    def _weights(self):
        return self.chis


class NoisyCost:
    """C(theta) from the exact interleaved density-matrix simulation."""

    def __init__(self, circuit: ParamCircuit, layout: NoiseLayout, stabs):
        if circuit.n != stabs.n:
            raise ValueError("circuit and stabilizers disagree on register size")
        if circuit.n > NOISY_QUBIT_CAP:
            raise ResourceLimitError(
                f"{circuit.n} qubits exceeds the {NOISY_QUBIT_CAP}-qubit density cap"
            )
        layout.check_alignment(circuit)
        self.circuit = circuit
        self.layout = layout
        self.stabs = stabs
        self._obs_flat: np.ndarray | None = None

    def report(self, theta) -> CostReport:
        rho = run_noisy(self.circuit, theta, self.layout)
        return _report([-expectation(rho, s) for s in self.stabs], theta)

    def value(self, theta) -> float:
        return self.report(theta).total

    def value_shifted(self, theta, gate_shifts) -> float:
        rho = run_noisy(self.circuit, theta, self.layout, gate_shifts)
        return float(sum(-expectation(rho, s) for s in self.stabs))

    def value_and_grad(self, theta):
        """Adjoint sweep on density matrices; needs one stored state per
        moment, so it is capped at small registers."""
        c, n = self.circuit, self.circuit.n
        if n > ADJOINT_DENSITY_CAP:
            return self.value(theta), gradient(self, theta)
        angles = _angles(c, theta)
        flat = DensityMatrix.zero_state(n).flat
        states = [flat]  # state before each moment
        for q, (moment, row) in enumerate(zip(c.moments, angles)):
            flat = rho_apply_moment(flat, n, moment, row, self.layout[q])
            states.append(flat)
        rho = DensityMatrix(n, flat)
        value = float(sum(-expectation(rho, s) for s in self.stabs))
        if self._obs_flat is None:
            self._obs_flat = _stab_operator_flat(n, self.stabs)
        obs = self._obs_flat
        grad = np.zeros(len(c.param_keys))
        kidx = c.key_index()
        # The generator commutes with its own moment, so each derivative
        # pairs the fully back-propagated observable with the pre-moment
        # state: dC/da = Im Tr(O_q P rho_{q-1}).
        for q in range(c.num_moments - 1, -1, -1):
            moment, row = c.moments[q], angles[q]
            obs = rho_apply_moment(obs, n, moment, row, self.layout[q], adjoint=True)
            obs_t = rho_transpose(obs, n)
            for g in moment.gates:
                pg = g.generator(n)
                val = np.dot(obs_t, rho_apply_pauli_left(states[q], n, pg))
                grad[kidx[g.param_key]] += val.imag
        return value, grad


class CostGap:
    """Exact noisy cost minus its end-channel chi-factor prediction."""

    def __init__(self, circuit: ParamCircuit, layout: NoiseLayout, stabs):
        self.noisy = NoisyCost(circuit, layout, stabs)
        moved = conjugated_layout_channels(layout, circuit)
        factors = tuple(f for entry in moved for f in entry)
        self.scaled = EndChannelScaledCost(circuit, stabs, factors)
        self.circuit = circuit
        self.stabs = stabs

    def value(self, theta) -> float:
        return self.noisy.value(theta) - self.scaled.value(theta)

    def value_shifted(self, theta, gate_shifts) -> float:
        return self.noisy.value_shifted(theta, gate_shifts) - self.scaled.value_shifted(
            theta, gate_shifts
        )

    def value_and_grad(self, theta):
        v1, g1 = self.noisy.value_and_grad(theta)
        v2, g2 = self.scaled.value_and_grad(theta)
        return v1 - v2, g1 - g2


# ---------------------------------------------------------------------------
# Operation-style wrappers
# ---------------------------------------------------------------------------

def cost(circuit: ParamCircuit, theta, stabs: StabilizerSet) -> CostReport:
    return PureCost(circuit, stabs).report(theta)


def noisy_cost(
    circuit: ParamCircuit, theta, layout: NoiseLayout, stabs: StabilizerSet
) -> CostReport:
    return NoisyCost(circuit, layout, stabs).report(theta)


def chi_scaled_cost(circuit, theta, end_channel, stabs) -> CostReport:
    return EndChannelScaledCost(circuit, stabs, end_channel).report(theta)


def delta_cost(circuit, theta, layout: NoiseLayout, stabs) -> float:
    """Gap between the exact noisy cost and the chi-rescaled prediction.

    Requires a layout of Pauli-type channels (explicit or depolarizing), for
    which the end-channel prediction is well defined.
    """
    if not all(
        isinstance(f, (PauliChannel, DepolarizingChannel))
        for entry in layout.entries
        for f in entry
    ):
        raise ValueError("layout contains non-Pauli channels")
    return CostGap(circuit, layout, stabs).value(theta)


def _angles(circuit: ParamCircuit, theta):
    tmap = circuit.theta_map(theta)
    return [
        [
            g.clifford_angle + tmap[g.param_key] + circuit.epsilons[g.param_key]
            for g in m.gates
        ]
        for m in circuit.moments
    ]


def gradient(f, theta) -> np.ndarray:
    """Parameter-shift gradient over shared keys.

    Every gate occurrence of a key is shifted by a quarter turn in both
    directions; half the difference, summed over occurrences, is the exact
    derivative for half-angle Pauli generators.
    """
    circuit: ParamCircuit = f.circuit
    theta = np.asarray(theta, dtype=float)
    by_key: dict[str, list[tuple[int, int]]] = {k: [] for k in circuit.param_keys}
    for mi, moment in enumerate(circuit.moments):
        for gi, g in enumerate(moment.gates):
            by_key[g.param_key].append((mi, gi))
    grad = np.zeros(len(circuit.param_keys))
    for ki, key in enumerate(circuit.param_keys):
        acc = 0.0
        for gid in by_key[key]:
            up = f.value_shifted(theta, {gid: math.pi / 2})
            down = f.value_shifted(theta, {gid: -math.pi / 2})
            acc += 0.5 * (up - down)
        grad[ki] = acc
    return grad


def finite_difference_gradient(f, theta, step: float = 1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        grad[k] = (f.value(theta + e) - f.value(theta - e)) / (2 * step)
    return grad


def hessian_fd(f, theta, step: float = 1e-4) -> np.ndarray:
    """Symmetrized central-difference Hessian of a cost evaluator."""
    if step <= 0:
        raise ValueError("step must be positive")
    theta = np.asarray(theta, dtype=float)
    k = theta.size
    h = np.zeros((k, k))
    f0 = f.value(theta)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = step
        h[i, i] = (f.value(theta + 2 * ei) - 2 * f0 + f.value(theta - 2 * ei)) / (
            4 * step**2
        )
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = step
            val = (
                f.value(theta + ei + ej)
                - f.value(theta + ei - ej)
                - f.value(theta - ei + ej)
                + f.value(theta - ei - ej)
            ) / (4 * step**2)
            h[i, j] = h[j, i] = val
    return 0.5 * (h + h.T)
