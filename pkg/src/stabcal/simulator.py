"""Exact dense simulation of native circuits with interleaved noise.

State vectors are flat arrays indexed with qubit 0 as the least-significant
bit.  Density matrices are stored flat with row and column bits interleaved
per qubit (..., r_1, c_1, r_0, c_0), which makes every local channel an
operation on adjacent axes and keeps the hot loops as contiguous reshaped
matmuls.  Pauli observables are evaluated by bit-indexed gathers; the dense
2^n x 2^n form of an observable is never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import Channel, DepolarizingChannel, NoiseLayout, PauliChannel
from .circuits import NativeGate, ParamCircuit
from .pauli import PauliString

PURE_QUBIT_CAP = 14
NOISY_QUBIT_CAP = 12

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ResourceLimitError(RuntimeError):
    """Register size exceeds the configured dense-simulation budget."""


# ---------------------------------------------------------------------------
# Index tables
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _spread_bits(n: int) -> np.ndarray:
    """bit j of b -> bit 2j; maps a row/col index into the interleaved flat."""
    b = np.arange(1 << n, dtype=np.int64)
    out = np.zeros_like(b)
    for j in range(n):
        out |= ((b >> j) & 1) << (2 * j)
    return out


@lru_cache(maxsize=None)
def _parity_table(n: int, mask: int) -> np.ndarray:
    b = np.arange(1 << n, dtype=np.int64)
    return (np.bitwise_count(b & np.int64(mask)) & 1).astype(np.int64)


def _phase_unit(exp: int) -> complex:
    return (1, 1j, -1, -1j)[exp % 4]


# ---------------------------------------------------------------------------
# Axis kernels (flat arrays viewed as (2,)*total tensors, C order)
# ---------------------------------------------------------------------------

def _apply_axis(flat: np.ndarray, m2: np.ndarray, ax: int, total: int) -> np.ndarray:
    pre = 1 << ax
    post = 1 << (total - ax - 1)
    return np.matmul(m2, flat.reshape(pre, 2, post)).reshape(-1)


def _apply_axis_pair(flat, m4, ax: int, total: int) -> np.ndarray:
    """4x4 matrix on the adjacent axes (ax, ax+1)."""
    pre = 1 << ax
    post = 1 << (total - ax - 2)
    return np.matmul(m4, flat.reshape(pre, 4, post)).reshape(-1)


def _apply_two_pairs(flat, m16, ax1: int, ax2: int, total: int) -> np.ndarray:
    """16x16 matrix on two adjacent axis pairs starting at ax1 < ax2."""
    a = 1 << ax1
    b = 1 << (ax2 - ax1 - 2)
    c = 1 << (total - ax2 - 2)
    t = flat.reshape(a, 4, b, 4, c)
    out = np.tensordot(m16.reshape(4, 4, 4, 4), t, axes=([2, 3], [1, 3]))
    return np.ascontiguousarray(np.moveaxis(out, (0, 1), (1, 3))).reshape(-1)


# Statevector: qubit q lives on axis n-1-q of an n-axis view.
def vec_axis(n: int, q: int) -> int:
    return n - 1 - q


# Density: qubit q's row axis in the interleaved 2n-axis view.
def rho_row_axis(n: int, q: int) -> int:
    return 2 * (n - 1 - q)


def gate_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    if kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    raise ValueError(f"no dense 2x2 for gate kind {kind!r}")


def vec_apply_gate(flat, n: int, gate: NativeGate, angle: float) -> np.ndarray:
    if gate.kind in ("rz", "rx"):
        return _apply_axis(flat, gate_matrix(gate.kind, angle), vec_axis(n, gate.qubits[0]), n)
    a, b = gate.qubits
    t = _apply_axis(flat, _X, vec_axis(n, b), n)
    t = _apply_axis(t, _Z, vec_axis(n, a), n)
    return math.cos(angle / 2) * flat - 1j * math.sin(angle / 2) * t


def vec_apply_pauli(flat, n: int, p: PauliString) -> np.ndarray:
    """P|psi> via one gather: P|b> = eta (-1)^(b.z) |b xor x>."""
    idx = np.arange(1 << n, dtype=np.int64) ^ np.int64(p.xs)
    signs = 1.0 - 2.0 * _parity_table(n, p.zs)
    eta = _phase_unit(p.phase_exp + (p.xs & p.zs).bit_count())
    return eta * (signs * flat)[idx]


def rho_apply_gate(flat, n: int, gate: NativeGate, angle: float) -> np.ndarray:
    """rho -> U rho U^dag in the interleaved layout."""
    total = 2 * n
    if gate.kind in ("rz", "rx"):
        u = gate_matrix(gate.kind, angle)
        ax = rho_row_axis(n, gate.qubits[0])
        t = _apply_axis(flat, u, ax, total)
        return _apply_axis(t, u.conj(), ax + 1, total)
    a, b = gate.qubits
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    # rows: U = c - i s (Z_a X_b);  cols: conj(U) = c + i s (Z_a X_b)
    t = _apply_axis(flat, _X, rho_row_axis(n, b), total)
    t = _apply_axis(t, _Z, rho_row_axis(n, a), total)
    out = c * flat - 1j * s * t
    t = _apply_axis(out, _X, rho_row_axis(n, b) + 1, total)
    t = _apply_axis(t, _Z, rho_row_axis(n, a) + 1, total)
    return c * out + 1j * s * t


def rho_apply_pauli_left(flat, n: int, p: PauliString) -> np.ndarray:
    """rho -> P rho (left action only), used by adjoint-state gradients."""
    total = 2 * n
    out = flat
    for q in range(n):
        xbit, zbit = (p.xs >> q) & 1, (p.zs >> q) & 1
        ax = rho_row_axis(n, q)
        if xbit and zbit:
            out = _apply_axis(out, 1j * (_X @ _Z), ax, total)
        elif xbit:
            out = _apply_axis(out, _X, ax, total)
        elif zbit:
            out = _apply_axis(out, _Z, ax, total)
    if p.phase_exp:
        out = _phase_unit(p.phase_exp) * out
    return out


def rho_transpose(flat, n: int) -> np.ndarray:
    t = flat.reshape((2,) * (2 * n))
    perm = [ax ^ 1 for ax in range(2 * n)]  # swap each (row, col) axis pair
    return np.ascontiguousarray(np.transpose(t, perm)).reshape(-1)


@lru_cache(maxsize=256)
def _local_conj_superop(labels: tuple[str, ...], probs: tuple[float, ...]):
    """sum_j p_j kron-per-qubit (w (.) w^dag) with (row,col) index pairing."""
    k = len(labels[0])
    dim = 4**k
    out = np.zeros((dim, dim), dtype=complex)
    for lbl, p in zip(labels, probs):
        term = np.array([[1.0 + 0j]])
        for ch in lbl:
            w = PauliString.from_label(ch).to_matrix()
            term = np.kron(term, np.kron(w, w.conj()))
        out += p * term
    return out


def _factor_local_form(f: PauliChannel) -> tuple[tuple[int, ...], tuple, tuple]:
    # Qubits descending: the higher qubit sits on the lower (more significant)
    # axis, matching the kron order of the cached superoperator.
    qubits = tuple(sorted(f.support, reverse=True)) or (0,)
    labels, probs = [], []
    for p, s in f.terms:
        labels.append("".join(s.letter(q) for q in qubits))
        probs.append(round(float(p), 15))
    return qubits, tuple(labels), tuple(probs)


def _gate_local_superop(gate: NativeGate, angle: float) -> np.ndarray:
    """U (.) U^dag on the gate's own support with (row, col) index pairing.

    Two-qubit superoperators put the higher qubit on the more significant
    index pair, matching `_factor_local_form` and `_apply_two_pairs`.
    """
    if gate.kind in ("rz", "rx"):
        u = gate_matrix(gate.kind, angle)
        return np.kron(u, u.conj())
    a, b = gate.qubits  # Z side, X side
    parts = {a: _Z, b: _X}
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    u = c * np.eye(4) - 1j * s * np.kron(
        parts[max(a, b)], parts[min(a, b)]
    )
    k = np.kron(u, u.conj()).reshape((2,) * 8)
    # rows (r_hi r_lo c_hi c_lo), cols primed -> (r c) pairs per qubit
    return np.ascontiguousarray(
        np.transpose(k, (0, 2, 1, 3, 4, 6, 5, 7))
    ).reshape(16, 16)


def rho_apply_moment(
    flat, n: int, moment, angles, factors, adjoint: bool = False
) -> np.ndarray:
    """One circuit moment plus its noise factors, with gate/factor fusion.

    A factor whose support equals a gate's support is folded into that
    gate's local superoperator (one pass instead of several); remaining
    factors are applied afterwards.  Pauli-type factors all commute, so this
    reordering is exact.  With `adjoint=True` the map's adjoint is applied
    instead (channels are self-adjoint, gates reverse their angle), which is
    what back-propagating an observable needs.
    """
    total = 2 * n
    gate_supports = {frozenset(g.qubits) for g in moment.gates}
    matched: dict[frozenset, list] = {}
    unmatched: list = []
    for f in factors:
        sup = frozenset(f.support) if isinstance(f, PauliChannel) else None
        if sup in gate_supports and 1 <= len(sup) <= 2:
            matched.setdefault(sup, []).append(f)
        else:
            unmatched.append(f)

    def fused(gate, angle):
        gate_sup = _gate_local_superop(gate, -angle if adjoint else angle)
        ops = [gate_sup]
        for f in matched.get(frozenset(gate.qubits), ()):
            _, labels, probs = _factor_local_form(f)
            ops.append(_local_conj_superop(labels, probs))
        if adjoint:
            acc = ops[0]
            for m in ops[1:]:
                acc = acc @ m  # channels first when running backwards
            return acc
        acc = ops[0]
        for m in ops[1:]:
            acc = m @ acc
        return acc

    out = flat
    if adjoint:  # channels precede the inverted gates in the adjoint order
        for f in unmatched:
            out = rho_apply_factor(out, n, f)
    for g, a in zip(moment.gates, angles):
        op = fused(g, a)
        if op.shape[0] == 4:
            out = _apply_axis_pair(out, op, rho_row_axis(n, g.qubits[0]), total)
        else:
            hi, lo = max(g.qubits), min(g.qubits)
            out = _apply_two_pairs(
                out, op, rho_row_axis(n, hi), rho_row_axis(n, lo), total
            )
    if not adjoint:
        for f in unmatched:
            out = rho_apply_factor(out, n, f)
    return out


def rho_apply_factor(flat, n: int, f: Channel) -> np.ndarray:
    """Apply one noise factor; Pauli channels of support 1 or 2 hit the fast
    adjacent-axes path, larger ones fall back to per-term conjugation."""
    total = 2 * n
    if isinstance(f, DepolarizingChannel):
        spread = _spread_bits(n)
        diag = 3 * spread  # interleaved flat index of (b, b)
        tr = flat[diag].sum()
        out = (1.0 - f.p) * flat
        out[diag] += f.p * tr / (1 << n)
        return out
    qubits, labels, probs = _factor_local_form(f)
    if len(qubits) == 1:
        m4 = _local_conj_superop(labels, probs)
        return _apply_axis_pair(flat, m4, rho_row_axis(n, qubits[0]), total)
    if len(qubits) == 2:
        m16 = _local_conj_superop(labels, probs)
        # qubits is descending, so axis(qubits[0]) < axis(qubits[1])
        return _apply_two_pairs(
            flat, m16, rho_row_axis(n, qubits[0]), rho_row_axis(n, qubits[1]), total
        )
    out = np.zeros_like(flat)
    for p, s in f.terms:
        term = flat
        for q in sorted(s.support):
            w = PauliString.from_label(s.letter(q)).to_matrix()
            term = _apply_axis_pair(
                term, np.kron(w, w.conj()), rho_row_axis(n, q), total
            )
        out += p * term
    return out


# ---------------------------------------------------------------------------
# Public state types
# ---------------------------------------------------------------------------

@dataclass
class StateVector:
    n: int
    amplitudes: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amp = np.zeros(1 << n, dtype=complex)
        amp[0] = 1.0
        return cls(n, amp)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def validate(self, tol: float = 1e-10) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise ValueError(f"state norm {self.norm()} is not 1")


@dataclass
class DensityMatrix:
    """Dense density matrix; `flat` uses the interleaved (row, col) layout."""

    n: int
    flat: np.ndarray

    @classmethod
    def zero_state(cls, n: int) -> "DensityMatrix":
        flat = np.zeros(1 << (2 * n), dtype=complex)
        flat[0] = 1.0
        return cls(n, flat)

    @classmethod
    def from_statevector(cls, psi: StateVector) -> "DensityMatrix":
        return cls.from_matrix(
            psi.n, np.outer(psi.amplitudes, psi.amplitudes.conj())
        )

    @classmethod
    def from_matrix(cls, n: int, m: np.ndarray) -> "DensityMatrix":
        t = np.asarray(m, dtype=complex).reshape((2,) * (2 * n))
        # rows first (axes 0..n-1) -> interleave with column axes
        perm = []
        for j in range(n):
            perm.extend((j, n + j))
        return cls(n, np.ascontiguousarray(np.transpose(t, perm)).reshape(-1))

    @property
    def matrix(self) -> np.ndarray:
        t = self.flat.reshape((2,) * (2 * self.n))
        perm = [2 * j for j in range(self.n)] + [2 * j + 1 for j in range(self.n)]
        dim = 1 << self.n
        return np.ascontiguousarray(np.transpose(t, perm)).reshape(dim, dim)

    def trace(self) -> complex:
        diag = 3 * _spread_bits(self.n)
        return complex(self.flat[diag].sum())

    def validate(self, tol: float = 1e-10, eigen: bool = False) -> None:
        tr = self.trace()
        if abs(tr - 1.0) > tol:
            raise ValueError(f"trace {tr} is not 1")
        herm_gap = np.max(np.abs(self.flat - rho_transpose(self.flat.conj(), self.n)))
        if herm_gap > tol:
            raise ValueError(f"hermiticity violated by {herm_gap}")
        if eigen:
            vals = np.linalg.eigvalsh(self.matrix)
            if vals.min() < -1e-9:
                raise ValueError(f"negative eigenvalue {vals.min()}")


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------

def _resolved_angles(circuit: ParamCircuit, theta, gate_shifts=None):
    tmap = circuit.theta_map(theta)
    shifts = gate_shifts or {}
    angles = []
    for mi, moment in enumerate(circuit.moments):
        row = []
        for gi, g in enumerate(moment.gates):
            a = g.clifford_angle + tmap[g.param_key] + circuit.epsilons[g.param_key]
            a += shifts.get((mi, gi), 0.0)
            row.append(a)
        angles.append(row)
    return angles


def run_pure(circuit: ParamCircuit, theta, gate_shifts=None) -> StateVector:
    """Statevector evolution of the noiseless circuit."""
    if circuit.n > PURE_QUBIT_CAP:
        raise ResourceLimitError(
            f"{circuit.n} qubits exceeds the {PURE_QUBIT_CAP}-qubit statevector cap"
        )
    angles = _resolved_angles(circuit, theta, gate_shifts)
    flat = StateVector.zero(circuit.n).amplitudes
    for moment, row in zip(circuit.moments, angles):
        for g, a in zip(moment.gates, row):
            flat = vec_apply_gate(flat, circuit.n, g, a)
    return StateVector(circuit.n, flat)


def run_noisy(
    circuit: ParamCircuit, theta, layout: NoiseLayout, gate_shifts=None
) -> DensityMatrix:
    """Density-matrix evolution with each moment's channels applied after it."""
    if circuit.n > NOISY_QUBIT_CAP:
        raise ResourceLimitError(
            f"{circuit.n} qubits exceeds the {NOISY_QUBIT_CAP}-qubit density cap"
        )
    layout.check_alignment(circuit)
    angles = _resolved_angles(circuit, theta, gate_shifts)
    flat = DensityMatrix.zero_state(circuit.n).flat
    for q, (moment, row) in enumerate(zip(circuit.moments, angles)):
        flat = rho_apply_moment(flat, circuit.n, moment, row, layout[q])
    return DensityMatrix(circuit.n, flat)


def apply_channel(rho: DensityMatrix, channel: Channel) -> DensityMatrix:
    """One channel application; trace and hermiticity are preserved."""
    if isinstance(channel, (PauliChannel, DepolarizingChannel)):
        if channel.n != rho.n:
            raise ValueError("register size mismatch")
        return DensityMatrix(rho.n, rho_apply_factor(rho.flat, rho.n, channel))
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def apply_unitary(rho: DensityMatrix, u: np.ndarray, qubits) -> DensityMatrix:
    """Dense unitary on the listed qubits (first qubit = most significant)."""
    from .circuits import embed_operator

    full = embed_operator(np.asarray(u, dtype=complex), qubits, rho.n)
    return DensityMatrix.from_matrix(rho.n, full @ rho.matrix @ full.conj().T)


def expectation(state, s: PauliString) -> float:
    """<P> for a state vector or density matrix, via bit-indexed gathers."""
    if isinstance(state, StateVector):
        if state.n != s.n:
            raise ValueError("register size mismatch")
        n = state.n
        psi = state.amplitudes
        idx = np.arange(1 << n, dtype=np.int64) ^ np.int64(s.xs)
        signs = 1.0 - 2.0 * _parity_table(n, s.zs)
        eta = _phase_unit(s.phase_exp + (s.xs & s.zs).bit_count())
        val = eta * np.dot(psi.conj()[idx], signs * psi)
    elif isinstance(state, DensityMatrix):
        if state.n != s.n:
            raise ValueError("register size mismatch")
        n = state.n
        b = np.arange(1 << n, dtype=np.int64)
        spread = _spread_bits(n)
        rows = spread[b ^ np.int64(s.xs)]
        signs = 1.0 - 2.0 * _parity_table(n, s.zs)
        shifted = signs[b ^ np.int64(s.xs)]
        eta = _phase_unit(s.phase_exp + (s.xs & s.zs).bit_count())
        val = eta * np.dot(shifted, state.flat[2 * rows + spread[b]])
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    if abs(val.imag) > 1e-9:
        raise ValueError(f"expectation has imaginary part {val.imag}")
    return float(val.real)
