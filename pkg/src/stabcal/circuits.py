"""Stabilizer-preparation circuits in the native {Rz, Rx, Rzx} basis.

Builders produce abstract Hadamard/CZ/CNOT circuits; `transpile` rewrites
them into native half-angle Pauli rotations exp(-i phi/2 P).  Every native
gate carries a fixed Clifford offset angle (a multiple of pi/2), a shared
variational parameter slot and a frozen angle error, so the gate actually
applied is exp(-i (phi + theta + eps)/2 P).

Parameter sharing: all gates of one kind on one qubit (or, for Rzx, on one
ordered qubit pair) share a single slot and a single error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from .pauli import Graph, PauliString
from .seeding import derived_rng

GATE_KINDS = ("rz", "rx", "rzx")

QUARTER = math.pi / 2


@dataclass(frozen=True, slots=True)
class NativeGate:
    kind: str
    qubits: tuple[int, ...]
    clifford_angle: float
    param_key: str

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown native gate kind {self.kind!r}")
        arity = 2 if self.kind == "rzx" else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("repeated qubit in gate support")
        k = self.clifford_angle / QUARTER
        if abs(k - round(k)) > 1e-9:
            raise ValueError(
                f"clifford_angle {self.clifford_angle} is not a multiple of pi/2"
            )

    @property
    def quarter_turns(self) -> int:
        return round(self.clifford_angle / QUARTER)

    def generator(self, n: int) -> PauliString:
        """The half-angle Pauli generator embedded in an n-qubit register."""
        if self.kind == "rz":
            return PauliString(n, zs=1 << self.qubits[0])
        if self.kind == "rx":
            return PauliString(n, xs=1 << self.qubits[0])
        a, b = self.qubits
        return PauliString(n, xs=1 << b, zs=1 << a)


@dataclass(frozen=True, slots=True)
class Moment:
    gates: tuple[NativeGate, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for g in self.gates:
            for q in g.qubits:
                if q in seen:
                    raise ValueError(f"qubit {q} used twice inside one moment")
                seen.add(q)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(q for g in self.gates for q in g.qubits)


def _default_key(kind: str, qubits: tuple[int, ...]) -> str:
    if kind == "rzx":
        return f"rzx:{qubits[0]}-{qubits[1]}"
    return f"{kind}:{qubits[0]}"


def key_family(key: str) -> str:
    """Gate family ('rz' / 'rx' / 'rzx') that a parameter slot belongs to."""
    fam = key.split(":", 1)[0]
    if fam not in GATE_KINDS:
        raise ValueError(f"parameter key {key!r} has no gate family")
    return fam


@dataclass(frozen=True)
class ParamCircuit:
    """A moment-structured native circuit with shared parameter slots."""

    n: int
    moments: tuple[Moment, ...]
    param_keys: tuple[str, ...] = ()
    epsilons: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        keys_seen: list[str] = []
        for m in self.moments:
            for g in m.gates:
                if any(q >= self.n or q < 0 for q in g.qubits):
                    raise ValueError(f"gate on {g.qubits} outside register")
                expected = _default_key(g.kind, g.qubits)
                if g.param_key != expected:
                    raise ValueError(
                        f"gate key {g.param_key!r} breaks the sharing rule "
                        f"(expected {expected!r})"
                    )
                if g.param_key not in keys_seen:
                    keys_seen.append(g.param_key)
        if not self.param_keys:
            object.__setattr__(self, "param_keys", tuple(keys_seen))
        elif set(self.param_keys) != set(keys_seen) or len(self.param_keys) != len(
            keys_seen
        ):
            raise ValueError("param_keys do not match the keys used by the gates")
        eps = {k: float(self.epsilons.get(k, 0.0)) for k in self.param_keys}
        unknown = set(self.epsilons) - set(self.param_keys)
        if unknown:
            raise ValueError(f"epsilons for unknown keys: {sorted(unknown)}")
        object.__setattr__(self, "epsilons", MappingProxyType(eps))

    @property
    def num_moments(self) -> int:
        return len(self.moments)

    def gate_count(self) -> int:
        return sum(len(m.gates) for m in self.moments)

    def key_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.param_keys)}

    def with_epsilons(self, epsilons: Mapping[str, float]) -> "ParamCircuit":
        return replace(self, epsilons=dict(epsilons))

    def theta_map(self, theta) -> dict[str, float]:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.param_keys),):
            raise ValueError(
                f"theta has {theta.shape} entries, circuit has "
                f"{len(self.param_keys)} parameter slots"
            )
        return dict(zip(self.param_keys, theta.tolist()))

    def epsilon_vector(self) -> np.ndarray:
        return np.array([self.epsilons[k] for k in self.param_keys])

    def to_json_dict(self, seed: int | None = None) -> dict:
        doc = {
            "n": self.n,
            "moments": [
                [
                    {
                        "kind": g.kind,
                        "qubits": list(g.qubits),
                        "clifford_angle": g.clifford_angle,
                        "param_key": g.param_key,
                    }
                    for g in m.gates
                ]
                for m in self.moments
            ],
            "param_keys": list(self.param_keys),
            "epsilons": dict(self.epsilons),
        }
        if seed is not None:
            doc["seed"] = seed
        return doc

    def to_json(self, seed: int | None = None) -> str:
        return json.dumps(self.to_json_dict(seed), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ParamCircuit":
        moments = tuple(
            Moment(
                tuple(
                    NativeGate(
                        g["kind"],
                        tuple(g["qubits"]),
                        g["clifford_angle"],
                        g["param_key"],
                    )
                    for g in gates
                )
            )
            for gates in doc["moments"]
        )
        return cls(doc["n"], moments, tuple(doc["param_keys"]), doc["epsilons"])


# ---------------------------------------------------------------------------
# Abstract Clifford circuits (pre-transpilation)
# ---------------------------------------------------------------------------

_ABSTRACT_KINDS = ("h", "cz", "cnot")


@dataclass(frozen=True, slots=True)
class CliffordGate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _ABSTRACT_KINDS:
            raise ValueError(f"unsupported source gate {self.kind!r}")
        arity = 1 if self.kind == "h" else 2
        if len(self.qubits) != arity or len(set(self.qubits)) != arity:
            raise ValueError(f"{self.kind} needs {arity} distinct qubit(s)")


@dataclass(frozen=True)
class CliffordCircuit:
    n: int
    moments: tuple[tuple[CliffordGate, ...], ...]

    def __post_init__(self):
        for gates in self.moments:
            seen: set[int] = set()
            for g in gates:
                if any(q < 0 or q >= self.n for q in g.qubits):
                    raise ValueError("gate outside register")
                if seen & set(g.qubits):
                    raise ValueError("overlapping supports inside one moment")
                seen |= set(g.qubits)


def build_graph_circuit(g: Graph) -> CliffordCircuit:
    """One Hadamard layer, then the CZ of every edge, greedily packed.

    Edges are taken in sorted order and placed first-fit into the earliest
    moment whose support they do not touch.
    """
    h_layer = tuple(CliffordGate("h", (q,)) for q in range(g.n))
    cz_moments: list[list[CliffordGate]] = []
    supports: list[set[int]] = []
    for u, v in g.sorted_edges():
        for gates, sup in zip(cz_moments, supports):
            if u not in sup and v not in sup:
                gates.append(CliffordGate("cz", (u, v)))
                sup.update((u, v))
                break
        else:
            cz_moments.append([CliffordGate("cz", (u, v))])
            supports.append({u, v})
    moments = (h_layer,) + tuple(tuple(m) for m in cz_moments)
    return CliffordCircuit(g.n, moments)


def build_ghz_circuit(n: int) -> CliffordCircuit:
    """Hadamard on qubit 0 followed by a CNOT chain down the register."""
    if n < 2:
        raise ValueError("need at least two qubits")
    moments = [(CliffordGate("h", (0,)),)]
    moments += [(CliffordGate("cnot", (i, i + 1)),) for i in range(n - 1)]
    return CliffordCircuit(n, tuple(moments))


# Native stages for each abstract gate: a list of sub-moments, applied in
# order.  All offsets are multiples of pi/2; equivalence with the source gate
# (up to global phase) is pinned by tests against dense unitaries.
def _stages_h(q: int) -> list[list[tuple[str, tuple[int, ...], float]]]:
    return [
        [("rz", (q,), QUARTER)],
        [("rx", (q,), QUARTER)],
        [("rz", (q,), -3 * QUARTER)],
    ]


def _stages_cnot(a: int, b: int) -> list[list[tuple[str, tuple[int, ...], float]]]:
    # The three factors commute; two stages because Rzx shares both qubits.
    return [
        [("rz", (a,), -QUARTER), ("rx", (b,), -QUARTER)],
        [("rzx", (a, b), QUARTER)],
    ]


def _stages_cz(a: int, b: int) -> list[list[tuple[str, tuple[int, ...], float]]]:
    # CNOT core conjugated on the target side by the two-rotation basis
    # change W = Rx(pi/2) Rz(pi/2), which maps X to Z.
    return [
        [("rx", (b,), -QUARTER), ("rz", (a,), -QUARTER)],
        [("rz", (b,), -QUARTER)],
        [("rx", (b,), -QUARTER)],
        [("rzx", (a, b), QUARTER)],
        [("rz", (b,), QUARTER)],
        [("rx", (b,), QUARTER)],
    ]


_STAGE_BUILDERS = {
    "h": lambda g: _stages_h(*g.qubits),
    "cnot": lambda g: _stages_cnot(*g.qubits),
    "cz": lambda g: _stages_cz(*g.qubits),
}


def transpile(circuit: CliffordCircuit) -> ParamCircuit:
    """Rewrite an abstract H/CZ/CNOT circuit into native moments.

    Each abstract moment expands into as many native moments as its deepest
    gate needs; parallel abstract gates share those native moments since
    their supports are disjoint.
    """
    native_moments: list[Moment] = []
    for gates in circuit.moments:
        stage_lists = [_STAGE_BUILDERS[g.kind](g) for g in gates]
        depth = max((len(s) for s in stage_lists), default=0)
        for d in range(depth):
            batch = []
            for stages in stage_lists:
                if d < len(stages):
                    for kind, qubits, angle in stages[d]:
                        batch.append(
                            NativeGate(kind, qubits, angle, _default_key(kind, qubits))
                        )
            if batch:
                native_moments.append(Moment(tuple(batch)))
    return ParamCircuit(circuit.n, tuple(native_moments))


def gate_unitary(gate: NativeGate, theta: float = 0.0, epsilon: float = 0.0):
    """Dense matrix exp(-i (phi + theta + eps)/2 P) on the gate's support.

    For Rzx the first listed qubit (the Z side) is the more significant index
    bit of the returned 4x4 matrix.
    """
    angle = gate.clifford_angle + theta + epsilon
    if not math.isfinite(angle):
        raise ValueError("non-finite gate angle")
    if gate.kind == "rz":
        p = PauliString.from_label("Z").to_matrix()
    elif gate.kind == "rx":
        p = PauliString.from_label("X").to_matrix()
    else:
        p = np.kron(
            PauliString.from_label("Z").to_matrix(),
            PauliString.from_label("X").to_matrix(),
        )
    dim = p.shape[0]
    return math.cos(angle / 2) * np.eye(dim) - 1j * math.sin(angle / 2) * p


def sample_coherent_errors(
    circuit: ParamCircuit, magnitude: float, seed: int
) -> dict[str, float]:
    """One uniform draw in [-magnitude, magnitude] per parameter slot.

    Draws are keyed by slot name, so a slot present in two circuits (say the
    same line graph at different sizes) receives the same error.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    out = {}
    for key in circuit.param_keys:
        rng = derived_rng(seed, "coherent", key)
        out[key] = float(rng.uniform(-magnitude, magnitude))
    return out


# ---------------------------------------------------------------------------
# Dense verification helpers (test-scale only)
# ---------------------------------------------------------------------------

_H_DENSE = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_CZ_DENSE = np.diag([1, 1, 1, -1]).astype(complex)
_CNOT_DENSE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def embed_operator(u: np.ndarray, qubits: Iterable[int], n: int) -> np.ndarray:
    """Embed a k-qubit operator into the full register (dense, small n).

    `qubits` lists the register qubits matching the operator's index bits,
    first qubit = most significant bit of the operator's own basis.
    """
    qubits = tuple(qubits)
    k = len(qubits)
    m = np.eye(1 << n, dtype=complex).reshape((2,) * n + (1 << n,))
    axes = [n - 1 - q for q in qubits]
    t = np.tensordot(u.reshape((2,) * (2 * k)), m, axes=(list(range(k, 2 * k)), axes))
    t = np.moveaxis(t, list(range(k)), axes)
    return t.reshape(1 << n, 1 << n)


def clifford_unitary(circuit: CliffordCircuit) -> np.ndarray:
    """Dense unitary of an abstract circuit (n <= 10)."""
    if circuit.n > 10:
        raise ValueError("dense unitary restricted to small registers")
    dense = {"h": _H_DENSE, "cz": _CZ_DENSE, "cnot": _CNOT_DENSE}
    u = np.eye(1 << circuit.n, dtype=complex)
    for gates in circuit.moments:
        for g in gates:
            u = embed_operator(dense[g.kind], g.qubits, circuit.n) @ u
    return u


def circuit_unitary(circuit: ParamCircuit, theta=None) -> np.ndarray:
    """Dense unitary of a native circuit at the given parameters (n <= 10)."""
    if circuit.n > 10:
        raise ValueError("dense unitary restricted to small registers")
    if theta is None:
        theta = np.zeros(len(circuit.param_keys))
    tmap = circuit.theta_map(theta)
    u = np.eye(1 << circuit.n, dtype=complex)
    for m in circuit.moments:
        for g in m.gates:
            gu = gate_unitary(g, tmap[g.param_key], circuit.epsilons[g.param_key])
            u = embed_operator(gu, g.qubits, circuit.n) @ u
    return u


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    dim = a.shape[0]
    return abs(abs(np.trace(a.conj().T @ b)) - dim) < tol * dim
