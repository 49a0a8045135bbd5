"""Pauli and depolarizing noise channels and their algebra.

The operations here never touch a density matrix.  A Pauli channel acts on a
Pauli observable by a pure rescaling (the chi factor), conjugating a channel
by a Clifford permutes its terms, and a stack of per-moment channels
collapses to a single end-of-circuit channel by conjugating each one through
the Clifford offsets of the moments that follow it.  All of that is integer
bit arithmetic on the packed strings; dense superoperators appear only as
small cross-check utilities and for twirling demos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import NativeGate, ParamCircuit
from .pauli import PauliString, all_strings, commutes, decompose, multiply
from .seeding import derived_rng

#: Composed channel terms below this total weight are dropped (the result is
#: renormalized).  Recorded in experiment manifests.
PRUNE_THRESHOLD = 1e-15

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class PauliChannel:
    """Probabilistic mixture of Pauli-string conjugations on n qubits."""

    n: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        merged: dict[tuple[int, int], float] = {}
        total = 0.0
        for p, s in self.terms:
            p = float(p)
            if p < -_PROB_TOL:
                raise ValueError(f"negative probability {p}")
            if s.n != self.n:
                raise ValueError("term size does not match register size")
            key = (s.xs, s.zs)  # signs cancel in conjugation, drop them
            merged[key] = merged.get(key, 0.0) + max(p, 0.0)
            total += p
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        object.__setattr__(
            self,
            "terms",
            tuple(
                (p, PauliString(self.n, xs, zs)) for (xs, zs), p in merged.items()
            ),
        )

    @classmethod
    def identity(cls, n: int) -> "PauliChannel":
        return cls(n, ((1.0, PauliString.identity(n)),))

    @classmethod
    def from_probs(cls, probs: dict[str, float], n: int | None = None):
        terms = [(p, PauliString.from_label(lbl)) for lbl, p in probs.items()]
        return cls(n or terms[0][1].n, tuple(terms))

    @property
    def support(self) -> frozenset[int]:
        out: set[int] = set()
        for _, s in self.terms:
            out |= s.support
        return frozenset(out)

    @property
    def identity_prob(self) -> float:
        return sum(p for p, s in self.terms if s.is_identity())

    def prob_map(self) -> dict[str, float]:
        return {s.label: p for p, s in self.terms}

    def to_json_dict(self) -> dict:
        return {
            "kind": "pauli",
            "n": self.n,
            "support": sorted(self.support),
            "terms": {s.label: p for p, s in self.terms},
        }


@dataclass(frozen=True)
class DepolarizingChannel:
    """Global white-noise map: keep the state w.p. 1-p, fully mix w.p. p."""

    n: int
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0 + _PROB_TOL:
            raise ValueError(f"depolarizing probability {self.p} outside [0, 1]")

    @property
    def support(self) -> frozenset[int]:
        return frozenset(range(self.n))

    def to_json_dict(self) -> dict:
        return {"kind": "depolarizing", "n": self.n, "p": self.p}


@dataclass(frozen=True)
class GenericChannel:
    """Small completely-positive trace-preserving map given by Kraus terms."""

    n: int
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.n > 2:
            raise ValueError("generic channels restricted to two qubits")
        dim = 1 << self.n
        acc = np.zeros((dim, dim), dtype=complex)
        ops = []
        for e in self.kraus:
            e = np.asarray(e, dtype=complex)
            if e.shape != (dim, dim):
                raise ValueError(f"Kraus term has shape {e.shape}, expected {dim}")
            acc += e.conj().T @ e
            ops.append(e)
        if np.max(np.abs(acc - np.eye(dim))) > 1e-10:
            raise ValueError("Kraus terms are not trace preserving")
        object.__setattr__(self, "kraus", tuple(ops))


def amplitude_damping(gamma: float) -> GenericChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma outside [0, 1]")
    e0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    e1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return GenericChannel(1, (e0, e1))


Channel = PauliChannel | DepolarizingChannel


@dataclass(frozen=True)
class NoiseLayout:
    """Per-moment noise: entry q holds the channels applied after moment q.

    Each entry is a tuple of factors applied in sequence; an empty tuple
    means the moment is noiseless.  Factors are usually local channels on a
    gate's support, so a moment of parallel gates carries a product of small
    commuting maps rather than one exponentially long term list.
    """

    entries: tuple[tuple[Channel, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple(tuple(e) for e in self.entries)
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, q: int) -> tuple[Channel, ...]:
        return self.entries[q]

    def is_all_pauli(self) -> bool:
        return all(
            isinstance(f, PauliChannel) for entry in self.entries for f in entry
        )

    def check_alignment(self, circuit: ParamCircuit) -> None:
        if len(self.entries) != circuit.num_moments:
            raise ValueError(
                f"layout has {len(self.entries)} entries for "
                f"{circuit.num_moments} circuit moments"
            )

    @classmethod
    def identity(cls, circuit: ParamCircuit) -> "NoiseLayout":
        return cls(tuple(() for _ in circuit.moments))

    @classmethod
    def end_channel(cls, circuit: ParamCircuit, channel: Channel) -> "NoiseLayout":
        if circuit.num_moments == 0:
            raise ValueError("circuit has no moments")
        entries = [() for _ in circuit.moments]
        entries[-1] = (channel,)
        return cls(tuple(entries))

    @classmethod
    def uniform_depolarizing(cls, circuit: ParamCircuit, p) -> "NoiseLayout":
        ps = [p] * circuit.num_moments if np.isscalar(p) else list(p)
        if len(ps) != circuit.num_moments:
            raise ValueError("one probability per moment required")
        return cls(
            tuple((DepolarizingChannel(circuit.n, float(v)),) for v in ps)
        )

    @classmethod
    def gate_aligned_uniform(
        cls, circuit: ParamCircuit, weight: float
    ) -> "NoiseLayout":
        """Deterministic variant: every non-identity term of every gate's
        local channel carries the same weight."""
        entries = []
        for moment in circuit.moments:
            entries.append(
                tuple(
                    uniform_pauli_channel(circuit.n, g.qubits, weight)
                    for g in moment.gates
                )
            )
        return cls(tuple(entries))

    @classmethod
    def gate_aligned_pauli(
        cls, circuit: ParamCircuit, magnitude: float, seed: int, locality: str = "gate"
    ) -> "NoiseLayout":
        """Sample one local Pauli channel per gate, after that gate's moment.

        locality "gate" puts an m-local channel on each gate's full support
        (m = 1 for single-qubit gates, m = 2 for Rzx); locality "single"
        breaks every support into 1-local factors.  Draws are keyed by
        (moment index, qubits), so they are stable when a circuit is extended.
        """
        if locality not in ("gate", "single"):
            raise ValueError(f"unknown locality {locality!r}")
        entries = []
        for qi, moment in enumerate(circuit.moments):
            factors = []
            for g in moment.gates:
                supports = (
                    [g.qubits] if locality == "gate" else [(q,) for q in g.qubits]
                )
                for sup in supports:
                    rng = derived_rng(seed, "incoherent", qi, tuple(sup))
                    factors.append(
                        sample_pauli_channel(circuit.n, sup, magnitude, rng)
                    )
            entries.append(tuple(factors))
        return cls(tuple(entries))

    def to_json_dict(self) -> list:
        return [[f.to_json_dict() for f in entry] for entry in self.entries]


# ---------------------------------------------------------------------------
# Chi factors and composition laws
# ---------------------------------------------------------------------------

def chi_factor(channel, s: PauliString) -> float:
    """Scaling a channel applies to a Pauli observable.

    A Pauli channel maps S to (1 - 2 Gamma) S where Gamma collects the
    probability of terms anticommuting with S; a global depolarizing channel
    scales every non-identity observable by 1 - p.  A sequence of channels
    multiplies its factors.
    """
    if isinstance(channel, PauliChannel):
        if channel.n != s.n:
            raise ValueError("register size mismatch")
        gamma = sum(p for p, t in channel.terms if not commutes(t, s))
        return 1.0 - 2.0 * gamma
    if isinstance(channel, DepolarizingChannel):
        if channel.n != s.n:
            raise ValueError("register size mismatch")
        return 1.0 if s.is_identity() else 1.0 - channel.p
    if isinstance(channel, (tuple, list)):
        out = 1.0
        for f in channel:
            out *= chi_factor(f, s)
        return out
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def depolarizing_as_pauli(d: DepolarizingChannel) -> PauliChannel:
    """Explicit uniform-mixture form; restricted to n <= 3 registers."""
    if d.n > 3:
        raise ValueError("explicit expansion restricted to n <= 3")
    dim = 4**d.n
    terms = []
    for s in all_strings(d.n):
        p = 1.0 - d.p * (dim - 1) / dim if s.is_identity() else d.p / dim
        terms.append((p, s))
    return PauliChannel(d.n, tuple(terms))


def compose_depolarizing(ps) -> float:
    """Effective probability of stacked depolarizing maps: 1 - prod(1 - p)."""
    acc = 1.0
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
        acc *= 1.0 - p
    return 1.0 - acc


def compose_pauli_channels(
    channels, n: int, prune: float = PRUNE_THRESHOLD, max_terms: int = 1 << 16
) -> PauliChannel:
    """Convolve term distributions of Pauli channels into one channel.

    Pauli conjugations compose by string products (signs cancel), so the
    composite distribution is the convolution over the abelian string group.
    Terms falling below `prune` are dropped and the rest renormalized.
    """
    acc: dict[tuple[int, int], float] = {(0, 0): 1.0}
    for ch in channels:
        if isinstance(ch, DepolarizingChannel):
            ch = depolarizing_as_pauli(ch)
        if ch.n != n:
            raise ValueError("register size mismatch")
        new: dict[tuple[int, int], float] = {}
        for (xs, zs), pa in acc.items():
            for pb, t in ch.terms:
                key = (xs ^ t.xs, zs ^ t.zs)
                new[key] = new.get(key, 0.0) + pa * pb
        acc = {k: v for k, v in new.items() if v >= prune}
        if len(acc) > max_terms:
            raise ValueError(
                "composed channel exceeds the explicit term budget; "
                "use chi factors on the factored form instead"
            )
    total = sum(acc.values())
    return PauliChannel(
        n, tuple((p / total, PauliString(n, xs, zs)) for (xs, zs), p in acc.items())
    )


# ---------------------------------------------------------------------------
# Clifford conjugation
# ---------------------------------------------------------------------------

def conjugate_string_by_gate(s: PauliString, gate: NativeGate) -> PauliString:
    """Image of a Pauli string under the gate's Clifford offset, exactly.

    For U = exp(-i k pi/4 P): strings commuting with the generator are fixed;
    anticommuting ones map to cos(k pi/2) S - i sin(k pi/2) P S, which is a
    single signed string for every integer k.  Pure integer arithmetic.
    """
    p = gate.generator(s.n)
    if commutes(p, s):
        return s
    k = gate.quarter_turns % 4
    if k == 0:
        return s
    if k == 2:
        return PauliString(s.n, s.xs, s.zs, (s.phase_exp + 2) % 4)
    prod = multiply(p, s)
    shift = 3 if k == 1 else 1  # -i for a quarter turn, +i for three quarters
    return PauliString(prod.n, prod.xs, prod.zs, (prod.phase_exp + shift) % 4)


def conjugate_string_by_moments(
    s: PauliString, circuit: ParamCircuit, start: int, stop: int | None = None
) -> PauliString:
    """Conjugate through the Clifford parts of moments start..stop-1."""
    stop = circuit.num_moments if stop is None else stop
    for q in range(start, stop):
        for g in circuit.moments[q].gates:
            s = conjugate_string_by_gate(s, g)
    return s


def _clifford_generator_images(u: np.ndarray, n: int):
    """Images of X_i / Z_i under u, or None where u is not Clifford."""
    images_x, images_z = [], []
    for i in range(n):
        for images, letter in ((images_x, "X"), (images_z, "Z")):
            base = PauliString.single(n, i, letter)
            img = u @ base.to_matrix() @ u.conj().T
            terms = decompose(img, tol=1e-10)
            if len(terms) != 1 or abs(abs(terms[0][0]) - 1.0) > 1e-10:
                return None
            c, s = terms[0]
            exps = {1: 0, 1j: 1, -1: 2, -1j: 3}
            exp = min(exps.items(), key=lambda kv: abs(c - kv[0]))[1]
            images.append(PauliString(n, s.xs, s.zs, (s.phase_exp + exp) % 4))
    return images_x, images_z


def conjugate_channel(ch: PauliChannel, u: np.ndarray) -> PauliChannel:
    """Conjugate a channel by a Clifford unitary given as a dense matrix.

    Every term string is replaced by its image (the sign cancels because the
    string acts on both sides of the state); probabilities are untouched.
    Raises if conjugating any generator fails to give a single Pauli string.
    """
    u = np.asarray(u, dtype=complex)
    dim = 1 << ch.n
    if u.shape != (dim, dim):
        raise ValueError(f"conjugator shape {u.shape} does not match n={ch.n}")
    images = _clifford_generator_images(u, ch.n)
    if images is None:
        raise ValueError("conjugator is not Clifford")
    images_x, images_z = images
    out = []
    for p, s in ch.terms:
        img = PauliString.identity(ch.n)
        for i in range(ch.n):
            if (s.xs >> i) & 1:
                img = multiply(img, images_x[i])
            if (s.zs >> i) & 1:
                img = multiply(img, images_z[i])
        out.append((p, img.unsigned()))
    return PauliChannel(ch.n, tuple(out))


def conjugated_layout_channels(
    layout: NoiseLayout, circuit: ParamCircuit
) -> tuple[tuple[Channel, ...], ...]:
    """Push every per-moment factor to the end of the circuit.

    Factor f sitting after moment q is replaced by its conjugation through
    the Clifford offsets of all later moments; global depolarizing factors
    are Clifford-invariant and pass through unchanged.  The returned factors,
    composed in any order, form the effective end-of-circuit channel.
    """
    layout.check_alignment(circuit)
    out = []
    for q, entry in enumerate(layout.entries):
        moved = []
        for f in entry:
            if isinstance(f, DepolarizingChannel):
                moved.append(f)
                continue
            terms = tuple(
                (p, conjugate_string_by_moments(s, circuit, q + 1).unsigned())
                for p, s in f.terms
            )
            moved.append(PauliChannel(f.n, terms))
        out.append(tuple(moved))
    return tuple(out)


def effective_end_channel(layout: NoiseLayout, circuit: ParamCircuit) -> PauliChannel:
    """Single explicit Pauli channel equivalent to the whole layout.

    Only viable when the composed term list stays small; large registers
    should consume `conjugated_layout_channels` through chi factors instead.
    """
    moved = conjugated_layout_channels(layout, circuit)
    return compose_pauli_channels(
        (f for entry in moved for f in entry), circuit.n
    )


# ---------------------------------------------------------------------------
# Local channel construction
# ---------------------------------------------------------------------------

def _embed_local(n: int, support: tuple[int, ...], local: PauliString) -> PauliString:
    xs = zs = 0
    for bit, q in enumerate(support):
        xs |= ((local.xs >> bit) & 1) << q
        zs |= ((local.zs >> bit) & 1) << q
    return PauliString(n, xs, zs)


def uniform_pauli_channel(n: int, support, weight: float) -> PauliChannel:
    """Every non-identity string on `support` with the same weight."""
    support = tuple(sorted(support))
    if len(support) not in (1, 2):
        raise ValueError("channel support must cover one or two qubits")
    count = 4 ** len(support) - 1
    if weight < 0 or weight * count > 0.5:
        raise ValueError("weights must be non-negative and total at most 1/2")
    terms = [(1.0 - weight * count, PauliString.identity(n))]
    for loc in all_strings(len(support)):
        if not loc.is_identity():
            terms.append((weight, _embed_local(n, support, loc)))
    return PauliChannel(n, tuple(terms))


def sample_pauli_channel(
    n: int, support, magnitude: float, seed
) -> PauliChannel:
    """Random local channel: each non-identity string on `support` gets an
    independent weight uniform in [0, magnitude].

    The identity keeps the remainder and is floored at 1/2: if the draws sum
    past 1/2 they are rescaled so the error weight never dominates.
    """
    support = tuple(sorted(support))
    if len(support) not in (1, 2):
        raise ValueError("channel support must cover one or two qubits")
    if any(q < 0 or q >= n for q in support):
        raise ValueError("support outside register")
    if magnitude < 0:
        raise ValueError("magnitude must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, support)
    m = len(support)
    locals_ = [s for s in all_strings(m) if not s.is_identity()]
    draws = rng.uniform(0.0, magnitude, size=len(locals_))
    total = float(draws.sum())
    if total > 0.5:
        draws *= 0.5 / total
        total = 0.5
    terms = [(1.0 - total, PauliString.identity(n))]
    for w, loc in zip(draws, locals_):
        terms.append((float(w), _embed_local(n, support, loc)))
    return PauliChannel(n, tuple(terms))


# ---------------------------------------------------------------------------
# Dense superoperators and twirling
# ---------------------------------------------------------------------------

def _vec_superoperator(ops) -> np.ndarray:
    """sum_j E_j (.) E_j^dag as a matrix on row-major-vectorized operators."""
    return sum(np.kron(e, e.conj()) for e in ops)


def superoperator(channel) -> np.ndarray:
    if isinstance(channel, GenericChannel):
        return _vec_superoperator(channel.kraus)
    if isinstance(channel, PauliChannel):
        return sum(
            p * _vec_superoperator([s.to_matrix()]) for p, s in channel.terms
        )
    if isinstance(channel, DepolarizingChannel):
        dim = 1 << channel.n
        ident = np.eye(dim, dtype=complex).reshape(-1)
        return (1 - channel.p) * np.eye(dim * dim) + (
            channel.p / dim
        ) * np.outer(ident, ident)
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def transfer_matrix(channel, n: int | None = None) -> np.ndarray:
    """Pauli transfer matrix R[a, b] = Tr(P_a L(P_b)) / 2^n (small n)."""
    n = n if n is not None else channel.n
    if n > 2:
        raise ValueError("transfer matrix restricted to n <= 2")
    dim = 1 << n
    sup = superoperator(channel)
    basis = [s.to_matrix() for s in all_strings(n)]
    r = np.zeros((len(basis), len(basis)))
    for b, pb in enumerate(basis):
        image = (sup @ pb.reshape(-1)).reshape(dim, dim)
        for a, pa in enumerate(basis):
            val = np.sum(pa.T * image) / dim
            r[a, b] = val.real
    return r


def pauli_twirl(g: GenericChannel) -> PauliChannel:
    """Average over Pauli conjugations, collapsing a map to its Pauli part.

    The output weight of string P_k is the summed squared Pauli coefficient
    of the Kraus terms on P_k, which is automatically a distribution for a
    trace-preserving input.
    """
    dim = 1 << g.n
    strings = list(all_strings(g.n))
    mats = [s.to_matrix() for s in strings]
    probs = np.zeros(len(strings))
    for e in g.kraus:
        coeffs = np.array([np.sum(m.T * e) / dim for m in mats])
        probs += np.abs(coeffs) ** 2
    terms = [
        (float(p), s) for p, s in zip(probs, strings) if p > 1e-16
    ]
    return PauliChannel(g.n, tuple(terms))


def single_qubit_cliffords() -> list[np.ndarray]:
    """The 24 single-qubit Clifford unitaries (global phase normalized)."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    s = np.array([[1, 0], [0, 1j]], dtype=complex)

    def canon(u):
        idx = np.argmax(np.abs(u) > 1e-9)
        u = u * (abs(u.flat[idx]) / u.flat[idx])
        return u

    found: dict[tuple, np.ndarray] = {}
    frontier = [canon(np.eye(2, dtype=complex))]
    while frontier:
        nxt = []
        for u in frontier:
            key = tuple(np.round(u, 9).reshape(-1))
            if key in found:
                continue
            found[key] = u
            nxt.extend(canon(g @ u) for g in (h, s))
        frontier = nxt
    cliffords = list(found.values())
    assert len(cliffords) == 24
    return cliffords


def clifford_twirl(g: GenericChannel) -> DepolarizingChannel:
    """Depolarizing channel equivalent to averaging over the Clifford group.

    Group conjugation preserves the transfer-matrix trace, and the average is
    exactly depolarizing, so p follows from the input's own transfer matrix:
    p = (4^n - Tr R) / (4^n - 1).  Only the exhaustive single-qubit group is
    supported.
    """
    if g.n != 1:
        raise ValueError("Clifford twirl supported on one qubit only")
    tr = float(np.trace(transfer_matrix(g)))
    p = (4.0 - tr) / 3.0
    return DepolarizingChannel(1, p)
