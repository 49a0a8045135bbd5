"""Pauli-string algebra over bit-packed symplectic words.

An n-qubit Pauli operator is stored as two integers whose bit ``j`` flags an
X (resp. Z) factor on qubit ``j``, plus a unit phase.  A set bit pair (x and
z) on the same qubit is the Hermitian Y, so the stored word is

    P = i^phase_exp * prod_j  i^(x_j z_j) X_j^(x_j) Z_j^(z_j)

and every label character maps to exactly one (x, z) bit pair.  All group
operations reduce to integer bit arithmetic: a commutation check is one
symplectic inner product, a product is an XOR plus a phase count.

Qubit 0 is the first character of a label ("XZI" puts X on qubit 0) and the
least-significant bit of a basis index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

_PHASE_VALUES = (1, 1j, -1, -1j)

_SITE_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_LETTER_SITES = {v: k for k, v in _SITE_LETTERS.items()}

_SITE_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, slots=True)
class PauliString:
    """A signed n-qubit Pauli operator in packed (x-bits, z-bits) form."""

    n: int
    xs: int = 0
    zs: int = 0
    phase_exp: int = 0  # power of i, reduced mod 4

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("PauliString needs at least one qubit")
        mask = (1 << self.n) - 1
        if self.xs & ~mask or self.zs & ~mask:
            raise ValueError("x/z words have bits beyond the register size")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a text label like "XZI", "-YY" or "+iXZ"."""
        phase_exp = 0
        body = label
        for prefix, exp in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2)):
            if label.startswith(prefix):
                phase_exp, body = exp, label[len(prefix):]
                break
        if not body:
            raise ValueError(f"empty Pauli label {label!r}")
        xs = zs = 0
        for j, ch in enumerate(body):
            try:
                x, z = _LETTER_SITES[ch.upper()]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}") from None
            xs |= x << j
            zs |= z << j
        return cls(len(body), xs, zs, phase_exp)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliString":
        """One non-identity letter on `qubit`, identity elsewhere."""
        x, z = _LETTER_SITES[letter.upper()]
        return cls(n, x << qubit, z << qubit)

    @property
    def phase(self) -> complex:
        return _PHASE_VALUES[self.phase_exp]

    @property
    def label(self) -> str:
        sign = {0: "", 1: "+i", 2: "-", 3: "-i"}[self.phase_exp]
        body = "".join(
            _SITE_LETTERS[(self.xs >> j) & 1, (self.zs >> j) & 1]
            for j in range(self.n)
        )
        return sign + body

    @property
    def support(self) -> frozenset[int]:
        word = self.xs | self.zs
        return frozenset(j for j in range(self.n) if (word >> j) & 1)

    @property
    def weight(self) -> int:
        return (self.xs | self.zs).bit_count()

    def is_identity(self) -> bool:
        return self.xs == 0 and self.zs == 0

    def unsigned(self) -> "PauliString":
        return PauliString(self.n, self.xs, self.zs) if self.phase_exp else self

    def letter(self, qubit: int) -> str:
        return _SITE_LETTERS[(self.xs >> qubit) & 1, (self.zs >> qubit) & 1]

    def to_matrix(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix; qubit 0 is the least-significant index bit."""
        if self.n > 12:
            raise ValueError("dense form restricted to small registers")
        m = np.array([[1.0 + 0j]])
        for j in range(self.n - 1, -1, -1):
            m = np.kron(m, _SITE_MATRICES[self.letter(j)])
        return self.phase * m

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff pq = qp; Pauli strings otherwise anticommute."""
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")
    return ((p.xs & q.zs).bit_count() + (p.zs & q.xs).bit_count()) % 2 == 0


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Group product pq with the exact phase in {1, i, -1, -i}."""
    if p.n != q.n:
        raise ValueError(f"size mismatch: {p.n} vs {q.n}")
    xs = p.xs ^ q.xs
    zs = p.zs ^ q.zs
    # Per-site phase bookkeeping for the Hermitian (x,z) word convention:
    # i^(x1 z1) i^(x2 z2) (-1)^(z1 x2) = i^g i^(x3 z3) on the product word.
    g = (
        (p.xs & p.zs).bit_count()
        + (q.xs & q.zs).bit_count()
        + 2 * (p.zs & q.xs).bit_count()
        - (xs & zs).bit_count()
    )
    return PauliString(p.n, xs, zs, (p.phase_exp + q.phase_exp + g) % 4)


def _gf2_rank(rows: list[int]) -> int:
    rank = 0
    pivots: list[int] = []
    for row in rows:
        for piv in pivots:
            row = min(row, row ^ piv)
        if row:
            pivots.append(row)
            pivots.sort(reverse=True)
            rank += 1
    return rank


@dataclass(frozen=True)
class StabilizerSet:
    """Independent, mutually commuting generators with +1 signs."""

    generators: tuple[PauliString, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("empty generator set")
        n = gens[0].n
        if any(g.n != n for g in gens):
            raise ValueError("generators act on different register sizes")
        if any(g.phase_exp != 0 for g in gens):
            raise ValueError("stabilizer generators must carry phase +1")
        for a, b in itertools.combinations(gens, 2):
            if not commutes(a, b):
                raise ValueError(f"generators {a.label} and {b.label} anticommute")
        rows = [(g.xs << n) | g.zs for g in gens]
        if _gf2_rank(rows) != len(gens):
            raise ValueError("generators are not independent")
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(f"S{i + 1}" for i in range(len(gens)))
            )
        elif len(self.labels) != len(gens):
            raise ValueError("label count does not match generator count")

    @property
    def n(self) -> int:
        return self.generators[0].n

    def __len__(self) -> int:
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 0..n-1."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges))

    @classmethod
    def line(cls, n: int) -> "Graph":
        if n < 1:
            raise ValueError("line graph needs at least one node")
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def grid(cls, rows: int, cols: int) -> "Graph":
        if rows < 1 or cols < 1:
            raise ValueError("grid dimensions must be positive")
        edges = []
        for r in range(rows):
            for c in range(cols):
                v = r * cols + c
                if c + 1 < cols:
                    edges.append((v, v + 1))
                if r + 1 < rows:
                    edges.append((v, v + cols))
        return cls.from_edges(rows * cols, edges)

    def neighbors(self, node: int) -> list[int]:
        out = []
        for u, v in self.edges:
            if u == node:
                out.append(v)
            elif v == node:
                out.append(u)
        return sorted(out)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def graph_stabilizers(g: Graph) -> StabilizerSet:
    """Generator i carries X on node i and Z on each of its neighbours."""
    gens = []
    for i in range(g.n):
        xs = 1 << i
        zs = 0
        for j in g.neighbors(i):
            zs |= 1 << j
        gens.append(PauliString(g.n, xs, zs))
    return StabilizerSet(tuple(gens), tuple(f"G{i + 1}" for i in range(g.n)))


def ghz_stabilizers(n: int) -> StabilizerSet:
    """All-X plus the nearest-neighbour ZZ chain; {XX, ZZ} for n = 2."""
    if n < 2:
        raise ValueError("need at least two qubits")
    gens = [PauliString(n, xs=(1 << n) - 1)]
    for i in range(n - 1):
        gens.append(PauliString(n, zs=(0b11 << i)))
    return StabilizerSet(tuple(gens))


def all_strings(n: int):
    """Yield the 4^n unsigned Pauli strings, identity first."""
    for zs in range(1 << n):
        for xs in range(1 << n):
            yield PauliString(n, xs, zs)


def decompose(m: np.ndarray, tol: float = 1e-14) -> list[tuple[complex, PauliString]]:
    """Expand a small operator in the Pauli basis.

    Returns the (coefficient, string) pairs with c_j = Tr(P_j m) / 2^k; terms
    with |c_j| <= tol are dropped.  Restricted to k <= 4 qubits: this is only
    ever needed for local channel construction and transpilation checks.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"operator must be square, got shape {m.shape}")
    dim = m.shape[0]
    k = dim.bit_length() - 1
    if dim != 1 << k:
        raise ValueError(f"dimension {dim} is not a power of two")
    if k < 1 or k > 4:
        raise ValueError("decomposition restricted to 1..4 qubits")
    out = []
    for s in all_strings(k):
        c = np.sum(s.to_matrix().T * m) / dim  # Tr(P m) without the matmul
        if abs(c) > tol:
            out.append((complex(c), s))
    return out
