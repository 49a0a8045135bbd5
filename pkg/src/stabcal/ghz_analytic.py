"""Closed-form two-qubit GHZ cost landscapes for four noise scenarios.

This module is a self-contained oracle: a single-parameter GHZ preparation
(an exact Hadamard followed by a parametrized controlled flip) admits closed
cost expressions under (a) no incoherent noise, (b) a fixed Pauli channel at
the end, (c) a depolarizing channel after each of the two moments, and (d)
local Pauli channels after each moment.  Alongside each closed form sits a
direct dense simulation built from plain 4x4 matrices, deliberately
independent of the package's simulator, so the two can cross-check each
other and everything downstream.

Scenarios (a)-(c) parametrize the controlled flip as a block matrix with an
embedded X rotation; scenario (d) uses the exponential form exp(-i phi H)
whose generator splits into a Clifford offset and a residual, which is what
the end-channel reduction needs.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

#: Pauli channel applied at the end of the circuit in scenario (b).
END_CHANNEL_PROBS: dict[str, float] = {
    "II": 0.55, "XX": 0.01, "ZZ": 0.02,
    "ZI": 0.20, "IZ": 0.20, "XI": 0.01, "IX": 0.01,
}

#: Per-moment channels of scenario (d): after the Hadamard moment and after
#: the controlled-flip moment.
MOMENT1_PROBS: dict[str, float] = {"II": 0.80, "ZI": 0.01, "XI": 0.02, "YI": 0.17}
MOMENT2_PROBS: dict[str, float] = {
    "II": 0.70, "ZI": 0.01, "IZ": 0.10, "XI": 0.18, "IX": 0.01,
}

_P1 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _dense(label: str) -> np.ndarray:
    m = np.array([[1.0 + 0j]])
    for ch in label:
        m = np.kron(m, _P1[ch])
    return m


_H2 = np.kron(np.array([[1, 1], [1, -1]]) / math.sqrt(2), np.eye(2))
_XX = _dense("XX")
_ZZ = _dense("ZZ")


def _half(theta: float, epsilon: float) -> float:
    return (math.pi + theta + epsilon) / 2.0


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

def ghz_cost_noiseless(theta: float, epsilon: float) -> float:
    """-sin(h) - sin^2(h) with h the half of the total flip angle."""
    s = math.sin(_half(theta, epsilon))
    return -s - s * s


def ghz_cost_end_pauli(
    theta: float, epsilon: float, probs: Mapping[str, float] | None = None
) -> float:
    """Both terms rescaled by the end channel's chi factors.

    The XX term sees the weight of single-qubit Z errors, the ZZ term the
    weight of single-qubit X errors.
    """
    p = dict(END_CHANNEL_PROBS if probs is None else probs)
    total = sum(p.values())
    if any(v < 0 for v in p.values()) or abs(total - 1.0) > 1e-9:
        raise ValueError("channel probabilities must form a distribution")
    gamma1 = p.get("ZI", 0.0) + p.get("IZ", 0.0)
    gamma2 = p.get("XI", 0.0) + p.get("IX", 0.0)
    s = math.sin(_half(theta, epsilon))
    return -(1 - 2 * gamma1) * s - (1 - 2 * gamma2) * s * s


def ghz_cost_depol(theta: float, epsilon: float, p: float) -> float:
    """(1-p)^2 times the noiseless cost: one depolarizing map per moment."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    return (1 - p) ** 2 * ghz_cost_noiseless(theta, epsilon)


def composed_moment_probs(
    probs1: Mapping[str, float] | None = None,
    probs2: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """The twelve effective end-of-circuit probabilities of scenario (d).

    The first channel, pushed through the controlled flip, maps XI to XX and
    YI to YX while fixing ZI; convolving with the second channel gives
    products of pairs of input weights.
    """
    a = dict(MOMENT1_PROBS if probs1 is None else probs1)
    b = dict(MOMENT2_PROBS if probs2 is None else probs2)
    return {
        "II": a["II"] * b["II"] + a["ZI"] * b["ZI"],
        "ZI": a["ZI"] * b["II"] + a["II"] * b["ZI"],
        "IZ": a["II"] * b["IZ"],
        "XI": a["II"] * b["XI"] + a["XI"] * b["IX"],
        "IX": a["XI"] * b["XI"] + a["II"] * b["IX"],
        "YI": a["ZI"] * b["XI"] + a["YI"] * b["IX"],
        "ZZ": a["ZI"] * b["IZ"],
        "XX": a["XI"] * b["II"] + a["YI"] * b["ZI"],
        "YY": a["YI"] * b["IZ"],
        "ZX": a["YI"] * b["XI"] + a["ZI"] * b["IX"],
        "XY": a["XI"] * b["IZ"],
        "YX": a["YI"] * b["II"] + a["XI"] * b["ZI"],
    }


def ghz_cost_moment_pauli(
    theta: float,
    epsilon: float,
    probs1: Mapping[str, float] | None = None,
    probs2: Mapping[str, float] | None = None,
) -> float:
    """(1 - G1 - G2) * (-2 sin^2(h)) with G1, G2 from the composed weights.

    G1 collects the composed terms anticommuting with XX, G2 those
    anticommuting with ZZ; the pure cost uses the exponential flip
    parametrization, for which both stabilizer terms equal -sin^2(h).
    """
    p = composed_moment_probs(probs1, probs2)
    gamma1 = p["ZI"] + p["IZ"] + p["YI"] + p["ZX"] + p["XY"] + p["YX"]
    gamma2 = p["XI"] + p["IX"] + p["YI"] + p["ZX"]
    s = math.sin(_half(theta, epsilon))
    return (1 - gamma1 - gamma2) * (-2 * s * s)


# ---------------------------------------------------------------------------
# Dense two-qubit simulations (independent cross-checks)
# ---------------------------------------------------------------------------

def cx_block(phi: float) -> np.ndarray:
    """Controlled flip as a block matrix: identity / i times an X rotation."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    rx = np.array([[c, -1j * s], [-1j * s, c]])
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = np.eye(2)
    out[2:, 2:] = 1j * rx
    return out


def cx_exponential(phi: float) -> np.ndarray:
    """Controlled flip as exp(-i phi H): the block picks up a half-angle phase."""
    out = cx_block(phi)
    out[2:, 2:] = np.exp(1j * phi / 2) * (-1j) * out[2:, 2:]
    return out


def _apply_channel_dense(rho: np.ndarray, probs: Mapping[str, float]) -> np.ndarray:
    out = np.zeros_like(rho)
    for label, p in probs.items():
        m = _dense(label)
        out += p * (m @ rho @ m.conj().T)
    return out


def _ghz_rho(theta: float, epsilon: float, flip) -> np.ndarray:
    u = flip(math.pi + theta + epsilon) @ _H2
    psi = u[:, 0]
    return np.outer(psi, psi.conj())


def _cost_of(rho: np.ndarray) -> float:
    return float(-(np.trace(_XX @ rho) + np.trace(_ZZ @ rho)).real)


def simulate_noiseless(theta: float, epsilon: float) -> float:
    return _cost_of(_ghz_rho(theta, epsilon, cx_block))


def simulate_end_pauli(
    theta: float, epsilon: float, probs: Mapping[str, float] | None = None
) -> float:
    rho = _ghz_rho(theta, epsilon, cx_block)
    return _cost_of(_apply_channel_dense(rho, END_CHANNEL_PROBS if probs is None else probs))


def simulate_depol(theta: float, epsilon: float, p: float) -> float:
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    for u in (_H2, cx_block(math.pi + theta + epsilon)):
        rho = u @ rho @ u.conj().T
        rho = (1 - p) * rho + p * np.trace(rho) * np.eye(4) / 4
    return _cost_of(rho)


def simulate_moment_pauli(
    theta: float,
    epsilon: float,
    probs1: Mapping[str, float] | None = None,
    probs2: Mapping[str, float] | None = None,
) -> float:
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    rho = _H2 @ rho @ _H2.conj().T
    rho = _apply_channel_dense(rho, MOMENT1_PROBS if probs1 is None else probs1)
    u = cx_exponential(math.pi + theta + epsilon)
    rho = u @ rho @ u.conj().T
    rho = _apply_channel_dense(rho, MOMENT2_PROBS if probs2 is None else probs2)
    return _cost_of(rho)


VARIANTS = ("noiseless", "end_pauli", "per_moment_depol", "per_moment_pauli")


def landscape(variant: str, epsilon: float, thetas, depol_p: float = 0.2):
    """(theta, closed form, dense simulation, |difference|) rows.

    For the per-moment Pauli variant the closed form is also the pushed-to-
    the-end channel prediction, so the difference column doubles as the
    remainder gap.
    """
    pairs = {
        "noiseless": (ghz_cost_noiseless, simulate_noiseless),
        "end_pauli": (ghz_cost_end_pauli, simulate_end_pauli),
        "per_moment_depol": (
            lambda t, e: ghz_cost_depol(t, e, depol_p),
            lambda t, e: simulate_depol(t, e, depol_p),
        ),
        "per_moment_pauli": (ghz_cost_moment_pauli, simulate_moment_pauli),
    }
    if variant not in pairs:
        raise ValueError(f"unknown variant {variant!r}; pick one of {VARIANTS}")
    analytic, simulate = pairs[variant]
    rows = []
    for t in thetas:
        a = analytic(float(t), epsilon)
        s = simulate(float(t), epsilon)
        rows.append((float(t), a, s, abs(a - s)))
    return rows
