"""First-order minimization of cost evaluators from an all-zero start.

The default method is Adam-style: per-parameter first and second moment
estimates with bias correction.  With `adaptive` off it degrades to plain
gradient descent.  Convergence is declared on the gradient norm, which is
the certificate that matters here: the recovered angles are a stationary
point of the noisy cost no matter how strong the Pauli noise is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import GATE_KINDS, key_family


@dataclass(frozen=True)
class OptimizerSettings:
    max_iters: int = 500
    learning_rate: float = 0.01
    grad_tolerance: float = 1e-7
    adaptive: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.grad_tolerance <= 0:
            raise ValueError("grad_tolerance must be positive")

    def to_json_dict(self) -> dict:
        return {
            "max_iters": self.max_iters,
            "learning_rate": self.learning_rate,
            "grad_tolerance": self.grad_tolerance,
            "adaptive": self.adaptive,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_epsilon": self.adam_epsilon,
        }


@dataclass
class OptimizationTrace:
    iterations: list[tuple[int, float, float]] = field(default_factory=list)
    epsilon_metrics_history: list[dict[str, float]] = field(default_factory=list)
    final_theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = False

    @property
    def final_cost(self) -> float:
        return self.iterations[-1][1]

    @property
    def final_grad_norm(self) -> float:
        return self.iterations[-1][2]

    @property
    def num_iterations(self) -> int:
        return len(self.iterations)

    def csv_rows(self):
        """Rows of (iter, cost, grad_norm, eps_rz, eps_rx, eps_rzx)."""
        for (it, c, g), metrics in zip(self.iterations, self.epsilon_metrics_history):
            yield (
                it,
                c,
                g,
                metrics.get("rz", 0.0),
                metrics.get("rx", 0.0),
                metrics.get("rzx", 0.0),
            )


def epsilon_metrics(theta, epsilons, key_grouping) -> dict[str, float]:
    """Euclidean norm of theta + eps restricted to each gate family."""
    theta = np.asarray(theta, dtype=float)
    keys = list(key_grouping)
    if len(keys) != theta.size:
        raise ValueError("one grouping entry per parameter required")
    acc: dict[str, float] = {fam: 0.0 for fam in GATE_KINDS}
    for value, key in zip(theta, keys):
        fam = key_grouping[key] if isinstance(key_grouping, dict) else key_family(key)
        if fam not in acc:
            raise ValueError(f"key {key!r} assigned to unknown family {fam!r}")
        resid = value + float(epsilons[key])
        acc[fam] += resid * resid
    return {fam: math.sqrt(v) for fam, v in acc.items()}


def minimize(f, settings: OptimizerSettings | None = None) -> OptimizationTrace:
    """Drive a cost evaluator to a stationary point starting from theta = 0.

    The evaluator must expose `circuit` and `value_and_grad(theta)`.  The
    trace records one row per gradient evaluation; `converged` is set only
    when the gradient norm fell below the tolerance.
    """
    settings = settings or OptimizerSettings()
    circuit = f.circuit
    keys = circuit.param_keys
    grouping = {k: key_family(k) for k in keys}
    theta = np.zeros(len(keys))
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    trace = OptimizationTrace()
    for it in range(settings.max_iters):
        value, grad = f.value_and_grad(theta)
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            raise ArithmeticError(f"non-finite cost or gradient at iteration {it}")
        gnorm = float(np.linalg.norm(grad))
        trace.iterations.append((it, float(value), gnorm))
        trace.epsilon_metrics_history.append(
            epsilon_metrics(theta, circuit.epsilons, grouping)
        )
        if gnorm < settings.grad_tolerance:
            trace.converged = True
            break
        if settings.adaptive:
            m = settings.beta1 * m + (1 - settings.beta1) * grad
            v = settings.beta2 * v + (1 - settings.beta2) * grad**2
            m_hat = m / (1 - settings.beta1 ** (it + 1))
            v_hat = v / (1 - settings.beta2 ** (it + 1))
            theta = theta - settings.learning_rate * m_hat / (
                np.sqrt(v_hat) + settings.adam_epsilon
            )
        else:
            theta = theta - settings.learning_rate * grad
    trace.final_theta = theta
    return trace
