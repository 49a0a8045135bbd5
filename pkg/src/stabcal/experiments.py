"""Reproducible experiment drivers behind the command-line interface.

Every run takes an explicit configuration, derives all randomness from the
recorded seeds, and writes CSV data plus a JSON manifest that contains
enough to replay the run bit for bit.  Plotting is out of scope: the CSVs
are the deliverable.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    PRUNE_THRESHOLD,
    NoiseLayout,
    amplitude_damping,
    clifford_twirl,
    pauli_twirl,
    single_qubit_cliffords,
    superoperator,
    transfer_matrix,
)
from .circuits import (
    ParamCircuit,
    build_graph_circuit,
    sample_coherent_errors,
    transpile,
)
from .cost import CostGap, NoisyCost, PureCost
from .ghz_analytic import VARIANTS, landscape
from .optimize import OptimizerSettings, minimize
from .pauli import Graph, graph_stabilizers
from .seeding import derived_rng


class ConfigError(ValueError):
    """Bad experiment configuration (graph/noise spec, sweep sizes, ...)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    graph: str = "grid:2x5"
    noise: str = "none"
    coh_mag: float = 0.01
    seed_coh: int = 1
    seed_inc: int = 2
    out_dir: str = "runs"
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    # delta-scaling sweeps; the size sweep is parity-matched because a line
    # graph's two CZ layers give the gap a parity-dependent intercept
    eps_values: tuple[float, ...] = tuple(np.logspace(-3, -1, 8).tolist())
    n_values: tuple[int, ...] = (4, 6, 8, 10)
    eps_fixed: float = 0.05
    allow_n12: bool = False
    # ghz landscape
    variant: str = "noiseless"
    ghz_epsilon: float = 0.5
    depol_p: float = 0.2
    theta_points: int = 101
    # twirl demo
    gamma: float = 0.1

    def to_json_dict(self) -> dict:
        doc = {
            "experiment": self.experiment,
            "graph": self.graph,
            "noise": self.noise,
            "coh_mag": self.coh_mag,
            "seed_coh": self.seed_coh,
            "seed_inc": self.seed_inc,
            "out_dir": self.out_dir,
            "optimizer": self.optimizer.to_json_dict(),
            "eps_values": list(self.eps_values),
            "n_values": list(self.n_values),
            "eps_fixed": self.eps_fixed,
            "allow_n12": self.allow_n12,
            "variant": self.variant,
            "ghz_epsilon": self.ghz_epsilon,
            "depol_p": self.depol_p,
            "theta_points": self.theta_points,
            "gamma": self.gamma,
        }
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        opt = doc.pop("optimizer", {})
        cfg = cls(**{k: v for k, v in doc.items() if k in cls.__dataclass_fields__})
        return replace(
            cfg,
            optimizer=OptimizerSettings(**opt),
            eps_values=tuple(doc.get("eps_values", cfg.eps_values)),
            n_values=tuple(doc.get("n_values", cfg.n_values)),
        )


@dataclass(frozen=True)
class FitResult:
    """Two-parameter ordinary-least-squares fit y = slope * x + intercept."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]

    def to_json_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
        }


def ols_fit(xs, ys) -> FitResult:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size or xs.size < 4:
        raise ConfigError("need at least four points for a fit")
    xm, ym = xs.mean(), ys.mean()
    sxx = float(((xs - xm) ** 2).sum())
    if sxx == 0.0:
        raise ConfigError("degenerate fit: all abscissae equal")
    slope = float(((xs - xm) * (ys - ym)).sum() / sxx)
    intercept = ym - slope * xm
    resid = ys - (slope * xs + intercept)
    sst = float(((ys - ym) ** 2).sum())
    r2 = 1.0 if sst == 0.0 else 1.0 - float((resid**2).sum()) / sst
    return FitResult(slope, float(intercept), r2, tuple(zip(xs.tolist(), ys.tolist())))


# ---------------------------------------------------------------------------
# Spec parsing
# ---------------------------------------------------------------------------

def parse_graph_spec(spec: str) -> Graph:
    """"line:N", "grid:RxC", or a path to an edge-list file ("u v" lines)."""
    m = re.fullmatch(r"line:(\d+)", spec)
    if m:
        return Graph.line(int(m.group(1)))
    m = re.fullmatch(r"grid:(\d+)x(\d+)", spec)
    if m:
        return Graph.grid(int(m.group(1)), int(m.group(2)))
    path = Path(spec)
    if path.is_file():
        edges = []
        nodes = -1
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                u, v = map(int, line.split())
            except ValueError as exc:
                raise ConfigError(f"bad edge line {line!r} in {spec}") from exc
            edges.append((u, v))
            nodes = max(nodes, u, v)
        if not edges:
            raise ConfigError(f"edge-list file {spec} holds no edges")
        return Graph.from_edges(nodes + 1, edges)
    raise ConfigError(f"graph spec {spec!r} is not line:N, grid:RxC or a file")


def parse_noise_spec(spec: str, circuit: ParamCircuit, seed: int):
    """"none", "pauli:mag=.." (optionally ",m=1"), or "depol:p=.."."""
    if spec == "none":
        return NoiseLayout.identity(circuit)
    head, _, rest = spec.partition(":")
    opts = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        if not v:
            raise ConfigError(f"bad noise option {item!r} in {spec!r}")
        opts[k] = v
    try:
        if head == "pauli":
            mag = float(opts.pop("mag"))
            locality = {"1": "single", "gate": "gate"}.get(opts.pop("m", "gate"))
            if locality is None or opts:
                raise KeyError
            return NoiseLayout.gate_aligned_pauli(circuit, mag, seed, locality)
        if head == "depol":
            p = float(opts.pop("p"))
            if opts:
                raise KeyError
            return NoiseLayout.uniform_depolarizing(circuit, p)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad noise spec {spec!r}") from exc
    raise ConfigError(f"unknown noise kind {head!r}")


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _write_manifest(path: Path, config: ExperimentConfig, extra: dict) -> None:
    doc = {
        "tool": "stabcal",
        "version": __version__,
        "prune_threshold": PRUNE_THRESHOLD,
        "config": config.to_json_dict(),
    }
    doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _prepare(config: ExperimentConfig):
    graph = parse_graph_spec(config.graph)
    circuit = transpile(build_graph_circuit(graph))
    eps = sample_coherent_errors(circuit, config.coh_mag, config.seed_coh)
    circuit = circuit.with_epsilons(eps)
    layout = parse_noise_spec(config.noise, circuit, config.seed_inc)
    return graph, circuit, layout


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def run_optimize(config: ExperimentConfig) -> dict:
    """Build, corrupt, optimize; write the trace CSV and manifest."""
    graph, circuit, layout = _prepare(config)
    stabs = graph_stabilizers(graph)
    if config.noise == "none":
        evaluator = PureCost(circuit, stabs)
    else:
        evaluator = NoisyCost(circuit, layout, stabs)
    trace = minimize(evaluator, config.optimizer)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "trace.csv",
        ["iter", "cost", "grad_norm", "eps_rz", "eps_rx", "eps_rzx"],
        trace.csv_rows(),
    )
    residual = trace.final_theta + circuit.epsilon_vector()
    summary = {
        "final_cost": trace.final_cost,
        "final_grad_norm": trace.final_grad_norm,
        "iterations": trace.num_iterations,
        "converged": trace.converged,
        "max_abs_residual": float(np.abs(residual).max()),
        "final_theta": {
            k: float(t) for k, t in zip(circuit.param_keys, trace.final_theta)
        },
        "epsilons": dict(circuit.epsilons),
        "noise_layout": layout.to_json_dict(),
        "outputs": ["trace.csv"],
    }
    _write_manifest(out / "manifest.json", config, {"result": summary})
    return summary


def _delta_at_zero(n: int, unit_draw_seed: int, magnitude: float, inc_seed: int,
                   inc_mag: float) -> float:
    graph = Graph.line(n)
    circuit = transpile(build_graph_circuit(graph))
    eps = {}
    for key in circuit.param_keys:
        rng = derived_rng(unit_draw_seed, "delta-coh", key)
        eps[key] = magnitude * float(rng.uniform(-1.0, 1.0))
    circuit = circuit.with_epsilons(eps)
    layout = NoiseLayout.gate_aligned_pauli(circuit, inc_mag, inc_seed)
    gap = CostGap(circuit, layout, graph_stabilizers(graph))
    return gap.value(np.zeros(len(circuit.param_keys)))


def _delta_at_zero_uniform(n: int, eps: float, weight: float) -> float:
    graph = Graph.line(n)
    circuit = transpile(build_graph_circuit(graph))
    circuit = circuit.with_epsilons({k: eps for k in circuit.param_keys})
    layout = NoiseLayout.gate_aligned_uniform(circuit, weight)
    gap = CostGap(circuit, layout, graph_stabilizers(graph))
    return gap.value(np.zeros(len(circuit.param_keys)))


def run_delta_scaling(config: ExperimentConfig) -> dict:
    """Remainder gap at zero parameters versus error magnitude and size.

    The magnitude sweep scales one frozen unit draw of coherent errors under
    the sampled incoherent layout, so the gap's quadratic growth is not
    washed out by resampling.  The size sweep runs the translation-invariant
    configuration (equal angle error on every slot, equal channel weights)
    on sizes of one parity: interior sites then contribute identically, and
    the parity-dependent intercept of the two CZ layers drops out.
    """
    m = re.fullmatch(r"line:(\d+)", config.graph)
    if not m:
        raise ConfigError("delta scaling requires a line:N graph")
    n_line = int(m.group(1))
    if len(config.eps_values) < 4 or len(config.n_values) < 4:
        raise ConfigError("sweeps need at least four points each")
    cap = 12 if config.allow_n12 else 10
    if max(config.n_values) > cap or n_line > cap:
        raise ConfigError(
            f"register sweep exceeds {cap} qubits"
            + ("" if config.allow_n12 else " (pass the n=12 opt-in to go higher)")
        )
    inc_mag = 0.01 if config.noise == "none" else _noise_mag(config.noise)

    eps_rows = []
    for eps in config.eps_values:
        delta = _delta_at_zero(
            n_line, config.seed_coh, float(eps), config.seed_inc, inc_mag
        )
        eps_rows.append((float(eps), delta, abs(delta)))
    # zero magnitudes produce a zero gap and stay off the log-log fit
    log_pts = [
        (math.log10(e), math.log10(d)) for e, _, d in eps_rows if e > 0 and d > 0
    ]
    eps_fit = ols_fit([p[0] for p in log_pts], [p[1] for p in log_pts])

    if len({n % 2 for n in config.n_values}) > 1:
        raise ConfigError(
            "size-sweep points must share one parity (the two CZ layers of a "
            "line graph shift the gap's intercept by parity)"
        )
    n_rows = []
    for n in config.n_values:
        delta = _delta_at_zero_uniform(int(n), config.eps_fixed, inc_mag / 2)
        n_rows.append((int(n), delta, abs(delta)))
    n_fit = ols_fit([r[0] for r in n_rows], [r[1] for r in n_rows])

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "delta_vs_eps.csv", ["eps", "delta", "abs_delta"], eps_rows)
    _write_csv(out / "delta_vs_n.csv", ["n", "delta", "abs_delta"], n_rows)
    summary = {
        "eps_fit": eps_fit.to_json_dict(),
        "n_fit": n_fit.to_json_dict(),
        "outputs": ["delta_vs_eps.csv", "delta_vs_n.csv"],
    }
    _write_manifest(out / "manifest.json", config, {"result": summary})
    return summary


def _noise_mag(spec: str) -> float:
    m = re.search(r"mag=([0-9.eE+-]+)", spec)
    if not m:
        raise ConfigError("delta scaling needs a pauli:mag=... noise spec")
    return float(m.group(1))


def run_ghz_landscape(config: ExperimentConfig) -> dict:
    """Closed form versus dense simulation on a theta grid, per variant."""
    variants = VARIANTS if config.variant == "all" else (config.variant,)
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; pick from {VARIANTS} or 'all'")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    thetas = np.linspace(-math.pi, math.pi, config.theta_points)
    summary = {"max_abs_difference": {}, "outputs": []}
    for v in variants:
        rows = landscape(v, config.ghz_epsilon, thetas, depol_p=config.depol_p)
        name = f"landscape_{v}.csv"
        _write_csv(
            out / name, ["theta", "analytic_cost", "simulated_cost", "abs_diff"], rows
        )
        summary["max_abs_difference"][v] = max(r[3] for r in rows)
        summary["outputs"].append(name)
    _write_manifest(out / "manifest.json", config, {"result": summary})
    return summary


def run_twirl_demo(config: ExperimentConfig) -> dict:
    """Twirl an amplitude-damping channel both ways and report residuals."""
    channel = amplitude_damping(config.gamma)

    twirled = pauli_twirl(channel)
    r = transfer_matrix(twirled)
    off_after = float(np.max(np.abs(r - np.diag(np.diag(r)))))
    r_in = transfer_matrix(channel)
    off_before = float(np.max(np.abs(r_in - np.diag(np.diag(r_in)))))

    depol = clifford_twirl(channel)
    s_in = superoperator(channel)
    acc = np.zeros_like(s_in)
    for c in single_qubit_cliffords():
        sc = np.kron(c, c.conj())
        acc += sc.conj().T @ s_in @ sc
    acc /= 24
    group_gap = float(np.max(np.abs(superoperator(depol) - acc)))

    report = {
        "gamma": config.gamma,
        "pauli_twirl": {
            "terms": twirled.prob_map(),
            "off_diagonal_before": off_before,
            "off_diagonal_after": off_after,
        },
        "clifford_twirl": {
            "p": depol.p,
            "gap_to_group_average": group_gap,
        },
        "outputs": ["twirl_report.json"],
    }
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "twirl_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    _write_manifest(out / "manifest.json", config, {"result": report})
    return report
