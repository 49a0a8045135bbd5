import json
import math
from pathlib import Path

import numpy as np
import pytest

from stabcal.channels import DepolarizingChannel, PauliChannel
from stabcal.circuits import build_graph_circuit, transpile
from stabcal.experiments import (
    ConfigError,
    ExperimentConfig,
    FitResult,
    ols_fit,
    parse_graph_spec,
    parse_noise_spec,
    run_delta_scaling,
    run_ghz_landscape,
    run_optimize,
    run_twirl_demo,
)
from stabcal.optimize import OptimizerSettings
from stabcal.pauli import Graph


class TestParseGraphSpec:
    def test_line_and_grid(self):
        assert parse_graph_spec("line:5") == Graph.line(5)
        assert parse_graph_spec("grid:2x5") == Graph.grid(2, 5)

    def test_edge_list_file(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("# a triangle\n0 1\n1 2\n0 2\n")
        g = parse_graph_spec(str(p))
        assert g.n == 3 and len(g.edges) == 3

    def test_bad_specs(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_graph_spec("ring:5")
        bad = tmp_path / "bad.txt"
        bad.write_text("0 x\n")
        with pytest.raises(ConfigError):
            parse_graph_spec(str(bad))
        empty = tmp_path / "empty.txt"
        empty.write_text("# nothing\n")
        with pytest.raises(ConfigError):
            parse_graph_spec(str(empty))


class TestParseNoiseSpec:
    def setup_method(self):
        self.circuit = transpile(build_graph_circuit(Graph.line(3)))

    def test_none(self):
        layout = parse_noise_spec("none", self.circuit, seed=0)
        assert all(len(e) == 0 for e in layout.entries)

    def test_pauli_gate_aligned(self):
        layout = parse_noise_spec("pauli:mag=0.01", self.circuit, seed=0)
        assert len(layout) == self.circuit.num_moments
        assert all(
            isinstance(f, PauliChannel) for e in layout.entries for f in e
        )
        two_local = [
            f for e in layout.entries for f in e if len(f.support) == 2
        ]
        assert two_local  # the rzx moments carry two-qubit factors

    def test_pauli_single_locality(self):
        layout = parse_noise_spec("pauli:mag=0.01,m=1", self.circuit, seed=0)
        assert all(
            len(f.support) == 1 for e in layout.entries for f in e
        )

    def test_depol(self):
        layout = parse_noise_spec("depol:p=0.2", self.circuit, seed=0)
        assert all(
            isinstance(e[0], DepolarizingChannel) and e[0].p == 0.2
            for e in layout.entries
        )

    def test_bad_specs(self):
        for spec in ("pauli", "pauli:mag=x", "pauli:m=3,mag=0.1", "depol:q=1", "foo:1"):
            with pytest.raises(ConfigError):
                parse_noise_spec(spec, self.circuit, seed=0)


class TestOlsFit:
    def test_exact_line(self):
        xs = np.arange(6.0)
        fit = ols_fit(xs, 3.0 * xs - 1.0)
        assert np.isclose(fit.slope, 3.0)
        assert np.isclose(fit.intercept, -1.0)
        assert np.isclose(fit.r_squared, 1.0)

    def test_r_squared_range(self):
        rng = np.random.default_rng(0)
        xs = np.linspace(0, 1, 20)
        fit = ols_fit(xs, xs + 0.3 * rng.normal(size=20))
        assert 0.0 <= fit.r_squared <= 1.0

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            ols_fit([1, 2, 3], [1, 2, 3])


def _optimize_config(tmp_path, **kw):
    defaults = dict(
        experiment="optimize",
        graph="line:3",
        noise="none",
        coh_mag=0.01,
        seed_coh=3,
        seed_inc=4,
        out_dir=str(tmp_path / "run"),
        optimizer=OptimizerSettings(max_iters=400),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestRunOptimize:
    def test_noiseless_line_converges(self, tmp_path):
        summary = run_optimize(_optimize_config(tmp_path))
        assert summary["converged"]
        assert abs(summary["final_cost"] + 3) < 1e-6
        assert summary["max_abs_residual"] < 1e-3
        out = tmp_path / "run"
        assert (out / "trace.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed_coh"] == 3
        assert manifest["version"]

    def test_trace_csv_columns(self, tmp_path):
        run_optimize(_optimize_config(tmp_path))
        header = (tmp_path / "run" / "trace.csv").read_text().splitlines()[0]
        assert header == "iter,cost,grad_norm,eps_rz,eps_rx,eps_rzx"

    def test_rerun_is_bit_identical(self, tmp_path):
        run_optimize(_optimize_config(tmp_path, out_dir=str(tmp_path / "a")))
        run_optimize(_optimize_config(tmp_path, out_dir=str(tmp_path / "b")))
        for name in ("trace.csv",):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        ma["config"].pop("out_dir")
        mb["config"].pop("out_dir")
        assert ma == mb

    def test_rerun_from_manifest_config(self, tmp_path):
        run_optimize(_optimize_config(tmp_path, out_dir=str(tmp_path / "a")))
        doc = json.loads((tmp_path / "a" / "manifest.json").read_text())
        cfg = ExperimentConfig.from_json_dict(doc["config"])
        cfg = ExperimentConfig(
            **{**cfg.to_json_dict(), "optimizer": cfg.optimizer, "out_dir": str(tmp_path / "b")}
        )
        run_optimize(cfg)
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (
            tmp_path / "b" / "trace.csv"
        ).read_bytes()

    def test_grid_noiseless_reaches_bound(self, tmp_path):
        summary = run_optimize(
            _optimize_config(tmp_path, graph="grid:2x5", seed_coh=1)
        )
        assert summary["converged"]
        assert abs(summary["final_cost"] + 10) < 1e-4
        assert summary["max_abs_residual"] < 1e-3

    def test_noisy_small_line(self, tmp_path):
        summary = run_optimize(
            _optimize_config(
                tmp_path,
                graph="line:2",
                noise="pauli:mag=0.01",
                optimizer=OptimizerSettings(max_iters=400, grad_tolerance=1e-6),
            )
        )
        assert summary["converged"]
        assert summary["max_abs_residual"] < 1e-3


class TestRunDeltaScaling:
    def test_small_sweep_outputs(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="delta_scaling",
            graph="line:4",
            noise="pauli:mag=0.01",
            seed_coh=5,
            seed_inc=6,
            out_dir=str(tmp_path / "d"),
            eps_values=(0.0, 1e-3, 1e-2, 3e-2, 1e-1),
            n_values=(4, 6, 8, 10),
        )
        summary = run_delta_scaling(cfg)
        eps_csv = (tmp_path / "d" / "delta_vs_eps.csv").read_text().splitlines()
        assert eps_csv[0] == "eps,delta,abs_delta"
        assert len(eps_csv) == 6  # header + 5 sweep points incl. zero
        zero_row = eps_csv[1].split(",")
        assert float(zero_row[0]) == 0.0 and abs(float(zero_row[1])) < 1e-13
        # slope comes from the four positive points only
        assert len(summary["eps_fit"]["points"]) == 4
        assert 1.8 < summary["eps_fit"]["slope"] < 2.2
        n_csv = (tmp_path / "d" / "delta_vs_n.csv").read_text().splitlines()
        assert n_csv[0] == "n,delta,abs_delta"
        assert len(n_csv) == 5
        assert summary["n_fit"]["r_squared"] > 0.99

    def test_rejects_non_line_graph(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="delta_scaling", graph="grid:2x3",
            out_dir=str(tmp_path), noise="pauli:mag=0.01",
        )
        with pytest.raises(ConfigError):
            run_delta_scaling(cfg)

    def test_register_budget(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="delta_scaling", graph="line:10",
            noise="pauli:mag=0.01", out_dir=str(tmp_path),
            n_values=(6, 8, 10, 12),
        )
        with pytest.raises(ConfigError):
            run_delta_scaling(cfg)

    def test_mixed_parity_rejected(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="delta_scaling", graph="line:4",
            noise="pauli:mag=0.01", out_dir=str(tmp_path),
            n_values=(4, 5, 6, 7),
        )
        with pytest.raises(ConfigError):
            run_delta_scaling(cfg)

    def test_sweep_size_check(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="delta_scaling", graph="line:4",
            noise="pauli:mag=0.01", out_dir=str(tmp_path),
            eps_values=(1e-2, 1e-1), n_values=(4, 6, 8, 10),
        )
        with pytest.raises(ConfigError):
            run_delta_scaling(cfg)


class TestRunGhzLandscape:
    def test_all_variants(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="ghz_landscape", variant="all",
            out_dir=str(tmp_path / "g"), theta_points=21,
        )
        summary = run_ghz_landscape(cfg)
        assert set(summary["max_abs_difference"]) == {
            "noiseless", "end_pauli", "per_moment_depol", "per_moment_pauli",
        }
        assert all(v < 1e-12 for v in summary["max_abs_difference"].values())

    def test_minimum_location_noiseless(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="ghz_landscape", variant="noiseless",
            ghz_epsilon=0.5, out_dir=str(tmp_path / "g2"), theta_points=201,
        )
        run_ghz_landscape(cfg)
        rows = (tmp_path / "g2" / "landscape_noiseless.csv").read_text().splitlines()[1:]
        data = [tuple(map(float, r.split(","))) for r in rows]
        best = min(data, key=lambda r: r[1])
        assert abs(best[0] + 0.5) < math.pi / 100

    def test_unknown_variant(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="ghz_landscape", variant="weird", out_dir=str(tmp_path)
        )
        with pytest.raises(ConfigError):
            run_ghz_landscape(cfg)


class TestRunTwirlDemo:
    def test_zero_damping_is_identity(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="twirl_demo", gamma=0.0, out_dir=str(tmp_path / "t")
        )
        report = run_twirl_demo(cfg)
        assert report["pauli_twirl"]["terms"] == {"I": 1.0}
        assert report["clifford_twirl"]["p"] == pytest.approx(0.0, abs=1e-12)

    def test_residuals(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="twirl_demo", gamma=0.1, out_dir=str(tmp_path / "t2")
        )
        report = run_twirl_demo(cfg)
        assert report["pauli_twirl"]["off_diagonal_after"] < 1e-12
        assert report["clifford_twirl"]["gap_to_group_average"] < 1e-10
