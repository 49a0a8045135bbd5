"""Command-line entry point.

Subcommands: optimize, delta-scaling, ghz-landscape, twirl-demo.  A config
file (key=value lines or a previous run's manifest.json) can seed any flag;
explicit flags win.  Exit codes: 0 success, 2 configuration error, 3
register size beyond the dense-simulation budget.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_delta_scaling,
    run_ghz_landscape,
    run_optimize,
    run_twirl_demo,
)
from .optimize import OptimizerSettings
from .simulator import ResourceLimitError

EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path!r} not found")
    text = p.read_text()
    if p.suffix == ".json":
        doc = json.loads(text)
        return doc.get("config", doc)
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"bad config line {line!r} (expected key=value)")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="line:N, grid:RxC, or an edge-list file")
    p.add_argument("--noise", help="none | pauli:mag=X[,m=1] | depol:p=X")
    p.add_argument("--coh-mag", type=float, help="coherent error magnitude")
    p.add_argument("--seed-coh", type=int, help="seed for coherent errors")
    p.add_argument("--seed-inc", type=int, help="seed for incoherent errors")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="config file (key=value lines or manifest.json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabcal",
        description="Recover native-gate angle errors on stabilizer circuits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="minimize the stabilizer cost")
    _add_common(p_opt)
    p_opt.add_argument("--lr", type=float, help="learning rate")
    p_opt.add_argument("--max-iters", type=int, help="iteration budget")
    p_opt.add_argument("--grad-tol", type=float, help="gradient-norm stop")
    p_opt.add_argument(
        "--no-adaptive", action="store_true", help="plain gradient descent"
    )

    p_delta = sub.add_parser(
        "delta-scaling", help="remainder gap vs error magnitude and size"
    )
    _add_common(p_delta)
    p_delta.add_argument(
        "--eps", help="comma-separated magnitude sweep (default 8 log points)"
    )
    p_delta.add_argument("--n", help="comma-separated register sweep (default 4..10)")
    p_delta.add_argument("--eps-fixed", type=float, help="magnitude for the n sweep")
    p_delta.add_argument(
        "--allow-n12", action="store_true", help="permit 11/12-qubit sweep points"
    )

    p_ghz = sub.add_parser("ghz-landscape", help="two-qubit closed forms vs simulation")
    _add_common(p_ghz)
    p_ghz.add_argument("--variant", help="noiseless | end_pauli | per_moment_depol"
                       " | per_moment_pauli | all")
    p_ghz.add_argument("--epsilon", type=float, help="frozen angle error")
    p_ghz.add_argument("--depol-p", type=float, help="per-moment depolarizing p")
    p_ghz.add_argument("--points", type=int, help="theta grid size")

    p_tw = sub.add_parser("twirl-demo", help="twirl an amplitude-damping channel")
    _add_common(p_tw)
    p_tw.add_argument("--gamma", type=float, help="damping strength")
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    file_vals = _load_config_file(args.config) if args.config else {}

    def pick(flag, key, cast):
        if flag is not None:
            return flag
        if key in file_vals and file_vals[key] is not None:
            return cast(file_vals[key])
        return None

    base: dict = {"experiment": args.command}
    simple = [
        ("graph", "graph", str),
        ("noise", "noise", str),
        ("coh_mag", "coh_mag", float),
        ("seed_coh", "seed_coh", int),
        ("seed_inc", "seed_inc", int),
    ]
    for attr, key, cast in simple:
        val = pick(getattr(args, attr, None), key, cast)
        if val is not None:
            base[key] = val
    out = pick(getattr(args, "out", None), "out_dir", str)
    if out is not None:
        base["out_dir"] = out

    if args.command == "optimize":
        opt_file = file_vals.get("optimizer", {})
        if isinstance(opt_file, str):
            opt_file = json.loads(opt_file)
        opt = dict(opt_file)
        if args.lr is not None:
            opt["learning_rate"] = args.lr
        if args.max_iters is not None:
            opt["max_iters"] = args.max_iters
        if args.grad_tol is not None:
            opt["grad_tolerance"] = args.grad_tol
        if args.no_adaptive:
            opt["adaptive"] = False
        base["optimizer"] = OptimizerSettings(**opt)
    elif args.command == "delta-scaling":
        base["experiment"] = "delta_scaling"
        eps = pick(args.eps, "eps_values", str)
        if eps is not None:
            if isinstance(eps, str):
                base["eps_values"] = tuple(float(v) for v in eps.split(","))
            else:
                base["eps_values"] = tuple(float(v) for v in eps)
        ns = pick(args.n, "n_values", str)
        if ns is not None:
            if isinstance(ns, str):
                base["n_values"] = tuple(int(v) for v in ns.split(","))
            else:
                base["n_values"] = tuple(int(v) for v in ns)
        val = pick(args.eps_fixed, "eps_fixed", float)
        if val is not None:
            base["eps_fixed"] = val
        if args.allow_n12 or file_vals.get("allow_n12") in (True, "true", "1"):
            base["allow_n12"] = True
        base.setdefault("graph", "line:10")
        base.setdefault("noise", "pauli:mag=0.01")
    elif args.command == "ghz-landscape":
        base["experiment"] = "ghz_landscape"
        for attr, key, cast in [
            ("variant", "variant", str),
            ("epsilon", "ghz_epsilon", float),
            ("depol_p", "depol_p", float),
            ("points", "theta_points", int),
        ]:
            val = pick(getattr(args, attr), key, cast)
            if val is not None:
                base[key] = val
    elif args.command == "twirl-demo":
        base["experiment"] = "twirl_demo"
        val = pick(args.gamma, "gamma", float)
        if val is not None:
            base["gamma"] = val

    try:
        return ExperimentConfig(**base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


_RUNNERS = {
    "optimize": run_optimize,
    "delta_scaling": run_delta_scaling,
    "ghz_landscape": run_ghz_landscape,
    "twirl_demo": run_twirl_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merge_config(args)
        result = _RUNNERS[config.experiment](config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    bulky = {"final_theta", "epsilons", "noise_layout", "outputs", "terms"}
    summary = {
        k: (
            v
            if not isinstance(v, dict)
            else {kk: vv for kk, vv in v.items() if kk not in bulky}
        )
        for k, v in result.items()
        if k not in bulky
    }
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
