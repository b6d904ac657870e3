"""Command-line front end: simulate, reconstruct, report.

Subcommands:
  run     simulate a measurement record and reconstruct the number distribution
  oracle  run the built-in validation suites (dmatrix | folded | kernels)
  eta     map physical parameters to the detection efficiency

Configuration precedence for `run` is flag > config file > default.
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io, kernels, mle, simulate, spinproj, states

RUN_DEFAULTS = {
    "state": "css",
    "xi": 1.0,
    "m": 1,
    "shots": 20000,
    "bins": 100,
    "range": 6.0,
    "kmax": 16,
    "seed": 0,
    "phase_mode": "random",
    "out": ".",
    "emit": {"histogram_csv": True, "result_json": True, "density_curves_csv": True},
}

_TRUE_CURVE_CUTOFF = 64


@dataclass
class RunConfig:
    state: states.SpinStateModel
    measurement: simulate.MeasurementConfig
    k_max: int
    out_dir: Path
    emit: dict = field(default_factory=lambda: dict(RUN_DEFAULTS["emit"]))


class ConfigError(ValueError):
    pass


def _merge_run_options(args):
    merged = dict(RUN_DEFAULTS)
    merged["emit"] = dict(RUN_DEFAULTS["emit"])
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        emit = file_cfg.pop("emit", None)
        merged.update(file_cfg)
        if emit is not None:
            merged["emit"].update(emit)
    flag_map = {
        "state": args.state, "xi": args.xi, "m": args.m,
        "mixture_file": args.mixture_file, "eta": args.eta,
        "g": args.g, "tau": args.tau, "n": args.n, "atoms": args.atoms,
        "shots": args.shots, "bins": args.bins, "range": args.range,
        "kmax": args.kmax, "seed": args.seed, "phase_mode": args.phase_mode,
        "out": args.out,
    }
    for key, value in flag_map.items():
        if value is not None:
            merged[key] = value
    return merged


def _resolve_eta(opts):
    has_eta = opts.get("eta") is not None
    physical_keys = ("g", "tau", "n", "atoms")
    has_physical = any(opts.get(k) is not None for k in physical_keys)
    if has_eta and has_physical:
        raise ConfigError("--eta and physical parameters (--g/--tau/--n/--atoms) are mutually exclusive")
    if has_eta:
        return float(opts["eta"])
    if has_physical:
        missing = [k for k in physical_keys if opts.get(k) is None]
        if missing:
            raise ConfigError(f"physical parameterization needs all of g, tau, n, atoms; missing {missing}")
        try:
            params = simulate.PhysicalParams(opts["g"], opts["tau"], opts["n"], opts["atoms"])
        except ValueError as exc:
            raise ConfigError(str(exc))
        return simulate.eta_from_physical(params)
    raise ConfigError("efficiency must be given, either --eta or the physical parameters")


def _resolve_state(opts):
    kind = opts.get("state")
    try:
        if kind == "css":
            return states.css()
        if kind == "sss":
            return states.squeezed_vacuum(float(opts.get("xi", RUN_DEFAULTS["xi"])))
        if kind == "dicke":
            return states.dicke(int(opts.get("m", RUN_DEFAULTS["m"])))
        if kind == "mixture":
            weights = opts.get("weights")
            mixture_file = opts.get("mixture_file")
            if mixture_file:
                with open(mixture_file) as fh:
                    weights = json.load(fh)
            if weights is None:
                raise ConfigError("mixture state needs --mixture-file or config weights")
            return states.number_mixture(weights)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid state: {exc}")
    raise ConfigError(f"unknown state kind {kind!r} (expected css|sss|dicke|mixture)")


def build_run_config(args):
    opts = _merge_run_options(args)
    state = _resolve_state(opts)
    eta = _resolve_eta(opts)
    try:
        measurement = simulate.MeasurementConfig(
            eta=eta, shots=int(opts["shots"]), bin_count=int(opts["bins"]),
            q_range=float(opts["range"]), seed=int(opts["seed"]),
            phase_mode=opts["phase_mode"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    k_max = int(opts["kmax"])
    if k_max < 0:
        raise ConfigError("kmax must be >= 0")
    return RunConfig(state, measurement, k_max, Path(opts["out"]), dict(opts["emit"]))


def true_phase_averaged_density(state, eta, q):
    """Exact phase-averaged smeared density of the state, via kernels."""
    if state.kind == states.SQUEEZED_VACUUM:
        weights, _ = states.number_distribution(state, _TRUE_CURVE_CUTOFF)
    elif state.kind == states.DICKE:
        weights, _ = states.number_distribution(state, state.m)
    elif state.kind == states.NUMBER_MIXTURE:
        weights, _ = states.number_distribution(state, len(state.weights) - 1)
    else:
        weights, _ = states.number_distribution(state, 0)
    return kernels.phase_averaged_density(weights, eta, q)


def run_pipeline(cfg):
    """Simulate, reconstruct, and write artifacts; returns the exit status."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    hist = simulate.simulate_histogram(cfg.state, cfg.measurement)
    result = mle.select_model(hist, cfg.measurement.eta, k_max=cfg.k_max)

    if cfg.emit.get("histogram_csv", True):
        (cfg.out_dir / "histogram.csv").write_text(io.histogram_csv_text(hist))
        sidecar = io.histogram_sidecar_dict(hist, cfg.measurement, cfg.state)
        (cfg.out_dir / "histogram.json").write_text(io.dump_json(sidecar))
    if cfg.emit.get("result_json", True):
        payload = io.result_dict(result, cfg.measurement, cfg.state, cfg.k_max)
        (cfg.out_dir / "result.json").write_text(io.dump_json(payload))
    if cfg.emit.get("density_curves_csv", True):
        q = np.linspace(-cfg.measurement.q_range, cfg.measurement.q_range, 400)
        fitted = kernels.phase_averaged_density(result.best_rho, cfg.measurement.eta, q)
        true = true_phase_averaged_density(cfg.state, cfg.measurement.eta, q)
        (cfg.out_dir / "curves.csv").write_text(io.curves_csv_text(q, fitted, true))

    print(f"selected K = {result.best_k}")
    rho_text = ", ".join(f"{x:.6f}" for x in result.best_rho.rho)
    print(f"rho = [{rho_text}]")
    for warning in result.warnings:
        print(f"warning: {warning}")
    return 0


def _print_check(name, measured, tol, ok):
    status = "PASS" if ok else "FAIL"
    print(f"  {name:<44s} {measured:>12.3e}  tol {tol:g}  {status}")
    return ok


def oracle_dmatrix():
    """Unitarity, orthogonality, and brute-force checks of the d-columns."""
    print("wigner d-matrix oracle")
    ok = True
    worst = 0.0
    for N in range(1, 13):
        brute = spinproj.wigner_d_matrix_bruteforce(N)
        for M in range(N + 1):
            gap = float(np.abs(spinproj.wigner_d_column(N, M) - brute[:, M]).max())
            worst = max(worst, gap)
    ok &= _print_check("recurrence vs matrix exponential (N<=12)", worst, 1e-10, worst <= 1e-10)
    for N in (64, 256, 1024):
        cols = [spinproj.wigner_d_column(N, M) for M in range(5)]
        norm_gap = max(abs(float(c @ c) - 1.0) for c in cols)
        orth_gap = max(abs(float(cols[i] @ cols[j])) for i in range(5) for j in range(i))
        ok &= _print_check(f"unit norm, N={N}, M<=4", norm_gap, 1e-10, norm_gap <= 1e-10)
        ok &= _print_check(f"orthogonality, N={N}, M<=4", orth_gap, 1e-10, orth_gap <= 1e-10)
    return ok


def oracle_folded():
    """Monotone convergence of the folded spin projection to Fock densities."""
    print("folded-quadrature oracle")
    ok = True
    grid = (50, 100, 200, 400)
    for M in (0, 1, 2):
        discrepancies = [spinproj.folded_compare(N, M) for N in grid]
        for N, d in zip(grid, discrepancies):
            print(f"  M={M} N={N:<4d} discrepancy {d:.6f}")
        decreasing = all(b < a for a, b in zip(discrepancies, discrepancies[1:]))
        ok &= _print_check(f"strict decrease over N, M={M}",
                           discrepancies[-1] - discrepancies[0], 0, decreasing)
    final = spinproj.folded_compare(400, 0)
    ok &= _print_check("N=400, M=0 discrepancy", final, 0.02, final <= 0.02)
    return ok


def oracle_kernels():
    """Normalization of the loss-smeared kernels by wide-range quadrature."""
    print("kernel normalization oracle")
    nodes, weights = np.polynomial.legendre.leggauss(64)
    panels = np.linspace(-16.0, 16.0, 9)
    pts = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * nodes
                          for a, b in zip(panels[:-1], panels[1:])])
    wts = np.concatenate([0.5 * (b - a) * weights
                          for a, b in zip(panels[:-1], panels[1:])])
    ok = True
    for eta in (0.1, 0.3, 0.5, 0.9, 1.0):
        worst = 0.0
        for M in range(21):
            total = float(wts @ kernels.kernel_A(M, eta, pts))
            worst = max(worst, abs(total - 1.0))
        ok &= _print_check(f"max |integral - 1|, M<=20, eta={eta}", worst, 1e-8, worst <= 1e-8)
    return ok


def run_eta(args):
    try:
        params = simulate.PhysicalParams(args.g, args.tau, args.n, args.atoms)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    signal = params.g * params.tau * params.n * np.sqrt(params.atoms / 2.0)
    noise = np.sqrt(2.0 * params.n)
    eta = simulate.eta_from_physical(params)
    print(f"signal amplitude = {signal:.6e}")
    print(f"shot-noise amplitude = {noise:.6e}")
    print(f"eta = {eta:.6g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="spintomo",
                                     description="collective-spin quadrature simulation and reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate and reconstruct")
    run.add_argument("--config", help="JSON config file (flags override it)")
    run.add_argument("--state", choices=["css", "sss", "dicke", "mixture"])
    run.add_argument("--xi", type=float, help="squeeze parameter for --state sss")
    run.add_argument("--m", type=int, help="excitation number for --state dicke")
    run.add_argument("--mixture-file", help="JSON array of weights for --state mixture")
    run.add_argument("--eta", type=float, help="detection efficiency in (0, 1]")
    run.add_argument("--g", type=float, help="field-atom coupling (with --tau --n --atoms)")
    run.add_argument("--tau", type=float, help="interaction time")
    run.add_argument("--n", type=float, help="probe photon number")
    run.add_argument("--atoms", type=float, help="atom number")
    run.add_argument("--shots", type=int)
    run.add_argument("--bins", type=int)
    run.add_argument("--range", type=float)
    run.add_argument("--kmax", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--phase-mode", choices=["random", "grid"])
    run.add_argument("--out", help="output directory")

    oracle = sub.add_parser("oracle", help="run a validation suite")
    oracle.add_argument("suite", choices=["dmatrix", "folded", "kernels"])

    eta = sub.add_parser("eta", help="map physical parameters to efficiency")
    eta.add_argument("--g", type=float, required=True)
    eta.add_argument("--tau", type=float, required=True)
    eta.add_argument("--n", type=float, required=True)
    eta.add_argument("--atoms", type=float, required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = build_run_config(args)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return run_pipeline(cfg)
    if args.command == "oracle":
        suite = {"dmatrix": oracle_dmatrix, "folded": oracle_folded,
                 "kernels": oracle_kernels}[args.suite]
        return 0 if suite() else 1
    return run_eta(args)


if __name__ == "__main__":
    sys.exit(main())
