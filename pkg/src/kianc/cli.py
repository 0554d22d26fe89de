"""Command line entry point for the simulation experiments.

Four subcommands mirror the shipped studies: `convergence` traces the
regional reduction over iterations at one frequency, `sweep` tabulates the
final reduction over a frequency grid, `perturb` repeats the sweep under
randomized source-position errors, and `field` snapshots the true fields on
the evaluation grid at a chosen iteration. Every command reads one config
file (default paper.cfg), writes CSV plus a meta.json echo into the output
directory, and is byte-deterministic for a fixed config and any --jobs.

Exit codes: 0 success, 2 usage or config error, 3 numerical divergence.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, harness
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _fmt(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17e")
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _write_meta(out_dir, command, config_path, exp_cfg, overrides, extra):
    payload = {
        "version": __version__,
        "command": command,
        "config_file": str(config_path),
        "config_sha256": hashlib.sha256(Path(config_path).read_bytes()).hexdigest(),
        "overrides": overrides,
        "resolved": exp_cfg.to_dict(),
    }
    payload.update(extra)
    with open(Path(out_dir) / "meta.json", "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _prepare_out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _select_method(methods, requested):
    """Resolve 'kind' or 'kind:beta' to one configured MethodSpec."""
    kind, _, beta_raw = requested.partition(":")
    candidates = [m for m in methods if m.kind == kind or m.label == requested]
    if beta_raw:
        try:
            beta = float(beta_raw)
        except ValueError as err:
            raise ConfigError(f"invalid method beta {beta_raw!r}") from err
        candidates = [m for m in candidates if m.beta == beta]
    if not candidates:
        labels = ", ".join(m.label for m in methods)
        raise ConfigError(f"method {requested!r} not configured (have: {labels})")
    return candidates[0]


def cmd_convergence(args):
    exp = load_config(args.config)
    frequency = exp.run_frequency_hz if args.freq is None else args.freq
    iterations = exp.run_iterations if args.iterations is None else args.iterations
    seed = exp.seed if args.seed is None else args.seed
    base = replace(
        exp.base_run_config(frequency_hz=frequency, n_iterations=iterations), seed=seed
    )
    results = harness.convergence_runs(base, exp.methods, jobs=args.jobs)

    rows = []
    for method, result in zip(exp.methods, results):
        for iteration, value in zip(result.checkpoints, result.p_red_db):
            rows.append((iteration, method.label, value))
    out = _prepare_out(args)
    _write_csv(out / "convergence.csv", ("iteration", "method", "p_red_db"), rows)
    diverged = any(r.diverged for r in results)
    _write_meta(
        out,
        "convergence",
        args.config,
        exp,
        _overrides(args, ("freq", "iterations", "seed")),
        {"frequency_hz": frequency, "iterations": iterations, "seed": seed, "diverged": diverged},
    )
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_sweep(args):
    exp = load_config(args.config)
    f_start = exp.sweep_f_start_hz if args.f_start is None else args.f_start
    f_stop = exp.sweep_f_stop_hz if args.f_stop is None else args.f_stop
    f_step = exp.sweep_f_step_hz if args.f_step is None else args.f_step
    iterations = exp.sweep_iterations if args.iterations is None else args.iterations
    seed = exp.seed if args.seed is None else args.seed
    if f_step <= 0 or f_stop < f_start or f_start <= 0:
        raise ConfigError(f"invalid sweep grid: start={f_start}, stop={f_stop}, step={f_step}")
    base = replace(exp.base_run_config(n_iterations=iterations), seed=seed)
    rows = harness.frequency_sweep(
        base, exp.methods, f_start=f_start, f_stop=f_stop, f_step=f_step, jobs=args.jobs
    )
    out = _prepare_out(args)
    _write_csv(
        out / "sweep.csv",
        ("frequency_hz", "method", "p_red_db"),
        [(r.frequency_hz, r.method, r.p_red_db) for r in rows],
    )
    diverged = any(r.diverged for r in rows)
    _write_meta(
        out,
        "sweep",
        args.config,
        exp,
        _overrides(args, ("f_start", "f_stop", "f_step", "iterations", "seed")),
        {
            "f_start_hz": f_start,
            "f_stop_hz": f_stop,
            "f_step_hz": f_step,
            "iterations": iterations,
            "seed": seed,
            "diverged": diverged,
        },
    )
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_perturb(args):
    exp = load_config(args.config)
    f_start = exp.perturb_f_start_hz if args.f_start is None else args.f_start
    f_stop = exp.perturb_f_stop_hz if args.f_stop is None else args.f_stop
    f_step = exp.perturb_f_step_hz if args.f_step is None else args.f_step
    trials = exp.perturb_trials if args.trials is None else args.trials
    iterations = exp.perturb_iterations if args.iterations is None else args.iterations
    seed = exp.seed if args.seed is None else args.seed
    if f_step <= 0 or f_stop < f_start or f_start <= 0:
        raise ConfigError(f"invalid perturb grid: start={f_start}, stop={f_stop}, step={f_step}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    frequencies = harness.frequency_range(f_start, f_stop, f_step)
    base = replace(exp.base_run_config(n_iterations=iterations), seed=seed)
    rows = harness.perturbation_study(
        base, exp.methods, frequencies, stds=exp.perturb_stds, trials=trials, jobs=args.jobs
    )
    out = _prepare_out(args)
    _write_csv(
        out / "perturb.csv",
        ("frequency_hz", "method", "mean_p_red_db", "std_p_red_db", "trials"),
        [(r.frequency_hz, r.method, r.mean_p_red_db, r.std_p_red_db, r.trials) for r in rows],
    )
    diverged = any(r.diverged for r in rows)
    _write_meta(
        out,
        "perturb",
        args.config,
        exp,
        _overrides(args, ("f_start", "f_stop", "f_step", "trials", "iterations", "seed")),
        {
            "f_start_hz": f_start,
            "f_stop_hz": f_stop,
            "f_step_hz": f_step,
            "trials": trials,
            "iterations": iterations,
            "seed": seed,
            "diverged": diverged,
        },
    )
    return EXIT_DIVERGED if diverged else EXIT_OK


def cmd_field(args):
    exp = load_config(args.config)
    frequency = exp.run_frequency_hz if args.freq is None else args.freq
    seed = exp.seed if args.seed is None else args.seed
    if args.iteration < 0 or args.iteration > exp.run_iterations:
        raise ConfigError(
            f"iteration {args.iteration} out of range [0, {exp.run_iterations}]"
        )
    method = _select_method(exp.methods, args.method)
    cfg = replace(
        exp.base_run_config(frequency_hz=frequency, n_iterations=args.iteration),
        method=method,
        seed=seed,
    )
    mats = harness.load_or_build_matrices(cfg, cache_dir=args.cache_dir)
    result = harness.run_adaptation(cfg, mats)

    rows = []
    for point, up, ue in zip(result.eval_points, result.final_field_up, result.final_field_ue):
        rows.append(
            (point[0], point[1], point[2], up.real, up.imag, ue.real, ue.imag)
        )
    out = _prepare_out(args)
    _write_csv(
        out / "field.csv",
        ("x", "y", "z", "re_up", "im_up", "re_ue", "im_ue"),
        rows,
    )
    _write_meta(
        out,
        "field",
        args.config,
        exp,
        _overrides(args, ("freq", "iteration", "method", "seed")),
        {
            "frequency_hz": frequency,
            "iteration": args.iteration,
            "method": method.label,
            "seed": seed,
            "diverged": result.diverged,
        },
    )
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _overrides(args, names):
    return {name: getattr(args, name) for name in names if getattr(args, name) is not None}


def _add_common(parser):
    parser.add_argument("--config", default="paper.cfg", help="config file path")
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="max parallel worker processes")
    parser.add_argument("--seed", type=int, default=None, help="override the root seed")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kianc",
        description="Spatial active noise control simulation with kernel-interpolated fields",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="reduction vs. iteration at one frequency")
    _add_common(p)
    p.add_argument("--freq", type=float, default=None, help="frequency in Hz")
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("sweep", help="final reduction vs. frequency")
    _add_common(p)
    p.add_argument("--f-start", dest="f_start", type=float, default=None)
    p.add_argument("--f-stop", dest="f_stop", type=float, default=None)
    p.add_argument("--f-step", dest="f_step", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("perturb", help="sweep under randomized source-position errors")
    _add_common(p)
    p.add_argument("--f-start", dest="f_start", type=float, default=None)
    p.add_argument("--f-stop", dest="f_stop", type=float, default=None)
    p.add_argument("--f-step", dest="f_step", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("field", help="field snapshot on the evaluation grid")
    _add_common(p)
    p.add_argument("--freq", type=float, default=None, help="frequency in Hz")
    p.add_argument("--iteration", type=int, required=True, help="iteration to snapshot")
    p.add_argument(
        "--method",
        default="individual_ki",
        help="method to run: kind or kind:beta, e.g. total_ki:2.0",
    )
    p.add_argument("--cache-dir", dest="cache_dir", default=None, help="matrix cache directory")
    p.set_defaults(func=cmd_field)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
