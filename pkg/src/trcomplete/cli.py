"""Command-line interface.

Subcommands: ``complete`` (mask and recover a tensor or image file),
``synth`` (generate a random ring tensor file), ``sweep`` (run an experiment
spec). Exit codes: 0 success, 2 bad arguments, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .als import SolverConfig, complete, tt_complete
from .dataio import (DataFormatError, load_any, save_chain, save_image,
                     save_tensor)
from .harness import (ExperimentSpec, recovery_error,
                      recovery_error_unobserved, run_experiment, sample_mask,
                      synthetic_tr)
from .tensors import reshape

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trcomplete",
                                     description="Low-rank tensor ring completion")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("complete", help="mask a tensor/image file and complete it")
    pc.add_argument("--input", required=True, help="TRT1 tensor or binary PGM/PPM file")
    pc.add_argument("--ratio", type=float, required=True, help="observation ratio in (0,1]")
    pc.add_argument("--rank", type=int, help="uniform bond dimension")
    pc.add_argument("--ranks", type=_int_list, help="full rank vector R0,..,Rn")
    pc.add_argument("--tt", action="store_true", help="tensor-train submodel (boundary bond 1)")
    pc.add_argument("--reshape", type=_int_list, help="reshape input to these dims first")
    pc.add_argument("--sigma", type=float, default=1e-2, help="initializer noise level")
    pc.add_argument("--tol", type=float, default=1e-10, help="stopping threshold")
    pc.add_argument("--maxiter", type=int, default=300, help="sweep cap")
    pc.add_argument("--ridge", type=float, default=0.0, help="least-squares regularization")
    pc.add_argument("--seed", type=int, default=0, help="mask and initializer seed")
    pc.add_argument("--strategy", choices=["auto", "materialize", "perentry"],
                    default="auto")
    pc.add_argument("--out", required=True, help="output directory")
    pc.add_argument("--repro", action="store_true",
                    help="reproducibility mode: omit timing from outputs")

    ps = sub.add_parser("synth", help="write a random ring tensor file")
    ps.add_argument("--dims", type=_int_list, required=True)
    ps.add_argument("--true-rank", type=int, required=True)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", required=True, help="output tensor file")
    ps.add_argument("--chain-out", help="also write the generating chain here")

    pw = sub.add_parser("sweep", help="run an experiment spec (JSON)")
    pw.add_argument("--spec", required=True, help="JSON experiment spec file")
    pw.add_argument("--out", help="output directory (default: <spec stem>_out)")
    pw.add_argument("--repro", action="store_true",
                    help="reproducibility mode: omit timing from outputs")
    return parser


def _write_json(payload: dict, path: Path):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_complete(args) -> int:
    if (args.rank is None) == (args.ranks is None):
        print("error: exactly one of --rank/--ranks is required", file=sys.stderr)
        return EXIT_USAGE
    if not 0 < args.ratio <= 1:
        print(f"error: --ratio must be in (0,1], got {args.ratio}", file=sys.stderr)
        return EXIT_USAGE

    x, kind = load_any(args.input)
    original_shape = x.shape
    if args.reshape:
        x = reshape(x, args.reshape)

    ranks = args.rank if args.ranks is None else args.ranks
    cfg = SolverConfig(ranks=ranks, tol=args.tol, maxiter=args.maxiter,
                       sigma=args.sigma, seed=args.seed, ridge=args.ridge,
                       strategy=args.strategy)
    mask = sample_mask(x.shape, args.ratio, args.seed)
    solver = tt_complete if args.tt else complete
    xhat, chain, report = solver(x, mask, cfg)
    if not np.all(np.isfinite(xhat)):
        raise np.linalg.LinAlgError("reconstruction has non-finite entries")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    re_all = recovery_error(xhat, x)
    re_unobs = recovery_error_unobserved(xhat, x, mask)

    payload = {
        "input": str(args.input),
        "input_kind": kind,
        "original_shape": list(original_shape),
        "solved_shape": list(x.shape),
        "ratio": args.ratio,
        "observed": mask.count,
        "ranks": list(chain.ranks),
        "tt": bool(args.tt),
        "sigma": args.sigma,
        "tol": args.tol,
        "maxiter": args.maxiter,
        "ridge": args.ridge,
        "seed": args.seed,
        "strategy": args.strategy,
        "re": re_all,
        "re_unobserved": None if np.isnan(re_unobs) else re_unobs,
        **report.to_dict(),
    }
    if kind in ("pgm", "ppm"):
        payload["value_scale"] = "pixels scaled to [0,1]"
    if args.repro:
        payload["wall_time_s"] = 0.0
    _write_json(payload, out / "report.json")

    save_tensor(reshape(xhat, original_shape), out / "completed.trt")
    save_chain(chain, out / "chain.trc")
    if kind in ("pgm", "ppm"):
        ext = ".pgm" if kind == "pgm" else ".ppm"
        save_image(reshape(xhat, original_shape), out / f"completed{ext}")
        save_image(reshape(mask.zero_fill(x), original_shape), out / f"observed{ext}")

    n = x.ndim
    with open(out / "history.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["update", "sweep", "mode", "observed_residual"])
        for u, res in enumerate(report.observed_residual_history):
            w.writerow([u, u // n + 1, u % n, repr(res)])
    with open(out / "deltas.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sweep", "last_core_delta"])
        for s, d in enumerate(report.un_delta_history, start=1):
            w.writerow([s, repr(d)])

    from .plots import render_convergence

    render_convergence(report.observed_residual_history, report.un_delta_history,
                       n, out / "convergence.png")

    print(f"completed {args.input}: RE {re_all:.3e}, "
          f"{report.sweeps_run} sweeps, converged={report.converged}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.true_rank < 1:
        print(f"error: --true-rank must be >= 1, got {args.true_rank}", file=sys.stderr)
        return EXIT_USAGE
    x, chain = synthetic_tr(tuple(args.dims), args.true_rank, args.seed)
    save_tensor(x, args.out)
    if args.chain_out:
        save_chain(chain, args.chain_out)
    print(f"wrote {args.out}: dims {tuple(args.dims)}, rank {args.true_rank}, "
          f"seed {args.seed}")
    return EXIT_OK


def _sweep_axis(record: dict):
    aggs = record["aggregates"]
    sweep = record["spec"].get("sweep") or {}
    if "ratio" in sweep:
        return "observation ratio", [a["ratio"] for a in aggs]
    return "bond dimension", [a["rank"] for a in aggs]


def _cmd_sweep(args) -> int:
    try:
        spec_dict = json.loads(Path(args.spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{args.spec}: {exc}") from None
    try:
        spec = ExperimentSpec.from_dict(spec_dict)
    except (TypeError, ValueError) as exc:
        print(f"error: bad spec: {exc}", file=sys.stderr)
        return EXIT_USAGE

    record = run_experiment(spec)
    out = Path(args.out) if args.out else Path(args.spec).with_name(
        Path(args.spec).stem + "_out")
    out.mkdir(parents=True, exist_ok=True)

    payload = record.to_dict()
    if args.repro:
        for run in payload["runs"]:
            run["wall_time_s"] = 0.0
    _write_json(payload, out / "record.json")

    columns = ["rank", "ratio", "tt", "repeat", "mask_seed", "init_seed", "re",
               "re_unobserved", "sweeps", "converged", "wall_time_s",
               "param_count", "error"]
    with open(out / "runs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for run in payload["runs"]:
            w.writerow(["" if run[c] is None else run[c] for c in columns])

    aggs = [a for a in record.aggregates if a["re_mean"] is not None]
    if len(aggs) > 1 and all(np.isscalar(a["rank"]) for a in aggs):
        from .plots import render_sweep

        label, xs = _sweep_axis(payload)
        render_sweep(xs, [a["re_mean"] for a in aggs],
                     [a["re_std"] for a in aggs], label, out / "sweep.png")

    done = sum(1 for r in record.runs if r["error"] is None)
    print(f"sweep finished: {done}/{len(record.runs)} runs ok, outputs in {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"complete": _cmd_complete, "synth": _cmd_synth, "sweep": _cmd_sweep}
    try:
        return handler[args.command](args)
    except (DataFormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
