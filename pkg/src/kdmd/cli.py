"""Command-line interface.

Subcommands: ``fit``, ``reconstruct``, ``predict``, ``eig``, ``modes``,
``residuals``, ``synth``, ``pipeline``.  All configuration comes from flags;
no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .forecast import eigen_residuals, predict_from, reconstruct
from .io import (
    FieldGrid,
    load_matrix,
    load_model,
    load_snapshots,
    save_matrix,
    save_model,
    save_snapshots,
)
from .kernels import KernelSpec
from .koopman import SnapshotSet, fit
from .numerics import RegularizationPolicy
from .pipeline import RunConfig, format_report, run_pipeline
from .synth import affine, generate, rotation, scalar_geometric

__all__ = ["main"]


def _parse_vector(text: str) -> np.ndarray:
    toks = text.replace(",", " ").split()
    if not toks:
        raise ValueError("empty vector")
    return np.array([float(t) for t in toks])


def _parse_square_matrix(text: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    return np.array([_parse_vector(r) for r in rows])


def _parse_range(text: str) -> tuple[int, int]:
    sep = "-" if "-" in text else ":"
    parts = text.split(sep)
    if len(parts) != 2:
        raise ValueError(f"range must look like START-END, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_grid(text: str) -> FieldGrid:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"grid must look like NXxNY, got {text!r}")
    return FieldGrid(nx=int(parts[0]), ny=int(parts[1]))


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--kernel",
        default="gaussian_rbf",
        choices=("gaussian_rbf", "exp_dot_product", "polynomial", "linear"),
        help="kernel family (default: gaussian_rbf)",
    )
    p.add_argument("--mu", type=float, default=1.0, help="kernel scale parameter (default: 1)")
    p.add_argument("--degree", type=int, default=1, help="polynomial degree (default: 1)")
    p.add_argument("--offset", type=float, default=0.0, help="polynomial offset (default: 0)")
    p.add_argument(
        "--reg",
        default="tikhonov",
        choices=("tikhonov", "truncated_svd", "none"),
        help="regularization policy for Gram solves (default: tikhonov)",
    )
    p.add_argument(
        "--reg-lambda",
        type=float,
        default=1e-10,
        help="relative ridge for --reg tikhonov (default: 1e-10)",
    )
    p.add_argument(
        "--reg-rtol",
        type=float,
        default=0.0,
        help="relative cutoff for --reg truncated_svd (default: 0)",
    )


def _kernel_of(args: argparse.Namespace) -> KernelSpec:
    return KernelSpec(kind=args.kernel, mu=args.mu, degree=args.degree, offset=args.offset)


def _policy_of(args: argparse.Namespace) -> RegularizationPolicy:
    return RegularizationPolicy(
        kind=args.reg, tikhonov_lambda=args.reg_lambda, svd_rtol=args.reg_rtol
    )


def _add_frames_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=_parse_grid, help="field grid NXxNY for PGM heatmap frames")
    p.add_argument("--frames-dir", help="directory for PGM frames (requires --grid)")


def _write_frames(states: np.ndarray, grid: FieldGrid, frames_dir: str, stem: str) -> int:
    from .io import write_pgm

    d = Path(frames_dir)
    d.mkdir(parents=True, exist_ok=True)
    for i in range(states.shape[1]):
        write_pgm(d / f"{stem}_{i + 1:04d}.pgm", grid.frame(states[:, i]))
    return states.shape[1]


def _load_pairs(args: argparse.Namespace) -> SnapshotSet:
    if args.input_y is not None:
        return SnapshotSet(
            x=load_matrix(args.input, args.format),
            y=load_matrix(args.input_y, args.format),
        )
    return load_snapshots(args.input, args.format)


def _eig_table(lambdas: np.ndarray) -> str:
    rows = ["index,real,imag,abs"]
    for j, v in enumerate(lambdas, start=1):
        rows.append(f"{j},%.17g,%.17g,%.17g" % (v.real, v.imag, abs(v)))
    return "\n".join(rows) + "\n"


def _modes_table(modes_matrix: np.ndarray) -> str:
    rows = ["mode,component,real,imag"]
    n, p = modes_matrix.shape
    for j in range(p):
        for d in range(n):
            v = modes_matrix[d, j]
            rows.append(f"{j + 1},{d + 1},%.17g,%.17g" % (v.real, v.imag))
    return "\n".join(rows) + "\n"


def _out_or_stdout(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_fit(args: argparse.Namespace) -> int:
    snaps = _load_pairs(args)
    if args.train is not None:
        if args.input_y is not None:
            raise ValueError("--train applies to time-series input only")
        a, b = args.train
        if not (1 <= a < b + 1 and b + 1 <= snaps.snapshot_count):
            raise ValueError(
                f"train range {a}-{b} needs snapshots {a}..{b + 1}, "
                f"dataset has {snaps.snapshot_count}"
            )
        snaps = SnapshotSet(x=snaps.x[:, a - 1 : b + 1])
    model = fit(snaps, _kernel_of(args), _policy_of(args))
    save_model(args.out, model)
    top = ", ".join(
        "%.6g%+.6gj" % (v.real, v.imag) for v in model.lambdas[: min(4, model.num_modes)]
    )
    print(f"fitted {model.num_modes} modes; leading eigenvalues: {top}")
    print(f"model written to {args.out}")
    return 0


def _cmd_eig(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    _out_or_stdout(_eig_table(model.lambdas), args.out)
    return 0


def _cmd_modes(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    _out_or_stdout(_modes_table(model.modes), args.out)
    return 0


def _cmd_reconstruct(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    fc = reconstruct(model, args.steps)
    save_matrix(args.out, fc.states, args.format)
    print(f"wrote {args.steps} reconstructed states to {args.out}")
    if fc.lambda_powers_clamped:
        print("note: eigenvalue powers hit the overflow cap")
    if args.grid is not None and args.frames_dir is not None:
        count = _write_frames(fc.states, args.grid, args.frames_dir, "recon")
        print(f"wrote {count} PGM frames to {args.frames_dir}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if (args.x0 is None) == (args.x0_file is None):
        raise ValueError("provide exactly one of --x0 or --x0-file")
    if args.x0 is not None:
        x0 = _parse_vector(args.x0)
    else:
        x0 = load_matrix(args.x0_file, args.format).reshape(-1)
    fc = predict_from(model, x0, args.steps)
    save_matrix(args.out, fc.states, args.format)
    print(f"wrote {args.steps} predicted states to {args.out}")
    if fc.lambda_powers_clamped:
        print("note: eigenvalue powers hit the overflow cap")
    if args.grid is not None and args.frames_dir is not None:
        count = _write_frames(fc.states, args.grid, args.frames_dir, "pred")
        print(f"wrote {count} PGM frames to {args.frames_dir}")
    return 0


def _cmd_residuals(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    pairs = _load_pairs(args)
    r = eigen_residuals(model, pairs)
    rows = ["index,lambda_real,lambda_imag,residual"]
    for j in range(r.size):
        v = model.lambdas[j]
        rows.append(f"{j + 1},%.17g,%.17g,%.17g" % (v.real, v.imag, r[j]))
    _out_or_stdout("\n".join(rows) + "\n", args.out)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.system == "rotation":
        if args.theta is None:
            raise ValueError("rotation requires --theta")
        x0 = _parse_vector(args.x0) if args.x0 else (1.0, 0.0)
        system = rotation(args.theta, x0=x0, m=args.m)
    elif args.system == "affine":
        if args.matrix is None:
            raise ValueError("affine requires --matrix")
        A = _parse_square_matrix(args.matrix)
        shift = _parse_vector(args.shift) if args.shift else None
        x0 = _parse_vector(args.x0) if args.x0 else None
        system = affine(A, shift=shift, x0=x0, m=args.m)
    else:  # scalar_geometric
        if args.ratio is None:
            raise ValueError("scalar_geometric requires --ratio")
        x0 = float(args.x0) if args.x0 else 1.0
        system = scalar_geometric(args.ratio, x0=x0, m=args.m)
    snaps = generate(system)
    save_snapshots(args.out, snaps, args.format)
    print(
        f"wrote {snaps.snapshot_count} snapshots of a {args.system} system "
        f"(dimension {snaps.state_dim}) to {args.out}"
    )
    return 0


def _cmd_pipeline(args: argparse.Namespace) -> int:
    config = RunConfig(
        input_path=args.input,
        out_dir=args.out,
        kernel=_kernel_of(args),
        train=args.train,
        predict=args.predict,
        policy=_policy_of(args),
        fmt=args.format,
        grid=args.grid,
    )
    report = run_pipeline(config)
    print(format_report(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdmd",
        description="Kernel dynamic mode decomposition: fit Koopman spectra "
        "from snapshot data, reconstruct and predict trajectories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model from snapshot data")
    p.add_argument("--input", required=True, help="snapshot matrix file")
    p.add_argument("--input-y", help="image states for arbitrary-pairs mode")
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    p.add_argument("--train", type=_parse_range, help="pair range START-END (time series only)")
    p.add_argument("--out", required=True, help="output model file")
    _add_kernel_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("eig", help="eigenvalue table of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_eig)

    p = sub.add_parser("modes", help="mode matrix of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_modes)

    p = sub.add_parser("reconstruct", help="reconstruct from the model's first center")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True, help="output states file")
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    _add_frames_flags(p)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("predict", help="forecast from a given initial state")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", help="initial state, e.g. '1,0'")
    p.add_argument("--x0-file", help="file holding the initial state")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True, help="output states file")
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    _add_frames_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("residuals", help="eigenfunction residuals on given pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="snapshot matrix file")
    p.add_argument("--input-y", help="image states for arbitrary-pairs mode")
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_residuals)

    p = sub.add_parser("synth", help="generate synthetic snapshot data")
    p.add_argument(
        "--system",
        required=True,
        choices=("rotation", "affine", "scalar_geometric"),
    )
    p.add_argument("--theta", type=float, help="rotation angle in radians")
    p.add_argument("--matrix", help="affine matrix, rows separated by ';'")
    p.add_argument("--shift", help="affine shift vector")
    p.add_argument("--ratio", type=float, help="scalar geometric ratio")
    p.add_argument("--x0", help="initial state")
    p.add_argument("--m", type=int, default=8, help="snapshot count (default: 8)")
    p.add_argument("--out", required=True)
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("pipeline", help="fit, reconstruct, predict, and export tables")
    p.add_argument("--input", required=True, help="snapshot matrix file")
    p.add_argument("--format", default="csv", choices=("csv", "raw_f64"))
    p.add_argument("--train", type=_parse_range, required=True, help="pair range START-END")
    p.add_argument("--predict", type=_parse_range, help="snapshot range START-END")
    p.add_argument("--grid", type=_parse_grid, help="field grid NXxNY for PGM frames")
    p.add_argument("--out", required=True, help="output directory")
    _add_kernel_flags(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
