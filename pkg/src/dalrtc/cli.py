"""Command-line interface: complete, sweep, convergence, and synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 solver numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import UnidentifiedImageError

from . import bench, data, solvers
from .data import FileFormatError, MaskSpec, TENSOR_MAGIC
from .regularizer import Alphabet

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x != ""]


def _csv_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x != ""]


def _shape(text: str) -> tuple[int, ...]:
    sep = "x" if "x" in text else ","
    dims = tuple(int(x) for x in text.split(sep) if x != "")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"bad shape {text!r}")
    return dims


def _ratio_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    n = int(round((stop - start) / step))
    return [round(start + i * step, 12) for i in range(n + 1)]


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.01,
                   help="discreteness smoothing constant (default 0.01)")
    p.add_argument("--lambda", dest="lam", type=float, default=65.0,
                   help="low-rank weight (default 65)")
    p.add_argument("--zeta", type=float, default=0.5,
                   help="discreteness weight (default 0.5)")
    p.add_argument("--gamma", type=_csv_floats, default=None, metavar="W1,W2,...",
                   help="mode weights summing to 1 (default uniform)")
    p.add_argument("--ranks", type=_csv_ints, default=None, metavar="R1,R2,...",
                   help="per-mode factorization ranks (tmac)")
    p.add_argument("--penalties", type=_csv_floats, default=None, metavar="B1,B2,...",
                   help="per-mode penalties (silrtc; default 10*gamma)")
    p.add_argument("--levels", type=int, default=256,
                   help="alphabet {0..levels-1} for dalrtc (default 256)")
    p.add_argument("--accelerated", action="store_true",
                   help="momentum variant of soft-impute")
    p.add_argument("--tmax", type=int, default=500, help="iteration cap")
    p.add_argument("--eps", type=float, default=1e-5,
                   help="relative-change stopping tolerance")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--round-output", action="store_true",
                   help="snap unobserved entries of dalrtc output to the alphabet")
    p.add_argument("--pixel-aligned", action="store_true",
                   help="observe whole last-mode fibers (e.g. RGB pixels) together")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering PNG figures next to the CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dalrtc",
                     description="Low-rank tensor completion benchmarks with a "
                                 "discrete-aware proximal-gradient solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", parents=[], help="run one solver on one mask")
    p.add_argument("--input", required=True, type=Path,
                   help="RGB image or DTCT tensor file")
    p.add_argument("--method", default="dalrtc", help="one of %s" % (bench.METHODS,))
    p.add_argument("--ratio", type=float, default=0.5)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("sweep", help="methods x ratios x repetitions NMSE report")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--method", default="dalrtc,silrtc,tmac",
                   help="comma-separated method list")
    p.add_argument("--ratios", type=_ratio_grid, default="0.2:0.6:0.1",
                   metavar="START:STOP:STEP")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--no-recon", action="store_true",
                   help="skip writing per-cell reconstructions")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("convergence",
                       help="per-iteration NMSE traces at a fixed ratio")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--method", default="dalrtc,silrtc,tmac")
    p.add_argument("--ratio", type=float, default=0.6)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("synth", help="generate a discrete low-rank tensor fixture")
    p.add_argument("--shape", type=_shape, required=True, metavar="I1xI2x...")
    p.add_argument("--ranks", type=_csv_ints, required=True, metavar="R1,R2,...")
    p.add_argument("--levels", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True,
                   help="destination .dtct file (a .png preview is added "
                        "for WxHx3 shapes)")
    p.set_defaults(func=_cmd_synth)
    return parser


def _load_truth(path: Path) -> tuple[np.ndarray, bool]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == TENSOR_MAGIC:
        return data.tensor_load(path), False
    return data.load_image(path), True


def _methods(arg: str) -> list[str]:
    methods = [m for m in arg.split(",") if m != ""]
    unknown = [m for m in methods if m not in bench.METHODS]
    if unknown:
        raise _CliError(EXIT_USAGE, f"unknown method(s) {unknown}; "
                                    f"choose from {bench.METHODS}")
    return methods


def _hyper(args, method: str) -> dict:
    common = {"t_max": args.tmax, "eps": args.eps, "mode_weights": args.gamma}
    if method == "dalrtc":
        return {**common, "lam": args.lam, "zeta": args.zeta, "alpha": args.alpha,
                "round_output": args.round_output}
    if method == "silrtc":
        return {**common, "penalties": args.penalties}
    if method == "tmac":
        return {**common, "ranks": args.ranks}
    return {**common, "lam": args.lam, "accelerated": args.accelerated}


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _print_row(row: bench.NmseRow) -> None:
    print(f"method={row.method} ratio={row.ratio:g} rep={row.rep} "
          f"seed={row.seed} nmse={row.nmse:.6g} iterations={row.iterations} "
          f"ms={row.ms:.1f}")


def _cmd_complete(args) -> int:
    methods = _methods(args.method)
    if len(methods) != 1:
        raise _CliError(EXIT_USAGE, "complete takes exactly one --method")
    method = methods[0]
    truth, is_image = _load_truth(args.input)
    mask = data.sample_mask(truth.shape,
                            MaskSpec(args.ratio, args.seed, args.pixel_aligned))
    alphabet = Alphabet.integer_range(0, args.levels - 1)
    estimate, trace, row = bench.run_completion(
        method, truth, mask, ratio=args.ratio, seed=args.seed,
        alphabet=alphabet, hyper=_hyper(args, method))
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    data.tensor_save(estimate, out / f"{method}_estimate.dtct")
    if is_image:
        data.save_image(estimate, out / f"{method}_estimate.png")
    bench.write_trace_csv(trace, out / f"{method}_trace.csv")
    if not args.no_figures:
        from . import figures
        figures.save_trace(trace, out / f"{method}_trace.png")
    _print_row(row)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    truth, is_image = _load_truth(args.input)
    methods = _methods(args.method)
    plan = bench.ExperimentPlan(
        truth=truth,
        methods=tuple(methods),
        ratios=tuple(args.ratios),
        reps=args.reps,
        base_seed=args.seed,
        alphabet=Alphabet.integer_range(0, args.levels - 1),
        hyper={m: _hyper(args, m) for m in methods},
        pixel_aligned=args.pixel_aligned,
        is_image=is_image,
        out_dir=args.out_dir,
        save_recon=not args.no_recon,
        save_figures=not args.no_figures,
    )
    result = bench.run_sweep(plan)
    for row in result.rows:
        _print_row(row)
    for failure in result.failures:
        print(f"FAILED method={failure.method} ratio={failure.ratio:g} "
              f"rep={failure.rep}: {failure.error}", file=sys.stderr)
    if any(f.numerical for f in result.failures):
        return EXIT_SOLVER
    if result.failures:
        return EXIT_DATA
    return EXIT_OK


def _cmd_convergence(args) -> int:
    truth, _ = _load_truth(args.input)
    methods = _methods(args.method)
    alphabet = Alphabet.integer_range(0, args.levels - 1)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    # one shared mask so the per-iteration curves are directly comparable
    mask = data.sample_mask(truth.shape,
                            MaskSpec(args.ratio, args.seed, args.pixel_aligned))
    traces = {}
    rows = []
    for method in methods:
        _, trace, row = bench.run_completion(
            method, truth, mask, ratio=args.ratio, seed=args.seed,
            alphabet=alphabet, hyper=_hyper(args, method))
        traces[method] = trace
        rows.append(row)
        bench.write_trace_csv(trace, out / f"trace_{method}.csv")
        _print_row(row)
    bench.write_report_csv(rows, out / "convergence_report.csv")
    if not args.no_figures:
        from . import figures
        figures.save_convergence(traces, out / "convergence.png")
    return EXIT_OK


def _cmd_synth(args) -> int:
    alphabet = Alphabet.integer_range(0, args.levels - 1)
    tensor = data.synthesize_discrete_lowrank(args.shape, args.ranks,
                                              alphabet, args.seed)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    data.tensor_save(tensor, args.output)
    if tensor.ndim == 3 and tensor.shape[2] == 3 and args.levels <= 256:
        data.save_image(tensor, args.output.with_suffix(".png"))
    print(f"wrote {args.output} shape={tensor.shape} "
          f"levels={args.levels} seed={args.seed}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help exits 0, errors exit 1
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FileNotFoundError, IsADirectoryError, FileFormatError,
            UnidentifiedImageError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (solvers.SolverNumericalError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
