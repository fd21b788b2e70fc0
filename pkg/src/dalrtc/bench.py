"""Experiment runner: completion cells, observation-ratio sweeps, seed
bookkeeping, and CSV reports.

Reports are written with a fixed column order and deterministic number
formatting, so two runs of the same plan produce byte-identical CSVs in
every column except the wall-clock one (``ms``), which is kept last.
"""

from __future__ import annotations

import csv
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solvers
from .data import MaskSpec, sample_mask, save_image
from .regularizer import Alphabet
from .solvers import (
    ConvergenceTrace,
    SolverConfig,
    SolverNumericalError,
    TMacConfig,
)
from .tensor import ObservationMask, mask_project

__all__ = [
    "METHODS",
    "REPORT_COLUMNS",
    "TRACE_COLUMNS",
    "NmseRow",
    "CellFailure",
    "SweepResult",
    "ExperimentPlan",
    "nmse",
    "derive_seed",
    "run_completion",
    "run_sweep",
    "write_report_csv",
    "write_trace_csv",
]

METHODS = ("dalrtc", "silrtc", "tmac", "soft-impute")
REPORT_COLUMNS = ("method", "ratio", "rep", "seed", "nmse", "iterations", "ms")
TRACE_COLUMNS = ("iter", "rel_change", "objective", "nmse")


def nmse(estimate, truth) -> float:
    """Squared Frobenius error of the estimate over the squared norm of
    the ground truth."""
    estimate = np.asarray(estimate, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: {estimate.shape} vs {truth.shape}")
    denom = float(np.sum(truth * truth))
    if denom == 0.0:
        raise ValueError("ground truth must have nonzero norm")
    diff = estimate - truth
    return float(np.sum(diff * diff)) / denom


def derive_seed(base_seed: int, method: str, ratio_index: int, rep: int) -> int:
    """Stable per-cell seed from the plan coordinates (blake2b digest)."""
    tag = f"{base_seed}:{method}:{ratio_index}:{rep}".encode()
    return int.from_bytes(hashlib.blake2b(tag, digest_size=8).digest(), "little")


@dataclass
class NmseRow:
    """One report row: a (method, ratio, repetition) cell outcome."""

    method: str
    ratio: float
    rep: int
    seed: int
    nmse: float
    iterations: int
    ms: float


@dataclass
class CellFailure:
    """A sweep cell that raised; the sweep continues past it."""

    method: str
    ratio: float
    rep: int
    seed: int
    error: str
    numerical: bool


@dataclass
class SweepResult:
    rows: list[NmseRow] = field(default_factory=list)
    failures: list[CellFailure] = field(default_factory=list)


@dataclass
class ExperimentPlan:
    """A full sweep: methods x observation ratios x repetitions.

    ``hyper`` maps a method name to keyword overrides for its solver
    (``t_max``, ``eps``, ``lam``, ``zeta``, ``alpha``, ``mode_weights``,
    ``penalties``, ``ranks``, ``accelerated``, ``round_output``). Methods
    and ratios are normalized to sorted, de-duplicated grids; per-cell
    seeds derive from ``base_seed`` and the cell's grid coordinates.
    """

    truth: np.ndarray
    methods: tuple
    ratios: tuple
    reps: int = 1
    base_seed: int = 0
    alphabet: Alphabet | None = None
    hyper: dict = field(default_factory=dict)
    pixel_aligned: bool = False
    is_image: bool = False
    out_dir: Path | None = None
    save_recon: bool = True
    save_figures: bool = True

    def __post_init__(self):
        self.truth = np.asarray(self.truth, dtype=np.float64)
        methods = tuple(sorted(dict.fromkeys(self.methods)))
        if not methods:
            raise ValueError("method list must be nonempty")
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown} (choose from {METHODS})")
        self.methods = methods
        ratios = tuple(sorted(dict.fromkeys(float(r) for r in self.ratios)))
        if not ratios:
            raise ValueError("ratio grid must be nonempty")
        if any(not 0.0 < r <= 1.0 for r in ratios):
            raise ValueError("ratios must lie in (0, 1]")
        self.ratios = ratios
        if self.reps < 1:
            raise ValueError("repetitions must be at least 1")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


def _solve(method: str, o, mask: ObservationMask, alphabet: Alphabet | None,
           truth, hyper: dict) -> tuple[np.ndarray, ConvergenceTrace]:
    common = {k: hyper[k] for k in ("t_max", "eps") if k in hyper}
    weights = hyper.get("mode_weights")
    if method == "dalrtc":
        cfg = SolverConfig(
            lam=hyper.get("lam", 65.0),
            zeta=hyper.get("zeta", 0.5),
            alpha=hyper.get("alpha", 0.01),
            mode_weights=weights,
            round_output=hyper.get("round_output", False),
            **common,
        )
        return solvers.dalrtc(o, mask, alphabet or Alphabet.integer_range(0, 255),
                              cfg, truth=truth)
    if method == "silrtc":
        return solvers.silrtc(o, mask, mode_weights=weights,
                              penalties=hyper.get("penalties"),
                              truth=truth, **common)
    if method == "tmac":
        if "ranks" not in hyper or hyper["ranks"] is None:
            raise ValueError("tmac requires per-mode ranks")
        cfg = TMacConfig(ranks=hyper["ranks"], mode_weights=weights, **common)
        return solvers.tmac(o, mask, cfg, truth=truth)
    if method == "soft-impute":
        return solvers.soft_impute(o, mask, lam=hyper.get("lam", 1.0),
                                   accelerated=hyper.get("accelerated", False),
                                   truth=truth, **common)
    raise ValueError(f"unknown method {method!r}")


def run_completion(method: str, truth, mask: ObservationMask, *,
                   ratio: float | None = None, rep: int = 0, seed: int = 0,
                   alphabet: Alphabet | None = None,
                   hyper: dict | None = None
                   ) -> tuple[np.ndarray, ConvergenceTrace, NmseRow]:
    """Run one solver on one masked instance and score it.

    The solver sees only the observed entries of ``truth``; NMSE is
    computed on the full tensor.
    """
    truth = np.asarray(truth, dtype=np.float64)
    observed = mask_project(truth, mask, keep_observed=True)
    hyper = dict(hyper or {})
    tic = time.perf_counter()
    estimate, trace = _solve(method, observed, mask, alphabet, truth, hyper)
    ms = (time.perf_counter() - tic) * 1e3
    if ratio is None:
        ratio = mask.n_observed / mask.size
    row = NmseRow(method=method, ratio=float(ratio), rep=int(rep), seed=int(seed),
                  nmse=nmse(estimate, truth), iterations=trace.iterations, ms=ms)
    return estimate, trace, row


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_report_csv(rows, path) -> None:
    """Write report rows with the fixed column order and formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow([r.method, _fmt(r.ratio), r.rep, r.seed,
                             _fmt(r.nmse), r.iterations, f"{r.ms:.3f}"])


def write_trace_csv(trace: ConvergenceTrace, path) -> None:
    """Write one per-iteration trace (no timing columns)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace.records:
            writer.writerow([r.iteration, _fmt(r.rel_change), _fmt(r.objective),
                             "" if r.nmse is None else _fmt(r.nmse)])


def _cell_paths(out_dir: Path, method: str, ratio: float, rep: int):
    stem = f"{method}_r{ratio:g}_rep{rep}"
    return out_dir / "traces" / f"{stem}.csv", out_dir / "recon" / f"{stem}.png"


def run_sweep(plan: ExperimentPlan) -> SweepResult:
    """Execute every (method, ratio, repetition) cell of the plan.

    Cell failures are recorded and the sweep continues. With an output
    directory set, writes ``report.csv``, per-cell traces, reconstruction
    images for image-shaped truth, and an NMSE-versus-ratio figure.
    """
    result = SweepResult()
    out_dir = plan.out_dir
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "traces").mkdir(exist_ok=True)
        if plan.is_image and plan.save_recon:
            (out_dir / "recon").mkdir(exist_ok=True)

    for method in plan.methods:
        for ratio_index, ratio in enumerate(plan.ratios):
            for rep in range(plan.reps):
                seed = derive_seed(plan.base_seed, method, ratio_index, rep)
                mask = sample_mask(plan.truth.shape,
                                   MaskSpec(ratio, seed, plan.pixel_aligned))
                try:
                    estimate, trace, row = run_completion(
                        method, plan.truth, mask, ratio=ratio, rep=rep,
                        seed=seed, alphabet=plan.alphabet,
                        hyper=plan.hyper.get(method, {}))
                except (SolverNumericalError, np.linalg.LinAlgError) as exc:
                    result.failures.append(CellFailure(method, ratio, rep, seed,
                                                       str(exc), numerical=True))
                    continue
                except ValueError as exc:
                    result.failures.append(CellFailure(method, ratio, rep, seed,
                                                       str(exc), numerical=False))
                    continue
                result.rows.append(row)
                if out_dir is not None:
                    trace_path, recon_path = _cell_paths(out_dir, method, ratio, rep)
                    write_trace_csv(trace, trace_path)
                    if plan.is_image and plan.save_recon:
                        save_image(estimate, recon_path)

    if out_dir is not None:
        write_report_csv(result.rows, out_dir / "report.csv")
        if plan.save_figures and result.rows:
            from . import figures
            figures.save_nmse_vs_ratio(result.rows, out_dir / "nmse_vs_ratio.png")
    return result
