"""End-to-end experiment driver: fit on a training window of a snapshot
series, reconstruct the training window, predict a later window, and export
tables (and optional heatmap frames) deterministically.

Index convention: snapshots are numbered 1..m.  A train range (a, b) fits on
the pairs (i, i+1) for i = a..b, i.e. uses snapshots a..b+1.  A predict
range (ps, pe) emits forecast states for snapshot indices ps..pe, anchored
at snapshot a (eigenvalue power k - a for snapshot k).  Relative error at
snapshot k is ||xhat_k - x_k||_2 / max(||x_k||_2, 1e-30).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forecast import eigen_residuals, reconstruct
from .io import FieldGrid, load_matrix, save_matrix, save_model, write_pgm
from .kernels import KernelSpec
from .koopman import SnapshotSet, fit
from .numerics import DEFAULT_POLICY, RegularizationPolicy

__all__ = ["RunConfig", "PipelineReport", "run_pipeline", "format_report"]

_ERROR_FLOOR = 1e-30


@dataclass(frozen=True)
class RunConfig:
    """Everything one experiment run needs.

    ``train`` is the 1-based inclusive range of pair indices (pair i joins
    snapshots i and i+1); ``predict`` an optional 1-based inclusive range of
    snapshot indices to forecast.  Ranges are validated against the dataset
    when the pipeline runs.
    """

    input_path: str
    out_dir: str
    kernel: KernelSpec
    train: tuple[int, int]
    predict: tuple[int, int] | None = None
    policy: RegularizationPolicy = DEFAULT_POLICY
    fmt: str = "csv"
    grid: FieldGrid | None = None

    def __post_init__(self) -> None:
        a, b = self.train
        if not (1 <= a <= b):
            raise ValueError(f"train range must satisfy 1 <= start <= end, got {self.train}")
        if b - a + 1 < 2:
            raise ValueError(f"train range must cover at least 2 pairs, got {self.train}")
        object.__setattr__(self, "train", (int(a), int(b)))
        if self.predict is not None:
            ps, pe = self.predict
            if not (1 <= ps <= pe):
                raise ValueError(
                    f"predict range must satisfy 1 <= start <= end, got {self.predict}"
                )
            if ps < a:
                raise ValueError(
                    f"predict range starts at snapshot {ps}, before the "
                    f"training anchor {a}; forecasts only run forward"
                )
            object.__setattr__(self, "predict", (int(ps), int(pe)))


@dataclass(frozen=True)
class PipelineReport:
    """Summary of one pipeline run; all output files live in ``out_dir``."""

    out_dir: str
    snapshot_count: int
    state_dim: int
    num_modes: int
    train: tuple[int, int]
    predict: tuple[int, int] | None
    max_recon_error: float
    mean_recon_error: float
    max_predict_error: float | None
    mean_predict_error: float | None
    imag_residual: float
    lambda_powers_clamped: bool
    files: tuple[str, ...]


def run_pipeline(config: RunConfig) -> PipelineReport:
    """Run the fit/reconstruct/predict protocol and write all outputs.

    Writes into ``config.out_dir`` (created if missing):

    - ``model.txt`` — the fitted model;
    - ``eigenvalues.csv`` — index, real, imag, abs, residual (residual
      measured on the training pairs);
    - ``modes.csv`` — mode, component, real, imag (long format);
    - ``reconstruction.csv`` — states for snapshots a..b+1 as columns;
    - ``prediction.csv`` — states for the predict range (when given);
    - ``errors.csv`` — snapshot, phase, relative_error;
    - ``recon_NNNN.pgm`` / ``pred_NNNN.pgm`` / ``truth_NNNN.pgm`` frames
      when a :class:`FieldGrid` is configured (NNNN = snapshot index).

    Identical config and input bytes produce byte-identical outputs.
    """
    x = load_matrix(config.input_path, config.fmt)
    m_total = x.shape[1]
    a, b = config.train
    if b + 1 > m_total:
        raise ValueError(
            f"train range {config.train} needs snapshot {b + 1}, "
            f"dataset has {m_total}"
        )
    if config.predict is not None and config.predict[1] > m_total:
        raise ValueError(
            f"predict range {config.predict} exceeds dataset size {m_total}"
        )
    if config.grid is not None and config.grid.size != x.shape[0]:
        raise ValueError(
            f"grid {config.grid.nx}x{config.grid.ny} does not match "
            f"state dimension {x.shape[0]}"
        )

    train_set = SnapshotSet(x=x[:, a - 1 : b + 1])
    model = fit(train_set, config.kernel, config.policy)
    residuals = eigen_residuals(model, train_set)

    last_needed = b + 1 if config.predict is None else max(b + 1, config.predict[1])
    fc = reconstruct(model, last_needed - a + 1)

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []

    save_model(out / "model.txt", model)
    files.append("model.txt")

    lam = model.lambdas
    rows = ["index,real,imag,abs,residual"]
    for j in range(lam.size):
        rows.append(
            f"{j + 1},%.17g,%.17g,%.17g,%.17g"
            % (lam[j].real, lam[j].imag, abs(lam[j]), residuals[j])
        )
    (out / "eigenvalues.csv").write_text("\n".join(rows) + "\n")
    files.append("eigenvalues.csv")

    rows = ["mode,component,real,imag"]
    for j in range(model.num_modes):
        for d in range(model.state_dim):
            v = model.modes[d, j]
            rows.append(f"{j + 1},{d + 1},%.17g,%.17g" % (v.real, v.imag))
    (out / "modes.csv").write_text("\n".join(rows) + "\n")
    files.append("modes.csv")

    recon_idx = np.arange(a, b + 2)  # snapshots the fit saw
    recon = fc.states[:, recon_idx - a]
    save_matrix(out / "reconstruction.csv", recon, "csv")
    files.append("reconstruction.csv")

    pred = None
    if config.predict is not None:
        ps, pe = config.predict
        pred_idx = np.arange(ps, pe + 1)
        pred = fc.states[:, pred_idx - a]
        save_matrix(out / "prediction.csv", pred, "csv")
        files.append("prediction.csv")

    def rel_err(xhat: np.ndarray, k: int) -> float:
        truth = x[:, k - 1]
        return float(np.linalg.norm(xhat - truth) / max(np.linalg.norm(truth), _ERROR_FLOOR))

    recon_errors = [rel_err(recon[:, i], k) for i, k in enumerate(recon_idx)]
    rows = ["snapshot,phase,relative_error"]
    for k, e in zip(recon_idx, recon_errors):
        rows.append(f"{k},reconstruction,%.17g" % e)
    pred_errors = None
    if pred is not None:
        pred_errors = [rel_err(pred[:, i], k) for i, k in enumerate(pred_idx)]
        for k, e in zip(pred_idx, pred_errors):
            rows.append(f"{k},prediction,%.17g" % e)
    (out / "errors.csv").write_text("\n".join(rows) + "\n")
    files.append("errors.csv")

    if config.grid is not None:
        for i, k in enumerate(recon_idx):
            name = f"recon_{k:04d}.pgm"
            write_pgm(out / name, config.grid.frame(recon[:, i]))
            files.append(name)
        if pred is not None:
            for i, k in enumerate(pred_idx):
                name = f"pred_{k:04d}.pgm"
                write_pgm(out / name, config.grid.frame(pred[:, i]))
                files.append(name)
        truth_idx = sorted(set(recon_idx) | (set(pred_idx) if pred is not None else set()))
        for k in truth_idx:
            name = f"truth_{k:04d}.pgm"
            write_pgm(out / name, config.grid.frame(x[:, k - 1]))
            files.append(name)

    return PipelineReport(
        out_dir=str(out),
        snapshot_count=m_total,
        state_dim=x.shape[0],
        num_modes=model.num_modes,
        train=config.train,
        predict=config.predict,
        max_recon_error=max(recon_errors),
        mean_recon_error=float(np.mean(recon_errors)),
        max_predict_error=max(pred_errors) if pred_errors else None,
        mean_predict_error=float(np.mean(pred_errors)) if pred_errors else None,
        imag_residual=fc.imag_residual,
        lambda_powers_clamped=fc.lambda_powers_clamped,
        files=tuple(files),
    )


def format_report(report: PipelineReport) -> str:
    """Human-readable multi-line summary of a pipeline run."""
    lines = [
        f"dataset: {report.snapshot_count} snapshots, state dimension {report.state_dim}",
        f"model: {report.num_modes} modes, trained on pairs {report.train[0]}-{report.train[1]}",
        f"reconstruction error (snapshots {report.train[0]}-{report.train[1] + 1}): "
        f"max {report.max_recon_error:.3e}, mean {report.mean_recon_error:.3e}",
    ]
    if report.predict is not None:
        lines.append(
            f"prediction error (snapshots {report.predict[0]}-{report.predict[1]}): "
            f"max {report.max_predict_error:.3e}, mean {report.mean_predict_error:.3e}"
        )
    if report.lambda_powers_clamped:
        lines.append("note: eigenvalue powers hit the overflow cap")
    lines.append(f"wrote {len(report.files)} files to {report.out_dir}")
    return "\n".join(lines)
