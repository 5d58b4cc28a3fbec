"""Scoring inferred poses against ground truth.

Pose estimates live on the circle and are only identified up to a global
offset and a possible reflection, so scoring starts by fitting those two
nuisance parameters.  A separate diagnostic, the fold score, measures
whether a two-to-one (V-shaped) pose map explains the estimates better
than any one-to-one map; a positive score is the signature failure mode
of volumes whose distinct poses share projections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import InsufficientDataError, InvalidArgumentError
from .geometry import TWO_PI, format_float
from .vae import VaeModel, encode_batch


def _wrap(a: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(a, dtype=np.float64) + math.pi, TWO_PI) - math.pi


def _circular_mean(a: np.ndarray) -> float:
    return float(np.arctan2(np.mean(np.sin(a)), np.mean(np.cos(a))))


@dataclass(frozen=True)
class PoseReport:
    """Alignment fit and error summary for a set of (true, estimated) poses.

    ``g`` is the reflection class (+1 direct, -1 reflected), ``c`` the
    fitted global offset.  ``samples`` holds one (theta_true, theta_est,
    residual) triple per input pair, residuals in [-pi, pi).
    """

    g: int
    c: float
    median_error: float
    mean_error: float
    fold_score: float
    samples: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if self.g not in (1, -1):
            raise InvalidArgumentError(f"reflection class must be +1 or -1, got {self.g}")
        for name, value in (("median", self.median_error), ("mean", self.mean_error)):
            if not 0.0 <= value <= math.pi:
                raise InvalidArgumentError(f"{name} error {value} outside [0, pi]")

    @property
    def true_angles(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def estimated_angles(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])


def infer_poses(model: VaeModel, dataset: Dataset) -> list[tuple[float, float]]:
    """Encode every sample; returns (theta_true, theta_est) pairs in order."""
    if dataset.width != model.width:
        raise InvalidArgumentError(
            f"dataset width {dataset.width} != model width {model.width}"
        )
    est = encode_batch(model, dataset.images).mu
    return [(float(t), float(e)) for t, e in zip(dataset.thetas, est)]


def _split_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(pairs), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidArgumentError("expected a sequence of (theta_true, theta_est) pairs")
    return arr[:, 0], arr[:, 1]


def align_poses(pairs) -> PoseReport:
    """Fit reflection and offset, then summarize circular errors.

    For each reflection class the offset is the circular mean of the
    estimate-minus-(possibly reflected)-truth differences; the class with
    the smaller median residual wins, ties going to the direct class.
    """
    true, est = _split_pairs(pairs)
    if true.size < 2:
        raise InsufficientDataError(f"need at least 2 pose pairs, got {true.size}")
    best = None
    for g in (1, -1):
        delta = _wrap(est - g * true)
        c = _circular_mean(delta)
        resid = _wrap(delta - c)
        median = float(np.median(np.abs(resid)))
        if best is None or median < best[2]:
            best = (g, c, median, float(np.mean(np.abs(resid))), resid)
    g, c, median, mean, resid = best
    score = fold_score(pairs) if true.size >= 8 else math.nan
    samples = tuple(
        (float(t), float(e), float(r)) for t, e, r in zip(true, est, resid)
    )
    return PoseReport(g, c, median, mean, score, samples)


# Slope candidates for the line fits inside fold_score.  The grid covers
# windings up to 3 and contains 0 and +-1, +-2 exactly.
_FOLD_SLOPES = np.linspace(-3.0, 3.0, 121)


def _best_grid_median(y: np.ndarray, regressors: np.ndarray) -> float:
    """Median circular residual of the best least-squares line per row.

    For each regressor row, slope and intercept are chosen by wrapped
    least squares (slope over a fixed grid, intercept as the circular
    mean of the leftovers); the row's quality is then the median absolute
    wrapped residual of that single fit.  Fitting by squared error keeps
    a mismatched model family from sacrificing half the samples to make
    its median look small.
    """
    best = math.inf
    for start in range(0, regressors.shape[0], 32):
        reg = regressors[start : start + 32]
        diff = y[None, None, :] - _FOLD_SLOPES[None, :, None] * reg[:, None, :]
        c = np.arctan2(
            np.mean(np.sin(diff), axis=2), np.mean(np.cos(diff), axis=2)
        )
        resid = _wrap(diff - c[:, :, None])
        fit = np.argmin(np.sum(resid * resid, axis=2), axis=1)
        rows = np.arange(resid.shape[0])
        best = min(
            best, float(np.min(np.median(np.abs(resid[rows, fit]), axis=1)))
        )
    return best


def fold_score(pairs, grid_size: int = 360) -> float:
    """Margin by which a folded pose map beats every one-to-one one.

    Both model families share one fold/reference axis swept over a grid:
    the one-to-one family regresses the centered estimates on the signed
    angular distance to the axis, the folded family on its absolute value
    (the fitted slope carries the reflection sign).  The score is the best
    one-to-one median residual minus the best folded one, so positive
    means the estimates collapse pose pairs symmetric about some axis.
    """
    true, est = _split_pairs(pairs)
    if true.size < 8:
        raise InsufficientDataError(f"need at least 8 pose pairs, got {true.size}")
    if grid_size < 4:
        raise InvalidArgumentError(f"fold axis grid must have >= 4 points, got {grid_size}")
    y = _wrap(est - _circular_mean(est))
    axes = TWO_PI * np.arange(grid_size) / grid_size
    signed = _wrap(true[None, :] - axes[:, None])
    return _best_grid_median(y, signed) - _best_grid_median(y, np.abs(signed))


def _ranks(a: np.ndarray) -> np.ndarray:
    return np.argsort(np.argsort(a, kind="stable"), kind="stable").astype(np.float64)


def alignment_spearman(report: PoseReport) -> float:
    """Rank correlation of true poses against aligned, unwrapped estimates.

    Estimates are mapped back into the truth's frame using the fitted
    reflection and offset, then unwrapped around the truth so the rank
    comparison is not disturbed by the 0/2pi seam.  Near +1 means the
    aligned estimates are monotone in the true pose.
    """
    true = report.true_angles
    est = report.estimated_angles
    if true.size < 2:
        raise InsufficientDataError("need at least 2 pose pairs")
    aligned = report.g * (est - report.c)
    unwrapped = true + _wrap(aligned - true)
    rt, ru = _ranks(true), _ranks(unwrapped)
    sdt, sdu = float(np.std(rt)), float(np.std(ru))
    if sdt == 0.0 or sdu == 0.0:
        return 0.0
    return float(np.mean((rt - rt.mean()) * (ru - ru.mean())) / (sdt * sdu))


def format_report(report: PoseReport) -> str:
    """Render the report as stable key=value text."""
    deg = 180.0 / math.pi
    rows = [
        ("sample_count", str(len(report.samples))),
        ("reflection", f"{report.g:+d}"),
        ("offset_rad", format_float(report.c)),
        ("median_error_rad", format_float(report.median_error)),
        ("median_error_deg", format_float(report.median_error * deg)),
        ("mean_error_rad", format_float(report.mean_error)),
        ("mean_error_deg", format_float(report.mean_error * deg)),
        ("fold_score", format_float(report.fold_score)),
        ("spearman", format_float(alignment_spearman(report))),
    ]
    return "\n".join(f"{k}={v}" for k, v in rows) + "\n"


def emit_plots(
    report: PoseReport, dataset: Dataset, out_stem, svg: bool = True
) -> list[Path]:
    """Write the latent-circle and true-vs-estimated tables, plus figures.

    Produces ``<stem>_latent.csv`` (cos/sin of each estimate with its true
    pose), ``<stem>_poses.csv`` (true, estimated, residual), and when
    ``svg`` is set an SVG rendering next to each table.  Output bytes are
    a pure function of the report.
    """
    if len(report.samples) != len(dataset.samples):
        raise InvalidArgumentError(
            f"report has {len(report.samples)} samples, dataset {len(dataset.samples)}"
        )
    stem = str(out_stem)
    written: list[Path] = []

    latent = Path(stem + "_latent.csv")
    with open(latent, "w", encoding="utf-8") as fh:
        fh.write("cos_est,sin_est,theta_true\n")
        for t, e, _ in report.samples:
            fh.write(
                f"{format_float(math.cos(e))},{format_float(math.sin(e))},"
                f"{format_float(t)}\n"
            )
    written.append(latent)

    poses = Path(stem + "_poses.csv")
    with open(poses, "w", encoding="utf-8") as fh:
        fh.write("theta_true,theta_est,residual\n")
        for t, e, r in report.samples:
            fh.write(f"{format_float(t)},{format_float(e)},{format_float(r)}\n")
    written.append(poses)

    if svg:
        from .figures import save_latent_circle, save_pose_scatter

        latent_svg = Path(stem + "_latent.svg")
        save_latent_circle(report, latent_svg)
        written.append(latent_svg)
        poses_svg = Path(stem + "_poses.svg")
        save_pose_scatter(report, poses_svg)
        written.append(poses_svg)
    return written
