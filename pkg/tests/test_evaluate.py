"""Alignment, fold detection, and report output on synthetic estimators."""
import math

import numpy as np
import pytest

from projpose import (
    InsufficientDataError,
    InvalidArgumentError,
    PoseReport,
    align_poses,
    alignment_spearman,
    emit_plots,
    fold_score,
    format_report,
    generate_dataset,
)
from projpose.evaluate import _wrap
from projpose.volumes import equilateral_triangle

rng = np.random.default_rng(42)
TRUE = rng.uniform(0.0, 2.0 * math.pi, 400)


def pairs_from(est):
    return list(zip(TRUE.tolist(), np.mod(est, 2.0 * math.pi).tolist()))


def test_align_direct_with_offset():
    report = align_poses(pairs_from(TRUE + 0.8))
    assert report.g == 1
    assert report.c == pytest.approx(0.8, abs=1e-9)
    assert report.median_error < 1e-9
    assert report.mean_error < 1e-9
    assert alignment_spearman(report) == pytest.approx(1.0)


def test_align_reflected():
    report = align_poses(pairs_from(-TRUE + 0.3))
    assert report.g == -1
    assert report.c == pytest.approx(0.3, abs=1e-9)
    assert report.median_error < 1e-9
    # reflection is folded into the alignment, so the rank correlation
    # of the aligned estimates is still +1
    assert alignment_spearman(report) == pytest.approx(1.0)


def test_align_small_noise():
    est = TRUE - 1.1 + rng.normal(0.0, 0.05, TRUE.size)
    report = align_poses(pairs_from(est))
    assert report.g == 1
    assert circ_close(report.c, -1.1, 0.02)
    assert 0.01 < report.median_error < 0.1
    assert alignment_spearman(report) > 0.98


def circ_close(a, b, tol):
    return abs(float(_wrap(np.array([a - b]))[0])) < tol


def test_align_requires_two_pairs():
    with pytest.raises(InsufficientDataError):
        align_poses([(0.0, 0.0)])


def test_align_rejects_bad_shape():
    with pytest.raises(InvalidArgumentError):
        align_poses([(1.0, 2.0, 3.0)])


def test_fold_score_constant_estimator_is_zero():
    # a constant estimate is explained perfectly by both model families
    score = fold_score(pairs_from(np.full(TRUE.size, 1.234)))
    assert score == pytest.approx(0.0, abs=1e-12)


def test_fold_score_positive_on_v_shape():
    est = np.abs(_wrap(TRUE - 1.0)) - 0.5
    assert fold_score(pairs_from(est)) > 0.1


def test_fold_score_negative_on_clean_map():
    assert fold_score(pairs_from(TRUE + 0.7)) < -0.1
    assert fold_score(pairs_from(-TRUE + 0.2)) < -0.1


def test_fold_score_handles_double_winding():
    # slope-2 maps are still one-to-one in the wrapped residual sense
    assert fold_score(pairs_from(2.0 * TRUE + 0.1)) < -0.05


def test_fold_score_positive_on_folded_double_slope():
    est = 2.0 * np.abs(_wrap(TRUE - 2.0)) + 0.4
    assert fold_score(pairs_from(est)) > 0.1


def test_fold_score_needs_eight_pairs():
    with pytest.raises(InsufficientDataError):
        fold_score(pairs_from(TRUE)[:7])


def test_align_reports_nan_fold_when_few_pairs():
    report = align_poses(pairs_from(TRUE + 0.1)[:5])
    assert math.isnan(report.fold_score)


def test_report_validation():
    with pytest.raises(InvalidArgumentError):
        PoseReport(0, 0.0, 0.1, 0.1, 0.0, ((0.0, 0.0, 0.0),) * 2)
    with pytest.raises(InvalidArgumentError):
        PoseReport(1, 0.0, 4.0, 0.1, 0.0, ((0.0, 0.0, 0.0),) * 2)


def test_spearman_on_noisy_monotone():
    est = TRUE + rng.normal(0.0, 0.2, TRUE.size)
    report = align_poses(pairs_from(est))
    assert alignment_spearman(report) > 0.9


def test_format_report_keys():
    report = align_poses(pairs_from(TRUE + 0.5))
    text = format_report(report)
    for key in (
        "sample_count=400",
        "reflection=+1",
        "offset_rad=",
        "median_error_deg=",
        "fold_score=",
        "spearman=",
    ):
        assert key in text
    assert text.endswith("\n")


# ---------------------------------------------------------------------------
# report artifacts


@pytest.fixture(scope="module")
def tiny_run():
    ds = generate_dataset(equilateral_triangle(), 12, width=8, seed=9)
    est = np.mod(ds.thetas + 0.3, 2.0 * math.pi)
    report = align_poses(list(zip(ds.thetas.tolist(), est.tolist())))
    return report, ds


def test_emit_plots_writes_tables_and_figures(tmp_path, tiny_run):
    report, ds = tiny_run
    written = emit_plots(report, ds, tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == ["out_latent.csv", "out_latent.svg", "out_poses.csv", "out_poses.svg"]
    latent = (tmp_path / "out_latent.csv").read_text().splitlines()
    assert latent[0] == "cos_est,sin_est,theta_true"
    assert len(latent) == 13
    poses = (tmp_path / "out_poses.csv").read_text().splitlines()
    assert poses[0] == "theta_true,theta_est,residual"
    assert len(poses) == 13
    for p in written:
        assert p.stat().st_size > 0


def test_emit_plots_deterministic(tmp_path, tiny_run):
    report, ds = tiny_run
    first = emit_plots(report, ds, tmp_path / "a")
    second = emit_plots(report, ds, tmp_path / "b")
    for fa, fb in zip(first, second):
        assert fa.read_bytes() == fb.read_bytes()


def test_emit_plots_checks_sample_count(tmp_path, tiny_run):
    report, _ = tiny_run
    other = generate_dataset(equilateral_triangle(), 5, width=8, seed=1)
    with pytest.raises(InvalidArgumentError):
        emit_plots(report, other, tmp_path / "bad")
