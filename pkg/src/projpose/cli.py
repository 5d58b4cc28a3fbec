"""Command-line entry point.

Subcommands cover the full workflow: construct a volume with unambiguous
poses, check an existing volume, generate a projection dataset, train the
pose-inference model, score it, and run the whole two-experiment
comparison in one go.  Every run is deterministic for a fixed seed and
echoes its resolved configuration, so outputs can be reproduced and
diffed byte for byte.

Exit codes: 0 success / compatible / passing, 1 negative domain outcome
(incompatible volume, pose inference above the error threshold, failed
construction), 2 usage or internal error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .compatibility import (
    CompatibilityVerdict,
    RasterSettings,
    check_injectivity_algebraic,
    check_star,
    random_compatible_volume,
)
from .dataset import generate_dataset, load_dataset, save_dataset
from .errors import ConstructionFailureError, IncompatibleVolumeError, ProjposeError
from .evaluate import align_poses, alignment_spearman, emit_plots, format_report, infer_poses
from .geometry import PointVolume, format_float, load_volume, save_volume
from .vae import TrainConfig, history_csv_lines, load_model, save_model, train
from .volumes import mirror_symmetric_triangle

_DEG = 180.0 / math.pi


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return ""
    return str(value)


def _config_lines(command: str, options: dict) -> list[str]:
    lines = [f"command={command}"]
    lines.extend(f"{key}={_fmt_value(options[key])}" for key in sorted(options))
    return lines


def _write_manifest(path, command: str, options: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(_config_lines(command, options)) + "\n")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _verdict_text(
    star: CompatibilityVerdict,
    algebraic: CompatibilityVerdict | None,
    witness_cap: int = 10,
) -> tuple[str, bool]:
    lines = []
    lines.append(f"coincidences={len(star.coincidences)}")
    for pair in star.coincidences[:witness_cap]:
        lines.append(
            f"coincidence theta1={format_float(pair.theta1)} "
            f"theta2={format_float(pair.theta2)} rms={format_float(pair.image_rms)}"
        )
    if len(star.coincidences) > witness_cap:
        lines.append(f"coincidences_omitted={len(star.coincidences) - witness_cap}")
    lines.append(f"satisfies_star={_fmt_value(bool(star.satisfies_star))}")
    lines.append(f"star_violations={len(star.star_violations)}")
    for v in star.star_violations[:witness_cap]:
        lines.append(
            f"violation theta1={format_float(v.pair.theta1)} "
            f"theta2={format_float(v.pair.theta2)} "
            f"theta3={format_float(v.theta3)} rms={format_float(v.image_rms)}"
        )
    if len(star.star_violations) > witness_cap:
        lines.append(f"violations_omitted={len(star.star_violations) - witness_cap}")
    lines.append(
        f"satisfies_injectivity_at_grid={_fmt_value(bool(star.satisfies_injectivity))}"
    )
    compatible = bool(star.satisfies_star)
    if algebraic is not None:
        lines.append(
            f"satisfies_injectivity_algebraic="
            f"{_fmt_value(bool(algebraic.satisfies_injectivity))}"
        )
        if algebraic.permutation_witness is not None:
            sigma, t1, t2 = algebraic.permutation_witness
            lines.append(
                "witness permutation=" + ",".join(str(i) for i in sigma)
                + f" theta1={format_float(t1)} theta2={format_float(t2)}"
            )
        compatible = bool(algebraic.satisfies_injectivity)
    lines.append(f"verdict={'compatible' if compatible else 'incompatible'}")
    return "\n".join(lines) + "\n", compatible


def _cmd_gen_volume(args) -> int:
    volume = random_compatible_volume(
        args.n, args.seed, args.radius, args.max_attempts
    )
    save_volume(volume, args.out)
    options = {
        "n": args.n,
        "seed": args.seed,
        "radius": float(args.radius),
        "max_attempts": args.max_attempts,
        "out": args.out,
    }
    _write_manifest(str(args.out) + ".manifest", "gen-volume", options)
    print(f"wrote {args.out}: {args.n} points, unambiguous poses")
    return 0


def _cmd_check_volume(args) -> int:
    volume = load_volume(args.volume)
    settings = RasterSettings(width=args.width, splat_sigma=args.splat_sigma)
    tol = args.tol if args.tol is not None else settings.default_tolerance()
    star = check_star(
        volume, grid_size=args.grid, probe_count=args.probes, settings=settings, tol=tol
    )
    algebraic = (
        check_injectivity_algebraic(volume, args.resolution) if args.algebraic else None
    )
    options = {
        "volume": args.volume,
        "points": len(volume),
        "grid": args.grid,
        "probes": args.probes,
        "width": args.width,
        "splat_sigma": float(args.splat_sigma),
        "tol": float(tol),
        "algebraic": bool(args.algebraic),
        "resolution": args.resolution,
    }
    text, compatible = _verdict_text(star, algebraic)
    print("\n".join(_config_lines("check-volume", options)))
    print(text, end="")
    return 0 if compatible else 1


def _cmd_gen_dataset(args) -> int:
    volume = load_volume(args.volume)
    dataset = generate_dataset(
        volume,
        count=args.count,
        width=args.width,
        splat_sigma=args.splat_sigma,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        val_fraction=args.val_fraction,
    )
    csv_path, meta_path = save_dataset(dataset, args.out)
    options = {
        "volume": args.volume,
        "count": args.count,
        "width": args.width,
        "splat_sigma": float(dataset.splat_sigma),
        "noise_sigma": float(args.noise_sigma),
        "seed": args.seed,
        "val_fraction": float(args.val_fraction),
        "out": args.out,
    }
    _write_manifest(str(args.out) + ".manifest", "gen-dataset", options)
    print(f"wrote {csv_path} and {meta_path}: {args.count} samples")
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        k=args.k,
        lr=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        restarts=args.restarts,
        seed=args.seed,
        kl_weight=args.kl_weight,
        spectral_init=args.spectral_init,
    )


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    config = _train_config(args)
    model, histories = train(dataset, config)
    save_model(model, args.out)
    csv = "\n".join(history_csv_lines(histories)) + "\n"
    summary = f"selected_restart={model.selected_restart}"
    if histories and model.selected_restart is not None:
        final = histories[model.selected_restart].final_val_loss
        summary += f" final_val_loss={format_float(final)}"
    if args.history is not None:
        _write_text(args.history, csv)
        print(summary)
    else:
        print(csv, end="")
        print(summary, file=sys.stderr)
    options = {
        "dataset": args.dataset,
        "k": args.k,
        "lr": float(args.lr),
        "batch_size": args.batch_size,
        "epochs": args.epochs,
        "restarts": args.restarts,
        "seed": args.seed,
        "kl_weight": float(args.kl_weight),
        "spectral_init": bool(args.spectral_init),
        "out": args.out,
        "history": args.history,
    }
    _write_manifest(str(args.out) + ".manifest", "train", options)
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.dataset)
    report = align_poses(infer_poses(model, dataset))
    text = format_report(report)
    _write_text(str(args.out) + ".txt", text)
    emit_plots(report, dataset, args.out)
    options = {
        "model": args.model,
        "dataset": args.dataset,
        "out": args.out,
        "max_error_deg": float(args.max_error_deg),
    }
    _write_manifest(str(args.out) + ".manifest", "eval", options)
    print(text, end="")
    passed = report.median_error * _DEG <= args.max_error_deg
    print(f"pose_inference={'pass' if passed else 'fail'}")
    return 0 if passed else 1


def _reproduce_experiment(
    name: str, volume: PointVolume, expect_compatible: bool, outdir: Path, args
) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    save_volume(volume, outdir / "volume.txt")
    star = check_star(volume)
    algebraic = check_injectivity_algebraic(volume)
    text, compatible = _verdict_text(star, algebraic)
    _write_text(outdir / "check.txt", text)
    if compatible != expect_compatible:
        raise IncompatibleVolumeError(
            f"{name} volume verdict is {compatible}, expected {expect_compatible}"
        )
    dataset = generate_dataset(
        volume,
        count=args.count,
        width=args.width,
        splat_sigma=None,
        noise_sigma=0.0,
        seed=args.seed,
        val_fraction=0.1,
    )
    save_dataset(dataset, outdir / "dataset")
    config = TrainConfig(
        k=args.k, epochs=args.epochs, restarts=args.restarts, seed=args.seed
    )
    model, histories = train(dataset, config)
    save_model(model, outdir / "model.ckpt")
    _write_text(outdir / "history.csv", "\n".join(history_csv_lines(histories)) + "\n")
    report = align_poses(infer_poses(model, dataset))
    _write_text(outdir / "report.txt", format_report(report))
    emit_plots(report, dataset, outdir / "fig3")
    return {
        "name": name,
        "points": len(volume),
        "star": bool(star.satisfies_star),
        "injective": bool(algebraic.satisfies_injectivity),
        "report": report,
    }


def _cmd_reproduce_fig3(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    options = {
        "seed": args.seed,
        "out": args.out,
        "n": args.n,
        "count": args.count,
        "width": args.width,
        "epochs": args.epochs,
        "restarts": args.restarts,
        "k": args.k,
    }
    _write_manifest(out / "manifest.txt", "reproduce-fig3", options)
    compatible_volume = random_compatible_volume(args.n, args.seed)
    results = [
        _reproduce_experiment(
            "compatible", compatible_volume, True, out / "compatible", args
        ),
        _reproduce_experiment(
            "mirrored", mirror_symmetric_triangle(), False, out / "mirrored", args
        ),
    ]
    lines = []
    for r in results:
        report = r["report"]
        lines.append(f"experiment={r['name']}")
        lines.append(f"volume_points={r['points']}")
        lines.append(f"satisfies_star={_fmt_value(r['star'])}")
        lines.append(f"satisfies_injectivity={_fmt_value(r['injective'])}")
        lines.append(f"reflection={report.g:+d}")
        lines.append(f"median_error_deg={format_float(report.median_error * _DEG)}")
        lines.append(f"mean_error_deg={format_float(report.mean_error * _DEG)}")
        lines.append(f"fold_score={format_float(report.fold_score)}")
        lines.append(f"spearman={format_float(alignment_spearman(report))}")
        lines.append("")
    a, b = (r["report"] for r in results)
    lines.append(
        "median_error_deg_by_experiment="
        f"compatible:{format_float(a.median_error * _DEG)} "
        f"mirrored:{format_float(b.median_error * _DEG)}"
    )
    lines.append(
        "fold_score_by_experiment="
        f"compatible:{format_float(a.fold_score)} "
        f"mirrored:{format_float(b.fold_score)}"
    )
    summary = "\n".join(lines) + "\n"
    _write_text(out / "summary.txt", summary)
    print(summary, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projpose",
        description="Projection compatibility checks and pose-inference experiments "
        "for planar point volumes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "gen-volume", help="construct a random volume with unambiguous poses"
    )
    p.add_argument("--n", type=int, default=3, help="number of point masses")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--radius", type=float, default=1.0, help="domain radius")
    p.add_argument("--max-attempts", type=int, default=64)
    p.add_argument("--out", required=True, help="output volume file")
    p.set_defaults(func=_cmd_gen_volume)

    p = sub.add_parser("check-volume", help="report pose-ambiguity verdicts for a volume")
    p.add_argument("--volume", required=True)
    p.add_argument("--grid", type=int, default=720, help="pose grid size")
    p.add_argument("--probes", type=int, default=12, help="probe rotations per pair")
    p.add_argument("--tol", type=float, default=None, help="coincidence tolerance")
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--splat-sigma", type=float, default=0.0)
    p.add_argument(
        "--algebraic",
        action="store_true",
        help="decide by the permutation sweep instead of the pose grid",
    )
    p.add_argument(
        "--resolution", type=int, default=4096, help="algebraic sweep resolution"
    )
    p.set_defaults(func=_cmd_check_volume)

    p = sub.add_parser("gen-dataset", help="render a (pose, image) dataset from a volume")
    p.add_argument("--volume", required=True)
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--width", type=int, default=64)
    p.add_argument(
        "--splat-sigma",
        type=float,
        default=None,
        help="render kernel width; default 0.05 times the domain radius",
    )
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output stem (.csv and .meta)")
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("train", help="fit the pose-inference model to a dataset")
    p.add_argument("--dataset", required=True, help="dataset stem")
    p.add_argument("--k", type=int, default=4, help="representation frequencies")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--kl-weight", type=float, default=1.0)
    p.add_argument(
        "--no-spectral-init",
        dest="spectral_init",
        action="store_false",
        help="skip the spectral ordering and warmup phases",
    )
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument(
        "--history", default=None, help="write loss history CSV here instead of stdout"
    )
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a trained model against a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True, help="dataset stem")
    p.add_argument("--out", required=True, help="report stem")
    p.add_argument("--max-error-deg", type=float, default=15.0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser(
        "reproduce-fig3",
        help="run the compatible and mirrored experiments side by side",
    )
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="fig3")
    p.add_argument("--n", type=int, default=3, help="points in the compatible volume")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(func=_cmd_reproduce_fig3)
    return parser


def run(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConstructionFailureError, IncompatibleVolumeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ProjposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(run())
