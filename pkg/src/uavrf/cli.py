"""Command-line interface.

Subcommands cover the whole pipeline: dataset generation, presence
detection, feature extraction, NCA weighting, classifier training, the full
evaluation protocol, the detection SNR sweep, and report rendering.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from uavrf import classify, detector, harness, nca, report as report_mod
from uavrf.features import (
    FEATURE_NAMES,
    batch_extract,
    load_features_csv,
    save_features_csv,
)
from uavrf.signals import (
    ClassLabel,
    DatasetError,
    GeneratorConfig,
    generate_frame,
    load_dataset,
    save_dataset,
)
from uavrf.transient import StftConfig

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _cmd_generate(args) -> int:
    cfg = GeneratorConfig(
        n_classes=args.classes,
        frame_len=args.frame_len,
        burst_duty=args.burst_duty,
        rng_seed=args.seed,
    )
    frames = []
    for cid in range(1, cfg.n_classes + 1):
        for i in range(args.per_class):
            rng = np.random.default_rng([cfg.rng_seed, 0xF0, cid, i,
                                         int(round(args.snr * 1000))])
            frames.append(generate_frame(cfg, ClassLabel.uav(cid), args.snr, rng))
    n_noise = args.noise_frames if args.noise_frames is not None else args.per_class
    for i in range(n_noise):
        rng = np.random.default_rng([cfg.rng_seed, 0xA0, i])
        frames.append(generate_frame(cfg, ClassLabel.noise(), args.snr, rng))
    manifest = save_dataset(frames, args.out, config=cfg, seed=args.seed)
    print(f"wrote {len(frames)} frames to {args.out} "
          f"({len(manifest['class_counts'])} classes)")
    return EXIT_OK


def _load_dataset_or_die(path: str):
    if not Path(path).exists():
        raise CliError(f"dataset not found: {path}")
    try:
        return load_dataset(path)
    except DatasetError as exc:
        raise CliError(f"cannot load dataset {path}: {exc}") from exc


def _cmd_detect(args) -> int:
    if args.model:
        uav_model, noise_model = detector.load_models(args.model)
    elif args.dataset:
        frames = _load_dataset_or_die(args.dataset)
        uav_frames = [f for f in frames if f.label and f.label.kind == "uav"]
        noise_frames = [f for f in frames if f.label and f.label.kind == "noise"]
        if not uav_frames or not noise_frames:
            raise CliError("training dataset must contain uav and noise frames")
        uav_model, noise_model = detector.train_detector(uav_frames, noise_frames)
        if args.model_out:
            detector.save_models(uav_model, noise_model, args.model_out)
    else:
        raise CliError("detect requires --model or --dataset")

    exit_code = EXIT_OK
    for path in args.inputs:
        frames = _load_dataset_or_die(path) if Path(path).is_dir() else None
        if frames is None:
            from uavrf.signals import _frame_from_bytes  # single-frame record

            try:
                frames = [_frame_from_bytes(Path(path).read_bytes())]
            except (OSError, DatasetError) as exc:
                raise CliError(f"cannot read frame {path}: {exc}") from exc
        for i, frame in enumerate(frames):
            res = detector.detect(frame, uav_model, noise_model)
            print(f"{path}[{i}]: {res.kind} "
                  f"(ll_uav={res.ll_uav:.3f}, ll_noise={res.ll_noise:.3f})")
    return exit_code


def _stft_from_args(args) -> StftConfig:
    return StftConfig(
        window=args.window,
        window_len=args.window_len,
        hop=args.hop,
        fft_size=args.fft_size,
    )


def _cmd_features(args) -> int:
    frames = _load_dataset_or_die(args.dataset)
    result = batch_extract(frames, _stft_from_args(args))
    save_features_csv(result, args.out)
    print(f"wrote {result.features.shape[0]} feature rows to {args.out}")
    for index, exc in result.failures:
        print(f"skipped frame {index}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
    if result.features.shape[0] == 0:
        raise CliError("no frame yielded a usable transient")
    return EXIT_OK


def _cmd_nca(args) -> int:
    X, y = load_features_csv(args.features)
    if X.shape[0] == 0:
        raise CliError(f"no feature rows in {args.features}")
    mu, sd = X.mean(axis=0), X.std(axis=0)
    sd[sd == 0] = 1.0
    model = nca.nca_fit(
        (X - mu) / sd, y, lam=args.reg, kernel_width=args.kernel_width
    )
    selected = nca.select_features(model, args.threshold)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "weight", "selected"])
        for i, name in enumerate(FEATURE_NAMES):
            writer.writerow([name, repr(float(model.weights[i])),
                             int(i in selected)])
    ranked = sorted(zip(model.weights, FEATURE_NAMES), reverse=True)
    print("feature ranking: " + ", ".join(f"{n}={w:.4f}" for w, n in ranked))
    return EXIT_OK


def _cmd_train(args) -> int:
    X, y = load_features_csv(args.features)
    cols = list(range(X.shape[1]))
    if args.weights:
        with open(args.weights, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        cols = [i for i, row in enumerate(rows) if int(row[2])]
        if not cols:
            raise CliError(f"no selected features in {args.weights}")
    clf = classify.train(args.kind, X[:, cols], y, feature_indices=cols)
    Path(args.out).write_text(classify.classifier_to_json(clf))
    conf = classify.confusion_matrix(clf, X[:, cols], y)
    print(f"trained {args.kind} on {X.shape[0]} rows "
          f"(training accuracy {conf.accuracy:.3f}); model -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = harness.ExperimentConfig.from_json_file(args.config)
    if cfg.dataset_path is not None and not Path(cfg.dataset_path).exists():
        raise CliError(f"dataset not found: {cfg.dataset_path}")
    report = harness.run_classification_experiment(cfg)
    harness.write_report(report, args.out)
    print(f"report written to {args.out}")
    for kind, acc in report.mean_accuracy.items():
        print(f"  {kind}: mean accuracy {acc:.4f}")
    return EXIT_OK


def _cmd_sweep_snr(args) -> int:
    cfg = harness.ExperimentConfig.from_json_file(args.config)
    sweep = harness.run_detection_sweep(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sweep.to_csv(out / "detection_vs_snr.csv")
    print(f"detection sweep written to {out / 'detection_vs_snr.csv'}")
    for snr, acc in zip(sweep.snr_db, sweep.accuracy):
        print(f"  {snr:5.1f} dB: {100 * acc:5.1f}%")
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        written = report_mod.render_report(args.input, args.out)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from exc
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavrf",
        description="Micro-UAV controller detection and RF-fingerprint "
        "classification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("--classes", type=int, default=14)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--noise-frames", type=int, default=None,
                   help="noise frame count (default: per-class)")
    p.add_argument("--snr", type=float, default=25.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frame-len", type=int, default=2**16)
    p.add_argument("--burst-duty", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("detect", help="UAV-presence decision per frame")
    p.add_argument("--dataset", help="labeled training dataset directory")
    p.add_argument("--model", help="previously saved detector models (JSON)")
    p.add_argument("--model-out", help="save trained models here")
    p.add_argument("inputs", nargs="+", help="frame files or dataset dirs")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("features", help="extract fingerprint features to CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", default="hann")
    p.add_argument("--window-len", type=int, default=1024)
    p.add_argument("--hop", type=int, default=1024)
    p.add_argument("--fft-size", type=int, default=1024)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("nca", help="fit NCA feature weights from features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reg", type=float, default=None,
                   help="regularization strength (default 1/N)")
    p.add_argument("--kernel-width", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=0.15)
    p.set_defaults(func=_cmd_nca)

    p = sub.add_parser("train", help="train a classifier from features CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=classify.KINDS, default="knn")
    p.add_argument("--weights", help="NCA weights CSV for feature selection")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="full Monte Carlo evaluation protocol")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep-snr", help="detection accuracy vs SNR table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep_snr)

    p = sub.add_parser("report", help="render figures from report artifacts")
    p.add_argument("--input", required=True, help="directory with report files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except harness.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
