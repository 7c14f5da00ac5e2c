"""Experiment runner: detection sweeps, Monte Carlo classification, reports.

Everything is a pure function of (config, seed): corpus frames, splits, and
per-run randomness all derive from the master seed through fixed splitting
rules, so repeated runs produce byte-identical reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from uavrf import classify, detector, nca
from uavrf.features import FEATURE_NAMES, batch_extract
from uavrf.signals import ClassLabel, GeneratorConfig, SampledSignal, generate_frame, load_dataset
from uavrf.transient import StftConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = GeneratorConfig()
    dataset_path: Optional[str] = None
    per_class: int = 100
    snr_db: float = 25.0
    split_ratio: float = 0.8
    n_monte_carlo: int = 10
    classifiers: tuple = ("knn", "da", "svm")
    snr_grid: tuple = (10.0, 15.0, 20.0, 25.0)
    controller_count_grid: tuple = (2, 4, 6, 8, 10, 12, 14)
    grid_monte_carlo: int = 5
    nca_lambda: Optional[float] = None
    nca_kernel_width: float = 1.0
    nca_threshold_frac: float = 0.15
    nca_max_samples: int = 300
    stft: StftConfig = StftConfig(window="hann", window_len=1024, hop=1024, fft_size=1024)
    changepoint_statistic: str = "mean"
    detection_snr_grid: tuple = (0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0)
    detection_trials: int = 200
    detection_train_per_class: int = 5
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.split_ratio < 1:
            raise ConfigError("split_ratio must be in (0, 1)")
        if self.n_monte_carlo < 1 or self.grid_monte_carlo < 1:
            raise ConfigError("Monte Carlo run counts must be >= 1")
        if not self.snr_grid or not self.controller_count_grid:
            raise ConfigError("grids must be non-empty")
        if not self.detection_snr_grid:
            raise ConfigError("detection_snr_grid must be non-empty")
        if self.nca_max_samples < 4:
            raise ConfigError("nca_max_samples must be >= 4")
        unknown = set(self.classifiers) - set(classify.KINDS)
        if unknown:
            raise ConfigError(f"unknown classifier kinds: {sorted(unknown)}")

    def to_dict(self) -> dict:
        d = {
            "generator": self.generator.to_dict(),
            "dataset_path": self.dataset_path,
            "per_class": self.per_class,
            "snr_db": self.snr_db,
            "split_ratio": self.split_ratio,
            "n_monte_carlo": self.n_monte_carlo,
            "classifiers": list(self.classifiers),
            "snr_grid": list(self.snr_grid),
            "controller_count_grid": list(self.controller_count_grid),
            "grid_monte_carlo": self.grid_monte_carlo,
            "nca_lambda": self.nca_lambda,
            "nca_kernel_width": self.nca_kernel_width,
            "nca_threshold_frac": self.nca_threshold_frac,
            "nca_max_samples": self.nca_max_samples,
            "stft": {
                "window": self.stft.window,
                "window_len": self.stft.window_len,
                "hop": self.stft.hop,
                "fft_size": self.stft.fft_size,
            },
            "changepoint_statistic": self.changepoint_statistic,
            "detection_snr_grid": list(self.detection_snr_grid),
            "detection_trials": self.detection_trials,
            "detection_train_per_class": self.detection_train_per_class,
            "rng_seed": self.rng_seed,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "generator" in d:
            d["generator"] = GeneratorConfig.from_dict(d["generator"])
        if "stft" in d:
            d["stft"] = StftConfig(**d["stft"])
        for key in ("classifiers", "snr_grid", "controller_count_grid",
                    "detection_snr_grid"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        try:
            return cls.from_dict(doc)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from exc


def _frame_rng(master: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([master, *key])


def _snr_key(snr_db: float) -> int:
    return int(round(snr_db * 1000))


# ---------------------------------------------------------------------------
# Detection sweep


@dataclass
class DetectionSweepResult:
    snr_db: list
    accuracy: list  # overall over balanced UAV/noise trials
    uav_recall: list
    noise_recall: list

    def to_csv(self, path: str | Path) -> None:
        """Two-row layout: SNR header row plus detection accuracy row."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["snr_db", *[repr(float(s)) for s in self.snr_db]])
            writer.writerow(
                ["detection_accuracy_pct",
                 *[repr(float(100 * a)) for a in self.accuracy]]
            )
            writer.writerow(
                ["uav_recall_pct", *[repr(float(100 * a)) for a in self.uav_recall]]
            )
            writer.writerow(
                ["noise_recall_pct",
                 *[repr(float(100 * a)) for a in self.noise_recall]]
            )


def run_detection_sweep(cfg: ExperimentConfig) -> DetectionSweepResult:
    """Detector accuracy on balanced UAV/noise frames at each SNR.

    Models are retrained at each SNR on fresh frames (matched training);
    noise-class training frames are counted to match the UAV frames so the
    equal-prior decision rule is justified.
    """
    gen = cfg.generator
    accuracies, uav_recalls, noise_recalls = [], [], []
    for si, snr in enumerate(cfg.detection_snr_grid):
        rng = _frame_rng(cfg.rng_seed, 0xDE7, si, _snr_key(snr))
        uav_train = [
            generate_frame(gen, ClassLabel.uav(cid), snr, rng)
            for cid in range(1, gen.n_classes + 1)
            for _ in range(cfg.detection_train_per_class)
        ]
        noise_train = [
            generate_frame(gen, ClassLabel.noise(), snr, rng)
            for _ in range(len(uav_train))
        ]
        uav_model, noise_model = detector.train_detector(uav_train, noise_train)

        n_uav = cfg.detection_trials // 2
        n_noise = cfg.detection_trials - n_uav
        hits_uav = hits_noise = 0
        for t in range(n_uav):
            cid = 1 + t % gen.n_classes
            frame = generate_frame(gen, ClassLabel.uav(cid), snr, rng)
            hits_uav += detector.detect(frame, uav_model, noise_model).uav_present
        for _ in range(n_noise):
            frame = generate_frame(gen, ClassLabel.noise(), snr, rng)
            hits_noise += not detector.detect(frame, uav_model, noise_model).uav_present
        accuracies.append((hits_uav + hits_noise) / cfg.detection_trials)
        uav_recalls.append(hits_uav / n_uav)
        noise_recalls.append(hits_noise / n_noise)
    return DetectionSweepResult(
        snr_db=list(cfg.detection_snr_grid),
        accuracy=accuracies,
        uav_recall=uav_recalls,
        noise_recall=noise_recalls,
    )


# ---------------------------------------------------------------------------
# Classification experiment


def build_feature_corpus(
    cfg: ExperimentConfig, snr_db: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray]:
    """(features, labels) for the synthetic corpus at one SNR.

    If the config names a dataset directory, frames are loaded from disk
    instead (``snr_db`` is then ignored).
    """
    if cfg.dataset_path is not None:
        frames = [
            f for f in load_dataset(cfg.dataset_path)
            if f.label is not None and f.label.kind == "uav"
        ]
    else:
        snr = cfg.snr_db if snr_db is None else snr_db
        gen = cfg.generator
        frames = [
            generate_frame(
                gen,
                ClassLabel.uav(cid),
                snr,
                _frame_rng(cfg.rng_seed, 0xF0, cid, i, _snr_key(snr)),
            )
            for cid in range(1, gen.n_classes + 1)
            for i in range(cfg.per_class)
        ]
    result = batch_extract(frames, cfg.stft, cfg.changepoint_statistic)
    if result.failures:
        bad = [(i, type(e).__name__) for i, e in result.failures]
        raise RuntimeError(f"feature extraction failed for frames {bad}")
    return result.features, result.labels


def _run_seed(master: int, *key: int) -> int:
    return int(np.random.SeedSequence([master, *key]).generate_state(1)[0])


def _stratified_split(
    y: np.ndarray, ratio: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    train_idx, test_idx = [], []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        perm = rng.permutation(members)
        cut = int(round(ratio * members.size))
        cut = min(max(cut, 1), members.size - 1)
        train_idx.append(perm[:cut])
        test_idx.append(perm[cut:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def _stratified_subsample(
    y: np.ndarray, cap: int, rng: np.random.Generator
) -> np.ndarray:
    """Indices of an equal-per-class subsample with about ``cap`` elements."""
    classes = np.unique(y)
    quota = max(cap // classes.size, 2)
    keep = [
        rng.permutation(np.flatnonzero(y == c))[:quota] for c in classes
    ]
    return np.sort(np.concatenate(keep))


_ABLATION_SUBSETS = {
    "all": (0, 1, 2, 3),
    "kurtosis": (3,),
    "entropy": (2,),
    "variance": (1,),
    "skewness": (0,),
    "kurtosis+entropy": (2, 3),
    "kurtosis+entropy+variance": (1, 2, 3),
}


def run_once(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ExperimentConfig,
    run_seed: int,
    with_ablation: bool = False,
    with_confusion: bool = False,
) -> dict:
    """One Monte Carlo repetition: split, NCA, train, evaluate."""
    rng = np.random.default_rng(run_seed)
    train_idx, test_idx = _stratified_split(y, cfg.split_ratio, rng)
    X_train, y_train = X[train_idx], y[train_idx]
    X_test, y_test = X[test_idx], y[test_idx]

    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd[sd == 0] = 1.0
    # the LOO objective costs O(n^2); an equal-per-class subsample keeps the
    # weight fit fast on large corpora without biasing any class
    X_nca, y_nca = X_train, y_train
    if y_train.size > cfg.nca_max_samples:
        sub = _stratified_subsample(y_train, cfg.nca_max_samples, rng)
        X_nca, y_nca = X_train[sub], y_train[sub]
    model = nca.nca_fit(
        (X_nca - mu) / sd,
        y_nca,
        lam=cfg.nca_lambda,
        kernel_width=cfg.nca_kernel_width,
    )
    selected = nca.select_features(model, cfg.nca_threshold_frac)

    result = {
        "seed": run_seed,
        "n_train": int(train_idx.size),
        "n_test": int(test_idx.size),
        "nca_weights": [float(w) for w in model.weights],
        "selected_features": [int(i) for i in selected],
        "accuracy": {},
        "hyperparams": {},
    }
    confusions = {}
    for kind in cfg.classifiers:
        clf = classify.train(
            kind, X_train[:, selected], y_train, feature_indices=selected
        )
        conf = classify.confusion_matrix(clf, X_test[:, selected], y_test)
        result["accuracy"][kind] = conf.accuracy
        result["hyperparams"][kind] = clf.hyperparams
        if with_confusion:
            confusions[kind] = conf
    if with_confusion:
        result["confusion"] = confusions

    if with_ablation:
        rejected = tuple(i for i in range(4) if i not in set(int(s) for s in selected))
        subsets = dict(_ABLATION_SUBSETS)
        subsets["selected"] = tuple(int(i) for i in selected)
        if rejected:
            subsets["rejected"] = rejected
        ablation = {}
        for name, cols in subsets.items():
            cols = list(cols)
            per_kind = {}
            for kind in cfg.classifiers:
                # reuse the hyperparameters tuned on the selected features so
                # the ablation isolates the effect of the feature subset
                clf = classify.train(
                    kind, X_train[:, cols], y_train,
                    hyperparams=result["hyperparams"][kind],
                )
                pred = classify.predict_batch(clf, X_test[:, cols])
                per_kind[kind] = float(np.mean(pred == y_test))
            ablation[name] = per_kind
        result["ablation"] = ablation
    return result


def _mc_accuracy(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ExperimentConfig,
    n_runs: int,
    seed_tag: Sequence[int],
) -> dict:
    """Mean accuracy per classifier over n_runs Monte Carlo repetitions."""
    sums = {kind: 0.0 for kind in cfg.classifiers}
    for r in range(n_runs):
        res = run_once(X, y, cfg, _run_seed(cfg.rng_seed, *seed_tag, r))
        for kind in cfg.classifiers:
            sums[kind] += res["accuracy"][kind]
    return {kind: sums[kind] / n_runs for kind in cfg.classifiers}


@dataclass
class EvaluationReport:
    config: dict
    run_seeds: list
    runs: list  # per-run dicts (accuracy, weights, selected features, ...)
    mean_accuracy: dict  # classifier -> mean over runs
    confusion: dict  # classifier -> {"classes": [...], "matrix": [[...]]} summed
    nca_mean_weights: list
    feature_names: list
    ablation: dict  # subset name -> classifier -> mean accuracy
    snr_curve: dict  # {"snr_db": [...], "accuracy": {kind: [...]}}
    count_curve: dict  # {"n_controllers": [...], "accuracy": {kind: [...]}}

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "config": self.config,
            "config_hash": _config_hash(self.config),
            "run_seeds": self.run_seeds,
            "runs": self.runs,
            "mean_accuracy": self.mean_accuracy,
            "confusion": self.confusion,
            "nca_mean_weights": self.nca_mean_weights,
            "feature_names": self.feature_names,
            "ablation": self.ablation,
            "snr_curve": self.snr_curve,
            "count_curve": self.count_curve,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _config_hash(config: dict) -> str:
    import hashlib

    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def run_classification_experiment(cfg: ExperimentConfig) -> EvaluationReport:
    """Full protocol: Monte Carlo runs, ablation, SNR and count curves."""
    X, y = build_feature_corpus(cfg)
    if np.unique(y).size < 2:
        raise ConfigError("classification corpus needs at least 2 classes")

    run_seeds = [_run_seed(cfg.rng_seed, 1, r) for r in range(cfg.n_monte_carlo)]
    runs = []
    conf_sum: dict = {}
    for r, seed in enumerate(run_seeds):
        res = run_once(X, y, cfg, seed, with_ablation=True, with_confusion=True)
        for kind, conf in res.pop("confusion").items():
            if kind not in conf_sum:
                conf_sum[kind] = {
                    "classes": [int(c) for c in conf.classes],
                    "matrix": np.zeros_like(conf.matrix),
                }
            conf_sum[kind]["matrix"] = conf_sum[kind]["matrix"] + conf.matrix
        runs.append(res)

    mean_accuracy = {
        kind: float(np.mean([r["accuracy"][kind] for r in runs]))
        for kind in cfg.classifiers
    }
    nca_mean = np.mean([r["nca_weights"] for r in runs], axis=0)
    subset_names = sorted({name for r in runs for name in r["ablation"]})
    ablation = {
        name: {
            kind: float(
                np.mean([r["ablation"][name][kind] for r in runs if name in r["ablation"]])
            )
            for kind in cfg.classifiers
        }
        for name in subset_names
    }
    confusion = {
        kind: {
            "classes": entry["classes"],
            "matrix": [[int(v) for v in row] for row in entry["matrix"]],
        }
        for kind, entry in conf_sum.items()
    }

    # accuracy vs SNR (synthetic corpora only; a fixed dataset has one SNR)
    snr_curve = {"snr_db": [], "accuracy": {kind: [] for kind in cfg.classifiers}}
    if cfg.dataset_path is None:
        for si, snr in enumerate(cfg.snr_grid):
            if snr == cfg.snr_db:
                acc = mean_accuracy
            else:
                Xs, ys = build_feature_corpus(cfg, snr_db=snr)
                acc = _mc_accuracy(Xs, ys, cfg, cfg.grid_monte_carlo, (2, si))
            snr_curve["snr_db"].append(float(snr))
            for kind in cfg.classifiers:
                snr_curve["accuracy"][kind].append(acc[kind])

    # accuracy vs number of controllers, on the main-SNR corpus
    count_curve = {
        "n_controllers": [],
        "accuracy": {kind: [] for kind in cfg.classifiers},
    }
    for mi, m in enumerate(cfg.controller_count_grid):
        mask = y <= m
        if np.unique(y[mask]).size < 2:
            raise ConfigError(f"controller count {m} leaves fewer than 2 classes")
        acc = _mc_accuracy(X[mask], y[mask], cfg, cfg.grid_monte_carlo, (3, mi))
        count_curve["n_controllers"].append(int(m))
        for kind in cfg.classifiers:
            count_curve["accuracy"][kind].append(acc[kind])

    return EvaluationReport(
        config=cfg.to_dict(),
        run_seeds=run_seeds,
        runs=runs,
        mean_accuracy=mean_accuracy,
        confusion=confusion,
        nca_mean_weights=[float(w) for w in nca_mean],
        feature_names=list(FEATURE_NAMES),
        ablation=ablation,
        snr_curve=snr_curve,
        count_curve=count_curve,
    )


# ---------------------------------------------------------------------------
# Report files


def write_report(report: EvaluationReport, out_dir: str | Path) -> None:
    """report.json plus delimited tables for external tooling."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())

    for kind, entry in report.confusion.items():
        with open(out / f"confusion_{kind}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["predicted\\target", *entry["classes"]])
            for c, row in zip(entry["classes"], entry["matrix"]):
                writer.writerow([c, *row])

    with open(out / "nca_weights.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "weight"])
        for name, weight in zip(report.feature_names, report.nca_mean_weights):
            writer.writerow([name, repr(float(weight))])

    with open(out / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        kinds = list(report.mean_accuracy)
        writer.writerow(["feature_subset", *kinds])
        for name in report.ablation:
            writer.writerow(
                [name, *[repr(float(report.ablation[name][k])) for k in kinds]]
            )

    if report.snr_curve["snr_db"]:
        with open(out / "accuracy_vs_snr.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            kinds = list(report.snr_curve["accuracy"])
            writer.writerow(["snr_db", *kinds])
            for i, snr in enumerate(report.snr_curve["snr_db"]):
                writer.writerow(
                    [repr(float(snr)),
                     *[repr(float(report.snr_curve["accuracy"][k][i])) for k in kinds]]
                )

    with open(out / "accuracy_vs_count.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        kinds = list(report.count_curve["accuracy"])
        writer.writerow(["n_controllers", *kinds])
        for i, m in enumerate(report.count_curve["n_controllers"]):
            writer.writerow(
                [m, *[repr(float(report.count_curve["accuracy"][k][i])) for k in kinds]]
            )
