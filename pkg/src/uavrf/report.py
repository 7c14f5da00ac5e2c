"""Render evaluation reports as matplotlib figures next to the CSV tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_MARKERS = {"knn": "o", "da": "s", "svm": "^"}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_detection_sweep(sweep_csv: Path, out_path: Path) -> None:
    with open(sweep_csv, newline="") as fh:
        rows = {row[0]: [float(v) for v in row[1:]] for row in csv.reader(fh)}
    snr = rows["snr_db"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(snr, rows["detection_accuracy_pct"], "o-", label="overall")
    if "uav_recall_pct" in rows:
        ax.plot(snr, rows["uav_recall_pct"], "s--", label="UAV recall")
    if "noise_recall_pct" in rows:
        ax.plot(snr, rows["noise_recall_pct"], "^--", label="noise recall")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Detection accuracy (%)")
    ax.set_ylim(0, 105)
    ax.grid(True, alpha=0.3)
    ax.legend()
    _save(fig, out_path)


def plot_accuracy_curves(report: dict, out_dir: Path) -> list[Path]:
    written = []
    snr_curve = report.get("snr_curve", {})
    if snr_curve.get("snr_db"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for kind, acc in snr_curve["accuracy"].items():
            ax.plot(snr_curve["snr_db"], 100 * np.asarray(acc),
                    marker=_MARKERS.get(kind, "o"), label=kind.upper())
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("Classification accuracy (%)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = out_dir / "accuracy_vs_snr.png"
        _save(fig, path)
        written.append(path)

    count_curve = report.get("count_curve", {})
    if count_curve.get("n_controllers"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for kind, acc in count_curve["accuracy"].items():
            ax.plot(count_curve["n_controllers"], 100 * np.asarray(acc),
                    marker=_MARKERS.get(kind, "o"), label=kind.upper())
        ax.set_xlabel("Number of controllers")
        ax.set_ylabel("Classification accuracy (%)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = out_dir / "accuracy_vs_count.png"
        _save(fig, path)
        written.append(path)
    return written


def plot_nca_weights(report: dict, out_path: Path) -> None:
    names = report["feature_names"]
    weights = report["nca_mean_weights"]
    order = np.argsort(weights)[::-1]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(range(len(names)), [weights[i] for i in order], color="#3465a4")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels([names[i] for i in order], rotation=20)
    ax.set_ylabel("NCA weight")
    _save(fig, out_path)


def plot_confusion(report: dict, kind: str, out_path: Path) -> None:
    entry = report["confusion"][kind]
    matrix = np.asarray(entry["matrix"], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xlabel("Target class")
    ax.set_ylabel("Predicted class")
    ax.set_xticks(range(len(entry["classes"])))
    ax.set_xticklabels(entry["classes"])
    ax.set_yticks(range(len(entry["classes"])))
    ax.set_yticklabels(entry["classes"])
    fig.colorbar(im, ax=ax, label="count")
    _save(fig, out_path)


def plot_ablation(report: dict, out_path: Path) -> None:
    names = list(report["ablation"])
    kinds = list(report["mean_accuracy"])
    x = np.arange(len(names))
    width = 0.8 / max(len(kinds), 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    for i, kind in enumerate(kinds):
        acc = [100 * report["ablation"][n][kind] for n in names]
        ax.bar(x + i * width, acc, width, label=kind.upper())
    ax.set_xticks(x + width * (len(kinds) - 1) / 2)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("Accuracy (%)")
    ax.legend()
    _save(fig, out_path)


def render_report(report_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render every figure supported by the artifacts found in report_dir."""
    report_dir = Path(report_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    report_json = report_dir / "report.json"
    if report_json.exists():
        report = json.loads(report_json.read_text())
        written += plot_accuracy_curves(report, out)
        path = out / "nca_weights.png"
        plot_nca_weights(report, path)
        written.append(path)
        for kind in report["confusion"]:
            path = out / f"confusion_{kind}.png"
            plot_confusion(report, kind, path)
            written.append(path)
        if report.get("ablation"):
            path = out / "ablation.png"
            plot_ablation(report, path)
            written.append(path)

    sweep_csv = report_dir / "detection_vs_snr.csv"
    if sweep_csv.exists():
        path = out / "detection_vs_snr.png"
        plot_detection_sweep(sweep_csv, path)
        written.append(path)

    if not written:
        raise FileNotFoundError(
            f"no report.json or detection_vs_snr.csv found in {report_dir}"
        )
    return written
