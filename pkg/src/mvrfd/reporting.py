"""Report files: delimited outputs plus rendered figures.

Three CSVs cover the benchmark outcome (raw accuracies, per-dataset
summaries, pairwise sign tests) and a prediction dump covers per-instance
audit. The same data is rendered to PNG: a win-count chart per baseline
with the critical-value lines drawn in, and a mean-accuracy overview.
Raw accuracy values are written with repr so identical runs emit
byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evaluation import EvaluationReport, ProtocolRun
from .pipelines import MethodId


def write_raw_accuracies(report: EvaluationReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dataset", "method", "repetition", "accuracy"])
        for dataset in report.dataset_names:
            table = report.accuracies[dataset]
            for m, method in enumerate(report.methods):
                for repetition in range(table.shape[0]):
                    writer.writerow(
                        [dataset, method.value, repetition, repr(float(table[repetition, m]))]
                    )


def write_summary(report: EvaluationReport, path: str | Path) -> None:
    """Summary table in the fixed column order dataset, method, mean_pct,
    std_pct, avg_rank (percentages shown with two decimals)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dataset", "method", "mean_pct", "std_pct", "avg_rank"])
        for d, dataset in enumerate(report.dataset_names):
            for m, method in enumerate(report.methods):
                writer.writerow(
                    [
                        dataset,
                        method.value,
                        f"{report.mean_pct[d, m]:.2f}",
                        f"{report.std_pct[d, m]:.2f}",
                        f"{report.average_ranks[m]:.2f}",
                    ]
                )


def write_sign_tests(report: EvaluationReport, path: str | Path) -> None:
    alphas = report.alphas
    header = ["baseline", "challenger", "wins", "ties", "losses", "adjusted_wins"]
    for alpha in alphas:
        header += [
            f"critical_exact_{alpha:g}",
            f"critical_normal_{alpha:g}",
            f"significant_{alpha:g}",
        ]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for (baseline, challenger), result in report.sign_tests.items():
            row = [
                baseline.value,
                challenger.value,
                result.wins,
                result.ties,
                result.losses,
                result.adjusted_wins,
            ]
            for alpha in alphas:
                row += [
                    result.critical_values[alpha],
                    result.normal_critical_values[alpha],
                    int(result.significant[alpha]),
                ]
            writer.writerow(row)


def write_predictions(run: ProtocolRun, ds, plan, path: str | Path) -> None:
    """Per-instance dump: repetition, method, instance_index, true_label,
    predicted_label (encoded labels)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["repetition", "method", "instance_index", "true_label", "predicted_label"])
        for repetition, rep_results in enumerate(run.results):
            test_idx = plan.repetitions[repetition][1]
            for method, result in zip(run.methods, rep_results):
                for position, predicted in enumerate(result.predictions):
                    instance = int(test_idx[position])
                    writer.writerow(
                        [repetition, method.value, instance, int(ds.labels[instance]), int(predicted)]
                    )


def load_raw_accuracies(path: str | Path) -> dict[str, dict[str, list[float]]]:
    """Re-parse a raw accuracy CSV as dataset -> method -> accuracy list."""
    out: dict[str, dict[str, list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["dataset", "method", "repetition", "accuracy"]:
            raise ValueError(f"unexpected raw accuracy header: {header}")
        for dataset, method, _, accuracy in reader:
            out.setdefault(dataset, {}).setdefault(method, []).append(float(accuracy))
    return out


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_sign_test_figure(report: EvaluationReport, baseline: MethodId, path: str | Path) -> None:
    """Win counts of every challenger against one baseline, with vertical
    critical-value lines per confidence level."""
    plt = _pyplot()
    challengers = [m for m in report.methods if m is not baseline]
    results = [report.sign_tests[(baseline, m)] for m in challengers]
    n = results[0].n_datasets
    fig, ax = plt.subplots(figsize=(6.4, 0.9 + 0.55 * len(challengers)))
    positions = np.arange(len(challengers))
    ax.barh(positions, [r.adjusted_wins for r in results], height=0.6, color="#4878d0")
    styles = ["-", "--", ":"]
    drew_critical = False
    for style, alpha in zip(styles, report.alphas):
        critical = results[0].critical_values[alpha]
        if critical > n:
            continue  # unattainable at this dataset count
        ax.axvline(critical, linestyle=style, color="k", linewidth=1,
                   label=f"critical value, alpha={alpha:g}")
        drew_critical = True
    ax.set_yticks(positions)
    ax.set_yticklabels([m.value for m in challengers])
    ax.set_xlabel(f"wins against {baseline.value} (ties split, over {n} datasets)")
    ax.set_xlim(0, n + 0.5)
    ax.invert_yaxis()
    if drew_critical:
        ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_accuracy_figure(report: EvaluationReport, path: str | Path) -> None:
    """Grouped mean-accuracy bars with sample-std error bars."""
    plt = _pyplot()
    n_datasets = len(report.dataset_names)
    n_methods = len(report.methods)
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * n_datasets, 4.2))
    width = 0.8 / n_methods
    base = np.arange(n_datasets)
    for m, method in enumerate(report.methods):
        offsets = base + (m - (n_methods - 1) / 2) * width
        ax.bar(
            offsets,
            report.mean_pct[:, m],
            width=width,
            yerr=report.std_pct[:, m],
            capsize=2,
            label=method.value,
        )
    ax.set_xticks(base)
    ax.set_xticklabels(report.dataset_names, rotation=20, ha="right")
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(report: EvaluationReport, output_dir: str | Path) -> list[Path]:
    """Render every figure the report supports; returns the created paths."""
    output_dir = Path(output_dir)
    created = []
    accuracy_path = output_dir / "accuracy_summary.png"
    render_accuracy_figure(report, accuracy_path)
    created.append(accuracy_path)
    if report.sign_tests:
        for baseline in report.methods:
            path = output_dir / f"sign_test_vs_{baseline.value}.png"
            render_sign_test_figure(report, baseline, path)
            created.append(path)
    return created
