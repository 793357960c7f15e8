import csv
from pathlib import Path

import numpy as np
import pytest

from mvrfd.dataset import MultiViewDataset, View


def build_dataset(name, view_arrays, labels, class_names=None, view_names=None):
    """Assemble a MultiViewDataset directly from arrays (tests only)."""
    labels = np.asarray(labels, dtype=np.int64)
    if class_names is None:
        class_names = tuple(f"c{k}" for k in range(int(labels.max()) + 1))
    views = []
    for q, array in enumerate(view_arrays):
        array = np.asarray(array, dtype=np.float64)
        name_q = view_names[q] if view_names else f"view{q}"
        views.append(
            View(
                name=name_q,
                features=array,
                feature_names=tuple(f"f{j}" for j in range(array.shape[1])),
            )
        )
    return MultiViewDataset(
        name=name, views=tuple(views), labels=labels, class_names=tuple(class_names)
    ).check()


def write_csv(path: Path, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        csv.writer(handle).writerows(rows)


def write_manifest_tree(tmp_path: Path, name, views, labels, manifest_name=None):
    """Write a manifest plus CSVs; views maps view name -> (header, rows)."""
    lines = [f"name = {name}", f"labels = {name}_labels.csv"]
    write_csv(tmp_path / f"{name}_labels.csv", [["label"]] + [[lab] for lab in labels])
    for view_name, (header, rows) in views.items():
        write_csv(tmp_path / f"{name}_{view_name}.csv", [header] + rows)
        lines.append(f"view.{view_name} = {name}_{view_name}.csv")
    manifest = tmp_path / (manifest_name or f"{name}.manifest")
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


@pytest.fixture
def tiny_manifest(tmp_path):
    return write_manifest_tree(
        tmp_path,
        "toy",
        views={
            "first": (["a", "b"], [[1, 2], [3, 4], [5, 6], [7, 8]]),
            "second": (["x"], [[0.5], [1.5], [2.5], [3.5]]),
        },
        labels=["a", "a", "b", "b"],
    )
