"""Multi-view dataset model, manifest/CSV ingestion and stratified splitting.

A dataset on disk is one manifest plus one CSV per view plus a labels CSV:

    name = lsvt
    labels = labels.csv
    view.acoustic = acoustic.csv
    view.wavelet = wavelet.csv

View CSVs carry a header row of feature names; the labels CSV is a single
column with header ``label``. Paths are resolved relative to the manifest.
View order follows manifest order. Ingestion is strict: every cell must be
a finite number, all row counts must agree, and at least two classes must
be present.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .seeding import child_rng

LABEL_HEADER = "label"


def round_half_up(x: float) -> int:
    """round() with halves always going up, independent of float banker's mode."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class View:
    """One named group of features describing the same instances."""

    name: str
    features: np.ndarray  # (n_instances, n_features) float64
    feature_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def validate(self, n_instances: int | None = None) -> list[str]:
        problems = []
        if self.features.ndim != 2:
            problems.append(f"view {self.name!r}: features must be 2-D")
            return problems
        if self.features.shape[1] < 1:
            problems.append(f"view {self.name!r}: needs at least one feature")
        if len(self.feature_names) != self.features.shape[1]:
            problems.append(f"view {self.name!r}: feature name count mismatch")
        if n_instances is not None and self.features.shape[0] != n_instances:
            problems.append(
                f"view {self.name!r}: {self.features.shape[0]} rows, expected {n_instances}"
            )
        bad = np.argwhere(~np.isfinite(self.features))
        if bad.size:
            r, c = bad[0]
            col = self.feature_names[c] if c < len(self.feature_names) else str(c)
            problems.append(
                f"view {self.name!r}: non-finite value at row {r + 1}, column {col!r}"
            )
        return problems


@dataclass(frozen=True)
class MultiViewDataset:
    """Labeled instances described by several per-view feature tables."""

    name: str
    views: tuple[View, ...]
    labels: np.ndarray  # (n_instances,) int64, dense codes in [0, n_classes)
    class_names: tuple[str, ...]

    @property
    def n_instances(self) -> int:
        return len(self.labels)

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def total_features(self) -> int:
        return sum(v.n_features for v in self.views)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def validate(self) -> list[str]:
        """Return every violated invariant (empty list means valid)."""
        problems = []
        if self.n_views < 1:
            problems.append("dataset needs at least one view")
        n = self.n_instances
        for view in self.views:
            problems.extend(view.validate(n))
        names = [v.name for v in self.views]
        if len(set(names)) != len(names):
            problems.append("duplicate view names")
        if self.n_classes < 2:
            problems.append(f"needs at least 2 classes, found {self.n_classes}")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            problems.append("label codes outside [0, n_classes)")
        return problems

    def check(self) -> "MultiViewDataset":
        problems = self.validate()
        if problems:
            raise ValueError(f"invalid dataset {self.name!r}: " + "; ".join(problems))
        return self

    def equals(self, other: "MultiViewDataset") -> bool:
        return (
            self.name == other.name
            and self.class_names == other.class_names
            and np.array_equal(self.labels, other.labels)
            and len(self.views) == len(other.views)
            and all(
                a.name == b.name
                and a.feature_names == b.feature_names
                and np.array_equal(a.features, b.features)
                for a, b in zip(self.views, other.views)
            )
        )


@dataclass(frozen=True)
class SplitPlan:
    """Repeated stratified train/test index pairs over one dataset."""

    repetitions: tuple[tuple[np.ndarray, np.ndarray], ...]
    train_fraction: float
    seed: int

    @property
    def n_repetitions(self) -> int:
        return len(self.repetitions)


def _parse_cell(token: str, where: str) -> float:
    token = token.strip()
    if not token:
        raise ValueError(f"{where}: empty cell")
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"{where}: non-numeric cell {token!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"{where}: non-finite cell {token!r}")
    return value


def _read_view_csv(path: Path, view_name: str) -> View:
    if not path.exists():
        raise FileNotFoundError(f"view {view_name!r}: file not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"view {view_name!r}: {path} is empty") from None
        feature_names = tuple(h.strip() for h in header)
        rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(feature_names):
                raise ValueError(
                    f"view {view_name!r}: row {i} has {len(row)} cells, expected {len(feature_names)}"
                )
            rows.append(
                [
                    _parse_cell(tok, f"view {view_name!r}, row {i}, column {feature_names[j]!r}")
                    for j, tok in enumerate(row)
                ]
            )
    if not rows:
        raise ValueError(f"view {view_name!r}: no data rows in {path}")
    return View(name=view_name, features=np.asarray(rows, dtype=np.float64), feature_names=feature_names)


def _read_labels_csv(path: Path) -> tuple[np.ndarray, tuple[str, ...]]:
    if not path.exists():
        raise FileNotFoundError(f"labels file not found: {path}")
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"labels file {path} is empty") from None
        if [h.strip() for h in header] != [LABEL_HEADER]:
            raise ValueError(f"labels file must have a single {LABEL_HEADER!r} column, got {header}")
        raw = []
        for i, row in enumerate(reader, start=1):
            if len(row) != 1 or not row[0].strip():
                raise ValueError(f"labels row {i}: expected exactly one non-empty cell")
            raw.append(row[0].strip())
    if not raw:
        raise ValueError(f"labels file {path} has no rows")
    # Encode classes by first appearance so the mapping is deterministic.
    class_names: list[str] = []
    codes = {}
    encoded = np.empty(len(raw), dtype=np.int64)
    for i, text in enumerate(raw):
        if text not in codes:
            codes[text] = len(class_names)
            class_names.append(text)
        encoded[i] = codes[text]
    return encoded, tuple(class_names)


def parse_manifest(manifest_path: str | Path) -> tuple[str, Path, list[tuple[str, Path]]]:
    """Parse a manifest into (dataset name, labels path, ordered view paths)."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    base = manifest_path.parent
    name = None
    labels_path = None
    views: list[tuple[str, Path]] = []
    seen_views = set()
    for lineno, line in enumerate(manifest_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{manifest_path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "name":
            if name is not None:
                raise ValueError(f"{manifest_path}:{lineno}: duplicate 'name'")
            name = value
        elif key == "labels":
            if labels_path is not None:
                raise ValueError(f"{manifest_path}:{lineno}: duplicate 'labels'")
            labels_path = base / value
        elif key.startswith("view."):
            view_name = key[len("view."):]
            if not view_name:
                raise ValueError(f"{manifest_path}:{lineno}: empty view name")
            if view_name in seen_views:
                raise ValueError(f"{manifest_path}:{lineno}: duplicate view name {view_name!r}")
            seen_views.add(view_name)
            views.append((view_name, base / value))
        else:
            raise ValueError(f"{manifest_path}:{lineno}: unknown key {key!r}")
    if name is None:
        raise ValueError(f"{manifest_path}: missing 'name'")
    if labels_path is None:
        raise ValueError(f"{manifest_path}: missing 'labels'")
    if not views:
        raise ValueError(f"{manifest_path}: no 'view.<name>' entries")
    return name, labels_path, views


def load_dataset(manifest_path: str | Path) -> MultiViewDataset:
    """Load and validate a multi-view dataset from a manifest file.

    Labels are encoded to dense integers in first-appearance order. Any
    structural problem (missing file, row-count mismatch, non-numeric or
    empty cell, fewer than two classes, duplicate view names) raises with
    a message naming the offending location.
    """
    name, labels_path, view_entries = parse_manifest(manifest_path)
    labels, class_names = _read_labels_csv(labels_path)
    views = []
    for view_name, path in view_entries:
        view = _read_view_csv(path, view_name)
        if view.features.shape[0] != len(labels):
            raise ValueError(
                f"row-count mismatch: view {view_name!r} has {view.features.shape[0]} rows, "
                f"labels have {len(labels)}"
            )
        views.append(view)
    if len(class_names) < 2:
        raise ValueError(f"dataset {name!r}: needs at least 2 classes, found {len(class_names)}")
    return MultiViewDataset(
        name=name, views=tuple(views), labels=labels, class_names=tuple(class_names)
    ).check()


def save_dataset(ds: MultiViewDataset, directory: str | Path) -> Path:
    """Write manifest, view CSVs and labels CSV; returns the manifest path.

    Floats are written with repr so a save/load round trip is exact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    labels_file = f"{ds.name}_labels.csv"
    with open(directory / labels_file, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([LABEL_HEADER])
        for code in ds.labels:
            writer.writerow([ds.class_names[code]])
    lines = [f"name = {ds.name}", f"labels = {labels_file}"]
    for view in ds.views:
        view_file = f"{ds.name}_{view.name}.csv"
        with open(directory / view_file, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(view.feature_names)
            for row in view.features:
                writer.writerow([repr(float(x)) for x in row])
        lines.append(f"view.{view.name} = {view_file}")
    manifest = directory / f"{ds.name}.manifest"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def concatenate_views(ds: MultiViewDataset) -> View:
    """Stack all views side by side into one wide view.

    Column order is view order, then within-view column order; every input
    cell appears exactly once. Feature names are prefixed with the view name
    to stay unique.
    """
    features = np.concatenate([v.features for v in ds.views], axis=1)
    names = tuple(f"{v.name}.{fname}" for v in ds.views for fname in v.feature_names)
    return View(name="concatenated", features=features, feature_names=names)


def _stratified_train_counts(class_counts: np.ndarray, train_fraction: float) -> np.ndarray:
    """Per-class train-set sizes: round(fraction * count), both sides kept
    nonempty, then nudged on the largest classes until the total equals
    round(fraction * N)."""
    n_total = int(class_counts.sum())
    target = round_half_up(train_fraction * n_total)
    counts = np.array(
        [min(max(round_half_up(train_fraction * c), 1), c - 1) for c in class_counts],
        dtype=np.int64,
    )
    # Keep the total feasible given the >=1-per-side constraint.
    k = len(class_counts)
    target = min(max(target, k), n_total - k)
    order = sorted(range(k), key=lambda c: (-class_counts[c], c))
    while counts.sum() < target:
        for c in order:
            if counts[c] < class_counts[c] - 1:
                counts[c] += 1
                break
    while counts.sum() > target:
        for c in order:
            if counts[c] > 1:
                counts[c] -= 1
                break
    return counts


def make_split_plan(
    ds: MultiViewDataset, repetitions: int, train_fraction: float, seed: int
) -> SplitPlan:
    """Build repeated stratified random train/test splits.

    Within each repetition, train and test are disjoint and cover all
    instances; each class contributes round(train_fraction * count) members
    to the train side (clamped so both sides keep at least one). The same
    (dataset, arguments) always produce the same plan.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    class_counts = ds.class_counts()
    too_small = np.flatnonzero(class_counts < 2)
    if too_small.size:
        names = ", ".join(repr(ds.class_names[c]) for c in too_small)
        raise ValueError(f"cannot stratify: class(es) {names} have fewer than 2 members")
    per_class_train = _stratified_train_counts(class_counts, train_fraction)
    class_indices = [np.flatnonzero(ds.labels == c) for c in range(ds.n_classes)]
    rng = child_rng(seed, "split-plan")
    reps = []
    for _ in range(repetitions):
        train_parts = []
        test_parts = []
        for c, idx in enumerate(class_indices):
            shuffled = rng.permutation(idx)
            train_parts.append(shuffled[: per_class_train[c]])
            test_parts.append(shuffled[per_class_train[c]:])
        train = np.sort(np.concatenate(train_parts))
        test = np.sort(np.concatenate(test_parts))
        reps.append((train, test))
    return SplitPlan(repetitions=tuple(reps), train_fraction=train_fraction, seed=seed)


def save_split_plan(plan: SplitPlan, path: str | Path) -> None:
    """Audit export: one row per (repetition, instance) with its role."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["repetition", "instance_index", "role"])
        for rep, (train, test) in enumerate(plan.repetitions):
            roles = {}
            for i in train:
                roles[int(i)] = "train"
            for i in test:
                roles[int(i)] = "test"
            for i in sorted(roles):
                writer.writerow([rep, i, roles[i]])


def load_split_plan(path: str | Path, train_fraction: float = 0.0, seed: int = 0) -> SplitPlan:
    """Re-parse an exported split plan (fraction/seed are audit metadata only)."""
    by_rep: dict[int, tuple[list[int], list[int]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["repetition", "instance_index", "role"]:
            raise ValueError(f"unexpected split-plan header: {header}")
        for row in reader:
            rep, idx, role = int(row[0]), int(row[1]), row[2]
            train, test = by_rep.setdefault(rep, ([], []))
            if role == "train":
                train.append(idx)
            elif role == "test":
                test.append(idx)
            else:
                raise ValueError(f"unknown role {role!r}")
    reps = tuple(
        (np.array(sorted(by_rep[r][0])), np.array(sorted(by_rep[r][1])))
        for r in sorted(by_rep)
    )
    return SplitPlan(repetitions=reps, train_fraction=train_fraction, seed=seed)
