"""Seeded synthetic multi-view datasets for fixtures and benchmarks.

Each view draws class-conditional Gaussian features: informative columns
get per-class means of magnitude ``signal`` and every column gets unit-free
noise of magnitude ``noise``. With many weakly informative columns per view
the class structure is only visible multivariately, which is the regime the
benchmark methods are meant to separate.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dataset import MultiViewDataset, View
from .seeding import child_rng


def make_synthetic_dataset(
    name: str,
    seed: int,
    n_instances: int,
    view_widths: Sequence[int],
    n_classes: int = 2,
    class_weights: Sequence[float] | None = None,
    informative: Sequence[int] | None = None,
    signal: float = 1.0,
    noise: float = 1.0,
) -> MultiViewDataset:
    """Class-conditional Gaussian views.

    ``informative`` gives the number of signal-bearing columns per view
    (defaults to all of them); the rest are pure noise shared by all
    classes. Labels are interleaved deterministically so every prefix of
    the dataset stays roughly stratified.
    """
    if class_weights is None:
        class_weights = [1.0 / n_classes] * n_classes
    if informative is None:
        informative = list(view_widths)
    if len(informative) != len(view_widths):
        raise ValueError("informative must give one count per view")
    weights = np.asarray(class_weights, dtype=np.float64)
    weights = weights / weights.sum()
    counts = np.floor(weights * n_instances).astype(int)
    while counts.sum() < n_instances:
        counts[int(np.argmax(weights * n_instances - counts))] += 1
    labels = np.concatenate([np.full(c, k, dtype=np.int64) for k, c in enumerate(counts)])
    rng = child_rng(seed, "synthetic", name)
    labels = labels[rng.permutation(n_instances)]
    # Re-encode by first appearance so a save/load round trip is the identity.
    remap: dict[int, int] = {}
    for lab in labels:
        remap.setdefault(int(lab), len(remap))
    labels = np.array([remap[int(lab)] for lab in labels], dtype=np.int64)
    views = []
    for q, (width, n_informative) in enumerate(zip(view_widths, informative)):
        n_informative = min(n_informative, width)
        centers = np.zeros((n_classes, width))
        centers[:, :n_informative] = rng.normal(0.0, signal, size=(n_classes, n_informative))
        features = centers[labels] + rng.normal(0.0, noise, size=(n_instances, width))
        views.append(
            View(
                name=f"view{q}",
                features=features,
                feature_names=tuple(f"f{j}" for j in range(width)),
            )
        )
    return MultiViewDataset(
        name=name,
        views=tuple(views),
        labels=labels,
        class_names=tuple(f"c{k}" for k in range(n_classes)),
    ).check()


def make_separable_dataset(name: str, seed: int, n_instances: int = 40, view_widths=(6, 4)) -> MultiViewDataset:
    """Two widely separated classes; every sensible method should be perfect."""
    return make_synthetic_dataset(
        name,
        seed=seed,
        n_instances=n_instances,
        view_widths=view_widths,
        n_classes=2,
        signal=12.0,
        noise=0.25,
    )


def make_correlated_views_dataset(name: str, seed: int) -> MultiViewDataset:
    """Many weakly informative correlated columns across three views.

    120 total features put the selection rules in the 3% band, so filter
    methods keep only a handful of the weak columns while whole-view methods
    see all of them.
    """
    return make_synthetic_dataset(
        name,
        seed=seed,
        n_instances=60,
        view_widths=(40, 40, 40),
        n_classes=2,
        signal=0.55,
        noise=1.0,
    )


def make_radiomics_like_dataset(name: str = "radiomics_like", seed: int = 0) -> MultiViewDataset:
    """84 instances, five views totalling 6746 features, two unbalanced classes."""
    return make_synthetic_dataset(
        name,
        seed=seed,
        n_instances=84,
        view_widths=(1500, 1500, 1500, 1500, 746),
        n_classes=2,
        class_weights=(2.0, 1.0),
        informative=(40, 40, 40, 40, 20),
        signal=0.9,
        noise=1.0,
    )


def make_lsvt_shaped_dataset(name: str = "lsvt_shaped", seed: int = 0) -> MultiViewDataset:
    """126 instances, four views totalling 309 features, two unbalanced classes."""
    return make_synthetic_dataset(
        name,
        seed=seed,
        n_instances=126,
        view_widths=(78, 77, 77, 77),
        n_classes=2,
        class_weights=(1.0, 2.0),
        informative=(15, 15, 15, 15),
        signal=1.0,
        noise=1.0,
    )
