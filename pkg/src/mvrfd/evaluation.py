"""Protocol execution and benchmark statistics.

Runs each method over every repetition of a split plan, then reduces the
resulting accuracy tables to mean/std summaries, per-dataset midranks and
pairwise sign tests with exact binomial critical values (a normal
approximation is reported alongside, but the exact value governs the
significance flag).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .dataset import MultiViewDataset, SplitPlan
from .pipelines import (
    MethodId,
    PipelineConfig,
    PipelineResult,
    SharedState,
    repetition_config,
    run_pipeline,
)

DEFAULT_ALPHAS = (0.10, 0.05, 0.01)


class ProtocolError(RuntimeError):
    """A pipeline failed inside the protocol; names the failing cell."""


@dataclass(frozen=True)
class ProtocolRun:
    """All per-repetition results of one dataset under one method list."""

    dataset: str
    methods: tuple[MethodId, ...]
    accuracies: np.ndarray  # (n_repetitions, n_methods)
    results: tuple[tuple[PipelineResult, ...], ...]  # [repetition][method]


@dataclass(frozen=True)
class SignTestResult:
    """Pairwise challenger-vs-baseline comparison across datasets."""

    wins: int
    ties: int
    losses: int
    adjusted_wins: int  # wins plus half the ties, rounded down
    critical_values: dict[float, int]  # exact binomial tail
    normal_critical_values: dict[float, int]  # reported for reference only
    significant: dict[float, bool]

    @property
    def n_datasets(self) -> int:
        return self.wins + self.ties + self.losses


@dataclass(frozen=True)
class EvaluationReport:
    dataset_names: tuple[str, ...]
    methods: tuple[MethodId, ...]
    accuracies: dict[str, np.ndarray]  # dataset -> (n_repetitions, n_methods)
    mean_pct: np.ndarray  # (n_datasets, n_methods)
    std_pct: np.ndarray
    average_ranks: np.ndarray  # (n_methods,)
    sign_tests: dict[tuple[MethodId, MethodId], SignTestResult]
    alphas: tuple[float, ...]


def _run_repetition(ds, methods, split, config, repetition):
    rep_config = repetition_config(config, repetition)
    shared = SharedState(ds, split, rep_config)
    results = []
    for method in methods:
        try:
            results.append(run_pipeline(method, ds, split, rep_config, shared))
        except Exception as exc:
            raise ProtocolError(
                f"dataset {ds.name!r}, repetition {repetition}, method {method.value!r}: {exc}"
            ) from exc
    return tuple(results)


def _run_repetition_star(args):
    return _run_repetition(*args)


def run_protocol(
    ds: MultiViewDataset,
    methods,
    plan: SplitPlan,
    config: PipelineConfig,
    n_jobs: int = 1,
) -> ProtocolRun:
    """Execute every (repetition, method) cell of the protocol.

    Bit-identical no matter how many workers are used: each repetition's
    randomness is derived from (config.seed, repetition index) alone.
    """
    methods = tuple(methods)
    if not methods:
        raise ValueError("no methods requested")
    jobs = [
        (ds, methods, split, config, repetition)
        for repetition, split in enumerate(plan.repetitions)
    ]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(jobs))) as pool:
            all_results = list(pool.map(_run_repetition_star, jobs))
    else:
        all_results = [_run_repetition_star(job) for job in jobs]
    accuracies = np.array([[r.accuracy for r in rep] for rep in all_results])
    return ProtocolRun(
        dataset=ds.name, methods=methods, accuracies=accuracies, results=tuple(all_results)
    )


def summarize(accuracies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-method mean and sample (n-1) standard deviation, in percent."""
    table = np.asarray(accuracies, dtype=np.float64)
    if table.ndim != 2 or table.size == 0:
        raise ValueError(f"need a non-empty repetitions-by-methods table, got shape {table.shape}")
    if table.shape[0] < 2:
        raise ValueError("need at least 2 repetitions for a standard deviation")
    return table.mean(axis=0) * 100.0, table.std(axis=0, ddof=1) * 100.0


def _midranks_descending(values: np.ndarray) -> np.ndarray:
    """Rank 1 is the largest value; tied values share the average position."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def average_rank(mean_accuracies: np.ndarray) -> np.ndarray:
    """Mean per-dataset midrank of each method (lower is better).

    ``mean_accuracies`` is a (n_datasets, n_methods) table; every cell must
    be present.
    """
    table = np.asarray(mean_accuracies, dtype=np.float64)
    if table.ndim != 2 or table.size == 0:
        raise ValueError("need a non-empty datasets-by-methods table")
    if not np.isfinite(table).all():
        raise ValueError("missing or non-finite cells in the accuracy table")
    ranks = np.vstack([_midranks_descending(row) for row in table])
    return ranks.mean(axis=0)


def binomial_critical_value(n: int, alpha: float) -> int:
    """Smallest win count w with P(X >= w) <= alpha under Binomial(n, 1/2).

    Computed with exact integer tails. Returns n + 1 when no attainable
    count is significant at this alpha (possible for small n).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    threshold = Fraction(alpha)
    denominator = 2 ** n
    tail = 0
    critical = n + 1
    for w in range(n, -1, -1):
        tail += math.comb(n, w)
        if Fraction(tail, denominator) <= threshold:
            critical = w
        else:
            break
    return critical


def normal_critical_value(n: int, alpha: float) -> int:
    """Continuity-corrected normal-approximation counterpart, capped at n + 1."""
    z = NormalDist().inv_cdf(1.0 - alpha)
    w = math.ceil(n / 2.0 + 0.5 + z * math.sqrt(n) / 2.0)
    return min(max(w, 0), n + 1)


def sign_test(
    baseline_accuracies,
    challenger_accuracies,
    alphas=DEFAULT_ALPHAS,
) -> SignTestResult:
    """Sign test of a challenger against a baseline over per-dataset means.

    Ties are split evenly, with the half credited to wins rounded down. The
    challenger is significantly better at a level when its adjusted win
    count reaches the exact binomial critical value.
    """
    baseline = np.asarray(baseline_accuracies, dtype=np.float64)
    challenger = np.asarray(challenger_accuracies, dtype=np.float64)
    if baseline.shape != challenger.shape or baseline.ndim != 1:
        raise ValueError("need two equal-length vectors of per-dataset accuracies")
    n = len(baseline)
    if n < 2:
        raise ValueError(f"need at least 2 datasets, got {n}")
    wins = int(np.sum(challenger > baseline))
    losses = int(np.sum(challenger < baseline))
    ties = n - wins - losses
    adjusted = wins + ties // 2
    critical = {alpha: binomial_critical_value(n, alpha) for alpha in alphas}
    normal = {alpha: normal_critical_value(n, alpha) for alpha in alphas}
    significant = {alpha: adjusted >= critical[alpha] for alpha in alphas}
    return SignTestResult(
        wins=wins,
        ties=ties,
        losses=losses,
        adjusted_wins=adjusted,
        critical_values=critical,
        normal_critical_values=normal,
        significant=significant,
    )


def build_report(runs: list[ProtocolRun], alphas=DEFAULT_ALPHAS) -> EvaluationReport:
    """Aggregate per-dataset protocol runs into one report.

    Sign tests compare every ordered method pair on per-dataset mean
    accuracy; they are omitted when fewer than two datasets were run.
    """
    if not runs:
        raise ValueError("no protocol runs to report on")
    methods = runs[0].methods
    for run in runs[1:]:
        if run.methods != methods:
            raise ValueError("all runs must share the same method list")
    dataset_names = tuple(run.dataset for run in runs)
    if len(set(dataset_names)) != len(dataset_names):
        raise ValueError("duplicate dataset names in report")
    accuracies = {run.dataset: run.accuracies for run in runs}
    summaries = [summarize(run.accuracies) for run in runs]
    mean_pct = np.vstack([s[0] for s in summaries])
    std_pct = np.vstack([s[1] for s in summaries])
    ranks = average_rank(mean_pct)
    sign_tests = {}
    if len(runs) >= 2:
        for b, baseline in enumerate(methods):
            for c, challenger in enumerate(methods):
                if baseline is challenger:
                    continue
                sign_tests[(baseline, challenger)] = sign_test(
                    mean_pct[:, b], mean_pct[:, c], alphas
                )
    return EvaluationReport(
        dataset_names=dataset_names,
        methods=methods,
        accuracies=accuracies,
        mean_pct=mean_pct,
        std_pct=std_pct,
        average_ranks=ranks,
        sign_tests=sign_tests,
        alphas=tuple(alphas),
    )
