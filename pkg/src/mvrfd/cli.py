"""Command-line harness: run the benchmark, export dissimilarities, validate data.

Exit codes: 0 success, 1 validation failure (bad inputs), 2 runtime failure.
``run`` writes raw/summary/sign-test CSVs, per-dataset prediction and split
dumps, rendered figures and a metadata file that is sufficient to re-execute
the identical run.
"""

from __future__ import annotations

import argparse
import datetime
import json
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_dataset, make_split_plan, save_split_plan
from .dissimilarity import build_matrix, joint_average, save_matrix
from .evaluation import ProtocolError, build_report, run_protocol
from .forest import ForestConfig, train_forest
from .pipelines import ALL_METHODS, MethodId, PipelineConfig
from .reporting import (
    render_figures,
    write_predictions,
    write_raw_accuracies,
    write_sign_tests,
    write_summary,
)
from .seeding import child_seed
from .svm import KernelGrid

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)

# Fixed behavioral choices echoed into every run's metadata for audit.
DESIGN_CHOICES = {
    "relief_variant": "ReliefF, full instance sweep, k=10 clamped to smallest class size - 1",
    "svm_multiclass": "one-vs-one voting, ties to the lowest class index",
    "c_selection": "per-training-split stratified 3-fold CV (2-fold for classes under 3), ties to smallest C",
    "late_integration_vote": "hard plurality votes, ties to the lowest class index",
    "forest_growth": "Gini, ceil(sqrt(p)) candidates per node, fully grown, midpoint thresholds",
    "rfe_schedule": "drop bottom half per round at C=1; zero-variance features eliminated first",
    "sign_test": "exact binomial critical values govern significance; normal approximation reported alongside",
    "selection_bands": "boundary feature counts fall into the higher band",
    "stratified_rounding": "per-class round-half-up, largest classes adjusted to match the overall total",
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one ``run`` invocation."""

    manifests: tuple[str, ...]
    methods: tuple[MethodId, ...]
    repetitions: int = 10
    train_fraction: float = 0.5
    num_trees: int = 500
    c_grid: tuple[float, ...] = DEFAULT_C_GRID
    seed: int = 0
    output_dir: str = "results"
    jobs: int = 1
    figures: bool = True

    def validate(self) -> None:
        if not self.manifests:
            raise ValueError("no dataset manifests given")
        if not self.methods:
            raise ValueError("no methods selected")
        if self.repetitions < 1:
            raise ValueError("repeats must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train-fraction must be in (0, 1)")
        if self.num_trees < 1:
            raise ValueError("trees must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        KernelGrid(c_values=self.c_grid)


def _parse_methods(text: str) -> tuple[MethodId, ...]:
    return tuple(MethodId.from_token(tok) for tok in text.split(",") if tok.strip())


def _parse_c_grid(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    config_path = Path(path)
    if not config_path.exists():
        raise ValueError(f"config file not found: {path}")
    for lineno, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve_run_config(args) -> RunConfig:
    file_values = _read_config_file(args.config) if args.config else {}

    def pick(flag_value, file_key, default, convert):
        if flag_value is not None:
            return flag_value
        if file_key in file_values:
            return convert(file_values[file_key])
        return default

    manifests = tuple(args.manifests) if args.manifests else tuple(
        tok for tok in file_values.get("manifests", "").split(",") if tok.strip()
    )
    figures = not args.no_figures if args.no_figures is not None else None
    config = RunConfig(
        manifests=tuple(str(Path(m).resolve()) for m in manifests),
        methods=pick(args.methods, "methods", ALL_METHODS, _parse_methods),
        repetitions=pick(args.repeats, "repeats", 10, int),
        train_fraction=pick(args.train_fraction, "train-fraction", 0.5, float),
        num_trees=pick(args.trees, "trees", 500, int),
        c_grid=pick(args.c_grid, "c-grid", DEFAULT_C_GRID, _parse_c_grid),
        seed=pick(args.seed, "seed", 0, int),
        output_dir=pick(args.out, "out", "results", str),
        jobs=pick(args.jobs, "jobs", 1, int),
        figures=pick(figures, "figures", True, lambda s: s.lower() not in ("0", "false", "no")),
    )
    config.validate()
    return config


def _scalar_metadata(metadata: dict) -> dict:
    return {
        key: value
        for key, value in metadata.items()
        if isinstance(value, (int, float, bool, str))
    }


def _write_metadata(config: RunConfig, output_dir: Path, status: str, extra: dict) -> None:
    payload = {
        "tool": "mvrfd",
        "version": __version__,
        "status": status,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": {
            "manifests": list(config.manifests),
            "methods": [m.value for m in config.methods],
            "repeats": config.repetitions,
            "train_fraction": config.train_fraction,
            "trees": config.num_trees,
            "c_grid": list(config.c_grid),
            "seed": config.seed,
            "out": str(output_dir),
            "jobs": config.jobs,
            "figures": config.figures,
        },
        "design_choices": DESIGN_CHOICES,
    }
    payload.update(extra)
    (output_dir / "run_metadata.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )


def cmd_run(config: RunConfig) -> int:
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    stage = "loading datasets"
    try:
        datasets = [load_dataset(m) for m in config.manifests]
        plans = {}
        for ds in datasets:
            stage = f"building split plan for {ds.name!r}"
            plans[ds.name] = make_split_plan(
                ds, config.repetitions, config.train_fraction, config.seed
            )
    except (ValueError, FileNotFoundError) as exc:
        print(f"error while {stage}: {exc}", file=sys.stderr)
        _write_metadata(config, output_dir, "incomplete", {"failed_stage": stage, "error": str(exc)})
        return EXIT_VALIDATION

    pipeline_config = PipelineConfig(
        num_trees=config.num_trees,
        c_grid=KernelGrid(c_values=config.c_grid),
        seed=config.seed,
    )
    runs = []
    try:
        for ds in datasets:
            stage = f"running protocol on {ds.name!r}"
            run = run_protocol(ds, config.methods, plans[ds.name], pipeline_config, n_jobs=config.jobs)
            runs.append(run)
            save_split_plan(plans[ds.name], output_dir / f"splits_{ds.name}.csv")
            write_predictions(run, ds, plans[ds.name], output_dir / f"predictions_{ds.name}.csv")
        stage = "writing reports"
        report = build_report(runs)
        write_raw_accuracies(report, output_dir / "raw_accuracies.csv")
        write_summary(report, output_dir / "summary.csv")
        if report.sign_tests:
            write_sign_tests(report, output_dir / "sign_tests.csv")
        if config.figures:
            stage = "rendering figures"
            render_figures(report, output_dir)
    except ProtocolError as exc:
        print(f"error while {stage}: {exc}", file=sys.stderr)
        _write_metadata(config, output_dir, "incomplete", {"failed_stage": stage, "error": str(exc)})
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - diagnostic boundary
        print(f"error while {stage}: {exc}", file=sys.stderr)
        _write_metadata(config, output_dir, "incomplete", {"failed_stage": stage, "error": str(exc)})
        return EXIT_RUNTIME

    method_details = {
        run.dataset: [
            {
                "repetition": repetition,
                "method": method.value,
                **_scalar_metadata(result.metadata),
            }
            for repetition, rep_results in enumerate(run.results)
            for method, result in zip(run.methods, rep_results)
        ]
        for run in runs
    }
    _write_metadata(config, output_dir, "complete", {"method_details": method_details})
    print(f"wrote reports for {len(runs)} dataset(s) to {output_dir}")
    return EXIT_OK


def cmd_dissim(manifest: str, view: str | None, out: str, trees: int, seed: int, jobs: int) -> int:
    out_dir = Path(out)
    try:
        ds = load_dataset(manifest)
        view_names = [v.name for v in ds.views]
        if view is not None and view not in view_names:
            raise ValueError(f"unknown view name {view!r}; dataset has: {', '.join(view_names)}")
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        selected = [q for q, name in enumerate(view_names) if view is None or name == view]
        forest_config = ForestConfig(num_trees=trees, seed=child_seed(seed, "raw-feature-forest"))
        matrices = []
        for q in selected:
            features = ds.views[q].features
            forest = train_forest(features, ds.labels, forest_config, n_jobs=jobs)
            matrix = build_matrix(forest, features, features)
            matrices.append(matrix)
            save_matrix(matrix, out_dir / f"dissim_{ds.views[q].name}.csv")
        save_matrix(joint_average(matrices), out_dir / "dissim_joint.csv")
    except Exception as exc:  # noqa: BLE001 - diagnostic boundary
        print(f"error while exporting dissimilarities: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(selected)} view matrix(es) and the joint matrix to {out_dir}")
    return EXIT_OK


def cmd_validate(manifest: str) -> int:
    try:
        ds = load_dataset(manifest)
    except (ValueError, FileNotFoundError) as exc:
        print(f"invalid dataset: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    problems = ds.validate()
    if problems:
        for problem in problems:
            print(f"invalid dataset: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"dataset: {ds.name}")
    print(f"N={ds.n_instances}, Q={ds.n_views}, classes={ds.n_classes}")
    for view in ds.views:
        print(f"view {view.name}: p={view.n_features}")
    counts = ds.class_counts()
    histogram = ", ".join(f"{name}={counts[i]}" for i, name in enumerate(ds.class_names))
    print(f"class histogram: {histogram}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvrfd",
        description="Multi-view benchmark: forest-dissimilarity methods vs feature-selection baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark protocol and write reports")
    run.add_argument("manifests", nargs="*", help="dataset manifest files")
    run.add_argument("--methods", type=_parse_methods, default=None,
                     help="comma list: relf_rf,svmrfe_rf,rfsvm,rfdis,late_rf,late_rfdis")
    run.add_argument("--repeats", type=int, default=None, help="number of repetitions (default 10)")
    run.add_argument("--train-fraction", type=float, default=None, help="train share (default 0.5)")
    run.add_argument("--trees", type=int, default=None, help="trees per forest (default 500)")
    run.add_argument("--c-grid", type=_parse_c_grid, default=None,
                     help="comma list of SVM C candidates (default 0.01,0.1,1,10,100,1000)")
    run.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    run.add_argument("--out", default=None, help="output directory (default results)")
    run.add_argument("--jobs", type=int, default=None, help="parallel workers (default 1)")
    run.add_argument("--config", default=None, help="key = value config file; flags override it")
    run.add_argument("--no-figures", action="store_true", default=None,
                     help="skip PNG rendering, keep CSV output only")

    dissim = sub.add_parser("dissim", help="export per-view and joint dissimilarity matrices")
    dissim.add_argument("manifest", help="dataset manifest file")
    dissim.add_argument("--view", default=None, help="restrict to one view by name")
    dissim.add_argument("--out", default="dissimilarities", help="output directory")
    dissim.add_argument("--trees", type=int, default=500, help="trees per forest (default 500)")
    dissim.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    dissim.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")

    validate = sub.add_parser("validate", help="check a dataset and print its shape report")
    validate.add_argument("manifest", help="dataset manifest file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            config = _resolve_run_config(args)
        except ValueError as exc:
            print(f"invalid configuration: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        return cmd_run(config)
    if args.command == "dissim":
        return cmd_dissim(args.manifest, args.view, args.out, args.trees, args.seed, args.jobs)
    if args.command == "validate":
        return cmd_validate(args.manifest)
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
