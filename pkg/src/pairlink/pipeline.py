"""End-to-end pipeline: configuration, stage driver, and run manifests.

A run walks the fixed stage order ingest -> preprocess -> sample ->
vectorize -> train -> evaluate -> report, writing every artifact under one
output directory. Configuration lives in a flat key=value text file whose
keys map one-to-one onto PipelineConfig fields; command-line flags override
file values. Reports are byte-deterministic for a given config, regardless
of partition or worker counts; the manifest additionally records wall-clock
timings, which naturally vary between runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__
from .errors import ConfigError, PairlinkError, PipelineStageError
from .evaluate import FitDiagnosis, confusion, emit_report, fit_diagnosis, metrics
from .ingest import (
    DEFAULT_GLOB,
    DEFAULT_MISSING_TOKEN,
    CorpusManifest,
    load_corpus,
)
from .models import TrainConfig, predict, save_model, train
from .preprocess import (
    filter_rows,
    impute_and_vectorize,
    preprocess_report,
    profile_columns,
    select_columns,
)
from .sampling import (
    DEFAULT_SEED,
    SamplingPlan,
    rebalance_negatives,
    split_report,
    stratified_split,
)

MODEL_KINDS = ("logistic", "hinge")
SPLIT_ORDER = ("train", "validation", "test")
IMPUTE_POLICIES = ("zero", "mean")


def _parse_bool(token: str) -> bool:
    low = token.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {token!r}")


def _parse_int(token: str) -> int:
    return int(token.strip(), 10)


def _parse_float(token: str) -> float:
    return float(token.strip())


@dataclass(slots=True, frozen=True)
class PipelineConfig:
    """Everything a run needs, with published experiment values as defaults.

    The per-model hyperparameter fields (logistic_*, hinge_*) default to
    None, meaning "use the shared value"; set them to tune one model
    without touching the other.
    """

    input_dir: str = "."
    output_dir: str = "pairlink_out"
    pattern: str = DEFAULT_GLOB
    missing_token: str = DEFAULT_MISSING_TOKEN
    partitions: int = 1
    workers: int = 1
    seed: int = DEFAULT_SEED
    col_missing_max: float = 0.2
    col_missing_strict: bool = True
    row_min_present: int = 3
    impute: str = "zero"
    train_fraction: float = 0.7
    test_fraction: float = 0.2
    validation_fraction: float = 0.1
    negative_fraction: float = 0.1
    holdout_test: float = 0.2
    learning_rate: float = 2.0
    epochs: int = 2000
    l2: float = 0.001
    tolerance: float = 1e-6
    gap_threshold: float = 0.05
    underfit_floor: float = 0.5
    logistic_learning_rate: float | None = None
    logistic_epochs: int | None = None
    logistic_l2: float | None = None
    logistic_tolerance: float | None = None
    hinge_learning_rate: float | None = None
    hinge_epochs: int | None = None
    hinge_l2: float | None = None
    hinge_tolerance: float | None = None

    def __post_init__(self):
        if self.partitions < 1:
            raise ConfigError(f"partitions must be >= 1, got {self.partitions}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 < self.col_missing_max <= 1.0:
            raise ConfigError(
                f"col_missing_max must be in (0, 1], got {self.col_missing_max}"
            )
        if self.row_min_present < 0:
            raise ConfigError(
                f"row_min_present must be >= 0, got {self.row_min_present}"
            )
        if self.impute not in IMPUTE_POLICIES:
            raise ConfigError(
                f"impute must be one of {IMPUTE_POLICIES}, got {self.impute!r}"
            )
        if not 0.0 < self.gap_threshold < 1.0:
            raise ConfigError(
                f"gap_threshold must be in (0, 1), got {self.gap_threshold}"
            )
        if not 0.0 <= self.underfit_floor <= 1.0:
            raise ConfigError(
                f"underfit_floor must be in [0, 1], got {self.underfit_floor}"
            )
        # these constructors own the remaining range checks
        try:
            self.plan()
            for kind in MODEL_KINDS:
                self.train_config(kind)
        except PairlinkError as exc:
            raise ConfigError(str(exc)) from exc

    def plan(self) -> SamplingPlan:
        return SamplingPlan(
            train=self.train_fraction,
            test=self.test_fraction,
            validation=self.validation_fraction,
            negative_fraction=self.negative_fraction,
            seed=self.seed,
            holdout_test=self.holdout_test,
        )

    def train_config(self, kind: str) -> TrainConfig:
        """Effective hyperparameters for one model, overrides applied."""
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")

        def pick(name: str):
            override = getattr(self, f"{kind}_{name}")
            return getattr(self, name) if override is None else override

        return TrainConfig(
            loss=kind,
            learning_rate=pick("learning_rate"),
            epochs=pick("epochs"),
            l2=pick("l2"),
            tolerance=pick("tolerance"),
        )


# File key -> (attribute, parser). Dict order is the canonical emission order.
CONFIG_KEYS: dict[str, tuple[str, Callable[[str], object]]] = {
    "input_dir": ("input_dir", str),
    "output_dir": ("output_dir", str),
    "pattern": ("pattern", str),
    "missing_token": ("missing_token", str),
    "partitions": ("partitions", _parse_int),
    "workers": ("workers", _parse_int),
    "seed": ("seed", _parse_int),
    "col_missing_max": ("col_missing_max", _parse_float),
    "col_missing_strict": ("col_missing_strict", _parse_bool),
    "row_min_present": ("row_min_present", _parse_int),
    "impute": ("impute", str),
    "train_fraction": ("train_fraction", _parse_float),
    "test_fraction": ("test_fraction", _parse_float),
    "validation_fraction": ("validation_fraction", _parse_float),
    "negative_fraction": ("negative_fraction", _parse_float),
    "holdout_test": ("holdout_test", _parse_float),
    "learning_rate": ("learning_rate", _parse_float),
    "epochs": ("epochs", _parse_int),
    "l2": ("l2", _parse_float),
    "tolerance": ("tolerance", _parse_float),
    "gap_threshold": ("gap_threshold", _parse_float),
    "underfit_floor": ("underfit_floor", _parse_float),
    "logistic.learning_rate": ("logistic_learning_rate", _parse_float),
    "logistic.epochs": ("logistic_epochs", _parse_int),
    "logistic.l2": ("logistic_l2", _parse_float),
    "logistic.tolerance": ("logistic_tolerance", _parse_float),
    "hinge.learning_rate": ("hinge_learning_rate", _parse_float),
    "hinge.epochs": ("hinge_epochs", _parse_int),
    "hinge.l2": ("hinge_l2", _parse_float),
    "hinge.tolerance": ("hinge_tolerance", _parse_float),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in CONFIG_KEYS.items()}
_OPTIONAL_ATTRS = {
    attr for key, (attr, _) in CONFIG_KEYS.items() if "." in key
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, object]:
    """Parse key=value lines into an attribute dict; strict about keys."""
    values: dict[str, object] = {}
    seen: set[str] = set()
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, token = line.partition("=")
        key = key.strip()
        if not eq:
            raise ConfigError(f"{source}:{n}: expected key=value, got {line!r}")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{n}: unknown config key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{n}: duplicate config key {key!r}")
        seen.add(key)
        attr, parser = CONFIG_KEYS[key]
        try:
            values[attr] = parser(token.strip())
        except ValueError as exc:
            raise ConfigError(f"{source}:{n}: bad value for {key!r}: {exc}") from exc
    return values


def validate_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    """Load, default, and range-check a config file; flags win over file.

    With no path, the defaults (optionally adjusted by keyword overrides)
    are validated and returned, so an empty or absent file means "the
    published experiment settings".
    """
    values: dict[str, object] = {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {p}") from exc
        values = parse_config_text(text, source=str(p))
    values.update(overrides)
    try:
        return PipelineConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"unknown config option: {exc}") from exc


def config_to_text(config: PipelineConfig) -> str:
    """Canonical key=value rendering; validate_config round-trips it."""
    lines = []
    for key, (attr, _) in CONFIG_KEYS.items():
        value = getattr(config, attr)
        if value is None and attr in _OPTIONAL_ATTRS:
            continue
        if isinstance(value, bool):
            token = "true" if value else "false"
        elif isinstance(value, float):
            token = repr(value)
        else:
            token = str(value)
        lines.append(f"{key}={token}")
    return "\n".join(lines) + "\n"


@dataclass(slots=True)
class RunManifest:
    """Plain-text record of one pipeline run.

    The config snapshot plus the corpus fingerprint pin down the run
    exactly; stage timings are informational and excluded from any
    byte-for-byte comparison of run outputs.
    """

    tool_version: str = __version__
    status: str = "running"
    error: str = ""
    config_text: str = ""
    corpus: CorpusManifest | None = None
    retained_columns: tuple[str, ...] = ()
    filtered_rows: int = 0
    rebalanced_rows: int = 0
    split_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    models: dict[str, dict[str, object]] = field(default_factory=dict)
    diagnoses: dict[str, str] = field(default_factory=dict)
    report_paths: tuple[str, ...] = ()
    stage_seconds: dict[str, float] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            "manifest_version=1",
            f"tool=pairlink {self.tool_version}",
            f"status={self.status}",
        ]
        if self.error:
            lines.append(f"error={self.error}")
        for stage, secs in self.stage_seconds.items():
            lines.append(f"stage.{stage}.seconds={secs:.3f}")
        for line in self.config_text.splitlines():
            lines.append(f"config.{line}")
        if self.corpus is not None:
            lines.append(f"corpus.files={len(self.corpus.file_names)}")
            lines.append(f"corpus.total_rows={self.corpus.total_rows}")
            lines.append(f"corpus.header_fingerprint={self.corpus.header_fingerprint}")
        if self.retained_columns:
            lines.append(f"preprocess.retained_columns={','.join(self.retained_columns)}")
            lines.append(f"preprocess.filtered_rows={self.filtered_rows}")
        if self.rebalanced_rows:
            lines.append(f"sample.rebalanced_rows={self.rebalanced_rows}")
        for split, counts in self.split_counts.items():
            for key, count in counts.items():
                lines.append(f"split.{split}.{key}={count}")
        for name, meta in self.models.items():
            for key, value in meta.items():
                lines.append(f"model.{name}.{key}={value}")
        for name, status in self.diagnoses.items():
            lines.append(f"diagnosis.{name}={status}")
        for p in self.report_paths:
            lines.append(f"report={p}")
        return "\n".join(lines) + "\n"


class _StageClock:
    """Times pipeline stages and converts failures into stage errors."""

    def __init__(self, manifest: RunManifest, progress: Callable[[str], None] | None):
        self.manifest = manifest
        self.progress = progress
        self.stage = ""
        self._start = 0.0

    def __call__(self, stage: str) -> "_StageClock":
        self.stage = stage
        return self

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self._start
        self.manifest.stage_seconds[self.stage] = elapsed
        if exc is None:
            if self.progress is not None:
                self.progress(f"stage {self.stage}: done in {elapsed:.2f}s")
            return False
        self.manifest.status = "failed"
        self.manifest.error = f"stage '{self.stage}': {exc}"
        raise PipelineStageError(self.stage, exc) from exc


def run_pipeline(
    config: PipelineConfig,
    progress: Callable[[str], None] | None = None,
) -> tuple[RunManifest, dict[str, FitDiagnosis]]:
    """Execute every stage over the corpus under config.input_dir.

    Returns the manifest and the per-model fit diagnoses. All artifacts,
    including a manifest for failed runs, land under config.output_dir:
    corpus.txt, preprocess.txt, splits.txt, <model>.model, report.csv,
    report.txt, manifest.txt.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_text=config_to_text(config))
    clock = _StageClock(manifest, progress)
    diagnoses: dict[str, FitDiagnosis] = {}
    try:
        with clock("ingest"):
            table, corpus = load_corpus(
                config.input_dir,
                config.pattern,
                missing_token=config.missing_token,
                partitions=config.partitions,
                workers=config.workers,
            )
            table = table.cache()
            manifest.corpus = corpus
            (out_dir / "corpus.txt").write_text(corpus.to_text(), encoding="utf-8")

        with clock("preprocess"):
            profiles = profile_columns(table)
            retained = select_columns(
                profiles, config.col_missing_max, strict=config.col_missing_strict
            )
            full = filter_rows(table, retained, config.row_min_present)
            manifest.retained_columns = tuple(retained)
            manifest.filtered_rows = len(full)
            (out_dir / "preprocess.txt").write_text(
                preprocess_report(profiles, retained, len(full)), encoding="utf-8"
            )
            del table

        with clock("sample"):
            plan = config.plan()
            rebalanced = rebalance_negatives(full, plan.negative_fraction, plan.seed)
            manifest.rebalanced_rows = len(rebalanced)
            del full
            split = stratified_split(rebalanced, plan)
            (out_dir / "splits.txt").write_text(split_report(split, plan), encoding="utf-8")
            for name, counts in split.class_counts.items():
                manifest.split_counts[name] = {
                    "positives": counts.get(True, 0),
                    "negatives": counts.get(False, 0),
                    "total": counts.get(True, 0) + counts.get(False, 0),
                }

        with clock("vectorize"):
            columns = tuple(retained)
            train_fm = impute_and_vectorize(split.train, columns, config.impute)
            split_matrices = {"train": train_fm}
            for name in ("validation", "test"):
                split_matrices[name] = impute_and_vectorize(
                    split.splits()[name], columns, config.impute, means=train_fm.means
                )

        with clock("train"):
            trained = {}
            for kind in MODEL_KINDS:
                model = train(train_fm, config.train_config(kind))
                path = out_dir / f"{kind}.model"
                save_model(model, path)
                trained[kind] = model
                manifest.models[kind] = {
                    "path": path.name,
                    "epochs_run": model.epochs_run,
                    "converged": str(model.converged).lower(),
                    "final_loss": repr(model.final_loss),
                }

        with clock("evaluate"):
            reports = []
            by_split: dict[str, dict[str, object]] = {k: {} for k in MODEL_KINDS}
            for kind in MODEL_KINDS:
                for split_name in SPLIT_ORDER:
                    fm = split_matrices[split_name]
                    labels, _ = predict(trained[kind], fm)
                    report = metrics(confusion(labels, fm.y), model=kind, split=split_name)
                    reports.append(report)
                    by_split[kind][split_name] = report
                diagnoses[kind] = fit_diagnosis(
                    by_split[kind]["train"],
                    by_split[kind]["validation"],
                    by_split[kind]["test"],
                    gap_threshold=config.gap_threshold,
                    underfit_floor=config.underfit_floor,
                )
                manifest.diagnoses[kind] = diagnoses[kind].status

        with clock("report"):
            csv_path = out_dir / "report.csv"
            text_path = out_dir / "report.txt"
            emit_report(reports, csv_path, "csv")
            emit_report(reports, text_path, "text", diagnoses=list(diagnoses.values()))
            manifest.report_paths = (csv_path.name, text_path.name)

        manifest.status = "ok"
    finally:
        (out_dir / "manifest.txt").write_text(manifest.to_text(), encoding="utf-8")
    return manifest, diagnoses
