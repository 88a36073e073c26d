"""Confusion matrices, classification metrics, fit diagnosis, and reports.

Metric values are computed exactly and carried as floats; anything with a
zero denominator becomes an explicit None marker that renders as an empty
CSV cell or the word "undefined", never as 0.0 or NaN. Display strings
truncate (round toward zero) at four decimals: reference result tables for
this kind of pipeline print truncated digits, so 0.94715 renders as 0.9471,
and truncated display equality is the reproduction standard used in tests.

The confusion matrix is laid out [[tp, fp], [fn, tn]]: rows are predicted
positive/negative, columns are actual positive/negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError, InvalidInputError, ShapeError

__all__ = [
    "ConfusionMatrix",
    "MetricsReport",
    "FitDiagnosis",
    "confusion",
    "metrics",
    "format_metric",
    "fit_diagnosis",
    "render_csv",
    "render_text",
    "emit_report",
    "parse_report_csv",
    "CSV_HEADER",
]

CSV_HEADER = "model,split,tp,fp,fn,tn,accuracy,precision,recall,f1"
METRIC_FIELDS = ("accuracy", "precision", "recall", "f1")


@dataclass(slots=True, frozen=True)
class ConfusionMatrix:
    """Counts of a binary classifier's outcomes."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise InvalidInputError(f"{name} must be a non-negative integer, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_rows(self) -> list[list[int]]:
        """[[tp, fp], [fn, tn]]: rows predicted +/-, columns actual +/-."""
        return [[self.tp, self.fp], [self.fn, self.tn]]


@dataclass(slots=True)
class MetricsReport:
    """Metrics for one (model, split); None means undefined, not zero."""

    model: str
    split: str
    matrix: ConfusionMatrix | None
    accuracy: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None


@dataclass(slots=True)
class FitDiagnosis:
    """Outcome of comparing one model's F1 across splits."""

    status: str  # WELL_FIT | OVERFIT | UNDERFIT | INDETERMINATE
    gaps: dict[str, float]
    reason: str


def confusion(predictions, labels) -> ConfusionMatrix:
    """Exact outcome counts for 0/1 prediction and label vectors."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise ShapeError(f"predictions shape {p.shape} != labels shape {y.shape}")
    if len(p) == 0:
        raise InvalidInputError("cannot build a confusion matrix from zero predictions")
    p = p.astype(bool)
    y = y.astype(bool)
    return ConfusionMatrix(
        tp=int(np.sum(p & y)),
        fp=int(np.sum(p & ~y)),
        fn=int(np.sum(~p & y)),
        tn=int(np.sum(~p & ~y)),
    )


def metrics(m: ConfusionMatrix, model: str = "", split: str = "") -> MetricsReport:
    """Accuracy, precision, recall, and F1; undefined stays None."""
    if m.total == 0:
        raise InvalidInputError("confusion matrix is empty")
    accuracy = (m.tp + m.tn) / m.total
    precision = m.tp / (m.tp + m.fp) if (m.tp + m.fp) > 0 else None
    recall = m.tp / (m.tp + m.fn) if (m.tp + m.fn) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsReport(
        model=model, split=split, matrix=m,
        accuracy=accuracy, precision=precision, recall=recall, f1=f1,
    )


def format_metric(value: float | None, places: int = 4, undefined: str = "") -> str:
    """Truncate to `places` decimals for display; None becomes `undefined`."""
    if value is None:
        return undefined
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(q, rounding=ROUND_DOWN))


def fit_diagnosis(
    train: MetricsReport | None,
    validation: MetricsReport | None,
    test: MetricsReport | None,
    gap_threshold: float = 0.05,
    underfit_floor: float = 0.5,
) -> FitDiagnosis:
    """Compare one model's F1 across splits.

    OVERFIT when F1 drops by more than gap_threshold from an earlier split
    to a later one (train -> validation -> test); UNDERFIT when every
    supplied split's F1 sits below the floor; INDETERMINATE when an F1 is
    undefined. At least two splits must be supplied.
    """
    named = [("train", train), ("validation", validation), ("test", test)]
    present = [(name, rep) for name, rep in named if rep is not None]
    if len(present) < 2:
        raise InvalidArgumentError("fit diagnosis needs at least two split reports")
    models = {rep.model for _, rep in present if rep.model}
    if len(models) > 1:
        raise InvalidArgumentError(
            f"fit diagnosis mixes reports from different models: {sorted(models)}"
        )
    for name, rep in present:
        if rep.f1 is None:
            return FitDiagnosis(
                "INDETERMINATE", {}, f"f1 is undefined on the {name} split"
            )
    gaps = {}
    for i in range(len(present)):
        for j in range(i + 1, len(present)):
            (a, ra), (b, rb) = present[i], present[j]
            gaps[f"{a}->{b}"] = ra.f1 - rb.f1
    worst = max(gaps, key=lambda k: gaps[k])
    if gaps[worst] > gap_threshold:
        return FitDiagnosis(
            "OVERFIT", gaps,
            f"f1 drops {gaps[worst]:.4f} from {worst.replace('->', ' to ')} "
            f"(threshold {gap_threshold})",
        )
    if all(rep.f1 < underfit_floor for _, rep in present):
        return FitDiagnosis(
            "UNDERFIT", gaps, f"every split's f1 is below {underfit_floor}"
        )
    return FitDiagnosis(
        "WELL_FIT", gaps,
        f"largest f1 drop {gaps[worst]:.4f} within threshold {gap_threshold}",
    )


def _require_matrix(report: MetricsReport) -> ConfusionMatrix:
    if report.matrix is None:
        raise InvalidInputError(
            f"report ({report.model}, {report.split}) has no confusion matrix to emit"
        )
    return report.matrix


def render_csv(reports: Sequence[MetricsReport]) -> str:
    """The report CSV; metric cells truncated at 4 decimals, undefined empty."""
    if not reports:
        raise InvalidInputError("no reports to render")
    lines = [CSV_HEADER]
    for r in reports:
        m = _require_matrix(r)
        cells = [r.model, r.split, str(m.tp), str(m.fp), str(m.fn), str(m.tn)]
        cells += [format_metric(getattr(r, f)) for f in METRIC_FIELDS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_text(
    reports: Sequence[MetricsReport],
    diagnoses: Sequence[FitDiagnosis] = (),
) -> str:
    """Aligned, human-readable metrics table plus per-report matrix blocks."""
    if not reports:
        raise InvalidInputError("no reports to render")
    headers = ["model", "split", "tp", "fp", "fn", "tn"] + list(METRIC_FIELDS)
    rows = []
    for r in reports:
        m = _require_matrix(r)
        rows.append(
            [r.model, r.split, str(m.tp), str(m.fp), str(m.fn), str(m.tn)]
            + [format_metric(getattr(r, f), undefined="undefined") for f in METRIC_FIELDS]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    out = []
    out.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    for row in rows:
        out.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
    for r in reports:
        m = _require_matrix(r)
        w = max(len(str(v)) for v in (m.tp, m.fp, m.fn, m.tn))
        out.append("")
        out.append(f"confusion matrix: {r.model} / {r.split}")
        out.append(f"{'':12}{'actual +'.rjust(w + 2)}  {'actual -'.rjust(w + 2)}")
        out.append(f"{'predicted +':12}{str(m.tp).rjust(w + 2)}  {str(m.fp).rjust(w + 2)}")
        out.append(f"{'predicted -':12}{str(m.fn).rjust(w + 2)}  {str(m.tn).rjust(w + 2)}")
    for d in diagnoses:
        out.append("")
        out.append(f"fit diagnosis: {d.status} ({d.reason})")
    return "\n".join(out) + "\n"


def emit_report(
    reports: Sequence[MetricsReport],
    path: str | Path,
    format: str = "csv",
    diagnoses: Sequence[FitDiagnosis] = (),
) -> Path:
    """Write the rendered report to `path` and return it."""
    if format == "csv":
        text = render_csv(reports)
    elif format == "text":
        text = render_text(reports, diagnoses)
    else:
        raise InvalidArgumentError(f"unknown report format {format!r}; use 'csv' or 'text'")
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path


def parse_report_csv(text: str) -> list[MetricsReport]:
    """Read a report CSV back into MetricsReports (4-decimal floats)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidInputError("not a pairlink report CSV")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != 10:
            raise InvalidInputError(f"malformed report row: {ln!r}")
        model, split, tp, fp, fn, tn = cells[:6]
        vals = [float(c) if c != "" else None for c in cells[6:]]
        out.append(
            MetricsReport(
                model=model, split=split,
                matrix=ConfusionMatrix(int(tp), int(fp), int(fn), int(tn)),
                accuracy=vals[0], precision=vals[1], recall=vals[2], f1=vals[3],
            )
        )
    return out
