"""Micro and macro F1 scoring and multi-run aggregation.

For single-label multi-class prediction over a fully labeled set, micro
F1 equals accuracy; macro F1 is the unweighted mean over all classes,
including classes absent from the gold labels (their F1 is 0). 0/0
precision or recall is defined as 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ClassScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Metrics:
    micro_f1: float
    macro_f1: float
    per_class: tuple[ClassScore, ...]

    def to_record(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class": [
                {"precision": c.precision, "recall": c.recall, "f1": c.f1}
                for c in self.per_class
            ],
        }


def _safe_div(num: float, den: float) -> float:
    return 0.0 if den == 0 else num / den


def score(preds, golds, num_classes: int) -> Metrics:
    """Confusion-matrix precision/recall/F1 per class, pooled micro, unweighted macro."""
    if len(preds) != len(golds):
        raise ValidationError(f"{len(preds)} predictions vs {len(golds)} golds")
    if len(preds) == 0:
        raise ValidationError("cannot score an empty prediction list")
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    for name, arr in (("prediction", preds), ("gold", golds)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValidationError(f"{name} index out of range [0, {num_classes})")

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (golds, preds), 1)

    per_class = []
    tp_total = fp_total = fn_total = 0
    for c in range(num_classes):
        tp = int(confusion[c, c])
        fp = int(confusion[:, c].sum()) - tp
        fn = int(confusion[c, :].sum()) - tp
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class.append(ClassScore(precision=precision, recall=recall, f1=f1))
        tp_total += tp
        fp_total += fp
        fn_total += fn

    micro_p = _safe_div(tp_total, tp_total + fp_total)
    micro_r = _safe_div(tp_total, tp_total + fn_total)
    micro_f1 = _safe_div(2 * micro_p * micro_r, micro_p + micro_r)
    macro_f1 = sum(c.f1 for c in per_class) / num_classes
    return Metrics(micro_f1=micro_f1, macro_f1=macro_f1, per_class=tuple(per_class))


@dataclass(frozen=True)
class RunAggregate:
    micro_mean: float
    micro_std: float | None
    macro_mean: float
    macro_std: float | None
    runs: int


def aggregate_runs(metrics_list) -> RunAggregate:
    """Arithmetic mean and sample (n-1) standard deviation over runs.

    With a single run the standard deviation is undefined and reported
    as None.
    """
    if not metrics_list:
        raise ValidationError("aggregate_runs needs at least one run")
    micro = [m.micro_f1 for m in metrics_list]
    macro = [m.macro_f1 for m in metrics_list]
    n = len(metrics_list)

    def _std(values):
        if n < 2:
            return None
        mean = sum(values) / n
        return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))

    return RunAggregate(
        micro_mean=sum(micro) / n,
        micro_std=_std(micro),
        macro_mean=sum(macro) / n,
        macro_std=_std(macro),
        runs=n,
    )


def format_metrics_report(metrics: Metrics) -> str:
    """Aligned plain-text table of the overall and per-class scores."""
    lines = [
        f"{'metric':<12}{'value':>8}",
        f"{'micro_f1':<12}{metrics.micro_f1:>8.4f}",
        f"{'macro_f1':<12}{metrics.macro_f1:>8.4f}",
        "",
        f"{'class':<8}{'precision':>10}{'recall':>8}{'f1':>8}",
    ]
    for idx, c in enumerate(metrics.per_class):
        lines.append(f"{idx:<8}{c.precision:>10.4f}{c.recall:>8.4f}{c.f1:>8.4f}")
    return "\n".join(lines) + "\n"


def format_run_aggregate(agg: RunAggregate) -> str:
    """Mean / standard-deviation block over independent runs."""

    def fmt(v):
        return "   n/a" if v is None else f"{v:.4f}"

    lines = [
        f"runs: {agg.runs}",
        f"{'':<10}{'mean':>8}{'std':>8}",
        f"{'micro_f1':<10}{agg.micro_mean:>8.4f}{fmt(agg.micro_std):>8}",
        f"{'macro_f1':<10}{agg.macro_mean:>8.4f}{fmt(agg.macro_std):>8}",
    ]
    return "\n".join(lines) + "\n"


def write_metrics(metrics: Metrics, path) -> None:
    Path(path).write_text(
        json.dumps(metrics.to_record(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_run_records(path) -> list[Metrics]:
    """Load a runs file: one metrics record per line."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            rec = json.loads(raw)
            per_class = tuple(
                ClassScore(c["precision"], c["recall"], c["f1"])
                for c in rec.get("per_class", [])
            )
            out.append(
                Metrics(
                    micro_f1=float(rec["micro_f1"]),
                    macro_f1=float(rec["macro_f1"]),
                    per_class=per_class,
                )
            )
    return out
