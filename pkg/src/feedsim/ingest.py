"""Confusion-matrix estimation from crowdsourced annotation records.

Records pair an annotator's label with a gold-standard label per task.
Estimation drops records without gold labels, drops annotators who labeled
fewer than a minimum fraction of the distinct gold-labeled tasks, pools the
survivors into a count matrix (gold class x reported label), and normalizes
rows. Pooling is deliberate: the voting model assumes identically
distributed oracles, so one shared matrix is the estimand.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import ConfusionMatrix

CSV_FIELDS = ("task_id", "annotator_id", "label", "gold_label")


class IngestError(ValueError):
    """Annotation data cannot produce a valid confusion matrix."""


@dataclass(frozen=True)
class AnnotationRecord:
    task_id: str
    annotator_id: str
    label: int
    gold_label: int | None  # None when the task has no gold standard


@dataclass(frozen=True)
class IngestSettings:
    """Filtering and smoothing knobs for estimation.

    `min_participation` is the fraction of distinct gold-labeled tasks an
    annotator must have labeled to be kept. `smoothing` is an additive
    pseudo-count applied to every cell. `label_map` translates raw label
    strings to 1-based class indices; by default labels must already be
    integers.
    """

    min_participation: float = 0.1
    smoothing: float = 0.0
    label_map: Mapping[str, int] | None = None

    def __post_init__(self):
        if not 0.0 < self.min_participation <= 1.0:
            raise ValueError("min_participation must be in (0, 1]")
        if self.smoothing < 0:
            raise ValueError("smoothing must be non-negative")


@dataclass(frozen=True)
class IngestReport:
    """What was dropped and what the surviving pool looked like."""

    total_records: int
    records_without_gold: int
    dropped_annotators: tuple[str, ...]
    dropped_records: int
    kept_records: int
    gold_task_count: int
    min_records_required: int
    row_counts: tuple[int, ...]
    # the participation denominator is the count of distinct gold-labeled
    # tasks, not of all tasks; recorded so downstream readers see the choice
    participation_denominator: str = "distinct gold-labeled tasks"

    def to_dict(self) -> dict:
        return {
            "total_records": self.total_records,
            "records_without_gold": self.records_without_gold,
            "dropped_annotators": list(self.dropped_annotators),
            "dropped_records": self.dropped_records,
            "kept_records": self.kept_records,
            "gold_task_count": self.gold_task_count,
            "min_records_required": self.min_records_required,
            "row_counts": list(self.row_counts),
            "participation_denominator": self.participation_denominator,
        }


def _map_label(raw: str, settings: IngestSettings, num_classes: int,
               context: str) -> int:
    raw = raw.strip()
    if settings.label_map is not None:
        if raw not in settings.label_map:
            raise IngestError(f"{context}: label {raw!r} missing from label map")
        value = settings.label_map[raw]
    else:
        try:
            value = int(raw)
        except ValueError as exc:
            raise IngestError(f"{context}: label {raw!r} is not an integer") from exc
    if not 1 <= value <= num_classes:
        raise IngestError(
            f"{context}: label {value} out of range [1, {num_classes}]"
        )
    return value


def read_annotation_csv(path, settings: IngestSettings,
                        num_classes: int) -> list[AnnotationRecord]:
    """Read `task_id,annotator_id,label,gold_label` rows; empty gold = missing."""
    records = []
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_FIELDS:
            raise IngestError(
                f"annotation CSV must have header {','.join(CSV_FIELDS)}, "
                f"got {reader.fieldnames}"
            )
        for line_no, row in enumerate(reader, start=2):
            context = f"line {line_no}"
            gold_raw = (row["gold_label"] or "").strip()
            gold = (
                _map_label(gold_raw, settings, num_classes, context)
                if gold_raw
                else None
            )
            records.append(
                AnnotationRecord(
                    task_id=row["task_id"].strip(),
                    annotator_id=row["annotator_id"].strip(),
                    label=_map_label(row["label"], settings, num_classes, context),
                    gold_label=gold,
                )
            )
    return records


def estimate_confusion(
    records: Sequence[AnnotationRecord],
    settings: IngestSettings,
    num_classes: int,
) -> tuple[ConfusionMatrix, IngestReport]:
    """Pooled confusion-matrix estimate with participation filtering."""
    if num_classes < 2:
        raise IngestError("need at least two classes")
    golded = [r for r in records if r.gold_label is not None]
    gold_tasks = {r.task_id for r in golded}
    if not golded:
        raise IngestError("no records carry a gold label")
    min_required = settings.min_participation * len(gold_tasks)
    per_annotator = Counter(r.annotator_id for r in golded)
    dropped = {a for a, n in per_annotator.items() if n < min_required}
    kept = [r for r in golded if r.annotator_id not in dropped]
    if not kept:
        raise IngestError("participation filter removed every record")
    counts = np.full((num_classes, num_classes), float(settings.smoothing))
    for r in kept:
        counts[r.gold_label - 1, r.label - 1] += 1.0
    row_sums = counts.sum(axis=1)
    empty = np.flatnonzero(row_sums <= 0)
    if empty.size:
        raise IngestError(
            f"gold class {int(empty[0]) + 1} has no surviving records and no "
            "smoothing; cannot normalize its row"
        )
    matrix = ConfusionMatrix(counts / row_sums[:, None])
    raw_rows = tuple(
        int(n) for n in np.bincount(
            [r.gold_label - 1 for r in kept], minlength=num_classes
        )
    )
    report = IngestReport(
        total_records=len(records),
        records_without_gold=len(records) - len(golded),
        dropped_annotators=tuple(sorted(dropped)),
        dropped_records=len(golded) - len(kept),
        kept_records=len(kept),
        gold_task_count=len(gold_tasks),
        min_records_required=int(np.ceil(min_required)),
        row_counts=raw_rows,
    )
    return matrix, report


def synthesize_records(
    confusion: ConfusionMatrix,
    num_records: int,
    num_tasks: int,
    num_annotators: int,
    seed: int,
    low_participation_annotator: str | None = None,
    low_participation_records: int = 5,
) -> list[AnnotationRecord]:
    """Generate a synthetic annotation corpus from a known matrix.

    Gold labels are uniform over classes; labels are drawn from the matrix
    row of each task's gold label. Optionally plants one extra annotator with
    only a handful of records, for exercising the participation filter.
    """
    rng = np.random.default_rng(seed)
    k = confusion.num_classes
    gold = rng.integers(1, k + 1, size=num_tasks)
    cum = np.cumsum(confusion.entries, axis=1)
    records = []
    task_ids = rng.integers(0, num_tasks, size=num_records)
    annotators = rng.integers(0, num_annotators, size=num_records)
    uniforms = rng.random(num_records)
    for t, a, u in zip(task_ids, annotators, uniforms):
        truth = int(gold[t])
        label = int(min(np.searchsorted(cum[truth - 1], u, side="right"), k - 1)) + 1
        records.append(
            AnnotationRecord(
                task_id=f"task{t:06d}",
                annotator_id=f"worker{a:04d}",
                label=label,
                gold_label=truth,
            )
        )
    if low_participation_annotator is not None:
        for t in range(low_participation_records):
            truth = int(gold[t % num_tasks])
            records.append(
                AnnotationRecord(
                    task_id=f"task{t % num_tasks:06d}",
                    annotator_id=low_participation_annotator,
                    label=truth,
                    gold_label=truth,
                )
            )
    return records


def write_annotation_csv(records: Iterable[AnnotationRecord], path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [r.task_id, r.annotator_id, r.label,
                 "" if r.gold_label is None else r.gold_label]
            )
