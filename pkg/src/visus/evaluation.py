"""Confusion matrices, per-class precision/recall/F1, and macro-average F1.

Class display order is fixed to (Winner, Loser, Stabilizer) so that report
files are byte-stable. Degenerate 0/0 ratios are defined as 0 and flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cohort import WslLabel

CLASS_ORDER = (WslLabel.WINNER, WslLabel.LOSER, WslLabel.STABILIZER)
_CLASS_INDEX = {lbl: i for i, lbl in enumerate(CLASS_ORDER)}


@dataclass
class ConfusionMatrix:
    """3x3 raw counts; rows are ground truth, columns predictions."""

    counts: list  # list[list[int]]

    @classmethod
    def zero(cls) -> "ConfusionMatrix":
        return cls([[0, 0, 0] for _ in range(3)])

    @classmethod
    def from_counts(cls, rows) -> "ConfusionMatrix":
        rows = [list(map(int, r)) for r in rows]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("confusion matrix must be 3x3")
        if any(v < 0 for r in rows for v in r):
            raise ValueError("confusion matrix counts must be nonnegative")
        return cls(rows)

    def add(self, truth: WslLabel, pred: WslLabel) -> None:
        self.counts[_CLASS_INDEX[truth]][_CLASS_INDEX[pred]] += 1

    @property
    def total(self) -> int:
        return sum(sum(r) for r in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(3))

    def row_total(self, i: int) -> int:
        return sum(self.counts[i])

    def col_total(self, j: int) -> int:
        return sum(r[j] for r in self.counts)


def confusion(pred_labels, truth_labels) -> ConfusionMatrix:
    """Count (truth, prediction) pairs from two aligned label lists."""
    if len(pred_labels) != len(truth_labels):
        raise ValueError(
            f"prediction/truth length mismatch: {len(pred_labels)} vs {len(truth_labels)}"
        )
    matrix = ConfusionMatrix.zero()
    for pred, truth in zip(pred_labels, truth_labels):
        matrix.add(truth, pred)
    return matrix


@dataclass
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    pro_rata: float
    degenerate: bool = False


@dataclass
class MetricsReport:
    per_class: list  # list[ClassMetrics] in CLASS_ORDER
    macro_f1: float
    true_positives: int
    true_positive_rate: float
    total: int
    matrix: ConfusionMatrix = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "classes": {
                m.label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "pro_rata": m.pro_rata,
                    "degenerate": m.degenerate,
                }
                for m in self.per_class
            },
            "macro_f1": self.macro_f1,
            "true_positives": self.true_positives,
            "true_positive_rate": self.true_positive_rate,
            "total": self.total,
            "matrix": self.matrix.counts if self.matrix else None,
        }


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


def metrics(matrix: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 plus macro F1 and trace accuracy."""
    total = matrix.total
    per_class = []
    f1s = []
    for i, lbl in enumerate(CLASS_ORDER):
        tp = matrix.counts[i][i]
        precision, deg_p = _safe_div(tp, matrix.col_total(i))
        recall, deg_r = _safe_div(tp, matrix.row_total(i))
        f1, deg_f = _safe_div(2 * precision * recall, precision + recall)
        support = matrix.row_total(i)
        pro_rata, _ = _safe_div(support, total)
        per_class.append(
            ClassMetrics(
                label=lbl.value,
                precision=precision,
                recall=recall,
                f1=f1,
                support=support,
                pro_rata=pro_rata,
                degenerate=deg_p or deg_r or deg_f,
            )
        )
        f1s.append(f1)
    macro_f1 = sum(f1s) / len(f1s)
    tp_rate, _ = _safe_div(matrix.trace, total)
    return MetricsReport(
        per_class=per_class,
        macro_f1=macro_f1,
        true_positives=matrix.trace,
        true_positive_rate=tp_rate,
        total=total,
        matrix=matrix,
    )


@dataclass
class Comparison:
    """Model and expert reports computed on the identical index set."""

    model_report: MetricsReport
    expert_report: MetricsReport
    common_keys: list
    excluded_model_keys: list
    excluded_expert_keys: list
    disagreements: list  # keys where model label != expert label

    def to_dict(self) -> dict:
        return {
            "model": self.model_report.to_dict(),
            "expert": self.expert_report.to_dict(),
            "evaluated": len(self.common_keys),
            "excluded_model_only": [list(k) for k in self.excluded_model_keys],
            "excluded_expert_only": [list(k) for k in self.excluded_expert_keys],
            "disagreements": [list(k) for k in self.disagreements],
        }


def compare(model_results: dict, expert_results: dict, truth: dict) -> Comparison:
    """Score model and expert against truth on their shared evaluation keys.

    All three arguments map an evaluation key, conventionally
    (pseudo_id, eye, examination_index), to a WslLabel. Keys missing from
    either prediction side are excluded from both reports.
    """
    common = sorted(set(model_results) & set(expert_results) & set(truth))
    model_labels = [model_results[k] for k in common]
    expert_labels = [expert_results[k] for k in common]
    truth_labels = [truth[k] for k in common]
    model_report = metrics(confusion(model_labels, truth_labels))
    expert_report = metrics(confusion(expert_labels, truth_labels))
    disagreements = [
        k for k, m, e in zip(common, model_labels, expert_labels) if m != e
    ]
    return Comparison(
        model_report=model_report,
        expert_report=expert_report,
        common_keys=common,
        excluded_model_keys=sorted(set(truth) - set(model_results)),
        excluded_expert_keys=sorted(set(truth) - set(expert_results)),
        disagreements=disagreements,
    )


def format_report(report: MetricsReport, title: str = "") -> str:
    """Plain-text table: per-class counts, pro-rata shares, P/R, macro F1."""
    lines = []
    if title:
        lines.append(title)
    header = f"{'':12s} {'Winner':>8s} {'Loser':>8s} {'Stabilizer':>10s} {'Total':>7s} {'Pro rata':>9s} {'Precision':>10s} {'Recall':>8s}"
    lines.append(header)
    m = report.matrix
    for i, cm in enumerate(report.per_class):
        row = m.counts[i] if m else ["-"] * 3
        lines.append(
            f"{cm.label:12s} {row[0]:>8d} {row[1]:>8d} {row[2]:>10d} "
            f"{cm.support:>7d} {100 * cm.pro_rata:>8.1f}% {100 * cm.precision:>9.1f}% {100 * cm.recall:>7.1f}%"
        )
    lines.append(
        f"{'True positives':20s} {report.true_positives} ({100 * report.true_positive_rate:.1f}%) of {report.total}"
    )
    lines.append(f"{'Macro average F1':20s} {100 * report.macro_f1:.1f}%")
    return "\n".join(lines)
