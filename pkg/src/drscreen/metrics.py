"""Clinical evaluation metrics: confusion matrix, overall/binary accuracy,
sensitivity/specificity, classwise accuracy, within-k grade rates, ROC, AUC.

Rates are computed in full precision and only rounded at presentation.
A metric whose denominator is zero is reported as None (undefined), never 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .grading import Grade, BinaryLabel, to_binary, grade_distance

NUM_GRADES = 5


class DataError(ValueError):
    """Raised for empty or single-class inputs where a metric is undefined."""


@dataclass(frozen=True)
class LabeledPrediction:
    true_grade: Grade
    predicted_grade: Grade
    dr_score: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "true_grade", Grade(self.true_grade))
        object.__setattr__(self, "predicted_grade", Grade(self.predicted_grade))
        if not 0.0 <= self.dr_score <= 1.0:
            raise ValueError(f"dr_score must be in [0,1], got {self.dr_score}")


@dataclass
class EvaluationReport:
    confusion: list[list[int]]
    overall_accuracy: float
    binary_accuracy: float | None
    sensitivity: float | None
    specificity: float | None
    classwise_accuracy: list[float | None]
    within_k: dict[int, float]
    roc_points: list[tuple[float, float]] | None
    auc: float | None
    n_images: int
    n_patients: int | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion,
            "overall_accuracy": self.overall_accuracy,
            "binary_accuracy": self.binary_accuracy,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "classwise_accuracy": self.classwise_accuracy,
            "within_k": {str(k): v for k, v in self.within_k.items()},
            "roc_points": self.roc_points,
            "auc": self.auc,
            "n_images": self.n_images,
            "n_patients": self.n_patients,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            confusion=[list(row) for row in d["confusion"]],
            overall_accuracy=d["overall_accuracy"],
            binary_accuracy=d["binary_accuracy"],
            sensitivity=d["sensitivity"],
            specificity=d["specificity"],
            classwise_accuracy=list(d["classwise_accuracy"]),
            within_k={int(k): v for k, v in d["within_k"].items()},
            roc_points=[tuple(p) for p in d["roc_points"]] if d.get("roc_points") else None,
            auc=d.get("auc"),
            n_images=d["n_images"],
            n_patients=d.get("n_patients"),
            notes=list(d.get("notes", [])),
        )


def _require_nonempty(pairs) -> None:
    if not pairs:
        raise DataError("metric requires a non-empty list of predictions")


def confusion_matrix(pairs: list[LabeledPrediction]) -> list[list[int]]:
    """5x5 counts; entry (i, j) is true grade i predicted as j."""
    _require_nonempty(pairs)
    mat = [[0] * NUM_GRADES for _ in range(NUM_GRADES)]
    for p in pairs:
        mat[int(p.true_grade)][int(p.predicted_grade)] += 1
    return mat


def overall_accuracy(pairs: list[LabeledPrediction]) -> float:
    """Percentage of exact-grade matches."""
    _require_nonempty(pairs)
    correct = sum(1 for p in pairs if p.true_grade == p.predicted_grade)
    return 100.0 * correct / len(pairs)


def classwise_accuracy(pairs: list[LabeledPrediction]) -> list[float | None]:
    """Per-true-grade accuracy; None for grades with no samples."""
    _require_nonempty(pairs)
    totals = [0] * NUM_GRADES
    correct = [0] * NUM_GRADES
    for p in pairs:
        totals[int(p.true_grade)] += 1
        if p.true_grade == p.predicted_grade:
            correct[int(p.true_grade)] += 1
    return [correct[g] / totals[g] if totals[g] else None for g in range(NUM_GRADES)]


def binary_metrics(pairs: list[LabeledPrediction]) -> dict[str, float | None]:
    """Collapse to DR-positive/negative and report accuracy/sens/spec (%)."""
    _require_nonempty(pairs)
    tp = fn = tn = fp = 0
    for p in pairs:
        truth_pos = to_binary(p.true_grade) is BinaryLabel.DR_POSITIVE
        pred_pos = to_binary(p.predicted_grade) is BinaryLabel.DR_POSITIVE
        if truth_pos:
            tp += pred_pos
            fn += not pred_pos
        else:
            tn += not pred_pos
            fp += pred_pos
    return {
        "binary_accuracy": 100.0 * (tp + tn) / len(pairs),
        "sensitivity": 100.0 * tp / (tp + fn) if tp + fn else None,
        "specificity": 100.0 * tn / (tn + fp) if tn + fp else None,
    }


def within_k_rate(pairs: list[LabeledPrediction], k: int) -> float:
    """Percentage of pairs whose grade distance is at most k."""
    _require_nonempty(pairs)
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    hits = sum(1 for p in pairs if grade_distance(p.true_grade, p.predicted_grade) <= k)
    return 100.0 * hits / len(pairs)


def roc_curve(pairs: list[LabeledPrediction]) -> list[tuple[float, float]]:
    """Binary ROC over dr_score thresholds (positive when score >= threshold).

    Includes the (0,0) and (1,1) endpoints; points sorted by FPR then TPR.
    """
    _require_nonempty(pairs)
    labels = [to_binary(p.true_grade) is BinaryLabel.DR_POSITIVE for p in pairs]
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC requires at least one positive and one negative sample")
    points = {(0.0, 0.0), (1.0, 1.0)}
    for threshold in {p.dr_score for p in pairs}:
        tp = sum(1 for p, pos in zip(pairs, labels) if pos and p.dr_score >= threshold)
        fp = sum(1 for p, pos in zip(pairs, labels) if not pos and p.dr_score >= threshold)
        points.add((fp / n_neg, tp / n_pos))
    return sorted(points)


def auc(points: list[tuple[float, float]]) -> float:
    """Trapezoidal area under an ROC point list over FPR in [0, 1]."""
    if not points:
        raise DataError("cannot integrate an empty ROC curve")
    pts = sorted(points)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def build_report(pairs: list[LabeledPrediction], n_patients: int | None = None) -> EvaluationReport:
    """Assemble every metric into one report; undefined values stay None."""
    _require_nonempty(pairs)
    notes = []
    binary = binary_metrics(pairs)
    try:
        roc = roc_curve(pairs)
        area = auc(roc)
    except DataError as exc:
        roc, area = None, None
        notes.append(f"ROC/AUC undefined: {exc}")
    cls_acc = classwise_accuracy(pairs)
    for g, acc in enumerate(cls_acc):
        if acc is None:
            notes.append(f"no samples with true grade {g}; classwise accuracy undefined")
    if binary["sensitivity"] is None:
        notes.append("no DR-positive ground truth; sensitivity undefined")
    if binary["specificity"] is None:
        notes.append("no DR-negative ground truth; specificity undefined")
    return EvaluationReport(
        confusion=confusion_matrix(pairs),
        overall_accuracy=overall_accuracy(pairs),
        binary_accuracy=binary["binary_accuracy"],
        sensitivity=binary["sensitivity"],
        specificity=binary["specificity"],
        classwise_accuracy=cls_acc,
        within_k={k: within_k_rate(pairs, k) for k in range(NUM_GRADES)},
        roc_points=roc,
        auc=area,
        n_images=len(pairs),
        n_patients=n_patients,
        notes=notes,
    )


# --- serialization ----------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.2f}"


def report_to_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_dict(), indent=2)


def report_from_json(text: str) -> EvaluationReport:
    return EvaluationReport.from_dict(json.loads(text))


def render_report(report: EvaluationReport, title: str = "Evaluation") -> str:
    """Human-readable summary mirroring the published results-table layout."""
    lines = [title, "=" * len(title), ""]
    lines.append(f"Images: {report.n_images}")
    if report.n_patients is not None:
        lines.append(f"Patients: {report.n_patients}")
    lines.append("")
    for label, value in [
        ("Overall Accuracy", report.overall_accuracy),
        ("Binary Accuracy", report.binary_accuracy),
        ("Sensitivity", report.sensitivity),
        ("Specificity", report.specificity),
    ]:
        lines.append(f"{label:<20} {_fmt(value)}")
    lines.append("")
    lines.append("Within-k grade rates:")
    for k in sorted(report.within_k):
        lines.append(f"  within {k}: {_fmt(report.within_k[k])}")
    lines.append("")
    lines.append("Classwise accuracy:")
    for g, acc in enumerate(report.classwise_accuracy):
        shown = "undefined" if acc is None else f"{100.0 * acc:.2f}"
        lines.append(f"  grade {g}: {shown}")
    if report.auc is not None:
        lines.append("")
        lines.append(f"AUC: {report.auc:.4f}")
    if report.notes:
        lines.append("")
        lines.append("Notes:")
        lines.extend(f"  - {n}" for n in report.notes)
    lines.append("")
    lines.append("Confusion matrix (rows: true grade, cols: predicted):")
    for row in report.confusion:
        lines.append("  " + " ".join(f"{c:5d}" for c in row))
    return "\n".join(lines) + "\n"


def classwise_plot_data(report: EvaluationReport) -> str:
    """CSV of per-grade accuracy bars; undefined classes have empty cells."""
    lines = ["grade,accuracy"]
    for g, acc in enumerate(report.classwise_accuracy):
        lines.append(f"{g},{'' if acc is None else repr(acc)}")
    return "\n".join(lines) + "\n"


def roc_plot_data(report: EvaluationReport) -> str:
    """CSV of ROC points (false-positive rate, true-positive rate)."""
    lines = ["fpr,tpr"]
    for fpr, tpr in report.roc_points or []:
        lines.append(f"{fpr!r},{tpr!r}")
    return "\n".join(lines) + "\n"
