"""Manifest ingestion: training manifests (id_code,diagnosis CSV) and
validation-study manifests carrying specialist grades, confidence ratings
and optional per-image crop rectangles."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .grading import Grade, InvalidGradeError
from .imaging import CropRect, ImageDecodeError, decode_image

RASTER_EXTENSIONS = (".png", ".jpg", ".jpeg")


class ManifestError(ValueError):
    """Raised for structurally invalid manifests (columns, ranges, duplicates)."""


@dataclass(frozen=True)
class TrainingRecord:
    image_id: str
    image_path: Path
    diagnosis: Grade


@dataclass(frozen=True)
class ValidationRecord:
    image_id: str
    image_path: Path
    specialist_grade: Grade
    confidence: int
    patient_code: str
    eye: str | None = None
    crop: CropRect | None = None


@dataclass
class DatasetSummary:
    total: int
    train: int | None = None
    test: int | None = None
    per_grade: list[int] = field(default_factory=lambda: [0] * 5)


@dataclass
class VerificationReport:
    per_grade: list[int]
    issues: list[str]
    notes: list[str]


def _find_image(image_dir: Path, image_id: str) -> Path | None:
    for ext in RASTER_EXTENSIONS:
        candidate = image_dir / f"{image_id}{ext}"
        if candidate.exists():
            return candidate
    return None


def _parse_grade(raw: str, row_num: int, path) -> Grade:
    try:
        return Grade(int(raw))
    except (ValueError, InvalidGradeError):
        raise ManifestError(f"{path}, row {row_num}: invalid grade {raw!r}") from None


def load_training_manifest(csv_path, image_dir, fail_fast: bool = True
                           ) -> tuple[list[TrainingRecord], DatasetSummary]:
    """Parse an id_code,diagnosis manifest, resolving images under image_dir.

    With fail_fast (default), a missing image file aborts with an error;
    otherwise missing files are collected and reported together.
    """
    csv_path, image_dir = Path(csv_path), Path(image_dir)
    records: list[TrainingRecord] = []
    missing: list[str] = []
    summary = DatasetSummary(total=0)
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id_code", "diagnosis"} <= set(reader.fieldnames):
            raise ManifestError(
                f"{csv_path}: manifest must have id_code and diagnosis columns, "
                f"got {reader.fieldnames}"
            )
        for row_num, row in enumerate(reader, start=2):
            grade = _parse_grade(row["diagnosis"], row_num, csv_path)
            path = _find_image(image_dir, row["id_code"])
            if path is None:
                msg = f"{csv_path}, row {row_num}: no image for id {row['id_code']!r}"
                if fail_fast:
                    raise ManifestError(msg)
                missing.append(msg)
                continue
            records.append(TrainingRecord(row["id_code"], path, grade))
            summary.per_grade[int(grade)] += 1
    summary.total = len(records)
    if missing:
        raise ManifestError("missing image files:\n" + "\n".join(missing))
    return records, summary


def load_validation_manifest(csv_path, image_dir) -> list[ValidationRecord]:
    """Parse a validation-study manifest with grades, confidence and crops."""
    csv_path, image_dir = Path(csv_path), Path(image_dir)
    required = {"image_id", "patient_code", "grade", "confidence"}
    records: list[ValidationRecord] = []
    seen: set[str] = set()
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ManifestError(
                f"{csv_path}: manifest must have columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row_num, row in enumerate(reader, start=2):
            image_id = row["image_id"]
            if image_id in seen:
                raise ManifestError(f"{csv_path}, row {row_num}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            grade = _parse_grade(row["grade"], row_num, csv_path)
            try:
                confidence = int(row["confidence"])
            except ValueError:
                confidence = -1
            if not 1 <= confidence <= 5:
                raise ManifestError(
                    f"{csv_path}, row {row_num}: confidence must be 1-5, "
                    f"got {row['confidence']!r}"
                )
            eye = row.get("eye") or None
            if eye is not None and eye not in ("left", "right"):
                raise ManifestError(f"{csv_path}, row {row_num}: eye must be left/right, got {eye!r}")
            crop = None
            crop_fields = [row.get(k) for k in ("crop_x", "crop_y", "crop_side")]
            if any(crop_fields):
                if not all(crop_fields):
                    raise ManifestError(
                        f"{csv_path}, row {row_num}: crop_x/crop_y/crop_side must "
                        f"be given together"
                    )
                crop = CropRect(x=int(crop_fields[0]), y=int(crop_fields[1]),
                                side=int(crop_fields[2]))
            path = _find_image(image_dir, image_id)
            if path is None:
                raise ManifestError(f"{csv_path}, row {row_num}: no image for id {image_id!r}")
            records.append(ValidationRecord(
                image_id=image_id, image_path=path, specialist_grade=grade,
                confidence=confidence, patient_code=row["patient_code"],
                eye=eye, crop=crop,
            ))
    return records


def verify_dataset(records, min_side: int = 224) -> VerificationReport:
    """Decode every image and report unreadable files and per-grade counts."""
    per_grade = [0] * 5
    issues: list[str] = []
    notes: list[str] = []
    for rec in records:
        grade = rec.diagnosis if isinstance(rec, TrainingRecord) else rec.specialist_grade
        per_grade[int(grade)] += 1
        try:
            img = decode_image(Path(rec.image_path).read_bytes())
        except (OSError, ImageDecodeError) as exc:
            issues.append(f"{rec.image_path}: {exc}")
            continue
        if min(img.shape[:2]) < min_side:
            notes.append(
                f"{rec.image_path}: smaller than {min_side}px "
                f"({img.shape[0]}x{img.shape[1]}); will be upsampled"
            )
    for g, count in enumerate(per_grade):
        if count == 0:
            notes.append(f"no images with grade {g}; classwise reporting will be undefined")
    return VerificationReport(per_grade=per_grade, issues=issues, notes=notes)


def render_verification(report: VerificationReport) -> str:
    lines = ["Dataset verification", "===================="]
    lines.append("Per-grade counts: " + " ".join(
        f"{g}:{c}" for g, c in enumerate(report.per_grade)))
    lines.append(f"Issues: {len(report.issues)}")
    lines.extend(f"  - {i}" for i in report.issues)
    if report.notes:
        lines.append("Notes:")
        lines.extend(f"  - {n}" for n in report.notes)
    return "\n".join(lines) + "\n"
