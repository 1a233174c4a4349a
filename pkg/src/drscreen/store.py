"""Durable screening-record store: JSON-lines append log with an in-memory
index rebuilt on startup. Adequate for clinic-scale volume; appends are
serialized through one lock, reads go to the index."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

from .grading import Grade, stage_name
from .imaging import CropRect


class NotFoundError(KeyError):
    """Raised when a screening id is unknown."""


@dataclass
class ScreeningRecord:
    screening_id: str
    patient_code: str
    created_at: str  # RFC 3339 UTC
    probabilities: list[float]
    grade: int
    dr_positive: bool
    dr_score: float
    model_version: str
    eye: str | None = None
    crop: dict | None = None  # {x, y, side}
    technician_decision: str | None = None
    stage_name: str = ""

    def __post_init__(self):
        Grade(self.grade)
        if not self.stage_name:
            self.stage_name = stage_name(Grade(self.grade))
        if self.crop is not None:
            CropRect(**self.crop)
        assert self.dr_positive == (self.grade != 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScreeningRecord":
        return cls(**d)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class RecordStore:
    """Append-only log of screening events with last-write-wins decisions."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, ScreeningRecord] = {}
        self._order: list[str] = []
        self._replay()

    def _replay(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event["type"] == "screening":
                    rec = ScreeningRecord.from_dict(event["record"])
                    self._records[rec.screening_id] = rec
                    self._order.append(rec.screening_id)
                elif event["type"] == "decision":
                    rec = self._records.get(event["screening_id"])
                    if rec is not None:
                        rec.technician_decision = event["decision"]

    def _append(self, event: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()

    def add(self, record: ScreeningRecord) -> None:
        with self._lock:
            if record.screening_id in self._records:
                raise ValueError(f"duplicate screening id {record.screening_id}")
            self._append({"type": "screening", "record": record.to_dict()})
            self._records[record.screening_id] = record
            self._order.append(record.screening_id)

    def get(self, screening_id: str) -> ScreeningRecord:
        rec = self._records.get(screening_id)
        if rec is None:
            raise NotFoundError(screening_id)
        return rec

    def record_decision(self, screening_id: str, decision: str) -> ScreeningRecord:
        if decision not in ("refer", "monitor"):
            raise ValueError(f"decision must be refer or monitor, got {decision!r}")
        with self._lock:
            rec = self.get(screening_id)
            self._append({"type": "decision", "screening_id": screening_id,
                          "decision": decision})
            rec.technician_decision = decision
            return rec

    def list(self, patient_code: str | None = None, page: int = 1,
             page_size: int = 50) -> tuple[list[ScreeningRecord], int]:
        """Newest-first records, optionally filtered; returns (page, total)."""
        ids = reversed(self._order)
        records = [self._records[i] for i in ids]
        if patient_code is not None:
            records = [r for r in records if r.patient_code == patient_code]
        total = len(records)
        start = (page - 1) * page_size
        return records[start:start + page_size], total

    def summary(self, patient_code: str | None = None) -> dict:
        records, total = self.list(patient_code=patient_code, page=1,
                                   page_size=len(self._order) or 1)
        per_grade = [0] * 5
        patients = set()
        positives = 0
        for rec in records:
            per_grade[rec.grade] += 1
            patients.add(rec.patient_code)
            positives += rec.dr_positive
        return {
            "total_screenings": total,
            "total_patients": len(patients),
            "per_grade": per_grade,
            "dr_positive_rate": (positives / total) if total else 0.0,
        }
