"""ICDR 5-point diabetic retinopathy grading scale and related utilities."""

from __future__ import annotations

import enum

GRADE_VALUES = (0, 1, 2, 3, 4)

STAGE_NAMES = {
    0: "No Apparent DR",
    1: "Mild Nonproliferative DR",
    2: "Moderate Nonproliferative DR",
    3: "Severe Nonproliferative DR",
    4: "Proliferative DR",
}


class InvalidGradeError(ValueError):
    """Raised when a value outside {0..4} is used as a DR grade."""


class Grade(int):
    """DR stage on the ICDR 5-point scale. Only the integers 0-4 are valid."""

    def __new__(cls, value) -> "Grade":
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidGradeError(f"grade must be an integer, got {value!r}")
        if value not in GRADE_VALUES:
            raise InvalidGradeError(f"grade must be in 0..4, got {value}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"Grade({int(self)})"


class BinaryLabel(enum.Enum):
    DR_NEGATIVE = "DR-negative"
    DR_POSITIVE = "DR-positive"


def to_binary(g: Grade) -> BinaryLabel:
    """Collapse a grade to the screening label: 0 is negative, 1-4 positive."""
    g = Grade(g)
    return BinaryLabel.DR_NEGATIVE if g == 0 else BinaryLabel.DR_POSITIVE


def grade_distance(a: Grade, b: Grade) -> int:
    """Absolute difference between two grades."""
    return abs(int(Grade(a)) - int(Grade(b)))


def stage_name(g: Grade) -> str:
    """Human-readable ICDR stage name for a grade."""
    return STAGE_NAMES[int(Grade(g))]
