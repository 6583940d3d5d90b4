"""Per-element concept differences and the 5-dim pair feature.

Numeric elements (strength, frequency, dose) differ by absolute
residual; nominal elements (unit, form) by 0/1 distinctness. Component
order is fixed: [strength, unit, frequency, form, dose].
"""

from dataclasses import dataclass

import numpy as np

from .parse import PrescriptionConcepts

DIFF_COMPONENTS = ("strength", "unit", "frequency", "form", "dose")


def numeric_diff(e1: float, e2: float) -> float:
    """Absolute residual |e1 - e2|."""
    return abs(e1 - e2)


def nominal_diff(e1, e2) -> int:
    """0 when equal, 1 otherwise."""
    return 0 if e1 == e2 else 1


@dataclass(frozen=True)
class ConceptDiffVector:
    strength_diff: float
    unit_type_diff: int
    frequency_diff: float
    form_diff: int
    dose_diff: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.strength_diff,
                float(self.unit_type_diff),
                self.frequency_diff,
                float(self.form_diff),
                self.dose_diff,
            ],
            dtype=np.float64,
        )


def assemble_diff(c1: PrescriptionConcepts, c2: PrescriptionConcepts) -> ConceptDiffVector:
    """Componentwise differences for a sentence pair."""
    return ConceptDiffVector(
        strength_diff=numeric_diff(c1.strength_value, c2.strength_value),
        unit_type_diff=nominal_diff(c1.strength_unit, c2.strength_unit),
        frequency_diff=numeric_diff(c1.frequency_per_day, c2.frequency_per_day),
        form_diff=nominal_diff(c1.form, c2.form),
        dose_diff=numeric_diff(c1.dose_amount, c2.dose_amount),
    )


class DiffScaler:
    """Per-component min-max scaling fitted on training diffs.

    Zero-range components pass through unscaled; transformed values are
    clipped to [0, 1] so unseen out-of-range diffs stay bounded.
    """

    def __init__(self):
        self.lo = None
        self.hi = None

    def fit(self, vectors) -> "DiffScaler":
        arr = np.stack([v.as_array() for v in vectors])
        self.lo = arr.min(axis=0)
        self.hi = arr.max(axis=0)
        return self

    def transform(self, vector: ConceptDiffVector) -> np.ndarray:
        if self.lo is None:
            raise RuntimeError("DiffScaler used before fit()")
        arr = vector.as_array()
        span = self.hi - self.lo
        out = arr.copy()
        nz = span > 0
        out[nz] = (arr[nz] - self.lo[nz]) / span[nz]
        return np.clip(out, 0.0, 1.0)
