"""The composite analysis dataset: trial rows plus target-population rows.

Trial rows (s=1) carry treatment and outcome; target rows (s=0) carry
covariates only, except rows explicitly flagged as control-regime outcome
rows (the `c` column), which keep y with a fixed at 0. That flag is the only
sanctioned way outcome information enters from outside the trial, and only
the relative-scale estimator consumes it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import ValidationError

DESIGNS = ("nested", "non-nested")
MISSING = -1


@dataclass(eq=False)
class CompositeDataset:
    ids: np.ndarray          # (n,) int64, unique
    x: np.ndarray            # (n, k) float64 covariates
    s: np.ndarray            # (n,) int8 trial participation
    a: np.ndarray            # (n,) int8 treatment, -1 where structurally absent
    y: np.ndarray            # (n,) int8 outcome, -1 where structurally absent
    control: np.ndarray      # (n,) uint8 control-regime outcome flag on s=0 rows
    design: str = "nested"
    _cells: tuple | None = field(default=None, repr=False, compare=False)
    _counts: np.ndarray | None = field(default=None, repr=False, compare=False)

    @staticmethod
    def make(ids, x, s, a, y, control=None, design: str = "nested",
             validate: bool = True) -> "CompositeDataset":
        ids = np.asarray(ids, dtype=np.int64)
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[0] != len(ids) and x.shape == (1, len(ids)):
            x = x.T  # 1-d covariate passed as a flat vector
        s = np.asarray(s, dtype=np.int8)
        a = np.asarray(a, dtype=np.int8)
        y = np.asarray(y, dtype=np.int8)
        if control is None:
            control = np.zeros(len(ids), dtype=np.uint8)
        control = np.asarray(control, dtype=np.uint8)
        data = CompositeDataset(ids, x, s, a, y, control, design)
        if validate:
            data.validate()
        return data

    # -- structure -----------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    @property
    def n_trial(self) -> int:
        return int(np.sum(self.s == 1))

    @property
    def n_target(self) -> int:
        return int(np.sum(self.s == 0))

    def validate(self) -> None:
        n = len(self.ids)
        for name in ("x", "s", "a", "y", "control"):
            arr = getattr(self, name)
            if arr.shape[0] != n:
                raise ValidationError(f"column {name!r} has {arr.shape[0]} rows, expected {n}")
        if n == 0:
            raise ValidationError("dataset has no rows")
        if self.design not in DESIGNS:
            raise ValidationError(f"unknown sampling design tag {self.design!r}")
        if len(np.unique(self.ids)) != n:
            raise ValidationError("row ids are not unique")
        if not np.all(np.isfinite(self.x)):
            raise ValidationError("covariates contain non-finite values")
        bad = np.flatnonzero((self.s != 0) & (self.s != 1))
        if bad.size:
            raise ValidationError(f"row id {self.ids[bad[0]]}: s must be 0 or 1")
        trial = self.s == 1
        bad = np.flatnonzero(trial & ~np.isin(self.a, (0, 1)))
        if bad.size:
            raise ValidationError(f"row id {self.ids[bad[0]]}: trial row missing treatment a")
        bad = np.flatnonzero(trial & ~np.isin(self.y, (0, 1)))
        if bad.size:
            raise ValidationError(f"row id {self.ids[bad[0]]}: trial row missing outcome y")
        bad = np.flatnonzero(trial & (self.control != 0))
        if bad.size:
            raise ValidationError(
                f"row id {self.ids[bad[0]]}: control flag is only valid on s=0 rows"
            )
        plain = (self.s == 0) & (self.control == 0)
        bad = np.flatnonzero(plain & (self.a != MISSING))
        if bad.size:
            raise ValidationError(
                f"row id {self.ids[bad[0]]}: treatment recorded on a non-trial row "
                "without a control-outcome flag"
            )
        bad = np.flatnonzero(plain & (self.y != MISSING))
        if bad.size:
            raise ValidationError(
                f"row id {self.ids[bad[0]]}: outcome recorded on a non-trial row "
                "without a control-outcome flag"
            )
        flagged = (self.s == 0) & (self.control != 0)
        bad = np.flatnonzero(flagged & (self.a != 0))
        if bad.size:
            raise ValidationError(
                f"row id {self.ids[bad[0]]}: control-flagged row must have a = 0"
            )
        bad = np.flatnonzero(flagged & ~np.isin(self.y, (0, 1)))
        if bad.size:
            raise ValidationError(
                f"row id {self.ids[bad[0]]}: control-flagged row must carry outcome y"
            )

    # -- covariate cells and grouped counts -----------------------------------

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct covariate rows (lexicographically sorted) and per-row codes."""
        if self._cells is None:
            uniq, codes = np.unique(self.x, axis=0, return_inverse=True)
            self._cells = (uniq, np.ravel(codes).astype(np.int64))
        return self._cells

    def counts(self) -> np.ndarray:
        """Per-cell integer counts; see _kernels for the column layout."""
        if self._counts is None:
            _, codes = self.cells()
            self._counts = K.cell_counts(codes, self.s, self.a, self.y,
                                         self.control, len(self.cells()[0]))
        return self._counts

    def take(self, idx: np.ndarray) -> "CompositeDataset":
        """Row multiset selection (bootstrap resamples; skips validation)."""
        idx = np.asarray(idx, dtype=np.int64)
        return CompositeDataset(self.ids[idx], self.x[idx], self.s[idx],
                                self.a[idx], self.y[idx], self.control[idx],
                                self.design)

    def with_design(self, design: str) -> "CompositeDataset":
        if design not in DESIGNS:
            raise ValidationError(f"unknown sampling design tag {design!r}")
        return replace(self, design=design, _cells=None, _counts=None)
