"""Assumption-facing diagnostics.

Two kinds of check live here. Checks on analysis data (positivity summaries)
are computable from a composite dataset alone. Checks on the exchangeability
and no-interaction conditions need potential-outcome columns, which real
analysis data never contains for the target stratum; those accept simulated
datasets only and say so, rather than approximating an untestable quantity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CompositeDataset
from .errors import EstimationError, ValidationError
from .glm import DesignSpec, fit_logistic, predict
from .scm import PotentialOutcomeDataset

LOW_OVERLAP = 0.01


def _stratum_label(cell) -> str:
    vals = np.atleast_1d(np.asarray(cell))
    return "x=" + ",".join(f"{v:g}" for v in vals)


# ---------------------------------------------------------------------------
# Positivity


@dataclass(frozen=True)
class StratumOverlap:
    stratum: str
    n_target: int
    n_trial: int
    n_treated: int
    n_control_arm: int
    p_s_hat: float
    flag_low_overlap: bool
    flag_empty_arm: bool


@dataclass(frozen=True)
class PositivityReport:
    strata: tuple[StratumOverlap, ...]
    n: int
    threshold: float = LOW_OVERLAP

    @property
    def any_flags(self) -> bool:
        return any(s.flag_low_overlap or s.flag_empty_arm for s in self.strata)

    def to_obj(self) -> dict:
        return {
            "n": self.n,
            "threshold": self.threshold,
            "any_flags": self.any_flags,
            "strata": [vars(s).copy() for s in self.strata],
        }

    def csv_rows(self) -> list[tuple]:
        rows = []
        for s in self.strata:
            rows.append((s.stratum, "p_s_hat", s.p_s_hat, float("nan")))
            rows.append((s.stratum, "n_trial", float(s.n_trial), float("nan")))
            rows.append((s.stratum, "n_target", float(s.n_target), float("nan")))
        return rows


def positivity_report(data: CompositeDataset,
                      ps_design: DesignSpec = DesignSpec.saturate()) -> PositivityReport:
    """Per-stratum overlap summary for trial participation and assignment.

    Flags strata whose estimated participation probability falls below the
    practical-overlap threshold and strata with an empty trial arm. Reports
    only; nothing here raises on poor overlap.
    """
    cells, codes = data.cells()
    counts = data.counts()
    if ps_design.saturated:
        with np.errstate(invalid="ignore"):
            p_hat = (counts[:, 1] + counts[:, 2]) / counts[:, 0]
    else:
        fit = fit_logistic(data.x, (data.s == 1).astype(np.float64), ps_design)
        p_hat = predict(fit, np.asarray(cells, dtype=np.float64))
    strata = []
    for c in range(len(cells)):
        n_all = int(counts[c, 0])
        n1 = int(counts[c, 2])
        n0 = int(counts[c, 1])
        n_trial = n1 + n0
        strata.append(StratumOverlap(
            stratum=_stratum_label(cells[c]),
            n_target=n_all - n_trial,
            n_trial=n_trial,
            n_treated=n1,
            n_control_arm=n0,
            p_s_hat=float(p_hat[c]),
            flag_low_overlap=bool(p_hat[c] < LOW_OVERLAP),
            flag_empty_arm=bool(n1 == 0 or n0 == 0),
        ))
    return PositivityReport(tuple(strata), data.n)


# ---------------------------------------------------------------------------
# Interaction between engagement and treatment, both scales


@dataclass(frozen=True)
class InteractionRow:
    stratum: str
    n: int
    means: tuple[float, float, float, float]  # y00, y01, y10, y11
    additive: float
    additive_se: float
    ratio: float
    ratio_se: float


@dataclass(frozen=True)
class InteractionScan:
    rows: tuple[InteractionRow, ...]

    def to_obj(self) -> dict:
        return {"rows": [vars(r).copy() for r in self.rows]}

    def csv_rows(self) -> list[tuple]:
        out = []
        for r in self.rows:
            out.append((r.stratum, "additive_interaction", r.additive, r.additive_se))
            out.append((r.stratum, "multiplicative_interaction", r.ratio, r.ratio_se))
        return out


def interaction_scan(pod: PotentialOutcomeDataset) -> InteractionScan:
    """Per-stratum engagement-by-treatment interaction on both scales.

    Additive contrast (m11-m10)-(m01-m00) and multiplicative contrast
    (m11/m10)/(m01/m00) over the four potential-outcome columns, with Monte
    Carlo standard errors from within-unit differencing. Needs simulated
    data: analysis datasets carry no outcomes for nonparticipants, so this
    condition cannot be checked there.
    """
    x_values = pod.spec.x_values
    rows = []
    for xi in range(len(x_values)):
        mask = pod.x_index == xi
        n = int(mask.sum())
        if n == 0:
            continue
        cols = np.stack([pod.y00[mask], pod.y01[mask],
                         pod.y10[mask], pod.y11[mask]]).astype(np.float64)
        m00, m01, m10, m11 = cols.mean(axis=1)
        diff = (cols[3] - cols[2]) - (cols[1] - cols[0])
        additive = float(diff.mean())
        additive_se = float(diff.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        label = _stratum_label(x_values[xi])
        for name, m in (("m10", m10), ("m01", m01), ("m00", m00)):
            if m == 0.0:
                raise EstimationError(
                    f"mean {name} is zero in stratum {label}; the multiplicative "
                    "contrast has a zero denominator"
                )
        ratio = float((m11 / m10) / (m01 / m00))
        if m11 > 0.0 and n > 1:
            # delta method on log scale with the empirical 4x4 covariance
            grad = np.array([1.0 / m00, -1.0 / m01, -1.0 / m10, 1.0 / m11])
            cov = np.cov(cols, ddof=1)
            var_log = float(grad @ cov @ grad) / n
            ratio_se = float(ratio * np.sqrt(max(var_log, 0.0)))
        else:
            ratio_se = float("nan")
        rows.append(InteractionRow(label, n, (float(m00), float(m01),
                                              float(m10), float(m11)),
                                   additive, additive_se, ratio, ratio_se))
    return InteractionScan(tuple(rows))


# ---------------------------------------------------------------------------
# Dual-scale incompatibility


@dataclass(frozen=True)
class ScaleClassification:
    classification: str  # additive-only | multiplicative-only | both-degenerate | neither
    branch: str | None   # null-effect | equal-control-means | mixed (both-degenerate only)
    additive_gaps: tuple[float, ...]
    multiplicative_gaps: tuple[float, ...]
    tolerance: float

    def to_obj(self) -> dict:
        return {
            "classification": self.classification,
            "branch": self.branch,
            "additive_gaps": list(self.additive_gaps),
            "multiplicative_gaps": list(self.multiplicative_gaps),
            "tolerance": self.tolerance,
        }


def dual_scale_check(mean_table, tolerance: float = 1e-9) -> ScaleClassification:
    """Classify per-stratum 2x2 mean tables m[x][s][a] by effect scale.

    Additive homogeneity means the engagement contrast of treatment effects
    vanishes on the difference scale; multiplicative means the ratio of
    outcome ratios is one. These can only hold together in degenerate tables:
    either treatment does nothing (ratio 1) or engagement leaves the control
    mean unchanged. The branch field reports which degeneracy applies.
    """
    m = np.asarray(mean_table, dtype=np.float64)
    if m.ndim == 2:
        m = m[None, :, :]
    if m.ndim != 3 or m.shape[1:] != (2, 2):
        raise ValidationError("mean table must have shape (2, 2) or (k, 2, 2)")
    if not tolerance > 0.0:
        raise ValidationError("tolerance must be positive")
    if np.any(m <= 0.0):
        raise ValidationError(
            "mean table entries must be strictly positive for the "
            "multiplicative-scale test"
        )
    add_gaps = (m[:, 1, 1] - m[:, 1, 0]) - (m[:, 0, 1] - m[:, 0, 0])
    mult_gaps = m[:, 1, 1] / m[:, 1, 0] - m[:, 0, 1] / m[:, 0, 0]
    additive = bool(np.all(np.abs(add_gaps) <= tolerance))
    multiplicative = bool(np.all(np.abs(mult_gaps) <= tolerance))
    branch = None
    if additive and multiplicative:
        classification = "both-degenerate"
        # both conditions force (r-1)*(m10-m00) ~ 0 per stratum
        branches = []
        for x in range(m.shape[0]):
            null_resid = abs(m[x, 1, 1] / m[x, 1, 0] - 1.0)
            ctrl_resid = abs(m[x, 1, 0] - m[x, 0, 0])
            branches.append("null-effect" if null_resid <= ctrl_resid
                            else "equal-control-means")
        branch = branches[0] if len(set(branches)) == 1 else "mixed"
    elif additive:
        classification = "additive-only"
    elif multiplicative:
        classification = "multiplicative-only"
    else:
        classification = "neither"
    return ScaleClassification(classification, branch,
                               tuple(float(g) for g in add_gaps),
                               tuple(float(g) for g in mult_gaps), tolerance)


# ---------------------------------------------------------------------------
# Mean exchangeability across the participation divide


@dataclass(frozen=True)
class LevelGapRow:
    stratum: str
    s: int
    a: int
    mean_trial: float
    mean_target: float
    gap: float
    se: float


@dataclass(frozen=True)
class ContrastGapRow:
    stratum: str
    gap: float
    se: float


@dataclass(frozen=True)
class ExchangeabilityReport:
    level_gaps: tuple[LevelGapRow, ...]
    contrast_gaps: tuple[ContrastGapRow, ...]

    def to_obj(self) -> dict:
        return {
            "level_gaps": [vars(r).copy() for r in self.level_gaps],
            "contrast_gaps": [vars(r).copy() for r in self.contrast_gaps],
        }

    def csv_rows(self) -> list[tuple]:
        out = []
        for r in self.level_gaps:
            out.append((r.stratum, f"level_gap_s{r.s}a{r.a}", r.gap, r.se))
        for r in self.contrast_gaps:
            out.append((r.stratum, "contrast_gap", r.gap, r.se))
        return out


def exchangeability_mean_check(pod: PotentialOutcomeDataset) -> ExchangeabilityReport:
    """Compare potential-outcome means between participants and others.

    Level gaps E[Y^{s,a} | X, S=1] - E[Y^{s,a} | X, S=0] are evidence about
    participation exchangeability (condition A2); trial-context contrast gaps
    between the S=1 subgroup and the whole stratum are evidence about the
    mean no-effect-modification condition (A8). Simulation data only.
    """
    x_values = pod.spec.x_values
    po_cols = {(0, 0): pod.y00, (0, 1): pod.y01, (1, 0): pod.y10, (1, 1): pod.y11}
    level_rows = []
    contrast_rows = []
    for xi in range(len(x_values)):
        mask = pod.x_index == xi
        in_trial = mask & (pod.s == 1)
        out_trial = mask & (pod.s == 0)
        n1 = int(in_trial.sum())
        n0 = int(out_trial.sum())
        label = _stratum_label(x_values[xi])
        if n1 == 0 or n0 == 0:
            raise EstimationError(
                f"empty (x, s) cell in stratum {label}; gaps are not estimable"
            )
        for (s, a), col in sorted(po_cols.items()):
            c = col.astype(np.float64)
            t_vals, o_vals = c[in_trial], c[out_trial]
            se = float(np.sqrt(
                (t_vals.var(ddof=1) if n1 > 1 else 0.0) / n1
                + (o_vals.var(ddof=1) if n0 > 1 else 0.0) / n0))
            level_rows.append(LevelGapRow(
                label, s, a, float(t_vals.mean()), float(o_vals.mean()),
                float(t_vals.mean() - o_vals.mean()), se))
        # contrast gap: trial-context effect in S=1 minus in the whole stratum;
        # equals (1-w) times the S=1 vs S=0 difference, w = trial share
        d = (pod.y11 - pod.y10).astype(np.float64)
        d1, d0 = d[in_trial], d[out_trial]
        w = n1 / (n1 + n0)
        gap = float((1.0 - w) * (d1.mean() - d0.mean()))
        se = float((1.0 - w) * np.sqrt(
            (d1.var(ddof=1) if n1 > 1 else 0.0) / n1
            + (d0.var(ddof=1) if n0 > 1 else 0.0) / n0))
        contrast_rows.append(ContrastGapRow(label, gap, se))
    return ExchangeabilityReport(tuple(level_rows), tuple(contrast_rows))
