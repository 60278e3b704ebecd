"""Estimators for usual-care and trial-context treatment effects.

All methods standardize trial outcome information over target covariates and
share one identifying functional: the covariate-conditional treated-vs-control
contrast among trial participants, averaged over a reference covariate
distribution. What differs is the reference population (all rows vs
nonparticipants), the weighting route (outcome model vs inverse probability),
and the scale (absolute difference vs relative ratio applied to a target
control mean).

Saturated designs use exact integer-count arithmetic: each stratum contrast
is computed with a single division of integer-valued floats, which makes the
outcome-model/IPW equivalence hold to machine precision and sign flips under
y -> 1-y exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .data import CompositeDataset
from .errors import (ConvergenceError, EstimationError, PositivityError,
                     ValidationError)
from .glm import DesignSpec, GlmFit, fit_linear, fit_logistic, predict
from .scm import derive_seed

EPS_WEIGHT = 1e-6
MIN_BOOTSTRAP = 100
MAX_SKIP_FRACTION = 0.10

ESTIMAND_ALL = "all-population usual-care ATE"
ESTIMAND_NONPART = "nonparticipant usual-care ATE"
ESTIMAND_RELATIVE = "relative-scale usual-care ATE"
ESTIMAND_TRIALCTX = "trial-context ATE"


@dataclass(frozen=True)
class BootstrapCI:
    level: float
    lower: float
    upper: float
    n_replicates: int
    n_skipped: int

    def to_obj(self) -> dict:
        return {"level": self.level, "lower": self.lower, "upper": self.upper,
                "n_replicates": self.n_replicates, "n_skipped": self.n_skipped}


@dataclass
class EstimateReport:
    estimand: str
    method: str
    point: float
    n_rows: dict
    nuisance: dict = field(default_factory=dict)
    ci: BootstrapCI | None = None

    def to_obj(self) -> dict:
        return {
            "estimand": self.estimand,
            "method": self.method,
            "point": self.point,
            "n_rows": self.n_rows,
            "nuisance": self.nuisance,
            "ci": self.ci.to_obj() if self.ci else None,
        }


def _row_counts(data: CompositeDataset) -> dict:
    trial = data.s == 1
    return {
        "n": data.n,
        "trial": int(trial.sum()),
        "target": int((~trial).sum()),
        "trial_treated": int((trial & (data.a == 1)).sum()),
        "trial_control": int((trial & (data.a == 0)).sum()),
        "control_flagged": int((data.control != 0).sum()),
    }


def _require_nested(data: CompositeDataset, what: str) -> None:
    if data.design != "nested":
        raise EstimationError(
            f"{what} standardizes over all rows and requires the nested design "
            f"tag; got {data.design!r}"
        )


def _require_both_arms(data: CompositeDataset) -> None:
    trial = data.s == 1
    if not trial.any():
        raise EstimationError("no trial rows in dataset")
    if not (trial & (data.a == 1)).any() or not (trial & (data.a == 0)).any():
        raise EstimationError("a trial treatment arm is empty")


def _cell_label(cells: np.ndarray, c: int) -> str:
    return str(tuple(cells[c]))


# ---------------------------------------------------------------------------
# Saturated routes: exact count arithmetic per covariate stratum


def _check_trial_cells(counts: np.ndarray, cells: np.ndarray, active: np.ndarray,
                       *, weights: bool) -> None:
    """Arm presence (and weight positivity) for every active stratum."""
    for c in np.flatnonzero(active):
        n1 = counts[c, K.C_TRIAL_A1]
        n0 = counts[c, K.C_TRIAL_A0]
        if n1 + n0 == 0:
            raise PositivityError(
                f"stratum {_cell_label(cells, c)} has no trial rows; "
                "trial-participation positivity (condition A5) fails in the data"
            )
        if n1 == 0 or n0 == 0:
            raise PositivityError(
                f"empty trial treatment arm in stratum {_cell_label(cells, c)}; "
                "treatment-assignment positivity (condition A4) fails in the data"
            )
        if weights:
            n_all = counts[c, K.C_N_ALL]
            p_hat = (n1 + n0) / n_all
            e_hat = n1 / (n1 + n0)
            if not EPS_WEIGHT < p_hat < 1.0 - EPS_WEIGHT:
                raise PositivityError(
                    f"estimated participation probability {p_hat:.3g} in stratum "
                    f"{_cell_label(cells, c)} leaves ({EPS_WEIGHT}, 1-{EPS_WEIGHT}) "
                    "(condition A5)"
                )
            if not EPS_WEIGHT < e_hat < 1.0 - EPS_WEIGHT:
                raise PositivityError(
                    f"estimated assignment probability {e_hat:.3g} in stratum "
                    f"{_cell_label(cells, c)} leaves ({EPS_WEIGHT}, 1-{EPS_WEIGHT}) "
                    "(condition A4)"
                )


def _om_all_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_ALL] > 0
    _check_trial_cells(counts, cells, active, weights=False)
    n = float(counts[:, K.C_N_ALL].sum())
    total = 0.0
    for c in np.flatnonzero(active):
        n1 = float(counts[c, K.C_TRIAL_A1])
        n0 = float(counts[c, K.C_TRIAL_A0])
        k1 = float(counts[c, K.C_YSUM_A1])
        k0 = float(counts[c, K.C_YSUM_A0])
        contrast = (k1 * n0 - k0 * n1) / (n1 * n0)
        total += float(counts[c, K.C_N_ALL]) * contrast
    return total / n


def _ipw_all_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_ALL] > 0
    _check_trial_cells(counts, cells, active, weights=True)
    n = float(counts[:, K.C_N_ALL].sum())
    total = 0.0
    for c in np.flatnonzero(active):
        n1 = float(counts[c, K.C_TRIAL_A1])
        n0 = float(counts[c, K.C_TRIAL_A0])
        k1 = float(counts[c, K.C_YSUM_A1])
        k0 = float(counts[c, K.C_YSUM_A0])
        total += (k1 * n0 - k0 * n1) * float(counts[c, K.C_N_ALL]) / (n1 * n0)
    return total / n


def _ipw_all_hajek_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_ALL] > 0
    _check_trial_cells(counts, cells, active, weights=True)
    sw = np.zeros(2)
    swy = np.zeros(2)
    for c in np.flatnonzero(active):
        n1 = float(counts[c, K.C_TRIAL_A1])
        n0 = float(counts[c, K.C_TRIAL_A0])
        n_all = float(counts[c, K.C_N_ALL])
        # weight of a treated row is 1/(e_hat * p_hat) = n_all / n1, etc.
        sw[1] += n1 * (n_all / n1)
        swy[1] += float(counts[c, K.C_YSUM_A1]) * (n_all / n1)
        sw[0] += n0 * (n_all / n0)
        swy[0] += float(counts[c, K.C_YSUM_A0]) * (n_all / n0)
    return float(swy[1] / sw[1] - swy[0] / sw[0])


def _om_nonparticipants_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_S0] > 0
    if not active.any():
        raise EstimationError("no nonparticipant rows in dataset")
    _check_trial_cells(counts, cells, active, weights=False)
    n0_total = float(counts[:, K.C_N_S0].sum())
    total = 0.0
    for c in np.flatnonzero(active):
        n1 = float(counts[c, K.C_TRIAL_A1])
        n0 = float(counts[c, K.C_TRIAL_A0])
        k1 = float(counts[c, K.C_YSUM_A1])
        k0 = float(counts[c, K.C_YSUM_A0])
        contrast = (k1 * n0 - k0 * n1) / (n1 * n0)
        total += float(counts[c, K.C_N_S0]) * contrast
    return total / n0_total


def _ipw_nonparticipants_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_S0] > 0
    if not active.any():
        raise EstimationError("no nonparticipant rows in dataset")
    _check_trial_cells(counts, cells, active, weights=True)
    n0_total = float(counts[:, K.C_N_S0].sum())
    total = 0.0
    for c in np.flatnonzero(active):
        n1 = float(counts[c, K.C_TRIAL_A1])
        n0 = float(counts[c, K.C_TRIAL_A0])
        k1 = float(counts[c, K.C_YSUM_A1])
        k0 = float(counts[c, K.C_YSUM_A0])
        # inverse-odds weighting: (1-p)/p * 1/e telescopes to n_s0 / n_arm
        total += (k1 * n0 - k0 * n1) * float(counts[c, K.C_N_S0]) / (n1 * n0)
    return total / n0_total


def _relative_from_counts(counts: np.ndarray, cells: np.ndarray) -> float:
    active = counts[:, K.C_N_ALL] > 0
    _check_trial_cells(counts, cells, active, weights=False)
    n = float(counts[:, K.C_N_ALL].sum())
    if counts[:, K.C_N_CTRL].sum() == 0:
        raise EstimationError(
            "relative-scale estimation needs control-flagged target outcome rows"
        )
    total = 0.0
    for c in np.flatnonzero(active):
        nc = counts[c, K.C_N_CTRL]
        if nc == 0:
            raise EstimationError(
                f"stratum {_cell_label(cells, c)} has no control-flagged target "
                "rows; the target control mean is not estimable there"
            )
        q0 = float(counts[c, K.C_YSUM_CTRL]) / float(nc)
        g1 = float(counts[c, K.C_YSUM_A1]) / float(counts[c, K.C_TRIAL_A1])
        g0 = float(counts[c, K.C_YSUM_A0]) / float(counts[c, K.C_TRIAL_A0])
        if g0 <= EPS_WEIGHT:
            raise EstimationError(
                f"trial control mean {g0:.3g} in stratum {_cell_label(cells, c)} "
                "makes the outcome ratio undefined"
            )
        total += float(counts[c, K.C_N_ALL]) * q0 * (g1 / g0 - 1.0)
    return total / n


# ---------------------------------------------------------------------------
# Model-based routes for non-saturated designs


def _fit_outcome(x, y, design: DesignSpec) -> GlmFit:
    try:
        fit = (fit_logistic(x, y, design) if design.family == "logistic"
               else fit_linear(x, y, design))
    except ConvergenceError as exc:
        # an unfittable nuisance model is an estimator precondition failure
        raise EstimationError(str(exc)) from exc
    if not fit.converged:
        raise EstimationError(
            "outcome model did not converge"
            + (" (separated)" if fit.separated else "")
        )
    return fit


def _check_prob_bounds(p: np.ndarray, ids: np.ndarray, what: str, cond: str) -> None:
    bad = np.flatnonzero((p <= EPS_WEIGHT) | (p >= 1.0 - EPS_WEIGHT))
    if bad.size:
        raise PositivityError(
            f"estimated {what} {p[bad[0]]:.3g} at row id {ids[bad[0]]} leaves "
            f"({EPS_WEIGHT}, 1-{EPS_WEIGHT}) (condition {cond})"
        )


def _om_contrast_model(data: CompositeDataset, design: DesignSpec,
                       over: np.ndarray) -> tuple[np.ndarray, dict]:
    trial = data.s == 1
    t1 = trial & (data.a == 1)
    t0 = trial & (data.a == 0)
    fit1 = _fit_outcome(data.x[t1], data.y[t1].astype(np.float64), design)
    fit0 = _fit_outcome(data.x[t0], data.y[t0].astype(np.float64), design)
    contrast = predict(fit1, data.x[over]) - predict(fit0, data.x[over])
    return contrast, {"outcome_treated": fit1.summary(),
                      "outcome_control": fit0.summary()}


def _ps_weights_model(data: CompositeDataset, ps_design: DesignSpec,
                      trt_design: DesignSpec) -> tuple[np.ndarray, np.ndarray, dict]:
    trial = data.s == 1
    ps_fit = _fit_outcome(data.x, (data.s == 1).astype(np.float64), ps_design)
    trt_fit = _fit_outcome(data.x[trial], data.a[trial].astype(np.float64), trt_design)
    p_hat = predict(ps_fit, data.x[trial])
    e_hat = predict(trt_fit, data.x[trial])
    _check_prob_bounds(p_hat, data.ids[trial], "participation probability", "A5")
    _check_prob_bounds(e_hat, data.ids[trial], "assignment probability", "A4")
    return p_hat, e_hat, {"participation": ps_fit.summary(),
                          "treatment": trt_fit.summary()}


# ---------------------------------------------------------------------------
# Public estimators


def estimate_om_all(data: CompositeDataset,
                    outcome_design: DesignSpec = DesignSpec.saturate()) -> EstimateReport:
    """Outcome-model standardization of the trial contrast over all rows.

    Identifies the all-population usual-care ATE when participation
    exchangeability (or the weaker contrast-level conditions A7+A8) holds.
    """
    _require_nested(data, "the all-population estimand")
    _require_both_arms(data)
    if outcome_design.saturated:
        cells, _ = data.cells()
        point = _om_all_from_counts(data.counts(), cells)
        nuisance = {"outcome": {"saturated": True, "n_strata": len(cells)}}
    else:
        contrast, nuisance = _om_contrast_model(
            data, outcome_design, np.ones(data.n, dtype=bool))
        point = float(np.mean(contrast))
    return EstimateReport(ESTIMAND_ALL, "outcome-model", point, _row_counts(data),
                          nuisance)


def estimate_trialctx_all(data: CompositeDataset,
                          outcome_design: DesignSpec = DesignSpec.saturate()) -> EstimateReport:
    """Same functional as :func:`estimate_om_all`, targeted at the trial-context ATE.

    Under trial exchangeability for participation this standardization
    identifies what treatment would do if everyone were brought into the
    trial context; the arithmetic is identical, only the causal label (and
    the conditions needed for it) differ.
    """
    report = estimate_om_all(data, outcome_design)
    report.estimand = ESTIMAND_TRIALCTX
    return report


def estimate_ipw_all(data: CompositeDataset,
                     ps_design: DesignSpec = DesignSpec.saturate(),
                     trt_design: DesignSpec = DesignSpec.saturate(), *,
                     normalized: bool = False) -> EstimateReport:
    """Inverse-probability weighting of trial outcomes over all rows.

    Weights are 1 / (assignment probability * participation probability),
    signed by arm. The normalized variant divides by realized weight sums
    within each arm instead of n.
    """
    _require_nested(data, "the all-population estimand")
    _require_both_arms(data)
    if ps_design.saturated and trt_design.saturated:
        cells, _ = data.cells()
        fn = _ipw_all_hajek_from_counts if normalized else _ipw_all_from_counts
        point = fn(data.counts(), cells)
        nuisance = {"weights": {"saturated": True, "n_strata": len(cells)}}
    else:
        p_hat, e_hat, nuisance = _ps_weights_model(data, ps_design, trt_design)
        trial = data.s == 1
        a = data.a[trial].astype(np.float64)
        y = data.y[trial].astype(np.float64)
        signed = (a / e_hat - (1.0 - a) / (1.0 - e_hat)) * y / p_hat
        if normalized:
            w = np.where(a == 1, 1.0 / (e_hat * p_hat), 1.0 / ((1.0 - e_hat) * p_hat))
            wy = w * y
            point = float(wy[a == 1].sum() / w[a == 1].sum()
                          - wy[a == 0].sum() / w[a == 0].sum())
        else:
            point = float(signed.sum() / data.n)
    nuisance["normalized"] = normalized
    return EstimateReport(ESTIMAND_ALL, "ipw", point, _row_counts(data), nuisance)


def estimate_om_nonparticipants(data: CompositeDataset,
                                outcome_design: DesignSpec = DesignSpec.saturate()) -> EstimateReport:
    """Outcome-model standardization over nonparticipant rows only.

    Valid under both sampling designs: the s=0 rows carry the reference
    covariate distribution themselves.
    """
    _require_both_arms(data)
    if outcome_design.saturated:
        cells, _ = data.cells()
        point = _om_nonparticipants_from_counts(data.counts(), cells)
        nuisance = {"outcome": {"saturated": True, "n_strata": len(cells)}}
    else:
        over = data.s == 0
        if not over.any():
            raise EstimationError("no nonparticipant rows in dataset")
        contrast, nuisance = _om_contrast_model(data, outcome_design, over)
        point = float(np.mean(contrast))
    return EstimateReport(ESTIMAND_NONPART, "outcome-model", point,
                          _row_counts(data), nuisance)


def estimate_ipw_nonparticipants(data: CompositeDataset,
                                 ps_design: DesignSpec = DesignSpec.saturate(),
                                 trt_design: DesignSpec = DesignSpec.saturate()) -> EstimateReport:
    """Inverse-odds weighting of trial outcomes onto the nonparticipant stratum."""
    _require_both_arms(data)
    if ps_design.saturated and trt_design.saturated:
        cells, _ = data.cells()
        point = _ipw_nonparticipants_from_counts(data.counts(), cells)
        nuisance = {"weights": {"saturated": True, "n_strata": len(cells)}}
    else:
        if not (data.s == 0).any():
            raise EstimationError("no nonparticipant rows in dataset")
        p_hat, e_hat, nuisance = _ps_weights_model(data, ps_design, trt_design)
        trial = data.s == 1
        a = data.a[trial].astype(np.float64)
        y = data.y[trial].astype(np.float64)
        odds = (1.0 - p_hat) / p_hat
        signed = odds * (a / e_hat - (1.0 - a) / (1.0 - e_hat)) * y
        point = float(signed.sum() / (data.s == 0).sum())
    return EstimateReport(ESTIMAND_NONPART, "ipw", point, _row_counts(data),
                          nuisance)


def estimate_relative_scale(data: CompositeDataset,
                            trial_design: DesignSpec = DesignSpec.saturate(),
                            target_design: DesignSpec = DesignSpec.saturate()) -> EstimateReport:
    """Rescale the trial outcome ratio by the target-population control mean.

    Computes mean over rows of q0(x) * (g1(x)/g0(x) - 1), where q0 is fitted
    on control-flagged target rows and g1, g0 on the trial arms. Transports
    under ratio-scale (not difference-scale) homogeneity across contexts.
    """
    _require_nested(data, "the relative-scale estimand")
    _require_both_arms(data)
    if trial_design.saturated and target_design.saturated:
        cells, _ = data.cells()
        point = _relative_from_counts(data.counts(), cells)
        nuisance = {"outcome": {"saturated": True, "n_strata": len(cells)}}
    else:
        ctrl = (data.s == 0) & (data.control != 0)
        if not ctrl.any():
            raise EstimationError(
                "relative-scale estimation needs control-flagged target outcome rows"
            )
        q_fit = _fit_outcome(data.x[ctrl], data.y[ctrl].astype(np.float64),
                             target_design)
        trial = data.s == 1
        g1_fit = _fit_outcome(data.x[trial & (data.a == 1)],
                              data.y[trial & (data.a == 1)].astype(np.float64),
                              trial_design)
        g0_fit = _fit_outcome(data.x[trial & (data.a == 0)],
                              data.y[trial & (data.a == 0)].astype(np.float64),
                              trial_design)
        q0 = predict(q_fit, data.x)
        g1 = predict(g1_fit, data.x)
        g0 = predict(g0_fit, data.x)
        if np.any(g0 <= EPS_WEIGHT):
            bad = int(np.flatnonzero(g0 <= EPS_WEIGHT)[0])
            raise EstimationError(
                f"fitted trial control mean {g0[bad]:.3g} at row id "
                f"{data.ids[bad]} makes the outcome ratio undefined"
            )
        point = float(np.mean(q0 * (g1 / g0 - 1.0)))
        nuisance = {"target_control": q_fit.summary(),
                    "outcome_treated": g1_fit.summary(),
                    "outcome_control": g0_fit.summary()}
    return EstimateReport(ESTIMAND_RELATIVE, "outcome-model", point,
                          _row_counts(data), nuisance)


# ---------------------------------------------------------------------------
# Point-estimator handles and the percentile bootstrap

_CELL_FNS = {
    "om_all": _om_all_from_counts,
    "trialctx_all": _om_all_from_counts,
    "ipw_all": _ipw_all_from_counts,
    "ipw_all_normalized": _ipw_all_hajek_from_counts,
    "om_nonparticipants": _om_nonparticipants_from_counts,
    "ipw_nonparticipants": _ipw_nonparticipants_from_counts,
    "relative_scale": _relative_from_counts,
}

_REPORT_FNS: dict[str, Callable] = {
    "om_all": estimate_om_all,
    "trialctx_all": estimate_trialctx_all,
    "ipw_all": estimate_ipw_all,
    "om_nonparticipants": estimate_om_nonparticipants,
    "ipw_nonparticipants": estimate_ipw_nonparticipants,
    "relative_scale": estimate_relative_scale,
}

METHODS = tuple(sorted(_REPORT_FNS))


def estimate(method: str, data: CompositeDataset, **options) -> EstimateReport:
    """Dispatch by method name; see METHODS for the valid names."""
    if method not in _REPORT_FNS:
        raise ValidationError(f"unknown estimator {method!r}; choose from {METHODS}")
    return _REPORT_FNS[method](data, **options)


class PointEstimator:
    """Callable data -> point estimate, with a fast path for saturated designs.

    The fast path recomputes grouped counts on resampled row indices without
    materializing the resampled dataset; it is bit-identical to calling the
    full estimator on ``data.take(idx)`` because both routes share the same
    count-arithmetic function and stratum order.
    """

    def __init__(self, method: str, **options):
        if method not in _REPORT_FNS:
            raise ValidationError(f"unknown estimator {method!r}; choose from {METHODS}")
        self.method = method
        self.options = options
        designs = [v for v in options.values() if isinstance(v, DesignSpec)]
        saturated = all(d.saturated for d in designs) if designs else True
        key = method
        if method == "ipw_all" and options.get("normalized"):
            key = "ipw_all_normalized"
        self.cell_fn = _CELL_FNS[key] if saturated else None

    def __call__(self, data: CompositeDataset) -> float:
        return float(_REPORT_FNS[self.method](data, **self.options).point)

    def needs_nested(self) -> bool:
        return self.method in ("om_all", "trialctx_all", "ipw_all", "relative_scale")


def point_estimator(method: str, **options) -> PointEstimator:
    return PointEstimator(method, **options)


def bootstrap_ci(data: CompositeDataset, estimator: Callable, *,
                 n_replicates: int = 500, level: float = 0.95,
                 seed: int) -> BootstrapCI:
    """Percentile bootstrap over whole-row resamples.

    Resamples that violate an estimator precondition (e.g. an empty arm in a
    stratum) are recorded and skipped; the interval is refused if more than
    10% of resamples fail. Deterministic given the seed; replicate seeds are
    derived independently so execution order cannot matter.
    """
    if n_replicates < MIN_BOOTSTRAP:
        raise ValidationError(
            f"bootstrap needs at least {MIN_BOOTSTRAP} replicates, got {n_replicates}"
        )
    if not 0.0 < level < 1.0:
        raise ValidationError("confidence level must lie in (0, 1)")
    if not isinstance(seed, (int, np.integer)):
        raise ValidationError("bootstrap requires an integer seed")

    fast = None
    if isinstance(estimator, PointEstimator) and estimator.cell_fn is not None:
        if estimator.needs_nested():
            _require_nested(data, "this estimand")
        cells, codes = data.cells()
        fast = (estimator.cell_fn, cells, codes)

    n = data.n
    points = []
    skipped = 0
    for b in range(n_replicates):
        rng = np.random.default_rng(derive_seed(seed, b))
        idx = rng.integers(0, n, size=n)
        try:
            if fast is not None:
                fn, cells, codes = fast
                counts = K.resampled_cell_counts(codes, data.s, data.a, data.y,
                                                 data.control, idx, len(cells))
                val = fn(counts, cells)
            else:
                result = estimator(data.take(idx))
                val = float(result.point if isinstance(result, EstimateReport) else result)
            points.append(val)
        except ValidationError:
            skipped += 1
    if skipped > MAX_SKIP_FRACTION * n_replicates:
        raise EstimationError(
            f"{skipped} of {n_replicates} bootstrap resamples failed an estimator "
            "precondition (more than 10%); refusing to report an interval"
        )
    alpha = 1.0 - level
    lower, upper = np.quantile(np.asarray(points), [alpha / 2.0, 1.0 - alpha / 2.0])
    return BootstrapCI(level, float(lower), float(upper), n_replicates, skipped)
