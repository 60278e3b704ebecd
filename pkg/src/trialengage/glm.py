"""Nuisance-model fitting: logistic IRLS, linear least squares, cell means.

These fits back the participation, treatment-assignment, and outcome models
used by the estimators. Saturated designs bypass iteration entirely and use
stratum means, which is what makes the nonparametric estimator equivalences
exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ValidationError

LOGISTIC_TOL = 1e-8
MAX_ITER = 100
SEPARATION_EPS = 1e-10


@dataclass(frozen=True)
class DesignSpec:
    """Feature map from covariate rows to a design matrix.

    ``columns`` are covariate indices included as numeric features,
    ``interactions`` adds pairwise products, ``saturated`` replaces all of it
    with one stratum per distinct covariate combination.
    """

    intercept: bool = True
    columns: tuple[int, ...] = ()
    interactions: tuple[tuple[int, int], ...] = ()
    saturated: bool = False
    family: str = "logistic"

    def __post_init__(self):
        if self.family not in ("logistic", "linear"):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.saturated and (self.columns or self.interactions):
            raise ValidationError("saturated designs take no feature columns")
        if not self.saturated and not self.intercept and not self.columns:
            raise ValidationError("empty design: no intercept and no columns")

    @staticmethod
    def saturate(family: str = "logistic") -> "DesignSpec":
        return DesignSpec(intercept=False, saturated=True, family=family)

    def build_matrix(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.saturated:
            raise ValidationError("saturated designs have no design matrix")
        k = x.shape[1]
        for c in self.columns:
            if not 0 <= c < k:
                raise ValidationError(f"design column {c} out of range for {k} covariates")
        for i, j in self.interactions:
            if not (0 <= i < k and 0 <= j < k):
                raise ValidationError(f"interaction ({i}, {j}) out of range")
        parts = []
        if self.intercept:
            parts.append(np.ones((x.shape[0], 1)))
        if self.columns:
            parts.append(x[:, list(self.columns)])
        for i, j in self.interactions:
            parts.append((x[:, i] * x[:, j])[:, None])
        return np.hstack(parts)

    def to_obj(self) -> dict:
        return {
            "intercept": self.intercept,
            "columns": list(self.columns),
            "interactions": [list(p) for p in self.interactions],
            "saturated": self.saturated,
            "family": self.family,
        }

    @staticmethod
    def from_obj(obj: dict) -> "DesignSpec":
        if not isinstance(obj, dict):
            raise ValidationError("design spec must be an object")
        return DesignSpec(
            intercept=bool(obj.get("intercept", True)),
            columns=tuple(int(c) for c in obj.get("columns", ())),
            interactions=tuple(tuple(int(v) for v in p) for p in obj.get("interactions", ())),
            saturated=bool(obj.get("saturated", False)),
            family=str(obj.get("family", "logistic")),
        )


@dataclass
class GlmFit:
    family: str
    design: DesignSpec
    coefficients: np.ndarray          # cell means when saturated
    converged: bool
    iterations: int
    max_abs_update: float
    n_obs: int
    separated: bool = False
    loglik_trace: tuple[float, ...] = ()
    cells: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "family": self.family,
            "saturated": self.design.saturated,
            "n_obs": self.n_obs,
            "n_params": int(len(self.coefficients)),
            "converged": self.converged,
            "iterations": self.iterations,
            "max_abs_update": self.max_abs_update,
            "separated": self.separated,
        }


def expit(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[np.logical_not(pos)])
    out[np.logical_not(pos)] = ez / (1.0 + ez)
    return out


def _log_likelihood(z: np.ndarray, y: np.ndarray) -> float:
    # sum_i [y_i z_i - log(1 + exp(z_i))], numerically stable form
    return float(np.sum(y * z - np.logaddexp(0.0, z)))


def _fit_saturated(x: np.ndarray, y: np.ndarray, design: DesignSpec) -> GlmFit:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cells, codes = np.unique(x, axis=0, return_inverse=True)
    counts = np.bincount(codes, minlength=len(cells))
    sums = np.bincount(codes, weights=np.asarray(y, dtype=np.float64),
                       minlength=len(cells))
    means = sums / counts
    return GlmFit(design.family, design, means, converged=True, iterations=0,
                  max_abs_update=0.0, n_obs=len(codes), cells=cells)


def fit_logistic(x: np.ndarray, y: np.ndarray, design: DesignSpec, *,
                 ridge: float = 0.0, max_iter: int = MAX_ITER,
                 tol: float = LOGISTIC_TOL) -> GlmFit:
    """IRLS with step halving; the log-likelihood is non-decreasing per step.

    Separation (all rows of a response class fitted within 1e-10 of their
    label) is reported via ``separated=True`` and ``converged=False``, never
    as silent success. A singular weighted information matrix raises unless
    ``ridge`` > 0 stabilizes it.
    """
    y = np.asarray(y, dtype=np.float64)
    if np.any((y != 0) & (y != 1)):
        raise ValidationError("logistic response must be binary 0/1")
    if design.saturated:
        return _fit_saturated(x, y, design)
    if y.min() == y.max():
        raise ValidationError("logistic fit requires both response classes")

    mat = design.build_matrix(x)
    n, p = mat.shape
    if n != len(y):
        raise ValidationError("covariates and response differ in length")
    beta = np.zeros(p)
    z = mat @ beta
    ll = _log_likelihood(z, y)
    trace = [ll]
    converged = False
    separated = False
    max_upd = np.inf
    it = 0
    ones = y == 1
    while it < max_iter:
        it += 1
        mu = expit(z)
        if (np.all(mu[ones] >= 1.0 - SEPARATION_EPS)
                or np.all(mu[np.logical_not(ones)] <= SEPARATION_EPS)):
            separated = True
            break
        w = mu * (1.0 - mu)
        grad = mat.T @ (y - mu)
        info = (mat * w[:, None]).T @ mat
        if ridge > 0.0:
            info = info + ridge * np.eye(p)
        try:
            delta = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise ConvergenceError(
                "singular weighted design in IRLS; pass ridge=1e-8 to stabilize"
            ) from None
        # Step halving keeps the log-likelihood non-decreasing.
        step = 1.0
        accepted = False
        for _ in range(40):
            cand = beta + step * delta
            cand_z = mat @ cand
            cand_ll = _log_likelihood(cand_z, y)
            if cand_ll >= ll:
                beta, z, ll = cand, cand_z, cand_ll
                max_upd = float(np.max(np.abs(step * delta)))
                accepted = True
                break
            step *= 0.5
        trace.append(ll)
        if not accepted:
            converged = float(np.max(np.abs(delta))) < tol
            break
        if max_upd < tol:
            converged = True
            break
    return GlmFit("logistic", design, beta, converged=converged and not separated,
                  iterations=it, max_abs_update=float(max_upd), n_obs=n,
                  separated=separated, loglik_trace=tuple(trace))


def fit_linear(x: np.ndarray, y: np.ndarray, design: DesignSpec) -> GlmFit:
    """Least squares via an orthogonalizing solver; errors on rank deficiency."""
    y = np.asarray(y, dtype=np.float64)
    if design.saturated:
        return _fit_saturated(x, y, design)
    mat = design.build_matrix(x)
    if mat.shape[0] != len(y):
        raise ValidationError("covariates and response differ in length")
    coef, _, rank, _ = np.linalg.lstsq(mat, y, rcond=None)
    if rank < mat.shape[1]:
        raise ValidationError(
            f"rank-deficient design: rank {rank} < {mat.shape[1]} parameters"
        )
    return GlmFit("linear", design, coef, converged=True, iterations=0,
                  max_abs_update=0.0, n_obs=mat.shape[0])


def predict(fit: GlmFit, x: np.ndarray) -> np.ndarray:
    """Fitted means (probabilities for logistic fits) at new covariate rows."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if fit.design.saturated:
        assert fit.cells is not None
        lookup = {fit.cells[i].tobytes(): fit.coefficients[i]
                  for i in range(len(fit.cells))}
        uniq, inv = np.unique(x, axis=0, return_inverse=True)
        vals = np.empty(len(uniq))
        for i in range(len(uniq)):
            key = uniq[i].tobytes()
            if key not in lookup:
                raise ValidationError(
                    f"covariate cell {tuple(uniq[i])} was empty at fit time"
                )
            vals[i] = lookup[key]
        return vals[np.ravel(inv)]
    z = fit.design.build_matrix(x) @ fit.coefficients
    return expit(z) if fit.family == "logistic" else z
