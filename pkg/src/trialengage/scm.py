"""Structural simulator for joint participation-and-treatment interventions.

Units carry a discrete covariate x, a latent binary u confounding usual-care
treatment, an optional latent binary v that shifts all outcome means and may
drive participation (breaking participation exchangeability while preserving
contrast-level conditions), and four potential outcomes Y^{s,a} indexed by
participation s and treatment a. Consistency holds by construction: observed
(a, y) equal the potential values matching the realized s.

Randomness contract: unit i owns the fixed slot block [i*W, (i+1)*W) of the
PCG64 raw stream keyed by the dataset seed (W = 10). Any worker can therefore
reproduce any unit range bit-for-bit via `unit_uniforms`, and results are
reproducible across runs and backends for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np
from numpy.random import PCG64, SeedSequence

from . import _kernels as K
from .data import MISSING, CompositeDataset
from .errors import PositivityError, ValidationError

COUPLINGS = ("shared-latent", "independent")
PROB_TOL = 1e-9


def derive_seed(master: int, *path: int) -> int:
    """Stable child seed for (master, path); order- and worker-independent."""
    ss = SeedSequence(master, spawn_key=tuple(int(p) for p in path))
    lo, hi = ss.generate_state(2, np.uint64)
    return (int(hi) << 64) | int(lo)


def unit_uniforms(seed: int, lo: int, hi: int,
                  width: int = K.N_SLOTS) -> np.ndarray:
    """Uniform slot matrix for units [lo, hi); row i-lo belongs to unit i.

    Seeks in O(1) using PCG64.advance; `unit_uniforms(seed, 0, n)` equals the
    first n*width doubles of `Generator(PCG64(seed)).random(...)`.
    """
    if not 0 <= lo <= hi:
        raise ValidationError("unit range must satisfy 0 <= lo <= hi")
    bg = PCG64(seed)
    if lo:
        bg.advance(lo * width)
    raw = bg.random_raw((hi - lo) * width)
    return ((raw >> np.uint64(11)) * 2.0 ** -53).reshape(hi - lo, width)


@dataclass(frozen=True)
class VBlock:
    """Optional latent shifter: Pr[V=1] and the additive mean shift delta_v."""

    p_v: float
    delta_v: float


@dataclass(frozen=True)
class ScmSpec:
    """Generative law of the simulator.

    mean_table[s][a][x][u] is E[Y^{s,a} | x, u] before the v shift; p_s may be
    given per x or per (x, v); p_a_usual[x][u] is the usual-care treatment
    probability (latently confounded through u); e_trial is the randomized
    assignment probability inside the trial.
    """

    x_support: tuple[tuple[float, ...], ...]
    x_probs: tuple[float, ...]
    u_given_x: tuple[float, ...]
    p_s: tuple
    e_trial: float
    p_a_usual: tuple[tuple[float, float], ...]
    mean_table: tuple
    v_block: VBlock | None = None
    coupling: str = "shared-latent"

    # -- normalized array views ------------------------------------------------

    @cached_property
    def n_categories(self) -> int:
        return len(self.x_support)

    @cached_property
    def x_values(self) -> np.ndarray:
        return np.asarray(self.x_support, dtype=np.float64)

    @cached_property
    def x_cdf(self) -> np.ndarray:
        cdf = np.cumsum(np.asarray(self.x_probs, dtype=np.float64))
        cdf[-1] = 1.0
        return cdf

    @cached_property
    def ps_table(self) -> np.ndarray:
        """(K, 2) participation probability by [x, v]."""
        rows = []
        for entry in self.p_s:
            if np.isscalar(entry):
                rows.append((float(entry), float(entry)))
            else:
                rows.append((float(entry[0]), float(entry[1])))
        return np.asarray(rows, dtype=np.float64)

    @cached_property
    def pa_table(self) -> np.ndarray:
        return np.asarray(self.p_a_usual, dtype=np.float64)

    @cached_property
    def means(self) -> np.ndarray:
        return np.asarray(self.mean_table, dtype=np.float64)

    @cached_property
    def delta_v(self) -> float:
        return self.v_block.delta_v if self.v_block else 0.0

    @cached_property
    def p_v(self) -> float:
        return self.v_block.p_v if self.v_block else 0.0

    def to_obj(self) -> dict:
        obj = {
            "x_support": [list(v) for v in self.x_support],
            "x_probs": list(self.x_probs),
            "u_given_x": list(self.u_given_x),
            "p_s": [e if np.isscalar(e) else list(e) for e in self.p_s],
            "e_trial": self.e_trial,
            "p_a_usual": [list(r) for r in self.p_a_usual],
            "mean_table": np.asarray(self.mean_table).tolist(),
            "coupling": self.coupling,
        }
        if self.v_block is not None:
            obj["v_block"] = {"p_v": self.v_block.p_v, "delta_v": self.v_block.delta_v}
        return obj

    @staticmethod
    def from_obj(obj: dict) -> "ScmSpec":
        if not isinstance(obj, dict):
            raise ValidationError("simulator spec must be a JSON object")
        required = ("x_support", "x_probs", "u_given_x", "p_s", "e_trial",
                    "p_a_usual", "mean_table")
        for key in required:
            if key not in obj:
                raise ValidationError(f"simulator spec missing field {key!r}")
        support = tuple(
            tuple(float(c) for c in (v if isinstance(v, (list, tuple)) else (v,)))
            for v in obj["x_support"]
        )
        vb = obj.get("v_block")
        v_block = None
        if vb is not None:
            if not isinstance(vb, dict) or "p_v" not in vb or "delta_v" not in vb:
                raise ValidationError("v_block must carry p_v and delta_v")
            v_block = VBlock(float(vb["p_v"]), float(vb["delta_v"]))
        spec = ScmSpec(
            x_support=support,
            x_probs=tuple(float(p) for p in obj["x_probs"]),
            u_given_x=tuple(float(p) for p in obj["u_given_x"]),
            p_s=tuple(
                float(e) if np.isscalar(e) else tuple(float(q) for q in e)
                for e in obj["p_s"]
            ),
            e_trial=float(obj["e_trial"]),
            p_a_usual=tuple(tuple(float(q) for q in row) for row in obj["p_a_usual"]),
            mean_table=_nested_tuple(obj["mean_table"]),
            v_block=v_block,
            coupling=str(obj.get("coupling", "shared-latent")),
        )
        validate_spec(spec)
        return spec


def _nested_tuple(value):
    if isinstance(value, (list, tuple)):
        return tuple(_nested_tuple(v) for v in value)
    return float(value)


def validate_spec(spec: ScmSpec) -> None:
    """Reject malformed generative laws with a field-specific message."""
    k = spec.n_categories
    if k < 1:
        raise ValidationError("x_support is empty")
    if len({tuple(v) for v in spec.x_support}) != k:
        raise ValidationError("x_support values must be distinct")
    if len(spec.x_probs) != k or len(spec.u_given_x) != k or len(spec.p_s) != k:
        raise ValidationError("x_probs, u_given_x, and p_s must match x_support length")
    widths = {len(v) for v in spec.x_support}
    if len(widths) != 1:
        raise ValidationError("x_support rows must share one covariate width")
    probs = np.asarray(spec.x_probs, dtype=np.float64)
    if np.any(probs < 0.0):
        raise ValidationError("x_probs must be nonnegative")
    if abs(float(probs.sum()) - 1.0) > PROB_TOL:
        raise ValidationError(f"x_probs sum to {probs.sum():.12f}, expected 1")
    for name, arr in (("u_given_x", np.asarray(spec.u_given_x, dtype=np.float64)),
                      ("p_a_usual", spec.pa_table)):
        if np.any((arr < 0.0) | (arr > 1.0)):
            raise ValidationError(f"{name} entries must lie in [0, 1]")
    if spec.pa_table.shape != (k, 2):
        raise ValidationError("p_a_usual must have one (u=0, u=1) pair per x")
    ps = spec.ps_table
    if np.any((ps <= 0.0) | (ps >= 1.0)):
        raise PositivityError(
            "participation probability p_s must lie strictly inside (0, 1) "
            "(structural positivity, condition A5)"
        )
    if spec.v_block is None and np.any(ps[:, 0] != ps[:, 1]):
        raise ValidationError("p_s varies with v but no v_block is declared")
    if not 0.0 < spec.e_trial < 1.0:
        raise PositivityError(
            "trial assignment probability e_trial must lie strictly inside "
            "(0, 1) (structural positivity, condition A4)"
        )
    means = spec.means
    if means.shape != (2, 2, k, 2):
        raise ValidationError(
            f"mean_table must have shape (2, 2, {k}, 2) indexed [s][a][x][u], "
            f"got {means.shape}"
        )
    lo, hi = float(means.min()), float(means.max())
    if lo < 0.0 or hi > 1.0:
        raise ValidationError("mean_table entries must lie in [0, 1]")
    if spec.v_block is not None:
        if not 0.0 <= spec.p_v <= 1.0:
            raise ValidationError("v_block.p_v must lie in [0, 1]")
        if hi + max(spec.delta_v, 0.0) > 1.0 or lo + min(spec.delta_v, 0.0) < 0.0:
            raise ValidationError(
                "mean_table plus delta_v leaves [0, 1]; shrink delta_v or the means"
            )
    if spec.coupling not in COUPLINGS:
        raise ValidationError(
            f"coupling must be one of {COUPLINGS}, got {spec.coupling!r}"
        )


# ---------------------------------------------------------------------------
# Generation


@dataclass(eq=False)
class PotentialOutcomeDataset:
    """Simulated units with all four potential outcomes (verification only)."""

    spec: ScmSpec
    seed: int
    ids: np.ndarray
    x_index: np.ndarray
    u: np.ndarray
    v: np.ndarray
    s: np.ndarray
    a_s0: np.ndarray
    a_s1: np.ndarray
    a: np.ndarray
    y00: np.ndarray
    y01: np.ndarray
    y10: np.ndarray
    y11: np.ndarray
    y: np.ndarray
    eps: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def x_values(self) -> np.ndarray:
        return self.spec.x_values[self.x_index]

    def potential_outcome(self, s: int, a: int) -> np.ndarray:
        return (self.y00, self.y01, self.y10, self.y11)[2 * s + a]


def generate(spec: ScmSpec, n: int, seed: int,
             unit_range: tuple[int, int] | None = None) -> PotentialOutcomeDataset:
    """Draw n units under the spec's law; bit-reproducible for a given seed.

    ``unit_range=(lo, hi)`` generates only that slice of the same population,
    identical to the corresponding rows of the full run.
    """
    validate_spec(spec)
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError("n must be a positive integer")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError("seed must be a nonnegative integer")
    lo, hi = (0, n) if unit_range is None else unit_range
    if not 0 <= lo < hi <= n:
        raise ValidationError(f"unit_range {unit_range} not within [0, {n})")
    un = unit_uniforms(seed, lo, hi)
    xi, u, v, s, a0, a1, a, y00, y01, y10, y11, y = K.simulate_columns(
        un, spec.x_cdf, np.asarray(spec.u_given_x, dtype=np.float64),
        spec.p_v, spec.v_block is not None, spec.ps_table, spec.e_trial,
        spec.pa_table, spec.means, spec.delta_v,
        spec.coupling == "shared-latent",
    )
    if spec.coupling == "shared-latent":
        eps = un[:, K.SLOT_E00].copy()
    else:
        eps = un[:, K.SLOT_E00:K.SLOT_E11 + 1].copy()
    ids = np.arange(lo, hi, dtype=np.int64)
    return PotentialOutcomeDataset(spec, int(seed), ids, xi, u, v, s, a0, a1, a,
                                   y00, y01, y10, y11, y, eps)


def to_composite(pod: PotentialOutcomeDataset, design: str = "nested", *,
                 f_trial: float = 1.0, f_target: float = 1.0,
                 seed: int | None = None,
                 control_outcomes: bool = False) -> CompositeDataset:
    """Project simulated units onto the composite observed-data structure.

    Nested design keeps every unit; the non-nested design retains trial and
    target rows independently with probabilities f_trial and f_target (seeded).
    With ``control_outcomes=True``, s=0 units whose usual-care treatment came
    out 0 keep their observed outcome and are control-flagged.
    """
    if design == "nested":
        if f_trial != 1.0 or f_target != 1.0:
            raise ValidationError("sampling fractions apply to the non-nested design only")
        keep = np.ones(pod.n, dtype=bool)
    elif design == "non-nested":
        if not (0.0 < f_trial <= 1.0 and 0.0 < f_target <= 1.0):
            raise ValidationError("sampling fractions must lie in (0, 1]")
        if seed is None:
            raise ValidationError("the non-nested design subsamples and requires a seed")
        draws = np.random.default_rng(derive_seed(seed, 1)).random(pod.n)
        keep = draws < np.where(pod.s == 1, f_trial, f_target)
        if not np.any(keep & (pod.s == 1)) or not np.any(keep & (pod.s == 0)):
            raise ValidationError("subsampling emptied a population stratum")
    else:
        raise ValidationError(f"unknown sampling design tag {design!r}")

    s = pod.s[keep]
    a = np.where(s == 1, pod.a[keep], MISSING).astype(np.int8)
    y = np.where(s == 1, pod.y[keep], MISSING).astype(np.int8)
    control = np.zeros(len(s), dtype=np.uint8)
    if control_outcomes:
        flag = (s == 0) & (pod.a_s0[keep] == 0)
        control[flag] = 1
        a[flag] = 0
        y[flag] = pod.y[keep][flag]
    return CompositeDataset.make(pod.ids[keep], pod.x_values[keep], s, a, y,
                                 control, design)


# ---------------------------------------------------------------------------
# Exact enumeration of estimands and identification conditions


def _cell_weights(spec: ScmSpec):
    """Joint Pr[x, u, v] over the discrete latent grid."""
    pu = np.asarray(spec.u_given_x, dtype=np.float64)
    pv = spec.p_v if spec.v_block else 0.0
    f = np.asarray(spec.x_probs, dtype=np.float64)
    for xi in range(spec.n_categories):
        for u, v in product((0, 1), (0, 1)):
            w = f[xi] * (pu[xi] if u else 1.0 - pu[xi]) * (pv if v else 1.0 - pv)
            yield xi, u, v, w


@dataclass(frozen=True)
class TrueEstimands:
    """Exact estimand values enumerated from a spec (no simulation error)."""

    ate_usual: float            # E[Y^{s=0,a=1} - Y^{s=0,a=0}]
    ate_trialctx: float         # E[Y^{s=1,a=1} - Y^{s=1,a=0}]
    ate_single: float           # E[Y^{a=1} - Y^{a=0}], participation natural
    ate_usual_s0: float         # usual-care ATE inside the nonparticipant stratum
    contrasts_by_x: tuple[tuple[float, ...], ...]  # [s][x] conditional contrasts

    def to_obj(self) -> dict:
        return {
            "ate_usual": self.ate_usual,
            "ate_trialctx": self.ate_trialctx,
            "ate_single": self.ate_single,
            "ate_usual_s0": self.ate_usual_s0,
            "contrasts_by_x": {
                "s=0": list(self.contrasts_by_x[0]),
                "s=1": list(self.contrasts_by_x[1]),
            },
        }


def true_estimands(spec: ScmSpec) -> TrueEstimands:
    validate_spec(spec)
    m = spec.means
    pu = np.asarray(spec.u_given_x, dtype=np.float64)
    f = np.asarray(spec.x_probs, dtype=np.float64)
    pv = spec.p_v if spec.v_block else 0.0
    k = spec.n_categories

    # Per-x contrasts: the v shift cancels, u marginalized at Pr[u | x].
    delta = np.zeros((2, k))
    for s in (0, 1):
        for xi in range(k):
            delta[s, xi] = ((1.0 - pu[xi]) * (m[s, 1, xi, 0] - m[s, 0, xi, 0])
                            + pu[xi] * (m[s, 1, xi, 1] - m[s, 0, xi, 1]))
    ate_usual = float(f @ delta[0])
    ate_trialctx = float(f @ delta[1])

    single = 0.0
    w_s0 = np.zeros(k)
    for xi, u, v, w in _cell_weights(spec):
        ps = spec.ps_table[xi, v]
        single += w * (ps * (m[1, 1, xi, u] - m[1, 0, xi, u])
                       + (1.0 - ps) * (m[0, 1, xi, u] - m[0, 0, xi, u]))
        w_s0[xi] += w * (1.0 - ps)
    ate_usual_s0 = float((w_s0 / w_s0.sum()) @ delta[0])

    return TrueEstimands(ate_usual, ate_trialctx, float(single), ate_usual_s0,
                         (tuple(delta[0]), tuple(delta[1])))


def naive_usual_care_contrast(spec: ScmSpec) -> float:
    """What E[Y | A=1, S=0] - E[Y | A=0, S=0] converges to under the spec.

    The observational usual-care contrast is confounded through u, so this
    generally differs from the usual-care ATE; the verifier uses it as the
    oracle for the non-identification demonstration.
    """
    num = [0.0, 0.0]
    den = [0.0, 0.0]
    m = spec.means
    for xi, u, v, w in _cell_weights(spec):
        p_s0 = 1.0 - spec.ps_table[xi, v]
        pa = spec.pa_table[xi, u]
        shift = spec.delta_v * v
        for arm, p_arm in ((1, pa), (0, 1.0 - pa)):
            mass = w * p_s0 * p_arm
            num[arm] += mass * (m[0, arm, xi, u] + shift)
            den[arm] += mass
    if den[0] <= 0.0 or den[1] <= 0.0:
        raise ValidationError("a usual-care treatment arm has zero probability")
    return float(num[1] / den[1] - num[0] / den[0])


@dataclass(frozen=True)
class ConditionReport:
    """Exact audit of the identification conditions a spec satisfies.

    Gaps are worst-case discrepancies over covariate (and latent) cells:
    a2 compares each potential-outcome law across participation strata,
    a6 measures the individual-level contrast of contrasts under the
    coupling, a7 compares mean contrasts across the two participation
    contexts, a8 compares the trial-context contrast between participants
    and the whole population.
    """

    a2_holds: bool
    a2_gap: float
    a6_holds: bool
    a6_gap: float
    a7_holds: bool
    a7_gap: float
    a8_holds: bool
    a8_gap: float
    coupling: str
    tolerance: float

    def to_obj(self) -> dict:
        return {
            "a2": {"holds": self.a2_holds, "gap": self.a2_gap},
            "a6": {"holds": self.a6_holds, "gap": self.a6_gap},
            "a7": {"holds": self.a7_holds, "gap": self.a7_gap},
            "a8": {"holds": self.a8_holds, "gap": self.a8_gap},
            "coupling": self.coupling,
            "tolerance": self.tolerance,
        }


def _a6_cell_gap_shared(t: np.ndarray) -> float:
    """E|Y11 - Y10 - Y01 + Y00| for threshold coupling: exact interval sweep."""
    t11, t10, t01, t00 = t
    points = sorted({0.0, 1.0, t11, t10, t01, t00})
    total = 0.0
    for left, right in zip(points, points[1:]):
        mid = 0.5 * (left + right)
        c = ((1 if mid <= t11 else 0) - (1 if mid <= t10 else 0)
             - (1 if mid <= t01 else 0) + (1 if mid <= t00 else 0))
        total += abs(c) * (right - left)
    return total


def _a6_cell_gap_independent(t: np.ndarray) -> float:
    """Same quantity when the four outcomes are independent Bernoullis."""
    t11, t10, t01, t00 = t
    total = 0.0
    for y11, y10, y01, y00 in product((0, 1), repeat=4):
        p = ((t11 if y11 else 1 - t11) * (t10 if y10 else 1 - t10)
             * (t01 if y01 else 1 - t01) * (t00 if y00 else 1 - t00))
        total += p * abs(y11 - y10 - y01 + y00)
    return total


def check_conditions(spec: ScmSpec, tolerance: float = 1e-12) -> ConditionReport:
    validate_spec(spec)
    m = spec.means
    est = true_estimands(spec)
    delta0 = np.asarray(est.contrasts_by_x[0])
    delta1 = np.asarray(est.contrasts_by_x[1])
    a7_gap = float(np.max(np.abs(delta1 - delta0)))

    pu = np.asarray(spec.u_given_x, dtype=np.float64)
    pv = spec.p_v if spec.v_block else 0.0
    k = spec.n_categories

    a2_gap = 0.0
    a8_gap = 0.0
    for xi in range(k):
        # latent-cell weights within x, conditional on each participation value
        w1 = np.zeros((2, 2))
        w0 = np.zeros((2, 2))
        for u, v in product((0, 1), (0, 1)):
            base = (pu[xi] if u else 1.0 - pu[xi]) * (pv if v else 1.0 - pv)
            ps = spec.ps_table[xi, v]
            w1[u, v] = base * ps
            w0[u, v] = base * (1.0 - ps)
        w1 /= w1.sum()
        w0 /= w0.sum()
        for s, a in product((0, 1), (0, 1)):
            mean1 = sum(w1[u, v] * (m[s, a, xi, u] + spec.delta_v * v)
                        for u, v in product((0, 1), (0, 1)))
            mean0 = sum(w0[u, v] * (m[s, a, xi, u] + spec.delta_v * v)
                        for u, v in product((0, 1), (0, 1)))
            a2_gap = max(a2_gap, abs(mean1 - mean0))
        contrast_in_trial = sum(w1[u, v] * (m[1, 1, xi, u] - m[1, 0, xi, u])
                                for u, v in product((0, 1), (0, 1)))
        a8_gap = max(a8_gap, abs(contrast_in_trial - delta1[xi]))

    a6_gap = 0.0
    cell_gap = (_a6_cell_gap_shared if spec.coupling == "shared-latent"
                else _a6_cell_gap_independent)
    for xi in range(k):
        for u, v in product((0, 1), (0, 1)):
            if spec.v_block is None and v == 1:
                continue
            shift = spec.delta_v * v
            t = np.array([m[1, 1, xi, u], m[1, 0, xi, u],
                          m[0, 1, xi, u], m[0, 0, xi, u]]) + shift
            a6_gap = max(a6_gap, cell_gap(t))

    return ConditionReport(
        a2_holds=a2_gap <= tolerance, a2_gap=a2_gap,
        a6_holds=a6_gap <= tolerance, a6_gap=a6_gap,
        a7_holds=a7_gap <= tolerance, a7_gap=a7_gap,
        a8_holds=a8_gap <= tolerance, a8_gap=a8_gap,
        coupling=spec.coupling, tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Builtin generative laws used by the verification scenarios


def linear_mean_table(k: int, *, intercept: float, a: float = 0.0, s: float = 0.0,
                      u: float = 0.0, sa: float = 0.0,
                      x_coefs: tuple[float, ...] | None = None) -> tuple:
    """mean[s][a][x][u] = intercept + a*A + s*S + u*U + sa*S*A + x_coefs[x]."""
    xc = x_coefs if x_coefs is not None else (0.0,) * k
    if len(xc) != k:
        raise ValidationError("x_coefs must have one entry per covariate value")
    return tuple(
        tuple(
            tuple(
                tuple(intercept + a * ai + s * si + u * ui + sa * si * ai + xc[xi]
                      for ui in (0, 1))
                for xi in range(k)
            )
            for ai in (0, 1)
        )
        for si in (0, 1)
    )


def baseline_spec() -> ScmSpec:
    """Additive law, no s-by-a interaction: both context ATEs equal 0.3."""
    return ScmSpec(
        x_support=((0.0,), (1.0,)),
        x_probs=(0.5, 0.5),
        u_given_x=(0.5, 0.5),
        p_s=(0.5, 0.5),
        e_trial=0.5,
        p_a_usual=((0.3, 0.7), (0.3, 0.7)),
        mean_table=linear_mean_table(2, intercept=0.1, a=0.3, s=0.2, u=0.1),
    )


def interaction_spec() -> ScmSpec:
    """Adds a +0.2 s-by-a interaction: trial-context ATE 0.5, usual-care 0.3."""
    return ScmSpec(
        x_support=((0.0,), (1.0,)),
        x_probs=(0.5, 0.5),
        u_given_x=(0.5, 0.5),
        p_s=(0.5, 0.5),
        e_trial=0.5,
        p_a_usual=((0.3, 0.7), (0.3, 0.7)),
        mean_table=linear_mean_table(2, intercept=0.1, a=0.3, s=0.2, u=0.1, sa=0.2),
    )


def latent_shift_spec() -> ScmSpec:
    """Participation exchangeability fails through v, contrast conditions hold."""
    return ScmSpec(
        x_support=((0.0,), (1.0,)),
        x_probs=(0.5, 0.5),
        u_given_x=(0.5, 0.5),
        p_s=((0.3, 0.7), (0.3, 0.7)),
        e_trial=0.5,
        p_a_usual=((0.3, 0.7), (0.3, 0.7)),
        mean_table=linear_mean_table(2, intercept=0.1, a=0.3, s=0.2, u=0.1),
        v_block=VBlock(p_v=0.5, delta_v=0.1),
    )


def multiplicative_spec() -> ScmSpec:
    """Constant outcome ratio r=2 across contexts; additive transport fails.

    Usual care never administers the experimental treatment here, so every
    nonparticipant outcome is a control-regime outcome and the composite can
    carry the control flag without selection on u.
    """
    k = 2
    r = 2.0
    base = [tuple(0.1 + 0.1 * xi + 0.05 * ui for ui in (0, 1)) for xi in range(k)]
    engaged = [tuple(b + 0.05 for b in row) for row in base]
    table = (
        (tuple(base), tuple(tuple(b * r for b in row) for row in base)),
        (tuple(engaged), tuple(tuple(b * r for b in row) for row in engaged)),
    )
    return ScmSpec(
        x_support=((0.0,), (1.0,)),
        x_probs=(0.5, 0.5),
        u_given_x=(0.5, 0.5),
        p_s=(0.5, 0.5),
        e_trial=0.5,
        p_a_usual=((0.0, 0.0), (0.0, 0.0)),
        mean_table=table,
    )


BUILTIN_SPECS = {
    "baseline": baseline_spec,
    "interaction": interaction_spec,
    "latent-shift": latent_shift_spec,
    "multiplicative": multiplicative_spec,
}
