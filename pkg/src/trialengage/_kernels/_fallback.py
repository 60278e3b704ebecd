"""Pure-numpy kernel implementations.

Reference semantics for the compiled twin in ``_core.pyx``. Every kernel
returns integer arrays only; float arithmetic happens in the calling code so
the two backends produce bit-identical results. Comparison conventions are
part of the contract: Bernoulli draws use ``uniform < p`` (strict), outcome
thresholds use ``eps <= t``.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

# Column layout of the count matrices produced below.
C_N_ALL = 0        # rows in the cell
C_TRIAL_A0 = 1     # trial rows, control arm
C_TRIAL_A1 = 2     # trial rows, treated arm
C_YSUM_A0 = 3      # outcome successes among trial control rows
C_YSUM_A1 = 4      # outcome successes among trial treated rows
C_N_S0 = 5         # non-trial rows
C_N_CTRL = 6       # control-flagged non-trial rows with outcomes
C_YSUM_CTRL = 7    # outcome successes among control-flagged rows
N_COUNT_COLS = 8

# Per-unit uniform slot layout used by simulate_columns. Fixed width keeps
# both couplings aligned on the same stream so that changing only the mean
# table reuses identical draws.
SLOT_X, SLOT_U, SLOT_V, SLOT_S, SLOT_A1, SLOT_A0 = 0, 1, 2, 3, 4, 5
SLOT_E00, SLOT_E01, SLOT_E10, SLOT_E11 = 6, 7, 8, 9
N_SLOTS = 10


def simulate_columns(uniforms, x_cdf, u_given_x, p_v, has_v, p_s, e_trial,
                     p_a_usual, mean_table, delta_v, shared):
    """Transform per-unit uniforms into simulated columns.

    Parameters are pre-validated arrays: ``x_cdf`` (K,) cumulative with last
    entry exactly 1.0, ``u_given_x`` (K,), ``p_s`` (K, 2) indexed by [x, v],
    ``p_a_usual`` (K, 2) indexed by [x, u], ``mean_table`` (2, 2, K, 2)
    indexed by [s, a, x, u]. Returns int64 cell indices plus int8 columns
    (u, v, s, a_s0, a_s1, a, y00, y01, y10, y11, y).
    """
    un = np.asarray(uniforms, dtype=np.float64)
    xi = np.searchsorted(x_cdf, un[:, SLOT_X], side="right").astype(np.int64)
    u = (un[:, SLOT_U] < u_given_x[xi]).astype(np.int8)
    if has_v:
        v = (un[:, SLOT_V] < p_v).astype(np.int8)
    else:
        v = np.zeros(len(xi), dtype=np.int8)
    s = (un[:, SLOT_S] < p_s[xi, v]).astype(np.int8)
    a1 = (un[:, SLOT_A1] < e_trial).astype(np.int8)
    a0 = (un[:, SLOT_A0] < p_a_usual[xi, u]).astype(np.int8)

    shift = delta_v * v.astype(np.float64)
    t00 = mean_table[0, 0][xi, u] + shift
    t01 = mean_table[0, 1][xi, u] + shift
    t10 = mean_table[1, 0][xi, u] + shift
    t11 = mean_table[1, 1][xi, u] + shift
    if shared:
        eps = un[:, SLOT_E00]
        y00 = (eps <= t00).astype(np.int8)
        y01 = (eps <= t01).astype(np.int8)
        y10 = (eps <= t10).astype(np.int8)
        y11 = (eps <= t11).astype(np.int8)
    else:
        y00 = (un[:, SLOT_E00] <= t00).astype(np.int8)
        y01 = (un[:, SLOT_E01] <= t01).astype(np.int8)
        y10 = (un[:, SLOT_E10] <= t10).astype(np.int8)
        y11 = (un[:, SLOT_E11] <= t11).astype(np.int8)

    a = np.where(s == 1, a1, a0).astype(np.int8)
    ys = np.where(s == 1, np.where(a == 1, y11, y10), np.where(a == 1, y01, y00))
    return xi, u, v, s, a0, a1, a, y00, y01, y10, y11, ys.astype(np.int8)


def _counts_from(cell, s, a, y, control, n_cells):
    out = np.zeros((n_cells, N_COUNT_COLS), dtype=np.int64)
    out[:, C_N_ALL] = np.bincount(cell, minlength=n_cells)
    trial0 = (s == 1) & (a == 0)
    trial1 = (s == 1) & (a == 1)
    out[:, C_TRIAL_A0] = np.bincount(cell[trial0], minlength=n_cells)
    out[:, C_TRIAL_A1] = np.bincount(cell[trial1], minlength=n_cells)
    out[:, C_YSUM_A0] = np.bincount(cell[trial0 & (y == 1)], minlength=n_cells)
    out[:, C_YSUM_A1] = np.bincount(cell[trial1 & (y == 1)], minlength=n_cells)
    s0 = s == 0
    out[:, C_N_S0] = np.bincount(cell[s0], minlength=n_cells)
    ctrl = s0 & (control != 0)
    out[:, C_N_CTRL] = np.bincount(cell[ctrl], minlength=n_cells)
    out[:, C_YSUM_CTRL] = np.bincount(cell[ctrl & (y == 1)], minlength=n_cells)
    return out


def cell_counts(cell, s, a, y, control, n_cells):
    """Grouped integer counts per covariate cell (one pass over the data)."""
    return _counts_from(cell, s, a, y, control, n_cells)


def resampled_cell_counts(cell, s, a, y, control, idx, n_cells):
    """Same as :func:`cell_counts` on the row multiset selected by ``idx``."""
    return _counts_from(cell[idx], s[idx], a[idx], y[idx], control[idx], n_cells)
