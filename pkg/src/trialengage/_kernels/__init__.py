"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-numpy fallback
is otherwise used (or forced via ``TRIALENGAGE_PURE_PYTHON=1``). Both expose
the same functions with bit-identical integer outputs, so the choice never
affects results, only speed.
"""

import os

from . import _fallback
from ._fallback import (  # noqa: F401  (layout constants are backend-independent)
    C_N_ALL, C_N_CTRL, C_N_S0, C_TRIAL_A0, C_TRIAL_A1, C_YSUM_A0, C_YSUM_A1,
    C_YSUM_CTRL, N_COUNT_COLS, N_SLOTS, SLOT_A0, SLOT_A1, SLOT_E00, SLOT_E01,
    SLOT_E10, SLOT_E11, SLOT_S, SLOT_U, SLOT_V, SLOT_X,
)

if os.environ.get("TRIALENGAGE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
simulate_columns = _impl.simulate_columns
cell_counts = _impl.cell_counts
resampled_cell_counts = _impl.resampled_cell_counts
