import numpy as np
import pytest

from trialengage import BUILTIN_SPECS, CompositeDataset
from trialengage.data import MISSING


@pytest.fixture
def d6() -> CompositeDataset:
    """Six-row reference dataset: per-x contrasts 1 and 0, X uniform."""
    return CompositeDataset.make(
        ids=[1, 2, 3, 4, 5, 6],
        x=np.array([[0.0], [0.0], [1.0], [1.0], [0.0], [1.0]]),
        s=[1, 1, 1, 1, 0, 0],
        a=[1, 0, 1, 0, MISSING, MISSING],
        y=[1, 0, 1, 1, MISSING, MISSING],
    )


@pytest.fixture
def baseline_law():
    return BUILTIN_SPECS["baseline"]()


@pytest.fixture
def interaction_law():
    return BUILTIN_SPECS["interaction"]()


@pytest.fixture
def latent_shift_law():
    return BUILTIN_SPECS["latent-shift"]()


@pytest.fixture
def multiplicative_law():
    return BUILTIN_SPECS["multiplicative"]()


def make_trial_dataset(rng: np.random.Generator, *, n_cells: int = 2,
                       n_per_cell: int = 30,
                       with_target: bool = True) -> CompositeDataset:
    """Random discrete dataset with every (x, a) trial cell nonempty."""
    ids, xs, ss, aa, yy = [], [], [], [], []
    next_id = 0
    for cell in range(n_cells):
        n_trial = int(rng.integers(4, n_per_cell))
        n_tgt = int(rng.integers(1, n_per_cell)) if with_target else 0
        arms = rng.integers(0, 2, size=n_trial)
        while arms.sum() == 0 or arms.sum() == n_trial:
            arms = rng.integers(0, 2, size=n_trial)
        for arm in arms:
            ids.append(next_id)
            next_id += 1
            xs.append(float(cell))
            ss.append(1)
            aa.append(int(arm))
            yy.append(int(rng.integers(0, 2)))
        for _ in range(n_tgt):
            ids.append(next_id)
            next_id += 1
            xs.append(float(cell))
            ss.append(0)
            aa.append(MISSING)
            yy.append(MISSING)
    return CompositeDataset.make(ids, np.asarray(xs)[:, None], ss, aa, yy)
