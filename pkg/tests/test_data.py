"""Composite dataset structure: validation rules, cells, grouped counts."""

import numpy as np
import pytest

from trialengage import _kernels as K
from trialengage.data import MISSING, CompositeDataset
from trialengage.errors import ValidationError


def rows(**overrides):
    base = dict(
        ids=[10, 11, 12, 13],
        x=[[0.0], [0.0], [1.0], [1.0]],
        s=[1, 1, 0, 0],
        a=[1, 0, MISSING, MISSING],
        y=[1, 0, MISSING, MISSING],
        control=[0, 0, 0, 0],
    )
    base.update(overrides)
    return base


def test_make_accepts_well_formed_rows():
    data = CompositeDataset.make(**rows())
    assert data.n == 4 and data.n_trial == 2 and data.n_target == 2
    assert data.n_covariates == 1
    assert data.design == "nested"


def test_flat_covariate_vector_is_reshaped():
    data = CompositeDataset.make(**rows(x=[0.0, 0.0, 1.0, 1.0]))
    assert data.x.shape == (4, 1)


@pytest.mark.parametrize("overrides,message", [
    (dict(ids=[10, 10, 12, 13]), "not unique"),
    (dict(s=[1, 2, 0, 0]), "row id 11: s must be 0 or 1"),
    (dict(a=[1, MISSING, MISSING, MISSING]), "row id 11: trial row missing treatment"),
    (dict(y=[1, MISSING, MISSING, MISSING]), "row id 11: trial row missing outcome"),
    (dict(control=[0, 1, 0, 0]), "row id 11: control flag is only valid on s=0"),
    (dict(a=[1, 0, 1, MISSING]), "row id 12: treatment recorded on a non-trial row"),
    (dict(y=[1, 0, 1, MISSING]), "row id 12: outcome recorded on a non-trial row"),
    (dict(control=[0, 0, 1, 0], a=[1, 0, 1, MISSING], y=[1, 0, 1, MISSING]),
     "row id 12: control-flagged row must have a = 0"),
    (dict(control=[0, 0, 1, 0], a=[1, 0, 0, MISSING]),
     "row id 12: control-flagged row must carry outcome"),
    (dict(x=[[0.0], [np.nan], [1.0], [1.0]]), "non-finite"),
    (dict(design="pooled"), "design tag"),
])
def test_validation_cites_offending_row(overrides, message):
    with pytest.raises(ValidationError, match=message):
        CompositeDataset.make(**rows(**overrides))


def test_empty_dataset_rejected():
    with pytest.raises(ValidationError, match="no rows"):
        CompositeDataset.make(ids=[], x=np.zeros((0, 1)), s=[], a=[], y=[])


def test_column_length_mismatch_rejected():
    with pytest.raises(ValidationError, match="column 's'"):
        CompositeDataset.make(**rows(s=[1, 1, 0]))


def test_control_flagged_row_is_legal():
    data = CompositeDataset.make(**rows(control=[0, 0, 1, 0],
                                        a=[1, 0, 0, MISSING],
                                        y=[1, 0, 1, MISSING]))
    assert data.control.sum() == 1


def test_cells_sorted_and_coded():
    data = CompositeDataset.make(**rows(x=[[1.0], [0.0], [1.0], [0.0]],
                                        a=[1, 0, MISSING, MISSING],
                                        y=[1, 0, MISSING, MISSING]))
    cells, codes = data.cells()
    np.testing.assert_array_equal(cells, [[0.0], [1.0]])
    np.testing.assert_array_equal(codes, [1, 0, 1, 0])
    assert data.cells() is data.cells()  # cached


def test_counts_layout(d6):
    counts = d6.counts()
    assert counts.shape == (2, K.N_COUNT_COLS)
    # columns: n_all, trial a=0, trial a=1, ysum a=0, ysum a=1,
    #          n s=0, n control, ysum control
    np.testing.assert_array_equal(counts[0], [3, 1, 1, 0, 1, 1, 0, 0])
    np.testing.assert_array_equal(counts[1], [3, 1, 1, 1, 1, 1, 0, 0])
    assert counts is d6.counts()  # cached
    assert counts[:, 0].sum() == d6.n


def test_take_is_multiset_selection(d6):
    sub = d6.take(np.array([0, 0, 5]))
    assert sub.n == 3
    np.testing.assert_array_equal(sub.ids, [1, 1, 6])
    np.testing.assert_array_equal(sub.s, [1, 1, 0])
    # resamples skip validation by design: duplicate ids must not raise here
    counts = sub.counts()
    assert counts[:, 0].sum() == 3


def test_with_design_resets_caches(d6):
    d6.counts()
    tagged = d6.with_design("non-nested")
    assert tagged.design == "non-nested"
    assert tagged._counts is None
    np.testing.assert_array_equal(tagged.counts(), d6.counts())
    with pytest.raises(ValidationError):
        d6.with_design("pooled")
