import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmm.errors import ConfigError
from dmm.metrics import confusion_matrix, metrics


def test_all_correct():
    m = metrics([0, 1, 2, 1], [0, 1, 2, 1], 3)
    assert (m.accuracy, m.macro_f1, m.balanced_accuracy) == (1.0, 1.0, 1.0)


def test_binary_hand_computed():
    m = metrics([1, 0, 0, 0], [1, 1, 0, 0], 2)
    assert m.accuracy == 0.75
    assert m.balanced_accuracy == 0.75
    assert m.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)
    assert abs(m.macro_f1 - 0.7333) < 1e-4


def test_constant_predictor():
    m = metrics([0] * 9, [0, 1, 2] * 3, 3)
    assert m.accuracy == pytest.approx(1 / 3)
    assert m.balanced_accuracy == pytest.approx(1 / 3)
    assert m.macro_f1 == pytest.approx(0.5 / 3)


def test_absent_class_excluded_from_balanced():
    m = metrics([0, 0, 1], [0, 0, 1], 3)
    assert m.balanced_accuracy == 1.0
    assert m.macro_f1 == pytest.approx(2 / 3)


def test_length_mismatch():
    with pytest.raises(ConfigError):
        metrics([0, 1], [0], 2)


def test_confusion_rows_are_truth():
    np.testing.assert_array_equal(confusion_matrix([1, 1], [0, 1], 2), [[0, 1], [0, 1]])


@given(st.integers(1, 4).flatmap(
    lambda k: st.tuples(st.just(k),
                        st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)),
                                 min_size=1, max_size=50))))
def test_ranges_and_row_sums(case):
    k, pairs = case
    pred, truth = map(np.array, zip(*pairs))
    m = metrics(pred, truth, k)
    for v in (m.accuracy, m.macro_f1, m.balanced_accuracy):
        assert 0.0 <= v <= 1.0
    np.testing.assert_array_equal(m.confusion.sum(axis=1), np.bincount(truth, minlength=k))
