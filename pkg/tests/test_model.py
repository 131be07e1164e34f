import numpy as np
import pytest

from cpaltls.errors import DegenerateComponentError, DimensionError
from cpaltls.model import KruskalModel


def test_shape_and_rank(rng):
    m = KruskalModel(np.ones(3), (rng.standard_normal((4, 3)), rng.standard_normal((5, 3))))
    assert (m.rank, m.ndim, m.shape) == (3, 2, (4, 5))


def test_column_count_mismatch():
    with pytest.raises(DimensionError):
        KruskalModel(np.ones(2), (np.ones((3, 2)), np.ones((3, 3))))


def test_needs_factors_and_rank():
    with pytest.raises(DimensionError):
        KruskalModel(np.ones(2), ())
    with pytest.raises(DimensionError):
        KruskalModel(np.ones(0), (np.ones((3, 0)),))


def test_normalized_preserves_tensor(rng):
    m = KruskalModel(rng.standard_normal(2), tuple(rng.standard_normal((i, 2)) for i in (3, 4, 2)))
    n = m.normalized()
    assert n.is_normalized()
    np.testing.assert_allclose(n.full(), m.full(), atol=1e-12)


def test_normalized_zero_column():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DegenerateComponentError) as err:
        KruskalModel(np.ones(2), (np.eye(2), a)).normalized()
    assert (err.value.column, err.value.mode) == (1, 1)


def test_permuted_preserves_tensor(rng):
    m = KruskalModel(rng.standard_normal(3), tuple(rng.standard_normal((i, 3)) for i in (3, 4)))
    np.testing.assert_allclose(m.permuted([2, 0, 1]).full(), m.full(), atol=1e-12)


def test_copy_is_independent(rng):
    m = KruskalModel(np.ones(2), (rng.standard_normal((3, 2)),))
    c = m.copy()
    c.factors[0][0, 0] = 99.0
    assert m.factors[0][0, 0] != 99.0
