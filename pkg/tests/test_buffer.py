import numpy as np
import pytest
from numpy.testing import assert_array_equal

from driftls.buffer import DataBuffer
from driftls.rng import make_rng


def test_append_and_views():
    buf = DataBuffer(3)
    assert len(buf) == 0
    assert buf.append([1.0, 0.0, 0.0], 2.0) == 1
    assert buf.append([0.0, 1.0, 0.0], -1.0) == 2
    assert_array_equal(buf.xs, [[1, 0, 0], [0, 1, 0]])
    assert_array_equal(buf.ys, [2.0, -1.0])


def test_views_are_read_only():
    buf = DataBuffer(2)
    buf.append([1.0, 2.0], 0.0)
    with pytest.raises((ValueError, RuntimeError)):
        buf.xs[0, 0] = 9.0
    with pytest.raises((ValueError, RuntimeError)):
        buf.ys[0] = 9.0


def test_growth_preserves_contents():
    buf = DataBuffer(2, capacity=4)
    rows = np.arange(20, dtype=float).reshape(10, 2)
    for i, r in enumerate(rows):
        buf.append(r, float(i))
    assert_array_equal(buf.xs, rows)
    assert_array_equal(buf.ys, np.arange(10.0))


def test_old_views_survive_growth():
    # views taken before a grow keep reading the old storage, not garbage
    buf = DataBuffer(1, capacity=2)
    buf.append([1.0], 1.0)
    buf.append([2.0], 2.0)
    old = buf.xs
    for v in (3.0, 4.0, 5.0):
        buf.append([v], v)
    assert_array_equal(old, [[1.0], [2.0]])
    assert_array_equal(buf.xs.ravel(), [1, 2, 3, 4, 5])


def test_extend_matches_append_loop():
    xs = make_rng(1).standard_normal((7, 3))
    ys = make_rng(2).standard_normal(7)
    a = DataBuffer(3)
    a.extend(xs, ys)
    b = DataBuffer(3)
    for x, y in zip(xs, ys):
        b.append(x, y)
    assert_array_equal(a.xs, b.xs)
    assert_array_equal(a.ys, b.ys)


def test_x_at_y_at_copies_and_bounds():
    buf = DataBuffer(2)
    buf.append([1.0, 2.0], 3.0)
    x = buf.x_at(0)
    x[0] = 99.0
    assert buf.xs[0, 0] == 1.0
    assert buf.y_at(0) == 3.0
    with pytest.raises(IndexError):
        buf.x_at(1)
    with pytest.raises(IndexError):
        buf.y_at(-2)


def test_validation_errors():
    buf = DataBuffer(2)
    with pytest.raises(ValueError):
        buf.append([1.0], 0.0)       # wrong dim
    with pytest.raises(ValueError):
        buf.append([1.0, 2.0], np.nan)
    with pytest.raises(ValueError):
        buf.extend(np.ones((2, 2)), np.array([1.0, np.inf]))
    with pytest.raises(ValueError):
        DataBuffer(0)


def test_sample_indices_empty_raises():
    with pytest.raises(ValueError):
        DataBuffer(1).sample_indices(make_rng(0), 1)


def test_sample_indices_uniform():
    buf = DataBuffer(1)
    for i in range(8):
        buf.append([float(i)], 0.0)
    idx = buf.sample_indices(make_rng(123), 16000)
    assert idx.min() >= 0 and idx.max() < 8
    counts = np.bincount(idx, minlength=8)
    # 5 sigma around the binomial mean
    tol = 5.0 * np.sqrt(16000 * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - 2000) <= tol)
