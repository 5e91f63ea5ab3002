import time

import numpy as np
import pytest

from billiard_lab.utils.errors import BudgetExceededError
from billiard_lab.utils.streams import partition, run_chunks, spawn_seeds, stream


def _draw(seed, size):
    return np.random.default_rng(seed).random(size)


def test_partition():
    assert partition(10, 4) == [3, 3, 2, 2]
    assert partition(3, 8) == [1, 1, 1]
    assert sum(partition(1001)) == 1001


def test_child_seeds_do_not_depend_on_count():
    few = [np.random.default_rng(s).random() for s in spawn_seeds(5, 3)]
    many = [np.random.default_rng(s).random() for s in spawn_seeds(5, 8)]
    assert few == many[:3]


def test_streams_are_reproducible():
    assert stream(9, 2).random() == stream(9, 2).random()
    assert stream(9, 1).random() != stream(9, 2).random()


def test_run_chunks_keeps_task_order():
    tasks = [(s, 4) for s in spawn_seeds(1, 6)]
    inline = run_chunks(_draw, tasks, workers=1)
    pooled = run_chunks(_draw, tasks, workers=3)
    for a, b in zip(inline, pooled):
        np.testing.assert_array_equal(a, b)


def test_deadline():
    with pytest.raises(BudgetExceededError):
        run_chunks(_draw, [(s, 4) for s in spawn_seeds(1, 3)], deadline=time.monotonic() - 1.0)
