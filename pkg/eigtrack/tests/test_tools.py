import threading

import numpy as np
import pytest

from eigtrack import tools
from eigtrack.errors import DispatchError
from eigtrack.runtime import behavior
from eigtrack.tools import dict_map, gather, jsonable


def test_gather_keeps_order():

    def task(i):
        return lambda: i * i

    outcomes = gather([task(i) for i in range(10)], threads=4)
    assert [o.index for o in outcomes] == list(range(10))
    assert [o.value for o in outcomes] == [i * i for i in range(10)]
    assert all(o.ok for o in outcomes)


def test_gather_runs_off_loop_thread():
    main = threading.get_ident()
    outcomes = gather([threading.get_ident for _ in range(3)], threads=2)
    assert all(o.value != main for o in outcomes)


def test_gather_failure():

    def bad():
        raise ValueError('no convergence')

    outcomes = gather([lambda: 1, bad, lambda: 3])
    assert [o.ok for o in outcomes] == [True, False, True]
    assert outcomes[1].value is None
    assert 'no convergence' in outcomes[1].reason
    assert outcomes[2].value == 3


def test_gather_empty():
    assert gather([]) == []


def test_gather_twice():
    assert [o.value for o in gather([lambda: 'a'])] == ['a']
    assert [o.value for o in gather([lambda: 'b', lambda: 'c'])] == ['b', 'c']


def test_gather_dead_collector(monkeypatch):

    @behavior
    def broken_beh(outcomes, total, future, self, message):
        raise RuntimeError('collector lost')

    monkeypatch.setattr(tools, 'collect_beh', broken_beh)
    with pytest.raises(DispatchError) as info:
        gather([lambda: 1, lambda: 2], threads=2)
    assert info.value.actor == 'broken_beh'
    monkeypatch.undo()
    assert [o.value for o in gather([lambda: 3])] == [3]


def test_dict_map():
    tree = {'a': [1, 2, {'b': 3}], 'c': 'text'}
    out = dict_map(lambda x: x + 1, lambda x: isinstance(x, int), tree)
    assert out == {'a': [2, 3, {'b': 4}], 'c': 'text'}


def test_jsonable():
    tree = {'x': np.float64(0.5), 'y': np.arange(3), 'flags': {'sigma', 'overflow'},
            'n': np.int64(4), 'nested': [(1, np.bool_(True))]}
    out = jsonable(tree)
    assert out == {'x': 0.5, 'y': [0, 1, 2], 'flags': ['overflow', 'sigma'],
                   'n': 4, 'nested': [[1, True]]}
    assert type(out['x']) is float
    assert type(out['n']) is int
