"""

Dispatch tools
==============

`gather` runs independent zero-argument tasks (sweep points, ensemble
members) on a thread pool. One worker actor per task hands the task to
the pool and reports to a collector actor, which resolves a future once
every outcome is in::

    outcomes = gather([partial(run_point, config, t) for t in values],
                      threads=4)
    values = [o.value for o in outcomes if o.ok]

Outcomes come back in submission order. A failing task yields an
outcome carrying the exception message instead of a value.

"""

from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
from logbook import Logger

from .errors import DispatchError
from .eventloop import EventLoop
from .runtime import Runtime, behavior, exception_message

logger = Logger('tools')


@dataclass(frozen=True)
class Outcome:

    index: int
    value: Any = None
    error: Optional[dict] = None

    @property
    def ok(self):
        return self.error is None

    @property
    def reason(self):
        if self.error is None:
            return ''
        return repr(self.error['exception']['value'])


@behavior
def worker_beh(executor, collector, self, message):
    index = message.index

    def done(future):
        try:
            value = future.result()
        except Exception:
            collector << {'index': index, 'value': None,
                          'error': exception_message()}
        else:
            collector << {'index': index, 'value': value, 'error': None}
    EventLoop().offload(executor, message.task, done)


@behavior
def collect_beh(outcomes, total, future, self, message):
    outcomes[message.index] = Outcome(message.index, message.value,
                                      message.error)
    if message.error is not None:
        logger.warning('task {0} failed: {1}', message.index,
                       outcomes[message.index].reason)
    if len(outcomes) == total and not future.done():
        future.set_result([outcomes[i] for i in range(total)])


def gather(tasks, threads=None):
    """Run `tasks` concurrently; returns their `Outcome`s in order.

    Tasks must not call `gather` themselves: the event loop is shared.
    Raises `DispatchError` when one of the dispatching actors fails.

    """
    tasks = list(tasks)
    if not tasks:
        return []
    loop = EventLoop()
    runtime = Runtime()
    future = loop.create_future()

    def abort(message):
        if not future.done():
            future.set_exception(DispatchError(message.get('actor', '?')))

    collector = runtime.create(collect_beh, {}, len(tasks), future)
    try:
        with runtime.watching(abort), \
                ThreadPoolExecutor(max_workers=threads) as executor:
            for index, task in enumerate(tasks):
                worker = runtime.create(worker_beh, executor, collector)
                worker << {'index': index, 'task': task}
            outcomes = loop.run_until_complete(future)
    finally:
        loop.run_once()
    logger.debug('gathered {0} tasks on {1} threads', len(tasks),
                 threads or 'default')
    return outcomes


def dict_map(f, primitive, tree):
    """Map a function f:{primitive} -> B over a tree of mappings and sequences."""

    if primitive(tree):
        return f(tree)
    if isinstance(tree, Mapping):
        return {dict_map(f, primitive, key): dict_map(f, primitive, value)
                for key, value in tree.items()}
    if isinstance(tree, str):
        return tree
    if isinstance(tree, (Sequence, np.ndarray)):
        return [dict_map(f, primitive, value) for value in tree]
    return tree


def jsonable(tree):
    """Replace numpy scalars and arrays by plain Python values."""
    def primitive(x):
        return isinstance(x, (np.generic, np.ndarray, set, frozenset))

    def convert(x):
        if isinstance(x, (set, frozenset)):
            return sorted(x)
        return x.tolist() if isinstance(x, np.ndarray) else x.item()
    return dict_map(convert, primitive, tree)
