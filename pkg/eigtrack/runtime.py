"""

Actor runtime
=============

The runtime creates actors from behaviors and reports their errors.
It carries the concurrent parts of the package: sweep points and
ensemble members are dispatched by actors (see `eigtrack.tools`).

The behaviors are defined as::

    @behavior
    def point_beh(config, self, msg):
        ...

where `config` stands for 0 or more arguments passed at creation
time, `self` is the actor in context and `msg` the message being
delivered. `self` provides `create` and `become`; `x << msg` sends.

A behavior that raises does not take the loop down: the error is
logged by `Runtime.throw` and handed to every callback registered with
`Runtime.watching`, which is how a dispatcher learns that one of its
actors died.

"""

from collections.abc import MutableMapping
from contextlib import contextmanager
from functools import wraps, partial
import pprint
import sys
import traceback

from logbook import Logger

from .singleton import Singleton
from .eventloop import EventLoop

logger = Logger('runtime')


class AbstractRuntime(object, metaclass=Singleton):

    def create(self, behavior, *args):
        raise NotImplementedError()

    def throw(self, message):
        raise NotImplementedError()


class Runtime(AbstractRuntime):

    def __init__(self):
        super().__init__()
        self.loop = EventLoop()
        self.watchers = []

    def create(self, behavior, *args):
        return Actor(self, behavior, *args)

    def throw(self, message):
        logger.error('actor {0} failed: {1}', message.get('actor', '?'),
                     pprint.pformat(message.get('exception', message)))
        if message.get('traceback'):
            logger.debug(''.join(message['traceback']))
        for watcher in list(self.watchers):
            watcher(message)

    @contextmanager
    def watching(self, callback):
        """Call `callback(message)` on every actor failure inside the block."""
        self.watchers.append(callback)
        try:
            yield self
        finally:
            self.watchers.remove(callback)


def exception_message(actor=None):
    """Create a message with details on the exception being handled."""
    exc_type, exc_value, exc_tb = exc_info = sys.exc_info()
    message = {'exception': {'type': exc_type,
                             'value': exc_value,
                             'traceback': exc_tb},
               'traceback': traceback.format_exception(*exc_info)}
    if actor is not None:
        message['actor'] = actor.name
    return message


class Actor(object):

    def __init__(self, runtime, behavior, *args):
        self._runtime = runtime
        self._loop = runtime.loop
        self.become(behavior, *args)

    def become(self, behavior, *args):
        self.name = getattr(behavior, '__name__', 'actor')
        self._behavior = partial(behavior, *args)

    def send(self, msg):
        def event():
            try:
                self._behavior(self, msg)
            except Exception:
                self.throw(exception_message(self))
        self._loop.schedule(self, event)

    def create(self, behavior, *args):
        return self._runtime.create(behavior, *args)

    def throw(self, message):
        self._runtime.throw(message)

    def __lshift__(self, msg):
        """Syntax sugar for sending a message.

        Use as `x << msg`.

        """
        self.send(msg)

    def __call__(self, msg):
        self.send(msg)

    def __repr__(self):
        return '<Actor {0}>'.format(self.name)


class Message(dict):
    """Dict message whose keys read as attributes: ``msg.index``."""

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)

    __setattr__ = dict.__setitem__


def behavior(f):
    """Decorator for declaring a function as behavior.

    Mapping messages are wrapped in `Message`, so behaviors read their
    fields as attributes.

    """
    @wraps(f)
    def wrapper(*args):
        message = args[-1]
        if isinstance(message, MutableMapping):
            message = Message(message)
        f(*(args[:-1] + (message,)))
    return wrapper
