"""

Event loop
==========

The event loop is a singleton that schedules actor events and hands
numerical work to thread pools.

Exports
-------

- ``EventLoop``: the event loop

"""

import asyncio
import threading

from .singleton import Singleton


class EventLoop(object, metaclass=Singleton):

    def __init__(self):
        self.loop = asyncio.new_event_loop()
        self.pending = 0
        self._lock = threading.Lock()

    def _count(self, delta):
        with self._lock:
            self.pending += delta

    def schedule(self, target, event):
        """Run `event` on the loop thread; safe from any thread."""
        self._count(1)

        def run():
            try:
                event()
            finally:
                self._count(-1)
        self.loop.call_soon_threadsafe(run)

    def offload(self, executor, fn, callback):
        """Run `fn` on `executor`; `callback(future)` runs on the loop.

        The call counts as pending until its callback has run.

        """
        self._count(1)

        def done(future):
            try:
                callback(future)
            finally:
                self._count(-1)
        future = self.loop.run_in_executor(executor, fn)
        future.add_done_callback(done)
        return future

    def create_future(self):
        return self.loop.create_future()

    def run_once(self):
        """Process ready callbacks, then events until none is pending."""
        while True:
            self.loop.call_soon(self.loop.stop)
            self.loop.run_forever()
            if self.pending <= 0:
                break

    def run_until_complete(self, future):
        return self.loop.run_until_complete(future)
