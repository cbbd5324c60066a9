"""

Singleton
=========

Metaclass to make a class a singleton per argument tuple.

Use as::

    class MySingleton(object, metaclass=Singleton): ...

Instances are created under a per-class lock, so worker threads that
reach for the event loop or the runtime all get the same object.

"""

import threading


class Singleton(type):

    def __init__(self, name, bases, namespace):
        super().__init__(name, bases, namespace)
        self.instances = {}
        self._instance_lock = threading.Lock()

    def __call__(self, *args, **kwargs):
        with self._instance_lock:
            if args not in self.instances:
                self.instances[args] = super().__call__(*args, **kwargs)
            return self.instances[args]
