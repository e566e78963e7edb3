"""Backend selection for the numeric kernels.

Each hot kernel exists twice: a scalar loop that numba can compile and a
vectorized numpy fallback. Which one runs is decided per call, so flipping
the environment variable RODFILM_NUMBA (or calling force_backend) takes
effect without re-imports. Compilation is lazy: the first jitted call pays
it, later processes reuse numba's on-disk cache.
"""

import os

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - mirror always has numba
    numba = None
    _HAVE_NUMBA = False

_FORCED = None  # None | "numba" | "numpy"
_FALSY = {"0", "false", "no", "off", ""}


def numba_available():
    return _HAVE_NUMBA


def force_backend(name):
    """Pin the backend to "numba" or "numpy"; None restores env control."""
    global _FORCED
    if name not in (None, "numba", "numpy"):
        raise ValueError("backend must be 'numba', 'numpy' or None")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _FORCED = name


def numba_enabled():
    if _FORCED is not None:
        return _FORCED == "numba"
    if not _HAVE_NUMBA:
        return False
    return os.environ.get("RODFILM_NUMBA", "1").strip().lower() not in _FALSY


def backend_name():
    return "numba" if numba_enabled() else "numpy"


class Kernel:
    """Callable that dispatches to the jitted loop or the numpy fallback.

    loop_fn must be numba-compilable as written; numpy_fn takes the same
    arguments and must return identical values (the test suite enforces
    agreement to near machine precision).
    """

    def __init__(self, loop_fn, numpy_fn, **njit_kwargs):
        self._loop = loop_fn
        self._numpy = numpy_fn
        self._jitted = None
        self._njit_kwargs = dict(cache=True)
        self._njit_kwargs.update(njit_kwargs)
        self.__name__ = getattr(loop_fn, "__name__", "kernel")

    def compiled(self):
        if self._jitted is None:
            self._jitted = numba.njit(**self._njit_kwargs)(self._loop)
        return self._jitted

    def __call__(self, *args):
        if numba_enabled():
            return self.compiled()(*args)
        return self._numpy(*args)

    def via(self, backend, *args):
        """Run explicitly on one backend (used by tests and benchmarks)."""
        if backend == "numba":
            if not _HAVE_NUMBA:
                raise RuntimeError("numba is not importable")
            return self.compiled()(*args)
        if backend == "numpy":
            return self._numpy(*args)
        raise ValueError(backend)
