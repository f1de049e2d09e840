"""Optional numba acceleration.

The distance kernels are written as plain loops; with numba absent they
still run (slowly) under CPython, so the package degrades gracefully.
"""
import os

# the built-in work queue needs no external runtime (TBB/OpenMP probing
# is noisy on some systems); override via NUMBA_THREADING_LAYER
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def set_threads(n: int) -> None:
    """Cap the kernel thread pool; a no-op without numba."""
    if HAVE_NUMBA and n >= 1:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
