"""Pick the kernel implementation once, at import.

The compiled extension is preferred. Set ``WAKE_RADON_BACKEND=python`` to
force the numpy fallback, or ``=compiled`` to fail loudly when the extension
is missing.
"""

import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)


def _load(choice):
    if choice == "python":
        return _kernels_py
    try:
        from . import _kernels
    except ImportError:
        if choice == "compiled":
            raise
        logger.debug("compiled kernels unavailable, using numpy fallback")
        return _kernels_py
    return _kernels


kernels = _load(os.environ.get("WAKE_RADON_BACKEND", "auto").lower())


def available():
    """Names of the kernel backends that can be imported here."""
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return names
    return ["compiled"] + names


def get(name):
    """Return a backend module by name ('compiled' or 'python')."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def use(name):
    """Switch the active backend for subsequent calls."""
    global kernels
    kernels = get(name)
    return kernels


def threads():
    """Thread cap for data-parallel kernels, from ``WAKE_RADON_THREADS``."""
    raw = os.environ.get("WAKE_RADON_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"WAKE_RADON_THREADS must be an integer, got {raw!r}")
    return max(1, n)
