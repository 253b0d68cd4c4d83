"""Backend selection for the time-stepping kernel.

``KOLAB_KERNEL=numpy`` forces the pure-numpy path; otherwise the numba
kernel is used when numba imports cleanly.
"""

from __future__ import annotations

import os

from . import numpy_kernel

ENV_FLAG = "KOLAB_KERNEL"

try:
    from . import numba_kernel
except ImportError:  # pragma: no cover - exercised only without numba
    numba_kernel = None


def available_backends() -> list[str]:
    return ["numpy"] + (["numba"] if numba_kernel is not None else [])


def default_backend() -> str:
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice == "numpy" or numba_kernel is None:
        return "numpy"
    if choice not in ("", "numba"):
        raise ValueError(f"{ENV_FLAG} must be 'numpy' or 'numba', got {choice!r}")
    return "numba"


def get_simulator(backend: str | None = None):
    backend = backend or default_backend()
    if backend == "numpy":
        return numpy_kernel.simulate
    if backend == "numba":
        if numba_kernel is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        return numba_kernel.simulate
    raise ValueError(f"unknown backend {backend!r}")
