"""Simulation kernel with a compiled core and a pure-numpy fallback.

The compiled Cython backend is preferred; if the extension was not built, or
the QAPIPE_PURE_PYTHON environment variable is set to a non-empty value other
than "0", the numpy backend is used instead. Both backends implement the same
pinned counter-based draw sequence and return bit-identical results, so the
choice only affects speed. ``benchmarks/bench_kernel.py`` compares the two.
"""

from __future__ import annotations

import os

from . import fallback
from .fallback import draw_images

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, index: int) -> int:
    """Derive an independent per-trial key: draw ``index`` of the master stream.

    Seeds are reduced modulo 2**64, so any Python int is accepted.
    """
    return _mix64(seed + (index + 1) * _GAMMA)


def _select_backend():
    forced = os.environ.get("QAPIPE_PURE_PYTHON", "")
    if forced not in ("", "0"):
        return fallback
    try:
        from . import _simkernel
        return _simkernel
    except ImportError:
        return fallback


backend = _select_backend()
BACKEND_NAME: str = backend.NAME
run_fixed = backend.run_fixed
run_target = backend.run_target


def get_backend(name: str):
    """Fetch a backend by name ("compiled" or "numpy"); used by the benchmark."""
    if name == "numpy":
        return fallback
    if name == "compiled":
        from . import _simkernel
        return _simkernel
    raise ValueError(f"unknown backend {name!r}")
