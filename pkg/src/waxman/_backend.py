"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over.  ``use()`` switches at
runtime (benchmarks and the cross-backend tests rely on it).
"""
from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

kernels = _ckernels if _ckernels is not None else _pykernels


def name():
    return "cython" if kernels is _ckernels and _ckernels is not None else "python"


def use(backend):
    """Select ``"cython"`` or ``"python"``; returns the previously active name."""
    global kernels
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; have {sorted(BACKENDS)}")
    previous = name()
    kernels = BACKENDS[backend]
    return previous
