"""Hot numeric kernels with interchangeable implementations.

``numpy_backend`` is always available.  ``fast_backend`` wraps the compiled
Cython extension built by ``setup.py build_ext --inplace``.  Benchmarks
(benchmarks/bench_kernels.py) show the compiled gather/scatter sampling
kernels win by 3-7x while the BLAS-backed im2col convolution beats direct
C loops at training-size feature maps, so the default ``auto`` profile
mixes them: numpy convolutions plus compiled bilinear sampling, degrading
to all-numpy when the extension is missing.  ``set_backend`` pins a pure
backend ('numpy', 'cython') for parity tests and benchmarking; selection
is process-wide and flows from the ``backend`` config key.
"""

from __future__ import annotations

from types import SimpleNamespace

from . import numpy_backend

try:
    from . import fast_backend
    _HAVE_FAST = True
except ImportError:
    fast_backend = None  # type: ignore[assignment]
    _HAVE_FAST = False

if _HAVE_FAST:
    _AUTO = SimpleNamespace(
        NAME="auto(blas-conv+compiled-sampling)",
        conv2d_forward=numpy_backend.conv2d_forward,
        conv2d_backward=numpy_backend.conv2d_backward,
        bilinear_forward=fast_backend.bilinear_forward,
        bilinear_backward=fast_backend.bilinear_backward,
    )
else:
    _AUTO = numpy_backend

_active = _AUTO


def available_backends() -> list[str]:
    return ["numpy", "cython"] if _HAVE_FAST else ["numpy"]


def active_backend():
    return _active


def backend_name() -> str:
    return _active.NAME


def has_compiled_kernels() -> bool:
    return _HAVE_FAST


def set_backend(name: str):
    """Pin the kernel backend: 'auto', 'numpy', or 'cython'."""
    global _active
    if name == "auto":
        _active = _AUTO
    elif name == "numpy":
        _active = numpy_backend
    elif name == "cython":
        if not _HAVE_FAST:
            raise ValueError("compiled kernels not built; run: python setup.py build_ext --inplace")
        _active = fast_backend
    else:
        raise ValueError(f"unknown backend {name!r} (expected auto|numpy|cython)")
