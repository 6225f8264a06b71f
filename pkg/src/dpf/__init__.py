"""Dense prediction fields: coordinate-queried dense prediction trained from
point-level annotations (single-point class labels, two-point reflectance
comparisons)."""

__version__ = "0.1.0"

from .kernels import backend_name  # noqa: F401
