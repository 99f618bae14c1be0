"""Backend selection for the mutual-information kernel.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``BSMIMO_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.
"""
import os

from . import _mi_kernel_py

python_mi_realizations = _mi_kernel_py.mi_realizations

try:
    from ._mi_kernel import mi_realizations as compiled_mi_realizations
except ImportError:  # extension not built
    compiled_mi_realizations = None

if compiled_mi_realizations is not None and os.environ.get("BSMIMO_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "compiled"
    mi_realizations = compiled_mi_realizations
else:
    BACKEND = "python"
    mi_realizations = python_mi_realizations

__all__ = ["BACKEND", "mi_realizations", "compiled_mi_realizations", "python_mi_realizations"]
