"""Float kernels for batched polynomial evaluation.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``LHK_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is selected. ``BACKEND`` names the choice.
"""

import os

from . import _fallback

_force_pure = os.environ.get("LHK_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure-python backend forced")
    from ._polyeval import poly_eval, poly_eval_grad

    BACKEND = "cython"
except ImportError:
    from ._fallback import poly_eval, poly_eval_grad

    BACKEND = "python"

__all__ = ["BACKEND", "poly_eval", "poly_eval_grad", "_fallback"]
