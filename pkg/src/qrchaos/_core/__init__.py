"""Hot-loop kernels with a compiled core and a pure-python fallback.

The compiled Cython extension is preferred; set ``QRCHAOS_FORCE_PYTHON=1``
to force the numpy implementation (used by the backend-parity tests and
the benchmark).
"""

import os

if os.environ.get("QRCHAOS_FORCE_PYTHON"):
    from . import _fallback as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

BACKEND = _impl.BACKEND
step_with_measure = _impl.step_with_measure
chain_teacher = _impl.chain_teacher

from . import _fallback as python_backend  # noqa: E402

try:
    from . import _kernels as compiled_backend  # noqa: E402
except ImportError:
    compiled_backend = None

__all__ = [
    "BACKEND",
    "step_with_measure",
    "chain_teacher",
    "python_backend",
    "compiled_backend",
]
