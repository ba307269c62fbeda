"""Backend selection for the RK4 hot loop.

The compiled extension is used when it imports; otherwise the NumPy
fallback is used. Set ``MSGATE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _rk4_py

BACKENDS = {"python": _rk4_py.rk4_steps}

try:
    from . import _rk4
except ImportError:  # extension not built
    _rk4 = None
else:
    BACKENDS["compiled"] = _rk4.rk4_steps

if os.environ.get("MSGATE_PURE_PYTHON", "") not in ("", "0") or _rk4 is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "compiled"


def get_stepper(backend=None):
    """Return the ``rk4_steps`` callable for ``backend`` (default: auto)."""
    name = DEFAULT_BACKEND if backend is None else backend
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}"
        ) from None
