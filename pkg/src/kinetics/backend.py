"""Compute-backend selection for the hot collision kernels.

The particle engine ships two implementations of its inner loop: a numba
``@njit`` version and a pure-numpy fallback.  Which one runs is decided once,
at import time, from the ``KINETICS_BACKEND`` environment variable:

    KINETICS_BACKEND=auto    use numba if it imports, else numpy (default)
    KINETICS_BACKEND=numba   require numba, raise if unavailable
    KINETICS_BACKEND=numpy   force the fallback even if numba is installed

Both paths consume identical pre-drawn random arrays and perform the same
arithmetic, so they agree to floating-point ulp level per step (libm vs. numpy
vectorized transcendentals may differ in the last bits).  ``benchmarks/``
contains a script comparing their throughput.
"""

import os

_CHOICES = ("auto", "numba", "numpy")

BACKEND_ENV = "KINETICS_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "auto").strip().lower()
if _requested not in _CHOICES:
    raise RuntimeError(
        f"{BACKEND_ENV}={_requested!r} not understood; choose one of {_CHOICES}"
    )

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only on numba-less installs
    HAVE_NUMBA = False

if _requested == "numba" and not HAVE_NUMBA:
    raise RuntimeError("KINETICS_BACKEND=numba but numba failed to import")

#: True when the njit kernels are active.
USE_NUMBA = HAVE_NUMBA and _requested != "numpy"

#: Name recorded in run manifests.
ACTIVE_BACKEND = "numba" if USE_NUMBA else "numpy"


def njit_if_enabled(**kwargs):
    """Return ``numba.njit`` when the numba backend is active, else identity.

    Used to decorate the hot kernels so the same source file serves both
    backends (the numpy fallback functions are separate, vectorized
    implementations; this decorator guards the scalar loops).
    """
    if USE_NUMBA:
        return numba.njit(cache=True, **kwargs)

    def _identity(fn):
        return fn

    return _identity
