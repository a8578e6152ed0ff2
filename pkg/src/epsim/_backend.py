"""Kernel backend selection.

Hot inner loops ship in two flavors: numba ``@njit`` kernels and pure
numpy/Python fallbacks.  ``EPSIM_BACKEND`` picks one:

  * ``numba`` - require numba, fail loudly if it does not import
  * ``numpy`` - force the fallback path
  * unset / ``auto`` - numba when importable, numpy otherwise
"""
import os

_choice = os.environ.get("EPSIM_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"EPSIM_BACKEND must be auto|numba|numpy, got {_choice!r}")

if _choice == "numpy":
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401
        HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _choice != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit_or_fallback(numba_fn, py_fn):
    """Return the active implementation for a kernel pair."""
    return numba_fn if USE_NUMBA else py_fn
