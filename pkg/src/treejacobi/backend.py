"""Kernel backend selection.

Hot loops have two implementations: numba-jitted and pure numpy.
The environment variable TREEJACOBI_BACKEND picks one:

    auto   use numba when importable, numpy otherwise (default)
    numba  require numba, fail if it cannot be imported
    numpy  force the pure-numpy fallback

Selection happens once at import time; the chosen name is recorded in
run manifests so outputs can be traced to a backend.
"""

import os

_requested = os.environ.get("TREEJACOBI_BACKEND", "auto").strip().lower()

if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"TREEJACOBI_BACKEND must be auto, numba or numpy (got {_requested!r})"
    )

if _requested == "numpy":
    USE_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        USE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise RuntimeError(
                "TREEJACOBI_BACKEND=numba but numba is not importable"
            )
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"
