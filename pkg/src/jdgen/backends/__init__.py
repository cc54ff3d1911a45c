"""Numeric kernel backends.

Two interchangeable implementations of the hot kernels (Bessel evaluation
and bilinear table lookup): a numba-jitted one and a pure-numpy fallback.
Selection happens once at import time.  Set ``JDGEN_NUMBA=0`` to force the
numpy path; by default numba is used when it imports cleanly.

Both backends run the same arithmetic in the same order, so results agree
to the last few ulps (trig/sqrt may differ across libm implementations).
"""

import os

_flag = os.environ.get("JDGEN_NUMBA", "").strip().lower()

if _flag in ("0", "false", "off", "no"):
    from . import numpy_backend as active
else:
    try:
        from . import numba_backend as active
    except ImportError:  # pragma: no cover - numba is a declared dependency
        from . import numpy_backend as active

backend_name = active.NAME
j0 = active.j0
j1 = active.j1
bilinear_pair = active.bilinear_pair
