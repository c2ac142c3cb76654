"""Kernel backend selection.

The compiled extension (``_ckernels``, Cython) is used when importable;
otherwise the numpy reference kernels are used.  Override with the
environment variable ``STABLEWEB_BACKEND`` set to ``cython`` or ``python``.

Engines drawing one uniform vector per step in canonical walker order
(walk_time0, walk_full, walk_insulation) produce bitwise-identical output
on both backends.  ``walk_avoidance`` consumes draws in a backend-specific
order (batched across runs in python, per-run chunks in cython): same law,
different streams.
"""

import os

from . import kernels_py

_choice = os.environ.get("STABLEWEB_BACKEND", "auto").lower()

_impl = None
if _choice in ("auto", "cython"):
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = None
        if _choice == "cython":
            raise ImportError(
                "STABLEWEB_BACKEND=cython but the compiled extension is not "
                "available; reinstall with the Cython build or use python"
            )
if _impl is None:
    _impl = kernels_py

BACKEND = _impl.BACKEND_NAME

osc_value = _impl.osc_value
osc_feasible = _impl.osc_feasible
match_dist = _impl.match_dist
walk_time0 = _impl.walk_time0
walk_insulation = _impl.walk_insulation
walk_avoidance = _impl.walk_avoidance
walk_full = kernels_py.walk_full  # numpy-vectorized; no compiled twin needed
