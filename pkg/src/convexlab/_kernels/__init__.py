"""Element kernel backend selection.

Prefers the compiled Cython module; falls back to numpy. Set
``CONVEXLAB_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by tests that compare the two backends).
"""
import os

from . import _assembly_np

if os.environ.get("CONVEXLAB_PURE_PYTHON"):
    _impl = _assembly_np
else:
    try:
        from . import _assembly_cy as _impl
    except ImportError:
        _impl = _assembly_np

BACKEND = _impl.BACKEND
simplex_measures = _impl.simplex_measures
stiffness_entries = _impl.stiffness_entries
mass_entries = _impl.mass_entries
