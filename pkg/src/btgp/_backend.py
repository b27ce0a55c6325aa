"""Numerical core selection.

Prefers the compiled extension; falls back to the pure-Python implementation
when the extension is absent (source tree without a build, or unsupported
platform).  ``BTGP_PURE_PYTHON=1`` forces the fallback, which is how the
backend benchmark and parity tests pin each side.
"""

import os

from . import _core_py

if os.environ.get("BTGP_PURE_PYTHON"):
    core = _core_py
    HAVE_COMPILED = False
else:
    try:
        from . import _core as core  # type: ignore[no-redef]
        HAVE_COMPILED = True
    except ImportError:
        core = _core_py
        HAVE_COMPILED = False


def get_core(compiled):
    """Return a specific core module: compiled (True), pure Python (False).

    Raises ImportError if the compiled core is requested but not built.
    """
    if not compiled:
        return _core_py
    from . import _core
    return _core
