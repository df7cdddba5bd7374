"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built;
otherwise the numpy reference implementation is used.  Set the
environment variable SPINSQZ_KERNELS to "py" or "cy" to force a
backend (forcing "cy" raises if the extension is missing).
"""

import os


def _load():
    choice = os.environ.get("SPINSQZ_KERNELS", "auto").strip().lower()
    if choice not in ("auto", "py", "cy", ""):
        raise ValueError("SPINSQZ_KERNELS must be 'auto', 'py' or 'cy', got %r" % choice)
    if choice in ("auto", "cy", ""):
        try:
            from . import _kernels_cy
            return _kernels_cy, "cy"
        except ImportError:
            if choice == "cy":
                raise
    from . import _kernels_py
    return _kernels_py, "py"


kernels, KERNELS_NAME = _load()
