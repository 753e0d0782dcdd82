"""Kernel backend chosen at import: compiled extension if present, else pure Python.

Set ``MIXER_BACKEND=python`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("MIXER_BACKEND", "").lower() == "python":
    kernels = _fallback
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "cython"
    except ImportError:
        kernels = _fallback
        NAME = "python"

er_components = kernels.er_components
cm_run = kernels.cm_run
glauber_run = kernels.glauber_run
em_exit = kernels.em_exit
