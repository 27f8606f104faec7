"""Pick the compiled kernels when importable, else the numpy fallback.

Set ``ANNULUS_SLE_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

NAME = "python"
kernels = _kernels_py

if os.environ.get("ANNULUS_SLE_PURE") != "1":
    try:
        from . import _core
    except ImportError:  # not built
        pass
    else:
        kernels = _core
        NAME = "cython"

theta_jet = kernels.theta_jet
loewner_h = kernels.loewner_h
rk4_step = kernels.rk4_step
