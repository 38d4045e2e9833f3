"""Backend selection for the hot kernels.

The numba backend is the default; set ``KPZLAB_DISABLE_NUMBA=1`` to force
the pure numpy/scipy path (or it is used automatically when numba cannot
be imported).  ``python -m kpzlab.bench`` compares the two.
"""

from __future__ import annotations

import os


def _numba_disabled() -> bool:
    return os.environ.get("KPZLAB_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
    )


if _numba_disabled():
    from kpzlab import _kernels_np as _impl

    BACKEND = "numpy"
else:
    try:
        from kpzlab import _kernels_nb as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        from kpzlab import _kernels_np as _impl

        BACKEND = "numpy"

evolve_she = _impl.evolve_she
lpp_last_row = _impl.lpp_last_row
gibbs_sweep = _impl.gibbs_sweep
coupled_gibbs_sweep = _impl.coupled_gibbs_sweep


def backend_name() -> str:
    return BACKEND
