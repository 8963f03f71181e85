"""Backend selection for the hot local-regression kernel.

Imports the compiled extension when it is built, otherwise the numpy
fallback. ``SPATIALKIT_NO_EXT=1`` forces the fallback (used by the
benchmark and the backend-equivalence tests). Both backends implement
``local_wls_sweep`` with identical semantics.
"""

import os

if os.environ.get("SPATIALKIT_NO_EXT") == "1":
    from .fallback import KERNEL_BISQUARE, KERNEL_UNIFORM, local_wls_sweep

    BACKEND = "python"
else:
    try:
        from ._gwrloop import (  # type: ignore[attr-defined]
            BACKEND,
            KERNEL_BISQUARE,
            KERNEL_UNIFORM,
            local_wls_sweep,
        )
    except ImportError:
        from .fallback import KERNEL_BISQUARE, KERNEL_UNIFORM, local_wls_sweep

        BACKEND = "python"

__all__ = ["local_wls_sweep", "BACKEND", "KERNEL_BISQUARE", "KERNEL_UNIFORM"]
