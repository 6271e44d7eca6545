"""Backend selection for the hot numeric kernels.

The correlation-matrix and derivative-bundle assembly routines exist in two
equivalent implementations: numba ``@njit`` loops and vectorized numpy.
By default the numba path is used when numba imports cleanly; setting the
environment variable ``MFUQ_DISABLE_NUMBA=1`` (or any non-empty value other
than ``0``) forces the pure-numpy fallback.  ``scripts/benchmark_kernels.py``
times the two against each other and checks agreement.
"""

from __future__ import annotations

import os

_ENV_FLAG = "MFUQ_DISABLE_NUMBA"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def _env_disabled() -> bool:
    val = os.environ.get(_ENV_FLAG, "")
    return val not in ("", "0", "false", "False")


# Mutable so tests and the benchmark script can flip backends at runtime.
_numba_enabled = HAS_NUMBA and not _env_disabled()


def numba_enabled() -> bool:
    """True when the numba kernel path is active."""
    return _numba_enabled


def set_numba_enabled(flag: bool) -> None:
    """Override backend selection (no-op enabling if numba is missing)."""
    global _numba_enabled
    _numba_enabled = bool(flag) and HAS_NUMBA
