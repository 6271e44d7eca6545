"""Multi-fidelity surrogate modeling and uncertainty quantification.

Fuses cheap and expensive scalar datasets via co-kriging, drives infill
with derivative-aware adaptive-sampling criteria, trains two-stage
multi-fidelity neural surrogates, and propagates input uncertainty by
Monte Carlo sampling.
"""

__version__ = "0.1.0"

from . import adaptive, benchmarks, cokriging, dataset, kernels, kriging, mfdnn, uq  # noqa: F401
