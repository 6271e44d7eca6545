"""Monte Carlo propagation of input uncertainty through a surrogate.

Draws inputs from a DistributionSpec, pushes them through a vectorized
surrogate callable, and summarizes the quantity of interest as an
equal-width histogram plus moments (mean, variance, skewness).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DistributionSpec, sample_distribution

DEFAULT_BINS = 50
_CHUNK = 200_000


@dataclass(frozen=True)
class UqSummary:
    bin_edges: np.ndarray
    counts: np.ndarray
    densities: np.ndarray
    mean: float
    variance: float
    skewness: float
    n_samples: int
    distribution: DistributionSpec
    seed: int

    @property
    def mode_bin(self) -> tuple[float, float]:
        i = int(np.argmax(self.densities))
        return float(self.bin_edges[i]), float(self.bin_edges[i + 1])

    @property
    def mode_center(self) -> float:
        lo, hi = self.mode_bin
        return 0.5 * (lo + hi)

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "densities": self.densities.tolist(),
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "n_samples": self.n_samples,
            "distribution": self.distribution.to_dict(),
            "seed": self.seed,
        }


def propagate(surrogate, spec: DistributionSpec, n: int, bins: int = DEFAULT_BINS,
              seed: int = 0) -> UqSummary:
    """Monte Carlo pushforward of the input law through a surrogate.

    ``surrogate`` must accept an (n, M) array and return n values.  Inputs
    are evaluated in chunks to bound memory.
    """
    if n < 100:
        raise ValueError("propagate requires n >= 100 for stable moments")
    if bins < 2:
        raise ValueError("propagate requires at least 2 histogram bins")
    X = sample_distribution(spec, n, seed)
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        out[start:start + _CHUNK] = np.asarray(
            surrogate(X[start:start + _CHUNK]), dtype=float
        ).ravel()
    bad = int(np.sum(~np.isfinite(out)))
    if bad:
        raise RuntimeError(f"surrogate returned {bad} non-finite values out of {n} samples")
    counts, edges = np.histogram(out, bins=bins)
    widths = np.diff(edges)
    densities = counts / (n * widths)
    mean = float(out.mean())
    centered = out - mean
    var = float(np.mean(centered**2))
    skew = float(np.mean(centered**3) / var**1.5) if var > 0 else 0.0
    return UqSummary(bin_edges=edges, counts=counts, densities=densities, mean=mean,
                     variance=var, skewness=skew, n_samples=n, distribution=spec, seed=seed)


def _rebin(summary: UqSummary, edges: np.ndarray) -> np.ndarray:
    """Piecewise-constant density mass redistributed onto common edges."""
    src_edges = summary.bin_edges
    mass = summary.densities * np.diff(src_edges)
    out = np.zeros(len(edges) - 1)
    for m, a, b in zip(mass, src_edges[:-1], src_edges[1:]):
        if m == 0.0 or b <= a:
            continue
        left = np.searchsorted(edges, a, side="right") - 1
        right = np.searchsorted(edges, b, side="left")
        for j in range(max(left, 0), min(right, len(out))):
            overlap = min(b, edges[j + 1]) - max(a, edges[j])
            if overlap > 0:
                out[j] += m * overlap / (b - a)
    return out / np.diff(edges)


def compare_histograms(a: UqSummary, b: UqSummary) -> dict:
    """L1 distance between densities on common bins plus the signed mode shift.

    Distance is over densities rebinned to shared equal-width edges spanning
    both supports; disjoint supports give the maximum distance 2.
    """
    if len(a.counts) != len(b.counts):
        raise ValueError("histograms must share the bin policy (equal bin counts)")
    lo = min(a.bin_edges[0], b.bin_edges[0])
    hi = max(a.bin_edges[-1], b.bin_edges[-1])
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, len(a.counts) * 2 + 1)
    da = _rebin(a, edges)
    db = _rebin(b, edges)
    l1 = float(np.sum(np.abs(da - db) * np.diff(edges)))
    return {"l1_distance": l1, "mode_shift": b.mode_center - a.mode_center}
