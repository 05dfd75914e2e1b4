"""Monte Carlo check of P(omega) against shares of sampled wealth pairs."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import stats

from .ensembles import RNG_ALGORITHM, EnsembleSpec, derive_seed, sample
from .errors import DomainError
from .share_distribution import share_density_closed, support

__all__ = [
    "Histogram",
    "FitReport",
    "sample_share",
    "histogram",
    "analytic_cdf",
    "bin_averages",
    "compare",
]

_CDF_NODES = 4096
_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    total: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or len(edges) != len(counts) + 1:
            raise DomainError("need len(bin_edges) == len(counts) + 1")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("bin edges must be strictly increasing")
        if np.any(counts < 0) or int(counts.sum()) != int(self.total):
            raise DomainError("counts must be non-negative and sum to total")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(self.total))

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def density(self):
        return self.counts / (self.total * self.widths)

    def merge(self, other):
        """Sum of two histograms over identical bins (associative, order-free)."""
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise DomainError("cannot merge histograms with different bins")
        return Histogram(self.bin_edges, self.counts + other.counts, self.total + other.total)

    def to_csv(self, fh):
        fh.write("bin_left,bin_right,count\n")
        for a, b, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            fh.write(f"{a:.17g},{b:.17g},{int(c)}\n")


@dataclass(frozen=True)
class FitReport:
    l1_distance: float
    ks_statistic: float
    ks_pvalue: float
    sample_mean: float
    sample_std: float
    n_samples: int
    bins: int
    seed: int
    ensemble: EnsembleSpec = field(repr=False)

    @property
    def mean_z_score(self):
        """Distance of the sample mean from 1/2 in standard errors."""
        return (self.sample_mean - 0.5) / (self.sample_std / math.sqrt(self.n_samples))

    @property
    def ks_passes(self):
        """KS test at the 5% level."""
        return self.ks_pvalue >= 0.05

    def as_dict(self):
        return {
            "ensemble": self.ensemble.as_dict(),
            "n_samples": self.n_samples,
            "bins": self.bins,
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "l1_distance": self.l1_distance,
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
            "ks_passes_5pct": self.ks_passes,
            "sample_mean": self.sample_mean,
            "sample_std": self.sample_std,
            "mean_z_score": self.mean_z_score,
        }


def sample_share(spec, n, seed, batch=0):
    """``n`` draws of ``x1 / (x1 + x2)``.

    ``x1`` and ``x2`` come from two seed streams derived from
    ``(seed, batch)``, so batches with different indices are independent.
    """
    x1 = sample(spec, n, derive_seed(seed, batch, 0)).values
    x2 = sample(spec, n, derive_seed(seed, batch, 1)).values
    return x1 / (x1 + x2)


def histogram(omega, spec, bins):
    lo, hi = support(spec)
    edges = np.linspace(lo, hi, int(bins) + 1)
    counts, _ = np.histogram(np.clip(omega, lo, hi), bins=edges)
    return Histogram(edges, counts, len(omega))


def analytic_cdf(spec, nodes=_CDF_NODES):
    """CDF of P(omega) on ``nodes + 1`` uniform points of the support.

    Cells are integrated with 8-point Gauss-Legendre and the total is
    renormalised to exactly 1. Returns a monotone piecewise-linear callable.
    """
    lo, hi = support(spec)
    edges = np.linspace(lo, hi, int(nodes) + 1)
    x, w = _GL8
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = share_density_closed(spec, pts.ravel()).reshape(pts.shape)
    cdf = np.concatenate([[0.0], np.cumsum(half * (vals @ w))])
    cdf /= cdf[-1]

    def f(omega):
        return np.interp(omega, edges, cdf)
    return f


def bin_averages(spec, edges):
    """Mean of P over each bin, by 16-point Gauss-Legendre."""
    x, w = _GL16
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = share_density_closed(spec, pts.ravel()).reshape(pts.shape)
    return 0.5 * (vals @ w)


def compare(spec, n, bins, seed):
    """Sample shares and measure their distance from the analytic P(omega).

    The L1 distance compares the empirical bin densities with bin-averaged
    analytic densities; the KS statistic is taken against :func:`analytic_cdf`.
    """
    n, bins = int(n), int(bins)
    if n < 10_000:
        raise DomainError("compare needs n >= 1e4")
    if bins < 10:
        raise DomainError("compare needs bins >= 10")
    omega = sample_share(spec, n, seed)
    hist = histogram(omega, spec, bins)
    l1 = float(np.sum(np.abs(hist.density - bin_averages(spec, hist.bin_edges)) * hist.widths))
    ks = stats.kstest(omega, analytic_cdf(spec))
    return FitReport(
        l1_distance=l1,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        sample_mean=float(omega.mean()),
        sample_std=float(omega.std(ddof=1)),
        n_samples=n,
        bins=bins,
        seed=int(seed),
        ensemble=spec,
    )
