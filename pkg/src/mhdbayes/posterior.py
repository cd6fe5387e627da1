"""Exact random-histogram posterior over (bin count, bin weights).

The histogram likelihood is multinomial, so for every candidate bin count
k the weight posterior is Dirichlet(alpha + counts) and the marginal
likelihood of k is a closed-form Beta-function ratio: no MCMC anywhere.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .densities import HistogramDensity, MixtureDensity, SupportTransform
from .numerics import as_generator

# Constant per-bin Dirichlet concentration used when none is given.  With
# the default fixed k=100 this keeps the total prior mass alpha*k at or
# below sqrt(n) for n >= 49; see the package README for the calibration.
DEFAULT_ALPHA = 0.07
DEFAULT_FIXED_K = 100
DEFAULT_POISSON_RATE = 20.0


def max_bin_count(n):
    """Largest candidate bin count, floor(n / (log n)^2), for random-k mode."""
    if n < 2:
        return 1
    return max(1, int(n / math.log(n) ** 2))


def root_n_bin_count(n):
    """The ceil(sqrt(n) / (log n)^2) deterministic-k schedule."""
    if n < 2:
        return 1
    return max(1, math.ceil(math.sqrt(n) / math.log(n) ** 2))


@dataclass(frozen=True)
class HistogramPrior:
    """Prior on k-bin histograms: a distribution over k plus, conditionally
    on k, Dirichlet(alpha, ..., alpha) bin weights.

    ``mode`` is "fixed" (Dirac mass at ``k``) or "poisson" (rate ``lam``
    truncated to {1, ..., k_max}, with k_max defaulting to
    floor(n / (log n)^2) at fit time).  ``c1``, ``a``, ``c2`` bound the
    admissible per-bin concentrations c1 * k**-a <= alpha <= c2.
    """

    mode: str = "fixed"
    k: int = DEFAULT_FIXED_K
    lam: float = DEFAULT_POISSON_RATE
    k_max: int | None = None
    alpha: float = DEFAULT_ALPHA
    c1: float | None = None
    a: float = 0.0
    c2: float | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "poisson"):
            raise ValueError(f"unknown prior mode {self.mode!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mode == "fixed" and self.k < 1:
            raise ValueError("fixed bin count k must be positive")
        if self.mode == "poisson" and self.lam <= 0:
            raise ValueError("poisson rate must be positive")

    @classmethod
    def fixed(cls, k=DEFAULT_FIXED_K, alpha=DEFAULT_ALPHA):
        return cls(mode="fixed", k=int(k), alpha=alpha)

    @classmethod
    def fixed_root_n(cls, n, alpha=DEFAULT_ALPHA):
        """Dirac mass at the ceil(sqrt(n)/(log n)^2) schedule."""
        return cls.fixed(root_n_bin_count(n), alpha=alpha)

    @classmethod
    def poisson(cls, lam=DEFAULT_POISSON_RATE, alpha=DEFAULT_ALPHA, k_max=None):
        return cls(mode="poisson", lam=float(lam), k_max=k_max, alpha=alpha)

    def k_values(self, n):
        if self.mode == "fixed":
            return np.array([self.k], dtype=int)
        k_hi = self.k_max if self.k_max is not None else max_bin_count(n)
        if k_hi < 1:
            raise ValueError("empty bin-count support")
        return np.arange(1, k_hi + 1, dtype=int)

    def log_prior_k(self, ks):
        ks = np.asarray(ks, dtype=int)
        if self.mode == "fixed":
            return np.zeros(len(ks))
        logp = ks * math.log(self.lam) - gammaln(ks + 1.0)
        return logp - logsumexp(logp)

    def validate(self, n):
        """Check the concentration bounds; warn when the total prior mass
        exceeds sqrt(n) (the consistency condition is asymptotic, so this
        is advisory rather than fatal)."""
        ks = self.k_values(n)
        c1 = self.alpha if self.c1 is None else self.c1
        c2 = self.alpha if self.c2 is None else self.c2
        for k in (int(ks[0]), int(ks[-1])):
            lo = c1 * k ** (-self.a)
            if not (lo - 1e-12 <= self.alpha <= c2 + 1e-12):
                raise ValueError(
                    f"alpha={self.alpha} violates c1*k^-a <= alpha <= c2 at k={k}")
        worst = self.alpha * int(ks[-1])
        if worst > math.sqrt(n):
            warnings.warn(
                f"total prior mass {worst:.3g} exceeds sqrt(n)={math.sqrt(n):.3g}; "
                "posterior-consistency condition may be degraded at this n",
                stacklevel=2)


def bin_counts(data, k):
    """Counts of ``data`` (values in [0, 1]) over the regular k-bin grid.

    The value 1.0 is closed into the last bin.
    """
    if k < 1:
        raise ValueError("bin count k must be a positive integer")
    data = np.asarray(data, dtype=float)
    bad = (data < 0.0) | (data > 1.0) | ~np.isfinite(data)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise ValueError(f"datum {data[idx]!r} at index {idx} is outside [0, 1]")
    idx = np.minimum((data * int(k)).astype(int), int(k) - 1)
    return np.bincount(idx, minlength=int(k))


def _log_beta(v):
    return float(np.sum(gammaln(v)) - gammaln(np.sum(v)))


@dataclass
class RandomHistogramPosterior:
    """Posterior over (k, weights) given binned data.

    ``log_post_k[i]`` is the log posterior mass of ``k_support[i]`` and
    ``dirichlet_params[i]`` the matching posterior Dirichlet parameters
    (prior alpha plus bin counts).
    """

    k_support: np.ndarray
    log_post_k: np.ndarray
    dirichlet_params: list
    n: int
    transform: SupportTransform | None = None
    log_marginals: np.ndarray | None = field(default=None, repr=False)

    def post_k(self):
        return np.exp(self.log_post_k)

    def sample(self, rng=None):
        """One histogram draw: k from the posterior k-masses, then weights
        from Dirichlet(alpha + counts) via normalized Gamma variates."""
        rng = as_generator(rng)
        i = int(rng.choice(len(self.k_support), p=self.post_k()))
        params = self.dirichlet_params[i]
        for _ in range(100):
            g = rng.gamma(params)
            total = g.sum()
            if total > 0:
                return HistogramDensity(g / total)
        raise RuntimeError("Dirichlet sampling produced all-zero Gamma draws")

    def eap(self, max_common_bins=10_000):
        """Expected a-posteriori density.

        For a single k this is the histogram with weights proportional to
        alpha + counts.  For random k it is the posterior-weighted mixture
        of the per-k EAP histograms, flattened onto the least common grid
        when that grid has no more than ``max_common_bins`` bins.
        """
        parts = [HistogramDensity(p / p.sum()) for p in self.dirichlet_params]
        masses = self.post_k()
        if len(parts) == 1:
            return parts[0]
        active = masses > 1e-12
        ks = [int(k) for k in self.k_support[active]]
        comps = [p for p, keep in zip(parts, active) if keep]
        w = masses[active] / masses[active].sum()
        common = math.lcm(*ks)
        if common <= max_common_bins:
            weights = np.zeros(common)
            for wk, comp in zip(w, comps):
                reps = common // comp.k
                weights += wk * np.repeat(comp.weights / reps, reps)
            return HistogramDensity(weights)
        return MixtureDensity(list(zip(w, comps)))

    def to_json(self):
        return {
            "k_support": [int(k) for k in self.k_support],
            "log_post_k": [float(v) for v in self.log_post_k],
            "dirichlet_params": [[float(v) for v in p] for p in self.dirichlet_params],
            "transform": None if self.transform is None
            else {"a": self.transform.a, "b": self.transform.b},
            "n": int(self.n),
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d):
        tf = d.get("transform")
        return cls(
            k_support=np.asarray(d["k_support"], dtype=int),
            log_post_k=np.asarray(d["log_post_k"], dtype=float),
            dirichlet_params=[np.asarray(p, dtype=float) for p in d["dirichlet_params"]],
            n=int(d["n"]),
            transform=None if tf is None else SupportTransform(tf["a"], tf["b"]),
        )


def fit_posterior(data, prior=None, transform=None):
    """Exact posterior update from data on [0, 1].

    For each candidate k the log marginal likelihood is
    n*log(k) + log B(alpha + counts) - log B(alpha); the posterior over k
    combines it with the prior k-masses, and the per-k weight posterior is
    Dirichlet(alpha + counts).
    """
    prior = prior or HistogramPrior.fixed()
    data = np.asarray(data, dtype=float)
    n = len(data)
    if n < 1:
        raise ValueError("need at least one observation")
    prior.validate(n)
    ks = prior.k_values(n)
    log_prior = prior.log_prior_k(ks)
    params = []
    log_marg = np.empty(len(ks))
    for i, k in enumerate(ks):
        counts = bin_counts(data, int(k))
        alpha = np.full(int(k), prior.alpha)
        post_param = alpha + counts
        log_marg[i] = n * math.log(k) + _log_beta(post_param) - _log_beta(alpha)
        params.append(post_param)
    log_post = log_prior + log_marg
    log_post -= logsumexp(log_post)
    return RandomHistogramPosterior(
        k_support=ks, log_post_k=log_post, dirichlet_params=params,
        n=n, transform=transform, log_marginals=log_marg)


def sample_density(post, rng=None):
    """Draw one histogram density from a fitted posterior."""
    return post.sample(rng)


def eap_density(post, max_common_bins=10_000):
    """Expected a-posteriori density of a fitted posterior."""
    return post.eap(max_common_bins=max_common_bins)


def concentration_radius(k, n):
    """Posterior-concentration scale sqrt(k * log(n) / n)."""
    if n < 2:
        raise ValueError("concentration radius requires n >= 2")
    if k < 1:
        raise ValueError("bin count k must be positive")
    return math.sqrt(k * math.log(n) / n)
