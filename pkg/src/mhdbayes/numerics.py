"""Quadrature, derivative-free minimization, finite differences, RNG plumbing.

Everything here is deterministic given its inputs; randomness (optimizer
restart jitter, study replication) is always driven by a caller-supplied
seed or ``numpy.random.Generator``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.optimize


def resolve_workers(workers=None):
    """Worker-process count: explicit argument, else MHDBAYES_WORKERS
    (0 means all cores), else 1."""
    if workers is None:
        workers = int(os.environ.get("MHDBAYES_WORKERS", "1"))
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def as_generator(rng=None):
    """Coerce ``rng`` (None, int seed, or Generator) to a Generator.

    The same integer seed always yields the same stream.
    """
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def worker_rng(seed, worker_index):
    """Independent stream for worker ``worker_index`` derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(worker_index))))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes/weights normalized to the unit interval.

    ``nodes`` are strictly increasing in [0, 1] and ``weights`` sum to 1,
    so the rule integrates the constant 1 exactly on [0, 1].  ``order`` is
    the node count; degree <= 2*order - 1 polynomials are integrated
    exactly on a single panel.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.order < 1 or len(nodes) != self.order or len(weights) != self.order:
            raise ValueError("order must match the number of nodes and weights")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1 on [0, 1]")
        if np.any(np.diff(nodes) <= 0) or nodes[0] < 0 or nodes[-1] > 1:
            raise ValueError("nodes must be strictly increasing within [0, 1]")

    @classmethod
    def gauss_legendre(cls, order=8):
        x, w = np.polynomial.legendre.leggauss(int(order))
        return cls(nodes=(x + 1.0) / 2.0, weights=w / 2.0, order=int(order))


DEFAULT_RULE = QuadratureRule.gauss_legendre(8)


def composite_nodes(edges, rule=None):
    """Nodes and weights of ``rule`` applied on every cell of ``edges``.

    ``edges`` is a strictly increasing 1-d array of panel boundaries.
    Returns flat arrays ``(x, w)`` with ``sum(w) == edges[-1] - edges[0]``.
    """
    rule = rule or DEFAULT_RULE
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 2:
        raise ValueError("edges must be a 1-d array with at least two entries")
    widths = np.diff(edges)
    if np.any(widths <= 0):
        raise ValueError("edges must be strictly increasing")
    x = (edges[:-1, None] + widths[:, None] * rule.nodes[None, :]).ravel()
    w = (widths[:, None] * rule.weights[None, :]).ravel()
    return x, w


def _eval_checked(f, x):
    vals = np.asarray(f(x), dtype=float)
    if vals.shape != x.shape:
        raise ValueError(f"integrand returned shape {vals.shape}, expected {x.shape}")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = x[bad][0]
        raise ValueError(f"integrand is non-finite at x = {where!r}")
    return vals


def integrate(f, a, b, rule=None, panels=1):
    """Composite Gauss-Legendre integral of ``f`` over [a, b].

    ``f`` must accept a numpy array of abscissae.  Error decays like
    O(panel_width**(2*order)) for smooth integrands.
    """
    if not (a < b):
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if panels < 1:
        raise ValueError("panels must be a positive integer")
    x, w = composite_nodes(np.linspace(a, b, int(panels) + 1), rule)
    return float(np.dot(w, _eval_checked(f, x)))


def integrate_over_cells(f, edges, rule=None):
    """Integral of ``f`` with one quadrature panel per cell of ``edges``."""
    x, w = composite_nodes(edges, rule)
    return float(np.dot(w, _eval_checked(f, x)))


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 2000
    tol_x: float = 1e-7
    tol_f: float = 1e-11
    restarts: int = 3

    def __post_init__(self):
        if self.tol_x <= 0 or self.tol_f <= 0:
            raise ValueError("tol_x and tol_f must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


def _initial_simplex_finite(objective, x0):
    """Check the default Nelder-Mead start simplex has a finite vertex."""
    vertices = [x0]
    for i in range(len(x0)):
        v = x0.copy()
        v[i] = v[i] * 1.05 if v[i] != 0 else 0.00025
        vertices.append(v)
    return any(np.isfinite(objective(v)) for v in vertices)


def minimize(objective, x0, bounds, config=None, rng=None):
    """Bounded Nelder-Mead with jittered restarts.

    Coordinates are clamped to ``bounds`` (the objective sees +inf outside
    them as a second line of defense).  Runs once from ``x0`` plus
    ``config.restarts`` times from jittered copies of it; returns
    ``(argmin, fmin, converged)`` for the best run.  ``converged`` is True
    iff that run terminated with simplex diameter < tol_x and function
    spread < tol_f.  Deterministic for a fixed ``rng`` seed.
    """
    config = config or OptimizerConfig()
    rng = as_generator(0 if rng is None else rng)
    x0 = np.asarray(x0, dtype=float)
    lo = np.asarray([lb for lb, _ in bounds], dtype=float)
    hi = np.asarray([ub for _, ub in bounds], dtype=float)
    if np.any(lo >= hi):
        raise ValueError("each bound must satisfy lo < hi")

    def penalized(x):
        if np.any(x < lo) or np.any(x > hi):
            return np.inf
        return float(objective(x))

    start = np.clip(x0, lo, hi)
    if not _initial_simplex_finite(penalized, start):
        raise ValueError("objective is non-finite at every initial simplex vertex")

    starts = [start]
    scale = 0.05 * (hi - lo)
    for _ in range(config.restarts):
        starts.append(np.clip(start + scale * rng.standard_normal(len(start)), lo, hi))

    best = None
    for s in starts:
        if not np.isfinite(penalized(s)):
            continue
        res = scipy.optimize.minimize(
            penalized, s, method="Nelder-Mead",
            bounds=scipy.optimize.Bounds(lo, hi),
            options=dict(xatol=config.tol_x, fatol=config.tol_f,
                         maxiter=config.max_iters, maxfev=10 * config.max_iters),
        )
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ValueError("no finite starting point for Nelder-Mead")
    return np.clip(best.x, lo, hi), float(best.fun), bool(best.success)


def finite_diff_grad(f, x, h=1e-6):
    """Central-difference gradient of a scalar function, error O(h**2)."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(len(x)):
        step = np.zeros_like(x)
        step[i] = h
        fp, fm = f(x + step), f(x - step)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite evaluation near x = {x!r} (coordinate {i})")
        grad[i] = (fp - fm) / (2.0 * h)
    return grad
