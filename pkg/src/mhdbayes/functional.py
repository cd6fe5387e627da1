"""The minimum Hellinger distance functional and its efficiency machinery.

``mhd`` computes T(g) = argmin_theta h(f_theta, g).  The efficient
influence function of T at a base density g0 with theta0 = T(g0) is

    value(x) = -M^{-1} sdot_theta0(x) / (2 sqrt(g0(x))) - center,

where M is the matrix integral of sddot_theta0 * sqrt(g0) and the center
makes the function integrate to zero against g0.  Its centered second
moment under g0 (the L-norm squared) is the asymptotic variance of T and
equals the inverse Fisher information when g0 is in the model family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .densities import integration_edges
from .numerics import DEFAULT_RULE, OptimizerConfig, composite_nodes


@dataclass
class MhdResult:
    """Outcome of one minimum-Hellinger-distance fit."""

    theta_hat: np.ndarray
    h_min: float
    converged: bool
    n_evals: int
    first_order_norm: float


def _prepared_nodes(g, support, rule, min_panels):
    edges = integration_edges(support, (g,), min_panels=min_panels)
    x, w = composite_nodes(edges, rule or DEFAULT_RULE)
    gv = np.asarray(g.pdf(x) if hasattr(g, "pdf") else g(x), dtype=float)
    bad = ~np.isfinite(gv)
    if np.any(bad):
        raise ValueError(f"density 'g' is non-finite at x = {x[bad][0]!r}")
    if np.any(gv < -1e-12):
        raise ValueError(f"density 'g' is negative at x = {x[np.argmin(gv)]!r}")
    return x, w, np.sqrt(np.clip(gv, 0.0, None))


def _resolve_support(g, support):
    if support is not None:
        return support
    s = getattr(g, "support", None)
    if s is None:
        raise ValueError("support must be given when g does not carry one")
    return s


def mhd(g, family, x0, config=None, support=None, rule=None, rng=None,
        refine=True, min_panels=32, bounds=None, foc_tol=1e-3):
    """Minimize the Hellinger distance between f_theta and ``g`` over theta.

    Nelder-Mead (with the configured jittered restarts) does the global
    search; when ``refine`` is set, Newton iterations on the first-order
    condition integral(sdot_theta * sqrt(g)) = 0 polish the minimizer and
    ``converged`` requires that condition to hold within ``foc_tol`` (a
    bound-pinned minimizer is therefore flagged, never silently returned).
    """
    config = config or OptimizerConfig()
    support = _resolve_support(g, support)
    bounds = bounds if bounds is not None else family.bounds
    if bounds is None:
        raise ValueError("family declares no parameter bounds; pass bounds=")
    x, w, sqrt_g = _prepared_nodes(g, support, rule, min_panels)
    wg = w * sqrt_g
    n_evals = [0]

    def objective(theta):
        n_evals[0] += 1
        bc = float(np.dot(wg, family.sqrt_pdf(theta, x)))
        if bc > 1.0 + 1e-9:
            # Cauchy-Schwarz caps the true coefficient at 1; beyond that the
            # quadrature no longer resolves f_theta (e.g. a spike between
            # nodes), so the point is treated as infeasible
            return np.inf
        return np.sqrt(max(0.0, 2.0 - 2.0 * bc))

    theta, h_min, nm_converged = numerics.minimize(
        objective, np.asarray(x0, dtype=float), bounds, config, rng=rng)

    def foc(theta):
        return np.einsum("n,np->p", wg, family.sqrt_grad(theta, x))

    if refine:
        theta, h_min, n_newton = _newton_polish(
            objective, foc,
            lambda t: np.einsum("n,npq->pq", wg, family.sqrt_hess(t, x)),
            theta, h_min, bounds)
        n_evals[0] += n_newton

    first_order = float(np.linalg.norm(foc(theta)))
    converged = first_order < foc_tol if refine else nm_converged
    return MhdResult(theta_hat=np.asarray(theta), h_min=float(h_min),
                     converged=bool(converged), n_evals=int(n_evals[0]),
                     first_order_norm=first_order)


def _newton_polish(objective, foc, jac, theta, h_min, bounds, max_iter=25):
    """Newton iterations on the stationarity condition, accepted only while
    the Hellinger objective does not increase."""
    lo = np.asarray([b[0] for b in bounds])
    hi = np.asarray([b[1] for b in bounds])
    n_extra = 0
    for _ in range(max_iter):
        grad = foc(theta)
        if np.linalg.norm(grad) < 1e-13:
            break
        try:
            step = np.linalg.solve(jac(theta), grad)
        except np.linalg.LinAlgError:
            break
        candidate = np.clip(theta - step, lo, hi)
        h_new = objective(candidate)
        n_extra += 1
        if not np.isfinite(h_new) or h_new > h_min + 1e-10:
            break
        moved = np.linalg.norm(candidate - theta)
        theta, h_min = candidate, min(h_min, h_new)
        if moved < 1e-14:
            break
    return theta, h_min, n_extra


@dataclass
class InfluenceFunction:
    """Efficient influence function of T at a base density.

    ``value(x)`` returns the p-vector influence at each abscissa, centered
    so it integrates to zero against the base density; points where the
    base density vanishes contribute nothing to any such integral and are
    mapped to zero.
    """

    base_density: object
    family: object
    theta: np.ndarray
    normalizer: np.ndarray
    center: np.ndarray

    def value(self, x):
        x = np.asarray(x, dtype=float)
        g0 = np.asarray(self.base_density.pdf(x), dtype=float)
        grads = self.family.sqrt_grad(self.theta, x)
        out = np.zeros(x.shape + (len(self.theta),))
        pos = g0 > 0
        ratio = grads[pos] / (2.0 * np.sqrt(g0[pos]))[:, None]
        out[pos] = ratio @ self.normalizer.T - self.center
        return out

    def __call__(self, x):
        return self.value(x)


def influence_function(g0, family, theta0, support=None, rule=None, min_panels=64):
    """Efficient influence function of T at ``g0`` with theta0 = T(g0).

    The (vanishing) remainder term of the defining expansion is dropped;
    for vector parameters the scalar reciprocal becomes the inverse of the
    curvature matrix integral(sddot * sqrt(g0)), which must be well
    conditioned.
    """
    theta0 = np.asarray(theta0, dtype=float)
    support = _resolve_support(g0, support)
    x, w, sqrt_g0 = _prepared_nodes(g0, support, rule, min_panels)
    wg = w * sqrt_g0
    curvature = np.einsum("n,npq->pq", wg, family.sqrt_hess(theta0, x))
    svals = np.linalg.svd(curvature, compute_uv=False)
    if svals[-1] < 1e-12 * max(svals[0], 1.0):
        raise RuntimeError(
            f"curvature matrix is singular (smallest singular value {svals[-1]:.3e})")
    normalizer = -np.linalg.inv(curvature)
    # center = integral of the raw influence against g0; the raw/g0 product
    # collapses to sdot * sqrt(g0) / 2, so no ratio is ever formed.
    center = normalizer @ (np.einsum("n,np->p", wg, family.sqrt_grad(theta0, x)) / 2.0)
    return InfluenceFunction(base_density=g0, family=family, theta=theta0,
                             normalizer=normalizer, center=center)


def l_norm_sq(q, g0, support=None, rule=None, min_panels=64):
    """Centered second moment of ``q`` under ``g0``.

    Returns a scalar for scalar-valued ``q`` and the full outer-product
    matrix for vector-valued ``q``.
    """
    support = _resolve_support(g0, support)
    x, w, sqrt_g0 = _prepared_nodes(g0, support, rule, min_panels)
    g0v = sqrt_g0 ** 2
    vals = np.asarray(q(x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("q produced non-finite values on the support")
    scalar = vals.ndim == 1
    if scalar:
        vals = vals[:, None]
    wg = w * g0v
    mean = np.einsum("n,np->p", wg, vals)
    centered = vals - mean
    mat = np.einsum("n,np,nq->pq", wg, centered, centered)
    return float(mat[0, 0]) if scalar else mat


def fisher_information(family, theta, support=None, rule=None, min_panels=64):
    """Fisher information in sqrt-density form, 4 * integral(sdot sdot^T)."""
    theta = np.asarray(theta, dtype=float)
    if support is None:
        support = family.plausible_support(theta)
    edges = integration_edges(support, (), min_panels=min_panels)
    x, w = composite_nodes(edges, rule or DEFAULT_RULE)
    grads = family.sqrt_grad(theta, x)
    if not np.all(np.isfinite(grads)):
        raise ValueError("sqrt-density gradient is non-finite on the support")
    return 4.0 * np.einsum("n,np,nq->pq", w, grads, grads)


@dataclass
class AsymptoticVariance:
    """Influence-norm variance V, plus the Fisher inverse when the base
    density is the model itself (the two must then agree)."""

    V: np.ndarray
    fisher_inverse: np.ndarray | None = None


def asymptotic_variance(family, theta, g0=None, support=None, rule=None,
                        min_panels=64):
    """Asymptotic variance of T at ``g0`` via the influence-function norm.

    With ``g0`` omitted the base density is the model f_theta and the
    inverse Fisher information is attached for comparison.
    """
    at_model = g0 is None
    if at_model:
        g0 = family.density(theta)
    inf = influence_function(g0, family, theta, support=support, rule=rule,
                             min_panels=min_panels)
    V = l_norm_sq(inf.value, g0, support=support, rule=rule, min_panels=min_panels)
    fisher_inv = None
    if at_model:
        fisher_inv = np.linalg.inv(
            fisher_information(family, theta, support=support, rule=rule,
                               min_panels=min_panels))
    return AsymptoticVariance(V=np.asarray(V), fisher_inverse=fisher_inv)
