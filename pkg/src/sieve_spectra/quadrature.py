"""Adaptive quadrature over many triangles at once.

Each triangle is integrated with a conical-product Gauss rule at two
orders; the difference is the error indicator. Triangles that miss their
share of the tolerance are bisected across the longest edge and retried,
up to a depth limit. Everything is vectorized across triangles so that
millions of small polygon integrals cost a few numpy passes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = ["triangle_rule", "triangulate", "integrate_triangles", "TriangleResult"]


@lru_cache(maxsize=None)
def triangle_rule(n: int):
    """Conical-product Gauss rule with n*n nodes on the unit right triangle.

    Returns (s, t, w) with nodes P0 + s (P1 - P0) + t (P2 - P0) and weights
    summing to 1/2. Exact for polynomials of total degree 2n - 2.
    """
    g, w = leggauss(n)
    g = (g + 1) / 2
    w = w / 2
    U, V = np.meshgrid(g, g, indexing="ij")
    W = np.outer(w, w)
    s = U.ravel()
    t = (V * (1 - U)).ravel()
    ww = (W * (1 - U)).ravel()
    for arr in (s, t, ww):
        arr.setflags(write=False)
    return s, t, ww


def triangulate(V, cnt):
    """Fan each padded convex polygon from its first vertex.

    A polygon with c vertices gives c - 2 triangles; polygons with fewer
    than three vertices give none. Returns (tris, owner): tris has shape
    (T, 3, 2), owner[T] is the polygon index.
    """
    P, M, _ = V.shape
    j = np.arange(1, M - 1)
    valid = j[None, :] < (cnt[:, None] - 1)
    pp, jj = np.nonzero(valid)
    jj = jj + 1
    tris = np.stack([V[pp, 0], V[pp, jj], V[pp, jj + 1]], axis=1)
    return tris, pp


def _apply_rule(tris, rule, func, owner, chunk=65536):
    if len(tris) > chunk:
        return np.concatenate(
            [_apply_rule(tris[i : i + chunk], rule, func, owner[i : i + chunk], chunk) for i in range(0, len(tris), chunk)]
        )
    s, t, w = rule
    P0, P1, P2 = tris[:, 0], tris[:, 1], tris[:, 2]
    d1 = P1 - P0
    d2 = P2 - P0
    X = P0[:, 0, None] + s * d1[:, 0, None] + t * d2[:, 0, None]
    Y = P0[:, 1, None] + s * d1[:, 1, None] + t * d2[:, 1, None]
    jac = np.abs(d1[:, 0] * d2[:, 1] - d2[:, 0] * d1[:, 1])
    vals = func(X, Y, owner)
    return (vals @ w) * jac


def _bisect(tris):
    """Split each triangle at the midpoint of its longest edge."""
    e = np.stack(
        [
            np.sum((tris[:, 1] - tris[:, 0]) ** 2, axis=1),
            np.sum((tris[:, 2] - tris[:, 1]) ** 2, axis=1),
            np.sum((tris[:, 0] - tris[:, 2]) ** 2, axis=1),
        ],
        axis=1,
    )
    k = np.argmax(e, axis=1)
    # rotate so the longest edge is (v0, v1)
    idx = (np.arange(3)[None, :] + k[:, None]) % 3
    r = np.take_along_axis(tris, idx[:, :, None], axis=1)
    m = 0.5 * (r[:, 0] + r[:, 1])
    left = np.stack([r[:, 0], m, r[:, 2]], axis=1)
    right = np.stack([m, r[:, 1], r[:, 2]], axis=1)
    return np.concatenate([left, right])


@dataclass
class TriangleResult:
    """Per-owner integrals, error estimates and convergence flags."""

    value: np.ndarray
    error: np.ndarray
    converged: np.ndarray
    evaluations: int


def _areas(tris):
    return 0.5 * np.abs(
        (tris[:, 1, 0] - tris[:, 0, 0]) * (tris[:, 2, 1] - tris[:, 0, 1])
        - (tris[:, 2, 0] - tris[:, 0, 0]) * (tris[:, 1, 1] - tris[:, 0, 1])
    )


def integrate_triangles(tris, owner, n_owners, func, tol, order=(4, 6), max_depth=12, bound=None):
    """Integrate ``func`` over triangles grouped by owner.

    ``func(X, Y, owner)`` evaluates the integrand at points of shape
    (T, npts) for triangles belonging to ``owner`` (shape (T,)).
    ``tol`` is an absolute tolerance per owner.

    Globally adaptive per owner: while an owner's summed error estimate
    exceeds ``tol``, its triangles with above-average error are bisected.
    ``bound(tris, owner)``, if given, returns an upper bound for |func| on
    each triangle, and 2 * bound * area caps that triangle's error
    estimate. This keeps refinement finite where the integrand oscillates
    but is small. Owners still above ``tol`` once their worst triangles hit
    ``max_depth`` are flagged as not converged.
    """
    lo_rule = triangle_rule(order[0])
    hi_rule = triangle_rule(order[1])
    npts = len(hi_rule[2]) + len(lo_rule[2])
    tol = np.broadcast_to(np.asarray(tol, dtype=float), (n_owners,))

    def evaluate(T, own):
        hi = _apply_rule(T, hi_rule, func, own)
        lo = _apply_rule(T, lo_rule, func, own)
        err = np.abs(hi - lo)
        if bound is not None:
            err = np.minimum(err, 2.0 * bound(T, own) * _areas(T))
        return hi, err

    tris = np.asarray(tris, dtype=float)
    owner = np.asarray(owner, dtype=np.int64)
    depth = np.zeros(len(tris), dtype=np.int64)
    hi, err = evaluate(tris, owner)
    evals = len(tris) * npts

    value = np.zeros(n_owners)
    error = np.zeros(n_owners)
    converged = np.ones(n_owners, dtype=bool)
    while len(tris):
        E = np.bincount(owner, weights=err, minlength=n_owners)
        n = np.bincount(owner, minlength=n_owners)
        open_ = E > tol
        refine = open_[owner] & (err * n[owner] >= E[owner]) & (depth < max_depth)
        stuck = open_.copy()
        stuck[owner[refine]] = False
        converged[stuck] = False
        # owners that are finished (within tol, or stuck) leave the pool
        leave = ~open_[owner] | stuck[owner]
        if leave.any():
            value += np.bincount(owner[leave], weights=hi[leave], minlength=n_owners)
            error += np.bincount(owner[leave], weights=err[leave], minlength=n_owners)
        keep = ~leave & ~refine
        split = refine
        if not split.any():
            break
        kids = _bisect(tris[split])
        kid_owner = np.concatenate([owner[split], owner[split]])
        kid_depth = np.concatenate([depth[split], depth[split]]) + 1
        khi, kerr = evaluate(kids, kid_owner)
        evals += len(kids) * npts
        tris = np.concatenate([tris[keep], kids])
        owner = np.concatenate([owner[keep], kid_owner])
        depth = np.concatenate([depth[keep], kid_depth])
        hi = np.concatenate([hi[keep], khi])
        err = np.concatenate([err[keep], kerr])
    return TriangleResult(value, error, converged, evals)
