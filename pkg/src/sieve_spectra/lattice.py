"""Lattice tuples (A, B) and their convex domains D_{A,B}.

D_{A,B} is the part of the triangle 0 <= x <= y <= 1 where every strip
0 < A_i y - B_i x <= 1 holds. Strict inequalities are treated as closed;
boundaries have measure zero.

Two clippers live here. ``domain_polygon`` works in exact rationals and is
the reference for single tuples. ``clip_batch`` is a padded-array
Sutherland-Hodgman over many polygons at once with a floating epsilon; it
drives enumeration and is checked against the exact one in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import ValidationError

__all__ = [
    "LatticePair",
    "DomainPolygon",
    "domain_polygon",
    "primitive_points",
    "PairBatch",
    "feasible_batches",
    "enumerate_pairs",
    "count_feasible",
    "brute_force_feasible",
    "gcd0",
    "clip_batch",
    "polygon_areas",
    "TRIANGLE",
]

# (x, y) vertices of {0 <= x <= y <= 1}, counter-clockwise
TRIANGLE = ((0, 0), (1, 1), (0, 1))

VERTEX_EPS = 1e-12
AREA_EPS = 1e-15


def gcd0(a, b):
    # gcd(A, 0) = |A|
    return math.gcd(int(a), int(b))


@dataclass(frozen=True)
class LatticePair:
    """Integer vectors A, B of length ell - 1 with each (A_i, B_i) primitive."""

    A: tuple
    B: tuple

    def __post_init__(self):
        A = tuple(int(a) for a in self.A)
        B = tuple(int(b) for b in self.B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if len(A) != len(B) or not A:
            raise ValidationError("A and B must be nonempty and of equal length")
        for a, b in zip(A, B):
            if (a, b) == (0, 0) or gcd0(a, b) != 1:
                raise ValidationError(f"(A_i, B_i) = ({a}, {b}) is not primitive")

    @property
    def ell(self) -> int:
        return len(self.A) + 1

    @property
    def max_coord(self) -> int:
        return max(max(abs(a), abs(b)) for a, b in zip(self.A, self.B))

    def sort_key(self):
        return (self.max_coord,) + self.A + self.B


@dataclass(frozen=True, eq=False)
class DomainPolygon:
    """Convex polygon, counter-clockwise; may be empty.

    ``exact`` holds the rational vertices when they are known.
    """

    vertices: np.ndarray
    exact: tuple | None = None

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3 or self.area <= 0

    @property
    def area(self) -> float:
        if self.exact is not None:
            return float(_exact_area(self.exact))
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def exact_area(self) -> Fraction:
        if self.exact is None:
            raise ValueError("polygon has no exact representation")
        return _exact_area(self.exact)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def _exact_area(pts):
    if len(pts) < 3:
        return Fraction(0)
    s = Fraction(0)
    for i, (x1, y1) in enumerate(pts):
        x2, y2 = pts[(i + 1) % len(pts)]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def _clip_exact(pts, a, b, c):
    """Keep a*x + b*y <= c, exactly."""
    out = []
    n = len(pts)
    for i in range(n):
        p, q = pts[i], pts[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    # drop repeated vertices produced by touching lines
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def domain_polygon(pair) -> DomainPolygon:
    """Exact D_{A,B} by successive half-plane cuts of the base triangle.

    Accepts a LatticePair or any (A, B) pair of integer sequences; the
    latter skips the primitivity check so that non-primitive strips can
    be inspected geometrically.
    """
    A, B = (pair.A, pair.B) if isinstance(pair, LatticePair) else pair
    pts = [(Fraction(x), Fraction(y)) for x, y in TRIANGLE]
    for a, b in zip(A, B):
        # A y - B x >= 0  <=>  B x - A y <= 0 ; A y - B x <= 1
        pts = _clip_exact(pts, b, -a, 0)
        if len(pts) < 3:
            break
        pts = _clip_exact(pts, -b, a, 1)
        if len(pts) < 3:
            break
    if len(pts) < 3 or _exact_area(pts) == 0:
        return DomainPolygon(np.zeros((0, 2)), ())
    verts = np.array([[float(x), float(y)] for x, y in pts])
    return DomainPolygon(verts, tuple(pts))


# ---------------------------------------------------------------------------
# batched floating clipper


def clip_batch(V, cnt, a, b, c):
    """Clip padded convex polygons against a*x + b*y <= c, row by row.

    V has shape (P, M, 2) with the first ``cnt[p]`` rows of polygon p valid.
    Returns new (V, cnt) with the padding width trimmed to the largest count.
    """
    P, M, _ = V.shape
    if P == 0:
        return V, cnt
    j = np.arange(M)
    valid = j[None, :] < cnt[:, None]
    safe_cnt = np.maximum(cnt, 1)
    nxt = (j[None, :] + 1) % safe_cnt[:, None]
    Vn = np.take_along_axis(V, nxt[:, :, None], axis=1)
    scale = np.abs(a) + np.abs(b) + np.abs(c) + 1.0
    eps = (VERTEX_EPS * scale)[:, None]
    f = a[:, None] * V[..., 0] + b[:, None] * V[..., 1] - c[:, None]
    fn = a[:, None] * Vn[..., 0] + b[:, None] * Vn[..., 1] - c[:, None]
    inside = valid & (f <= eps)
    cross = valid & (((f < -eps) & (fn > eps)) | ((f > eps) & (fn < -eps)))
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(cross, f / (f - fn), 0.0)
    X = V + s[..., None] * (Vn - V)
    out = np.empty((P, 2 * M, 2))
    out[:, 0::2] = V
    out[:, 1::2] = X
    keep = np.empty((P, 2 * M), dtype=bool)
    keep[:, 0::2] = inside
    keep[:, 1::2] = cross
    order = np.argsort(~keep, axis=1, kind="stable")
    out = np.take_along_axis(out, order[:, :, None], axis=1)
    new_cnt = keep.sum(axis=1)
    width = max(int(new_cnt.max()), 1)
    out = out[:, :width]
    new_cnt = np.where(new_cnt >= 3, new_cnt, 0)
    return out, new_cnt


def polygon_areas(V, cnt):
    """Shoelace areas of padded polygons."""
    P, M, _ = V.shape
    if P == 0:
        return np.zeros(0)
    j = np.arange(M)
    valid = j[None, :] < cnt[:, None]
    nxt = (j[None, :] + 1) % np.maximum(cnt, 1)[:, None]
    Vn = np.take_along_axis(V, nxt[:, :, None], axis=1)
    cross = V[..., 0] * Vn[..., 1] - Vn[..., 0] * V[..., 1]
    return 0.5 * np.abs(np.where(valid, cross, 0.0).sum(axis=1))


def _clip_strip(V, cnt, A, B):
    V, cnt = clip_batch(V, cnt, B.astype(float), -A.astype(float), np.zeros(len(A)))
    V, cnt = clip_batch(V, cnt, -B.astype(float), A.astype(float), np.ones(len(A)))
    return V, cnt


# ---------------------------------------------------------------------------
# enumeration


def primitive_points(R: int) -> np.ndarray:
    """All primitive (A, B) with max(|A|, |B|) <= R, sorted by max then (A, B)."""
    if R < 1:
        raise ValidationError(f"R must be >= 1, got {R}")
    r = np.arange(-R, R + 1)
    A, B = np.meshgrid(r, r, indexing="ij")
    A, B = A.ravel(), B.ravel()
    keep = np.gcd(A, B) == 1
    A, B = A[keep], B[keep]
    m = np.maximum(np.abs(A), np.abs(B))
    order = np.lexsort((B, A, m))
    return np.stack([A[order], B[order]], axis=1)


@dataclass
class PairBatch:
    """A block of feasible tuples with their float polygons.

    A and B have shape (P, ell - 1); V, cnt are padded polygons.
    """

    A: np.ndarray
    B: np.ndarray
    V: np.ndarray
    cnt: np.ndarray

    def __len__(self):
        return len(self.A)

    @property
    def max_coord(self) -> np.ndarray:
        return np.maximum(np.abs(self.A), np.abs(self.B)).max(axis=1)

    def sort_order(self) -> np.ndarray:
        keys = [self.B[:, i] for i in range(self.B.shape[1] - 1, -1, -1)]
        keys += [self.A[:, i] for i in range(self.A.shape[1] - 1, -1, -1)]
        keys.append(self.max_coord)
        return np.lexsort(keys)

    def take(self, idx):
        return PairBatch(self.A[idx], self.B[idx], self.V[idx], self.cnt[idx])

    def pairs(self) -> Iterator[LatticePair]:
        for a, b in zip(self.A, self.B):
            yield LatticePair(tuple(a), tuple(b))


def _singles(points):
    n = len(points)
    V = np.broadcast_to(np.array(TRIANGLE, dtype=float), (n, 3, 2)).copy()
    cnt = np.full(n, 3)
    V, cnt = _clip_strip(V, cnt, points[:, 0], points[:, 1])
    ok = (cnt >= 3) & (polygon_areas(V, cnt) > AREA_EPS)
    return PairBatch(points[ok, 0:1], points[ok, 1:2], V[ok], cnt[ok])


def _extend(batch, points, chunk=200_000):
    """Append one more (A, B) to every tuple in ``batch`` where feasible."""
    out = []
    PA, PB = points[:, 0].astype(float), points[:, 1].astype(float)
    per = max(1, chunk // max(len(points), 1))
    for s in range(0, len(batch), per):
        sub = batch.take(slice(s, s + per))
        M = sub.V.shape[1]
        valid = np.arange(M)[None, :] < sub.cnt[:, None]
        xs = sub.V[..., 0]
        ys = sub.V[..., 1]
        # value of A y - B x at each vertex, for every candidate point
        vals = ys[:, None, :] * PA[None, :, None] - xs[:, None, :] * PB[None, :, None]
        hi = np.where(valid[:, None, :], vals, -np.inf).max(axis=2)
        lo = np.where(valid[:, None, :], vals, np.inf).min(axis=2)
        ii, pp = np.nonzero((hi > VERTEX_EPS) & (lo < 1 - VERTEX_EPS))
        if len(ii) == 0:
            continue
        V = sub.V[ii]
        cnt = sub.cnt[ii]
        V, cnt = _clip_strip(V, cnt, points[pp, 0], points[pp, 1])
        ok = (cnt >= 3) & (polygon_areas(V, cnt) > AREA_EPS)
        if not ok.any():
            continue
        A = np.concatenate([sub.A[ii][ok], points[pp[ok], 0:1]], axis=1)
        B = np.concatenate([sub.B[ii][ok], points[pp[ok], 1:2]], axis=1)
        out.append(PairBatch(A, B, V[ok], cnt[ok]))
    return out


def _concat(batches, k):
    if not batches:
        return PairBatch(np.zeros((0, k), dtype=np.int64), np.zeros((0, k), dtype=np.int64),
                         np.zeros((0, 3, 2)), np.zeros(0, dtype=np.int64))
    M = max(b.V.shape[1] for b in batches)
    Vs = []
    for b in batches:
        pad = M - b.V.shape[1]
        Vs.append(np.pad(b.V, ((0, 0), (0, pad), (0, 0))) if pad else b.V)
    return PairBatch(np.concatenate([b.A for b in batches]), np.concatenate([b.B for b in batches]),
                     np.concatenate(Vs), np.concatenate([b.cnt for b in batches]))


def feasible_batches(ell: int, R: int, r_min: int = 0, chunk: int = 200_000) -> Iterator[PairBatch]:
    """Feasible tuples with r_min < max coordinate <= R, in blocks.

    Blocks are produced per leading (A_1, B_1) group, so memory stays
    bounded; each block is sorted by (max coordinate, A, B). The overall
    stream is not globally sorted; callers that need a global order sort
    the gathered keys.
    """
    if ell < 2:
        raise ValidationError(f"ell must be >= 2, got {ell}")
    points = primitive_points(R)
    singles = _singles(points)
    if ell == 2:
        keep = singles.max_coord > r_min
        b = singles.take(np.nonzero(keep)[0])
        yield b.take(b.sort_order())
        return
    lead_chunk = max(1, chunk // max(len(points), 1))
    for s in range(0, len(singles), lead_chunk):
        level = [singles.take(slice(s, s + lead_chunk))]
        for _ in range(ell - 2):
            nxt = []
            for b in level:
                nxt.extend(_extend(b, points, chunk))
            level = nxt
        batch = _concat(level, ell - 1)
        keep = batch.max_coord > r_min
        batch = batch.take(np.nonzero(keep)[0])
        if len(batch):
            yield batch.take(batch.sort_order())


def enumerate_pairs(ell: int, R: int) -> Iterator[LatticePair]:
    """All feasible LatticePairs with max coordinate <= R, in sort-key order."""
    batch = _concat(list(feasible_batches(ell, R)), ell - 1)
    for i in batch.sort_order():
        yield LatticePair(tuple(batch.A[i]), tuple(batch.B[i]))


def count_feasible(ell: int, R: int, r_min: int = 0) -> int:
    return sum(len(b) for b in feasible_batches(ell, R, r_min))


def brute_force_feasible(ell: int, R: int) -> list[LatticePair]:
    """Exact-rational scan over every primitive tuple; a test oracle."""
    pts = [tuple(p) for p in primitive_points(R)]
    out = []

    def rec(prefix):
        if len(prefix) == ell - 1:
            A = tuple(p[0] for p in prefix)
            B = tuple(p[1] for p in prefix)
            if not domain_polygon((A, B)).is_empty:
                out.append(LatticePair(A, B))
            return
        for p in pts:
            rec(prefix + [p])

    rec([])
    return sorted(out, key=LatticePair.sort_key)
