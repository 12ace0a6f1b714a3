"""Jordan regions, annuli, and the metric quantities attached to them.

Regions are closed polylines stored as complex vertex arrays with positive
orientation.  Everything downstream (piece membership, areas, moduli,
bounded-geometry constants) reduces to a handful of vectorized primitives
over these polylines.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

__all__ = [
    "JordanRegion", "AnnulusSpec", "InvalidRegion", "OnBoundary",
    "INSIDE", "OUTSIDE", "BOUNDARY", "BOUNDARY_TOL",
    "contains", "contains_mask", "area", "diameter", "interior_point",
    "poincare_density_bounds", "bounded_geometry",
    "circle_polyline", "square_polyline", "rect_polyline", "refine_polyline",
    "thin_polyline",
    "polyline_distance", "region_to_json", "region_from_json",
]

BOUNDARY_TOL = 1e-9

INSIDE = "inside"
OUTSIDE = "outside"
BOUNDARY = "boundary"


class InvalidRegion(ValueError):
    """Vertex list fails the closed-simple-positively-oriented contract."""


class OnBoundary(ValueError):
    """A strictly-interior point was required but z sits on the boundary."""


def _signed_area(v):
    x, y = v.real, v.imag
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


class JordanRegion:
    """Positively oriented closed polyline with at least 8 vertices.

    The vertex list is implicitly closed; vertices are stored as a complex
    numpy array.  Negative input orientation is flipped on construction.
    Full simplicity checking is quadratic, so it runs through `validate`
    rather than on every construction.
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=complex)
        if v.ndim != 1 or v.size < 8:
            raise InvalidRegion("a Jordan region needs at least 8 vertices")
        if abs(v[0] - v[-1]) <= BOUNDARY_TOL:
            v = v[:-1]
        if v.size < 8:
            raise InvalidRegion("a Jordan region needs at least 8 vertices")
        a = _signed_area(v)
        if a == 0.0:
            raise InvalidRegion("degenerate polyline with zero area")
        if a < 0.0:
            v = v[::-1].copy()
        self.vertices = v
        self.vertices.setflags(write=False)

    def __len__(self):
        return self.vertices.size

    def segments(self):
        return self.vertices, np.roll(self.vertices, -1)

    def validate(self):
        """Check simplicity at tolerance; raises InvalidRegion on failure."""
        if _min_self_distance(self.vertices) <= BOUNDARY_TOL:
            raise InvalidRegion("polyline self-intersects within tolerance")
        return self

    def bbox(self):
        v = self.vertices
        return v.real.min(), v.real.max(), v.imag.min(), v.imag.max()

    def centroid(self):
        a, b = self.segments()
        cross = a.real * b.imag - b.real * a.imag
        tot = np.sum(cross)
        return complex(np.sum((a + b) * cross) / (3.0 * tot))


def _seg_point_dist(a, b, z):
    """Min distance from each z to the segment set {a->b}; O(|z|*|a|)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d = b - a
    L2 = np.abs(d) ** 2
    L2 = np.where(L2 == 0.0, 1e-300, L2)
    out = np.empty(z.size)
    block = max(16, int(1_000_000 / max(1, a.size)))
    for lo in range(0, z.size, block):
        zs = z[lo:lo + block]
        t = ((zs[:, None] - a[None, :]) * np.conj(d[None, :])).real
        t = np.clip(t / L2[None, :], 0.0, 1.0)
        proj = a[None, :] + t * d[None, :]
        out[lo:lo + block] = np.min(np.abs(zs[:, None] - proj), axis=1)
    return out


def polyline_distance(region, z):
    """Distance from point(s) z to the boundary polyline."""
    a, b = region.segments()
    out = _seg_point_dist(a, b, z)
    return float(out[0]) if not np.ndim(z) else out


def thin_polyline(v, tol, min_verts=64, max_rounds=8):
    """Drop vertices whose removal displaces the polyline by less than tol.

    Alternating-parity removal keeps adjacent pairs from vanishing in one
    round; corners and high-curvature runs survive because their chord
    error exceeds tol.
    """
    v = np.asarray(v, dtype=complex)
    for _ in range(max_rounds):
        n = v.size
        if n <= min_verts:
            break
        prev = np.roll(v, 1)
        nxt = np.roll(v, -1)
        d = nxt - prev
        L2 = np.abs(d) ** 2
        L2 = np.where(L2 == 0.0, 1e-300, L2)
        t = np.clip(((v - prev) * np.conj(d)).real / L2, 0.0, 1.0)
        err = np.abs(v - (prev + t * d))
        cand = (err < tol) & (np.arange(n) % 2 == 1)
        if not cand.any() or n - int(cand.sum()) < min_verts:
            break
        v = v[~cand]
    return v


def _min_self_distance(v):
    """Min distance between non-adjacent segments (coarse O(n^2) blocks)."""
    n = v.size
    a, b = v, np.roll(v, -1)
    best = np.inf
    # midpoint sampling pass first; exact segment-segment only near hits
    samp = np.concatenate([a + t * (b - a) for t in (0.0, 0.25, 0.5, 0.75)])
    sidx = np.tile(np.arange(n), 4)
    block = 1024
    for i0 in range(0, samp.size, block):
        zs = samp[i0:i0 + block]
        zi = sidx[i0:i0 + block]
        dmat = np.abs(zs[:, None] - v[None, :])  # to vertices, cheap filter
        # distance to every segment for this block
        d = b - a
        L2 = np.abs(d) ** 2
        t = ((zs[:, None] - a[None, :]) * np.conj(d[None, :])).real / L2[None, :]
        t = np.clip(t, 0.0, 1.0)
        proj = a[None, :] + t * d[None, :]
        dist = np.abs(zs[:, None] - proj)
        j = np.arange(n)[None, :]
        adj = (np.abs((j - zi[:, None]) % n) <= 1) | (np.abs((zi[:, None] - j) % n) <= 1)
        dist = np.where(adj, np.inf, dist)
        best = min(best, float(dist.min()))
        del dmat
    return best


def _crossing_parity(vs, z):
    """Even-odd ray crossings for points z against closed polyline vs."""
    a, b = vs, np.roll(vs, -1)
    x, y = z.real[:, None], z.imag[:, None]
    ya, yb = a.imag[None, :], b.imag[None, :]
    xa, xb = a.real[None, :], b.real[None, :]
    straddle = (ya <= y) != (yb <= y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xa + (y - ya) * (xb - xa) / (yb - ya)
    hits = straddle & (xc > x)
    return np.sum(hits, axis=1) % 2 == 1


def contains_mask(region, z):
    """Vectorized interior test; boundary-tolerance points report False.

    Returns (inside, on_boundary) boolean arrays.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    dist = polyline_distance(region, z)
    on_b = dist <= BOUNDARY_TOL
    inside = _crossing_parity(region.vertices, z) & ~on_b
    return inside, on_b


def contains(region, z):
    """Tri-state membership with the 1e-9 boundary band."""
    inside, on_b = contains_mask(region, complex(z))
    if on_b[0]:
        return BOUNDARY
    return INSIDE if inside[0] else OUTSIDE


def area(region):
    """Shoelace area; positive by the orientation normalization."""
    return float(abs(_signed_area(region.vertices)))


def diameter(region):
    v = region.vertices
    pts = np.column_stack([v.real, v.imag])
    if v.size > 16:
        hull = ConvexHull(pts)
        pts = pts[hull.vertices]
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def poincare_density_bounds(region, z):
    """Two-sided hyperbolic density bound (1/(2d), 2/d), d = dist to boundary.

    Normalization: the unit-disk density at 0 equals 2.
    """
    d = polyline_distance(region, complex(z))
    if d <= BOUNDARY_TOL:
        raise OnBoundary("Poincare bounds need a strictly interior point")
    if contains(region, z) != INSIDE:
        raise OnBoundary("point is not inside the region")
    return 0.5 / d, 2.0 / d


def bounded_geometry(region, z):
    """Largest eta with D(z, eta*diam) inside the region."""
    if contains(region, z) != INSIDE:
        raise OnBoundary("bounded-geometry constant needs an interior point")
    return polyline_distance(region, complex(z)) / diameter(region)


def interior_point(region):
    """A strictly interior point with decent boundary clearance.

    Centroid first; for nonconvex regions where it fails, a deterministic
    grid sweep of the bounding box picks the deepest admissible point.
    """
    cands = [complex(region.centroid())]
    v = region.vertices
    step = max(1, v.size // 8)
    for f in (0.5, 0.25, 0.75):
        cands.extend(cands[0] + f * (v[::step] - cands[0]))
    best, bestd = None, 0.0
    zz = np.array(cands)
    ins, on_b = contains_mask(region, zz)
    ok = ins & ~on_b
    if ok.any():
        pts = zz[ok]
        d = polyline_distance(region, pts)
        i = int(np.argmax(d))
        best, bestd = complex(pts[i]), float(d[i])
    if best is not None and bestd > BOUNDARY_TOL:
        return best
    x0, x1, y0, y1 = region.bbox()
    g = 16
    while g <= 512:
        xs = np.linspace(x0, x1, g + 2)[1:-1]
        ys = np.linspace(y0, y1, g + 2)[1:-1]
        zz = (xs[None, :] + 1j * ys[:, None]).ravel()
        ins, on_b = contains_mask(region, zz)
        ok = ins & ~on_b
        if ok.any():
            pts = zz[ok]
            d = polyline_distance(region, pts)
            return complex(pts[int(np.argmax(d))])
        g *= 2
    raise InvalidRegion("no interior point found by grid sweep")


class AnnulusSpec:
    """Outer region with an inner region compactly contained in it."""

    __slots__ = ("outer", "inner")

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner

    def validate(self):
        ins, on_b = contains_mask(self.outer, self.inner.vertices)
        if not np.all(ins):
            raise InvalidRegion("inner boundary is not inside the outer region")
        if self.boundary_gap() < BOUNDARY_TOL:
            raise InvalidRegion("annulus boundaries closer than tolerance")
        return self

    def boundary_gap(self):
        a, b = self.outer.segments()
        return float(np.min(_seg_point_dist(a, b, self.inner.vertices)))


# --------------------------------------------------------------------------
# Polyline constructors and refinement.


def circle_polyline(center, radius, n=256):
    t = 2.0 * np.pi * np.arange(n) / n
    return JordanRegion(center + radius * np.exp(1j * t))


def rect_polyline(x0, x1, y0, y1, per_side=16):
    ts = np.arange(per_side) / per_side
    bottom = x0 + ts * (x1 - x0) + 1j * y0
    right = x1 + 1j * (y0 + ts * (y1 - y0))
    top = x1 + ts * (x0 - x1) + 1j * y1
    left = x0 + 1j * (y1 + ts * (y0 - y1))
    return JordanRegion(np.concatenate([bottom, right, top, left]))


def square_polyline(center, half_side, per_side=16):
    c = complex(center)
    return rect_polyline(c.real - half_side, c.real + half_side,
                         c.imag - half_side, c.imag + half_side, per_side)


def refine_polyline(vertices, max_gap):
    """Insert interpolated vertices until adjacent gaps are <= max_gap."""
    v = np.asarray(vertices, dtype=complex)
    out = []
    nxt = np.roll(v, -1)
    for p, q in zip(v, nxt):
        gap = abs(q - p)
        k = max(1, int(np.ceil(gap / max_gap)))
        ts = np.arange(k) / k
        out.append(p + ts * (q - p))
    return np.concatenate(out)


# --------------------------------------------------------------------------
# Serialization.


def region_to_json(region):
    return [[float(z.real), float(z.imag)] for z in region.vertices]


def region_from_json(obj):
    return JordanRegion(np.array([complex(p[0], p[1]) for p in obj]))
