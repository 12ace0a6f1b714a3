"""Green's function, external rays, and Yoccoz-puzzle assembly for z^2 + c.

Near infinity the Boettcher coordinate conjugates z^2 + c to w^2, and above
potential CHAIN_TOP it is the identity to working precision.  Rays and
equipotentials are therefore traced by backward square-root chains started
on a reference circle above that potential.  Branch signs along a chain are
seeded by the neighbouring chain where one exists (continuity) and by the
ray angle at the top levels; angles are kept in Fraction arithmetic so
repeated doubling never loses bits.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .analytic import NearCritical, Polynomial
from .geometry import (
    InvalidRegion, JordanRegion, area, contains, contains_mask, INSIDE,
    interior_point, polyline_distance, thin_polyline,
)
from .mapping import BoxMapping, DomainSpec

__all__ = [
    "RayLandingUndetermined", "PartitionError", "Ray",
    "fixed_points", "period_two_cycle", "green",
    "trace_ray", "trace_equipotential", "assemble_depth0",
    "yoccoz_puzzle_mapping", "build_yoccoz_quadratic",
    "CHAIN_TOP", "LAND_TOL", "LAND_STEP_TOL",
]

ESCAPE_RADIUS = 1e8
CHAIN_TOP = 16.0
LAND_STEP_TOL = 1e-8
LAND_TOL = 1e-6
RAY_STEPS_PER_HALVING = 8
RAY_MAX_STEPS = 1400
DEFAULT_ANGLES = (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7))


class RayLandingUndetermined(RuntimeError):
    """Ray did not settle within tolerance of the designated point."""


class PartitionError(RuntimeError):
    """Depth-0 pieces failed a Jordan, co-landing, or tiling check."""


def fixed_points(c):
    """(alpha, beta) fixed points of z^2+c with alpha = (1-sqrt(1-4c))/2."""
    s = np.sqrt(complex(1.0 - 4.0 * complex(c)))
    return complex((1.0 - s) / 2.0), complex((1.0 + s) / 2.0)


def period_two_cycle(c):
    """The period-two cycle of z^2+c, the roots of z^2 + z + c + 1."""
    s = np.sqrt(complex(-3.0 - 4.0 * complex(c)))
    return complex((-1.0 + s) / 2.0), complex((-1.0 - s) / 2.0)


def green(c, z, max_iter=128):
    """Green's function of z^2+c; 0.0 where no escape occurs in max_iter."""
    c = complex(c)
    w = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
    g = np.zeros(w.shape, dtype=float)
    alive = np.ones(w.shape, dtype=bool)
    for k in range(1, max_iter + 1):
        w[alive] = w[alive] ** 2 + c
        esc = alive & (np.abs(w) > ESCAPE_RADIUS)
        g[esc] = np.log(np.abs(w[esc])) / 2.0 ** k
        alive &= ~esc
        if not alive.any():
            break
    return float(g[0]) if np.ndim(z) == 0 else g


# --------------------------------------------------------------------------
# Backward chains.


def _chain_length(t):
    n = 0
    while t * 2.0 ** n < CHAIN_TOP:
        n += 1
    return n


def _backward_chain(c, t, theta, prev=None):
    """chain[j] = the point of ray `theta` at potential 2^j t, j = 0..n.

    chain[n] lies above CHAIN_TOP where the dynamical plane and the
    Boettcher plane agree.  `prev` is a neighbouring chain used to seed
    the square-root signs; levels beyond it fall back to the angle rule,
    which is safe at the potentials where that happens.
    """
    c = complex(c)
    n = _chain_length(t)
    thetas = [theta]
    for _ in range(n):
        thetas.append((2 * thetas[-1]) % 1)
    chain = np.empty(n + 1, dtype=complex)
    pot = t * 2.0 ** n
    chain[n] = np.exp(pot + 2j * np.pi * float(thetas[n]))
    for j in range(n - 1, -1, -1):
        u = chain[j + 1] - c
        if abs(u) < 1e-20:
            raise NearCritical("ray chain passed through the critical value")
        root = np.sqrt(u)
        if prev is not None and j < prev.size:
            seed = prev[j]
            pick = root if abs(root - seed) <= abs(root + seed) else -root
        else:
            ref = np.exp(2j * np.pi * float(thetas[j]))
            pick = root if (root * np.conj(ref)).real >= 0.0 else -root
        chain[j] = pick
    return chain


class Ray:
    """Traced external ray: points at geometrically decreasing potentials."""

    __slots__ = ("angle", "potentials", "points", "landing")

    def __init__(self, angle, potentials, points, landing):
        self.angle = angle
        self.potentials = potentials
        self.points = points
        self.landing = landing


def trace_ray(c, angle, potential=1.0, steps_per_halving=RAY_STEPS_PER_HALVING,
              max_steps=RAY_MAX_STEPS, step_tol=LAND_STEP_TOL):
    """External ray of z^2+c from `potential` toward the Julia set.

    Stops once consecutive points differ by less than step_tol, which near a
    repelling landing point certifies the remaining tail geometrically.
    landing is None when the budget runs out first.
    """
    angle = Fraction(angle) % 1
    ratio = 2.0 ** (-1.0 / steps_per_halving)
    pts, pots = [], []
    chain = None
    t = float(potential)
    landing = None
    for k in range(max_steps):
        chain = _backward_chain(c, t, angle, prev=chain)
        pts.append(complex(chain[0]))
        pots.append(t)
        if k and abs(pts[-1] - pts[-2]) < step_tol:
            landing = pts[-1]
            break
        t *= ratio
    return Ray(angle, np.array(pots), np.array(pts), landing)


def trace_equipotential(c, potential=1.0, n_points=1024):
    """Closed Green's-function level curve, counterclockwise, as an array."""
    t = float(potential)
    pts = np.empty(n_points, dtype=complex)
    chain = None
    for i in range(n_points):
        chain = _backward_chain(c, t, Fraction(i, n_points), prev=chain)
        pts[i] = chain[0]
    gaps = np.abs(np.diff(pts))
    seam = abs(pts[0] - pts[-1])
    if seam > 6.0 * np.median(gaps) + 1e-12:
        raise PartitionError("equipotential failed to close up")
    return pts


# --------------------------------------------------------------------------
# Depth-0 pieces.


def _decimate_ray(points, landing, min_gap=1e-7, frac_of_dist=0.04):
    """Thin a ray polyline, keeping spacing proportional to |p - landing|."""
    keep = [points[0]]
    for p in points[1:]:
        lim = max(min_gap, frac_of_dist * abs(p - landing))
        if abs(p - keep[-1]) >= lim:
            keep.append(p)
    return np.array(keep)


def assemble_depth0(c, angles=DEFAULT_ANGLES, potential=1.0, n_equi=1024,
                    land_tol=LAND_TOL, target=None):
    """Cut the region below the equipotential into ray sectors.

    All rays must land at a common point within land_tol of `target`
    (default: the alpha fixed point).  Returns (pieces, info); pieces are
    the bounded complementary components of equipotential + rays, one per
    consecutive angle pair, listed in angle order.
    """
    c = complex(c)
    fracs = sorted(set(Fraction(a) % 1 for a in angles))
    if len(fracs) < 2:
        raise PartitionError("need at least two ray angles")
    rays = [trace_ray(c, a, potential=potential) for a in fracs]
    for a, r in zip(fracs, rays):
        if r.landing is None:
            raise RayLandingUndetermined("ray %s did not settle" % a)
    land = np.array([r.landing for r in rays])
    if target is None:
        target = fixed_points(c)[0]
    err = float(np.abs(land - target).max())
    if err > land_tol:
        raise RayLandingUndetermined(
            "rays land %.3e away from the designated point" % err)
    spread = float(max(abs(p - q) for p in land for q in land))
    if spread > 2.0 * land_tol:
        raise PartitionError("rays do not co-land")
    landing = complex(land.mean())
    equi = trace_equipotential(c, potential=potential, n_points=n_equi)
    thin = [_decimate_ray(r.points, landing) for r in rays]
    pieces = []
    for idx in range(len(fracs)):
        a = fracs[idx]
        b = fracs[(idx + 1) % len(fracs)]
        if b <= a:
            b += 1
        lo = int(a * n_equi) + 1
        hi = int(np.ceil(float(b) * n_equi)) - 1
        if Fraction(hi, n_equi) == b:
            hi -= 1
        arc = [equi[k % n_equi] for k in range(lo, hi + 1)]
        verts = [landing]
        verts.extend(thin[idx][::-1])
        verts.extend(arc)
        verts.extend(thin[(idx + 1) % len(fracs)])
        varr = np.array(verts)
        diam = 2.0 * float(np.abs(varr - varr.mean()).max())
        varr = thin_polyline(varr, max(2e-5 * diam, 1e-7))
        try:
            piece = JordanRegion(varr).validate()
        except InvalidRegion as e:
            raise PartitionError("piece %d: %s" % (idx, e)) from e
        pieces.append(piece)
    total = sum(area(p) for p in pieces)
    disk = area(JordanRegion(equi))
    if abs(total - disk) > 0.02 * disk:
        raise PartitionError("pieces do not tile the equipotential disk")
    info = {
        "landing": landing,
        "target": complex(target),
        "landing_residual": err,
        "rays": rays,
        "equipotential": equi,
    }
    return pieces, info


# --------------------------------------------------------------------------
# Depth-1 pieces and the puzzle mapping.


def _refine_against(loop, crit_values, factor=0.7, guard=1e-9):
    """Subdivide chords until each is short next to its critical-value gap."""
    w = np.asarray(loop, dtype=complex)
    for _ in range(40):
        nxt = np.roll(w, -1)
        gap = np.abs(nxt - w)
        dist = np.full(w.size, np.inf)
        for cv in crit_values:
            dist = np.minimum(dist, np.minimum(np.abs(w - cv), np.abs(nxt - cv)))
        if np.any(dist < guard):
            raise NearCritical("loop passes through a critical value")
        bad = gap > factor * dist
        if not bad.any():
            return w
        out = []
        for i in range(w.size):
            out.append(w[i])
            if bad[i]:
                out.append(0.5 * (w[i] + nxt[i]))
        w = np.array(out)
    raise NearCritical("refinement against critical values did not settle")


def _sqrt_continuation(u, seed=None):
    """Square roots of path u with signs chosen by continuity.

    seed picks the starting sign; returns (roots, closed) where closed says
    the final sign agrees with the initial one across the wrap.
    """
    r = np.sqrt(u)
    n = r.size
    flip = np.empty(n, dtype=bool)
    flip[0] = False
    d = np.abs(r[1:] - r[:-1]) > np.abs(r[1:] + r[:-1])
    flip[1:] = d
    sign = np.where(np.cumsum(flip) % 2 == 0, 1.0, -1.0)
    if seed is not None and abs(r[0] - seed) > abs(r[0] + seed):
        sign = -sign
    roots = sign * r
    wrap_flip = abs(r[0] - r[-1]) > abs(r[0] + r[-1])
    closed = (sign[-1] * (-1.0 if wrap_flip else 1.0)) == sign[0]
    return roots, closed


def _lift_quadratic(c, loop):
    """Closed lifts of a loop under z -> z^2+c.

    Two disjoint closed lifts when the loop does not enclose the critical
    value, one degree-two lift (both sheets traversed) when it does.
    """
    c = complex(c)
    w = _refine_against(loop, [c])
    roots, closed = _sqrt_continuation(w - c)
    if closed:
        return [roots, -roots]
    return [np.concatenate([roots, -roots])]


def yoccoz_puzzle_mapping(c, angles=DEFAULT_ANGLES, potential=1.0,
                          n_equi=1024):
    """Depth-0/depth-1 Yoccoz partition of z^2+c packaged as a BoxMapping.

    Ranges are the depth-0 pieces and every domain is a depth-1 piece
    carrying the full quadratic as its branch, so domains share boundary
    arcs with their parent ranges.  Compact containment is deliberately
    absent at this stage; inducing a first return to a deep critical piece
    (build_yoccoz_quadratic) restores it.
    """
    c = complex(c)
    pieces, info = assemble_depth0(c, angles, potential=potential,
                                   n_equi=n_equi)
    branch = Polynomial([c, 0.0, 1.0])
    domains = []
    for j, piece in enumerate(pieces):
        lifts = _lift_quadratic(c, piece.vertices)
        degree = 2 if len(lifts) == 1 else 1
        for lv in lifts:
            reg = JordanRegion(lv)
            probe = interior_point(reg)
            parent = None
            for k, host in enumerate(pieces):
                if contains(host, probe) == INSIDE:
                    parent = k
                    break
            if parent is None:
                raise PartitionError("depth-1 piece escaped all depth-0 pieces")
            crit = [0j] if degree == 2 else []
            if degree == 2 and contains(reg, 0j) != INSIDE:
                raise PartitionError("degree-2 piece does not hold the "
                                     "critical point")
            domains.append(DomainSpec(region=reg, parent=parent, branch=branch,
                                      target=j, degree=degree,
                                      critical_points=crit))
    meta = {
        "construction": "yoccoz_puzzle",
        "c": [c.real, c.imag],
        "ray_angles": [str(a) for a in sorted(set(Fraction(a) % 1
                                                  for a in angles))],
        "potential": float(potential),
        "alpha_landing": [info["landing"].real, info["landing"].imag],
        "landing_residual": info["landing_residual"],
        "n_depth0": len(pieces),
        "n_depth1": len(domains),
    }
    return BoxMapping(ranges=pieces, domains=domains, metadata=meta)


def build_yoccoz_quadratic(c, ray_angles=DEFAULT_ANGLES, potential=1.0,
                           return_depth=4, horizon=40, n_seeds=600, seed=11):
    """First-return box mapping to the depth-`return_depth` critical piece.

    The depth-0/1 partition supplies the branch system; return domains are
    discovered from a deterministic seed grid plus the critical point, and
    their closures are expected to sit compactly inside the critical piece.
    Shallow critical pieces keep the alpha fixed point on their boundary
    and the induced domains then touch the corner; depth 4 is the first
    level for c = i whose returns are compactly contained.
    """
    from . import puzzle

    pm = yoccoz_puzzle_mapping(c, angles=ray_angles, potential=potential)
    center = puzzle.piece_at(pm, 0j, return_depth)
    induced = puzzle.induce_first_return(pm, [center], horizon=horizon,
                                         n_seeds=n_seeds, seed=seed)
    induced.metadata.update({
        "construction": "yoccoz_first_return",
        "c": pm.metadata["c"],
        "ray_angles": pm.metadata["ray_angles"],
        "potential": pm.metadata["potential"],
        "return_depth": return_depth,
    })
    return induced
