"""Constructions of the example box mappings.

Three families live here: the Sierpinski-carpet map (affine branches, no
critical points, fat non-escaping complement), the wandering-disk map
(Moebius branches along a greedy hyperbolic packing), and the quadratic
quotient of the symmetrized carpet map (one quadratic critical point,
strictly pre-fixed).  The Yoccoz-puzzle builder lives in `bottcher`.
"""

from __future__ import annotations

import numpy as np

from . import carpet
from .analytic import (Affine, Compose, DiskAutomorphism, DiskToSquare,
                       EvenHalf, OddHalfSquared, Power, SquareToDisk)
from .geometry import JordanRegion, circle_polyline, square_polyline
from .mapping import BoxMapping, DomainSpec

__all__ = [
    "build_sierpinski", "build_wandering", "build_lattes",
    "PackingFailure", "wandering_disk_table", "wandering_scaled_orbit_radius",
    "lattes_locate", "lattes_domain_index",
    "LATTES_V_CENTER", "LATTES_VPRIME_CENTER",
]


# --------------------------------------------------------------------------
# Sierpinski carpet.


def build_sierpinski(levels):
    """Carpet box mapping through the given subdivision level (<= 8)."""
    if not (1 <= levels <= 8):
        raise ValueError("levels must be in 1..8")
    rng_region = square_polyline(0.0, 1.0, per_side=64)
    domains = []
    for sq in carpet.domain_squares(levels):
        scale = sq.scale()
        region = square_polyline(sq.center, float(sq.half), per_side=16)
        branch = Affine(scale, -scale * sq.center)
        domains.append(DomainSpec(
            region=region, parent=0, branch=branch, target=0,
            degree=1, critical_points=[]))
    meta = {"construction": "sierpinski", "levels": levels}
    return BoxMapping(ranges=[rng_region], domains=domains, metadata=meta)


# --------------------------------------------------------------------------
# Wandering disk.


class PackingFailure(ValueError):
    """The greedy disk placement could not fit the requested components."""


# Euclidean coordinates of disk k in the greedy packing shrink like
# 2^(-k^2 - 3k), far below float64 by k ~ 30, so the packing is done in
# artanh coordinates where every quantity stays O(k).  Only disks whose
# Euclidean geometry survives in doubles become literal BoxMapping
# domains; the full table rides in the metadata.

# Literal domains must clear the chord sag of the 4096-gon range circle
# (~3e-7), else the compact-containment audit sees them poke outside.
_RANGE_VERTS = 4096
_EUCLID_LIMIT = 2e-6       # smallest 1 - right_edge for a literal domain
_MOEBIUS_LIMIT = 1e-12     # smallest 1 - |c| for a representable automorphism
_GAP_RULE = 1e-3           # gap >= this fraction of the remaining space
_ASYMPTOTIC_GAP = -0.5 * float(np.log1p(-_GAP_RULE))


def _a_value(i):
    return float(np.exp2(-np.exp2(-float(i))))


def _hyperbolic_gap(right):
    """artanh increment realizing gap = _GAP_RULE * (1 - R) after disk at R."""
    if right < 18.0:
        R = float(np.tanh(right))
        L = 1.0 - (1.0 - R) * (1.0 - _GAP_RULE)
        return float(np.arctanh(L)) - right
    # saturated regime: the exact increment converges to this limit
    return _ASYMPTOTIC_GAP


def wandering_disk_table(n):
    """Greedy packing of n disks along the real axis, artanh bookkeeping.

    Disk k (1-based) is the Moebius image of the centered disk of radius
    a_k placed just right of disk k-1; entries record artanh of the left
    edge, center and right edge, the hyperbolic gap to the previous disk,
    and log2 of the Euclidean diameter.
    """
    rows = []
    right = 0.0
    for k in range(1, n + 1):
        a = _a_value(k)
        rho = float(np.arctanh(a))
        if k == 1:
            left, gap_h = -rho, 0.0
        else:
            gap_h = _hyperbolic_gap(right)
            left = right + gap_h
        center = left + rho
        new_right = center + rho
        if new_right < 18.0:
            size_log2 = float(np.log2(np.tanh(new_right) - np.tanh(left)))
        else:
            # tanh(r) - tanh(l) ~ 2 e^{-2l} (1 - e^{-2(r-l)})
            size_log2 = 1.0 - 2.0 * left / np.log(2.0) + \
                float(np.log1p(-np.exp(-2.0 * min(700.0, new_right - left)))) / np.log(2.0)
        rows.append({
            "k": k, "a": a,
            "artanh_left": float(left), "artanh_center": float(center),
            "artanh_right": float(new_right), "hyperbolic_gap": float(gap_h),
            "log2_euclidean_size": size_log2,
        })
        right = new_right
    return rows


def wandering_scaled_orbit_radius(x, n):
    """|g_{n+1}^{-1}(F^n(x))| computed without saturation.

    F^n(x) = g_{n+1}(x / prod_{k<=n} a_k) and the product telescopes to
    2^-(1 - 2^-n), so membership in g_{n+1}(D_{a_{n+1}}) is equivalent to
    this value being < a_{n+1}.
    """
    prod = float(np.exp2(-(1.0 - np.exp2(-float(n)))))
    return abs(complex(x)) / prod


def build_wandering(n_components):
    """Wandering-disk box mapping on the unit disk (<= 64 components).

    The round disk of radius 1/2 about 0 is a wandering Jordan disk: its
    n-th image lies in component n+1.  Branches divide out a_k in the
    centered coordinate and re-embed with the next Moebius map.
    """
    if not (1 <= n_components <= 64):
        raise ValueError("n_components must be in 1..64")
    table = wandering_disk_table(n_components + 1)  # +1 for the last branch's g
    domains = []
    literal = 0
    for row in table[:n_components]:
        k = row["k"]
        a = row["a"]
        c = float(np.tanh(row["artanh_center"]))
        right_e = float(np.tanh(row["artanh_right"]))
        c_next = float(np.tanh(table[k]["artanh_center"]))
        if 1.0 - right_e < _EUCLID_LIMIT or 1.0 - c_next < _MOEBIUS_LIMIT:
            break
        literal = k
        base = circle_polyline(0.0, a, 256).vertices
        verts = (base + c) / (1.0 + c * base) if c != 0.0 else base
        stages = [DiskAutomorphism(-c_next), Affine(1.0 / a, 0.0)]
        if c != 0.0:
            stages.append(DiskAutomorphism(c))   # g_k^{-1} applied first
        domains.append(DomainSpec(
            region=JordanRegion(verts), parent=0, branch=Compose(stages),
            target=0, degree=1, critical_points=[]))
    if literal == 0:
        raise PackingFailure("no disk fits at the requested precision")
    table = table[:n_components]
    meta = {
        "construction": "wandering",
        "n_components": n_components,
        "literal_components": literal,
        "disks": table,
        "gap_rule": _GAP_RULE,
        "hyperbolic_min_gap": (min(r["hyperbolic_gap"] for r in table[1:])
                               if n_components > 1 else None),
    }
    return BoxMapping(ranges=[circle_polyline(0.0, 1.0, _RANGE_VERTS)],
                      domains=domains, metadata=meta)


# --------------------------------------------------------------------------
# Quadratic quotient of the symmetrized carpet (the Lattes-like example).
#
# Two formal range disks V, V' are embedded at centers -2 and +2.  In
# local coordinates the branch on U = V is Q(z) = z^2 onto V'; inside V'
# the resolved domain components are Q(phi(S)) for carpet domain squares
# S, with phi the square-to-disk map.  The symmetrized carpet map
# (odd on the central square, even elsewhere) makes each branch
# single-valued through the Q-quotient.

LATTES_V_CENTER = -2.0 + 0.0j
LATTES_VPRIME_CENTER = 2.0 + 0.0j

_PHI = SquareToDisk()
_PHI_INV = DiskToSquare()


def _central_inner():
    # t -> phi(3 * phi^{-1}(t)), odd
    return Compose([_PHI, Affine(3.0, 0.0), _PHI_INV])


def _square_inner(sq):
    # t -> phi(3^l * (phi^{-1}(t) - q)), the carpet branch through phi
    scale = sq.scale()
    return Compose([_PHI, Affine(scale, -scale * sq.center), _PHI_INV])


def _embed(branch_local, source_center, target_center):
    return Compose([Affine(1.0, target_center), branch_local,
                    Affine(1.0, -source_center)])


def _q_phi_boundary(sq, per_side):
    """Polyline of Q(phi(boundary of sq)); injective for non-central sq."""
    region = square_polyline(sq.center, float(sq.half), per_side=per_side)
    t = _PHI.eval(region.vertices)
    return JordanRegion(t * t)


def _q_phi_central_boundary(samples):
    """Half-traverse boundary of Q(phi(central square)): Q glues antipodes."""
    h = 1.0 / 3.0
    s1 = np.linspace(-h, h, samples // 2, endpoint=False)
    s2 = np.linspace(h, -h, samples // 2, endpoint=False)
    half = np.concatenate([h + 1j * s1, s2 + 1j * h])
    t = _PHI.eval(half)
    return JordanRegion(t * t)


def build_lattes(tiling_level):
    """Box mapping with one quadratic, strictly pre-fixed critical point.

    Domain components inside V' are resolved through `tiling_level` of
    the carpet hierarchy; deeper structure is an explicit unresolved
    mask, and orbits entering it halt with verdict "unresolved" rather
    than fabricate dynamics.
    """
    if not (1 <= tiling_level <= 7):
        raise ValueError("tiling_level must be in 1..7")
    v = circle_polyline(LATTES_V_CENTER, 1.0, _RANGE_VERTS)
    vp = circle_polyline(LATTES_VPRIME_CENTER, 1.0, _RANGE_VERTS)
    domains = [DomainSpec(
        region=v, parent=0,
        branch=Compose([Affine(1.0, LATTES_VPRIME_CENTER), Power(2),
                        Affine(1.0, -LATTES_V_CENTER)]),
        target=1, degree=2, critical_points=[LATTES_V_CENTER],
        equals_range=True)]

    domains.append(DomainSpec(
        region=JordanRegion(_q_phi_central_boundary(256).vertices + LATTES_VPRIME_CENTER),
        parent=1,
        branch=_embed(OddHalfSquared(_central_inner()),
                      LATTES_VPRIME_CENTER, LATTES_VPRIME_CENTER),
        target=1, degree=1, critical_points=[]))

    for sq, half_tag in carpet.canonical_pairs(tiling_level):
        region = _q_phi_boundary(sq, 16)
        domains.append(DomainSpec(
            region=JordanRegion(region.vertices + LATTES_VPRIME_CENTER),
            parent=1,
            branch=_embed(EvenHalf(_square_inner(sq), half_tag),
                          LATTES_VPRIME_CENTER, LATTES_V_CENTER),
            target=0, degree=1, critical_points=[]))

    meta = {
        "construction": "lattes",
        "tiling_level": tiling_level,
        "unresolved_square_area_fraction": float((8.0 / 9.0) ** tiling_level),
        "v_center": [LATTES_V_CENTER.real, LATTES_V_CENTER.imag],
        "vprime_center": [LATTES_VPRIME_CENTER.real, LATTES_VPRIME_CENTER.imag],
    }
    return BoxMapping(ranges=[v, vp], domains=domains, metadata=meta)


def lattes_domain_index(bm):
    """(level, rounded center) -> domain index, both antipodal keys present."""
    pairs = carpet.canonical_pairs(bm.metadata["tiling_level"])
    index = {}
    for k, (sq, _tag) in enumerate(pairs):
        c = complex(sq.center)
        index[(sq.level, round(c.real, 9), round(c.imag, 9))] = k + 2
        index[(sq.level, round(-c.real, 9), round(-c.imag, 9))] = k + 2
    return index


def lattes_locate(bm, z, index=None):
    """("domain", k) | ("unresolved",) | ("outside",) for a point z.

    Membership inside V' goes through the exact carpet locator in the
    square model rather than polyline winding, so deep components and
    the unresolved mask are classified consistently.
    """
    level = bm.metadata["tiling_level"]
    z = complex(z)
    if abs(z - LATTES_V_CENTER) < 1.0:
        return ("domain", 0)
    u = z - LATTES_VPRIME_CENTER
    if abs(u) >= 1.0:
        return ("outside",)
    t = np.sqrt(complex(u))
    s = complex(_PHI_INV.eval(t))
    levs, centers = carpet.locate_many(np.array([s]), level)
    lev = int(levs[0])
    if lev < 0:
        return ("outside",)
    if lev == 0:
        return ("unresolved",)
    if lev == 1:
        return ("domain", 1)
    if index is None:
        index = lattes_domain_index(bm)
    c = complex(centers[0])
    k = index.get((lev, round(c.real, 9), round(c.imag, 9)))
    return ("domain", k) if k is not None else ("unresolved",)
