"""The box-mapping data model: ranges, domains, branches, audits.

A box mapping is a finite union of range disks and, inside them, domain
components each carrying a proper analytic branch onto one of the ranges.
Domains either coincide with their parent range or are compactly
contained in it with pairwise disjoint closures; the audit verifies this
at sampled resolution and reports residuals rather than trusting the
builders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytic import AnalyticMap, map_from_json, map_to_json
from .geometry import (AnnulusSpec, JordanRegion, contains_mask,
                       polyline_distance, region_from_json, region_to_json)
from . import rng

__all__ = [
    "DomainSpec", "BoxMapping", "NaturalityReport",
    "audit", "check_naturality", "apply_once", "orbit",
    "boxmap_to_json", "boxmap_from_json",
    "PROPER_BOUNDARY_TOL",
]

PROPER_BOUNDARY_TOL = 1e-6


@dataclass
class DomainSpec:
    """One component of the domain set with its branch data."""

    region: JordanRegion
    parent: int                 # index of the range containing this domain
    branch: AnalyticMap
    target: int                 # index of the range the branch maps onto
    degree: int
    critical_points: list
    equals_range: bool = False  # domain coincides with its parent range


@dataclass
class BoxMapping:
    ranges: list
    domains: list
    metadata: dict = field(default_factory=dict)

    def domains_in_range(self, i):
        return [k for k, d in enumerate(self.domains) if d.parent == i]

    def critical_count(self):
        return sum(len(d.critical_points) for d in self.domains)


# --------------------------------------------------------------------------
# Structural audit.


def _pairwise_closure_gap(regions):
    best = np.inf
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            best = min(best, polyline_distance(regions[i], regions[j].vertices).min())
            best = min(best, polyline_distance(regions[j], regions[i].vertices).min())
    return best


def audit(bm, tol=PROPER_BOUNDARY_TOL):
    """Definition audit at sampled resolution; returns a report dict.

    Checks: ranges have pairwise disjoint closures; per range, domains
    either equal it or are compactly contained with pairwise disjoint
    closures; every branch maps its domain boundary onto the target range
    boundary within `tol`; the critical set is finite and each critical
    point sits inside its domain.  Branches are evaluated at the domain
    polyline vertices themselves: those lie on the true curve, whereas
    interpolated chord points may fall outside a curved branch's domain.
    """
    report = {"ok": True, "checks": {}}

    gap = _pairwise_closure_gap(bm.ranges) if len(bm.ranges) > 1 else np.inf
    report["checks"]["range_closure_gap"] = None if gap is np.inf else float(gap)
    if gap <= 0:
        report["ok"] = False

    containment_ok = True
    min_margin = np.inf
    for i, rg in enumerate(bm.ranges):
        idx = bm.domains_in_range(i)
        eq = [k for k in idx if bm.domains[k].equals_range]
        cc = [k for k in idx if not bm.domains[k].equals_range]
        if eq and (len(eq) > 1 or cc):
            containment_ok = False
        for k in cc:
            ins, on_b = contains_mask(rg, bm.domains[k].region.vertices)
            if not np.all(ins):
                containment_ok = False
            min_margin = min(min_margin, float(
                polyline_distance(rg, bm.domains[k].region.vertices).min()))
        if len(cc) > 1:
            gap_d = _pairwise_closure_gap([bm.domains[k].region for k in cc])
            if gap_d <= 0:
                containment_ok = False
            min_margin = min(min_margin, gap_d)
    report["checks"]["compact_containment"] = containment_ok
    report["checks"]["containment_margin"] = None if min_margin is np.inf else float(min_margin)
    if not containment_ok:
        report["ok"] = False

    worst = 0.0
    for d in bm.domains:
        target = bm.ranges[d.target]
        img = d.branch.eval(d.region.vertices)
        resid = polyline_distance(target, img)
        worst = max(worst, float(resid.max()))
    report["checks"]["proper_boundary_residual"] = worst
    if worst > tol:
        report["ok"] = False

    crit_ok = True
    for d in bm.domains:
        for c in d.critical_points:
            ins, _ = contains_mask(d.region, np.array([c], dtype=complex))
            if not ins[0]:
                crit_ok = False
    report["checks"]["critical_points_inside"] = crit_ok
    report["checks"]["critical_count"] = bm.critical_count()
    if not crit_ok:
        report["ok"] = False
    return report


# --------------------------------------------------------------------------
# Orbits.


def _locate_domain(bm, z):
    for k, d in enumerate(bm.domains):
        ins, on_b = contains_mask(d.region, np.array([z], dtype=complex))
        if on_b[0]:
            return k, "boundary"
        if ins[0]:
            return k, "inside"
    return None, "outside"


def apply_once(bm, z):
    """(F(z), domain index) or (None, verdict) when z is in no domain."""
    k, state = _locate_domain(bm, z)
    if k is None or state == "boundary":
        return None, state
    return bm.domains[k].branch.eval(complex(z)), k


def orbit(bm, z, n):
    """Orbit of z through at most n steps; stops when leaving the domains."""
    pts = [complex(z)]
    for _ in range(n):
        w, k = apply_once(bm, pts[-1])
        if w is None:
            break
        pts.append(complex(w))
    return pts


# --------------------------------------------------------------------------
# Dynamical naturality.


@dataclass
class NaturalityReport:
    no_permutation: dict
    well_inside: list
    off_crit_area_estimate: float
    off_crit_confidence_radius: float
    horizon: int

    def to_json(self):
        return {
            "no_permutation": self.no_permutation,
            "well_inside": self.well_inside,
            "off_crit_area_estimate": self.off_crit_area_estimate,
            "off_crit_confidence_radius": self.off_crit_confidence_radius,
            "horizon": self.horizon,
        }


def _permutation_verdict(bm, horizon):
    """Detect cycles among domains that coincide with range components."""
    # graph on ranges: i -> target of the equals-range domain sitting on i
    nxt = {}
    for d in bm.domains:
        if d.equals_range:
            nxt[d.parent] = d.target
    for start in nxt:
        seen = [start]
        cur = start
        for _ in range(len(bm.ranges) + 1):
            if cur not in nxt:
                break
            cur = nxt[cur]
            if cur == start:
                return {"verdict": "violated", "cycle": seen}
            if cur in seen:
                break
            seen.append(cur)
    return {"verdict": "holds_by_horizon", "horizon": horizon}


def check_naturality(bm, horizon=16, samples=2000, seed=7, moduli=True,
                     moduli_resolutions=(128, 256)):
    """Naturality report: permutation cycles, m_F per domain, off-critical area.

    The off-critical statistic is the fraction of sampled points, among
    those still in the domains after `horizon` steps, whose orbit avoided
    disks of radius 2^-horizon * diam(range) around the critical points.
    With no critical points the fraction is exactly 1.
    """
    from .modulus import DegenerateAnnulus, modulus
    from .geometry import diameter

    perm = _permutation_verdict(bm, horizon)

    well = []
    for k, d in enumerate(bm.domains):
        if d.equals_range:
            well.append({"domain": k, "status": "equals-range"})
        elif moduli:
            try:
                m = modulus(AnnulusSpec(bm.ranges[d.parent], d.region),
                            resolutions=moduli_resolutions)
                well.append({"domain": k, "status": "modulus", "m": float(m)})
            except DegenerateAnnulus as e:
                well.append({"domain": k, "status": "degenerate", "note": str(e)})
        else:
            well.append({"domain": k, "status": "skipped"})

    crit = [complex(c) for d in bm.domains for c in d.critical_points]
    crit = np.array(crit, dtype=complex) if crit else None
    radii = {i: 2.0 ** (-horizon) * diameter(rg) for i, rg in enumerate(bm.ranges)}

    per_range = max(1, samples // max(1, len(bm.ranges)))
    alive_total = 0
    off_total = 0
    for i, rg in enumerate(bm.ranges):
        x0, x1, y0, y1 = rg.bbox()
        pts = rng.complex_rect(seed, "naturality/range%d" % i, 4 * per_range,
                               x0, x1, y0, y1)
        ins, _ = contains_mask(rg, pts)
        pts = pts[ins][:per_range]
        alive = np.ones(pts.size, dtype=bool)
        hit_crit = np.zeros(pts.size, dtype=bool)
        cur = pts.copy()
        for _ in range(horizon):
            if not np.any(alive):
                break
            nxt_pts, nxt_alive = _apply_many(bm, cur, alive)
            if crit is not None:
                live_idx = np.nonzero(alive)[0]
                d2 = np.abs(cur[live_idx][:, None] - crit[None, :])
                rad = max(radii.values())
                hit_crit[live_idx] |= np.any(d2 < rad, axis=1)
            cur, alive = nxt_pts, nxt_alive
        alive_total += int(alive.sum())
        off_total += int((alive & ~hit_crit).sum())

    frac = off_total / alive_total if alive_total else 1.0
    conf = 1.0 / np.sqrt(alive_total) if alive_total else 1.0
    return NaturalityReport(perm, well, float(frac), float(conf), horizon)


def _apply_many(bm, pts, alive):
    """One step of F on the alive samples; others pass through unchanged."""
    out = pts.copy()
    next_alive = np.zeros_like(alive)
    todo = alive.copy()
    for d in bm.domains:
        if not np.any(todo):
            break
        idx = np.nonzero(todo)[0]
        ins, _ = contains_mask(d.region, pts[idx])
        hit = idx[ins]
        if hit.size:
            out[hit] = d.branch.eval(pts[hit])
            next_alive[hit] = True
            todo[hit] = False
    return out, next_alive


# --------------------------------------------------------------------------
# Serialization.


def boxmap_to_json(bm):
    return {
        "ranges": [region_to_json(r) for r in bm.ranges],
        "domains": [{
            "region": region_to_json(d.region),
            "parent": d.parent,
            "branch": map_to_json(d.branch),
            "target": d.target,
            "degree": d.degree,
            "critical_points": [[complex(c).real, complex(c).imag]
                                for c in d.critical_points],
            "equals_range": d.equals_range,
        } for d in bm.domains],
        "metadata": bm.metadata,
    }


def boxmap_from_json(obj):
    return BoxMapping(
        ranges=[region_from_json(r) for r in obj["ranges"]],
        domains=[DomainSpec(
            region=region_from_json(d["region"]),
            parent=d["parent"],
            branch=map_from_json(d["branch"]),
            target=d["target"],
            degree=d["degree"],
            critical_points=[complex(c[0], c[1]) for c in d["critical_points"]],
            equals_range=d["equals_range"],
        ) for d in obj["domains"]],
        metadata=obj["metadata"],
    )
