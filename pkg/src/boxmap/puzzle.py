"""Puzzle pieces by pullback, first entry/return machinery, and niceness.

A puzzle piece of depth n is a connected component of the n-fold preimage
of the range set.  Pieces are realized as polyline regions lifted backward
along a branch word; every lift is seeded by a concrete orbit, so components
are discovered from points rather than enumerated blindly.

Polylines resolve the true analytic boundaries only down to their chord
length, so every containment verdict here is taken relative to a local
resolution band: a point closer to a boundary than the nearby chord scale
counts as "on" it.  The band never hides genuine overlaps, which displace
whole vertex runs, not sag-sized slivers.
"""

from __future__ import annotations

import numpy as np

from .analytic import (
    Affine, Compose, DiskAutomorphism, NearCritical, Polynomial, Power,
    inverse_branch,
)
from . import geometry
from .geometry import (
    BOUNDARY_TOL, JordanRegion, area, contains_mask, interior_point,
    polyline_distance,
)
from .mapping import BoxMapping, DomainSpec

__all__ = [
    "PuzzlePiece", "EntryDomainRecord", "Escaped", "Unresolved",
    "BoundaryAmbiguity", "HorizonExhausted", "NotNice",
    "piece_at", "pullback_piece", "entry_domains", "nested_or_disjoint",
    "verify_nice", "induce_first_return", "lift_region", "ambient_range",
    "AMBIGUITY_TOL", "A2_TOL",
]

AMBIGUITY_TOL = 1e-9
A2_TOL = 1e-6
RELATION_FLOOR = 1e-6
IMAGE_GAP_FRACTION = 0.01
MAX_LOOP_VERTS = 2600


class BoundaryAmbiguity(RuntimeError):
    """An orbit point sits within tolerance of a domain boundary."""


class HorizonExhausted(RuntimeError):
    """The requested combinatorial event did not occur within the horizon."""


class NotNice(RuntimeError):
    """A boundary orbit re-entered the candidate nice set."""


class Escaped:
    """Orbit left the domain set at the recorded step."""

    __slots__ = ("step",)

    def __init__(self, step):
        self.step = step

    def __repr__(self):
        return "Escaped(%d)" % self.step


class Unresolved:
    """Orbit entered the unresolved mask at the recorded step."""

    __slots__ = ("step",)

    def __init__(self, step):
        self.step = step

    def __repr__(self):
        return "Unresolved(%d)" % self.step


class PuzzlePiece:
    """Depth-n piece: region, branch word, and the range it lands on."""

    __slots__ = ("depth", "region", "word", "terminal_range")

    def __init__(self, depth, region, word, terminal_range):
        self.depth = depth
        self.region = region
        self.word = tuple(word)
        self.terminal_range = terminal_range

    def __repr__(self):
        return "PuzzlePiece(depth=%d, word=%s, terminal=%d)" % (
            self.depth, self.word, self.terminal_range)


class EntryDomainRecord:
    """First entry/return/landing component with its audit certificates."""

    __slots__ = ("piece", "time", "degree", "mode", "certificates")

    def __init__(self, piece, time, degree, mode, certificates):
        self.piece = piece
        self.time = time
        self.degree = degree
        self.mode = mode
        self.certificates = certificates


def ambient_range(bm, piece):
    """Index of the range component whose pullback the piece lives in."""
    if piece.word:
        return bm.domains[piece.word[0]].parent
    return piece.terminal_range


def _region_of(obj):
    return obj.region if isinstance(obj, PuzzlePiece) else obj


# --------------------------------------------------------------------------
# Local-resolution containment.


def _dist_localgap(region, pts, want_proj=False):
    """(distance, nearest-chord length[, projection]) per point."""
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    a = region.vertices
    b = np.roll(a, -1)
    d = b - a
    L2 = np.abs(d) ** 2
    L2s = np.where(L2 == 0.0, 1e-300, L2)
    L = np.sqrt(L2)
    out_d = np.empty(pts.size)
    out_g = np.empty(pts.size)
    out_p = np.empty(pts.size, dtype=complex) if want_proj else None
    block = max(16, int(1_000_000 / max(1, a.size)))
    for lo in range(0, pts.size, block):
        sl = pts[lo:lo + block]
        t = ((sl[:, None] - a[None, :]) * np.conj(d[None, :])).real
        t = np.clip(t / L2s[None, :], 0.0, 1.0)
        proj = a[None, :] + t * d[None, :]
        dist = np.abs(sl[:, None] - proj)
        idx = np.argmin(dist, axis=1)
        rng = np.arange(sl.size)
        out_d[lo:lo + block] = dist[rng, idx]
        out_g[lo:lo + block] = L[idx]
        if want_proj:
            out_p[lo:lo + block] = proj[rng, idx]
    if want_proj:
        return out_d, out_g, out_p
    return out_d, out_g


def classify_points(region, pts, floor=BOUNDARY_TOL, band_factor=0.7):
    """Tri-state membership with the local resolution band.

    Returns (strict_in, on_band, strict_out) boolean arrays; "on" means
    within band_factor of the nearest boundary chord length (or `floor`).
    """
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    dist, gap = _dist_localgap(region, pts)
    band = np.maximum(floor, band_factor * gap)
    on = dist <= band
    ins, _ = contains_mask(region, pts)
    return ins & ~on, on, ~ins & ~on


# --------------------------------------------------------------------------
# Loop lifting.


def _refine_against(loop, crit_values, factor=0.7, guard=1e-13):
    """Subdivide chords until each is short next to its critical-value gap.

    The guard only rejects loops indistinguishable from ones through the
    critical value itself: square-root continuation stays well conditioned
    down to the cancellation noise of loop minus critical value, so tiny
    loops encircling the value (deep nest stages) lift fine.
    """
    w = np.asarray(loop, dtype=complex)
    if not crit_values:
        return w
    for _ in range(48):
        nxt = np.roll(w, -1)
        gap = np.abs(nxt - w)
        dist = np.full(w.size, np.inf)
        for cv in crit_values:
            dist = np.minimum(dist, np.minimum(np.abs(w - cv),
                                               np.abs(nxt - cv)))
        if np.any(dist < guard):
            raise NearCritical("loop passes through a critical value")
        bad = gap > factor * dist
        if not bad.any():
            return w
        out = np.empty(w.size + int(bad.sum()), dtype=complex)
        pos = 0
        for i in range(w.size):
            out[pos] = w[i]
            pos += 1
            if bad[i]:
                out[pos] = 0.5 * (w[i] + nxt[i])
                pos += 1
        w = out
    raise NearCritical("refinement against critical values did not settle")


def _sqrt_continuation(u, seed=None):
    """Square roots of path u with continuous signs.

    Returns (roots, closed); closed says the final sign matches the first
    across the wrap, i.e. the lift is a closed loop on one sheet.
    """
    r = np.sqrt(np.asarray(u, dtype=complex))
    flip = np.empty(r.size, dtype=bool)
    flip[0] = False
    flip[1:] = np.abs(r[1:] - r[:-1]) > np.abs(r[1:] + r[:-1])
    sign = np.where(np.cumsum(flip) % 2 == 0, 1.0, -1.0)
    if seed is not None and abs(r[0] - seed) > abs(r[0] + seed):
        sign = -sign
    wrap_flip = abs(r[0] - r[-1]) > abs(r[0] + r[-1])
    closed = bool((sign[-1] * (-1.0 if wrap_flip else 1.0)) == sign[0])
    return sign * r, closed


def _sqrt_lift(u, seed):
    """Lift through a plain square root; doubles the loop when not closed."""
    roots, closed = _sqrt_continuation(u, seed=seed)
    if closed:
        return roots
    return np.concatenate([roots, -roots])


def _lift_once(branch, loop, seed):
    """One-branch lift of a closed loop, component containing `seed`."""
    w = np.asarray(loop, dtype=complex)
    if isinstance(branch, Affine):
        return (w - branch.b) / branch.a
    if isinstance(branch, DiskAutomorphism):
        return branch.inverse().eval(w)
    if isinstance(branch, Polynomial) and branch.degree == 1:
        return (w - branch.coeffs[0]) / branch.coeffs[1]
    if isinstance(branch, Polynomial) and branch.degree == 2:
        c0, c1, c2 = branch.coeffs
        h = c1 / (2.0 * c2)
        k = c0 - c2 * h * h
        w = _refine_against(w, [k])
        u = (w - k) / c2
        s = None if seed is None else seed + h
        return _sqrt_lift(u, s) - h
    if isinstance(branch, Power) and branch.d == 2:
        w = _refine_against(w, [0j])
        return _sqrt_lift(w, seed)
    if isinstance(branch, Compose):
        vals = [seed]
        for m in branch.maps[::-1]:
            vals.append(m.eval(vals[-1]))
        out = w
        for idx, m in enumerate(branch.maps):
            out = _lift_once(m, out, vals[len(branch.maps) - 1 - idx])
        return out
    # generic slow path: pointwise seeded inversion along the loop
    out = np.empty(w.size, dtype=complex)
    cur = seed
    for i in range(w.size):
        cur = inverse_branch(branch, complex(w[i]), cur)
        out[i] = cur
    if abs(out[0] - inverse_branch(branch, complex(w[0]), out[-1])) > 1e-6:
        raise NearCritical("pointwise lift failed to close up")
    return out


def _thin_loop(v, cap=MAX_LOOP_VERTS):
    if v.size <= cap:
        return v
    stride = int(np.ceil(v.size / cap))
    return v[::stride]


def lift_region(branch, region, seed, smooth_passes=3):
    """Component of branch^(-1)(region) containing `seed`, as a JordanRegion.

    The source polyline is refined until the lifted polyline has no chord
    longer than IMAGE_GAP_FRACTION of its diameter.
    """
    loop = _thin_loop(np.asarray(_region_of(region).vertices
                                 if isinstance(region, JordanRegion)
                                 else region, dtype=complex))
    lifted = _lift_once(branch, loop, seed)
    for _ in range(smooth_passes):
        gaps = np.abs(np.roll(lifted, -1) - lifted)
        diam = 2.0 * float(np.abs(lifted - lifted.mean()).max())
        if float(gaps.max()) <= IMAGE_GAP_FRACTION * max(diam, 1e-12):
            break
        if loop.size * 2 > 2 * MAX_LOOP_VERTS:
            break
        nxt = np.roll(loop, -1)
        loop = np.column_stack([loop, 0.5 * (loop + nxt)]).ravel()
        lifted = _lift_once(branch, loop, seed)
    diam = 2.0 * float(np.abs(lifted - lifted.mean()).max())
    lifted = geometry.thin_polyline(lifted, max(2e-5 * diam, 1e-12))
    return JordanRegion(lifted)


def _exactify(branches, region, target_region, passes=2, guard=1e-9):
    """Newton-project vertices so the composed image lands on the target.

    Chord points inserted at intermediate lift stages drift off the true
    curve under further iteration; one or two first-order corrections
    against the target polyline reduce the boundary residual to rounding
    level.  Vertices with a near-zero orbit derivative are left alone.
    """
    v = region.vertices.copy()
    for _ in range(passes):
        img = v.copy()
        der = np.ones(v.size, dtype=complex)
        for b in branches:
            der = der * b.deriv(img)
            img = b.eval(img)
        _, _, proj = _dist_localgap(target_region, img, want_proj=True)
        ok = np.abs(der) > guard
        step = np.zeros(v.size, dtype=complex)
        step[ok] = (img[ok] - proj[ok]) / der[ok]
        gaps = np.abs(np.roll(v, -1) - v) + np.abs(v - np.roll(v, 1))
        cap = 0.25 * gaps
        mag = np.abs(step)
        scale = np.where(mag > cap, cap / np.maximum(mag, 1e-300), 1.0)
        v = v - step * scale
    return JordanRegion(v)


# --------------------------------------------------------------------------
# Orbit location with ambiguity guards.


def _locate(bm, z, step):
    """Domain index for z, or an Escaped/Unresolved verdict for this step."""
    z = complex(z)
    for k, d in enumerate(bm.domains):
        ins, on_b = contains_mask(d.region, z)
        if on_b[0]:
            raise BoundaryAmbiguity(
                "point %s within tolerance of domain %d boundary" % (z, k))
        if ins[0]:
            return k
    if bm.metadata.get("construction") == "lattes":
        for rg in bm.ranges:
            ins, _ = contains_mask(rg, z)
            if ins[0]:
                return Unresolved(step)
    return Escaped(step)


def _resolved_orbit(bm, z, steps):
    """(points, word, verdict) through `steps` branch applications."""
    pts = [complex(z)]
    word = []
    for k in range(steps):
        loc = _locate(bm, pts[-1], k)
        if not isinstance(loc, int):
            return pts, word, loc
        word.append(loc)
        pts.append(complex(bm.domains[loc].branch.eval(pts[-1])))
    return pts, word, None


def piece_at(bm, z, depth):
    """The depth-n puzzle piece containing z, or Escaped/Unresolved.

    The orbit of z records which domain component is used at every step;
    the terminal range is then pulled back along that word.
    """
    pts, word, verdict = _resolved_orbit(bm, z, depth)
    if verdict is not None:
        return verdict
    if word:
        terminal = bm.domains[word[-1]].target
    else:
        terminal = None
        for i, rg in enumerate(bm.ranges):
            ins, on_b = contains_mask(rg, pts[-1])
            if on_b[0]:
                raise BoundaryAmbiguity("point on a range boundary")
            if ins[0]:
                terminal = i
                break
        if terminal is None:
            return Escaped(0)
    region = bm.ranges[terminal]
    for j in range(depth - 1, -1, -1):
        region = lift_region(bm.domains[word[j]].branch, region, pts[j])
    if depth > 1:
        region = _exactify([bm.domains[k].branch for k in word], region,
                           bm.ranges[terminal])
    return PuzzlePiece(depth, region, word, terminal)


def pullback_piece(bm, piece, domain_index, seed=None):
    """Preimage component of `piece` under the chosen domain branch.

    With a degree-2 branch and a piece missing the critical value there are
    two components inside the domain; `seed` disambiguates that case.
    """
    d = bm.domains[domain_index]
    if d.target != ambient_range(bm, piece):
        raise ValueError("branch target does not match the piece's range")
    if seed is None:
        probe = interior_point(piece.region)
        seed = complex(inverse_branch(d.branch, probe,
                                      interior_point(d.region)))
    region = lift_region(d.branch, piece.region, complex(seed))
    ins, _ = contains_mask(d.region, interior_point(region))
    if not ins[0]:
        raise ValueError("preimage component fell outside the domain; "
                         "pass an explicit seed")
    word = (domain_index,) + piece.word
    if len(word) > 1:
        region = _exactify([bm.domains[k].branch for k in word], region,
                           bm.ranges[piece.terminal_range])
    return PuzzlePiece(piece.depth + 1, region, word, piece.terminal_range)


# --------------------------------------------------------------------------
# Nested-or-disjoint lattice.


def _relation_samples(region, cap=1024):
    v = region.vertices
    step = max(1, v.size // cap)
    return v[::step]


def nested_or_disjoint(p, q):
    """Relation of two pieces: p_in_q, q_in_p, equal, disjoint, violation.

    Decided by boundary sampling at local resolution; `violation` comes
    with a witness point and always indicates numerical failure upstream.
    """
    pr, qr = _region_of(p), _region_of(q)
    pv, qv = _relation_samples(pr), _relation_samples(qr)
    p_in, p_on, p_out = classify_points(qr, pv, floor=RELATION_FLOOR)
    q_in, q_on, q_out = classify_points(pr, qv, floor=RELATION_FLOOR)
    if p_in.any() and q_in.any():
        return "violation", complex(pv[np.argmax(p_in)])
    if p_in.any():
        if p_out.any():
            return "violation", complex(pv[np.argmax(p_out)])
        return "p_in_q", None
    if q_in.any():
        if q_out.any():
            return "violation", complex(qv[np.argmax(q_out)])
        return "q_in_p", None
    if p_on.all() and q_on.all():
        return "equal", None
    if p_on.all() != q_on.all():
        # one boundary rides entirely inside the other's resolution band:
        # decide by a deep interior probe of the finer piece
        fine, coarse = (p, q) if p_on.all() else (q, p)
        probe = interior_point(_region_of(fine))
        f_in, _, f_out = classify_points(_region_of(coarse), probe,
                                         floor=RELATION_FLOOR)
        if f_in[0]:
            return ("p_in_q", None) if p_on.all() else ("q_in_p", None)
        if f_out[0]:
            return "disjoint", None
    return "disjoint", None


# --------------------------------------------------------------------------
# Niceness audit.


def _boundary_samples(region, cap=64):
    v = region.vertices
    step = max(1, v.size // cap)
    return v[::step]


def verify_nice(bm, pieces, horizon=10, cap=64, strict=False):
    """Forward boundary orbits must not re-enter the interior of the set.

    Boundary samples are pushed through every branch whose domain closure
    holds them (one-sided limits cannot be told apart on the boundary),
    breadth-first to the horizon; re-entry deeper than the local resolution
    band is a failure witness.  With strict=True a hit on the closure
    (the resolution band itself) also fails, certifying strict niceness.
    """
    regions = [_region_of(p) for p in pieces]
    checked = 0
    for reg in regions:
        for v in _boundary_samples(reg, cap):
            frontier = [complex(v)]
            for step in range(1, horizon + 1):
                nxt = []
                for z in frontier:
                    for d in bm.domains:
                        ins, on_b = contains_mask(d.region, z)
                        if (ins[0] or on_b[0]
                                or polyline_distance(d.region, z) <= 1e-7):
                            nxt.append(complex(d.branch.eval(z)))
                uniq = []
                for z in nxt:
                    if all(abs(z - u) > 1e-10 for u in uniq):
                        uniq.append(z)
                frontier = uniq[:32]
                for z in frontier:
                    for r2 in regions:
                        s_in, s_on, _ = classify_points(r2, z)
                        if s_in[0] or (strict and s_on[0]):
                            return {"nice": False, "strict": strict,
                                    "horizon": horizon,
                                    "witness": {"sample": complex(v),
                                                "step": step,
                                                "point": z}}
                if not frontier:
                    break
            checked += 1
    return {"nice": True, "strict": strict, "horizon": horizon,
            "witness": None, "samples": checked}


# --------------------------------------------------------------------------
# First entry / return / landing.


def _in_which(regions, z, tol=AMBIGUITY_TOL):
    """Index of the region holding z strictly; BoundaryAmbiguity near edges."""
    for i, reg in enumerate(regions):
        ins, on_b = contains_mask(reg, z)
        if on_b[0]:
            raise BoundaryAmbiguity("point on a nice-set boundary")
        if ins[0]:
            if polyline_distance(reg, z) <= tol:
                raise BoundaryAmbiguity("point within tolerance of the "
                                        "nice-set boundary")
            return i
    return None


def _lift_word(bm, word, target_region, orbit_pts):
    """Stage regions F^j(D) for j = t..0 given the word and orbit seeds.

    stage[0] is the entry domain itself; also returns the composed-branch
    degree and the critical points pulled back into the domain.
    """
    t = len(word)
    stage = [None] * (t + 1)
    stage[t] = _region_of(target_region)
    degree = 1
    crits = []
    for j in range(t - 1, -1, -1):
        d = bm.domains[word[j]]
        stage[j] = lift_region(d.branch, stage[j + 1], orbit_pts[j])
        for cp in d.critical_points:
            ins, _ = contains_mask(stage[j], cp)
            if ins[0]:
                degree *= d.degree
                back = complex(cp)
                ok = True
                for m in range(j - 1, -1, -1):
                    try:
                        back = complex(inverse_branch(
                            bm.domains[word[m]].branch, back, orbit_pts[m]))
                    except NearCritical:
                        ok = False
                        break
                if ok:
                    crits.append(back)
    if t > 1:
        stage[0] = _exactify([bm.domains[k].branch for k in word],
                             stage[0], stage[t])
    return stage, degree, crits


def _pairwise_disjoint(stages):
    """Sampled disjointness of stage regions with the min observed gap."""
    min_gap = np.inf
    for i in range(len(stages)):
        for j in range(i + 1, len(stages)):
            a, b = stages[i], stages[j]
            ax0, ax1, ay0, ay1 = a.bbox()
            bx0, bx1, by0, by1 = b.bbox()
            if ax1 < bx0 or bx1 < ax0 or ay1 < by0 or by1 < ay0:
                min_gap = min(min_gap, max(bx0 - ax1, ax0 - bx1,
                                           by0 - ay1, ay0 - by1))
                continue
            sa = _boundary_samples(a, 48)
            sb = _boundary_samples(b, 48)
            in_ab, _, _ = classify_points(b, sa)
            in_ba, _, _ = classify_points(a, sb)
            in_pa, _, _ = classify_points(b, interior_point(a))
            in_pb, _, _ = classify_points(a, interior_point(b))
            if in_ab.any() or in_ba.any() or in_pa[0] or in_pb[0]:
                return False, 0.0
            min_gap = min(min_gap,
                          float(polyline_distance(a, sb).min()),
                          float(polyline_distance(b, sa).min()))
    if not np.isfinite(min_gap):
        min_gap = 0.0
    return True, float(min_gap)


def _a2_residual(bm, word, domain_region, target_region):
    """Boundary-to-boundary audit for F^t on the entry domain.

    Returns (forward, onto_gap): forward is how far boundary images stray
    from the target boundary (held to tolerance); onto_gap is the coarsest
    spacing of the image cloud along it, a sampling-resolution figure that
    certifies surjectivity only at that resolution.
    """
    pts = domain_region.vertices
    for idx in word:
        pts = bm.domains[idx].branch.eval(pts)
    fwd = float(polyline_distance(target_region, pts).max())
    tv = target_region.vertices
    onto = float(np.min(np.abs(tv[:, None] - pts[None, :]), axis=1).max())
    return fwd, onto


def entry_domains(bm, pieces, seeds, horizon, mode="entry"):
    """First entry/return/landing components for each seed.

    `pieces` is the nice set W as a list of PuzzlePiece; each record
    carries the disjointness and boundary-onto-boundary certificates.
    """
    if mode not in ("entry", "return", "landing"):
        raise ValueError("mode must be entry, return, or landing")
    regions = [p.region for p in pieces]
    records = []
    for z in seeds:
        z = complex(z)
        start = _in_which(regions, z)
        if mode == "return" and start is None:
            raise ValueError("return mode needs seeds inside the nice set")
        if mode == "landing" and start is not None:
            records.append(EntryDomainRecord(
                pieces[start], 0, 1, "landing",
                {"a1_disjoint": True, "a1_min_gap": float("inf"),
                 "a2_residual": 0.0, "a2_onto_gap": 0.0}))
            continue
        pts = [z]
        word = []
        hit = None
        for step in range(1, horizon + 1):
            loc = _locate(bm, pts[-1], step - 1)
            if not isinstance(loc, int):
                hit = loc
                break
            word.append(loc)
            pts.append(complex(bm.domains[loc].branch.eval(pts[-1])))
            w_idx = _in_which(regions, pts[-1])
            if w_idx is not None:
                hit = ("w", w_idx, step)
                break
        if not (isinstance(hit, tuple) and hit[0] == "w"):
            raise HorizonExhausted(
                "seed %s did not reach the nice set within %d steps"
                % (z, horizon))
        _, w_idx, time = hit
        target = pieces[w_idx]
        stages, degree, crits = _lift_word(bm, word, target, pts)
        piece = PuzzlePiece(target.depth + time, stages[0],
                            tuple(word) + target.word, target.terminal_range)
        disjoint, min_gap = _pairwise_disjoint(stages[:-1])
        fwd, onto = _a2_residual(bm, word, stages[0], target.region)
        records.append(EntryDomainRecord(
            piece, time, degree, mode,
            {"a1_disjoint": disjoint, "a1_min_gap": min_gap,
             "a2_residual": fwd, "a2_onto_gap": onto,
             "critical_preimages": crits}))
    return records


# --------------------------------------------------------------------------
# First-return inducing.


def _seed_grid(regions, n_seeds):
    """Deterministic interior grid across the nice-set components."""
    out = []
    per = max(1, int(np.ceil(np.sqrt(n_seeds / max(1, len(regions))))))
    for reg in regions:
        x0, x1, y0, y1 = reg.bbox()
        xs = np.linspace(x0, x1, per + 2)[1:-1]
        ys = np.linspace(y0, y1, per + 2)[1:-1]
        zz = (xs[None, :] + 1j * ys[:, None]).ravel()
        ins, on_b = contains_mask(reg, zz)
        pts = zz[ins & ~on_b]
        if pts.size:
            d = polyline_distance(reg, pts)
            pts = pts[d > 10.0 * AMBIGUITY_TOL]
        out.extend(complex(p) for p in pts)
    return out


def induce_first_return(bm, nice_set, horizon=24, n_seeds=600, seed=11,
                        seeds=None, check_nice=True, nice_horizon=8,
                        strict=False):
    """Box mapping of first returns to a nice union of puzzle pieces.

    Return domains are discovered from a deterministic seed grid (plus any
    critical points of bm inside the nice set); each distinct itinerary
    word is realized once by backward lifting.  Completeness holds only up
    to the horizon and seed resolution, both recorded in the metadata.
    Words whose lifted region leaks out of its host component by more than
    the local resolution band are rejected as discretization artifacts.
    """
    regions = [p.region for p in nice_set]
    if check_nice:
        rep = verify_nice(bm, nice_set, horizon=nice_horizon)
        if not rep["nice"]:
            raise NotNice("boundary orbit re-enters the set: %s"
                          % rep["witness"])
    if seeds is None:
        seeds = _seed_grid(regions, n_seeds)
        for d in bm.domains:
            for cp in d.critical_points:
                try:
                    if _in_which(regions, complex(cp)) is not None:
                        seeds.append(complex(cp))
                except BoundaryAmbiguity:
                    pass
    found = {}
    ambiguous = exhausted = escaped = total = 0
    for z in seeds:
        z = complex(z)
        try:
            start = _in_which(regions, z)
        except BoundaryAmbiguity:
            ambiguous += 1
            continue
        if start is None:
            continue
        total += 1
        pts = [z]
        word = []
        done = False
        for step in range(1, horizon + 1):
            try:
                loc = _locate(bm, pts[-1], step - 1)
            except BoundaryAmbiguity:
                ambiguous += 1
                done = True
                break
            if not isinstance(loc, int):
                escaped += 1
                done = True
                break
            word.append(loc)
            pts.append(complex(bm.domains[loc].branch.eval(pts[-1])))
            try:
                w_idx = _in_which(regions, pts[-1])
            except BoundaryAmbiguity:
                ambiguous += 1
                done = True
                break
            if w_idx is not None:
                key = tuple(word)
                if key not in found:
                    found[key] = (start, w_idx, pts)
                done = True
                break
        if not done:
            exhausted += 1
    if strict and exhausted:
        raise HorizonExhausted(
            "%d seeds neither returned nor left within %d steps"
            % (exhausted, horizon))
    domains = []
    words = []
    rejected = 0
    for key in sorted(found):
        start, w_idx, pts = found[key]
        stages, degree, crits = _lift_word(bm, list(key), nice_set[w_idx],
                                           pts)
        region = stages[0]
        _, _, r_out = classify_points(regions[start], region.vertices)
        if r_out.any():
            rejected += 1
            continue
        if len(key) == 1:
            branch = bm.domains[key[0]].branch
        else:
            branch = Compose([bm.domains[k].branch for k in key[::-1]])
        host = regions[start]
        eq = bool(region.vertices.size == host.vertices.size and
                  np.max(np.abs(region.vertices - host.vertices)) <= 1e-9)
        domains.append(DomainSpec(region=region, parent=start, branch=branch,
                                  target=w_idx, degree=degree,
                                  critical_points=crits, equals_range=eq))
        words.append(list(key))
    w_area = sum(area(r) for r in regions)
    d_area = sum(area(d.region) for d in domains)
    meta = {
        "construction": "first_return",
        "base_construction": bm.metadata.get("construction"),
        "horizon": horizon,
        "n_seeds": len(seeds),
        "seed_parameter": seed,
        "returned_words": len(found),
        "words_rejected_boundary": rejected,
        "seeds_in_set": total,
        "seeds_ambiguous": ambiguous,
        "seeds_escaped": escaped,
        "seeds_exhausted": exhausted,
        # grid fraction of seeds with no verdict: Monte-Carlo proxy for the
        # area not resolved into returning / escaping within the horizon
        "unresolved_area_fraction": exhausted / max(1, total),
        "domain_area_fraction": d_area / w_area,
        "return_times": [len(w) for w in words],
        "words": words,
    }
    return BoxMapping(ranges=regions, domains=domains, metadata=meta)
