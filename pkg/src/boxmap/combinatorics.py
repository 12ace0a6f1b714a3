"""Critical-orbit combinatorics: fibers, children, recurrence, renormalization.

Every verdict here is a finite-horizon statement with explicit evidence; the
infinite-depth notions they approximate are undecidable from finite data.
"""

from __future__ import annotations

import numpy as np

from . import puzzle
from .analytic import NearCritical
from .geometry import contains_mask, diameter, polyline_distance
from .puzzle import (
    BoundaryAmbiguity, Escaped, HorizonExhausted, PuzzlePiece, Unresolved,
    piece_at, verify_nice,
)

__all__ = [
    "FiberNest", "RecurrenceVerdict", "certified_steps", "child_times",
    "critical_fiber_count", "fiber_nest", "children", "classify_recurrence",
    "detect_renormalization", "stage_degrees",
]


class FiberNest:
    """Nested critical/point pieces of increasing depth with diameters."""

    __slots__ = ("center", "pieces", "diameters")

    def __init__(self, center, pieces, diameters):
        self.center = complex(center)
        self.pieces = list(pieces)
        self.diameters = [float(d) for d in diameters]

    def __len__(self):
        return len(self.pieces)


class RecurrenceVerdict:
    """Finite-horizon recurrence class with its certifying evidence."""

    __slots__ = ("classification", "depth", "horizon", "evidence")

    def __init__(self, classification, depth, horizon, evidence):
        self.classification = classification
        self.depth = depth
        self.horizon = horizon
        self.evidence = evidence

    def __repr__(self):
        return "RecurrenceVerdict(%s, depth=%d, horizon=%d)" % (
            self.classification, self.depth, self.horizon)


def fiber_nest(bm, c, max_depth):
    """Pieces containing c for every depth up to max_depth.

    Propagates the Escaped/Unresolved verdict of the first depth at which
    the orbit stops resolving.
    """
    pieces = []
    diams = []
    for n in range(max_depth + 1):
        p = piece_at(bm, c, n)
        if not isinstance(p, PuzzlePiece):
            if pieces:
                break
            return p
        pieces.append(p)
        diams.append(diameter(p.region))
    return FiberNest(c, pieces, diams)


def stage_degrees(bm, word, stages):
    """Local branch degree realized at each step of a pullback word."""
    degs = []
    for j, idx in enumerate(word):
        d = bm.domains[idx]
        deg = 1
        for cp in d.critical_points:
            ins, _ = contains_mask(stages[j], cp)
            if ins[0]:
                deg = d.degree
        degs.append(deg)
    return degs


def _orbit_word(bm, z, steps):
    pts, word, verdict = puzzle._resolved_orbit(bm, z, steps)
    return pts, word, verdict


def children(bm, Q, c, horizon, skipped=None):
    """Pieces P containing c with F^n(P) = Q, univalent after step one.

    Q must be a critical piece.  Candidate times are the n <= horizon with
    F^n(c) in Q; each candidate is pulled back along c's orbit word and
    kept when the degree accumulated after the first step equals one.
    Candidates whose pullback loops graze a critical value are dropped
    and their times appended to `skipped` when a list is passed.
    """
    has_crit = any(
        contains_mask(Q.region, cp)[0][0]
        for d in bm.domains for cp in d.critical_points)
    if not has_crit:
        raise ValueError("children are defined for critical pieces only")
    pts, word, verdict = _orbit_word(bm, c, horizon)
    out = []
    for n in range(1, len(word) + 1):
        ins, on_b = contains_mask(Q.region, pts[n])
        if on_b[0]:
            raise BoundaryAmbiguity("orbit point %d on the piece boundary" % n)
        if not ins[0]:
            continue
        w = word[:n]
        try:
            stages, total_deg, _ = puzzle._lift_word(bm, w, Q, pts)
        except NearCritical:
            if skipped is not None:
                skipped.append(n)
            continue
        degs = stage_degrees(bm, w, stages)
        if int(np.prod(degs[1:])) != 1:
            continue
        out.append(PuzzlePiece(Q.depth + n, stages[0], tuple(w) + Q.word,
                               Q.terminal_range))
    if isinstance(verdict, Unresolved):
        raise HorizonExhausted(
            "orbit enters the unresolved mask at step %d; "
            "child list incomplete" % verdict.step)
    return out


def _critical_points_of(bm):
    return [complex(cp) for d in bm.domains for cp in d.critical_points]


def _z_array(seq):
    """z[j] = length of the longest common prefix of seq[j:] and seq."""
    n = len(seq)
    z = np.zeros(n, dtype=np.int64)
    if n == 0:
        return z
    z[0] = n
    l = r = 0
    for j in range(1, n):
        if j < r:
            z[j] = min(r - j, z[j - l])
        while j + z[j] < n and seq[z[j]] == seq[j + z[j]]:
            z[j] += 1
        if j + z[j] > r:
            l, r = j, j + z[j]
    return z


def _word_depths(bm, word):
    """Combinatorial depth of each orbit point relative to the base point.

    d[j] is the deepest k with F^j(z) in the same depth-k puzzle piece as
    z itself: the first k word letters agree and the ranges at letter k
    agree.  Where the word ends before the divergence letter the depth is
    reported optimistically (used only to reject, never to accept).
    """
    w = list(word)
    n = len(w)
    z = _z_array(w)
    parent = [d.parent for d in bm.domains]
    d = np.empty(n, dtype=np.int64)
    d[0] = n
    for j in range(1, n):
        L = int(z[j])
        if j + L >= n:
            d[j] = L
        elif parent[w[j + L]] == parent[w[L]]:
            d[j] = L
        else:
            d[j] = L - 1
    return d


def child_times(bm, k, word):
    """Exact child return times of the depth-k critical piece, by word.

    A time n counts when F^n(c) lies in the depth-k piece around c and no
    intermediate stage of the pullback meets the critical point, i.e.
    d[j] + j < k + n for 0 < j < n.  Runs in O(len(word)) against the
    region-based scan in children(), which it must agree with.
    """
    d = _word_depths(bm, word)
    n_max = len(d)
    times = []
    run_max = -(1 << 60)
    for n in range(1, n_max):
        if d[n] >= k and n + k < n_max and run_max < k + n:
            times.append(n)
        run_max = max(run_max, int(d[n]) + n)
    return times


def certified_steps(bm, pts, word, eps0=1e-15, trust=1e-6):
    """Length of the word prefix trusted against floating-point shadowing.

    A perturbation of size eps0 at the seed grows through step j by the
    branch derivative there, plus one rounding unit per step.  Letters are
    certified while the accumulated bound stays below `trust`; past that
    point the computed itinerary can diverge from the itinerary of the
    exact seed even though each float step is individually accurate.
    """
    err = float(eps0)
    for j, letter in enumerate(word):
        if err >= trust:
            return j
        err = err * abs(bm.domains[letter].branch.deriv(pts[j])) + 1e-16
    return len(word)


def critical_fiber_count(bm, c, depth=8, horizon=512):
    """Number of critical fibers at the audit depth met by the orbit of c.

    A fiber counts when some resolved orbit point of c lies in or on the
    closure of the depth-`depth` piece around that critical point.
    """
    pts, word, verdict = _orbit_word(bm, c, horizon)
    arr = np.asarray(pts, dtype=complex)
    count = 0
    for cp in set(_critical_points_of(bm)):
        try:
            Q = piece_at(bm, cp, depth)
        except (BoundaryAmbiguity, HorizonExhausted):
            count += 1      # unresolvable fiber: count conservatively
            continue
        ins, on_b = contains_mask(Q.region, arr)
        if bool(np.any(ins | on_b)):
            count += 1
    return count


def classify_recurrence(bm, c, depth, horizon, nice_horizon=8,
                        children_levels=None):
    """Recurrence class of the critical point c, certified up to horizon.

    non_recurrent needs the orbit of F(c) to avoid the depth-`depth` piece
    of c, with that piece strictly nice at resolution.  Recurrent verdicts
    come from children counts: stable finite lists at every audited level
    give persistently_recurrent, children appearing into the horizon tail
    give reluctantly_recurrent.
    """
    c = complex(c)
    nest = fiber_nest(bm, c, depth)
    if not isinstance(nest, FiberNest) or len(nest.pieces) <= depth:
        return RecurrenceVerdict("undetermined", depth, horizon, {
            "reason": "critical piece unresolved at requested depth"})
    P = nest.pieces[depth]
    pts, word, verdict = _orbit_word(bm, c, horizon)
    orbit = np.asarray(pts[1:], dtype=complex)
    if orbit.size == 0:
        return RecurrenceVerdict("undetermined", depth, horizon, {
            "reason": "orbit of F(c) unresolved at step 0"})
    ins, on_b = contains_mask(P.region, orbit)
    visits = [int(k) for k in np.nonzero(ins | on_b)[0]]
    if not visits:
        rep = verify_nice(bm, [P], horizon=nice_horizon, strict=True)
        dist = float(polyline_distance(P.region, orbit).min())
        evidence = {
            "avoided_piece_depth": depth,
            "avoided_piece_word": list(P.word),
            "orbit_steps_resolved": int(orbit.size),
            "min_orbit_distance": dist,
            "strictly_nice": bool(rep["nice"]),
            "niceness_report": rep,
        }
        if rep["nice"]:
            return RecurrenceVerdict("non_recurrent", depth, horizon,
                                     evidence)
        return RecurrenceVerdict("undetermined", depth, horizon, evidence)
    cap = min(len(word), certified_steps(bm, pts, word))
    levels = children_levels or list(range(1, depth + 1))
    counts = {}
    last_times = {}
    for lev in levels:
        times = child_times(bm, lev, list(word[:cap]))
        counts[lev] = len(times)
        last_times[lev] = max(times) if times else 0
    evidence = {
        "first_visits": visits[:16],
        "children_counts": counts,
        "last_child_times": last_times,
        "children_route": "word",
        "certified_steps": int(cap),
        "orbit_steps_resolved": int(orbit.size),
    }
    if isinstance(verdict, Unresolved) or not counts:
        return RecurrenceVerdict("undetermined", depth, horizon, evidence)
    tail = cap // 2
    if all(0 < t <= tail for t in last_times.values()):
        return RecurrenceVerdict("persistently_recurrent", depth, horizon,
                                 evidence)
    return RecurrenceVerdict("reluctantly_recurrent", depth, horizon,
                             evidence)


def detect_renormalization(bm, c, horizon, max_period=64, max_depth=10):
    """Smallest period s with all observed F^{ks}(c) in one critical piece.

    Returns {"period": s, "piece": W, "pullback_compact": flag,
    "margin": float} or None; an s counts only if the deepest common piece
    has depth >= 1 and the F^s-pullback of W along c's word lands
    compactly inside W (the polynomial-like picture).
    """
    c = complex(c)
    pts, word, verdict = _orbit_word(bm, c, horizon)
    n_res = len(word)
    if n_res == 0:
        return None
    nest = fiber_nest(bm, c, min(max_depth, n_res))
    if not isinstance(nest, FiberNest):
        return None
    for s in range(1, min(max_period, max(1, n_res // 2)) + 1):
        sample = np.asarray([pts[k] for k in range(0, n_res + 1, s)],
                            dtype=complex)
        if sample.size < 3:
            break
        best = None
        for lev in range(len(nest.pieces) - 1, 0, -1):
            ins, on_b = contains_mask(nest.pieces[lev].region, sample)
            if np.all(ins & ~on_b):
                best = lev
                break
        if best is None:
            continue
        W = nest.pieces[best]
        stages, deg, _ = puzzle._lift_word(bm, word[:s], W, pts)
        pull = stages[0]
        _, _, r_out = puzzle.classify_points(W.region, pull.vertices)
        compact = not r_out.any()
        margin = float(polyline_distance(W.region, pull.vertices).min())
        s_in, s_on, _ = puzzle.classify_points(W.region, pull.vertices)
        strict = bool(np.all(s_in))
        return {
            "period": s,
            "piece": W,
            "degree": int(deg),
            "pullback_compact": bool(compact and strict),
            "margin": margin,
            "samples_checked": int(sample.size),
        }
    return None
