"""Principal and Enhanced Nests around a recurrent critical point.

The principal nest iterates first-return pullback: each level is the entry
component of the critical point into the previous level.  The enhanced
nest interleaves two pullback operators with successor steps so that each
level comes with buffer pieces whose annuli avoid the postcritical set;
those buffers are what make the deep levels usable for moduli bounds.

Every quantity here is a finite-horizon audit: return times are found on
a resolved orbit prefix, postcritical membership is sampled at M points,
and the reports carry the horizons and sample counts they were computed
with.
"""

from __future__ import annotations

import math

import numpy as np

from . import puzzle
from .analytic import NearCritical
from .combinatorics import (_word_depths, _z_array, certified_steps,
                            child_times, critical_fiber_count, stage_degrees)
from .geometry import AnnulusSpec, InvalidRegion, contains_mask
from .modulus import DegenerateAnnulus, modulus
from .puzzle import BoundaryAmbiguity, HorizonExhausted, PuzzlePiece, piece_at

__all__ = [
    "EnhancedNest", "M_POSTCRITICAL", "NuNotFound", "PrincipalNest",
    "delta_free", "delta_nice", "enhanced_nest", "op_A", "op_B",
    "piece_return_floor", "postcritical_samples", "principal_nest",
    "smallest_successor",
]

M_POSTCRITICAL = 512


class NuNotFound(RuntimeError):
    """No return time of c to the piece passes both pullback conditions."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


class PrincipalNest:
    """First-return nest with times, central flags, and level moduli."""

    __slots__ = ("center", "levels", "moduli")

    def __init__(self, center, levels, moduli):
        self.center = complex(center)
        self.levels = list(levels)
        self.moduli = list(moduli)

    def __len__(self):
        return len(self.levels)

    def return_times(self):
        return [lev["return_time"] for lev in self.levels]


class EnhancedNest:
    """Buffered nest levels with transition/return times and degrees."""

    __slots__ = ("center", "levels", "final_piece", "b", "postcritical",
                 "stopped", "certified_steps")

    def __init__(self, center, levels, final_piece, b, postcritical,
                 stopped=None, certified_steps=None):
        self.center = complex(center)
        self.levels = list(levels)
        self.final_piece = final_piece
        self.b = int(b)
        self.postcritical = np.asarray(postcritical, dtype=complex)
        self.stopped = stopped
        self.certified_steps = certified_steps

    def __len__(self):
        return len(self.levels)


def postcritical_samples(bm, c, m=M_POSTCRITICAL):
    """First m resolved forward iterates of the critical point c."""
    pts, _, _ = puzzle._resolved_orbit(bm, c, m)
    return np.asarray(pts[1:], dtype=complex)


def _strict_member(region, z):
    ins, on_b = contains_mask(region, z)
    if bool(on_b[0]):
        raise BoundaryAmbiguity("orbit point on a nest piece boundary")
    return bool(ins[0])


def _first_entry_time(region, pts, start=1):
    for n in range(start, len(pts)):
        if _strict_member(region, pts[n]):
            return n
    return None


def _word_entry_times(word, piece_word):
    """Times n with word[n:n+L] == piece_word, L fully inside the word.

    A point lies in a pullback piece iff its itinerary starts with the
    piece word, so entries of the orbit into the piece are exactly the
    full-length matches.  Computed by one Z-array pass over the joined
    sequence.
    """
    W = list(piece_word)
    L = len(W)
    if L == 0:
        return list(range(1, len(word) + 1))
    z = _z_array(W + [-1] + list(word))
    return [n for n in range(1, len(word) - L + 1) if z[L + 1 + n] >= L]


def piece_return_floor(piece_word):
    """Lower bound for the return time of a piece into itself.

    F^r can bring a point of the piece back only if the piece word
    overlaps itself with shift r, so the smallest such shift bounds the
    return time from below; with no proper overlap the bound is the full
    word length.
    """
    W = list(piece_word)
    L = len(W)
    z = _z_array(W)
    for r in range(1, L):
        if z[r] >= L - r:
            return r
    return max(L, 1)


def _transition_degree(d, k, n):
    """Degree of F^n from the depth-(k+n) piece onto the depth-k piece.

    Stage j of the pullback contains the critical point iff the orbit
    depth there reaches k + n - j; each such stage doubles the degree
    (quadratic critical points).  Stage 0 is the piece itself and always
    counts.
    """
    g = 2
    for j in range(1, n):
        if int(d[j]) + j >= k + n:
            g *= 2
    return g


def _annulus_modulus(outer_region, inner_region):
    try:
        return modulus(AnnulusSpec(outer_region, inner_region).validate())
    except (InvalidRegion, DegenerateAnnulus):
        return None


def principal_nest(bm, c, n_levels, horizon=400):
    """First-return nest of c starting from its depth-1 puzzle piece.

    The central flag at each level is decided on the orbit itself: the
    return point lies in the next level iff its onward word repeats the
    pullback word and the doubled-time iterate is back in the level.
    This needs no pullback past the last level, so the deepest (and
    numerically thinnest) piece is never constructed just for the flag.
    """
    pts, word, _ = puzzle._resolved_orbit(bm, c, horizon)
    V = piece_at(bm, c, 1)
    levels = []
    moduli = []
    for i in range(n_levels):
        p = _first_entry_time(V.region, pts)
        if p is None:
            err = HorizonExhausted(
                "no return to the level-%d piece within %d resolved steps"
                % (i, len(pts) - 1))
            err.partial = PrincipalNest(c, levels, moduli)
            raise err
        central = None
        if 2 * p < len(pts):
            central = (tuple(word[p:2 * p]) == tuple(word[:p])
                       and _strict_member(V.region, pts[2 * p]))
        levels.append({"piece": V, "return_time": p, "central": central})
        if i + 1 < n_levels:
            stages, _, _ = puzzle._lift_word(bm, word[:p], V.region,
                                             pts[:p + 1])
            Vn = PuzzlePiece(V.depth + p, stages[0],
                             tuple(word[:p]) + V.word, V.terminal_range)
            moduli.append(_annulus_modulus(V.region, Vn.region))
            V = Vn
    return PrincipalNest(c, levels, moduli)


def _nu_search(bm, c, I, pts, word, pc, b, horizon, depths=None, cert=None):
    """Smallest return time of c to I passing both pullback conditions.

    Condition one: the pullback stages meet critical points at most b^2
    times (the stage containing c itself always counts).  Condition two:
    every certified postcritical sample inside the plain pullback B lies
    in the entry-domain pullback A; `cert` caps the sample indices the
    audit may trust, since a drifted sample sitting on the wrong side of
    a thin piece boundary would otherwise veto every candidate.  The
    stage count is pre-filtered on the orbit word so rejected candidates
    cost no region lifts.  Returns A, B, nu, the entry time rho of the
    return point, degrees, and the audited candidate list.
    """
    b2 = b * b
    if depths is None:
        depths = _word_depths(bm, word)
    pc_aud = pc if cert is None else pc[:max(int(cert), 0)]
    candidates = []
    w = list(word if cert is None else word[:cert])
    entries = _word_entry_times(w, I.word)
    for idx, n in enumerate(entries):
        crit_word = sum(1 for j in range(n)
                        if int(depths[j]) + j >= I.depth + n)
        rec = {"nu": n, "critical_meetings": crit_word}
        candidates.append(rec)
        if crit_word > b2:
            rec["rejected"] = "critical meetings exceed b^2"
            continue
        if idx + 1 >= len(entries):
            rec["rejected"] = "entry domain of the return point unresolved"
            continue
        rho = entries[idx + 1] - n
        try:
            stages, degree_B, _ = puzzle._lift_word(bm, word[:n], I.region,
                                                    pts[:n + 1])
            degs = stage_degrees(bm, word[:n], stages)
            crit_meets = sum(1 for g in degs if g > 1)
            rec["critical_meetings"] = crit_meets
            if crit_meets > b2:
                rec["rejected"] = "critical meetings exceed b^2"
                continue
            e_stages, e_deg, _ = puzzle._lift_word(bm, word[n:n + rho],
                                                   I.region,
                                                   pts[n:n + rho + 1])
            a_stages, a_deg, _ = puzzle._lift_word(bm, word[:n], e_stages[0],
                                                   pts[:n + 1])
        except (NearCritical, BoundaryAmbiguity) as exc:
            rec["rejected"] = "pullback unresolved: %s" % exc
            continue
        A_region, B_region = a_stages[0], stages[0]
        ins_B, on_B = contains_mask(B_region, pc_aud)
        in_B = ins_B & ~on_B
        ins_A, on_A = contains_mask(A_region, pc_aud)
        bad = in_B & ~(ins_A & ~on_A)
        rec["pc_in_B"] = int(in_B.sum())
        rec["pc_violations"] = int(bad.sum())
        rec["pc_audited"] = int(pc_aud.size)
        if bad.any():
            rec["rejected"] = "postcritical samples in B escape A"
            continue
        A = PuzzlePiece(I.depth + n + rho, A_region,
                        tuple(word[:n + rho]) + I.word, I.terminal_range)
        B = PuzzlePiece(I.depth + n, B_region,
                        tuple(word[:n]) + I.word, I.terminal_range)
        return {"nu": n, "rho": rho, "A": A, "B": B,
                "degree_B": int(degree_B), "degree_A": int(a_deg * e_deg),
                "candidates": candidates}
    raise NuNotFound(
        "no admissible return time of c to the piece within %d "
        "resolved steps" % (len(pts) - 1), candidates)


def _pc_and_b(bm, c, horizon, postcritical, b):
    pts, word, _ = puzzle._resolved_orbit(bm, c,
                                          max(horizon, M_POSTCRITICAL))
    if postcritical is None:
        postcritical = np.asarray(pts[1:M_POSTCRITICAL + 1], dtype=complex)
    if b is None:
        b = critical_fiber_count(bm, c)
    cert = certified_steps(bm, pts, word)
    return pts, word, np.asarray(postcritical, dtype=complex), b, cert


def op_A(bm, c, I, horizon=400, postcritical=None, b=None):
    """Entry-domain pullback of I along the admissible return of c."""
    pts, word, pc, b, cert = _pc_and_b(bm, c, horizon, postcritical, b)
    return _nu_search(bm, c, I, pts, word, pc, b, horizon, cert=cert)["A"]


def op_B(bm, c, I, horizon=400, postcritical=None, b=None):
    """Plain pullback of I along the admissible return of c."""
    pts, word, pc, b, cert = _pc_and_b(bm, c, horizon, postcritical, b)
    return _nu_search(bm, c, I, pts, word, pc, b, horizon, cert=cert)["B"]


def _successor_from(bm, I, pts, word, cert=None):
    """Deepest child of I visible in the certified orbit word.

    Child times come from the word in O(len); only the chosen child is
    lifted as a region.  I must be a piece on the critical fiber, so its
    word is a prefix of the orbit word.  Letters past the certified
    window are ignored: a drifted orbit fakes deep children whose
    pullbacks contract at the wrong rate and collapse.
    """
    w = list(word if cert is None else word[:cert])
    times = child_times(bm, I.depth, w)
    if not times:
        raise HorizonExhausted(
            "no child of the depth-%d piece within %d certified steps"
            % (I.depth, len(w)))
    n = times[-1]
    stages, _, _ = puzzle._lift_word(bm, word[:n], I.region, pts[:n + 1])
    return PuzzlePiece(I.depth + n, stages[0], tuple(word[:n]) + I.word,
                       I.terminal_range)


def smallest_successor(bm, c, I, horizon):
    """Deepest child of I realized within horizon (unicritical landing)."""
    pts, word, _ = puzzle._resolved_orbit(bm, complex(c), horizon)
    return _successor_from(bm, I, pts, word,
                           cert=certified_steps(bm, pts, word))


def delta_nice(bm, piece, postcritical_samples, horizon, counters=None):
    """Min modulus of piece minus the return domain of a sample inside it.

    Samples whose return does not resolve within horizon are skipped and
    counted; with no returning samples the piece is vacuously nice and the
    sentinel +inf is returned.  Pass a dict as counters to receive the
    audit tallies.
    """
    arr = np.atleast_1d(np.asarray(postcritical_samples, dtype=complex))
    ins, on_b = contains_mask(piece.region, arr)
    inside = arr[ins & ~on_b]
    by_domain = {}
    returned = 0
    skipped = 0
    for z in inside:
        # step the orbit only until it re-enters; most samples return in
        # a few steps, so resolving the full horizon up front is wasted
        zpts = [complex(z)]
        zword = []
        m = None
        try:
            for k in range(horizon):
                loc = puzzle._locate(bm, zpts[-1], k)
                if not isinstance(loc, int):
                    break
                zword.append(loc)
                zpts.append(complex(bm.domains[loc].branch.eval(zpts[-1])))
                if _strict_member(piece.region, zpts[-1]):
                    m = k + 1
                    break
        except BoundaryAmbiguity:
            skipped += 1
            continue
        if m is None:
            skipped += 1
            continue
        returned += 1
        # samples sharing the return word land in the same domain, whose
        # annulus need only be measured once
        by_domain.setdefault(tuple(zword[:m]), (zpts, m))
    vals = []
    for rword, (zpts, m) in by_domain.items():
        stages, _, _ = puzzle._lift_word(bm, list(rword), piece.region,
                                         zpts[:m + 1])
        val = _annulus_modulus(piece.region, stages[0])
        if val is None:
            skipped += 1
            continue
        vals.append(val)
    if counters is not None:
        counters.update({"samples_in_piece": int(inside.size),
                         "returned": returned, "skipped": skipped,
                         "distinct_domains": len(by_domain)})
    return min(vals) if vals else math.inf


def _free_certificate(P, P_minus, P_plus, pc):
    """Postcritical counts inside the two buffer annuli (0 means free)."""
    ins_P, on_P = contains_mask(P.region, pc)
    ins_m, on_m = contains_mask(P_minus.region, pc)
    ins_p, on_p = contains_mask(P_plus.region, pc)
    outer = (ins_p & ~on_p) & ~(ins_P | on_P)
    inner = (ins_P & ~on_P) & ~(ins_m | on_m)
    return {"outer_violations": int(outer.sum()),
            "inner_violations": int(inner.sum()),
            "audited": int(np.asarray(pc).size)}


def enhanced_nest(bm, c, n_levels, horizon=400):
    """Buffered nest: each level applies both pullbacks then 5b successors.

    Stops at the last fully completed level when a sub-operation runs out
    of horizon or admissible return times; the stopping reason is kept on
    the result.  Raises only when no level completes.
    """
    pts, word, _ = puzzle._resolved_orbit(bm, c,
                                          max(horizon, M_POSTCRITICAL))
    pc = np.asarray(pts[1:M_POSTCRITICAL + 1], dtype=complex)
    depths = _word_depths(bm, word)
    cert = certified_steps(bm, pts, word)
    b = critical_fiber_count(bm, c)
    I = piece_at(bm, c, 1)
    levels = []
    stopped = None
    for _ in range(n_levels):
        try:
            counters = {}
            dn = delta_nice(bm, I, pc, horizon, counters=counters)
            s1 = _nu_search(bm, c, I, pts, word, pc, b, horizon,
                            depths=depths, cert=cert)
            s2 = _nu_search(bm, c, s1["A"], pts, word, pc, b, horizon,
                            depths=depths, cert=cert)
            I_minus, P = s2["A"], s2["B"]
            s3 = _nu_search(bm, c, s1["B"], pts, word, pc, b, horizon,
                            depths=depths, cert=cert)
            I_plus = s3["B"]
            K = P
            for _ in range(5 * b):
                K = _successor_from(bm, K, pts, word, cert=cert)
        except (NuNotFound, HorizonExhausted, BoundaryAmbiguity,
                NearCritical) as exc:
            stopped = exc
            break
        p_i = K.depth - I.depth
        witnesses = _word_entry_times(word, K.word)
        level = {
            "I_i": I, "I_i_minus": I_minus, "I_i_plus": I_plus, "P_i": P,
            "nu_i": s1["nu"], "p_i": p_i,
            "r_i": piece_return_floor(K.word),
            "r_i_witness": witnesses[0] if witnesses else None,
            "degree_i": _transition_degree(depths, I.depth, p_i),
            "degree_B": s1["degree_B"],
            "delta_nice_i": dn, "delta_nice_counts": counters,
            "pc_free": _free_certificate(P, I_minus, I_plus, pc),
        }
        levels.append(level)
        I = K
    if not levels:
        if stopped is not None:
            raise stopped
        raise HorizonExhausted("no enhanced nest level completed")
    return EnhancedNest(c, levels, I, b, pc, stopped, certified_steps=cert)


def delta_free(bm, piece, level):
    """Buffer annuli moduli around the pre-successor piece of a level.

    piece is the level's pre-successor pullback (P_i); the buffers come
    from the level record.  mod_in measures piece minus the inner buffer,
    mod_out the outer buffer minus piece; the free certificate counts
    audited postcritical samples inside either annulus.
    """
    P_minus, P_plus = level["I_i_minus"], level["I_i_plus"]
    return {
        "P_minus": P_minus, "P_plus": P_plus,
        "mod_in": _annulus_modulus(piece.region, P_minus.region),
        "mod_out": _annulus_modulus(P_plus.region, piece.region),
        "free": level["pc_free"],
    }
