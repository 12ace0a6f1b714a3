"""Sierpinski-carpet box mapping with exact rational bookkeeping.

The range is the open square (-1,1)^2.  Subdivide into 9 congruent
sub-squares; the central one is a domain carrying the affine surjection
back onto the range, and the 8 peripheral cells subdivide recursively.
Domain squares at level L have half-side 3^-L and are pairwise disjoint.
All centers are exact rationals, so areas and the symmetrization used by
the quadratic-quotient construction stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "CarpetSquare", "domain_squares", "non_domain_area", "domain_area_total",
    "locate", "locate_many", "canonical_pairs",
]


@dataclass(frozen=True)
class CarpetSquare:
    """Open domain square: center (exact), level L, half-side 3^-L."""

    cx: Fraction
    cy: Fraction
    level: int

    @property
    def half(self):
        return Fraction(1, 3 ** self.level)

    @property
    def center(self):
        return complex(self.cx, self.cy)

    def scale(self):
        """Multiplier of the affine surjection onto the range."""
        return 3 ** self.level

    def contains_exact(self, x, y):
        h = self.half
        return abs(x - self.cx) < h and abs(y - self.cy) < h


def domain_squares(levels):
    """All domain squares through the given level, in level-major order."""
    out = [CarpetSquare(Fraction(0), Fraction(0), 1)]
    cells = [(Fraction(0), Fraction(0))]  # peripheral cells at current level
    for lev in range(2, levels + 1):
        step = Fraction(2, 3 ** (lev - 1))
        new_cells = []
        for cx, cy in cells:
            for i in (-1, 0, 1):
                for j in (-1, 0, 1):
                    if i == 0 and j == 0:
                        continue
                    new_cells.append((cx + i * step, cy + j * step))
        out.extend(CarpetSquare(cx, cy, lev) for cx, cy in new_cells)
        cells = new_cells
    return out


def non_domain_area(levels):
    """Exact area of the range minus all domain squares through `levels`."""
    return 4 * Fraction(8, 9) ** levels


def domain_area_total(levels):
    return 4 - non_domain_area(levels)


def canonical_pairs(levels):
    """One representative per antipodal pair of non-central domain squares.

    Returns (square, half_tag) with half_tag the coordinate half-plane
    ("+im" or "+re") strictly containing the closed square; the partner
    square is its pointwise negation.
    """
    out = []
    for sq in domain_squares(levels):
        if sq.level == 1:
            continue
        if sq.cy > 0 or (sq.cy == 0 and sq.cx > 0):
            out.append((sq, "+im" if sq.cy > 0 else "+re"))
    return out


def locate(x, y, max_level):
    """Exact membership: ("domain", square) | ("unresolved",) | ("outside",).

    "unresolved" means the point is in no domain square through max_level;
    it sits in a peripheral cell (or on a cut line) at that depth.
    """
    if not (abs(x) < 1 and abs(y) < 1):
        return ("outside",)
    cx, cy = Fraction(0), Fraction(0)
    for lev in range(1, max_level + 1):
        h = Fraction(1, 3 ** (lev - 1))
        third = h / 3
        # digit in {-1, 0, 1} per axis relative to the current cell
        dx = _digit(x - cx, third)
        dy = _digit(y - cy, third)
        if dx is None or dy is None:
            return ("unresolved",)  # on a cut line
        if dx == 0 and dy == 0:
            return ("domain", CarpetSquare(cx, cy, lev))
        cx, cy = cx + 2 * dx * third, cy + 2 * dy * third
    return ("unresolved",)


def _digit(offset, third):
    if abs(offset) < third:
        return 0
    if third < offset < 3 * third:
        return 1
    if -3 * third < offset < -third:
        return -1
    return None


def locate_many(z, max_level):
    """Vectorized locator for float samples.

    Returns (level, center) arrays; level 0 marks unresolved-at-depth,
    level -1 marks outside the range.  Cut-line hits land in whichever
    cell floating-point rounding picks, which is fine for Monte Carlo.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real.copy(), z.imag.copy()
    level = np.zeros(z.shape, dtype=np.int64)
    center = np.zeros(z.shape, dtype=complex)
    outside = (np.abs(x) >= 1) | (np.abs(y) >= 1)
    level[outside] = -1
    active = ~outside
    cx = np.zeros_like(x)
    cy = np.zeros_like(y)
    for lev in range(1, max_level + 1):
        if not np.any(active):
            break
        third = 3.0 ** (-lev)
        dx = np.clip(np.round((x - cx) / (2 * third)), -1, 1)
        dy = np.clip(np.round((y - cy) / (2 * third)), -1, 1)
        hit = active & (dx == 0) & (dy == 0)
        level[hit] = lev
        center[hit] = cx[hit] + 1j * cy[hit]
        active = active & ~hit
        cx = cx + 2 * dx * third
        cy = cy + 2 * dy * third
    return level, center
