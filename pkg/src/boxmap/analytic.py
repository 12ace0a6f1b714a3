"""Analytic branch maps as small expression trees.

Every branch of a box mapping is assembled from a handful of primitives:
affine maps, powers, polynomials, disk automorphisms, the Riemann map of
the square onto the disk, and compositions.  Two extra nodes (`EvenHalf`,
`OddHalfSquared`) express maps conjugated through z^2 whose symmetry makes
the square-root choice irrelevant; they are needed by the Lattes example.

All nodes evaluate on scalars or numpy arrays of complex numbers.  Nodes
built with real parameters commute with complex conjugation, which the
geometric constructions rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AnalyticMap", "Affine", "Power", "Polynomial", "DiskAutomorphism",
    "SquareToDisk", "DiskToSquare", "Compose", "EvenHalf", "OddHalfSquared",
    "inverse_branch", "map_to_json", "map_from_json",
    "DomainError", "NoConvergence", "NearCritical",
    "NEWTON_TOL", "NEWTON_MAX_STEPS", "CRITICAL_GUARD_RADIUS",
]

# Central numerical contract constants.  Newton tolerance is relative to
# the target magnitude; the guard radius protects branch continuation from
# silently crossing a critical point.
NEWTON_TOL = 1e-11
NEWTON_MAX_STEPS = 60
CRITICAL_GUARD_RADIUS = 1e-8


class DomainError(ValueError):
    """A stage of a composition received a point outside its domain."""


class NoConvergence(ArithmeticError):
    """Newton iteration failed to meet tolerance within the step budget."""


class NearCritical(ArithmeticError):
    """An inverse branch passed within the guard radius of a critical point."""


# --------------------------------------------------------------------------
# The square <-> disk Riemann map.
#
# phi: (-1,1)^2 -> D with phi(0)=0, phi'(0)>0 is lemniscatic,
#     phi(x) = sum_m a_m x^{4m+1},
# with real a_m frozen below; the series has radius 2 (poles of the
# continued map at +-2, +-2i), so 30 terms give ~1e-17 on the closed
# square.  The inverse is the Schwarz-Christoffel integral
#     phi^{-1}(w) = C * integral_0^w dt/sqrt(1+t^4),
# evaluated by its Taylor series plus a Newton polish on phi.
# Derivation and cross-checks: tools/derive_square_map_coefficients.py.

SQUARE_TO_DISK_SCALE = 1.078705202376758713

SQUARE_TO_DISK_COEFFS = np.array([
    0.9270373386506859592,
    0.06846776221876989479,
    0.004213992852820446527,
    0.0002633492188752113068,
    0.00001645974314221068509,
    1.028733476603995366e-6,
    6.429584031319946649e-8,
    4.018490025255095259e-9,
    2.511556265828158002e-10,
    1.56972266613843532e-11,
    9.810766663365530263e-13,
    6.131729164603478102e-14,
    3.832330727877173317e-15,
    2.395206704923233316e-16,
    1.497004190577020823e-17,
    9.356276191106380144e-19,
    5.84767261944148759e-20,
    3.654795387150929744e-21,
    2.28424711696933109e-22,
    1.427654448105831931e-23,
    8.92284030066144957e-25,
    5.576775187913405981e-26,
    3.485484492445878738e-27,
    2.178427807778674211e-28,
    1.361517379861671382e-29,
    8.509483624135446139e-31,
    5.318427265084653837e-32,
    3.324017040677908648e-33,
    2.077510650423692905e-34,
    1.298444156514808066e-35,
])

_SQ_DERIV_COEFFS = SQUARE_TO_DISK_COEFFS * (4 * np.arange(30) + 1)


def _phi_eval(x):
    y = x ** 4
    acc = np.zeros_like(y)
    for a in SQUARE_TO_DISK_COEFFS[::-1]:
        acc = acc * y + a
    return x * acc


def _phi_deriv(x):
    y = x ** 4
    acc = np.zeros_like(y)
    for a in _SQ_DERIV_COEFFS[::-1]:
        acc = acc * y + a
    return acc


_ARCSL_N = 4000
_k = np.arange(_ARCSL_N, dtype=float)
# binom(-1/2, k) * (-1)^0 pattern: alternating central-binomial weights.
_ARCSL_COEFFS = np.cumprod(np.concatenate(([1.0], -(2 * _k[1:] - 1) / (2 * _k[1:]))))
_ARCSL_COEFFS = SQUARE_TO_DISK_SCALE * _ARCSL_COEFFS / (4 * _k + 1)
del _k


def _phi_inverse(w):
    """phi^{-1} on the open disk: truncated integral series + Newton polish."""
    w = np.asarray(w, dtype=complex)
    r = np.max(np.abs(w)) if w.size else 0.0
    if r > 1 + 1e-12:
        raise DomainError("disk-to-square map evaluated outside the closed disk")
    r4 = min(r, 0.999995) ** 4
    n = _ARCSL_N if r4 > 0.9999 else min(_ARCSL_N, max(8, int(-40.0 / np.log(r4 + 1e-300)) + 1))
    y = w ** 4
    acc = np.zeros_like(y)
    for a in _ARCSL_COEFFS[n - 1::-1]:
        acc = acc * y + a
    s = w * acc
    for _ in range(8):
        resid = _phi_eval(s) - w
        if np.max(np.abs(resid)) <= 1e-13:
            break
        d = _phi_deriv(s)
        d = np.where(np.abs(d) < 1e-14, 1e-14, d)
        s = s - resid / d
    return s


# --------------------------------------------------------------------------
# Node classes.


class AnalyticMap:
    """Base class; subclasses implement eval, deriv, critical_points."""

    def eval(self, z):
        raise NotImplementedError

    def deriv(self, z):
        raise NotImplementedError

    def critical_points(self):
        """Critical points of this primitive (not of a whole composition)."""
        return []

    def __call__(self, z):
        return self.eval(z)


@dataclass(frozen=True)
class Affine(AnalyticMap):
    """z -> a*z + b, a != 0."""

    a: complex
    b: complex

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("degenerate affine map")

    def eval(self, z):
        return self.a * z + self.b

    def deriv(self, z):
        return self.a * np.ones_like(np.asarray(z, dtype=complex)) if np.ndim(z) else self.a


@dataclass(frozen=True)
class Power(AnalyticMap):
    """z -> z^d for integer d >= 1; critical at 0 when d >= 2."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("power degree must be >= 1")

    def eval(self, z):
        return z ** self.d

    def deriv(self, z):
        return self.d * z ** (self.d - 1) if self.d > 1 else (
            np.ones_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 1.0 + 0j)

    def critical_points(self):
        return [0j] if self.d >= 2 else []


@dataclass(frozen=True)
class Polynomial(AnalyticMap):
    """Polynomial with coefficients in ascending order: c0 + c1 z + ..."""

    coeffs: tuple

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in coeffs))
        if len(self.coeffs) < 2 or self.coeffs[-1] == 0:
            raise ValueError("polynomial must have degree >= 1 with nonzero top coefficient")

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def eval(self, z):
        acc = np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def deriv(self, z):
        acc = np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0j
        for k in range(self.degree, 0, -1):
            acc = acc * z + k * self.coeffs[k]
        return acc

    def critical_points(self):
        dcoef = [k * self.coeffs[k] for k in range(1, len(self.coeffs))]
        if len(dcoef) == 1:
            return []
        roots = np.roots(dcoef[::-1])
        return [complex(r) for r in roots]


@dataclass(frozen=True)
class DiskAutomorphism(AnalyticMap):
    """m_a(z) = (z - a) / (1 - a z) for real a in (-1, 1)."""

    a: float

    def __post_init__(self):
        if not (-1.0 < float(self.a) < 1.0):
            raise ValueError("disk automorphism parameter must lie in (-1, 1)")

    def eval(self, z):
        den = 1.0 - self.a * z
        self._pole_guard(den)
        return (z - self.a) / den

    def deriv(self, z):
        den = 1.0 - self.a * z
        self._pole_guard(den)
        return (1.0 - self.a * self.a) / (den * den)

    @staticmethod
    def _pole_guard(den):
        if np.min(np.abs(den)) < 1e-14:
            raise DomainError("disk automorphism evaluated at its pole")

    def inverse(self):
        return DiskAutomorphism(-self.a)


@dataclass(frozen=True)
class SquareToDisk(AnalyticMap):
    """The Riemann map phi of (-1,1)^2 onto the unit disk, phi(0)=0.

    Real-symmetric and odd; evaluated by the frozen lemniscatic series,
    which is valid on the closed square (boundary included).
    """

    def eval(self, z):
        z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
        m = np.max(np.maximum(np.abs(np.real(z)), np.abs(np.imag(z))))
        if m > 1 + 1e-9:
            raise DomainError("square-to-disk map evaluated outside the closed square")
        return _phi_eval(z)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
        m = np.max(np.maximum(np.abs(np.real(z)), np.abs(np.imag(z))))
        if m > 1 + 1e-9:
            raise DomainError("square-to-disk map evaluated outside the closed square")
        return _phi_deriv(z)


@dataclass(frozen=True)
class DiskToSquare(AnalyticMap):
    """Inverse Riemann map, unit disk onto (-1,1)^2; single-valued."""

    def eval(self, z):
        return _phi_inverse(z)

    def deriv(self, z):
        z = np.asarray(z, dtype=complex)
        if np.max(np.abs(z)) > 1 + 1e-12:
            raise DomainError("disk-to-square map evaluated outside the closed disk")
        # d/dw phi^{-1} = C / sqrt(1 + w^4); 1 + w^4 has positive real part
        # on the disk, so the principal branch is the right one.
        return SQUARE_TO_DISK_SCALE / np.sqrt(1.0 + z ** 4)


@dataclass(frozen=True)
class Compose(AnalyticMap):
    """Compose(maps) applies maps right to left: Compose([f, g]) = f o g."""

    maps: tuple

    def __init__(self, maps):
        object.__setattr__(self, "maps", tuple(maps))
        if not self.maps:
            raise ValueError("empty composition")

    def eval(self, z):
        for m in self.maps[::-1]:
            z = m.eval(z)
        return z

    def deriv(self, z):
        acc = 1.0 + 0j
        for m in self.maps[::-1]:
            acc = acc * m.deriv(z)
            z = m.eval(z)
        return acc

    def critical_points(self):
        # Only the first applied stage contributes enumerable points in the
        # source plane; upstream critical points would need preimages.
        return list(self.maps[-1].critical_points())


@dataclass(frozen=True)
class EvenHalf(AnalyticMap):
    """u -> inner(sqrt(u)) for an inner map even under t -> -t.

    Either square root gives the same value; `half` optionally names a
    half-plane ("+re", "-re", "+im", "-im") and the root is flipped into
    it, so `inner` only ever sees arguments on its own side.  Without a
    selector the principal root is used.
    """

    inner: AnalyticMap
    half: str = ""

    def _root(self, z):
        scalar = not np.ndim(z)
        t = np.sqrt(np.asarray(z, dtype=complex))
        if self.half:
            comp = t.imag if self.half[1:] == "im" else t.real
            flip = comp < 0 if self.half[0] == "+" else comp > 0
            t = np.where(flip, -t, t)
        return complex(t) if scalar else t

    def eval(self, z):
        return self.inner.eval(self._root(z))

    def deriv(self, z):
        t = self._root(z)
        if np.min(np.abs(t)) < 1e-12:
            raise NearCritical("even-half branch differentiated at the puncture")
        return self.inner.deriv(t) / (2.0 * t)


@dataclass(frozen=True)
class OddHalfSquared(AnalyticMap):
    """u -> inner(sqrt(u))^2 for an odd analytic inner map.

    Single-valued for either root; extends analytically through u = 0
    with value 0 and derivative inner'(0)^2.
    """

    inner: AnalyticMap

    def eval(self, z):
        scalar = not np.ndim(z)
        z = np.asarray(z, dtype=complex)
        t = np.sqrt(z)
        v = self.inner.eval(t) ** 2
        tiny = np.abs(z) < 1e-24
        if np.any(tiny):
            d0 = complex(self.inner.deriv(0j)) ** 2
            v = np.where(tiny, d0 * z, v)
        return complex(v) if scalar else v

    def deriv(self, z):
        scalar = not np.ndim(z)
        z = np.asarray(z, dtype=complex)
        t = np.sqrt(z)
        safe = np.where(np.abs(t) < 1e-12, 1.0, t)
        v = self.inner.eval(safe) * self.inner.deriv(safe) / safe
        tiny = np.abs(z) < 1e-24
        if np.any(tiny):
            d0 = complex(self.inner.deriv(0j)) ** 2
            v = np.where(tiny, d0, v)
        return complex(v) if scalar else v


# --------------------------------------------------------------------------
# Inverse branches.


def _nearest_root(cands, seed):
    """Per-point choice among candidate preimages: cands is (k, n), seed (n,)."""
    dist = np.abs(cands - seed[None, :])
    pick = np.argmin(dist, axis=0)
    return cands[pick, np.arange(cands.shape[1])]


def _newton_inverse(m, w, seed):
    """Damped Newton for m(z) = w from seed, with the critical guard."""
    scalar = not np.ndim(w)
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    z = np.atleast_1d(np.asarray(seed, dtype=complex)) * np.ones_like(w)
    crit = np.array(m.critical_points(), dtype=complex)
    tol = NEWTON_TOL * (1.0 + np.abs(w))

    def guard(pts):
        if crit.size and np.min(np.abs(pts[:, None] - crit[None, :])) < CRITICAL_GUARD_RADIUS:
            raise NearCritical("inverse branch entered the critical guard radius")

    resid = np.abs(m.eval(z) - w)
    for _ in range(NEWTON_MAX_STEPS):
        if np.all(resid <= tol):
            break
        guard(z)
        d = m.deriv(z)
        d = np.where(np.abs(d) < 1e-300, 1e-300, d)
        step = (m.eval(z) - w) / d
        # step-halving damping: never accept a step that grows the residual
        znew, rnew = z - step, None
        for _ in range(25):
            znew = z - step
            rnew = np.abs(m.eval(znew) - w)
            worse = (rnew > resid) & (resid > tol)
            if not np.any(worse):
                break
            step = np.where(worse, step / 2.0, step)
        z, resid = znew, rnew
    if not np.all(resid <= tol):
        raise NoConvergence("Newton inverse did not meet tolerance in %d steps" % NEWTON_MAX_STEPS)
    guard(z)
    return complex(z[0]) if scalar else z


def inverse_branch(m, w, seed):
    """Point z near the branch through seed with m(z) = w.

    Closed forms are used wherever the primitive admits one; Newton with
    step-halving otherwise.  Raises NoConvergence or NearCritical.
    """
    scalar = not np.ndim(w)
    if isinstance(m, Affine):
        return (w - m.b) / m.a
    if isinstance(m, DiskAutomorphism):
        return m.inverse().eval(w)
    if isinstance(m, Power):
        if m.d == 1:
            return w
        w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
        if np.min(np.abs(w_arr)) < CRITICAL_GUARD_RADIUS ** m.d:
            raise NearCritical("root extraction at the critical value")
        base = w_arr ** (1.0 / m.d)
        rot = np.exp(2j * np.pi * np.arange(m.d) / m.d)
        z = _nearest_root(base[None, :] * rot[:, None], np.atleast_1d(np.asarray(seed, dtype=complex)))
        return complex(z[0]) if scalar else z
    if isinstance(m, Polynomial) and m.degree == 2:
        c0, c1, c2 = m.coeffs
        w_arr = np.atleast_1d(np.asarray(w, dtype=complex))
        disc = np.sqrt(c1 * c1 - 4.0 * c2 * (c0 - w_arr))
        roots = np.stack([(-c1 + disc) / (2.0 * c2), (-c1 - disc) / (2.0 * c2)])
        z = _nearest_root(roots, np.atleast_1d(np.asarray(seed, dtype=complex)))
        zc = -c1 / (2.0 * c2)
        if np.min(np.abs(z - zc)) < CRITICAL_GUARD_RADIUS:
            raise NearCritical("quadratic inverse inside the critical guard radius")
        return complex(z[0]) if scalar else z
    if isinstance(m, SquareToDisk):
        return _phi_inverse(w) if not scalar else complex(_phi_inverse(w))
    if isinstance(m, DiskToSquare):
        sq = SquareToDisk()
        return sq.eval(w)
    if isinstance(m, Compose):
        # invert stage by stage, propagating seeds through forward images
        seeds = [seed]
        for stage in m.maps[::-1][:-1]:
            seeds.append(stage.eval(seeds[-1]))
        z = w
        for stage, s in zip(m.maps, seeds[::-1]):
            z = inverse_branch(stage, z, s)
        return z
    return _newton_inverse(m, w, seed)


# --------------------------------------------------------------------------
# Serialization: nested tagged objects, bit-exact float round-trip.


def _c2j(z):
    z = complex(z)
    return [z.real, z.imag]


def _j2c(v):
    return complex(v[0], v[1])


def map_to_json(m):
    if isinstance(m, Affine):
        return {"kind": "affine", "a": _c2j(m.a), "b": _c2j(m.b)}
    if isinstance(m, Power):
        return {"kind": "power", "d": m.d}
    if isinstance(m, Polynomial):
        return {"kind": "polynomial", "coeffs": [_c2j(c) for c in m.coeffs]}
    if isinstance(m, DiskAutomorphism):
        return {"kind": "disk_automorphism", "a": float(m.a)}
    if isinstance(m, SquareToDisk):
        return {"kind": "square_to_disk"}
    if isinstance(m, DiskToSquare):
        return {"kind": "disk_to_square"}
    if isinstance(m, EvenHalf):
        return {"kind": "even_half", "inner": map_to_json(m.inner), "half": m.half}
    if isinstance(m, OddHalfSquared):
        return {"kind": "odd_half_squared", "inner": map_to_json(m.inner)}
    if isinstance(m, Compose):
        return {"kind": "compose", "maps": [map_to_json(s) for s in m.maps]}
    raise TypeError("unknown analytic map node: %r" % (m,))


def map_from_json(obj):
    kind = obj["kind"]
    if kind == "affine":
        return Affine(_j2c(obj["a"]), _j2c(obj["b"]))
    if kind == "power":
        return Power(obj["d"])
    if kind == "polynomial":
        return Polynomial([_j2c(c) for c in obj["coeffs"]])
    if kind == "disk_automorphism":
        return DiskAutomorphism(obj["a"])
    if kind == "square_to_disk":
        return SquareToDisk()
    if kind == "disk_to_square":
        return DiskToSquare()
    if kind == "even_half":
        return EvenHalf(map_from_json(obj["inner"]), obj.get("half", ""))
    if kind == "odd_half_squared":
        return OddHalfSquared(map_from_json(obj["inner"]))
    if kind == "compose":
        return Compose([map_from_json(s) for s in obj["maps"]])
    raise ValueError("unknown analytic map kind: %r" % (kind,))
