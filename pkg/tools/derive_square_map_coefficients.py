"""Derive the frozen constants behind the square-to-disk Riemann map.

The conformal map phi of the open square (-1,1)^2 onto the unit disk with
phi(0)=0 and phi'(0)>0 is lemniscatic:

    phi(x)   = e^{i pi/4} * sl(e^{-i pi/4} x / C),
    phi^{-1}(w) = C * integral_0^w dt / sqrt(1 + t^4),

where sl is the lemniscate sine (sl' = sqrt(1 - sl^4), sl(0)=0) and the
accessory constant C = 1 / integral_0^1 dt/sqrt(1+t^4) normalises the
half-side of the image square of phi^{-1} to 1.  Since sl is odd with
four-fold rotational symmetry, phi(x) = sum_m a_m x^{4m+1} with real
coefficients

    a_m = (-1)^m s_m / C^{4m+1},        sl(u) = sum_m s_m u^{4m+1}.

The s_m are computed by the exact rational recurrence coming from
sl'' = -2 sl^3, then cross-checked against mpmath's Jacobi elliptic
function sn(u, m=-1), which satisfies the same ODE.

Run:  python tools/derive_square_map_coefficients.py
Paste the printed tables into src/boxmap/analytic.py.
"""

from fractions import Fraction

import mpmath as mp

N_TERMS = 30  # coefficients a_0 .. a_{N_TERMS-1}, degree 4*29+1 = 117


def sl_series_coefficients(n_powers):
    """Exact Taylor coefficients of sl via sl'' = -2 sl^3."""
    deg = 4 * (n_powers - 1) + 2
    c = [Fraction(0)] * (deg + 2)
    c[1] = Fraction(1)
    cube = [Fraction(0)] * (deg + 2)
    for n in range(1, deg):
        # coefficient of u^n in s^3, using c[0..n] already final
        acc = Fraction(0)
        for i in range(0, n + 1):
            if c[i] == 0:
                continue
            for j in range(0, n - i + 1):
                if c[j] == 0:
                    continue
                k = n - i - j
                acc += c[i] * c[j] * c[k]
        cube[n] = acc
        c[n + 2] = Fraction(-2) * acc / ((n + 2) * (n + 1))
    return [c[4 * m + 1] for m in range(n_powers)]


def main():
    mp.mp.dps = 50

    inv_c = mp.quad(lambda t: 1 / mp.sqrt(1 + t ** 4), [0, 1])
    big_c = 1 / inv_c

    # Sanity: vertex integral along e^{i pi/4} must give half-diagonal sqrt(2).
    lemni = mp.quad(lambda s: 1 / mp.sqrt(1 - s ** 4), [0, 1])
    assert abs(big_c * lemni - mp.sqrt(2)) < mp.mpf(10) ** (-24), big_c * lemni

    s_m = sl_series_coefficients(N_TERMS)

    # Cross-check the rational series against mpmath's sn(u, m=-1).
    def sl_ref(u):
        return mp.ellipfun("sn", u, -1)

    for u in (mp.mpf("0.3"), mp.mpf("0.9"), mp.mpf("0.25") + mp.mpf("0.4") * mp.mpc(0, 1)):
        series = sum(mp.mpf(q.numerator) / q.denominator * u ** (4 * m + 1)
                     for m, q in enumerate(s_m))
        assert abs(series - sl_ref(u)) < mp.mpf(10) ** (-24), (u, series - sl_ref(u))

    # Nearest pole of sl sits at (1+i)*lemni, pulling phi's poles to +-2, +-2i.
    assert abs(big_c * lemni * mp.sqrt(2) - 2) < mp.mpf(10) ** (-24)

    a_m = [mp.mpf((-1) ** m) * (mp.mpf(q.numerator) / q.denominator) / big_c ** (4 * m + 1)
           for m, q in enumerate(s_m)]

    # Spot-check phi against the forward integral phi^{-1}.
    for x in (mp.mpf("0.5"), mp.mpf("0.99"), mp.mpf("0.7") + mp.mpf("0.7") * mp.mpc(0, 1)):
        w = sum(a * x ** (4 * m + 1) for m, a in enumerate(a_m))
        back = big_c * mp.quad(lambda t: 1 / mp.sqrt(1 + t ** 4), [0, w])
        assert abs(back - x) < mp.mpf(10) ** (-20), (x, back - x)

    # Corner check: phi(1+1i) should land on the unit circle.
    corner = mp.mpf(1) + mp.mpc(0, 1)
    w = sum(a * corner ** (4 * m + 1) for m, a in enumerate(a_m))
    print("# |phi(1+1i)| - 1 =", mp.nstr(abs(w) - 1, 5))
    print("# truncation at the corner, last term:",
          mp.nstr(abs(a_m[-1] * corner ** (4 * (N_TERMS - 1) + 1)), 5))

    print()
    print("SQUARE_TO_DISK_SCALE = %s" % mp.nstr(big_c, 19))
    print()
    print("SQUARE_TO_DISK_COEFFS = np.array([")
    for a in a_m:
        print("    %s," % mp.nstr(a, 19))
    print("])")


if __name__ == "__main__":
    main()
