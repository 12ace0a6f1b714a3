"""Derive the real Fibonacci quadratic parameter by return-time bisection.

The principal nest of x^2 + c on the real line starts from the interval
(alpha, -alpha) around the critical point, alpha the orientation-reversing
fixed point.  Each level is the pullback of the previous one along the
critical orbit at its first return time.  Fibonacci combinatorics means the
return-time sequence is 3, 5, 8, 13, ... (consecutive sums); this script
finds the unique real parameter realizing that prefix by shrinking a
bracket around the set of parameters matching ever longer prefixes.

Run:  python3 tools/derive_fibonacci_parameter.py [--levels N] [--digits D]
The derived value is frozen in src/boxmap/params.py as FIBONACCI_C.
"""

import argparse
import math


def principal_return_times(c, n_levels, horizon=None):
    """Return times of the real principal nest at parameter c.

    Stops early (returning a short list) when the orbit escapes the nest
    or the horizon is exhausted; callers compare prefixes.
    """
    if horizon is None:
        horizon = max(400, 8 * fibonacci_targets(n_levels)[-1])
    disc = 1.0 - 4.0 * c
    if disc <= 0.0:
        return []
    alpha = (1.0 - math.sqrt(disc)) / 2.0
    if alpha >= 0.0:
        return []
    w = -alpha
    orbit = [0.0]
    x = 0.0
    for _ in range(horizon):
        x = x * x + c
        orbit.append(x)
        if abs(x) > 2.0 + 1e-9:
            break
    times = []
    start = 1
    for _ in range(n_levels):
        p = None
        for n in range(start, len(orbit)):
            if abs(orbit[n]) < w:
                p = n
                break
        if p is None:
            break
        # pull (-w, w) back along the orbit; intervals stay symmetric only
        # at the last (critical) step, so track both endpoints
        lo, hi = -w, w
        ok = True
        for j in range(p - 1, 0, -1):
            # preimage through the monotone branch containing orbit[j]
            if hi - c < 0.0:
                ok = False
                break
            r_hi = math.sqrt(hi - c)
            r_lo = math.sqrt(max(lo - c, 0.0)) if lo - c > 0.0 else 0.0
            if orbit[j] >= 0.0:
                lo, hi = r_lo, r_hi
            else:
                lo, hi = -r_hi, -r_lo
            if not (lo < orbit[j] < hi):
                ok = False
                break
        if not ok:
            break
        if hi - c < 0.0:
            break
        w = math.sqrt(hi - c)
        times.append(p)
        start = 1
    return times


def fibonacci_targets(n):
    seq = [3, 5]
    while len(seq) < n:
        seq.append(seq[-1] + seq[-2])
    return seq[:n]


def derive(n_levels=10, grid=64, tol=1e-14, max_grid=1 << 16):
    lo, hi = -2.0, -1.5
    target = fibonacci_targets(n_levels)
    for k in range(1, n_levels + 1):
        want = target[:k]
        g = grid
        while hi - lo >= tol:
            step = (hi - lo) / g
            hits = [i for i in range(g + 1)
                    if principal_return_times(lo + i * step, k)[:k] == want]
            if not hits:
                # matching window narrower than the grid step; refine
                g *= 4
                if g > max_grid:
                    raise RuntimeError(
                        "no parameter matches return times %s in [%.17g, %.17g]"
                        % (want, lo, hi))
                continue
            new_lo = lo + max(0, hits[0] - 1) * step
            new_hi = lo + min(g, hits[-1] + 1) * step
            shrunk = (new_hi - new_lo) < 0.75 * (hi - lo)
            lo, hi = new_lo, new_hi
            if not shrunk:
                break
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi), (lo, hi)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=10)
    ap.add_argument("--digits", type=int, default=17)
    args = ap.parse_args()
    c, bracket = derive(args.levels)
    times = principal_return_times(c, args.levels + 2)
    print("FIBONACCI_C = %.*g" % (args.digits, c))
    print("bracket width = %.3g" % (bracket[1] - bracket[0]))
    print("realized return times:", times)
    print("fibonacci targets    :", fibonacci_targets(len(times)))


if __name__ == "__main__":
    main()
