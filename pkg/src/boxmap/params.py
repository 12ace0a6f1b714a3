"""Frozen numerical constants derived by the scripts in tools/.

Each constant records the tool that produced it; rerunning the tool must
reproduce the value to well under the tolerance of any test that uses it.
"""

# Modulus of the annulus between concentric squares of sides 2 and 6.
# tools/derive_modulus_oracle.py: capacity solves at 256/512/1024 with
# Richardson extrapolation; 512->1024 extrapolant and raw 1024 agree to
# about 1e-4 relative.
M_SQUARE_RATIO3 = 0.1615015

# Real quadratic parameter with Fibonacci return-time combinatorics in its
# principal nest (return times 3, 5, 8, 13, ...).
# tools/derive_fibonacci_parameter.py: prefix bisection on the realized
# return-time sequence; bracket width 3.3e-15, nine levels confirmed.
FIBONACCI_C = -1.8705286321646444
