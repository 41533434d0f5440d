"""Vector renewal sum with a period-2 matrix and its periodic limit.

Run: python3 demos/renewal_periodic.py
"""
import math

import numpy as np

from fractal_spectra.asymptotics import RenewalSystem, renewal_limit

T = math.log(5) / 2
b = 1.3 * T
z = [lambda x: np.where(x < b, np.sin(math.pi * x / b) ** 2, 0.0),
     lambda x: 0.5 * np.where(x < b, np.sin(math.pi * x / b) ** 2, 0.0)]
rs = RenewalSystem.from_functions([[0, 2], [1, 0]], T, z, b, psi=math.sqrt(2))
for periods in (10, 20, 40, 60):
    lim = renewal_limit(rs, periods * T)
    print(f"horizon {periods:>2} T: deviation {lim.deviation:.2e}, "
          f"residual {lim.trace.residual:.1e}")
print("B =", np.array2string(lim.B, precision=6), " varrho =", lim.varrho)
