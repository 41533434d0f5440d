"""Whole-gasket Dirichlet spectrum: Weyl exponent and the periodic factor G.

Run: python3 demos/sg_weyl_profile.py
"""
import math

from fractal_spectra.asymptotics import heat_trace_transform, leading_profile
from fractal_spectra.spectra import decimate_sg, resolved_top, sg_counter, weyl_slope

T = math.log(5) / 2
d_S = 2 * math.log(3) / math.log(5)

sp = decimate_sg(8, "D")
print(f"level 8: {sp.total} eigenvalues, {len(sp.values)} distinct")
slope = weyl_slope(sp, resolved_top(sp, 3))
print(f"log-log slope of the counting function: {slope:.4f} (d_S/2 = {d_S / 2:.4f})")

# deep counts come from the inertia counter, far beyond any dense solve
rho = sg_counter().counting("K", 30, "D", pin_ports=True)
G = leading_profile(rho, d_S, T, (math.exp(2 * 9 * T), math.exp(2 * 12 * T)))
print(f"G over one period: min {G.min:.4f}, max {G.max:.4f}, fold residual {G.fold_residual:.1e}")

t = [1e-4, 2e-4, 4e-4]
for tv, z, h in zip(t, sp.partition_function(t), heat_trace_transform(G, d_S, t)):
    print(f"t = {tv:.0e}: Z_D = {z:.2f}, transform of G = {h:.2f}")
