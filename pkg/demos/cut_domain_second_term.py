"""Second term for the gasket with its bottom edge removed.

The incidence matrix is (2), so the second term grows like x^{d/2} with
d = 2 log2 / log5.  The extracted profile G_D is non-positive and not zero.

Run: python3 demos/cut_domain_second_term.py
"""
import math

import numpy as np

from fractal_spectra.asymptotics import leading_profile, second_profile, verify_bracketing
from fractal_spectra.bgd import analyze, bgd_preset, domain_vertices
from fractal_spectra.forms import SelfSimilarMeasure, assemble_domain, sg_harmonic
from fractal_spectra.geometry import build_vertex_set, preset
from fractal_spectra.spectra import InertiaCounter, decimate_sg, solve_dense

T = math.log(5) / 2
d_S = 2 * math.log(3) / math.log(5)
sg, hs, mu = preset("sg"), sg_harmonic(), SelfSimilarMeasure.uniform(3)
sysb = bgd_preset("sg-cut-bottom")
an = analyze(sysb)
print(f"A = {an.A.tolist()}, Psi = {an.Psi}, d = {an.d:.6f}")

# counting recursion at matched levels n and n - 1
dense = {}
for n in (5, 6):
    vs = build_vertex_set(sg, n)
    free, bnd = domain_vertices(sysb, sg, 0, n)
    dense[n] = solve_dense(assemble_domain(hs, mu, vs, free, bnd, "D"), "D")
r = verify_bracketing([dense[6]], [dense[5]], decimate_sg(5, "D"), an.A, an.s,
                      1 / math.sqrt(5), 9, np.geomspace(10, 1e4, 601))
print(f"bracketing levels 5 -> 6: max |lhs| = {r.max_abs} against M = 9")

ic = InertiaCounter(sg, hs, mu, sysb.recursion_rules())
G = leading_profile(ic.counting("K", 36, "D", pin_ports=True), d_S, T,
                    (math.exp(30 * T), math.exp(36 * T)))
sp = second_profile([ic.counting("omega", 36, "D")], an, G, d_S, an.d, T,
                    (math.exp(16 * T), math.exp(32 * T)))
p = sp.per_domain[0]
print(f"G_D: min {p.min:.4f}, max {p.max:.2e}, fold residual {p.fold_residual:.1e}")
