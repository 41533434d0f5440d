import math

import numpy as np
import pytest
from scipy import sparse

from fractal_spectra.bgd import PRESETS, domain_vertices
from fractal_spectra.forms import LevelForm, assemble_domain, standard_form
from fractal_spectra.geometry import build_vertex_set, preset
from fractal_spectra.spectra import (DenseCapError, InertiaCounter, Spectrum,
                                     UnsupportedFractalError, decimate_sg, from_eigenvalues,
                                     partition_function, resolved_top, sg_counter, solve_dense,
                                     weyl_slope)

from conftest import D_S

LEVEL1 = Spectrum(np.array([15.0, 37.5]), np.array([1, 2]), "D")


def test_level1_dirichlet_dense(sg, hs, mu):
    sp = solve_dense(standard_form(sg, hs, mu, 1, "D"), "D")
    assert np.allclose(sp.values, [15.0, 37.5], rtol=1e-12)
    assert sp.multiplicities.tolist() == [1, 2]


def test_level0_neumann_dense(sg, hs, mu):
    sp = solve_dense(standard_form(sg, hs, mu, 0, "N"), "N")
    assert sp.zero_multiplicity == 1
    assert np.allclose(sp.values, [9.0]) and sp.multiplicities.tolist() == [2]


def test_single_vertex():
    vs = build_vertex_set(preset("sg"), 0)
    form = LevelForm(0, vs, np.array([0]), sparse.csr_matrix([[6.0]]), np.array([0.5]),
                     frozenset())
    assert solve_dense(form).values == pytest.approx([12.0], rel=1e-14)


def test_dense_cap(sg, hs, mu):
    with pytest.raises(DenseCapError, match="decimate"):
        solve_dense(standard_form(sg, hs, mu, 3, "D"), cap=10)


def test_solver_rejects_bad_input(sg, hs, mu):
    form = standard_form(sg, hs, mu, 1, "D")
    bad = LevelForm(1, form.vertex_set, form.free, form.stiffness * np.nan, form.mass,
                    form.constrained)
    with pytest.raises(ValueError):
        solve_dense(bad)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("bc", ["D", "N"])
def test_decimation_matches_dense(sg, hs, mu, m, bc):
    dense = solve_dense(standard_form(sg, hs, mu, m, bc), bc)
    dec = decimate_sg(m, bc)
    assert dense.multiplicities.tolist() == dec.multiplicities.tolist()
    assert np.allclose(dense.values, dec.values, rtol=1e-8, atol=0)
    assert dense.zero_multiplicity == dec.zero_multiplicity


def test_decimation_counts():
    assert decimate_sg(1, "D").eigenvalues().tolist() == [15.0, 37.5, 37.5]
    assert decimate_sg(4, "D").total == (3 ** 5 - 3) // 2 == 120
    assert decimate_sg(2, "N").total == 15


def test_decimation_errors(sg):
    with pytest.raises(UnsupportedFractalError):
        decimate_sg(2, "D", preset("snowflake"))
    assert decimate_sg(2, "D", sg).total == 12
    with pytest.raises(ValueError):
        decimate_sg(0, "D")
    with pytest.raises(ValueError):
        decimate_sg(2, "X")


def test_count_examples():
    assert LEVEL1.count(20) == 1
    assert LEVEL1.count(37.5) == 3
    assert LEVEL1.count(14.999) == 0
    assert LEVEL1.count([10, 15, 40]).tolist() == [0, 1, 3]


def test_partition_examples():
    one = Spectrum(np.array([1.0]), np.array([1]), "D")
    assert partition_function(one, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert partition_function(LEVEL1, 0.1) == pytest.approx(
        math.exp(-1.5) + 2 * math.exp(-3.75), rel=1e-15)
    with pytest.raises(ValueError):
        partition_function(LEVEL1, 0.0)


def test_partition_matches_stieltjes_integral():
    # Z(t) = t * integral of exp(-t x) rho(x) dx
    t = 0.05
    x = np.linspace(0, 2000, 2_000_001)
    integral = np.trapezoid(np.exp(-t * x) * LEVEL1.count(x), x)
    # trapezoid error at the jumps is O(step)
    assert t * integral == pytest.approx(partition_function(LEVEL1, t), rel=1e-4)


def test_heat_trace_slope():
    # two whole log-5 periods of t keep the oscillation out of the fit
    sp = decimate_sg(6, "D")
    t = np.geomspace(1e-4, 2.5e-3, 200)
    slope = np.polyfit(-np.log(t), np.log(partition_function(sp, t)), 1)[0]
    assert abs(slope - D_S / 2) < 0.03


def test_weyl_slope_level6():
    sp = decimate_sg(6, "D")
    assert abs(weyl_slope(sp, resolved_top(sp, 3)) - D_S / 2) < 0.02


@pytest.mark.parametrize("n", [3, 4, 5])
def test_dirichlet_neumann_interlacing(n):
    D, N = decimate_sg(n, "D"), decimate_sg(n, "N")
    # min-max compares the k-th eigenvalues with the Neumann zero mode included
    x = np.geomspace(1, 10 * N.values[-1], 3000)
    assert np.all(N.count(x) + N.zero_multiplicity >= D.count(x))
    # without it the first Dirichlet eigenvalue already breaks the inequality
    x1 = (D.values[0] + N.values[0]) / 2
    assert N.count(x1) < D.count(x1)


def test_from_eigenvalues_merging():
    sp = from_eigenvalues([0.0, 1e-14, 1.0, 1.0 + 1e-12, 2.0], "N")
    assert sp.zero_multiplicity == 2
    assert sp.multiplicities.tolist() == [2, 1]
    with pytest.raises(ValueError):
        from_eigenvalues([-1.0, 1.0], "D")
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]), np.array([1, 1]), "D")


def test_csv_export():
    text = LEVEL1.to_csv()
    assert text == "value,multiplicity\n15,1\n37.5,2\n"


def _midpoints(sp):
    v = sp.values
    return np.concatenate([[v[0] / 2], (v[:-1] + v[1:]) / 2, [2 * v[-1]]])


@pytest.mark.parametrize("name", [k for k, s in PRESETS.items() if s.geometric])
def test_inertia_matches_dense(sg, hs, mu, name):
    sysb = PRESETS[name]
    ic = InertiaCounter(sg, hs, mu, sysb.recursion_rules())
    for n in (3, 4):
        vs = build_vertex_set(sg, n)
        for i, dom in enumerate(sysb.domains):
            free, bnd = domain_vertices(sysb, sg, i, n)
            if len(free) == 0:
                continue
            for bc in "DN":
                sp = solve_dense(assemble_domain(hs, mu, vs, free, bnd, bc), bc)
                x = _midpoints(sp)
                dense = sp.count(x) + sp.zero_multiplicity
                assert np.array_equal(ic.count_below(dom.name, n, x, bc), dense), (dom.name, n, bc)


@pytest.mark.parametrize("bc", ["D", "N"])
def test_inertia_whole_sg_matches_decimation(bc):
    ic = sg_counter()
    for n in (5, 7):
        sp = decimate_sg(n, bc)
        x = _midpoints(sp)
        got = ic.counting("K", n, bc, pin_ports=(bc == "D"))(x)
        assert np.array_equal(got, sp.count(x))


def test_inertia_deep_levels_agree_at_low_periods():
    # levels 20 and 30 resolve the first periods identically
    ic = sg_counter()
    x = np.exp(2 * np.linspace(1, 6, 400) * math.log(5) / 2) * 1.0001
    a = ic.counting("K", 20, "D", pin_ports=True)(x)
    b = ic.counting("K", 30, "D", pin_ports=True)(x)
    assert np.array_equal(a, b)


def test_inertia_rejects_bad_input():
    ic = sg_counter()
    with pytest.raises(ValueError):
        ic.count_below("K", 3, [1.0], "X")
    with pytest.raises(ValueError):
        ic.count_below("K", 3, [0.0])
