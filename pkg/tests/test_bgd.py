import math
from fractions import Fraction as F

import numpy as np
import pytest

from fractal_spectra.bgd import (PRESETS, BgdSystem, ConsistencyError, Domain, analyze,
                                 bgd_consistency, bgd_preset, boundary_measure, domain_vertices,
                                 incidence_matrix, load_system, perron_data, whitney,
                                 whitney_predicate)
from fractal_spectra.geometry import build_vertex_set

GEOMETRIC = [k for k, s in PRESETS.items() if s.geometric]


def test_incidence_examples():
    assert incidence_matrix(PRESETS["sg-cut-bottom"]).tolist() == [[2]]
    assert incidence_matrix(PRESETS["sg-halves"]).tolist() == [[1, 1], [0, 1]]
    assert incidence_matrix(PRESETS["snowflake-koch"]).tolist() == [[0, 2, 0], [0, 2, 1], [0, 2, 3]]


def test_analyze_thirds():
    an = analyze(PRESETS["sg-thirds"])
    assert abs(an.Psi - math.sqrt(2)) < 1e-12
    assert an.c == (F(3, 7), F(1, 7))
    assert an.varrho == 2
    assert an.varrho * an.T == pytest.approx(math.log(5), rel=1e-14)
    assert an.t_access.tolist() == [[2, 1], [1, 2]]


def test_analyze_halves():
    an = analyze(PRESETS["sg-halves"])
    assert an.Psi == pytest.approx(1.0, abs=1e-12)
    assert [an.classes[k] for k in an.basic_classes] == [(0,), (1,)]
    assert an.heights == {0: 1, 1: 0}
    assert an.m == [1, 0]
    assert an.d == 0.0


def test_analyze_omega3():
    an = analyze(PRESETS["sg-omega3"])
    assert an.c[0] == F(1, 4)
    assert an.m[0] == 2


def test_analyze_tilde_and_cut():
    assert analyze(PRESETS["sg-tilde"]).c[0] == F(1, 3)
    an = analyze(PRESETS["sg-cut-bottom"])
    assert an.c == (F(1),)
    assert an.d == pytest.approx(2 * math.log(2) / math.log(5), rel=1e-14)


def test_snowflake_perron():
    an = analyze(PRESETS["snowflake-koch"])
    assert abs(an.Psi - 4) < 1e-12
    assert an.b[2] / an.b[1] == pytest.approx(2.0, abs=1e-10)


def test_perron_examples():
    psi, b, left = perron_data([[2]])
    assert psi == pytest.approx(2.0) and b.tolist() == [1.0] and left.tolist() == [1.0]
    psi, b, left = perron_data([[2, 1], [2, 3]])
    assert psi == pytest.approx(4.0, abs=1e-12)
    assert b[1] / b[0] == pytest.approx(2.0, abs=1e-10)
    psi, b, left = perron_data([[0, 2], [1, 0]])
    assert psi == pytest.approx(math.sqrt(2), abs=1e-12)
    assert b[0] / b[1] == pytest.approx(math.sqrt(2), abs=1e-10)
    assert left @ b == pytest.approx(1.0) and left.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        perron_data([[1, 1], [0, 1]])


def test_boundary_measure_examples():
    cut = PRESETS["sg-cut-bottom"]
    an = analyze(cut)
    assert boundary_measure(cut, an, 0, ()) == pytest.approx(an.b[0])
    for word in [(1,), (1, 2), (2, 2, 1, 1)]:
        assert boundary_measure(cut, an, 0, word) == pytest.approx(2.0 ** -len(word))
    sf = PRESETS["snowflake-koch"]
    a2 = analyze(sf)
    # domain 2 reaches domain 3 through letter 3
    assert boundary_measure(sf, a2, 1, (3,)) == pytest.approx(a2.b[2] / 4)
    with pytest.raises(ValueError):
        boundary_measure(cut, an, 0, (3,))


@pytest.mark.parametrize("name", ["sg-cut-bottom", "sg-thirds", "snowflake-koch"])
def test_boundary_measure_additive(name):
    sysb = PRESETS[name]
    an = analyze(sysb)
    for i in range(sysb.P):
        total = sum(boundary_measure(sysb, an, i, (k,)) for k, _ in sysb.domains[i].edges)
        assert total == pytest.approx(boundary_measure(sysb, an, i, ()), rel=1e-12)


@pytest.mark.parametrize("name", list(PRESETS))
def test_measure_identity_exact(name):
    sysb = PRESETS[name]
    an = analyze(sysb)
    A = incidence_matrix(sysb)
    for i in range(sysb.P):
        rhs = (sum(int(A[i, j]) * an.c[j] for j in range(sysb.P)) + int(an.s[i])) / F(sysb.N)
        assert an.c[i] == rhs


@pytest.mark.parametrize("name", list(PRESETS))
def test_periods(name):
    an = analyze(PRESETS[name])
    for k, rho in an.rho_class.items():
        for i in an.classes[k]:
            assert an.t_period[i] % rho == 0
    for j, rj in enumerate(an.rho_j):
        if rj is None:
            continue
        for k, rho in an.rho_class.items():
            if any(an.A[j, i] or j == i for i in an.classes[k]):
                assert rj % rho == 0


def test_psi_at_least_n_rejected():
    sysb = BgdSystem("bad", 2, (Domain("a", set(), ((1, 0), (2, 0))),), fractal=None)
    with pytest.raises(ConsistencyError):
        analyze(sysb)


def test_system_validation():
    with pytest.raises(ValueError):
        BgdSystem("x", 3, (Domain("a", {1, 2, 3}, ()),))
    with pytest.raises(ValueError):
        BgdSystem("x", 3, (Domain("a", {1}, ((1, 0),)),))
    with pytest.raises(ValueError):
        BgdSystem("x", 3, (Domain("a", set(), ((1, 5),)),))
    with pytest.raises(ValueError):
        BgdSystem("x", 3, (Domain("a", set(), ((1, 0),), {0}, {0}),))


def test_domain_vertices_cut_bottom(sg):
    sysb = PRESETS["sg-cut-bottom"]
    vs = build_vertex_set(sg, 1)
    free, bnd = domain_vertices(sysb, sg, 0, 1)
    pts = {vs.points[v] for v in bnd}
    assert pts == {(0, 0), (1, 0), (F(1, 2), 0)}
    assert len(free) == 3


@pytest.mark.parametrize("n", [0, 1, 3, 5])
def test_domain_vertices_point_boundary(sg, n):
    vs = build_vertex_set(sg, n)
    free, bnd = domain_vertices(PRESETS["sg-halves"], sg, "omega2", n)
    assert [vs.points[v] for v in bnd] == [sg.boundary_points[1]]
    assert len(free) == len(vs) - 1


@pytest.mark.parametrize("name", GEOMETRIC)
def test_consistency_presets(sg, name):
    rep = bgd_consistency(PRESETS[name], sg, 4)
    assert rep.ok, rep.violation


def test_tilde_needs_widetilde_variant(sg):
    sysb = PRESETS["sg-tilde"]
    assert bgd_consistency(sysb, sg, 4).ok
    assert not bgd_consistency(sysb.with_variant("BGD"), sg, 4).ok


def _corrupt(sysb):
    """Retarget the first edge, or move its letter inside for a single domain."""
    dom = sysb.domains[0]
    k, j = dom.edges[0]
    if sysb.P == 1:
        bad = Domain(dom.name, set(dom.inside) | {k}, tuple(dom.edges[1:]),
                     dom.free, dom.boundary)
    else:
        bad = Domain(dom.name, dom.inside, ((k, (j + 1) % sysb.P),) + tuple(dom.edges[1:]),
                     dom.free, dom.boundary, dom.augment)
    return BgdSystem(sysb.name, sysb.N, (bad,) + sysb.domains[1:], sysb.variant)


@pytest.mark.parametrize("name", ["sg-cut-bottom", "sg-halves", "sg-tilde"])
def test_corrupted_edge_fails_at_level_one(sg, name):
    rep = bgd_consistency(_corrupt(PRESETS[name]), sg, 4)
    assert not rep.ok
    assert rep.checked_levels == 0 and rep.violation.startswith("level 1")


def test_retargeting_between_equal_traces_is_another_system(sg):
    # both thirds domains carry the same V_0 trace, so the swap stays consistent
    # and only the measures reveal the different open set
    bad = _corrupt(PRESETS["sg-thirds"])
    assert bgd_consistency(bad, sg, 4).ok
    assert analyze(bad).c != (F(3, 7), F(1, 7))


def test_whitney_cut_bottom(sg):
    rep = whitney(PRESETS["sg-cut-bottom"], 0, 8, sg)
    assert rep.lam_tilde == [2 ** k for k in range(1, 9)]
    assert rep.alpha_M == pytest.approx(1.0, abs=1e-12)


def test_whitney_point_boundary(sg):
    rep = whitney(PRESETS["sg-halves"], "omega2", 8, sg)
    assert rep.lam_tilde == [1] * 8
    assert rep.alpha_M == 0.0


def test_whitney_thirds_measure(sg):
    rep = whitney(PRESETS["sg-thirds"], "omega-1/3", 20, sg)
    assert abs(float(rep.measure) - 1 / 7) < 1e-6


@pytest.mark.parametrize("name", GEOMETRIC)
def test_whitney_series_converges_to_c(sg, name):
    sysb = PRESETS[name]
    an = analyze(sysb)
    k = 14
    for i in range(sysb.P):
        rep = whitney(sysb, i, k, sg)
        gap = float(an.c[i] - F(rep.measure))
        # the cells not yet counted all touch the boundary
        assert 0 <= gap <= rep.lam_tilde[-1] / 3 ** k + 1e-15


def test_whitney_needs_levels(sg):
    with pytest.raises(ValueError):
        whitney(PRESETS["sg-cut-bottom"], 0, 2, sg)


def test_whitney_predicate_matches_system(sg):
    # SG minus the bottom line: a cell is inside iff its word avoids letters 1, 2 only
    def classify(w):
        if any(k == 3 for k in w):
            return "inside"
        return "boundary"
    rep = whitney_predicate(classify, 3, 8)
    assert rep.lam_tilde == [2 ** k for k in range(1, 9)]
    assert float(rep.measure) == pytest.approx(1 - (2 / 3) ** 8, rel=1e-12)


def test_json_round_trip(tmp_path):
    import json
    for name, sysb in PRESETS.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(sysb.to_json()))
        back = load_system(str(p))
        assert back.to_json() == sysb.to_json()
    doc = PRESETS["sg-thirds"].to_json()
    del doc["domains"][0]["edges"]
    with pytest.raises(ValueError, match="edges"):
        BgdSystem.from_json(doc)
    with pytest.raises(KeyError):
        bgd_preset("nope")
