import math
from fractions import Fraction as F

import numpy as np
import pytest

from fractal_spectra.forms import (DegenerateProblemError, HarmonicStructure, SelfSimilarMeasure,
                                   _exact_stiffness, assemble, check_compatibility, gamma_data,
                                   sg_harmonic, snowflake_harmonic, standard_form)
from fractal_spectra.geometry import build_vertex_set, preset

from conftest import D_S, T5


def test_sg_compatible(sg, hs):
    rep = check_compatibility(hs, sg)
    assert rep.compatible and rep.residual == 0
    assert rep.schur == [[-v for v in row] for row in hs.D]


def test_wrong_r_incompatible(sg, hs):
    # level-1 edges of conductance 2 reduce to 6/5 between boundary points
    rep = check_compatibility(HarmonicStructure(hs.D, (F(1, 2),) * 3), sg)
    assert not rep.compatible
    assert rep.residual == F(2, 5)


@pytest.mark.parametrize("D", [
    ((0, 0, 0), (0, 0, 0), (0, 0, 0)),
    ((-1, 1, 0), (1, -1, 0), (0, 0, 0)),
    ((-2, 1, 1), (1, -2, 1), (1, 1, -1)),
    ((-2, 3, -1), (3, -2, -1), (-1, -1, 2)),
])
def test_invalid_D(D):
    with pytest.raises(ValueError):
        HarmonicStructure(D, (F(3, 5),) * 3)


def test_invalid_r_and_measure(hs):
    with pytest.raises(ValueError):
        HarmonicStructure(hs.D, (F(3, 5), F(3, 5), 1))
    with pytest.raises(ValueError):
        SelfSimilarMeasure((F(1, 2), F(1, 3), F(1, 3)))


def test_level1_dirichlet_assembly(sg, hs, mu):
    form = standard_form(sg, hs, mu, 1, "D")
    assert form.dimension == 3
    H = form.stiffness.toarray()
    # hand assembly: two cells of weight 5/3 meet at every midpoint
    ref = 5 / 3 * np.array([[4, -1, -1], [-1, 4, -1], [-1, -1, 4]])
    assert np.allclose(H, ref, rtol=1e-14)
    assert np.allclose(form.mass, 2 / 9)


def test_level0_neumann(sg, hs, mu):
    form = standard_form(sg, hs, mu, 0, "N")
    assert np.allclose(form.stiffness.toarray(), -np.array(hs.D, float))
    assert np.allclose(form.mass, 1 / 3)


def test_level2_dirichlet_dimension(sg, hs, mu):
    assert standard_form(sg, hs, mu, 2, "D").dimension == 12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_neumann_form_properties(sg, hs, mu, n):
    form = standard_form(sg, hs, mu, n, "N")
    H = form.stiffness.toarray()
    assert np.allclose(H, H.T)
    assert np.abs(H.sum(axis=1)).max() < 1e-9 * np.abs(H).max()
    assert np.linalg.eigvalsh(H).min() > -1e-9 * np.abs(H).max()
    assert abs(form.mass.sum() - 1) < 1e-12
    assert np.all(form.mass > 0)


def test_self_similar_scaling(sg, hs):
    n = 3
    vs, prev = build_vertex_set(sg, n), build_vertex_set(sg, n - 1)
    parent = _exact_stiffness(hs, prev)
    for k in range(3):
        part = _exact_stiffness(hs, vs, cell_mask=vs.words[:, 0] == k + 1)
        img = vs.images[k]
        lifted = {(int(img[i]), int(img[j])): v / hs.r[k] for (i, j), v in parent.items()}
        nonzero = lambda d: {key: v for key, v in d.items() if v}
        assert nonzero(part) == nonzero(lifted)


def test_triplets_exact(sg, hs, mu):
    form = standard_form(sg, hs, mu, 1, "D")
    trip = form.triplets()
    diag = [v for i, j, v in trip if i == j]
    assert diag == ["20/3"] * 3
    assert sorted({v for i, j, v in trip if i != j}) == ["-5/3"]


def test_degenerate(sg, hs, mu):
    vs = build_vertex_set(sg, 0)
    with pytest.raises(DegenerateProblemError):
        assemble(hs, mu, vs, [0, 1, 2])
    with pytest.raises(ValueError):
        assemble(hs, mu, vs, [7])


def test_gamma_data_sg(hs, mu):
    g = gamma_data(hs, mu)
    assert g.uniform
    assert g.gamma == pytest.approx(1 / math.sqrt(5), rel=1e-15)
    assert g.T == pytest.approx(T5, rel=1e-15)
    assert g.d_S == pytest.approx(D_S, rel=1e-15)


@pytest.mark.parametrize("r", [F(1, 3), F(3, 7), F(1, 2)])
def test_gamma_data_snowflake(r):
    g = gamma_data(snowflake_harmonic(r), SelfSimilarMeasure.uniform(7))
    assert g.d_S / 2 == pytest.approx(math.log(7) / math.log(7 / r), rel=1e-13)


def test_gamma_data_two_maps():
    hs2 = HarmonicStructure(((-1, 1), (1, -1)), (F(1, 2), F(1, 2)))
    g = gamma_data(hs2, SelfSimilarMeasure((F(1, 2), F(1, 2))))
    assert g.d_S == pytest.approx(1.0, rel=1e-15)


def test_gamma_data_non_uniform():
    hs2 = HarmonicStructure(((-1, 1), (1, -1)), (F(1, 2), F(1, 4)))
    g = gamma_data(hs2, SelfSimilarMeasure((F(1, 2), F(1, 2))))
    assert not g.uniform
    assert sum(v ** g.d_S for v in g.gammas) == pytest.approx(1.0, abs=1e-13)


def test_snowflake_default_structure_is_reported_incompatible():
    sf = preset("snowflake")
    for r in (F(1, 3), F(3, 7), F(1, 2)):
        assert not check_compatibility(snowflake_harmonic(r), sf).compatible
