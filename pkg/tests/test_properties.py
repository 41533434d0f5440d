import itertools
import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from fractal_spectra.asymptotics import (RenewalSystem, remainder_regime, renewal_solve)
from fractal_spectra.bgd import (BgdSystem, Domain, _reach, analyze, boundary_measure,
                                 spectral_radius)
from fractal_spectra.cli import dumps
from fractal_spectra.geometry import brute_force_vertex_count, build_vertex_set, preset
from fractal_spectra.spectra import from_eigenvalues

N_LETTERS = 16


@st.composite
def digraphs(draw, max_n=5):
    """0/1 adjacency with every row non-empty and at least one cycle."""
    n = draw(st.integers(1, max_n))
    rows = []
    for i in range(n):
        row = draw(st.lists(st.booleans(), min_size=n, max_size=n))
        if not any(row):
            row[draw(st.integers(0, n - 1))] = True
        rows.append(row)
    A = np.array(rows, dtype=np.int64)
    assume(spectral_radius(A) >= 1 - 1e-9)
    s = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n))
    return A, s


def system_of(A, s):
    doms = []
    for i, row in enumerate(A):
        targets = [int(j) for j in np.flatnonzero(row)]
        edges = [(k + 1, j) for k, j in enumerate(targets)]
        inside = range(len(edges) + 1, len(edges) + 1 + s[i])
        doms.append(Domain(f"d{i}", frozenset(inside), tuple(edges)))
    return BgdSystem("random", N_LETTERS, tuple(doms), fractal=None)


def brute_heights(A):
    """m_j as the longest chain of basic classes reachable from j, by enumeration."""
    n = len(A)
    reach = _reach(A)
    psi = spectral_radius(A)
    comp = {}
    for i in range(n):
        key = frozenset(j for j in range(n) if (reach[i, j] and reach[j, i]) or j == i)
        comp[i] = key
    classes = {c for c in comp.values()
               if len(c) > 1 or reach[next(iter(c)), next(iter(c))]}
    basic = [sorted(c) for c in classes
             if abs(spectral_radius(A[np.ix_(sorted(c), sorted(c))]) - psi) <= 1e-9 * psi]

    def leads(a, b):
        return reach[a[0], b[0]]

    best = {}
    for r in range(1, len(basic) + 1):
        for chain in itertools.permutations(range(len(basic)), r):
            if all(leads(basic[chain[k]], basic[chain[k + 1]]) for k in range(r - 1)):
                best[chain[0]] = max(best.get(chain[0], 0), r - 1)
    out = []
    for j in range(n):
        acc = [best[k] for k, c in enumerate(basic) if reach[j, c[0]]]
        out.append(max(acc) if acc else None)
    return out


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(digraphs())
def test_heights_match_chain_enumeration(data):
    A, s = data
    an = analyze(system_of(A, s))
    assert an.m == brute_heights(A)


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(digraphs())
def test_domain_measures_solve_identity(data):
    A, s = data
    sysb = system_of(A, s)
    an = analyze(sysb)
    for i in range(sysb.P):
        rhs = (sum(int(A[i, j]) * an.c[j] for j in range(sysb.P)) + s[i]) / F(N_LETTERS)
        assert an.c[i] == rhs
        assert 0 <= an.c[i] <= 1


@settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(digraphs(max_n=4), st.data())
def test_boundary_measure_additive(data, draw):
    A, s = data
    sysb = system_of(A, s)
    an = analyze(sysb)
    assume(an.irreducible)
    i = draw.draw(st.integers(0, sysb.P - 1))
    # a random edge path from i, then split its measure over the next letters
    path, cur = [], i
    for _ in range(draw.draw(st.integers(0, 3))):
        k, cur = draw.draw(st.sampled_from(sysb.domains[cur].edges))
        path.append(k)
    parts = sum(boundary_measure(sysb, an, i, path + [k]) for k, _ in sysb.domains[cur].edges)
    assert parts == pytest.approx(boundary_measure(sysb, an, i, path), rel=1e-10)


@given(st.lists(st.floats(0.01, 1e6), min_size=1, max_size=60),
       st.lists(st.floats(0, 2e6), min_size=1, max_size=30))
def test_count_monotone_and_right_continuous(vals, xs):
    sp = from_eigenvalues(vals, "D")
    xs = np.sort(np.asarray(xs))
    c = sp.count(xs)
    assert np.all(np.diff(c) >= 0)
    assert sp.count(2e6) == sp.total == len(vals)
    for v, k in zip(sp.values, sp.multiplicities):
        assert sp.count(v) - sp.count(np.nextafter(v, 0)) == k
        assert sp.count(np.nextafter(v, np.inf)) == sp.count(v)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.data())
def test_renewal_fixed_point(n, draw):
    A = np.array(draw.draw(st.lists(st.lists(st.floats(0, 1), min_size=n, max_size=n),
                                    min_size=n, max_size=n)))
    rad = spectral_radius(A)
    if rad > 0:
        A = A / rad * draw.draw(st.floats(0.1, 1.0))
    K = 8
    z = np.array(draw.draw(st.lists(st.lists(st.floats(0, 1), min_size=3 * K, max_size=3 * K),
                                    min_size=n, max_size=n)))
    tr = renewal_solve(RenewalSystem(A, 1.0, z, K=K), 12.0)
    assert tr.residual <= 1e-12
    assert tr.x[0] == 0.0 and np.all(tr.f >= 0)


@given(st.integers(2, 6), st.floats(0.05, 0.95))
def test_uniform_weights_always_below_beta(N, g):
    rep = remainder_regime([g] * N)
    assert rep.regime == "p<beta"
    assert rep.p == pytest.approx(N, rel=1e-9)


@settings(deadline=None, max_examples=10)
@given(st.integers(0, 6))
def test_sg_vertex_count_closed_form(n):
    assert len(build_vertex_set(preset("sg"), n)) == (3 ** (n + 1) + 3) // 2


@settings(deadline=None, max_examples=4)
@given(st.integers(0, 3))
def test_vertex_sets_match_brute_force(n):
    for name in ("sg", "snowflake"):
        spec = preset(name)
        assert len(build_vertex_set(spec, n)) == brute_force_vertex_count(spec, n)


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10 ** 12, 10 ** 12)
    | st.floats(allow_nan=False, allow_infinity=False) | st.text(max_size=8),
    lambda kids: st.lists(kids, max_size=4) | st.dictionaries(st.text(max_size=5), kids,
                                                              max_size=4),
    max_leaves=20)


@given(json_values)
def test_dumps_round_trips_and_is_stable(obj):
    text = dumps(obj)
    back = json.loads(text)
    assert back == obj
    assert dumps(back) == text
