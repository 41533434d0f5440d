"""Boundary graph-directed domain systems.

A system is given as substitution data: for every domain Omega_i and every
letter k, the 1-cell F_k(K) is either inside Omega_i, outside it, or meets
it in F_k(Omega_j) for a target domain j (a directed edge i -> j).  Together
with the trace of each domain on V_0 this determines the discrete vertex
sets at every level, the incidence matrix and its Perron-Frobenius data.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from .forms import _solve_exact
from .geometry import FractalSpec, VertexSet, build_vertex_set, preset
from .spectra import DomainRule


class ConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    name: str
    inside: frozenset
    edges: tuple  # (letter, target index) pairs
    free: frozenset | None = None
    boundary: frozenset | None = None
    augment: Mapping[int, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inside", frozenset(self.inside))
        object.__setattr__(self, "edges", tuple((int(k), int(j)) for k, j in self.edges))
        for attr in ("free", "boundary"):
            v = getattr(self, attr)
            if v is not None:
                object.__setattr__(self, attr, frozenset(v))
        object.__setattr__(self, "augment",
                           {int(k): frozenset(v) for k, v in dict(self.augment).items()})

    @property
    def edge_letters(self) -> dict[int, int]:
        return dict(self.edges)


@dataclass(frozen=True)
class BgdSystem:
    name: str
    N: int
    domains: tuple
    variant: str = "BGD"
    fractal: str | None = "sg"

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        if self.variant not in ("BGD", "widetilde-BGD"):
            raise ValueError("variant must be 'BGD' or 'widetilde-BGD'")
        P = len(self.domains)
        if P == 0:
            raise ValueError("a system needs at least one domain")
        for i, dom in enumerate(self.domains):
            letters = [k for k, _ in dom.edges]
            if len(set(letters)) != len(letters):
                raise ValueError(f"domain {dom.name}: a letter carries two edges")
            if dom.inside & set(letters):
                raise ValueError(f"domain {dom.name}: letter both inside and on an edge")
            for k in list(dom.inside) + letters:
                if not 1 <= k <= self.N:
                    raise ValueError(f"domain {dom.name}: letter {k} out of range")
            for _, j in dom.edges:
                if not 0 <= j < P:
                    raise ValueError(f"domain {dom.name}: edge target {j} out of range")
            if len(dom.inside) >= self.N:
                raise ValueError(f"domain {dom.name}: s_i must be < N")
            if not dom.edges:
                raise ValueError(f"domain {dom.name}: Gamma(i) must be non-empty")
            if (dom.free is None) != (dom.boundary is None):
                raise ValueError(f"domain {dom.name}: give both free and boundary traces")
            if dom.free is not None and dom.free & dom.boundary:
                raise ValueError(f"domain {dom.name}: a V_0 point is free and boundary")

    @property
    def P(self) -> int:
        return len(self.domains)

    @property
    def geometric(self) -> bool:
        return self.fractal is not None and all(d.free is not None for d in self.domains)

    def outside(self, i: int) -> frozenset:
        dom = self.domains[i]
        used = set(dom.inside) | set(dom.edge_letters)
        return frozenset(k for k in range(1, self.N + 1) if k not in used)

    def s(self) -> np.ndarray:
        return np.array([len(d.inside) for d in self.domains], dtype=np.int64)

    def index(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            return int(name_or_index)
        for i, d in enumerate(self.domains):
            if d.name == name_or_index:
                return i
        raise KeyError(f"no domain named {name_or_index!r}")

    def recursion_rules(self) -> dict[str, DomainRule]:
        rules = {}
        for dom in self.domains:
            if dom.free is None:
                raise ConsistencyError(f"system {self.name} carries no trace data")
            children = {k: "K" for k in dom.inside}
            children.update({k: self.domains[j].name for k, j in dom.edges})
            rules[dom.name] = DomainRule(children, dom.free, dom.boundary)
        return rules

    def with_variant(self, variant: str) -> "BgdSystem":
        return BgdSystem(self.name, self.N, self.domains, variant, self.fractal)

    def to_json(self) -> dict:
        return {"name": self.name, "N": self.N, "variant": self.variant,
                "fractal": self.fractal,
                "domains": [{"name": d.name, "inside": sorted(d.inside),
                             "edges": [list(e) for e in d.edges],
                             "free": None if d.free is None else sorted(d.free),
                             "boundary": None if d.boundary is None else sorted(d.boundary),
                             "augment": {str(k): sorted(v) for k, v in d.augment.items()}}
                            for d in self.domains]}

    @classmethod
    def from_json(cls, doc: dict) -> "BgdSystem":
        try:
            doms = [Domain(d["name"], d.get("inside", ()), d["edges"],
                           d.get("free"), d.get("boundary"), d.get("augment", {}))
                    for d in doc["domains"]]
            return cls(doc.get("name", "custom"), int(doc["N"]), tuple(doms),
                       doc.get("variant", "BGD"), doc.get("fractal", "sg"))
        except KeyError as exc:
            raise ValueError(f"bgd system is missing field {exc.args[0]!r}") from None


def incidence_matrix(sys: BgdSystem) -> np.ndarray:
    A = np.zeros((sys.P, sys.P), dtype=np.int64)
    for i, dom in enumerate(sys.domains):
        for _, j in dom.edges:
            A[i, j] += 1
    return A


# Perron-Frobenius and graph structure -------------------------------------

def _reach(A: np.ndarray) -> np.ndarray:
    """reach[i, j] is True when a path of length >= 1 leads from i to j."""
    n = len(A)
    R = A > 0
    for _ in range(n):
        R2 = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if np.array_equal(R2, R):
            break
        R = R2
    return R


def is_irreducible(A: np.ndarray) -> bool:
    return bool(_reach(np.asarray(A)).all())


def _power_vector(A: np.ndarray, tol: float = 1e-14, max_iter: int = 200000):
    """Perron vector of an irreducible A by power iteration on A + I.

    The shift makes the iteration primitive, so it converges also for
    periodic A.  Iteration stops once the Collatz-Wielandt bounds on the
    eigenvalue agree to ``tol``.
    """
    n = len(A)
    B = A + np.eye(n)
    v = np.ones(n) / n
    lo = hi = 0.0
    for _ in range(max_iter):
        w = B @ v
        ratio = w / v
        lo, hi = ratio.min(), ratio.max()
        v = w / w.sum()
        if hi - lo <= tol * hi:
            break
    return (lo + hi) / 2 - 1.0, v


def perron_data(A) -> tuple[float, np.ndarray, np.ndarray]:
    """(Psi, b, left) with left l1-normalized and left . b = 1."""
    A = np.asarray(A, dtype=float)
    if not is_irreducible(A):
        raise ValueError("matrix is reducible; use analyze for per-class data")
    psi, b = _power_vector(A)
    psi_l, left = _power_vector(A.T)
    psi = (psi + psi_l) / 2
    left = left / left.sum()
    b = b / (left @ b)
    return float(psi), b, left


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(A)).max())


def return_period(A: np.ndarray, i: int, horizon: int) -> int:
    """gcd of k in 1..horizon with A^k(i, i) > 0 (0 if none)."""
    B = (np.asarray(A) > 0).astype(np.int64)
    P = np.eye(len(B), dtype=np.int64)
    g = 0
    for k in range(1, horizon + 1):
        P = ((P @ B) > 0).astype(np.int64)
        if P[i, i]:
            g = math.gcd(g, k)
    return g


def first_access(A: np.ndarray, horizon: int) -> np.ndarray:
    """t_ij = min k >= 1 with A^k(i, j) > 0, or 0 when unreachable."""
    B = (np.asarray(A) > 0).astype(np.int64)
    P = np.eye(len(B), dtype=np.int64)
    t = np.zeros_like(B)
    for k in range(1, horizon + 1):
        P = ((P @ B) > 0).astype(np.int64)
        t[(t == 0) & (P > 0)] = k
    return t


@dataclass(frozen=True, eq=False)
class IncidenceAnalysis:
    A: np.ndarray
    Psi: float
    d: float
    gamma: float
    irreducible: bool
    classes: list  # communicating classes as sorted index tuples
    free_singletons: list
    class_radius: list
    basic_classes: list  # indices into classes
    heights: dict  # class index -> height
    m: list  # m_j, None when j has no access to a basic class
    t_period: dict  # domain -> t_i within its basic class
    rho_class: dict  # class index -> gcd of t_i
    rho_j: list  # lcm over accessible basic classes, None if none
    varrho: int | None  # period gcd in the irreducible case
    t_access: np.ndarray
    b: np.ndarray | None
    left: np.ndarray | None
    class_perron: dict  # basic class index -> (b, left) on the class
    c: tuple  # exact domain measures nu(Omega_i)
    s: np.ndarray

    @property
    def boundary_total(self):
        return self.b

    @property
    def T(self) -> float:
        return -math.log(self.gamma)

    def to_json(self) -> dict:
        f = lambda v: None if v is None else [float(x) for x in v]
        return {
            "A": self.A.tolist(), "Psi": self.Psi, "d": self.d,
            "irreducible": self.irreducible,
            "classes": [list(c) for c in self.classes],
            "free_singletons": list(self.free_singletons),
            "class_radius": self.class_radius,
            "basic_classes": [list(self.classes[k]) for k in self.basic_classes],
            "heights": {",".join(map(str, self.classes[k])): h for k, h in self.heights.items()},
            "m": self.m, "rho_j": self.rho_j, "varrho": self.varrho,
            "t_access": self.t_access.tolist(),
            "b": f(self.b), "left": f(self.left),
            "c": [str(v) for v in self.c], "s": self.s.tolist(),
        }


def analyze(sys: BgdSystem, N: int | None = None,
            gamma: float = 1 / math.sqrt(5)) -> IncidenceAnalysis:
    N = sys.N if N is None else N
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    A = incidence_matrix(sys)
    P = sys.P
    psi = spectral_radius(A)
    if psi >= N - 1e-9:
        raise ConsistencyError(f"spectral radius {psi} is not below N = {N}")
    if psi < 1 - 1e-9:
        raise ConsistencyError("spectral radius below 1: some domain has no cycle")
    d = math.log(psi) / -math.log(gamma) if psi > 1 + 1e-12 else 0.0

    ncomp, labels = csgraph.connected_components(csr_matrix(A), directed=True,
                                                 connection="strong")
    reach = _reach(A)
    groups = [tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(ncomp)]
    classes, singles = [], []
    for g in sorted(groups):
        if len(g) > 1 or reach[g[0], g[0]]:
            classes.append(g)
        else:
            singles.append(g[0])
    radius = [spectral_radius(A[np.ix_(c, c)]) for c in classes]
    basic = [k for k, r in enumerate(radius) if abs(r - psi) <= 1e-9 * psi]

    def to_class(k1, k2):
        return any(reach[i, j] for i in classes[k1] for j in classes[k2])

    heights: dict = {}

    def height(k):
        if k not in heights:
            below = [height(k2) + 1 for k2 in basic if k2 != k and to_class(k, k2)]
            heights[k] = max(below, default=0)
        return heights[k]

    for k in basic:
        height(k)
    t_period, rho_class = {}, {}
    for k in basic:
        sub = A[np.ix_(classes[k], classes[k])]
        ts = [return_period(sub, a, 2 * P) for a in range(len(classes[k]))]
        for i, t in zip(classes[k], ts):
            t_period[i] = t
        g = 0
        for t in ts:
            g = math.gcd(g, t)
        rho_class[k] = g
    m, rho_j = [], []
    for j in range(P):
        acc = [k for k in basic if any(reach[j, i] for i in classes[k])]
        if acc:
            m.append(max(heights[k] for k in acc))
            l = 1
            for k in acc:
                l = l * rho_class[k] // math.gcd(l, rho_class[k])
            rho_j.append(l)
        else:
            m.append(None)
            rho_j.append(None)

    irreducible = bool(reach.all())
    t_access = first_access(A, 2 * P)
    class_perron = {}
    for k in basic:
        _, cb, cl = perron_data(A[np.ix_(classes[k], classes[k])])
        class_perron[k] = (cb, cl)
    if irreducible:
        psi_pd, b, left = perron_data(A)
        varrho = rho_class[basic[0]]
    else:
        b, left = _extended_perron(A, psi)
        varrho = None

    # exact domain measures: (I - A/N) c = s/N
    s = sys.s()
    M = [[Fraction(int(i == j)) - Fraction(int(A[i, j]), N) for j in range(P)] for i in range(P)]
    sol = _solve_exact(M, [[Fraction(int(v), N)] for v in s])
    if sol is None:
        raise ConsistencyError("I - A/N is singular")
    c = tuple(row[0] for row in sol)
    return IncidenceAnalysis(A, psi, d, gamma, irreducible, classes, singles, radius,
                             basic, heights, m, t_period, rho_class, rho_j, varrho,
                             t_access, b, left, class_perron, c, s)


def _extended_perron(A: np.ndarray, psi: float):
    """Non-negative Psi-eigenvectors of a reducible A when they are unique."""
    out = []
    for M in (A.astype(float), A.T.astype(float)):
        _, sv, vt = np.linalg.svd(M - psi * np.eye(len(A)))
        null = vt[sv <= 1e-9 * max(1.0, psi)] if len(sv) else vt
        if len(null) != 1:
            return None, None
        v = null[0]
        v = v * np.sign(v[np.argmax(np.abs(v))])
        if np.any(v < -1e-12):
            return None, None
        out.append(np.clip(v, 0.0, None))
    b, left = out
    left = left / left.sum()
    if left @ b <= 0:
        return b, left
    return b / (left @ b), left


def boundary_measure(sys: BgdSystem, analysis: IncidenceAnalysis, i: int,
                     letters: Sequence[int]) -> float:
    """kappa_i(D_xi) = Psi^{-m} b_{T(xi)} for the edge path spelled by ``letters``."""
    if analysis.b is None:
        raise ValueError("no Perron vector available for this system")
    cur = i
    for k in letters:
        nxt = sys.domains[cur].edge_letters.get(int(k))
        if nxt is None:
            raise ValueError(f"letter {k} is not an edge of domain {sys.domains[cur].name}")
        cur = nxt
    return float(analysis.Psi ** -len(letters) * analysis.b[cur])


# geometric realization ----------------------------------------------------

class _Realizer:
    """Free / boundary / closure masks of every domain on V_n, by recursion."""

    def __init__(self, sys: BgdSystem, spec: FractalSpec):
        if not sys.geometric:
            raise ConsistencyError(f"system {sys.name} has no geometric realization")
        if spec.alphabet_size != sys.N:
            raise ValueError("fractal alphabet does not match the system")
        self.sys, self.spec = sys, spec
        self.memo: dict = {}

    def masks(self, i: int, n: int):
        key = (i, n)
        if key in self.memo:
            return self.memo[key]
        vs = build_vertex_set(self.spec, n)
        dom = self.sys.domains[i]
        free = np.zeros(len(vs), dtype=bool)
        bnd = np.zeros(len(vs), dtype=bool)
        if n == 0:
            free[list(dom.free)] = True
            bnd[list(dom.boundary)] = True
            cl = free | bnd
        else:
            cl = np.zeros(len(vs), dtype=bool)
            prev_len = len(vs.previous)
            for k in dom.inside:
                free[vs.images[k - 1]] = True
                cl[vs.images[k - 1]] = True
            for k, j in dom.edges:
                f, b, c = self.masks(j, n - 1)
                img = vs.images[k - 1]
                free[img[f]] = True
                bnd[img[b]] = True
                cl[img[c]] = True
                if self.sys.variant == "widetilde-BGD" and k in dom.augment:
                    pts = vs.previous.ids_of(self.spec.boundary_points)
                    extra = img[[pts[q] for q in dom.augment[k]]]
                    bnd[extra] = True
            del prev_len
            bnd &= ~free
        out = (free, bnd, cl)
        self.memo[key] = out
        return out


def domain_vertices(sys: BgdSystem, spec: FractalSpec, i, n: int):
    """(free vertex ids of Omega_i in V_n, boundary ids D_i in V_n)."""
    i = sys.index(i)
    if n < 0:
        raise ValueError("level must be >= 0")
    free, bnd, _ = _Realizer(sys, spec).masks(i, n)
    return np.flatnonzero(free), np.flatnonzero(bnd)


class ConsistencyReport(NamedTuple):
    ok: bool
    violation: str | None
    checked_levels: int


def bgd_consistency(sys: BgdSystem, spec: FractalSpec, n_max: int) -> ConsistencyReport:
    """Check the per-cell boundary identity up to level n_max.

    At each level the realized domain is built from the free-vertex and
    closure recursions, and its geometric boundary (closure minus free
    points) is compared, cell by cell, against the image of the target
    domain's boundary: D_i within F_k(K) must equal F_k(D_j), or
    F_k(D_j with V) under the widetilde variant, inside cells must carry
    no boundary, and no point may be free in one cell and not in another.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    R = _Realizer(sys, spec)
    for i, dom in enumerate(sys.domains):
        if dom.free & dom.boundary:
            return ConsistencyReport(False, f"level 0, {dom.name}: trace overlap", 0)
    for n in range(1, n_max + 1):
        vs = build_vertex_set(spec, n)
        v0 = vs.previous.ids_of(spec.boundary_points)
        v0n = vs.ids_of(spec.boundary_points)
        for i, dom in enumerate(sys.domains):
            free_u = np.zeros(len(vs), dtype=bool)
            nonfree_u = np.zeros(len(vs), dtype=bool)
            cl = np.zeros(len(vs), dtype=bool)
            parts = []
            for k in dom.inside:
                img = vs.images[k - 1]
                free_u[img] = True
                cl[img] = True
            for k, j in dom.edges:
                f, b, c = R.masks(j, n - 1)
                img = vs.images[k - 1]
                free_u[img[f]] = True
                nonfree_u[img[~f]] = True
                cl[img[c]] = True
                parts.append((k, j, img, b))
            conflict = free_u & nonfree_u
            if conflict.any():
                p = vs.points[int(np.flatnonzero(conflict)[0])]
                return ConsistencyReport(
                    False, f"level {n}, {dom.name}: point {p} is free in one cell "
                           "and not in another", n - 1)
            geo = cl & ~free_u
            v0_free = frozenset(q for q in range(spec.Q) if free_u[v0n[q]])
            v0_bnd = frozenset(q for q in range(spec.Q) if geo[v0n[q]])
            if v0_free != dom.free or v0_bnd != dom.boundary:
                return ConsistencyReport(
                    False, f"level {n}, {dom.name}: trace on V_0 changes under "
                           f"refinement (free {sorted(v0_free)}, boundary {sorted(v0_bnd)})",
                    n - 1)
            for k in dom.inside:
                if geo[vs.images[k - 1]].any():
                    return ConsistencyReport(
                        False, f"level {n}, {dom.name}: boundary inside cell {k}", n - 1)
            for k, j, img, b in parts:
                expect = np.zeros(len(vs), dtype=bool)
                expect[img[b]] = True
                if sys.variant == "widetilde-BGD" and k in dom.augment:
                    expect[img[[v0[q] for q in dom.augment[k]]]] = True
                got = np.zeros(len(vs), dtype=bool)
                got[img] = geo[img]
                if not np.array_equal(got, expect):
                    diff = np.flatnonzero(got ^ expect)
                    return ConsistencyReport(
                        False, f"level {n}, {dom.name}, letter {k}: boundary differs "
                               f"from the image of {sys.domains[j].name} at "
                               f"{vs.points[int(diff[0])]}", n - 1)
            free_r, bnd_r, _ = R.masks(i, n)
            if not (np.array_equal(free_r, free_u) and np.array_equal(bnd_r, geo)):
                return ConsistencyReport(
                    False, f"level {n}, {dom.name}: recursive boundary differs "
                           "from the geometric boundary", n - 1)
    return ConsistencyReport(True, None, n_max)


# Whitney decompositions ---------------------------------------------------

class WhitneyReport(NamedTuple):
    lam: list  # #Lambda_k for k = 1..k_max
    lam_tilde: list
    alpha_I: float
    alpha_M: float
    measure: Fraction | float  # partial sum of #Lambda_k / N^k


def _fit_exponent(counts: list, base: float, last: int = 5) -> float:
    ks = np.arange(1, len(counts) + 1)[-last:]
    vals = np.asarray(counts[-last:], dtype=float)
    # periodic systems can leave some levels empty; fit the occupied ones
    ks, vals = ks[vals > 0], vals[vals > 0]
    if len(vals) == 0:
        return 0.0
    if len(vals) < 2:
        return float("nan")
    return float(np.polyfit(ks, np.log(vals), 1)[0] / math.log(base))


def _touch_table(sys: BgdSystem, spec: FractalSpec):
    """For outside letters, which V_0 points of the cell lie on the boundary."""
    vs = build_vertex_set(spec, 1)
    v0 = build_vertex_set(spec, 0)
    table = {}
    R = _Realizer(sys, spec)
    for i in range(sys.P):
        _, bnd, _ = R.masks(i, 1)
        for k in sys.outside(i):
            img = vs.images[k - 1]
            table[(i, k)] = frozenset(q for q in range(spec.Q) if bnd[img[q]])
    # a V_0 point q of a cell is a vertex of child k at position q' when F_k(p_q') = p_q
    child = {}
    for k in range(1, sys.N + 1):
        img = vs.images[k - 1]
        pos = {int(img[q]): q for q in range(spec.Q)}
        for q, vid in enumerate(vs.ids_of(spec.boundary_points)):
            if vid in pos:
                child[(q, k)] = pos[vid]
    del v0
    return table, child


def whitney(sys: BgdSystem, i, k_max: int, spec: FractalSpec | None = None) -> WhitneyReport:
    """Counts of Whitney cells and boundary cells by walking the substitution."""
    if k_max < 3:
        raise ValueError("k_max must be at least 3 for exponent fits")
    i = sys.index(i)
    if spec is None and sys.fractal is not None:
        spec = preset(sys.fractal)
    touch, child = _touch_table(sys, spec) if (spec is not None and sys.geometric) else ({}, {})
    ratio = float(spec.maps[0].ratio) if spec is not None else 1 / 2
    # states: ('D', j) domain cells; ('T', frozenset) outside cells touching D
    states = {("D", i): 1}
    lam, lam_t = [], []
    meas = Fraction(0)
    for k in range(1, k_max + 1):
        new: dict = {}
        n_in = 0
        for (kind, val), cnt in states.items():
            if kind == "D":
                dom = sys.domains[val]
                n_in += cnt * len(dom.inside)
                for letter, j in dom.edges:
                    new[("D", j)] = new.get(("D", j), 0) + cnt
                for letter in sys.outside(val):
                    t = touch.get((val, letter), frozenset())
                    if t:
                        new[("T", t)] = new.get(("T", t), 0) + cnt
            else:
                for letter in range(1, sys.N + 1):
                    t = frozenset(child[(q, letter)] for q in val if (q, letter) in child)
                    if t:
                        new[("T", t)] = new.get(("T", t), 0) + cnt
        states = new
        lam.append(n_in)
        lam_t.append(sum(states.values()))
        meas += Fraction(n_in, sys.N ** k)
    base = 1 / ratio
    return WhitneyReport(lam, lam_t, _fit_exponent(lam, base), _fit_exponent(lam_t, base), meas)


def whitney_predicate(classify: Callable[[tuple], str], N: int, k_max: int,
                      ratio: float = 0.5) -> WhitneyReport:
    """Whitney counts for an arbitrary open set given a cell classifier.

    ``classify(word)`` returns 'inside' when the cell lies in the set,
    'boundary' when it meets the boundary, and anything else otherwise.
    Enumeration is exhaustive below boundary cells, so keep k_max small.
    """
    if k_max < 3:
        raise ValueError("k_max must be at least 3 for exponent fits")
    frontier = [()]
    lam, lam_t = [], []
    meas = Fraction(0)
    for k in range(1, k_max + 1):
        nxt, n_in, n_b = [], 0, 0
        for w in frontier:
            for letter in range(1, N + 1):
                cls = classify(w + (letter,))
                if cls == "inside":
                    n_in += 1
                elif cls == "boundary":
                    n_b += 1
                    nxt.append(w + (letter,))
        frontier = nxt
        lam.append(n_in)
        lam_t.append(n_b)
        meas += Fraction(n_in, N ** k)
    return WhitneyReport(lam, lam_t, _fit_exponent(lam, 1 / ratio),
                         _fit_exponent(lam_t, 1 / ratio), meas)


# presets ------------------------------------------------------------------

def _sg(name, domains, variant="BGD"):
    return BgdSystem(name, 3, tuple(domains), variant, "sg")


P1, P2, P3 = 0, 1, 2

PRESETS: dict[str, BgdSystem] = {
    "sg-cut-bottom": _sg("sg-cut-bottom", [
        Domain("omega", {3}, ((1, 0), (2, 0)), {P3}, {P1, P2}),
    ]),
    "sg-halves": _sg("sg-halves", [
        Domain("omega1", set(), ((3, 0), (1, 1)), {P1}, {P3}),
        Domain("omega2", {1, 3}, ((2, 1),), {P1, P3}, {P2}),
    ]),
    "sg-omega3": _sg("sg-omega3", [
        Domain("omega3", set(), ((3, 0), (1, 1)), set(), {P1, P3}),
        Domain("omega1-minus-p1", set(), ((3, 2), (1, 3)), set(), {P1, P3}),
        Domain("omega1", set(), ((3, 2), (1, 5)), {P1}, {P3}),
        Domain("k-minus-p1p2", {3}, ((1, 4), (2, 5)), {P3}, {P1, P2}),
        Domain("k-minus-p1", {2, 3}, ((1, 4),), {P2, P3}, {P1}),
        Domain("k-minus-p2", {1, 3}, ((2, 5),), {P1, P3}, {P2}),
    ]),
    "sg-thirds": _sg("sg-thirds", [
        Domain("omega-2/3", {3}, ((1, 1), (2, 1)), {P3}, set()),
        Domain("omega-1/3", set(), ((3, 0),), {P3}, set()),
    ]),
    "sg-tilde": _sg("sg-tilde", [
        Domain("omega-tilde", set(), ((1, 0), (2, 0), (3, 1)), set(), {P1, P2, P3},
               {3: {P1, P2}}),
        Domain("f3-omega-minus-p3", set(), ((3, 2),), set(), {P3}),
        Domain("omega-minus-p3", set(), ((1, 3), (2, 3), (3, 4)), set(), {P1, P2, P3}),
        Domain("omega", {3}, ((1, 3), (2, 3)), {P3}, {P1, P2}),
        Domain("k-minus-p3", {1, 2}, ((3, 4),), {P1, P2}, {P3}),
    ], variant="widetilde-BGD"),
    # combinatorial data only: the geometry of these domains is not encoded
    "snowflake-koch": BgdSystem("snowflake-koch", 7, (
        Domain("omega1", {3, 4, 5, 6, 7}, ((1, 1), (2, 1))),
        Domain("omega2", {4, 5, 6, 7}, ((1, 1), (2, 1), (3, 2))),
        Domain("omega3", {6, 7}, ((1, 1), (2, 1), (3, 2), (4, 2), (5, 2))),
    ), "BGD", None),
}


def bgd_preset(name: str) -> BgdSystem:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown bgd preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_system(path: str) -> BgdSystem:
    with open(path) as fh:
        return BgdSystem.from_json(json.load(fh))
