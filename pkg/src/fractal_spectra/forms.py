"""Harmonic structures, self-similar measures and level-n discrete forms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, sparse

from .geometry import FractalSpec, VertexSet, build_vertex_set


class DegenerateProblemError(ValueError):
    pass


def _connected(adj: list[list[bool]]) -> bool:
    n = len(adj)
    seen, stack = {0}, [0]
    while stack:
        i = stack.pop()
        for j in range(n):
            if adj[i][j] and j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


@dataclass(frozen=True)
class HarmonicStructure:
    """Boundary form D (negative semi-definite, E_0[u] = -u.D.u) and weights r."""

    D: tuple[tuple[Fraction, ...], ...]
    r: tuple[Fraction, ...]

    def __post_init__(self):
        D = tuple(tuple(Fraction(v) for v in row) for row in self.D)
        r = tuple(Fraction(v) for v in self.r)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "r", r)
        q = len(D)
        if any(len(row) != q for row in D):
            raise ValueError("D must be square")
        for i in range(q):
            if sum(D[i]) != 0:
                raise ValueError(f"row {i} of D does not sum to zero")
            for j in range(q):
                if D[i][j] != D[j][i]:
                    raise ValueError("D must be symmetric")
                if i != j and D[i][j] < 0:
                    raise ValueError("off-diagonal entries of D must be >= 0")
        if q > 1 and not _connected([[i != j and D[i][j] > 0 for j in range(q)]
                                     for i in range(q)]):
            raise ValueError("kernel of D must be exactly the constants")
        if q == 1 or all(v == 0 for row in D for v in row):
            raise ValueError("D must be non-zero")
        if not all(0 < v < 1 for v in r):
            raise ValueError("each r_i must lie in (0, 1)")

    @property
    def Q(self) -> int:
        return len(self.D)

    def stiffness0(self) -> np.ndarray:
        return -np.array(self.D, dtype=float)


@dataclass(frozen=True)
class SelfSimilarMeasure:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = tuple(Fraction(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if sum(w) != 1:
            raise ValueError("measure weights must sum to 1")
        if not all(0 < v < 1 for v in w):
            raise ValueError("measure weights must lie in (0, 1)")

    @classmethod
    def uniform(cls, n: int) -> "SelfSimilarMeasure":
        return cls(tuple(Fraction(1, n) for _ in range(n)))

    def of_word(self, w: Iterable[int]) -> Fraction:
        out = Fraction(1)
        for k in w:
            out *= self.weights[k - 1]
        return out


def sg_harmonic() -> HarmonicStructure:
    D = ((-2, 1, 1), (1, -2, 1), (1, 1, -2))
    return HarmonicStructure(D, (Fraction(3, 5),) * 3)


def snowflake_harmonic(r, D=None) -> HarmonicStructure:
    """Snowflake structure with a user-supplied common factor r.

    The default D couples neighbouring hexagon vertices only.  Whether a
    given (D, r) pair is compatible is for check_compatibility to decide.
    """
    if D is None:
        D = [[0] * 6 for _ in range(6)]
        for i in range(6):
            D[i][i] = -2
            D[i][(i + 1) % 6] = D[(i + 1) % 6][i] = 1
    return HarmonicStructure(tuple(map(tuple, D)), (Fraction(r),) * 7)


# exact helpers ------------------------------------------------------------

def _exact_stiffness(hs: HarmonicStructure, vs: VertexSet,
                     cell_mask=None, keep=None) -> dict:
    H: dict = {}
    for c, (w, cell) in enumerate(zip(vs.words, vs.cells)):
        if cell_mask is not None and not cell_mask[c]:
            continue
        scale = Fraction(1)
        for k in w:
            scale /= hs.r[k - 1]
        for a, va in enumerate(cell):
            for b, vb in enumerate(cell):
                if a == b or not hs.D[a][b]:
                    continue
                if keep is not None and not (keep[va] and keep[vb]):
                    continue
                w = scale * hs.D[a][b]
                for key, v in (((int(va), int(vb)), -w), ((int(va), int(va)), w)):
                    H[key] = H.get(key, 0) + v
    return H


def _solve_exact(A: list[list[Fraction]], B: list[list[Fraction]]):
    """Gauss-Jordan solve of A X = B over the rationals; None if singular."""
    n = len(A)
    M = [A[i][:] + B[i][:] for i in range(n)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return [row[n:] for row in M]


class CompatibilityReport(NamedTuple):
    compatible: bool
    residual: Fraction
    schur: list


def check_compatibility(hs: HarmonicStructure, spec: FractalSpec) -> CompatibilityReport:
    """Schur complement of the level-1 stiffness onto V_0 compared with -D."""
    if hs.Q != spec.Q or len(hs.r) != spec.alphabet_size:
        raise ValueError("harmonic structure does not match the fractal")
    vs = build_vertex_set(spec, 1)
    H = _exact_stiffness(hs, vs)
    ports = vs.ids_of(spec.boundary_points)
    inner = [v for v in range(len(vs)) if v not in set(ports)]
    get = lambda i, j: H.get((i, j), Fraction(0))
    A_pp = [[get(i, j) for j in ports] for i in ports]
    if inner:
        A_ii = [[get(i, j) for j in inner] for i in inner]
        A_ip = [[get(i, j) for j in ports] for i in inner]
        X = _solve_exact(A_ii, A_ip)
        if X is None:
            raise DegenerateProblemError("interior block is singular")
        S = [[A_pp[a][b] - sum(get(ports[a], inner[k]) * X[k][b]
                               for k in range(len(inner)))
              for b in range(len(ports))] for a in range(len(ports))]
    else:
        S = A_pp
    res = max(abs(S[a][b] + hs.D[a][b]) for a in range(hs.Q) for b in range(hs.Q))
    return CompatibilityReport(res == 0, res, S)


# assembly -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevelForm:
    """Generalized eigenproblem H u = lambda M u on the free vertices."""

    level: int
    vertex_set: VertexSet
    free: np.ndarray
    stiffness: sparse.csr_matrix
    mass: np.ndarray
    constrained: frozenset
    harmonic: HarmonicStructure | None = None
    recipe: tuple | None = None

    @property
    def dimension(self) -> int:
        return len(self.free)

    def triplets(self) -> list[tuple[int, int, str]]:
        """Stiffness as sorted (row, col, value) over vertex ids, exact rationals."""
        if self.harmonic is None:
            raise ValueError("form was built without exact data")
        cell_mask, keep = self.recipe
        H = _exact_stiffness(self.harmonic, self.vertex_set, cell_mask, keep)
        free = set(self.free.tolist())
        return sorted((i, j, str(v)) for (i, j), v in H.items()
                      if i in free and j in free and v != 0)


def _cell_scales(hs: HarmonicStructure, mu: SelfSimilarMeasure, words: np.ndarray):
    n = words.shape[1]
    inv_r = np.ones(len(words))
    mass = np.ones(len(words))
    r = np.array([float(v) for v in hs.r])
    m = np.array([float(v) for v in mu.weights])
    for col in range(n):
        inv_r /= r[words[:, col] - 1]
        mass *= m[words[:, col] - 1]
    return inv_r, mass / hs.Q


def _build(hs, mu, vs, free_mask, cell_mask, vertex_keep):
    """Sum cell energies over the selected cells, keeping only kept vertices.

    Edges to dropped vertices are removed and the diagonal is rebuilt so
    rows of kept vertices stay balanced within each cell.
    """
    cells = vs.cells[cell_mask]
    inv_r, cmass = _cell_scales(hs, mu, vs.words[cell_mask])
    nv = len(vs)
    K = -np.array(hs.D, dtype=float)
    rows, cols, vals = [], [], []
    mass = np.zeros(nv)
    q = hs.Q
    keep = vertex_keep[cells]
    for a in range(q):
        mass += np.bincount(cells[:, a], weights=cmass * keep[:, a], minlength=nv)
        for b in range(q):
            if a == b or K[a, b] == 0:
                continue
            both = keep[:, a] & keep[:, b]
            w = inv_r[both] * K[a, b]
            rows += [cells[both, a], cells[both, a]]
            cols += [cells[both, b], cells[both, a]]
            vals += [w, -w]
    H = sparse.coo_matrix((np.concatenate(vals) if vals else [],
                           (np.concatenate(rows) if rows else [],
                            np.concatenate(cols) if cols else [])),
                          shape=(nv, nv)).tocsr()
    free = np.flatnonzero(free_mask)
    if len(free) == 0:
        raise DegenerateProblemError("no free vertices")
    Hf = H[free][:, free]
    return Hf, mass[free], free


def _full_energy(hs, mu, vs):
    allv = np.ones(len(vs), dtype=bool)
    return _build(hs, mu, vs, allv, np.ones(len(vs.cells), dtype=bool), allv)


def assemble(hs: HarmonicStructure, mu: SelfSimilarMeasure, vs: VertexSet,
             dirichlet_set: Iterable[int] = ()) -> LevelForm:
    """Level-n stiffness (cell sum of (1/r_w) * (-D)) and lumped mass on V_n.

    Rows and columns of ``dirichlet_set`` are removed.
    """
    pinned = frozenset(int(v) for v in dirichlet_set)
    if any(not 0 <= v < len(vs) for v in pinned):
        raise ValueError("dirichlet_set contains unknown vertex ids")
    H, m, free = _full_energy(hs, mu, vs)
    keep = np.ones(len(vs), dtype=bool)
    keep[list(pinned)] = False
    sel = keep[free]
    if not sel.any():
        raise DegenerateProblemError("every vertex is constrained")
    return LevelForm(vs.level, vs, free[sel], H[sel][:, sel].tocsr(), m[sel], pinned,
                     hs, (None, None))


def assemble_domain(hs: HarmonicStructure, mu: SelfSimilarMeasure, vs: VertexSet,
                    free: np.ndarray, boundary: np.ndarray, bc: str,
                    pin: Iterable[int] = ()) -> LevelForm:
    """Discrete realization of a subdomain from its free and boundary vertices.

    Dirichlet: the whole-fractal form restricted to the free vertices, i.e.
    every other vertex (boundary or outside) is pinned to zero.

    Neumann: only cells with at least one free vertex take part; their free
    and boundary vertices are kept, edges to outside vertices are dropped and
    the mass is the lumped mass of the participating cells.
    """
    free_mask = np.zeros(len(vs), dtype=bool)
    free_mask[np.asarray(free, dtype=np.int64)] = True
    pin = np.asarray(list(pin), dtype=np.int64)
    if bc == "D":
        mask = free_mask.copy()
        mask[pin] = False
        return assemble(hs, mu, vs, np.flatnonzero(~mask))
    if bc != "N":
        raise ValueError("boundary condition must be 'D' or 'N'")
    bmask = np.zeros(len(vs), dtype=bool)
    bmask[np.asarray(boundary, dtype=np.int64)] = True
    active = free_mask[vs.cells].any(axis=1)
    keep = free_mask | bmask
    H, m, ids = _build(hs, mu, vs, np.zeros(len(vs), bool) | keep, active, keep)
    sel = m > 0
    ids, H, m = ids[sel], H[sel][:, sel].tocsr(), m[sel]
    return LevelForm(vs.level, vs, ids, H, m,
                     frozenset(np.flatnonzero(~np.isin(np.arange(len(vs)), ids)).tolist()),
                     hs, (active, keep))


class GammaData(NamedTuple):
    gammas: tuple[float, ...]
    uniform: bool
    gamma: float | None
    T: float | None
    d_S: float


def gamma_data(hs: HarmonicStructure, mu: SelfSimilarMeasure) -> GammaData:
    """gamma_i = sqrt(r_i mu_i) and the spectral exponent d_S."""
    pairs = [(r * m) for r, m in zip(hs.r, mu.weights)]
    gammas = tuple(math.sqrt(float(v)) for v in pairs)
    uniform = len(set(pairs)) == 1
    if uniform:
        g = gammas[0]
        T = -math.log(g)
        return GammaData(gammas, True, g, T, math.log(len(gammas)) / T)
    f = lambda s: sum(g ** s for g in gammas) - 1.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return GammaData(gammas, False, None, None, optimize.brentq(f, 0.0, hi, xtol=1e-15))


def dirichlet_boundary(spec: FractalSpec, vs: VertexSet) -> list[int]:
    return vs.ids_of(spec.boundary_points)


def standard_form(spec: FractalSpec, hs: HarmonicStructure, mu: SelfSimilarMeasure,
                  n: int, bc: str) -> LevelForm:
    """Whole-fractal form, pinned on V_0 for 'D' and free for 'N'."""
    vs = build_vertex_set(spec, n)
    pinned: Sequence[int] = dirichlet_boundary(spec, vs) if bc == "D" else ()
    if bc not in ("D", "N"):
        raise ValueError("boundary condition must be 'D' or 'N'")
    return assemble(hs, mu, vs, pinned)
