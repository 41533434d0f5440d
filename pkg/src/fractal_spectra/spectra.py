"""Eigenvalues, counting functions and partition functions.

Three independent routes produce spectral data:

* ``solve_dense`` diagonalizes a LevelForm;
* ``decimate_sg`` generates the SG spectrum by spectral decimation;
* ``InertiaCounter`` counts eigenvalues below x without computing them, by
  Sylvester inertia of H - xM through the cell recursion.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .forms import HarmonicStructure, LevelForm, SelfSimilarMeasure
from .geometry import FractalSpec, build_vertex_set

DENSE_CAP = 4000
MERGE_RTOL = 1e-9
ZERO_RTOL = 1e-9


class DenseCapError(ValueError):
    pass


class UnsupportedFractalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Distinct positive eigenvalues with multiplicities; zero modes counted apart."""

    values: np.ndarray
    multiplicities: np.ndarray
    boundary_condition: str
    domain: str = ""
    level: int = -1
    zero_multiplicity: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        k = np.asarray(self.multiplicities, dtype=np.int64)
        if len(v) != len(k):
            raise ValueError("values and multiplicities differ in length")
        if len(v) and (np.any(np.diff(v) <= 0) or v[0] <= 0):
            raise ValueError("values must be positive and strictly ascending")
        if np.any(k < 1):
            raise ValueError("multiplicities must be >= 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", k)
        object.__setattr__(self, "_cum", np.concatenate([[0], np.cumsum(k)]))

    @property
    def total(self) -> int:
        return int(self._cum[-1]) + self.zero_multiplicity

    def eigenvalues(self) -> np.ndarray:
        return np.repeat(self.values, self.multiplicities)

    def count(self, x):
        """#{0 < lambda <= x} with multiplicity."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        out = self._cum[idx]
        return int(out) if np.ndim(out) == 0 else out

    __call__ = count

    def partition_function(self, t):
        return partition_function(self, t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "multiplicity"])
        for v, k in zip(self.values, self.multiplicities):
            w.writerow([f"{v:.17g}", int(k)])
        return buf.getvalue()


def from_eigenvalues(vals, bc: str, domain: str = "", level: int = -1,
                     rtol: float = MERGE_RTOL, zero_rtol: float = ZERO_RTOL) -> Spectrum:
    """Merge a raw eigenvalue list into a Spectrum.

    Values within ``rtol`` (relative, chained) are merged; values below
    ``zero_rtol * max|lambda|`` are zero modes.
    """
    vals = np.sort(np.asarray(vals, dtype=float))
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite eigenvalues")
    scale = np.abs(vals).max() if len(vals) else 1.0
    zero = np.abs(vals) <= zero_rtol * scale
    if np.any(vals[~zero] < 0):
        raise ValueError("negative eigenvalue in a positive semi-definite problem")
    pos = vals[~zero]
    if len(pos) == 0:
        return Spectrum(np.empty(0), np.empty(0, np.int64), bc, domain, level, int(zero.sum()))
    brk = np.flatnonzero(np.diff(pos) > rtol * pos[1:]) + 1
    groups = np.split(pos, brk)
    values = np.array([g.mean() for g in groups])
    mult = np.array([len(g) for g in groups])
    return Spectrum(values, mult, bc, domain, level, int(zero.sum()))


def solve_dense(form: LevelForm, bc: str = "D", domain: str = "",
                cap: int = DENSE_CAP) -> Spectrum:
    """All eigenvalues of H u = lambda M u via M^{-1/2} H M^{-1/2}."""
    n = form.dimension
    if n < 1:
        raise ValueError("empty problem")
    if n > cap:
        raise DenseCapError(f"{n} free vertices exceed the dense cap {cap}; "
                            "use decimate_sg or the inertia counter instead")
    H = form.stiffness.toarray()
    if not np.all(np.isfinite(H)) or not np.all(np.isfinite(form.mass)):
        raise ValueError("non-finite entries in the form")
    if np.any(form.mass <= 0):
        raise ValueError("mass weights must be positive")
    d = 1.0 / np.sqrt(form.mass)
    vals = np.linalg.eigvalsh(H * d[:, None] * d[None, :])
    return from_eigenvalues(vals, bc, domain, form.level)


# spectral decimation -----------------------------------------------------

def _branch(lam: float, sign: int) -> float:
    root = math.sqrt(25.0 - 4.0 * lam)
    return (5.0 + root) / 2.0 if sign > 0 else 2.0 * lam / (5.0 + root)


def decimation_scale(m: int) -> float:
    """Map from eigenvalues of 4(I - P) on the level-m graph to (H, M) eigenvalues."""
    return 1.5 * 5.0 ** m


def decimate_sg(m: int, bc: str, spec: FractalSpec | None = None) -> Spectrum:
    """Level-m SG spectrum with standard data (r = 3/5, mu = 1/3).

    ``spec``, when given, must be the SG preset.

    Each eigenvalue of the previous level (of 4(I - P)) produces its two
    preimages under R(l) = l(5 - l); the value 6 produces only 3 and a
    Neumann zero stays zero.  The new exceptional values 5 and 6 enter with
    multiplicities fixed by the dimension count of the level.
    """
    if spec is not None:
        from .geometry import preset
        if spec is not preset("sg") and spec != preset("sg"):
            raise UnsupportedFractalError(f"spectral decimation is implemented for the SG "
                                          f"only, not {spec.name!r}")
    if bc == "D":
        if m < 1:
            raise ValueError("Dirichlet decimation starts at level 1")
        spec = {2.0: 1, 5.0: 2}
        start = 1
    elif bc == "N":
        if m < 0:
            raise ValueError("level must be >= 0")
        spec = {0.0: 1, 6.0: 2}
        start = 0
    else:
        raise ValueError("boundary condition must be 'D' or 'N'")
    for level in range(start + 1, m + 1):
        new: dict[float, int] = {}
        for lam, k in spec.items():
            if lam == 0.0:
                targets = (0.0,)
            elif lam == 6.0:
                targets = (3.0,)
            else:
                targets = (_branch(lam, -1), _branch(lam, 1))
            for t in targets:
                new[t] = new.get(t, 0) + k
        if bc == "D":
            n5, n6 = (3 ** (level - 1) + 3) // 2, (3 ** level - 3) // 2
        else:
            n5, n6 = (3 ** (level - 1) - 1) // 2, (3 ** level + 3) // 2
        for t, k in ((5.0, n5), (6.0, n6)):
            if k:
                new[t] = new.get(t, 0) + k
        spec = new
    s = decimation_scale(m)
    zero = spec.pop(0.0, 0)
    vals = np.array(sorted(spec))
    raw = np.repeat(vals * s, [spec[v] for v in vals])
    out = from_eigenvalues(raw, bc, "sg", m)
    return Spectrum(out.values, out.multiplicities, bc, "sg", m, zero)


# counting and partition functions ----------------------------------------

def count(spec: Spectrum, x):
    return spec.count(x)


def partition_function(spec: Spectrum, t):
    """Z(t) = sum of m_k exp(-lambda_k t) over positive eigenvalues."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    out = np.exp(-np.multiply.outer(t, spec.values)) @ spec.multiplicities
    return float(out) if out.ndim == 0 else out


def resolved_top(spec: Spectrum, N: int) -> float:
    """Eigenvalue at which the count first reaches 1/N of the dimension.

    Above this point the level-n spectrum is dominated by discretization.
    """
    target = spec.total / N
    idx = np.searchsorted(spec._cum[1:], target, side="left")
    return float(spec.values[min(idx, len(spec.values) - 1)])


def weyl_slope(spec: Spectrum, top: float, decades: float = 2.0, points: int = 4000) -> float:
    """Least-squares slope of log rho(x) against log x on [top/10^decades, top]."""
    x = np.geomspace(top / 10 ** decades, top, points)
    rho = spec.count(x)
    if np.any(rho == 0):
        raise ValueError("window starts below the first eigenvalue")
    return float(np.polyfit(np.log(x), np.log(rho), 1)[0])


def counting_csv(counter: Callable, x) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "count"])
    for xi, ci in zip(np.asarray(x, float), np.asarray(counter(x))):
        w.writerow([f"{xi:.17g}", int(ci)])
    return buf.getvalue()


def log_grid(x_min: float, decades: float, per_decade: int) -> np.ndarray:
    return x_min * 10.0 ** (np.arange(int(round(decades * per_decade)) + 1) / per_decade)


# inertia counting --------------------------------------------------------

@dataclass(frozen=True)
class DomainRule:
    """One domain of a cell recursion.

    ``children`` maps a letter (1-based) to the name of the domain filling
    that cell ("K" for the whole fractal); letters that are absent are
    outside the domain.  ``free`` and ``boundary`` index V_0.
    """

    children: Mapping[int, str]
    free: frozenset
    boundary: frozenset


class InertiaCounter:
    """Eigenvalue counts of domain realizations at arbitrary depth.

    For H - xM assembled over the level-n cells, the free vertices are
    eliminated one level at a time: a domain at level k is represented by
    the Schur complement onto its V_0 ports, built from the complements of
    its children at level k-1 (scaled by 1/r_i, with x scaled by r_i mu_i)
    after eliminating the interior junction vertices.  By Sylvester's law
    the number of negative eigenvalues of H - xM is the sum of the negative
    counts of every eliminated block plus that of the final complement, so
    the result is #{lambda < x}.
    """

    def __init__(self, spec: FractalSpec, hs: HarmonicStructure,
                 mu: SelfSimilarMeasure, rules: Mapping[str, DomainRule] | None = None):
        self.spec = spec
        self.N, self.Q = spec.alphabet_size, spec.Q
        allv = frozenset(range(self.Q))
        self.rules = {"K": DomainRule({k: "K" for k in range(1, self.N + 1)}, allv, frozenset())}
        self.rules.update(rules or {})
        vs1 = build_vertex_set(spec, 1)
        self.image = [[int(vs1.index[spec.maps[k](p)]) for p in spec.boundary_points]
                      for k in range(self.N)]
        self.v0_in_v1 = {int(vs1.index[p]): i for i, p in enumerate(spec.boundary_points)}
        self.H0 = hs.stiffness0()
        self.inv_r = [1.0 / float(r) for r in hs.r]
        self.scale = [float(r * m) for r, m in zip(hs.r, mu.weights)]

    def _leaf(self, name: str, bc: str):
        rule = self.rules[name]
        if bc == "D":
            ports = sorted(rule.free)
            K = self.H0[np.ix_(ports, ports)]
        else:
            ports = sorted(rule.free | rule.boundary) if rule.free else []
            K = self.H0[np.ix_(ports, ports)].copy()
            K[np.diag_indices(len(ports))] = 0.0
            K[np.diag_indices(len(ports))] = -K.sum(axis=1)
        return ports, K, np.full(len(ports), 1.0 / self.Q)

    def _node(self, name, k, y, bc, memo):
        """(ports, S0, dS, neg, lap) with S(y) = S0 + dS(y) on the ports.

        S0 is the y = 0 complement (the harmonic part, exactly -D scaled for
        full cells) and dS the y-dependent remainder.  Keeping them apart
        matters at depth: dS shrinks like 5^{-k} relative to S0, and forming
        S0 + dS before eliminating would round it away.
        """
        # the x-scale reached along the path separates non-uniform branches
        key = (name, k, round(math.log(y[0]), 9))
        hit = memo.get(key)
        if hit is not None:
            return hit
        nx = len(y)
        if k == 0:
            ports, K, m = self._leaf(name, bc)
            dS = -y[:, None, None] * np.diag(m)[None]
            lap = bc == "N" or len(ports) == self.Q
            out = (ports, K, dS, np.zeros(nx, dtype=np.int64), lap)
            memo[key] = out
            return out
        kids = []
        ids: set[int] = set()
        lap = True
        for letter, target in self.rules[name].children.items():
            ports, S0, dS, neg, l = self._node(target, k - 1, y * self.scale[letter - 1], bc, memo)
            vid = [self.image[letter - 1][p] for p in ports]
            kids.append((letter, vid, S0, dS, neg))
            ids.update(vid)
            lap &= l
        ids_sorted = sorted(ids)
        pos = {v: i for i, v in enumerate(ids_sorted)}
        n = len(ids_sorted)
        A0 = np.zeros((n, n))
        D = np.zeros((nx, n, n))
        negs = np.zeros(nx, dtype=np.int64)
        for letter, vid, S0, dS, neg in kids:
            ix = np.array([pos[v] for v in vid], dtype=np.int64)
            A0[np.ix_(ix, ix)] += self.inv_r[letter - 1] * S0
            D[:, ix[:, None], ix[None, :]] += self.inv_r[letter - 1] * dS
            negs += neg
        port_ids = [v for v in ids_sorted if v in self.v0_in_v1]
        J = [pos[v] for v in ids_sorted if v not in self.v0_in_v1]
        P = [pos[v] for v in port_ids]
        ports = [self.v0_in_v1[v] for v in port_ids]
        if not J:
            out = (ports, A0[np.ix_(P, P)], D[:, P][:, :, P], negs, lap)
            memo[key] = out
            return out
        AJJ = A0[np.ix_(J, J)] + D[:, J][:, :, J]
        negs = negs + (np.linalg.eigvalsh(AJJ) < 0).sum(axis=1)
        try:
            np.linalg.cholesky(A0[np.ix_(J, J)])
            split = True
        except np.linalg.LinAlgError:
            split = False
        if split:
            # S(A0 + D) = S(A0) + E^T D E - (D E)_J^T (A0 + D)_JJ^{-1} (D E)_J
            X = np.linalg.solve(A0[np.ix_(J, J)], A0[np.ix_(J, P)])
            S0 = A0[np.ix_(P, P)] - A0[np.ix_(P, J)] @ X
            DPP, DPJ = D[:, P][:, :, P], D[:, P][:, :, J]
            DJP, DJJ = D[:, J][:, :, P], D[:, J][:, :, J]
            DEJ = DJP - DJJ @ X
            EDE = DPP - DPJ @ X - X.T @ DJP + X.T @ DJJ @ X
            dS = EDE - np.swapaxes(DEJ, 1, 2) @ np.linalg.solve(AJJ, DEJ)
            if lap:
                # a Laplacian complement annihilates constants exactly; rounding
                # noise in that mode would grow like the mass term and swamp it
                S0 = S0.copy()
                S0[np.diag_indices(len(P))] -= S0.sum(axis=1)
        else:
            A = A0[None] + D
            APJ = A[:, P][:, :, J]
            S0 = np.zeros((len(P), len(P)))
            dS = A[:, P][:, :, P] - APJ @ np.linalg.solve(AJJ, np.swapaxes(APJ, 1, 2))
        out = (ports, S0, dS, negs, lap)
        memo[key] = out
        return out

    def count_below(self, name: str, n: int, x, bc: str = "D",
                    pin_ports: bool = False, chunk: int = 512) -> np.ndarray:
        """#{lambda < x} including zero modes, vectorized over x."""
        if bc not in ("D", "N"):
            raise ValueError("boundary condition must be 'D' or 'N'")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x <= 0):
            raise ValueError("inertia counting needs x > 0")
        out = np.empty(len(x), dtype=np.int64)
        for s in range(0, len(x), chunk):
            y = x[s:s + chunk]
            try:
                ports, S0, dS, neg, _ = self._node(name, n, y, bc, {})
            except np.linalg.LinAlgError:
                # x sits on an eigenvalue of a sub-block; nudging it down
                # leaves #{lambda < x} unchanged
                ports, S0, dS, neg, _ = self._node(name, n, y * (1 - 1e-11), bc, {})
            if not pin_ports and len(ports):
                neg = neg + (np.linalg.eigvalsh(S0[None] + dS) < 0).sum(axis=1)
            out[s:s + chunk] = neg
        return out

    def counting(self, name: str, n: int, bc: str = "D", pin_ports: bool = False,
                 zero_modes: int | None = None) -> Callable:
        """Counting function of positive eigenvalues <= x (off the spectrum).

        Neumann problems on connected domains have one zero mode, which is
        removed unless ``zero_modes`` says otherwise.
        """
        if zero_modes is None:
            zero_modes = 1 if bc == "N" else 0

        def rho(x):
            c = self.count_below(name, n, x, bc, pin_ports) - zero_modes
            return c if np.ndim(x) else int(c[0])
        return rho


def sg_counter(spec: FractalSpec | None = None) -> InertiaCounter:
    from .forms import sg_harmonic
    from .geometry import preset
    spec = spec or preset("sg")
    return InertiaCounter(spec, sg_harmonic(), SelfSimilarMeasure.uniform(3))
