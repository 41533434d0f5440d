"""Periodic profiles, bracketing checks, remainder regimes and renewal sums.

Counting functions enter either as ``Spectrum`` objects or as vectorized
callables ``x -> counts`` (for instance ``InertiaCounter.counting``).  Time
variables follow the convention t = (log x)/2, in which the profiles G and
G_* are periodic with periods T and rho*T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csgraph, csr_matrix

from .bgd import (IncidenceAnalysis, _reach, first_access, is_irreducible, perron_data,
                  return_period, spectral_radius)
from .spectra import Spectrum

DEFAULT_BINS = 64


class InsufficientRangeError(ValueError):
    pass


class DivergenceError(ValueError):
    pass


def as_counting(c) -> Callable:
    if isinstance(c, Spectrum):
        if c.total == 0:
            raise ValueError("empty spectrum")
        return lambda x: np.asarray(c.count(np.asarray(x, dtype=float)))
    if callable(c):
        return lambda x: np.asarray(c(np.asarray(x, dtype=float)))
    raise TypeError("counting must be a Spectrum or a callable")


@dataclass(frozen=True, eq=False)
class PeriodicProfile:
    """Bin means of a function folded by ``period``.

    ``rows[p, b]`` is the mean over bin b of period p; ``samples`` is the
    mean over periods and ``std`` the across-period standard deviation.
    ``fine`` holds the raw samples of one reference period, used when the
    profile is evaluated (``__call__``), at ``len(fine)`` points per period.
    """

    period: float
    samples: np.ndarray
    std: np.ndarray
    n_samples: np.ndarray
    rows: np.ndarray
    fine: np.ndarray
    fold_residual: float

    @property
    def bins(self) -> int:
        return len(self.samples)

    @property
    def min(self) -> float:
        return float(self.samples.min())

    @property
    def max(self) -> float:
        return float(self.samples.max())

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def amplitude(self) -> float:
        return self.max - self.min

    @property
    def bin_centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) * self.period / self.bins

    def __call__(self, t):
        """Piecewise-constant evaluation from the fine reference samples."""
        t = np.asarray(t, dtype=float)
        F = len(self.fine)
        ph = np.mod(t / self.period, 1.0) * F
        idx = np.minimum(np.floor(ph + 1e-9).astype(np.int64), F - 1)
        return self.fine[idx]

    def to_csv(self) -> str:
        lines = ["bin_center_t,mean,std,n_samples"]
        for c, m, s, n in zip(self.bin_centers, self.samples, self.std, self.n_samples):
            lines.append(f"{c:.17g},{m:.17g},{s:.17g},{int(n)}")
        return "\n".join(lines) + "\n"


def fold(values: np.ndarray, period: float, bins: int, per_bin: int) -> PeriodicProfile:
    """Fold samples taken at (j + 1/2) * period / (bins * per_bin), j = 0, 1, ...

    Sampling starts at an integer multiple of the period and covers whole
    periods, so ``values`` reshapes to (periods, bins, per_bin).
    """
    F = bins * per_bin
    values = np.asarray(values, dtype=float)
    if len(values) % F or len(values) == 0:
        raise ValueError("samples must cover whole periods")
    rows = values.reshape(-1, bins, per_bin).mean(axis=2)
    mean = rows.mean(axis=0)
    std = rows.std(axis=0, ddof=1) if len(rows) > 1 else np.zeros(bins)
    n = np.full(bins, len(rows) * per_bin)
    return PeriodicProfile(period, mean, std, n, rows, values[-F:].copy(), float(std.max()))


def period_grid(t_lo: float, t_hi: float, period: float, F: int, min_periods: int):
    """Whole periods k*period inside [t_lo, t_hi] sampled at F midpoints each."""
    k0 = math.ceil(t_lo / period - 1e-12)
    k1 = math.floor(t_hi / period + 1e-12)
    if k1 - k0 < min_periods:
        raise InsufficientRangeError(
            f"range holds {max(k1 - k0, 0)} whole periods, need {min_periods}")
    j = np.arange(k0 * F, k1 * F)
    return (j + 0.5) * period / F


def leading_profile(counting, d_S: float, T: float, x_range: tuple[float, float],
                    bins: int = DEFAULT_BINS, per_bin: int = 8,
                    min_periods: int = 3) -> PeriodicProfile:
    """G from rho(x) x^{-d_S/2} sampled log-uniformly and folded by T in t = log x / 2.

    The evaluation samples (``fine``) come from the highest sampled period.
    """
    rho = as_counting(counting)
    lo, hi = x_range
    if not 0 < lo < hi:
        raise ValueError("x_range must satisfy 0 < lo < hi")
    t = period_grid(math.log(lo) / 2, math.log(hi) / 2, T, bins * per_bin, min_periods)
    x = np.exp(2 * t)
    return fold(rho(x) * x ** (-d_S / 2), T, bins, per_bin)


def phi(counting, c: float, G: PeriodicProfile, d_S: float, x) -> np.ndarray:
    """phi(x) = rho(x) - c G(log x / 2) x^{d_S/2}, set to 0 for x < e."""
    x = np.asarray(x, dtype=float)
    rho = as_counting(counting)
    out = rho(x) - c * G(np.log(x) / 2) * x ** (d_S / 2)
    return np.where(x < math.e, 0.0, out)


@dataclass(frozen=True, eq=False)
class SecondProfile:
    consensus: PeriodicProfile
    per_domain: list
    agreement: float  # max over pairs and bins of |mean_i - mean_j|
    tolerance: float  # 3 x the largest per-domain fold residual

    @property
    def collapsed(self) -> bool:
        return self.agreement <= self.tolerance


@dataclass(frozen=True, eq=False)
class BoundedRemainder:
    """Psi = 1: the second term is O(1) (possibly times powers of log x)."""

    period_sup: list  # per domain, sup |phi| over each whole period T
    sup: list

    @property
    def bounded(self) -> bool:
        return all(np.isfinite(s) for s in self.sup)


def second_profile(countings: Sequence, analysis: IncidenceAnalysis, G: PeriodicProfile,
                   d_S: float, d: float, T: float, x_range: tuple[float, float],
                   bins: int = DEFAULT_BINS, domains: Sequence[int] | None = None,
                   min_periods: int = 3):
    """G_* from phi_i(x) x^{-d/2} / b_i at t - t_{i1} T, folded by rho*T.

    Sampling uses the resolution of ``G.fine``, so that G is evaluated at its
    own sample points.  With Psi = 1 a ``BoundedRemainder`` report is
    returned instead.
    """
    domains = list(range(len(countings))) if domains is None else list(domains)
    lo, hi = x_range
    c = [float(v) for v in analysis.c]
    F = len(G.fine)
    if abs(analysis.Psi - 1) < 1e-9:
        sups, per = [], []
        for i in domains:
            t = period_grid(math.log(lo) / 2, math.log(hi) / 2, T, F, min_periods)
            x = np.exp(2 * t)
            ph = np.abs(phi(countings[i], c[i], G, d_S, x)).reshape(-1, F).max(axis=1)
            per.append(ph)
            sups.append(float(ph.max()))
        return BoundedRemainder(per, sups)
    if not analysis.irreducible or analysis.b is None:
        raise ValueError("second_profile needs an irreducible system")
    rho = analysis.varrho
    period = rho * T
    per_bin = rho * F // bins
    if per_bin * bins != rho * F:
        raise ValueError("bins must divide rho * len(G.fine)")
    profiles = []
    for i in domains:
        shift = int(analysis.t_access[i, 0]) * T
        u = period_grid(math.log(lo) / 2 - shift, math.log(hi) / 2 - shift, period,
                        bins * per_bin, min_periods)
        x = np.exp(2 * (u + shift))
        v = phi(countings[i], c[i], G, d_S, x) * x ** (-d / 2) / analysis.b[i]
        profiles.append(fold(v, period, bins, per_bin))
    all_rows = np.vstack([p.rows for p in profiles])
    mean = all_rows.mean(axis=0)
    std = all_rows.std(axis=0, ddof=1) if len(all_rows) > 1 else np.zeros(bins)
    consensus = PeriodicProfile(period, mean, std, np.full(bins, len(all_rows) * per_bin),
                                all_rows, profiles[-1].fine, float(std.max()))
    agree = 0.0
    for a in range(len(profiles)):
        for b in range(a + 1, len(profiles)):
            agree = max(agree, float(np.abs(profiles[a].samples - profiles[b].samples).max()))
    tol = 3 * max(p.fold_residual for p in profiles)
    return SecondProfile(consensus, profiles, agree, tol)


# bracketing --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BracketingReport:
    x: np.ndarray
    lhs: np.ndarray  # |rho_i(x) - sum_j a_ij rho_j(g x) - s_i rho_*(g x)|, shape (P, len(x))
    M: float
    max_abs: float
    excess: float  # max(0, max_abs - M)


def verify_bracketing(fine: Sequence, coarse: Sequence, base_coarse, A, s, gamma: float,
                      M: float, x_grid) -> BracketingReport:
    """Two-sided bracketing of the domain counts at matched levels.

    ``fine`` holds the level-n counting functions of the domains, ``coarse``
    the level-(n-1) ones and ``base_coarse`` the level-(n-1) count of the
    whole fractal; all are compared at gamma^2 x.
    """
    A = np.asarray(A)
    s = np.asarray(s)
    P = len(A)
    if not (len(fine) == len(coarse) == P == len(s)):
        raise ValueError("need one fine and one coarse counting function per domain")
    x = np.asarray(x_grid, dtype=float)
    g2x = gamma ** 2 * x
    rc = np.array([as_counting(c)(g2x) for c in coarse], dtype=float)
    base = as_counting(base_coarse)(g2x).astype(float)
    lhs = np.empty((P, len(x)))
    for i in range(P):
        lhs[i] = np.abs(as_counting(fine[i])(x) - A[i] @ rc - s[i] * base)
    mx = float(lhs.max())
    return BracketingReport(x, lhs, float(M), mx, max(0.0, mx - M))


# remainder regimes -------------------------------------------------------

@dataclass(frozen=True)
class RegimeReport:
    regime: str  # "p>beta", "p=beta" or "p<beta"
    beta: float
    m: int
    p: float
    T: float
    exponents: tuple
    d_S: float

    def to_json(self) -> dict:
        return {"regime": self.regime, "beta": float(self.beta), "m": self.m,
                "p": float(self.p), "T": float(self.T), "exponents": list(self.exponents),
                "d_S": float(self.d_S)}


def lattice_exponents(gammas: Sequence[float], max_den: int = 1000):
    """(T, m_i) with -log gamma_i = m_i T, m_i coprime integers."""
    logs = [-math.log(g) for g in gammas]
    base = logs[0]
    fr = []
    for v in logs:
        f = Fraction(v / base).limit_denominator(max_den)
        if abs(float(f) - v / base) > 1e-9 * max(1.0, v / base):
            raise ValueError("gamma_i are not lattice (log-ratios are not rational)")
        fr.append(f)
    L = 1
    for f in fr:
        L = L * f.denominator // math.gcd(L, f.denominator)
    n = [int(f * L) for f in fr]
    g = 0
    for v in n:
        g = math.gcd(g, v)
    return base * g / L, tuple(v // g for v in n)


def remainder_regime(gammas: Sequence[float], d_S: float | None = None) -> RegimeReport:
    if len(gammas) < 2:
        raise ValueError("need N >= 2 contraction weights")
    if any(not 0 < g < 1 for g in gammas):
        raise ValueError("gamma_i must lie in (0, 1)")
    if d_S is None:
        d_S = brentq(lambda s: sum(g ** s for g in gammas) - 1, 1e-12, 1e3, xtol=1e-15)
    T, m = lattice_exponents(gammas)
    p = math.exp(d_S * T)
    # numerator 1 - sum (z/p)^{m_i}, highest degree first for numpy
    deg = max(m)
    num = np.zeros(deg + 1)
    num[deg] = 1.0
    for mi in m:
        num[deg - mi] -= p ** -mi
    q, r = np.polydiv(num, np.array([-1.0, 1.0]))
    if np.abs(r).max() > 1e-9 * np.abs(num).max():
        raise ValueError("z = 1 is not a root; d_S is inconsistent with gamma_i")
    q = np.trim_zeros(q, "f")
    roots = np.roots(q) if len(q) > 1 else np.array([])
    if len(roots) == 0:
        return RegimeReport("p<beta", math.inf, 0, p, T, m, d_S)
    mod = np.abs(roots)
    beta = float(mod.min())
    on = roots[np.abs(mod - beta) <= 1e-7 * beta]
    mult = 1
    for z in on:
        mult = max(mult, int(np.sum(np.abs(on - z) <= 1e-5 * beta)))
    if abs(p - beta) <= 1e-9 * p:
        regime = "p=beta"
    elif p > beta:
        regime = "p>beta"
    else:
        regime = "p<beta"
    return RegimeReport(regime, beta, mult, p, T, m, d_S)


# renewal -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RenewalSystem:
    """f(x) = A f(x - T) + z(x) on the grid x_k = k T / K.

    ``z`` has shape (n, L) with samples at x_k, k < L, and vanishes beyond.
    When ``psi`` is given, A is divided by it.
    """

    A: np.ndarray
    T: float
    z: np.ndarray
    K: int = 64
    psi: float | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if self.psi is not None:
            A = A / self.psi
        object.__setattr__(self, "A", A)
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        object.__setattr__(self, "z", z)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or z.shape[0] != A.shape[0]:
            raise ValueError("A must be square and z must have one row per state")
        if np.any(A < 0):
            raise ValueError("A must be non-negative")
        if self.T <= 0 or self.K < 1:
            raise ValueError("need T > 0 and K >= 1")
        if not np.all(np.isfinite(z)):
            raise ValueError("z must be finite")

    def check_dri(self) -> None:
        """Proxy for direct Riemann integrability of the sampled z.

        The last quarter of the grid must carry at most 1e-3 of the sum of
        cell suprema.  Finite sums do not need this; the limit theorems do.
        """
        cells = np.abs(self.z).sum(axis=0)
        total = cells.sum()
        tail = cells[-max(1, len(cells) // 4):].sum()
        if total > 0 and tail > 1e-3 * total:
            raise ValueError("z is not directly Riemann integrable on this grid "
                             "(tail carries too much mass)")

    @property
    def h(self) -> float:
        return self.T / self.K

    @classmethod
    def from_functions(cls, A, T: float, z: Sequence[Callable], support: float,
                       K: int = 64, psi: float | None = None) -> "RenewalSystem":
        L = int(math.ceil(support / (T / K))) + 1
        x = np.arange(L) * T / K
        zz = np.array([np.where(x >= 0, np.asarray(f(x), dtype=float), 0.0) for f in z])
        return cls(A, T, np.hstack([zz, np.zeros((len(zz), 3 * L))]), K, psi)


@dataclass(frozen=True, eq=False)
class RenewalTrace:
    x: np.ndarray
    f: np.ndarray  # shape (n, len(x))
    residual: float

    def to_csv(self) -> str:
        n = self.f.shape[0]
        lines = ["x," + ",".join(f"f_{i + 1}" for i in range(n))]
        for k, xv in enumerate(self.x):
            lines.append(f"{xv:.17g}," + ",".join(f"{v:.17g}" for v in self.f[:, k]))
        return "\n".join(lines) + "\n"


def renewal_solve(sys: RenewalSystem, horizon: float, check_radius: bool = True) -> RenewalTrace:
    """f(x_k) = sum_{j <= k/K} A^j z(x_k - jT), the finite form of the renewal sum."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if check_radius and spectral_radius(sys.A) > 1 + 1e-9:
        raise DivergenceError("spectral radius of A exceeds 1")
    K = sys.K
    J = int(math.ceil(horizon / sys.T))
    n = sys.A.shape[0]
    Lz = (J + 1) * K
    z = np.zeros((n, Lz))
    m = min(Lz, sys.z.shape[1])
    z[:, :m] = sys.z[:, :m]
    Z = z.reshape(n, J + 1, K)
    powers = [np.eye(n)]
    for _ in range(J):
        powers.append(powers[-1] @ sys.A)
    F = np.zeros_like(Z)
    for p in range(J + 1):
        for j in range(p + 1):
            F[:, p] += powers[j] @ Z[:, p - j]
    f = F.reshape(n, Lz)
    prev = np.zeros_like(f)
    prev[:, K:] = f[:, :-K]
    res = f - sys.A @ prev - z
    return RenewalTrace(np.arange(Lz) * sys.h, f, float(np.abs(res).max()))


@dataclass(frozen=True, eq=False)
class RenewalLimit:
    B: np.ndarray
    varrho: int
    t1: np.ndarray  # t_{i1}
    deviation: float  # sup over the last three periods
    period_max: np.ndarray  # sup deviation over each whole period rho*T
    trace: RenewalTrace

    def to_json(self) -> dict:
        return {"B": self.B.tolist(), "varrho": self.varrho,
                "t1": [int(v) for v in self.t1], "deviation": float(self.deviation),
                "period_max": self.period_max.tolist()}


def renewal_limit(sys: RenewalSystem, horizon: float) -> RenewalLimit:
    """Compare f_i(x + t_{i1}T) with the folded limit for irreducible A.

    The folded sum over k of z_j(x + t_{j1}T + k rho T) is weighted by
    rho T B, B = u v^T / (T v^T u): the lattice of the renewal measure is
    generated by rho T, which makes the weight rho u v^T / (v^T u).
    """
    A = sys.A
    if not is_irreducible(A):
        raise ValueError("A is reducible; use reducible_growth")
    sys.check_dri()
    psi, u, v = perron_data(A)
    if abs(psi - 1) > 1e-9:
        raise ValueError(f"spectral radius is {psi}, expected 1 (pass psi to normalize)")
    n = len(A)
    g = 0
    for i in range(n):
        g = math.gcd(g, return_period(A, i, 2 * n))
    varrho = g
    t1 = first_access(A, 2 * n)[:, 0]
    B = np.outer(u, v) / (sys.T * (v @ u))
    trace = renewal_solve(sys, horizon)
    K = sys.K
    step = varrho * K
    Lf = trace.f.shape[1]
    # folded z: S_j(phase) = sum_k z_j(phase + k rho T) over the grid
    zlen = sys.z.shape[1]
    zz = np.zeros((n, ((zlen + 2 * n * K) // step + 2) * step))
    zz[:, :zlen] = sys.z
    folded = zz.reshape(n, -1, step).sum(axis=1)  # indexed by phase in [0, rho T)
    W = varrho * sys.T * B
    maxshift = int(t1.max()) * K
    idx = np.arange(0, Lf - maxshift)
    dev = np.empty((n, len(idx)))
    for i in range(n):
        fi = trace.f[i, idx + int(t1[i]) * K]
        lim = np.zeros(len(idx))
        for j in range(n):
            lim += W[i, j] * folded[j, (idx + int(t1[j]) * K) % step]
        dev[i] = fi - lim
    per = np.abs(dev).max(axis=0)
    nper = len(per) // step
    period_max = per[:nper * step].reshape(nper, step).max(axis=1)
    last = per[max(0, (nper - 3)) * step:nper * step]
    return RenewalLimit(B, varrho, t1, float(last.max()), period_max, trace)


@dataclass(frozen=True, eq=False)
class GrowthReport:
    j: int
    degree: int | None  # None when inconclusive
    margin: float
    rss: np.ndarray  # residuals of degree 0..3 fits
    vanishes: bool
    profile: PeriodicProfile | None
    expected: int | None  # m_j from the access structure, None if j does not reach S

    @property
    def conclusive(self) -> bool:
        return self.degree is not None


def reducible_growth(sys: RenewalSystem, j: int, horizon: float, bins: int = 8) -> GrowthReport:
    """Polynomial growth order of f_j in x for spectral radius 1.

    f_j is sampled at period-aligned points x = phase + k rho_j T for a few
    phases; polynomials of degree 0..3 in k are fitted jointly, and the
    degree is the least D whose residual is within 10x of the cubic one.
    """
    A = sys.A
    sys.check_dri()
    rad = spectral_radius(A)
    if rad > 1 + 1e-9:
        raise DivergenceError("spectral radius of A exceeds 1")
    expected, rho_j = _access_data(A, j)
    trace = renewal_solve(sys, horizon)
    K = sys.K
    step = rho_j * K
    f = trace.f[j]
    nper = len(f) // step
    start = nper // 3  # skip the transient near the support of z
    rows = f[:nper * step].reshape(nper, step)[start:]
    k = np.arange(start, nper, dtype=float)
    if len(k) < 6:
        raise InsufficientRangeError("horizon too short for a degree-3 fit")
    scale = max(float(np.abs(rows).max()), 1e-300)
    vanishes = float(np.abs(rows[-1]).max()) <= 1e-9 * max(1.0, float(np.abs(f).max()))
    kk = (k - k.mean()) / (k.std() or 1.0)
    rss = np.zeros(4)
    for D in range(4):
        V = np.vander(kk, D + 1)
        coef, *_ = np.linalg.lstsq(V, rows / scale, rcond=None)
        rss[D] = float(((V @ coef - rows / scale) ** 2).sum())
    tiny = 1e-20 * len(k) * step
    degree = None
    for D in range(4):
        if rss[D] <= 10 * rss[3] + tiny:
            degree = D
            break
    if degree is None or degree == 3:
        margin = 0.0
        degree = None
    elif degree == 0:
        margin = math.inf
    else:
        margin = rss[degree - 1] / max(rss[degree], tiny)
    profile = None
    if degree is not None and not vanishes:
        norm = rows / np.maximum(k, 1.0)[:, None] ** degree
        per_bin = step // bins if step % bins == 0 else 1
        b = bins if step % bins == 0 else step
        profile = fold(norm[-max(2, len(norm) // 3):].ravel(), rho_j * sys.T, b, per_bin)
    if vanishes:
        degree, margin = 0, math.inf
    return GrowthReport(j, degree, margin, rss, vanishes, profile, expected)


def _access_data(A: np.ndarray, j: int):
    """(m_j, rho_j) of state j for a non-negative matrix with spectral radius 1."""
    n = len(A)
    psi = spectral_radius(A)
    reach = _reach(A)
    _, labels = csgraph.connected_components(csr_matrix(A), directed=True, connection="strong")
    classes = {}
    for i, l in enumerate(labels):
        classes.setdefault(int(l), []).append(i)
    basic = [c for c in classes.values()
             if (len(c) > 1 or reach[c[0], c[0]])
             and abs(spectral_radius(A[np.ix_(c, c)]) - psi) <= 1e-9 * max(psi, 1)]
    memo = {}

    def height(ci):
        if ci not in memo:
            c = basic[ci]
            memo[ci] = max((height(k) + 1 for k, c2 in enumerate(basic)
                            if k != ci and reach[c[0], c2[0]]), default=0)
        return memo[ci]

    acc = [k for k, c in enumerate(basic) if reach[j, c[0]]]
    if not acc:
        return None, 1
    rho = 1
    for k in acc:
        c = basic[k]
        sub = A[np.ix_(c, c)]
        g = 0
        for a in range(len(c)):
            g = math.gcd(g, return_period(sub, a, 2 * len(c)))
        rho = rho * g // math.gcd(rho, g)
    return max(height(k) for k in acc), rho


# heat trace --------------------------------------------------------------

def heat_trace_transform(G: PeriodicProfile, d_S: float, t, s_range=(-25.0, 6.0),
                         points: int = 200001) -> np.ndarray:
    """t^{-d_S/2} * integral of G(log xi/2 - log t/2) xi^{d_S/2} e^{-xi} dxi.

    Trapezoid quadrature in s = log xi on a fine uniform grid (G is a step
    function, so the grid resolves each step many times over).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    s = np.linspace(s_range[0], s_range[1], points)
    w = np.exp(d_S * s / 2 - np.exp(s) + s)
    out = np.empty(len(t))
    for k, tv in enumerate(t):
        out[k] = tv ** (-d_S / 2) * np.trapezoid(G(s / 2 - math.log(tv) / 2) * w, s)
    return out
