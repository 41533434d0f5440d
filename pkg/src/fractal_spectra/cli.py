"""Command line front end: analyze, spectrum, asymptotics, renewal, presets.

Exit codes: 0 ok, 2 bad configuration, 3 consistency failure, 4 resource
caps, 5 missing inputs (with --no-compute), 6 divergent renewal system.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bgd as bgd_mod
from . import geometry
from .asymptotics import (BoundedRemainder, DivergenceError, RenewalSystem, leading_profile,
                          period_grid, phi, reducible_growth, remainder_regime, renewal_limit,
                          renewal_solve, second_profile, verify_bracketing)
from .bgd import (BgdSystem, ConsistencyError, analyze, bgd_consistency, domain_vertices,
                  is_irreducible, spectral_radius)
from .forms import (HarmonicStructure, SelfSimilarMeasure, assemble_domain, check_compatibility,
                    gamma_data, sg_harmonic, snowflake_harmonic, standard_form)
from .geometry import FractalSpec, LevelCapError, build_vertex_set, level_cap
from .spectra import (DENSE_CAP, DenseCapError, InertiaCounter, Spectrum, counting_csv,
                      decimate_sg, log_grid, solve_dense)


class ConfigError(ValueError):
    pass


class MissingInputError(Exception):
    pass


# deterministic JSON ------------------------------------------------------

def _num(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    return f"{v:.17g}"


def dumps(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (str, Fraction)):
        return json.dumps(str(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, newline="\n")


# configuration -----------------------------------------------------------

ASYMPTOTICS_DEFAULTS = {"inertia_level": 36, "reference_periods": [15, 18],
                        "window": [8, 16], "bins": 64, "bracket_levels": [3, 4, 5, 6],
                        "bracket_M": 9, "bracket_x": [10.0, 1e4, 601]}


@dataclass
class ExperimentConfig:
    fractal: FractalSpec | None
    harmonic: HarmonicStructure | None
    measure: SelfSimilarMeasure | None
    system: BgdSystem | None
    levels: list
    bcs: list
    x_grid: dict
    out: Path
    method: str = "auto"
    asymptotics: dict = field(default_factory=lambda: dict(ASYMPTOTICS_DEFAULTS))

    @property
    def standard_sg(self) -> bool:
        return (self.fractal is geometry.preset("sg") and self.harmonic == sg_harmonic()
                and self.measure == SelfSimilarMeasure.uniform(3))


def _field(doc: dict, name: str, kind, default=None):
    v = doc.get(name, default)
    if v is not None and not isinstance(v, kind):
        raise ConfigError(f"config field {name!r} has the wrong type")
    return v


def _int_list(v, name: str) -> list:
    if isinstance(v, str):
        try:
            v = [int(s) for s in v.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"config field {name!r} must list integers") from None
    if not isinstance(v, list) or not v or not all(isinstance(k, int) for k in v):
        raise ConfigError(f"config field {name!r} must be a non-empty list of integers")
    return v


def _resolve_fractal(v):
    if v is None or isinstance(v, FractalSpec):
        return v
    if isinstance(v, str):
        try:
            return geometry.preset(v)
        except KeyError as exc:
            raise ConfigError(f"config field 'fractal': {exc.args[0]}") from None
    if isinstance(v, dict):
        return FractalSpec.from_json(v)
    raise ConfigError("config field 'fractal' must be a preset name or an object")


def _resolve_system(v):
    if v is None:
        return None
    if isinstance(v, str):
        try:
            return bgd_mod.bgd_preset(v)
        except KeyError as exc:
            raise ConfigError(f"config field 'bgd': {exc.args[0]}") from None
    if isinstance(v, dict):
        return BgdSystem.from_json(v)
    raise ConfigError("config field 'bgd' must be a preset name or an object")


def _resolve_harmonic(doc, fractal):
    h = doc.get("harmonic")
    if h is not None and not isinstance(h, dict):
        raise ConfigError("config field 'harmonic' must be an object")
    if fractal is None:
        return None
    if fractal is geometry.preset("snowflake"):
        if not h or "r" not in h:
            raise ConfigError("config field 'harmonic.r' is required for the snowflake")
        return snowflake_harmonic(Fraction(str(h["r"])), h.get("D"))
    if h is None:
        if fractal is geometry.preset("sg"):
            return sg_harmonic()
        raise ConfigError("config field 'harmonic' is required for a custom fractal")
    for key in ("D", "r"):
        if key not in h:
            raise ConfigError(f"config field 'harmonic.{key}' is missing")
    return HarmonicStructure(tuple(tuple(Fraction(str(v)) for v in row) for row in h["D"]),
                             tuple(Fraction(str(v)) for v in h["r"]))


def _resolve_measure(doc, fractal):
    m = doc.get("measure")
    if fractal is None:
        return None
    if m is None:
        return SelfSimilarMeasure.uniform(fractal.alphabet_size)
    if not isinstance(m, dict) or "weights" not in m:
        raise ConfigError("config field 'measure.weights' is missing")
    return SelfSimilarMeasure(tuple(Fraction(str(v)) for v in m["weights"]))


def load_config(args) -> ExperimentConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno}, "
                              f"column {exc.colno}): {exc.msg}") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    if getattr(args, "preset", None):
        name = args.preset
        if name in geometry.PRESETS:
            doc["fractal"] = name
        elif name in bgd_mod.PRESETS:
            doc["bgd"] = name
        else:
            raise ConfigError(f"unknown preset {name!r}; run 'presets' for the list")
    try:
        system = _resolve_system(doc.get("bgd"))
        fr = doc.get("fractal")
        if fr is None and system is not None and system.fractal is not None:
            fr = system.fractal
        fractal = _resolve_fractal(fr)
        harmonic = _resolve_harmonic(doc, fractal)
        measure = _resolve_measure(doc, fractal)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (ConsistencyError, LevelCapError)):
            raise
        msg = exc.args[0] if exc.args else type(exc).__name__
        raise ConfigError(f"invalid config: {msg}") from None
    if system is not None and fractal is not None and system.fractal is not None \
            and fractal.alphabet_size != system.N:
        raise ConfigError("config field 'bgd': alphabet does not match the fractal")

    levels = _int_list(getattr(args, "levels", None) or doc.get("levels", [1, 2, 3]), "levels")
    cap = level_cap()
    for n in levels:
        if n < 0:
            raise ConfigError("config field 'levels' must be non-negative")
        if n > cap:
            raise LevelCapError(f"level {n} exceeds the level cap {cap} "
                                "(set FRACTAL_SPECTRA_LEVEL_CAP to override)")
    bcs = getattr(args, "bc", None) or doc.get("bc", ["D", "N"])
    if isinstance(bcs, str):
        bcs = [s.strip() for s in bcs.split(",") if s.strip()]
    if not isinstance(bcs, list) or not bcs or any(b not in ("D", "N") for b in bcs):
        raise ConfigError("config field 'bc' must be a non-empty subset of ['D', 'N']")
    x_grid = {"x_min": 1.0, "decades": 4.0, "per_decade": 50}
    x_grid.update(_field(doc, "x_grid", dict, {}))
    if not (x_grid["x_min"] > 0 and x_grid["decades"] > 0 and x_grid["per_decade"] >= 1):
        raise ConfigError("config field 'x_grid' needs x_min > 0, decades > 0, per_decade >= 1")
    method = _field(doc, "method", str, "auto")
    if method not in ("auto", "dense", "decimation"):
        raise ConfigError("config field 'method' must be 'auto', 'dense' or 'decimation'")
    asym = dict(ASYMPTOTICS_DEFAULTS)
    extra = _field(doc, "asymptotics", dict, {})
    for k in extra:
        if k not in asym:
            raise ConfigError(f"config field 'asymptotics.{k}' is not recognized")
    asym.update(extra)
    out = Path(getattr(args, "out", None) or _field(doc, "out", str, "out"))
    return ExperimentConfig(fractal, harmonic, measure, system, sorted(set(levels)), bcs,
                            x_grid, out, method, asym)


# spectra -----------------------------------------------------------------

def _tag(name: str) -> str:
    """Domain name as a file name fragment ("omega-2/3" -> "omega-2_3")."""
    return re.sub(r"[^A-Za-z0-9.-]+", "_", name)


def spectrum_path(out: Path, domain: str, bc: str, level: int) -> Path:
    return out / f"spectrum_{_tag(domain)}_{bc}_L{level}.csv"


def spectrum_csv(spec: Spectrum, dimension: int) -> str:
    return (spec.to_csv() + f"# free_vertices,{dimension}\n"
            f"# positive_eigenvalues,{spec.total - spec.zero_multiplicity}\n"
            f"# zero_multiplicity,{spec.zero_multiplicity}\n")


def read_spectrum_csv(path: Path, bc: str, domain: str, level: int) -> Spectrum:
    values, mult, zero = [], [], 0
    for line in path.read_text().splitlines()[1:]:
        if line.startswith("# zero_multiplicity,"):
            zero = int(line.split(",")[1])
        elif line and not line.startswith("#"):
            v, k = line.split(",")
            values.append(float(v))
            mult.append(int(k))
    return Spectrum(np.array(values), np.array(mult, dtype=np.int64), bc, domain, level, zero)


def _domains(cfg: ExperimentConfig) -> list:
    """(name, index or None) pairs: the whole fractal, then the BGD domains."""
    out = [("K", None)]
    if cfg.system is not None:
        if not cfg.system.geometric:
            raise ConfigError(f"bgd system {cfg.system.name!r} carries combinatorial data "
                              "only; spectra need a geometric system")
        out += [(d.name, i) for i, d in enumerate(cfg.system.domains)]
    return out


def compute_spectrum(cfg: ExperimentConfig, name: str, idx, bc: str, n: int):
    """(Spectrum, free-vertex count) for one domain, bc and level."""
    if idx is None:
        if cfg.method == "decimation" or (cfg.method == "auto" and cfg.standard_sg):
            if not cfg.standard_sg:
                raise ConfigError("decimation applies to the standard SG only")
            sp = decimate_sg(n, bc)
            return sp, sp.total
        form = standard_form(cfg.fractal, cfg.harmonic, cfg.measure, n, bc)
    else:
        vs = build_vertex_set(cfg.fractal, n)
        free, bnd = domain_vertices(cfg.system, cfg.fractal, idx, n)
        form = assemble_domain(cfg.harmonic, cfg.measure, vs, free, bnd, bc)
    try:
        return solve_dense(form, bc, name), form.dimension
    except DenseCapError:
        if idx is None and cfg.standard_sg:
            hint = "set \"method\": \"decimation\" (or \"auto\") for the whole SG"
        else:
            hint = ("lower the level; 'asymptotics' reaches deep levels through the "
                    "inertia counter instead")
        raise DenseCapError(f"{name} at level {n} has {form.dimension} free vertices, "
                            f"above the dense cap {DENSE_CAP}; {hint}") from None


def cmd_spectrum(cfg: ExperimentConfig, args) -> int:
    if cfg.fractal is None:
        if cfg.system is not None:
            raise ConfigError(f"bgd system {cfg.system.name!r} carries combinatorial data "
                              "only; spectra need a geometric system")
        raise ConfigError("config field 'fractal' is required for spectra")
    compat = check_compatibility(cfg.harmonic, cfg.fractal)
    if not compat.compatible:
        print(f"warning: harmonic structure is not compatible "
              f"(residual {compat.residual}); energies are not self-similar",
              file=sys.stderr)
    grid = log_grid(cfg.x_grid["x_min"], cfg.x_grid["decades"], int(cfg.x_grid["per_decade"]))
    files = []
    for name, idx in _domains(cfg):
        for bc in cfg.bcs:
            for n in cfg.levels:
                if bc == "D" and idx is None and n == 0:
                    continue
                sp, dim = compute_spectrum(cfg, name, idx, bc, n)
                p = spectrum_path(cfg.out, name, bc, n)
                _write(p, spectrum_csv(sp, dim))
                c = cfg.out / f"counting_{_tag(name)}_{bc}_L{n}.csv"
                _write(c, counting_csv(sp.count, grid))
                files.append({"domain": name, "bc": bc, "level": n, "spectrum": p.name,
                              "counting": c.name, "free_vertices": dim,
                              "zero_multiplicity": sp.zero_multiplicity})
    manifest = {"fractal": cfg.fractal.name,
                "system": cfg.system.name if cfg.system else None,
                "compatible": compat.compatible, "compatibility_residual": compat.residual,
                "files": files}
    _write(cfg.out / "spectrum.json", dumps(manifest) + "\n")
    print(f"wrote {len(files)} spectra to {cfg.out}")
    return 0


# analyze -----------------------------------------------------------------

def _gamma(cfg: ExperimentConfig):
    if cfg.harmonic is None or cfg.measure is None:
        return None
    return gamma_data(cfg.harmonic, cfg.measure)


def analysis_report(cfg: ExperimentConfig) -> dict:
    if cfg.system is None:
        raise ConfigError("config field 'bgd' is required for analyze")
    sysb = cfg.system
    gd = _gamma(cfg)
    known = gd is not None and gd.uniform
    an = analyze(sysb, gamma=gd.gamma if known else 1 / math.sqrt(5))
    report = {"system": sysb.name, "variant": sysb.variant, "N": sysb.N,
              "domains": [d.name for d in sysb.domains]}
    report.update(an.to_json())
    report["log_Psi"] = math.log(an.Psi)
    report["d"] = an.d if known else None
    report["d_S"] = gd.d_S if gd is not None else None
    report["T"] = gd.T if known else None
    report["periods"] = {"t_period": {str(k): v for k, v in sorted(an.t_period.items())},
                         "rho_class": {",".join(map(str, an.classes[k])): v
                                       for k, v in sorted(an.rho_class.items())}}
    if sysb.geometric and cfg.fractal is not None:
        rep = bgd_consistency(sysb, cfg.fractal, 4)
        if not rep.ok:
            raise ConsistencyError(f"bgd consistency failed: {rep.violation}")
        report["consistency_levels"] = rep.checked_levels
    return report


def cmd_analyze(cfg: ExperimentConfig, args) -> int:
    report = analysis_report(cfg)
    text = dumps(report) + "\n"
    _write(cfg.out / f"analysis_{cfg.system.name}.json", text)
    sys.stdout.write(text)
    return 0


# asymptotics -------------------------------------------------------------

def _load_or_compute(cfg, name, idx, n, no_compute):
    p = spectrum_path(cfg.out, name, "D", n)
    if p.exists():
        return read_spectrum_csv(p, "D", name, n)
    if no_compute:
        raise MissingInputError(f"missing {p} (run 'spectrum' first or drop --no-compute)")
    sp, dim = compute_spectrum(cfg, name, idx, "D", n)
    _write(p, spectrum_csv(sp, dim))
    return sp


def _profile_summary(p) -> dict:
    return {"min": p.min, "max": p.max, "mean": p.mean, "fold_residual": p.fold_residual,
            "nonpositive": p.max <= 3 * p.fold_residual,
            "nontrivial": max(abs(p.min), abs(p.max)) > 10 * p.fold_residual}


def reducible_report(counts, an, G, d_S, T, window, domains) -> dict:
    """Per-period sup of |phi_i| x^{-d/2} for reducible systems with Psi > 1.

    Growth of these sups like k^{m_i} over periods k reflects the (log x)^{m_i}
    factor of the second term; no periodic profile is extracted.
    """
    F = len(G.fine)
    t = period_grid(window[0] * T, window[1] * T, T, F, 3)
    x = np.exp(2 * t)
    out = {"kind": "reducible", "heights": an.to_json()["heights"], "domains": {}}
    for i, ((nm, _), cnt) in enumerate(zip(domains, counts)):
        v = np.abs(phi(cnt, float(an.c[i]), G, d_S, x)) * x ** (-an.d / 2)
        out["domains"][nm] = {"m": an.m[i],
                              "period_sup": v.reshape(-1, F).max(axis=1).tolist()}
    return out


def cmd_asymptotics(cfg: ExperimentConfig, args) -> int:
    sysb = cfg.system
    if sysb is None or cfg.fractal is None:
        raise ConfigError("asymptotics needs a geometric 'bgd' system")
    domains = _domains(cfg)
    gd = _gamma(cfg)
    if not gd.uniform:
        raise ConfigError("asymptotics needs a common contraction weight gamma")
    a = cfg.asymptotics
    T, d_S = gd.T, gd.d_S
    an = analyze(sysb, gamma=gd.gamma)
    rep = bgd_consistency(sysb, cfg.fractal, 4)
    if not rep.ok:
        raise ConsistencyError(f"bgd consistency failed: {rep.violation}")
    out = cfg.out
    summary: dict = {"system": sysb.name, "Psi": an.Psi, "d": an.d, "d_S": d_S, "T": T}

    # bracketing from dense level spectra (stored by 'spectrum' or computed here)
    levels = _int_list(a["bracket_levels"], "asymptotics.bracket_levels")
    lo, hi, pts = a["bracket_x"]
    xg = np.geomspace(float(lo), float(hi), int(pts))
    brk = []
    for n_lo, n_hi in zip(levels, levels[1:]):
        if n_hi != n_lo + 1:
            raise ConfigError("config field 'asymptotics.bracket_levels' must be consecutive")
        fine = [_load_or_compute(cfg, nm, i, n_hi, args.no_compute) for nm, i in domains[1:]]
        coarse = [_load_or_compute(cfg, nm, i, n_lo, args.no_compute) for nm, i in domains[1:]]
        base = _load_or_compute(cfg, "K", None, n_lo, args.no_compute)
        r = verify_bracketing(fine, coarse, base, an.A, an.s, gd.gamma, a["bracket_M"], xg)
        brk.append({"levels": [n_lo, n_hi], "max_abs": r.max_abs, "excess": r.excess})
    bracketing = {"M": a["bracket_M"], "x_range": [float(lo), float(hi)], "points": int(pts),
                  "pairs": brk}
    _write(out / "bracketing.json", dumps(bracketing) + "\n")
    summary["bracketing"] = bracketing

    regime = remainder_regime(gd.gammas, d_S).to_json()
    _write(out / "regime.json", dumps(regime) + "\n")
    summary["regime"] = regime

    # profiles from inertia counts at depth
    n = int(a["inertia_level"])
    ic = InertiaCounter(cfg.fractal, cfg.harmonic, cfg.measure, sysb.recursion_rules())
    K = ic.counting("K", n, "D", pin_ports=True)
    r0, r1 = a["reference_periods"]
    G = leading_profile(K, d_S, T, (math.exp(2 * r0 * T), math.exp(2 * r1 * T)), int(a["bins"]))
    _write(out / "profile_G.csv", G.to_csv())
    summary["G"] = {"mean": G.mean, "amplitude": G.amplitude, "fold_residual": G.fold_residual}
    counts = [ic.counting(nm, n, "D") for nm, _ in domains[1:]]
    w0, w1 = a["window"]
    if abs(an.Psi - 1) > 1e-9 and not an.irreducible:
        summary["second_term"] = reducible_report(counts, an, G, d_S, T, (w0, w1), domains[1:])
        _write(out / "reducible.json", dumps(summary["second_term"]) + "\n")
        sp = None
    else:
        sp = second_profile(counts, an, G, d_S, an.d, T,
                            (math.exp(2 * w0 * T), math.exp(2 * w1 * T)), int(a["bins"]))
    if isinstance(sp, BoundedRemainder):
        br = {"kind": "bounded-remainder", "bounded": sp.bounded,
              "domains": {nm: {"sup": s, "period_sup": list(ps)}
                          for (nm, _), s, ps in zip(domains[1:], sp.sup, sp.period_sup)}}
        _write(out / "bounded_remainder.json", dumps(br) + "\n")
        summary["second_term"] = br
    elif sp is not None:
        _write(out / "profile_G_star.csv", sp.consensus.to_csv())
        per = {}
        for (nm, _), p in zip(domains[1:], sp.per_domain):
            _write(out / f"profile_G_{_tag(nm)}.csv", p.to_csv())
            per[nm] = _profile_summary(p)
        summary["second_term"] = {"kind": "periodic-profile", "period": sp.consensus.period,
                                  "agreement": sp.agreement, "tolerance": sp.tolerance,
                                  "collapsed": sp.collapsed, "domains": per}
    summary["inertia"] = {"level": n, "reference_periods": [r0, r1], "window": [w0, w1]}
    _write(out / "asymptotics.json", dumps(summary) + "\n")
    print(f"wrote asymptotics report for {sysb.name} to {out}")
    return 0


# renewal -----------------------------------------------------------------

_T5 = math.log(5) / 2
RENEWAL_DEMOS = {
    "renewal-scalar": {"A": [[1]], "T": 1.0, "K": 64, "z": [{"kind": "step", "a": 0}]},
    "renewal-periodic": {"A": [[0, 2], [1, 0]], "T": _T5, "K": 64, "normalize": True,
                         "z": [{"kind": "bump", "a": 0, "b": 1.3 * _T5},
                               {"kind": "bump", "a": 0, "b": 1.3 * _T5, "scale": 0.5}]},
}


def _z_function(spec: dict, k: int):
    try:
        kind = spec["kind"]
        if kind not in ("step", "indicator", "bump"):
            raise ConfigError(f"renewal field 'z[{k}].kind' must be step, indicator or bump")
        a = float(spec.get("a", 0.0))
        scale = float(spec.get("scale", 1.0))
        if kind == "step":
            return (lambda x: scale * (x >= a)), math.inf
        b = float(spec["b"])
        if not b > a:
            raise ConfigError(f"renewal field 'z[{k}]' needs b > a")
        if kind == "indicator":
            return (lambda x: scale * ((x >= a) & (x < b))), b
        return (lambda x: np.where((x >= a) & (x < b),
                                   scale * np.sin(np.pi * (x - a) / (b - a)) ** 2, 0.0)), b
    except KeyError as exc:
        raise ConfigError(f"renewal field 'z[{k}].{exc.args[0]}' is missing") from None


def load_renewal(doc: dict, horizon_periods: float) -> tuple[RenewalSystem, bool]:
    """The sampled system, and whether every z_i has compact support."""
    for key in ("A", "T", "z"):
        if key not in doc:
            raise ConfigError(f"renewal field {key!r} is missing")
    A = np.asarray(doc["A"], dtype=float)
    T = float(doc["T"])
    if A.ndim != 2 or len(doc["z"]) != len(A):
        raise ConfigError("renewal field 'z' needs one entry per row of 'A'")
    psi = spectral_radius(A) if doc.get("normalize") else doc.get("psi")
    fz = [_z_function(s, k) for k, s in enumerate(doc["z"])]
    support = max(b for _, b in fz)
    compact = not math.isinf(support)
    if not compact:
        # a step is sampled up to the horizon; the truncation is never seen
        support = (horizon_periods + 1) * T
    rs = RenewalSystem.from_functions(A, T, [f for f, _ in fz], support,
                                      int(doc.get("K", 64)), psi)
    return rs, compact


def cmd_renewal(cfg_args) -> int:
    args = cfg_args
    if args.horizon is not None and not args.horizon > 0:
        raise ConfigError("--horizon must be positive")
    horizon = 60.0 if args.horizon is None else float(args.horizon)
    if args.preset:
        if args.preset not in RENEWAL_DEMOS:
            raise ConfigError(f"unknown renewal preset {args.preset!r}; "
                              f"choose from {sorted(RENEWAL_DEMOS)}")
        doc, name = RENEWAL_DEMOS[args.preset], args.preset
    elif args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"renewal file is not valid JSON (line {exc.lineno}, "
                              f"column {exc.colno}): {exc.msg}") from None
        name = Path(args.config).stem
    else:
        raise ConfigError("renewal needs --preset or --config")
    rs, compact = load_renewal(doc, horizon)
    out = Path(args.out or "out")
    x_end = horizon * rs.T
    trace = renewal_solve(rs, x_end)
    _write(out / f"renewal_{name}.csv", trace.to_csv())
    summary = {"system": name, "horizon_periods": horizon, "T": rs.T,
               "spectral_radius": spectral_radius(rs.A), "residual": trace.residual}
    dri = compact
    if dri:
        try:
            rs.check_dri()
        except ValueError:
            dri = False
    summary["z_integrable"] = dri
    if dri and is_irreducible(rs.A):
        lim = renewal_limit(rs, x_end)
        summary["limit"] = lim.to_json()
        summary["deviation"] = lim.deviation
    elif dri:
        summary["growth"] = [{"state": j + 1, "degree": g.degree, "expected": g.expected,
                              "margin": g.margin, "vanishes": g.vanishes}
                             for j, g in ((j, reducible_growth(rs, j, x_end))
                                          for j in range(len(rs.A)))]
    _write(out / f"renewal_{name}.json", dumps(summary) + "\n")
    sys.stdout.write(dumps(summary) + "\n")
    return 0


# presets -----------------------------------------------------------------

def cmd_presets(args) -> int:
    doc = {"fractals": sorted(geometry.PRESETS),
           "bgd": {k: {"fractal": v.fractal, "domains": v.P, "variant": v.variant}
                   for k, v in sorted(bgd_mod.PRESETS.items())},
           "renewal": sorted(RENEWAL_DEMOS)}
    sys.stdout.write(dumps(doc) + "\n")
    return 0


# entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractal-spectra",
                                description="Spectra and Weyl asymptotics on p.c.f. fractals")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("analyze", "spectrum", "asymptotics", "renewal", "presets"):
        s = sub.add_parser(name)
        if name == "presets":
            continue
        s.add_argument("--preset")
        s.add_argument("--config")
        s.add_argument("--out")
        if name == "renewal":
            s.add_argument("--horizon", type=float,
                           help="horizon in periods T (default 60)")
            continue
        s.add_argument("--levels", help="comma separated, e.g. 1,2,3")
        s.add_argument("--bc", help="D, N or D,N")
        s.add_argument("--no-compute", action="store_true",
                       help="use stored spectra only")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        return cmd_presets(args)
    if args.command == "renewal":
        return cmd_renewal(args)
    cfg = load_config(args)
    return {"analyze": cmd_analyze, "spectrum": cmd_spectrum,
            "asymptotics": cmd_asymptotics}[args.command](cfg, args)


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConsistencyError as exc:
        code, msg = 3, exc
    except (DenseCapError, LevelCapError) as exc:
        code, msg = 4, exc
    except MissingInputError as exc:
        code, msg = 5, exc
    except DivergenceError as exc:
        code, msg = 6, exc
    except (ValueError, KeyError, TypeError, OSError) as exc:
        code, msg = 2, exc
    text = msg.args[0] if msg.args else type(msg).__name__
    print(f"error: {text}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
