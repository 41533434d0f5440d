"""Exact geometry of p.c.f. self-similar sets in the plane.

Points are stored as pairs ``(a, b)`` of Fractions standing for the planar
point ``(a, b*sqrt(3))``.  Every map used by the bundled fractals (scalings,
translations by lattice points, rotations by multiples of 60 degrees) is
rational in this basis, so vertex identification is exact.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

Point = tuple[Fraction, Fraction]
Word = tuple[int, ...]

DEFAULT_LEVEL_CAP = 12
SQRT3 = math.sqrt(3.0)


class InvalidWordError(ValueError):
    pass


class LevelCapError(ValueError):
    pass


def level_cap() -> int:
    raw = os.environ.get("FRACTAL_SPECTRA_LEVEL_CAP")
    return int(raw) if raw else DEFAULT_LEVEL_CAP


def _frac(v) -> Fraction:
    if isinstance(v, float):
        raise TypeError("map parameters must be exact rationals, got a float")
    return Fraction(v)


def point(a, b=0) -> Point:
    return (_frac(a), _frac(b))


@dataclass(frozen=True)
class AffineMap:
    """x -> L x + shift, with L acting on the (a, b) coordinates.

    ``ratio`` is the contraction ratio of the planar similitude.
    """

    matrix: tuple[Fraction, Fraction, Fraction, Fraction]
    shift: Point
    ratio: Fraction

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(_frac(v) for v in self.matrix))
        object.__setattr__(self, "shift", point(*self.shift))
        object.__setattr__(self, "ratio", _frac(self.ratio))
        if not 0 < self.ratio < 1:
            raise ValueError(f"contraction ratio {self.ratio} not in (0, 1)")

    def __call__(self, p: Point) -> Point:
        m = self.matrix
        return (m[0] * p[0] + m[1] * p[1] + self.shift[0],
                m[2] * p[0] + m[3] * p[1] + self.shift[1])

    @classmethod
    def toward(cls, fixed: Point, ratio) -> "AffineMap":
        """The homothety x -> ratio*(x - fixed) + fixed."""
        ratio = _frac(ratio)
        fixed = point(*fixed)
        shift = ((1 - ratio) * fixed[0], (1 - ratio) * fixed[1])
        return cls((ratio, 0, 0, ratio), shift, ratio)


@dataclass(frozen=True)
class FractalSpec:
    name: str
    maps: tuple[AffineMap, ...]
    boundary_points: tuple[Point, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "boundary_points",
                           tuple(point(*p) for p in self.boundary_points))
        if len(self.maps) < 2:
            raise ValueError("a self-similar set needs at least two maps")
        if not self.boundary_points:
            raise ValueError("boundary_points must be non-empty")
        if len(set(self.boundary_points)) != len(self.boundary_points):
            raise ValueError("boundary_points must be pairwise distinct")

    @property
    def alphabet_size(self) -> int:
        return len(self.maps)

    @property
    def Q(self) -> int:
        return len(self.boundary_points)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "maps": [{"matrix": [str(v) for v in m.matrix],
                      "shift": [str(v) for v in m.shift],
                      "ratio": str(m.ratio)} for m in self.maps],
            "boundary_points": [[str(a), str(b)] for a, b in self.boundary_points],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FractalSpec":
        try:
            maps = [AffineMap(tuple(Fraction(v) for v in m["matrix"]),
                              tuple(Fraction(v) for v in m["shift"]),
                              Fraction(m["ratio"])) for m in doc["maps"]]
            pts = [tuple(Fraction(v) for v in p) for p in doc["boundary_points"]]
        except KeyError as exc:
            raise ValueError(f"fractal spec is missing field {exc.args[0]!r}") from None
        return cls(doc.get("name", "custom"), tuple(maps), tuple(pts))


def check_word(spec: FractalSpec, w: Sequence[int]) -> Word:
    w = tuple(int(k) for k in w)
    for k in w:
        if not 1 <= k <= spec.alphabet_size:
            raise InvalidWordError(f"letter {k} outside 1..{spec.alphabet_size}")
    return w


def apply_word(spec: FractalSpec, w: Sequence[int], p: Point) -> Point:
    """F_w(p) = F_{w1}(F_{w2}(...F_{wn}(p)))."""
    w = check_word(spec, w)
    p = point(*p)
    for k in reversed(w):
        p = spec.maps[k - 1](p)
    return p


def cell_of(spec: FractalSpec, w: Sequence[int]) -> list[Point]:
    return [apply_word(spec, w, p) for p in spec.boundary_points]


def to_plane(p: Point) -> tuple[float, float]:
    return float(p[0]), float(p[1]) * SQRT3


@dataclass(frozen=True, eq=False)
class VertexSet:
    """The vertex set V_n with its level-n cells.

    ``cells[c]`` lists the vertex ids of F_w(V_0) for ``words[c]``, in the
    order of ``spec.boundary_points``.  ``images[k]`` maps the ids of V_{n-1}
    to the ids of F_{k+1}(V_{n-1}) inside V_n (empty at level 0).
    """

    level: int
    points: tuple[Point, ...]
    index: dict
    words: np.ndarray
    cells: np.ndarray
    images: tuple[np.ndarray, ...] = ()
    previous: "VertexSet | None" = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)

    @property
    def cell_incidence(self) -> list[list[Word]]:
        inc: list[list[Word]] = [[] for _ in self.points]
        for w, cell in zip(self.words, self.cells):
            for v in cell:
                inc[v].append(tuple(int(k) for k in w))
        return inc

    def coords(self) -> np.ndarray:
        return np.array([to_plane(p) for p in self.points])

    def ids_of(self, pts) -> list[int]:
        return [self.index[point(*p)] for p in pts]

    def chain(self) -> list["VertexSet"]:
        out, vs = [], self
        while vs is not None:
            out.append(vs)
            vs = vs.previous
        return out[::-1]


def _level_zero(spec: FractalSpec) -> VertexSet:
    pts = spec.boundary_points
    return VertexSet(0, pts, {p: i for i, p in enumerate(pts)},
                     np.zeros((1, 0), dtype=np.int8),
                     np.arange(spec.Q, dtype=np.int64)[None, :])


def _refine(spec: FractalSpec, prev: VertexSet) -> VertexSet:
    points: list[Point] = []
    index: dict = {}
    images = []
    for f in spec.maps:
        img = np.empty(len(prev), dtype=np.int64)
        for i, p in enumerate(prev.points):
            q = f(p)
            vid = index.get(q)
            if vid is None:
                vid = index[q] = len(points)
                points.append(q)
            img[i] = vid
        images.append(img)
    n = prev.level + 1
    words = np.concatenate([
        np.hstack([np.full((len(prev.words), 1), k + 1, dtype=np.int8), prev.words])
        for k in range(spec.alphabet_size)])
    cells = np.concatenate([img[prev.cells] for img in images])
    return VertexSet(n, tuple(points), index, words, cells, tuple(images), prev)


_CACHE: dict = {}


def build_vertex_set(spec: FractalSpec, n: int, cap: int | None = None) -> VertexSet:
    """V_n = union of F_i(V_{n-1}) with exact gluing of coincident points."""
    if n < 0:
        raise ValueError("level must be >= 0")
    cap = level_cap() if cap is None else cap
    if n > cap:
        raise LevelCapError(f"level {n} exceeds the level cap {cap} "
                            "(set FRACTAL_SPECTRA_LEVEL_CAP to override)")
    key = id(spec)
    chain = _CACHE.get(key)
    if chain is None or chain[0] is not spec:
        chain = _CACHE[key] = (spec, [_level_zero(spec)])
    levels = chain[1]
    while len(levels) <= n:
        levels.append(_refine(spec, levels[-1]))
    return levels[n]


def brute_force_vertex_count(spec: FractalSpec, n: int) -> int:
    """|V_n| by enumerating all N^n * Q address images."""
    seen = set()
    for w in np.ndindex(*([spec.alphabet_size] * n)):
        word = tuple(k + 1 for k in w)
        seen.update(cell_of(spec, word))
    return len(seen)


def sierpinski_gasket() -> FractalSpec:
    half = Fraction(1, 2)
    p = (point(0, 0), point(1, 0), point(half, half))
    return FractalSpec("sg", tuple(AffineMap.toward(q, half) for q in p), p)


def lindstrom_snowflake() -> FractalSpec:
    """Seven maps x -> (x - p_k)/3 + p_k over the hexagon vertices and the center.

    V_0 is the six hexagon vertices.
    """
    h = Fraction(1, 2)
    hexagon = (point(h, h), point(-h, h), point(-1, 0),
               point(-h, -h), point(h, -h), point(1, 0))
    third = Fraction(1, 3)
    maps = tuple(AffineMap.toward(q, third) for q in hexagon + (point(0, 0),))
    return FractalSpec("snowflake", maps, hexagon)


_SG = sierpinski_gasket()
_SNOWFLAKE = lindstrom_snowflake()
PRESETS = {"sg": _SG, "snowflake": _SNOWFLAKE}


def preset(name: str) -> FractalSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown fractal preset {name!r}; "
                       f"choose from {sorted(PRESETS)}") from None
