"""Piecewise-harmonic finite-energy functions on the gasket.

A function is stored by its exact rational values on the vertex set V_m of one
graph approximation; below that level it is understood as the harmonic
extension, computed cell by cell with the 3x3 matrices H_i that map the corner
values of a cell to the corner values of its sub-cell i.  The matrices encode
the classical (2a+2b+c)/5 midpoint rule; rows sum to one, so constants are
preserved, and all entries are nonnegative, so the maximum principle holds
exactly on rational data.

The renormalized graph energies (5/3)^n sum_{E_n} |du|^2 agree for every
n >= m, which is what makes every quantity in this module an exact rational.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .errors import GasketError
from .geometry import (
    Point,
    Word,
    cell_corners,
    locate,
    vertex_id,
    parse_vertex_id,
    vertices_at_level,
)

F0 = Fraction(0)
F1 = Fraction(1)
_FIFTH = Fraction(1, 5)
_TWO_FIFTH = Fraction(2, 5)

# H_i maps corner values of a cell to corner values of sub-cell i; row j is
# the value at w_i(p_j).
_MID = {
    (0, 1): (_TWO_FIFTH, _TWO_FIFTH, _FIFTH),
    (0, 2): (_TWO_FIFTH, _FIFTH, _TWO_FIFTH),
    (1, 2): (_FIFTH, _TWO_FIFTH, _TWO_FIFTH),
}


def _h_row(i: int, j: int) -> tuple[Fraction, Fraction, Fraction]:
    if i == j:
        return tuple(F1 if k == i else F0 for k in range(3))  # type: ignore[return-value]
    return _MID[(min(i, j), max(i, j))]


H_MATRICES = tuple(tuple(_h_row(i, j) for j in range(3)) for i in range(3))

Triple = tuple[Fraction, Fraction, Fraction]


def apply_h(i: int, t: Triple) -> Triple:
    h = H_MATRICES[i]
    return tuple(h[j][0] * t[0] + h[j][1] * t[1] + h[j][2] * t[2] for j in range(3))  # type: ignore[return-value]


def descend(t: Triple, word: Word) -> Triple:
    for c in word:
        t = apply_h(int(c), t)
    return t


def graph_energy(u: Triple, v: Triple) -> Fraction:
    """Level-0 bilinear graph energy sum over the three edges of a triangle."""
    return (
        (u[0] - u[1]) * (v[0] - v[1])
        + (u[1] - u[2]) * (v[1] - v[2])
        + (u[0] - u[2]) * (v[0] - v[2])
    )


def corner_weights(u: Triple) -> Triple:
    """Graph-Laplacian weights of a harmonic triple at the three corners."""
    return tuple(2 * u[j] - u[(j + 1) % 3] - u[(j + 2) % 3] for j in range(3))  # type: ignore[return-value]


@dataclass
class VertexFunction:
    """An m-harmonic function: exact values on V_m, harmonic below."""

    level: int
    values: dict[Point, Fraction]

    _energy_cache: Fraction | None = field(default=None, repr=False, compare=False)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def from_boundary(a, b, c) -> "VertexFunction":
        corners = cell_corners("")
        vals = dict(zip(corners, (Fraction(a), Fraction(b), Fraction(c))))
        return VertexFunction(0, vals)

    @staticmethod
    def constant(c) -> "VertexFunction":
        return VertexFunction.from_boundary(c, c, c)

    @staticmethod
    def basis(i: int) -> "VertexFunction":
        vals = [F0, F0, F0]
        vals[i] = F1
        return VertexFunction.from_boundary(*vals)

    # -- cell access -------------------------------------------------------
    def triple(self, word: Word) -> Triple:
        """Corner values on C_word; requires |word| >= level."""
        if len(word) < self.level:
            raise GasketError("cell is coarser than the stored level")
        prefix, rest = word[: self.level], word[self.level :]
        t = tuple(self.values[p] for p in cell_corners(prefix))
        return descend(t, rest)  # type: ignore[arg-type]

    def __call__(self, p: Point) -> Fraction:
        if p in self.values:
            return self.values[p]
        word = locate(p, self.level)
        t = self.triple(word)
        corners = cell_corners(word)
        for _ in range(64):
            if p in corners:
                return t[corners.index(p)]
            nxt = locate(p, len(word) + 1)
            i = int(nxt[-1])
            word = nxt
            t = apply_h(i, t)
            corners = cell_corners(word)
        raise GasketError(f"{p} is not a vertex of the gasket")

    # -- extension and energy ----------------------------------------------
    def extend(self, n: int) -> "VertexFunction":
        if n < self.level:
            raise GasketError("target level below stored level")
        vals: dict[Point, Fraction] = {}
        for letters in itertools.product("012", repeat=self.level):
            word = "".join(letters)
            self._fill(word, self.triple(word), n, vals)
        return VertexFunction(n, vals)

    def _fill(self, word: Word, t: Triple, n: int, out: dict[Point, Fraction]):
        if len(word) == n:
            for p, v in zip(cell_corners(word), t):
                out[p] = v
            return
        for i in range(3):
            self._fill(word + "012"[i], apply_h(i, t), n, out)

    def energy_at_level(self, n: int) -> Fraction:
        """(5/3)^n sum over E_n of |du|^2; equal to energy() for all n >= level."""
        return self.energy_with_at_level(self, n)

    def energy_with_at_level(self, other: "VertexFunction", n: int) -> Fraction:
        if n < max(self.level, other.level):
            raise GasketError("level too coarse for both functions")
        total = F0
        for letters in itertools.product("012", repeat=n):
            word = "".join(letters)
            total += graph_energy(self.triple(word), other.triple(word))
        return Fraction(5, 3) ** n * total

    def energy(self) -> Fraction:
        if self._energy_cache is None:
            self._energy_cache = self.energy_at_level(self.level)
        return self._energy_cache

    def energy_levels(self, n_max: int) -> list[Fraction]:
        """[E_m, ..., E_{n_max}] in one descent over the cell tree."""
        if n_max < self.level:
            raise GasketError("target level below stored level")
        acc = [F0] * (n_max - self.level + 1)

        def rec(t: Triple, depth: int):
            acc[depth] += graph_energy(t, t)
            if depth + self.level < n_max:
                for i in range(3):
                    rec(apply_h(i, t), depth + 1)

        for letters in itertools.product("012", repeat=self.level):
            rec(self.triple("".join(letters)), 0)
        return [Fraction(5, 3) ** (self.level + d) * s for d, s in enumerate(acc)]

    def energy_with(self, other: "VertexFunction") -> Fraction:
        m = max(self.level, other.level)
        return self.energy_with_at_level(other, m)

    # -- pointwise bounds ----------------------------------------------------
    def sup_norm(self) -> Fraction:
        return max(abs(v) for v in self.values.values())

    def osc_global(self) -> Fraction:
        return max(self.values.values()) - min(self.values.values())

    def oscillation(self, word: Word) -> Fraction:
        """max - min over C_word; exact by the maximum principle."""
        if len(word) >= self.level:
            t = self.triple(word)
            return max(t) - min(t)
        vals = []
        for letters in itertools.product("012", repeat=self.level - len(word)):
            vals.extend(self.triple(word + "".join(letters)))
        return max(vals) - min(vals)

    def laplacian_weights(self) -> dict[Point, Fraction]:
        """Vertex weights (5/3)^m sum_{y ~ x} (u(x) - u(y)) on V_m."""
        acc: dict[Point, Fraction] = {p: F0 for p in self.values}
        for letters in itertools.product("012", repeat=self.level):
            corners = cell_corners("".join(letters))
            t = [self.values[p] for p in corners]
            for j in range(3):
                for l in range(j + 1, 3):
                    acc[corners[j]] += t[j] - t[l]
                    acc[corners[l]] += t[l] - t[j]
        scale = Fraction(5, 3) ** self.level
        return {p: scale * v for p, v in acc.items()}

    def pairing(self, evaluate: Callable[[Point], Fraction]) -> Fraction:
        """E(self, v) = sum_x v(x) * weight(x) for any finite-energy v.

        Exact because the Laplacian weights of an m-harmonic function live on
        V_m and do not change under refinement.
        """
        return sum(evaluate(p) * w for p, w in self.laplacian_weights().items())

    # -- algebra -------------------------------------------------------------
    def _align(self, other: "VertexFunction") -> tuple["VertexFunction", "VertexFunction"]:
        m = max(self.level, other.level)
        return self.extend(m) if self.level < m else self, other.extend(m) if other.level < m else other

    def __add__(self, other: "VertexFunction") -> "VertexFunction":
        a, b = self._align(other)
        return VertexFunction(a.level, {p: v + b.values[p] for p, v in a.values.items()})

    def __sub__(self, other: "VertexFunction") -> "VertexFunction":
        a, b = self._align(other)
        return VertexFunction(a.level, {p: v - b.values[p] for p, v in a.values.items()})

    def __neg__(self) -> "VertexFunction":
        return VertexFunction(self.level, {p: -v for p, v in self.values.items()})

    def scale(self, c) -> "VertexFunction":
        c = Fraction(c)
        return VertexFunction(self.level, {p: c * v for p, v in self.values.items()})

    def shift(self, c) -> "VertexFunction":
        c = Fraction(c)
        return VertexFunction(self.level, {p: v + c for p, v in self.values.items()})

    def is_constant(self) -> bool:
        vals = iter(self.values.values())
        first = next(vals)
        return all(v == first for v in vals)

    def agrees_with(self, other: "VertexFunction") -> bool:
        a, b = self._align(other)
        return a.values == b.values

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        items = sorted(((vertex_id(p), v) for p, v in self.values.items()))
        return {
            "level": self.level,
            "values": [[vid, f"{v.numerator}/{v.denominator}"] for vid, v in items],
        }

    @staticmethod
    def from_json(data: dict) -> "VertexFunction":
        vals = {parse_vertex_id(vid): Fraction(s) for vid, s in data["values"]}
        vf = VertexFunction(int(data["level"]), vals)
        expected = set(vertices_at_level(vf.level))
        if set(vals) != expected:
            raise GasketError("vertex set does not match the declared level")
        return vf


def harmonic_basis() -> tuple[VertexFunction, VertexFunction, VertexFunction]:
    return VertexFunction.basis(0), VertexFunction.basis(1), VertexFunction.basis(2)


def random_harmonic(level: int, rng: random.Random, span: int = 9) -> VertexFunction:
    """m-harmonic function with random small rational values on V_m."""
    vals = {
        p: Fraction(rng.randint(-span, span), rng.randint(1, span))
        for p in vertices_at_level(level)
    }
    return VertexFunction(level, vals)
