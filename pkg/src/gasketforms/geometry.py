"""Self-similar addressing and exact planar geometry of the Sierpinski gasket.

The gasket is the attractor of the three similitudes w_i(x) = p_i + (x - p_i)/2
with p_0 = (0,0), p_1 = (1/2, sqrt(3)/2), p_2 = (1,0).  A *word* over {0,1,2}
addresses the cell C_sigma = w_sigma(K); the empty word addresses the whole
gasket.  Every vertex produced by the construction has rational x and a
y-coordinate that is a rational multiple of sqrt(3), so points are stored as
two exact rationals and all identities (vertex gluing, path consecutiveness,
orientation) are decided by exact equality.

Conventions used throughout the package:

* side i of a cell is the edge opposite corner i, oriented from corner
  (i+2) mod 3 to corner (i+1) mod 3; with these orientations the three sides
  traverse the perimeter counter-clockwise;
* the lacuna of C_sigma (boundary of the removed middle triangle) consists of
  side i of the sub-cell sigma+i for i = 0,1,2, each in its canonical
  orientation; as a closed path this runs clockwise;
* an oriented edge is encoded as (cell word, side, sign) and serialized as
  "word/side/+" or "word/side/-".  The encoding is stable under refinement:
  both halves of an edge keep the side index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .errors import GasketError, NonConsecutiveError

Word = str  # letters in {0,1,2}; "" is the empty word

_LETTERS = "012"


@dataclass(frozen=True)
class Point:
    """Exact planar point: ``y`` stores the coefficient of sqrt(3)."""

    x: Fraction
    y: Fraction

    def __repr__(self):
        return f"Point({self.x}, {self.y}*sqrt3)"


P0 = Point(Fraction(0), Fraction(0))
P1 = Point(Fraction(1, 2), Fraction(1, 2))
P2 = Point(Fraction(1), Fraction(0))
CORNERS = (P0, P1, P2)

HALF = Fraction(1, 2)


def check_word(word: Word) -> Word:
    if any(c not in _LETTERS for c in word):
        raise GasketError(f"invalid word {word!r}: letters must be in 0,1,2")
    return word


def is_prefix(tau: Word, sigma: Word) -> bool:
    """Prefix order: tau <= sigma."""
    return sigma.startswith(tau)


def apply_map(i: int, p: Point) -> Point:
    """The contraction w_i."""
    c = CORNERS[i]
    return Point(c.x + (p.x - c.x) * HALF, c.y + (p.y - c.y) * HALF)


def apply_word(word: Word, p: Point) -> Point:
    """w_sigma = w_{sigma_1} o ... o w_{sigma_m} (innermost map is the last letter)."""
    for c in reversed(word):
        p = apply_map(int(c), p)
    return p


@lru_cache(maxsize=None)
def cell_corners(word: Word) -> tuple[Point, Point, Point]:
    """The three vertices w_sigma(p_j), j = 0,1,2."""
    if not word:
        return CORNERS
    sub = cell_corners(word[1:])
    i = int(word[0])
    return tuple(apply_map(i, p) for p in sub)  # type: ignore[return-value]


def midpoint(a: Point, b: Point) -> Point:
    return Point((a.x + b.x) * HALF, (a.y + b.y) * HALF)


def signed_area2(a: Point, b: Point, c: Point) -> Fraction:
    """Twice the signed area of (a,b,c) in units of sqrt(3); > 0 iff ccw."""
    return (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)


def barycentric(p: Point) -> tuple[Fraction, Fraction, Fraction]:
    """Coordinates of p with respect to (p_0, p_1, p_2)."""
    l1 = 2 * p.y
    l2 = p.x - p.y
    return (1 - l1 - l2, l1, l2)


def in_hull(p: Point) -> bool:
    return all(l >= 0 for l in barycentric(p))


def locate(p: Point, level: int) -> Word:
    """A word of the given length whose cell contains p.

    At ramification vertices two cells qualify; the smallest letter wins, which
    keeps the result deterministic.
    """
    word = []
    for _ in range(level):
        for i in range(3):
            c = CORNERS[i]
            q = Point(2 * p.x - c.x, 2 * p.y - c.y)
            if in_hull(q):
                word.append(_LETTERS[i])
                p = q
                break
        else:
            raise GasketError(f"point {p} is not in the gasket hull chain")
    return "".join(word)


@dataclass(frozen=True)
class OrientedEdge:
    """Oriented edge of some graph approximation, encoded by containing cell,
    opposite-corner index and orientation sign."""

    cell: Word
    side: int
    sign: int = 1

    def __post_init__(self):
        if self.side not in (0, 1, 2) or self.sign not in (1, -1):
            raise GasketError(f"bad edge {self.cell}/{self.side}/{self.sign}")
        check_word(self.cell)

    @property
    def level(self) -> int:
        return len(self.cell)

    def _ends(self) -> tuple[Point, Point]:
        corners = cell_corners(self.cell)
        s = corners[(self.side + 2) % 3]
        t = corners[(self.side + 1) % 3]
        return (s, t) if self.sign == 1 else (t, s)

    @property
    def source(self) -> Point:
        return self._ends()[0]

    @property
    def target(self) -> Point:
        return self._ends()[1]

    @property
    def midpoint(self) -> Point:
        s, t = self._ends()
        return midpoint(s, t)

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.cell, self.side, -self.sign)

    def children(self) -> tuple["OrientedEdge", "OrientedEdge"]:
        """The two consecutive level+1 edges covering this edge."""
        a = _LETTERS[(self.side + 2) % 3]
        b = _LETTERS[(self.side + 1) % 3]
        first = OrientedEdge(self.cell + a, self.side, self.sign)
        second = OrientedEdge(self.cell + b, self.side, self.sign)
        return (first, second) if self.sign == 1 else (second, first)

    def __str__(self):
        return f"{self.cell}/{self.side}/{'+' if self.sign == 1 else '-'}"

    @staticmethod
    def parse(text: str) -> "OrientedEdge":
        parts = text.split("/")
        if len(parts) != 3 or parts[2] not in "+-":
            raise GasketError(f"cannot parse edge {text!r}")
        return OrientedEdge(check_word(parts[0]), int(parts[1]), 1 if parts[2] == "+" else -1)


def refine_edge(e: OrientedEdge) -> tuple[OrientedEdge, OrientedEdge, Point]:
    """Split an edge at its midpoint into two consecutive finer edges."""
    first, second = e.children()
    return first, second, e.midpoint


def subdivide(e: OrientedEdge, level: int) -> list[OrientedEdge]:
    """The 2^(level - e.level) consecutive descendants of e at the given level."""
    if level < e.level:
        raise GasketError("cannot subdivide to a coarser level")
    edges = [e]
    for _ in range(level - e.level):
        edges = [c for parent in edges for c in parent.children()]
    return edges


def edges_at_level(n: int) -> Iterator[OrientedEdge]:
    """All edges of E_n with canonical orientation, in word-lexicographic order."""
    for letters in itertools.product(_LETTERS, repeat=n):
        word = "".join(letters)
        for side in range(3):
            yield OrientedEdge(word, side)


def vertices_at_level(n: int) -> list[Point]:
    """V_n, sorted by coordinates."""
    seen = set()
    for letters in itertools.product(_LETTERS, repeat=n):
        seen.update(cell_corners("".join(letters)))
    return sorted(seen, key=lambda p: (p.x, p.y))


@dataclass(frozen=True)
class ElementaryPath:
    edges: tuple[OrientedEdge, ...]
    closed: bool

    @property
    def source(self) -> Point:
        return self.edges[0].source

    @property
    def target(self) -> Point:
        return self.edges[-1].target

    def reversed(self) -> "ElementaryPath":
        return ElementaryPath(tuple(e.reversed() for e in reversed(self.edges)), self.closed)

    def __add__(self, other: "ElementaryPath") -> "ElementaryPath":
        return validate_path(self.edges + other.edges)

    def __iter__(self):
        return iter(self.edges)

    def __len__(self):
        return len(self.edges)


def validate_path(edges: Sequence[OrientedEdge]) -> ElementaryPath:
    """Check consecutiveness by exact point equality and set the closed flag."""
    if not edges:
        raise GasketError("a path needs at least one edge")
    for k in range(1, len(edges)):
        if edges[k].source != edges[k - 1].target:
            raise NonConsecutiveError(k)
    closed = edges[-1].target == edges[0].source
    return ElementaryPath(tuple(edges), closed)


def perimeter_path(word: Word) -> ElementaryPath:
    """Counter-clockwise boundary of C_sigma (three edges of level |sigma|)."""
    return validate_path([OrientedEdge(word, 1), OrientedEdge(word, 0), OrientedEdge(word, 2)])


def lacuna_path(word: Word) -> ElementaryPath:
    """Clockwise boundary of the removed middle triangle of C_sigma.

    The three sides are side i of the sub-cell sigma+i; in their canonical
    orientations they chain into a clockwise loop.
    """
    return validate_path([OrientedEdge(word + _LETTERS[i], i) for i in range(3)])


@dataclass(frozen=True)
class CellGeometry:
    word: Word
    vertices: tuple[Point, Point, Point]
    perimeter: ElementaryPath
    lacuna: ElementaryPath


def cell_geometry(word: Word) -> CellGeometry:
    check_word(word)
    return CellGeometry(word, cell_corners(word), perimeter_path(word), lacuna_path(word))


def vertex_id(p: Point) -> str:
    """Stable textual id used in JSON serializations."""
    return f"{p.x.numerator}/{p.x.denominator}:{p.y.numerator}/{p.y.denominator}"


def parse_vertex_id(text: str) -> Point:
    xs, ys = text.split(":")
    xn, xd = xs.split("/")
    yn, yd = ys.split("/")
    return Point(Fraction(int(xn), int(xd)), Fraction(int(yn), int(yd)))


def path_to_json(path: ElementaryPath) -> list[str]:
    return [str(e) for e in path.edges]


def path_from_json(data: Sequence[str]) -> ElementaryPath:
    return validate_path([OrientedEdge.parse(t) for t in data])
