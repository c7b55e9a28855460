"""Smooth 1-forms on the gasket: representation, integration, inner product.

A form is stored in three parts that are implicitly summed:

* a *universal* part, a list of terms a·dg·b with a, b pointwise expressions
  over piecewise-harmonic functions and g piecewise-harmonic; the term pairs
  with an oriented edge e as a(e+)·(g(e+) - g(e-))·b(e-);
* a *harmonic* part, a finitely supported rational combination of the unit
  lacuna forms dz_sigma (local potentials with corner values 1/6, 0, -1/6 on
  each sub-cell of C_sigma, arranged so the clockwise lacuna integral is 1);
* an *exact* part d(U) given by a potential U.

Two independent evaluation routes are provided for integrals and for the
energy inner product Q, and both are used by the test suite:

* exact mode works in rational arithmetic.  Edge integrals of harmonic data
  are values of the eigenvalue-1 fixed point of the two-child refinement
  operator on 3x3 kernels (pinned by the row-sum and symmetrization
  identities); Q is evaluated by vertex-Laplacian pairings when one left slot
  is constant and through the quadrilinear self-similar fixed-point kernel
  when both are occupied.
* certified mode evaluates the dyadic Riemann sums I_n, or the level sums
  Q~_n = (5/3)^n sum |omega(e)|^2-type pairings, in floating point, and
  reports a sound rational radius from the geometric tail constants
  ((3/5)^n for integrals, (3/5)^(n/2)-rate bounds for Q).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .certified import CertifiedValue, sqrt_upper
from .errors import (
    ExactnessUnavailableError,
    GasketError,
    NonConvergentError,
)
from .geometry import (
    ElementaryPath,
    OrientedEdge,
    Word,
    cell_corners,
    check_word,
    is_prefix,
    subdivide,
)
from .harmonic import (
    H_MATRICES,
    Triple,
    VertexFunction,
    corner_weights,
    descend,
    graph_energy,
)

F0 = Fraction(0)
F1 = Fraction(1)
R35 = Fraction(3, 5)
R53 = Fraction(5, 3)

_H_FLOAT = np.array([[[float(x) for x in row] for row in H] for H in H_MATRICES])


# ---------------------------------------------------------------------------
# rational linear solve
# ---------------------------------------------------------------------------

def solve_unique(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Solve an overdetermined consistent system with a unique solution."""
    n = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots: dict[int, int] = {}
    r = 0
    for c in range(n):
        piv = next((k for k in range(r, len(aug)) if aug[k][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][c]
        aug[r] = [x * inv for x in aug[r]]
        row_r = aug[r]
        for k in range(len(aug)):
            if k != r and aug[k][c] != 0:
                f = aug[k][c]
                aug[k] = [x - f * y for x, y in zip(aug[k], row_r)]
        pivots[c] = r
        r += 1
    for k in range(r, len(aug)):
        if aug[k][n] != 0:
            raise GasketError("inconsistent linear system")
    if len(pivots) < n:
        raise GasketError("linear system does not pin a unique solution")
    out = [F0] * n
    for c, rr in pivots.items():
        out[c] = aug[rr][n]
    return out


# ---------------------------------------------------------------------------
# pointwise expression algebra over piecewise-harmonic functions
# ---------------------------------------------------------------------------

class Expr:
    """Sum/product closure of piecewise-harmonic functions and constants."""

    def __call__(self, p) -> Fraction:
        raise NotImplementedError

    def atoms(self) -> list[VertexFunction]:
        return []

    def max_level(self) -> int:
        return 0

    def as_const(self) -> Optional[Fraction]:
        return None

    def as_vf(self) -> Optional[VertexFunction]:
        """Reduce to a single piecewise-harmonic function if possible."""
        return None

    def energy_ub(self) -> Fraction:
        raise NotImplementedError

    def sup_ub(self) -> Fraction:
        raise NotImplementedError

    def osc_ub(self) -> Fraction:
        raise NotImplementedError

    def cols(self, arrays: dict, col: int) -> np.ndarray:
        """Float values at one corner column of per-cell triple arrays."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(data: dict) -> "Expr":
        kind = data["kind"]
        if kind == "const":
            return Const(Fraction(data["value"]))
        if kind == "vf":
            return Atom(VertexFunction.from_json(data["function"]))
        if kind == "sum":
            return Sum([Expr.from_json(t) for t in data["terms"]])
        if kind == "product":
            return Product([Expr.from_json(t) for t in data["terms"]])
        raise GasketError(f"unknown expression kind {kind!r}")


@dataclass(frozen=True)
class Const(Expr):
    c: Fraction

    def __call__(self, p):
        return self.c

    def as_const(self):
        return self.c

    def as_vf(self):
        return VertexFunction.constant(self.c)

    def energy_ub(self):
        return F0

    def sup_ub(self):
        return abs(self.c)

    def osc_ub(self):
        return F0

    def cols(self, arrays, col):
        return float(self.c)

    def to_json(self):
        return {"kind": "const", "value": f"{self.c.numerator}/{self.c.denominator}"}


@dataclass(frozen=True, eq=False)
class Atom(Expr):
    vf: VertexFunction

    def __call__(self, p):
        return self.vf(p)

    def atoms(self):
        return [self.vf]

    def max_level(self):
        return self.vf.level

    def as_const(self):
        if self.vf.is_constant():
            return next(iter(self.vf.values.values()))
        return None

    def as_vf(self):
        return self.vf

    def energy_ub(self):
        return self.vf.energy()

    def sup_ub(self):
        return self.vf.sup_norm()

    def osc_ub(self):
        return self.vf.osc_global()

    def cols(self, arrays, col):
        return arrays[id(self.vf)][:, col]

    def to_json(self):
        return {"kind": "vf", "function": self.vf.to_json()}


@dataclass(frozen=True, eq=False)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def __init__(self, terms: Iterable[Expr]):
        object.__setattr__(self, "terms", tuple(terms))

    def __call__(self, p):
        return sum(t(p) for t in self.terms)

    def atoms(self):
        return [a for t in self.terms for a in t.atoms()]

    def max_level(self):
        return max(t.max_level() for t in self.terms)

    def as_vf(self):
        parts = [t.as_vf() for t in self.terms]
        if any(p is None for p in parts):
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out + p
        return out

    def as_const(self):
        vf = self.as_vf()
        if vf is not None and vf.is_constant():
            return next(iter(vf.values.values()))
        return None

    def energy_ub(self):
        vf = self.as_vf()
        if vf is not None:
            return vf.energy()
        k = len(self.terms)
        return k * sum(t.energy_ub() for t in self.terms)

    def sup_ub(self):
        vf = self.as_vf()
        if vf is not None:
            return vf.sup_norm()
        return sum(t.sup_ub() for t in self.terms)

    def osc_ub(self):
        vf = self.as_vf()
        if vf is not None:
            return vf.osc_global()
        return sum(t.osc_ub() for t in self.terms)

    def cols(self, arrays, col):
        return sum(t.cols(arrays, col) for t in self.terms)

    def to_json(self):
        return {"kind": "sum", "terms": [t.to_json() for t in self.terms]}


@dataclass(frozen=True, eq=False)
class Product(Expr):
    terms: tuple[Expr, ...]

    def __init__(self, terms: Iterable[Expr]):
        flat: list[Expr] = []
        for t in terms:
            if isinstance(t, Product):
                flat.extend(t.terms)
            else:
                flat.append(t)
        object.__setattr__(self, "terms", tuple(flat))

    def __call__(self, p):
        out = F1
        for t in self.terms:
            out *= t(p)
        return out

    def atoms(self):
        return [a for t in self.terms for a in t.atoms()]

    def max_level(self):
        return max(t.max_level() for t in self.terms)

    def as_const(self):
        consts = [t.as_const() for t in self.terms]
        if any(c is None for c in consts):
            return None
        out = F1
        for c in consts:
            out *= c
        return out

    def as_vf(self):
        c = F1
        nonconst: list[VertexFunction] = []
        for t in self.terms:
            tc = t.as_const()
            if tc is not None:
                c *= tc
                continue
            vf = t.as_vf()
            if vf is None:
                return None
            nonconst.append(vf)
        if len(nonconst) == 0:
            return VertexFunction.constant(c)
        if len(nonconst) == 1:
            return nonconst[0].scale(c)
        return None

    def energy_ub(self):
        vf = self.as_vf()
        if vf is not None:
            return vf.energy()
        # fold the Dirichlet-algebra bound E[uv] <= 2(|u|^2 E[v] + |v|^2 E[u])
        e, s = self.terms[0].energy_ub(), self.terms[0].sup_ub()
        for t in self.terms[1:]:
            e = 2 * (s * s * t.energy_ub() + t.sup_ub() ** 2 * e)
            s = s * t.sup_ub()
        return e

    def sup_ub(self):
        out = F1
        for t in self.terms:
            out *= t.sup_ub()
        return out

    def osc_ub(self):
        out = F0
        for i, t in enumerate(self.terms):
            rest = F1
            for j, u in enumerate(self.terms):
                if j != i:
                    rest *= u.sup_ub()
            out += rest * t.osc_ub()
        return out

    def cols(self, arrays, col):
        out = self.terms[0].cols(arrays, col)
        for t in self.terms[1:]:
            out = out * t.cols(arrays, col)
        return out

    def to_json(self):
        return {"kind": "product", "terms": [t.to_json() for t in self.terms]}


ONE = Const(F1)


def _osc_rate(expr: Expr, n: int) -> Fraction:
    """Upper bound for the oscillation of ``expr`` on any level-n cell."""
    c = expr.as_const()
    if c is not None:
        return F0
    if isinstance(expr, Atom):
        return expr.osc_ub() * R35 ** (n - expr.max_level())
    if isinstance(expr, Sum):
        return sum((_osc_rate(t, n) for t in expr.terms), F0)
    if isinstance(expr, Product):
        out = F0
        for i, t in enumerate(expr.terms):
            rest = F1
            for j, u in enumerate(expr.terms):
                if j != i:
                    rest *= u.sup_ub()
            out += rest * _osc_rate(t, n)
        return out
    raise NonConvergentError("no oscillation rate for this expression")


def _defect_ub(expr: Expr, n: int) -> Fraction:
    """Upper bound for E[expr] - E_n[expr] (energy above the level-n
    harmonic interpolant).  Zero for piecewise-harmonic data; decays like
    (3/5)^(2n) for products of such."""
    if expr.as_vf() is not None:
        if expr.max_level() > n:
            raise NonConvergentError("defect bound needs n at or above the data level")
        return F0
    if isinstance(expr, Sum):
        return 2 * sum((_defect_ub(t, n) for t in expr.terms), F0)
    if isinstance(expr, Product):
        facts = [t for t in expr.terms if t.as_const() is None]
        cmul = F1
        for t in expr.terms:
            c = t.as_const()
            if c is not None:
                cmul *= abs(c)
        if any(t.as_vf() is None for t in facts):
            raise NonConvergentError("defect bound only for products of harmonics")
        L = max(t.max_level() for t in facts)
        if L > n:
            raise NonConvergentError("defect bound needs n at or above the data level")
        rho = R35 ** (n - L)
        k = len(facts)
        sups = [t.sup_ub() for t in facts]
        oscs = [t.osc_ub() for t in facts]
        energies = [t.energy_ub() for t in facts]
        subsets = [S for r in range(2, k + 1) for S in itertools.combinations(range(k), r)]
        m = len(subsets) + 1
        total = F0
        for S in subsets:
            outside = F1
            for j in range(k):
                if j not in S:
                    outside *= sups[j] ** 2
            inner = F0
            for i in S:
                prod = F1
                for j in S:
                    if j != i:
                        prod *= oscs[j] ** 2
                inner += prod * energies[i]
            total += outside * Fraction(4) ** len(S) * rho ** (2 * (len(S) - 1)) * inner
        return cmul * cmul * m * total
    raise NonConvergentError("no defect bound for this expression")


# ---------------------------------------------------------------------------
# form terms and smooth forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FormTerm:
    """One bimodule term a·dg·b; pairs with an edge as a(e+)·dg(e)·b(e-)."""

    left: Expr
    g: VertexFunction
    right: Expr = ONE

    def edge_value(self, e: OrientedEdge) -> Fraction:
        s, t = e.source, e.target
        return self.left(t) * (self.g(t) - self.g(s)) * self.right(s)

    def left_total(self) -> Expr:
        """The smooth-form equivalent single left factor a·b."""
        if self.right.as_const() == 1:
            return self.left
        return Product([self.left, self.right])

    def to_json(self) -> dict:
        return {"left": self.left.to_json(), "g": self.g.to_json(), "right": self.right.to_json()}

    @staticmethod
    def from_json(data: dict) -> "FormTerm":
        return FormTerm(
            Expr.from_json(data["left"]),
            VertexFunction.from_json(data["g"]),
            Expr.from_json(data["right"]),
        )


@dataclass(frozen=True, eq=False)
class SmoothForm:
    """universal terms + harmonic dz coefficients + exact potential."""

    terms: tuple[FormTerm, ...] = ()
    harmonic: dict[Word, Fraction] = field(default_factory=dict)
    exact: VertexFunction | None = None

    def __add__(self, other: "SmoothForm") -> "SmoothForm":
        harm = dict(self.harmonic)
        for w, c in other.harmonic.items():
            harm[w] = harm.get(w, F0) + c
        ex = self.exact
        if other.exact is not None:
            ex = other.exact if ex is None else ex + other.exact
        return SmoothForm(self.terms + other.terms, harm, ex)

    def scaled(self, c) -> "SmoothForm":
        c = Fraction(c)
        terms = tuple(
            FormTerm(Product([Const(c), t.left]), t.g, t.right) for t in self.terms
        )
        harm = {w: c * k for w, k in self.harmonic.items()}
        ex = self.exact.scale(c) if self.exact is not None else None
        return SmoothForm(terms, harm, ex)

    def __neg__(self):
        return self.scaled(-1)

    def to_json(self) -> dict:
        return {
            "universal": [t.to_json() for t in self.terms],
            "harmonic": sorted(
                [[w, f"{k.numerator}/{k.denominator}"] for w, k in self.harmonic.items()]
            ),
            "exact": self.exact.to_json() if self.exact is not None else None,
        }

    @staticmethod
    def from_json(data: dict) -> "SmoothForm":
        return SmoothForm(
            tuple(FormTerm.from_json(t) for t in data.get("universal", [])),
            {check_word(w): Fraction(s) for w, s in data.get("harmonic", [])},
            VertexFunction.from_json(data["exact"]) if data.get("exact") else None,
        )


def d(u: VertexFunction) -> SmoothForm:
    """The exact form dU."""
    return SmoothForm(exact=u)


def fdg(f: VertexFunction | Expr, g: VertexFunction) -> SmoothForm:
    left = f if isinstance(f, Expr) else Atom(f)
    return SmoothForm(terms=(FormTerm(left, g),))


def dgf(g: VertexFunction, f: VertexFunction | Expr) -> SmoothForm:
    right = f if isinstance(f, Expr) else Atom(f)
    return SmoothForm(terms=(FormTerm(ONE, g, right),))


def dz_form(sigma: Word) -> SmoothForm:
    """The harmonic lacuna form dz_sigma (unit clockwise lacuna period)."""
    check_word(sigma)
    return SmoothForm(harmonic={sigma: F1})


def multiply_form(h: VertexFunction | Expr, form: SmoothForm, side: str = "left") -> SmoothForm:
    """h·omega or omega·h for a purely universal form."""
    if form.harmonic or form.exact is not None:
        raise GasketError("module action implemented for universal parts only")
    hx = h if isinstance(h, Expr) else Atom(h)
    if side == "left":
        terms = tuple(FormTerm(Product([hx, t.left]), t.g, t.right) for t in form.terms)
    else:
        terms = tuple(FormTerm(t.left, t.g, Product([t.right, hx])) for t in form.terms)
    return SmoothForm(terms=terms)


# ---------------------------------------------------------------------------
# the lacuna potentials and their exact edge integrals
# ---------------------------------------------------------------------------

# corner values of the local potential of dz_sigma on sub-cell sigma+i: the
# cell's shared vertex with C_sigma gets 0 and the lacuna edge runs from -1/6
# to +1/6 in the clockwise direction of the lacuna.
_ZETA = (F0, Fraction(1, 6), Fraction(-1, 6))


def dz_cell_triple(i: int) -> Triple:
    return tuple(_ZETA[(j - i) % 3] for j in range(3))  # type: ignore[return-value]


def dz_integral_edge(sigma: Word, e: OrientedEdge) -> Fraction:
    """Exact integral of dz_sigma over one oriented edge."""
    tau, i, s = e.cell, e.side, e.sign
    if is_prefix(tau, sigma):
        # the edge is a perimeter edge of a cell containing C_sigma's scope:
        # nonzero iff the remainder of sigma avoids the side letter
        rest = sigma[len(tau):]
        if str(i) not in rest:
            return Fraction(-s, 3)
        return F0
    if is_prefix(sigma, tau):
        sub = int(tau[len(sigma)])
        t = descend(dz_cell_triple(sub), tau[len(sigma) + 1:])
        return s * (t[(i + 1) % 3] - t[(i + 2) % 3])
    return F0


def dz_integral_path(sigma: Word, path: ElementaryPath) -> Fraction:
    return sum((dz_integral_edge(sigma, e) for e in path), F0)


# ---------------------------------------------------------------------------
# exact edge-integral kernels
# ---------------------------------------------------------------------------

def _side_letters(side: int) -> tuple[int, int]:
    return (side + 2) % 3, (side + 1) % 3


def _riemann_kernel(side: int) -> list[list[Fraction]]:
    src, tgt = _side_letters(side)
    M = [[F0] * 3 for _ in range(3)]
    M[tgt][tgt] = F1
    M[tgt][src] = -F1
    return M


def _refine_kernel(M: Sequence[Sequence[Fraction]], side: int) -> list[list[Fraction]]:
    a, b = _side_letters(side)
    out = [[F0] * 3 for _ in range(3)]
    for Hm in (H_MATRICES[a], H_MATRICES[b]):
        # H^T M H
        for j in range(3):
            for k in range(3):
                acc = F0
                for p in range(3):
                    if Hm[p][j] == 0:
                        continue
                    for q in range(3):
                        acc += Hm[p][j] * M[p][q] * Hm[q][k]
                out[j][k] += acc
    return out


@lru_cache(maxsize=None)
def riemann_kernel_at(side: int, n: int) -> tuple[tuple[Fraction, ...], ...]:
    """Kernel of the level-n dyadic Riemann sum I_n over one canonical side."""
    if n == 0:
        M = _riemann_kernel(side)
    else:
        M = [list(r) for r in riemann_kernel_at(side, n - 1)]
        M = _refine_kernel(M, side)
    return tuple(tuple(r) for r in M)


@lru_cache(maxsize=None)
def edge_kernel(side: int) -> tuple[tuple[Fraction, ...], ...]:
    """The exact edge-integral kernel: the eigenvalue-1 fixed point of the
    refinement operator, pinned by the row-sum identity (integral of dg) and
    the symmetrization identity (f dg + g df = d(fg))."""
    if side != 1:
        perm = [(side + 2) % 3, side, (side + 1) % 3]
        inv = [perm.index(j) for j in range(3)]
        M1 = edge_kernel(1)
        return tuple(tuple(M1[inv[j]][inv[k]] for k in range(3)) for j in range(3))

    def idx(j, k):
        return 3 * j + k

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    # fixed point X = H0^T X H0 + H2^T X H2
    H0, H2 = H_MATRICES[0], H_MATRICES[2]
    for j in range(3):
        for k in range(3):
            row = [F0] * 9
            row[idx(j, k)] += F1
            for Hm in (H0, H2):
                for p in range(3):
                    for q in range(3):
                        row[idx(p, q)] -= Hm[p][j] * Hm[q][k]
            rows.append(row)
            rhs.append(F0)
    # column sums: integral of 1·dg is g(p2) - g(p0)
    dgvec = (-F1, F0, F1)
    for k in range(3):
        row = [F0] * 9
        for j in range(3):
            row[idx(j, k)] = F1
        rows.append(row)
        rhs.append(dgvec[k])
    # symmetrization: X + X^T pairs into d(fg)
    for j in range(3):
        for k in range(3):
            row = [F0] * 9
            row[idx(j, k)] += F1
            row[idx(k, j)] += F1
            rows.append(row)
            rhs.append(F1 if j == k == 2 else (-F1 if j == k == 0 else F0))
    sol = solve_unique(rows, rhs)
    return tuple(tuple(sol[idx(j, k)] for k in range(3)) for j in range(3))


def kernel_apply(M: Sequence[Sequence[Fraction]], tf: Triple | None, tg: Triple) -> Fraction:
    acc = F0
    for j in range(3):
        fj = F1 if tf is None else tf[j]
        if fj == 0:
            continue
        row = M[j]
        acc += fj * (row[0] * tg[0] + row[1] * tg[1] + row[2] * tg[2])
    return acc


# ---------------------------------------------------------------------------
# exact integration
# ---------------------------------------------------------------------------

def _normalize_term(term: FormTerm) -> tuple[Fraction, VertexFunction | None, VertexFunction]:
    """(coefficient, left factor as a single function or None for 1, g).

    Moving the right factor to the left is harmless here: the two universal
    representatives integrate identically on every edge.
    """
    lv = term.left.as_vf()
    rv = term.right.as_vf()
    if lv is None or rv is None:
        raise ExactnessUnavailableError("term factor is not piecewise-harmonic")
    lc = term.left.as_const()
    rc = term.right.as_const()
    if lc is not None and rc is not None:
        c = lc * rc
        return c, None, term.g
    if rc is not None:
        return rc, lv, term.g
    if lc is not None:
        return lc, rv, term.g
    raise ExactnessUnavailableError("product of two non-constant factors")


def integrate_term_exact(
    coeff: Fraction, F: VertexFunction | None, g: VertexFunction, e: OrientedEdge
) -> Fraction:
    if coeff == 0:
        return F0
    m = max(g.level, F.level if F is not None else 0)
    total = F0
    for sub in subdivide(e, max(m, e.level)):
        tg = g.triple(sub.cell)
        tf = F.triple(sub.cell) if F is not None else None
        M = edge_kernel(sub.side)
        val = kernel_apply(M, tf, tg)
        total += val if sub.sign == 1 else -val
    return coeff * total


def integrate_term_riemann(
    coeff: Fraction, F: VertexFunction | None, g: VertexFunction, e: OrientedEdge, n: int
) -> Fraction:
    """Exact value of the level-n dyadic Riemann sum I_n(e)(F dg), n >= data level."""
    m = max(g.level, F.level if F is not None else 0, e.level)
    if n < m:
        raise GasketError("Riemann level below the data level")
    total = F0
    for sub in subdivide(e, m):
        tg = g.triple(sub.cell)
        tf = F.triple(sub.cell) if F is not None else None
        M = riemann_kernel_at(sub.side, n - m)
        val = kernel_apply(M, tf, tg)
        total += val if sub.sign == 1 else -val
    return coeff * total


def _integrate_universal_exact(form: SmoothForm, e: OrientedEdge) -> Fraction:
    total = F0
    for term in form.terms:
        c, Fvf, g = _normalize_term(term)
        total += integrate_term_exact(c, Fvf, g, e)
    return total


def _integrate_fixed_parts(form: SmoothForm, e: OrientedEdge) -> Fraction:
    """Harmonic and exact parts integrate exactly in either mode."""
    total = F0
    for sigma, k in form.harmonic.items():
        if k != 0:
            total += k * dz_integral_edge(sigma, e)
    if form.exact is not None:
        total += form.exact(e.target) - form.exact(e.source)
    return total


_REFINE_CAP = 20  # dyadic doublings above the data level in certified mode


def _certified_universal(form: SmoothForm, e: OrientedEdge, tol: Fraction) -> CertifiedValue:
    """Iterate the dyadic refinement identity with the geometric tail bound."""
    if not form.terms:
        return CertifiedValue.from_exact(0)
    # sound tail constant: sum over terms of |a| sqrt(E[g]E[b]) + |b| sqrt(E[a]E[g])
    K = F0
    for t in form.terms:
        Eg = t.g.energy()
        K += t.left.sup_ub() * sqrt_upper(Eg * t.right.energy_ub())
        K += t.right.sup_ub() * sqrt_upper(t.left.energy_ub() * Eg)
    base = max([e.level] + [max(t.left.max_level(), t.g.level, t.right.max_level()) for t in form.terms])
    atoms: dict[int, VertexFunction] = {}
    for t in form.terms:
        for a in t.left.atoms() + [t.g] + t.right.atoms():
            atoms[id(a)] = a
    subs = subdivide(e, base)
    arrays = {
        key: np.array([[float(x) for x in vf.triple(s.cell)] for s in subs])
        for key, vf in atoms.items()
    }
    side, sign = e.side, e.sign
    tcol, scol = (side + 1) % 3, (side + 2) % 3
    if sign == -1:
        tcol, scol = scol, tcol
    a_letter, b_letter = _side_letters(side)

    def riemann(arr_map):
        val = 0.0
        for t in form.terms:
            g = arr_map[id(t.g)]
            val += float(np.sum(t.left.cols(arr_map, tcol) * (g[:, tcol] - g[:, scol]) * t.right.cols(arr_map, scol)))
        return sign * val

    n = base
    value = riemann(arrays)
    tail = Fraction(3, 2) * R35**n * K
    while tail > tol and n - base < _REFINE_CAP:
        arrays = {
            key: np.concatenate([arr @ _H_FLOAT[a_letter].T, arr @ _H_FLOAT[b_letter].T])
            for key, arr in arrays.items()
        }
        n += 1
        value = riemann(arrays)
        tail = Fraction(3, 2) * R35**n * K
    slop = Fraction(1, 10**10) * (1 + Fraction(math.ceil(abs(value))))
    return CertifiedValue(value, tail + slop)


def integrate_edge(
    form: SmoothForm,
    e: OrientedEdge,
    mode: str = "exact",
    tolerance: Fraction = Fraction(1, 10**9),
) -> CertifiedValue:
    """Integral of a smooth form over one oriented edge.

    The harmonic and exact parts always integrate exactly; the mode only
    selects the route for the universal part.
    """
    fixed = _integrate_fixed_parts(form, e)
    if mode == "exact":
        return CertifiedValue.from_exact(fixed + _integrate_universal_exact(form, e))
    if mode != "certified":
        raise GasketError(f"unknown mode {mode!r}")
    cv = _certified_universal(form, e, Fraction(tolerance))
    if cv.exact:
        return CertifiedValue.from_exact(fixed + cv.value)
    return CertifiedValue(float(fixed) + cv.value, cv.radius)


def integrate_path(
    form: SmoothForm,
    path: ElementaryPath,
    mode: str = "exact",
    tolerance: Fraction = Fraction(1, 10**9),
) -> CertifiedValue:
    """Sum of edge integrals; radii add."""
    per_edge = Fraction(tolerance) / len(path.edges)
    out = CertifiedValue.from_exact(0)
    for e in path:
        out = out + integrate_edge(form, e, mode, per_edge)
    return out


# ---------------------------------------------------------------------------
# Q: exact route
# ---------------------------------------------------------------------------

def _pair_energy(u: Triple, vals: Triple) -> Fraction:
    """E(u, v) through the vertex-Laplacian weights of the harmonic triple u."""
    w = corner_weights(u)
    return w[0] * vals[0] + w[1] * vals[1] + w[2] * vals[2]


def _single_slot_q(g: Triple, F: Triple, k: Triple) -> Fraction:
    """Q(dg, F dk) on one cell of 0-harmonic data, via the carre-du-champ
    identity; exact because all three pairings see a harmonic slot."""
    e1 = _pair_energy(g, tuple(F[j] * k[j] for j in range(3)))
    e2 = _pair_energy(F, tuple(g[j] * k[j] for j in range(3)))
    e3 = _pair_energy(k, tuple(F[j] * g[j] for j in range(3)))
    return (e1 - e2 + e3) / 2


@lru_cache(maxsize=None)
def q_kernel() -> tuple[Fraction, ...]:
    """Quadrilinear kernel W with W[f,g,h,k] = Q(f dg, h dk) on 0-harmonic
    basis 4-tuples: the unique solution of the self-similar fixed-point
    system with constant-slot annihilation, transpose symmetry and the
    single-slot anchors."""
    def idx(a, b, c, dd):
        return ((a * 3 + b) * 3 + c) * 3 + dd

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    # fixed point W = (5/3) sum_i W o H_i^{x4}
    for a in range(3):
        for b in range(3):
            for c in range(3):
                for dd in range(3):
                    row = [F0] * 81
                    row[idx(a, b, c, dd)] += F1
                    for H in H_MATRICES:
                        for j in range(3):
                            if H[j][a] == 0:
                                continue
                            for k in range(3):
                                if H[k][b] == 0:
                                    continue
                                for l in range(3):
                                    if H[l][c] == 0:
                                        continue
                                    for m in range(3):
                                        if H[m][dd] == 0:
                                            continue
                                        row[idx(j, k, l, m)] -= R53 * H[j][a] * H[k][b] * H[l][c] * H[m][dd]
                    rows.append(row)
                    rhs.append(F0)
    basis = [(F1, F0, F0), (F0, F1, F0), (F0, F0, F1)]
    for a in range(3):
        for c in range(3):
            for dd in range(3):
                row = [F0] * 81
                for b in range(3):
                    row[idx(a, b, c, dd)] = F1
                rows.append(row)
                rhs.append(F0)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                row = [F0] * 81
                for dd in range(3):
                    row[idx(a, b, c, dd)] = F1
                rows.append(row)
                rhs.append(F0)
    # transpose symmetry Q(w, e) = Q(e, w)
    for a in range(3):
        for b in range(3):
            for c in range(3):
                for dd in range(3):
                    if (a, b) <= (c, dd):
                        continue
                    row = [F0] * 81
                    row[idx(a, b, c, dd)] += F1
                    row[idx(c, dd, a, b)] -= F1
                    rows.append(row)
                    rhs.append(F0)
    # single-slot anchors: sum_a W[a,b,c,d] = Q(db, f_c d f_d)
    for b in range(3):
        for c in range(3):
            for dd in range(3):
                row = [F0] * 81
                for a in range(3):
                    row[idx(a, b, c, dd)] = F1
                rows.append(row)
                rhs.append(_single_slot_q(basis[b], basis[c], basis[dd]))
    sol = solve_unique(rows, rhs)
    return tuple(sol)


def _quad_q(F1t: Triple, g: Triple, F2t: Triple, k: Triple) -> Fraction:
    W = q_kernel()
    acc = F0
    pos = 0
    for a in range(3):
        fa = F1t[a]
        if fa == 0:
            pos += 27
            continue
        for b in range(3):
            gb = g[b]
            if gb == 0:
                pos += 9
                continue
            for c in range(3):
                hc = F2t[c]
                if hc == 0:
                    pos += 3
                    continue
                for dd in range(3):
                    w = W[pos]
                    if w != 0:
                        acc += fa * gb * hc * k[dd] * w
                    pos += 1
    return acc


Piece = tuple[Fraction, Optional[Triple], Triple]  # (coeff, left triple or None, g triple)


def _form_data_level(form: SmoothForm) -> int:
    m = 0
    for t in form.terms:
        m = max(m, t.g.level, t.left.max_level(), t.right.max_level())
    for sigma in form.harmonic:
        m = max(m, len(sigma) + 1)
    if form.exact is not None:
        m = max(m, form.exact.level)
    return m


def _normalized_terms(form: SmoothForm) -> list[tuple[Fraction, VertexFunction | None, VertexFunction]]:
    return [_normalize_term(t) for t in form.terms]


def _pieces_on_cell(
    norm_terms, form: SmoothForm, word: Word
) -> list[Piece]:
    pieces: list[Piece] = []
    for c, Fvf, g in norm_terms:
        if c == 0:
            continue
        tf = Fvf.triple(word) if Fvf is not None else None
        pieces.append((c, tf, g.triple(word)))
    for sigma, k in form.harmonic.items():
        if k == 0:
            continue
        if len(word) > len(sigma) and is_prefix(sigma, word):
            sub = int(word[len(sigma)])
            t = descend(dz_cell_triple(sub), word[len(sigma) + 1:])
            pieces.append((k, None, t))
    if form.exact is not None:
        pieces.append((F1, None, form.exact.triple(word)))
    return pieces


def q_inner_exact(omega: SmoothForm, eta: SmoothForm) -> Fraction:
    """Q(omega, eta) in rational arithmetic.

    Both forms are pulled back to the cells of a common level where all the
    data is 0-harmonic; each cell contributes through the vertex-Laplacian
    pairings (one constant left slot) or the quadrilinear kernel (both left
    slots occupied)."""
    m = max(_form_data_level(omega), _form_data_level(eta))
    n1 = _normalized_terms(omega)
    n2 = _normalized_terms(eta) if eta is not omega else n1
    total = F0
    for letters in itertools.product("012", repeat=m):
        word = "".join(letters)
        p1 = _pieces_on_cell(n1, omega, word)
        if not p1:
            continue
        p2 = p1 if eta is omega else _pieces_on_cell(n2, eta, word)
        for c1, f1, g1 in p1:
            for c2, f2, g2 in p2:
                if f1 is None and f2 is None:
                    val = graph_energy(g1, g2)
                elif f1 is None:
                    val = _single_slot_q(g1, f2, g2)
                elif f2 is None:
                    val = _single_slot_q(g2, f1, g1)
                else:
                    val = _quad_q(f1, g1, f2, g2)
                total += c1 * c2 * val
    return R53**m * total


# ---------------------------------------------------------------------------
# Q: certified route (level sums of endpoint evaluations)
# ---------------------------------------------------------------------------

_BLOCK = 8


def _grow(triple: np.ndarray, depth: int) -> np.ndarray:
    arr = triple.reshape(1, 3)
    for _ in range(depth):
        arr = np.einsum("cjk,mk->mcj", _H_FLOAT, arr).reshape(-1, 3)
    return arr


@dataclass(frozen=True, eq=False)
class _GSide:
    """d-slot of one certified term: a function or a lacuna-form potential."""

    kind: str  # "vf" | "dz"
    vf: VertexFunction | None = None
    sigma: Word = ""

    @property
    def key(self):
        return ("vf", id(self.vf)) if self.kind == "vf" else ("dz", self.sigma)

    def level(self) -> int:
        return self.vf.level if self.kind == "vf" else len(self.sigma) + 1

    def energy(self) -> Fraction:
        if self.kind == "vf":
            return self.vf.energy()
        return Fraction(5, 6) * R53 ** len(self.sigma)

    def osc0(self) -> Fraction:
        if self.kind == "vf":
            return self.vf.osc_global()
        return Fraction(1, 3)

    def block(self, word: Word, depth: int) -> np.ndarray:
        """Per-cell corner values over the 3^depth cells below ``word``."""
        if self.kind == "vf":
            vf = self.vf
            if len(word) >= vf.level:
                return _grow(np.array([float(x) for x in vf.triple(word)]), depth)
            gap = vf.level - len(word)
            if gap > depth:
                raise GasketError("block too shallow for the data level")
            out = np.empty((3**depth, 3))
            step = 3 ** (depth - gap)
            for i, letters in enumerate(itertools.product("012", repeat=gap)):
                tail = "".join(letters)
                t = np.array([float(x) for x in vf.triple(word + tail)])
                out[i * step : (i + 1) * step] = _grow(t, depth - gap)
            return out
        # dz potential: zero off C_sigma, local harmonic triples below sigma+i
        sigma = self.sigma
        if len(word) > len(sigma) and is_prefix(sigma, word):
            sub = int(word[len(sigma)])
            t = descend(dz_cell_triple(sub), word[len(sigma) + 1:])
            return _grow(np.array([float(x) for x in t]), depth)
        if not is_prefix(word, sigma):
            return np.zeros((3**depth, 3))
        out = np.zeros((3**depth, 3))
        rel = sigma[len(word):]
        gap = len(rel) + 1
        if gap > depth:
            raise GasketError("block too shallow for the lacuna form")
        step = 3 ** (depth - gap)
        base = 0
        for c in rel:
            base = base * 3 + int(c)
        base *= 3
        for i in range(3):
            t = np.array([float(x) for x in dz_cell_triple(i)])
            out[(base + i) * step : (base + i + 1) * step] = _grow(t, depth - gap)
        return out


@dataclass(frozen=True, eq=False)
class _CTerm:
    coeff: Fraction
    left: Expr | None  # None means the constant 1
    gside: _GSide


def _compile_certified(form: SmoothForm) -> list[_CTerm]:
    out: list[_CTerm] = []
    for t in form.terms:
        left = t.left_total()
        out.append(_CTerm(F1, None if left.as_const() == 1 else left, _GSide("vf", vf=t.g)))
    for sigma, k in form.harmonic.items():
        if k != 0:
            out.append(_CTerm(k, None, _GSide("dz", sigma=sigma)))
    if form.exact is not None:
        out.append(_CTerm(F1, None, _GSide("vf", vf=form.exact)))
    return out


def _tilde_level_sum(side1: list[_CTerm], side2: list[_CTerm], n: int) -> float:
    """Q~_n(omega, eta): raw endpoint-evaluation level sum times (5/3)^n."""
    gsides: dict = {}
    vfs: dict = {}
    for term in side1 + side2:
        gsides[term.gside.key] = term.gside
        if term.left is not None:
            for a in term.left.atoms():
                vfs[id(a)] = a

    def edge_values(terms: list[_CTerm], garrs: dict, larrs: dict) -> list[np.ndarray]:
        vals = []
        for i in range(3):
            tcol, scol = (i + 1) % 3, (i + 2) % 3
            acc = 0.0
            for term in terms:
                G = garrs[term.gside.key]
                dv = G[:, tcol] - G[:, scol]
                if term.left is not None:
                    dv = dv * term.left.cols(larrs, tcol)
                acc = acc + float(term.coeff) * dv
            vals.append(acc)
        return vals

    def recurse(word: Word, depth: int) -> float:
        if depth <= _BLOCK:
            garrs = {key: g.block(word, depth) for key, g in gsides.items()}
            larrs = {key: _GSide("vf", vf=vf).block(word, depth) for key, vf in vfs.items()}
            v1 = edge_values(side1, garrs, larrs)
            v2 = v1 if side2 is side1 else edge_values(side2, garrs, larrs)
            return float(sum(np.dot(a, b) for a, b in zip(v1, v2)))
        return sum(recurse(word + c, depth - 1) for c in "012")

    return (5.0 / 3.0) ** n * recurse("", n)


def _pair_radius(side1: list[_CTerm], side2: list[_CTerm], n: int) -> Fraction:
    """Sound bound for |Q - Q~_n|, assembled pair by pair."""
    total = F0
    for s in side1:
        for t in side2:
            if s.left is None and t.left is None:
                continue
            parts = [x.left for x in (s, t) if x.left is not None]
            Fexpr = parts[0] if len(parts) == 1 else Product(parts)
            Ls, Lt = s.gside.level(), t.gside.level()
            Es, Et = s.gside.energy(), t.gside.energy()
            dgk = 2 * (
                (s.gside.osc0() * R35 ** (n - Ls)) ** 2 * Et
                + (t.gside.osc0() * R35 ** (n - Lt)) ** 2 * Es
            )
            dF = _defect_ub(Fexpr, n)
            rad = sqrt_upper(dgk * dF) / 2 + _osc_rate(Fexpr, n) * sqrt_upper(Es * Et) / 2
            total += abs(s.coeff * t.coeff) * rad
    return total


def _extrapolate(values: list[float]) -> float:
    seq = list(values)
    for _ in range(2):
        if len(seq) < 3:
            break
        nxt = []
        for a, b, c in zip(seq, seq[1:], seq[2:]):
            den = (c - b) - (b - a)
            if abs(den) < 1e-14 * (1 + abs(c)):
                nxt.append(c)
            else:
                nxt.append(c - (c - b) ** 2 / den)
        seq = nxt
    return seq[-1]


_Q_LEVEL_CAP = 14


def q_inner_certified(
    omega: SmoothForm,
    eta: SmoothForm | None = None,
    tolerance: Fraction = Fraction(1, 10**9),
    max_level: int = 12,
    strict: bool = True,
) -> CertifiedValue:
    """Q(omega, eta) from the endpoint level sums Q~_n with geometric
    extrapolation; the reported radius is the un-extrapolated sound tail
    bound plus the extrapolation correction.

    Raises NonConvergentError when the radius still exceeds the tolerance at
    the level cap (unless ``strict`` is off) or when the extrapolation step
    moves further than the tail bound allows.
    """
    if eta is None:
        eta = omega
    side1 = _compile_certified(omega)
    side2 = side1 if eta is omega else _compile_certified(eta)
    if max_level > _Q_LEVEL_CAP:
        raise GasketError(f"level sums capped at n = {_Q_LEVEL_CAP}")
    n0 = max(
        [1]
        + [t.gside.level() for t in side1 + side2]
        + [t.left.max_level() for t in side1 + side2 if t.left is not None]
    )
    tolerance = Fraction(tolerance)
    vals = []
    n = n0
    while True:
        vals.append(_tilde_level_sum(side1, side2, n))
        rad = _pair_radius(side1, side2, n)
        if rad <= tolerance or n >= max_level:
            break
        n += 1
    if strict and rad > tolerance:
        raise NonConvergentError(
            f"certified Q radius {float(rad):.3g} exceeds the tolerance at level {n}"
        )
    value = _extrapolate(vals) if len(vals) >= 3 else vals[-1]
    correction = Fraction(abs(value - vals[-1])).limit_denominator(10**15)
    slop = Fraction(1, 10**9) * (1 + Fraction(math.ceil(abs(value))))
    if correction > 4 * rad + slop:
        raise NonConvergentError("extrapolation disagrees with the tail bound")
    return CertifiedValue(value, rad + correction + slop)


def q_inner(
    omega: SmoothForm,
    eta: SmoothForm | None = None,
    mode: str = "exact",
    tolerance: Fraction = Fraction(1, 10**9),
    max_level: int = 12,
    strict: bool = True,
) -> CertifiedValue:
    if eta is None:
        eta = omega
    if mode == "exact":
        return CertifiedValue.from_exact(q_inner_exact(omega, eta))
    if mode == "certified":
        return q_inner_certified(omega, eta, tolerance, max_level, strict)
    raise GasketError(f"unknown mode {mode!r}")


def q_level(form: SmoothForm, n: int) -> Fraction:
    """Q_n[form] = (5/3)^n sum over E_n of the exact edge integrals squared."""
    total = F0
    norm = _normalized_terms(form)
    for letters in itertools.product("012", repeat=n):
        word = "".join(letters)
        for side in range(3):
            e = OrientedEdge(word, side)
            v = _integrate_fixed_parts(form, e)
            for c, Fvf, g in norm:
                v += integrate_term_exact(c, Fvf, g, e)
            total += v * v
    return R53**n * total


# ---------------------------------------------------------------------------
# the level-n exact forms used in the completion counterexample
# ---------------------------------------------------------------------------

def _slope_function() -> VertexFunction:
    return VertexFunction.from_boundary(Fraction(-1, 2), F0, Fraction(1, 2))


def _support_words(n: int) -> list[Word]:
    return ["".join(w) for w in itertools.product("02", repeat=n)]


def counterexample_form(n: int) -> SmoothForm:
    """The n-exact form with local potentials 2^-n g(w_sigma^-1 ·) on the
    cells sigma in {0,2}^n (g the 0-harmonic slope with boundary -1/2, 0,
    1/2), written in the universal part as cutoff·d(extension) per cell."""
    if n < 1:
        raise GasketError("n must be at least 1")
    g = _slope_function()
    scale = Fraction(1, 2**n)
    level = n + 1
    terms = []
    for sigma in _support_words(n):
        corners = cell_corners(sigma)
        corner_vals = {p: scale * v for p, v in zip(corners, (Fraction(-1, 2), F0, Fraction(1, 2)))}
        chi_vals: dict = {}
        pot_vals: dict = {}
        for letters in itertools.product("012", repeat=level):
            word = "".join(letters)
            cs = cell_corners(word)
            if is_prefix(sigma, word):
                t = descend(tuple(scale * v for v in (Fraction(-1, 2), F0, Fraction(1, 2))), word[n:])
                for p, v in zip(cs, t):
                    chi_vals[p] = F1
                    pot_vals[p] = v
                continue
            shared = [p for p in cs if p in corner_vals]
            if len(shared) == 1:
                for p in cs:
                    pot_vals.setdefault(p, corner_vals[shared[0]])
        for letters in itertools.product("012", repeat=level):
            for p in cell_corners("".join(letters)):
                chi_vals.setdefault(p, F0)
                pot_vals.setdefault(p, F0)
        chi = VertexFunction(level, chi_vals)
        pot = VertexFunction(level, pot_vals)
        terms.append(FormTerm(Atom(chi), pot))
    return SmoothForm(terms=tuple(terms))


def counterexample_integral(n: int, e: OrientedEdge) -> Fraction:
    """Exact edge integral of the n-exact form, straight from its potentials."""
    g = _slope_function()
    scale = Fraction(1, 2**n)
    support = set(_support_words(n))

    def walk(edge: OrientedEdge) -> Fraction:
        word = edge.cell
        if len(word) >= n:
            if word[:n] not in support:
                return F0
            t = descend(g.triple(""), word[n:])
            d = t[(edge.side + 1) % 3] - t[(edge.side + 2) % 3]
            return scale * d * edge.sign
        a, b = edge.children()
        return walk(a) + walk(b)

    return walk(e)


def limit_assignment_integral(e: OrientedEdge) -> Fraction:
    """The edge assignment 2^-k on the bottom edges w_sigma(e_1),
    sigma in {0,2}^k, zero elsewhere (the norm-completion limit object)."""
    if e.side != 1 or any(c == "1" for c in e.cell):
        return F0
    return Fraction(e.sign, 2 ** len(e.cell))


def nonorm_q_level(n: int, k: int) -> Fraction:
    """Q_k of the n-exact counterexample form, via the self-similar cell
    factorization (the 2^n support cells carry identical pulled-back data)."""
    if k >= n:
        g = _slope_function()
        return Fraction(2, 4) ** n * R53**n * g.energy_at_level(k - n)
    total = F0
    for letters in itertools.product("012", repeat=k):
        word = "".join(letters)
        for side in range(3):
            v = counterexample_integral(n, OrientedEdge(word, side))
            total += v * v
    return R53**k * total


@lru_cache(maxsize=None)
def _qdiff_relative(m: int) -> Fraction:
    """(5/3)^m sum over E_m of |limit assignment - d(slope)|^2: the common
    pulled-back level sum shared by every support cell."""
    g = _slope_function()
    total = F0
    for letters in itertools.product("012", repeat=m):
        word = "".join(letters)
        t = g.triple(word)
        for side in range(3):
            e = OrientedEdge(word, side)
            dv = t[(side + 1) % 3] - t[(side + 2) % 3]
            v = limit_assignment_integral(e) - dv
            total += v * v
    return R53**m * total


def nonorm_q_level_diff(n: int, k: int) -> Fraction:
    """Q_k[limit - omega_n], exactly."""
    if k < n:
        total = F0
        for letters in itertools.product("012", repeat=k):
            word = "".join(letters)
            for side in range(3):
                e = OrientedEdge(word, side)
                v = limit_assignment_integral(e) - counterexample_integral(n, e)
                total += v * v
        return R53**k * total
    # both objects restrict to the support cells with identical pulled data
    return Fraction(5, 6) ** n * _qdiff_relative(k - n)


def nonorm_qdiff_brute(n: int, k: int) -> Fraction:
    """Brute-force Q_k[limit - omega_n] over all of E_k (for cross-checks)."""
    total = F0
    for letters in itertools.product("012", repeat=k):
        word = "".join(letters)
        for side in range(3):
            e = OrientedEdge(word, side)
            v = limit_assignment_integral(e) - counterexample_integral(n, e)
            total += v * v
    return R53**k * total
