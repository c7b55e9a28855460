"""Periods, the triangular period matrices, winding numbers, and the Hodge
decomposition with certified truncation.

B_{rho,tau} is the integral of dz_rho around the lacuna of C_tau; it is lower
unitriangular for the prefix order with entries in {1, -1/3, 0}, and its
inverse A solves a three-term chain recursion with entries in [0, 1].  The
winding form of a word sigma is sum_{rho <= sigma} A_{sigma,rho} dz_rho; its
closed-path integrals are integers that count turns around one lacuna only.

The Hodge decomposition of a form with finite stored energy bounds is
computed from its periods: k = A* c truncated at a depth, with tails bounded
by the geometric decay of lacuna periods, and a skeleton primitive for the
residual exact part anchored at the corner p_0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .certified import CertifiedValue
from .errors import (
    DepthTooSmallError,
    GasketError,
    NonIntegerResultError,
    NotComparableError,
)
from .forms import (
    SmoothForm,
    dz_integral_edge,
    dz_integral_path,
    integrate_edge,
    integrate_path,
    q_inner,
)
from .geometry import (
    ElementaryPath,
    OrientedEdge,
    Point,
    Word,
    is_prefix,
    lacuna_path,
    perimeter_path,
    vertex_id,
)

F0 = Fraction(0)
F1 = Fraction(1)
R35 = Fraction(3, 5)
_THIRD = Fraction(1, 3)


def b_rule(rho: Word, tau: Word) -> Fraction:
    """Combinatorial value of B_{rho,tau}."""
    if rho == tau:
        return F1
    if not is_prefix(tau, rho):
        return F0
    branch = rho[len(tau)]
    rest = rho[len(tau) + 1:]
    return -_THIRD if branch not in rest else F0


@lru_cache(maxsize=None)
def b_entry(rho: Word, tau: Word) -> Fraction:
    """B_{rho,tau} by exact integration over the lacuna, asserted against the
    combinatorial rule (a vertex-only contact integrates to zero, which is
    what resolves the boundary case)."""
    value = dz_integral_path(rho, lacuna_path(tau))
    if value != b_rule(rho, tau):
        raise GasketError(f"period matrix mismatch at ({rho!r}, {tau!r})")
    return value


@lru_cache(maxsize=None)
def a_entry(sigma: Word, tau: Word, strict: bool = True) -> Fraction:
    """Entry of A = B^-1 on the prefix chain of sigma."""
    if not is_prefix(tau, sigma):
        if strict:
            raise NotComparableError(f"{tau!r} is not a prefix of {sigma!r}")
        return F0
    if tau == sigma:
        return F1
    acc = F0
    for j in range(len(tau) + 1, len(sigma) + 1):
        rho = sigma[:j]
        if b_rule(rho, tau) != 0:
            acc += a_entry(sigma, rho)
    return acc / 3


class TriangularKernel:
    """Lazy view of the B and A matrices over prefix chains."""

    def __init__(self, validate: bool = True):
        self._validate = validate

    def b(self, rho: Word, tau: Word) -> Fraction:
        return b_entry(rho, tau) if self._validate else b_rule(rho, tau)

    def a(self, sigma: Word, tau: Word) -> Fraction:
        return a_entry(sigma, tau)

    def chain_matrices(self, sigma: Word):
        """(B, A) restricted to the chain of prefixes of sigma."""
        chain = [sigma[:j] for j in range(len(sigma) + 1)]
        B = [[self.b(r, t) for t in chain] for r in chain]
        A = [[a_entry(r, t, strict=False) for t in chain] for r in chain]
        return chain, B, A


def winding_number(path: ElementaryPath, sigma: Word) -> int:
    """Integral of the winding form of sigma along a closed path."""
    if not path.closed:
        raise GasketError("winding numbers need a closed path")
    acc = F0
    for j in range(len(sigma) + 1):
        rho = sigma[:j]
        a = a_entry(sigma, rho)
        if a != 0:
            acc += a * dz_integral_path(rho, path)
    if acc.denominator != 1:
        raise NonIntegerResultError(f"winding came out {acc} for sigma={sigma!r}")
    return int(acc)


# ---------------------------------------------------------------------------
# periods and the Hodge decomposition
# ---------------------------------------------------------------------------

def universal_energy_bound(form: SmoothForm) -> Fraction:
    """sum over non-exact universal terms of |c| (E[F] + E[g]); the constant
    in the lacuna-period level-sum decay (5/4)(3/5)^(n+1) * bound."""
    from .forms import _normalized_terms

    total = F0
    for c, Fvf, g in _normalized_terms(form):
        if Fvf is None or Fvf.is_constant():
            continue  # exact term: all periods vanish
        total += abs(c) * (Fvf.energy() + g.energy())
    return total


@dataclass(frozen=True)
class PeriodVector:
    depth: int
    entries: dict[Word, CertifiedValue]
    level_sum_bound: Fraction  # level-n sums of |c| bounded by (5/4)(3/5)^(n+1) * this

    def level_sum(self, n: int) -> Fraction:
        return sum(
            (abs(cv.value) for w, cv in self.entries.items() if len(w) == n and cv.exact),
            F0,
        )

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "entries": [
                [w, cv.to_json()["value"], float(cv.radius)]
                for w, cv in sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ],
        }


def periods_up_to(form: SmoothForm, depth: int, mode: str = "exact") -> PeriodVector:
    """c_sigma = integral of the form around the lacuna of C_sigma, for all
    |sigma| <= depth."""
    harmonic_depth = max([len(w) for w in form.harmonic], default=-1)
    entries: dict[Word, CertifiedValue] = {}
    for n in range(depth + 1):
        for letters in itertools.product("012", repeat=n):
            w = "".join(letters)
            cv = integrate_path(form, lacuna_path(w), mode=mode)
            # dz parts contribute B entries; they are already inside integrate
            entries[w] = cv
    bound = universal_energy_bound(form)
    # beyond the support of the harmonic part, dz terms add nothing to tails
    if harmonic_depth >= depth:
        for sigma in form.harmonic:
            if len(sigma) > depth:
                raise DepthTooSmallError(
                    "harmonic support deeper than the requested period depth"
                )
    return PeriodVector(depth, entries, bound)


def k_tail_bound(level_sum_bound: Fraction, depth: int) -> Fraction:
    """Bound for sum_{|sigma| = m} |k_sigma| summed over all m > depth."""
    # level-m sums of |k| <= sum_{j >= m} levelsum_j(c) <= (25/8)(3/5)^(m+1) C
    return Fraction(25, 8) * R35 ** (depth + 2) * Fraction(5, 2) * level_sum_bound


def k_level_sum_bound(level_sum_bound: Fraction, m: int) -> Fraction:
    return Fraction(25, 8) * R35 ** (m + 1) * level_sum_bound


@dataclass(frozen=True)
class HodgeDecomposition:
    depth: int
    k: dict[Word, CertifiedValue]
    potential: dict[Point, CertifiedValue]  # skeleton values on V_depth
    potential_radius: Fraction
    residual_bound: Fraction

    def harmonic_form(self) -> SmoothForm:
        """The depth-truncated harmonic representative (exact coefficients)."""
        return SmoothForm(
            harmonic={w: cv.value for w, cv in self.k.items() if cv.exact and cv.value != 0}
        )

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "entries": [
                [w, cv.to_json()["value"], float(cv.radius)]
                for w, cv in sorted(self.k.items(), key=lambda kv: (len(kv[0]), kv[0]))
            ],
            "U_E": {
                "level": self.depth,
                "values": [
                    [vertex_id(p), cv.to_json()["value"]]
                    for p, cv in sorted(self.potential.items(), key=lambda kv: vertex_id(kv[0]))
                ],
                "radius": float(self.potential_radius),
            },
            "residual": float(self.residual_bound),
        }


def hodge_decompose(
    form: SmoothForm,
    depth: int,
    tolerance: Fraction | None = None,
    mode: str = "exact",
) -> HodgeDecomposition:
    """Split the form into harmonic coefficients (period route, k = A* c
    truncated at the depth) and a skeleton primitive for the exact part.

    The primitive is anchored at U(p_0) = 0 and built over a deterministic
    breadth-first tree of the level-``depth`` graph.
    """
    periods = periods_up_to(form, depth, mode=mode)
    ktail = k_tail_bound(periods.level_sum_bound, depth)
    if tolerance is not None and ktail > tolerance:
        raise DepthTooSmallError(
            f"k-tail bound {float(ktail):.3g} exceeds tolerance at depth {depth}"
        )
    k: dict[Word, CertifiedValue] = {}
    for tau in periods.entries:
        acc = CertifiedValue.from_exact(0)
        for sigma, cv in periods.entries.items():
            if is_prefix(tau, sigma):
                acc = acc + cv.scaled(a_entry(sigma, tau))
        k[tau] = CertifiedValue(acc.value, acc.radius + ktail)

    # residual edge integrals d U_E(e) = int_e (omega - omega_H): the dropped
    # dz terms contribute at most sum_{m > depth} levelsum_m(k) * 1/3
    edge_dz_tail = Fraction(125, 48) * R35 ** (depth + 2) * periods.level_sum_bound

    def residual_edge(e: OrientedEdge) -> CertifiedValue:
        total = integrate_edge(form, e, mode=mode)
        for tau, kcv in k.items():
            w = dz_integral_edge(tau, e)
            if w != 0:
                total = total - kcv.scaled(w)
        return CertifiedValue(total.value, total.radius + edge_dz_tail)

    # deterministic BFS over the level-depth skeleton
    adjacency: dict[Point, list[tuple[Point, OrientedEdge]]] = {}
    for letters in itertools.product("012", repeat=depth):
        w = "".join(letters)
        for side in range(3):
            e = OrientedEdge(w, side)
            adjacency.setdefault(e.source, []).append((e.target, e))
            adjacency.setdefault(e.target, []).append((e.source, e.reversed()))
    anchor = Point(F0, F0)
    potential: dict[Point, CertifiedValue] = {anchor: CertifiedValue.from_exact(0)}
    frontier = [anchor]
    while frontier:
        nxt: list[Point] = []
        for p in sorted(frontier, key=vertex_id):
            for q, e in sorted(adjacency[p], key=lambda t: vertex_id(t[0])):
                if q in potential:
                    continue
                potential[q] = potential[p] + residual_edge(e)
                nxt.append(q)
        frontier = nxt
    pot_radius = max(cv.radius for cv in potential.values())
    return HodgeDecomposition(depth, k, potential, pot_radius, ktail + pot_radius)


def harmonic_coefficient(form: SmoothForm, sigma: Word, mode: str = "exact") -> CertifiedValue:
    """Projection-route coefficient Q(dz_sigma, omega) / Q[dz_sigma]."""
    from .forms import dz_form

    z = dz_form(sigma)
    num = q_inner(z, form, mode=mode) if mode == "exact" else q_inner(
        z, form, mode="certified", strict=False
    )
    norm = Fraction(5, 6) * Fraction(5, 3) ** len(sigma)
    return num.scaled(Fraction(1) / norm)


def perimeter_identity_check(form: SmoothForm, sigma: Word, depth: int, mode: str = "exact") -> CertifiedValue:
    """|integral over the perimeter of C_sigma + sum of lacuna periods below|
    together with its geometric tail bound."""
    if depth < len(sigma):
        raise DepthTooSmallError("depth must reach the cell level")
    total = integrate_path(form, perimeter_path(sigma), mode=mode)
    for n in range(len(sigma), depth + 1):
        for letters in itertools.product("012", repeat=n - len(sigma)):
            tau = sigma + "".join(letters)
            total = total + integrate_path(form, lacuna_path(tau), mode=mode)
    tail = Fraction(3, 4) * R35**depth * universal_energy_bound(form)
    value = abs(total.value) if total.exact else abs(float(total.value))
    return CertifiedValue(value, total.radius + tail)
