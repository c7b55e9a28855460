"""Period matrices, winding numbers, Hodge decomposition."""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest

from gasketforms import cohomology as coh
from gasketforms import forms as fm
from gasketforms.errors import NotComparableError
from gasketforms.geometry import (
    P0,
    OrientedEdge,
    cell_corners,
    lacuna_path,
    perimeter_path,
    validate_path,
)
from gasketforms.harmonic import harmonic_basis, random_harmonic

F = Fraction
f0, f1, f2 = harmonic_basis()


def test_b_entries():
    assert coh.b_entry("12", "12") == 1
    assert coh.b_entry("1", "") == F(-1, 3)
    assert coh.b_entry("", "1") == 0
    # branch letter repeated downstream kills the entry
    assert coh.b_entry("11", "") == 0
    assert coh.b_entry("10", "") == F(-1, 3)


def test_b_rule_matches_integration_sampled():
    rng = random.Random(47)
    words = [""] + ["".join(w) for n in (1, 2, 3) for w in itertools.product("012", repeat=n)]
    for _ in range(60):
        rho, tau = rng.choice(words), rng.choice(words)
        assert coh.b_entry(rho, tau) == coh.b_rule(rho, tau)


def test_a_entry_inverts_the_two_by_two_block():
    # oracle: the chain ("" , "1") has B = [[1, 0], [-1/3, 1]]; its inverse
    # is [[1, 0], [1/3, 1]]
    assert coh.a_entry("1", "1") == 1
    assert coh.a_entry("1", "") == F(1, 3)


def test_a_entry_not_comparable():
    with pytest.raises(NotComparableError):
        coh.a_entry("01", "1")
    assert coh.a_entry("01", "1", strict=False) == 0


def test_a_range_and_inverse_on_chains():
    kern = coh.TriangularKernel()
    rng = random.Random(53)
    for _ in range(10):
        sigma = "".join(rng.choice("012") for _ in range(5))
        chain, B, A = kern.chain_matrices(sigma)
        n = len(chain)
        for r in range(n):
            assert A[r][r] == 1 and B[r][r] == 1
            for c in range(n):
                assert 0 <= A[r][c] <= 1
                assert sum(A[r][m] * B[m][c] for m in range(n)) == (1 if r == c else 0)


def _planar_winding(path, point) -> int:
    """Angle-sum winding oracle in the plane (float, then rounded)."""
    total = 0.0
    pts = [path.edges[0].source] + [e.target for e in path.edges]
    for a, b in zip(pts, pts[1:]):
        ax = float(a.x - point.x)
        ay = float(a.y - point.y) * math.sqrt(3)
        bx = float(b.x - point.x)
        by = float(b.y - point.y) * math.sqrt(3)
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    n = total / (2 * math.pi)
    assert abs(n - round(n)) < 1e-9
    return round(n)


def _lacuna_center(sigma):
    c = cell_corners(sigma + "0")[1]  # one lacuna vertex
    d = cell_corners(sigma + "1")[2]  # another
    e = cell_corners(sigma + "2")[0]
    return type(c)((c.x + d.x + e.x) / 3, (c.y + d.y + e.y) / 3)


@pytest.mark.parametrize("sigma", ["", "0", "21"])
def test_winding_against_planar_oracle(sigma):
    """The exact winding number is minus the planar angle-sum winding (the
    lacuna convention counts clockwise loops positively)."""
    center = _lacuna_center(sigma)
    for path in [lacuna_path(sigma), perimeter_path(sigma), perimeter_path("")]:
        assert coh.winding_number(path, sigma) == -_planar_winding(path, center)


def test_winding_kronecker_and_concatenation():
    for s in ["", "1", "02"]:
        for t in ["", "1", "02", "2"]:
            assert coh.winding_number(lacuna_path(t), s) == (1 if s == t else 0)
    p = lacuna_path("1")
    doubled = p + p
    assert coh.winding_number(doubled, "1") == 2
    cancel = p + p.reversed()
    assert coh.winding_number(cancel, "1") == 0


def test_periods_of_reference_forms():
    pv = coh.periods_up_to(fm.dz_form("2"), 2)
    for w, cv in pv.entries.items():
        assert cv.value == coh.b_rule("2", w)
    pv = coh.periods_up_to(fm.d(f1), 2)
    assert all(cv.exact and cv.value == 0 for cv in pv.entries.values())
    pv = coh.periods_up_to(fm.fdg(f0, f1), 1)
    assert pv.entries[""].value != 0


def test_period_level_decay():
    rng = random.Random(59)
    u, v = random_harmonic(1, rng), random_harmonic(0, rng)
    w = fm.fdg(u, v)
    pv = coh.periods_up_to(w, 4)
    bound = u.energy() + v.energy()
    for n in range(5):
        assert pv.level_sum(n) <= F(5, 4) * F(3, 5) ** (n + 1) * bound


def test_hodge_of_exact_form():
    hd = coh.hodge_decompose(fm.d(f2), 2)
    assert all(cv.exact and cv.value == 0 for cv in hd.k.values())
    for p, cv in hd.potential.items():
        assert cv.exact and cv.value == f2(p) - f2(P0)


def test_hodge_k_routes_agree():
    w = fm.fdg(f0, f1)
    hd = coh.hodge_decompose(w, 2)
    for s in ["", "0", "11"]:
        proj = coh.harmonic_coefficient(w, s)
        assert proj.exact and proj.value != 0
        assert hd.k[s].overlaps(proj)
    assert coh.harmonic_coefficient(w, "").value == F(2, 25)


def test_hodge_skeleton_primitive_consistency():
    w = fm.fdg(f0, f1)
    depth = 2
    hd = coh.hodge_decompose(w, depth)
    omega_h = hd.harmonic_form()
    for letters in itertools.product("012", repeat=depth):
        word = "".join(letters)
        for side in range(3):
            e = OrientedEdge(word, side)
            lhs = hd.potential[e.target] - hd.potential[e.source]
            rhs = fm.integrate_edge(w, e) - fm.integrate_edge(omega_h, e)
            assert abs(lhs.value - rhs.value) <= lhs.radius + rhs.radius + hd.residual_bound


def test_reconstructed_harmonic_form_has_matching_periods():
    w = fm.fdg(f0, f1)
    depth = 3
    hd = coh.hodge_decompose(w, depth)
    omega_h = hd.harmonic_form()
    pv = coh.periods_up_to(w, 2)
    pvh = coh.periods_up_to(omega_h, 2)
    tail = coh.k_tail_bound(pv.level_sum_bound, depth)
    for s, cv in pv.entries.items():
        err = abs(cv.value - pvh.entries[s].value)
        budget = sum((kcv.radius for kcv in hd.k.values()), tail)
        assert err <= budget


def test_perimeter_identity():
    z = fm.dz_form("1")
    cv = coh.perimeter_identity_check(z, "1", 3)
    assert cv.value == 0 and cv.radius == 0
    cv = coh.perimeter_identity_check(fm.d(f0), "", 2)
    assert cv.value == 0
    w = fm.fdg(f0, f1)
    cv = coh.perimeter_identity_check(w, "", 6)
    assert cv.value <= cv.radius


def test_winding_integer_guard():
    # a non-closed path must be rejected before any integer check
    with pytest.raises(Exception):
        coh.winding_number(validate_path([OrientedEdge("", 1)]), "")
