"""Norms, effective lengths, homology classes, group lengths, potentials."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from gasketforms import cohomology as coh
from gasketforms import covering as cov
from gasketforms import forms as fm
from gasketforms.errors import UnboundedTailError
from gasketforms.geometry import (
    OrientedEdge,
    lacuna_path,
    perimeter_path,
    validate_path,
)
from gasketforms.harmonic import harmonic_basis

F = Fraction
f0, f1, f2 = harmonic_basis()


def test_norms_of_unit_vectors():
    for w in ["", "2", "01", "120"]:
        seq = cov.LevelSequence.from_values({w: F(1)}, len(w))
        assert cov.norm_N(seq).value == F(5, 3) ** len(w)
        assert cov.norm_Nprime(seq).value == F(3, 5) ** len(w)


def test_norm_of_edge_dz_sequence():
    e1 = OrientedEdge("", 1)
    seq = cov.dz_sequence_edge(e1)
    cv = cov.norm_Nprime(seq)
    assert cv.exact and cv.value == F(5, 6)
    with pytest.raises(UnboundedTailError):
        cov.norm_N(seq)


def test_norm_N_of_periods_is_finite():
    w = fm.fdg(f0, f1)
    pv = coh.periods_up_to(w, 3)
    values = {s: cv.value for s, cv in pv.entries.items()}
    tail = cov.TailBound(
        sum_coeff=F(5, 4) * F(3, 5) * pv.level_sum_bound, sum_ratio=F(3, 5),
        sup_coeff=F(5, 4) * F(3, 5) * pv.level_sum_bound, sup_ratio=F(3, 5),
    )
    seq = cov.LevelSequence.from_values(values, 3, tail)
    cv = cov.norm_N(seq)
    assert cv.value + cv.radius < 10  # finite, with a sound enclosure


def test_effective_length_of_edges():
    lam = cov.effective_length(validate_path([OrientedEdge("", 1)]))
    # oracle: sup 1/3 at every level, geometric sum (1/3) / (1 - 3/5)
    assert lam.exact and lam.value == F(1, 3) * F(5, 2)
    for n in range(4):
        bound = F(3, 5) ** (n - 1) * F(3 + 2 * n, 6)
        for letters in itertools.product("012", repeat=n):
            e = OrientedEdge("".join(letters), n % 3)
            lv = cov.effective_length(validate_path([e]))
            assert lv.value <= bound


def test_effective_length_subadditive():
    e = OrientedEdge("", 1)
    a, b = e.children()
    la = cov.effective_length(validate_path([a]), depth=5)
    lb = cov.effective_length(validate_path([b]), depth=5)
    lab = cov.effective_length(validate_path([a, b]), depth=5)
    assert lab.value - lab.radius <= la.upper() + lb.upper()


def test_homology_classes():
    for s in ["", "1", "20"]:
        g = cov.homology_class(lacuna_path(s), len(s) + 1)
        assert g.coords == {s: 1}
    g = cov.homology_class(perimeter_path(""), 3)
    words = [""] + ["".join(w) for n in (1, 2) for w in itertools.product("012", repeat=n)]
    assert g.coords == {w: -1 for w in words}
    e = OrientedEdge("", 0)
    assert cov.homology_class(validate_path([e, e.reversed()]), 2).is_zero()


def test_homology_is_additive_on_concatenation():
    p = lacuna_path("0")
    q_start = p.target
    # conjugate the second loop so both start at the same basepoint
    q = lacuna_path("0")
    both = p + q
    g = cov.homology_class(both, 2)
    assert g.coords == {"0": 2}


def test_phi_values_and_linearity():
    g_empty = cov.lacuna_class("", depth=2)
    assert cov.phi_hom("", g_empty) == 1
    assert cov.phi_hom("1", g_empty) == F(-1, 3)
    assert cov.phi_hom("11", cov.HomologyElement(3, {"": 1})) == 0
    a = cov.HomologyElement(2, {"": 2, "1": -1})
    b = cov.HomologyElement(2, {"0": 3})
    for s in ["", "0", "1"]:
        assert cov.phi_hom(s, a + b) == cov.phi_hom(s, a) + cov.phi_hom(s, b)


def test_group_length_values():
    assert cov.group_length(cov.HomologyElement(2, {})).value == 0
    gl = cov.group_length(cov.lacuna_class(""))
    # oracle: 1 at level 0, sup 1/3 at every deeper level
    assert gl.exact and gl.value == 1 + F(1, 3) * F(3, 5) / (1 - F(3, 5))
    a = cov.lacuna_class("0", 2)
    b = cov.lacuna_class("1", 2)
    assert cov.group_length(a + b).value <= cov.group_length(a).value + cov.group_length(b).value


def test_group_length_detects_identity_exhaustively():
    words = [""] + list("012")
    for coords in itertools.product(range(-2, 3), repeat=4):
        g = cov.HomologyElement(2, {w: c for w, c in zip(words, coords) if c != 0})
        length = cov.group_length(g).value
        assert (length == 0) == g.is_zero()


def test_group_length_matches_direct_enumeration():
    """Cross-check the stabilized tail against brute-force level sups."""
    rng = random.Random(61)
    words = [""] + list("012")
    for _ in range(5):
        g = cov.HomologyElement(2, {w: rng.randint(-2, 2) for w in words})
        expected = cov.group_length(g).value
        brute = F(0)
        for k in range(12):
            sup = max(
                (abs(sum((c * coh.b_rule("".join(s), tau) for tau, c in g.coords.items()), F(0)))
                 for s in itertools.product("012", repeat=k)),
                default=F(0),
            )
            brute += F(3, 5) ** k * sup
        # the remaining tail is at most (max|coords| sum) * (3/5)^12 * 5/2
        slack = F(3, 5) ** 12 * F(5, 2) * sum(abs(c) for c in g.coords.values())
        assert brute <= expected <= brute + slack


def test_potential_difference_reference_values():
    pd = cov.potential_difference(fm.dz_form(""), lacuna_path(""), 2)
    assert pd.exact and pd.value == 1
    e = OrientedEdge("01", 2)
    pd = cov.potential_difference(fm.d(f1), validate_path([e]), 3)
    assert pd.exact and pd.value == f1(e.target) - f1(e.source)


def test_potential_difference_matches_direct_integration():
    w = fm.fdg(f0, f1)
    path = perimeter_path("")
    pd = cov.potential_difference(w, path, 4)
    direct = fm.integrate_path(w, path)
    assert pd.overlaps(direct)


def test_potential_difference_affine_on_closed_paths():
    w = fm.fdg(f0, f1)
    depth = 3
    hd = coh.hodge_decompose(w, depth)
    path = perimeter_path("") + perimeter_path("")
    pd = cov.potential_difference(w, path, depth, decomposition=hd)
    g = cov.homology_class(path, depth + 1)
    pairing = sum((kcv.value * cov.phi_hom(s, g) for s, kcv in hd.k.items()), F(0))
    budget = pd.radius + sum((kcv.radius for kcv in hd.k.values()), F(0))
    assert abs(pd.value - pairing) <= budget


def test_hnorm_divergence_partial_sums():
    e1 = OrientedEdge("", 1)
    parts = cov.hnorm_divergence(e1, 13)
    assert parts[0] == F(2, 15)
    closed = [F(2, 15) * sum(F(6, 5) ** j for j in range(m + 1)) for m in range(14)]
    assert parts == closed
    assert all(b > a for a, b in zip(parts, parts[1:]))
    assert parts[11] > 1  # already past one well before eleven levels
    # the dual-norm length of the same integral data stays finite
    lam = cov.effective_length(validate_path([e1]))
    assert lam.value == F(5, 6)


def test_hnorm_divergence_deeper_edge():
    e = OrientedEdge("20", 1)
    parts = cov.hnorm_divergence(e, 8)
    assert all(b >= a for a, b in zip(parts, parts[1:]))


def test_duality_pairing_bound():
    rng = random.Random(67)
    words = [""] + ["".join(w) for n in (1, 2) for w in itertools.product("012", repeat=n)]
    for _ in range(10):
        kvals = {w: F(rng.randint(-5, 5), rng.randint(1, 4)) for w in words}
        bvals = {w: F(rng.randint(-5, 5), rng.randint(1, 4)) for w in words}
        kseq = cov.LevelSequence.from_values(kvals, 2)
        bseq = cov.LevelSequence.from_values(bvals, 2)
        pairing = sum((kvals[w] * bvals[w] for w in words), F(0))
        assert abs(pairing) <= cov.norm_N(kseq).value * cov.norm_Nprime(bseq).value
