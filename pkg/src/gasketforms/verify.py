"""The identity-verification suite behind ``gasketforms verify``.

Each check evaluates one family of exact identities or certified bounds at
its stated depth and tolerance and reports name, status, the expected and
computed values, and the error radius where one applies.  The report is
deterministic: fixed ordering, rationals as "p/q", fixed float formatting.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from . import cohomology as coh
from . import covering as cov
from . import forms as fm
from .geometry import OrientedEdge, lacuna_path, validate_path
from .harmonic import harmonic_basis, random_harmonic

F0 = Fraction(0)
R35 = Fraction(3, 5)


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _item(name, ok, expected, got, radius=None) -> dict:
    return {
        "name": name,
        "status": "PASS" if ok else "FAIL",
        "expected": _fmt(expected),
        "got": _fmt(got),
        "radius": None if radius is None else f"{float(radius):.6g}",
    }


def _aijk_expected(i, j, k) -> Fraction:
    if i == j == k:
        return Fraction(1)
    if (i == j and j != k) or (i != j and j == k):
        return Fraction(-1, 2)
    if i == k and i != j:
        return Fraction(1, 2)
    return F0


def check_product_table(tolerance: Fraction) -> list[dict]:
    f = harmonic_basis()
    bad = []
    for i, j, k in itertools.product(range(3), repeat=3):
        v = fm.q_inner_exact(fm.d(f[i]), fm.fdg(f[j], f[k]))
        if v != _aijk_expected(i, j, k):
            bad.append((i, j, k, v))
    worst = 0.0
    encl = True
    for i, j, k in itertools.product(range(3), repeat=3):
        cv = fm.q_inner_certified(
            fm.d(f[i]), fm.fdg(f[j], f[k]), tolerance=tolerance, max_level=12, strict=False
        )
        exact = _aijk_expected(i, j, k)
        worst = max(worst, abs(float(cv.value) - float(exact)))
        encl = encl and cv.contains(exact)
    return [
        _item("product-table-exact-27", not bad, "all in {1, +-1/2, 0}",
              "all match" if not bad else f"{len(bad)} mismatches"),
        _item("product-table-certified-n12", worst <= 1e-6 and encl,
              "agreement within 1e-6", worst, radius=Fraction(1, 10**6)),
    ]


def check_lacuna_pairing(tolerance: Fraction) -> list[dict]:
    f = harmonic_basis()
    w = fm.fdg(f[0], f[1])
    v = fm.q_inner_exact(fm.dz_form(""), w)
    cv = fm.q_inner_certified(fm.dz_form(""), w, tolerance=tolerance, max_level=12, strict=False)
    return [
        _item("lacuna-pairing-exact", v == Fraction(1, 15), Fraction(1, 15), v),
        _item("lacuna-pairing-certified", cv.contains(Fraction(1, 15)),
              Fraction(1, 15), float(cv.value), radius=cv.radius),
    ]


def check_dz_norms() -> list[dict]:
    bad = 0
    count = 0
    for n in range(4):
        for letters in itertools.product("012", repeat=n):
            s = "".join(letters)
            v = fm.q_inner_exact(fm.dz_form(s), fm.dz_form(s))
            count += 1
            if v != Fraction(5, 6) * Fraction(5, 3) ** n:
                bad += 1
    return [_item("dz-norms-depth3", bad == 0, "(5/6)(5/3)^n", f"{count - bad}/{count} exact")]


def check_period_matrices() -> list[dict]:
    words4 = [""] + ["".join(w) for n in range(1, 5) for w in itertools.product("012", repeat=n)]
    ok_b = True
    for rho in words4:
        for tau in words4:
            v = coh.b_entry(rho, tau)  # integration, asserted against the rule
            if v not in (Fraction(1), Fraction(-1, 3), F0):
                ok_b = False
            if tau == rho and v != 1:
                ok_b = False
            if not rho.startswith(tau) and v != 0:
                ok_b = False
    ok_a = True
    ok_ab = True
    kern = coh.TriangularKernel()
    for letters in itertools.product("012", repeat=5):
        sigma = "".join(letters)
        chain, B, A = kern.chain_matrices(sigma)
        for r in range(len(chain)):
            for c in range(len(chain)):
                if not (0 <= A[r][c] <= 1):
                    ok_a = False
                prod = sum(A[r][m] * B[m][c] for m in range(len(chain)))
                if prod != (1 if r == c else 0):
                    ok_ab = False
    return [
        _item("period-matrix-entries-depth4", ok_b, "B in {1, -1/3, 0}, unitriangular", ok_b),
        _item("period-matrix-inverse-depth5", ok_a and ok_ab, "0 <= A <= 1 and AB = I", ok_a and ok_ab),
    ]


def check_winding_delta() -> list[dict]:
    words3 = [""] + ["".join(w) for n in range(1, 4) for w in itertools.product("012", repeat=n)]
    ok = True
    for sigma in words3:
        for tau in words3:
            v = coh.winding_number(lacuna_path(tau), sigma)
            if v != (1 if sigma == tau else 0):
                ok = False
    return [_item("winding-kronecker-depth3", ok, "delta(sigma,tau)", ok)]


def check_orthogonality() -> list[dict]:
    rng = random.Random(20240901)
    words2 = [""] + ["".join(w) for n in range(1, 3) for w in itertools.product("012", repeat=n)]
    ok_exact_part = True
    for _ in range(20):
        u = random_harmonic(rng.randint(0, 3), rng)
        for s in words2:
            if fm.q_inner_exact(fm.d(u), fm.dz_form(s)) != 0:
                ok_exact_part = False
    ok_dz = True
    for s in words2:
        for t in words2:
            if s == t:
                continue
            if fm.q_inner_exact(fm.dz_form(s), fm.dz_form(t)) != 0:
                ok_dz = False
    return [
        _item("orthogonality-exact-vs-lacuna", ok_exact_part, "0", ok_exact_part),
        _item("orthogonality-lacuna-pairs", ok_dz, "0", ok_dz),
    ]


def check_hodge_consistency(depth: int) -> list[dict]:
    f = harmonic_basis()
    w = fm.fdg(f[0], f[1])
    hd = coh.hodge_decompose(w, depth)
    ok_agree = True
    ok_nonzero = True
    for letters in [()] + [t for n in range(1, depth + 1) for t in itertools.product("012", repeat=n)]:
        s = "".join(letters)
        proj = coh.harmonic_coefficient(w, s)
        if not hd.k[s].overlaps(proj):
            ok_agree = False
        if proj.value == 0:
            ok_nonzero = False
    k0 = coh.harmonic_coefficient(w, "")
    return [
        _item("hodge-route-agreement", ok_agree, "period route ~ projection route", ok_agree),
        _item("hodge-k-empty", k0.exact and k0.value == Fraction(2, 25), Fraction(2, 25), k0.value),
        _item("hodge-k-nonzero-depth3", ok_nonzero, "all k nonzero", ok_nonzero),
    ]


def check_period_decay() -> list[dict]:
    rng = random.Random(77003)
    ok = True
    for _ in range(10):
        u = random_harmonic(rng.randint(0, 2), rng)
        v = random_harmonic(rng.randint(0, 2), rng)
        w = fm.fdg(u, v)
        pv = coh.periods_up_to(w, 6)
        bound_c = u.energy() + v.energy()
        for n in range(7):
            if pv.level_sum(n) > Fraction(5, 4) * R35 ** (n + 1) * bound_c:
                ok = False
    return [_item("period-level-decay", ok, "sum |c| <= (5/4)(3/5)^(n+1)(E[f]+E[g])", ok)]


def check_riemann_convergence() -> list[dict]:
    f = harmonic_basis()
    bound_c = Fraction(3, 4) * (f[0].energy() + f[1].energy())
    ok = True
    for side in range(3):
        e = OrientedEdge("", side)
        exact = fm.integrate_term_exact(Fraction(1), f[0], f[1], e)
        for n in range(1, 21):
            approx = fm.integrate_term_riemann(Fraction(1), f[0], f[1], e, n)
            if abs(approx - exact) > bound_c * R35**n:
                ok = False
    return [_item("riemann-tail-n20", ok, "|I_n - I| <= (3/4)(3/5)^n (E+E)", ok)]


def _random_paths(rng: random.Random, count: int):
    """Pairs of consecutive random walks on a random-level skeleton."""
    out = []
    while len(out) < count:
        level = rng.randint(1, 3)
        adjacency: dict = {}
        for letters in itertools.product("012", repeat=level):
            word = "".join(letters)
            for side in range(3):
                e = OrientedEdge(word, side)
                adjacency.setdefault(e.source, []).append(e)
                adjacency.setdefault(e.target, []).append(e.reversed())

        def walk(start, steps):
            edges = []
            p = start
            for _ in range(steps):
                e = rng.choice(adjacency[p])
                edges.append(e)
                p = e.target
            return validate_path(edges)

        start = rng.choice(sorted(adjacency, key=str))
        g1 = walk(start, rng.randint(1, 4))
        g2 = walk(g1.target, rng.randint(1, 4))
        out.append((g1, g2))
    return out


def check_effective_length() -> list[dict]:
    ok_bound = True
    for n in range(5):
        bound = R35 ** (n - 1) * Fraction(3 + 2 * n, 6)
        for letters in itertools.product("012", repeat=n):
            word = "".join(letters)
            for side in range(3):
                lv = cov.effective_length(validate_path([OrientedEdge(word, side)]))
                if lv.value > bound:
                    ok_bound = False
    lam = cov.effective_length(validate_path([OrientedEdge("", 1)]))
    ok_e1 = lam.exact and abs(lam.value - Fraction(5, 6)) <= Fraction(1, 10**12)
    rng = random.Random(555)
    ok_sub = True
    for g1, g2 in _random_paths(rng, 50):
        l1 = cov.effective_length(g1, depth=5)
        l2 = cov.effective_length(g2, depth=5)
        l12 = cov.effective_length(g1 + g2, depth=5)
        if l12.value - l12.radius > l1.upper() + l2.upper():
            ok_sub = False
    return [
        _item("effective-length-edge-bound", ok_bound, "(3/5)^(n-1)(3+2n)/6", ok_bound),
        _item("effective-length-e1", ok_e1, Fraction(5, 6), lam.value, radius=Fraction(1, 10**12)),
        _item("effective-length-subadditive", ok_sub, "lambda(ab) <= lambda(a)+lambda(b)", ok_sub),
    ]


def check_completion_counterexample() -> list[dict]:
    ok_plateau = True
    for n in range(1, 7):
        for k in range(n, n + 5):
            if fm.nonorm_q_level(n, k) != Fraction(3, 2) * Fraction(5, 6) ** n:
                ok_plateau = False
    ok_diff = True
    for n in range(1, 7):
        for k in range(n):
            if fm.nonorm_q_level_diff(n, k) != Fraction(1, 2) * Fraction(10, 3) ** k * Fraction(4) ** (-n):
                ok_diff = False
    ok_sup = True
    for n in range(1, 7):
        sup = max(fm.nonorm_q_level_diff(n, k) for k in range(n + 9))
        if sup > 5 * Fraction(5, 6) ** n:
            ok_sup = False
    return [
        _item("counterexample-q-plateau", ok_plateau, "(3/2)(5/6)^n", ok_plateau),
        _item("counterexample-q-difference", ok_diff, "(1/2)(10/3)^k 4^-n", ok_diff),
        _item("counterexample-q-sup", ok_sup, "<= 5 (5/6)^n", ok_sup),
    ]


def check_divergent_edge_norm() -> list[dict]:
    e1 = OrientedEdge("", 1)
    L = 41
    partials = cov.hnorm_divergence(e1, L)
    closed = [Fraction(2, 15) * sum(Fraction(6, 5) ** j for j in range(m + 1)) for m in range(L + 1)]
    ok_closed = partials == closed
    ok_grow = all(b > a for a, b in zip(partials, partials[1:]))
    crossing = next(i for i, v in enumerate(partials) if v > 1000)
    lam = cov.effective_length(validate_path([e1]))
    ok_lam = lam.exact and lam.value == Fraction(5, 6)
    return [
        _item("hilbert-length-partials", ok_closed and ok_grow, "(2/15) sum (6/5)^n", ok_closed),
        _item("hilbert-length-divergence", partials[crossing] > 1000, "> 1000", f"at L={crossing}"),
        _item("hilbert-vs-dual-length", ok_lam, Fraction(5, 6), lam.value),
    ]


def check_harmonic_module() -> list[dict]:
    rng = random.Random(424243)
    ok_energy = True
    for _ in range(20):
        m = rng.randint(0, 3)
        u = random_harmonic(m, rng)
        levels = u.energy_levels(m + 6)
        if any(e != levels[0] for e in levels):
            ok_energy = False
    ok_osc = True
    for _ in range(20):
        u = random_harmonic(0, rng)
        for n in range(3):
            for letters in itertools.product("012", repeat=n):
                w = "".join(letters)
                parent = u.oscillation(w)
                for i in "012":
                    if u.oscillation(w + i) > R35 * parent:
                        ok_osc = False
    return [
        _item("energy-invariance", ok_energy, "E_n = E_m exactly", ok_energy),
        _item("oscillation-decay", ok_osc, "osc(child) <= (3/5) osc(cell)", ok_osc),
    ]


def check_integer_detection() -> list[dict]:
    words = [""] + list("012")
    ok = True
    for coords in itertools.product(range(-2, 3), repeat=4):
        if all(c == 0 for c in coords):
            continue
        g = cov.HomologyElement(2, dict(zip(words, coords)))
        found = False
        for s in words:
            v = cov.phi_hom(s, g)
            if v != 0 and v.denominator == 1:
                found = True
                break
        if not found:
            ok = False
    return [_item("deck-homomorphism-integer", ok, "some phi_sigma(g) in Z \\ {0}", ok)]


CHECKS = [
    ("1", lambda depth, tol: check_product_table(tol)),
    ("2", lambda depth, tol: check_lacuna_pairing(tol)),
    ("3", lambda depth, tol: check_dz_norms()),
    ("4", lambda depth, tol: check_period_matrices()),
    ("5", lambda depth, tol: check_winding_delta()),
    ("6", lambda depth, tol: check_orthogonality()),
    ("7", lambda depth, tol: check_hodge_consistency(min(depth, 3))),
    ("8", lambda depth, tol: check_period_decay()),
    ("9", lambda depth, tol: check_riemann_convergence()),
    ("10", lambda depth, tol: check_effective_length()),
    ("11", lambda depth, tol: check_completion_counterexample()),
    ("12", lambda depth, tol: check_divergent_edge_norm()),
    ("13", lambda depth, tol: check_harmonic_module()),
    ("14", lambda depth, tol: check_integer_detection()),
]


def run_suite(depth: int = 3, tolerance: Fraction = Fraction(1, 10**9)) -> dict:
    suite = []
    for num, fn in CHECKS:
        for item in fn(depth, tolerance):
            item["criterion"] = num
            suite.append(item)
    return {"suite": suite, "passed": all(s["status"] == "PASS" for s in suite)}
