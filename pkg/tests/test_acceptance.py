"""Acceptance criteria 1-12, each at its stated tolerance and runtime limit.

Every test prints one ``ACCEPTANCE <i> PASS|FAIL`` line (collected in the
terminal summary) and then asserts the same verdict.
"""

import functools
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eigenbox.bounds import (
    berezin_li_yau_bound,
    check_ashbaugh_benguria,
    check_berezin_li_yau,
    check_corollary_multiplicity,
    check_hersch_protter,
    check_inradius_upper,
    check_ppw,
    constants,
    theorem1_margins,
    theorem2_margins,
    weyl_diagnostic,
)
from eigenbox.box_spectrum import Orthotope, resolved_prefix, spectrum_prefix
from eigenbox.fem_solver import fd_spectrum, richardson_estimate
from eigenbox.geometry import ConvexPolygon, hatcher_sandwich, inradius, random_convex_polygon, regular_polygon, unit_square
from eigenbox.proof_replay import TWO_OVER_SQRT3, gamma_chain_scalar, replay_lemma31, replay_lemma33
from eigenbox.special_functions import first_bessel_zero, zero_bracket

PI2 = math.pi**2
J01 = first_bessel_zero(0.0)
J11 = first_bessel_zero(1.0)
CORPUS_SIZE = 1000
CORPUS_K = 200
POLYGONS = 200


def record(number: int, passed: bool, detail: str, elapsed: float = None, limit: float = None) -> None:
    timing = ""
    if elapsed is not None:
        timing = f" [{elapsed:.1f}s" + (f" / limit {limit:g}s]" if limit else "]")
    line = f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {detail}{timing}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


@functools.lru_cache(maxsize=None)
def box_corpus():
    """1000 seeded boxes, n in 1..5, half-widths log-uniform on [0.1, 10], exact spectra to 200 (clusters closed)."""
    start = time.perf_counter()
    rng = np.random.default_rng(20240611)
    out = []
    for _ in range(CORPUS_SIZE):
        n = int(rng.integers(1, 6))
        box = Orthotope(tuple(np.exp(rng.uniform(math.log(0.1), math.log(10.0), n))))
        out.append((box, resolved_prefix(box, CORPUS_K)))
    return out, time.perf_counter() - start


@functools.lru_cache(maxsize=None)
def polygon_corpus():
    """200 seeded random convex polygons with Richardson spectra on meshes rho/4, rho/8, rho/16."""
    start = time.perf_counter()
    out = []
    for i in range(POLYGONS):
        poly = random_convex_polygon(np.random.default_rng([6, i]))
        rho = inradius(poly)[0]
        spec = richardson_estimate(poly, 4, [rho / 4, rho / 8, rho / 16])
        out.append((poly, rho, spec))
    return out, time.perf_counter() - start


def test_criterion_01_counterexample_family():
    start = time.perf_counter()
    worst = 0.0
    for k in range(1, 51):
        spec = spectrum_prefix(Orthotope.from_sides((float(k), 1.0)), k)
        worst = max(worst, abs(spec[1] / (PI2 * (1 + 1 / k**2)) - 1), abs(spec[k] / (2 * PI2) - 1))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-12 and elapsed < 1.0, f"max relative error {worst:.2e} over k=1..50", elapsed, 1)


def test_criterion_02_theorem1_corpus():
    start = time.perf_counter()
    corpus, _ = box_corpus()
    pairs = violations = violations_box = 0
    worst_box = math.inf
    for box, spec in corpus:
        values = spec.values[:CORPUS_K]
        m = theorem1_margins(values, box.dim)
        mb = theorem1_margins(values, box.dim, box_constant=True)
        ok = ~np.isnan(m)
        pairs += int(ok.sum())
        violations += int((m[ok] < 0).sum())
        violations_box += int((mb[ok] < 0).sum())
        worst_box = min(worst_box, float(mb[ok].min()))
    elapsed = time.perf_counter() - start
    passed = violations == 0 and violations_box == 0 and elapsed < 120
    record(2, passed, f"{pairs} pairs, violations {violations} (12 n^3 j^2) / {violations_box} (12 j^2), min box margin {worst_box:.3g}", elapsed, 120)


def test_criterion_03_theorem2_and_corollary_corpus():
    corpus, _ = box_corpus()
    start = time.perf_counter()
    applicable = violations = mult_checked = mult_violations = 0
    for box, spec in corpus:
        n = box.dim
        values = spec.values[:CORPUS_K]
        for box_constant in (False, True):
            m = theorem2_margins(values, n, box_constant=box_constant)
            ok = ~np.isnan(m)
            applicable += int(ok.sum())
            violations += int((m[ok] < 0).sum())
        threshold = constants(n).alpha_n * spec[1]
        for k in np.flatnonzero(values > threshold) + 1:
            r = check_corollary_multiplicity(spec, n, int(k))
            mult_checked += 1
            mult_violations += int(r.violated or not r.applicable)
    elapsed = time.perf_counter() - start
    passed = violations == 0 and mult_violations == 0 and elapsed < 120
    record(3, passed, f"{applicable} applicable pairs, {violations} violations; multiplicity {mult_checked} checked, {mult_violations} violations", elapsed, 120)


def test_criterion_04_bessel_zeros():
    start = time.perf_counter()
    err = abs(first_bessel_zero(0.5) - math.pi)
    outside = []
    for i in range(0, 306):
        nu = round(-0.5 + 0.1 * i, 10)
        lo, hi = zero_bracket(nu)
        j = first_bessel_zero(nu)
        if not lo < j < hi:
            outside.append(nu)
    elapsed = time.perf_counter() - start
    passed = err <= 1e-10 and not outside and elapsed < 5
    record(4, passed, f"|j_(1/2,1) - pi| = {err:.1e}; {len(outside)} of 306 orders outside the bracket", elapsed, 5)


def test_criterion_05_fd_accuracy():
    start = time.perf_counter()
    square = unit_square()
    plain = abs(fd_spectrum(square, 1 / 64, 1)[1] / (2 * PI2) - 1)
    extrap = abs(richardson_estimate(square, 1, [1 / 16, 1 / 32, 1 / 64])[1] / (2 * PI2) - 1)
    disk = abs(fd_spectrum(regular_polygon(64), 1 / 64, 1)[1] / J01**2 - 1)
    elapsed = time.perf_counter() - start
    passed = plain <= 5e-3 and extrap <= 5e-4 and disk <= 1e-2 and elapsed < 60
    record(5, passed, f"square h=1/64 {plain:.2%}, Richardson {extrap:.3%}, disk64 {disk:.2%}", elapsed, 60)


def test_criterion_06_inradius_sandwich():
    corpus, elapsed = polygon_corpus()
    bad = 0
    worst = math.inf
    for poly, rho, spec in corpus:
        for r in (check_hersch_protter(spec[1], rho, 2, spec.error(1)), check_inradius_upper(spec[1], rho, 2, spec.error(1))):
            bad += int(r.violated)
            worst = min(worst, r.margin)
    passed = bad == 0 and elapsed < 600
    record(6, passed, f"{len(corpus)} polygons, {bad} violations beyond bands, min margin {worst:.3g}", elapsed, 600)


def test_criterion_07_berezin_li_yau():
    corpus, _ = polygon_corpus()
    start = time.perf_counter()
    K = 10_000
    spec = spectrum_prefix(Orthotope((0.5, 0.5)), K)
    bound = np.array([berezin_li_yau_bound(2, 1.0, k) for k in range(1, K + 1)])
    square_bad = int((spec.values < bound).sum())
    poly_bad = sum(int(check_berezin_li_yau(spec_p, 2, poly.area, k).violated) for poly, _, spec_p in corpus for k in range(1, 5))
    elapsed = time.perf_counter() - start
    passed = square_bad == 0 and poly_bad == 0 and elapsed < 60
    record(7, passed, f"square k<=1e4: {square_bad} violations; polygons k<=4: {poly_bad} violations beyond bands (corpus built in criterion 6)", elapsed, 60)


def test_criterion_08_ashbaugh_benguria():
    disk = richardson_estimate(regular_polygon(64), 2, [1 / 16, 1 / 32, 1 / 64])
    ratio = disk[2] / disk[1]
    target = (J11 / J01) ** 2
    square = check_ashbaugh_benguria(spectrum_prefix(Orthotope((0.5, 0.5)), 2), 2)
    passed = abs(ratio / target - 1) <= 0.02 and square.lhs == pytest.approx(2.5) and square.margin > 0
    record(8, passed, f"disk64 ratio {ratio:.4f} vs {target:.4f} ({ratio / target - 1:+.2%}); square {square.lhs:.4f} <= {square.rhs:.4f}")


def _rectangle(rng):
    a = np.exp(rng.uniform(math.log(0.2), math.log(3.0), 2))
    theta = rng.uniform(0, math.pi)
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    corners = np.array([[-a[0], -a[1]], [a[0], -a[1]], [a[0], a[1]], [-a[0], a[1]]]) @ rot.T + rng.uniform(-1, 1, 2)
    return ConvexPolygon.from_vertices(corners), Orthotope(tuple(a))


def test_criterion_09_hatcher_sandwich():
    start = time.perf_counter()
    failures = 0
    for i in range(1000):
        poly = random_convex_polygon(np.random.default_rng([9, i]))
        s = hatcher_sandwich(poly)
        inner_ok = poly.slack(s.inner_corners()).min() >= -1e-12
        outer_ok = np.all(np.abs(s.to_local(poly.vertices)) <= np.asarray(s.outer_box.half_widths) + 1e-12)
        failures += int(not (inner_ok and outer_ok))
    n = 2
    c = constants(n)
    constant_gap = abs(n**3 * c.c_n_box / c.c_n - 1)
    chain_bad = 0
    rng = np.random.default_rng(99)
    K = 30
    for _ in range(100):
        poly, omega = _rectangle(rng)
        s = hatcher_sandwich(poly)
        lam = spectrum_prefix(omega, K).values
        lam_r = spectrum_prefix(s.box, K).values
        lam_inner = spectrum_prefix(s.inner_box, K).values
        lam_outer = spectrum_prefix(s.outer_box, K).values
        tol = 1e-12
        chain_bad += int(not np.allclose(lam_inner, n * lam_r, rtol=1e-13))
        chain_bad += int(not np.allclose(lam_outer, lam_r / n**2, rtol=1e-13))
        chain_bad += int(np.any(lam > lam_inner * (1 + tol)) or np.any(lam_outer > lam * (1 + tol)))
        for k in range(1, K + 1):
            for l in range(1, k + 1):
                upper = n * c.c_n_box * (k / l) ** (2 / n) * lam_r[l - 1]
                chain_bad += int(lam[k - 1] > upper * (1 + tol) or upper > n**3 * c.c_n_box * (k / l) ** (2 / n) * lam[l - 1] * (1 + tol))
    elapsed = time.perf_counter() - start
    passed = failures == 0 and constant_gap <= 1e-15 and chain_bad == 0 and elapsed < 120
    record(9, passed, f"{failures}/1000 certification failures; n^3 c_box / c_n - 1 = {constant_gap:.1e}; {chain_bad} transfer-chain failures", elapsed, 120)


def test_criterion_10_proof_replay():
    start = time.perf_counter()
    transcripts = applicable = 0
    failed = {}
    for i in range(100):
        rng = np.random.default_rng([10, i])
        n = 1 + i % 3
        box = Orthotope(tuple(np.exp(rng.uniform(math.log(0.5), math.log(2.0), n))))
        k = int(rng.integers(1, 21))
        l = int(rng.integers(1, k + 1))
        runs = [replay_lemma31(box, k, l, seed=i)]
        spec = spectrum_prefix(box, 1000)
        alpha = constants(n).alpha_n_box
        l3 = next(j for j in range(1, 1001) if spec[j] > alpha * spec[1])
        runs.append(replay_lemma33(box, l3 + int(rng.integers(0, l3 + 1)), l3, seed=i))
        for t in runs:
            transcripts += 1
            if t.applicable:
                applicable += 1
                if not t.passed:
                    failed.setdefault((n, t.first_failure.step_id), 0)
                    failed[(n, t.first_failure.step_id)] += 1
    gamma_low = [n for n in range(1, 61) if gamma_chain_scalar(n) < TWO_OVER_SQRT3]
    elapsed = time.perf_counter() - start
    summary = ", ".join(f"n={n} fails at {step} x{c}" for (n, step), c in sorted(failed.items())) or "none"
    passed = not failed and not gamma_low and elapsed < 300
    record(
        10,
        passed,
        f"{applicable}/{transcripts} applicable transcripts, failures: {summary}; Gamma-chain below 2/sqrt3 at n={gamma_low}",
        elapsed,
        300,
    )


def test_criterion_11_corrected_ppw():
    corpus, _ = box_corpus()
    start = time.perf_counter()
    checked = bad = 0
    for box, spec in corpus:
        n = box.dim
        v = spec.values[:101]
        k = np.arange(1, 101)
        gap_ok = v[1:] - v[:-1] <= 4.0 / (n * k) * np.cumsum(v[:-1]) * (1 + 1e-13)
        ratio_ok = v[1:] <= (1 + 4.0 / n) * v[:-1] * (1 + 1e-13)
        checked += 2 * k.size
        bad += int((~gap_ok).sum() + (~ratio_ok).sum())
    gap, _ = check_ppw(spectrum_prefix(Orthotope((0.5, 0.5)), 2), 2, 1, printed=True)
    printed_fails = gap.violated and gap.lhs == pytest.approx(3 * PI2) and gap.rhs == pytest.approx(PI2)
    elapsed = time.perf_counter() - start
    passed = bad == 0 and printed_fails
    record(11, passed, f"{checked} corrected checks, {bad} violations; printed form on square: {gap.lhs / PI2:.3g} pi^2 vs {gap.rhs / PI2:.3g} pi^2 (violated={gap.violated})", elapsed)


def test_criterion_12_weyl():
    corpus, _ = box_corpus()
    start = time.perf_counter()
    K = 100_000
    spec = spectrum_prefix(Orthotope((0.5, 0.5)), K)
    r = weyl_diagnostic(spec, 2, 1.0)
    low = int((r < 0.5).sum())
    for box, s in corpus:
        low += int((weyl_diagnostic(s, box.dim, box.volume) < box.dim / (box.dim + 2) * (1 - 1e-13)).sum())
    elapsed = time.perf_counter() - start
    passed = 0.9 <= r[-1] <= 1.1 and low == 0 and elapsed < 30
    record(12, passed, f"r_(1e5) = {r[-1]:.4f}; {low} values below n/(n+2)", elapsed, 30)
