import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eigenbox.box_spectrum import (
    EXACT,
    FINITE_DIFFERENCE,
    Orthotope,
    Spectrum,
    count_below,
    iter_eigenvalues,
    kth_eigenvalue,
    multiplicity_of_kth,
    resolved_prefix,
    spectrum_prefix,
)

PI2 = math.pi**2


def brute_force(half_widths, count):
    """Oracle: all multi-indices in a cube large enough to hold the first ``count`` values, sorted."""
    a = np.asarray(half_widths, dtype=float)
    w = PI2 / (4 * a * a)
    # every value below the count-th of the cube (1..M)^n is captured once M^n >= count per axis bound
    m = 1
    while True:
        grids = np.meshgrid(*[np.arange(1, m + 1)] * len(a), indexing="ij")
        vals = np.sort(sum(wi * g.ravel() ** 2 for wi, g in zip(w, grids)))
        if vals.size >= count:
            cap = vals[count - 1]
            if all(wi * (m + 1) ** 2 + (w.sum() - wi) > cap for wi in w):
                return vals[:count]
        m += 1


half_widths = st.lists(st.floats(0.1, 10.0), min_size=1, max_size=4)


def test_orthotope_sorts_and_validates():
    box = Orthotope((2.0, 0.5, 1.0))
    assert box.half_widths == (0.5, 1.0, 2.0)
    assert box.volume == pytest.approx(8.0)
    assert box.inradius == 0.5
    for bad in ((), (0.0,), (-1.0, 1.0), (math.inf,)):
        with pytest.raises(ValueError):
            Orthotope(bad)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        Spectrum(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        Spectrum(np.array([1.0]), source=EXACT, mesh_width=0.1)
    s = Spectrum(np.array([1.0, 2.0]), source=FINITE_DIFFERENCE, mesh_width=0.1, errors=[0.1, 0.2])
    assert s[2] == 2.0 and s.error(2) == 0.2
    with pytest.raises(IndexError):
        s[0]
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_unit_square_first_values():
    spec = spectrum_prefix(Orthotope((0.5, 0.5)), 4)
    assert np.allclose(spec.values / PI2, [2, 5, 5, 8], rtol=1e-14)
    assert kth_eigenvalue(Orthotope((0.5, 0.5)), 1) == pytest.approx(2 * PI2, rel=1e-15)


def test_interval():
    assert np.allclose(spectrum_prefix(Orthotope((0.5,)), 3).values / PI2, [1, 4, 9], rtol=1e-14)


def test_omega5():
    spec = spectrum_prefix(Orthotope((2.5, 0.5)), 5)
    assert np.allclose(spec.values / PI2, [1.04, 1.16, 1.36, 1.64, 2.0], rtol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 7, 30, 50])
def test_counterexample_family(k):
    box = Orthotope.from_sides((k, 1.0))
    assert kth_eigenvalue(box, 1) == pytest.approx(PI2 * (1 + 1 / k**2), rel=1e-12)
    assert kth_eigenvalue(box, k) == pytest.approx(2 * PI2, rel=1e-12)


@given(half_widths, st.integers(1, 150))
def test_prefix_matches_brute_force(hw, count):
    box = Orthotope(tuple(hw))
    assert np.allclose(spectrum_prefix(box, count).values, brute_force(box.half_widths, count), rtol=1e-13)


def test_iter_yields_multi_indices():
    box = Orthotope((0.5, 0.5))
    got = list(itertools.islice(iter_eigenvalues(box), 4))
    assert [m for _, m in got] == [(1, 1), (1, 2), (2, 1), (2, 2)]


@pytest.mark.parametrize("lam,expected", [(30.0, 1), (5 * PI2, 3), (1.0, 0)])
def test_count_below_examples(lam, expected):
    assert count_below(Orthotope((0.5, 0.5)), lam) == expected


@given(half_widths, st.floats(0.0, 1.0))
def test_count_below_below_ground_state(hw, frac):
    box = Orthotope(tuple(hw))
    ground = PI2 / 4 * sum(1 / a**2 for a in box.half_widths)
    assert count_below(box, ground * frac * (1 - 1e-12)) == 0


@given(half_widths, st.integers(1, 400))
def test_count_below_consistent_with_enumeration(hw, k):
    box = Orthotope(tuple(hw))
    lam = kth_eigenvalue(box, k)
    assert count_below(box, lam) >= k
    assert count_below(box, lam * (1 - 1e-12)) < k


def test_count_below_rejects_nan():
    with pytest.raises(ValueError):
        count_below(Orthotope((1.0,)), math.nan)


@pytest.mark.parametrize("k,expected", [(1, 1), (2, 2), (3, 2)])
def test_multiplicity_square(k, expected):
    assert multiplicity_of_kth(Orthotope((0.5, 0.5)), k) == expected


def brute_multiplicity(box, k):
    vals = brute_force(box.half_widths, k + 40)
    return int(np.sum(np.abs(vals - vals[k - 1]) <= 1e-12 * vals[k - 1]))


def test_sqrt2_side_ratio_has_lattice_coincidence():
    # lambda / pi^2 = m^2 + 2 p^2 is an integer form: (5,1) and (3,3) both give 27
    box = Orthotope((0.5, 0.5 / math.sqrt(2)))
    mults = [multiplicity_of_kth(box, k) for k in range(1, 21)]
    assert mults == [brute_multiplicity(box, k) for k in range(1, 21)]
    assert mults[:10] == [1] * 10
    assert mults[10] == mults[11] == 2


def test_transcendental_squared_ratio_is_simple():
    box = Orthotope((0.5, 0.5 * math.sqrt(math.pi)))
    assert all(multiplicity_of_kth(box, k) == 1 for k in range(1, 41))


@given(half_widths, st.integers(1, 60))
def test_multiplicity_matches_brute_force(hw, k):
    box = Orthotope(tuple(hw))
    assert multiplicity_of_kth(box, k) == brute_multiplicity(box, k)


def test_resolved_prefix_closes_cluster():
    spec = resolved_prefix(Orthotope((0.5, 0.5)), 2)
    assert len(spec) == 4 and spec[2] == spec[3] < spec[4]


@given(half_widths, st.integers(1, 100), st.sampled_from(["sqrt_n", "n", "two"]))
def test_scaling_law(hw, k, which):
    box = Orthotope(tuple(hw))
    t = {"sqrt_n": 1 / math.sqrt(box.dim), "n": float(box.dim), "two": 2.0}[which]
    assert kth_eigenvalue(box.scaled(t), k) == pytest.approx(kth_eigenvalue(box, k) / t**2, rel=1e-12)


@given(half_widths, st.lists(st.floats(1.0, 3.0), min_size=4, max_size=4), st.integers(1, 100))
def test_domain_monotonicity(hw, grow, k):
    small = Orthotope(tuple(hw))
    large = Orthotope(tuple(a * g for a, g in zip(small.half_widths, grow)))
    assert kth_eigenvalue(small, k) >= kth_eigenvalue(large, k)


def test_weyl_ratio_large_k():
    box = Orthotope((0.5, 0.5))
    k = 100_000
    ratio = kth_eigenvalue(box, k) / (4 * PI2 * k / math.pi)
    assert 0.9 <= ratio <= 1.1
