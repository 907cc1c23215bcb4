import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticelight import (
    CouplingSet,
    LatticeGeometry,
    ModeSpec,
    alpha_minus,
    couplings,
    mode_value,
    structure_function,
)


def test_mode_value_traveling_normal_incidence():
    for m in (1, 2, 7):
        assert mode_value(ModeSpec("traveling", 1.3, 0.0), m, 0.4) == 1 + 0j


def test_mode_value_traveling_half_period_phase():
    # exp(i * 3 * pi)
    u = mode_value(ModeSpec("traveling", 2.0, math.pi / 2), 3, 1.0)
    assert u == pytest.approx(-1 + 0j, abs=1e-14)


def test_mode_value_standing_full_period():
    u = mode_value(ModeSpec("standing", 2.0, math.pi / 2), 2, 1.0)
    assert u == pytest.approx(1.0, abs=1e-14)
    assert u.imag == 0


@given(
    kind=st.sampled_from(["traveling", "standing"]),
    lam=st.floats(0.1, 10),
    theta=st.floats(-math.pi, math.pi),
    m=st.integers(1, 200),
    d=st.floats(0.05, 5),
)
def test_mode_value_bounded(kind, lam, theta, m, d):
    assert abs(mode_value(ModeSpec(kind, lam, theta), m, d)) <= 1 + 1e-12


@pytest.mark.parametrize("bad", [dict(wavelength=0.0, angle=0.0), dict(wavelength=1.0, angle=4.0)])
def test_mode_spec_rejects_invalid(bad):
    with pytest.raises(ValueError):
        ModeSpec("traveling", **bad)


@pytest.mark.parametrize(
    "kw", [dict(M=0, d=1, K=1), dict(M=3, d=0, K=1), dict(M=3, d=1, K=4), dict(M=3, d=1, K=2, j0=3)]
)
def test_lattice_geometry_rejects_invalid(kw):
    with pytest.raises(ValueError):
        LatticeGeometry(**kw)


def test_transverse_couplings_alternate():
    K = 8
    c = couplings(
        LatticeGeometry(M=K, d=1.0, K=K),
        ModeSpec("traveling", 2.0, 0.0),
        ModeSpec("traveling", 2.0, math.pi / 2),
    )
    expected = np.array([(-1) ** m for m in range(1, K + 1)])
    np.testing.assert_allclose(c.coefficients, expected, atol=1e-13)
    assert abs(c.sumA) < 1e-12


def test_equal_angles_give_unit_couplings():
    c = couplings(
        LatticeGeometry(M=12, d=0.7, K=9, j0=2),
        ModeSpec("traveling", 1.1, 0.3),
        ModeSpec("traveling", 1.1, 0.3),
    )
    np.testing.assert_allclose(c.coefficients, 1.0, atol=1e-13)
    assert c.sumA == pytest.approx(9.0)
    assert c.first_site == 2


def test_standing_couplings_match_per_site_evaluation():
    geom = LatticeGeometry(M=30, d=1.0, K=30)
    probe = ModeSpec("standing", 2.0, 0.1 * math.pi)
    detect = ModeSpec("standing", 2.0, 0.37)
    c = couplings(geom, probe, detect)
    for i, m in enumerate(range(1, 31)):
        a = mode_value(detect, m, 1.0).conjugate() * mode_value(probe, m, 1.0)
        assert c.coefficients[i] == a
        # independent of mode_value: cosines straight from the mode definition
        ref = math.cos(m * math.pi * math.sin(0.37)) * math.cos(m * math.pi * math.sin(0.1 * math.pi))
        assert c.coefficients[i].real == pytest.approx(ref, abs=1e-14)
    assert np.all(c.coefficients.imag == 0)


def test_structure_function_limits():
    assert structure_function(30, 0.0) == 900.0
    assert structure_function(30, 2 * math.pi) == pytest.approx(900.0)
    assert structure_function(30, math.pi) == pytest.approx(0.0, abs=1e-24)


def test_structure_function_against_complex_sum():
    # |sum_{m=1..5} exp(0.7 i m)|^2, evaluated independently
    assert structure_function(5, 0.7) == pytest.approx(8.234711255940606, rel=1e-13)


@given(K=st.integers(1, 60), alpha=st.floats(-20, 20))
def test_structure_function_matches_direct_sum(K, alpha):
    direct = abs(sum(cmath.exp(1j * m * alpha) for m in range(1, K + 1))) ** 2
    assert structure_function(K, alpha) == pytest.approx(direct, rel=1e-8, abs=1e-9 * K * K)
    assert 0 <= structure_function(K, alpha) <= K * K * (1 + 1e-12)


@given(K=st.integers(1, 60), alpha=st.floats(-10, 10))
def test_structure_function_periodic_and_even(K, alpha):
    f = structure_function(K, alpha)
    assert structure_function(K, -alpha) == pytest.approx(f, rel=1e-12, abs=1e-12)
    assert structure_function(K, alpha + 2 * math.pi) == pytest.approx(f, rel=1e-6, abs=1e-9 * K * K)


def test_structure_function_near_maximum_is_continuous():
    K = 40
    for x in (1e-12, 1e-10, 3e-9):
        direct = abs(sum(cmath.exp(1j * m * x) for m in range(1, K + 1))) ** 2
        assert structure_function(K, x) == pytest.approx(direct, rel=1e-12)


def test_alpha_minus_examples():
    t = ModeSpec("traveling", 1.0, 0.4)
    assert alpha_minus(t, t, 0.5) == 0.0
    assert alpha_minus(ModeSpec("traveling", 2.0, 0.0), ModeSpec("traveling", 2.0, math.pi / 2), 1.0) == pytest.approx(-math.pi)
    for lam in (0.5, 1.0, 3.0):
        a = alpha_minus(ModeSpec("traveling", lam, 0.0), ModeSpec("traveling", lam, math.pi), 0.5)
        assert a == pytest.approx(0.0, abs=1e-14)


def test_alpha_minus_rejects_standing():
    with pytest.raises(ValueError):
        alpha_minus(ModeSpec("standing", 1.0, 0.0), ModeSpec("traveling", 1.0, 0.2), 0.5)


def test_traveling_intensity_equals_structure_function_on_grid():
    geom = LatticeGeometry(M=30, d=0.5, K=23, j0=4)
    probe = ModeSpec("traveling", 1.0, 0.3)
    for th in np.linspace(-math.pi, math.pi, 181):
        detect = ModeSpec("traveling", 1.0, th)
        c = couplings(geom, probe, detect)
        f = structure_function(geom.K, alpha_minus(probe, detect, geom.d))
        # relative, floored at 1 near the exact zeros of the K-slit factor
        assert abs(abs(c.sumA) ** 2 - f) <= 1e-10 * max(f, 1.0)
        np.testing.assert_allclose(np.abs(c.coefficients), 1.0, atol=1e-14)


@settings(max_examples=50)
@given(
    K=st.integers(1, 25),
    extra=st.integers(0, 5),
    kinds=st.tuples(st.sampled_from(["traveling", "standing"]), st.sampled_from(["traveling", "standing"])),
    th0=st.floats(-math.pi, math.pi),
    th1=st.floats(-math.pi, math.pi),
    lam0=st.floats(0.3, 3),
    lam1=st.floats(0.3, 3),
)
def test_coupling_set_aggregates(K, extra, kinds, th0, th1, lam0, lam1):
    geom = LatticeGeometry(M=K + extra, d=0.5, K=K, j0=1 + extra)
    c = couplings(geom, ModeSpec(kinds[0], lam0, th0), ModeSpec(kinds[1], lam1, th1))
    a = c.coefficients
    assert c.sumA == pytest.approx(complex(sum(a)))
    assert c.sumAbs2 == pytest.approx(float(sum(abs(x) ** 2 for x in a)))
    assert c.sumA2 == pytest.approx(complex(sum(x * x for x in a)), abs=1e-12)
    assert c.sumConjA2 == pytest.approx(complex(sum(x.conjugate() ** 2 for x in a)), abs=1e-12)
    assert c.sumAAbs2 == pytest.approx(complex(sum(x * abs(x) ** 2 for x in a)), abs=1e-12)
    assert c.sumAbs4 == pytest.approx(float(sum(abs(x) ** 4 for x in a)), abs=1e-12)
    assert c.sumAbs2 >= 0
    assert abs(c.sumA) ** 2 <= K * c.sumAbs2 * (1 + 1e-12) + 1e-12
    if kinds == ("standing", "standing"):
        assert np.all(a.imag == 0)
    if kinds == ("traveling", "traveling"):
        np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)


def test_coupling_set_is_immutable():
    c = CouplingSet([1.0, 2.0])
    with pytest.raises(ValueError):
        c.coefficients[0] = 3.0
