import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from latticelight import (
    Coherent,
    MomentPattern,
    MottInsulator,
    Superfluid,
    joint_factorial_moment,
    make_state,
    mean_filling,
    ordinary_joint_moment,
    pair_covariance,
    table1,
    variance,
)
from latticelight.states import stirling2


def test_stirling_numbers():
    # row 4: 0 1 7 6 1
    assert [stirling2(4, k) for k in range(5)] == [0, 1, 7, 6, 1]
    assert stirling2(8, 3) == 966
    assert stirling2(9, 2) == 255
    assert stirling2(0, 0) == 1
    assert stirling2(3, 5) == 0


@pytest.mark.parametrize("p", range(1, 10))
def test_stirling_converts_falling_factorials_to_powers(p):
    for x in range(7):
        falling = lambda k: math.prod(x - j for j in range(k))
        assert sum(stirling2(p, k) * falling(k) for k in range(p + 1)) == x**p


def test_mean_filling():
    assert mean_filling(MottInsulator(1, 10)) == 1
    assert mean_filling(Superfluid(30, 30)) == 1
    assert mean_filling(Coherent(15, 30)) == 0.5


def test_make_state():
    assert make_state("mi", 60, 30) == MottInsulator(2, 30)
    assert make_state("sf", 7, 3) == Superfluid(7, 3)
    assert make_state("coherent", 2.5, 5) == Coherent(2.5, 5)
    with pytest.raises(ValueError):
        make_state("mi", 7, 3)
    with pytest.raises(ValueError):
        make_state("bec", 1, 1)


@pytest.mark.parametrize(
    "ctor", [lambda: Superfluid(-1, 3), lambda: Superfluid(2.5, 3), lambda: MottInsulator(1, 0), lambda: Coherent(-0.1, 2)]
)
def test_invalid_states(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_pattern_canonical_form():
    assert MomentPattern((1, 2)).multiplicities == (2, 1)
    assert MomentPattern((2, 1, 1)).order == 4
    with pytest.raises(ValueError):
        MomentPattern((0, 1))
    with pytest.raises(ValueError):
        MomentPattern(())


def test_factorial_moment_examples():
    # SF pair: 2*1 / 2^2, equal to n^2 (1 - 1/N) at N = M = 2
    assert joint_factorial_moment(Superfluid(2, 2), (1, 1)) == 0.5
    assert joint_factorial_moment(MottInsulator(1, 4), (2,)) == 0
    assert joint_factorial_moment(Coherent(0.5, 1), (2, 1)) == 0.125
    assert joint_factorial_moment(Superfluid(3, 5), (2, 2)) == 0  # order exceeds N


def test_ordinary_moment_examples():
    assert ordinary_joint_moment(Superfluid(30, 30), (2,)) == pytest.approx(1 - 1 / 30 + 1, rel=1e-15)
    assert ordinary_joint_moment(Coherent(3, 3), (2,)) == 2
    assert ordinary_joint_moment(MottInsulator(1, 3), (2,)) == 1


def _sf_enumerated(N, M, pattern):
    total = Fraction(0)
    for occ in itertools.product(range(N + 1), repeat=M):
        if sum(occ) != N:
            continue
        w = Fraction(math.factorial(N), math.prod(math.factorial(x) for x in occ) * M**N)
        total += w * math.prod(occ[s] ** m for s, m in enumerate(pattern))
    return total


def test_sf_fourth_order_pair_against_enumeration():
    # 4 compositions of 3 atoms over 2 sites; worked out independently to exactly 3
    assert _sf_enumerated(3, 2, (2, 2)) == 3
    assert ordinary_joint_moment(Superfluid(3, 2), (2, 2)) == 3.0


_PATTERNS = [(1,), (2,), (3,), (4,), (1, 1), (2, 1), (3, 1), (2, 2), (1, 1, 1), (2, 1, 1), (1, 1, 1, 1)]


@pytest.mark.parametrize(
    "N,M,pattern",
    [(N, M, p) for N, M in [(4, 3), (5, 4), (6, 4), (3, 5)] for p in _PATTERNS if len(p) <= M],
)
def test_sf_moments_against_enumeration(N, M, pattern):
    assert ordinary_joint_moment(Superfluid(N, M), pattern) == pytest.approx(
        float(_sf_enumerated(N, M, pattern)), rel=1e-14
    )


def test_table1_superfluid_rows():
    s = Superfluid(30, 30)
    n, N, M = 1.0, 30, 30
    t = table1(s, 30)
    assert t.n2 == pytest.approx(n * n * (1 - 1 / N) + n, rel=1e-15)
    assert t.var_n == pytest.approx(n * (1 - 1 / M), rel=1e-15)
    assert t.nanb == pytest.approx(n * n * (1 - 1 / N), rel=1e-15)
    assert t.cov == pytest.approx(-N / M**2, rel=1e-15)
    assert t.var_NK == 0.0
    t15 = table1(s, 15)
    assert t15.var_NK == pytest.approx(15 * (1 - 15 / 30), rel=1e-15)
    assert t15.NK2 == pytest.approx(15**2 * (1 - 1 / N) + 15, rel=1e-15)


@pytest.mark.parametrize("N,M,K", [(4, 4, 2), (15, 30, 7), (2.5, 3, 3)])
def test_table1_coherent_rows(N, M, K):
    t = table1(Coherent(N, M), K)
    n = N / M
    NK = n * K
    assert t.n2 == pytest.approx(n * n + n)
    assert t.var_n == pytest.approx(n)
    assert t.NK2 == pytest.approx(NK * NK + NK)
    assert t.var_NK == pytest.approx(NK)
    assert t.nanb == pytest.approx(n * n)
    assert t.cov == 0


def test_table1_mott_rows():
    t = table1(MottInsulator(2, 5), 3)
    assert (t.n2, t.var_n, t.NK2, t.var_NK, t.nanb, t.cov) == (4, 0, 36, 0, 4, 0)


def test_variance_and_covariance_projections():
    assert variance(MottInsulator(3, 4)) == 0
    assert pair_covariance(MottInsulator(3, 4)) == 0
    assert variance(Superfluid(12, 12)) == pytest.approx(1 - 1 / 12)
    assert pair_covariance(Coherent(5, 7)) == 0


def test_table1_rejects_bad_window():
    with pytest.raises(ValueError):
        table1(Superfluid(3, 3), 4)


@given(N=st.integers(1, 30), M=st.integers(1, 30), data=st.data())
def test_exchangeability_identity(N, M, data):
    K = data.draw(st.integers(1, M))
    states = [Superfluid(N, M), Coherent(N, M)]
    if N % M == 0:
        states.append(MottInsulator(N // M, M))
    for s in states:
        t = table1(s, K)
        assert t.var_n == pytest.approx(t.n2 - s.n**2, abs=1e-12)
        assert t.cov == pytest.approx(t.nanb - s.n**2, abs=1e-12)
        assert abs(t.var_NK - (K * t.var_n + K * (K - 1) * t.cov)) <= 1e-12 * max(1.0, t.NK2)


@given(N=st.integers(0, 40), M=st.integers(1, 40))
def test_superfluid_full_window_has_fixed_number(N, M):
    assert table1(Superfluid(N, M), M).var_NK == 0.0


@given(n=st.floats(0, 20), a=st.integers(1, 4), b=st.integers(1, 4))
def test_coherent_moments_factorize(n, a, b):
    s = Coherent(n * 3, 3)
    joint = ordinary_joint_moment(s, (a, b))
    assert joint == pytest.approx(ordinary_joint_moment(s, (a,)) * ordinary_joint_moment(s, (b,)), rel=1e-13)


@given(filling=st.integers(0, 6), pattern=st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_mott_moments_are_deterministic_powers(filling, pattern):
    s = MottInsulator(filling, 4)
    assert ordinary_joint_moment(s, pattern) == filling ** sum(pattern)
