"""Atomic states of the lattice and their occupation-number moments.

Every moment is obtained from joint factorial moments, which have a one-line
closed form for each state:

* Mott insulator, ``n`` atoms per site: ``prod_s n^(m_s)``
* superfluid, ``N`` atoms spread multinomially over ``M`` sites: ``N^(p) / M^p``
* coherent, independent Poisson sites of mean ``n``: ``n^p``

with ``x^(m)`` the falling factorial and ``p`` the total order. Ordinary
moments follow by expanding each ``n^m`` in Stirling numbers of the second kind.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

_STIRLING_PRECOMPUTED = 8


def _stirling_table(order: int) -> tuple[tuple[int, ...], ...]:
    rows = [[1]]
    for n in range(1, order + 1):
        prev = rows[-1] + [0]
        rows.append([0] + [k * prev[k] + prev[k - 1] for k in range(1, n + 1)])
    return tuple(tuple(r) for r in rows)


_STIRLING = _stirling_table(_STIRLING_PRECOMPUTED)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind ``S(n, k)``."""
    if n <= _STIRLING_PRECOMPUTED:
        return _STIRLING[n][k] if 0 <= k <= n else 0
    return _stirling_table(n)[n][k] if 0 <= k <= n else 0


def falling_factorial(x, m: int):
    out = 1
    for j in range(m):
        out *= x - j
    return out


@dataclass(frozen=True)
class MottInsulator:
    filling: int
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.filling < 0 or int(self.filling) != self.filling:
            raise ValueError(f"MI filling must be a nonnegative integer, got {self.filling}")

    @property
    def N(self) -> int:
        return int(self.filling) * self.M

    @property
    def n(self) -> float:
        return float(self.filling)


@dataclass(frozen=True)
class Superfluid:
    N: int
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.N < 0 or int(self.N) != self.N:
            raise ValueError(f"SF atom number must be a nonnegative integer, got {self.N}")

    @property
    def n(self) -> float:
        return self.N / self.M


@dataclass(frozen=True)
class Coherent:
    """Product of per-site coherent states; ``N`` is the mean total atom number."""

    N: float
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not self.N >= 0:
            raise ValueError(f"coherent mean atom number must be >= 0, got {self.N}")

    @property
    def n(self) -> float:
        return self.N / self.M


AtomicState = Union[MottInsulator, Superfluid, Coherent]


def make_state(kind: str, N: float, M: int) -> AtomicState:
    """Build a state from a short name (``mi``, ``sf``, ``coherent``).

    For ``mi`` the atom number must be a multiple of ``M``.
    """
    kind = kind.lower()
    if kind == "mi":
        if N % M:
            raise ValueError(f"MI needs N divisible by M, got N={N}, M={M}")
        return MottInsulator(int(N) // M, M)
    if kind == "sf":
        return Superfluid(int(N), M)
    if kind in ("coherent", "coh"):
        return Coherent(float(N), M)
    raise ValueError(f"unknown state kind {kind!r}")


@dataclass(frozen=True)
class MomentPattern:
    """Multiplicities of an occupation-number product over distinct sites.

    ``(2, 1)`` stands for ``<n_i^2 n_j>`` with ``i != j``.
    """

    multiplicities: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.multiplicities)
        if not m or any(x < 1 for x in m):
            raise ValueError(f"multiplicities must be positive, got {self.multiplicities}")
        # canonical order: the law is exchangeable across sites
        object.__setattr__(self, "multiplicities", tuple(sorted(m, reverse=True)))

    @property
    def order(self) -> int:
        return sum(self.multiplicities)

    @property
    def sites(self) -> int:
        return len(self.multiplicities)


def _as_pattern(pattern) -> MomentPattern:
    return pattern if isinstance(pattern, MomentPattern) else MomentPattern(tuple(pattern))


def mean_filling(state: AtomicState) -> float:
    return state.n


def _exact_filling(state: AtomicState) -> Fraction:
    return Fraction(state.N) / state.M


def _factorial_exact(state: AtomicState, m: tuple[int, ...]) -> Fraction:
    p = sum(m)
    if isinstance(state, MottInsulator):
        return Fraction(math.prod(falling_factorial(state.filling, k) for k in m))
    if isinstance(state, Superfluid):
        return Fraction(falling_factorial(state.N, p), state.M**p)
    if isinstance(state, Coherent):
        return _exact_filling(state) ** p
    raise TypeError(f"unsupported state {state!r}")


@lru_cache(maxsize=4096)
def _ordinary_exact(state: AtomicState, m: tuple[int, ...]) -> Fraction:
    total = Fraction(0)
    for ks in itertools.product(*(range(1, x + 1) for x in m)):
        coeff = math.prod(stirling2(x, k) for x, k in zip(m, ks))
        total += coeff * _factorial_exact(state, ks)
    return total


def joint_factorial_moment(state: AtomicState, pattern) -> float:
    """``E[prod_s n_s^(m_s)]`` over distinct sites, falling-factorial powers."""
    return float(_factorial_exact(state, _as_pattern(pattern).multiplicities))


def ordinary_joint_moment(state: AtomicState, pattern) -> float:
    """``E[prod_s n_s^(m_s)]`` over distinct sites, via the Stirling expansion.

    Evaluated in exact rational arithmetic and rounded once.
    """
    return float(_ordinary_exact(state, _as_pattern(pattern).multiplicities))


@dataclass(frozen=True)
class Table1Report:
    n2: float
    var_n: float
    NK2: float
    var_NK: float
    nanb: float
    cov: float


def table1(state: AtomicState, K: int) -> Table1Report:
    """Second-order statistics of one site, a site pair and a K-site window."""
    if not 1 <= K <= state.M:
        raise ValueError(f"K must satisfy 1 <= K <= M={state.M}, got {K}")
    n = _exact_filling(state)
    n2 = _ordinary_exact(state, (2,))
    nanb = _ordinary_exact(state, (1, 1))
    NK2 = K * n2 + K * (K - 1) * nanb
    NK = n * K
    return Table1Report(
        n2=float(n2),
        var_n=float(n2 - n * n),
        NK2=float(NK2),
        var_NK=float(NK2 - NK * NK),
        nanb=float(nanb),
        cov=float(nanb - n * n),
    )


def variance(state: AtomicState) -> float:
    return float(_ordinary_exact(state, (2,)) - _exact_filling(state) ** 2)


def pair_covariance(state: AtomicState) -> float:
    return float(_ordinary_exact(state, (1, 1)) - _exact_filling(state) ** 2)
