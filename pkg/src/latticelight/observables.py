"""Light observables of the cavity field scattered by lattice atoms.

The stationary cavity field is ``a1 = C * D`` with ``D = sum_i A_i n_i``. All
observables are moments of ``D`` under the atomic state; the correlators they
need depend only on which site indices coincide, because every supported state
is exchangeable over sites.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import CouplingSet, LatticeGeometry, ModeSpec, couplings, structure_function
from .states import AtomicState, ordinary_joint_moment, pair_covariance, variance


@dataclass(frozen=True)
class CavityParams:
    """Cavity and probe parameters (rates in rad/s)."""

    g0: float = 1.0
    a0: float = 1.0
    delta_0a: float = 100.0
    delta_01: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.delta_0a == 0:
            raise ValueError("probe-atom detuning delta_0a must be nonzero")
        if self.kappa == 0 and self.delta_01 == 0:
            raise ValueError("kappa and delta_01 cannot both vanish")

    @property
    def C(self) -> complex:
        return 1j * self.g0**2 * self.a0 / (self.delta_0a * (1j * self.delta_01 - self.kappa))

    @property
    def abs_C2(self) -> float:
        return abs(self.C) ** 2


@dataclass(frozen=True)
class ObservablesReport:
    amp_D: complex
    classical_intensity: float
    DstarD: float
    R: float
    absD4: float
    varAbsD2: float
    photon_number: float
    photon_variance: float
    D2: complex
    quad_variance: float


def _second_order(s: AtomicState) -> tuple[float, float, float]:
    return s.n, ordinary_joint_moment(s, (2,)), ordinary_joint_moment(s, (1, 1))


def _check_window(c: CouplingSet, s: AtomicState) -> None:
    if c.K > s.M:
        raise ValueError(f"{c.K} coupling coefficients for a lattice of M={s.M} sites")


def expected_D(c: CouplingSet, s: AtomicState) -> complex:
    _check_window(c, s)
    return s.n * c.sumA


def expected_DstarD(c: CouplingSet, s: AtomicState) -> float:
    _check_window(c, s)
    _, n2, nanb = _second_order(s)
    return nanb * abs(c.sumA) ** 2 + (n2 - nanb) * c.sumAbs2


def noise_R(c: CouplingSet, s: AtomicState) -> float:
    _check_window(c, s)
    cov, var = pair_covariance(s), variance(s)
    return cov * abs(c.sumA) ** 2 + (var - cov) * c.sumAbs2


def noise_R_traveling(s: AtomicState, K: int, alpha: float) -> float:
    """Noise quantity for two traveling waves from the phase step ``alpha`` alone."""
    if not 1 <= K <= s.M:
        raise ValueError(f"K must satisfy 1 <= K <= M={s.M}, got {K}")
    cov, var = pair_covariance(s), variance(s)
    return cov * structure_function(K, alpha) + (var - cov) * K


def expected_D2(c: CouplingSet, s: AtomicState) -> complex:
    """Unconjugated ``<D^2>``."""
    _check_window(c, s)
    _, n2, nanb = _second_order(s)
    return nanb * (c.sumA**2 - c.sumA2) + n2 * c.sumA2


# -- four-point correlators ---------------------------------------------------

# <|D|^4> = sum conj(A_i) A_j conj(A_k) A_l <n_i n_j n_k n_l>
_ABS4_CONJ = (True, False, True, False)


@lru_cache(maxsize=None)
def _set_partitions(n: int) -> tuple[tuple[int, ...], ...]:
    """Set partitions of ``n`` positions as restricted growth strings."""
    out = []

    def grow(prefix, top):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            grow(prefix + [v], max(top, v))

    grow([0], 0)
    return tuple(out)


def _blocks(rgs: tuple[int, ...]) -> list[list[int]]:
    blocks: list[list[int]] = [[] for _ in range(max(rgs) + 1)]
    for pos, b in enumerate(rgs):
        blocks[b].append(pos)
    return blocks


def _finer(pi: tuple[int, ...], sigma: tuple[int, ...]) -> bool:
    n = len(pi)
    return all(
        sigma[p] == sigma[q] for p in range(n) for q in range(p + 1, n) if pi[p] == pi[q]
    )


@lru_cache(maxsize=None)
def _mobius_table(n: int) -> tuple[tuple[tuple[int, ...], tuple[tuple[tuple[int, ...], int], ...]], ...]:
    """For each partition ``pi``: the coarser ``sigma`` with the Mobius value mu(pi, sigma)."""
    parts = _set_partitions(n)
    table = []
    for pi in parts:
        entries = []
        for sigma in parts:
            if not _finer(pi, sigma):
                continue
            mu = 1
            for block in _blocks(sigma):
                c = len({pi[p] for p in block})
                mu *= (-1) ** (c - 1) * math.factorial(c - 1)
            entries.append((sigma, mu))
        table.append((pi, tuple(entries)))
    return tuple(table)


def _pattern_of(rgs: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(len(b) for b in _blocks(rgs))


def moment_fast(c: CouplingSet, s: AtomicState, conj: tuple[bool, ...]) -> complex:
    """``E[prod_p B_p]`` with ``B_p = conj(D)`` where ``conj[p]`` else ``D``.

    Sums over index tuples are grouped by their coincidence pattern; the sum over
    tuples with exactly that pattern is recovered from unrestricted power sums by
    Mobius inversion on the partition lattice.
    """
    _check_window(c, s)
    free_cache: dict[tuple[int, ...], complex] = {}

    def free_sum(sigma):
        if sigma not in free_cache:
            prod = 1 + 0j
            for block in _blocks(sigma):
                nc = sum(1 for p in block if conj[p])
                prod *= c.power_sum(nc, len(block) - nc)
            free_cache[sigma] = prod
        return free_cache[sigma]

    total = 0j
    for pi, coarser in _mobius_table(len(conj)):
        exact = sum(mu * free_sum(sigma) for sigma, mu in coarser)
        total += ordinary_joint_moment(s, _pattern_of(pi)) * exact
    return total


def _abs4_reference(c: CouplingSet, s: AtomicState) -> float:
    _check_window(c, s)
    K = c.K
    a = c.coefficients
    i = np.arange(K).reshape(K, 1, 1, 1)
    j = np.arange(K).reshape(1, K, 1, 1)
    k = np.arange(K).reshape(1, 1, K, 1)
    l = np.arange(K).reshape(1, 1, 1, K)
    # restricted growth string of (i, j, k, l), one base-4 digit per position
    r1 = np.where(j == i, 0, 1)
    r2 = np.where(k == i, 0, np.where(k == j, r1, r1 + 1))
    r3 = np.where(l == i, 0, np.where(l == j, r1, np.where(l == k, r2, np.maximum(r1, r2) + 1)))
    code = 16 * r1 + 4 * r2 + r3
    lookup = np.zeros(64)
    for rgs in _set_partitions(4):
        lookup[16 * rgs[1] + 4 * rgs[2] + rgs[3]] = ordinary_joint_moment(s, _pattern_of(rgs))
    corr = lookup[code]
    weights = np.einsum("i,j,k,l->ijkl", a.conj(), a, a.conj(), a)
    return float((weights * corr).sum().real)


def fourth_moment_absD4(c: CouplingSet, s: AtomicState, method: str = "fast") -> float:
    """``<|D|^4>``; ``method`` is ``"fast"`` (power sums) or ``"reference"`` (O(K^4) sum)."""
    if method == "reference":
        return _abs4_reference(c, s)
    if method == "fast":
        return moment_fast(c, s, _ABS4_CONJ).real
    raise ValueError(f"unknown method {method!r}")


def photon_stats(c: CouplingSet, s: AtomicState, p: CavityParams, method: str = "fast") -> tuple[float, float]:
    dd = expected_DstarD(c, s)
    d4 = fourth_moment_absD4(c, s, method)
    c2 = p.abs_C2
    return c2 * dd, c2 * c2 * (d4 - dd * dd) + c2 * dd


def quadrature_variance(c: CouplingSet, s: AtomicState, p: CavityParams, phi: float) -> float:
    """Variance of ``X = (a1 e^{-i phi} + a1^dag e^{i phi}) / 2``, vacuum included."""
    C = p.C
    d = expected_D(c, s)
    squeeze = cmath.exp(-2j * phi) * C * C * (expected_D2(c, s) - d * d)
    return 0.25 + p.abs_C2 * noise_R(c, s) / 2.0 + squeeze.real / 2.0


def incoherent_intensity(s: AtomicState, K: int) -> float:
    """Isotropic intensity under spatially incoherent illumination, ``K <n^2>``."""
    return K * ordinary_joint_moment(s, (2,))


def observe(
    c: CouplingSet,
    s: AtomicState,
    p: CavityParams | None = None,
    phi: float = 0.0,
    method: str = "fast",
) -> ObservablesReport:
    p = p or CavityParams()
    amp = expected_D(c, s)
    dd = expected_DstarD(c, s)
    d4 = fourth_moment_absD4(c, s, method)
    nph, var_ph = photon_stats(c, s, p, method)
    return ObservablesReport(
        amp_D=amp,
        classical_intensity=abs(amp) ** 2,
        DstarD=dd,
        R=noise_R(c, s),
        absD4=d4,
        varAbsD2=d4 - dd * dd,
        photon_number=nph,
        photon_variance=var_ph,
        D2=expected_D2(c, s),
        quad_variance=quadrature_variance(c, s, p, phi),
    )


def transverse_couplings(K: int, M: int) -> CouplingSet:
    """Probe along the normal, cavity along the lattice, atoms half a wavelength apart."""
    geom = LatticeGeometry(M=M, d=0.5, K=K)
    probe = ModeSpec("traveling", 1.0, 0.0)
    detect = ModeSpec("traveling", 1.0, math.pi / 2)
    return couplings(geom, probe, detect)


def preset_transverse(s: AtomicState, p: CavityParams | None = None, K: int | None = None) -> ObservablesReport:
    K = s.M if K is None else K
    return observe(transverse_couplings(K, s.M), s, p)


def self_organized_couplings(K: int, M: int | None = None) -> CouplingSet:
    """Cavity along the lattice with atoms one wavelength apart: every ``A_i = 1``."""
    geom = LatticeGeometry(M=M or K, d=1.0, K=K)
    probe = ModeSpec("traveling", 1.0, 0.0)
    detect = ModeSpec("traveling", 1.0, math.pi / 2)
    return couplings(geom, probe, detect)


def preset_self_organized(p: CavityParams | None, N_K: float) -> float:
    """Superradiant photon number ``|C|^2 N_K^2`` of a one-atom-per-wavelength MI."""
    p = p or CavityParams()
    return p.abs_C2 * N_K**2

