"""Ground-truth moments of ``D = sum_i A_i n_i`` by direct averaging.

``D`` is diagonal in the occupation-number basis, so its moments under any of
the supported states are classical averages over occupation configurations:

* superfluid: multinomial weights ``N! / prod(n_i!) / M^N`` over all
  compositions of ``N`` into ``M`` parts,
* Mott insulator: a point mass on ``(n, ..., n)``,
* coherent: independent Poisson sites, handled per site (no joint truncation).

None of this shares code with the closed forms in :mod:`latticelight.observables`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.special import gammaln

from .geometry import CouplingSet
from .states import AtomicState, Coherent, MottInsulator, Superfluid, Table1Report

DEFAULT_CAP = 10**7
BLOCK = 1 << 15
POISSON_TAIL = 1e-12

OccupationConfig = tuple[int, ...]


class CapExceeded(RuntimeError):
    """Raised when exact enumeration would visit more configurations than allowed."""


@dataclass(frozen=True)
class OracleReport:
    E_D: complex
    E_DstarD: float
    E_absD4: float
    E_D2: complex
    stderr_D: Optional[float] = None
    stderr_DstarD: Optional[float] = None
    stderr_absD4: Optional[float] = None
    stderr_D2: Optional[float] = None
    config_count: Optional[int] = None
    sample_count: Optional[int] = None

    @property
    def R(self) -> float:
        return self.E_DstarD - abs(self.E_D) ** 2

    @property
    def varAbsD2(self) -> float:
        return self.E_absD4 - self.E_DstarD**2


# -- configurations -----------------------------------------------------------


def composition_count(N: int, M: int) -> int:
    return math.comb(N + M - 1, M - 1)


def compositions(N: int, M: int) -> Iterator[OccupationConfig]:
    """All ``M``-part compositions of ``N`` in colexicographic order, streamed."""
    occ = [0] * M
    occ[0] = N
    while True:
        yield tuple(occ)
        # first nonzero part that can still move right
        i = next((j for j in range(M - 1) if occ[j] > 0), None)
        if i is None:
            return
        t = occ[i] - 1
        occ[i] = 0
        occ[i + 1] += 1
        occ[0] = t


def _blocks_of(configs: Iterator[OccupationConfig], size: int) -> Iterator[np.ndarray]:
    buf: list[OccupationConfig] = []
    for cfg in configs:
        buf.append(cfg)
        if len(buf) == size:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)


def _sf_weights(N: int, M: int, occ: np.ndarray) -> np.ndarray:
    if N <= 20:
        fact = np.array([math.factorial(k) for k in range(N + 1)], dtype=float)
        return fact[N] / np.prod(fact[occ], axis=1) / float(M) ** N
    logw = gammaln(N + 1) - gammaln(occ + 1).sum(axis=1) - N * math.log(M)
    return np.exp(logw)


def _poisson_pmf(lam: float, k) -> np.ndarray:
    k = np.asarray(k)
    if lam == 0:
        return (k == 0).astype(float)
    return np.exp(k * math.log(lam) - lam - gammaln(k + 1))


def config_weight(state: AtomicState, cfg: Sequence[int]) -> float:
    """Probability of the occupation configuration ``cfg`` (one entry per site)."""
    occ = np.asarray(cfg, dtype=np.int64)
    if occ.shape != (state.M,) or (occ < 0).any():
        raise ValueError(f"configuration must hold {state.M} nonnegative occupations")
    if isinstance(state, MottInsulator):
        return float((occ == state.filling).all())
    if isinstance(state, Superfluid):
        if occ.sum() != state.N:
            return 0.0
        return float(_sf_weights(state.N, state.M, occ[None, :])[0])
    if isinstance(state, Coherent):
        return float(np.prod(_poisson_pmf(state.n, occ)))
    raise TypeError(f"unsupported state {state!r}")


def _poisson_raw_moments(lam: float, order: int) -> tuple[np.ndarray, float]:
    """``E[n^p]`` for ``p = 0..order`` by a truncated series, and the dropped tail mass."""
    if lam == 0:
        m = np.zeros(order + 1)
        m[0] = 1.0
        return m, 0.0
    kmax = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 40.0))
    k = np.arange(kmax + 1)
    pmf = _poisson_pmf(lam, k)
    tail = max(0.0, 1.0 - math.fsum(pmf))
    if tail > POISSON_TAIL:
        raise ArithmeticError(f"Poisson truncation tail {tail:.3g} exceeds {POISSON_TAIL}")
    kf = k.astype(float)
    moments = np.array([math.fsum(pmf * kf**p) for p in range(order + 1)])
    return moments, tail


# -- exact expectations -------------------------------------------------------


def _window(c: CouplingSet) -> slice:
    return slice(c.first_site - 1, c.first_site - 1 + c.K)


def _check_fit(state: AtomicState, c: CouplingSet) -> None:
    if c.first_site < 1 or c.first_site - 1 + c.K > state.M:
        raise ValueError(
            f"couplings for sites {c.first_site}..{c.first_site + c.K - 1} exceed M={state.M}"
        )


def _coherent_moments(state: Coherent, a: np.ndarray) -> tuple[complex, float, float, complex]:
    # E[D^p conj(D)^q] = p! q! [s^p t^q] prod_i E[exp(s A_i n + t conj(A_i) n)]
    raw, _ = _poisson_raw_moments(state.n, 4)
    egf = np.zeros((3, 3), dtype=complex)
    egf[0, 0] = 1.0
    for ai in a:
        site = np.array(
            [
                [ai**p * np.conj(ai) ** q * raw[p + q] / (math.factorial(p) * math.factorial(q)) for q in range(3)]
                for p in range(3)
            ]
        )
        nxt = np.zeros_like(egf)
        for p in range(3):
            for q in range(3):
                nxt[p, q] = sum(
                    egf[p - u, q - v] * site[u, v] for u in range(p + 1) for v in range(q + 1)
                )
        egf = nxt
    E_D = complex(egf[1, 0])
    E_DstarD = float(egf[1, 1].real)
    E_absD4 = float(4.0 * egf[2, 2].real)
    E_D2 = complex(2.0 * egf[2, 0])
    return E_D, E_DstarD, E_absD4, E_D2


def exact_expectations(state: AtomicState, c: CouplingSet, cap: int = DEFAULT_CAP) -> OracleReport:
    """Exact ``E[D]``, ``E[|D|^2]``, ``E[|D|^4]``, ``E[D^2]``.

    Raises :class:`CapExceeded` if a superfluid needs more than ``cap`` compositions.
    """
    _check_fit(state, c)
    a = c.coefficients
    if isinstance(state, MottInsulator):
        d = complex(state.filling * a.sum())
        d2 = abs(d) ** 2
        return OracleReport(d, d2, d2 * d2, d * d, config_count=1)
    if isinstance(state, Coherent):
        E_D, E_DD, E_D4, E_D2 = _coherent_moments(state, a)
        return OracleReport(E_D, E_DD, E_D4, E_D2, config_count=None)
    if not isinstance(state, Superfluid):
        raise TypeError(f"unsupported state {state!r}")

    count = composition_count(state.N, state.M)
    if count > cap:
        raise CapExceeded(
            f"{count} compositions of N={state.N} into M={state.M} exceed the cap of {cap}"
        )
    win = _window(c)
    sums = [0j, 0.0, 0.0, 0j]
    for occ in _blocks_of(compositions(state.N, state.M), BLOCK):
        w = _sf_weights(state.N, state.M, occ)
        D = occ[:, win] @ a
        abs2 = D.real**2 + D.imag**2
        sums[0] += complex(np.dot(w, D))
        sums[1] += float(np.dot(w, abs2))
        sums[2] += float(np.dot(w, abs2 * abs2))
        sums[3] += complex(np.dot(w, D * D))
    return OracleReport(sums[0], sums[1], sums[2], sums[3], config_count=count)


def exact_table1(state: AtomicState, K: int, cap: int = DEFAULT_CAP) -> Table1Report:
    """Second-order site statistics by enumeration (``nanb``/``cov`` are NaN when ``M < 2``)."""
    if not 1 <= K <= state.M:
        raise ValueError(f"K must satisfy 1 <= K <= M={state.M}, got {K}")
    M = state.M
    if isinstance(state, Coherent):
        raw, _ = _poisson_raw_moments(state.n, 2)
        mean, n2 = raw[1], raw[2]
        nanb = mean * mean if M >= 2 else math.nan
        NK2 = K * n2 + K * (K - 1) * mean * mean
        NK = K * mean
    else:
        if isinstance(state, MottInsulator):
            configs: Iterator[OccupationConfig] = iter([(state.filling,) * M])
            count = 1
        elif isinstance(state, Superfluid):
            count = composition_count(state.N, M)
            if count > cap:
                raise CapExceeded(f"{count} compositions exceed the cap of {cap}")
            configs = compositions(state.N, M)
        else:
            raise TypeError(f"unsupported state {state!r}")
        acc = np.zeros(5)
        for occ in _blocks_of(configs, BLOCK):
            if isinstance(state, Superfluid):
                w = _sf_weights(state.N, M, occ)
            else:
                w = np.ones(len(occ))
            nk = occ[:, :K].sum(axis=1).astype(float)
            n1 = occ[:, 0].astype(float)
            n12 = (occ[:, 0] * occ[:, 1]).astype(float) if M >= 2 else np.zeros(len(occ))
            acc += [np.dot(w, n1), np.dot(w, n1 * n1), np.dot(w, n12), np.dot(w, nk), np.dot(w, nk * nk)]
        mean, n2, nanb, NK, NK2 = acc
        if M < 2:
            nanb = math.nan
    return Table1Report(
        n2=float(n2),
        var_n=float(n2 - mean * mean),
        NK2=float(NK2),
        var_NK=float(NK2 - NK * NK),
        nanb=float(nanb),
        cov=float(nanb - mean * mean),
    )


# -- Monte Carlo --------------------------------------------------------------


@dataclass
class _Running:
    n: int
    mean: np.ndarray  # complex, one entry per moment
    m2: np.ndarray  # sum of |x - mean|^2

    def merge(self, other: "_Running") -> "_Running":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + (delta.real**2 + delta.imag**2) * (self.n * other.n / n)
        return _Running(n, mean, m2)


def _sample_block(state: AtomicState, a: np.ndarray, win: slice, size: int, seq: np.random.SeedSequence) -> _Running:
    rng = np.random.default_rng(seq)
    if isinstance(state, Superfluid):
        occ = rng.multinomial(state.N, np.full(state.M, 1.0 / state.M), size=size)[:, win]
    elif isinstance(state, Coherent):
        occ = rng.poisson(state.n, size=(size, a.size))
    else:
        raise TypeError(f"unsupported state {state!r}")
    D = occ @ a
    abs2 = D.real**2 + D.imag**2
    x = np.stack([D, abs2.astype(complex), (abs2 * abs2).astype(complex), D * D])
    mean = x.mean(axis=1)
    dev = x - mean[:, None]
    m2 = (dev.real**2 + dev.imag**2).sum(axis=1)
    return _Running(size, mean, m2)


def mc_expectations(
    state: AtomicState,
    c: CouplingSet,
    samples: int,
    seed: int,
    workers: int = 1,
    block: int = BLOCK,
) -> OracleReport:
    """Sample means and standard errors of the ``D`` moments.

    Samples are drawn in fixed-size blocks, each with its own stream spawned from
    ``seed``; block results are merged in block order, so the report does not
    depend on ``workers``.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    _check_fit(state, c)
    a = c.coefficients
    if isinstance(state, MottInsulator):
        d = complex(state.filling * a.sum())
        d2 = abs(d) ** 2
        return OracleReport(d, d2, d2 * d2, d * d, 0.0, 0.0, 0.0, 0.0, sample_count=samples)

    sizes = [block] * (samples // block) + ([samples % block] if samples % block else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    win = _window(c)

    def run(idx: int) -> _Running:
        return _sample_block(state, a, win, sizes[idx], seqs[idx])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]

    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    if samples > 1:
        stderr = np.sqrt(total.m2 / (samples - 1) / samples)
    else:
        stderr = np.full(4, math.inf)
    return OracleReport(
        E_D=complex(total.mean[0]),
        E_DstarD=float(total.mean[1].real),
        E_absD4=float(total.mean[2].real),
        E_D2=complex(total.mean[3]),
        stderr_D=float(stderr[0]),
        stderr_DstarD=float(stderr[1]),
        stderr_absD4=float(stderr[2]),
        stderr_D2=float(stderr[3]),
        sample_count=samples,
    )
