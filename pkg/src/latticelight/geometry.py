"""Lattice and cavity-mode geometry.

Sites of a 1D lattice sit at ``x_m = m * d`` for ``m = 1..M``. A probe mode and
a detection mode are each either a traveling wave, ``u(x_m) = exp(i m k_x d)``,
or a standing wave, ``u(x_m) = cos(m k_x d)``, with ``k_x = (2 pi / lambda) sin(theta)``.
The scattered field couples to site ``m`` through ``A_m = conj(u_1(x_m)) u_0(x_m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TRAVELING = "traveling"
STANDING = "standing"

# |sin(alpha/2)| below this is treated as a diffraction maximum
_SINGULAR_EPS = 1e-9


class ModeKind(str, Enum):
    TRAVELING = TRAVELING
    STANDING = STANDING


@dataclass(frozen=True)
class ModeSpec:
    """A probe or detection mode.

    ``wavelength`` shares its length unit with the lattice period; ``angle`` is
    measured from the lattice normal, in radians.
    """

    kind: ModeKind
    wavelength: float
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        if not self.wavelength > 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if not -math.pi <= self.angle <= math.pi:
            raise ValueError(f"angle must lie in [-pi, pi], got {self.angle}")

    @property
    def kx(self) -> float:
        return 2.0 * math.pi / self.wavelength * math.sin(self.angle)


@dataclass(frozen=True)
class LatticeGeometry:
    """``M`` sites of period ``d``; ``K`` consecutive sites starting at ``j0`` are lit."""

    M: int
    d: float
    K: int
    j0: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if not 1 <= self.K <= self.M:
            raise ValueError(f"K must satisfy 1 <= K <= M={self.M}, got {self.K}")
        if self.j0 < 1 or self.j0 + self.K - 1 > self.M:
            raise ValueError(
                f"window j0={self.j0}, K={self.K} does not fit in M={self.M} sites"
            )

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.j0, self.j0 + self.K)


@dataclass(frozen=True)
class CouplingSet:
    """Per-site coupling coefficients of the illuminated window and their sums.

    ``first_site`` records which lattice site the first coefficient belongs to
    (1-based); closed-form observables ignore it, the enumeration oracle uses it.
    """

    coefficients: np.ndarray
    first_site: int = 1
    sumA: complex = field(init=False)
    sumAbs2: float = field(init=False)
    sumA2: complex = field(init=False)
    sumConjA2: complex = field(init=False)
    sumAAbs2: complex = field(init=False)
    sumAbs4: float = field(init=False)

    def __post_init__(self):
        a = np.array(self.coefficients, dtype=complex).ravel()
        if a.size == 0:
            raise ValueError("a coupling set needs at least one coefficient")
        a.setflags(write=False)
        abs2 = a.real**2 + a.imag**2
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "sumA", complex(a.sum()))
        object.__setattr__(self, "sumAbs2", float(abs2.sum()))
        object.__setattr__(self, "sumA2", complex((a * a).sum()))
        object.__setattr__(self, "sumConjA2", complex((a.conj() * a.conj()).sum()))
        object.__setattr__(self, "sumAAbs2", complex((a * abs2).sum()))
        object.__setattr__(self, "sumAbs4", float((abs2 * abs2).sum()))

    @property
    def K(self) -> int:
        return int(self.coefficients.size)

    def power_sum(self, n_conj: int, n_plain: int) -> complex:
        """``sum_i conj(A_i)**n_conj * A_i**n_plain``, from the cached sums when possible."""
        key = (n_conj, n_plain)
        cached = {
            (0, 0): complex(self.K),
            (0, 1): self.sumA,
            (1, 0): self.sumA.conjugate(),
            (1, 1): complex(self.sumAbs2),
            (0, 2): self.sumA2,
            (2, 0): self.sumConjA2,
            (1, 2): self.sumAAbs2,
            (2, 1): self.sumAAbs2.conjugate(),
            (2, 2): complex(self.sumAbs4),
        }
        if key in cached:
            return cached[key]
        a = self.coefficients
        return complex((a.conj() ** n_conj * a**n_plain).sum())


def mode_value(mode: ModeSpec, m, d: float):
    """Mode function at site(s) ``m`` of a lattice with period ``d``."""
    phase = np.asarray(m) * mode.kx * d
    if mode.kind is ModeKind.TRAVELING:
        out = np.exp(1j * phase)
    else:
        out = np.cos(phase).astype(complex)
    return complex(out) if out.ndim == 0 else out


def couplings(geom: LatticeGeometry, probe: ModeSpec, detect: ModeSpec) -> CouplingSet:
    sites = geom.sites
    a = np.conj(mode_value(detect, sites, geom.d)) * mode_value(probe, sites, geom.d)
    return CouplingSet(a, first_site=geom.j0)


def structure_function(K: int, alpha: float) -> float:
    """K-slit interference factor ``sin^2(K a/2) / sin^2(a/2)``, equal to K^2 at a = 2 pi l."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    s = math.sin(alpha / 2.0)
    if abs(s) < _SINGULAR_EPS:
        # near the maximum: sin(Kx)/sin(x) = K (1 - (K^2-1) x^2 / 6 + ...)
        x = math.remainder(alpha, 2.0 * math.pi) / 2.0
        if x == 0.0:
            return float(K * K)
        ratio = K * (1.0 - (K * K - 1.0) * x * x / 6.0)
        return min(ratio * ratio, float(K * K))
    return math.sin(K * alpha / 2.0) ** 2 / (s * s)


def alpha_minus(probe: ModeSpec, detect: ModeSpec, d: float) -> float:
    """Phase step between neighbouring sites for two traveling waves."""
    if probe.kind is not ModeKind.TRAVELING or detect.kind is not ModeKind.TRAVELING:
        raise ValueError("alpha_minus is defined for two traveling-wave modes only")
    return probe.kx * d - detect.kx * d
