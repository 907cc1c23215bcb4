import numpy as np
import pytest
from hypothesis import strategies as st

from latticelight import Coherent, CouplingSet, MottInsulator, Superfluid


def rel(a, b, floor=1e-12):
    """Relative deviation with an absolute floor for values that are zero on both sides."""
    denom = max(abs(a), abs(b))
    if denom < floor:
        return abs(a - b)
    return abs(a - b) / denom


def all_states(N, M):
    """SF and coherent always, MI when N is a multiple of M."""
    out = [Superfluid(N, M), Coherent(float(N), M)]
    if N % M == 0:
        out.append(MottInsulator(N // M, M))
    return out


def random_couplings(rng, K, first_site=1):
    return CouplingSet(rng.normal(size=K) + 1j * rng.normal(size=K), first_site=first_site)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def states(draw, max_N=8, max_M=5):
    M = draw(st.integers(1, max_M))
    kind = draw(st.sampled_from(["mi", "sf", "coherent"]))
    if kind == "mi":
        return MottInsulator(draw(st.integers(0, max(1, max_N // M))), M)
    if kind == "sf":
        return Superfluid(draw(st.integers(0, max_N)), M)
    return Coherent(draw(st.floats(0, max_N, allow_nan=False)), M)


@st.composite
def coupling_sets(draw, max_K=6):
    K = draw(st.integers(1, max_K))
    return draw(_couplings_of(K))


@st.composite
def state_and_couplings(draw, max_N=8, max_M=5):
    """A state and a coupling set whose window fits in its lattice."""
    s = draw(states(max_N, max_M))
    K = draw(st.integers(1, s.M))
    return s, draw(_couplings_of(K))


@st.composite
def _couplings_of(draw, K):
    re = draw(st.lists(st.floats(-2, 2), min_size=K, max_size=K))
    im = draw(st.lists(st.floats(-2, 2), min_size=K, max_size=K))
    return CouplingSet(np.array(re) + 1j * np.array(im))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
