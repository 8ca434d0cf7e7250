"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the production code paths they check:
the brute-force concurrence uses a general (non-Hermitian) eigensolve on
rho @ rho_tilde, and the two-copy interference closed form was derived by
hand from the product-state expansion.
"""

import numpy as np
import pytest

from memsim import states


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_states(n: int, seed: int = 0, dim: int = 4):
    gen = np.random.default_rng(seed)
    return [states.random_density_matrix(gen, dim) for _ in range(n)]


def concurrence_bruteforce(rho) -> float:
    """General-eigensolver route: sqrt of |eigenvalues| of rho @ rho_tilde."""
    rho = np.asarray(rho, dtype=complex)
    flip = np.kron(
        np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]])
    )
    rho_tilde = flip @ rho.conj() @ flip
    lam = np.sort(np.sqrt(np.abs(np.linalg.eigvals(rho @ rho_tilde).real)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def pbs_success_closed_form(r: float) -> float:
    """Survival of r|phi><phi| + (1-r)|HV><HV| through the both-PBS scheme."""
    return r * r / 2.0 + (1.0 - r) ** 2


def mems_mixture(r: float) -> np.ndarray:
    """r |phi><phi| + (1-r) |HV><HV| for any r in [0, 1] (MEMS I form)."""
    phi = states.bell_state("hh+vv")
    hv = np.zeros(4, dtype=complex)
    hv[1] = 1.0
    return r * states.ket_dm(phi) + (1.0 - r) * states.ket_dm(hv)
