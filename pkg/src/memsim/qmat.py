"""Dense complex matrix kernel for two-qubit (4x4) and two-copy (16x16) work.

All operations take and return plain complex numpy arrays. Eigensolves are
restricted to Hermitian inputs; the one place a non-Hermitian spectrum would
be needed (the concurrence) is routed through a Hermitian formulation in
:mod:`memsim.states`.
"""

import numpy as np

from .errors import CapacityError, NoConvergence, NotHermitian, NotPSD

# Largest matrix dimension the toolkit works with (two copies of two qubits).
MAX_DIM = 16

# Shared numerical tolerances.
HERMITIAN_TOL = 1e-10
EIGEN_RECONSTRUCTION_TOL = 1e-9
SQRT_RESIDUAL_TOL = 1e-8
PSD_EIGENVALUE_FLOOR = -1e-9

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


def as_cmatrix(a) -> np.ndarray:
    """Coerce to a square complex128 array and check entries are finite."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix has non-finite entries")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker product, capped at MAX_DIM to catch runaway compositions."""
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    out_dim = a.shape[0] * b.shape[0]
    if out_dim > MAX_DIM:
        raise CapacityError(f"kron result dimension {out_dim} exceeds {MAX_DIM}")
    return np.kron(a, b)


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a, dtype=complex).conj().T


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def hermitian_eigen(a):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted
    non-increasing and eigenvector columns ordered to match, so that
    a = V @ diag(w) @ V^dagger. No ordering is guaranteed among
    degenerate eigenvalues.
    """
    a = as_cmatrix(a)
    if not is_hermitian(a):
        raise NotHermitian(
            f"max |a - a^dagger| = {np.max(np.abs(a - a.conj().T)):.3e} "
            f"exceeds {HERMITIAN_TOL}"
        )
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def sqrt_psd(a) -> np.ndarray:
    """Principal square root of a positive-semidefinite Hermitian matrix.

    Eigenvalues in [PSD_EIGENVALUE_FLOOR, 0) are clamped to zero; anything
    below the floor raises NotPSD.
    """
    w, v = hermitian_eigen(a)
    if w[-1] < PSD_EIGENVALUE_FLOOR:
        raise NotPSD(f"smallest eigenvalue {w[-1]:.3e} below {PSD_EIGENVALUE_FLOOR}")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ v.conj().T
    # symmetrize away the last bits of roundoff
    return 0.5 * (root + root.conj().T)


def haar_random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary via QR of a Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
