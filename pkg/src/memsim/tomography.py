"""Simulated polarization tomography with maximum-likelihood reconstruction.

Coincidence counting is modeled at the Born-rule level: each analyzer
setting is a product projector, the expected count is exposure times the
projection probability, and shot noise is Poissonian. Reconstruction
parameterizes the state as T T^dagger / Tr(T T^dagger) with T complex lower
triangular (16 real parameters), so the estimate is physical by
construction, and minimizes the Poisson negative log-likelihood with a
monotone backtracking gradient descent.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InsufficientSettings, OutOfRange

_SQ2 = 1.0 / np.sqrt(2.0)
ANALYZER_KETS = {
    "H": np.array([1.0, 0.0], dtype=complex),
    "V": np.array([0.0, 1.0], dtype=complex),
    "D": np.array([_SQ2, _SQ2], dtype=complex),
    "A": np.array([_SQ2, -_SQ2], dtype=complex),
    "R": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "L": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}

NLL_GUARD = 1e-12


def _product_set(letters) -> list[tuple[str, np.ndarray]]:
    out = []
    for a in letters:
        for b in letters:
            out.append((a + b, np.kron(ANALYZER_KETS[a], ANALYZER_KETS[b])))
    return out


def standard_set() -> list[tuple[str, np.ndarray]]:
    """16 product settings over {H, V, D, R} per arm."""
    return _product_set("HVDR")


def extended_set() -> list[tuple[str, np.ndarray]]:
    """36 product settings over {H, V, D, A, R, L} per arm (overcomplete)."""
    return _product_set("HVDARL")


def projector_set(kind: str = "36") -> list[tuple[str, np.ndarray]]:
    if str(kind) == "16":
        return standard_set()
    if str(kind) == "36":
        return extended_set()
    raise OutOfRange(f"unknown projector set {kind!r} (expected '16' or '36')")


class CountRecord(NamedTuple):
    label: str
    counts: int
    exposure: float


@dataclass
class MLSettings:
    max_iterations: int = 5000
    gradient_tolerance: float = 1e-8
    seed_strategy: str = "linear_inversion"  # or "maximally_mixed"

    def __post_init__(self):
        if self.max_iterations <= 0 or self.gradient_tolerance <= 0:
            raise OutOfRange("limits must be positive")
        if self.seed_strategy not in ("linear_inversion", "maximally_mixed"):
            raise OutOfRange(f"unknown seed strategy {self.seed_strategy!r}")


@dataclass
class MLReport:
    iterations: int
    final_nll: float
    converged: bool
    gradient_norm: float
    nll_history: list = None


def simulate_counts(rho, proj_set, exposure: float, rng_seed: int = 0, noise: str = "poisson"):
    """Coincidence counts for every setting; deterministic for a fixed seed."""
    if exposure <= 0:
        raise OutOfRange("exposure must be positive")
    if noise not in ("poisson", "none"):
        raise OutOfRange(f"unknown noise model {noise!r}")
    rho = np.asarray(rho, dtype=complex)
    rng = np.random.default_rng(rng_seed)
    records = []
    for label, ket in proj_set:
        p = float(np.real(ket.conj() @ rho @ ket))
        mean = exposure * max(0.0, p)
        n = int(rng.poisson(mean)) if noise == "poisson" else int(round(mean))
        records.append(CountRecord(label, n, float(exposure)))
    return records


# Lower-triangular parameter layout: 4 real diagonals then (re, im) pairs.
_TRIL_OFF = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]


def _t_from_params(t: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[np.diag_indices(4)] = t[:4]
    for k, (i, j) in enumerate(_TRIL_OFF):
        m[i, j] = t[4 + 2 * k] + 1j * t[5 + 2 * k]
    return m


def _params_from_t(m: np.ndarray) -> np.ndarray:
    t = np.zeros(16)
    t[:4] = np.real(np.diag(m))
    for k, (i, j) in enumerate(_TRIL_OFF):
        t[4 + 2 * k] = m[i, j].real
        t[5 + 2 * k] = m[i, j].imag
    return t


def _rho_from_params(t: np.ndarray):
    m = _t_from_params(t)
    sigma = m @ m.conj().T
    s = float(np.trace(sigma).real)
    if s <= 0.0:
        # all-zero parameters; fall back to the maximally mixed point
        return np.eye(4, dtype=complex) / 4.0, m, 1.0
    return sigma / s, m, s


def _hermitian_basis():
    basis = []
    for i in range(4):
        b = np.zeros((4, 4), dtype=complex)
        b[i, i] = 1.0
        basis.append(b)
    for i in range(4):
        for j in range(i + 1, 4):
            b = np.zeros((4, 4), dtype=complex)
            b[i, j] = b[j, i] = 1.0
            basis.append(b)
            b = np.zeros((4, 4), dtype=complex)
            b[i, j] = -1j
            b[j, i] = 1j
            basis.append(b)
    return basis


def _linear_inversion(projs, freqs) -> np.ndarray:
    basis = _hermitian_basis()
    a = np.array([[np.real(np.trace(p @ b)) for b in basis] for p in projs])
    x, *_ = np.linalg.lstsq(a, freqs, rcond=None)
    rho = sum(c * b for c, b in zip(x, basis))
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0.0:
        return np.eye(4, dtype=complex) / 4.0
    rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real


def ml_reconstruct(records, proj_set, cfg: MLSettings | None = None):
    """Maximum-likelihood state estimate from count records.

    Records are matched to projectors by label and sorted canonically, so
    their order cannot affect the result. Returns (rho, MLReport); a hit
    iteration cap is reported via `converged`, never raised.
    """
    cfg = cfg or MLSettings()
    kets = dict(proj_set)
    records = sorted(records, key=lambda r: r.label)
    try:
        projs = np.stack([np.outer(kets[r.label], kets[r.label].conj()) for r in records])
    except KeyError as exc:
        raise InsufficientSettings(f"record label {exc} not in the projector set")
    vecs = projs.reshape(len(records), 16)
    if np.linalg.matrix_rank(np.concatenate([vecs.real, vecs.imag], axis=1)) < 16:
        raise InsufficientSettings(
            f"{len(records)} settings span rank "
            f"{np.linalg.matrix_rank(np.concatenate([vecs.real, vecs.imag], axis=1))} < 16"
        )
    counts = np.array([float(r.counts) for r in records])
    expo = np.array([float(r.exposure) for r in records])

    def probs(rho):
        return np.real(np.einsum("kij,ji->k", projs, rho))

    def nll_of(rho):
        p = np.clip(probs(rho), 0.0, None)
        mu = expo * p
        return float(np.sum(mu - counts * np.log(mu + NLL_GUARD)))

    if cfg.seed_strategy == "linear_inversion":
        seed_rho = _linear_inversion(projs, counts / expo)
    else:
        seed_rho = np.eye(4, dtype=complex) / 4.0
    t0 = np.linalg.cholesky(seed_rho + 1e-9 * np.eye(4))
    params = _params_from_t(t0)

    def nll_and_grad(t):
        rho, tm, s = _rho_from_params(t)
        p = np.clip(probs(rho), 0.0, None)
        mu = expo * p
        nll = float(np.sum(mu - counts * np.log(mu + NLL_GUARD)))
        w = expo - counts * expo / (mu + NLL_GUARD)
        g_rho = np.einsum("k,kij->ij", w, projs)
        h = (g_rho - np.trace(g_rho @ rho).real * np.eye(4)) / s
        g_t = 2.0 * (h @ tm)
        grad = np.zeros(16)
        grad[:4] = np.real(np.diag(g_t))
        for k, (i, j) in enumerate(_TRIL_OFF):
            grad[4 + 2 * k] = g_t[i, j].real
            grad[5 + 2 * k] = g_t[i, j].imag
        return nll, grad

    nll, grad = nll_and_grad(params)
    history = [nll]
    step = 1e-3 / (np.max(np.abs(grad)) + 1e-30)
    iterations = 0
    converged = bool(np.max(np.abs(grad)) < cfg.gradient_tolerance)
    while iterations < cfg.max_iterations and not converged:
        direction = -grad
        slope = float(direction @ grad)
        trial = step * 2.0
        accepted = False
        for _ in range(60):
            cand = params + trial * direction
            cand_nll, cand_grad = nll_and_grad(cand)
            if cand_nll <= nll + 1e-4 * trial * slope:
                params, nll, grad, step = cand, cand_nll, cand_grad, trial
                accepted = True
                break
            trial *= 0.5
        iterations += 1
        history.append(nll)
        if not accepted:
            break  # line search exhausted: at numerical optimum
        converged = bool(np.max(np.abs(grad)) < cfg.gradient_tolerance)

    rho, _, _ = _rho_from_params(params)
    report = MLReport(
        iterations=iterations,
        final_nll=nll,
        converged=converged,
        gradient_norm=float(np.max(np.abs(grad))),
        nll_history=history,
    )
    return rho, report


def counts_csv(records) -> str:
    from . import emit

    return emit.csv_text(
        ("label", "counts", "exposure"),
        [(r.label, r.counts, emit.sig6(r.exposure)) for r in records],
    )


def parse_counts_csv(text: str):
    import csv as _csv
    import io as _io

    reader = _csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if header != ["label", "counts", "exposure"]:
        raise OutOfRange(f"counts CSV header {header} != ['label','counts','exposure']")
    records = []
    for row in reader:
        if not row:
            continue
        records.append(CountRecord(row[0], int(row[1]), float(row[2])))
    return records
