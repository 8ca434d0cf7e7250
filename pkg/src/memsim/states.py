"""Two-qubit state constructors and entanglement/mixedness measures.

Basis order is fixed to |HH>, |HV>, |VH>, |VV> throughout, so the standard
maximally-entangled-mixed-state (MEMS) matrices transcribe verbatim:

    subclass I  (2/3 <= r <= 1):  diag(r/2, 1-r, 0, r/2), HH-VV corners r/2
    subclass II (0 <= r <= 2/3):  diag(1/3, 1/3, 0, 1/3), HH-VV corners r/2

with r the concurrence of the state in both subclasses.
"""

import json

import numpy as np

from . import qmat
from .errors import InvalidState, OutOfRange

BASIS_LABELS = ("HH", "HV", "VH", "VV")
MEMS_BOUNDARY_R = 2.0 / 3.0

# Spin-flip operator for the concurrence: sigma_y on each qubit.
SPIN_FLIP = qmat.kron(qmat.SIGMA_Y, qmat.SIGMA_Y).real  # entries are -1/0/+1

BELL_LABELS = ("hh+vv", "hh-vv", "hv+vh", "hv-vh")
_SQ2 = 1.0 / np.sqrt(2.0)
_BELL_KETS = {
    "hh+vv": np.array([_SQ2, 0.0, 0.0, _SQ2], dtype=complex),
    "hh-vv": np.array([_SQ2, 0.0, 0.0, -_SQ2], dtype=complex),
    "hv+vh": np.array([0.0, _SQ2, _SQ2, 0.0], dtype=complex),
    "hv-vh": np.array([0.0, _SQ2, -_SQ2, 0.0], dtype=complex),
}


def bell_state(label: str = "hh+vv") -> np.ndarray:
    """Bell-state ket by structural label, e.g. "hv+vh" = (|HV>+|VH>)/sqrt(2)."""
    try:
        return _BELL_KETS[label].copy()
    except KeyError:
        raise OutOfRange(f"unknown Bell label {label!r}; expected one of {BELL_LABELS}")


def ket_dm(psi) -> np.ndarray:
    """Density matrix |psi><psi| of a (normalized) ket."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho, name: str = "state") -> np.ndarray:
    """Check the density-matrix invariants, naming the one violated.

    Requires: 4x4, finite, Hermitian within 1e-10, unit trace within 1e-10,
    eigenvalues >= -1e-9. Returns the coerced array.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidState(f"{name}: expected shape (4, 4), got {rho.shape}")
    if not np.all(np.isfinite(rho.view(float))):
        raise InvalidState(f"{name}: non-finite entries")
    herm_dev = np.max(np.abs(rho - rho.conj().T))
    if herm_dev > qmat.HERMITIAN_TOL:
        raise InvalidState(f"{name}: not Hermitian (deviation {herm_dev:.3e})")
    tr_dev = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if tr_dev > qmat.HERMITIAN_TOL:
        raise InvalidState(f"{name}: trace differs from 1 by {tr_dev:.3e}")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < qmat.PSD_EIGENVALUE_FLOOR:
        raise InvalidState(f"{name}: negative eigenvalue {w[0]:.3e}")
    return rho


def mems(r: float, subclass: str | None = None) -> np.ndarray:
    """Maximally entangled mixed state with concurrence r.

    subclass "I" covers 2/3 <= r <= 1, subclass "II" covers 0 <= r <= 2/3;
    when omitted it is derived from r (subclass I iff r >= 2/3). The two
    forms coincide at the r = 2/3 boundary.
    """
    if subclass is None:
        subclass = "I" if r >= MEMS_BOUNDARY_R else "II"
    subclass = subclass.upper()
    rho = np.zeros((4, 4), dtype=complex)
    if subclass == "I":
        if not (MEMS_BOUNDARY_R <= r <= 1.0):
            raise OutOfRange(f"subclass I requires 2/3 <= r <= 1, got r={r}")
        rho[0, 0] = rho[3, 3] = r / 2.0
        rho[1, 1] = 1.0 - r
    elif subclass == "II":
        if not (0.0 <= r <= MEMS_BOUNDARY_R):
            raise OutOfRange(f"subclass II requires 0 <= r <= 2/3, got r={r}")
        rho[0, 0] = rho[1, 1] = rho[3, 3] = 1.0 / 3.0
    else:
        raise OutOfRange(f"unknown MEMS subclass {subclass!r}")
    rho[0, 3] = rho[3, 0] = r / 2.0
    return rho


def mems_i(r: float) -> np.ndarray:
    return mems(r, "I")


def mems_ii(r: float) -> np.ndarray:
    return mems(r, "II")


def werner(p: float) -> np.ndarray:
    """Werner state p |phi><phi| + (1-p) I/4 with |phi> = (|HH>+|VV>)/sqrt(2)."""
    if not (0.0 <= p <= 1.0):
        raise OutOfRange(f"werner requires 0 <= p <= 1, got {p}")
    return p * ket_dm(bell_state("hh+vv")) + (1.0 - p) * np.eye(4, dtype=complex) / 4.0


def bell_fidelity_from_mixing(p: float) -> float:
    """Bell-state fidelity F = (1+3p)/4 of werner(p)."""
    return (1.0 + 3.0 * p) / 4.0


def werner_mixing_from_bell_fidelity(f: float) -> float:
    """Mixing probability p = (4F-1)/3 of the Werner state with Bell fidelity F."""
    return (4.0 * f - 1.0) / 3.0


def nonmax_pure(theta: float, phi: float = 0.0) -> np.ndarray:
    """Variable-entanglement ket cos(theta)|HH> + e^{i phi} sin(theta)|VV>."""
    amp = np.zeros(4, dtype=complex)
    amp[0] = np.cos(theta)
    amp[3] = np.exp(1j * phi) * np.sin(theta)
    return amp


def random_density_matrix(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Full-rank-supported random state: G G^dagger / Tr, G complex Ginibre."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def purity(rho) -> float:
    """Tr(rho^2)."""
    rho = np.asarray(rho, dtype=complex)
    return float(np.vdot(rho, rho).real)


def linear_entropy(rho) -> float:
    """S_L = (4/3) (1 - Tr rho^2); 0 for pure, 1 for maximally mixed."""
    return (4.0 / 3.0) * (1.0 - purity(rho))


def spin_flipped(rho) -> np.ndarray:
    """rho_tilde = (sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    rho = np.asarray(rho, dtype=complex)
    return SPIN_FLIP @ rho.conj() @ SPIN_FLIP


# Eigenvalues this far (relatively) below the top of a PSD spectrum are
# genuine zeros contaminated by roundoff; zeroing them before the square
# root keeps rank-deficient states from picking up sqrt(eps)-scale noise.
SPECTRUM_FLOOR_REL = 1e-14


def _sqrt_spectrum(m) -> np.ndarray:
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]
    floor = SPECTRUM_FLOOR_REL * max(float(lam[0]), 0.0)
    return np.sqrt(np.where(lam > floor, lam, 0.0))


def concurrence(rho) -> float:
    """Wootters concurrence max{0, l1 - l2 - l3 - l4}.

    The l_i are, in non-increasing order, the square roots of the
    eigenvalues of rho @ rho_tilde. They are computed through the Hermitian
    equivalent sqrt(rho) rho_tilde sqrt(rho), whose spectrum matches, so
    only Hermitian eigensolves are needed.
    """
    rho = np.asarray(rho, dtype=complex)
    root = qmat.sqrt_psd(rho)
    lam = _sqrt_spectrum(root @ spin_flipped(rho) @ root)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def tangle(rho) -> float:
    """Concurrence squared."""
    c = concurrence(rho)
    return c * c


def fidelity(a, b) -> float:
    """Uhlmann fidelity |Tr sqrt(sqrt(a) b sqrt(a))|^2, symmetric in a, b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    root_a = qmat.sqrt_psd(a)
    tr = np.sum(_sqrt_spectrum(root_a @ b @ root_a))
    return float(min(1.0, tr * tr))


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x), with h(0) = h(1) = 0 by continuity."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def ef_from_concurrence(c: float) -> float:
    """Entanglement of formation from concurrence via Wootters' closed form."""
    c = min(1.0, max(0.0, c))
    return binary_entropy((1.0 + np.sqrt(1.0 - c * c)) / 2.0)


def entanglement_of_formation(rho) -> float:
    return ef_from_concurrence(concurrence(rho))


def bell_overlap(rho, which: str = "hh+vv") -> float:
    """<bell| rho |bell> for the labelled Bell state."""
    ket = bell_state(which)
    return float(np.real(ket.conj() @ np.asarray(rho, dtype=complex) @ ket))


def density_matrix_to_json(rho, extra: dict | None = None) -> str:
    """Serialize to the toolkit JSON format (re/im parts, basis tag).

    `extra` entries (e.g. a metadata block) are merged into the top-level
    object; readers ignore unknown keys.
    """
    rho = np.asarray(rho, dtype=complex)
    doc = {
        "dim": 4,
        "re": [[float(x) for x in row] for row in rho.real],
        "im": [[float(x) for x in row] for row in rho.imag],
        "basis": ",".join(BASIS_LABELS),
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def density_matrix_from_json(text: str) -> np.ndarray:
    """Parse and validate a density matrix from the toolkit JSON format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidState(f"state JSON: not valid JSON ({exc})") from exc
    for key in ("dim", "re", "im", "basis"):
        if key not in doc:
            raise InvalidState(f"state JSON: missing key {key!r}")
    if doc["dim"] != 4:
        raise InvalidState(f"state JSON: dim must be 4, got {doc['dim']}")
    if doc["basis"] != ",".join(BASIS_LABELS):
        raise InvalidState(f"state JSON: unexpected basis {doc['basis']!r}")
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc["im"], dtype=float)
    if re.shape != (4, 4) or im.shape != (4, 4):
        raise InvalidState("state JSON: re/im must be 4x4 arrays")
    return validate_density_matrix(re + 1j * im, name="state JSON")
