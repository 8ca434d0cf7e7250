"""Creation pipeline: pump-angle pure states, waveplates, and decoherers.

The decoherer model: a thick birefringent element in arm i delays V-polarized
photons by delay_arm_i (in units of wavelength) relative to H. Tracing over
arrival times multiplies each density-matrix coherence by the envelope
gamma(D1 - D2), where D_i is the per-arm delay difference between the bra and
ket polarizations. Equal-delay arms therefore preserve the HH-VV coherence
exactly while erasing every other one; unequal arms also attenuate HH-VV.
The pump coherence length is treated as infinite, so only the difference
coordinate enters.
"""

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import qmat, states
from .errors import Infeasible, NotUnitary, OutOfRange, OutputNotPSD

UNITARY_TOL = 1e-9
SOLVER_RESIDUAL_LIMIT = 1e-4
DEFAULT_GRID = 64


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def half_waveplate(angle: float) -> np.ndarray:
    """HWP with fast axis at `angle`: H -> cos(2a) H + sin(2a) V, det = -1."""
    c, s = np.cos(2.0 * angle), np.sin(2.0 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def quarter_waveplate(angle: float) -> np.ndarray:
    """QWP with fast axis at `angle`, symmetric retardance split exp(+-i pi/4)."""
    ret = np.diag([np.exp(-1j * np.pi / 4.0), np.exp(1j * np.pi / 4.0)])
    r = rotation(angle)
    return r @ ret @ r.conj().T


def phase_plate(phase: float, angle: float = 0.0) -> np.ndarray:
    """Variable retarder diag(1, e^{i phase}) in its own axes."""
    ret = np.diag([1.0, np.exp(1j * phase)]).astype(complex)
    r = rotation(angle)
    return r @ ret @ r.conj().T


def waveplate_unitary(kind: str, angle: float, phase: float = 0.0) -> np.ndarray:
    """Dispatch on waveplate kind: "half", "quarter" or "phase"."""
    kind = kind.lower()
    if kind == "half":
        return half_waveplate(angle)
    if kind == "quarter":
        return quarter_waveplate(angle)
    if kind == "phase":
        return phase_plate(phase, angle)
    raise OutOfRange(f"unknown waveplate kind {kind!r}")


def apply_local(rho, u1, u2) -> np.ndarray:
    """(u1 x u2) rho (u1 x u2)^dagger with a unitarity check on both factors."""
    u1 = np.asarray(u1, dtype=complex)
    u2 = np.asarray(u2, dtype=complex)
    for name, u in (("u1", u1), ("u2", u2)):
        dev = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if dev > UNITARY_TOL:
            raise NotUnitary(f"{name} deviates from unitarity by {dev:.3e}")
    u = qmat.kron(u1, u2)
    return u @ np.asarray(rho, dtype=complex) @ u.conj().T


@dataclass(frozen=True)
class DecohererConfig:
    """Per-arm V-vs-H delays (in wavelengths) plus the coherence envelope.

    envelope: "gaussian" (default, half width at half max = coherence_length/2),
    "exponential" (same HWHM), or "custom" with `table` rows of (|delay|, gamma)
    sampled on an increasing grid, interpolated linearly.
    """

    delay_arm1: float
    delay_arm2: float
    coherence_length: float = 70.0
    envelope: str = "gaussian"
    table: tuple | None = None

    def __post_init__(self):
        if self.coherence_length <= 0:
            raise OutOfRange("coherence_length must be positive")
        if self.delay_arm1 < 0 or self.delay_arm2 < 0:
            raise OutOfRange("delays must be non-negative")
        if self.envelope not in ("gaussian", "exponential", "custom"):
            raise OutOfRange(f"unknown envelope {self.envelope!r}")
        if self.envelope == "custom" and self.table is None:
            raise OutOfRange("custom envelope requires a table")


def coherence_factor(cfg: DecohererConfig, x: float):
    """Envelope value gamma(|x|) in [0, 1]; gamma(0) = 1 for the built-ins."""
    ax = np.abs(x)
    if cfg.envelope == "gaussian":
        return 2.0 ** (-((2.0 * ax / cfg.coherence_length) ** 2))
    if cfg.envelope == "exponential":
        return 2.0 ** (-2.0 * ax / cfg.coherence_length)
    pts = np.asarray(cfg.table, dtype=float)
    return np.interp(ax, pts[:, 0], pts[:, 1])


def _arrival_offsets(cfg: DecohererConfig) -> np.ndarray:
    # Difference-coordinate arrival offset per basis state, H delays zero.
    d1, d2 = cfg.delay_arm1, cfg.delay_arm2
    return np.array([0.0, -d2, d1, d1 - d2])


def coherence_kernel(cfg: DecohererConfig) -> np.ndarray:
    """The 4x4 attenuation factor matrix applied entrywise by decohere."""
    s = _arrival_offsets(cfg)
    return np.asarray(coherence_factor(cfg, s[:, None] - s[None, :]), dtype=float)


def decohere(rho, cfg: DecohererConfig) -> np.ndarray:
    """Apply the dephasing channel; diagonal elements are untouched.

    For monotone built-in envelopes the factor matrix is a valid correlation
    kernel, so the output stays positive semidefinite; a post-hoc check guards
    against inconsistent custom tables.
    """
    out = np.asarray(rho, dtype=complex) * coherence_kernel(cfg)
    w = np.linalg.eigvalsh(0.5 * (out + out.conj().T))
    if w[0] < qmat.PSD_EIGENVALUE_FLOOR:
        raise OutputNotPSD(
            f"decohered state has eigenvalue {w[0]:.3e}; envelope table is not "
            "a valid correlation kernel"
        )
    return out


def _diag_after_rotation(rho, theta2: float, theta3: float) -> np.ndarray:
    u = qmat.kron(half_waveplate(theta2), half_waveplate(theta3))
    return np.einsum("ij,jk,ik->i", u, np.asarray(rho, dtype=complex), u.conj()).real


def solve_waveplates(initial, target_diag, grid: int = DEFAULT_GRID):
    """Find HWP angles placing the rotated state's diagonal at target_diag.

    Least-squares objective on the diagonal, seeded from a grid x grid scan
    over [0, pi)^2 and refined with Nelder-Mead; deterministic for a fixed
    grid. Returns (theta2, theta3, residual) or raises Infeasible when the
    best residual exceeds SOLVER_RESIDUAL_LIMIT.
    """
    target = np.asarray(target_diag, dtype=float)
    if target.shape != (4,):
        raise OutOfRange("target_diag must have 4 entries")
    if abs(target.sum() - 1.0) > 1e-9:
        raise OutOfRange(f"target_diag sums to {target.sum()}, expected 1")
    rho = np.asarray(initial, dtype=complex)
    rho_t = rho.reshape(2, 2, 2, 2)  # [j1, j2, k1, k2]

    angles = np.arange(grid) * (np.pi / grid)
    hw = np.stack([half_waveplate(a) for a in angles])  # (grid, 2, 2)
    # t[a, x, j, k] = H_a[x, j] conj(H_a[x, k]); the diagonal factorizes per arm
    t = np.einsum("axj,axk->axjk", hw, hw.conj())
    diags = np.einsum("axjk,byln,jlkn->abxy", t, t, rho_t).real
    err = diags.reshape(grid, grid, 4) - target[None, None, :]
    costs = np.sum(err * err, axis=2)
    a_idx, b_idx = np.unravel_index(np.argmin(costs), costs.shape)

    def objective(x):
        d = _diag_after_rotation(rho, x[0], x[1])
        return float(np.sum((d - target) ** 2))

    res = optimize.minimize(
        objective,
        x0=np.array([angles[a_idx], angles[b_idx]]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
    )
    theta2, theta3 = np.mod(res.x, np.pi)
    residual = objective(res.x)
    if residual > SOLVER_RESIDUAL_LIMIT:
        raise Infeasible(
            f"diagonal target {target.tolist()} unreachable; residual {residual:.3e}"
        )
    return float(theta2), float(theta3), residual


def invert_envelope(cfg: DecohererConfig, factor: float) -> float:
    """Delay difference x >= 0 with coherence_factor(cfg, x) = factor."""
    f = float(np.clip(factor, 1e-9, 1.0))
    lc = cfg.coherence_length
    if cfg.envelope == "gaussian":
        return 0.5 * lc * np.sqrt(np.log2(1.0 / f))
    if cfg.envelope == "exponential":
        return 0.5 * lc * np.log2(1.0 / f)
    hi = lc
    for _ in range(60):
        if coherence_factor(cfg, hi) <= f:
            break
        hi *= 2.0
    else:
        raise OutOfRange(f"envelope never decays to {f}")
    return float(optimize.brentq(lambda x: coherence_factor(cfg, x) - f, 0.0, hi))


def mems_pipeline(
    r: float,
    subclass: str | None = None,
    coherence_length: float = 70.0,
    envelope: str = "gaussian",
    table: tuple | None = None,
    base_delays: tuple = (140.0, 140.0),
) -> np.ndarray:
    """Compose the full creation pipeline for the target MEMS.

    Subclass I: pump angle set so the pure-state concurrence equals r, HWPs
    solved to the target diagonal, then equal-delay decoherence keeps only
    the HH-VV coherence. Subclass II: start from the subclass boundary
    (concurrence 2/3) and unbalance arm 1 so the envelope attenuates the
    HH-VV coherence down to r/2. A final phase-plate correction pins the
    surviving coherence real positive.
    """
    if subclass is None:
        subclass = "I" if r >= states.MEMS_BOUNDARY_R else "II"
    subclass = subclass.upper()
    target = states.mems(r, subclass)  # validates the (r, subclass) pair

    if subclass == "I":
        theta1 = 0.5 * np.arcsin(r)
        delays = (float(base_delays[0]), float(base_delays[1]))
    else:
        theta1 = 0.5 * np.arcsin(states.MEMS_BOUNDARY_R)
        delays = None  # solved below from the coherence ratio

    pure = states.ket_dm(states.nonmax_pure(theta1))
    theta2, theta3, _ = solve_waveplates(pure, np.diag(target).real)
    rotated = apply_local(pure, half_waveplate(theta2), half_waveplate(theta3))

    if delays is None:
        c0 = abs(rotated[0, 3])
        probe = DecohererConfig(0.0, 0.0, coherence_length, envelope, table)
        diff = invert_envelope(probe, min(1.0, (r / 2.0) / c0)) if c0 > 1e-15 else 0.0
        delays = (float(base_delays[1]) + diff, float(base_delays[1]))

    cfg = DecohererConfig(delays[0], delays[1], coherence_length, envelope, table)
    rho = decohere(rotated, cfg)
    if abs(rho[0, 3]) > 1e-12:
        correction = phase_plate(float(np.angle(rho[0, 3])))
        rho = apply_local(rho, correction, np.eye(2, dtype=complex))
    return rho
