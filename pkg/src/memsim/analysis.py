"""Monte-Carlo fidelity patches, sensitivity exponents, and boundary curves.

The patch sampler answers "which (S_L, T) pairs are compatible with a given
fidelity to the target?" by rejection sampling perturbed states. The
perturbation kernel is explicitly configurable (and echoed in telemetry)
because the patch silhouette depends on the sampling measure.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import emit, qmat, states
from .errors import KernelTooWide, OutOfRange

KERNELS = ("mix_ginibre", "local_jitter", "combined")

# Bail out when acceptance stays under this rate after this many attempts.
MIN_ACCEPT_RATE = 1e-3
RATE_CHECK_ATTEMPTS = 1_000_000


class PatchSample(NamedTuple):
    s_l: float
    t: float
    f: float


class CurvePoint(NamedTuple):
    curve: str
    s_l: float
    t: float


@dataclass(frozen=True)
class SamplerConfig:
    n_samples: int = 5000
    f_min: float = 0.99
    kernel: str = "combined"
    eps_max: float = 0.08
    angle_max: float = 0.15
    rng_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not (0.0 < self.f_min <= 1.0):
            raise OutOfRange("f_min must lie in (0, 1]")
        if self.n_samples < 1:
            raise OutOfRange("n_samples must be >= 1")
        if self.kernel not in KERNELS:
            raise OutOfRange(f"kernel must be one of {KERNELS}")


@dataclass
class PatchStats:
    attempts: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0


class _Meter:
    """Thread-safe attempt counter enforcing the acceptance-rate floor."""

    def __init__(self):
        self.attempts = 0
        self.accepted = 0
        self._lock = threading.Lock()

    def bump(self, accepted: bool):
        with self._lock:
            self.attempts += 1
            self.accepted += accepted
            if (
                self.attempts >= RATE_CHECK_ATTEMPTS
                and self.accepted < MIN_ACCEPT_RATE * self.attempts
            ):
                raise KernelTooWide(
                    f"acceptance {self.accepted}/{self.attempts} below "
                    f"{MIN_ACCEPT_RATE:.1%}; narrow the kernel or lower f_min"
                )


def _small_local_unitary(rng: np.random.Generator, angle_max: float) -> np.ndarray:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    theta = angle_max * (1.0 - rng.random())  # (0, angle_max]
    nx, ny, nz = axis
    sigma = np.array(
        [[nz, nx - 1j * ny], [nx + 1j * ny, -nz]], dtype=complex
    )
    return np.cos(theta / 2.0) * np.eye(2) - 1j * np.sin(theta / 2.0) * sigma


def _perturb(target, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    rho = target
    if cfg.kernel in ("local_jitter", "combined"):
        u = np.kron(
            _small_local_unitary(rng, cfg.angle_max),
            _small_local_unitary(rng, cfg.angle_max),
        )
        rho = u @ rho @ u.conj().T
    if cfg.kernel in ("mix_ginibre", "combined"):
        eps = cfg.eps_max * (1.0 - rng.random())  # (0, eps_max]
        rho = (1.0 - eps) * rho + eps * states.random_density_matrix(rng)
    return rho


def _fast_fidelity_with(sqrt_target: np.ndarray, rho: np.ndarray) -> float:
    # Uhlmann fidelity against a fixed target whose PSD root is precomputed.
    inner = sqrt_target @ rho @ sqrt_target
    lam = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    tr = np.sum(np.sqrt(np.clip(lam, 0.0, None)))
    return float(min(1.0, tr * tr))


def sample_patch(target, cfg: SamplerConfig | None = None, keep_states: bool = False):
    """Draw n_samples perturbed states with fidelity >= f_min to the target.

    Returns (samples, PatchStats), or (samples, PatchStats, state_list) when
    keep_states is set (e.g. for post-hoc re-verification of the fidelity
    floor). Each output slot uses its own rng substream derived from
    (rng_seed, slot index), so results are identical for any worker count,
    and deterministic per seed.
    """
    cfg = cfg or SamplerConfig()
    target = states.validate_density_matrix(target, "patch target")
    sqrt_target = qmat.sqrt_psd(target)
    meter = _Meter()

    def draw(slot: int):
        rng = np.random.default_rng([cfg.rng_seed, slot])
        while True:
            rho = _perturb(target, cfg, rng)
            f = _fast_fidelity_with(sqrt_target, rho)
            ok = f >= cfg.f_min
            meter.bump(ok)
            if ok:
                sample = PatchSample(states.linear_entropy(rho), states.tangle(rho), f)
                return sample, rho

    slots = range(cfg.n_samples)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            drawn = list(pool.map(draw, slots))
    else:
        drawn = [draw(i) for i in slots]
    samples = [s for s, _ in drawn]
    stats = PatchStats(meter.attempts, meter.accepted)
    if keep_states:
        return samples, stats, [rho for _, rho in drawn]
    return samples, stats


def sensitivity_exponents(r0: float, deltas=None, subclass: str | None = None):
    """Scaling exponents of 1-F, |dT| and |dS_L| under r -> r0 + delta.

    Fits each quantity against delta on log-log axes by least squares and
    returns the three slopes (fidelity, tangle, linear entropy).
    """
    if deltas is None:
        deltas = np.logspace(-4, -2, 9)
    deltas = np.asarray(sorted(float(d) for d in deltas))
    if deltas[0] <= 0:
        raise OutOfRange("deltas must be positive")
    if deltas[-1] / deltas[0] < 10.0:
        raise OutOfRange("deltas must span at least one decade")
    if subclass is None:
        subclass = "I" if r0 >= states.MEMS_BOUNDARY_R else "II"
    lo, hi = (
        (states.MEMS_BOUNDARY_R, 1.0) if subclass.upper() == "I" else (0.0, states.MEMS_BOUNDARY_R)
    )
    if not (lo <= r0 - deltas[-1] and r0 + deltas[-1] <= hi):
        raise OutOfRange(
            f"r0 +- {deltas[-1]} leaves the subclass {subclass} range [{lo}, {hi}]"
        )

    base = states.mems(r0, subclass)
    t0 = states.tangle(base)
    sl0 = states.linear_entropy(base)
    infid, dt, dsl = [], [], []
    for d in deltas:
        moved = states.mems(r0 + d, subclass)
        infid.append(max(1e-300, 1.0 - states.fidelity(base, moved)))
        dt.append(max(1e-300, abs(states.tangle(moved) - t0)))
        dsl.append(max(1e-300, abs(states.linear_entropy(moved) - sl0)))
    logd = np.log(deltas)
    fit = lambda y: float(np.polyfit(logd, np.log(y), 1)[0])
    return fit(infid), fit(dt), fit(dsl)


def boundary_curves(n_points: int) -> list[CurvePoint]:
    """(S_L, T) sweeps of the two MEMS branches and the Werner family.

    MEMS branches sweep their r ranges; Werner sweeps the mixing
    probability over [1/3, 1] (the entangled stretch). Every row is
    computed with the measures module, not closed forms.
    """
    if n_points < 2:
        raise OutOfRange("n_points must be >= 2")
    rows = []
    for r in np.linspace(states.MEMS_BOUNDARY_R, 1.0, n_points):
        rho = states.mems_i(r)
        rows.append(CurvePoint("mems_i", states.linear_entropy(rho), states.tangle(rho)))
    for r in np.linspace(0.0, states.MEMS_BOUNDARY_R, n_points):
        rho = states.mems_ii(r)
        rows.append(CurvePoint("mems_ii", states.linear_entropy(rho), states.tangle(rho)))
    for p in np.linspace(1.0 / 3.0, 1.0, n_points):
        rho = states.werner(p)
        rows.append(CurvePoint("werner", states.linear_entropy(rho), states.tangle(rho)))
    return rows


def mems_r_at_entropy(s_l: float):
    """Invert the MEMS S_L(r) map: returns (r, subclass) at linear entropy s_l."""
    s_boundary = 16.0 / 27.0
    if s_l < 0.0 or s_l > 8.0 / 9.0 + 1e-12:
        raise OutOfRange(f"no MEMS has linear entropy {s_l}")
    if s_l <= s_boundary:
        return 0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - 1.5 * s_l))), "I"
    return np.sqrt(max(0.0, (8.0 / 9.0 - s_l) * 1.5)), "II"


def patch_csv(samples) -> str:
    return emit.csv_text(
        ("s_l", "t", "f"),
        [(emit.sig6(s.s_l), emit.sig6(s.t), emit.sig6(s.f)) for s in samples],
    )


def curves_csv(rows) -> str:
    return emit.csv_text(
        ("curve", "s_l", "t"),
        [(r.curve, emit.sig6(r.s_l), emit.sig6(r.t)) for r in rows],
    )
