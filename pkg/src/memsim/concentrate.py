"""Concentration and distillation schemes for two-qubit mixed states.

Four schemes are modeled:

* Procrustean filtering: stacks of partial polarizers attenuate one
  polarization in each arm; post-selection on transmission drives a rotated
  MEMS toward the Bell state (|HV> + |VH>)/sqrt(2).
* Twirling: random bilateral rotations map any state to the Werner state
  with the same dominant Bell fidelity.
* One round of the BBPSSW recurrence map on that Werner state (ideal CNOTs).
* The two-copy interference scheme where polarizing beam splitters replace
  the CNOTs; modeled exactly on the 16x16 two-copy space.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import emit, qmat, states
from .apparatus import apply_local, half_waveplate
from .errors import OutOfRange, ZeroSurvival

MAX_TRAJECTORY_PIECES = 64

# Measured per-piece intensity transmissions of one Brewster-angle glass piece.
MEASURED_T_H = 0.990
MEASURED_T_V = 0.740


@dataclass(frozen=True)
class PartialPolarizer:
    """Per-piece H/V intensity transmissions of one glass piece.

    `measured()` uses the raw transmissions (t_h=0.990, t_v=0.740);
    `ideal()` normalizes to a lossless pass axis (t_h=1, t_v=0.740/0.990),
    the convention used for no-loss efficiency comparisons. Some reports
    quote the normalized pair with the H/V labels exchanged; the labels here
    always mean transmission of H and of V after the arm-1 swap.
    """

    t_h: float
    t_v: float

    def __post_init__(self):
        if not (0.0 <= self.t_h <= 1.0 and 0.0 <= self.t_v <= 1.0):
            raise OutOfRange("transmissions must lie in [0, 1]")

    @classmethod
    def measured(cls) -> "PartialPolarizer":
        return cls(MEASURED_T_H, MEASURED_T_V)

    @classmethod
    def ideal(cls) -> "PartialPolarizer":
        return cls(1.0, MEASURED_T_V / MEASURED_T_H)

    @classmethod
    def from_mode(cls, mode: str) -> "PartialPolarizer":
        mode = mode.lower()
        if mode == "measured":
            return cls.measured()
        if mode == "ideal":
            return cls.ideal()
        raise OutOfRange(f"unknown polarizer mode {mode!r}")


class FilterOutcome(NamedTuple):
    state: np.ndarray
    success_prob: float


class TrajectoryPoint(NamedTuple):
    n: int
    s_l: float
    t: float
    success_prob: float
    fidelity_bell: float
    state: np.ndarray


@dataclass
class SchemeReport:
    scheme: str
    success_prob: float
    ef_success: float
    ef_per_pair: float
    pairs_per_trial: int
    state: np.ndarray = field(repr=False, default=None)


def rotate_for_filtering(rho) -> np.ndarray:
    """Exchange H and V in the first arm (HWP at 45 degrees)."""
    return apply_local(rho, half_waveplate(np.pi / 4.0), np.eye(2, dtype=complex))


def procrustean_filter(rho, pol: PartialPolarizer, n_pieces: int) -> FilterOutcome:
    """Filter with n_pieces partial polarizers per arm and post-select.

    Each piece applies the amplitude filter diag(sqrt(t_h), sqrt(t_v)) to
    each qubit; pieces compose multiplicatively (reflected photons are
    discarded, so there is no inter-piece interference).
    """
    if n_pieces < 0:
        raise OutOfRange("n_pieces must be non-negative")
    f = np.diag([pol.t_h ** (n_pieces / 2.0), pol.t_v ** (n_pieces / 2.0)])
    ff = qmat.kron(f, f)
    sigma = ff @ np.asarray(rho, dtype=complex) @ ff
    prob = float(np.trace(sigma).real)
    if prob < 1e-15:
        raise ZeroSurvival(f"no population survives {n_pieces} pieces")
    return FilterOutcome(sigma / prob, prob)


_BELL_FILTER_TARGET = states.bell_state("hv+vh")


def trajectory(rho0, pol: PartialPolarizer, n_max: int) -> list[TrajectoryPoint]:
    """Concentration path of rho0 under 0..n_max filtering pieces.

    One entry per piece count with purity/entanglement coordinates, the
    survival probability, and the overlap with (|HV>+|VH>)/sqrt(2) (equal to
    the Uhlmann fidelity since the target is pure). Truncates early if the
    survival probability underflows.
    """
    if n_max > MAX_TRAJECTORY_PIECES:
        raise OutOfRange(f"n_max capped at {MAX_TRAJECTORY_PIECES}")
    points = []
    for n in range(n_max + 1):
        try:
            out = procrustean_filter(rho0, pol, n)
        except ZeroSurvival:
            break
        points.append(
            TrajectoryPoint(
                n=n,
                s_l=states.linear_entropy(out.state),
                t=states.tangle(out.state),
                success_prob=out.success_prob,
                fidelity_bell=states.bell_overlap(out.state, "hv+vh"),
                state=out.state,
            )
        )
    return points


def twirl(rho) -> np.ndarray:
    """Werner state with the input's maximal Bell-state fidelity.

    Models random bilateral rotations; the basis is assumed pre-aligned so
    the dominant Bell state maps onto (|HH>+|VV>)/sqrt(2).
    """
    f = max(states.bell_overlap(rho, label) for label in states.BELL_LABELS)
    p = states.werner_mixing_from_bell_fidelity(f)
    return states.werner(min(1.0, max(0.0, p)))


def recurrence_round(f: float):
    """One ideal-CNOT recurrence round on a Werner input with Bell fidelity f.

    Returns (success_prob, f_out); the post-round state is treated as
    Werner(f_out) for entanglement accounting.
    """
    if not (0.25 <= f <= 1.0):
        raise OutOfRange(f"recurrence needs 1/4 <= f <= 1, got {f}")
    g = (1.0 - f) / 3.0
    p = f * f + 2.0 * f * g + 5.0 * g * g
    f_out = (f * f + g * g) / p
    return float(p), float(f_out)


# Indices of the two-copy basis kept by the both-PBS post-selection
# (first-pair polarization equals second-pair polarization on each side).
_PBS_KEEP = (0, 5, 10, 15)

_DIAG_KETS = {
    "+": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0]) / np.sqrt(2.0),
}
_Z_FIRST = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)


def pbs_concentrate(rho) -> FilterOutcome:
    """Two-copy interference concentration with polarizing beam splitters.

    Builds rho x rho, keeps the components where the two photons at each PBS
    share a polarization (one photon per output port), measures the ancilla
    pair in the +-45 degree basis keeping all four outcomes, and applies the
    ideal conditional phase correction to the remaining pair.
    """
    rho = np.asarray(rho, dtype=complex)
    two = qmat.kron(rho, rho)
    mask = np.zeros(16, dtype=bool)
    mask[list(_PBS_KEEP)] = True
    kept = two * np.outer(mask, mask)
    prob = float(np.trace(kept).real)
    if prob < 1e-15:
        raise ZeroSurvival("both-PBS post-selection removed all population")
    # tensor view [pair1, pair2, pair1', pair2'] for the ancilla contraction
    kept_t = kept.reshape(4, 4, 4, 4)
    out = np.zeros((4, 4), dtype=complex)
    for s in "+-":
        for t in "+-":
            v = np.kron(_DIAG_KETS[s], _DIAG_KETS[t]).astype(complex)
            cond = np.einsum("minj,i,j->mn", kept_t, v.conj(), v)
            if s != t:
                cond = _Z_FIRST @ cond @ _Z_FIRST
            out += cond
    return FilterOutcome(out / prob, prob)


def scheme_table(rho, pol: PartialPolarizer, piece_counts) -> list[SchemeReport]:
    """Efficiency comparison rows for all schemes on the same initial state.

    Interference schemes consume two pairs per trial, filtering one; the
    entanglement yield per initial pair is success * E_F / pairs. The
    Procrustean rows filter the arm-1-swapped state, as in the physical
    arrangement.
    """
    rows = []

    f_bell = max(states.bell_overlap(rho, label) for label in states.BELL_LABELS)
    p_rec, f_out = recurrence_round(f_bell)
    twirled_out = states.werner(states.werner_mixing_from_bell_fidelity(f_out))
    ef = states.entanglement_of_formation(twirled_out)
    rows.append(SchemeReport("twirling", p_rec, ef, p_rec * ef / 2.0, 2, twirled_out))

    pbs = pbs_concentrate(rho)
    ef = states.entanglement_of_formation(pbs.state)
    rows.append(
        SchemeReport(
            "no_twirling", pbs.success_prob, ef, pbs.success_prob * ef / 2.0, 2, pbs.state
        )
    )

    rotated = rotate_for_filtering(rho)
    for n in piece_counts:
        out = procrustean_filter(rotated, pol, int(n))
        ef = states.entanglement_of_formation(out.state)
        rows.append(
            SchemeReport(
                f"procrustean_{int(n)}",
                out.success_prob,
                ef,
                out.success_prob * ef,
                1,
                out.state,
            )
        )
    return rows


def scheme_table_csv(rows: list[SchemeReport]) -> str:
    return emit.csv_text(
        ("scheme", "success_prob", "ef_success", "ef_per_pair"),
        [(r.scheme, emit.sig6(r.success_prob), emit.sig6(r.ef_success), emit.sig6(r.ef_per_pair)) for r in rows],
    )


def scheme_table_json(rows: list[SchemeReport], meta: dict | None = None) -> str:
    docs = [
        {
            "scheme": r.scheme,
            "success_prob": r.success_prob,
            "ef_success": r.ef_success,
            "ef_per_pair": r.ef_per_pair,
            "pairs_per_trial": r.pairs_per_trial,
            "state": emit.state_doc(r.state),
        }
        for r in rows
    ]
    return emit.json_text({"schemes": docs, "meta": meta or {}})


def trajectory_csv(points: list[TrajectoryPoint]) -> str:
    return emit.csv_text(
        ("n", "s_l", "t", "success_prob", "fidelity_bell"),
        [
            (p.n, emit.sig6(p.s_l), emit.sig6(p.t), emit.sig6(p.success_prob), emit.sig6(p.fidelity_bell))
            for p in points
        ],
    )


def trajectory_json(points: list[TrajectoryPoint], meta: dict | None = None) -> str:
    docs = [
        {
            "n": p.n,
            "s_l": p.s_l,
            "t": p.t,
            "success_prob": p.success_prob,
            "fidelity_bell": p.fidelity_bell,
            "state": emit.state_doc(p.state),
        }
        for p in points
    ]
    return emit.json_text({"trajectory": docs, "meta": meta or {}})
