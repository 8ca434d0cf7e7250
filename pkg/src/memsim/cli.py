"""Command-line front end: every workflow as a subcommand with file outputs.

All randomized commands take an explicit --seed (default 0) and re-running a
command with the same flags produces byte-identical data files. CSV outputs
get a `<out>.meta.json` sidecar echoing the resolved configuration; JSON
outputs embed the same block under "meta". Diagnostics go to stderr only.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, apparatus, concentrate, emit, states, tomography
from .errors import Infeasible, InvalidState, MemsimError, OutOfRange


def _meta(command: str, config: dict) -> dict:
    return {"version": __version__, "command": command, "config": config}


def _write(path, text: str):
    Path(path).write_text(text)


def _sidecar(path, meta: dict):
    _write(str(path) + ".meta.json", emit.json_text({"meta": meta}))


def _load_state(path) -> np.ndarray:
    return states.density_matrix_from_json(Path(path).read_text())


def _state_from_args(args, prefix: str = "") -> tuple[np.ndarray, dict]:
    """Build the input state from --mems/--in style flags; returns (rho, config)."""
    mems_r = getattr(args, prefix + "mems", None)
    infile = getattr(args, prefix + "infile", None)
    if mems_r is not None:
        rho = states.mems(mems_r, args.subclass)
        return rho, {"mems_r": mems_r, "subclass": args.subclass or "auto"}
    if infile:
        return _load_state(infile), {"in": str(infile)}
    raise OutOfRange("provide an input state (--mems R or --in FILE)")


def _measures_doc(rho) -> dict:
    c = states.concurrence(rho)
    return {
        "concurrence": c,
        "t": c * c,
        "s_l": states.linear_entropy(rho),
        "e_f": states.ef_from_concurrence(c),
        "purity": states.purity(rho),
    }


def cmd_state(args) -> int:
    if args.mems is not None:
        rho = states.mems(args.mems, args.subclass)
        config = {"mems_r": args.mems, "subclass": args.subclass or "auto"}
    elif args.werner is not None:
        rho = states.werner(args.werner)
        config = {"werner_p": args.werner}
    elif args.bell is not None:
        rho = states.ket_dm(states.bell_state(args.bell))
        config = {"bell": args.bell}
    else:
        theta, phi = args.pure
        rho = states.ket_dm(states.nonmax_pure(theta, phi))
        config = {"pure_theta": theta, "pure_phi": phi}
    meta = _meta("state", config)
    doc = _measures_doc(rho)
    doc["meta"] = meta
    sys.stdout.write(emit.json_text(doc))
    if args.out:
        _write(args.out, states.density_matrix_to_json(rho, extra={"meta": meta}))
    return 0


def cmd_pipeline(args) -> int:
    config = {
        "target_r": args.target_r,
        "subclass": args.subclass or "auto",
        "coherence_length": args.lc,
        "delays": list(args.delays),
        "envelope": args.envelope,
    }
    produced = apparatus.mems_pipeline(
        args.target_r,
        args.subclass,
        coherence_length=args.lc,
        envelope=args.envelope,
        base_delays=tuple(args.delays),
    )
    target = states.mems(args.target_r, args.subclass)
    fid = states.fidelity(produced, target)
    meta = _meta("pipeline", config)
    sys.stdout.write(emit.json_text({"fidelity_with_target": fid, "meta": meta}))
    if args.out:
        _write(
            args.out,
            states.density_matrix_to_json(
                produced, extra={"fidelity_with_target": fid, "meta": meta}
            ),
        )
    return 0


def cmd_concentrate(args) -> int:
    rho, config = _state_from_args(args)
    if args.rotate:
        rho = concentrate.rotate_for_filtering(rho)
    pol = concentrate.PartialPolarizer.from_mode(args.mode)
    config.update(rotate=args.rotate, mode=args.mode, pieces=args.pieces)
    points = concentrate.trajectory(rho, pol, args.pieces)
    selected = points if args.trajectory else points[-1:]
    meta = _meta("concentrate", config)
    _write(args.out, concentrate.trajectory_csv(selected))
    _sidecar(args.out, meta)
    if args.json:
        _write(args.json, concentrate.trajectory_json(selected, meta))
    if args.plot:
        from . import plots

        plots.plot_trajectory(points, args.plot, curves_rows=analysis.boundary_curves(100))
    return 0


def cmd_compare(args) -> int:
    rho, config = _state_from_args(args)
    pol = concentrate.PartialPolarizer.from_mode(args.mode)
    pieces = [int(x) for x in args.pieces.split(",") if x]
    config.update(mode=args.mode, pieces=pieces)
    rows = concentrate.scheme_table(rho, pol, pieces)
    meta = _meta("compare", config)
    _write(args.out, concentrate.scheme_table_csv(rows))
    _sidecar(args.out, meta)
    if args.json:
        _write(args.json, concentrate.scheme_table_json(rows, meta))
    if args.plot:
        from . import plots

        plots.plot_scheme_table(rows, args.plot)
    return 0


def cmd_tomo_simulate(args) -> int:
    rho, config = _state_from_args(args)
    pset = tomography.projector_set(args.set)
    records = tomography.simulate_counts(rho, pset, args.exposure, args.seed, args.noise)
    config.update(set=args.set, exposure=args.exposure, seed=args.seed, noise=args.noise)
    _write(args.out, tomography.counts_csv(records))
    _sidecar(args.out, _meta("tomo simulate", config))
    return 0


def cmd_tomo_reconstruct(args) -> int:
    records = tomography.parse_counts_csv(Path(args.counts).read_text())
    pset = tomography.projector_set(args.set)
    cfg = tomography.MLSettings(
        max_iterations=args.max_iter,
        gradient_tolerance=args.gtol,
        seed_strategy=args.seed_strategy,
    )
    rho, report = tomography.ml_reconstruct(records, pset, cfg)
    meta = _meta(
        "tomo reconstruct",
        {
            "counts": str(args.counts),
            "set": args.set,
            "max_iter": args.max_iter,
            "gtol": args.gtol,
            "seed_strategy": args.seed_strategy,
        },
    )
    meta.update(
        iterations=report.iterations,
        final_nll=report.final_nll,
        converged=report.converged,
        gradient_norm=report.gradient_norm,
    )
    sys.stdout.write(
        emit.json_text(
            {
                "converged": report.converged,
                "iterations": report.iterations,
                "final_nll": report.final_nll,
            }
        )
    )
    _write(args.out, states.density_matrix_to_json(rho, extra={"meta": meta}))
    return 0


def cmd_patch(args) -> int:
    target, config = _state_from_args(args, prefix="target_")
    cfg = analysis.SamplerConfig(
        n_samples=args.n,
        f_min=args.fmin,
        kernel=args.kernel,
        eps_max=args.eps_max,
        angle_max=args.angle_max,
        rng_seed=args.seed,
        workers=args.workers,
    )
    samples, stats = analysis.sample_patch(target, cfg)
    config.update(
        n=args.n,
        fmin=args.fmin,
        kernel=args.kernel,
        eps_max=args.eps_max,
        angle_max=args.angle_max,
        seed=args.seed,
        workers=args.workers,
    )
    meta = _meta("patch", config)
    meta.update(attempts=stats.attempts, acceptance_rate=stats.acceptance_rate)
    _write(args.out, analysis.patch_csv(samples))
    _sidecar(args.out, meta)
    if args.plot:
        from . import plots

        target_pt = (states.linear_entropy(target), states.tangle(target))
        plots.plot_patch(samples, target_pt, args.plot)
    return 0


def cmd_curves(args) -> int:
    rows = analysis.boundary_curves(args.n)
    _write(args.out, analysis.curves_csv(rows))
    _sidecar(args.out, _meta("curves", {"n": args.n}))
    if args.plot:
        from . import plots

        plots.plot_curves(rows, args.plot)
    return 0


def cmd_sensitivity(args) -> int:
    deltas = None
    if args.deltas:
        lo, hi, count = args.deltas
        deltas = np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count))
    fid_exp, t_exp, sl_exp = analysis.sensitivity_exponents(args.r0, deltas, args.subclass)
    doc = {
        "fid_exponent": fid_exp,
        "t_exponent": t_exp,
        "sl_exponent": sl_exp,
        "meta": _meta(
            "sensitivity",
            {
                "r0": args.r0,
                "subclass": args.subclass or "auto",
                "deltas": list(args.deltas) if args.deltas else "default",
            },
        ),
    }
    sys.stdout.write(emit.json_text(doc))
    if args.out:
        _write(args.out, emit.json_text(doc))
    return 0


def _add_state_source(p, prefix: str = "", required: bool = True):
    group = p.add_mutually_exclusive_group(required=required)
    flag = "--target-mems" if prefix else "--mems"
    group.add_argument(flag, dest=prefix + "mems", type=float, metavar="R",
                       help="MEMS target concurrence")
    infl = "--target-in" if prefix else "--in"
    group.add_argument(infl, dest=prefix + "infile", metavar="FILE",
                       help="state JSON file")
    p.add_argument("--subclass", choices=["I", "II"], default=None,
                   help="MEMS subclass (derived from r when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memsim",
        description="Create, measure, filter, and concentrate two-qubit "
        "maximally entangled mixed states.",
    )
    parser.add_argument("--version", action="version", version=f"memsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="construct a state and print its measures")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--mems", type=float, metavar="R")
    group.add_argument("--werner", type=float, metavar="P")
    group.add_argument("--bell", nargs="?", const="hh+vv", choices=states.BELL_LABELS)
    group.add_argument("--pure", nargs=2, type=float, metavar=("THETA", "PHI"))
    p.add_argument("--subclass", choices=["I", "II"], default=None)
    p.add_argument("--out", metavar="FILE", help="write the state JSON here")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("pipeline", help="run the creation pipeline toward a MEMS target")
    p.add_argument("--target-r", type=float, required=True, metavar="R")
    p.add_argument("--subclass", choices=["I", "II"], default=None)
    p.add_argument("--lc", type=float, default=70.0, help="coherence length (wavelengths)")
    p.add_argument("--delays", nargs=2, type=float, default=[140.0, 140.0],
                   metavar=("D1", "D2"), help="base decoherer delays")
    p.add_argument("--envelope", choices=["gaussian", "exponential"], default="gaussian")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("concentrate", help="Procrustean filtering trajectory")
    _add_state_source(p)
    p.add_argument("--pieces", type=int, required=True, metavar="N")
    p.add_argument("--mode", choices=["ideal", "measured"], default="ideal")
    p.add_argument("--rotate", action="store_true",
                   help="swap H and V in arm 1 before filtering")
    p.add_argument("--trajectory", action="store_true",
                   help="emit every piece count 0..N instead of just N")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--json", metavar="FILE", help="also write JSON with full states")
    p.add_argument("--plot", metavar="PNG", help="render the S_L-T path to a figure")
    p.set_defaults(func=cmd_concentrate)

    p = sub.add_parser("compare", help="scheme efficiency comparison table")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--r", dest="mems", type=float, metavar="R")
    group.add_argument("--in", dest="infile", metavar="FILE")
    p.add_argument("--subclass", choices=["I", "II"], default=None)
    p.add_argument("--pieces", default="2,4,6", metavar="N,N,...")
    p.add_argument("--mode", choices=["ideal", "measured"], default="ideal")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--json", metavar="FILE")
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tomo", help="simulated tomography")
    tomo_sub = p.add_subparsers(dest="tomo_command", required=True)
    ps = tomo_sub.add_parser("simulate", help="generate coincidence counts")
    _add_state_source(ps)
    ps.add_argument("--set", choices=["16", "36"], default="36")
    ps.add_argument("--exposure", type=float, default=1e4)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--noise", choices=["poisson", "none"], default="poisson")
    ps.add_argument("--out", required=True, metavar="CSV")
    ps.set_defaults(func=cmd_tomo_simulate)
    pr = tomo_sub.add_parser("reconstruct", help="maximum-likelihood reconstruction")
    pr.add_argument("--counts", required=True, metavar="CSV")
    pr.add_argument("--set", choices=["16", "36"], default="36")
    pr.add_argument("--max-iter", type=int, default=5000)
    pr.add_argument("--gtol", type=float, default=1e-8)
    pr.add_argument("--seed-strategy", choices=["linear_inversion", "maximally_mixed"],
                    default="linear_inversion")
    pr.add_argument("--out", required=True, metavar="JSON")
    pr.set_defaults(func=cmd_tomo_reconstruct)

    p = sub.add_parser("patch", help="fidelity-patch Monte Carlo in the S_L-T plane")
    _add_state_source(p, prefix="target_")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--fmin", type=float, default=0.99)
    p.add_argument("--kernel", choices=list(analysis.KERNELS), default="combined")
    p.add_argument("--eps-max", type=float, default=0.08)
    p.add_argument("--angle-max", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_patch)

    p = sub.add_parser("curves", help="MEMS and Werner boundary curves")
    p.add_argument("--n", type=int, default=200, help="points per curve")
    p.add_argument("--out", required=True, metavar="CSV")
    p.add_argument("--plot", metavar="PNG")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("sensitivity", help="fit measure-sensitivity exponents")
    p.add_argument("--r0", type=float, required=True)
    p.add_argument("--subclass", choices=["I", "II"], default=None)
    p.add_argument("--deltas", nargs=3, default=None, metavar=("MIN", "MAX", "COUNT"))
    p.add_argument("--out", metavar="JSON")
    p.set_defaults(func=cmd_sensitivity)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OutOfRange, InvalidState) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MemsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
