"""Command-line entry point: ``selfsim <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 failed invariant.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import io as sio
from .affine import ChainParams
from .errors import BandError, InstabilityError, NonConvergenceError, SamplingError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- helpers


def _params(args) -> ChainParams:
    from .dispersion import FIGURE_PRESETS

    preset = getattr(args, "preset", None)
    if preset in FIGURE_PRESETS:
        base = FIGURE_PRESETS[preset]
        N = args.N if args.N is not None else base.N
        delta = args.delta if args.delta is not None else base.delta
    else:
        N = args.N if args.N is not None else 1.5
        delta = args.delta
        if delta is None:
            raise CliError("--delta is required (or pick a --preset)", EXIT_INPUT)
    params = ChainParams(N, delta, args.h)
    if not 0.0 < params.delta < 2.0:
        raise BandError(
            f"delta={params.delta!r} is outside the wave band 0 < delta < 2: the spring "
            "weights N**(-delta*s) make the chain energy diverge at large or small scales"
        )
    return params


def _config(args) -> dict:
    skip = {"func", "out", "format", "timestamp"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _meta(args, params: ChainParams | None, **extra) -> dict:
    return sio.base_meta(params, args.timestamp, command=args.command, **extra)


def _emit(args, columns, meta, extra=None) -> None:
    record_extra = {"config": _config(args), **(extra or {})}
    text = sio.emit(None, args.format, columns, meta, record_extra if args.format == "json" else None)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def cmd_dispersion(args) -> int:
    from .dispersion import omega2, sample_curve

    params = _params(args)
    if args.point:
        if args.kh is None:
            raise CliError("--point needs --kh", EXIT_INPUT)
        value, err = omega2(args.kh, params, args.tol, exact=not args.fast)
        _emit(args, {"kh": [args.kh], "omega2": [value], "err": [err]},
              _meta(args, params, tol=args.tol))
        return EXIT_OK
    curve = sample_curve(params, args.kh_min, args.kh_max, args.n, args.tol, exact=not args.fast)
    meta = _meta(args, params, tol=args.tol, exact=curve.exact, preset=args.preset or "none",
                 max_err=float(np.max(curve.err)))
    _emit(args, {"kh": curve.grid, "omega2": curve.omega2, "err": curve.err}, meta)
    return EXIT_OK


def cmd_density(args) -> int:
    from .continuum import DensityModel, empirical_density, long_wave_omegas, loglog_slope, oscillator_density

    params = _params(args)
    model = DensityModel.from_params(params)
    omegas = long_wave_omegas(params, args.kh_lo, args.kh_hi, args.n)
    closed = oscillator_density(model, omegas)
    empirical = empirical_density(params, omegas)
    slope = loglog_slope(omegas, empirical)
    meta = _meta(args, params, C=model.C, expected_slope=model.exponent, fitted_slope=slope)
    _emit(args, {"omega": omegas, "rho_closed": closed, "rho_empirical": empirical,
                 "slope": np.full(omegas.size, slope),
                 "expected": np.full(omegas.size, model.exponent)}, meta)
    return EXIT_OK


def cmd_kernel(args) -> int:
    from .continuum import KernelModel, kernel_eval

    params = _params(args)
    model = KernelModel.from_params(params)
    if not 0 < args.x_min < args.x_max:
        raise CliError("need 0 < --x-min < --x-max", EXIT_INPUT)
    x = np.geomspace(args.x_min, args.x_max, args.n)
    _emit(args, {"x": x, "g": kernel_eval(model, x)}, _meta(args, params, branch=model.branch))
    return EXIT_OK


def cmd_dimension(args) -> int:
    from .dimension import dimension_curve, estimate_dimension

    params = _params(args)
    report = estimate_dimension(dimension_curve(params, args.kh_min, args.kh_max, args.n, args.tol))
    meta = _meta(args, params, D_estimated=report.D_estimated, ci=report.ci,
                 D_expected=report.D_expected if report.D_expected is not None else "none",
                 kh_min=args.kh_min, kh_max=args.kh_max, samples=args.n)
    _emit(args, {"scale": report.scales, "count": report.counts}, meta, {"report": report.as_dict()})
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulate import PRESETS, SimRun, dalembert_series, simulate, stability_limit

    params = _params(args)
    u0, v0 = PRESETS[args.sim_preset](args.grid, args.dx, seed=args.seed)
    limit = stability_limit(params, args.grid, args.dx, args.interp, args.order, args.tol)
    dt = args.dt if args.dt is not None else args.dt_fraction * limit
    run = SimRun(u0, v0, dt, args.steps, args.method, args.interp, args.order,
                 min(args.snapshots, args.steps + 1) if args.steps > 0 else 2, args.tol)
    traj = simulate(run, params)
    e0 = traj.energy[0]
    drift = np.abs(traj.energy - e0) / (abs(e0) if e0 != 0 else 1.0)
    residual = np.full(len(traj), np.nan)
    if len(traj) >= 3 and np.allclose(np.diff(traj.times), dt, rtol=1e-9):
        residual[1:-1] = dalembert_series(traj, params)
    columns = {"t": traj.times, "energy": traj.energy, "energy_drift": drift, "residual": residual}
    if traj.shadow is not None:
        columns["shadow_energy"] = traj.shadow
    meta = _meta(args, params, method=args.method, dt=dt, stability_limit=limit,
                 max_energy_drift=float(np.max(drift)))
    if args.fields:
        x = np.arange(args.grid) * args.dx
        k = len(traj)
        sio.write_csv(args.fields, {
            "t": np.repeat(traj.times, args.grid), "x": np.tile(x, k),
            "u": traj.u.ravel(), "v": traj.v.ravel(),
        }, meta)
    _emit(args, columns, meta)
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(quick=args.quick)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} invariants hold")
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_replay(args) -> int:
    record = sio.read_json(args.record)
    config = record.get("config")
    if not isinstance(config, dict) or "command" not in config:
        raise CliError(f"{args.record} is not a run record (no config)", EXIT_INPUT)
    argv = _argv_from_config(config) + ["--format", args.format]
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


def _argv_from_config(config: dict) -> list[str]:
    parser = build_parser()
    sub = _subparsers(parser)[config["command"]]
    argv = [config["command"]]
    for action in sub._actions:
        if not action.option_strings or action.dest not in config:
            continue
        value = config[action.dest]
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
        elif value is not None:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


# ---------------------------------------------------------------- parser


def _add_params(p, presets: bool = True) -> None:
    if presets:
        p.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4"],
                       help="figure preset: N=1.5 with delta 1.2, 0.7, 0.5, 0.1")
    p.add_argument("--N", type=float, default=None, help="scale factor N > 1 (default 1.5)")
    p.add_argument("--delta", type=float, default=None, help="similarity exponent in (0, 2)")
    p.add_argument("--h", type=float, default=1.0, help="base length h")


def _add_output(p) -> None:
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--timestamp", action="store_true", help="record the wall-clock time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfsim", description="Self-similar chain numerics.")
    parser.add_argument("--version", action="version", version=f"selfsim {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="cap on worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion", help="omega^2(kh) with certified error")
    _add_params(p)
    p.add_argument("--kh", type=float, default=None, help="single wavenumber (with --point)")
    p.add_argument("--point", action="store_true", help="evaluate at --kh only")
    p.add_argument("--kh-min", type=float, default=0.0)
    p.add_argument("--kh-max", type=float, default=20.0)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--fast", action="store_true", help="double-precision phases (looser bounds)")
    _add_output(p)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("density", help="long-wave density of states")
    _add_params(p)
    p.add_argument("--kh-lo", type=float, default=1e-4)
    p.add_argument("--kh-hi", type=float, default=1e-2)
    p.add_argument("--n", type=int, default=16)
    _add_output(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("kernel", help="convolution kernel g(|x|)")
    _add_params(p)
    p.add_argument("--x-min", type=float, default=0.01)
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--n", type=int, default=200)
    _add_output(p)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("dimension", help="box-counting dimension of the dispersion curve")
    _add_params(p)
    p.add_argument("--kh-min", type=float, default=0.01)
    p.add_argument("--kh-max", type=float, default=100.0)
    p.add_argument("--n", type=int, default=2**18 + 1)
    p.add_argument("--tol", type=float, default=1e-8)
    _add_output(p)
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("simulate", help="evolve the self-similar wave equation")
    _add_params(p, presets=False)
    p.add_argument("--preset", dest="sim_preset", choices=["mode", "gaussian", "random"], default="mode")
    p.add_argument("--method", choices=["spectral", "realspace"], default="spectral")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--dt", type=float, default=None, help="time step (default: --dt-fraction of the limit)")
    p.add_argument("--dt-fraction", type=float, default=0.25)
    p.add_argument("--grid", type=int, default=64, help="number of samples")
    p.add_argument("--dx", type=float, default=1.0)
    p.add_argument("--interp", choices=["fourier", "lagrange"], default="fourier")
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--snapshots", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--fields", default=None, help="also write t,x,u,v rows to this CSV path")
    _add_output(p)
    p.set_defaults(func=cmd_simulate, delta_default=1.0)

    p = sub.add_parser("check", help="run the invariant battery")
    p.add_argument("--quick", action="store_true", help="reduced sizes (a few seconds)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="re-run a JSON run record")
    p.add_argument("record")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_replay)
    return parser


def _subparsers(parser: argparse.ArgumentParser) -> dict:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["SELFSIM_THREADS"] = str(max(1, args.threads))
    if args.command == "simulate" and args.delta is None:
        args.delta = args.delta_default
    try:
        return args.func(args)
    except CliError as exc:
        print(f"selfsim {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (BandError, SamplingError, ValueError) as exc:
        print(f"selfsim {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergenceError, InstabilityError, ArithmeticError) as exc:
        print(f"selfsim {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
