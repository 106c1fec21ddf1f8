"""Command-line front end (``sideband-sim``)."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config_io import config_hash, load_config
from .ensemble import AtomicConfig, dynamics_traces
from .errors import CapacityError, ConfigError, SidebandError
from .lindblad import FockDims, steady_density, truncation_check
from .linearization import (Equilibrium, expansion_residual, linearize, linearized_params,
                            real_equilibria)
from .model import Generalized
from .rate_dynamics import MomentState, evolve_moments, generator, propagate_exact
from .sweep import (ENGINES, PARAMETERS, EngineOptions, SweepSpec, _format,
                    _timestamp, format_point_report, run_point, run_sweep)

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_CAPACITY = 0, 1, 2, 3, 4


def _engines(text):
    names = tuple(e.strip() for e in text.split(",") if e.strip())
    bad = [e for e in names if e not in ENGINES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"engines must be a comma list from {','.join(ENGINES)}")
    return names


def _pair(text):
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two integers 'm,n'") from None
    return m, n


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma list of integers") from None


def _dims(text):
    try:
        a, b = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected dims as 'AxB'") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML config file")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $SIDEBAND_SIM_THREADS or 1)")
    common.add_argument("--tol", type=float, default=1e-3,
                        help="truncation / convergence tolerance (default 1e-3)")

    parser = argparse.ArgumentParser(
        prog="sideband-sim",
        description="Steady states, dynamics and sweeps for two-mode sideband cooling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", parents=[common], help="single-point steady-state report")
    p.add_argument("--engines", type=_engines, default=("closed_form", "rate"))
    p.add_argument("--n-traj", type=int, default=2000, help="langevin trajectories")
    p.add_argument("--json", action="store_true", help="print the machine-readable report")

    p = sub.add_parser("evolve", parents=[common], help="rate-equation time evolution")
    p.add_argument("--t-final", type=float, default=None,
                   help="end time (default: 15 slowest relaxation times)")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--method", choices=("rk", "exact"), default="rk",
                   help="adaptive Runge-Kutta or matrix exponential")
    p.add_argument("--n-a0", type=float, default=None, help="initial n_a (default: bath)")
    p.add_argument("--n-b0", type=float, default=None, help="initial n_b (default: bath)")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    p.add_argument("--parameter", choices=PARAMETERS, required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--spacing", choices=("linear", "log"), default="linear")
    p.add_argument("--engines", type=_engines, default=("closed_form", "rate"))
    p.add_argument("--n-traj", type=int, default=2000, help="langevin trajectories per point")

    p = sub.add_parser("lindblad", parents=[common], help="master-equation steady state")
    p.add_argument("--dims", type=_dims, default=None,
                   help="Fock dims 'AxB' (default: automatic truncation check)")

    p = sub.add_parser("ensemble", parents=[common],
                       help="N-atom vs two-mode dynamics comparison")
    p.add_argument("--atoms", type=_int_list, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--excitations", type=_pair, default=(0, 1), help="initial 'm_a,n_b'")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--omega-b", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.5, help="drive coupling")
    p.add_argument("--t-final", type=float, default=10.0)
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("linearize", parents=[common],
                       help="equilibria and effective parameters of a generalized config")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _metadata(**items) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in items.items())


def _need_config(args):
    if not args.config:
        raise ConfigError("--config is required for this command", field="config")
    return load_config(args.config)


def _threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("SIDEBAND_SIM_THREADS", "1") or 1)


def cmd_steady(args):
    config = _need_config(args)
    options = EngineOptions(tol=args.tol, seed=args.seed, n_traj=args.n_traj)
    report = run_point(config, args.engines, options)
    if args.json or (args.out and args.out.endswith(".json")):
        text = json.dumps(report, indent=2, default=float) + "\n"
    else:
        text = format_point_report(report) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_evolve(args):
    config = _need_config(args)
    initial = MomentState(config.n_a if args.n_a0 is None else args.n_a0,
                          config.n_b if args.n_b0 is None else args.n_b0, 0j)
    t_final = args.t_final
    if t_final is None:
        A, _ = generator(config)
        t_final = 15.0 / float(np.min(-np.linalg.eigvals(A).real))
    if args.method == "exact":
        traj = propagate_exact(initial, config, np.linspace(0.0, t_final, args.points))
    else:
        traj = evolve_moments(initial, config, t_final, rel_tol=min(1e-8, args.tol),
                              n_points=args.points)
    lines = [_metadata(tool=f"sideband_sim {__version__}", timestamp=_timestamp(args.config),
                       config_hash=config_hash(config), method=args.method),
             "t,n_a,n_b,re_sigma,im_sigma\n"]
    for t, s in zip(traj.times, traj.states):
        lines.append(",".join(_format(v) for v in (t, s.n_a, s.n_b, s.sigma.real, s.sigma.imag))
                     + "\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_sweep(args):
    spec = SweepSpec(args.parameter, args.start, args.stop, args.points, args.spacing,
                     args.engines)
    if not args.config:
        raise ConfigError("--config is required for this command", field="config")
    options = EngineOptions(tol=args.tol, seed=args.seed, n_traj=args.n_traj)
    result = run_sweep(args.config, spec, None, options, threads=_threads(args))
    _emit(result.to_csv(), args.out)
    if result.all_failed:
        print("error: every grid point failed; see the reason column", file=sys.stderr)
        return EXIT_ALL_FAILED
    return EXIT_OK


def cmd_lindblad(args):
    config = _need_config(args)
    if args.dims:
        dims = FockDims(*args.dims)
    else:
        dims = truncation_check(config, tol=args.tol)
    sol = steady_density(config, dims, truncation_flag=args.dims is None)
    rho = sol.rho
    pa, pb = rho.marginals()
    lines = [_metadata(tool=f"sideband_sim {__version__}", timestamp=_timestamp(args.config),
                       config_hash=config_hash(config), dims=f"{dims.dim_a}x{dims.dim_b}",
                       method=sol.method, n_a=_format(sol.n_a), n_b=_format(sol.n_b),
                       residual=_format(sol.residual),
                       trace_deviation=_format(rho.trace_deviation()),
                       hermiticity_deviation=_format(rho.hermiticity_deviation()),
                       min_eigenvalue=_format(rho.min_eigenvalue())),
             "level,p_a,p_b\n"]
    for k in range(max(dims.dim_a, dims.dim_b)):
        p_a = pa[k] if k < dims.dim_a else 0.0
        p_b = pb[k] if k < dims.dim_b else 0.0
        lines.append(f"{k},{_format(p_a)},{_format(p_b)}\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


def cmd_ensemble(args):
    if args.points < 2 or not args.t_final > 0:
        raise ConfigError("need --points >= 2 and --t-final > 0", field="t_final")
    times = np.linspace(0.0, args.t_final, args.points)
    rows, summary = [], []
    for n_atoms in args.atoms:
        cfg = AtomicConfig(n_atoms, args.delta, args.omega_b, args.omega)
        tr = dynamics_traces(cfg, args.excitations, times)
        summary.append(f"# max_deviation N={n_atoms}: {_format(tr.deviation)}\n")
        for t, x, y in zip(tr.times, tr.atomic, tr.bosonic):
            rows.append(f"{n_atoms},{_format(t)},{_format(x)},{_format(y)},{_format(abs(x - y))}\n")
    m, n = args.excitations
    head = _metadata(tool=f"sideband_sim {__version__}", timestamp=_timestamp(None),
                     excitations=f"{m},{n}", delta=args.delta, omega_b=args.omega_b,
                     omega=args.omega)
    _emit(head + "".join(summary) + "N,t,n_b_atomic,n_b_bosonic,abs_deviation\n" + "".join(rows),
          args.out)
    return EXIT_OK


def cmd_linearize(args):
    config = _need_config(args)
    c = config.coupling
    if not isinstance(c, Generalized):
        raise ConfigError("linearize needs coupling.kind = \"generalized\"", field="coupling.kind")
    delta0, omega_b = config.delta, config.omega_b
    roots = real_equilibria(c.f_spec, c.g_prime, c.f_drive, delta0, omega_b)
    lines = [f"# tool: sideband_sim {__version__}\n",
             f"# config_hash: {config_hash(config)}\n",
             f"# real equilibria: {len(roots)}\n",
             "root,default,alpha_re,alpha_im,beta_re,beta_im,delta_eff,g_eff,"
             "stationarity_residual,linear_residual,quadratic_mismatch\n"]
    if not roots:
        # no real root: fall back to the complex solution of the fixed point
        lin = linearize(c.f_spec, c.g_prime, c.f_drive, delta0, omega_b)
        roots = [Equilibrium(lin.alpha, lin.beta, lin.residual, default=True)]
    for i, eq in enumerate(roots):
        d_eff, g_eff = linearized_params(c.f_spec, c.g_prime, eq.alpha, eq.beta, delta0)
        res = expansion_residual(c.f_spec, c.g_prime, c.f_drive, delta0, omega_b,
                                 eq.alpha, eq.beta)
        vals = (eq.alpha.real, eq.alpha.imag, eq.beta.real, eq.beta.imag, d_eff, g_eff,
                eq.residual, res.linear, res.quadratic)
        lines.append(f"{i},{'yes' if eq.default else 'no'},"
                     + ",".join(_format(v) for v in vals) + "\n")
    _emit("".join(lines), args.out)
    return EXIT_OK


COMMANDS = {"steady": cmd_steady, "evolve": cmd_evolve, "sweep": cmd_sweep,
            "lindblad": cmd_lindblad, "ensemble": cmd_ensemble, "linearize": cmd_linearize}


def _describe(exc: ConfigError) -> str:
    where = []
    if exc.line is not None and f"line {exc.line}" not in str(exc):
        where.append(f"line {exc.line}, column {exc.column}")
    if getattr(exc, "field", None) and exc.field not in str(exc):
        where.append(f"field {exc.field}")
    return f"{exc}" + (f" ({'; '.join(where)})" if where else "")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {_describe(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (SidebandError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
