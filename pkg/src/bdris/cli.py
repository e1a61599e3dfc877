"""
Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__
from .channels import RngStream, ScenarioChannels, rayleigh_vector
from .config import load_config
from .errors import Infeasible, InvalidConfig, RISError
from .harness import Geometry, run_sweep
from .io import read_channels, write_theta
from .scaling import (
    asymptotic_kappa,
    expected_power_los,
    expected_power_rayleigh,
    expected_power_two_operator_rayleigh,
    single_operator_ratio,
)
from .solver import (
    RisArchitecture,
    block_unitarity_error,
    constraint_residuals,
    generate_targets,
    solve,
)
from .svg import sweep_svg
from .validate import MIN_STATS_TRIALS, oracle_suite, scaling_suite, stats_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _dbm(watts):
    return 10.0 * math.log10(watts * 1e3) if watts > 0 else -math.inf


def _arch_for(N, args):
    if args.Gs is not None:
        return RisArchitecture.from_group_size(N, args.Gs)
    if args.G is not None:
        return RisArchitecture.from_groups(N, args.G)
    return RisArchitecture(N, N, 1)


def cmd_solve(args):
    if args.channels:
        channels, targets = read_channels(args.channels)
        arch = _arch_for(channels.N, args)
    else:
        if args.N is None:
            _err("--random needs --N")
            return EXIT_USAGE
        arch = _arch_for(args.N, args)
        rho_ri, rho_it = Geometry().gains(args.L)
        rng = RngStream.for_key(args.seed, "solve").generator()
        h_RI = rayleigh_vector(arch.N, rho_ri, rng)
        h_IT = [rayleigh_vector(arch.N, rho, rng) for rho in rho_it]
        channels = ScenarioChannels(h_RI, h_IT)
        targets = generate_targets(channels, arch, rng)
    h_RT = channels.h_RT
    if args.direct_path is not None:
        h_RT = complex(args.direct_path.replace(" ", ""))
    try:
        sol = solve(channels, targets, arch, direct_path=h_RT if h_RT != 0 else None)
    except Infeasible as exc:
        _err(str(exc))
        if exc.report is not None:
            print(exc.report.summary(), file=sys.stderr)
        return EXIT_USAGE
    watts = args.P_T * sol.optimal_power
    res = constraint_residuals(sol.Theta, channels, targets)
    print(f"architecture      {arch.name} (N={arch.N}, G={arch.G}, Gs={arch.Gs}, L={channels.L})")
    print(f"branch            {sol.branch}")
    print(f"optimal_power_W   {watts:.16e}")
    print(f"optimal_power_dBm {_dbm(watts):.6f}")
    print(f"gamma             {sol.gamma.real:.16e}{sol.gamma.imag:+.16e}j")
    print(f"max_constraint_residual {res.max():.3e}")
    print(f"max_unitarity_error     {block_unitarity_error(sol.Theta, arch):.3e}")
    if np.allclose(sol.Theta, np.eye(arch.N), atol=1e-12, rtol=0):
        print("Theta             identity")
    if args.theta_out:
        write_theta(args.theta_out, sol.Theta, arch.G, arch.Gs)
        print(f"theta written to  {args.theta_out}")
    return EXIT_OK


def cmd_sweep(args):
    config, paths = load_config(args.config)
    if args.seed is not None:
        config = type(config)(**{**config.__dict__, "seed": args.seed})
    out = args.out or paths.csv
    svg = args.svg or paths.svg
    if not out:
        raise InvalidConfig("csv", "no output path (use --out or [output] csv)")
    result = run_sweep(config)
    result.write_csv(out)
    print(f"wrote {len(result.rows)} rows to {out}")
    if svg:
        with open(svg, "w", newline="\n") as fh:
            fh.write(sweep_svg(result))
        print(f"wrote chart to {svg}")
    return EXIT_OK



def _theorem_gs(args, N):
    """Group size implied by --case/--Gs/--G, validated against the case condition."""
    L = args.L
    if args.Gs is not None:
        Gs = args.Gs
    elif args.G is not None:
        if N % args.G:
            raise InvalidConfig("G", f"G={args.G} does not divide N={N}")
        Gs = N // args.G
    elif args.case == "i":
        Gs = N
    elif args.case == "iii":
        Gs = 1 if args.theorem != 3 else None
    else:
        Gs = None
    if Gs is None:
        raise InvalidConfig("Gs", f"case {args.case or '?'} needs --Gs or --G")
    if N % Gs:
        raise InvalidConfig("Gs", f"Gs={Gs} does not divide N={N}")
    case = args.case
    if case is None:
        return Gs
    if args.theorem == 3:
        ok = {"i": Gs == N and Gs >= L, "ii": L <= Gs, "iii": Gs < L}[case]
        cond = {"i": "Gs = N >= L", "ii": "Gs >= L", "iii": "Gs < L"}[case]
    else:
        ok = {"i": Gs == N and N >= 2, "ii": 2 <= Gs, "iii": Gs == 1}[case]
        cond = {"i": "Gs = N", "ii": "Gs >= 2", "iii": "Gs = 1"}[case]
    if not ok:
        raise InvalidConfig("case", f"case {case} requires {cond}; got Gs={Gs}, L={L}, N={N}")
    return Gs


def cmd_analytic(args):
    if args.kappa:
        if args.Gs is None and not args.full:
            raise InvalidConfig("Gs", "--kappa needs --Gs (or --full)")
        k = asymptotic_kappa("full" if args.full else args.Gs, args.L, args.channel)
        print(f"{k:.16e}")
        return EXIT_OK
    if args.ratio:
        if args.Gs is None:
            raise InvalidConfig("Gs", "--ratio needs --Gs")
        print(f"{single_operator_ratio(args.Gs, args.L):.16e}")
        return EXIT_OK
    if args.theorem is None:
        raise InvalidConfig("theorem", "choose --theorem, --kappa or --ratio")
    if not args.N:
        raise InvalidConfig("N", "--theorem needs --N")
    if args.theorem in (1, 2) and args.L != 2:
        raise InvalidConfig("L", f"theorem {args.theorem} is stated for L = 2")
    if args.theorem == 2 and args.dmu is None:
        raise InvalidConfig("dmu", "theorem 2 needs --dmu")
    lines = ["N,Gs,L,expected_power"]
    for N in args.N:
        Gs = _theorem_gs(args, N)
        if args.theorem == 1:
            val = expected_power_two_operator_rayleigh(N, Gs, args.rho_RI, args.rho_IT1)
        elif args.theorem == 2:
            val = expected_power_los(N, Gs, args.dmu, 2, args.rho_RI, args.rho_IT1)
        else:
            val = expected_power_rayleigh(N, Gs, args.L, args.rho_RI, args.rho_IT1)
        lines.append(f"{N},{Gs},{args.L},{val:.16e}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_validate(args):
    if args.suite == "oracle":
        checks = oracle_suite(args.seed, args.samples)
    elif args.suite == "stats":
        checks = stats_suite(args.seed, args.trials)
    else:
        checks = scaling_suite()
    for c in checks:
        print(c.line())
    if any(c.status == "FAIL" for c in checks):
        return EXIT_FAIL
    if any(c.status == "INCONCLUSIVE" for c in checks):
        print(f"warning: fewer than {MIN_STATS_TRIALS} trials per cell; statistical checks are inconclusive",
              file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bdris", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=f"bdris {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--channels", help="channel file (header 'N L', tagged rows)")
    src.add_argument("--random", action="store_true", help="draw a Rayleigh instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--N", type=int)
    s.add_argument("--G", type=int, help="number of groups")
    s.add_argument("--Gs", type=int, help="group size (alternative to --G)")
    s.add_argument("--L", type=int, default=2)
    s.add_argument("--P-T", dest="P_T", type=float, default=10.0, help="transmit power [W]")
    s.add_argument("--direct-path", help="direct BS-user coefficient, e.g. 1e-5+2e-6j")
    s.add_argument("--theta-out", help="write the scattering matrix here")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="Monte Carlo sweep from a config file")
    w.add_argument("--config", required=True)
    w.add_argument("--out", help="CSV path (overrides [output] csv)")
    w.add_argument("--svg", help="SVG chart path")
    w.add_argument("--seed", type=int, help="override the config seed")
    w.set_defaults(func=cmd_sweep)

    a = sub.add_parser("analytic", help="evaluate the closed-form expected power")
    a.add_argument("--theorem", type=int, choices=(1, 2, 3))
    a.add_argument("--case", choices=("i", "ii", "iii"))
    a.add_argument("--N", type=int, nargs="+")
    a.add_argument("--G", type=int)
    a.add_argument("--Gs", type=int)
    a.add_argument("--full", action="store_true", help="fully connected (for --kappa)")
    a.add_argument("--L", type=int, default=2)
    a.add_argument("--dmu", type=float, help="spatial-frequency gap for theorem 2 [rad]")
    a.add_argument("--rho-RI", dest="rho_RI", type=float, default=1.0)
    a.add_argument("--rho-IT1", dest="rho_IT1", type=float, default=1.0)
    a.add_argument("--kappa", action="store_true", help="print the large-N coefficient")
    a.add_argument("--ratio", action="store_true", help="print the multi/single-operator ratio")
    a.add_argument("--channel", choices=("rayleigh", "los"), default="rayleigh")
    a.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    a.set_defaults(func=cmd_analytic)

    v = sub.add_parser("validate", help="run self-check suites")
    v.add_argument("--suite", choices=("oracle", "stats", "scaling"), required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=200_000, help="trials per cell (stats)")
    v.add_argument("--samples", type=int, default=10_000, help="feasible samples (oracle)")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_USAGE
    except (RISError, ValueError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
