"""Command-line driver.

    lamelax verify --example sphere
    lamelax lax --problem sphere.txt --variant CC
    lamelax transport --example sphere --variant CC --rect u1 0.3 1.2 u2 0.5 1.5 --steps 256
    lamelax pencil --example flat_pencil_sqrt --lambda 0.5 --lambda 1 --lambda 2
    lamelax dump --example sphere

Exit codes: 0 pass, 1 residual above tolerance, 2 configuration, parse or
pole error (reported as a single "ERROR <message>" line).
"""

from __future__ import annotations

import argparse
import itertools
import sys

import numpy as np

from . import problemfile
from .catalog import NAMES, get_example
from .errors import LameLaxError, SpectralPole
from .fields import SymbolicBackend, fmt_point, make_backend, values_on
from .geometry import (CONDITIONS, bracket_condition_residuals, metric_compatibility_check, pencil_bracket,
                       pencil_eigenvalues)
from .lax import (VARIANTS, Rectangle, build_connection, default_lambda_samples, mono_line,
                  monodromy_defect, zero_curvature_residual)
from .report import fmt_complex, fmt_value
from .residuals import verify_problem

DEFAULT_TOL = {"symbolic": 1e-9, "fd": 1e-4}
TRANSPORT_TOL = 1e-8
PENCIL_LAMBDAS = (0.5, 1.0, 2.0)


class UsageError(Exception):
    pass


def _load(args):
    if args.example is not None:
        p = get_example(args.example).problem
    else:
        p = problemfile.read(args.problem)
    if args.grid is not None:
        if args.grid < 3:
            raise UsageError("--grid needs at least 3 nodes per axis")
        p = p.with_grid(p.grid.with_nodes(args.grid))
    return p


def _tol(args):
    return args.tol if args.tol is not None else DEFAULT_TOL[args.backend]


def cmd_verify(args) -> int:
    p = _load(args)
    report = verify_problem(p, make_backend(args.backend, p.grid))
    for line in report.lines():
        print(line)
    return 0 if report.max() <= _tol(args) else 1


def _spectral_range(p, lo, hi) -> None:
    """A real lambda range meeting [-max f, -min f] crosses a pole."""
    if p.pencil is None:
        return
    vals = np.concatenate([values_on(SymbolicBackend().lift(fi), p.grid).ravel() for fi in p.pencil.f])
    if np.any(np.abs(vals.imag) > 0):
        return
    if lo <= -vals.real.min() and hi >= -vals.real.max():
        raise SpectralPole(f"lambda range [{fmt_complex(lo)}, {fmt_complex(hi)}] crosses "
                           f"-f^i, which spans [{fmt_complex(-vals.real.max())}, {fmt_complex(-vals.real.min())}]")


def _lambda_samples(args, p, spectral: bool) -> list:
    given = (args.lambda_min, args.lambda_max)
    if all(x is None for x in given):
        return default_lambda_samples(p)
    if any(x is None for x in given):
        raise UsageError("--lambda-min and --lambda-max go together")
    lo, hi = given
    if hi < lo:
        raise UsageError("--lambda-max is below --lambda-min")
    if args.lambda_samples < 1:
        raise UsageError("--lambda-samples must be positive")
    if spectral:
        _spectral_range(p, lo, hi)
    return [complex(x) for x in np.linspace(lo, hi, args.lambda_samples)]


def cmd_lax(args) -> int:
    p = _load(args)
    c = build_connection(args.variant, p, make_backend(args.backend, p.grid), args.K1, args.K2)
    report = zero_curvature_residual(c, _lambda_samples(args, p, c.spectral))
    for line in report.lines():
        print(line)
    return 0 if report.max() <= _tol(args) else 1


def _rect(args, p) -> Rectangle:
    if args.rect is None:
        # middle half of the (u1, u2) box
        (a, b, _), (c, d, _) = p.grid.axes[:2]
        return Rectangle((0, 1), (a + (b - a) / 4, c + (d - c) / 4), (b - (b - a) / 4, d - (d - c) / 4))
    ax1, a, b, ax2, c, d = args.rect
    axes = []
    for ax in (ax1, ax2):
        if not (ax.startswith("u") and ax[1:].isdigit() and 1 <= int(ax[1:]) <= p.N):
            raise UsageError(f"--rect axis {ax!r} is not one of u1..u{p.N}")
        axes.append(int(ax[1:]) - 1)
    if axes[0] == axes[1]:
        raise UsageError("--rect needs two different axes")
    try:
        lower, upper = (float(a), float(c)), (float(b), float(d))
    except ValueError:
        raise UsageError("--rect bounds must be numbers") from None
    rect = Rectangle(tuple(axes), lower, upper)
    if not rect.inside(p.grid):
        raise UsageError("--rect leaves the problem domain")
    return rect


def cmd_transport(args) -> int:
    p = _load(args)
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    if args.backend != "symbolic":
        raise UsageError("transport integrates closed-form connections; use --backend symbolic")
    c = build_connection(args.variant, p, "symbolic", args.K1, args.K2)
    lam = None
    if c.spectral:
        lam = complex(args.lambda_[0]) if args.lambda_ else default_lambda_samples(p)[8]
    defect = monodromy_defect(c, _rect(args, p), lam, args.steps)
    print(mono_line(args.variant, lam, args.steps, defect))
    tol = args.tol if args.tol is not None else TRANSPORT_TOL
    return 0 if defect <= tol else 1


def cmd_pencil(args) -> int:
    p = _load(args)
    if p.pencil is None:
        raise UsageError("problem has no pencil section")
    lams = [complex(x) for x in (args.lambda_ or PENCIL_LAMBDAS)]
    tol = _tol(args)
    backend = make_backend(args.backend, p.grid)
    worst = 0.0

    # eigenvalues of (f g, g) must reproduce f at every node
    g2 = p.frame.contravariant()
    g1 = [fi * gi for fi, gi in zip(p.pencil.f, g2)]
    f_vals = [values_on(SymbolicBackend().lift(fi), p.grid) for fi in p.pencil.f]
    dev, coincide = 0.0, 0
    for index in itertools.product(*(range(n) for n in p.grid.shape)):
        roots = pencil_eigenvalues(g1, g2, p.grid.point(index))
        expect = sorted((complex(v[index]) for v in f_vals), key=lambda z: (z.real, z.imag))
        dev = max(dev, max(abs(r - e) for r, e in zip(roots, expect)))
        coincide += any(abs(a - b) <= 1e-8 for a, b in itertools.combinations(roots, 2))
    print(f"EIG max_deviation={fmt_value(dev)} coincident_nodes={coincide}")
    worst = max(worst, dev)

    compat = metric_compatibility_check(p.frame, p.pencil, lams, p.grid, backend)
    for line in compat.lines():
        print(line)
    worst = max(worst, compat.max())

    for lam in lams:
        bc = pencil_bracket(p.frame, p.pencil, p.nl1, p.nl2, lam, backend)
        report = bracket_condition_residuals(bc, p.grid, backend)
        for tag in CONDITIONS:
            e = report[tag]
            print(f"PENCIL lambda={fmt_complex(lam)} cond=({tag}) max={fmt_value(e.max)} at={fmt_point(e.at)}")
        worst = max(worst, report.max())
    return 0 if worst <= tol else 1


def cmd_dump(args) -> int:
    sys.stdout.write(problemfile.dump(_load(args)))
    return 0


def cmd_list(args) -> int:
    for name in NAMES:
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lamelax", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, tol=True):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--problem", help="problem file")
        src.add_argument("--example", help=f"catalog entry ({', '.join(NAMES)})")
        sp.add_argument("--grid", type=int, help="nodes per axis, overriding the file")
        sp.add_argument("--backend", choices=("symbolic", "fd"), default="symbolic")
        if tol:
            sp.add_argument("--tol", type=float, help="pass threshold (default 1e-9 symbolic, 1e-4 fd)")

    def curvature(sp):
        sp.add_argument("--variant", required=True, choices=VARIANTS)
        sp.add_argument("--K1", type=complex, help="bracket-1 curvature for CC variants")
        sp.add_argument("--K2", type=complex, help="bracket-2 curvature for CC variants")

    sp = sub.add_parser("verify", help="residuals of the nonlinear system")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("lax", help="zero-curvature residuals of a Lax connection")
    common(sp)
    curvature(sp)
    sp.add_argument("--lambda-min", type=float)
    sp.add_argument("--lambda-max", type=float)
    sp.add_argument("--lambda-samples", type=int, default=16)
    sp.set_defaults(func=cmd_lax)

    sp = sub.add_parser("transport", help="monodromy defect around a rectangle")
    common(sp, tol=False)
    curvature(sp)
    sp.add_argument("--tol", type=float, help="defect threshold (default 1e-8)")
    sp.add_argument("--rect", nargs=6, metavar=("UI", "A", "B", "UJ", "C", "D"))
    sp.add_argument("--steps", type=int, default=256, help="RK4 steps per edge")
    sp.add_argument("--lambda", dest="lambda_", type=complex, action="append")
    sp.set_defaults(func=cmd_transport)

    sp = sub.add_parser("pencil", help="compatibility checks of the metric pencil")
    common(sp)
    sp.add_argument("--lambda", dest="lambda_", type=complex, action="append",
                    help="combination parameter (repeatable; default 0.5, 1, 2)")
    sp.set_defaults(func=cmd_pencil)

    sp = sub.add_parser("dump", help="print the canonical problem file")
    common(sp, tol=False)
    sp.set_defaults(func=cmd_dump)

    sp = sub.add_parser("list", help="list catalog entries")
    sp.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LameLaxError, UsageError, ValueError) as exc:
        print(f"ERROR {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
