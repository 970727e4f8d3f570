import argparse
import os
import sys
from datetime import datetime
from typing import List, Optional

import numpy as np

from coefficients import COEFFICIENT_NAMES, builtin_coefficient
from config import config
from convergence import (ConvergenceHarness, ErrorTarget, ReferenceKind,
                         SweepSpec, emit_csv, emit_frame, emit_trajectory_csv,
                         phase_convergence_study)
from phase_model import (BetaSource, PhaseMethod, build_phase,
                         check_admissibility)
from wkb_solver import InitialData, SchemeConfig, WKBSolver

PHASE_CHOICES = [m.value for m in PhaseMethod]


def _float_csv(raw: str) -> List[float]:
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {raw!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _complex(raw: str) -> complex:
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {raw!r}")


class ExperimentRunner:
    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = config.OUTPUT_DIR if output_dir is None else output_dir

    def _log(self, message: str):
        timestamp = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        print(f"[{timestamp}] {message}")

    def _default_path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def solve(self, args) -> int:
        coeff = builtin_coefficient(args.coefficient)
        report = check_admissibility(coeff, args.epsilon)
        self._log(f"[ADMISSIBLE] a0_min={report.a0_min:.6g} "
                  f"epsilon1={report.epsilon1:.6g} admissible={report.admissible}")
        if not report.admissible:
            raise ValueError(f"not admissible: {report.reason}")

        scheme = SchemeConfig.from_step(args.h, args.order, args.epsilon, args.phase,
                                        n_cheb=args.cheb_n, beta_source=args.beta_source)
        phase = build_phase(coeff, args.epsilon, scheme.phase_method,
                            n_cheb=args.cheb_n, beta_source=scheme.beta_source)
        self._log(f"[PHASE] {phase!r} min phi'={phase.min_slope():.6g} "
                  f"sup|beta|={phase.beta_sup():.6g}")

        data = InitialData(args.phi0, args.phi1)
        traj = WKBSolver(scheme, coeff, phase).solve(data, stride=args.stride)
        norm_u, norm_z = traj.norms()
        self._log(f"[SOLVE] {len(traj)} nodes, order {scheme.order}, "
                  f"max | |U|-|Z| | = {np.max(np.abs(norm_u - norm_z)):.3e}")

        out = args.out or self._default_path(
            f"solve_{args.coefficient}_eps{args.epsilon:g}_h{args.h:g}_o{args.order}.csv")
        emit_trajectory_csv(traj, out)
        self._log(f"Wrote {out}")
        return 0

    def convergence(self, args) -> int:
        spec = SweepSpec(
            coefficient=args.coefficient,
            epsilons=args.epsilon_list or list(config.EPSILONS),
            h_list=args.h_list,
            order=args.order,
            phase_method=args.phase,
            target=args.target,
            reference=args.reference,
            data=InitialData(args.phi0, args.phi1),
            n_cheb=args.cheb_n,
            beta_source=args.beta_source
        )
        harness = ConvergenceHarness(n_jobs=args.jobs, refine=args.refine)
        records = harness.run_sweep(spec)
        harness.order_summary(records, spec.target)

        out = args.out or self._default_path(
            f"convergence_{args.coefficient}_o{args.order}_{args.phase}.csv")
        emit_csv(records, out)
        self._log(f"Wrote {out}")
        return 0

    def phase_check(self, args) -> int:
        if args.n_max < args.n_min:
            raise ValueError("--n-max must be >= --n-min")
        coeff = builtin_coefficient(args.coefficient)
        table, coeffs = phase_convergence_study(coeff, range(args.n_min, args.n_max + 1))
        for row in table.itertuples():
            self._log(f"[PHASE] N={row.N:3d} quadrature={row.quadrature_error:.3e} "
                      f"interpolation={row.interpolation_error:.3e}")

        out = args.out or self._default_path(f"phase_check_{args.coefficient}.csv")
        stem, ext = os.path.splitext(out)
        emit_frame(table, out)
        emit_frame(coeffs, f"{stem}_coeffs{ext or '.csv'}")
        self._log(f"Wrote {out} and {stem}_coeffs{ext or '.csv'}")
        return 0


def _add_scheme_args(parser: argparse.ArgumentParser):
    parser.add_argument("--coefficient", choices=COEFFICIENT_NAMES, default=config.COEFFICIENT)
    parser.add_argument("--order", type=int, choices=[1, 2], default=2)
    parser.add_argument("--phase", choices=PHASE_CHOICES, default=PhaseMethod.SPECTRAL.value)
    parser.add_argument("--cheb-n", type=int, default=None)
    parser.add_argument("--beta-source", choices=[b.value for b in BetaSource],
                        default=BetaSource.SPECTRAL.value)
    parser.add_argument("--phi0", type=_complex, default=1.0, help="phi(0)")
    parser.add_argument("--phi1", type=_complex, default=-1j, help="eps * phi'(0)")
    parser.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wkb-marching",
        description="WKB marching schemes for eps^2 phi'' + a(x) phi = 0"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="march one trajectory and dump it as CSV")
    _add_scheme_args(solve)
    solve.add_argument("--epsilon", type=float, required=True)
    solve.add_argument("--h", type=float, required=True)
    solve.add_argument("--stride", type=int, default=1)

    conv = sub.add_parser("convergence", help="error against h for several epsilon")
    _add_scheme_args(conv)
    conv.add_argument("--epsilon-list", type=_float_csv, default=None)
    conv.add_argument("--h-list", type=_float_csv, default=None)
    conv.add_argument("--target", choices=[t.value for t in ErrorTarget],
                      default=ErrorTarget.U.value)
    conv.add_argument("--reference", choices=[r.value for r in ReferenceKind],
                      default=ReferenceKind.SELF.value)
    conv.add_argument("--refine", type=int, default=None)
    conv.add_argument("--jobs", type=int, default=None)

    check = sub.add_parser("phase-check", help="spectral phase accuracy against N")
    check.add_argument("--coefficient", choices=COEFFICIENT_NAMES, default="gauss")
    check.add_argument("--n-min", type=int, default=2)
    check.add_argument("--n-max", type=int, default=30)
    check.add_argument("--out", default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    runner = ExperimentRunner()
    handlers = {
        "solve": runner.solve,
        "convergence": runner.convergence,
        "phase-check": runner.phase_check
    }
    try:
        config.validate()
        return handlers[args.command](args)
    except (ValueError, KeyError, NotImplementedError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
