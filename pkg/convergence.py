import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from chebyshev import (antiderivative_coeffs, barycentric_eval, cheb_coeffs,
                       cheb_nodes)
from coefficients import BaseCoefficient, builtin_coefficient
from config import config
from phase_model import (BetaSource, PhaseMethod, beta, build_phase,
                         check_admissibility)
from reference_oracle import (OracleSolution, analytic_reference, rk_reference,
                              self_reference)
from wkb_solver import InitialData, SchemeConfig, Trajectory, WKBSolver

CSV_COLUMNS = ["epsilon", "h", "order", "phase_method", "err_u_inf", "err_z_inf", "flag"]
FLOAT_FORMAT = "%.16e"
MACHINE_FLOOR = 1e-16


class RecordFlag(Enum):
    OK = "ok"
    BELOW_MACHINE = "below_machine"
    FAILED = "failed"


class ErrorTarget(Enum):
    U = "U"
    Z = "Z"


class ReferenceKind(Enum):
    SELF = "self"
    RK = "rk"


@dataclass
class SweepSpec:
    coefficient: str = field(default_factory=lambda: config.COEFFICIENT)
    epsilons: List[float] = field(default_factory=lambda: list(config.EPSILONS))
    h_list: Optional[List[float]] = None
    order: int = 2
    phase_method: PhaseMethod = PhaseMethod.SPECTRAL
    target: ErrorTarget = ErrorTarget.U
    reference: ReferenceKind = ReferenceKind.SELF
    data: InitialData = field(default_factory=InitialData)
    n_cheb: Optional[int] = None
    beta_source: BetaSource = BetaSource.SPECTRAL

    def __post_init__(self):
        self.phase_method = PhaseMethod(self.phase_method)
        self.target = ErrorTarget(self.target)
        self.reference = ReferenceKind(self.reference)
        self.beta_source = BetaSource(self.beta_source)

    def intervals_for(self, epsilon: float) -> List[int]:
        """Grid interval counts N-1 used at this epsilon, coarsest first."""
        if self.h_list is not None:
            return sorted({SchemeConfig.from_step(h, self.order, epsilon).intervals
                           for h in self.h_list})
        sizes = sorted(set(config.GRID_SIZES))
        if epsilon < config.FULL_GRID_EPS:
            sizes = [n for n in sizes if n <= config.SMALL_EPS_MAX_GRID]
        return sizes

    def validate(self) -> Tuple[bool, str]:
        if self.order not in (1, 2):
            return False, f"order {self.order} must be 1 or 2"
        if not self.epsilons:
            return False, "no epsilon values"
        try:
            coeff = builtin_coefficient(self.coefficient)
            for eps in self.epsilons:
                self.intervals_for(eps)
        except (KeyError, ValueError) as exc:
            return False, str(exc)
        for eps in self.epsilons:
            report = check_admissibility(coeff, eps)
            if not report.admissible:
                return False, f"not admissible: {report.reason}"
        return True, "ok"


@dataclass
class ConvergenceRecord:
    epsilon: float
    h: float
    order: int
    phase_method: str
    err_u_inf: float
    err_z_inf: float
    flag: RecordFlag = RecordFlag.OK
    reference: str = ""
    wall_time: float = 0.0

    def error(self, target: ErrorTarget = ErrorTarget.U) -> float:
        return self.err_u_inf if ErrorTarget(target) == ErrorTarget.U else self.err_z_inf


def max_error(values: np.ndarray, reference: np.ndarray) -> float:
    """Max over nodes of the Euclidean norm of the difference."""
    return float(np.max(np.linalg.norm(values - reference, axis=1)))


def _log_line(message: str):
    print(f"[{datetime.now().strftime('%Y-%m-%d %H:%M:%S')}] {message}")


def _restrict(ref: OracleSolution, intervals: int, ref_intervals: int) -> OracleSolution:
    step = ref_intervals // intervals
    z = None if ref.z is None else ref.z[::step]
    return OracleSolution(ref.x[::step], ref.u[::step], ref.method,
                          ref.estimated_accuracy, z)


def _sweep_epsilon(spec: SweepSpec, epsilon: float, refine: int) -> List[ConvergenceRecord]:
    coeff = builtin_coefficient(spec.coefficient)
    intervals = spec.intervals_for(epsilon)
    method = spec.phase_method.value
    try:
        phase = build_phase(coeff, epsilon, spec.phase_method, n_cheb=spec.n_cheb,
                            beta_source=spec.beta_source)
    except (ValueError, NotImplementedError) as exc:
        _log_line(f"[SWEEP] eps={epsilon:g}: phase construction failed: {exc}")
        return [ConvergenceRecord(epsilon, 1.0 / n, spec.order, method, np.nan, np.nan,
                                  RecordFlag.FAILED) for n in intervals]

    def scheme_for(n: int) -> SchemeConfig:
        return SchemeConfig(spec.order, epsilon, n + 1, spec.phase_method,
                            spec.n_cheb, spec.beta_source)

    shared, shared_intervals = None, 0
    common = reduce(lambda a, b: a * b // math.gcd(a, b), intervals, 1)
    use_shared = (coeff.name != "constant" and spec.reference == ReferenceKind.SELF
                  and common * refine <= config.MAX_REFERENCE_STEPS)
    if use_shared:
        _log_line(f"[SWEEP] eps={epsilon:g}: shared reference on {common * refine} steps")
        try:
            shared = self_reference(scheme_for(common), coeff, spec.data, refine,
                                    phase=phase, estimate=False)
            shared_intervals = common
        except (ValueError, RuntimeError, FloatingPointError, MemoryError) as exc:
            _log_line(f"[SWEEP] eps={epsilon:g}: shared reference failed ({exc}), "
                      f"falling back to one reference per h")

    records = []
    for n in intervals:
        started = time.perf_counter()
        try:
            scheme = scheme_for(n)
            if shared is not None:
                ref, tag = _restrict(shared, n, shared_intervals), "self"
            elif coeff.name == "constant":
                ref, tag = analytic_reference(coeff, spec.data, epsilon, scheme.grid), "analytic"
            elif spec.reference == ReferenceKind.RK:
                ref, tag = rk_reference(coeff, spec.data, epsilon, nodes=scheme.grid), "rk"
            else:
                ref = self_reference(scheme, coeff, spec.data, refine, phase=phase,
                                     estimate=False)
                tag = "self"
            traj = WKBSolver(scheme, coeff, phase).solve(spec.data)
            err_u = max_error(traj.u, ref.u)
            err_z = np.nan if ref.z is None else max_error(traj.z, ref.z)
            scale = float(np.max(np.linalg.norm(ref.u, axis=1)))
            flag = RecordFlag.OK
            if err_u == 0.0 or err_u < MACHINE_FLOOR * scale:
                flag = RecordFlag.BELOW_MACHINE
            records.append(ConvergenceRecord(epsilon, scheme.h, spec.order, method,
                                             err_u, err_z, flag, tag,
                                             time.perf_counter() - started))
        except (ValueError, RuntimeError, FloatingPointError) as exc:
            _log_line(f"[SWEEP] eps={epsilon:g} h={1.0 / n:g} failed: {exc}")
            records.append(ConvergenceRecord(epsilon, 1.0 / n, spec.order, method,
                                             np.nan, np.nan, RecordFlag.FAILED, "",
                                             time.perf_counter() - started))
    return records


def sort_records(records: Iterable[ConvergenceRecord]) -> List[ConvergenceRecord]:
    return sorted(records, key=lambda r: (-r.epsilon, -r.h))


def estimate_order(records: Sequence[ConvergenceRecord],
                   target: ErrorTarget = ErrorTarget.U,
                   h_range: Optional[Tuple[float, float]] = None) -> float:
    """Least-squares slope of log(err) against log(h)."""
    points = {}
    for rec in records:
        err = rec.error(target)
        if rec.flag != RecordFlag.OK or not np.isfinite(err) or err <= 0.0:
            continue
        if h_range is not None and not h_range[0] <= rec.h <= h_range[1]:
            continue
        points[rec.h] = err
    if len(points) < 3:
        raise ValueError(f"need >= 3 usable records with distinct h, got {len(points)}")
    h = np.array(sorted(points))
    err = np.array([points[v] for v in h])
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


def phase_convergence_study(coeff: BaseCoefficient,
                            n_list: Sequence[int],
                            n_eval: int = 1000) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Clenshaw-Curtis accuracy of int_0^1 sqrt(a) against the polynomial degree N.

    Returns the per-N table (quadrature and interpolation errors) and the
    magnitudes of the Chebyshev coefficients of both antiderivatives.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("N values must be strictly ascending")
    lo, hi = coeff.domain
    exact_total = float(coeff.phi1_exact(hi))
    x_eval = np.linspace(lo, hi, n_eval)
    exact_eval = coeff.phi1_exact(x_eval)

    rows, coeff_rows = [], []
    for n in n_list:
        grid = cheb_nodes(n, lo, hi)
        xs = grid.mapped_nodes
        sqrt_a = np.sqrt(coeff(xs))
        series = antiderivative_coeffs(cheb_coeffs(sqrt_a, lo, hi))
        # series(lo) == 0 by construction, so series(hi) is the whole integral
        nodal = series(xs) - series(lo)
        interp = barycentric_eval(nodal, grid, x_eval)
        rows.append({
            "N": n,
            "quadrature_error": abs(series(hi) - exact_total),
            "interpolation_error": float(np.max(np.abs(interp - exact_eval)))
        })
        beta_series = antiderivative_coeffs(cheb_coeffs(beta(coeff, xs), lo, hi))
        for degree in range(n + 1):
            coeff_rows.append({
                "N": n,
                "degree": degree,
                "sqrt_a_antiderivative": abs(series.coeffs[degree]),
                "beta_antiderivative": abs(beta_series.coeffs[degree])
            })
    return pd.DataFrame(rows), pd.DataFrame(coeff_rows)


def records_frame(records: Iterable[ConvergenceRecord]) -> pd.DataFrame:
    rows = [{
        "epsilon": r.epsilon, "h": r.h, "order": r.order,
        "phase_method": r.phase_method, "err_u_inf": r.err_u_inf,
        "err_z_inf": r.err_z_inf, "flag": RecordFlag(r.flag).value
    } for r in sort_records(records)]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def emit_csv(records: Iterable[ConvergenceRecord], path: str) -> str:
    _ensure_parent(path)
    records_frame(records).to_csv(path, index=False, float_format=FLOAT_FORMAT,
                                  na_rep="nan")
    return path


def emit_frame(frame: pd.DataFrame, path: str) -> str:
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
    return path


def emit_trajectory_csv(traj: Trajectory, path: str) -> str:
    return emit_frame(traj.to_frame(), path)


class ConvergenceHarness:
    def __init__(self, n_jobs: Optional[int] = None, refine: Optional[int] = None):
        self.n_jobs = config.N_JOBS if n_jobs is None else n_jobs
        self.refine = config.REFINE if refine is None else refine
        if self.refine < 1:
            raise ValueError("refine must be >= 1")

    def _log(self, message: str):
        _log_line(message)

    def run_sweep(self, spec: SweepSpec) -> List[ConvergenceRecord]:
        ok, reason = spec.validate()
        if not ok:
            raise ValueError(reason)
        self._log(f"[SWEEP] {spec.coefficient} order={spec.order} "
                  f"phase={spec.phase_method.value} eps={spec.epsilons} "
                  f"refine={self.refine} jobs={self.n_jobs}")
        started = time.perf_counter()
        batches = Parallel(n_jobs=self.n_jobs)(
            delayed(_sweep_epsilon)(spec, eps, self.refine) for eps in spec.epsilons
        )
        records = sort_records(rec for batch in batches for rec in batch)
        failed = sum(1 for r in records if r.flag == RecordFlag.FAILED)
        self._log(f"[SWEEP] {len(records)} records ({failed} failed) "
                  f"in {time.perf_counter() - started:.1f}s")
        return records

    def order_summary(self, records: Sequence[ConvergenceRecord],
                      target: ErrorTarget = ErrorTarget.U) -> dict:
        slopes = {}
        for eps in sorted({r.epsilon for r in records}, reverse=True):
            try:
                slopes[eps] = estimate_order([r for r in records if r.epsilon == eps], target)
            except ValueError:
                slopes[eps] = np.nan
            self._log(f"[ORDER] eps={eps:g} {ErrorTarget(target).value}-slope={slopes[eps]:.3f}")
        return slopes


harness = ConvergenceHarness()
