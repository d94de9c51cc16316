"""Experiment harness: convergence tables over (m, n), uniform-in-m
consistency of difference quotients, power-bound stability scans, and
discrete-semigroup convergence checks.

All report rows are deterministic functions of the inputs; cells may run
concurrently and are sorted before serialization, so CSV output is
byte-identical across runs and thread counts. Wall-clock timings are kept in
the in-memory reports only and never enter the CSV bytes.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import tolerances as tol
from .errors import (
    DegenerateData,
    InvalidParams,
    ReferenceUnavailable,
    SizeLimit,
)
from .oracle import ExactSolution, exact_solution, expm
from .rational import EXACT, ExactPropagator, RationalFunction, propagator
from .spatial import (
    ContinuousFunction,
    DiscreteOperator,
    ProjectionPair,
    build_operator,
    reference_grid,
)
from .splitting import SplitProblem, SplitScheme, build_step, evolve

#: fitted omega values tried in ascending order when bounding power norms
OMEGA_GRID = (0.0, 0.5, 1.0, 2.0)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _run_cells(worker: Callable, cells: list, threads: int) -> list:
    if threads <= 1 or len(cells) <= 1:
        return [worker(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, cells))


# ---------------------------------------------------------------------------
# problem families


@dataclass(frozen=True, eq=False)
class ProblemFamily:
    """A test problem parametrized by grid size: operator builders, initial
    function, and (when available) the closed-form solution."""

    name: str
    make_a: Callable[[int], DiscreteOperator]
    make_b: Callable[[int], DiscreteOperator] | None
    initial: ContinuousFunction
    exact: ExactSolution | None = None

    def build(self, m: int, combine: bool = False) -> SplitProblem:
        """Assemble the discrete problem at grid size m. With combine=True the
        two operators are summed into a single generator (used by the
        no-splitting variant)."""
        a = self.make_a(m)
        b = self.make_b(m) if self.make_b is not None else None
        if combine and b is not None:
            a, b = a + b, None
        v0 = ProjectionPair(m).project(self.initial)
        return SplitProblem(a, b, v0)


def advection_diffusion_family(
    nu: float = 1.0, c: float = 1.0, mode: int = 1
) -> ProblemFamily:
    from .spatial import sin_mode

    initial = sin_mode(mode)
    return ProblemFamily(
        name=f"advection_diffusion(nu={nu:g},c={c:g})",
        make_a=lambda m: build_operator("diffusion", {"nu": nu}, m),
        make_b=lambda m: build_operator("advection", {"c": c}, m),
        initial=initial,
        exact=exact_solution("advection_diffusion", initial, {"nu": nu, "c": c}),
    )


def diffusion_reaction_family(nu: float = 1.0, rho: float = -1.0, mode: int = 1) -> ProblemFamily:
    from .spatial import sin_mode

    initial = sin_mode(mode)
    return ProblemFamily(
        name=f"diffusion_reaction(nu={nu:g},rho={rho:g})",
        make_a=lambda m: build_operator("diffusion", {"nu": nu}, m),
        make_b=lambda m: build_operator("reaction", {"rho": rho}, m),
        initial=initial,
        exact=exact_solution("diffusion_reaction", initial, {"nu": nu, "rho": rho}),
    )


def diffusion_family(nu: float = 1.0, mode: int = 1) -> ProblemFamily:
    from .spatial import sin_mode

    initial = sin_mode(mode)
    return ProblemFamily(
        name=f"diffusion(nu={nu:g})",
        make_a=lambda m: build_operator("diffusion", {"nu": nu}, m),
        make_b=None,
        initial=initial,
        exact=exact_solution("advection_diffusion", initial, {"nu": nu, "c": 0.0}),
    )


def transport_family(c: float = 1.0, mode: int = 1) -> ProblemFamily:
    from .spatial import sin_mode

    initial = sin_mode(mode)
    return ProblemFamily(
        name=f"transport(c={c:g})",
        make_a=lambda m: build_operator("advection", {"c": c}, m),
        make_b=None,
        initial=initial,
        exact=exact_solution("advection_diffusion", initial, {"nu": 0.0, "c": c}),
    )


def reaction_family(rho: float = -1.0, initial: ContinuousFunction | None = None) -> ProblemFamily:
    from .spatial import constant

    init = initial if initial is not None else constant(1.0)
    exact = None
    try:
        exact = exact_solution("diffusion_reaction", init, {"nu": 0.0, "rho": rho})
    except Exception:
        exact = None
    return ProblemFamily(
        name=f"reaction(rho={rho:g})",
        make_a=lambda m: build_operator("reaction", {"rho": rho}, m),
        make_b=None,
        initial=init,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# order estimation


def order_estimate(errors: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log(error) against log(1/n)."""
    if len(errors) < 3:
        raise DegenerateData("order estimation needs at least 3 points")
    ns = np.array([float(n) for n, _ in errors])
    es = np.array([float(e) for _, e in errors])
    if np.any(es <= 0):
        raise DegenerateData("order estimation needs strictly positive errors")
    if np.any(np.diff(ns) <= 0):
        raise DegenerateData("order estimation needs strictly increasing n")
    slope = np.polyfit(np.log(1.0 / ns), np.log(es), 1)[0]
    return float(slope)


def _tail_order(points: list[tuple[float, float]]) -> float | None:
    tail = points[-3:]
    if len(tail) < 3 or any(e <= 0 for _, e in tail):
        return None
    return order_estimate(tail)


# ---------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceReport:
    problem: str
    scheme: str
    t: float
    rows: list  # (m, n, error, seconds)
    order_in_n: dict  # m -> slope over the last three n
    order_in_m: dict  # n -> slope over the last three m
    diagonal: list  # (m, error) along m = n

    def diagonal_nonincreasing(self, slack: float = 1.1) -> bool:
        errs = [e for _, e in self.diagonal]
        return all(b <= slack * a for a, b in zip(errs, errs[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,n,t,error,seconds\n")
        for m, n, err, _seconds in self.rows:
            buf.write(f"{_fmt(m)},{_fmt(n)},{_fmt(self.t)},{_fmt(err)},0\n")
        return buf.getvalue()


def _lift_error(pair: ProjectionPair, v: np.ndarray, ref_values: np.ndarray, grid) -> float:
    lifted = pair.interpolate(v)
    return float(np.max(np.abs(np.asarray(lifted(grid)) - ref_values)))


def convergence_study(
    scheme: SplitScheme,
    family: ProblemFamily,
    t: float,
    m_list: Sequence[int],
    n_list: Sequence[int],
    reference: str = "exact",
    threads: int = 1,
) -> ConvergenceReport:
    """Errors of the lifted n-step solution against a reference solution on
    the (m, n) grid, in sup norm on the reference grid.

    reference="exact" compares against the closed-form solution;
    reference="expm" compares against the lifted matrix exponential of the
    combined generator at the same m (isolates temporal/splitting error).
    """
    if t < 0:
        raise InvalidParams("t must be nonnegative")
    if not m_list or not n_list:
        raise InvalidParams("m_list and n_list must be nonempty")
    if list(m_list) != sorted(m_list) or list(n_list) != sorted(n_list):
        raise InvalidParams("m_list and n_list must be increasing")
    if reference not in ("exact", "expm"):
        raise InvalidParams(f"unknown reference {reference!r}")
    if reference == "exact" and family.exact is None:
        raise ReferenceUnavailable(f"no closed-form solution for {family.name}")

    grid = reference_grid()
    combine = scheme.variant == "none"
    problems = {m: family.build(m, combine=combine) for m in m_list}
    pairs = {m: ProjectionPair(m) for m in m_list}
    if reference == "exact":
        exact_values = np.asarray(family.exact(t, grid), dtype=float)
        refs = {m: exact_values for m in m_list}
    else:
        refs = {}
        for m in m_list:
            problem = problems[m]
            ref_v = expm(problem.combined_generator(), t) @ problem.initial
            refs[m] = np.asarray(pairs[m].interpolate(ref_v)(grid), dtype=float)

    def worker(cell):
        m, n = cell
        start = time.perf_counter()
        v = evolve(scheme, problems[m], t, n)
        err = _lift_error(pairs[m], v, refs[m], grid)
        return (m, n, err, time.perf_counter() - start)

    cells = [(m, n) for m in m_list for n in n_list]
    rows = sorted(_run_cells(worker, cells, threads), key=lambda r: (r[0], r[1]))

    order_in_n = {}
    for m in m_list:
        pts = [(n, err) for mm, n, err, _ in rows if mm == m]
        order_in_n[m] = _tail_order(pts)
    order_in_m = {}
    for n in n_list:
        pts = [(m, err) for m, nn, err, _ in rows if nn == n]
        order_in_m[n] = _tail_order(pts)
    diagonal = [(m, err) for m, n, err, _ in rows if m == n]

    return ConvergenceReport(
        problem=family.name,
        scheme=_scheme_label(scheme),
        t=t,
        rows=rows,
        order_in_n=order_in_n,
        order_in_m=order_in_m,
        diagonal=diagonal,
    )


def _scheme_label(scheme: SplitScheme) -> str:
    def stage(s):
        return s.name if s is not None else "-"

    label = scheme.variant
    if scheme.variant == "weighted":
        label += f"(theta={scheme.theta:g})"
    return f"{label}[r={stage(scheme.r)},q={stage(scheme.q)}]"


# ---------------------------------------------------------------------------
# uniform consistency


@dataclass
class ConsistencyReport:
    problem: str
    scheme: str
    rows: list  # (m, h, quotient_error)
    sup_over_m: dict  # h -> sup over the m set

    def halving_factors(self) -> list[float]:
        """Ratios sup(h_{i+1})/sup(h_i) for consecutive entries of the h list."""
        hs = list(self.sup_over_m)
        return [
            self.sup_over_m[b] / self.sup_over_m[a] for a, b in zip(hs, hs[1:])
        ]

    def decreases(self, factor: float = 0.75) -> bool:
        """Endpoint check: total decrease at least factor**(number of steps),
        the finite surrogate of the uniform h -> 0 limit."""
        hs = list(self.sup_over_m)
        if len(hs) < 2:
            return True
        first, last = self.sup_over_m[hs[0]], self.sup_over_m[hs[-1]]
        return last <= factor ** (len(hs) - 1) * first

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,h,quotient_error\n")
        for m, h, err in self.rows:
            buf.write(f"{_fmt(m)},{_fmt(h)},{_fmt(err)}\n")
        return buf.getvalue()


def chernoff_consistency(
    scheme: SplitScheme,
    family: ProblemFamily,
    m_list: Sequence[int],
    h_list: Sequence[float],
    x: ContinuousFunction | None = None,
    threads: int = 1,
) -> ConsistencyReport:
    """Difference-quotient error ||(F(h) P x - P x)/h - (A + B) P x|| per
    (m, h), with the per-h supremum over the m set.

    The lifted sup norm of a piecewise-linear interpolant equals the max norm
    of its node values, so errors are measured directly on the grid.
    """
    if not m_list or not h_list:
        raise InvalidParams("m_list and h_list must be nonempty")
    if any(h <= 0 for h in h_list):
        raise InvalidParams("h values must be positive")
    smooth = x if x is not None else family.initial
    combine = scheme.variant == "none"
    problems = {m: family.build(m, combine=combine) for m in m_list}
    data = {}
    for m in m_list:
        problem = problems[m]
        px = ProjectionPair(m).project(smooth)
        target = problem.A @ px
        if problem.B is not None:
            target = target + problem.B @ px
        data[m] = (problem, px, target)

    def worker(cell):
        m, h = cell
        problem, px, target = data[m]
        fpx = build_step(scheme, problem, h)(px)
        quotient = (fpx - px) / h
        return (m, h, float(np.max(np.abs(quotient - target))))

    cells = [(m, h) for m in m_list for h in h_list]
    rows = sorted(_run_cells(worker, cells, threads), key=lambda r: (r[0], -r[1]))
    sup_over_m = {}
    for h in sorted(h_list, reverse=True):
        sup_over_m[h] = max(err for _, hh, err in rows if hh == h)
    return ConsistencyReport(
        problem=family.name,
        scheme=_scheme_label(scheme),
        rows=rows,
        sup_over_m=sup_over_m,
    )


# ---------------------------------------------------------------------------
# stability scan


@dataclass
class StabilityReport:
    problem: str
    scheme: str
    rows: list  # (m, h, k, power_norm)
    fitted_m: float
    fitted_omega: float
    passed: bool
    m_target: float = 1.0
    omega_target: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,h,k,power_norm\n")
        for m, h, k, norm in self.rows:
            buf.write(f"{_fmt(m)},{_fmt(h)},{_fmt(k)},{_fmt(norm)}\n")
        return buf.getvalue()


def _fit_power_bound(rows, m_target: float, omega_target: float):
    """Smallest omega on the grid whose minimal M meets the target; falls back
    to the overall minimal M when nothing passes."""
    best = None
    for omega in OMEGA_GRID:
        m_needed = 1.0
        for _m, h, k, norm in rows:
            m_needed = max(m_needed, norm / np.exp(k * omega * h))
        if best is None or m_needed < best[0] - tol.STABILITY_FIT:
            best = (m_needed, omega)
        if omega <= omega_target and m_needed <= m_target + tol.STABILITY_FIT:
            return m_needed, omega, True
    return best[0], best[1], False


def stability_scan(
    scheme: SplitScheme,
    problem: SplitProblem,
    h_list: Sequence[float],
    k_max: int = 1024,
    m_target: float = 1.0,
    omega_target: float = 0.0,
    threads: int = 1,
) -> StabilityReport:
    """Induced max-norms of F(h)^k for k on a doubling ladder, with a fitted
    (M, omega) bound over all rows."""
    if problem.m > 256:
        raise SizeLimit("dense stability scan limited to m <= 256")
    if k_max < 1 or k_max > 1024:
        raise InvalidParams("k_max must lie in [1, 1024]")
    if any(h < 0 for h in h_list):
        raise InvalidParams("h values must be nonnegative")
    m = problem.m

    def worker(h):
        dense = build_step(scheme, problem, h)(np.eye(m))
        out = []
        k = 1
        power = dense
        while k <= k_max:
            norm = float(np.max(np.sum(np.abs(power), axis=1)))
            out.append((m, h, k, norm))
            if 2 * k > k_max:
                break
            power = power @ power
            k *= 2
        return out

    chunks = _run_cells(worker, list(h_list), threads)
    rows = sorted(
        (row for chunk in chunks for row in chunk), key=lambda r: (r[0], r[1], r[2])
    )
    fitted_m, fitted_omega, passed = _fit_power_bound(rows, m_target, omega_target)
    return StabilityReport(
        problem="(custom problem)",
        scheme=_scheme_label(scheme),
        rows=rows,
        fitted_m=fitted_m,
        fitted_omega=fitted_omega,
        passed=passed,
        m_target=m_target,
        omega_target=omega_target,
    )


def merge_stability(reports: Sequence[StabilityReport]) -> StabilityReport:
    """Joint (M, omega) fit across scans at different grid sizes."""
    rows = sorted(
        (row for rep in reports for row in rep.rows),
        key=lambda r: (r[0], r[1], r[2]),
    )
    first = reports[0]
    fitted_m, fitted_omega, passed = _fit_power_bound(
        rows, first.m_target, first.omega_target
    )
    return StabilityReport(
        problem=first.problem,
        scheme=first.scheme,
        rows=rows,
        fitted_m=fitted_m,
        fitted_omega=fitted_omega,
        passed=passed,
        m_target=first.m_target,
        omega_target=first.omega_target,
    )


# ---------------------------------------------------------------------------
# discrete-semigroup convergence (projection + exponential against the
# continuous solution, uniformly over a step interval)


@dataclass
class TrotterKatoReport:
    operator: str
    rows: list  # (m, max_error over the h grid)
    ratios: list  # consecutive max-error ratios
    passed: bool  # every m-doubling reduces the error by >= 2

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,max_error\n")
        for m, err in self.rows:
            buf.write(f"{_fmt(m)},{_fmt(err)}\n")
        return buf.getvalue()


_KIND_TO_TAG = {
    "diffusion": lambda p: ("advection_diffusion", {"nu": p["nu"], "c": 0.0}),
    "advection": lambda p: ("advection_diffusion", {"nu": 0.0, "c": p["c"]}),
    "reaction": lambda p: ("diffusion_reaction", {"nu": 0.0, "rho": p["rho"]}),
}


def trotter_kato_check(
    stage: RationalFunction | ExactPropagator,
    kind: str,
    params: dict,
    m_list: Sequence[int],
    h_grid: Sequence[float],
    x: ContinuousFunction,
    threads: int = 1,
) -> TrotterKatoReport:
    """Max over the h grid of the lifted propagator error against the
    continuous semigroup, per grid size.

    With stage=EXACT the propagator is expm(h A_m); a rational stage measures
    the same quantity for r(h A_m) (which carries an O(h^2) floor)."""
    if kind not in _KIND_TO_TAG:
        raise ReferenceUnavailable(f"no continuous solution for kind {kind!r}")
    tag, tag_params = _KIND_TO_TAG[kind](params)
    solution = exact_solution(tag, x, tag_params)
    grid = reference_grid()

    def worker(m):
        pair = ProjectionPair(m)
        op = build_operator(kind, params, m)
        px = pair.project(x)
        worst = 0.0
        for h in h_grid:
            if isinstance(stage, ExactPropagator):
                v = expm(op, h) @ px
            else:
                v = propagator(stage, h, op)(px)
            ref = np.asarray(solution(h, grid), dtype=float)
            worst = max(worst, float(np.max(np.abs(np.asarray(pair.interpolate(v)(grid)) - ref))))
        return (m, worst)

    rows = sorted(_run_cells(worker, list(m_list), threads), key=lambda r: r[0])
    ratios = [
        a / b if b > 0 else np.inf for (_, a), (_, b) in zip(rows, rows[1:])
    ]
    passed = all(r >= 2.0 for r in ratios)
    return TrotterKatoReport(
        operator=f"{kind}({params})", rows=rows, ratios=ratios, passed=passed
    )
