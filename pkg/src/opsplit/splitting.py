"""Composed one-step maps F(h) for sequential, Strang, and weighted splitting.

Compositions are written right-to-left: in the sequential map q(hB) r(hA) the
r stage acts first. Each stage is a single rational resolvent evaluation, or
the dense matrix exponential when the stage scheme is `exact`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracle, rational
from .errors import DimensionMismatch, InvalidParams
from .rational import EXACT, ExactPropagator, RationalFunction
from .spatial import DiscreteOperator

VARIANTS = ("none", "sequential", "strang", "weighted")

StageScheme = RationalFunction | ExactPropagator


@dataclass(frozen=True)
class SplitScheme:
    """Which composition to use and with which stage schemes.

    variant "none" applies only the r stage to the problem's A operator;
    "weighted" blends the two sequential orders with weight theta in [0, 1].
    """

    variant: str
    r: StageScheme
    q: StageScheme | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParams(f"unknown splitting variant {self.variant!r}")
        if self.variant == "weighted":
            if self.theta is None or not 0.0 <= float(self.theta) <= 1.0:
                raise InvalidParams("weighted splitting requires theta in [0, 1]")
            object.__setattr__(self, "theta", float(self.theta))
        if not isinstance(self.r, (RationalFunction, ExactPropagator)):
            raise InvalidParams("r stage must be a RationalFunction or EXACT")
        if self.q is not None and not isinstance(
            self.q, (RationalFunction, ExactPropagator)
        ):
            raise InvalidParams("q stage must be a RationalFunction or EXACT")


@dataclass(frozen=True, eq=False)
class SplitProblem:
    """Discrete problem u' = (A + B)u with initial grid data; B may be None
    for single-generator problems."""

    A: DiscreteOperator
    B: DiscreteOperator | None
    initial: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "initial", np.asarray(self.initial, dtype=float).copy()
        )
        if self.initial.ndim != 1 or self.initial.shape[0] != self.A.m:
            raise DimensionMismatch("initial data does not match operator size")
        if self.B is not None and self.B.m != self.A.m:
            raise DimensionMismatch("A and B must act on the same grid")

    @property
    def m(self) -> int:
        return self.A.m

    def combined_generator(self) -> DiscreteOperator:
        return self.A if self.B is None else self.A + self.B


def _stage(scheme: StageScheme, h: float, op: DiscreteOperator) -> Callable:
    if isinstance(scheme, ExactPropagator):
        matrix = oracle.expm(op, h)
        return lambda v: matrix @ v
    return rational.propagator(scheme, h, op)


def build_step(scheme: SplitScheme, problem: SplitProblem, h: float) -> Callable:
    """One-step map F(h) as a callable; stage factorizations are built once,
    so the result is cheap to apply repeatedly."""
    if h < 0:
        raise InvalidParams("step size must be nonnegative")
    a_op, b_op = problem.A, problem.B
    if scheme.variant == "none":
        r_full = _stage(scheme.r, h, a_op)
        return r_full
    if b_op is not None and scheme.q is None:
        raise InvalidParams(f"{scheme.variant} splitting needs a q stage for B")

    if scheme.variant == "sequential":
        r_full = _stage(scheme.r, h, a_op)
        if b_op is None:
            return r_full
        q_full = _stage(scheme.q, h, b_op)
        return lambda v: q_full(r_full(v))

    if scheme.variant == "strang":
        r_half = _stage(scheme.r, h / 2.0, a_op)
        if b_op is None:
            return lambda v: r_half(r_half(v))
        q_full = _stage(scheme.q, h, b_op)
        return lambda v: r_half(q_full(r_half(v)))

    theta = scheme.theta
    r_full = _stage(scheme.r, h, a_op)
    if b_op is None:
        return r_full
    q_full = _stage(scheme.q, h, b_op)

    def weighted(v):
        return theta * q_full(r_full(v)) + (1.0 - theta) * r_full(q_full(v))

    return weighted


def step(scheme: SplitScheme, problem: SplitProblem, h: float, v: np.ndarray) -> np.ndarray:
    """Apply the one-step map F(h) to v (shape (m,) or (m, k))."""
    v = np.asarray(v)
    if v.shape[0] != problem.m:
        raise DimensionMismatch(
            f"state of length {v.shape[0]} for problem of size {problem.m}"
        )
    return build_step(scheme, problem, h)(v)


def evolve(scheme: SplitScheme, problem: SplitProblem, t: float, n: int) -> np.ndarray:
    """n steps of size t/n from the problem's initial data."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParams("step count n must be a positive integer")
    if t < 0:
        raise InvalidParams("time t must be nonnegative")
    v = problem.initial.copy()
    if t == 0.0:
        return v
    advance = build_step(scheme, problem, t / n)
    for _ in range(int(n)):
        v = advance(v)
    return v


def exact_split(
    variant: str, problem: SplitProblem, t: float, n: int, theta: float | None = None
) -> np.ndarray:
    """Same composition as evolve but with exact-propagator stages; isolates
    pure splitting error from time-discretization error."""
    scheme = SplitScheme(
        variant=variant,
        r=EXACT,
        q=None if problem.B is None else EXACT,
        theta=theta,
    )
    return evolve(scheme, problem, t, n)
