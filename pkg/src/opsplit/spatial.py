"""Periodic 1D function space, grid spaces, projection/interpolation pairs,
and finite-difference operators.

The function space is periodic functions on [0, 1) with the sup norm; grid
space is R^m with the max norm. Sampling at the nodes and periodic
piecewise-linear interpolation then satisfy projection-then-interpolation
identity on the grid exactly, with both maps of norm 1.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tolerances as tol
from .errors import DimensionMismatch, InvalidParams, InvalidSize


@dataclass(frozen=True)
class GridSpace:
    m: int
    nodes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))


def make_grid_space(m: int) -> GridSpace:
    """Uniform periodic nodes s_i = i/m."""
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise InvalidSize(f"grid size must be an integer >= 2, got {m!r}")
    return GridSpace(int(m), np.arange(m) / m)


@dataclass(frozen=True, eq=False)
class ContinuousFunction:
    """A periodic function on [0, 1); the evaluator is called with s mod 1."""

    evaluator: Callable
    smoothness_tag: str = "analytic"
    name: str = ""

    def __call__(self, s):
        return self.evaluator(np.mod(s, 1.0))


def sin_mode(k: int = 1, amplitude: float = 1.0) -> ContinuousFunction:
    return ContinuousFunction(
        lambda s: amplitude * np.sin(2.0 * np.pi * k * s),
        smoothness_tag="analytic",
        name=f"{amplitude:g}*sin(2*pi*{k}*s)" if amplitude != 1.0 else f"sin(2*pi*{k}*s)",
    )


def cos_mode(k: int = 1, amplitude: float = 1.0) -> ContinuousFunction:
    return ContinuousFunction(
        lambda s: amplitude * np.cos(2.0 * np.pi * k * s),
        smoothness_tag="analytic",
        name=f"cos(2*pi*{k}*s)",
    )


def constant(c: float) -> ContinuousFunction:
    return ContinuousFunction(
        lambda s: np.full_like(np.asarray(s, dtype=float), float(c)),
        smoothness_tag="analytic",
        name=f"{c:g}",
    )


_ALLOWED_CALLS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_ALLOWED_NAMES = {"pi": math.pi}


def _eval_node(node: ast.AST, s):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, s)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise InvalidParams(f"literal {node.value!r} not allowed in expression")
    if isinstance(node, ast.Name):
        if node.id == "s":
            return s
        if node.id in _ALLOWED_NAMES:
            return _ALLOWED_NAMES[node.id]
        raise InvalidParams(f"name {node.id!r} not allowed in expression")
    if isinstance(node, ast.BinOp):
        left, right = _eval_node(node.left, s), _eval_node(node.right, s)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        if isinstance(node.op, ast.Pow):
            return left**right
        raise InvalidParams("operator not allowed in expression")
    if isinstance(node, ast.UnaryOp):
        value = _eval_node(node.operand, s)
        if isinstance(node.op, ast.USub):
            return -value
        if isinstance(node.op, ast.UAdd):
            return value
        raise InvalidParams("unary operator not allowed in expression")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
            raise InvalidParams("only sin, cos, exp calls are allowed in expressions")
        if len(node.args) != 1 or node.keywords:
            raise InvalidParams("whitelisted functions take exactly one argument")
        return _ALLOWED_CALLS[node.func.id](_eval_node(node.args[0], s))
    raise InvalidParams(f"expression element {type(node).__name__} not allowed")


def function_from_expression(expr: str) -> ContinuousFunction:
    """Build a periodic function from a whitelisted expression in s
    (sin, cos, exp, constants, pi)."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise InvalidParams(f"cannot parse expression {expr!r}: {exc}") from exc
    _eval_node(tree, 0.0)  # validate eagerly
    return ContinuousFunction(
        lambda s: _eval_node(tree, np.asarray(s, dtype=float)),
        smoothness_tag="analytic",
        name=expr,
    )


@dataclass(frozen=True)
class ProjectionPair:
    """Sampling projection and periodic piecewise-linear interpolation for
    grid size m; both maps have norm 1 in the sup/max norms."""

    m: int
    K_bound: float = 1.0

    def __post_init__(self):
        make_grid_space(self.m)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.m) / self.m

    def project(self, f) -> np.ndarray:
        """Point sampling at the nodes: v_i = f(i/m)."""
        return np.asarray(f(self.nodes), dtype=float).reshape(self.m)

    def interpolate(self, v) -> ContinuousFunction:
        """Periodic piecewise-linear interpolant through (i/m, v_i);
        reproduces the node values exactly."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.m,):
            raise DimensionMismatch(
                f"grid vector of shape {v.shape} for grid size {self.m}"
            )
        data = v.copy()
        m = self.m

        def _eval(s):
            s_arr = np.mod(np.asarray(s, dtype=float), 1.0)
            x = s_arr * m
            i0 = np.floor(x).astype(int) % m
            frac = x - np.floor(x)
            out = (1.0 - frac) * data[i0] + frac * data[(i0 + 1) % m]
            nearest = np.rint(x).astype(int)
            snap = np.abs(x - nearest) <= 1e-9
            out = np.where(snap, data[nearest % m], out)
            return out if out.ndim else float(out)

        return ContinuousFunction(_eval, smoothness_tag="C0", name=f"interp(m={m})")


def project(pair: ProjectionPair, f) -> np.ndarray:
    return pair.project(f)


def interpolate(pair: ProjectionPair, v) -> ContinuousFunction:
    return pair.interpolate(v)


def reference_grid(size: int = tol.REFERENCE_GRID_SIZE) -> np.ndarray:
    return np.arange(size) / size


def sup_norm(f, grid: np.ndarray | None = None) -> float:
    """Sup norm of a periodic function, measured on the reference grid."""
    pts = reference_grid() if grid is None else grid
    return float(np.max(np.abs(np.asarray(f(pts), dtype=float))))


def sup_distance(f, g, grid: np.ndarray | None = None) -> float:
    pts = reference_grid() if grid is None else grid
    fv = np.asarray(f(pts), dtype=float)
    gv = np.asarray(g(pts), dtype=float)
    return float(np.max(np.abs(fv - gv)))


# ---------------------------------------------------------------------------
# discrete operators


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Dense realization of a periodic finite-difference operator."""

    matrix: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidParams("operator matrix must be square")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.m:
            raise DimensionMismatch(
                f"vector of length {v.shape[0]} for operator of size {self.m}"
            )
        return self.matrix @ v

    def __matmul__(self, v):
        return self.matvec(v)

    def __add__(self, other: "DiscreteOperator") -> "DiscreteOperator":
        if self.m != other.m:
            raise DimensionMismatch("cannot add operators of different sizes")
        return DiscreteOperator(
            self.matrix + other.matrix, kind=f"{self.kind}+{other.kind}"
        )

    def is_circulant(self, tolerance: float = tol.CIRCULANT_COMMUTE) -> bool:
        """True if the matrix commutes with the cyclic shift (Sv)_i = v_{i-1}."""
        left = np.roll(self.matrix, 1, axis=0)  # S A: row i holds A[i-1, :]
        right = np.roll(self.matrix, -1, axis=1)  # A S: column j holds A[:, j+1]
        scale = max(1.0, float(np.max(np.abs(self.matrix))))
        return float(np.max(np.abs(left - right))) <= tolerance * scale

    def first_column(self) -> np.ndarray:
        return np.array(self.matrix[:, 0])

    @classmethod
    def from_dense(cls, matrix, kind: str = "custom", params: dict | None = None):
        return cls(np.asarray(matrix, dtype=float), kind=kind, params=params or {})

    @classmethod
    def zero(cls, m: int):
        return cls(np.zeros((m, m)), kind="zero")


def _periodic_banded(m: int, bands: dict[int, float | np.ndarray]) -> np.ndarray:
    a = np.zeros((m, m))
    idx = np.arange(m)
    for offset, coef in bands.items():
        a[idx, (idx + offset) % m] += coef
    return a


def diffusion_operator(m: int, nu: float) -> DiscreteOperator:
    """Second central difference scaled by nu*m**2, periodic wrap."""
    if nu <= 0:
        raise InvalidParams("diffusion requires nu > 0")
    make_grid_space(m)
    s = nu * m * m
    mat = _periodic_banded(m, {-1: s, 0: -2.0 * s, 1: s})
    return DiscreteOperator(mat, kind="diffusion", params={"nu": nu})


def advection_operator(m: int, c: float, stencil: str = "centered") -> DiscreteOperator:
    """Discretization of -c d/ds: centered (skew-symmetric) or upwind (c > 0)."""
    make_grid_space(m)
    if stencil == "centered":
        s = c * m / 2.0
        mat = _periodic_banded(m, {1: -s, -1: s})
    elif stencil == "upwind":
        if c <= 0:
            raise InvalidParams("upwind stencil requires c > 0")
        mat = _periodic_banded(m, {0: -c * m, -1: c * m})
    else:
        raise InvalidParams(f"unknown advection stencil {stencil!r}")
    return DiscreteOperator(mat, kind="advection", params={"c": c, "stencil": stencil})


def reaction_operator(m: int, rho) -> DiscreteOperator:
    """Multiplication by rho(s) at the nodes; rho may be a number, an
    expression string, or a callable. Requires rho <= 0 at the nodes."""
    space = make_grid_space(m)
    if isinstance(rho, str):
        rho_fn = function_from_expression(rho)
        values = np.asarray(rho_fn(space.nodes), dtype=float)
        param = rho
    elif callable(rho):
        values = np.asarray(rho(space.nodes), dtype=float)
        param = getattr(rho, "name", "callable")
    else:
        values = np.full(m, float(rho))
        param = float(rho)
    if values.shape != (m,):
        values = np.broadcast_to(values, (m,)).copy()
    if np.max(values) > 0:
        raise InvalidParams("reaction requires rho(s) <= 0 at every node")
    mat = _periodic_banded(m, {0: values})
    return DiscreteOperator(mat, kind="reaction", params={"rho": param})


def build_operator(kind: str, params: dict, m: int) -> DiscreteOperator:
    """Dispatch on the config syntax: {"kind": ..., <coefficients>}."""
    if kind == "diffusion":
        if "nu" not in params:
            raise InvalidParams("diffusion requires parameter 'nu'")
        return diffusion_operator(m, float(params["nu"]))
    if kind == "advection":
        if "c" not in params:
            raise InvalidParams("advection requires parameter 'c'")
        return advection_operator(m, float(params["c"]), params.get("stencil", "centered"))
    if kind == "reaction":
        if "rho" not in params:
            raise InvalidParams("reaction requires parameter 'rho'")
        return reaction_operator(m, params["rho"])
    raise InvalidParams(f"unknown operator kind {kind!r}")


# ---------------------------------------------------------------------------
# axiom checking


@dataclass
class ProjectionAxiomReport:
    k_bound: float
    identity_deviation: dict
    interpolation_error: dict
    norm_ratio_interpolate: dict
    norm_ratio_project: dict
    decrease_ok: dict

    @property
    def passed(self) -> bool:
        identity_ok = all(v == 0.0 for v in self.identity_deviation.values())
        norms_ok = all(
            ratio <= 1.0 + tol.COEFF_CHECK
            for d in (self.norm_ratio_interpolate, self.norm_ratio_project)
            for ratio in d.values()
        )
        return identity_ok and norms_ok and all(self.decrease_ok.values())


def check_projection_axioms(
    m_list,
    sample_functions,
    n_random: int = 100,
    seed: int = 20240817,
) -> ProjectionAxiomReport:
    """Measure the projection/interpolation axioms over a list of grid sizes.

    Projection after interpolation must be the identity on the grid (exactly);
    interpolation after projection must converge to the identity, measured in
    sup norm on the reference grid; both maps must have norm <= 1.
    """
    rng = np.random.default_rng(seed)
    grid = reference_grid()
    identity_deviation = {}
    interpolation_error = {}
    norm_ratio_interp = {}
    norm_ratio_project = {}
    for m in m_list:
        pair = ProjectionPair(m)
        dev = 0.0
        ratio_j = 0.0
        for _ in range(n_random):
            v = rng.uniform(-1.0, 1.0, size=m)
            lifted = pair.interpolate(v)
            dev = max(dev, float(np.max(np.abs(pair.project(lifted) - v))))
            ratio_j = max(ratio_j, sup_norm(lifted, grid) / np.max(np.abs(v)))
        identity_deviation[m] = dev
        norm_ratio_interp[m] = ratio_j
        ratio_p = 0.0
        for f in sample_functions:
            name = getattr(f, "name", repr(f))
            err = sup_distance(pair.interpolate(pair.project(f)), f, grid)
            interpolation_error[(m, name)] = err
            f_sup = max(sup_norm(f, grid), float(np.max(np.abs(pair.project(f)))))
            if f_sup > 0:
                ratio_p = max(ratio_p, float(np.max(np.abs(pair.project(f)))) / f_sup)
        norm_ratio_project[m] = ratio_p
    decrease_ok = {}
    ms = sorted(m_list)
    for f in sample_functions:
        name = getattr(f, "name", repr(f))
        errs = [interpolation_error[(m, name)] for m in ms]
        # constants are exact at every m; otherwise demand non-increase
        decrease_ok[name] = all(
            b <= a + tol.COEFF_CHECK for a, b in zip(errs, errs[1:])
        )
    return ProjectionAxiomReport(
        k_bound=1.0,
        identity_deviation=identity_deviation,
        interpolation_error=interpolation_error,
        norm_ratio_interpolate=norm_ratio_interp,
        norm_ratio_project=norm_ratio_project,
        decrease_ok=decrease_ok,
    )
