"""Independent reference solutions: dense matrix exponential and closed-form
Fourier-symbol solutions of the periodic test problems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tolerances as tol
from .errors import InvalidParams, Overflow, UnsupportedProblem
from .spatial import ContinuousFunction, DiscreteOperator, reference_grid

#: diagonal Pade order used by the scaling-and-squaring kernel
PADE_ORDER = 6
#: scale the argument until its 1-norm is at or below this threshold
SCALING_THRESHOLD = 0.5

# c_k = PADE_ORDER! (2*PADE_ORDER - k)! / ((2*PADE_ORDER)! k! (PADE_ORDER - k)!)
_PADE_COEFFS = [
    math.factorial(PADE_ORDER)
    * math.factorial(2 * PADE_ORDER - k)
    / (
        math.factorial(2 * PADE_ORDER)
        * math.factorial(k)
        * math.factorial(PADE_ORDER - k)
    )
    for k in range(PADE_ORDER + 1)
]


def _dense(a) -> np.ndarray:
    matrix = getattr(a, "matrix", a)
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParams("expm needs a square matrix")
    return matrix


def _pade_kernel(m: np.ndarray) -> np.ndarray:
    c = _PADE_COEFFS
    eye = np.eye(m.shape[0])
    m2 = m @ m
    m4 = m2 @ m2
    u = m @ (c[1] * eye + c[3] * m2 + c[5] * m4)
    v = c[0] * eye + c[2] * m2 + c[4] * m4 + c[6] * (m4 @ m2)
    return np.linalg.solve(v - u, v + u)


def expm(a, t: float = 1.0, method: str = "pade") -> np.ndarray:
    """Dense matrix exponential exp(t*A).

    method="pade" runs fixed-order scaling-and-squaring; method="fourier"
    diagonalizes a circulant input by the DFT and exponentiates the symbol.
    """
    matrix = _dense(a)
    if not np.all(np.isfinite(matrix)) or not np.isfinite(t):
        raise InvalidParams("expm requires finite input")
    if method == "fourier":
        return _expm_fourier(a, matrix, t)
    if method != "pade":
        raise InvalidParams(f"unknown expm method {method!r}")
    scaled = t * matrix
    norm = float(np.linalg.norm(scaled, 1))
    squarings = 0
    if norm > SCALING_THRESHOLD:
        squarings = int(math.ceil(math.log2(norm / SCALING_THRESHOLD)))
    with np.errstate(over="ignore", invalid="ignore"):
        result = _pade_kernel(scaled / 2.0**squarings)
        for _ in range(squarings):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise Overflow("matrix exponential overflowed")
    return result


def _expm_fourier(a, matrix: np.ndarray, t: float) -> np.ndarray:
    if isinstance(a, DiscreteOperator):
        circulant = a.is_circulant()
    else:
        circulant = DiscreteOperator.from_dense(matrix).is_circulant()
    if not circulant:
        raise UnsupportedProblem("fourier expm path requires a circulant operator")
    symbol = np.fft.fft(matrix[:, 0])
    growth = np.exp(t * symbol)
    basis = np.fft.fft(np.eye(matrix.shape[0]), axis=0)
    result = np.fft.ifft(growth[:, None] * basis, axis=0).real
    if not np.all(np.isfinite(result)):
        raise Overflow("matrix exponential overflowed")
    return result


# ---------------------------------------------------------------------------
# closed-form solutions


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Closed-form solution u(t, s) of a periodic constant-coefficient
    test problem."""

    evaluator: Callable
    problem_tag: str

    def __call__(self, t: float, s):
        return self.evaluator(t, np.mod(s, 1.0))

    def at_time(self, t: float) -> ContinuousFunction:
        return ContinuousFunction(
            lambda s: self.evaluator(t, s),
            smoothness_tag="analytic",
            name=f"{self.problem_tag}(t={t:g})",
        )


def _fourier_modes(initial) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients of the initial function, sampled on the reference
    grid; rejects data that is not (numerically) a trigonometric polynomial."""
    n = tol.REFERENCE_GRID_SIZE
    samples = np.asarray(initial(reference_grid(n)), dtype=float)
    if samples.shape != (n,):
        samples = np.broadcast_to(samples, (n,)).copy()
    coeffs = np.fft.fft(samples) / n
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    top = float(np.max(np.abs(coeffs))) or 1.0
    tail = np.abs(coeffs[np.abs(freqs) > n // 4])
    if tail.size and float(np.max(tail)) > 1e-10 * top:
        raise UnsupportedProblem(
            "initial data is not a trigonometric polynomial (spectral tail present)"
        )
    keep = np.abs(coeffs) > 1e-13 * top
    return freqs[keep], coeffs[keep]


def _symbol_solution(initial, nu: float, c: float, rho: float, tag: str) -> ExactSolution:
    freqs, coeffs = _fourier_modes(initial)

    def evaluator(t: float, s):
        s_arr = np.asarray(s, dtype=float)
        acc = np.zeros_like(s_arr, dtype=complex)
        for k, a in zip(freqs, coeffs):
            omega = 2.0 * np.pi * k
            decay = math.exp((-nu * omega**2 + rho) * t)
            acc += a * decay * np.exp(1j * omega * (s_arr - c * t))
        out = acc.real
        return out if out.ndim else float(out)

    return ExactSolution(evaluator, tag)


def exact_solution(problem_tag: str, initial, params: dict) -> ExactSolution:
    """Closed-form u(t, s) for the built-in problems.

    advection_diffusion: u_t = nu u_ss - c u_s; diffusion_reaction:
    u_t = nu u_ss + rho u with constant rho. Initial data must be a
    trigonometric polynomial so the Fourier symbol is exact.
    """
    if problem_tag == "advection_diffusion":
        nu = float(params.get("nu", 0.0))
        c = float(params.get("c", 0.0))
        if nu < 0:
            raise UnsupportedProblem("advection_diffusion requires nu >= 0")
        return _symbol_solution(initial, nu, c, 0.0, problem_tag)
    if problem_tag == "diffusion_reaction":
        nu = float(params.get("nu", 0.0))
        rho = params.get("rho", 0.0)
        if not isinstance(rho, (int, float)):
            raise UnsupportedProblem("diffusion_reaction requires constant rho")
        if nu < 0:
            raise UnsupportedProblem("diffusion_reaction requires nu >= 0")
        return _symbol_solution(initial, nu, 0.0, float(rho), problem_tag)
    raise UnsupportedProblem(f"no closed-form solution for {problem_tag!r}")
