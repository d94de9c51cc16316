"""Rational one-step symbols r, q and their resolvent-based application.

A scheme is a real-coefficient rational function r with r(0) = r'(0) = 1,
bounded on the closed left half-plane. Applying r(hA) to a vector goes
through the partial-fraction form

    r(z) = c_inf + sum_i sum_j C_ij / (1 - z/lambda_i)**j,

so that r(hA) x reduces to iterated shifted solves (I - (h/lambda_i) A)^-j x,
one LU factorization per pole.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import tolerances as tol
from .errors import (
    DimensionMismatch,
    IllConditioned,
    ImaginaryResidue,
    InvalidParams,
    PoleProximity,
    RootFindingFailure,
    SingularSolve,
)


def _trimmed(coeffs) -> tuple[float, ...]:
    vals = [float(c) for c in coeffs]
    if not vals:
        raise InvalidParams("empty coefficient list")
    while len(vals) > 1 and vals[-1] == 0.0:
        vals.pop()
    return tuple(vals)


def _horner(coeffs, z):
    """Evaluate a polynomial given in ascending order; z may be an array."""
    acc = np.zeros_like(np.asarray(z, dtype=complex))
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _poly_roots(coeffs) -> np.ndarray:
    """Roots via eigenvalues of the companion matrix (np.roots convention)."""
    if len(coeffs) < 2:
        return np.array([], dtype=complex)
    try:
        return np.roots(coeffs[::-1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigensolver hiccup
        raise RootFindingFailure(str(exc)) from exc


@dataclass(frozen=True)
class RationalFunction:
    """A reduced rational function, coefficients in ascending degree."""

    numerator_coeffs: tuple[float, ...]
    denominator_coeffs: tuple[float, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "numerator_coeffs", _trimmed(self.numerator_coeffs))
        object.__setattr__(self, "denominator_coeffs", _trimmed(self.denominator_coeffs))
        num, den = self.numerator_coeffs, self.denominator_coeffs
        if den[0] == 0.0:
            raise InvalidParams("denominator constant term b_0 must be nonzero")
        if len(num) - 1 > len(den) - 1:
            raise InvalidParams("numerator degree exceeds denominator degree")
        rn, rd = _poly_roots(num), _poly_roots(den)
        for a in rn:
            for b in rd:
                if abs(a - b) <= tol.ROOT_MATCH * max(1.0, abs(b)):
                    raise InvalidParams("numerator and denominator share a root")

    @property
    def degree_num(self) -> int:
        return len(self.numerator_coeffs) - 1

    @property
    def degree_den(self) -> int:
        return len(self.denominator_coeffs) - 1

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        return f"RationalFunction({self.name})"


class ExactPropagator:
    """Catalog sentinel: use the matrix exponential instead of a rational r."""

    name = "exact"

    def __repr__(self):
        return "ExactPropagator()"


#: singleton used wherever a stage scheme may be "exact"
EXACT = ExactPropagator()


# ---------------------------------------------------------------------------
# catalog


def backward_euler() -> RationalFunction:
    return RationalFunction((1.0,), (1.0, -1.0), name="backward_euler")


def crank_nicolson() -> RationalFunction:
    return RationalFunction((1.0, 0.5), (1.0, -0.5), name="crank_nicolson")


def iterated_resolvent(k: int) -> RationalFunction:
    """r(z) = 1/(1 - z/k)**k, the k-fold iterated resolvent scheme."""
    if not isinstance(k, int) or k < 1:
        raise InvalidParams("iterated_resolvent requires integer k >= 1")
    den = [math.comb(k, j) * (-1.0 / k) ** j for j in range(k + 1)]
    return RationalFunction((1.0,), tuple(den), name=f"iterated_resolvent:{k}")


def catalog() -> dict[str, RationalFunction | ExactPropagator]:
    """Built-in schemes keyed by their CLI/config names."""
    out: dict[str, RationalFunction | ExactPropagator] = {
        "backward_euler": backward_euler(),
        "crank_nicolson": crank_nicolson(),
    }
    for k in (2, 3, 4):
        out[f"iterated_resolvent:{k}"] = iterated_resolvent(k)
    out["exact"] = EXACT
    return out


def catalog_rational() -> list[RationalFunction]:
    """Catalog entries that are actual rational functions (everything but exact)."""
    return [s for s in catalog().values() if isinstance(s, RationalFunction)]


def parse_scheme(spec: str) -> RationalFunction | ExactPropagator:
    """Parse a scheme name: catalog name, iterated_resolvent:k, or
    custom:[a0,a1,...]/[b0,b1,...]."""
    spec = spec.strip()
    if spec == "exact":
        return EXACT
    if spec == "backward_euler":
        return backward_euler()
    if spec == "crank_nicolson":
        return crank_nicolson()
    if spec.startswith("iterated_resolvent:"):
        body = spec.split(":", 1)[1]
        try:
            k = int(body)
        except ValueError as exc:
            raise InvalidParams(f"bad iterated_resolvent order {body!r}") from exc
        return iterated_resolvent(k)
    if spec.startswith("custom:"):
        body = spec[len("custom:"):]
        parts = body.split("/")
        if len(parts) != 2:
            raise InvalidParams("custom scheme must look like custom:[...]/[...]")
        try:
            num = json.loads(parts[0])
            den = json.loads(parts[1])
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"cannot parse custom coefficients: {exc}") from exc
        if not isinstance(num, list) or not isinstance(den, list):
            raise InvalidParams("custom coefficients must be bracketed lists")
        return RationalFunction(tuple(num), tuple(den), name=spec)
    raise InvalidParams(f"unknown scheme {spec!r}")


# ---------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class ConsistencyCheck:
    r0: float
    r0_prime: float
    passed: bool


def check_consistency(r: RationalFunction) -> ConsistencyCheck:
    """Check r(0) = r'(0) = 1 exactly from the coefficients."""
    a = r.numerator_coeffs
    b = r.denominator_coeffs
    a0, a1 = a[0], (a[1] if len(a) > 1 else 0.0)
    b0, b1 = b[0], (b[1] if len(b) > 1 else 0.0)
    r0 = a0 / b0
    r0_prime = (a1 * b0 - a0 * b1) / b0**2
    passed = abs(r0 - 1.0) <= tol.COEFF_CHECK and abs(r0_prime - 1.0) <= tol.COEFF_CHECK
    return ConsistencyCheck(r0, r0_prime, passed)


@dataclass(frozen=True)
class LhpAdmissibility:
    poles_rhp: bool
    proper: bool
    sup_imag_axis: float
    passed: bool


def _imag_axis_samples() -> np.ndarray:
    # 5001 linear + 2*2500 log-spaced points covering [-1e6, 1e6]
    lin = np.linspace(-1e6, 1e6, 5001)
    logp = np.logspace(-8, 6, 2500)
    return np.concatenate([lin, logp, -logp])


def check_lhp_admissible(r: RationalFunction) -> LhpAdmissibility:
    """Boundedness on the closed left half-plane.

    All denominator roots must lie in the open right half-plane and the degree
    must be proper; by the maximum principle boundedness then reduces to the
    imaginary axis, whose supremum is estimated by sampling.
    """
    roots = _poly_roots(r.denominator_coeffs)
    poles_rhp = bool(np.all(roots.real > tol.RHP_MARGIN)) if roots.size else True
    proper = r.degree_num <= r.degree_den
    y = _imag_axis_samples()
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.abs(
            _horner(r.numerator_coeffs, 1j * y) / _horner(r.denominator_coeffs, 1j * y)
        )
    sup = float(np.max(vals[np.isfinite(vals)]))
    if r.degree_num == r.degree_den:
        sup = max(sup, abs(r.numerator_coeffs[-1] / r.denominator_coeffs[-1]))
    return LhpAdmissibility(poles_rhp, proper, sup, poles_rhp and proper)


# ---------------------------------------------------------------------------
# partial fractions


@dataclass(frozen=True)
class PoleTerm:
    pole: complex
    multiplicity: int
    residues: tuple[complex, ...]  # C_i1 .. C_i,nu (basis (1 - z/pole)**-j)


@dataclass(frozen=True)
class PartialFraction:
    constant_term: complex
    terms: tuple[PoleTerm, ...]

    def evaluate(self, z):
        acc = np.full_like(np.asarray(z, dtype=complex), self.constant_term)
        for term in self.terms:
            w = 1.0 / (1.0 - np.asarray(z, dtype=complex) / term.pole)
            p = np.ones_like(w)
            for c in term.residues:
                p = p * w
                acc = acc + c * p
        return acc

    def residue_sum(self) -> complex:
        return self.constant_term + sum(sum(t.residues) for t in self.terms)

    def derivative_sum(self) -> complex:
        """sum over poles of (j/lambda_i) C_ij; equals r'(0) for exact data."""
        return sum(
            (j / t.pole) * c
            for t in self.terms
            for j, c in enumerate(t.residues, start=1)
        )


#: clustering radii tried in order; a nu-fold companion-matrix root scatters
#: like eps**(1/nu), so higher multiplicities need the coarser scales
_CLUSTER_RADII = (tol.POLE_CLUSTER_REL, 1e-6, 1e-4, 1e-2)


def _cluster_roots(roots: np.ndarray, radius_rel: float) -> list[tuple[complex, int]]:
    """Single-linkage clustering of roots into (center, multiplicity) groups."""
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    n = len(roots)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            scale = max(1.0, abs(roots[i]), abs(roots[j]))
            if abs(roots[i] - roots[j]) <= radius_rel * scale:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(complex(roots[i]))
    clusters = [(complex(sum(g) / len(g)), len(g)) for g in groups.values()]
    clusters.sort(key=lambda c: (c[0].real, c[0].imag))
    return clusters


def _taylor_coeffs(coeffs, center: complex, count: int) -> np.ndarray:
    """First `count` Taylor coefficients of the polynomial about `center`,
    by repeated synthetic division by (z - center)."""
    work = np.asarray(coeffs, dtype=complex).copy()
    out = np.zeros(count, dtype=complex)
    for s in range(count):
        d = len(work) - 1
        if d == 0:
            out[s] = work[0]
            work = np.zeros(1, dtype=complex)
            continue
        quot = np.zeros(d, dtype=complex)
        quot[d - 1] = work[d]
        for j in range(d - 1, 0, -1):
            quot[j - 1] = work[j] + center * quot[j]
        out[s] = work[0] + center * quot[0]
        work = quot
    return out


def _residues_at_clusters(
    r: RationalFunction, clusters: list[tuple[complex, int]], c_inf: complex
) -> list[PoleTerm]:
    """Residues by the derivative (Taylor series division) formula.

    With g = r - c_inf = N/den strictly proper, near a nu-fold pole lam the
    product (z - lam)**nu g(z) = N(z)/D(z) is smooth (D = den with the lam
    factors removed); its Taylor coefficients t_s give the standard residues
    A_ij = t_{nu-j}, converted to the (1 - z/lam)**-j basis by
    C_ij = A_ij (-1)**j / lam**j.
    """
    num = np.asarray(r.numerator_coeffs, dtype=complex)
    den = np.asarray(r.denominator_coeffs, dtype=complex)
    n_coeffs = num.copy()
    if c_inf != 0:
        padded = np.zeros(len(den), dtype=complex)
        padded[: len(num)] += num
        n_coeffs = padded - c_inf * den
    b_lead = den[-1]
    terms = []
    for idx, (lam, nu) in enumerate(clusters):
        other = []
        for jdx, (mu, kappa) in enumerate(clusters):
            if jdx != idx:
                other.extend([mu] * kappa)
        d_coeffs = b_lead * np.polynomial.polynomial.polyfromroots(other) if other else np.array([b_lead])
        n_taylor = _taylor_coeffs(n_coeffs, lam, nu)
        d_taylor = _taylor_coeffs(d_coeffs, lam, nu)
        if d_taylor[0] == 0:
            raise RootFindingFailure("vanishing leading term in residue division")
        # power-series division t = n/d mod z^nu
        t = np.zeros(nu, dtype=complex)
        for s in range(nu):
            acc = n_taylor[s]
            for u in range(s):
                acc -= t[u] * d_taylor[s - u]
            t[s] = acc / d_taylor[0]
        residues = tuple(
            t[nu - j] * (-1.0) ** j / lam**j for j in range(1, nu + 1)
        )
        terms.append(PoleTerm(complex(lam), nu, residues))
    return terms


def _pair_conjugates(terms: list[PoleTerm]) -> list[PoleTerm]:
    """Verify conjugate pole/residue symmetry for real-coefficient input and
    symmetrize it exactly."""
    used = [False] * len(terms)
    out: list[PoleTerm] = [None] * len(terms)  # type: ignore[list-item]
    for i, term in enumerate(terms):
        if used[i]:
            continue
        if abs(term.pole.imag) <= tol.ALGEBRAIC * max(1.0, abs(term.pole)):
            pole = complex(term.pole.real, 0.0)
            residues = tuple(complex(c.real, 0.0) for c in term.residues)
            if any(abs(c.imag) > tol.ALGEBRAIC * (1.0 + abs(c)) for c in term.residues):
                raise RootFindingFailure("real pole carries complex residue")
            out[i] = PoleTerm(pole, term.multiplicity, residues)
            used[i] = True
            continue
        partner = None
        for j in range(i + 1, len(terms)):
            if used[j]:
                continue
            cand = terms[j]
            if cand.multiplicity == term.multiplicity and abs(
                cand.pole - np.conj(term.pole)
            ) <= tol.POLE_CLUSTER_REL * max(1.0, abs(term.pole)):
                partner = j
                break
        if partner is None:
            raise RootFindingFailure("non-real pole lacks a conjugate partner")
        mate = terms[partner]
        for c1, c2 in zip(term.residues, mate.residues):
            if abs(c1 - np.conj(c2)) > tol.ALGEBRAIC * (1.0 + abs(c1)):
                raise RootFindingFailure("conjugate residues disagree")
        pole = 0.5 * (term.pole + np.conj(mate.pole))
        residues = tuple(
            0.5 * (c1 + np.conj(c2)) for c1, c2 in zip(term.residues, mate.residues)
        )
        out[i] = PoleTerm(pole, term.multiplicity, residues)
        out[partner] = PoleTerm(
            np.conj(pole), term.multiplicity, tuple(np.conj(c) for c in residues)
        )
        used[i] = used[partner] = True
    return out


def _reconstruction_error(r: RationalFunction, pf: PartialFraction) -> float:
    y = np.concatenate([np.logspace(-3, 3, 50), -np.logspace(-3, 3, 50)])
    z = 1j * y
    direct = _horner(r.numerator_coeffs, z) / _horner(r.denominator_coeffs, z)
    rec = pf.evaluate(z)
    return float(np.max(np.abs(direct - rec) / (1.0 + np.abs(direct))))


def _cross_check_residues(r: RationalFunction, pf: PartialFraction) -> None:
    """Re-derive the residues from a least-squares fit at sample points and
    compare; guards against a silently wrong derivative formula."""
    n_samples = max(2 * r.degree_den, 8)
    scale = np.median([abs(t.pole) for t in pf.terms]) if pf.terms else 1.0
    y = np.logspace(-2, 2, n_samples) * max(scale, 1e-8)
    z = 1j * y
    cols = []
    for term in pf.terms:
        w = 1.0 / (1.0 - z / term.pole)
        p = np.ones_like(w)
        for _ in term.residues:
            p = p * w
            cols.append(p.copy())
    if not cols:
        return
    design = np.column_stack(cols)
    rhs = (
        _horner(r.numerator_coeffs, z) / _horner(r.denominator_coeffs, z)
        - pf.constant_term
    )
    cond = np.linalg.cond(design)
    if cond > tol.ILL_CONDITIONED:
        raise IllConditioned(f"residue system condition estimate {cond:.3e}")
    fitted, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    flat = [c for t in pf.terms for c in t.residues]
    for a, b in zip(flat, fitted):
        if abs(a - b) > 1e-6 * (1.0 + abs(a)):
            raise RootFindingFailure(
                "derivative-formula residues disagree with least-squares fit"
            )


def partial_fractions(r: RationalFunction) -> PartialFraction:
    """Decompose r into c_inf + sum C_ij (1 - z/lambda_i)**-j.

    Multiplicities are detected by clustering companion-matrix roots: a strict
    pass first, then a multiplicity-aware pass with widened radii (repeated
    roots scatter like eps**(1/nu)). A candidate decomposition is accepted only
    if it reproduces r on the imaginary axis to RECONSTRUCTION tolerance.
    """
    adm = check_lhp_admissible(r)
    if not adm.poles_rhp:
        raise InvalidParams("poles must lie in the open right half-plane")
    if not adm.proper:
        raise InvalidParams("improper rational function")
    if r.degree_num == r.degree_den:
        c_inf = complex(r.numerator_coeffs[-1] / r.denominator_coeffs[-1])
    else:
        c_inf = 0.0 + 0.0j
    roots = _poly_roots(r.denominator_coeffs)
    r0 = complex(r.numerator_coeffs[0] / r.denominator_coeffs[0])

    last_err: float | None = None
    seen: set[tuple] = set()
    for radius in _CLUSTER_RADII:
        clusters = _cluster_roots(roots, radius)
        key = tuple(nu for _, nu in clusters)
        if key in seen:
            continue
        seen.add(key)
        try:
            terms = _residues_at_clusters(r, clusters, c_inf)
            terms = _pair_conjugates(terms)
        except RootFindingFailure:
            continue
        pf = PartialFraction(c_inf, tuple(terms))
        last_err = _reconstruction_error(r, pf)
        if last_err > tol.RECONSTRUCTION:
            continue
        if abs(pf.residue_sum() - r0) > tol.ALGEBRAIC * (1.0 + abs(r0)):
            continue
        _cross_check_residues(r, pf)
        return pf
    raise RootFindingFailure(
        f"no acceptable partial-fraction decomposition (last error {last_err})"
    )


@lru_cache(maxsize=None)
def _cached_decomposition(r: RationalFunction) -> PartialFraction:
    return partial_fractions(r)


# ---------------------------------------------------------------------------
# evaluation and application


def evaluate(r: RationalFunction, z) -> complex:
    """r(z) by Horner evaluation of both polynomials; z must stay clear of
    the poles."""
    for pole in _poly_roots(r.denominator_coeffs):
        if abs(z - pole) <= tol.POLE_PROXIMITY:
            raise PoleProximity(f"z={z} is within tolerance of pole {pole}")
    num = _horner(r.numerator_coeffs, z)
    den = _horner(r.denominator_coeffs, z)
    return complex(num / den)


def _dense_matrix(a) -> np.ndarray:
    matrix = getattr(a, "matrix", a)
    return np.asarray(matrix)


class Propagator:
    """Pre-factorized application of r(hA): one LU per pole, j solves for
    multiplicity j. Safe for concurrent use once constructed."""

    def __init__(self, r: RationalFunction, h: float, a):
        if h < 0:
            raise InvalidParams("step size h must be nonnegative")
        self.r = r
        self.h = float(h)
        matrix = _dense_matrix(a)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidParams("operator must be a square matrix")
        self.m = matrix.shape[0]
        self._factors: list[tuple] = []
        if self.h == 0.0:
            self.pf = None
            return
        self.pf = _cached_decomposition(r)
        eye = np.eye(self.m, dtype=complex)
        for term in self.pf.terms:
            shifted = eye - (self.h / term.pole) * matrix
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                    lu, piv = scipy.linalg.lu_factor(shifted, check_finite=False)
            except (scipy.linalg.LinAlgError, ValueError) as exc:
                raise SingularSolve(str(exc)) from exc
            diag = np.abs(np.diag(lu))
            if not np.all(np.isfinite(lu)) or np.min(diag) == 0.0:
                raise SingularSolve(
                    f"factorization of (I - (h/{term.pole})A) is singular"
                )
            self._factors.append((lu, piv, term))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.m:
            raise DimensionMismatch(
                f"vector of length {x.shape[0]} for operator of size {self.m}"
            )
        if self.h == 0.0:
            return x.copy()
        complex_input = np.iscomplexobj(x)
        xc = np.asarray(x, dtype=complex)
        acc = self.pf.constant_term * xc
        for lu, piv, term in self._factors:
            y = xc
            for c in term.residues:
                y = scipy.linalg.lu_solve((lu, piv), y, check_finite=False)
                acc = acc + c * y
        if complex_input:
            return acc
        scale = 1.0 + float(np.max(np.abs(acc))) if acc.size else 1.0
        imag_norm = float(np.max(np.abs(acc.imag))) if acc.size else 0.0
        if imag_norm > tol.IMAG_RESIDUE * scale:
            raise ImaginaryResidue(
                f"imaginary residue {imag_norm:.3e} exceeds tolerance"
            )
        return np.ascontiguousarray(acc.real)


def propagator(r: RationalFunction, h: float, a) -> Propagator:
    return Propagator(r, h, a)


def apply(r: RationalFunction, h: float, a, x: np.ndarray) -> np.ndarray:
    """Compute r(hA) x via the partial-fraction resolvent algorithm."""
    return Propagator(r, h, a)(x)
