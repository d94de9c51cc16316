"""Experiment configuration: YAML parsing, validation, and assembly of the
problem family and splitting scheme."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis import ProblemFamily
from .errors import ConfigError, InvalidParams, UnsupportedProblem
from .oracle import exact_solution
from .rational import ExactPropagator, RationalFunction, parse_scheme
from .spatial import build_operator, function_from_expression
from .splitting import VARIANTS, SplitScheme

STUDIES = ("convergence", "consistency", "stability", "trotter_kato")

_THRESHOLD_KEYS = {
    "convergence": {"order_in_n_target", "order_in_n_tol", "diagonal_nonincreasing"},
    "consistency": {"decrease_factor"},
    "stability": {"stability_m", "stability_omega"},
    "trotter_kato": {"min_ratio"},
}


@dataclass
class ExperimentConfig:
    study: str
    operator_a: dict
    operator_b: dict | None
    initial: str
    scheme: SplitScheme
    t: float = 0.1
    m_list: list[int] = field(default_factory=lambda: [16, 32, 64, 128])
    n_list: list[int] = field(default_factory=list)
    h_list: list[float] = field(default_factory=list)
    k_max: int = 1024
    reference: str = "exact"
    thresholds: dict = field(default_factory=dict)
    output_dir: str = "out"
    threads: int = 1

    def family(self) -> ProblemFamily:
        return _family_from_operators(self.operator_a, self.operator_b, self.initial)


def _require(cfg: dict, key: str, kind, where: str = ""):
    name = f"{where}.{key}" if where else key
    if key not in cfg:
        raise ConfigError(name, "missing")
    value = cfg[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(name, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _int_list(cfg: dict, key: str, required: bool) -> list[int]:
    if key not in cfg:
        if required:
            raise ConfigError(key, "missing")
        return []
    values = cfg[key]
    if (
        not isinstance(values, list)
        or not values
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in values)
    ):
        raise ConfigError(key, "must be a nonempty list of integers")
    if values != sorted(values) or len(set(values)) != len(values):
        raise ConfigError(key, "must be strictly increasing")
    return list(values)


def _float_list(cfg: dict, key: str, required: bool) -> list[float]:
    if key not in cfg:
        if required:
            raise ConfigError(key, "missing")
        return []
    values = cfg[key]
    if (
        not isinstance(values, list)
        or not values
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values)
    ):
        raise ConfigError(key, "must be a nonempty list of numbers")
    return [float(v) for v in values]


def _parse_operator(spec, where: str) -> dict:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(where, "must be a mapping with a 'kind' entry")
    kind = spec["kind"]
    params = {k: v for k, v in spec.items() if k != "kind"}
    try:
        build_operator(kind, params, 8)  # validate eagerly at a probe size
    except InvalidParams as exc:
        raise ConfigError(where, str(exc)) from exc
    return {"kind": kind, "params": params}


def _parse_scheme_field(cfg: dict, key: str) -> RationalFunction | ExactPropagator | None:
    if key not in cfg or cfg[key] is None:
        return None
    try:
        return parse_scheme(str(cfg[key]))
    except InvalidParams as exc:
        raise ConfigError(f"scheme.{key}", str(exc)) from exc


def _family_from_operators(op_a: dict, op_b: dict | None, initial: str) -> ProblemFamily:
    init_fn = function_from_expression(initial)
    specs = [op_a] + ([op_b] if op_b else [])
    nu = c = 0.0
    rho = None
    closed_form = True
    for spec in specs:
        kind, params = spec["kind"], spec["params"]
        if kind == "diffusion":
            nu += float(params["nu"])
        elif kind == "advection":
            c += float(params["c"])
        elif kind == "reaction":
            if isinstance(params["rho"], (int, float)):
                rho = (rho or 0.0) + float(params["rho"])
            else:
                closed_form = False
        else:
            closed_form = False
    exact = None
    if closed_form:
        try:
            if rho is None:
                exact = exact_solution(
                    "advection_diffusion", init_fn, {"nu": nu, "c": c}
                )
            elif c == 0.0:
                exact = exact_solution(
                    "diffusion_reaction", init_fn, {"nu": nu, "rho": rho}
                )
        except UnsupportedProblem:
            exact = None
    names = "+".join(s["kind"] for s in specs)
    return ProblemFamily(
        name=f"{names}[{initial}]",
        make_a=lambda m: build_operator(op_a["kind"], op_a["params"], m),
        make_b=(
            (lambda m: build_operator(op_b["kind"], op_b["params"], m))
            if op_b
            else None
        ),
        initial=init_fn,
        exact=exact,
    )


def validate_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    study = _require(raw, "study", str)
    if study not in STUDIES:
        raise ConfigError("study", f"must be one of {', '.join(STUDIES)}")

    problem = _require(raw, "problem", dict)
    operators = _require(problem, "operators", dict, "problem")
    if "A" not in operators:
        raise ConfigError("problem.operators.A", "missing")
    op_a = _parse_operator(operators["A"], "problem.operators.A")
    op_b = (
        _parse_operator(operators["B"], "problem.operators.B")
        if operators.get("B")
        else None
    )
    unknown_ops = set(operators) - {"A", "B"}
    if unknown_ops:
        raise ConfigError("problem.operators", f"unknown keys {sorted(unknown_ops)}")
    initial = _require(problem, "initial", str, "problem")
    try:
        function_from_expression(initial)
    except InvalidParams as exc:
        raise ConfigError("problem.initial", str(exc)) from exc

    scheme_cfg = _require(raw, "scheme", dict)
    variant = scheme_cfg.get("splitting", "none")
    if variant not in VARIANTS:
        raise ConfigError("scheme.splitting", f"must be one of {', '.join(VARIANTS)}")
    theta = scheme_cfg.get("theta")
    if theta is not None:
        if isinstance(theta, bool) or not isinstance(theta, (int, float)):
            raise ConfigError("theta", "must be a number")
        if not 0.0 <= float(theta) <= 1.0:
            raise ConfigError("theta", f"must lie in [0, 1], got {theta}")
    r_scheme = _parse_scheme_field(scheme_cfg, "r")
    if r_scheme is None:
        raise ConfigError("scheme.r", "missing")
    q_scheme = _parse_scheme_field(scheme_cfg, "q")
    if variant != "none" and op_b is not None and q_scheme is None:
        raise ConfigError("scheme.q", f"required for {variant} splitting with operator B")
    try:
        scheme = SplitScheme(variant, r_scheme, q_scheme, theta)
    except InvalidParams as exc:
        raise ConfigError("scheme", str(exc)) from exc

    t = float(_require(raw, "t", float)) if "t" in raw else 0.1
    if t < 0:
        raise ConfigError("t", "must be nonnegative")
    m_list = _int_list(raw, "m_list", required=True)
    n_list = _int_list(raw, "n_list", required=(study == "convergence"))
    h_list = _float_list(
        raw, "h_list", required=(study in ("consistency", "stability", "trotter_kato"))
    )
    if study == "consistency" and any(h <= 0 for h in h_list):
        raise ConfigError("h_list", "consistency requires positive h values")
    if study in ("stability", "trotter_kato") and any(h < 0 for h in h_list):
        raise ConfigError("h_list", "h values must be nonnegative")

    k_max = raw.get("k_max", 1024)
    if not isinstance(k_max, int) or isinstance(k_max, bool) or not 1 <= k_max <= 1024:
        raise ConfigError("k_max", "must be an integer in [1, 1024]")
    reference = raw.get("reference", "exact")
    if reference not in ("exact", "expm"):
        raise ConfigError("reference", "must be 'exact' or 'expm'")
    thresholds = raw.get("thresholds", {}) or {}
    if not isinstance(thresholds, dict):
        raise ConfigError("thresholds", "must be a mapping")
    unknown = set(thresholds) - _THRESHOLD_KEYS[study]
    if unknown:
        raise ConfigError(
            "thresholds",
            f"unknown keys for {study}: {sorted(unknown)}",
        )
    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir", "must be a string")
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        raise ConfigError("threads", "must be a positive integer")

    known = {
        "study", "problem", "scheme", "t", "m_list", "n_list", "h_list",
        "k_max", "reference", "thresholds", "output_dir", "threads",
    }
    extra = set(raw) - known
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown top-level key")

    return ExperimentConfig(
        study=study,
        operator_a=op_a,
        operator_b=op_b,
        initial=initial,
        scheme=scheme,
        t=t,
        m_list=m_list,
        n_list=n_list,
        h_list=h_list,
        k_max=k_max,
        reference=reference,
        thresholds=thresholds,
        output_dir=output_dir,
        threads=threads,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from exc
    return validate_config(raw)
