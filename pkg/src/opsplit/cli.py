"""Batch experiment front-end: run a config, write CSV reports and a summary.

Exit codes: 0 success, 2 configured threshold failed, 1 error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import analysis
from .config import ExperimentConfig, load_config
from .errors import OpsplitError
from .rational import catalog
from .splitting import VARIANTS

def _round(value, digits: int = 4) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


_STUDY_BLURBS = {
    "convergence": "joint-limit convergence of the split rational stepping "
    "against a reference solution",
    "consistency": "uniform-in-resolution consistency of the one-step map's "
    "difference quotient",
    "stability": "power-boundedness of the one-step map in the induced max norm",
    "trotter_kato": "convergence of the lifted discrete propagator to the "
    "continuous solution, uniformly over a step interval",
}


def _run_convergence(cfg: ExperimentConfig, lines: list[str]) -> bool:
    report = analysis.convergence_study(
        cfg.scheme,
        cfg.family(),
        cfg.t,
        cfg.m_list,
        cfg.n_list,
        reference=cfg.reference,
        threads=cfg.threads,
    )
    _write(cfg, "convergence", report.to_csv())
    lines.append(f"problem: {report.problem}")
    lines.append(f"scheme:  {report.scheme}")
    for m, order in report.order_in_n.items():
        lines.append(f"order in n at m={m}: {_round(order)}")
    for n, order in report.order_in_m.items():
        lines.append(f"order in m at n={n}: {_round(order)}")
    if report.diagonal:
        diag = ", ".join(f"({m}, {err:.6e})" for m, err in report.diagonal)
        lines.append(f"diagonal m=n errors: {diag}")
        lines.append(
            f"diagonal non-increasing (10% slack): {report.diagonal_nonincreasing()}"
        )
    ok = True
    thr = cfg.thresholds
    if "order_in_n_target" in thr:
        target = float(thr["order_in_n_target"])
        tol = float(thr.get("order_in_n_tol", 0.2))
        finest = max(cfg.m_list)
        measured = report.order_in_n.get(finest)
        hit = measured is not None and abs(measured - target) <= tol
        lines.append(
            f"threshold order_in_n at m={finest}: target {target} +- {tol}, "
            f"measured {_round(measured)} -> {'PASS' if hit else 'FAIL'}"
        )
        ok = ok and hit
    if thr.get("diagonal_nonincreasing"):
        hit = report.diagonal_nonincreasing()
        lines.append(f"threshold diagonal_nonincreasing: {'PASS' if hit else 'FAIL'}")
        ok = ok and hit
    return ok


def _run_consistency(cfg: ExperimentConfig, lines: list[str]) -> bool:
    report = analysis.chernoff_consistency(
        cfg.scheme,
        cfg.family(),
        cfg.m_list,
        cfg.h_list,
        threads=cfg.threads,
    )
    _write(cfg, "consistency", report.to_csv())
    lines.append(f"problem: {report.problem}")
    lines.append(f"scheme:  {report.scheme}")
    for h, sup in report.sup_over_m.items():
        lines.append(f"sup over m at h={h:g}: {sup:.6e}")
    factors = report.halving_factors()
    if factors:
        lines.append("consecutive factors: " + ", ".join(f"{f:.4f}" for f in factors))
    ok = True
    if "decrease_factor" in cfg.thresholds:
        factor = float(cfg.thresholds["decrease_factor"])
        hit = report.decreases(factor)
        lines.append(
            f"threshold decrease_factor {factor} (endpoint-normalized): "
            f"{'PASS' if hit else 'FAIL'}"
        )
        ok = hit
    return ok


def _run_stability(cfg: ExperimentConfig, lines: list[str]) -> bool:
    family = cfg.family()
    m_target = float(cfg.thresholds.get("stability_m", 1.0))
    omega_target = float(cfg.thresholds.get("stability_omega", 0.0))
    reports = [
        analysis.stability_scan(
            cfg.scheme,
            family.build(m, combine=cfg.scheme.variant == "none"),
            cfg.h_list,
            cfg.k_max,
            m_target=m_target,
            omega_target=omega_target,
            threads=cfg.threads,
        )
        for m in cfg.m_list
    ]
    merged = analysis.merge_stability(reports)
    _write(cfg, "stability", merged.to_csv())
    lines.append(f"problem: {family.name}")
    lines.append(f"scheme:  {merged.scheme}")
    worst = max(r[3] for r in merged.rows)
    lines.append(f"max power norm over scan: {worst:.12g}")
    lines.append(
        f"fitted bound: M={merged.fitted_m:.12g}, omega={merged.fitted_omega:g}"
    )
    if "stability_m" in cfg.thresholds or "stability_omega" in cfg.thresholds:
        lines.append(
            f"threshold M<={m_target:g}, omega<={omega_target:g}: "
            f"{'PASS' if merged.passed else 'FAIL'}"
        )
        return merged.passed
    return True


def _run_trotter_kato(cfg: ExperimentConfig, lines: list[str]) -> bool:
    family = cfg.family()
    report = analysis.trotter_kato_check(
        cfg.scheme.r,
        cfg.operator_a["kind"],
        cfg.operator_a["params"],
        cfg.m_list,
        cfg.h_list,
        family.initial,
        threads=cfg.threads,
    )
    _write(cfg, "trotter_kato", report.to_csv())
    lines.append(f"operator: {report.operator}")
    for m, err in report.rows:
        lines.append(f"max error over h grid at m={m}: {err:.6e}")
    if report.ratios:
        lines.append(
            "error ratios per m-doubling: "
            + ", ".join(f"{r:.3f}" for r in report.ratios)
        )
    ok = True
    if "min_ratio" in cfg.thresholds:
        min_ratio = float(cfg.thresholds["min_ratio"])
        hit = all(r >= min_ratio for r in report.ratios)
        lines.append(f"threshold min_ratio {min_ratio:g}: {'PASS' if hit else 'FAIL'}")
        ok = hit
    return ok


_RUNNERS = {
    "convergence": _run_convergence,
    "consistency": _run_consistency,
    "stability": _run_stability,
    "trotter_kato": _run_trotter_kato,
}


def _write(cfg: ExperimentConfig, study: str, csv_text: str) -> None:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{study}.csv").write_bytes(csv_text.encode("ascii"))


def run_config(cfg: ExperimentConfig) -> int:
    started = time.perf_counter()
    lines = [f"study: {cfg.study}", f"verifies: {_STUDY_BLURBS[cfg.study]}"]
    ok = _RUNNERS[cfg.study](cfg, lines)
    lines.append(f"result: {'PASS' if ok else 'FAIL'}")
    elapsed = time.perf_counter() - started
    lines.append(
        f"wall time: {elapsed:.3f} s (informational; not covered by the "
        "byte-identical output contract)"
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if ok else 2


def _print_schemes() -> None:
    print("built-in schemes:")
    for name in catalog():
        print(f"  {name}")
    print("also accepted:")
    print("  iterated_resolvent:<k>   for any integer k >= 1")
    print("  custom:[a0,a1,...]/[b0,b1,...]   coefficients in ascending degree")
    print(f"splitting variants: {', '.join(VARIANTS)}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="opsplit",
        description="Run operator-splitting discretization experiments from a "
        "YAML config.",
    )
    parser.add_argument(
        "--list-schemes", action="store_true", help="print the scheme catalog and exit"
    )
    sub = parser.add_subparsers(dest="command")
    run_p = sub.add_parser("run", help="run the study described by a config file")
    run_p.add_argument("config", type=str)
    sub.add_parser("list-schemes", help="print the scheme catalog")
    val_p = sub.add_parser("validate", help="validate a config file and exit")
    val_p.add_argument("config", type=str)

    args = parser.parse_args(argv)
    if args.list_schemes or args.command == "list-schemes":
        _print_schemes()
        return 0
    if args.command is None:
        parser.print_help()
        return 1
    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"config ok: study={cfg.study}, output_dir={cfg.output_dir}")
            return 0
        return run_config(cfg)
    except OpsplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
