"""Command-line interface.

Subcommands:
  eval      evaluate the delay model at one design point
  optimize  constrained optimization over all hierarchy depths
  sweep     budget sweep, CSV output (deterministic, thread-safe)
  fit       calibrate tau/alpha/beta from a size/latency CSV
  verify    optimize + independent grid-search cross-check

Exit codes: 0 ok, 1 infeasible, 2 input error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config, model_section_text
from .fit import InsufficientDataError, fit_power_law, read_samples_csv
from .gridsearch import GridSpec, refine_search
from .models import amat
from .optimize import ConfigResult, OptimizationResult, constraint_values, optimize
from .params import ConstraintSet, Depth, DomainError, HierarchyPoint

OK, INFEASIBLE, INPUT_ERROR, VERIFY_FAIL = 0, 1, 2, 3

SWEEP_COLUMNS = (
    "budget", "winner_depth", "winner_amat", "a1", "a2", "a3",
    "frac_l1", "frac_l2", "frac_l3",
    "d1_amat", "d1_status", "d2_amat", "d2_status", "d3_amat", "d3_status",
    "active_constraints", "flags",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


def _breakdown_dict(point: HierarchyPoint, bd) -> dict:
    return {
        "depth": int(point.depth),
        "areas": list(point.areas()),
        "amat": bd.amat,
        "level_hit_terms": list(bd.level_hit_terms),
        "dram_term": bd.dram_term,
        "miss_rates": list(bd.miss_rates),
        "m_s": bd.m_s,
        "m_d": bd.m_d,
        "d_noc": bd.d_noc,
        "d_q": bd.d_q,
        "clamped": bd.clamped,
        "saturated": bd.saturated,
    }


def _config_result_dict(r: ConfigResult) -> dict:
    return {
        "depth": int(r.depth),
        "verdict": r.verdict,
        "objective": r.objective,
        "areas": list(r.point.areas()) if r.point else None,
        "feasible": r.feasible,
        "multipliers": r.multipliers,
        "active_constraints": list(r.active_constraints),
        "kkt": None if r.kkt is None else {
            "stationarity": r.kkt.stationarity,
            "max_primal_violation": r.kkt.max_primal_violation,
            "max_complementarity": r.kkt.max_complementarity,
            "dual_ok": r.kkt.dual_ok,
        },
        "warnings": list(r.warnings),
    }


def _print_result(res: OptimizationResult, file=None) -> None:
    file = file if file is not None else sys.stdout
    for d in (Depth.ONE_LEVEL, Depth.TWO_LEVEL, Depth.THREE_LEVEL):
        r = res.per_config[d]
        line = f"  depth {int(d)}: {r.verdict:<10}"
        if r.point is not None:
            areas = ", ".join(f"{a:.6g}" for a in r.point.areas())
            line += f" amat={r.objective:.6g}  areas=({areas})"
            if r.active_constraints:
                line += f"  active={','.join(r.active_constraints)}"
            if r.multipliers:
                lams = ", ".join(f"{k}={v:.4g}" for k, v in r.multipliers.items() if v)
                if lams:
                    line += f"  lambda[{lams}]"
        print(line, file=file)
        for w in r.warnings:
            print(f"    warning: {w}", file=file)
    if res.winner is None:
        print("result: no feasible configuration", file=file)
    else:
        print(f"result: depth {int(res.winner.depth)} wins, "
              f"amat={res.winner.objective:.6g}", file=file)
    for f in res.boundary_flags:
        print(f"flag: {f}", file=file)


def _sweep_constraints(cfg: ScenarioConfig, value: float) -> ConstraintSet:
    return replace(cfg.constraints, **{cfg.sweep.variable: float(value)})


def _sweep_row(cfg: ScenarioConfig, value: float, seed: int) -> list:
    res = optimize(cfg.model, _sweep_constraints(cfg, value), seed=seed)
    cells = {name: "" for name in SWEEP_COLUMNS}
    cells["budget"] = _fmt(float(value))
    per = res.per_config
    for d in (1, 2, 3):
        r = per[Depth(d)]
        cells[f"d{d}_status"] = r.verdict
        cells[f"d{d}_amat"] = _fmt(r.objective if r.point is not None else math.inf)
    if res.winner is None:
        cells["winner_depth"] = "0"
        cells["winner_amat"] = "inf"
        cells["flags"] = "infeasible"
    else:
        w = res.winner
        a1, a2, a3 = w.point.padded()
        total = sum(w.point.areas())
        incs = w.point.increments()
        fr = [inc / total for inc in incs] + [0.0] * (3 - len(incs))
        cells.update({
            "winner_depth": str(int(w.depth)),
            "winner_amat": _fmt(w.objective),
            "a1": _fmt(a1), "a2": _fmt(a2), "a3": _fmt(a3),
            "frac_l1": _fmt(fr[0]), "frac_l2": _fmt(fr[1]), "frac_l3": _fmt(fr[2]),
            "active_constraints": ";".join(w.active_constraints),
            "flags": ";".join(w.warnings + res.boundary_flags),
        })
    return [cells[name] for name in SWEEP_COLUMNS]


def run_sweep(cfg: ScenarioConfig, seed: int = 0, jobs: int = 1) -> str:
    """Render the sweep as CSV text. Byte-identical across runs and across
    thread counts: rows are computed independently and assembled in sweep
    order, and the provenance header carries no timestamps."""
    if cfg.sweep is None:
        raise ConfigError("config has no [sweep] section")
    values = list(cfg.sweep.values())
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda v: _sweep_row(cfg, v, seed), values))
    else:
        rows = [_sweep_row(cfg, v, seed) for v in values]
    lines = [
        f"# cachehier sweep v{__version__}",
        f"# config_sha256={cfg.sha256()}",
        f"# seed={seed} sweep_variable={cfg.sweep.variable}",
        ",".join(SWEEP_COLUMNS),
    ]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    try:
        areas = [float(x) for x in args.point.split(",")]
        point = HierarchyPoint.from_areas(areas)
    except (ValueError, DomainError) as exc:
        print(f"error: invalid point: {exc}", file=sys.stderr)
        return INPUT_ERROR
    bd = amat(point, cfg.model)
    g = constraint_values(point, cfg.model)
    payload = {"point": _breakdown_dict(point, bd), "constraints": g}
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    print(f"depth {int(point.depth)}  areas=({', '.join(f'{a:g}' for a in point.areas())})")
    print(f"  amat      = {bd.amat:.9g}")
    for i, (h, m) in enumerate(zip(bd.level_hit_terms, bd.miss_rates), start=1):
        print(f"  L{i}: hit_term={h:.9g}  miss={m:.9g}")
    print(f"  dram_term = {bd.dram_term:.9g}  (d_q={bd.d_q:.9g})")
    print(f"  m_s={bd.m_s:.9g}  m_d={bd.m_d:.9g}  d_noc={bd.d_noc:.9g}")
    if bd.clamped:
        print("  warning: a miss-rate law is clamped at 1 (degenerate level)")
    if bd.saturated:
        print(f"  warning: {bd.saturated} queue saturated; amat is unbounded")
    print("  constraints: " + "  ".join(f"{k}={v:.9g}" for k, v in g.items()))
    return OK


def _cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    res = optimize(cfg.model, cfg.constraints, seed=args.seed)
    _print_result(res)
    if args.output:
        payload = {
            "verdict": res.verdict,
            "winner_depth": int(res.winner.depth) if res.winner else None,
            "per_config": {str(int(d)): _config_result_dict(r)
                           for d, r in res.per_config.items()},
            "boundary_flags": list(res.boundary_flags),
        }
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return OK if res.winner is not None else INFEASIBLE


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    text = run_sweep(cfg, seed=args.seed, jobs=args.jobs)
    out = args.output or cfg.output_csv
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return OK


def _cmd_fit(args) -> int:
    try:
        samples = read_samples_csv(args.csv)
        result = fit_power_law(samples, fixed_alpha=args.fixed_alpha)
    except (OSError, DomainError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    print(f"samples: {len(samples)}  sizes {min(s.size for s in samples):g}.."
          f"{max(s.size for s in samples):g} bytes")
    print(f"tau   = {result.tau!r} ns")
    print(f"alpha = {result.alpha!r} bytes")
    print(f"beta  = {result.beta!r}")
    print(f"max relative error  = {result.max_rel_error:.6%}")
    print(f"mean relative error = {result.mean_rel_error:.6%}")
    if args.output:
        base = load_config(args.config).model if args.config else None
        if base is not None:
            model = replace(base, tau=result.tau, alpha=result.alpha, beta=result.beta)
        else:
            from .params import TechParams
            model = TechParams(tau=result.tau, alpha=result.alpha, beta=result.beta)
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(model_section_text(model))
        print(f"wrote {args.output}")
    if result.max_rel_error > args.tolerance:
        print(f"FAIL: max relative error {result.max_rel_error:.4%} exceeds "
              f"tolerance {args.tolerance:.4%}", file=sys.stderr)
        return VERIFY_FAIL
    return OK


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    res = optimize(cfg.model, cfg.constraints, seed=args.seed)
    _print_result(res)
    hi = min(
        [1e6 * cfg.model.alpha]
        + ([cfg.constraints.a_max] if cfg.constraints.a_max else [])
        + ([cfg.model.alpha * (cfg.constraints.p_max / cfg.model.rho) ** 2]
           if cfg.constraints.p_max else [])
    )
    grid = GridSpec(min_area=1e-3 * cfg.model.alpha, max_area=max(hi, cfg.model.alpha),
                    points_per_decade=args.grid_ppd)
    grid_best = math.inf
    for d in (Depth.ONE_LEVEL, Depth.TWO_LEVEL, Depth.THREE_LEVEL):
        g = refine_search(d, cfg.model, cfg.constraints, grid)
        status = f"{g.objective:.6g}" if g.feasible else "infeasible"
        print(f"  grid depth {int(d)}: {status}  ({g.n_evaluated} points)")
        if g.feasible:
            grid_best = min(grid_best, g.objective)
    if res.winner is None:
        if math.isinf(grid_best):
            print("verify: both solver and grid report infeasible")
            return INFEASIBLE
        print("verify: FAIL (solver infeasible, grid found a feasible point)",
              file=sys.stderr)
        return VERIFY_FAIL
    if math.isinf(grid_best):
        print("verify: grid found no feasible point (resolution too coarse?); "
              "solver result stands unchecked", file=sys.stderr)
        return VERIFY_FAIL
    rel = abs(res.winner.objective - grid_best) / max(1e-300, abs(grid_best))
    kkt_ok = res.winner.kkt is not None and res.winner.kkt.passes()
    print(f"verify: winner={res.winner.objective:.9g} grid={grid_best:.9g} "
          f"rel_diff={rel:.3e} kkt={'pass' if kkt_ok else 'FAIL'}")
    if rel > args.tolerance or not kkt_ok:
        return VERIFY_FAIL
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cachehier",
        description="Analytical cache hierarchy models and constrained optimizer")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="scenario config (TOML)")
        sp.add_argument("--seed", type=int, default=0,
                        help="multi-start seed (default 0)")
        sp.add_argument("--output", help="output file")

    sp = sub.add_parser("eval", help="evaluate the model at one design point")
    add_common(sp)
    sp.add_argument("--point", required=True,
                    help="comma-separated cumulative areas, e.g. 4 or 4,20 or 4,20,80")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("optimize", help="solve the constrained optimization")
    add_common(sp)
    sp.set_defaults(func=_cmd_optimize)

    sp = sub.add_parser("sweep", help="budget sweep to CSV")
    add_common(sp)
    sp.add_argument("--jobs", type=int, default=1,
                    help="concurrent sweep steps (default 1)")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("fit", help="calibrate tau/alpha/beta from CSV samples")
    sp.add_argument("--csv", required=True, help="CSV with header size_bytes,latency_ns")
    sp.add_argument("--config", help="base config whose model section is recalibrated")
    sp.add_argument("--output", help="write calibrated [model] section here")
    sp.add_argument("--fixed-alpha", type=float, default=None,
                    help="anchor alpha instead of the smallest sample size")
    sp.add_argument("--tolerance", type=float, default=0.05,
                    help="max relative error gate (default 0.05)")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("verify", help="optimize and cross-check against grid search")
    add_common(sp)
    sp.add_argument("--grid-ppd", type=int, default=12,
                    help="grid points per decade (default 12)")
    sp.add_argument("--tolerance", type=float, default=1e-4,
                    help="relative agreement tolerance (default 1e-4)")
    sp.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
