"""Command-line front end: ``uiobank analyze|design|simulate|reproduce``.

Exit codes: 0 ok, 2 invalid input, 3 synthesis failure, 4 divergence,
5 a reproduced example failed its check. Every override flag can also be
set through an environment variable ``UIOBANK_<FLAG>`` (``--bank-cap`` reads
``UIOBANK_BANK_CAP``); an explicit flag wins over the environment.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import catalog, documents
from .attacks import IsolationPolicy
from .control import design_static, design_switching_gains, max_qstar, search_certificate
from .errors import (
    DesignInfeasible, InvalidInput, NoConvergence, SimulationDiverged, UioBankError,
    UnstabilizableConfiguration,
)
from .sim import build, metrics, simulate
from .uio import bank_size, enumerate_bank, max_q, max_q1_q2

EXIT_OK, EXIT_INVALID, EXIT_SYNTHESIS, EXIT_DIVERGED, EXIT_CHECK_FAILED = 0, 2, 3, 4, 5
ENV_PREFIX = "UIOBANK_"

log = logging.getLogger("uiobank")


class UsageError(InvalidInput):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return None
    try:
        return cast(raw)
    except ValueError:
        raise InvalidInput(f"{ENV_PREFIX}{name.upper()}={raw!r} is not a valid value") from None


def _add_overrides(p):
    p.add_argument("--seed", type=int, help="RNG seed (UIOBANK_SEED)")
    p.add_argument("--horizon", type=int, help="number of steps (UIOBANK_HORIZON)")
    p.add_argument("--eps", type=float, help="isolation threshold (UIOBANK_EPS)")
    p.add_argument("--warmup", type=int, help="steps before isolation (UIOBANK_WARMUP)")
    p.add_argument("--window", type=int, help="isolation persistence window (UIOBANK_WINDOW)")
    p.add_argument("--priority", choices=("q1", "q2"), help="index maximized first")
    p.add_argument("--bank-cap", type=int, help="largest bank to synthesize (UIOBANK_BANK_CAP)")


def _resolve_env(args):
    casts = {"seed": int, "horizon": int, "eps": float, "warmup": int, "window": int,
             "priority": str, "bank_cap": int, "out": str}
    for name, cast in casts.items():
        if getattr(args, name, "absent") is None:
            setattr(args, name, _env(name, cast))
    if args.priority is not None and args.priority not in ("q1", "q2"):
        raise InvalidInput(f"priority must be q1 or q2, got {args.priority!r}")


def _apply_overrides(s, args):
    kw = {}
    for name in ("seed", "horizon", "priority", "bank_cap"):
        if getattr(args, name) is not None:
            kw[name] = getattr(args, name)
    pol = {k: getattr(args, k) for k in ("eps", "warmup", "window") if getattr(args, k) is not None}
    if pol:
        kw["isolation"] = IsolationPolicy(**{**s.isolation.__dict__, **pol})
    s = replace(s, **kw)
    s.validate()
    return s


def _out_dir(args, default):
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- analyze ------------------------------------------------------------------

def analyze_plant(plant, priority="q1", cap=10_000):
    """Redundancy indices, bank sizes and designability of small banks."""
    q = max_q(plant)
    q1, q2 = max_q1_q2(plant, priority=priority)
    qstar = max_qstar(plant)
    warnings = []
    if q == 0:
        warnings.append("no sensor redundancy (q = 0): the complete scheme is unavailable")
    scheme = "complete" if q >= 1 else ("partial" if (q1, q2) != (0, 0) else "none")
    report = {
        "n": plant.n, "n_u": plant.n_u, "n_y": plant.n_y,
        "q": q, "q1": q1, "q2": q2, "priority": priority, "qstar": qstar,
        "scheme": scheme,
        "complete_bank_size": bank_size(plant, "complete", (q,)) if q >= 1 else 0,
        "partial_bank_size": bank_size(plant, "partial", (q1, q2)) if (q1, q2) != (0, 0) else 0,
        "partial_banks": [],
        "warnings": warnings,
    }
    for a in range(0, (plant.n_u - 1) // 2 + 1):
        for b in range(0, (plant.n_y - 1) // 2 + 1):
            if (a, b) == (0, 0) or bank_size(plant, "partial", (a, b)) > cap:
                continue
            spec = enumerate_bank(plant, "partial", (a, b), cap=cap, prune_infeasible=True)
            total = bank_size(plant, "partial", (a, b))
            report["partial_banks"].append({
                "q1": a, "q2": b, "size": total,
                "designable": total - len(spec.dropped),
                "selectable_primaries": len(spec.primary),
            })
    return report


def _print_analysis(r):
    print(f"plant: n={r['n']} n_u={r['n_u']} n_y={r['n_y']}")
    print(f"q = {r['q']}  (complete bank size {r['complete_bank_size']})")
    print(f"(q1, q2) = ({r['q1']}, {r['q2']})  [priority {r['priority']}]  "
          f"(partial bank size {r['partial_bank_size']})")
    print(f"q* = {r['qstar']}")
    print(f"scheme: {r['scheme']}")
    for b in r["partial_banks"]:
        print(f"  partial ({b['q1']},{b['q2']}): {b['designable']}/{b['size']} designable, "
              f"{b['selectable_primaries']} selectable primaries")
    for w in r["warnings"]:
        print(f"warning: {w}")


def cmd_analyze(args):
    plant = documents.load_plant(args.plant)
    report = analyze_plant(plant, args.priority or "q1", args.bank_cap or 10_000)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _print_analysis(report)
    if args.out:
        documents.write_json(_out_dir(args, args.out) / "analysis.json", report)
    return EXIT_OK


# -- design -------------------------------------------------------------------

def cmd_design(args):
    plant = documents.load_plant(args.plant)
    out = _out_dir(args, "design_out")
    kind = args.kind
    indices = tuple(args.indices) if args.indices else None
    if kind == "auto":
        kind = "complete" if (indices and len(indices) == 1) or (
            indices is None and max_q(plant) >= 1) else "partial"
    if indices is None:
        indices = (max_q(plant),) if kind == "complete" else max_q1_q2(
            plant, priority=args.priority or "q1")
    spec = enumerate_bank(plant, kind, indices, cap=args.bank_cap or 10_000,
                          prune_infeasible=args.prune)
    documents.write_json(out / "bank.json", documents.bank_to_dict(spec, plant))
    print(f"{kind} bank {tuple(spec.indices)}: {len(spec)} observers, "
          f"{len(spec.dropped)} dropped, max rho(N) = {spec.max_spectral_radius():.4g}")
    gains = {"static": documents._matrix(design_static(plant)), "switching": None}
    qstar = max_qstar(plant)
    if qstar >= 1:
        table = design_switching_gains(plant, qstar)
        gains["switching"] = documents.gains_to_dict(table, search_certificate(table))
    documents.write_json(out / "gains.json", gains)
    print(f"wrote {out / 'bank.json'} and {out / 'gains.json'}")
    return EXIT_OK


# -- simulate -----------------------------------------------------------------

def _write_run(out, s, t, setup, checks=(), plots=True):
    out.mkdir(parents=True, exist_ok=True)
    documents.write_trace_csv(t, out / "trace.csv")
    documents.write_json(out / "summary.json",
                         documents.summary_dict(t, setup, metrics(t), checks))
    documents.write_json(out / "scenario.json", documents.scenario_to_dict(s))
    if plots:
        documents.write_plot_data(t, out / "plots")


def _simulate_one(path, args, out):
    s = _apply_overrides(documents.load_scenario(path), args)
    if args.plant:
        s = replace(s, plant=documents.load_plant(args.plant))
    setup = build(s)
    t = simulate(s, setup)
    _write_run(out, s, t, setup, plots=not args.no_plots)
    m = metrics(t)
    return (f"{s.name}: |e(0)|={m['initial_error']:.3g} |e(T-1)|={m['final_error']:.3g} "
            f"isolation=({m['W_u_final']}, {m['W_y_final']}) -> {out}")


def _simulate_job(job):
    path, args, out = job
    try:
        return EXIT_OK, _simulate_one(path, args, out)
    except UioBankError as exc:
        return exit_code(exc), f"{path}: {type(exc).__name__}: {exc}"


def cmd_simulate(args):
    root = _out_dir(args, "sim_out")
    paths = args.scenario
    outs = [root] if len(paths) == 1 else [root / Path(p).stem for p in paths]
    jobs = list(zip(paths, [args] * len(paths), outs))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_simulate_job, jobs))
    else:
        results = [_simulate_job(j) for j in jobs]
    code = EXIT_OK
    for rc, msg in results:
        print(msg, file=sys.stdout if rc == EXIT_OK else sys.stderr)
        code = max(code, rc)
    return code


# -- reproduce ----------------------------------------------------------------

def cmd_reproduce(args):
    ids = list(range(1, 7)) if args.example == "all" else [int(args.example)]
    if any(not 1 <= i <= 6 for i in ids):
        raise InvalidInput(f"example id must be in 1..6 or 'all', got {args.example!r}")
    if args.seeds < 1:
        raise InvalidInput(f"--seeds must be >= 1, got {args.seeds}")
    root = _out_dir(args, "reproduce_out")
    seed = 0 if args.seed is None else args.seed
    failed = False
    for ex in ids:
        for sd in range(seed, seed + args.seeds):
            s = _apply_overrides(catalog.scenario(ex, seed=sd), args)
            setup = build(s)
            t = simulate(s, setup)
            checks = catalog.run_checks(ex, t, setup, s)
            out = root / f"example{ex}" / f"seed{sd}"
            _write_run(out, s, t, setup, checks, plots=not args.no_plots)
            for c in checks:
                print(f"seed {sd} {c.line()}")
                failed |= not c.passed
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser():
    p = _Parser(prog="uiobank",
                description="Observer banks for attack-resilient estimation and control.",
                epilog="Exit codes: 0 ok, 2 invalid input, 3 synthesis failure, 4 divergence, "
                       "5 failed example check. Flags can be set via UIOBANK_<FLAG>.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="redundancy indices and bank sizes of a plant")
    a.add_argument("--plant", required=True)
    a.add_argument("--out")
    a.add_argument("--priority", choices=("q1", "q2"))
    a.add_argument("--bank-cap", type=int)
    a.add_argument("--json", action="store_true", help="print the report as JSON")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("design", help="synthesize and export an observer bank and gains")
    d.add_argument("--plant", required=True)
    d.add_argument("--out")
    d.add_argument("--kind", choices=("auto", "complete", "partial"), default="auto")
    d.add_argument("--indices", type=int, nargs="+", help="q, or q1 q2")
    d.add_argument("--prune", action="store_true", help="drop infeasible observers")
    d.add_argument("--priority", choices=("q1", "q2"))
    d.add_argument("--bank-cap", type=int)
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", help="run scenario documents")
    s.add_argument("--scenario", required=True, nargs="+")
    s.add_argument("--plant", help="replace the scenario's plant")
    s.add_argument("--out")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-plots", action="store_true")
    _add_overrides(s)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="run a built-in worked example and check it")
    r.add_argument("example", help="1..6 or 'all'")
    r.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    r.add_argument("--out")
    r.add_argument("--no-plots", action="store_true")
    _add_overrides(r)
    r.set_defaults(func=cmd_reproduce)
    return p


def exit_code(exc):
    if isinstance(exc, SimulationDiverged):
        return EXIT_DIVERGED
    if isinstance(exc, (DesignInfeasible, UnstabilizableConfiguration, NoConvergence)):
        return EXIT_SYNTHESIS
    if isinstance(exc, InvalidInput):
        return EXIT_INVALID
    return 1


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                            format="%(levelname)s %(name)s: %(message)s")
        _resolve_env(args)
        return args.func(args)
    except UioBankError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
