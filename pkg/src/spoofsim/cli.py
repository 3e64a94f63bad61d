"""Command-line surface.

Subcommands: check-robustness, build-medag, verify-medag, simulate,
scenario, motifs, sweep.  Exit codes: 0 success, 2 configuration or
validation failure, 3 adversary capacity violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import engine as eng
from .config import load_config, preflight
from .errors import CapacityExceeded, ConfigError, SpoofSimError
from .graphs import max_strong_robustness, strongly_robust_peel
from .medag import enumerate_motifs, kbar_bound, verify_srmedag
from .reporting import export_csv, load_run_record, render_figures
from .scenarios import SCENARIOS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LEDGER = 3


def _parser():
    p = argparse.ArgumentParser(prog="spoofsim",
                                description="Resilient distributed observer "
                                            "simulator under smart spoofing")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("check-robustness", help="topology preflight report")
    q.add_argument("--config", required=True)
    q.add_argument("--mode", type=int, default=None,
                   help="restrict the report to one mode index")

    q = sub.add_parser("build-medag", help="run construction and report per-mode DAGs")
    q.add_argument("--config", required=True)

    q = sub.add_parser("verify-medag", help="re-check a recorded run")
    q.add_argument("--trace", required=True, help="run_record.json from a run")

    q = sub.add_parser("simulate", help="run a config and export trace outputs")
    q.add_argument("--config", required=True)
    q.add_argument("--horizon", type=int, default=None)
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--out", required=True)
    q.add_argument("--no-figures", action="store_true")

    q = sub.add_parser("scenario", help="run a built-in scenario")
    q.add_argument("name", choices=sorted(SCENARIOS))
    q.add_argument("--out", default=None)
    q.add_argument("--horizon", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--no-figures", action="store_true")

    q = sub.add_parser("motifs", help="enumerate sandwich motifs from a recorded run")
    q.add_argument("--trace", required=True)

    q = sub.add_parser("sweep", help="run one config across a seed range")
    q.add_argument("--config", required=True)
    q.add_argument("--seeds", required=True, help="inclusive range a..b")
    q.add_argument("--horizon", type=int, default=None)
    return p


def _load(path, horizon=None, seed=None):
    config = load_config(path)
    raw = config.to_dict()
    changed = False
    if horizon is not None:
        raw.setdefault("params", {})["horizon"] = horizon
        changed = True
    if seed is not None:
        raw["seed"] = seed
        changed = True
    if changed:
        from .config import RunConfig
        config = RunConfig(raw)
    return config


def cmd_check_robustness(args):
    config = _load(args.config)
    report = preflight(config)
    if args.mode is not None:
        report.modes = [m for m in report.modes if m.mode == args.mode]
    print(report.format())
    timeline = config.graph_timeline()
    if len(timeline.intervals) == 1:
        g = timeline.intervals[0][1]
        for m in report.modes:
            if m.empty_sources:
                continue
            cert = strongly_robust_peel(g, m.effective_sources, max(m.robustness, 1))
            if cert.robust:
                print(f"mode {m.mode} acceptance order at r={max(m.robustness, 1)}: "
                      f"{list(cert.order)}")
            else:
                print(f"mode {m.mode} stalled residual at r={max(m.robustness, 1)}: "
                      f"{sorted(cert.residual)}")
    return EXIT_OK


def cmd_build_medag(args):
    config = _load(args.config)
    trace = eng.run(config)
    ok = True
    for j, rec in sorted(trace.construction.items()):
        report = verify_srmedag(None, rec.parent_sets, rec.sources,
                                trace.regular_ids, trace.f, trace.beta, mode=j,
                                termination_step=rec.termination_step)
        status = "terminated" if rec.termination_step is not None else "NOT terminated"
        print(f"mode {j}: {status}"
              + (f" at step {rec.termination_step}" if rec.termination_step is not None else ""))
        if report.l_bar is not None:
            bound = kbar_bound(report.l_bar, trace.k_bar, trace.tau_bar, trace.beta)
            print(f"  layers: { {m: list(v) for m, v in report.layers.items()} }")
            print(f"  longest path: {report.l_bar}, construction bound: {bound}")
        for v in report.violations:
            ok = False
            print(f"  violation: {v}")
        if rec.termination_step is None:
            ok = False
    return EXIT_OK if ok else EXIT_OK  # violations are data, not an error exit


def _verify_record(record):
    ok = True
    f, beta = record["f"], record["beta"]
    regular = record["regular_ids"]
    impersonated = sorted({i for ids in record["impersonated"].values() for i in ids})
    spoofers = record["spoofer_ids"]
    for j, per in sorted(record["modes"].items(), key=lambda kv: int(kv[0])):
        sources = per["sources"]
        parent_sets = {int(i): (frozenset(v) if v is not None else None)
                       for i, v in per["parent_sets"].items()}
        report = verify_srmedag(None, parent_sets, sources, regular, f, beta,
                                mode=int(j), termination_step=per["termination_step"])
        term = per["termination_step"]
        print(f"mode {j}: " + ("terminated at step {}".format(term)
                               if term is not None else "NOT terminated"))
        for v in report.violations:
            print(f"  violation: {v}")
            ok = False
    return ok, impersonated, spoofers


def cmd_verify_medag(args):
    record = load_run_record(args.trace)
    ok, _, _ = _verify_record(record)
    print("verdict: " + ("all properties hold" if ok else "violations found"))
    return EXIT_OK


def cmd_motifs(args):
    record = load_run_record(args.trace)
    f, beta = record["f"], record["beta"]
    regular = set(record["regular_ids"])
    spoofers = set(record["spoofer_ids"])
    impersonated = {i for ids in record["impersonated"].values() for i in ids}
    need = (beta + 1) * f
    for j, per in sorted(record["modes"].items(), key=lambda kv: int(kv[0])):
        sources = set(per["sources"])
        for i_str, parents in sorted(per["parent_sets"].items(), key=lambda kv: int(kv[0])):
            i = int(i_str)
            if parents is None or i in sources or i not in regular:
                continue
            motifs = enumerate_motifs(i, parents, regular, impersonated, spoofers,
                                      f, beta, mode=int(j))
            marks = ", ".join(
                f"(h={m.suspect}{'*' if m.suspect_hypothetical else ''},p={m.independent})"
                for m in motifs)
            common = motifs[0].common if motifs else "-"
            print(f"mode {j} node {i}: {len(motifs)} motifs (need {need}), "
                  f"common q={common}: {marks}")
    return EXIT_OK


def _run_and_export(config, outdir, figures):
    trace = eng.run(config)
    paths = export_csv(trace, outdir, tol=config.params.error_tolerance)
    if figures:
        for p in render_figures(trace, outdir):
            paths[p] = p
    summary = eng.snapshot_metrics(trace, tol=config.params.error_tolerance)
    for j, per in sorted(summary["modes"].items()):
        print(f"mode {j}: final max regular error {per['final_max_regular_error']:.3e}"
              f", first step below {per['tolerance']:g}: {per['first_step_below_tol']}"
              f", construction terminated at {per['termination_step']}"
              f" (bound {per['kbar_bound']})")
    print(f"outputs written to {outdir}")
    return trace


def cmd_simulate(args):
    config = _load(args.config, horizon=args.horizon, seed=args.seed)
    _run_and_export(config, args.out, figures=not args.no_figures)
    return EXIT_OK


def cmd_scenario(args):
    config = SCENARIOS[args.name](horizon=args.horizon, seed=args.seed)
    outdir = args.out or f"scenario_{args.name}_out"
    with_figs = not args.no_figures
    print(preflight(config).format())
    _run_and_export(config, outdir, figures=with_figs)
    path = f"{outdir}/config.json"
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"config written to {path}")
    return EXIT_OK


def cmd_sweep(args):
    try:
        lo, hi = args.seeds.split("..")
        seeds = range(int(lo), int(hi) + 1)
    except ValueError as exc:
        raise ConfigError(f"bad --seeds range {args.seeds!r}: {exc}") from exc
    base = load_config(args.config)
    raw = base.to_dict()
    if args.horizon is not None:
        raw.setdefault("params", {})["horizon"] = args.horizon
    from .config import RunConfig
    worst = 0.0
    for seed in seeds:
        raw["seed"] = seed
        config = RunConfig(raw)
        trace = eng.run(config)
        summary = eng.snapshot_metrics(trace, tol=config.params.error_tolerance)
        final = max(per["final_max_regular_error"]
                    for per in summary["modes"].values()) if summary["modes"] else 0.0
        worst = max(worst, final)
        terms = {j: per["termination_step"] for j, per in summary["modes"].items()}
        print(f"seed {seed}: final max error {final:.3e}, terminations {terms}")
    print(f"worst final max error over {len(seeds)} seeds: {worst:.3e}")
    return EXIT_OK


_COMMANDS = {
    "check-robustness": cmd_check_robustness,
    "build-medag": cmd_build_medag,
    "verify-medag": cmd_verify_medag,
    "simulate": cmd_simulate,
    "scenario": cmd_scenario,
    "motifs": cmd_motifs,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CapacityExceeded as exc:
        print(f"capacity ledger violation: {exc}", file=sys.stderr)
        return EXIT_LEDGER
    except (ConfigError, SpoofSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
