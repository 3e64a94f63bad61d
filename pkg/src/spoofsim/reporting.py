"""Trace outputs: delimited files, run records, summaries, and figures.

CSV files are the canonical outputs and are byte-identical across runs of
the same config and seed: rows are emitted in a fixed order and floats are
rendered with repr.  Figures (per-mode estimate and error plots) are
rendered alongside them for quick inspection; the run record JSON carries
the ground-truth construction data that verify/motif commands re-check.
"""

from __future__ import annotations

import json
import os

from .engine import SimTrace, snapshot_metrics

ESTIMATES_CSV = "estimates.csv"
EVENTS_CSV = "events.csv"
SUMMARY_JSON = "summary.json"
RUN_RECORD_JSON = "run_record.json"


def _fmt(x: float) -> str:
    return repr(float(x))


def export_csv(trace: SimTrace, outdir, tol: float = 1e-6) -> dict:
    """Write estimates.csv, events.csv, summary.json, run_record.json.

    Returns the mapping of logical name -> path.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {}

    path = os.path.join(outdir, ESTIMATES_CSV)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={trace.config_hash} seed={trace.seed}\n")
        fh.write("step,node,mode,estimate_z,true_z,error\n")
        for j in trace.consensus_modes:
            for i in trace.regular_ids:
                series = trace.estimates[(i, j)]
                for k, est in enumerate(series):
                    true = trace.truth_z[k][j - 1]
                    fh.write(f"{k},{i},{j},{_fmt(est)},{_fmt(true)},{_fmt(est - true)}\n")
    paths["estimates"] = path

    path = os.path.join(outdir, EVENTS_CSV)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={trace.config_hash} seed={trace.seed}\n")
        fh.write("step,event,node,mode,sender,value,detail\n")
        for ev in trace.events:
            detail = ev.detail.replace(",", ";")
            fh.write(f"{ev.step},{ev.kind},{ev.node},{ev.mode},{ev.sender},"
                     f"{_fmt(ev.value)},{detail}\n")
    paths["events"] = path

    summary = snapshot_metrics(trace, tol=tol)
    path = os.path.join(outdir, SUMMARY_JSON)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    paths["summary"] = path

    path = os.path.join(outdir, RUN_RECORD_JSON)
    with open(path, "w") as fh:
        json.dump(run_record(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["run_record"] = path
    return paths


def _jsonable(obj):
    if isinstance(obj, (set, frozenset, tuple)):
        return sorted(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def run_record(trace: SimTrace) -> dict:
    """Ground-truth record of a run, sufficient to re-verify the per-mode
    construction and enumerate motifs offline."""
    record = {
        "config_hash": trace.config_hash,
        "seed": trace.seed,
        "f": trace.f,
        "beta": trace.beta,
        "k_bar": trace.k_bar,
        "tau_bar": trace.tau_bar,
        "regular_ids": list(trace.regular_ids),
        "spoofer_ids": list(trace.spoofer_ids),
        "impersonated": {str(s): list(v) for s, v in trace.impersonated.items()},
        "modes": {},
    }
    for j, rec in trace.construction.items():
        record["modes"][str(j)] = {
            "sources": sorted(rec.sources),
            "termination_step": rec.termination_step,
            "flip_steps": {str(i): s for i, s in sorted(rec.flip_steps.items())},
            "parent_sets": {str(i): (sorted(ps) if ps is not None else None)
                            for i, ps in sorted(rec.parent_sets.items())},
        }
    return record


def load_run_record(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def render_figures(trace: SimTrace, outdir) -> list:
    """Per-mode PNGs: every regular estimate against the true trajectory,
    and the error magnitudes on a log scale."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(outdir, exist_ok=True)
    steps = range(len(trace.truth_z))
    written = []
    for j in trace.consensus_modes:
        fig, (ax_est, ax_err) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
        truth = [trace.truth_z[k][j - 1] for k in steps]
        ax_est.plot(steps, truth, "k--", linewidth=2, label="true value")
        for i in trace.regular_ids:
            ax_est.plot(steps, trace.estimates[(i, j)], linewidth=0.8)
        ax_est.set_ylabel(f"mode {j} estimates")
        ax_est.legend(loc="best")
        for i in trace.regular_ids:
            errs = [abs(e) if abs(e) > 1e-300 else 1e-300
                    for e in trace.error_series(i, j)]
            ax_err.semilogy(steps, errs, linewidth=0.8)
        ax_err.set_ylabel(f"mode {j} |error|")
        ax_err.set_xlabel("step")
        fig.suptitle(f"mode {j} (lambda={trace.eigenvalues[j - 1]:g})")
        fig.tight_layout()
        path = os.path.join(outdir, f"mode_{j}.png")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written
