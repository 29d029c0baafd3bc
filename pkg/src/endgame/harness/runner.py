"""Experiment execution: sweep-cell expansion, replication scheduling,
and CSV emission.

Each cell derives its random streams from the root seed plus its own
coordinates (model, policy, parameter values, replication index), so
changing one cell never perturbs another and results are identical at
any parallelism degree.  Aggregation is an ordered reduce over the cell
list.
"""

from __future__ import annotations

import csv
import itertools
import os
import pathlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .. import balls_bins, bins_engine, opaque
from ..streams import resolve_root_seed
from .config import ExperimentConfig, default_replications
from .stats import summarize

SCHEMA_VERSION = 1

RAW_METRICS = {
    "bins": ("final_gap", "flex_count", "first_trigger"),
    "opaque": ("R", "D"),
    "parcel": ("total_cost", "travel_cost", "overtime_cost", "flex_count",
               "mean_unload_hours", "mean_travel_hours", "mad_unload_hours",
               "overtime_freq"),
}

# per-process cache of loaded parcel corpora and tables, keyed by path
_PARCEL_CACHE: dict = {}


def expand_cells(config: ExperimentConfig) -> list[dict]:
    """Cartesian product of policies and sweep axes, in config order."""
    axes = list(config.sweep.items())
    cells = []
    for policy in config.policies:
        for combo in itertools.product(*(values for _, values in axes)):
            overrides = dict(zip((name for name, _ in axes), combo))
            cells.append({"policy": policy, "overrides": overrides})
    return cells


def _policy_dict(policy) -> dict:
    if isinstance(policy, str):
        return {"kind": policy}
    return dict(policy)


def _cell_tokens(policy: dict, params: dict) -> tuple:
    """Canonical stream-path coordinates of one cell."""
    tokens = [f"policy={policy['kind']}"]
    tokens += [f"{k}={params[k]}" for k in sorted(params)]
    return tuple(tokens)


def run_cell(model: str, policy: dict, params: dict, reps: int,
             root_seed: int, preset: str) -> list[dict]:
    """Execute one cell and return its raw rows."""
    if model == "bins":
        rows = _run_bins_cell(policy, params, reps, root_seed, preset)
    elif model == "opaque":
        rows = _run_opaque_cell(policy, params, reps, root_seed, preset)
    elif model == "parcel":
        rows = _run_parcel_cell(policy, params, reps, root_seed)
    else:
        raise ValueError(f"unknown model {model!r}")
    return rows


def _run_bins_cell(policy, params, reps, root_seed, preset):
    model = balls_bins.ModelParams(
        T=int(params["T"]), N=int(params.get("N", 2)),
        q=float(params.get("q", 1.0)), r=int(params.get("r", 2)))
    spec = balls_bins.PolicySpec(
        kind=policy["kind"], a_s=policy.get("a_s"), a_d=policy.get("a_d"),
        latched=bool(policy.get("latched", False)))
    spec = balls_bins.resolve_policy(spec, model, preset)
    path = ("bins",) + _cell_tokens(policy, params)
    batch = bins_engine.run_many(spec, model, reps, root_seed, *path)
    return [{"policy": policy["kind"], **params, "rep": rep,
             "final_gap": float(batch.final_gap[rep]),
             "flex_count": int(batch.flex_count[rep]),
             "first_trigger": int(batch.first_trigger[rep])}
            for rep in range(reps)]


def _run_opaque_cell(policy, params, reps, root_seed, preset):
    N = int(params.get("N", 5))
    S = int(params["S"])
    regime = params.get("regime", "delta_zero")
    cycles = int(params.get("cycles_per_instance", 10))
    inv = opaque.eoq_params(N, S, float(params.get("q", 0.1)),
                            int(params.get("r", 2)), regime)
    spec = opaque.resolve_opaque_policy(
        balls_bins.PolicySpec(kind=policy["kind"], a_s=policy.get("a_s"),
                              a_d=policy.get("a_d")), inv, preset)
    path = ("opaque",) + _cell_tokens(policy, params)
    R, D = opaque.simulate_cycles(spec, inv, reps * cycles, root_seed, *path)
    return [{"policy": policy["kind"], **params,
             "rep": c // cycles, "cycle": c % cycles,
             "R": int(R[c]), "D": int(D[c])}
            for c in range(reps * cycles)]


def _load_parcel_inputs(params):
    from ..parcel.corpus import load_corpus
    from ..parcel.tables import load_tables
    corpus_path = params.get("corpus")
    if not corpus_path:
        raise ValueError("parcel experiments need params.corpus")
    if corpus_path not in _PARCEL_CACHE:
        _PARCEL_CACHE[corpus_path] = load_corpus(corpus_path)
    corpus = _PARCEL_CACHE[corpus_path]
    tables = None
    tables_path = params.get("tables")
    if tables_path:
        if tables_path not in _PARCEL_CACHE:
            _PARCEL_CACHE[tables_path] = load_tables(tables_path)
        tables = _PARCEL_CACHE[tables_path]
    return corpus, tables


def _run_parcel_cell(policy, params, reps, root_seed):
    from ..parcel import simulate as psim
    corpus, tables = _load_parcel_inputs(params)
    fields = {k: v for k, v in params.items()
              if k not in ("corpus", "tables")}
    pp = psim.ParcelParams(N=corpus.n_zones, **fields)
    spec = psim.ParcelPolicy(kind=policy["kind"],
                             a_d=policy.get("a_d"),
                             radius_km=policy.get("radius_km"))
    tokens = _cell_tokens(policy, fields)
    rows = []
    for rep in range(reps):
        rec = psim.run_day(spec, corpus, pp, tables, root_seed=root_seed,
                           stream_path=tokens + (rep,))
        total, travel, overtime = psim.day_cost(rec, pp)
        totals = rec.totals
        rows.append({
            "policy": policy["kind"], **fields, "rep": rep,
            "total_cost": total, "travel_cost": travel,
            "overtime_cost": overtime, "flex_count": rec.flex_count,
            "mean_unload_hours": float(rec.y_u.mean()),
            "mean_travel_hours": float(rec.y_r.mean()),
            "mad_unload_hours": float(np.abs(rec.y_u
                                             - rec.y_u.mean()).mean()),
            "overtime_freq": float((totals > pp.h_max).mean()),
        })
    return rows


def _cell_worker(args):
    return run_cell(*args)


def run_experiment(config: ExperimentConfig, parallel: int = 1,
                   out_dir: str | None = None):
    """Run the full sweep x replication matrix and write raw and summary
    CSVs.  Returns (raw_path, summary_path)."""
    root_seed = resolve_root_seed(config.seed)
    reps = (config.replications if config.replications is not None
            else default_replications(config.model))
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)

    cells = expand_cells(config)
    jobs = []
    for cell in cells:
        params = dict(config.params)
        params.update(cell["overrides"])
        jobs.append((config.model, _policy_dict(cell["policy"]), params,
                     reps, root_seed, config.preset))

    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            per_cell = list(pool.map(_cell_worker, jobs))
    else:
        per_cell = [_cell_worker(job) for job in jobs]

    raw_rows = [row for rows in per_cell for row in rows]
    cell_keys = ["policy"] + list(config.sweep.keys())
    metrics = RAW_METRICS[config.model]

    raw_path = pathlib.Path(out_dir) / f"{config.model}_raw.csv"
    raw_cols = _raw_columns(raw_rows, metrics)
    write_csv(raw_path, raw_cols, raw_rows)

    summary = summarize(raw_rows, cell_keys, metrics)
    summary_rows = [{**row.cell, "metric": row.metric, "mean": row.mean,
                     "se": row.se, "mad": row.mad, "q1": row.q1,
                     "median": row.median, "q3": row.q3, "n": row.n}
                    for row in summary]
    summary_path = pathlib.Path(out_dir) / f"{config.model}_summary.csv"
    summary_cols = cell_keys + ["metric", "mean", "se", "mad",
                                "q1", "median", "q3", "n"]
    write_csv(summary_path, summary_cols, summary_rows)
    return raw_path, summary_path


def _raw_columns(rows, metrics):
    cols = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    # metrics last, stable order
    return ([c for c in cols if c not in metrics]
            + [m for m in metrics if any(m in r for r in rows)])


def write_csv(path, columns, rows) -> None:
    """Comma-delimited output with a schema_version column first; column
    order is fixed by the caller for byte-stable reruns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema_version"] + list(columns))
        for row in rows:
            writer.writerow([SCHEMA_VERSION]
                            + [row.get(c, "") for c in columns])
