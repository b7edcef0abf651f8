"""ingest -> sessionize -> vectorize -> sweep, driven by one INI config.

Example::

    [ingest]
    input = access.log.gz, access2.log
    format = auto
    policy = policy.ini          ; optional

    [sessionize]
    timeout_min = 30
    min_hits = 1

    [vectorize]
    mode = binary
    out = matrix.csv             ; optional

    [sweep]
    algo = dbscan
    epsilon = 0.5..3.5:0.5
    eta = 2..10
    out = table.csv

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
from datetime import timedelta
from pathlib import Path

from . import harness, logingest, sessionize, vectorspace


def _path(base: Path, value: str) -> Path:
    p = Path(value.strip())
    return p if p.is_absolute() else base / p


def sweep_spec_from(section, algo: str, m: int) -> harness.SweepSpec:
    """Build a SweepSpec from flag-like keys (k, alpha, epsilon, eta, seeds, ...)."""
    get = section.get
    fixed = {}
    if algo in harness.SEEDED:
        ks = harness.parse_range(get("k"), int) if get("k") else harness.default_k_grid(m)
        values = ks
        if get("max_iter"):
            fixed["max_iterations"] = int(get("max_iter"))
        if get("j_epsilon"):
            fixed["j_epsilon"] = float(get("j_epsilon"))
        if algo == "kmeans" and str(get("reseed_empty", "false")).lower() in ("1", "true", "yes"):
            fixed["reseed_empty"] = True
    elif algo == "leader":
        if not get("alpha"):
            raise ValueError("leader sweep needs alpha")
        values = harness.parse_range(get("alpha"))
    else:
        if not get("epsilon") or not get("eta"):
            raise ValueError("dbscan sweep needs epsilon and eta")
        values = harness.parse_range(get("epsilon"))
    etas = harness.parse_range(get("eta"), int) if algo == "dbscan" else ()
    base_seed = int(get("seed", 0) or 0)
    seeds = range(base_seed, base_seed + int(get("seeds", 1) or 1))
    return harness.SweepSpec.build(algo, values, etas, seeds=seeds, repeats=int(get("repeats", 1) or 1), **fixed)


def run_pipeline(config_path: str | Path) -> dict:
    config_path = Path(config_path)
    base = config_path.parent
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(config_path):
        raise FileNotFoundError(config_path)
    for section in ("ingest", "sweep"):
        if not cp.has_section(section):
            raise ValueError(f"config lacks [{section}]")
    for section in ("sessionize", "vectorize"):
        if not cp.has_section(section):
            cp.add_section(section)

    ing = cp["ingest"]
    inputs = [_path(base, p) for p in ing.get("input", "").split(",") if p.strip()]
    if not inputs:
        raise ValueError("[ingest] input is required")
    policy = logingest.CleaningPolicy.from_file(_path(base, ing["policy"])) if ing.get("policy") else None
    entries, stats = logingest.ingest(inputs, policy, ing.get("format", "auto"))
    if ing.get("out"):
        logingest.write_ndjson(entries, _path(base, ing["out"]))

    ses = cp["sessionize"]
    cfg = sessionize.SessionizerConfig(
        timeout=timedelta(minutes=float(ses.get("timeout_min", 30))),
        min_hits=int(ses.get("min_hits", 1)),
    )
    sessions = sessionize.sessionize(entries, cfg)
    if ses.get("out"):
        sessionize.write_sessions(sessions, _path(base, ses["out"]))

    vec = cp["vectorize"]
    mode = vec.get("mode", "binary")
    matrix = vectorspace.build_matrix(sessions, mode)
    if vec.get("out"):
        vectorspace.write_matrix(matrix, _path(base, vec["out"]), mode)

    sw = cp["sweep"]
    algo = sw.get("algo", "kmeans")
    spec = sweep_spec_from(sw, algo, matrix.m)
    records = harness.run_sweep(matrix, spec, workers=int(sw.get("workers", 1)))
    all_seeds = str(sw.get("all_seeds", "false")).lower() in ("1", "true", "yes")
    aggregation = "all-seeds" if all_seeds or algo not in harness.SEEDED else "best-of-seeds (min J)"
    if aggregation != "all-seeds":
        records = harness.best_of_seeds(records)
    fmt = sw.get("format", "csv")
    table = harness.emit_table(records, fmt, harness.sweep_meta(spec, aggregation))
    if sw.get("out"):
        _path(base, sw["out"]).write_text(table)
    return {
        "ingest": stats.to_dict(),
        "sessions": sessionize.session_stats(entries, sessions),
        "matrix_shape": [matrix.m, matrix.n],
        "records": len(records),
        "table": table,
    }
