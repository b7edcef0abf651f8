"""Parameter sweeps over the four algorithms, and table / plot-data emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Iterable, Sequence

from . import clustering, validity
from .sessionize import EmptyInput
from .vectorspace import SessionMatrix

COLUMNS = [
    "algo", "param_name", "param_value", "eta", "seed", "clusters", "empty_clusters",
    "noise", "sse_j", "db_index", "c_index", "elapsed_ms",
]
SWEEP_PARAM = {"kmeans": "k", "kmedoids": "k", "leader": "alpha", "dbscan": "epsilon"}
SEEDED = ("kmeans", "kmedoids")


class UnknownField(KeyError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    algo: str
    grid: tuple[dict, ...]
    seeds: tuple[int | None, ...] = (0,)
    repeats: int = 1
    fixed: dict = field(default_factory=dict)  # e.g. max_iterations, j_epsilon

    def __post_init__(self):
        if self.algo not in clustering.ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if not self.grid:
            raise ValueError("grid must be non-empty")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        expected = {"k"} if self.algo in SEEDED else {"alpha"} if self.algo == "leader" else {"epsilon", "eta"}
        for cell in self.grid:
            if set(cell) != expected:
                raise ValueError(f"{self.algo} grid cells need keys {sorted(expected)}, got {sorted(cell)}")

    @classmethod
    def build(cls, algo: str, values: Sequence, etas: Sequence[int] = (), seeds=(0,), repeats=1, **fixed) -> "SweepSpec":
        """Grid from the swept values (k, alpha or epsilon); DBSCAN crosses epsilon x eta."""
        if algo == "dbscan":
            if not etas:
                raise ValueError("dbscan sweeps need at least one eta")
            grid = tuple({"epsilon": e, "eta": h} for h, e in product(etas, values))
        else:
            grid = tuple({SWEEP_PARAM[algo]: v} for v in values)
        if algo not in SEEDED:
            seeds = (None,)
        return cls(algo, grid, tuple(seeds), repeats, dict(fixed))


@dataclass
class RunRecord:
    algo: str
    param_name: str
    param_value: float | int
    eta: int | None
    seed: int | None
    cluster_count: int | None
    empty_clusters: int | None
    noise_count: int | None
    objective_j: float | None
    db_index: float | None
    c_index: float | None
    elapsed_ms: float | None
    repeat: int = 0
    error: str | None = None

    def as_row(self) -> list:
        return [
            self.algo, self.param_name, self.param_value, self.eta, self.seed,
            self.cluster_count, self.empty_clusters, self.noise_count,
            self.objective_j, self.db_index, self.c_index, self.elapsed_ms,
        ]


def _one_run(X: SessionMatrix, spec: SweepSpec, cell: dict, seed, repeat: int) -> RunRecord:
    name = SWEEP_PARAM[spec.algo]
    params = dict(cell)
    if spec.algo in SEEDED:
        params.update(spec.fixed, seed=seed)
    base = dict(algo=spec.algo, param_name=name, param_value=cell[name], eta=cell.get("eta"), seed=seed, repeat=repeat)
    try:
        t0 = time.perf_counter()
        result = clustering.run(X, spec.algo, **params)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        report = validity.evaluate(X, result)
    except Exception as exc:  # error row, the sweep continues
        return RunRecord(**base, cluster_count=None, empty_clusters=None, noise_count=None, objective_j=None,
                         db_index=None, c_index=None, elapsed_ms=None, error=f"{type(exc).__name__}: {exc}")
    return RunRecord(
        **base,
        cluster_count=report.cluster_count,
        empty_clusters=result.empty_cluster_count,
        noise_count=result.noise_count,
        objective_j=result.objective_j,
        db_index=report.db_index,
        c_index=report.c_index,
        elapsed_ms=elapsed_ms,
    )


def run_sweep(X: SessionMatrix, spec: SweepSpec, workers: int = 1) -> list[RunRecord]:
    """Every grid cell x seed x repeat, in grid-major order."""
    jobs = [(cell, seed, rep) for cell in spec.grid for seed in spec.seeds for rep in range(spec.repeats)]
    if workers <= 1:
        return [_one_run(X, spec, *job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order
        return list(pool.map(lambda job: _one_run(X, spec, *job), jobs))


def best_of_seeds(records: Iterable[RunRecord]) -> list[RunRecord]:
    """Keep the minimum-J record per (params, repeat); first seed wins ties."""
    best: dict[tuple, RunRecord] = {}
    for r in records:
        key = (r.algo, r.param_name, r.param_value, r.eta, r.repeat)
        cur = best.get(key)
        if cur is None or (r.objective_j is not None and (cur.objective_j is None or r.objective_j < cur.objective_j)):
            best[key] = r
    return list(best.values())


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_table(records: Sequence[RunRecord], fmt: str = "csv", meta: dict | None = None) -> str:
    if not records:
        raise EmptyInput("no records to emit")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow([_cell(v) for v in r.as_row()])
        return buf.getvalue()
    if fmt == "json":
        rows = []
        for r in records:
            row = dict(zip(COLUMNS, r.as_row()))
            row["repeat"] = r.repeat
            row["error"] = r.error
            rows.append(row)
        return json.dumps({"meta": meta or {}, "records": rows}, indent=1, allow_nan=False) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def _num(text: str, kind=float):
    return None if text == "" else kind(text)


def parse_table(text: str) -> list[RunRecord]:
    """Inverse of ``emit_table(..., "csv")``."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != COLUMNS:
        raise ValueError(f"unexpected table header {reader.fieldnames}")
    out = []
    for row in reader:
        out.append(RunRecord(
            algo=row["algo"],
            param_name=row["param_name"],
            param_value=_num(row["param_value"], int if row["param_name"] == "k" else float),
            eta=_num(row["eta"], int),
            seed=_num(row["seed"], int),
            cluster_count=_num(row["clusters"], int),
            empty_clusters=_num(row["empty_clusters"], int),
            noise_count=_num(row["noise"], int),
            objective_j=_num(row["sse_j"]),
            db_index=_num(row["db_index"]),
            c_index=_num(row["c_index"]),
            elapsed_ms=_num(row["elapsed_ms"]),
        ))
    return out


_FIELD_ALIASES = {
    "clusters": "cluster_count", "cluster_count": "cluster_count",
    "noise": "noise_count", "noise_count": "noise_count",
    "sse_j": "objective_j", "sse": "objective_j", "objective_j": "objective_j",
}
_PLAIN_FIELDS = {f for f in RunRecord.__dataclass_fields__}


def _getter(name: str):
    if name in ("k", "alpha", "epsilon"):
        return lambda r: r.param_value if r.param_name == name else None
    attr = _FIELD_ALIASES.get(name, name)
    if attr not in _PLAIN_FIELDS:
        raise UnknownField(name)
    return lambda r: getattr(r, attr)


def _sort_key(v):
    if v is None:
        return (0, 0.0, "")
    if isinstance(v, (int, float)):
        return (1, float(v), "")
    return (2, 0.0, str(v))


def emit_plot_data(records: Sequence[RunRecord], x_field: str, y_field: str, series_field: str) -> str:
    """Long-format ``series,x,y`` CSV sorted by (series, x); rows lacking x are dropped."""
    gx, gy, gs = _getter(x_field), _getter(y_field), _getter(series_field)
    rows = [(gs(r), gx(r), gy(r)) for r in records if r.error is None and gx(r) is not None]
    rows.sort(key=lambda t: (_sort_key(t[0]), _sort_key(t[1])))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for s, x, y in rows:
        w.writerow([_cell(s), _cell(x), _cell(y)])
    return buf.getvalue()


def parse_range(text: str, kind=float) -> list:
    """``"2..67"``, ``"0.5..3.5:0.5"`` or ``"1,2,5"`` to a list of values (bounds inclusive)."""
    text = text.strip()
    if ".." not in text:
        return [kind(v) for v in text.split(",") if v.strip()]
    lo_s, rest = text.split("..", 1)
    hi_s, _, step_s = rest.partition(":")
    lo, hi = kind(lo_s), kind(hi_s)
    step = kind(step_s) if step_s else kind(1)
    if step <= 0 or hi < lo:
        raise ValueError(f"bad range {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    if kind is int:
        return [lo + i * step for i in range(count)]
    return [round(lo + i * step, 12) for i in range(count)]


def default_k_grid(m: int) -> list[int]:
    """k = 2 .. ceil(m / 3)."""
    return list(range(2, max(2, math.ceil(m / 3)) + 1))


def sweep_meta(spec: SweepSpec, aggregation: str) -> dict:
    return {
        "algo": spec.algo,
        "seeds": list(spec.seeds),
        "repeats": spec.repeats,
        "aggregation": aggregation,
        "index_distance": validity.C_INDEX_DISTANCE,
        "noise": "excluded from sse, db_index, c_index",
        "threshold_scale": "alpha and epsilon compare against squared distance",
        "fixed": spec.fixed,
    }


def records_to_dicts(records: Iterable[RunRecord]) -> list[dict]:
    return [asdict(r) for r in records]
