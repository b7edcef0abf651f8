"""Command-line entry point: ``usageprofiles <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 input-data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path

from . import clustering, harness, logingest, pipeline, sessionize, validity, vectorspace

log = logging.getLogger("usageprofiles")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_ingest(a) -> None:
    policy = logingest.CleaningPolicy.from_file(a.policy) if a.policy else None
    entries, stats = logingest.ingest(a.input, policy, a.format)
    for bad in stats.malformed:
        log.debug("skipped malformed line: %s", bad)
    logingest.write_ndjson(entries, a.out)
    text = json.dumps(stats.to_dict(), indent=1) + "\n"
    if a.stats:
        Path(a.stats).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sessionize(a) -> None:
    if a.timeout_min <= 0 or a.min_hits < 1:
        raise UsageError("--timeout-min must be > 0 and --min-hits >= 1")
    entries = logingest.read_ndjson(getattr(a, "in"))
    cfg = sessionize.SessionizerConfig(timedelta(minutes=a.timeout_min), a.min_hits)
    sessions = sessionize.sessionize(entries, cfg)
    sessionize.write_sessions(sessions, a.out)
    if a.stats:
        dist = sessionize.session_length_distribution(sessions) if sessions else []
        _write(a.stats, sessionize.stats_csv(sessionize.session_stats(entries, sessions), dist))


def cmd_vectorize(a) -> None:
    sessions = sessionize.read_sessions(getattr(a, "in"))
    matrix = vectorspace.build_matrix(sessions, a.mode)
    vectorspace.write_matrix(matrix, a.out, a.mode)


def _cluster_params(a) -> dict:
    if a.algo in harness.SEEDED:
        if a.k is None:
            raise UsageError(f"--k is required for {a.algo}")
        p = dict(k=a.k, seed=a.seed, max_iterations=a.max_iter, j_epsilon=a.j_epsilon)
        if a.algo == "kmeans" and a.reseed_empty:
            p["reseed_empty"] = True
        return p
    if a.algo == "leader":
        if a.alpha is None:
            raise UsageError("--alpha is required for leader")
        return dict(alpha=a.alpha)
    if a.epsilon is None or a.eta is None:
        raise UsageError("--epsilon and --eta are required for dbscan")
    return dict(epsilon=a.epsilon, eta=a.eta)


def cmd_cluster(a) -> None:
    params = _cluster_params(a)
    matrix = vectorspace.read_matrix(a.matrix)
    result = clustering.run(matrix, a.algo, **params)
    _write(a.out, json.dumps(result.to_dict()) + "\n")


def cmd_validate(a) -> None:
    matrix = vectorspace.read_matrix(a.matrix)
    result = clustering.ClusterResult.from_dict(json.loads(Path(a.result).read_text()))
    if len(result.labels) != matrix.m:
        raise ValueError("result labels do not match matrix rows")
    report = validity.evaluate(matrix, result, a.diameter)
    _write(a.out, json.dumps(report.to_dict(), indent=1) + "\n")


def cmd_sweep(a) -> None:
    matrix = vectorspace.read_matrix(a.matrix)
    flags = {k: (None if v is None else str(v)) for k, v in vars(a).items()}
    try:
        spec = pipeline.sweep_spec_from(flags, a.algo, matrix.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    records = harness.run_sweep(matrix, spec, workers=a.workers)
    aggregation = "all-seeds" if a.all_seeds or a.algo not in harness.SEEDED else "best-of-seeds (min J)"
    if aggregation != "all-seeds":
        records = harness.best_of_seeds(records)
    for r in records:
        if r.error:
            log.warning("cell %s=%s eta=%s seed=%s failed: %s", r.param_name, r.param_value, r.eta, r.seed, r.error)
    meta = harness.sweep_meta(spec, aggregation)
    _write(a.out, harness.emit_table(records, a.format, meta))
    if a.format == "csv" and a.out not in (None, "-"):
        Path(a.out + ".meta.json").write_text(json.dumps(meta, indent=1) + "\n")


def cmd_plot_data(a) -> None:
    records = harness.parse_table(Path(getattr(a, "in")).read_text())
    try:
        text = harness.emit_plot_data(records, a.x, a.y, a.series)
    except harness.UnknownField as exc:
        raise UsageError(f"unknown field {exc.args[0]!r}") from exc
    _write(a.out, text)


def cmd_pipeline(a) -> None:
    out = pipeline.run_pipeline(a.config)
    summary = {k: v for k, v in out.items() if k != "table"}
    sys.stdout.write(json.dumps(summary, indent=1) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="usageprofiles", description="Web usage profiling: sessionize logs and cluster sessions.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="parse and clean access logs into NDJSON")
    s.add_argument("--input", nargs="+", required=True)
    s.add_argument("--policy")
    s.add_argument("--format", choices=logingest.FORMATS, default="auto")
    s.add_argument("--out", required=True)
    s.add_argument("--stats", help="write stats JSON here instead of stdout")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("sessionize", help="group entries into user sessions")
    s.add_argument("--in", required=True)
    s.add_argument("--timeout-min", type=float, default=30.0)
    s.add_argument("--min-hits", type=int, default=1)
    s.add_argument("--out", required=True)
    s.add_argument("--stats", help="CSV with counts and the session-length distribution ('-' for stdout)")
    s.set_defaults(func=cmd_sessionize)

    s = sub.add_parser("vectorize", help="build the session x URL matrix")
    s.add_argument("--in", required=True)
    s.add_argument("--mode", choices=[m.value for m in vectorspace.WeightingMode], default="binary")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_vectorize)

    s = sub.add_parser("cluster", help="run one clustering (alpha/epsilon act on squared distance)")
    s.add_argument("--matrix", required=True)
    s.add_argument("--algo", choices=clustering.ALGORITHMS, required=True)
    s.add_argument("--k", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--eta", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--j-epsilon", type=float, default=0.0)
    s.add_argument("--reseed-empty", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_cluster)

    s = sub.add_parser("validate", help="score a clustering result")
    s.add_argument("--matrix", required=True)
    s.add_argument("--result", required=True)
    s.add_argument("--diameter", choices=("centroid", "max_pairwise"), default="centroid")
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("sweep", help="parameter sweep to a CSV/JSON table")
    s.add_argument("--matrix", required=True)
    s.add_argument("--algo", choices=clustering.ALGORITHMS, required=True)
    s.add_argument("--k", help="e.g. 2..67 or 2,5,9 (default 2..ceil(m/3))")
    s.add_argument("--alpha", help="e.g. 0.5..3.5:0.5")
    s.add_argument("--epsilon", help="e.g. 0.5..3.5:0.5")
    s.add_argument("--eta", help="e.g. 2..10")
    s.add_argument("--seeds", type=int, default=1, help="number of seeds, starting at --seed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--repeats", type=int, default=1)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--j-epsilon", dest="j_epsilon", type=float)
    s.add_argument("--reseed-empty", dest="reseed_empty", action="store_true")
    s.add_argument("--all-seeds", action="store_true", help="report every seed instead of best-of-seeds")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("plot-data", help="long-format series,x,y CSV from a sweep table")
    s.add_argument("--in", required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--series", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_plot_data)

    s = sub.add_parser("pipeline", help="ingest -> sessionize -> vectorize -> sweep from an INI config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
