"""User identification and timeout-based session splitting."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, NamedTuple

from .logingest import LogEntry


class EmptyInput(ValueError):
    pass


class UserKey(NamedTuple):
    client_ip: str
    user_agent: str | None

    def sort_key(self):
        return (self.client_ip, self.user_agent is not None, self.user_agent or "")


class Hit(NamedTuple):
    url: str
    ts: datetime  # UTC
    bytes: int | None


@dataclass(frozen=True)
class Session:
    user: UserKey
    hits: tuple[Hit, ...]

    @property
    def start(self) -> datetime:
        return self.hits[0].ts

    @property
    def end(self) -> datetime:
        return self.hits[-1].ts

    @property
    def urls(self) -> list[str]:
        return [h.url for h in self.hits]

    def distinct_url_count(self) -> int:
        return len(set(self.urls))

    def to_dict(self) -> dict:
        return {
            "user_ip": self.user.client_ip,
            "user_agent": self.user.user_agent,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "hits": [{"url": h.url, "ts": h.ts.isoformat(), "bytes": h.bytes} for h in self.hits],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        hits = tuple(
            Hit(h["url"], datetime.fromisoformat(h["ts"]).astimezone(timezone.utc), h.get("bytes"))
            for h in d["hits"]
        )
        if not hits:
            raise ValueError("session without hits")
        return cls(UserKey(d["user_ip"], d.get("user_agent")), hits)


@dataclass(frozen=True)
class SessionizerConfig:
    timeout: timedelta = timedelta(minutes=30)
    min_hits: int = 1

    def __post_init__(self):
        if self.timeout <= timedelta(0):
            raise ValueError("timeout must be positive")
        if self.min_hits < 1:
            raise ValueError("min_hits must be >= 1")


def identify_users(entries: Iterable[LogEntry]) -> dict[UserKey, list[LogEntry]]:
    """Group entries by (ip, agent); each trace is stably sorted by UTC time."""
    traces: dict[UserKey, list[LogEntry]] = {}
    for e in entries:
        traces.setdefault(UserKey(e.client_ip, e.user_agent), []).append(e)
    for trace in traces.values():
        trace.sort(key=lambda e: e.utc)  # list.sort is stable
    return traces


def split_sessions(trace: list[LogEntry], cfg: SessionizerConfig | None = None) -> list[Session]:
    cfg = cfg or SessionizerConfig()
    if not trace:
        return []
    user = UserKey(trace[0].client_ip, trace[0].user_agent)
    groups: list[list[Hit]] = []
    prev = None
    for e in trace:
        hit = Hit(e.path, e.utc, e.bytes)
        if prev is None or hit.ts - prev > cfg.timeout:
            groups.append([])
        groups[-1].append(hit)
        prev = hit.ts
    return [Session(user, tuple(g)) for g in groups if len(g) >= cfg.min_hits]


def sessionize(entries: Iterable[LogEntry], cfg: SessionizerConfig | None = None) -> list[Session]:
    """All sessions, ordered by user key then start time."""
    traces = identify_users(entries)
    out = []
    for key in sorted(traces, key=UserKey.sort_key):
        out.extend(split_sessions(traces[key], cfg))
    return out


def session_length_distribution(sessions: Iterable[Session]) -> list[tuple[int, float]]:
    """Fraction of sessions with at least x distinct URLs, for x = 1..max."""
    counts = [s.distinct_url_count() for s in sessions]
    if not counts:
        raise EmptyInput("no sessions")
    total = len(counts)
    return [(x, sum(c >= x for c in counts) / total) for x in range(1, max(counts) + 1)]


def session_stats(entries: list[LogEntry], sessions: list[Session]) -> dict:
    return {
        "entries": len(entries),
        "distinct_urls": len({e.path for e in entries}),
        "users": len({s.user for s in sessions}),
        "sessions": len(sessions),
    }


def stats_csv(stats: dict, distribution: list[tuple[int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["item", "count"])
    for k, v in stats.items():
        w.writerow([k, v])
    w.writerow([])
    w.writerow(["urls_at_least", "pct_sessions"])
    for x, pct in distribution:
        w.writerow([x, repr(pct)])
    return buf.getvalue()


def write_sessions(sessions: Iterable[Session], path: str | Path) -> None:
    with open(path, "w") as fh:
        for s in sessions:
            fh.write(json.dumps(s.to_dict()) + "\n")


def read_sessions(path: str | Path) -> list[Session]:
    with open(path) as fh:
        return [Session.from_dict(json.loads(line)) for line in fh if line.strip()]
