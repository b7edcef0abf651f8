"""Access-log parsing and cleaning (NCSA Common / Combined format)."""

from __future__ import annotations

import configparser
import gzip
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

_COMMON = (
    r'(?P<ip>\S+) (?P<identity>\S+) (?P<auth_user>\S+) '
    r'\[(?P<ts>[^\]]+)\] '
    r'"(?P<request>[^"]*)" '
    r'(?P<status>\d{3}) (?P<bytes>\d+|-)'
)
_COMBINED = _COMMON + r' "(?P<referrer>[^"]*)" "(?P<agent>[^"]*)"'

_PATTERNS = {
    "common": re.compile("^" + _COMMON + r"\s*$"),
    "combined": re.compile("^" + _COMBINED + r"\s*$"),
}

TS_FORMAT = "%d/%b/%Y:%H:%M:%S %z"
FORMATS = ("auto", "common", "combined")


class MalformedLine(ValueError):
    """A log line that does not match the requested format."""

    def __init__(self, reason: str, offset: int = 0, line: str = ""):
        super().__init__(f"byte offset {offset}: {reason}")
        self.reason = reason
        self.offset = offset
        self.line = line


def _dash(value: str | None) -> str | None:
    return None if value in (None, "-") else value


@dataclass(frozen=True)
class LogEntry:
    client_ip: str
    identity: str | None
    auth_user: str | None
    timestamp: datetime  # tz-aware, original offset kept
    method: str
    path: str
    protocol: str
    status: int
    bytes: int | None
    referrer: str | None = None
    user_agent: str | None = None

    @property
    def utc(self) -> datetime:
        return self.timestamp.astimezone(timezone.utc)

    def to_dict(self) -> dict:
        return {
            "ip": self.client_ip,
            "identity": self.identity,
            "auth_user": self.auth_user,
            "ts": self.timestamp.isoformat(),
            "method": self.method,
            "path": self.path,
            "protocol": self.protocol,
            "status": self.status,
            "bytes": self.bytes,
            "referrer": self.referrer,
            "agent": self.user_agent,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogEntry":
        return cls(
            client_ip=d["ip"],
            identity=d.get("identity"),
            auth_user=d.get("auth_user"),
            timestamp=datetime.fromisoformat(d["ts"]),
            method=d["method"],
            path=d["path"],
            protocol=d.get("protocol", ""),
            status=int(d["status"]),
            bytes=d.get("bytes"),
            referrer=d.get("referrer"),
            user_agent=d.get("agent"),
        )

    def format_line(self, combined: bool | None = None) -> str:
        """Serialize back to log format; Combined if referrer/agent are known."""
        if combined is None:
            combined = self.referrer is not None or self.user_agent is not None
        request = " ".join(p for p in (self.method, self.path, self.protocol) if p)
        line = (
            f"{self.client_ip} {self.identity or '-'} {self.auth_user or '-'} "
            f"[{self.timestamp.strftime(TS_FORMAT)}] \"{request}\" {self.status} "
            f"{'-' if self.bytes is None else self.bytes}"
        )
        if combined:
            line += f' "{self.referrer or "-"}" "{self.user_agent or "-"}"'
        return line


def parse_log_line(line: str | bytes, fmt: str = "auto", offset: int = 0) -> LogEntry:
    """Parse one physical line.

    Raises MalformedLine (carrying ``offset``) when the line is not a valid
    record in the requested format; Combined fields stay ``None`` for Common
    lines.
    """
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    line = line.rstrip("\r\n")
    if fmt not in FORMATS:
        raise ValueError(f"unknown log format {fmt!r}")

    m = None
    if fmt in ("auto", "combined"):
        m = _PATTERNS["combined"].match(line)
    if m is None and fmt in ("auto", "common"):
        m = _PATTERNS["common"].match(line)
    if m is None:
        raise MalformedLine(f"not a {fmt} log line", offset, line)

    parts = m["request"].split()
    if len(parts) == 3:
        method, path, protocol = parts
    elif len(parts) == 2:
        (method, path), protocol = parts, ""
    else:
        raise MalformedLine("unparseable request field", offset, line)

    try:
        ts = datetime.strptime(m["ts"], TS_FORMAT)
    except ValueError:
        raise MalformedLine(f"bad timestamp {m['ts']!r}", offset, line) from None

    status = int(m["status"])
    if not 100 <= status <= 599:
        raise MalformedLine(f"status {status} out of range", offset, line)

    groups = m.groupdict()
    return LogEntry(
        client_ip=m["ip"],
        identity=_dash(m["identity"]),
        auth_user=_dash(m["auth_user"]),
        timestamp=ts,
        method=method,
        path=path,
        protocol=protocol,
        status=status,
        bytes=None if m["bytes"] == "-" else int(m["bytes"]),
        referrer=_dash(groups.get("referrer")),
        user_agent=_dash(groups.get("agent")),
    )


@dataclass
class CleaningPolicy:
    suppressed_extensions: frozenset[str] = frozenset(
        {"gif", "jpg", "jpeg", "png", "ico", "css", "js", "swf"}
    )
    allowed_status: range | frozenset[int] = range(200, 400)
    # Methods outside this set are suppressed.
    allowed_methods: frozenset[str] = frozenset({"GET", "POST"})
    robot_agent_substrings: frozenset[str] = frozenset({"bot", "crawler", "spider"})

    def __post_init__(self):
        self.suppressed_extensions = frozenset(e.lower().lstrip(".") for e in self.suppressed_extensions)
        self.allowed_methods = frozenset(m.upper() for m in self.allowed_methods)
        self.robot_agent_substrings = frozenset(s.lower() for s in self.robot_agent_substrings)

    def keeps(self, entry: LogEntry) -> bool:
        if entry.status not in self.allowed_status:
            return False
        if entry.method.upper() not in self.allowed_methods:
            return False
        if url_extension(entry.path) in self.suppressed_extensions:
            return False
        agent = (entry.user_agent or "").lower()
        return not any(s in agent for s in self.robot_agent_substrings)

    @classmethod
    def from_file(cls, path: str | Path) -> "CleaningPolicy":
        """Load from JSON or INI (``[policy]`` section); missing keys keep defaults."""
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            cp = configparser.ConfigParser()
            cp.read_string(text if "[" in text else "[policy]\n" + text)
            raw = dict(cp["policy"]) if cp.has_section("policy") else {}
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "CleaningPolicy":
        kw = {}
        if "suppressed_extensions" in raw:
            kw["suppressed_extensions"] = frozenset(_as_list(raw["suppressed_extensions"]))
        if "allowed_methods" in raw:
            kw["allowed_methods"] = frozenset(_as_list(raw["allowed_methods"]))
        if "robot_agent_substrings" in raw:
            kw["robot_agent_substrings"] = frozenset(_as_list(raw["robot_agent_substrings"]))
        if "allowed_status" in raw:
            kw["allowed_status"] = _parse_status(raw["allowed_status"])
        return cls(**kw)


def _as_list(value) -> list[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _parse_status(value) -> range | frozenset[int]:
    # "200-399" or "200,301,304" or a JSON list
    if isinstance(value, str) and "-" in value and "," not in value:
        lo, hi = value.split("-")
        return range(int(lo), int(hi) + 1)
    return frozenset(int(v) for v in _as_list(value))


def url_extension(path: str) -> str:
    """Lowercase extension of the URL path, query string and fragment stripped."""
    path = path.split("?", 1)[0].split("#", 1)[0]
    last = path.rsplit("/", 1)[-1]
    if "." not in last:
        return ""
    return last.rsplit(".", 1)[-1].lower()


@dataclass
class IngestStats:
    lines_read: int = 0
    lines_malformed: int = 0
    entries_parsed: int = 0
    entries_after_cleaning: int = 0
    distinct_urls: int = 0
    malformed: list[MalformedLine] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "lines_read": self.lines_read,
            "lines_malformed": self.lines_malformed,
            "entries_parsed": self.entries_parsed,
            "entries_after_cleaning": self.entries_after_cleaning,
            "distinct_urls": self.distinct_urls,
        }


def clean_entries(
    entries: Iterable[LogEntry], policy: CleaningPolicy | None = None
) -> tuple[list[LogEntry], IngestStats]:
    policy = policy or CleaningPolicy()
    entries = list(entries)
    kept = [e for e in entries if policy.keeps(e)]
    stats = IngestStats(
        lines_read=len(entries),
        entries_parsed=len(entries),
        entries_after_cleaning=len(kept),
        distinct_urls=len({e.path for e in kept}),
    )
    return kept, stats


def _open_lines(path: Path) -> Iterator[bytes]:
    with path.open("rb") as fh:
        magic = fh.read(2)
    opener = gzip.open if magic == b"\x1f\x8b" else open
    with opener(path, "rb") as fh:
        yield from fh


def parse_lines(lines: Iterable[str | bytes], fmt: str = "auto", stats: IngestStats | None = None) -> list[LogEntry]:
    """Parse a line stream, counting and skipping malformed lines in ``stats``."""
    stats = stats if stats is not None else IngestStats()
    out = []
    offset = 0
    for raw in lines:
        size = len(raw) if isinstance(raw, bytes) else len(raw.encode("utf-8", "replace"))
        stats.lines_read += 1
        try:
            out.append(parse_log_line(raw, fmt, offset))
        except MalformedLine as exc:
            stats.lines_malformed += 1
            stats.malformed.append(exc)
        offset += size
    stats.entries_parsed += len(out)
    return out


def ingest(
    paths: Iterable[str | Path], policy: CleaningPolicy | None = None, fmt: str = "auto"
) -> tuple[list[LogEntry], IngestStats]:
    """Read, parse and clean one or more (optionally gzipped) log files."""
    stats = IngestStats()
    parsed: list[LogEntry] = []
    for p in paths:
        parsed.extend(parse_lines(_open_lines(Path(p)), fmt, stats))
    kept, cstats = clean_entries(parsed, policy)
    stats.entries_after_cleaning = cstats.entries_after_cleaning
    stats.distinct_urls = cstats.distinct_urls
    return kept, stats


def write_ndjson(entries: Iterable[LogEntry], path: str | Path) -> None:
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_dict()) + "\n")


def read_ndjson(path: str | Path) -> list[LogEntry]:
    with open(path) as fh:
        return [LogEntry.from_dict(json.loads(line)) for line in fh if line.strip()]
