"""Session vectors over the site's URL index, and the squared distance."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .sessionize import EmptyInput, Session


class DimensionMismatch(ValueError):
    pass


class WeightingMode(str, enum.Enum):
    BINARY = "binary"
    FREQUENCY = "frequency"
    DURATION = "duration"
    BYTES = "bytes"


class UrlIndex:
    """URL <-> dense id, ids assigned in first-appearance order."""

    def __init__(self, urls: Sequence[str] = ()):
        self._urls: list[str] = []
        self._ids: dict[str, int] = {}
        for u in urls:
            self.add(u)

    def add(self, url: str) -> int:
        if url not in self._ids:
            self._ids[url] = len(self._urls)
            self._urls.append(url)
        return self._ids[url]

    def id(self, url: str) -> int:
        return self._ids[url]

    def url(self, i: int) -> str:
        return self._urls[i]

    @property
    def urls(self) -> list[str]:
        return list(self._urls)

    def __len__(self):
        return len(self._urls)

    def __contains__(self, url):
        return url in self._ids

    def __eq__(self, other):
        return isinstance(other, UrlIndex) and self._urls == other._urls


@dataclass(frozen=True)
class SessionMatrix:
    data: np.ndarray  # (m, n) float64, read-only
    index: UrlIndex
    session_ids: tuple[int, ...]

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"matrix must be m x n with m, n >= 1, got {self.data.shape}")
        if self.data.shape[1] != len(self.index):
            raise DimensionMismatch("column count differs from URL index size")
        if len(self.session_ids) != self.data.shape[0]:
            raise DimensionMismatch("one session id per row required")
        self.data.setflags(write=False)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @classmethod
    def from_array(cls, data, urls: Sequence[str] | None = None) -> "SessionMatrix":
        """Wrap a raw array (tests, synthetic data); columns get placeholder URLs."""
        arr = np.array(data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        urls = urls if urls is not None else [f"/u{j}" for j in range(arr.shape[1])]
        return cls(arr, UrlIndex(urls), tuple(range(arr.shape[0])))


def _durations(session: Session) -> list[float]:
    gaps = [(b.ts - a.ts).total_seconds() for a, b in zip(session.hits, session.hits[1:])]
    last = sum(gaps) / len(gaps) if gaps else 0.0
    return gaps + [last]


def build_matrix(sessions: Sequence[Session], mode: WeightingMode | str = WeightingMode.BINARY) -> SessionMatrix:
    mode = WeightingMode(mode)
    if not sessions:
        raise EmptyInput("no sessions to vectorize")
    index = UrlIndex(url for s in sessions for url in s.urls)
    data = np.zeros((len(sessions), len(index)))
    for i, s in enumerate(sessions):
        row = data[i]
        if mode is WeightingMode.BINARY:
            for url in s.urls:
                row[index.id(url)] = 1.0
        elif mode is WeightingMode.FREQUENCY:
            for url in s.urls:
                row[index.id(url)] += 1.0
        elif mode is WeightingMode.DURATION:
            for hit, secs in zip(s.hits, _durations(s)):
                row[index.id(hit.url)] += secs
        else:
            for hit in s.hits:
                row[index.id(hit.url)] += hit.bytes or 0
    return SessionMatrix(data, index, tuple(range(len(sessions))))


def squared_euclidean(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    diff = x - y
    return float(diff @ diff)


def pairwise_sq_distances(data: np.ndarray) -> np.ndarray:
    """Full m x m table of squared distances (exact differences, no Gram trick)."""
    return sq_distances_to(data, data)


def sq_distances_to(data: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """m x k squared distances from each row to each center."""
    out = np.empty((data.shape[0], centers.shape[0]))
    for j, c in enumerate(centers):
        diff = data - c
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".rows.json")


def write_matrix(matrix: SessionMatrix, path: str | Path, mode: WeightingMode | str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(matrix.index.urls)
        for row in matrix.data:
            w.writerow([repr(float(v)) for v in row])
    meta = {"rows": {str(i): sid for i, sid in enumerate(matrix.session_ids)}}
    if mode is not None:
        meta["mode"] = WeightingMode(mode).value
    sidecar_path(path).write_text(json.dumps(meta, indent=1))


def read_matrix(path: str | Path) -> SessionMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: matrix file needs a header and at least one row")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float)
    side = sidecar_path(path)
    if side.exists():
        mapping = json.loads(side.read_text())["rows"]
        ids = tuple(int(mapping[str(i)]) for i in range(len(body)))
    else:
        ids = tuple(range(len(body)))
    return SessionMatrix(data, UrlIndex(header), ids)
