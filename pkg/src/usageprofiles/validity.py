"""SSE, Davies-Bouldin and C-index scoring of a clustering.

SSE uses squared distances to each algorithm's own centers. The two
indices use unsquared Euclidean distance. DBSCAN noise points are left out
of every score.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .clustering import ClusterResult
from .vectorspace import SessionMatrix, pairwise_sq_distances

C_INDEX_DISTANCE = "euclidean"  # recorded in report metadata


@dataclass
class ValidityReport:
    sse: float
    db_index: float | None
    c_index: float | None
    cluster_count: int
    noise_count: int
    elapsed: float  # seconds, clustering call only

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "sse": d["sse"],
            "db_index": d["db_index"],
            "c_index": d["c_index"],
            "clusters": d["cluster_count"],
            "noise": d["noise_count"],
            "elapsed_ms": d["elapsed"] * 1000.0,
            "meta": {"index_distance": C_INDEX_DISTANCE, "noise": "excluded"},
        }


def _data(X) -> np.ndarray:
    return X.data if isinstance(X, SessionMatrix) else np.asarray(X, dtype=float)


def _clusters(labels: np.ndarray) -> list[np.ndarray]:
    """Row indices of each non-empty cluster, by ascending label."""
    return [np.flatnonzero(labels == c) for c in np.unique(labels[labels >= 0])]


def sse(X, r: ClusterResult) -> float:
    data = _data(X)
    centers = r.center_vectors(data)
    total = 0.0
    for i, c in enumerate(r.labels):
        if c >= 0:
            diff = data[i] - centers[c]
            total += float(diff @ diff)
    return total


def davies_bouldin(X, r: ClusterResult, diameter: str = "centroid") -> float | None:
    """Mean over clusters of the worst (diam_i + diam_j) / dis(i, j) ratio.

    ``diameter="centroid"`` uses mean member-to-centroid distance;
    ``"max_pairwise"`` uses the largest within-cluster pairwise distance.
    Returns None with fewer than two non-empty clusters or when two
    centroids coincide.
    """
    data = _data(X)
    groups = _clusters(np.asarray(r.labels))
    if len(groups) < 2:
        return None
    cents = np.array([data[g].mean(axis=0) for g in groups])
    if diameter == "centroid":
        diam = np.array([np.sqrt(((data[g] - c) ** 2).sum(axis=1)).mean() for g, c in zip(groups, cents)])
    elif diameter == "max_pairwise":
        diam = np.array([np.sqrt(pairwise_sq_distances(data[g]).max()) for g in groups])
    else:
        raise ValueError(f"unknown diameter {diameter!r}")
    sep = np.sqrt(pairwise_sq_distances(cents))
    k = len(groups)
    off = ~np.eye(k, dtype=bool)
    if np.any(sep[off] == 0):
        return None
    ratios = np.where(off, (diam[:, None] + diam[None, :]) / np.where(off, sep, 1.0), -np.inf)
    return float(ratios.max(axis=1).mean())


def c_index(X, r: ClusterResult) -> float | None:
    """(S - S_min) / (S_max - S_min) over unsquared pair distances; None if no within-cluster pair."""
    data = _data(X)
    labels = np.asarray(r.labels)
    keep = np.flatnonzero(labels >= 0)
    if len(keep) < 2:
        return None
    lab = labels[keep]
    d = np.sqrt(pairwise_sq_distances(data[keep]))
    iu = np.triu_indices(len(keep), k=1)
    dists = d[iu]
    same = lab[iu[0]] == lab[iu[1]]
    n_pairs = int(same.sum())
    if n_pairs == 0:
        return None
    s = float(dists[same].sum())
    ordered = np.sort(dists)
    s_min = float(ordered[:n_pairs].sum())
    s_max = float(ordered[-n_pairs:].sum())
    if s_max == s_min:
        return 0.0
    # float sums can stray by an ulp past the bounds
    return float(min(1.0, max(0.0, (s - s_min) / (s_max - s_min))))


def evaluate(X, r: ClusterResult, diameter: str = "centroid") -> ValidityReport:
    labels = np.asarray(r.labels)
    return ValidityReport(
        sse=sse(X, r),
        db_index=davies_bouldin(X, r, diameter),
        c_index=c_index(X, r),
        cluster_count=len(_clusters(labels)),
        noise_count=int(np.sum(labels < 0)),
        elapsed=r.elapsed,
    )

