"""k-Means, k-Medoids, Leader and DBSCAN over a session matrix.

All distances are squared Euclidean. Leader's alpha and DBSCAN's epsilon
are thresholds on the squared distance. Ties always resolve to the lowest
index (cluster index, row index, or leader creation order).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .vectorspace import SessionMatrix, pairwise_sq_distances, sq_distances_to

NOISE = -1
ALGORITHMS = ("kmeans", "kmedoids", "leader", "dbscan")


class InvalidK(ValueError):
    pass


@dataclass(frozen=True)
class KMeansParams:
    k: int
    max_iterations: int = 100
    seed: int = 0
    j_epsilon: float = 0.0
    reseed_empty: bool = False


@dataclass(frozen=True)
class KMedoidsParams:
    k: int
    max_iterations: int = 100
    seed: int = 0
    j_epsilon: float = 0.0


@dataclass(frozen=True)
class LeaderParams:
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float
    eta: int

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.eta < 1:
            raise ValueError("eta must be >= 1")


@dataclass
class ClusterResult:
    algo: str
    labels: np.ndarray
    n_clusters: int  # size of the label space {0..n_clusters-1}
    # centroids (k x n array) for kmeans; row indices for kmedoids/leader; None for dbscan
    centers: np.ndarray | list[int] | None
    objective_j: float
    iterations: int
    empty_cluster_count: int
    noise_count: int
    elapsed: float  # seconds
    seed: int | None = None
    history: list[float] = field(default_factory=list)
    core_mask: np.ndarray | None = None

    def center_vectors(self, data: np.ndarray) -> np.ndarray:
        """One vector per label; DBSCAN clusters use the member mean."""
        if self.algo == "kmeans":
            return np.asarray(self.centers)
        if self.algo in ("kmedoids", "leader"):
            return data[np.asarray(self.centers, dtype=int)]
        return _member_means(data, self.labels, self.n_clusters)

    def to_dict(self) -> dict:
        if self.centers is None:
            centers = None
        elif self.algo == "kmeans":
            centers = [[float(v) for v in c] for c in np.asarray(self.centers)]
        else:
            centers = [int(c) for c in self.centers]
        return {
            "algo": self.algo,
            "labels": [int(v) for v in self.labels],
            "n_clusters": self.n_clusters,
            "centers": centers,
            "objective_j": float(self.objective_j),
            "iterations": self.iterations,
            "empty_clusters": self.empty_cluster_count,
            "noise_count": self.noise_count,
            "elapsed_ms": self.elapsed * 1000.0,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterResult":
        algo = d["algo"]
        centers = d.get("centers")
        if centers is not None:
            centers = np.array(centers, dtype=float) if algo == "kmeans" else [int(c) for c in centers]
        labels = np.array(d["labels"], dtype=int)
        return cls(
            algo=algo,
            labels=labels,
            n_clusters=int(d.get("n_clusters", labels.max(initial=-1) + 1)),
            centers=centers,
            objective_j=float(d["objective_j"]),
            iterations=int(d.get("iterations", 0)),
            empty_cluster_count=int(d.get("empty_clusters", 0)),
            noise_count=int(d.get("noise_count", 0)),
            elapsed=float(d.get("elapsed_ms", 0.0)) / 1000.0,
            seed=d.get("seed"),
        )


def _member_means(data: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((k, data.shape[1]))
    for j in range(k):
        members = data[labels == j]
        if len(members):
            out[j] = members.mean(axis=0)
    return out


def _count_empty(labels: np.ndarray, k: int) -> int:
    sizes = np.bincount(labels[labels >= 0], minlength=k)
    return int(np.sum(sizes[:k] == 0))


def _objective(data: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    mask = labels >= 0
    diff = data[mask] - centers[labels[mask]]
    return float(np.einsum("ij,ij->", diff, diff))


def _check_k(k: int, m: int) -> None:
    if not 1 <= k <= m:
        raise InvalidK(f"k must satisfy 1 <= k <= m={m}, got {k}")


def _as_array(X) -> np.ndarray:
    return X.data if isinstance(X, SessionMatrix) else np.asarray(X, dtype=float)


def kmeans_run(X: SessionMatrix, p: KMeansParams) -> ClusterResult:
    t0 = time.perf_counter()
    data = _as_array(X)
    m = data.shape[0]
    _check_k(p.k, m)
    if p.max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    rng = np.random.default_rng(p.seed)
    centroids = data[rng.choice(m, size=p.k, replace=False)].copy()

    labels = None
    history: list[float] = []
    iterations = 0
    for iterations in range(1, p.max_iterations + 1):
        new_labels = np.argmin(sq_distances_to(data, centroids), axis=1)
        j = _objective(data, new_labels, centroids)
        history.append(j)
        unchanged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels

        for c in range(p.k):
            members = data[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            elif p.reseed_empty:
                centroids[c] = data[rng.integers(m)]
        if unchanged:
            break
        if len(history) > 1 and abs(history[-2] - j) <= p.j_epsilon:
            break

    return ClusterResult(
        algo="kmeans",
        labels=labels,
        n_clusters=p.k,
        centers=centroids,
        objective_j=_objective(data, labels, centroids),
        iterations=iterations,
        empty_cluster_count=_count_empty(labels, p.k),
        noise_count=0,
        elapsed=time.perf_counter() - t0,
        seed=p.seed,
        history=history,
    )


def medoid_of(members: np.ndarray, dist: np.ndarray) -> int:
    """Member row minimizing the summed distance to the other members."""
    sub = dist[np.ix_(members, members)]
    return int(members[np.argmin(sub.sum(axis=1))])


def kmedoids_run(X: SessionMatrix, p: KMedoidsParams, dist: np.ndarray | None = None) -> ClusterResult:
    """Alternating k-Medoids; ``dist`` may carry a precomputed squared-distance table."""
    t0 = time.perf_counter()
    data = _as_array(X)
    m = data.shape[0]
    _check_k(p.k, m)
    if p.max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    if dist is None:
        dist = pairwise_sq_distances(data)
    rng = np.random.default_rng(p.seed)
    medoids = [int(i) for i in rng.choice(m, size=p.k, replace=False)]

    labels = None
    history: list[float] = []
    iterations = 0
    for iterations in range(1, p.max_iterations + 1):
        to_medoids = dist[:, medoids]
        new_labels = np.argmin(to_medoids, axis=1)
        j = float(to_medoids[np.arange(m), new_labels].sum())
        history.append(j)
        unchanged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels

        for c in range(p.k):
            members = np.flatnonzero(labels == c)
            if len(members):
                medoids[c] = medoid_of(members, dist)
        if unchanged:
            break
        if len(history) > 1 and abs(history[-2] - j) <= p.j_epsilon:
            break

    objective = float(dist[np.arange(m), np.asarray(medoids)[labels]].sum())
    return ClusterResult(
        algo="kmedoids",
        labels=labels,
        n_clusters=p.k,
        centers=medoids,
        objective_j=objective,
        iterations=iterations,
        empty_cluster_count=_count_empty(labels, p.k),
        noise_count=0,
        elapsed=time.perf_counter() - t0,
        seed=p.seed,
        history=history,
    )


def leader_run(X: SessionMatrix, p: LeaderParams) -> ClusterResult:
    t0 = time.perf_counter()
    data = _as_array(X)
    m = data.shape[0]
    leaders = [0]
    labels = np.zeros(m, dtype=int)
    for i in range(1, m):
        diff = data[leaders] - data[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        j = int(np.argmin(d2))
        if d2[j] < p.alpha:
            labels[i] = j
        else:
            labels[i] = len(leaders)
            leaders.append(i)

    return ClusterResult(
        algo="leader",
        labels=labels,
        n_clusters=len(leaders),
        centers=leaders,
        objective_j=_objective(data, labels, data[leaders]),
        iterations=1,
        empty_cluster_count=0,
        noise_count=0,
        elapsed=time.perf_counter() - t0,
    )


def dbscan_run(X: SessionMatrix, p: DbscanParams, dist: np.ndarray | None = None) -> ClusterResult:
    t0 = time.perf_counter()
    data = _as_array(X)
    m = data.shape[0]
    if dist is None:
        dist = pairwise_sq_distances(data)
    neighbors = [np.flatnonzero(dist[i] <= p.epsilon) for i in range(m)]
    core = np.array([len(nb) >= p.eta for nb in neighbors])

    unvisited = -2
    labels = np.full(m, unvisited, dtype=int)
    cid = 0
    for i in range(m):
        if labels[i] != unvisited:
            continue
        if not core[i]:
            labels[i] = NOISE  # may later be claimed as a border point
            continue
        labels[i] = cid
        queue = deque(neighbors[i])
        while queue:
            q = queue.popleft()
            if labels[q] == NOISE:
                labels[q] = cid
            if labels[q] != unvisited:
                continue
            labels[q] = cid
            if core[q]:
                queue.extend(n for n in neighbors[q] if labels[n] < 0)
        cid += 1

    means = _member_means(data, labels, cid)
    return ClusterResult(
        algo="dbscan",
        labels=labels,
        n_clusters=cid,
        centers=None,
        objective_j=_objective(data, labels, means) if cid else 0.0,
        iterations=1,
        empty_cluster_count=0,
        noise_count=int(np.sum(labels == NOISE)),
        elapsed=time.perf_counter() - t0,
        core_mask=core,
    )


def run(X: SessionMatrix, algo: str, **params) -> ClusterResult:
    """Dispatch by algorithm name; ``params`` are the matching *Params fields."""
    if algo == "kmeans":
        return kmeans_run(X, KMeansParams(**params))
    if algo == "kmedoids":
        return kmedoids_run(X, KMedoidsParams(**params))
    if algo == "leader":
        return leader_run(X, LeaderParams(**params))
    if algo == "dbscan":
        return dbscan_run(X, DbscanParams(**params))
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")
