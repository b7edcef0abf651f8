import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from synthetic import three_blobs
from usageprofiles import validity
from usageprofiles.clustering import (
    NOISE, ClusterResult, DbscanParams, InvalidK, KMeansParams, KMedoidsParams, LeaderParams,
    dbscan_run, kmeans_run, kmedoids_run, leader_run, run,
)
from usageprofiles.vectorspace import SessionMatrix

FOUR = SessionMatrix.from_array([[0, 0], [0, 1], [10, 10], [10, 11]])


def groups(labels):
    out = {}
    for i, c in enumerate(labels):
        if c != NOISE:
            out.setdefault(int(c), set()).add(i)
    return {frozenset(g) for g in out.values()}


# -- k-Means ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_kmeans_four_points(seed):
    r = kmeans_run(FOUR, KMeansParams(k=2, seed=seed))
    assert groups(r.labels) == {frozenset({0, 1}), frozenset({2, 3})}
    assert sorted(map(tuple, r.centers.tolist())) == [(0.0, 0.5), (10.0, 10.5)]
    assert r.objective_j == 1.0 == oracles.best_partition_sse(FOUR.data.tolist(), 2)


def test_kmeans_k_equals_m():
    r = kmeans_run(FOUR, KMeansParams(k=4, seed=3))
    assert r.objective_j == 0 and len(set(r.labels)) == 4 and r.empty_cluster_count == 0


def test_kmeans_k_one():
    r = kmeans_run(FOUR, KMeansParams(k=1))
    mean = FOUR.data.mean(axis=0)
    assert np.allclose(r.centers[0], mean)
    assert r.objective_j == pytest.approx(float(((FOUR.data - mean) ** 2).sum()), rel=1e-12)


@pytest.mark.parametrize("k", [0, 5, -1])
def test_invalid_k(k):
    with pytest.raises(InvalidK):
        kmeans_run(FOUR, KMeansParams(k=k))
    with pytest.raises(InvalidK):
        kmedoids_run(FOUR, KMedoidsParams(k=k))


def test_kmeans_tie_goes_to_lowest_cluster():
    # duplicate rows as initial centroids: the lower cluster index takes every tie
    X = SessionMatrix.from_array([[0.0], [0.0], [0.0]])
    r = kmeans_run(X, KMeansParams(k=2, seed=0))
    assert r.labels.tolist() == [0, 0, 0]
    assert r.empty_cluster_count == 1


def test_kmeans_empty_cluster_kept_unless_reseeding():
    X = SessionMatrix.from_array([[0.0], [0.0], [0.0], [5.0]])
    runs = [kmeans_run(X, KMeansParams(k=3, seed=s)) for s in range(20)]
    with_empty = [r for r in runs if r.empty_cluster_count]
    assert with_empty
    for r in with_empty:
        empty = [c for c in range(3) if not np.any(r.labels == c)]
        # frozen centroid is still the data row it was initialised from
        assert all(r.centers[c][0] in (0.0, 5.0) for c in empty)
    for s in range(20):
        r = kmeans_run(X, KMeansParams(k=3, seed=s, reseed_empty=True))
        assert r.empty_cluster_count == validity_empty(r)


def validity_empty(r):
    return sum(1 for c in range(r.n_clusters) if not np.any(r.labels == c))


def test_kmeans_j_epsilon_stops_early():
    X = three_blobs(seed=1, per_blob=30)
    full = kmeans_run(X, KMeansParams(k=5, seed=2))
    loose = kmeans_run(X, KMeansParams(k=5, seed=2, j_epsilon=1e9))
    assert loose.iterations == min(2, full.iterations)
    capped = kmeans_run(X, KMeansParams(k=5, seed=2, max_iterations=1))
    assert capped.iterations == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kmeans_monotone_and_fixed_point(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 60))
    data = rng.normal(size=(m, int(rng.integers(1, 6))))
    k = int(rng.integers(1, min(m, 8) + 1))
    r = kmeans_run(SessionMatrix.from_array(data), KMeansParams(k=k, seed=seed))
    h = r.history + [r.objective_j]
    assert all(b <= a * (1 + 1e-12) + 1e-12 for a, b in zip(h, h[1:]))
    for c in range(k):
        members = data[r.labels == c]
        if len(members):
            assert np.allclose(r.centers[c], members.mean(axis=0), rtol=0, atol=1e-9)


# -- k-Medoids -------------------------------------------------------------

def test_kmedoids_four_points():
    for seed in range(6):
        r = kmedoids_run(FOUR, KMedoidsParams(k=2, seed=seed))
        assert groups(r.labels) == {frozenset({0, 1}), frozenset({2, 3})}
        assert r.objective_j == 2.0 == oracles.best_medoid_cost(FOUR.data.tolist(), 2)
        assert {0, 1} & set(r.centers) and {2, 3} & set(r.centers)


def test_kmedoids_k_equals_m_and_singleton():
    r = kmedoids_run(FOUR, KMedoidsParams(k=4, seed=9))
    assert r.objective_j == 0 and sorted(r.centers) == [0, 1, 2, 3]
    for c, med in enumerate(r.centers):
        assert r.labels[med] == c


def test_kmedoids_uses_supplied_distance_table():
    from usageprofiles.vectorspace import pairwise_sq_distances
    table = pairwise_sq_distances(FOUR.data)
    a = kmedoids_run(FOUR, KMedoidsParams(k=2, seed=4), dist=table)
    b = kmedoids_run(FOUR, KMedoidsParams(k=2, seed=4))
    assert a.labels.tolist() == b.labels.tolist() and a.centers == b.centers


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_kmedoids_medoids_are_argmin(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 30))
    data = np.round(rng.normal(size=(m, int(rng.integers(1, 4)))), 1)
    k = int(rng.integers(1, min(m, 6) + 1))
    r = kmedoids_run(SessionMatrix.from_array(data), KMedoidsParams(k=k, seed=seed))
    pts = data.tolist()
    h = r.history + [r.objective_j]
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    for c, med in enumerate(r.centers):
        members = np.flatnonzero(r.labels == c).tolist()
        if members:
            assert med == oracles.medoid_argmin(pts, members)


# -- Leader ----------------------------------------------------------------

def test_leader_hand_example():
    r = leader_run(SessionMatrix.from_array([0, 3, 0.5]), LeaderParams(alpha=1))
    assert r.centers == [0, 1] and r.labels.tolist() == [0, 1, 0]
    assert r.objective_j == 0.25 and r.iterations == 1


def test_leader_extreme_alphas():
    X = three_blobs()
    big = float(((X.data[:, None] - X.data[None]) ** 2).sum(-1).max()) + 1
    assert leader_run(X, LeaderParams(alpha=big)).n_clusters == 1
    assert leader_run(X, LeaderParams(alpha=0)).n_clusters == X.m


def test_leader_tie_goes_to_earliest_leader():
    # row 1 founds a leader (d2 = 16); row 2 is at d2 = 4 from both leaders
    r = leader_run(SessionMatrix.from_array([0, 4, 2]), LeaderParams(alpha=4.5))
    assert r.centers == [0, 1] and r.labels.tolist() == [0, 1, 0]


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 40), st.integers(1, 3)), elements=st.floats(-20, 20, width=32)),
       st.floats(0, 200))
def test_leader_members_within_threshold(data, alpha):
    r = leader_run(SessionMatrix.from_array(data), LeaderParams(alpha=alpha))
    assert r.centers[0] == 0
    for i, c in enumerate(r.labels):
        if i not in r.centers:
            assert oracles.sqdist(data[i], data[r.centers[c]]) < alpha


def test_leader_count_not_monotone_in_general():
    # alpha 16: (3,3) founds a leader that absorbs the rest.
    # alpha 17: (3,3) joins leader 0, so (5,0) and (2,3) must found their own.
    X = SessionMatrix.from_array([[3, 7], [3, 3], [5, 0], [2, 3]])
    assert leader_run(X, LeaderParams(alpha=16)).n_clusters == 2
    assert leader_run(X, LeaderParams(alpha=17)).n_clusters == 3


@pytest.mark.parametrize("seed", range(20))
def test_leader_count_monotone_on_blobs(seed):
    X = three_blobs(seed=seed)
    alphas = [0.5 * i for i in range(1, 8)]
    counts = [leader_run(X, LeaderParams(alpha=a)).n_clusters for a in alphas]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


# -- DBSCAN ----------------------------------------------------------------

def test_dbscan_hand_example():
    r = dbscan_run(SessionMatrix.from_array([0, 0.1, 0.2, 10, 10.1, 50]), DbscanParams(epsilon=0.25, eta=2))
    assert groups(r.labels) == {frozenset({0, 1, 2}), frozenset({3, 4})}
    assert r.labels[5] == NOISE and r.noise_count == 1 and r.n_clusters == 2


def test_dbscan_eta_above_m_all_noise():
    r = dbscan_run(FOUR, DbscanParams(epsilon=1000, eta=5))
    assert r.n_clusters == 0 and r.noise_count == 4 and r.objective_j == 0


def test_dbscan_identical_points():
    r = dbscan_run(SessionMatrix.from_array([[1, 1]] * 5), DbscanParams(epsilon=0, eta=5))
    assert r.n_clusters == 1 and r.noise_count == 0


def test_dbscan_border_goes_to_first_cluster():
    # cores at 0 and 2; the point at 1 sees only those two cores and itself
    X = SessionMatrix.from_array([-1, -1, 0, 1, 2, 3, 3])
    r = dbscan_run(X, DbscanParams(epsilon=1, eta=4))
    assert r.core_mask.tolist() == [False, False, True, False, True, False, False]
    assert r.labels.tolist() == [0, 0, 0, 0, 1, 1, 1]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dbscan_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 40))
    data = np.round(rng.normal(size=(m, 2)) * 2, 1)
    eps = float(rng.choice([0.0, 0.1, 0.5, 1.0, 2.0, 4.0]))
    eta = int(rng.integers(1, 6))
    r = dbscan_run(SessionMatrix.from_array(data), DbscanParams(epsilon=eps, eta=eta))
    core, parts, noise, nbr = oracles.dbscan_oracle(data.tolist(), eps, eta)
    assert set(np.flatnonzero(r.core_mask).tolist()) == core
    core_groups = {frozenset(i for i in g if i in core) for g in groups(r.labels)}
    assert core_groups == parts
    assert set(np.flatnonzero(r.labels == NOISE).tolist()) == noise


# -- shared ----------------------------------------------------------------

ALL = [
    ("kmeans", dict(k=3, seed=5)),
    ("kmedoids", dict(k=3, seed=5)),
    ("leader", dict(alpha=2.0)),
    ("dbscan", dict(epsilon=1.0, eta=3)),
]


@pytest.mark.parametrize("algo,params", ALL)
def test_assignment_invariants_and_objective(algo, params):
    X = three_blobs(seed=3)
    r = run(X, algo, **params)
    assert r.labels.shape == (X.m,)
    if algo != "dbscan":
        assert np.all((r.labels >= 0) & (r.labels < r.n_clusters))
    else:
        assert np.all((r.labels == NOISE) | ((r.labels >= 0) & (r.labels < r.n_clusters)))
    assert r.empty_cluster_count == validity_empty(r)
    assert validity.sse(X, r) == pytest.approx(r.objective_j, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("algo,params", ALL)
def test_determinism(algo, params):
    X = three_blobs(seed=4)
    a, b = run(X, algo, **params), run(X, algo, **params)
    assert a.labels.tobytes() == b.labels.tobytes()
    assert a.objective_j == b.objective_j and a.iterations == b.iterations
    if algo == "kmeans":
        assert a.centers.tobytes() == b.centers.tobytes()
    else:
        assert a.centers == b.centers


@pytest.mark.parametrize("algo,params", ALL)
def test_result_json_round_trip(algo, params):
    X = three_blobs(seed=4)
    r = run(X, algo, **params)
    d = r.to_dict()
    assert set(d) >= {"labels", "centers", "objective_j", "iterations", "empty_clusters", "noise_count",
                      "elapsed_ms", "seed"}
    back = ClusterResult.from_dict(d)
    assert validity.sse(X, back) == pytest.approx(r.objective_j, rel=1e-9, abs=1e-12)


def test_param_validation():
    with pytest.raises(ValueError):
        LeaderParams(alpha=-1)
    with pytest.raises(ValueError):
        DbscanParams(epsilon=1, eta=0)
    with pytest.raises(ValueError):
        run(FOUR, "fcm", k=2)
