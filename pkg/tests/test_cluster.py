import numpy as np
import pytest

from conftest import make_fixation
from gazeforge import cluster
from gazeforge.cluster import (
    ClusterParams,
    GazeCluster,
    cluster_fixations,
    cluster_to_region,
    clusters_to_dict,
    dbscan,
    order_clusters,
)
from gazeforge.types import BBox, ImageGeometry

GEOM = ImageGeometry(200, 200)


# --- O(n^2) reference implementation ------------------------------------------

def dbscan_reference(pts, eps, min_pts):
    """Direct density-connectivity computation from the definitions.

    Returns (core labels, core mask, border candidate sets): core points get
    component labels over the core-core adjacency graph; border points map
    to the set of cluster ids they could legally join.
    """
    n = len(pts)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    adj = d2 <= eps * eps
    core = adj.sum(axis=1) >= min_pts
    labels = np.full(n, -1)
    cid = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        stack = [i]
        labels[i] = cid
        while stack:
            u = stack.pop()
            for v in np.nonzero(adj[u] & core)[0]:
                if labels[v] == -1:
                    labels[v] = cid
                    stack.append(v)
        cid += 1
    border_choices = {}
    for i in range(n):
        if core[i]:
            continue
        cores_near = np.nonzero(adj[i] & core)[0]
        if len(cores_near):
            border_choices[i] = {int(labels[c]) for c in cores_near}
    return labels, core, border_choices


def assert_matches_reference(pts, eps, min_pts):
    got = dbscan(pts, eps, min_pts)
    ref_labels, core, border_choices = dbscan_reference(pts, eps, min_pts)

    # cluster ids consecutive from 0
    ids = sorted(set(got) - {-1})
    assert ids == list(range(len(ids)))

    # core partition must agree up to a bijective renaming
    mapping = {}
    for i in np.nonzero(core)[0]:
        assert got[i] != -1, f"core point {i} marked noise"
        mapping.setdefault(int(got[i]), set()).add(int(ref_labels[i]))
    for mine, refs in mapping.items():
        assert len(refs) == 1, f"my cluster {mine} spans reference clusters {refs}"
    ref_ids = [next(iter(v)) for v in mapping.values()]
    assert len(set(ref_ids)) == len(ref_ids), "two of my clusters merged in reference"

    # non-core points: either noise on both sides or a legal border choice
    inv = {mine: next(iter(refs)) for mine, refs in mapping.items()}
    for i in range(len(pts)):
        if core[i]:
            continue
        if i in border_choices:
            assert got[i] != -1
            assert inv[int(got[i])] in border_choices[i]
        else:
            assert got[i] == -1


def test_all_noise_below_min_pts(rng):
    pts = rng.random((9, 2))
    labels = dbscan(pts, eps=10.0, min_pts=10)
    assert (labels == -1).all()


def test_disc_plus_far_point(rng):
    eps = 0.2
    disc = rng.uniform(-eps / 8, eps / 8, size=(20, 2))
    far = np.array([[10 * eps, 10 * eps]])
    pts = np.vstack([disc, far])
    labels = dbscan(pts, eps, 10)
    assert set(labels[:20]) == {0}
    assert labels[20] == -1
    assert_matches_reference(pts, eps, 10)


def test_two_separated_blobs(rng):
    eps = 0.1
    a = rng.normal(0.0, eps / 6, size=(15, 2))
    b = rng.normal(5 * eps, eps / 6, size=(15, 2))
    pts = np.vstack([a, b])
    labels = dbscan(pts, eps, 10)
    assert len(set(labels)) == 2 and -1 not in labels
    assert_matches_reference(pts, eps, 10)


def test_random_instances_match_reference(rng):
    for _ in range(40):
        n = int(rng.integers(1, 120))
        pts = rng.random((n, 2))
        eps = float(rng.uniform(0.02, 0.3))
        min_pts = int(rng.integers(1, 12))
        assert_matches_reference(pts, eps, min_pts)


def test_partition_property(rng):
    pts = rng.random((80, 2))
    labels = dbscan(pts, 0.15, 4)
    assert labels.shape == (80,)
    assert ((labels >= 0) | (labels == -1)).all()


def test_core_partition_permutation_invariant(rng):
    pts = rng.random((60, 2))
    eps, min_pts = 0.12, 5
    perm = rng.permutation(len(pts))
    labels_a = dbscan(pts, eps, min_pts)
    labels_b = dbscan(pts[perm], eps, min_pts)
    _, core, _ = dbscan_reference(pts, eps, min_pts)

    def core_partition(points, labels, core_mask):
        groups = {}
        for i in np.nonzero(core_mask)[0]:
            groups.setdefault(int(labels[i]), set()).add(tuple(points[i]))
        return {frozenset(g) for g in groups.values()}

    part_a = core_partition(pts, labels_a, core)
    part_b = core_partition(pts[perm], labels_b, core[perm])
    assert part_a == part_b


def test_dbscan_rejects_bad_shape():
    with pytest.raises(ValueError):
        dbscan(np.zeros((3, 3)), 0.1, 2)


# --- region refinement ------------------------------------------------------------

def test_region_single_fixation_centroid():
    f = make_fixation(60.0, 80.0, 0.0, 0.3, ppd=4.0)
    region = cluster_to_region([f], GEOM)
    assert abs(region.centroid[0] - 60.0) < 0.5
    assert abs(region.centroid[1] - 80.0) < 0.5
    assert region.t_first == 0.0


def test_region_symmetric_pair_centroid():
    a = make_fixation(90.0, 100.0, 0.0, 0.3, ppd=4.0)
    b = make_fixation(110.0, 100.0, 0.4, 0.7, ppd=4.0)
    region = cluster_to_region([a, b], GEOM)
    assert abs(region.centroid[0] - 100.0) < 1e-3
    assert abs(region.centroid[1] - 100.0) < 1e-3


def test_region_three_planted_blobs(rng):
    centers = [(40.0, 40.0), (160.0, 40.0), (100.0, 160.0)]
    params = ClusterParams(eps=12.0, min_pts=5, coordinate_space="pixel")
    t = 0.0
    fixations = []
    for cx, cy in centers:
        for _ in range(8):
            fixations.append(
                make_fixation(
                    cx + rng.normal(0, 1.5), cy + rng.normal(0, 1.5), t, t + 0.1, ppd=3.0
                )
            )
            t += 0.15
    regions, n_noise = cluster_fixations(fixations, GEOM, params)
    assert len(regions) == 3 and n_noise == 0
    for region, (cx, cy) in zip(regions, centers):
        err = np.hypot(region.centroid[0] - cx, region.centroid[1] - cy)
        assert err < 2.0


def test_region_empty_errors():
    with pytest.raises(ValueError):
        cluster_to_region([], GEOM)


def test_region_bbox_contains_centroid_even_when_bimodal():
    # heavy blob + light far blob in one point list: the top-intensity box
    # hugs the heavy blob while the global centroid sits between them
    pts = [make_fixation(30.0, 30.0, i * 0.2, i * 0.2 + 0.15, ppd=2.0) for i in range(6)]
    pts.append(make_fixation(170.0, 170.0, 1.4, 1.5, ppd=2.0))
    region = cluster_to_region(pts, GEOM)
    assert region.bbox.contains(*region.centroid)


def _dummy_cluster(t_first, tag):
    values = np.zeros((4, 4))
    values[1, 1] = 1.0
    return GazeCluster(
        points=(make_fixation(1, 1, t_first, t_first + 0.1),),
        values=values,
        centroid=(1.0, float(tag)),
        bbox=BBox(1, 1, 1, 1),
        t_first=t_first,
    )


def test_order_clusters_sorts_by_time():
    clusters = [_dummy_cluster(3.0, 0), _dummy_cluster(1.0, 1), _dummy_cluster(2.0, 2)]
    assert [c.t_first for c in order_clusters(clusters)] == [1.0, 2.0, 3.0]


def test_order_clusters_stable_on_ties():
    clusters = [_dummy_cluster(1.0, 0), _dummy_cluster(1.0, 1), _dummy_cluster(1.0, 2)]
    assert [c.centroid[1] for c in order_clusters(clusters)] == [0.0, 1.0, 2.0]


def test_order_clusters_single_identity():
    clusters = [_dummy_cluster(5.0, 0)]
    assert order_clusters(clusters) == clusters


def test_cluster_fixations_bbox_contains_centroid(rng):
    params = ClusterParams(eps=15.0, min_pts=4, coordinate_space="pixel")
    fixations = [
        make_fixation(
            float(rng.uniform(20, 180)), float(rng.uniform(20, 180)), i * 0.2, i * 0.2 + 0.1
        )
        for i in range(40)
    ]
    regions, _ = cluster_fixations(fixations, GEOM, params)
    for region in regions:
        assert region.bbox.contains(*region.centroid)
        assert len(region.points) >= 1


def test_cluster_dump_schema():
    f = make_fixation(50, 50, 0.0, 0.2, ppd=4.0)
    region = cluster_to_region([f], GEOM)
    dump = clusters_to_dict(2, [region], n_noise=3)
    assert dump["finding_index"] == 2
    assert dump["n_noise"] == 3
    entry = dump["clusters"][0]
    assert set(entry) == {"centroid", "bbox", "n_points", "t_first"}
    assert entry["n_points"] == 1 and len(entry["bbox"]) == 4
