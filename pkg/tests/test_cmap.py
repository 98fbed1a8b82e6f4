import numpy as np
import pytest

from quadlab import cmap, schaeffer, trees


def square_map():
    twin = [1, 0, 3, 2, 5, 4, 7, 6]
    sigma = [0] * 8
    for v in range(4):
        sigma[2 * v] = 2 * ((v - 1) % 4) + 1
        sigma[2 * ((v - 1) % 4) + 1] = 2 * v
    return cmap.build_map(8, twin, sigma, 0)


def test_square_quadrilateral():
    m = square_map()
    assert (m.n_vertices, m.n_edges, m.n_faces) == (4, 4, 2)
    assert m.is_quadrangulation()
    d = m.bfs_distances(m.root_vertex)
    assert sorted(d.tolist()) == [0, 1, 1, 2]


def test_not_involution_raises():
    with pytest.raises(cmap.NotInvolution):
        cmap.build_map(4, [0, 1, 3, 2], [1, 0, 3, 2], 0)  # fixed points
    with pytest.raises(cmap.NotInvolution):
        cmap.build_map(4, [1, 2, 3, 0], [1, 2, 3, 0], 0)  # not an involution


def test_disconnected_raises():
    # two separate digons
    twin = [1, 0, 3, 2]
    sigma = [0, 1, 2, 3]
    with pytest.raises(cmap.NotConnected):
        cmap.build_map(4, twin, sigma, 0)


def test_bfs_edge_lipschitz(rng):
    q = schaeffer.tree_to_pointed_quad(
        trees.sample_labels(trees.sample_uniform_plane_tree(40, rng), "labeled", rng), 1)
    d = q.bfs_distances(q.root_vertex)
    for u, v in q.edges():
        assert abs(d[u] - d[v]) == 1  # bipartite: exactly 1 across each edge


def test_schaeffer_output_validates(rng):
    t = trees.sample_uniform_plane_tree(2, rng)
    lt = trees.LabeledTree(t, [0, 1, 0] if t.parent[2] == 1 else [0, 1, 1])
    q = schaeffer.tree_to_pointed_quad(lt, 0)
    assert q.n_faces == 2 and q.is_quadrangulation()


def test_serialization_roundtrip(rng):
    q = schaeffer.tree_to_pointed_quad(
        trees.sample_labels(trees.sample_uniform_plane_tree(15, rng), "labeled", rng), 0)
    q2 = cmap.CombinatorialMap.from_bytes(q.to_bytes())
    assert np.array_equal(q2.twin, q.twin) and np.array_equal(q2.sigma, q.sigma)
    assert q2.canonical_key() == q.canonical_key()
    q3 = cmap.CombinatorialMap.from_json(q.to_json())
    assert q3.canonical_key() == q.canonical_key()


def test_canonical_form_invariant_under_relabeling(rng):
    q = schaeffer.tree_to_pointed_quad(
        trees.sample_labels(trees.sample_uniform_plane_tree(12, rng), "labeled", rng), 1)
    # relabel darts by a random permutation fixing nothing structural
    perm = rng.permutation(q.n_darts)
    inv = np.argsort(perm)
    twin2 = perm[q.twin[inv]]
    sigma2 = perm[q.sigma[inv]]
    q2 = cmap.CombinatorialMap(twin2, sigma2, int(perm[q.root_dart]),
                               tuple(int(perm[d]) for d in q.mark_darts))
    assert q2.canonical_key() == q.canonical_key()


def test_glue_euler_bookkeeping(rng):
    # tree-like patch (zero inner faces): net face count drops by one
    checked = 0
    while checked < 10:
        k = int(rng.integers(1, 4))
        try:
            patch = schaeffer.boltzmann_boundary_quad(k, rng, pointed=True, max_edges=0)
        except trees.SizeTooLarge:
            continue
        if patch.n_inner_faces != 0:
            continue
        host_split = None
        while host_split is None:
            q = _small_map(rng)
            if q is None:
                continue
            split = cmap.hull_split(q, 1) if _dist(q) >= 1 else cmap.ALL_OF_Q
            if split != cmap.ALL_OF_Q and split.half_perimeter == k:
                host_split = split
        host = host_split.hull
        glued = cmap.glue_boundary_into_face(
            host.map, host.outer_face, host_split.anchor_bdart(), patch)
        assert glued.n_faces == host.map.n_faces - 1 + patch.map.n_faces - 1
        assert glued.n_vertices - glued.n_edges + glued.n_faces == 2
        checked += 1


def _small_map(rng):
    try:
        return schaeffer.boltzmann_quad_via_trees(rng, max_edges=200)
    except trees.SizeTooLarge:
        return None


def _dist(q):
    return int(q.bfs_distances(q.root_vertex)[q.pointed_vertex])


def test_glue_perimeter_mismatch(rng):
    q = None
    while q is None:
        q = _small_map(rng)
        if q is not None and _dist(q) < 1:
            q = None
    split = cmap.hull_split(q, 1)
    if split == cmap.ALL_OF_Q:
        pytest.skip("unlucky draw")
    k = split.half_perimeter
    patch = schaeffer.boltzmann_boundary_quad(k + 1, rng, pointed=True, max_edges=50)
    with pytest.raises(cmap.PerimeterMismatch):
        cmap.glue_boundary_into_face(split.hull.map, split.hull.outer_face,
                                     split.anchor_bdart(), patch)


def test_hull_roundtrip_and_allofq(rng):
    rounds = 0
    while rounds < 25:
        q = _small_map(rng)
        if q is None:
            continue
        d = _dist(q)
        for radius in range(1, d + 2):
            split = cmap.hull_split(q, radius)
            if split == cmap.ALL_OF_Q:
                assert radius >= d  # Xi <= d <= Xi + 1
                break
            assert radius <= d
            assert split.reglue().canonical_key() == q.canonical_key()
            rounds += 1


def test_dagger_enumerated_perimeter2():
    # dagger over every perimeter-2 pointed boundary quad with <= 2 inner
    # faces: valid pointed quadrangulation, apex degree k, k extra edges
    from tests.conftest import all_forests

    for n in (0, 1, 2):
        for forest in all_forests(1, n):
            for bridge in trees.enumerate_bridges(1):
                for sign in (1, -1):
                    fb = trees.LabeledForestWithBridge(list(forest), bridge, sign)
                    bq = schaeffer.forest_bridge_to_boundary_quad(fb)
                    qd = cmap.dagger(bq)
                    assert qd.is_quadrangulation()
                    assert qd.n_edges == bq.map.n_edges + 1
                    apex = qd.marked_vertices[0]
                    assert qd.vertex_degrees()[apex] == 1


def test_dagger_apex_degree_general(rng):
    done = 0
    while done < 10:
        k = int(rng.integers(1, 7))
        try:
            fb = trees.sample_labeled_forest_with_bridge(k, rng, max_edges=200)
        except trees.SizeTooLarge:
            continue
        bq = schaeffer.forest_bridge_to_boundary_quad(fb)
        qd = cmap.dagger(bq)
        assert qd.is_quadrangulation()
        assert qd.n_edges == bq.map.n_edges + k
        assert qd.vertex_degrees()[qd.marked_vertices[0]] == k
        done += 1


def test_ball_complement_trivial(rng):
    q = None
    while q is None:
        q = _small_map(rng)
    d = q.bfs_distances(q.root_vertex)
    ecc = int(d.max())
    assert cmap.ball_complement_components(q, q.root_vertex, ecc) == []
    comps = cmap.ball_complement_components(q, q.root_vertex, 0, proximity_radii=(1, 2))
    covered = set()
    for c in comps:
        covered.update(c["vertices"].tolist())
    assert covered == {v for v in range(q.n_vertices) if d[v] > 0}
    for c in comps:
        assert c["near_counts"][1] == len(c["boundary"])


def test_ball_complement_vs_hull(rng):
    # components of the complement of B(root, r): exactly one contains the
    # pointed vertex; its complement-side matches the hull interior relation
    done = 0
    while done < 8:
        q = _small_map(rng)
        if q is None or _dist(q) < 2:
            continue
        r = 1
        comps = cmap.ball_complement_components(q, q.root_vertex, r)
        xi = q.pointed_vertex
        with_xi = [c for c in comps if xi in set(c["vertices"].tolist())]
        assert len(with_xi) == 1
        hull_side = set(schaeffer.hull_vertex_set(q, r).tolist())
        assert not (set(with_xi[0]["vertices"].tolist()) & hull_side)
        done += 1
