"""Conforming triangulations of the study domains.

A mesh is immutable after construction.  Edges carry one fixed global unit
normal: outward for boundary edges, and pointing from the lower-indexed
neighbor triangle to the higher-indexed one for interior edges.  The crack
domain duplicates the vertices and edges on the slit (0,1)x{0}, so the two
lips are topologically boundary and carry independent degrees of freedom;
duplicates are tracked by explicit labels, never by coordinate comparison.

Supported domains:

* ``m_shape``        {|x|+|y|<1} intersected with {x<0 or y>0}, area 3/2
* ``crack_diamond``  {|x|+|y|<1} minus the slit [0,1]x{0}, area 2
* ``kovasznay_rect`` (-1/2, 3/2) x (0, 2), area 4
* ``custom``         anything built through :func:`from_arrays`

Uniform refinement bisects every element twice (newest-vertex bisection),
which subdivides each triangle into four and splits every parent edge at
its midpoint, so T' = 4T and E' = 2E + 3T.  A red (regular quadrisection)
variant with the same counts is available for cross-checks.
"""

import numpy as np

DOMAIN_AREAS = {"m_shape": 1.5, "crack_diamond": 2.0, "kovasznay_rect": 4.0}

_DEDUP_TOL = 1e-12


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class MeshError(Exception):
    """Raised when a triangulation fails a structural check."""


class Mesh:
    """Triangulation with edge topology and precomputed geometry.

    Attributes
    ----------
    vertices : (V, 2) float array
    triangles : (T, 3) int array
        Vertex ids, counter-clockwise.
    tri_edges : (T, 3) int array
        ``tri_edges[t, i]`` is the edge opposite ``triangles[t, i]``.
    tri_refedge : (T,) int array
        Local index of the refinement edge used by bisection.
    edges : (E, 2) int array
        Vertex ids, lower id first.
    edge_tris : (E, 2) int array
        Neighbor triangles, lower id first; -1 marks a missing neighbor.
    edge_normal : (E, 2) float array
        Unit normal, outward w.r.t. the first neighbor.
    tri_area, tri_diam, edge_len : float arrays
    slit_edges, slit_vertices : int arrays
        Labels of the duplicated crack-lip entities (empty off the crack).
    domain : str
    level : int
        Number of uniform refinements since the initial mesh.
    """

    def __init__(self, vertices, triangles, tri_edges, tri_refedge, edges,
                 edge_tris, edge_normal, tri_area, tri_diam, edge_len,
                 slit_edges, slit_vertices, domain, level):
        self.vertices = vertices
        self.triangles = triangles
        self.tri_edges = tri_edges
        self.tri_refedge = tri_refedge
        self.edges = edges
        self.edge_tris = edge_tris
        self.edge_normal = edge_normal
        self.tri_area = tri_area
        self.tri_diam = tri_diam
        self.edge_len = edge_len
        self.slit_edges = slit_edges
        self.slit_vertices = slit_vertices
        self.domain = domain
        self.level = level
        for arr in (vertices, triangles, tri_edges, tri_refedge, edges,
                    edge_tris, edge_normal, tri_area, tri_diam, edge_len,
                    slit_edges, slit_vertices):
            arr.setflags(write=False)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    @property
    def interior_edges(self):
        return np.flatnonzero(self.edge_tris[:, 1] >= 0)

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    def __repr__(self):
        return (f"Mesh({self.domain}, level={self.level}, "
                f"V={self.num_vertices}, T={self.num_triangles}, "
                f"E={self.num_edges})")

    def edge_neighbors(self, edge):
        """Neighbor triangles of an edge as ``(first, second-or-None)``.

        The stored normal points out of the first triangle (and into the
        second when the edge is interior).
        """
        if not 0 <= edge < self.num_edges:
            raise IndexError(f"edge id {edge} out of range")
        t0, t1 = self.edge_tris[edge]
        return (int(t0), int(t1) if t1 >= 0 else None)

    def tri_vertices(self, tri):
        """Coordinates of a triangle's vertices, shape (3, 2)."""
        if not 0 <= tri < self.num_triangles:
            raise IndexError(f"triangle id {tri} out of range")
        return self.vertices[self.triangles[tri]]

    def edge_vertices(self, edge):
        """Coordinates of an edge's endpoints, shape (2, 2)."""
        if not 0 <= edge < self.num_edges:
            raise IndexError(f"edge id {edge} out of range")
        return self.vertices[self.edges[edge]]

    def tri_centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def total_area(self):
        return float(self.tri_area.sum())

    def dump(self, stream):
        """Write the plain-text dump: one vertex/triangle/edge per line."""
        for i, (x, y) in enumerate(self.vertices):
            stream.write(f"vertex {i} {x!r} {y!r}\n")
        for i, (a, b, c) in enumerate(self.triangles):
            stream.write(f"triangle {i} {a} {b} {c}\n")
        boundary = self.edge_tris[:, 1] < 0
        for i, (a, b) in enumerate(self.edges):
            kind = "boundary" if boundary[i] else "interior"
            stream.write(f"edge {i} {a} {b} {kind}\n")


def from_arrays(vertices, triangles, domain="custom", level=0,
                slit_edge_pairs=(), slit_vertices=(), tri_refedge=None):
    """Build a mesh from raw vertex coordinates and triangle vertex ids.

    Triangles with negative signed area are flipped.  ``slit_edge_pairs``
    lists (vertex, vertex) pairs labelling crack-lip edges; those edges and
    the ids in ``slit_vertices`` are exempt from the duplicate-coordinate
    check.  ``tri_refedge`` carries refinement edges through refinement;
    when absent the longest edge is used.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    if not np.isfinite(vertices).all():
        raise MeshError("non-finite vertex coordinates")
    if triangles.min(initial=0) < 0 or triangles.max(initial=-1) >= len(vertices):
        raise MeshError("triangle vertex id out of range")

    p = vertices[triangles]
    signed = 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = signed < 0
    if flip.any():
        if tri_refedge is not None:
            raise MeshError("cannot flip orientation with refinement edges given")
        triangles = triangles.copy()
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        p = vertices[triangles]
        signed = 0.5 * _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if (signed <= 0).any():
        raise MeshError("degenerate triangle (zero area)")
    tri_area = signed

    side = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]],
                    axis=1)
    side_len = np.linalg.norm(side, axis=2)
    tri_diam = side_len.max(axis=1)

    if tri_refedge is None:
        tri_refedge = np.argmax(side_len, axis=1).astype(np.int64)
    else:
        tri_refedge = np.asarray(tri_refedge, dtype=np.int64)

    # Edge i of a triangle joins local vertices i+1, i+2 (mod 3).
    pairs = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]],
                      triangles[:, [0, 1]]], axis=1).reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(-1, 3)

    counts = np.bincount(inverse, minlength=len(edges))
    if counts.max(initial=0) > 2:
        raise MeshError("edge shared by more than two triangles")

    order = np.argsort(inverse, kind="stable")
    edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
    edge_local = np.full((len(edges), 2), -1, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)])
    occ_tri = order // 3
    occ_loc = order % 3
    edge_tris[:, 0] = occ_tri[starts[:-1]]
    edge_local[:, 0] = occ_loc[starts[:-1]]
    two = counts == 2
    edge_tris[two, 1] = occ_tri[starts[:-1][two] + 1]
    edge_local[two, 1] = occ_loc[starts[:-1][two] + 1]

    # Conformity: an interior edge is traversed in opposite directions by
    # its two (counter-clockwise) neighbors.
    if two.any():
        d0 = pairs[3 * edge_tris[two, 0] + edge_local[two, 0]]
        d1 = pairs[3 * edge_tris[two, 1] + edge_local[two, 1]]
        if not (d0 == d1[:, ::-1]).all():
            raise MeshError("interior edge with inconsistent orientation")

    a = vertices[edges[:, 0]]
    b = vertices[edges[:, 1]]
    tangent = b - a
    edge_len = np.linalg.norm(tangent, axis=1)
    normal = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / edge_len[:, None]
    mid = 0.5 * (a + b)
    opp = vertices[triangles[edge_tris[:, 0], edge_local[:, 0]]]
    wrong = np.einsum("ij,ij->i", normal, mid - opp) < 0
    normal[wrong] *= -1.0

    slit_vertices = np.array(sorted(set(int(v) for v in slit_vertices)),
                             dtype=np.int64)
    slit_edges = _lookup_edges(edges, slit_edge_pairs)

    _check_duplicates(vertices, slit_vertices)

    mesh = Mesh(vertices, triangles, tri_edges, tri_refedge, edges, edge_tris,
                normal, tri_area, tri_diam, edge_len, slit_edges,
                slit_vertices, domain, level)
    _validate(mesh)
    return mesh


def _lookup_edges(edges, vertex_pairs):
    if len(vertex_pairs) == 0:
        return np.empty(0, dtype=np.int64)
    enc = edges[:, 0] * (edges.max() + 1) + edges[:, 1]
    order = np.argsort(enc)
    want = np.array([[min(a, b), max(a, b)] for a, b in vertex_pairs],
                    dtype=np.int64)
    wenc = want[:, 0] * (edges.max() + 1) + want[:, 1]
    pos = np.searchsorted(enc[order], wenc)
    if (pos >= len(enc)).any() or (enc[order][pos] != wenc).any():
        raise MeshError("labelled slit edge not present in mesh")
    return np.sort(order[pos])


def _check_duplicates(vertices, slit_vertices):
    """Coinciding vertices must all carry a slit label."""
    order = np.lexsort((vertices[:, 1], vertices[:, 0]))
    v = vertices[order]
    same = (np.abs(np.diff(v, axis=0)) <= _DEDUP_TOL).all(axis=1)
    if same.any():
        labelled = np.zeros(len(vertices), dtype=bool)
        labelled[slit_vertices] = True
        hit = np.flatnonzero(same)
        ok = labelled[order[hit]] & labelled[order[hit + 1]]
        if not ok.all():
            raise MeshError("coinciding vertices without slit label")


def _validate(mesh):
    if (mesh.edge_tris[:, 0] < 0).any():
        raise MeshError("edge without neighbor")
    if not np.allclose(np.linalg.norm(mesh.edge_normal, axis=1), 1.0,
                       rtol=0, atol=1e-14):
        raise MeshError("non-unit edge normal")
    boundary = mesh.edge_tris[:, 1] < 0
    if mesh.slit_edges.size and not boundary[mesh.slit_edges].all():
        raise MeshError("slit edge with two neighbors")
    area = DOMAIN_AREAS.get(mesh.domain)
    if area is not None:
        if abs(mesh.total_area() - area) > 1e-12 * area:
            raise MeshError(f"area {mesh.total_area()} != {area}")
        # All study domains are simply connected (the slit is part of the
        # single boundary loop), so Euler's relation gives V - E + T = 1.
        chi = mesh.num_vertices - mesh.num_edges + mesh.num_triangles
        if chi != 1:
            raise MeshError(f"Euler characteristic {chi} != 1")


def build_initial_mesh(domain):
    """Initial triangulation of one of the named study domains.

    The M-shaped domain starts from its three quarter-diamond macro
    triangles and the crack diamond from all four (with the east corner
    vertex duplicated so the two slit lips stay separate); both macros are
    bisected twice, giving 12 triangles / 23 edges and 16 triangles /
    30 edges with the slit midpoint duplicated automatically.  The
    Kovasznay rectangle starts from a 2x2 grid of unit squares cut along
    the south-west/north-east diagonal, also bisected twice (32 triangles,
    56 edges).
    """
    if domain == "m_shape":
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                          [-1.0, 0.0], [0.0, -1.0]])
        tris = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4]])
        macro = from_arrays(verts, tris, domain="m_shape", level=-1)
        return refine_uniform(macro)
    if domain == "crack_diamond":
        verts = np.array([[0.0, 0.0],            # crack tip, shared
                          [1.0, 0.0],            # 1: upper copy of (1, 0)
                          [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0],
                          [1.0, 0.0]])           # 5: lower copy of (1, 0)
        tris = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]])
        macro = from_arrays(verts, tris, domain="crack_diamond", level=-1,
                            slit_edge_pairs=[(0, 1), (0, 5)],
                            slit_vertices=[1, 5])
        return refine_uniform(macro)
    if domain == "kovasznay_rect":
        xs = np.array([-0.5, 0.5, 1.5])
        ys = np.array([0.0, 1.0, 2.0])
        verts = np.array([[x, y] for y in ys for x in xs])
        tris = []
        for j in range(2):
            for i in range(2):
                a = 3 * j + i
                b, c, d = a + 1, a + 4, a + 3
                tris.append([a, b, c])
                tris.append([a, c, d])
        macro = from_arrays(verts, np.array(tris), domain="kovasznay_rect",
                            level=-1)
        return refine_uniform(macro)
    raise ValueError(f"unknown domain tag {domain!r}")


def _bisect_round(verts, tris, ref, memo):
    """One global newest-vertex bisection pass; returns children arrays."""
    n = len(tris)
    idx = np.arange(n)
    p = tris[idx, ref]
    a = tris[idx, (ref + 1) % 3]
    b = tris[idx, (ref + 2) % 3]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    mids = np.empty(n, dtype=np.int64)
    new_pts = []
    for i in range(n):
        key = (int(lo[i]), int(hi[i]))
        vid = memo.get(key)
        if vid is None:
            vid = len(verts) + len(new_pts)
            memo[key] = vid
            new_pts.append(0.5 * (verts[lo[i]] + verts[hi[i]]))
        mids[i] = vid
    if new_pts:
        verts = np.vstack([verts, np.array(new_pts)])
    child_a = np.column_stack([p, a, mids])
    child_b = np.column_stack([p, mids, b])
    tris_out = np.empty((2 * n, 3), dtype=np.int64)
    tris_out[0::2] = child_a
    tris_out[1::2] = child_b
    # Each child's refinement edge is the parent edge opposite the new
    # midpoint vertex, which keeps right isosceles meshes self-similar.
    ref_out = np.empty(2 * n, dtype=np.int64)
    ref_out[0::2] = 2
    ref_out[1::2] = 1
    return verts, tris_out, ref_out


def refine_uniform(mesh, strategy="bisect2"):
    """Conforming uniform refinement: T' = 4T, E' = 2E + 3T.

    ``bisect2`` bisects every element twice at its refinement edge (the
    result is conforming because all three edges of each parent are split);
    ``red`` quadrisects every element through its edge midpoints.  Both
    preserve the crack duplication because midpoints are keyed by vertex
    ids, never by coordinates.
    """
    nv_old = mesh.num_vertices
    if strategy == "bisect2":
        memo = {}
        verts, tris, ref = _bisect_round(mesh.vertices, mesh.triangles,
                                         mesh.tri_refedge, memo)
        verts, tris, ref = _bisect_round(verts, tris, ref, memo)
        def midpoint_of(va, vb):
            return memo[(min(va, vb), max(va, vb))]
    elif strategy == "red":
        edge_mid = nv_old + np.arange(mesh.num_edges)
        verts = np.vstack([mesh.vertices,
                           0.5 * (mesh.vertices[mesh.edges[:, 0]]
                                  + mesh.vertices[mesh.edges[:, 1]])])
        t = mesh.triangles
        m = edge_mid[mesh.tri_edges]
        tris = np.empty((4 * mesh.num_triangles, 3), dtype=np.int64)
        tris[0::4] = np.column_stack([t[:, 0], m[:, 2], m[:, 1]])
        tris[1::4] = np.column_stack([t[:, 1], m[:, 0], m[:, 2]])
        tris[2::4] = np.column_stack([t[:, 2], m[:, 1], m[:, 0]])
        tris[3::4] = m
        ref = None
        pair_to_mid = {}
        for e, (va, vb) in enumerate(mesh.edges):
            pair_to_mid[(int(va), int(vb))] = int(edge_mid[e])
        def midpoint_of(va, vb):
            return pair_to_mid[(min(va, vb), max(va, vb))]
    else:
        raise ValueError(f"unknown refinement strategy {strategy!r}")

    slit_pairs = []
    slit_verts = list(mesh.slit_vertices)
    for e in mesh.slit_edges:
        va, vb = (int(v) for v in mesh.edges[e])
        m = midpoint_of(va, vb)
        slit_pairs += [(va, m), (m, vb)]
        slit_verts.append(m)

    return from_arrays(verts, tris, domain=mesh.domain, level=mesh.level + 1,
                       slit_edge_pairs=slit_pairs, slit_vertices=slit_verts,
                       tri_refedge=ref)


def mesh_hierarchy(domain, levels, strategy="bisect2"):
    """Initial mesh plus `levels` uniform refinements, as a list."""
    meshes = [build_initial_mesh(domain)]
    for _ in range(levels):
        meshes.append(refine_uniform(meshes[-1], strategy=strategy))
    return meshes
