"""Vietoris-Rips persistence up to homology degree 2.

Filtration convention: a simplex enters at its *diameter*, the largest pairwise
distance among its vertices, so an edge appears at scale equal to its length.
(Beware: some tools use the radius convention instead, which differs by a
factor of 2 in every birth/death value.)

Degree 0 never builds a complex: the finite death times are exactly the edge
weights of a Euclidean minimum spanning tree, so a single union-find sweep over
the sorted edge list produces them in O(n^2 log n). Degrees 1 and 2 run the
standard boundary-matrix reduction over Z/2, one dimension at a time.

Features still alive at the top of the filtration are *clipped*: they are
emitted with death = maxscale and ``clipped=True``. Exactly one degree-0
feature is kept with death = +inf.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import InvalidParameterError, ResourceLimitError
from .geometry import PointCloud

__all__ = [
    "DistanceMatrix",
    "PersistencePair",
    "PersistenceDiagram",
    "pairwise_distances",
    "h0_persistence",
    "rips_persistence",
    "optimal_maxscale",
    "diagram_from_deaths",
    "write_diagram",
    "read_diagram",
    "DEFAULT_SIMPLEX_CAP",
]

DEFAULT_SIMPLEX_CAP = 50_000_000


@dataclass
class DistanceMatrix:
    """Symmetric nonnegative distances with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise InvalidParameterError("distance matrix must be square")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass
class PersistencePair:
    dim: int
    birth: float
    death: float  # math.inf for the essential component
    clipped: bool = False

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


@dataclass
class PersistenceDiagram:
    pairs: list[PersistencePair] = field(default_factory=list)
    maxscale: float = math.inf
    n_points: int = 0

    def in_dim(self, dim: int) -> list[PersistencePair]:
        return [p for p in self.pairs if p.dim == dim]


def pairwise_distances(cloud) -> DistanceMatrix:
    """Euclidean distance matrix; symmetric by construction (condensed + mirror)."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, float)
    if pts.shape[0] == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(pts)))


def _sorted_edges(d: DistanceMatrix, cutoff: float):
    """Edges (i < j) with weight <= cutoff, stably sorted by (weight, i, j)."""
    n = d.n
    iu, ju = np.triu_indices(n, k=1)
    w = d.values[iu, ju]
    keep = w <= cutoff
    iu, ju, w = iu[keep], ju[keep], w[keep]
    order = np.argsort(w, kind="stable")  # triu_indices is already (i, j)-lex
    return iu[order], ju[order], w[order]


def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:  # path compression
        parent[x], x = root, parent[x]
    return root


def _union_find_sweep(n, ei, ej, w, early_stop=True):
    """Kruskal sweep; returns (merge death values, per-edge cycle flag).

    The cycle flag marks edges that close a loop instead of merging two
    components (these are the degree-1 creators). With ``early_stop`` the scan
    ends once n-1 merges happened and the flag array is only valid up to there.
    """
    parent = list(range(n))
    deaths = []
    creates_cycle = np.zeros(len(w), dtype=bool)
    merges = 0
    ei_l, ej_l, w_l = ei.tolist(), ej.tolist(), w.tolist()
    for idx in range(len(w_l)):
        ra = _find(parent, ei_l[idx])
        rb = _find(parent, ej_l[idx])
        if ra == rb:
            creates_cycle[idx] = True
        else:
            parent[rb] = ra
            deaths.append(w_l[idx])
            merges += 1
            if early_stop and merges == n - 1:
                break
    return deaths, creates_cycle


def _h0_pairs(n, maxscale, deaths):
    pairs = [PersistencePair(0, 0.0, dv) for dv in deaths]
    unmerged = n - 1 - len(deaths)
    pairs.extend(
        PersistencePair(0, 0.0, float(maxscale), clipped=True) for _ in range(unmerged)
    )
    pairs.append(PersistencePair(0, 0.0, math.inf))
    return pairs


def h0_persistence(d: DistanceMatrix, maxscale: float) -> PersistenceDiagram:
    """Degree-0 persistence: one pair per point, births all zero.

    Finite deaths are the MST edge weights <= maxscale; components that never
    merge are clipped at maxscale, except one which is kept at +inf.
    """
    if not maxscale > 0:
        raise InvalidParameterError(f"maxscale must be > 0, got {maxscale!r}")
    n = d.n
    ei, ej, w = _sorted_edges(d, maxscale)
    deaths, _ = _union_find_sweep(n, ei, ej, w)
    return PersistenceDiagram(_h0_pairs(n, maxscale, deaths), float(maxscale), n)


def _neighbor_mask(d, maxscale):
    adj = d.values <= maxscale
    np.fill_diagonal(adj, False)
    return adj


def _enumerate_triangles(d, adj, ei, ej, cap, running):
    """Triangles i<j<k with diameter <= maxscale, from each edge's common neighbors."""
    dm = d.values
    tri_i, tri_j, tri_k, tri_v = [], [], [], []
    count = running
    for e in range(len(ei)):
        i, j = int(ei[e]), int(ej[e])
        ks = np.nonzero(adj[i] & adj[j])[0]
        ks = ks[ks > j]
        if ks.size == 0:
            continue
        count += ks.size
        if count > cap:
            raise ResourceLimitError(
                f"simplex budget exceeded ({count} > {cap}); raise simplex_cap or lower maxscale"
            )
        vals = np.maximum(dm[i, j], np.maximum(dm[i, ks], dm[j, ks]))
        tri_i.append(np.full(ks.size, i, dtype=np.int64))
        tri_j.append(np.full(ks.size, j, dtype=np.int64))
        tri_k.append(ks.astype(np.int64))
        tri_v.append(vals)
    if not tri_i:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty, np.empty(0), count
    ti = np.concatenate(tri_i)
    tj = np.concatenate(tri_j)
    tk = np.concatenate(tri_k)
    tv = np.concatenate(tri_v)
    order = np.lexsort((tk, tj, ti, tv))
    return ti[order], tj[order], tk[order], tv[order], count


def _enumerate_tetrahedra(d, adj, ti, tj, tk, cap, running):
    dm = d.values
    te = [[], [], [], [], []]
    count = running
    for t in range(len(ti)):
        i, j, k = int(ti[t]), int(tj[t]), int(tk[t])
        ls = np.nonzero(adj[i] & adj[j] & adj[k])[0]
        ls = ls[ls > k]
        if ls.size == 0:
            continue
        count += ls.size
        if count > cap:
            raise ResourceLimitError(
                f"simplex budget exceeded ({count} > {cap}); raise simplex_cap or lower maxscale"
            )
        base = max(dm[i, j], dm[i, k], dm[j, k])
        vals = np.maximum(base, np.maximum(dm[i, ls], np.maximum(dm[j, ls], dm[k, ls])))
        te[0].append(np.full(ls.size, i, dtype=np.int64))
        te[1].append(np.full(ls.size, j, dtype=np.int64))
        te[2].append(np.full(ls.size, k, dtype=np.int64))
        te[3].append(ls.astype(np.int64))
        te[4].append(vals)
    if not te[0]:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, empty, empty, np.empty(0), count
    qi, qj, qk, ql = (np.concatenate(te[m]) for m in range(4))
    qv = np.concatenate(te[4])
    order = np.lexsort((ql, qk, qj, qi, qv))
    return qi[order], qj[order], qk[order], ql[order], qv[order], count


def _reduce_columns(columns):
    """Left-to-right Z/2 column reduction; columns are sets of face indices.

    Returns (pairs, zero_cols): pairs is a list of (pivot face, column) index
    tuples and zero_cols lists columns that reduced to zero (creators in the
    column dimension).
    """
    pivot_owner = {}
    reduced = columns
    pairs = []
    zero_cols = []
    for c in range(len(reduced)):
        col = reduced[c]
        while col:
            low = max(col)
            owner = pivot_owner.get(low)
            if owner is None:
                break
            col ^= reduced[owner]
        if col:
            low = max(col)
            pivot_owner[low] = c
            pairs.append((low, c))
        else:
            zero_cols.append(c)
    return pairs, zero_cols


def rips_persistence(
    d: DistanceMatrix,
    maxscale: float,
    maxdim: int = 0,
    simplex_cap: int = DEFAULT_SIMPLEX_CAP,
) -> PersistenceDiagram:
    """Full Rips persistence up to homology degree ``maxdim`` (0, 1 or 2).

    Degree 0 output is identical to :func:`h0_persistence`. Higher degrees pair
    creators and killers via boundary reduction over Z/2; zero-lifetime pairs in
    degrees >= 1 are dropped. Enumerated simplex counts beyond ``simplex_cap``
    abort with a resource-limit error rather than truncating.
    """
    if not maxscale > 0:
        raise InvalidParameterError(f"maxscale must be > 0, got {maxscale!r}")
    if maxdim not in (0, 1, 2):
        raise InvalidParameterError(f"maxdim must be 0, 1 or 2, got {maxdim!r}")
    n = d.n
    ei, ej, w = _sorted_edges(d, maxscale)
    running = n + len(w)
    if running > simplex_cap:
        raise ResourceLimitError(
            f"simplex budget exceeded ({running} > {simplex_cap})"
        )
    deaths, creates_cycle = _union_find_sweep(n, ei, ej, w, early_stop=(maxdim == 0))
    pairs = _h0_pairs(n, maxscale, deaths)
    diagram = PersistenceDiagram(pairs, float(maxscale), n)
    if maxdim == 0:
        return diagram

    adj = _neighbor_mask(d, maxscale)
    ti, tj, tk, tv, running = _enumerate_triangles(d, adj, ei, ej, simplex_cap, running)

    edge_index = {}
    ei_l, ej_l = ei.tolist(), ej.tolist()
    for idx in range(len(ei_l)):
        edge_index[(ei_l[idx], ej_l[idx])] = idx

    tri_cols = []
    ti_l, tj_l, tk_l = ti.tolist(), tj.tolist(), tk.tolist()
    for t in range(len(ti_l)):
        i, j, k = ti_l[t], tj_l[t], tk_l[t]
        tri_cols.append({edge_index[(i, j)], edge_index[(i, k)], edge_index[(j, k)]})
    h1_pairs, zero_tris = _reduce_columns(tri_cols)

    w_l = w.tolist()
    tv_l = tv.tolist()
    killed_edges = set()
    for edge_idx, tri_idx in h1_pairs:
        killed_edges.add(edge_idx)
        birth, death = w_l[edge_idx], tv_l[tri_idx]
        if death > birth:
            diagram.pairs.append(PersistencePair(1, birth, death))
    for edge_idx in np.nonzero(creates_cycle)[0].tolist():
        if edge_idx in killed_edges:
            continue
        birth = w_l[edge_idx]
        if birth < maxscale:
            diagram.pairs.append(PersistencePair(1, birth, float(maxscale), clipped=True))

    if maxdim == 2:
        qi, qj, qk, ql, qv, running = _enumerate_tetrahedra(
            d, adj, ti, tj, tk, simplex_cap, running
        )
        tri_index = {}
        for t in range(len(ti_l)):
            tri_index[(ti_l[t], tj_l[t], tk_l[t])] = t
        tet_cols = []
        qi_l, qj_l, qk_l, ql_l = qi.tolist(), qj.tolist(), qk.tolist(), ql.tolist()
        for q in range(len(qi_l)):
            i, j, k, l = qi_l[q], qj_l[q], qk_l[q], ql_l[q]
            tet_cols.append(
                {
                    tri_index[(i, j, k)],
                    tri_index[(i, j, l)],
                    tri_index[(i, k, l)],
                    tri_index[(j, k, l)],
                }
            )
        h2_pairs, _ = _reduce_columns(tet_cols)
        qv_l = qv.tolist()
        killed_tris = set()
        positive_tris = set(zero_tris)
        for tri_idx, tet_idx in h2_pairs:
            killed_tris.add(tri_idx)
            birth, death = tv_l[tri_idx], qv_l[tet_idx]
            if death > birth:
                diagram.pairs.append(PersistencePair(2, birth, death))
        for tri_idx in sorted(positive_tris - killed_tris):
            birth = tv_l[tri_idx]
            if birth < maxscale:
                diagram.pairs.append(
                    PersistencePair(2, birth, float(maxscale), clipped=True)
                )
    return diagram


def optimal_maxscale(d: DistanceMatrix, initial: float = 0.05, growth: float = 2.0) -> float:
    """Smallest scale on the grid initial * growth^k past which H0 stops changing.

    A scale m is large enough once the largest finite death at m is strictly
    below m, i.e. once m exceeds the largest MST edge; any scale at or above the
    returned value yields the same degree-0 diagram.
    """
    if not initial > 0:
        raise InvalidParameterError(f"initial must be > 0, got {initial!r}")
    if not growth > 1:
        raise InvalidParameterError(f"growth must be > 1, got {growth!r}")
    n = d.n
    if n == 1:
        return float(initial)
    ei, ej, w = _sorted_edges(d, math.inf)
    deaths, _ = _union_find_sweep(n, ei, ej, w)
    mst_max = max(deaths)
    scale = float(initial)
    while not mst_max < scale:
        scale *= growth
    return scale


def diagram_from_deaths(deaths, maxscale: float, dim: int = 0) -> PersistenceDiagram:
    """Diagram with the given finite death list (births 0) plus one infinite pair."""
    pairs = [PersistencePair(dim, 0.0, float(dv)) for dv in deaths]
    pairs.append(PersistencePair(dim, 0.0, math.inf))
    return PersistenceDiagram(pairs, float(maxscale), len(pairs))


def write_diagram(diagram: PersistenceDiagram, csv_path, meta_path=None) -> None:
    """CSV columns (dim, birth, death, clipped), death 'inf' for the essential pair."""
    csv_path = str(csv_path)
    if meta_path is None:
        meta_path = csv_path.rsplit(".", 1)[0] + ".meta.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dim", "birth", "death", "clipped"])
        for p in diagram.pairs:
            death = "inf" if math.isinf(p.death) else repr(p.death)
            writer.writerow([p.dim, repr(p.birth), death, int(p.clipped)])
    with open(meta_path, "w") as fh:
        json.dump(
            {"maxscale": diagram.maxscale, "n_points": diagram.n_points},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")


def read_diagram(csv_path, meta_path=None) -> PersistenceDiagram:
    csv_path = str(csv_path)
    if meta_path is None:
        meta_path = csv_path.rsplit(".", 1)[0] + ".meta.json"
    pairs = []
    with open(csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            death = math.inf if row["death"] == "inf" else float(row["death"])
            pairs.append(
                PersistencePair(
                    int(row["dim"]), float(row["birth"]), death, bool(int(row["clipped"]))
                )
            )
    with open(meta_path) as fh:
        meta = json.load(fh)
    return PersistenceDiagram(pairs, float(meta["maxscale"]), int(meta["n_points"]))
