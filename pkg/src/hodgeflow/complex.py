"""
Oriented 2-dimensional simplicial complexes.

Every simplex is stored with its vertices in ascending order, and that order
*is* its orientation: edge ``(i, j)`` with ``i < j`` points from ``i`` (tail)
to ``j`` (tip), triangle ``(a, b, c)`` circulates ``a -> b -> c``.  Edges and
triangles are kept sorted lexicographically, so column ``k`` of every boundary
matrix and row ``k`` of every edge signal refer to the same simplex no matter
how the complex was built.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError

Edge = tuple[int, int]
Triangle = tuple[int, int, int]


@dataclass(frozen=True)
class OrientedComplex2:
    """Canonical oriented complex of order at most 2.

    Build instances with :func:`build_from_edges`, :func:`clique_complex` or
    :meth:`from_simplices`; the raw constructor trusts its arguments.
    """

    n_vertices: int
    edges: tuple[Edge, ...]
    triangles: tuple[Triangle, ...] = ()
    labels: tuple[str, ...] | None = None
    edge_index: dict[Edge, int] = field(init=False, repr=False, compare=False)
    tri_index: dict[Triangle, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "edge_index", {e: k for k, e in enumerate(self.edges)})
        object.__setattr__(self, "tri_index", {t: k for k, t in enumerate(self.triangles)})

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def vertex_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(str(v) for v in range(self.n_vertices))

    def edge_labels(self) -> list[str]:
        """``tail-tip`` labels in edge order, using vertex indices."""
        return [f"{i}-{j}" for i, j in self.edges]

    @classmethod
    def from_simplices(
        cls,
        n_vertices: int,
        edges: Iterable[Sequence[int]],
        triangles: Iterable[Sequence[int]] = (),
        labels: Sequence[str] | None = None,
    ) -> "OrientedComplex2":
        """Canonicalize and validate an explicit list of edges and triangles."""
        base = build_from_edges(n_vertices, edges, labels=labels)
        tris = set()
        for raw in triangles:
            tri = tuple(int(v) for v in raw)
            if len(tri) != 3 or len(set(tri)) != 3:
                raise ValidationError(f"invalid 2-simplex {raw!r}")
            canon = tuple(sorted(tri))
            if canon in tris:
                raise ValidationError(f"duplicate 2-simplex {canon}")
            tris.add(canon)
        c = cls(base.n_vertices, base.edges, tuple(sorted(tris)), base.labels)
        check_closure(c)
        return c

    def to_dict(self) -> dict:
        out = {
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
            "triangles": [list(t) for t in self.triangles],
        }
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "OrientedComplex2":
        try:
            return cls.from_simplices(
                int(data["n_vertices"]),
                data.get("edges", []),
                data.get("triangles", []),
                labels=data.get("labels"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed complex record: {exc}") from exc


def build_from_edges(
    n_vertices: int,
    edge_list: Iterable[Sequence[int]],
    labels: Sequence[str] | None = None,
) -> OrientedComplex2:
    """Graph (order-1 complex) from an undirected edge list.

    Each pair is reoriented tail < tip; duplicates are dropped silently.

    >>> build_from_edges(3, [(0, 1), (2, 1), (0, 2)]).edges
    ((0, 1), (0, 2), (1, 2))
    """
    n_vertices = int(n_vertices)
    if n_vertices < 0:
        raise ValidationError("n_vertices must be non-negative")
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != n_vertices:
            raise ValidationError(
                f"got {len(labels)} vertex labels for {n_vertices} vertices"
            )
    seen = set()
    for raw in edge_list:
        if len(raw) != 2:
            raise ValidationError(f"invalid 1-simplex {tuple(raw)!r}")
        i, j = int(raw[0]), int(raw[1])
        if i == j:
            raise ValidationError(f"invalid 1-simplex ({i}, {j}): self-loop")
        for v in (i, j):
            if not 0 <= v < n_vertices:
                raise ValidationError(
                    f"vertex {v} out of range for a complex with {n_vertices} vertices"
                )
        seen.add((min(i, j), max(i, j)))
    return OrientedComplex2(n_vertices, tuple(sorted(seen)), (), labels)


def clique_complex(c: OrientedComplex2) -> OrientedComplex2:
    """Fill every 3-clique of the 1-skeleton with a triangle."""
    nbrs: list[set[int]] = [set() for _ in range(c.n_vertices)]
    for i, j in c.edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    tris = []
    for a, b in c.edges:
        # a < b, so restricting the third vertex to > b lists each triangle once
        for k in nbrs[a] & nbrs[b]:
            if k > b:
                tris.append((a, b, k))
    return OrientedComplex2(c.n_vertices, c.edges, tuple(sorted(tris)), c.labels)


def check_closure(c: OrientedComplex2) -> None:
    """Raise if any triangle is unsorted or misses one of its boundary edges."""
    for t in c.triangles:
        a, b, cc = t
        if not a < b < cc:
            raise ValidationError(f"triangle {t} is not in ascending vertex order")
        for face in ((a, b), (a, cc), (b, cc)):
            if face not in c.edge_index:
                raise ValidationError(
                    f"closure violation: triangle {t} is missing boundary edge {face}"
                )


def validate_adjacency(w) -> np.ndarray:
    """Return ``w`` as a float array after checking the weighted-adjacency invariants."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValidationError(f"adjacency must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        bad = np.argwhere(~np.isfinite(w))[0]
        raise ValidationError(f"non-finite weight at row {bad[0]}, column {bad[1]}")
    if np.any(w < 0):
        bad = np.argwhere(w < 0)[0]
        raise ValidationError(f"negative weight at row {bad[0]}, column {bad[1]}")
    if np.any(np.diag(w) != 0):
        bad = int(np.flatnonzero(np.diag(w))[0])
        raise ValidationError(f"non-zero diagonal entry at row {bad}")
    if not np.allclose(w, w.T, rtol=1e-12, atol=0.0):
        bad = np.argwhere(~np.isclose(w, w.T, rtol=1e-12, atol=0.0))[0]
        raise ValidationError(
            f"adjacency is not symmetric at row {bad[0]}, column {bad[1]}"
        )
    return w


def threshold_binarize(w, percentile: float) -> list[Edge]:
    """Pairs ``i < j`` whose weight reaches ``percentile`` of the positive weights.

    The percentile is taken over the strictly positive upper-triangular entries
    (absent connections are not part of the distribution) and the cut is
    inclusive.  ``percentile=90`` keeps roughly the strongest 10%.
    """
    w = validate_adjacency(w)
    if not 0 <= percentile <= 100:
        raise ValidationError(f"percentile must lie in [0, 100], got {percentile}")
    iu, ju = np.triu_indices(w.shape[0], k=1)
    vals = w[iu, ju]
    pos = vals > 0
    if not pos.any():
        raise ValidationError("empty connectome: no positive off-diagonal weight")
    cut = np.percentile(vals[pos], percentile)
    keep = pos & (vals >= cut)
    return sorted(zip(iu[keep].tolist(), ju[keep].tolist()))


@dataclass(frozen=True)
class BoundaryPair:
    """Signed incidence matrices ``b1`` (N x E) and ``b2`` (E x T), integer CSR."""

    b1: sp.csr_matrix
    b2: sp.csr_matrix


def boundaries(c: OrientedComplex2) -> BoundaryPair:
    """Boundary matrices under the ascending-vertex orientation.

    An edge column is -1 at its tail and +1 at its tip.  Triangle ``[a, b, c]``
    has boundary ``[b, c] - [a, c] + [a, b]``, i.e. +1 on (a,b), -1 on (a,c)
    and +1 on (b,c).
    """
    check_closure(c)
    n, m, t = c.n_vertices, c.n_edges, c.n_triangles
    if m:
        e = np.asarray(c.edges, dtype=np.int64)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.tile(np.arange(m), 2)
        vals = np.concatenate([-np.ones(m, np.int64), np.ones(m, np.int64)])
    else:
        rows = cols = vals = np.zeros(0, np.int64)
    b1 = sp.csr_matrix((vals, (rows, cols)), shape=(n, m), dtype=np.int64)

    rows2, cols2, vals2 = [], [], []
    idx = c.edge_index
    for k, (a, b, cc) in enumerate(c.triangles):
        rows2 += [idx[(a, b)], idx[(a, cc)], idx[(b, cc)]]
        cols2 += [k, k, k]
        vals2 += [1, -1, 1]
    b2 = sp.csr_matrix(
        (np.asarray(vals2, np.int64), (np.asarray(rows2, np.int64), np.asarray(cols2, np.int64))),
        shape=(m, t),
        dtype=np.int64,
    )
    return BoundaryPair(b1, b2)


def line_graph(c: OrientedComplex2) -> np.ndarray:
    """E x E 0/1 adjacency of edges sharing a vertex (lower adjacency only)."""
    if c.n_edges == 0:
        raise ValidationError("line graph needs at least one edge")
    b1 = abs(boundaries(c).b1)
    a = (b1.T @ b1).toarray()
    np.fill_diagonal(a, 0)
    return (a > 0).astype(np.int64)


def n_components(c: OrientedComplex2) -> int:
    """Number of connected components, isolated vertices included."""
    if c.n_vertices == 0:
        return 0
    if c.n_edges == 0:
        return c.n_vertices
    e = np.asarray(c.edges)
    g = sp.coo_matrix(
        (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(c.n_vertices, c.n_vertices)
    )
    return int(connected_components(g, directed=False)[0])


def complete_graph(n: int) -> OrientedComplex2:
    return build_from_edges(n, itertools.combinations(range(n), 2))
