"""
Lead-lag edge signals derived from nodal time series.

Time indexing: node series have columns ``t = 0 .. L-1``.  Edge series
column ``k`` holds the value at ``t = k + 1``, i.e. it couples samples
``t - 1`` and ``t``::

    e_ij[t] = x_i[t-1] * x_j[t] - x_j[t-1] * x_i[t]

For an edge ``(i, j)`` with ``i < j`` a positive temporal mean says that
``i`` tends to lead ``j`` by one sample.  When several runs are concatenated,
``junctions`` lists the indices where a new run starts and the edge samples
straddling those boundaries are dropped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .complex import OrientedComplex2
from .errors import ValidationError


@dataclass(frozen=True)
class NodeTimeSeries:
    """N x L samples (row = node) with optional labels and run boundaries."""

    data: np.ndarray
    labels: tuple[str, ...] | None = None
    sample_period: float | None = None
    junctions: tuple[int, ...] = ()

    @property
    def n_nodes(self) -> int:
        return self.data.shape[0]

    @property
    def length(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LeadLagStats:
    r_plus: np.ndarray
    r_minus: np.ndarray
    mean_edge: np.ndarray


def zscore(x, warn: bool = True) -> np.ndarray:
    """Per-row z-score with population variance; constant rows become zeros."""
    x = np.asarray(x, dtype=float)
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    flat = sd[:, 0] == 0
    if flat.any() and warn:
        warnings.warn(
            f"degenerate input: {int(flat.sum())} constant node series set to zero",
            RuntimeWarning,
            stacklevel=2,
        )
    sd[flat] = 1.0
    return (x - mu) / sd


def concatenate_runs(runs: Sequence, standardize: bool = True, warn: bool = True) -> NodeTimeSeries:
    """Join runs along time (z-scoring each first) and record the run boundaries."""
    arrays = [np.asarray(r, dtype=float) for r in runs]
    if not arrays:
        raise ValidationError("no runs to concatenate")
    n = arrays[0].shape[0]
    for k, a in enumerate(arrays):
        if a.ndim != 2 or a.shape[0] != n:
            raise ValidationError(f"run {k} has shape {a.shape}, expected {n} rows")
    if standardize:
        arrays = [zscore(a, warn=warn) for a in arrays]
    starts = np.cumsum([a.shape[1] for a in arrays])[:-1]
    return NodeTimeSeries(np.hstack(arrays), junctions=tuple(int(s) for s in starts))


def looks_zscored(x, tol: float = 1e-6) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(
        np.all(np.abs(x.mean(axis=1)) <= tol) and np.all(np.abs(x.std(axis=1) - 1) <= tol)
    )


def _series(x) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(x, NodeTimeSeries):
        return np.asarray(x.data, dtype=float), x.junctions
    return np.asarray(x, dtype=float), ()


def _keep_mask(length: int, junctions: Sequence[int]) -> np.ndarray:
    keep = np.ones(length - 1, dtype=bool)
    for j in junctions:
        if 1 <= j <= length - 1:
            keep[j - 1] = False
    return keep


def _edge_arrays(c: OrientedComplex2) -> tuple[np.ndarray, np.ndarray]:
    if c.n_edges == 0:
        return np.zeros(0, int), np.zeros(0, int)
    e = np.asarray(c.edges)
    return e[:, 0], e[:, 1]


def _validate(x: np.ndarray, c: OrientedComplex2, min_len: int) -> None:
    if x.ndim != 2:
        raise ValidationError(f"node time series must be 2-D, got shape {x.shape}")
    if x.shape[1] < min_len:
        raise ValidationError(
            "need at least two time points" if min_len == 2 else f"need at least {min_len} time points"
        )
    if x.shape[0] != c.n_vertices:
        raise ValidationError(
            f"time series has {x.shape[0]} nodes but the complex has {c.n_vertices}"
        )


def edge_signal(x, c: OrientedComplex2, junctions: Sequence[int] | None = None) -> np.ndarray:
    """E x (L-1) lead-lag series (fewer columns if junction samples are dropped)."""
    data, own = _series(x)
    _validate(data, c, 2)
    junctions = own if junctions is None else junctions
    i, j = _edge_arrays(c)
    prev, cur = data[:, :-1], data[:, 1:]
    e = prev[i] * cur[j] - prev[j] * cur[i]
    return e[:, _keep_mask(data.shape[1], junctions)]


def pair_signal(xi, xj) -> np.ndarray:
    """Lead-lag series for a single pair of node series."""
    xi, xj = np.asarray(xi, dtype=float), np.asarray(xj, dtype=float)
    if xi.shape != xj.shape or xi.ndim != 1:
        raise ValidationError("pair_signal needs two 1-D series of equal length")
    if xi.size < 2:
        raise ValidationError("need at least two time points")
    return xi[:-1] * xj[1:] - xj[:-1] * xi[1:]


def lag_form(xi, xj) -> np.ndarray:
    """Same signal written with increments: ``x_i[t-1] dx_j[t] - x_j[t-1] dx_i[t]``."""
    xi, xj = np.asarray(xi, dtype=float), np.asarray(xj, dtype=float)
    if xi.shape != xj.shape or xi.ndim != 1:
        raise ValidationError("lag_form needs two 1-D series of equal length")
    if xi.size < 2:
        raise ValidationError("need at least two time points")
    return xi[:-1] * np.diff(xj) - xj[:-1] * np.diff(xi)


def temporal_stats(e, x, c: OrientedComplex2, junctions: Sequence[int] | None = None) -> LeadLagStats:
    """Lag +1 and lag -1 cross-correlation estimates and the mean edge signal.

    Both correlations are normalized by the number of edge samples (``L - 1``
    for a single run), so ``mean_edge = r_plus - r_minus`` up to rounding.
    """
    data, own = _series(x)
    _validate(data, c, 2)
    junctions = own if junctions is None else junctions
    e = np.asarray(e, dtype=float)
    keep = _keep_mask(data.shape[1], junctions)
    if e.shape != (c.n_edges, int(keep.sum())):
        raise ValidationError(
            f"edge series has shape {e.shape}, expected {(c.n_edges, int(keep.sum()))}"
        )
    i, j = _edge_arrays(c)
    prev, cur = data[:, :-1][:, keep], data[:, 1:][:, keep]
    n = keep.sum()
    r_plus = np.sum(prev[i] * cur[j], axis=1) / n
    r_minus = np.sum(prev[j] * cur[i], axis=1) / n
    return LeadLagStats(r_plus, r_minus, e.sum(axis=1) / n)


def _det3(cols: Sequence[np.ndarray]) -> np.ndarray:
    # rows: samples t-2, t-1, t of each column series
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = (
        (v[:-2], v[1:-1], v[2:]) for v in cols
    )
    return a0 * (b1 * c2 - b2 * c1) - b0 * (a1 * c2 - a2 * c1) + c0 * (a1 * b2 - a2 * b1)


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for k in range(len(perm)):
        while perm[k] != k:
            m = perm[k]
            perm[k], perm[m] = perm[m], perm[k]
            sign = -sign
    return sign


def triple_signal(xi, xj, xk) -> np.ndarray:
    """3 x 3 determinant series for one ordered triple of node series.

    The columns are put in a canonical order (by their byte content) before
    the determinant is evaluated, and the sign of that reordering is applied
    afterwards, so permuting the arguments changes the result by exactly the
    permutation sign, bit for bit.
    """
    cols = [np.ascontiguousarray(v, dtype=float) for v in (xi, xj, xk)]
    if any(v.ndim != 1 or v.shape != cols[0].shape for v in cols):
        raise ValidationError("triple_signal needs three 1-D series of equal length")
    if cols[0].size < 3:
        raise ValidationError("need at least three time points")
    order = sorted(range(3), key=lambda k: cols[k].tobytes())
    if any(np.array_equal(cols[order[k]], cols[order[k + 1]]) for k in range(2)):
        return np.zeros(cols[0].size - 2)
    return _parity(order) * _det3([cols[k] for k in order])


def triangle_signal(x, c: OrientedComplex2) -> np.ndarray:
    """T x (L-2) oriented-volume series for the triangles of ``c``."""
    data, _ = _series(x)
    _validate(data, c, 3)
    if c.n_triangles == 0:
        raise ValidationError("complex has no triangles")
    return np.vstack([triple_signal(data[a], data[b], data[k]) for a, b, k in c.triangles])


def leadlag_matrix(x) -> np.ndarray:
    """N x N skew-symmetric matrix, half the mean lead-lag signal of every pair."""
    data, _ = _series(x)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValidationError("need at least two time points")
    prev = data[:, :-1]
    p = prev @ np.diff(data, axis=1).T / (data.shape[1] - 1)
    upper = np.triu(0.5 * (p - p.T), k=1)
    return upper - upper.T
