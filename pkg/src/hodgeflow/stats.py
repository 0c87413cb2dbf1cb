"""
Group-level aggregation and sign-flip permutation testing across subjects.

Random sign flips are drawn in fixed-size blocks of permutations, each block
with its own generator spawned from the master seed.  Workers process whole
blocks, so results do not depend on the number of workers.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .complex import OrientedComplex2
from .errors import ValidationError

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence.spawn, blocks of 1000 permutations"
BLOCK_SIZE = 1000
MIN_PERMUTATIONS = 1000
MAX_EXACT_SUBJECTS = 16


@dataclass(frozen=True)
class GroupAssignment:
    """Group label per node plus the order that ranks the groups."""

    groups: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.groups)) != len(self.groups):
            raise ValidationError("group order contains duplicate labels")
        unknown = sorted(set(self.labels) - set(self.groups))
        if unknown:
            raise ValidationError(f"nodes assigned to unlisted groups: {unknown}")

    @property
    def rank(self) -> dict[str, int]:
        return {g: k for k, g in enumerate(self.groups)}

    def node_ranks(self) -> np.ndarray:
        r = self.rank
        return np.array([r[g] for g in self.labels], dtype=int)

    @classmethod
    def from_dict(cls, data: dict, node_labels: Sequence[str]) -> "GroupAssignment":
        try:
            groups = tuple(str(g) for g in data["groups"])
            assign = {str(k): str(v) for k, v in data["assignment"].items()}
        except (KeyError, AttributeError, TypeError) as exc:
            raise ValidationError(f"malformed group assignment: {exc}") from exc
        missing = [lab for lab in node_labels if lab not in assign]
        if missing:
            raise ValidationError(f"no group for nodes {missing[:5]}{'...' if len(missing) > 5 else ''}")
        return cls(groups, tuple(assign[lab] for lab in node_labels))

    @classmethod
    def load(cls, path, node_labels: Sequence[str]) -> "GroupAssignment":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data, node_labels)


@dataclass(frozen=True)
class SignFlipResult:
    observed_mean: np.ndarray
    p_value: np.ndarray
    z_score: np.ndarray
    survives: np.ndarray
    n_permutations: int
    seed: int | None
    alpha: float
    exact: bool = False
    rng: str = RNG_ALGORITHM


def _panel(values) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValidationError(f"panel must be subjects x items, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("panel contains missing or non-finite entries")
    if x.shape[0] < 2:
        raise ValidationError(f"sign-flip test needs at least 2 subjects, got {x.shape[0]}")
    return x


def _block_stats(panel, obs_abs, tol, seed_seq, n):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    signs = rng.integers(0, 2, size=(n, panel.shape[0]), dtype=np.int8) * 2 - 1
    null = signs.astype(float) @ panel / panel.shape[0]
    return (
        np.sum(np.abs(null) >= obs_abs - tol, axis=0),
        null.sum(axis=0),
        np.sum(null**2, axis=0),
    )


def _finish(obs, total, sq_total, n_null, p, alpha) -> tuple:
    mu = total / n_null
    var = np.maximum(sq_total / n_null - mu**2, 0.0)
    sd = np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, (obs - mu) / sd, 0.0)
    survives = p <= alpha / obs.size
    return z, survives


def _tolerance(panel: np.ndarray) -> np.ndarray:
    # ties between |null mean| and |observed mean| up to rounding
    return 1e-10 * np.max(np.abs(panel), axis=0)


def sign_flip_test(
    panel,
    n_perm: int = 20000,
    alpha: float = 0.05,
    seed: int | None = 0,
    n_workers: int = 1,
) -> SignFlipResult:
    """Two-sided sign-flip test of zero mean for every column of ``panel``.

    Each permutation negates every subject independently with probability
    1/2.  ``p = (1 + #{|null| >= |observed|}) / (1 + n_perm)`` and an item
    survives when ``p <= alpha / n_items`` (Bonferroni).
    """
    x = _panel(panel)
    if n_perm < MIN_PERMUTATIONS:
        raise ValidationError(f"n_perm must be at least {MIN_PERMUTATIONS}, got {n_perm}")
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    obs = np.ones(x.shape[0]) @ x / x.shape[0]
    tol = _tolerance(x)
    sizes = [BLOCK_SIZE] * (n_perm // BLOCK_SIZE)
    if n_perm % BLOCK_SIZE:
        sizes.append(n_perm % BLOCK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(x, np.abs(obs), tol, ss, n) for ss, n in zip(children, sizes)]
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda a: _block_stats(*a), jobs))
    else:
        parts = [_block_stats(*a) for a in jobs]
    count = sum(p[0] for p in parts)
    total = sum(p[1] for p in parts)
    sq_total = sum(p[2] for p in parts)
    p = (1.0 + count) / (1.0 + n_perm)
    z, survives = _finish(obs, total, sq_total, n_perm, p, alpha)
    return SignFlipResult(obs, p, z, survives, n_perm, seed, alpha)


def sign_flip_exact(panel, alpha: float = 0.05) -> SignFlipResult:
    """Exhaustive version over all ``2**S`` sign patterns (identity included)."""
    x = _panel(panel)
    s = x.shape[0]
    if s > MAX_EXACT_SUBJECTS:
        raise ValidationError(f"exact enumeration supports at most {MAX_EXACT_SUBJECTS} subjects")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=s)))
    null = signs @ x / s
    obs = np.ones(s) @ x / s
    count = np.sum(np.abs(null) >= np.abs(obs) - _tolerance(x), axis=0)
    p = count / len(signs)
    z, survives = _finish(obs, null.sum(0), np.sum(null**2, 0), len(signs), p, alpha)
    return SignFlipResult(obs, p, z, survives, len(signs), None, alpha, exact=True, rng="exhaustive")


@dataclass(frozen=True)
class GroupSummary:
    groups: tuple[str, ...]
    per_subject: np.ndarray  # S x G
    mean: np.ndarray
    stderr: np.ndarray


def _stderr(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.full(x.shape[1:], np.nan)
    return np.nanstd(x, axis=0, ddof=1) / np.sqrt(np.sum(~np.isnan(x), axis=0))


def aggregate_nodes_by_group(node_values, g: GroupAssignment) -> GroupSummary:
    """Per-subject group means of a node panel, then mean and s.e. across subjects."""
    x = np.asarray(node_values, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != len(g.labels):
        raise ValidationError(f"panel has {x.shape[1]} nodes, assignment has {len(g.labels)}")
    labels = np.asarray(g.labels)
    cols = []
    for grp in g.groups:
        members = labels == grp
        if not members.any():
            raise ValidationError(f"group {grp!r} has no member nodes")
        cols.append(x[:, members].mean(axis=1))
    per = np.column_stack(cols)
    return GroupSummary(g.groups, per, per.mean(axis=0), _stderr(per))


@dataclass(frozen=True)
class GroupPairTable:
    """Cells ``[a, b]`` with ``a <= b`` in group-rank order; other cells are NaN."""

    groups: tuple[str, ...]
    per_subject: np.ndarray  # S x G x G
    mean: np.ndarray
    counts: np.ndarray


def aggregate_edges_by_group_pair(edge_values, g: GroupAssignment, c: OrientedComplex2) -> GroupPairTable:
    """Mean edge signal per pair of groups, reoriented low rank -> high rank.

    An edge ``(i, j)`` whose tail lies in the higher-ranked group points
    against the group-level reference orientation and enters with its sign
    inverted.  Edges inside one group keep the ``i < j`` convention.
    """
    x = np.asarray(edge_values, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != c.n_edges:
        raise ValidationError(f"panel has {x.shape[1]} edges, complex has {c.n_edges}")
    if len(g.labels) != c.n_vertices:
        raise ValidationError("group assignment does not match the complex's vertices")
    ranks = g.node_ranks()
    n_g = len(g.groups)
    sums = np.zeros((x.shape[0], n_g, n_g))
    counts = np.zeros((n_g, n_g), dtype=int)
    for k, (i, j) in enumerate(c.edges):
        ri, rj = ranks[i], ranks[j]
        sign = -1.0 if ri > rj else 1.0
        a, b = min(ri, rj), max(ri, rj)
        sums[:, a, b] += sign * x[:, k]
        counts[a, b] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        per = np.where(counts > 0, sums / counts, np.nan)
    mean = per.mean(axis=0) if x.shape[0] else per
    return GroupPairTable(g.groups, per, mean, counts)


def permutation_parity(seq: Sequence) -> int:
    """+1 if sorting ``seq`` takes an even number of transpositions, else -1."""
    seq = list(seq)
    inversions = sum(1 for a, b in itertools.combinations(range(len(seq)), 2) if seq[a] > seq[b])
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class TripletTable:
    triplets: tuple[tuple[str, str, str], ...]
    per_subject: np.ndarray  # S x K
    mean: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    degenerate_per_subject: np.ndarray  # S, NaN when no degenerate triangle
    degenerate_count: int


def aggregate_curl_by_triplet(curl_values, g: GroupAssignment, c: OrientedComplex2) -> TripletTable:
    """Mean curl per triplet of distinct groups, oriented by ascending group rank.

    A triangle's stored orientation follows its vertex indices; its group
    ranks read in that order form a permutation of the ascending rank order,
    and odd permutations contribute with inverted sign.  Triangles touching a
    group more than once are pooled, unsigned, in a separate degenerate bucket.
    """
    x = np.asarray(curl_values, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != c.n_triangles:
        raise ValidationError(f"panel has {x.shape[1]} triangles, complex has {c.n_triangles}")
    if len(g.labels) != c.n_vertices:
        raise ValidationError("group assignment does not match the complex's vertices")
    ranks = g.node_ranks()
    sums: dict[tuple[int, int, int], np.ndarray] = {}
    counts: dict[tuple[int, int, int], int] = {}
    degen = np.zeros(x.shape[0])
    n_degen = 0
    for k, tri in enumerate(c.triangles):
        r = tuple(int(ranks[v]) for v in tri)
        if len(set(r)) < 3:
            degen += x[:, k]
            n_degen += 1
            continue
        key = tuple(sorted(r))
        sums[key] = sums.get(key, 0.0) + permutation_parity(r) * x[:, k]
        counts[key] = counts.get(key, 0) + 1
    keys = sorted(sums)
    if keys:
        per = np.column_stack([sums[kk] / counts[kk] for kk in keys])
    else:
        per = np.zeros((x.shape[0], 0))
    names = tuple(tuple(g.groups[r] for r in kk) for kk in keys)
    deg = degen / n_degen if n_degen else np.full(x.shape[0], np.nan)
    return TripletTable(
        names,
        per,
        per.mean(axis=0),
        _stderr(per),
        np.array([counts[kk] for kk in keys], dtype=int),
        deg,
        n_degen,
    )
