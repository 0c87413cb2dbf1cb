"""Synthetic cohorts with planted one-sample lead-lag couplings."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io


@dataclass(frozen=True)
class Cohort:
    adjacency: np.ndarray
    series: tuple[np.ndarray, ...]  # one N x L array per subject
    planted: tuple[tuple[int, int], ...]  # (leader, follower)


def planted_cohort(
    n_nodes: int = 20,
    n_subjects: int = 8,
    length: int = 500,
    n_planted: int = 5,
    coupling: float = 0.6,
    seed: int = 0,
) -> Cohort:
    """White-noise nodes where each follower copies its leader one sample late.

    ``follower[t] = c * leader[t-1] + sqrt(1 - c**2) * noise[t]``.  Leaders and
    followers are disjoint, and the planted pairs get the largest structural
    weights so thresholding at the 90th percentile keeps them.
    ``n_planted=0`` gives a pure white-noise cohort.
    """
    rng = np.random.default_rng(seed)
    if 2 * n_planted > n_nodes:
        raise ValueError("need two distinct nodes per planted coupling")
    w = rng.uniform(0.05, 1.0, size=(n_nodes, n_nodes))
    w = np.triu(w, 1)
    w = w + w.T
    nodes = rng.permutation(n_nodes)[: 2 * n_planted]
    planted = tuple((int(nodes[2 * k]), int(nodes[2 * k + 1])) for k in range(n_planted))
    for a, b in planted:
        w[a, b] = w[b, a] = 2.0
    series = []
    for _ in range(n_subjects):
        x = rng.standard_normal((n_nodes, length))
        for lead, follow in planted:
            x[follow, 1:] = coupling * x[lead, :-1] + np.sqrt(1 - coupling**2) * x[follow, 1:]
        series.append(x)
    return Cohort(w, tuple(series), planted)


def write_cohort(out_dir, cohort: Cohort, n_permutations: int = 20000, seed: int = 0) -> Path:
    """Write adjacency, per-subject series and a pipeline config; return the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_adjacency(out / "adjacency.csv", cohort.adjacency)
    paths = []
    for k, x in enumerate(cohort.series):
        p = out / f"subject_{k:02d}.csv"
        io.write_node_timeseries(p, x)
        paths.append(p.name)
    config = {
        "adjacency_path": "adjacency.csv",
        "timeseries_paths": paths,
        "output_dir": "results",
        "percentile": 90,
        "n_permutations": n_permutations,
        "alpha": 0.05,
        "seed": seed,
    }
    io.write_json(out / "config.json", config)
    io.write_json(out / "planted.json", {"planted": [list(p) for p in cohort.planted]})
    return out / "config.json"
