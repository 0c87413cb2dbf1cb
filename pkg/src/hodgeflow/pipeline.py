"""
End-to-end analysis of a cohort of nodal time series on a shared complex.

Stages: threshold the structural adjacency and fill its 3-cliques, compute
the Hodge spectrum, then per subject derive the lead-lag edge series,
decompose it, measure the curl-energy fraction and take temporal means.
Divergence and curl are evaluated on the time-averaged edge signal.  Group
aggregation and sign-flip tests run across subjects.

The inputs are assumed preprocessed (filtered, cleaned); no temporal
filtering happens here.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, io
from .complex import boundaries, build_from_edges, clique_complex, n_components, threshold_binarize
from .errors import ConsistencyError, HodgeflowError, ValidationError
from .hodge import betti, laplacians, spectrum
from .leadlag import NodeTimeSeries, concatenate_runs, edge_signal, temporal_stats
from .signal import curl, curl_energy_fraction, divergence, hodge_decompose
from .stats import (
    RNG_ALGORITHM,
    GroupAssignment,
    aggregate_curl_by_triplet,
    aggregate_edges_by_group_pair,
    aggregate_nodes_by_group,
    sign_flip_test,
)


@dataclass
class PipelineConfig:
    adjacency_path: str
    timeseries_paths: list  # one entry per subject: a path or a list of run paths
    output_dir: str
    percentile: float = 90.0
    groups_path: str | None = None
    n_permutations: int = 20000
    alpha: float = 0.05
    seed: int = 0
    zero_tol: float | None = None
    adjacency_header: bool = False
    transpose: bool = False
    zscore: bool = True
    junction_drop: bool = True
    time_resolved_divergence: bool = False
    plots: bool = True
    n_workers: int | None = None
    base_dir: str | None = field(default=None, repr=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        missing = [k for k in ("adjacency_path", "timeseries_paths", "output_dir") if k not in data]
        if missing:
            raise ValidationError(f"config is missing {missing}")
        cfg = cls(**data)
        if base_dir is not None and cfg.base_dir is None:
            cfg.base_dir = str(base_dir)
        return cfg

    def resolve(self, p) -> Path:
        p = Path(p)
        if not p.is_absolute() and self.base_dir:
            return Path(self.base_dir) / p
        return p

    def subject_runs(self) -> list[list[Path]]:
        out = []
        for entry in self.timeseries_paths:
            runs = [entry] if isinstance(entry, (str, os.PathLike)) else list(entry)
            if not runs:
                raise ValidationError("a subject has no time-series runs")
            out.append([self.resolve(r) for r in runs])
        return out

    def validate(self) -> None:
        if not self.resolve(self.adjacency_path).exists():
            raise ValidationError(f"adjacency file not found: {self.adjacency_path}")
        if not self.timeseries_paths:
            raise ValidationError("no subjects given")
        for runs in self.subject_runs():
            for r in runs:
                if not r.exists():
                    raise ValidationError(f"time-series file not found: {r}")
        if self.groups_path and not self.resolve(self.groups_path).exists():
            raise ValidationError(f"group file not found: {self.groups_path}")
        if not 0 <= self.percentile <= 100:
            raise ValidationError(f"percentile must lie in [0, 100], got {self.percentile}")
        if not 0 < self.alpha < 1:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_permutations < 1000:
            raise ValidationError("n_permutations must be at least 1000")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("base_dir", None)
        d.pop("n_workers", None)
        return d


@contextmanager
def _stage(name: str, ident: str = ""):
    try:
        yield
    except HodgeflowError as exc:
        where = f"{name}" + (f" [{ident}]" if ident else "")
        raise type(exc)(f"stage {where}: {exc}") from exc


def _worker_count(cfg: PipelineConfig, n_jobs: int) -> int:
    n = cfg.n_workers or os.cpu_count() or 1
    cap = os.environ.get("TSP_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValidationError(f"TSP_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, n_jobs))


def _align(ts: NodeTimeSeries, labels: tuple[str, ...] | None, n: int, ident: str) -> np.ndarray:
    if ts.n_nodes != n:
        raise ValidationError(f"{ident}: {ts.n_nodes} nodes in the time series, {n} in the complex")
    if labels is None or ts.labels is None or tuple(ts.labels) == tuple(labels):
        return ts.data
    pos = {lab: k for k, lab in enumerate(ts.labels)}
    if set(pos) != set(labels):
        raise ValidationError(f"{ident}: node labels do not match the adjacency header")
    return ts.data[[pos[lab] for lab in labels]]


def _subject(cfg, c, bnd, spec, runs, ident) -> dict:
    with _stage("load", ident):
        arrays = [
            _align(io.read_node_timeseries(r, transpose=cfg.transpose), c.labels, c.n_vertices, str(r))
            for r in runs
        ]
    with _stage("leadlag", ident):
        n_flat = sum(int(np.sum(a.std(axis=1) == 0)) for a in arrays)
        x = concatenate_runs(arrays, standardize=cfg.zscore, warn=False)
        junctions = x.junctions if cfg.junction_drop else ()
        e = edge_signal(x, c, junctions=junctions)
        st = temporal_stats(e, x, c, junctions=junctions)
    with _stage("decompose", ident):
        comps = hodge_decompose(spec, e)
        en = comps.energies()
        total = float(np.sum(e**2))
        balance = en["down"] + en["up"] + en["harm"]
        if abs(balance - total) > 1e-8 * max(total, np.finfo(float).tiny):
            raise ConsistencyError(f"energy balance off: components {balance!r}, total {total!r}")
        try:
            p_k = curl_energy_fraction(comps.down, comps.up)
        except ValidationError:
            p_k = None
    mean_edge = st.mean_edge
    out = {
        "n_samples": int(x.length),
        "n_edge_samples": int(e.shape[1]),
        "energy": {"total": total, **en},
        "p_k": p_k,
        "r_plus_positive": float(np.mean(st.r_plus > 0)) if c.n_edges else None,
        "r_minus_positive": float(np.mean(st.r_minus > 0)) if c.n_edges else None,
        "mean_edge": mean_edge,
        "mean_down": comps.down.mean(axis=1),
        "mean_up": comps.up.mean(axis=1),
        "divergence": divergence(bnd.b1, mean_edge),
        "curl": curl(bnd.b2, mean_edge),
        "warnings": [f"degenerate input: {n_flat} constant node series"] if n_flat else [],
    }
    if cfg.time_resolved_divergence:
        out["divergence_series_mean_abs"] = np.abs(divergence(bnd.b1, e)).mean(axis=1)
    return out


def _sign_flip_block(panel, labels, cfg, n_workers):
    res = sign_flip_test(panel, cfg.n_permutations, cfg.alpha, cfg.seed, n_workers=n_workers)
    rows = [
        {"item": lab, "observed_mean": float(m), "z": float(z), "p": float(p), "survives": bool(s)}
        for lab, m, z, p, s in zip(labels, res.observed_mean, res.z_score, res.p_value, res.survives)
    ]
    return {
        "n_items": len(labels),
        "n_permutations": res.n_permutations,
        "alpha": res.alpha,
        "bonferroni_threshold": res.alpha / max(len(labels), 1),
        "n_survivors": int(res.survives.sum()),
        "items": rows,
    }


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage, write artifacts to ``cfg.output_dir`` and return the report."""
    started = datetime.now(timezone.utc).isoformat()
    env_seed = os.environ.get("TSP_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ValidationError(f"TSP_SEED must be an integer, got {env_seed!r}") from None
    with _stage("config"):
        cfg.validate()
    out_dir = cfg.resolve(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    notes = [
        "inputs are taken as preprocessed; no temporal filtering is applied",
        "curl-energy fractions use the full edge series as produced (no mean removal); "
        "divergence and curl use the time-averaged edge signal",
    ]

    with _stage("complex", str(cfg.adjacency_path)):
        w, labels = io.read_adjacency(cfg.resolve(cfg.adjacency_path), header=cfg.adjacency_header)
        pairs = threshold_binarize(w, cfg.percentile)
        c = clique_complex(build_from_edges(w.shape[0], pairs, labels=labels))
        if c.n_edges == 0:
            raise ValidationError("no edges survive thresholding")
        bnd = boundaries(c)
    with _stage("spectrum"):
        h = laplacians(bnd)
        spec = spectrum(h, bnd, cfg.zero_tol)
        b = betti(h, spec, bnd)
    if spec.n_down + spec.n_up + spec.n_harm != c.n_edges or b.beta1 != spec.n_harm:
        raise ConsistencyError("dimension bookkeeping violated")
    summary = {
        "N": c.n_vertices,
        "E": c.n_edges,
        "T": c.n_triangles,
        "beta0": b.beta0,
        "beta1": b.beta1,
        "N_down": spec.n_down,
        "N_up": spec.n_up,
        "N_harm": spec.n_harm,
        "components": n_components(c),
        "zero_tol": spec.zero_tol,
    }
    io.save_complex(out_dir / "complex.json", c)

    subjects = cfg.subject_runs()
    n_workers = _worker_count(cfg, len(subjects))
    idents = [f"subject {k}: {runs[0].name}" for k, runs in enumerate(subjects)]
    jobs = list(zip(subjects, idents))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda a: _subject(cfg, c, bnd, spec, *a), jobs))
    else:
        results = [_subject(cfg, c, bnd, spec, *a) for a in jobs]

    node_labels = list(c.vertex_labels)
    edge_labels = c.edge_labels()
    tri_labels = [f"{a}-{b_}-{k}" for a, b_, k in c.triangles]
    div_panel = np.vstack([r["divergence"] for r in results])
    edge_panel = np.vstack([r["mean_edge"] for r in results])
    curl_panel = np.vstack([r["curl"] for r in results]) if c.n_triangles else np.zeros((len(results), 0))

    subj_rows = []
    for k, (runs, r) in enumerate(zip(subjects, results)):
        subj_rows.append(
            {
                "subject": k,
                "runs": [str(p.name) for p in runs],
                "n_samples": r["n_samples"],
                "n_edge_samples": r["n_edge_samples"],
                "p_k": r["p_k"],
                "energy": r["energy"],
                "r_plus_positive": r["r_plus_positive"],
                "r_minus_positive": r["r_minus_positive"],
                "warnings": r["warnings"],
            }
        )
    pks = [r["p_k"] for r in results if r["p_k"] is not None]
    report = {
        "complex": summary,
        "subjects": subj_rows,
        "p_k": {
            "mean": float(np.mean(pks)) if pks else None,
            "std": float(np.std(pks, ddof=1)) if len(pks) > 1 else None,
        },
        "mean_edge": {
            "edges": edge_labels,
            "signal": edge_panel.mean(axis=0),
            "down": np.mean([r["mean_down"] for r in results], axis=0),
            "up": np.mean([r["mean_up"] for r in results], axis=0),
        },
        "divergence": {"nodes": node_labels, "mean": div_panel.mean(axis=0)},
        "spectrum_degenerate": spec.degenerate,
        "curl": {"triangles": tri_labels, "mean": curl_panel.mean(axis=0)},
        "groups": None,
        "sign_flip": None,
        "notes": notes,
    }

    if cfg.time_resolved_divergence:
        # mean over time of |div e(t)|, averaged over subjects
        report["divergence"]["time_resolved_mean_abs"] = np.mean(
            [r["divergence_series_mean_abs"] for r in results], axis=0
        )

    if cfg.groups_path:
        with _stage("groups", str(cfg.groups_path)):
            g = GroupAssignment.load(cfg.resolve(cfg.groups_path), node_labels)
            gd = aggregate_nodes_by_group(div_panel, g)
            gp = aggregate_edges_by_group_pair(edge_panel, g, c)
            gt = aggregate_curl_by_triplet(curl_panel, g, c)
        report["groups"] = {
            "order": list(g.groups),
            "divergence": [
                {"group": grp, "mean": m, "stderr": s}
                for grp, m, s in zip(gd.groups, gd.mean, gd.stderr)
            ],
            "edge_pairs": {"mean": gp.mean, "counts": gp.counts},
            "triplet_curl": [
                {"triplet": "-".join(t), "mean": m, "stderr": s, "n_triangles": int(n)}
                for t, m, s, n in zip(gt.triplets, gt.mean, gt.stderr, gt.counts)
            ],
            "degenerate_curl": {
                "n_triangles": gt.degenerate_count,
                "mean": float(np.nanmean(gt.degenerate_per_subject)) if gt.degenerate_count else None,
            },
        }
        io.write_table(
            out_dir / "group_divergence.csv",
            ["group", "mean", "stderr"],
            zip(gd.groups, gd.mean, gd.stderr),
        )
        io.write_table(
            out_dir / "triplet_curl.csv",
            ["triplet", "mean", "stderr", "n_triangles"],
            [("-".join(t), m, s, int(n)) for t, m, s, n in zip(gt.triplets, gt.mean, gt.stderr, gt.counts)],
        )
        io.write_table(
            out_dir / "group_pair_edges.csv",
            ["group"] + list(g.groups),
            [[grp] + list(row) for grp, row in zip(g.groups, gp.mean)],
        )
        if cfg.plots:
            from . import plots

            plots.bar_plot(out_dir / "group_divergence.svg", gd.groups, gd.mean, 3 * gd.stderr,
                           "Divergence by group (mean +/- 3 s.e.)", "divergence")
            plots.bar_plot(out_dir / "triplet_curl.svg", ["-".join(t) for t in gt.triplets], gt.mean,
                           3 * gt.stderr, "Curl by group triplet", "curl")
            plots.matrix_plot(out_dir / "group_pair_edges.svg", gp.mean, g.groups, "Mean edge signal by group pair")

    if len(results) < 2:
        report["sign_flip"] = {"skipped": "sign-flip test needs at least 2 subjects"}
        print("notice: single subject, sign-flip stage skipped")
    else:
        with _stage("sign-flip"):
            div_test = _sign_flip_block(div_panel, node_labels, cfg, n_workers)
            edge_test = _sign_flip_block(edge_panel, edge_labels, cfg, n_workers)
        report["sign_flip"] = {"rng": RNG_ALGORITHM, "seed": cfg.seed, "divergence": div_test, "edges": edge_test}
        for name, block in (("divergence", div_test), ("edges", edge_test)):
            io.write_table(
                out_dir / f"sign_flip_{name}.csv",
                ["item", "observed_mean", "z", "p", "survives"],
                [(r["item"], r["observed_mean"], r["z"], r["p"], str(r["survives"]).lower()) for r in block["items"]],
            )
        if cfg.plots:
            from . import plots

            zs = [r["z"] for r in div_test["items"]]
            colors = ["#c0392b" if r["survives"] and r["z"] > 0 else "#2c6fbb" if r["survives"] else "#bbbbbb"
                      for r in div_test["items"]]
            plots.bar_plot(out_dir / "sign_flip_divergence.svg", node_labels, zs,
                           title="Divergence z-scores (coloured: Bonferroni survivors)", ylabel="z", colors=colors)

    io.write_table(
        out_dir / "subjects.csv",
        ["subject", "p_k", "energy_total", "energy_down", "energy_up", "energy_harm"],
        [
            (s["subject"], "" if s["p_k"] is None else s["p_k"], s["energy"]["total"], s["energy"]["down"],
             s["energy"]["up"], s["energy"]["harm"])
            for s in subj_rows
        ],
    )
    io.write_table(
        out_dir / "mean_edge.csv",
        ["edge", "signal", "down", "up"],
        zip(edge_labels, report["mean_edge"]["signal"], report["mean_edge"]["down"], report["mean_edge"]["up"]),
    )
    report["provenance"] = {
        "version": __version__,
        "config": cfg.echo(),
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "timestamps": {"started": started, "finished": datetime.now(timezone.utc).isoformat()},
    }
    io.write_json(out_dir / "report.json", report)
    return io.to_jsonable(report)
