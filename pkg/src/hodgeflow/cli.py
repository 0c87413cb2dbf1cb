"""
Command-line interface.

Exit codes: 0 on success, 2 for input or validation errors, 3 when a
numerical self-check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, io
from .complex import boundaries, build_from_edges, clique_complex, threshold_binarize
from .errors import ConsistencyError, ValidationError
from .filters import FilterSpec, apply_spatial, apply_spectral
from .hodge import betti, laplacians, spectrum
from .leadlag import edge_signal, looks_zscored, temporal_stats, zscore
from .pipeline import PipelineConfig, run_pipeline
from .signal import curl_energy_fraction, hodge_decompose

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _analyze(c, zero_tol=None):
    b = boundaries(c)
    h = laplacians(b)
    s = spectrum(h, b, zero_tol)
    return b, h, s, betti(h, s, b)


def _load_spectrum_inputs(path, zero_tol):
    c = io.load_complex(path)
    if c.n_edges == 0:
        raise ValidationError("no edges: the complex has an empty edge set")
    return (c, *_analyze(c, zero_tol))


def cmd_complex_build(args) -> int:
    if args.adjacency:
        w, labels = io.read_adjacency(args.adjacency, header=args.header)
        pairs = threshold_binarize(w, args.percentile)
        n = w.shape[0]
    else:
        n, pairs = io.read_edge_list(args.edges)
        n = max(n, args.n_vertices or 0)
        labels = None
    c = build_from_edges(n, pairs, labels=labels)
    if not args.no_clique:
        c = clique_complex(c)
    io.save_complex(args.output, c)
    line = f"N={c.n_vertices} E={c.n_edges} T={c.n_triangles}"
    if c.n_edges:
        _, _, s, bt = _analyze(c)
        line += f" beta0={bt.beta0} beta1={bt.beta1}"
    else:
        line += f" beta0={c.n_vertices} beta1=0"
    print(line)
    return 0


def cmd_spectrum(args) -> int:
    c, _, _, s, bt = _load_spectrum_inputs(args.complex, args.zero_tol)
    if args.output:
        io.write_json(args.output, s.to_dict())
    if args.csv:
        io.write_table(
            args.csv,
            ["index", "kind", "eigval"],
            [(k, kind, lam) for k, (kind, lam) in enumerate(zip(s.kinds, s.eigvals))],
        )
    print(f"E={c.n_edges} harm={s.n_harm} grad={s.n_down} curl={s.n_up} beta0={bt.beta0} beta1={bt.beta1}")
    for kind, groups in s.degenerate.items():
        if groups:
            sizes = ", ".join(str(len(g)) for g in groups)
            print(f"warning: repeated {kind} eigenvalues (block sizes {sizes}); "
                  "eigenvectors inside these blocks are basis-dependent", file=sys.stderr)
    return 0


def cmd_decompose(args) -> int:
    c, _, _, s, _ = _load_spectrum_inputs(args.complex, args.zero_tol)
    e = io.read_edge_series(args.signal, c)
    comps = hodge_decompose(s, e)
    io.write_components(args.output, c, [("down", comps.down), ("up", comps.up), ("harm", comps.harm)])
    en = comps.energies()
    msg = f"energy down={en['down']:.6g} up={en['up']:.6g} harm={en['harm']:.6g}"
    if en["down"] + en["up"] > 0:
        msg += f" curl_fraction={curl_energy_fraction(comps.down, comps.up):.6g}"
    print(msg)
    return 0


def cmd_leadlag(args) -> int:
    c = io.load_complex(args.complex)
    ts = io.read_node_timeseries(args.timeseries, transpose=args.transpose)
    if ts.n_nodes != c.n_vertices:
        raise ValidationError(
            f"time series has {ts.n_nodes} nodes, complex has {c.n_vertices} vertices"
        )
    x = ts.data
    if args.no_zscore:
        if not looks_zscored(x):
            warnings.warn("input is not z-scored; lead-lag means are not lag-1 correlation differences",
                          RuntimeWarning)
    else:
        x = zscore(x)
    e = edge_signal(x, c)
    if e.size and not np.any(e):
        warnings.warn("degenerate input: the edge signal is identically zero", RuntimeWarning)
    st = temporal_stats(e, x, c)
    io.write_edge_series(args.output, c, e)
    if args.stats:
        io.write_table(
            args.stats,
            ["edge", "r_plus", "r_minus", "mean_edge"],
            zip(c.edge_labels(), st.r_plus, st.r_minus, st.mean_edge),
        )
    print(f"E={c.n_edges} samples={e.shape[1]}")
    return 0


def cmd_filter_apply(args) -> int:
    c, _, h, s, _ = _load_spectrum_inputs(args.complex, args.zero_tol)
    f = FilterSpec.load(args.filter)
    e = io.read_edge_series(args.signal, c)
    out = apply_spatial(f, h, e) if args.spatial else apply_spectral(f, s, e)
    io.write_edge_series(args.output, c, out)
    print(f"filtered {e.shape[1]} sample(s) on E={c.n_edges} via the {'spatial' if args.spatial else 'spectral'} path")
    return 0


_PIPELINE_FLAGS = {
    "adjacency": "adjacency_path",
    "timeseries": "timeseries_paths",
    "groups": "groups_path",
    "percentile": "percentile",
    "n_permutations": "n_permutations",
    "alpha": "alpha",
    "seed": "seed",
    "zero_tol": "zero_tol",
    "output_dir": "output_dir",
    "junction_drop": "junction_drop",
    "header": "adjacency_header",
    "transpose": "transpose",
    "workers": "n_workers",
}


def cmd_pipeline_run(args) -> int:
    data, base = {}, None
    if args.config:
        data = io.read_json(args.config)
        base = Path(args.config).resolve().parent
    for flag, key in _PIPELINE_FLAGS.items():
        val = getattr(args, flag)
        if val is not None:
            data[key] = val
    if args.no_zscore:
        data["zscore"] = False
    if args.no_plots:
        data["plots"] = False
    if args.time_resolved_divergence:
        data["time_resolved_divergence"] = True
    cfg = PipelineConfig.from_dict(data, base_dir=base)
    report = run_pipeline(cfg)
    cs = report["complex"]
    print(
        f"N={cs['N']} E={cs['E']} T={cs['T']} beta0={cs['beta0']} beta1={cs['beta1']} "
        f"N_down={cs['N_down']} N_up={cs['N_up']} N_harm={cs['N_harm']}"
    )
    if report["p_k"]["mean"] is not None:
        print(f"curl energy fraction: mean={report['p_k']['mean']:.4f}")
    sf = report["sign_flip"]
    if sf and "skipped" not in sf:
        print(f"sign-flip survivors: divergence={sf['divergence']['n_survivors']} "
              f"edges={sf['edges']['n_survivors']}")
    print(f"report written to {cfg.resolve(cfg.output_dir) / 'report.json'}")
    return 0


def cmd_synth(args) -> int:
    from .synthetic import planted_cohort, write_cohort

    cohort = planted_cohort(
        n_nodes=args.nodes, n_subjects=args.subjects, length=args.length,
        n_planted=args.planted, coupling=args.coupling, seed=args.seed,
    )
    cfg = write_cohort(args.output_dir, cohort, n_permutations=args.n_permutations)
    print(f"wrote cohort and config to {cfg}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hodgeflow", description="Topological signal processing on oriented simplicial complexes.")
    p.add_argument("--version", action="version", version=f"hodgeflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    cx = sub.add_parser("complex", help="build simplicial complexes")
    cx_sub = cx.add_subparsers(dest="action", required=True)
    b = cx_sub.add_parser("build", help="threshold/binarize a graph and fill its 3-cliques")
    src = b.add_mutually_exclusive_group(required=True)
    src.add_argument("--adjacency", help="weighted adjacency CSV (N x N)")
    src.add_argument("--edges", help="edge list, one 'i j' pair per line")
    b.add_argument("--header", action="store_true", help="adjacency CSV has a header row of node labels")
    b.add_argument("--percentile", type=float, default=90.0, help="keep weights >= this percentile (default 90)")
    b.add_argument("--n-vertices", type=int, help="vertex count for edge lists (default: max index + 1)")
    b.add_argument("--no-clique", action="store_true", help="keep the bare graph, no triangles")
    b.add_argument("-o", "--output", required=True, help="complex JSON output")
    b.set_defaults(func=cmd_complex_build)

    s = sub.add_parser("spectrum", help="Hodge spectrum of a complex")
    s.add_argument("complex", help="complex JSON")
    s.add_argument("--zero-tol", type=float, help="eigenvalue zero threshold (default E*eps*lambda_max)")
    s.add_argument("-o", "--output", help="spectrum JSON output")
    s.add_argument("--csv", help="eigenvalue CSV output")
    s.set_defaults(func=cmd_spectrum)

    d = sub.add_parser("decompose", help="split an edge signal into gradient/curl/harmonic parts")
    d.add_argument("complex")
    d.add_argument("signal", help="edge signal CSV (header of tail-tip labels)")
    d.add_argument("--zero-tol", type=float)
    d.add_argument("-o", "--output", required=True, help="component CSV output")
    d.set_defaults(func=cmd_decompose)

    ll = sub.add_parser("leadlag", help="lead-lag edge signal from node time series")
    ll.add_argument("timeseries", help="node time-series CSV (header of node labels, rows = time points)")
    ll.add_argument("complex")
    ll.add_argument("--transpose", action="store_true", help="rows are nodes instead of time points")
    ll.add_argument("--no-zscore", action="store_true", help="use the series as given")
    ll.add_argument("-o", "--output", required=True, help="edge series CSV output")
    ll.add_argument("--stats", help="per-edge r_plus/r_minus/mean CSV output")
    ll.set_defaults(func=cmd_leadlag)

    fl = sub.add_parser("filter", help="simplicial convolutional filters")
    fl_sub = fl.add_subparsers(dest="action", required=True)
    fa = fl_sub.add_parser("apply", help="filter an edge signal")
    fa.add_argument("complex")
    fa.add_argument("signal")
    fa.add_argument("--filter", required=True, help="filter JSON {h_harm, alphas, betas}")
    fa.add_argument("--spatial", action="store_true", help="use shift-and-sum instead of the spectral path")
    fa.add_argument("--zero-tol", type=float)
    fa.add_argument("-o", "--output", required=True)
    fa.set_defaults(func=cmd_filter_apply)

    pl = sub.add_parser("pipeline", help="end-to-end cohort analysis")
    pl_sub = pl.add_subparsers(dest="action", required=True)
    r = pl_sub.add_parser("run", help="run the full analysis")
    r.add_argument("--config", help="pipeline JSON config; flags override its entries")
    r.add_argument("--adjacency")
    r.add_argument("--timeseries", nargs="+", help="one node time-series CSV per subject")
    r.add_argument("--groups", help="group assignment JSON")
    r.add_argument("--percentile", type=float)
    r.add_argument("--n-permutations", type=int)
    r.add_argument("--alpha", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--zero-tol", type=float)
    r.add_argument("--output-dir")
    r.add_argument("--header", action="store_const", const=True, help="adjacency CSV has a header row")
    r.add_argument("--transpose", action="store_const", const=True)
    r.add_argument("--workers", type=int)
    r.add_argument("--junction-drop", dest="junction_drop", action="store_const", const=True,
                   help="drop the edge sample spanning each run junction (default)")
    r.add_argument("--no-junction-drop", dest="junction_drop", action="store_const", const=False)
    r.add_argument("--no-zscore", action="store_true")
    r.add_argument("--no-plots", action="store_true")
    r.add_argument("--time-resolved-divergence", action="store_true",
                   help="also report mean |divergence| over time per node")
    r.set_defaults(func=cmd_pipeline_run)

    sy = sub.add_parser("synth", help="write a synthetic cohort with planted lead-lag couplings")
    sy.add_argument("output_dir")
    sy.add_argument("--nodes", type=int, default=20)
    sy.add_argument("--subjects", type=int, default=8)
    sy.add_argument("--length", type=int, default=500)
    sy.add_argument("--planted", type=int, default=5)
    sy.add_argument("--coupling", type=float, default=0.6)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--n-permutations", type=int, default=20000)
    sy.set_defaults(func=cmd_synth)
    return p


def _showwarning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _showwarning
            return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
