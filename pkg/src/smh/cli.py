"""Command-line entry point: ``smh {augment,evaluate,stats,relevance-plot}``.

Exit codes: 0 success, 1 fatal error, 2 invalid arguments or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from smh.config import ConfigError, RunConfig, read_toml, resolve
from smh.errors import FoldFailure, SMHError
from smh.experiment import format_table, report_json, run_experiment
from smh.metrics import structural_stats
from smh.plots import per_bin_svg, relevance_svg
from smh.reconstruct import augment, fit_augmenter, read_jsonl, requested_count, write_jsonl
from smh.relevance import build_relevance_extremes, kde_eval, kde_fit, relevance_eval, sampling_weight
from smh.smiles import load_csv
from smh.spectral_map import MODES, save_model

logger = logging.getLogger("smh")

EXIT_OK, EXIT_FATAL, EXIT_USAGE = 0, 1, 2
RELEVANCE_GRID = 201


class UsageError(Exception):
    pass


def _run_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--dataset", help="CSV file with a SMILES column and a numeric target column")
    p.add_argument("--smiles-col", dest="smiles_col")
    p.add_argument("--target-col", dest="target_col")
    p.add_argument("--k", type=int, help="spectral embedding size (capped at the smallest graph)")
    p.add_argument("--spectral-mode", dest="spectral_mode", choices=MODES)
    p.add_argument("--gamma", type=float, help="kernel bandwidth of the conditional covariance")
    p.add_argument("--fraction", type=float, help="synthetic samples as a fraction of the training size")
    p.add_argument("--cutoff", type=float, help="binarization cutoff on sigmoid edge scores")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker cap (default: available cores)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smh", description="Spectral-domain graph oversampling for imbalanced regression.")
    sub = parser.add_subparsers(dest="command", required=True)
    flags = _run_flags()
    sub.add_parser("augment", parents=[flags], help="fit on a dataset and write synthetic graphs")
    sub.add_parser("evaluate", parents=[flags], help="k-fold baseline vs augmented comparison")
    sub.add_parser("relevance-plot", parents=[flags], help="tabulate relevance, density and sampling weight")
    st = sub.add_parser("stats", help="compare structure of original and synthetic graph files")
    st.add_argument("original", help="CSV dataset or JSON-lines graph file")
    st.add_argument("synthetic", help="JSON-lines graph file (or CSV)")
    st.add_argument("--smiles-col", dest="smiles_col", default="smiles")
    st.add_argument("--target-col", dest="target_col", default="target")
    st.add_argument("--out", help="directory for stats.csv")
    return parser


def run_config(args) -> RunConfig:
    file_values = read_toml(args.config) if args.config else {}
    overrides = {key: getattr(args, key) for key in (
        "dataset", "smiles_col", "target_col", "k", "spectral_mode", "gamma", "fraction",
        "cutoff", "folds", "seed", "out", "threads")}
    cfg = resolve(file_values, overrides)
    if not cfg.dataset:
        raise ConfigError("a dataset is required (--dataset or `dataset` in the config)")
    return cfg


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def stats_rows(original, synthetic) -> list:
    """``(quantity, orig mean, orig std, syn mean, syn std, delta %)`` for nodes, edges, density."""
    a, b = structural_stats(original), structural_stats(synthetic)
    rows = []
    for name in ("node", "edge", "density"):
        am, asd = getattr(a, f"{name}_mean"), getattr(a, f"{name}_std")
        bm, bsd = getattr(b, f"{name}_mean"), getattr(b, f"{name}_std")
        if am == 0:
            delta = 0.0 if bm == 0 else float("inf")
        else:
            delta = 100.0 * (bm - am) / am
        rows.append((name, am, asd, bm, bsd, delta))
    return rows


STATS_HEADER = ("quantity", "original_mean", "original_std", "synthetic_mean", "synthetic_std", "delta_pct")


def format_stats(rows) -> str:
    lines = [f"{'':<9}{'original':>20}{'synthetic':>20}{'delta':>10}"]
    for name, am, asd, bm, bsd, delta in rows:
        lines.append(f"{name:<9}{f'{am:.3f} +/- {asd:.3f}':>20}{f'{bm:.3f} +/- {bsd:.3f}':>20}{delta:>9.1f}%")
    return "\n".join(lines)


def load_dataset(cfg: RunConfig):
    ds = load_csv(cfg.dataset, cfg.smiles_col, cfg.target_col)
    if ds.skipped and any(ds.skipped.values()):
        logger.warning("skipped rows: %s", ", ".join(f"{k}={v}" for k, v in sorted(ds.skipped.items()) if v))
    return ds


def cmd_augment(cfg: RunConfig) -> int:
    ds = load_dataset(cfg)
    aug = cfg.augmentation
    fitted = fit_augmenter(ds, aug)
    samples = augment(ds, fitted, aug)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg.to_dict())
    write_jsonl(samples, out / "synthetic.jsonl")
    save_model(fitted.model.regressor, out / "model.json")
    requested = requested_count(len(ds), aug.sampling_fraction)
    report = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "rows": len(ds),
        "skipped_rows": ds.skipped,
        "k": fitted.k,
        "synthetic_requested": requested,
        "synthetic_generated": len(samples),
    }
    if samples:
        syn = [s.graph for s in samples]
        rows = stats_rows(ds.graphs, syn)
        _write_csv(out / "stats.csv", STATS_HEADER, rows)
        phi_o = relevance_eval(fitted.relevance, ds.targets)
        phi_s = relevance_eval(fitted.relevance, [s.target for s in samples])
        report["structure"] = {
            "original": structural_stats(ds.graphs).to_dict(),
            "synthetic": structural_stats(syn).to_dict(),
            "seeds": structural_stats([ds[s.seed_graph_index].graph for s in samples]).to_dict(),
        }
        report["relevance_share"] = {"original": float(np.mean(phi_o >= 0.5)),
                                     "synthetic": float(np.mean(phi_s >= 0.5))}
        print(format_stats(rows))
    _write_json(out / "report.json", report)
    print(f"{len(samples)} of {requested} requested synthetic samples written to {out / 'synthetic.jsonl'}")
    if not samples:
        logger.error("no synthetic sample survived reconstruction")
        return EXIT_FATAL
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    ds = load_dataset(cfg)
    report = run_experiment(ds, cfg.augmentation, cfg.folds, cfg.feature_k, cfg.downstream)
    report["run_config"] = cfg.to_dict()
    out = cfg.out_dir()
    (out / "plots").mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg.to_dict())
    (out / "report.json").write_text(report_json(report) + "\n", encoding="utf-8")
    table = format_table(report)
    (out / "report.txt").write_text(table + "\n", encoding="utf-8")
    per_bin_svg(report, out / "plots" / "per_bin.svg")
    print(table)
    return EXIT_OK


def _graphs_from(path, smiles_col, target_col):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"file not found: {p}")
    if p.suffix in (".jsonl", ".json"):
        try:
            return [g for g, _, _ in read_jsonl(p)]
        except (ValueError, KeyError, TypeError) as exc:
            raise SMHError(f"{p}: cannot parse graph record: {exc}") from exc
    return load_csv(p, smiles_col, target_col).graphs


def cmd_stats(args) -> int:
    original = _graphs_from(args.original, args.smiles_col, args.target_col)
    synthetic = _graphs_from(args.synthetic, args.smiles_col, args.target_col)
    if not original or not synthetic:
        logger.error("both files must contain at least one graph")
        return EXIT_FATAL
    rows = stats_rows(original, synthetic)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "stats.csv", STATS_HEADER, rows)
    print(format_stats(rows))
    return EXIT_OK


def relevance_table(targets, eps: float = 1e-6, points: int = RELEVANCE_GRID):
    """Grid from the smallest to the largest target with relevance, density and sampling weight."""
    y = np.asarray(targets, dtype=float)
    rel = build_relevance_extremes(y)
    dens = kde_fit(y)
    grid = np.linspace(y.min(), y.max(), points)
    return grid, relevance_eval(rel, grid), kde_eval(dens, grid), sampling_weight(rel, dens, grid, eps)


def cmd_relevance_plot(cfg: RunConfig) -> int:
    ds = load_dataset(cfg)
    grid, phi, dens, weight = relevance_table(ds.targets, cfg.augmentation.eps)
    out = cfg.out_dir()
    (out / "plots").mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg.to_dict())
    _write_csv(out / "relevance.csv", ("y", "phi", "density", "weight"),
               [(repr(float(a)), repr(float(b)), repr(float(c)), repr(float(d)))
                for a, b, c, d in zip(grid, phi, dens, weight)])
    relevance_svg(grid, phi, dens, weight, out / "plots" / "relevance.svg")
    print(f"relevance grid with {len(grid)} points written to {out / 'relevance.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "stats":
            return cmd_stats(args)
        cfg = run_config(args)
        handler = {"augment": cmd_augment, "evaluate": cmd_evaluate, "relevance-plot": cmd_relevance_plot}
        return handler[args.command](cfg)
    except ConfigError as exc:
        print(f"smh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"smh: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except FoldFailure as exc:
        print(f"smh: error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (SMHError, ValueError, KeyError, OSError) as exc:
        print(f"smh: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
