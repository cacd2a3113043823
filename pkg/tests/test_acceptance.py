"""Acceptance suite: one recorded pass/fail line per criterion at the pinned tolerances."""

import logging
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import (
    connected_graphs_up_to_iso,
    exact_laplacian_spectrum,
    naive_covariance,
    naive_kde,
    naive_kernel_weights,
    naive_sampling_weight,
)
from smh.benchmark import make_benchmark, random_connected_graph
from smh.boosting import TreeParams
from smh.cli import main as cli_main
from smh.errors import ParseError
from smh.experiment import lowest_bin_mse, run_experiment
from smh.graph import Graph, gft, inverse_gft, spectral_decompose
from smh.manifold import ManifoldModel, conditional_covariance, conditional_mean, kernel_weights, sample_spectra
from smh.reconstruct import AugmentationConfig, augment, fit_augmenter, reconstruct_graph
from smh.relevance import build_relevance_extremes, kde_eval, kde_fit, relevance_eval, sampling_weight
from smh.smiles import load_csv, parse_smiles
from smh.spectral_map import EIGENVALUES, GFT, SpectralEmbedding, fit_spectrum_regressor

DATA = Path(__file__).resolve().parents[1] / "data"
DATASETS = {
    "esol": ("esol.csv", "smiles", "measured log solubility in mols per litre"),
    "freesolv": ("freesolv.csv", "smiles", "expt"),
    "lipophilicity": ("lipophilicity.csv", "smiles", "exp"),
}


def load(name):
    file, smiles, target = DATASETS[name]
    return load_csv(DATA / file, smiles, target)


@pytest.fixture(scope="module")
def esol():
    return load("esol")


@pytest.fixture(scope="module")
def esol_augmented(esol):
    cfg = AugmentationConfig()
    fitted = fit_augmenter(esol, cfg)
    return fitted, augment(esol, fitted, cfg)


@pytest.fixture(scope="module")
def benchmark_runs():
    ds = make_benchmark(800, seed=0)
    start = time.perf_counter()
    reports = [run_experiment(ds, AugmentationConfig(master_seed=seed, k=2), folds=5) for seed in range(5)]
    return reports, time.perf_counter() - start


def test_criterion_01_eigensolver_oracle(verdict):
    start = time.perf_counter()
    worst, count, count5 = 0.0, 0, 0
    for n in range(2, 6):
        for edges in connected_graphs_up_to_iso(n):
            got = np.sort(spectral_decompose(Graph.from_edges(n, edges)).eigenvalues)
            want = np.array(exact_laplacian_spectrum(n, edges))
            worst = max(worst, float(np.max(np.abs(got - want))))
            count += 1
            count5 += n == 5
    elapsed = time.perf_counter() - start
    ok = count5 == 21 and worst < 1e-7 and elapsed < 5
    assert verdict(1, "eigensolver vs exact oracle", ok,
                   f"{count} graphs incl. {count5} on 5 nodes, max err {worst:.1e}, {elapsed:.2f}s")


def test_criterion_02_gft_round_trip(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        g = random_connected_graph(rng, int(rng.integers(2, 31)), float(rng.uniform(0, 0.3)))
        d = spectral_decompose(g)
        x = rng.normal(size=g.node_count)
        worst = max(worst, float(np.max(np.abs(inverse_gft(d.eigenvectors, gft(d.eigenvectors, x)) - x))))
    assert verdict(2, "GFT round trip on 1000 graphs", worst < 1e-10, f"max entry error {worst:.1e}")


def test_criterion_03_relevance_exactness(verdict):
    details, ok = [], True
    for name in DATASETS:
        ys = np.asarray(load(name).targets)
        f = build_relevance_extremes(ys)
        exact = (relevance_eval(f, ys.min()) == 1.0 and relevance_eval(f, ys.mean()) == 0.025
                 and relevance_eval(f, ys.max()) == 0.0)
        grid = relevance_eval(f, np.linspace(ys.min(), ys.max(), 10_000))
        monotone = bool(np.all(np.diff(grid) <= 0))
        ok &= exact and monotone
        details.append(f"{name}: exact={exact} monotone={monotone}")
    assert verdict(3, "relevance control points and monotonicity", ok, "; ".join(details))


def _random_gft_model(rng, n, k):
    ys = rng.normal(size=n) * 2
    S = rng.normal(size=(n, k))
    embs = [SpectralEmbedding(s, k, GFT) for s in S]
    reg = fit_spectrum_regressor(ys, embs, build_relevance_extremes(ys), TreeParams(10, 0.1, 2))
    return ManifoldModel.build(reg, ys, embs, float(rng.uniform(0.2, 2.0)))


def test_criterion_04_naive_loop_equivalence(verdict):
    rng = np.random.default_rng(4)
    worst = {"kernel": 0.0, "covariance": 0.0, "kde": 0.0, "weight": 0.0}
    for _ in range(100):
        n, k = int(rng.integers(3, 12)), int(rng.integers(1, 5))
        m = _random_gft_model(rng, n, k)
        y = float(rng.normal() * 2)
        w = naive_kernel_weights(m.training_targets, m.gamma, y)
        worst["kernel"] = max(worst["kernel"], float(np.max(np.abs(kernel_weights(m, y) - w))))
        mu = conditional_mean(m, y)
        naive = naive_covariance(w, m.training_embeddings, mu)
        ridge = max(1e-6 * np.trace(naive) / k, 1e-9)
        err = np.max(np.abs(conditional_covariance(m, y) - naive - ridge * np.eye(k)))
        worst["covariance"] = max(worst["covariance"], float(err))
        ys = m.training_targets
        d = kde_fit(ys)
        worst["kde"] = max(worst["kde"], abs(kde_eval(d, y) - naive_kde(ys, d.bandwidth, y)))
        f = build_relevance_extremes(ys)
        want = naive_sampling_weight(relevance_eval(f, y), naive_kde(ys, d.bandwidth, y), 1e-6)
        worst["weight"] = max(worst["weight"], abs(sampling_weight(f, d, y) - want) / max(1.0, abs(want)))
    ok = all(v < 1e-10 for v in worst.values())
    assert verdict(4, "kernel/covariance/KDE/weight vs naive loops", ok,
                   ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_05_sampling_moments(verdict):
    rng = np.random.default_rng(5)
    m = _random_gft_model(rng, 15, 4)
    y = 0.3
    start = time.perf_counter()
    draws = sample_spectra(m, y, 100_000, 55)
    elapsed = time.perf_counter() - start
    mu = conditional_mean(m, y)
    C = conditional_covariance(m, y)
    z = np.abs(draws.mean(0) - mu) / (np.sqrt(np.diag(C)) / math.sqrt(len(draws)))
    rel = float(np.linalg.norm(np.cov(draws, rowvar=False) - C) / np.linalg.norm(C))
    ok = bool(np.all(z <= 3)) and rel < 0.05 and elapsed < 60
    assert verdict(5, "manifold sampling moments over 1e5 draws", ok,
                   f"max |mean err| {z.max():.2f} sigma/sqrt(n), cov rel err {rel:.4f}, {elapsed:.2f}s")


def test_criterion_06_reconstruction_identity(verdict, esol):
    agree = 0
    records = esol.records[:50]
    for r in records:
        d = spectral_decompose(r.graph)
        spec = SpectralEmbedding(d.eigenvalues.copy(), d.n, EIGENVALUES)
        agree += reconstruct_graph(d, spec, 0.5, r.graph.node_labels).edges == r.graph.edges
    assert verdict(6, "own-spectrum reconstruction on 50 ESOL molecules", agree == len(records),
                   f"{agree}/{len(records)} exact")


def test_criterion_07_distribution_shift(verdict, esol, esol_augmented):
    fitted, samples = esol_augmented
    orig = float(np.mean(relevance_eval(fitted.relevance, esol.targets) >= 0.5))
    syn = float(np.mean(relevance_eval(fitted.relevance, [s.target for s in samples]) >= 0.5))
    assert verdict(7, "synthetic share of phi >= 0.5 at least twice the original", syn >= 2 * orig,
                   f"synthetic {syn:.3f} vs original {orig:.3f}, {len(samples)} samples")


def _fidelity(syn_stats, seed_stats):
    node = abs(syn_stats["node_mean"] - seed_stats["node_mean"]) / seed_stats["node_mean"]
    edge = abs(syn_stats["edge_mean"] - seed_stats["edge_mean"]) / seed_stats["edge_mean"]
    return node, edge


def test_criterion_08_structural_fidelity(verdict, esol, esol_augmented, benchmark_runs):
    from smh.metrics import structural_stats

    _, samples = esol_augmented
    runs = [_fidelity(structural_stats([s.graph for s in samples]).to_dict(),
                      structural_stats([esol[s.seed_graph_index].graph for s in samples]).to_dict())]
    reports, _ = benchmark_runs
    for rep in reports:
        for f in rep["fold_results"]:
            runs.append(_fidelity(f["structure"]["synthetic"], f["structure"]["seeds"]))
    worst_node = max(r[0] for r in runs)
    worst_edge = max(r[1] for r in runs)
    ok = worst_node <= 0.15 and worst_edge <= 0.30
    assert verdict(8, "synthetic vs seed node/edge means", ok,
                   f"{len(runs)} runs, worst node dev {100 * worst_node:.1f}%, worst edge dev {100 * worst_edge:.1f}%")


def test_criterion_09_directional_sera(verdict, benchmark_runs):
    reports, elapsed = benchmark_runs
    folds = [f for rep in reports for f in rep["fold_results"]]
    wins = sum(f["smh"]["sera"] <= f["baseline"]["sera"] for f in folds)
    gains = [lowest_bin_mse(f, "baseline") - lowest_bin_mse(f, "smh") for f in folds]
    ok = wins >= 0.6 * len(folds) and float(np.mean(gains)) > 0 and elapsed < 600
    assert verdict(9, "augmented SERA no worse than baseline on the spectral benchmark", ok,
                   f"{wins}/{len(folds)} runs, mean lowest-bin MSE gain {np.mean(gains):.4f}, {elapsed:.0f}s")


def test_criterion_10_cli_determinism(verdict, tmp_path):
    file, smiles, target = DATASETS["esol"]
    identical, files = True, 0
    for cmd in ("augment", "evaluate"):
        outs = [tmp_path / f"{cmd}-{i}" for i in range(2)]
        for out in outs:
            code = cli_main([cmd, "--dataset", str(DATA / file), "--smiles-col", smiles,
                             "--target-col", target, "--seed", "7", "--out", str(out)])
            assert code == 0
        a, b = outs
        names = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
        identical &= names == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
        for name in names:
            identical &= (a / name).read_bytes() == (b / name).read_bytes()
            files += 1
    assert verdict(10, "augment and evaluate artifacts byte-identical across runs", identical,
                   f"{files} files compared")


def _mutate(s, rng):
    alphabet = "CNOSPFIBrlcnops()[]=#-:/\\@+1234567890%.H*xZ "
    chars = list(s)
    for _ in range(rng.randint(1, 4)):
        op = rng.randrange(3)
        pos = rng.randrange(len(chars) + 1)
        if op == 0:
            chars.insert(pos, rng.choice(alphabet))
        elif chars:
            pos = min(pos, len(chars) - 1)
            if op == 1:
                del chars[pos]
            else:
                chars[pos] = rng.choice(alphabet)
    return "".join(chars)


def test_criterion_11_smiles_corpus(verdict):
    logging.getLogger("smh.smiles").setLevel(logging.ERROR)
    rates, corpus = [], []
    for name in DATASETS:
        ds = load(name)
        total = len(ds) + sum(ds.skipped.values())
        rates.append((name, 1 - ds.skipped["parse_error"] / total))
        file, smiles_col, _ = DATASETS[name]
        import csv

        with open(DATA / file, encoding="utf-8") as fh:
            corpus += [row[smiles_col] for row in csv.DictReader(fh)]
    rng = random.Random(11)
    crashes, rejected, bad_offsets = 0, 0, 0
    for _ in range(100_000):
        s = _mutate(rng.choice(corpus), rng)
        try:
            parse_smiles(s)
        except ParseError as exc:
            rejected += 1
            bad_offsets += not (0 <= exc.offset <= len(s.encode()))
        except Exception:
            crashes += 1
    positioned = []
    for bad in ("CC(C", "C1CC", "CXC", "C[Xx]", "=CC"):
        try:
            parse_smiles(bad)
            positioned.append(False)
        except ParseError as exc:
            positioned.append(exc.offset is not None)
    ok = all(r >= 0.99 for _, r in rates) and crashes == 0 and bad_offsets == 0 and all(positioned)
    detail = ", ".join(f"{n} {100 * r:.1f}%" for n, r in rates)
    assert verdict(11, "SMILES parse rate, fuzzing and positioned errors", ok,
                   f"{detail}; 1e5 fuzzed: {crashes} crashes, {rejected} rejected with offsets")
