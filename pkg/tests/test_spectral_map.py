import json

import numpy as np
import pytest

from smh.boosting import TreeParams
from smh.errors import InsufficientData, NonFiniteTarget
from smh.graph import Graph, spectral_decompose
from smh.relevance import build_relevance_extremes, relevance_eval, relevance_from_control_points
from smh.spectral_map import (
    EIGENVALUES,
    GFT,
    SpectralEmbedding,
    choose_k,
    embed,
    fit_spectrum_regressor,
    grid_search,
    load_model,
    predict_spectrum,
    save_model,
    weighted_loss,
)

TRIANGLE = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
EDGE = Graph.from_edges(2, [(0, 1)])
FLAT = relevance_from_control_points([-1e9, 1e9], [1.0, 1.0])


def emb(vectors, mode=EIGENVALUES):
    return [SpectralEmbedding(np.asarray(v, dtype=float), len(v), mode) for v in vectors]


def test_embed_examples():
    e = embed(spectral_decompose(TRIANGLE), 3)
    assert e.coefficients == pytest.approx([0, 1.5, 1.5], abs=1e-10)
    e = embed(spectral_decompose(EDGE), 4)
    assert e.coefficients == pytest.approx([0, 2, 0, 0], abs=1e-12)
    assert e.true_dimension == 2
    star = Graph.from_edges(5, [(0, i) for i in range(1, 5)])
    assert embed(spectral_decompose(star), 1).coefficients == pytest.approx([0], abs=1e-10)


def test_embed_gft_mode_orders_by_eigenvalue():
    d = spectral_decompose(Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)]))
    e = embed(d, 6, GFT)
    assert e.coefficients[:4] == pytest.approx(d.gft_coefficients)
    assert not e.coefficients[4:].any()
    with pytest.raises(ValueError):
        embed(d, 0)


def test_choose_k_caps_at_smallest_graph():
    assert choose_k([5, 9, 40]) == 5
    assert choose_k([50, 60], 32) == 32


def test_constant_embeddings_predict_constant():
    ys = np.linspace(-3, 3, 25)
    c = [0.0, 0.7, 1.3]
    r = fit_spectrum_regressor(ys, emb([c] * 25), build_relevance_extremes(ys), TreeParams(50, 0.1, 5))
    for y in (-10.0, 0.0, 2.5, 99.0):
        assert predict_spectrum(r, y).coefficients == pytest.approx(c, abs=1e-9)


def test_two_clusters_beat_constant_predictor():
    rng = np.random.default_rng(0)
    ys = np.concatenate([rng.normal(-3, 0.3, 20), rng.normal(2, 0.3, 40)])
    S = np.where(ys[:, None] < 0, [0.0, 0.4, 1.6], [0.0, 1.2, 1.9]) + rng.normal(0, 0.02, (60, 3))
    rel = build_relevance_extremes(ys)
    r = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(100, 0.1, 10))
    phi = relevance_eval(rel, ys)
    mean_vec = (phi[:, None] * S).sum(0) / phi.sum()
    baseline = float(np.mean(phi * ((S - mean_vec) ** 2).sum(1)))
    assert weighted_loss(r, ys, emb(S), rel) < baseline


def test_zero_weight_samples_do_not_change_fit():
    rng = np.random.default_rng(1)
    ys = rng.normal(size=30)
    S = rng.uniform(0, 2, size=(30, 4))
    rel = build_relevance_extremes(ys)
    phi = relevance_eval(rel, ys)
    assert (phi == 0).sum() == 1  # the maximum target
    params = TreeParams(30, 0.2, 3, reg_lambda=0.0)
    full = fit_spectrum_regressor(ys, emb(S), rel, params)
    keep = phi > 0
    dropped = fit_spectrum_regressor(ys[keep], emb(S[keep]), rel, params, weights=phi[keep])
    q = np.linspace(-3, 3, 50)
    assert np.max(np.abs(full.predict_raw(q) - dropped.predict_raw(q))) < 1e-9


def test_isolated_heavy_target_is_recovered():
    ys = np.array([-10.0, 0.0, 0.1])
    S = np.array([[0.0, 0.2, 1.8], [0.0, 1.0, 1.0], [0.0, 1.1, 1.1]])
    rel = build_relevance_extremes(ys)
    r = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(250, 0.1, 1))
    assert predict_spectrum(r, -10.0).coefficients == pytest.approx(S[0], abs=1e-3)


def test_eigenvalue_mode_output_is_valid_spectrum():
    rng = np.random.default_rng(2)
    ys = rng.normal(size=40)
    S = rng.uniform(-1, 3, size=(40, 5))  # deliberately out of range
    r = fit_spectrum_regressor(ys, emb(S), build_relevance_extremes(ys), TreeParams(20, 0.1, 3))
    for y in np.linspace(-4, 4, 30):
        s = predict_spectrum(r, y).coefficients
        assert np.all(np.diff(s) >= 0) and s.min() >= 0 and s.max() <= 2


def test_identical_targets_give_flat_prediction():
    ys = np.zeros(10)
    S = np.random.default_rng(3).uniform(0, 2, size=(10, 3))
    r = fit_spectrum_regressor(ys, emb(S), FLAT, TreeParams(20, 0.1, 3))
    a = predict_spectrum(r, -5.0).coefficients
    assert np.array_equal(a, predict_spectrum(r, 7.0).coefficients)


def test_loss_history_non_increasing_and_final_loss():
    rng = np.random.default_rng(4)
    ys = rng.normal(size=50)
    S = np.sort(rng.uniform(0, 2, size=(50, 4)), axis=1)
    rel = build_relevance_extremes(ys)
    r = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(40, 0.1, 3))
    assert np.all(np.diff(r.loss_history) <= 1e-12)
    assert r.loss_history[-1] == pytest.approx(weighted_loss(r, ys, emb(S), rel), rel=1e-10)
    assert r.final_loss >= r.loss_history[-1]


def test_errors():
    rel = build_relevance_extremes([0.0, 1.0])
    with pytest.raises(InsufficientData):
        fit_spectrum_regressor([1.0], emb([[0, 1]]), rel)
    with pytest.raises(NonFiniteTarget):
        fit_spectrum_regressor([1.0, np.nan], emb([[0, 1], [0, 1]]), rel)


def _two_law_dataset(seed):
    rng = np.random.default_rng(seed)
    ys = np.concatenate([rng.uniform(-3, 0, 15), rng.uniform(0, 3, 85)])
    low = np.column_stack([np.zeros_like(ys), 1 + 0.3 * np.sin(3 * ys), 1.5 - 0.2 * ys])
    high = np.column_stack([np.zeros_like(ys), 0.5 + 0.1 * ys, 1.8 + 0.0 * ys])
    S = np.where((ys < 0)[:, None], low, high) + rng.normal(0, 0.05, (100, 3))
    return ys, S


def test_relevance_weighting_helps_low_region():
    wins = 0
    params = TreeParams(10, 0.1, 2)
    for seed in range(20):
        ys, S = _two_law_dataset(seed)
        rel = build_relevance_extremes(ys)
        weighted = fit_spectrum_regressor(ys, emb(S), rel, params)
        uniform = fit_spectrum_regressor(ys, emb(S), rel, params, weights=np.ones(len(ys)))
        low = ys < 0
        phi = relevance_eval(rel, ys[low])

        def err(model):
            return float(np.sum(phi * ((S[low] - model.predict_raw(ys[low])) ** 2).sum(1)))

        wins += err(weighted) < err(uniform)
    assert wins >= 16


def test_serialization_is_deterministic(tmp_path):
    ys, S = _two_law_dataset(0)
    rel = build_relevance_extremes(ys)
    a = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(15, 0.1, 3), seed=7)
    b = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(15, 0.1, 3), seed=7)
    save_model(a, tmp_path / "a.json")
    save_model(b, tmp_path / "b.json")
    raw = (tmp_path / "a.json").read_bytes()
    assert raw == (tmp_path / "b.json").read_bytes()
    assert json.loads(raw)["magic"] == "SMHM1"
    c = load_model(tmp_path / "a.json")
    assert np.array_equal(c.predict_raw(ys), a.predict_raw(ys))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"magic": "NOPE"}))
    with pytest.raises(ValueError):
        load_model(bad)


def test_threads_do_not_change_result():
    ys, S = _two_law_dataset(1)
    rel = build_relevance_extremes(ys)
    a = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(10, 0.1, 3), threads=1)
    b = fit_spectrum_regressor(ys, emb(S), rel, TreeParams(10, 0.1, 3), threads=3)
    assert a.to_dict() == b.to_dict()


def test_grid_search_picks_from_grid():
    ys, S = _two_law_dataset(2)
    rel = build_relevance_extremes(ys)
    grid = {"n_estimators": (10, 50), "learning_rate": (0.001, 0.1), "max_depth": (3,)}
    best, scores = grid_search(ys[:70], emb(S[:70]), ys[70:], emb(S[70:]), rel, grid)
    assert len(scores) == 4
    assert best in [p for p, _ in scores]
    assert min(s for _, s in scores) == dict((p, s) for p, s in scores)[best]
    # tiny learning rate with few trees barely moves off the weighted mean
    assert best.learning_rate == 0.1
