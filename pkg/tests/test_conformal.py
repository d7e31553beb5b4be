import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binconf.conformal import (
    analytic_coverage,
    calibrate,
    conformity_scores,
    coverage_mc_check,
    order_index,
    predict_set,
    predict_sets,
)
from binconf.data import Dataset, gen_bimodal, split, SplitSpec
from binconf.density import DiscreteDensity, interpolate, superlevel_set
from binconf.grid import build_grid
from binconf.model import ModelConfig, init_model
from binconf.pipeline import AbsResidualBaseline, PipelineConfig, baseline_abs_residual

from oracles import grid_scan_membership


def model_with_output_bias(bias, input_dim=1):
    """Network whose logits are the fixed vector ``bias`` for every input."""
    m = init_model(ModelConfig(input_dim, 2, 1, len(bias)))
    for p in m.params():
        p[...] = 0
    m.biases[-1][:] = bias
    return m


def test_order_statistic_examples():
    r = calibrate(np.arange(9, 0, -1.0), 0.1)
    assert r.k_order == 1 and r.threshold == 1.0
    r = calibrate(np.arange(1, 20, dtype=float), 0.2)
    assert r.k_order == 4 and r.threshold == 4.0
    with pytest.warns(RuntimeWarning, match="too few"):
        r = calibrate([0.3, 0.1, 0.2], 0.1)
    assert r.k_order == 0 and r.threshold == -np.inf
    assert np.all(np.diff(r.scores) >= 0)


def test_order_index_guards_float_rounding():
    assert order_index(9, 0.1) == 1
    assert order_index(99, 0.1) == 10
    assert order_index(19, 0.2) == 4


def test_calibrate_errors():
    with pytest.raises(ValueError):
        calibrate([1.0], 0)
    with pytest.raises(ValueError):
        calibrate([1.0], 1.0)
    with pytest.raises(ValueError):
        calibrate([], 0.1)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60), st.lists(st.floats(0.01, 0.99), min_size=2, max_size=6))
def test_threshold_nondecreasing_in_alpha(scores, alphas):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ths = [calibrate(scores, a).threshold for a in sorted(alphas)]
    assert all(b >= a for a, b in zip(ths, ths[1:]))


def test_scores_at_nodes_and_outside():
    g = build_grid(0, 1, 5)
    bias = np.log([0.1, 0.2, 0.4, 0.2, 0.1])
    m = model_with_output_bias(bias)
    X = np.zeros((3, 1))
    s = conformity_scores(m, g, X, [0.5, 1.5, 0.125])
    np.testing.assert_allclose(s, [0.4, 0.0, 0.15], atol=1e-12)
    assert np.all((s >= 0) & (s <= 1))
    with pytest.raises(ValueError):
        conformity_scores(m, g, X, [0.5])


def test_full_range_when_threshold_is_minus_inf():
    g = build_grid(-1, 2, 5)
    m = model_with_output_bias(np.zeros(5))
    with pytest.warns(RuntimeWarning):
        calib = calibrate([0.1, 0.2], 0.1)
    s = predict_set(m, g, calib, [0.0])
    np.testing.assert_array_equal(s.intervals, [[-1, 2]])


def _check_against_scan(d, t, s):
    z, mask = grid_scan_membership(d.grid.midpoints, d.probs, t)
    step = z[1] - z[0]
    far = np.min(np.abs(z[:, None] - s.intervals.reshape(-1)), axis=1) > step
    np.testing.assert_array_equal(s.contains(z)[far], mask[far])


def test_unimodal_sharp_density_gives_one_interval():
    g = build_grid(0, 1, 11)
    p = np.exp(-0.5 * ((g.midpoints - 0.4) / 0.08) ** 2)
    p /= p.sum()
    m = model_with_output_bias(np.log(p))
    calib = calibrate(np.full(20, 0.1), 0.1)
    s = predict_set(m, g, calib, [0.0])
    assert s.n_intervals == 1
    assert s.intervals[0, 0] < 0.4 < s.intervals[0, 1]
    _check_against_scan(DiscreteDensity(g, p), 0.1, s)


def test_bimodal_density_gives_two_intervals():
    g = build_grid(-2, 2, 21)
    p = np.exp(-0.5 * ((g.midpoints - 1) / 0.2) ** 2) + np.exp(-0.5 * ((g.midpoints + 1) / 0.2) ** 2)
    p /= p.sum()
    m = model_with_output_bias(np.log(p))
    calib = calibrate(np.full(20, 0.05), 0.1)
    s = predict_set(m, g, calib, [3.0])
    assert s.n_intervals == 2
    _check_against_scan(DiscreteDensity(g, p), 0.05, s)


def test_membership_consistent_with_scores(rng):
    g = build_grid(-1, 1, 9)
    m = init_model(ModelConfig(2, 6, 2, 9, seed=4))
    X = rng.normal(size=(30, 2))
    calib = calibrate(rng.uniform(0, 0.2, 50), 0.1)
    sets = predict_sets(m, g, calib, X)
    for x, s in zip(X, sets):
        ys = rng.uniform(-1, 1, 200)
        sc = conformity_scores(m, g, np.repeat(x[None], 200, axis=0), ys)
        edges = s.intervals.reshape(-1)
        far = np.min(np.abs(ys[:, None] - edges), axis=1) > 1e-9 if len(edges) else np.ones(200, bool)
        np.testing.assert_array_equal(s.contains(ys)[far], (sc >= calib.threshold)[far])


def test_sets_nested_in_alpha(rng):
    g = build_grid(0, 1, 12)
    m = init_model(ModelConfig(1, 6, 2, 12, seed=1))
    scores = rng.uniform(0, 0.15, 100)
    X = rng.normal(size=(20, 1))
    prev = None
    for a in (0.05, 0.1, 0.2, 0.4):
        cur = predict_sets(m, g, calibrate(scores, a), X)
        if prev is not None:
            for big, small in zip(prev, cur):
                assert big.issuperset(small)
                assert small.length <= big.length + 1e-12
        prev = cur


def test_coverage_mc_matches_analytic():
    assert analytic_coverage(99, 0.1) == pytest.approx(0.90)
    cov = coverage_mc_check(99, 0.1, trials=100_000, seed=1)
    assert 0.90 - 0.003 <= cov <= 0.92


def test_coverage_two_orderings_enumerated():
    # n_cal=1, alpha=0.5 -> k=1: covered iff test >= the single calibration score
    orders = list(itertools.permutations([0, 1]))
    exact = np.mean([o[1] >= o[0] for o in orders])
    assert exact == 0.5
    assert coverage_mc_check(1, 0.5, trials=20_000, seed=2) >= 0.5 - 3 * np.sqrt(0.25 / 20_000)


def test_vacuous_regime_covers_everything():
    assert coverage_mc_check(3, 0.1, trials=1000) == 1.0


@pytest.mark.parametrize("n_cal,alpha", [(19, 0.1), (50, 0.2), (200, 0.05), (10, 0.3)])
def test_exchangeability_validity(n_cal, alpha):
    trials = 20_000
    cov = coverage_mc_check(n_cal, alpha, trials, seed=n_cal)
    std = np.sqrt(alpha * (1 - alpha) / trials)
    assert cov >= 1 - alpha - 3 * std


def test_baseline_zero_residuals_and_symmetry():
    base = AbsResidualBaseline(PipelineConfig(epochs=0))
    X = np.zeros((19, 1))
    base.fit(Dataset(X, np.zeros(19)))
    mu = base.predict_mean(np.zeros((1, 1)))[0]
    base.calibrate(Dataset(X, np.full(19, mu)), 0.1)
    s = base.predict_sets(np.zeros((1, 1)))[0]
    assert s.length == pytest.approx(0, abs=1e-12)
    assert s.intervals[0, 0] == pytest.approx(mu)
    base.calibrate(Dataset(X, mu + np.linspace(-1, 1, 19)), 0.1)
    lo, hi = base.predict_sets(np.zeros((1, 1)))[0].intervals[0]
    assert mu - lo == pytest.approx(hi - mu)


def test_baseline_function_on_bimodal_spans_both_modes():
    tr, ca, te = split(gen_bimodal(2000, 0), SplitSpec((0.5, 0.25, 0.25), 0))
    s = baseline_abs_residual(tr, ca, 0.1, te.features[0], PipelineConfig(epochs=20))
    assert s.length >= 1.8
