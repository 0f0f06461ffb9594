import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import max_drawdown_loop

from rnlshrink.errors import DegenerateInputError, EstimationError, InvalidInputError
from rnlshrink.portfolio import (
    BacktestConfig,
    ReturnPanel,
    as_panel,
    drift_weights,
    gmv_weights,
    metrics,
    rolling_backtest,
    turnover,
)


def _iid_panel(T, N, seed, vol=0.01):
    return as_panel(vol * np.random.default_rng(seed).standard_normal((T, N)))


def test_gmv_analytic_cases():
    np.testing.assert_allclose(gmv_weights(np.eye(4)), np.full(4, 0.25), atol=1e-12)
    np.testing.assert_allclose(gmv_weights(np.diag([1.0, 2.0])), [2 / 3, 1 / 3], atol=1e-12)
    np.testing.assert_allclose(gmv_weights(np.diag([1.0, 2.0, 4.0])), np.array([4, 2, 1]) / 7, atol=1e-12)
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(gmv_weights(7.5 * S), gmv_weights(S), atol=1e-15)


def test_gmv_errors():
    with pytest.raises(EstimationError):
        gmv_weights(np.diag([1.0, -1.0]))
    with pytest.raises(EstimationError):
        gmv_weights(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_gmv_minimises_variance():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((30, 6))
    S = B.T @ B / 30
    w = gmv_weights(S)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    base = w @ S @ w
    for _ in range(100):
        d = rng.standard_normal(6)
        d -= d.mean()
        assert (w + d) @ S @ (w + d) >= base - 1e-10


def test_drift_and_turnover_hand_example():
    R = np.column_stack([np.full(21, 1.1 ** (1 / 21) - 1), np.zeros(21)])
    w_hold = drift_weights([0.5, 0.5], R)
    np.testing.assert_allclose(w_hold, [11 / 21, 10 / 21], atol=1e-12)
    assert turnover([0.5, 0.5], w_hold) == pytest.approx(2 * abs(0.5 - 11 / 21), abs=1e-12)


def test_turnover_trivial_cases():
    w = np.array([0.2, 0.3, 0.5])
    assert turnover(w, drift_weights(w, np.zeros((21, 3)))) == 0.0
    assert drift_weights([1.0], np.array([[0.05], [-0.02]]))[0] == 1.0
    w2 = np.array([0.5, 0.5, 0.0])
    assert turnover(w2, drift_weights(w, np.zeros((5, 3)))) == pytest.approx(np.abs(w2 - w).sum(), abs=1e-15)
    with pytest.raises(DegenerateInputError):
        drift_weights([1.0, -1.0], np.zeros((3, 2)))


def test_metrics_hand_examples():
    m = metrics([0.01, 0.02, 0.005])
    assert m.MD == 0.0
    m = metrics([-0.2, 0.125])  # wealth 1 -> 0.8 -> 0.9
    assert m.MD == pytest.approx(0.2, abs=1e-12)
    assert m.TR == pytest.approx(-0.1, abs=1e-12)
    m = metrics(np.full(30, 0.001))
    assert m.SD == 0.0
    assert m.AV == pytest.approx(0.252, abs=1e-12)
    with pytest.raises(DegenerateInputError):
        m.IR
    with pytest.raises(InvalidInputError):
        metrics([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=60))
def test_metrics_against_loops(r):
    m = metrics(r)
    assert m.MD == pytest.approx(max_drawdown_loop(r), abs=1e-12)
    assert m.AV == pytest.approx(252 * sum(r) / len(r), abs=1e-10)
    assert m.TR == pytest.approx(math.prod(1 + x for x in r) - 1, abs=1e-10)
    mean = sum(r) / len(r)
    sd = math.sqrt(sum((x - mean) ** 2 for x in r) / (len(r) - 1)) * math.sqrt(252)
    assert m.SD == pytest.approx(sd, abs=1e-10)


def test_backtest_month_count_and_weights():
    report = rolling_backtest(_iid_panel(600, 3, 1), BacktestConfig(p=3, estimator="sample"))
    assert len(report.months) == 16
    assert report.returns.shape == (16 * 21,)
    for m in report.months:
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert report.turnovers.shape == (15,)


@pytest.mark.parametrize("method", ["sample", "ls", "nl", "rnl", "rcnl"])
def test_identity_truth_gives_near_equal_weights(method):
    report = rolling_backtest(_iid_panel(252 + 21 * 12, 2, 5), BacktestConfig(p=2, estimator=method))
    assert max(np.abs(m.weights - 0.5).max() for m in report.months) <= 0.1


def test_backtest_is_deterministic():
    panel = _iid_panel(400, 5, 2)
    cfg = BacktestConfig(p=4, estimator="rnl")
    assert rolling_backtest(panel, cfg).to_json() == rolling_backtest(panel, cfg).to_json()


def test_backtest_too_short():
    with pytest.raises(InvalidInputError, match="273"):
        rolling_backtest(_iid_panel(100, 3, 0), BacktestConfig(p=3))


def test_hold_returns_follow_fixed_shares():
    panel = _iid_panel(252 + 21, 3, 7)
    report = rolling_backtest(panel, BacktestConfig(p=3, estimator="sample"))
    w = report.months[0].weights
    R = panel.returns[252:273]
    wealth = np.sum(w * np.prod(1 + R, axis=0))
    assert np.prod(1 + report.returns) == pytest.approx(wealth, rel=1e-12)


def test_eligibility_rules():
    R = 0.01 * np.random.default_rng(3).standard_normal((252 + 42, 4))
    R[:40, 0] = np.nan  # too many gaps in the first window only
    R[260, 1] = np.nan  # gap inside the first holding period
    R[10:20, 2] = np.nan  # tolerated gaps, filled with 0
    report = rolling_backtest(as_panel(R), BacktestConfig(p=4, estimator="sample"))
    assert report.months[0].assets == ("a2", "a3")
    assert report.months[1].assets == ("a0", "a1", "a2", "a3")


def test_caps_select_largest_at_window_end():
    T, N = 252 + 21, 4
    R = 0.01 * np.random.default_rng(4).standard_normal((T, N))
    caps = np.tile([4.0, 3.0, 2.0, 1.0], (T, 1))
    caps[251] = [1.0, 5.0, 2.0, 6.0]
    panel = ReturnPanel(as_panel(R).dates, ("a", "b", "c", "d"), R, caps)
    report = rolling_backtest(panel, BacktestConfig(p=2, estimator="sample"))
    assert report.months[0].assets == ("b", "d")


def test_failed_month_falls_back_to_equal_weights():
    calls = []

    def flaky(X):
        calls.append(1)
        if len(calls) == 2:
            raise EstimationError("boom")
        return np.cov(X, rowvar=False)

    report = rolling_backtest(_iid_panel(252 + 63, 3, 8), BacktestConfig(p=3), estimator=flaky)
    assert report.flagged == 1
    assert report.months[1].flagged
    np.testing.assert_allclose(report.months[1].weights, np.full(3, 1 / 3))
    assert report.summary()["flagged_months"] == 1


def test_gmv_volatility_matches_theory():
    vol, N = 0.01, 10
    report = rolling_backtest(_iid_panel(252 + 21 * 60, N, 11, vol), BacktestConfig(p=N, estimator="ls"))
    theory = vol / math.sqrt(N) * math.sqrt(252)
    assert report.stats.SD == pytest.approx(theory, rel=0.08)


def test_csv_loader_and_report_outputs(tmp_path):
    lines = ["date,x,y"]
    rng = np.random.default_rng(0)
    dates = np.datetime64("2020-01-01") + np.arange(300)
    for i, d in enumerate(dates):
        a, b = rng.normal(0, 0.01, 2)
        lines.append(f"{d},{'' if i == 5 else a},{b}")
    path = tmp_path / "r.csv"
    path.write_text("\n".join(lines) + "\n")
    panel = ReturnPanel.from_csv(path)
    assert panel.assets == ("x", "y") and panel.n_days == 300
    assert math.isnan(panel.returns[5, 0])
    report = rolling_backtest(panel, BacktestConfig(p=2, estimator="rcnl"))
    doc = json.loads(report.to_json(tmp_path / "rep.json"))
    assert set(doc["metrics"]) >= {"SD", "TO", "AV", "TR", "MD", "IR"}
    assert len(doc["months"]) == 2
    assert sum(doc["months"][0]["weights"].values()) == pytest.approx(1.0)
    assert report.to_csv().splitlines()[0] == "metric,value"


def test_panel_validation(tmp_path):
    with pytest.raises(InvalidInputError):
        ReturnPanel(("2020-01-02", "2020-01-01"), ("a",), np.zeros((2, 1)))
    with pytest.raises(InvalidInputError):
        ReturnPanel(("2020-01-01", "2020-01-02"), ("a",), np.array([[0.0], [np.inf]]))
    with pytest.raises(InvalidInputError):
        ReturnPanel(("2020-01-01",), ("a", "b"), np.zeros((1, 1)))
    bad = tmp_path / "bad.csv"
    bad.write_text("date,a\nnot-a-date,0.1\n")
    with pytest.raises(InvalidInputError):
        ReturnPanel.from_csv(bad)


def test_config_validation():
    with pytest.raises(InvalidInputError):
        BacktestConfig(estimation_window=21, holding_period=21)
    with pytest.raises(InvalidInputError):
        BacktestConfig(p=1)
    with pytest.raises(InvalidInputError):
        BacktestConfig(estimator="magic")
