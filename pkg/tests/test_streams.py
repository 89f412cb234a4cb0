import math

import numpy as np
import pytest

from coma.config import build_config
from coma.errors import ConfigError, DataError
from coma.online import LossTransform
from coma.streams import (
    block_bounds,
    block_schedule,
    parse_experts,
    read_stream_csv,
    run_block_shift,
    run_coma_stream,
    run_stream,
    synthetic_stream,
    telescoping_bound,
)


def test_block_schedule():
    b = block_bounds(1450)
    assert b[:5] == [(0, 50, 1), (50, 100, 2), (100, 150, 1), (150, 250, 2), (250, 350, 1)]
    assert b[-1] == (1350, 1450, 2)
    act = block_schedule(1450)
    assert act[1250] == 1 and act[1349] == 1 and act[1350] == 2


def test_read_stream_csv():
    s = read_stream_csv("t,x1,x2,y\n0,1,2,3\n1,4,5,6\n")
    assert s.names == ("x1", "x2") and s.y.tolist() == [3.0, 6.0]
    with pytest.raises(DataError, match=":3"):
        read_stream_csv("t,x1,y\n0,1,2\n1,a,3\n", "s.csv")
    with pytest.raises(DataError, match=":3"):
        read_stream_csv("t,x1,y\n5,1,2\n1,1,3\n", "s.csv")
    with pytest.raises(DataError, match=":1"):
        read_stream_csv("x1,y\n1,2\n", "s.csv")


def test_parse_experts():
    assert parse_experts("x1|x2|x1,lag2", ("x1", "x2")) == [["x1"], ["x2"], ["x1", "lag2"]]
    with pytest.raises(ConfigError):
        parse_experts("x3", ("x1", "x2"))
    with pytest.raises(ConfigError):
        parse_experts("x1||x2", ("x1", "x2"))


def test_constant_stream_keeps_uniform_weights():
    rep, run = run_stream(build_config("stream", seed=1, source="synthetic:constant", T=200))
    assert np.allclose(run.weights, 0.5)
    assert rep.summary["final_weight.1"] == pytest.approx(0.5)


def test_iid_stream_finds_best_expert():
    rep, run = run_stream(build_config("stream", seed=3, source="synthetic:iid", T=1500, experts="x1|x2|x3"))
    assert rep.summary["final_weight.1"] > 0.9
    assert rep.summary["hedge_loss"] - rep.summary["best_expert_loss"] < 0.02 * rep.summary["best_expert_loss"]


@pytest.mark.parametrize("mode", ["direct-aci", "decentralized-aci", "decentralized-tracking"])
def test_modes_run_and_check_length_bound(mode):
    rep, run = run_stream(build_config("stream", seed=2, mode=mode, T=400))
    assert rep.summary["length_bound_violations"] == 0
    assert len(run.t) == 400
    assert np.allclose(run.weights.sum(axis=1), 1.0)
    if mode == "decentralized-tracking":
        assert rep.summary["unbounded_rounds"] == 0


def test_direct_aci_telescoping():
    rep, run = run_stream(build_config("stream", seed=5, source="synthetic:shift", T=1000))
    gap, bound = telescoping_bound(run, 0.1, 0.005)
    assert gap <= bound + 1e-12
    assert rep.summary["miscoverage_gap"] == gap


def test_records_csv_layout():
    _, run = run_stream(build_config("stream", seed=1, T=120))
    lines = run.records_csv().splitlines()
    assert lines[0] == "t,level_1,level_2,merged,measure,hit,h,m,delta,eta,w_1,w_2"
    assert len(lines) == 121
    assert len(lines[1].split(",")) == 12


def test_lagged_expert_and_csv_source(tmp_path):
    rng = np.random.default_rng(0)
    n = 260
    x = rng.standard_normal(n)
    y = np.zeros(n)
    for t in range(1, n):
        y[t] = 0.8 * y[t - 1] + x[t] + 0.1 * rng.standard_normal()
    path = tmp_path / "s.csv"
    path.write_text("t,x1,y\n" + "".join(f"{t},{float(x[t])!r},{float(y[t])!r}\n" for t in range(n)))
    rep, run = run_stream(build_config("stream", seed=1, source=str(path), experts="x1|x1,lag1", T=0))
    assert len(run.t) == n - 101
    assert rep.summary["final_weight.2"] > 0.9


def test_randomized_votes_shrink():
    base = build_config("stream", seed=4, T=300, transform="arctan")
    _, plain = run_stream(base)
    _, rnd = run_stream(build_config("stream", seed=4, T=300, transform="arctan", randomize=True))
    assert np.nanmean(np.where(np.isinf(rnd.merged_len), np.nan, rnd.merged_len)) <= np.nanmean(
        np.where(np.isinf(plain.merged_len), np.nan, plain.merged_len)
    ) + 1e-9


def test_stream_too_short():
    with pytest.raises(DataError):
        run_coma_stream(
            synthetic_stream("iid", 50, np.random.default_rng(0)), [["x1"]], "direct-aci", 0.1, 0.005,
            LossTransform.arctan(),
        )


def test_block_shift_symmetric_and_frozen():
    rep = run_block_shift(build_config("blockshift", seed=1, B=10, T=400, symmetric=True))
    assert abs(rep.summary["mean_weight_1"] - 0.5) < 0.05
    rep0 = run_block_shift(build_config("blockshift", seed=1, B=2, T=300, gamma=0.0))
    assert "min_matching_weight" in rep0.summary
