import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domlab.games import CapabilityError, LemonsParams, gen_dir, gen_lemons
from domlab.iesds import iesds, reference_path
from domlab.learners import CapabilityMismatch
from domlab.simulate import (NoiseModel, RunConfig, TraceFormatError, checkpoint_schedule,
                             essential_elimination_report, poe, read_trace_csv, run_batch,
                             run_selfplay, stream_seed)


def test_poe_examples():
    path = iesds(gen_dir(3, 9))
    uni = np.full(3, 1 / 3)
    e = np.eye(3)
    assert poe(path, [uni, uni]) == pytest.approx(7 / 12)
    assert poe(path, [e[2], e[2]]) == 1
    assert poe(path, [e[0], e[0]]) == pytest.approx(1 / 8)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_poe_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    path = iesds(gen_dir(5, 11))
    v = poe(path, [rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))])
    assert 0 <= v <= 1


def test_poe_undefined_without_elimination():
    from domlab.games import TensorGame
    pennies = TensorGame(np.array([[[1, -1], [-1, 1]], [[-1, 1], [1, -1]]], dtype=float))
    with pytest.raises(ValueError):
        poe(iesds(pennies), [np.full(2, 0.5)] * 2)


def test_essential_report():
    profile = [np.array([0.0, 0.01, 0.99]), np.array([0.02, 0.0, 0.98])]
    rep = essential_elimination_report(profile, [(0, 0), (0, 1), (1, 0)], 1.0, 10, 2)
    assert rep["threshold"] == 0.0125
    assert [r["pass"] for r in rep["actions"]] == [True, True, False]
    assert not rep["all_pass"] and rep["l1_bound"] is None
    ok = essential_elimination_report(profile, [(0, 0)], 1.0, 10, 2)
    assert ok["all_pass"] and ok["l1_bound"] == 0.5


def test_checkpoint_schedule():
    cps = checkpoint_schedule(10**6)
    assert cps[0] == 0 and cps[-1] == 10**6
    assert all(b > a for a, b in zip(cps, cps[1:]))
    assert checkpoint_schedule(1) == [0, 1]


def test_stream_seeds_are_distinct():
    seeds = {stream_seed(s, i) for s in range(20) for i in range(10)}
    assert len(seeds) == 200
    assert stream_seed(5, 0) == 5


def test_t1_run_records_initial_state():
    g = gen_dir(3, 9)
    tr = run_selfplay(RunConfig(g, "exp3", 1), iesds(g))
    assert tr.times == [0, 1]
    assert tr.metrics["poe"][0] == pytest.approx(7 / 12)


def test_exact_ew_drives_down_dominated_action():
    g = gen_dir(3, 9)
    tr = run_selfplay(RunConfig(g, "ew", 100, feedback="exact", checkpoints=range(101)), iesds(g))
    p = np.array([d[0] for d in tr.dists])
    # the odds of action 1 against its dominator fall every step
    assert np.all(np.diff(np.log(p[:, 0] / p[:, 1])) < 0)
    # p_1 itself first rises while action 3 collapses, then falls for good
    assert np.all(np.diff(p[5:, 0]) < 0)
    assert p[-1, 0] < p[1, 0] / 3


def test_capability_checks():
    lemons = gen_lemons(LemonsParams.benchmark(4, quality_noise_std=1.0))
    with pytest.raises(CapabilityError):
        RunConfig(lemons, "ew", 10, feedback="exact")
    with pytest.raises(CapabilityMismatch):
        RunConfig(gen_dir(3, 9), "ew", 10)
    with pytest.raises(CapabilityMismatch):
        RunConfig(gen_dir(3, 9), "exp3", 10, feedback="exact")
    with pytest.raises(ValueError):
        RunConfig(gen_dir(3, 9), "exp3", 0)
    with pytest.raises(ValueError):
        NoiseModel("gaussian", -1)


def test_batched_seeds_match_single_runs():
    g = gen_dir(4, 9)
    path = iesds(g)
    cfg = RunConfig(g, ["exp3dh:b=0.2,beta=8", "exp3pswap"], 300, noise=NoiseModel.from_std(0.1))
    batch = run_batch(cfg, [3, 4], path)
    for tr in batch:
        cfg.seed = tr.seed
        single = run_selfplay(cfg, path)
        for a, b in zip(tr.dists, single.dists):
            for x, y in zip(a, b):
                np.testing.assert_array_equal(x, y)


def test_lemons_run_with_quality_noise():
    g = gen_lemons(LemonsParams.benchmark(6, quality_noise_std=5.0))
    tr = run_selfplay(RunConfig(g, "exp3dh:b=0.5,beta=5", 200, noise=NoiseModel.from_std(0.1)),
                      reference_path(g))
    assert 0 <= tr.final("poe") <= 1
    assert "ne_mass" in tr.metrics


def test_csv_round_trip_and_determinism(tmp_path):
    g = gen_dir(3, 9)
    cfg = RunConfig(g, "exp3", 50, noise=NoiseModel.from_std(0.1), seed=7)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_selfplay(cfg, iesds(g)).to_csv(a, dump_dists=True)
    run_selfplay(cfg, iesds(g)).to_csv(b, dump_dists=True)
    assert a.read_bytes() == b.read_bytes()
    metrics, dists = read_trace_csv(a)
    assert set(metrics[7]) == {"poe", "ne_mass", "max_dom_prob"}
    assert metrics[7]["poe"][0] == (0, pytest.approx(7 / 12))
    assert sum(dists[7][50][1].values()) == pytest.approx(1.0)


def test_malformed_csv_names_row(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,seed,agent,metric,value\n0,1,-1,poe,0.5\n1,1,-1,poe,oops\n")
    with pytest.raises(TraceFormatError, match="row 3"):
        read_trace_csv(bad)
    bad.write_text("a,b\n")
    with pytest.raises(TraceFormatError):
        read_trace_csv(bad)
