import json
import math
import pathlib

import numpy as np
import pytest

import dscrd

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def relay_context():
    stat = dscrd.Observation([[3.0]], [[3.0]], "T")
    side = dscrd.Observation([[1.0]], [[1.0]], "y")
    return dscrd.build_context([[1.0]], stat, side)


def test_fuse_unit_case():
    a = dscrd.Observation([[1.0]], [[1.0]], "a")
    b = dscrd.Observation([[1.0]], [[1.0]], "b")
    t = dscrd.fuse([a, b])
    assert t.mixing[0, 0] == pytest.approx(2.0)
    assert t.noise_cov[0, 0] == pytest.approx(2.0)


def test_backward_channel_and_node_statistic():
    H, eta = dscrd.backward_channel([[1.0]], [[0.25]])
    assert H[0, 0] == pytest.approx(0.75)
    assert eta[0, 0] == pytest.approx(0.1875)
    own = dscrd.Observation([[1.0]], [[1.0]])
    t = dscrd.node_statistic([[1.0]], own, [np.array([[0.25]])])
    assert t.mixing[0, 0] == pytest.approx(4.0)


def test_context_rate_and_scheme():
    ctx = relay_context()
    assert ctx.cond_side[0, 0] == pytest.approx(0.5)
    assert ctx.cond_stat_side[0, 0] == pytest.approx(0.2)
    assert ctx.classify([[0.3]]) == "strict"
    assert ctx.classify([[0.1]]) == "infeasible"
    assert ctx.rate([[0.3]]) == pytest.approx(0.5 * math.log2(3.0), abs=1e-12)
    assert ctx.distortion(1.0 / 3.0)[0, 0] == pytest.approx(0.3)
    s = dscrd.design_scheme(ctx, [[0.3]])
    assert s.nu_cov[0, 0] == pytest.approx(0.15)
    assert s.achieved_rate() == pytest.approx(ctx.rate([[0.3]]), abs=1e-12)
    assert s.achieved_distortion()[0, 0] == pytest.approx(0.3)


def test_errors_map_to_exceptions():
    ctx = relay_context()
    with pytest.raises(dscrd.InfeasibleTargetError):
        ctx.rate([[0.1]])
    with pytest.raises(dscrd.ModelError):
        dscrd.Observation([[1.0]], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(dscrd.ModelError):
        dscrd.load_config(str(FIXTURES / "cycle.json"))


def test_appendix_routes_agree():
    stat = dscrd.Observation(np.eye(2), np.diag([0.5, 2.0]), "T")
    side = dscrd.Observation(np.eye(2), np.diag([1.5, 0.3]), "y")
    r = dscrd.appendix_c_matrix(np.eye(2), stat, side)
    assert r["route_gap"] <= 1e-8
    assert abs(r["det"]) > 1e-6


def test_network_evaluation_and_sweep():
    net = dscrd.load_config(str(FIXTURES / "relay2.json"))
    assert net.topo_order() == ["i", "j"]
    rep = dscrd.evaluate(net)
    assert rep.node("j").rate_bits == pytest.approx(0.79248, abs=1e-4)
    assert rep.sum_rate_bits == pytest.approx(sum(n.rate_bits for n in rep.nodes))
    rows = dscrd.sweep(net, "j", [0.25, 0.5, 1.0])
    assert rows[-1] == (1.0, 0.0)
    assert dscrd.parse_config(net.to_json()).to_json() == net.to_json()


def test_run_matches_cli_contract():
    code, out, err = dscrd.run("rate", str(FIXTURES / "chain3.json"))
    assert code == 0
    assert out == (FIXTURES / "chain3_rate.json").read_text()
    code, out, err = dscrd.run("rate", str(FIXTURES / "infeasible.json"))
    assert code == 2
    assert "infeasible" in err


def test_simulate_is_deterministic():
    own = dscrd.Observation([[1.0]], [[1.0]])
    a = dscrd.simulate([[1.0]], own, seed=3, samples=5000)
    b = dscrd.simulate([[1.0]], own, seed=3, samples=5000)
    assert set(a) == {"x", "y", "T"}
    assert np.array_equal(a["x"], b["x"])
    x = a["x"]
    assert abs((x @ x.T)[0, 0] / x.shape[1] - 1.0) < 0.1
