import json

import numpy as np
import pytest

from fdrbmf.driver import TrustConfig, trust_pal
from fdrbmf.evaluate import f_measure
from fdrbmf.synth import PlantedParams, make_instance


def test_all_zero_data_gives_rank_zero_after_one_round():
    run = trust_pal(np.zeros((40, 30), dtype=np.uint8), TrustConfig(p_hat=0.1, delta_r=5))
    assert run.rank == 0
    assert run.total_rounds == 1
    assert run.stop_reason == "rank_gap"


@pytest.mark.parametrize("method", ["density", "coherence"])
def test_planted_noiseless_recovers_rank(method):
    inst = make_instance(
        PlantedParams(n=80, m=100, r_star=3, d=0.3, p_plus=0.0, p_minus=0.0, seed=2)
    )
    run = trust_pal(inst.D, TrustConfig(p_hat=0.1, delta_r=5, method=method, seed=1))
    assert run.rank == 3
    assert run.total_rounds <= 2
    assert f_measure(run.factors, inst.planted) > 0.95


def test_fdr_accounting_and_budget():
    inst = make_instance(PlantedParams(n=120, m=150, r_star=5, d=0.2, seed=5))
    cfg = TrustConfig(p_hat=0.1, q=0.01, delta_r=4, seed=3)
    run = trust_pal(inst.D, cfg)
    assert run.rank >= 1
    for rec in run.rounds:
        assert rec.report.rank <= rec.budget
    kept = [c for c in run.certificates if c.accepted]
    assert len(kept) == run.rank
    assert sum(c.prob_bound for c in kept) / run.rank <= cfg.q
    for s in range(run.factors.n_columns):
        if run.factors.tile(s).empty:
            continue
        assert run.certificates[s].accepted


def test_deterministic_under_seed():
    inst = make_instance(PlantedParams(n=60, m=70, r_star=3, d=0.25, seed=8))
    cfg = TrustConfig(p_hat=0.1, delta_r=4, seed=21)
    a = trust_pal(inst.D, cfg)
    b = trust_pal(inst.D, cfg)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    np.testing.assert_array_equal(a.factors.X, b.factors.X)


def test_budget_cap_stops_the_loop():
    inst = make_instance(PlantedParams(n=60, m=60, r_star=6, d=0.25, p_plus=0, p_minus=0, seed=9))
    run = trust_pal(inst.D, TrustConfig(p_hat=0.05, delta_r=2, max_rank_budget=4, seed=0))
    assert run.rounds[-1].budget <= 4
    assert run.rank <= 4
    if run.stop_reason == "budget_exhausted":
        assert not (run.rounds[-1].budget - run.rank >= 2)


def test_config_validation_and_defaults():
    with pytest.raises(ValueError):
        TrustConfig(p_hat=0.1, q=0.0)
    with pytest.raises(ValueError):
        TrustConfig(p_hat=1.0)
    with pytest.raises(ValueError):
        TrustConfig(p_hat=0.1, method="entropy")
    cfg = TrustConfig(p_hat=0.1).resolved((320, 400))
    assert cfg.max_rank_budget == 160 and cfg.rank_gap == 10


def test_report_serializes():
    run = trust_pal(np.zeros((10, 10), dtype=np.uint8), TrustConfig(p_hat=0.1, delta_r=2))
    data = json.loads(json.dumps(run.to_dict(), allow_nan=False))
    assert data["rank"] == 0 and data["fdr_estimate"] is None
