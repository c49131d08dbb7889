import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcintent import kernels
from tcintent._accel import python_impl
from tcintent.queue_twin import (
    AqmPolicy,
    InstabilityError,
    QueueDomainError,
    QueueParams,
    SemanticModel,
    analytic_waits,
    build_semantic_model,
    derive_service_rates,
    draw_traffic,
    round_sig,
    simulate,
)
from tests.oracles import cobham_waits


@pytest.mark.parametrize("kwargs", [
    dict(lambda_high=-1.0),
    dict(lambda_high=math.nan),
    dict(mu_high=0.0),
    dict(mu_low=-2.0),
    dict(u_target=1.0),
    dict(u_target=0.0),
    dict(capacity=0),
    dict(capacity=2.5),
])
def test_params_reject_out_of_domain(kwargs):
    base = dict(lambda_high=1.0, lambda_low=1.0, mu_high=4.0, mu_low=4.0, u_target=0.5, capacity=10)
    base.update(kwargs)
    with pytest.raises(QueueDomainError):
        QueueParams(**base)


def test_params_round_trip_and_loads():
    p = QueueParams(0.3, 0.5, 2.0, 1.0, 0.7, 12)
    assert p.rho_high == pytest.approx(0.15)
    assert p.rho == pytest.approx(0.65)
    assert QueueParams.from_dict(p.to_dict()) == p
    assert p.to_dict()["aqm_policy"] == "DropTail"
    assert p.aqm_policy is AqmPolicy.DROP_TAIL


def test_service_rate_derivation():
    assert derive_service_rates(3.0, 1.0, 0.8) == (5.0, 5.0)
    p = QueueParams.from_target(30.0, 70.0, 0.5, 8)
    assert p.mu_high == p.mu_low == 200.0
    assert p.rho == pytest.approx(0.5)
    with pytest.raises(QueueDomainError):
        derive_service_rates(0.0, 0.0, 0.5)


def test_analytic_hand_case():
    # R = 0.6, W1 = 0.6 / 0.7, W2 = 0.6 / (0.7 * 0.4)
    w1, w2 = analytic_waits(QueueParams(0.3, 0.3, 1.0, 1.0, 0.6, 10))
    assert w1 == pytest.approx(6 / 7)
    assert w2 == pytest.approx(15 / 7)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(0.5, 20), st.floats(0.5, 20))
def test_analytic_matches_first_principles_oracle(lh, ll, mh, ml):
    p = QueueParams(lh, ll, mh, ml, 0.5, 10)
    if p.rho >= 1:
        with pytest.raises(InstabilityError):
            analytic_waits(p)
        return
    got = analytic_waits(p)
    want = cobham_waits(lh, ll, mh, ml)
    assert got == pytest.approx(want, rel=1e-12)
    assert got[0] <= got[1]


def test_analytic_rejects_overload():
    with pytest.raises(InstabilityError):
        analytic_waits(QueueParams(1.0, 1.0, 1.5, 1.5, 0.5, 10))


def _params(rho=0.8, share=0.4, capacity=50):
    return QueueParams.from_target(share * 100.0, (1 - share) * 100.0, rho, capacity)


def test_simulation_is_deterministic_per_seed():
    p = _params()
    a = simulate(p, 200.0, seed=11)
    b = simulate(p, 200.0, seed=11)
    c = simulate(p, 200.0, seed=12)
    assert a == b
    assert a != c


def test_jit_and_python_kernels_agree():
    p = _params(rho=0.95, capacity=6)
    fast = simulate(p, 60.0, seed=5)
    slow = simulate(p, 60.0, seed=5, kernel=python_impl(kernels.priority_queue_kernel))
    assert fast == slow


@pytest.mark.parametrize("capacity", [1, 2, 5, 200])
def test_conservation_holds_exactly(capacity):
    m = simulate(_params(rho=0.97, capacity=capacity), 150.0, seed=capacity)
    for cls in ("high", "low"):
        c = m.counts[cls]
        assert c.offered == c.served + c.dropped + c.in_system
    assert sum(c.in_system for c in m.counts.values()) <= capacity


def test_capacity_one_means_no_queueing():
    m = simulate(_params(rho=0.9, capacity=1), 100.0, seed=3)
    assert m.avg_wait_high == 0.0
    assert m.avg_wait_low == 0.0
    assert m.drop_rate_high > 0 and m.drop_rate_low > 0


def test_single_class_traffic():
    p = QueueParams(0.0, 50.0, 100.0, 100.0, 0.5, 100)
    m = simulate(p, 400.0, seed=1)
    assert m.counts["high"].offered == 0
    assert m.avg_wait_high == 0.0 and m.drop_rate_high == 0.0
    # M/M/1 FIFO: Wq = rho / (mu - lambda) = 0.5 / 50
    assert m.avg_wait_low == pytest.approx(0.01, rel=0.08)


def test_littles_law_per_class():
    p = _params(rho=0.85, share=0.5, capacity=10_000)
    m = simulate(p, 3000.0, seed=9)
    window = m.horizon - m.warmup
    for cls, lam, w, q in (("high", p.lambda_high, m.avg_wait_high, m.mean_queue_high),
                           ("low", p.lambda_low, m.avg_wait_low, m.mean_queue_low)):
        arrivals = m.offered_window[cls] / window
        assert arrivals == pytest.approx(lam, rel=0.02)
        assert q == pytest.approx(arrivals * w, rel=0.03)


def test_utilisation_tracks_offered_load():
    m = simulate(_params(rho=0.6, capacity=10_000), 2000.0, seed=2)
    assert m.u_actual == pytest.approx(0.6, abs=0.01)


def test_high_class_waits_less():
    m = simulate(_params(rho=0.8), 1000.0, seed=4)
    assert m.avg_wait_high < m.avg_wait_low


def test_traffic_draw_is_kernel_independent_and_sorted():
    arr_h, svc_h, arr_l, svc_l = draw_traffic(_params(), 50.0, seed=1)
    assert np.all(np.diff(arr_h) > 0) and np.all(np.diff(arr_l) > 0)
    assert arr_h[-1] <= 50.0 and arr_l[-1] <= 50.0
    assert svc_h.shape == arr_h.shape and svc_l.shape == arr_l.shape


def test_bad_horizon():
    with pytest.raises(QueueDomainError):
        simulate(_params(), 0.0, seed=1)
    with pytest.raises(QueueDomainError):
        simulate(_params(), math.inf, seed=1)


def test_round_sig():
    assert round_sig(0.14216) == 0.142
    assert round_sig(0.0039871) == 0.00399
    assert round_sig(0.0) == 0.0
    assert round_sig(123456.0) == 123000.0


def test_semantic_model_thresholds_and_round_trip(tmp_path):
    p = _params(rho=0.9, capacity=20)
    m = simulate(p, 200.0, seed=8)
    s = build_semantic_model(p, m, label="unit")
    assert [t.metric for t in s.thresholds] == ["avg_wait_high", "avg_wait_low", "drop_rate_high", "drop_rate_low"]
    assert s.threshold("avg_wait_low").value == round_sig(m.avg_wait_low)
    path = tmp_path / "s.json"
    s.save(path)
    assert SemanticModel.load(path) == s


def test_semantic_model_rejects_unknown_metric(voice_model):
    d = voice_model.to_dict()
    d["thresholds"][0]["metric"] = "jitter"
    with pytest.raises(QueueDomainError):
        SemanticModel.from_dict(d)


def test_voice_fixture_values(voice_model):
    values = {t.metric: t.value for t in voice_model.thresholds}
    assert values == {"avg_wait_high": 0.142, "avg_wait_low": 0.391, "drop_rate_high": 0.004,
                      "drop_rate_low": 0.028}


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.floats(0.9, 0.99), st.floats(0.2, 0.8), st.integers(0, 2**31))
def test_drop_precedence_small_buffers(capacity, rho, share, seed):
    m = simulate(_params(rho=rho, share=share, capacity=capacity), 40.0, seed=seed)
    assert m.drop_rate_low >= m.drop_rate_high


def test_metrics_round_trip():
    m = simulate(_params(), 20.0, seed=1)
    assert type(m).from_dict(m.to_dict()) == m
    assert dataclasses.asdict(m)["seed"] == 1


def test_capacity_one_drops_both_classes_alike():
    # Only the packet in service fits and it cannot be evicted, so both classes see the same blocking.
    m = simulate(_params(rho=0.95, share=0.5, capacity=1), 2000.0, seed=6)
    assert m.drop_rate_high == pytest.approx(m.drop_rate_low, abs=0.01)
