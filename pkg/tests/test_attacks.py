import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from uiobank import (
    IsolationPolicy, Isolator, InvalidInput, NotReady, catalog, isolate, reconstruct_actuator,
    reconstruct_sensor, simulate,
)
from uiobank.sim import AttackSignal, Signal


def test_reconstruction_is_exact_on_true_states():
    P = catalog.plant(2)
    rng = np.random.default_rng(1)
    x0, u, a = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    x1 = P.A @ x0 + P.B @ (u + a)
    assert np.allclose(reconstruct_actuator(x1, x0, u, P), a, atol=1e-12)
    a_y = rng.normal(size=4)
    assert np.allclose(reconstruct_sensor(P.C @ x1 + a_y, x1, P), a_y, atol=1e-12)


def _impulse_scenario(example, target, channel, at=30, value=5.0):
    s = catalog.scenario(example, seed=4, horizon=50)
    s.attacks = [AttackSignal(target, channel, Signal("impulse", value=value, at=at))]
    return s


@pytest.mark.parametrize("example,channel", [(3, 1), (4, 3)])
def test_actuator_estimate_lags_one_step(example, channel):
    t = simulate(_impulse_scenario(example, "actuator", channel))
    est = t.a_u_hat[:, channel - 1]
    assert est[31] == pytest.approx(5.0, abs=1e-8)
    assert np.max(np.abs(est[22:31])) < 1e-8
    assert np.max(np.abs(est[32:])) < 1e-8


def test_sensor_estimate_has_no_lag():
    t = simulate(_impulse_scenario(3, "sensor", 3))
    est = t.a_y_hat[:, 2]
    assert est[30] == pytest.approx(5.0, abs=1e-8)
    assert np.max(np.abs(np.delete(est[22:], 8))) < 1e-8


def brute_isolation(hist, k, policy):
    lo = max(0, k - policy.window + 1)
    with np.errstate(invalid="ignore"):
        hit = np.abs(hist[lo:k + 1]) > policy.eps
    return tuple(int(i) + 1 for i in np.flatnonzero(hit.any(axis=0)))


values = st.one_of(st.just(0.0), st.just(np.nan), st.floats(-2e-3, 2e-3), st.floats(-10, 10))


@given(arrays(float, st.tuples(st.integers(6, 30), st.integers(1, 4)), elements=values),
       st.integers(1, 5), st.integers(1, 6))
def test_isolator_matches_window_definition(hist, warmup, window):
    policy = IsolationPolicy(eps=1e-3, warmup=warmup, window=window)
    iso = Isolator(hist.shape[1], 1, policy)
    for k in range(hist.shape[0]):
        iso.update(k, hist[k], [0.0])
        if k < warmup:
            assert not iso.ready
            continue
        W_u, W_y = iso.sets()
        assert W_u.indices == brute_isolation(hist, k, policy)
        assert len(W_y) == 0


def test_isolate_from_histories():
    hu = np.zeros((25, 2))
    hy = np.zeros((25, 3))
    hu[:, 1] = 1.0
    hy[18, 0] = 1.0
    W_u, W_y = isolate(hu, hy, IsolationPolicy())
    assert W_u.indices == (2,) and W_y.indices == ()
    W_u, W_y = isolate(hu, hy, IsolationPolicy(), k=21)
    assert W_y.indices == (1,)
    with pytest.raises(NotReady):
        isolate(hu, hy, IsolationPolicy(), k=19)


def test_held_channel_keeps_membership():
    iso = Isolator(2, 1, IsolationPolicy(warmup=1, window=2))
    iso.update(0, [1.0, 0.0], [0.0])
    for k in range(1, 10):
        iso.update(k, [0.0, 0.0], [0.0], held=[1])
    assert iso.sets()[0].indices == (1,)
    iso.update(10, [0.0, 0.0], [0.0])
    iso.update(11, [0.0, 0.0], [0.0])
    assert iso.sets()[0].indices == ()


def test_isolator_rejects_out_of_order_steps():
    iso = Isolator(1, 1, IsolationPolicy())
    with pytest.raises(InvalidInput):
        iso.update(1, [0.0], [0.0])


@pytest.mark.parametrize("kw", [dict(eps=0), dict(eps=np.nan), dict(warmup=0), dict(window=0)])
def test_policy_validation(kw):
    with pytest.raises(InvalidInput):
        IsolationPolicy(**kw)
