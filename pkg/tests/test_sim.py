from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from uiobank import (
    DesignInfeasible, InvalidInput, SimulationDiverged, UnstabilizableConfiguration, build,
    catalog, documents, metrics, replay_check, simulate,
)
from uiobank.sim import (
    AttackSignal, InitialState, InputPolicy, Scenario, Signal, decay_rate, stream_rng,
    support_respected,
)

GOLDEN = Path(__file__).parent / "golden"


def test_unforced_stable_plant_decays():
    s = Scenario(catalog.plant(1), input=InputPolicy("open_loop", Signal("zero")),
                 estimator="complete", horizon=80)
    t = simulate(s)
    assert np.linalg.norm(t.x_final) < 1e-4 * max(1, np.linalg.norm(t.x[0]))
    assert np.linalg.norm(t.error[-1]) < 1e-12


@pytest.mark.parametrize("example", range(1, 7))
def test_examples_replay_and_respect_support(example):
    s = catalog.scenario(example, seed=2)
    t = simulate(s)
    assert len(t) == s.horizon
    assert replay_check(t, s)
    assert support_respected(t, s)


def test_replay_detects_corruption():
    s = catalog.scenario(2, seed=0)
    t = simulate(s)
    t.x[17, 1] += 1e-6
    assert not replay_check(t, s)


@pytest.mark.parametrize("example", range(1, 7))
def test_same_seed_gives_byte_identical_csv(example):
    a = documents.trace_to_csv(simulate(catalog.scenario(example, seed=7)))
    b = documents.trace_to_csv(simulate(catalog.scenario(example, seed=7)))
    assert a == b
    c = documents.trace_to_csv(simulate(catalog.scenario(example, seed=8)))
    assert a != c


@pytest.mark.parametrize("example", range(1, 7))
def test_matches_golden_trace(example):
    s = catalog.scenario(example, seed=0)
    t = simulate(s)
    assert replay_check(t, s)
    fresh = documents.read_trace_csv_text(documents.trace_to_csv(t))
    gold = documents.read_trace_csv(GOLDEN / f"example{example}_seed0.csv")
    assert list(fresh) == list(gold)
    for col in gold:
        if col in ("sigma", "Wu", "Wy", "rho"):
            assert fresh[col] == gold[col], col
        else:
            a = np.array(fresh[col], dtype=float)
            b = np.array(gold[col], dtype=float)
            assert np.allclose(a, b, rtol=1e-9, atol=1e-12, equal_nan=True), col


def test_streams_are_independent():
    s = catalog.scenario(1, seed=3)
    t1 = simulate(s)
    s2 = replace(s, attacks=[])
    t2 = simulate(s2)
    assert np.array_equal(t1.x[0], t2.x[0])
    assert np.array_equal(t1.u, t2.u)
    a = stream_rng(3, 1001).uniform(size=3)
    b = stream_rng(3, 1002).uniform(size=3)
    assert not np.allclose(a, b)


def test_switched_off_actuator_gets_nothing():
    s = catalog.scenario(6, seed=1)
    t = simulate(s)
    for k in range(t.warmup, len(t)):
        assert 3 not in t.rho[k]
        assert t.u[k, 2] == 0.0 and t.a_u[k, 2] == 0.0
    assert np.any(t.a_u_injected[t.warmup:, 2] != 0)


def test_estimator_none_open_loop():
    s = Scenario(catalog.plant(1), estimator="none", horizon=30,
                 input=InputPolicy("open_loop", Signal("uniform")))
    t = simulate(s)
    assert np.all(np.isnan(t.xhat))
    assert all(len(W) == 0 for W in t.W_u)
    assert replay_check(t, s)


def test_divergence_guard_names_step():
    s = Scenario(catalog.plant(5), estimator="none", horizon=200,
                 input=InputPolicy("open_loop", Signal("constant", value=1.0)))
    with pytest.raises(SimulationDiverged) as exc:
        simulate(s)
    assert 0 < exc.value.step <= 200


def test_divergence_under_wrong_gain():
    s = catalog.scenario(5, seed=0, horizon=400)
    s.input = InputPolicy("static_feedback", K=np.zeros((2, 2)))
    with pytest.raises(SimulationDiverged):
        simulate(s)


@pytest.mark.parametrize("change,exc", [
    (dict(horizon=0), InvalidInput),
    (dict(estimator="magic"), InvalidInput),
    (dict(priority="q3"), InvalidInput),
    (dict(seed=-1), InvalidInput),
    (dict(attacks=[AttackSignal("sensor", 9, Signal("constant", value=1.0))]), InvalidInput),
    (dict(declared_W_y=(1,)), InvalidInput),
    (dict(estimator="none", input=InputPolicy("switching")), InvalidInput),
])
def test_scenario_validation(change, exc):
    with pytest.raises(exc):
        simulate(replace(catalog.scenario(1), **change))


def test_signal_validation():
    with pytest.raises(InvalidInput):
        Signal("triangle")
    with pytest.raises(InvalidInput):
        Signal("uniform", low=1.0, high=0.0)
    with pytest.raises(InvalidInput):
        Signal("constant", value=np.inf)
    with pytest.raises(InvalidInput):
        AttackSignal("cloud", 1, Signal())
    with pytest.raises(InvalidInput):
        AttackSignal("sensor", 0, Signal())


def test_signal_kinds():
    rng = np.random.default_rng(0)
    assert np.array_equal(Signal("impulse", value=2.0, at=3).generate(5, rng), [0, 0, 0, 2, 0])
    assert np.array_equal(Signal("samples", samples=(1, 2)).generate(4, rng), [1, 2, 0, 0])
    assert np.array_equal(Signal("constant", value=1.0, start=2).generate(4, rng), [0, 0, 1, 1])
    g = Signal("gaussian", mean=1.0, std=0.0).generate(3, rng)
    assert np.array_equal(g, [1, 1, 1])


def test_attack_beyond_redundancy_warns():
    s = catalog.scenario(1)
    s.attacks = s.attacks + [AttackSignal("sensor", 1, Signal("uniform"))]
    setup = build(s)
    assert any("exceed" in w for w in setup.warnings)


def test_pruned_bank_reports_coverage_gap():
    setup = build(catalog.scenario(2))
    assert any("covering" in w for w in setup.warnings)


def test_switching_bound_above_qstar_rejected():
    s = catalog.scenario(6)
    s.input = InputPolicy("switching", bound=3)
    with pytest.raises((UnstabilizableConfiguration, InvalidInput)):
        build(s)
    s2 = catalog.scenario(5)
    s2.input = InputPolicy("switching", bound=1)
    assert build(s2).gains.bound == 1


def test_complete_bank_needs_redundancy():
    s = replace(catalog.scenario(2), estimator="complete", indices=None)
    with pytest.raises(DesignInfeasible, match="no sensor redundancy"):
        build(s)


def test_auto_estimator_choice():
    assert build(replace(catalog.scenario(1), estimator="auto")).bank_spec.kind == "complete"
    spec = build(replace(catalog.scenario(2), estimator="auto", indices=None)).bank_spec
    assert spec.kind == "partial" and spec.indices == (1, 0)


def test_fixed_initial_state():
    s = replace(catalog.scenario(1), x0=InitialState("fixed", value=(1.0, -1.0)))
    assert np.array_equal(simulate(s).x[0], [1.0, -1.0])


def test_metrics():
    s = Scenario(catalog.plant(1), x0=InitialState("fixed", value=(0.0, 0.0)), xhat0=np.zeros(2),
                 input=InputPolicy("open_loop", Signal("zero")), estimator="complete", horizon=30)
    m = metrics(simulate(s))
    assert m["decay_rate"] is None
    assert m["W_u_settle_step"] == m["W_y_settle_step"] == 20
    m1 = metrics(simulate(catalog.scenario(1, seed=0)))
    assert m1["decay_rate"] < 1
    m5 = metrics(simulate(catalog.scenario(5, seed=0)))
    assert m5["terminal_state_norm"] <= 1e-6 * max(1, m5["initial_state_norm"])


def test_decay_rate_of_geometric_sequence():
    assert decay_rate(0.5 ** np.arange(20)) == pytest.approx(0.5)
    assert decay_rate([0.0, 0.0]) is None
