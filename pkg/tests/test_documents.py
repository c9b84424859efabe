import json

import numpy as np
import pytest

from uiobank import InvalidInput, build, catalog, documents, enumerate_bank, metrics, simulate
from uiobank.control import design_switching_gains, search_certificate


@pytest.mark.parametrize("example", range(1, 7))
def test_scenario_round_trip_reproduces_trace(example, tmp_path):
    s = catalog.scenario(example, seed=4)
    path = tmp_path / "s.json"
    documents.write_json(path, documents.scenario_to_dict(s))
    s2 = documents.load_scenario(path)
    assert documents.scenario_to_dict(s2) == documents.scenario_to_dict(s)
    assert documents.trace_to_csv(simulate(s2)) == documents.trace_to_csv(simulate(s))


def test_plant_path_relative_to_scenario(tmp_path):
    (tmp_path / "plants").mkdir()
    documents.write_json(tmp_path / "plants" / "p.json", documents.plant_to_dict(catalog.plant(1)))
    doc = documents.scenario_to_dict(catalog.scenario(1))
    doc["plant"] = "plants/p.json"
    documents.write_json(tmp_path / "s.json", doc)
    s = documents.load_scenario(tmp_path / "s.json")
    assert np.array_equal(s.plant.A, catalog.plant(1).A)


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.update(horizn=3), "unknown keys"),
    (lambda d: d.pop("plant"), "missing 'plant'"),
    (lambda d: d.update(horizon=2.5), "integer"),
    (lambda d: d.update(horizon=0), "horizon"),
    (lambda d: d["attacks"][0].update(channel="x"), "scenario"),
    (lambda d: d["attacks"][0].update(kind="triangle"), "signal kind"),
    (lambda d: d.update(x0={"kind": "lognormal"}), "x0 kind"),
    (lambda d: d.update(isolation={"eps": -1}), "eps"),
    (lambda d: d.update(tolerances={"rank_tol": 0}), "rank_tol"),
    (lambda d: d["plant"].update(A=[[1, 2], [3]]), "ragged"),
    (lambda d: d["plant"].pop("C"), "missing matrices"),
])
def test_scenario_rejects(mutate, match):
    doc = documents.scenario_to_dict(catalog.scenario(1))
    mutate(doc)
    with pytest.raises(InvalidInput, match=match):
        documents.scenario_from_dict(doc)


def test_bad_files(tmp_path):
    with pytest.raises(InvalidInput, match="cannot read"):
        documents.load_plant(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(InvalidInput, match="invalid JSON"):
        documents.load_plant(tmp_path / "bad.json")


def test_x0_as_list_means_fixed():
    doc = documents.scenario_to_dict(catalog.scenario(1))
    doc["x0"] = [1.0, 2.0]
    s = documents.scenario_from_dict(doc)
    assert s.x0.kind == "fixed" and s.x0.value == (1.0, 2.0)


def test_csv_column_order():
    header = documents.trace_header(3, 3, 4)
    assert header[:4] == ["k", "x_1", "x_2", "x_3"]
    expected = (["k"] + [f"x_{i}" for i in (1, 2, 3)] + [f"u_{i}" for i in (1, 2, 3)]
                + [f"au_{i}" for i in (1, 2, 3)] + [f"ay_{i}" for i in (1, 2, 3, 4)]
                + [f"y_{i}" for i in (1, 2, 3, 4)] + [f"xhat_{i}" for i in (1, 2, 3)]
                + ["sigma", "pi_min"] + [f"auhat_{i}" for i in (1, 2, 3)]
                + [f"ayhat_{i}" for i in (1, 2, 3, 4)] + ["Wu", "Wy", "rho"])
    assert header == expected


def test_csv_values_round_trip():
    s = catalog.scenario(6, seed=1)
    t = simulate(s)
    cols = documents.read_trace_csv_text(documents.trace_to_csv(t))
    assert np.array_equal(np.array(cols["x_2"], dtype=float), t.x[:, 1])
    assert cols["auhat_1"][0] == "nan"
    assert cols["rho"][-1] == "1;2"
    assert cols["Wu"][-1] == "3" and cols["Wy"][-1] == "2"
    assert cols["Wu"][0] == ""
    assert "/" in cols["sigma"][-1]


def test_plot_data_is_two_column(tmp_path):
    t = simulate(catalog.scenario(1, seed=0, horizon=12))
    paths = documents.write_plot_data(t, tmp_path)
    assert {p.name for p in paths} >= {"error_norm.dat", "x_1.dat", "ayhat_4.dat"}
    rows = (tmp_path / "x_1.dat").read_text().splitlines()
    assert len(rows) == 12
    k, v = rows[3].split()
    assert int(k) == 3 and float(v) == t.x[3, 0]


def test_bank_and_gain_export():
    P = catalog.plant(2)
    spec = enumerate_bank(P, "partial", (1, 1), prune_infeasible=True)
    doc = documents.bank_to_dict(spec, P)
    assert doc["size"] == 23 and len(doc["dropped"]) == 7
    d0 = doc["designs"][0]
    assert d0["J_u"] == [1] and d0["J_s"] == [1, 2, 3]
    assert np.array(d0["N"]).shape == (3, 3) and np.array(d0["L"]).shape == (3, 3)
    assert d0["max_residual"] <= 1e-8
    table = design_switching_gains(catalog.plant(6), 2)
    g = documents.gains_to_dict(table, search_certificate(table))
    assert len(g["gains"]) == 7
    json.dumps(g)


def test_summary_is_strict_json():
    s = catalog.scenario(1, seed=0)
    setup = build(s)
    t = simulate(s, setup)
    doc = documents.summary_dict(t, setup, metrics(t))
    text = json.dumps(doc, allow_nan=False)
    assert json.loads(text)["bank"]["size"] == 10


def test_render_key():
    spec = enumerate_bank(catalog.plant(2), "partial", (1, 0))
    assert documents.render_key(spec.primary[0]) == "1/1;2;3;4"
    assert documents.render_key(None) == ""
