"""JSON plant/scenario documents, design exports and trace files.

Matrices are nested row-major arrays and index sets are sorted 1-based
integer arrays. Unknown keys are rejected so typos fail loudly.

Trace CSV columns, in this order::

    k, x_1..x_n, u_1..u_nu, au_1..au_nu, ay_1..ay_ny, y_1..y_ny,
    xhat_1..xhat_n, sigma, pi_min, auhat_1..auhat_nu, ayhat_1..ayhat_ny,
    Wu, Wy, rho

``au`` is the actuator attack that entered the plant. Sets are rendered as
semicolon-joined indices; a partial observer key renders as ``J_u/J_s``.
Floats use the shortest repr that round-trips.
"""
import csv
import io
import json
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .attacks import IsolationPolicy
from .errors import InvalidInput
from .matrix_core import Tolerances, spectral_radius
from .sim import AttackSignal, InitialState, InputPolicy, Scenario, Signal
from .uio import IndexSet, PlantModel


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc})") from None


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def _check_keys(doc, allowed, where):
    if not isinstance(doc, dict):
        raise InvalidInput(f"{where}: expected an object, got {type(doc).__name__}")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise InvalidInput(f"{where}: unknown keys {extra}")


def _matrix(M):
    return np.asarray(M, dtype=float).tolist()


# -- plants -------------------------------------------------------------------

def plant_from_dict(doc):
    _check_keys(doc, ("A", "B", "C", "name"), "plant")
    missing = [k for k in "ABC" if k not in doc]
    if missing:
        raise InvalidInput(f"plant: missing matrices {missing}")
    try:
        return PlantModel(*(doc[k] for k in "ABC"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"plant: {exc}") from None


def plant_to_dict(plant):
    return {"A": _matrix(plant.A), "B": _matrix(plant.B), "C": _matrix(plant.C)}


def load_plant(path):
    return plant_from_dict(load_json(path))


# -- scenarios ----------------------------------------------------------------

_SIGNAL_KEYS = tuple(f.name for f in fields(Signal))


def signal_from_dict(doc, where="signal"):
    _check_keys(doc, _SIGNAL_KEYS, where)
    doc = dict(doc)
    if "samples" in doc:
        doc["samples"] = tuple(doc["samples"])
    try:
        return Signal(**doc)
    except TypeError as exc:
        raise InvalidInput(f"{where}: {exc}") from None


def signal_to_dict(sig):
    defaults = Signal(kind=sig.kind)
    out = {"kind": sig.kind}
    for name in _SIGNAL_KEYS[1:]:
        value = getattr(sig, name)
        if value != getattr(defaults, name):
            out[name] = list(value) if name == "samples" else value
    return out


def _attack_from_dict(doc, i):
    where = f"attacks[{i}]"
    _check_keys(doc, ("target", "channel") + _SIGNAL_KEYS, where)
    if "target" not in doc or "channel" not in doc:
        raise InvalidInput(f"{where}: needs 'target' and 'channel'")
    rest = {k: v for k, v in doc.items() if k not in ("target", "channel")}
    return AttackSignal(doc["target"], int(doc["channel"]), signal_from_dict(rest, where))


def _x0_from(doc):
    if isinstance(doc, list):
        return InitialState("fixed", value=tuple(doc))
    _check_keys(doc, ("kind", "value", "mean", "std"), "x0")
    doc = dict(doc)
    if "value" in doc:
        doc["value"] = tuple(doc["value"])
    return InitialState(**doc)


def _input_from(doc):
    _check_keys(doc, ("kind", "signal", "K", "bound"), "input")
    kw = dict(doc)
    if "signal" in kw:
        kw["signal"] = signal_from_dict(kw["signal"], "input.signal")
    if kw.get("K") is not None:
        kw["K"] = np.array(kw["K"], dtype=float)
    return InputPolicy(**kw)


SCENARIO_KEYS = ("name", "plant", "x0", "xhat0", "input", "estimator", "indices",
                 "prune_infeasible", "priority", "attacks", "horizon", "seed",
                 "tolerances", "isolation", "bank_cap", "declared_W_u", "declared_W_y")


def scenario_from_dict(doc, base_dir=None):
    """Build a :class:`Scenario`; ``plant`` may be inline or a path relative to ``base_dir``."""
    try:
        return _scenario_from_dict(doc, base_dir)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"scenario: {exc}") from None


def _scenario_from_dict(doc, base_dir):
    _check_keys(doc, SCENARIO_KEYS, "scenario")
    if "plant" not in doc:
        raise InvalidInput("scenario: missing 'plant'")
    plant_doc = doc["plant"]
    if isinstance(plant_doc, str):
        path = Path(plant_doc)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        plant_doc = load_json(path)
    kw = {"plant": plant_from_dict(plant_doc)}
    for key in ("name", "estimator", "prune_infeasible", "priority", "horizon", "seed",
                "bank_cap"):
        if key in doc:
            kw[key] = doc[key]
    if "x0" in doc:
        kw["x0"] = _x0_from(doc["x0"])
    if doc.get("xhat0") is not None:
        kw["xhat0"] = np.array(doc["xhat0"], dtype=float)
    if "input" in doc:
        kw["input"] = _input_from(doc["input"])
    if doc.get("indices") is not None:
        kw["indices"] = tuple(int(i) for i in doc["indices"])
    if "attacks" in doc:
        kw["attacks"] = [_attack_from_dict(a, i) for i, a in enumerate(doc["attacks"])]
    if "tolerances" in doc:
        _check_keys(doc["tolerances"], [f.name for f in fields(Tolerances)], "tolerances")
        kw["tol"] = Tolerances(**doc["tolerances"])
    if "isolation" in doc:
        _check_keys(doc["isolation"], ("eps", "warmup", "window"), "isolation")
        kw["isolation"] = IsolationPolicy(**doc["isolation"])
    for key in ("declared_W_u", "declared_W_y"):
        if doc.get(key) is not None:
            kw[key] = tuple(int(i) for i in doc[key])
    for key in ("horizon", "seed", "bank_cap"):
        if key in kw and (isinstance(kw[key], bool) or not isinstance(kw[key], int)):
            raise InvalidInput(f"scenario: {key} must be an integer, got {kw[key]!r}")
    s = Scenario(**kw)
    s.validate()
    return s


def load_scenario(path):
    return scenario_from_dict(load_json(path), base_dir=Path(path).parent)


def scenario_to_dict(s):
    inp = {"kind": s.input.kind}
    if s.input.kind == "open_loop":
        inp["signal"] = signal_to_dict(s.input.signal)
    if s.input.K is not None:
        inp["K"] = _matrix(s.input.K)
    if s.input.bound is not None:
        inp["bound"] = int(s.input.bound)
    x0 = {"kind": s.x0.kind}
    if s.x0.kind == "fixed":
        x0["value"] = list(s.x0.value)
    else:
        x0.update(mean=s.x0.mean, std=s.x0.std)
    doc = {
        "name": s.name,
        "plant": plant_to_dict(s.plant),
        "x0": x0,
        "xhat0": None if s.xhat0 is None else np.asarray(s.xhat0, dtype=float).tolist(),
        "input": inp,
        "estimator": s.estimator,
        "indices": None if s.indices is None else list(s.indices),
        "prune_infeasible": s.prune_infeasible,
        "priority": s.priority,
        "attacks": [{"target": a.target, "channel": a.channel, **signal_to_dict(a.signal)}
                    for a in s.attacks],
        "horizon": int(s.horizon),
        "seed": int(s.seed),
        "tolerances": asdict(s.tol),
        "isolation": asdict(s.isolation),
        "bank_cap": int(s.bank_cap),
    }
    if s.declared_W_u is not None:
        doc["declared_W_u"] = list(s.declared_W_u)
    if s.declared_W_y is not None:
        doc["declared_W_y"] = list(s.declared_W_y)
    return doc


# -- designs ------------------------------------------------------------------

def render_key(key):
    if key is None:
        return ""
    if isinstance(key, IndexSet):
        return key.render()
    J_u, J_s = key
    return f"{J_u.render()}/{J_s.render()}"


def design_to_dict(design, plant):
    out = {"kind": design.kind}
    if design.kind == "partial":
        out["J_u"] = list(design.J_u.indices)
    out["J_s"] = list(design.J_s.indices)
    out.update(N=_matrix(design.N), L=_matrix(design.L), E=_matrix(design.E))
    if design.kind == "partial":
        out["T"] = _matrix(design.T)
    out["spectral_radius_N"] = spectral_radius(design.N)
    out["max_residual"] = max(design.residuals(plant))
    return out


def bank_to_dict(spec, plant):
    return {
        "kind": spec.kind,
        "indices": list(spec.indices),
        "size": len(spec),
        "max_spectral_radius": spec.max_spectral_radius(),
        "primary": [render_key(k) for k in spec.primary],
        "secondary": [render_key(k) for k in spec.secondary],
        "dropped": [render_key(k) for k in spec.dropped],
        "designs": [design_to_dict(spec.designs[k], plant)
                    for k in list(spec.primary) + list(spec.secondary)],
    }


def gains_to_dict(table, certificate=None):
    doc = {
        "bound": table.bound,
        "gains": [{"actuators": list(J.indices), "K": _matrix(K),
                   "spectral_radius": spectral_radius(table.closed_loops[J])}
                  for J, K in table.gains.items()],
        "certificate": None,
    }
    if certificate is not None:
        doc["certificate"] = {"P": _matrix(certificate.P), "margin": certificate.margin}
    return doc


# -- traces -------------------------------------------------------------------

def trace_header(n, n_u, n_y):
    cols = ["k"]
    for prefix, m in (("x", n), ("u", n_u), ("au", n_u), ("ay", n_y), ("y", n_y),
                      ("xhat", n)):
        cols += [f"{prefix}_{i}" for i in range(1, m + 1)]
    cols += ["sigma", "pi_min"]
    cols += [f"auhat_{i}" for i in range(1, n_u + 1)]
    cols += [f"ayhat_{i}" for i in range(1, n_y + 1)]
    return cols + ["Wu", "Wy", "rho"]


def _num(v):
    return repr(float(v))


def trace_to_csv(t):
    n, n_u, n_y = t.x.shape[1], t.u.shape[1], t.y.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_header(n, n_u, n_y))
    for k in range(len(t)):
        row = [str(k)]
        for arr in (t.x, t.u, t.a_u, t.a_y, t.y, t.xhat):
            row += [_num(v) for v in arr[k]]
        row += [render_key(t.sigma[k]), _num(t.pi_min[k])]
        row += [_num(v) for v in t.a_u_hat[k]] + [_num(v) for v in t.a_y_hat[k]]
        row += [t.W_u[k].render(), t.W_y[k].render(), t.rho[k].render()]
        w.writerow(row)
    return buf.getvalue()


def write_trace_csv(t, path):
    Path(path).write_text(trace_to_csv(t))


def read_trace_csv_text(text):
    """Column name -> list of raw string cells."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return {name: [r[i] for r in body] for i, name in enumerate(header)}


def read_trace_csv(path):
    return read_trace_csv_text(Path(path).read_text())


def write_plot_data(t, out_dir):
    """Two-column ``k value`` series, one file per signal; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k = np.arange(len(t))
    series = {"error_norm": np.linalg.norm(t.error, axis=1), "pi_min": t.pi_min}
    for prefix, arr in (("x", t.x), ("xhat", t.xhat), ("u", t.u), ("au", t.a_u),
                        ("ay", t.a_y), ("auhat", t.a_u_hat), ("ayhat", t.a_y_hat)):
        for i in range(arr.shape[1]):
            series[f"{prefix}_{i + 1}"] = arr[:, i]
    paths = []
    for name, values in series.items():
        path = out / f"{name}.dat"
        path.write_text("".join(f"{kk} {_num(v)}\n" for kk, v in zip(k, values)))
        paths.append(path)
    return paths


def _json_safe(v):
    if isinstance(v, float) and not np.isfinite(v):
        return None
    if isinstance(v, list):
        return [_json_safe(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    return v


def summary_dict(t, setup, metrics, checks=()):
    doc = dict(metrics)
    doc["isolation"] = {"W_u": doc["W_u_final"], "W_y": doc["W_y_final"]}
    bank = setup.bank_spec
    doc["bank"] = None if bank is None else {
        "kind": bank.kind, "indices": list(bank.indices), "size": len(bank),
        "dropped": [render_key(key) for key in bank.dropped],
        "max_spectral_radius": bank.max_spectral_radius(),
    }
    doc["warnings"] = list(setup.warnings)
    doc["checks"] = [{"name": c.name, "passed": bool(c.passed), "detail": c.detail}
                     for c in checks]
    return _json_safe(doc)
