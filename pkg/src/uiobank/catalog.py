"""Built-in plants and scenarios for the six worked examples, with their pass/fail checks."""
from dataclasses import dataclass, replace

import numpy as np

from .control import search_certificate
from .sim import AttackSignal, InitialState, InputPolicy, Scenario, Signal, build, metrics, simulate
from .matrix_core import DEFAULT_TOL
from .uio import PlantModel

C_FOUR_BY_TWO = [[1, 3], [1, 1], [3, 2], [2, 1]]
C_FOUR_BY_THREE = [[1, 2, 0], [0, 1, 1], [0, 1, 2], [1, 1, 1]]
EXAMPLE5_GAIN = [[-1.2, 0.7], [-0.2, -0.7]]

PLANTS = {
    1: dict(A=[[0.2, 0.5], [0.2, 0.7]], B=[[1], [2]], C=C_FOUR_BY_TWO),
    2: dict(A=[[0.5, 0, 0.1], [0.2, 0.7, 0], [1, 0, 0.3]],
            B=[[0.5, 0, 0.5], [1, 1, 0.1], [0, 0, 0.5]], C=C_FOUR_BY_THREE),
    5: dict(A=[[1.2, 0.5], [0.2, 0.7]], B=[[1, 0], [0, 1]], C=C_FOUR_BY_TWO),
    6: dict(A=[[0.5, 0, 0.1], [0.2, 1.7, 0], [1, 0, 0.3]],
            B=[[0.5, 0, 1], [1, 1, 1], [0, 0, 1]], C=C_FOUR_BY_THREE),
}
PLANTS[3] = PLANTS[1]
PLANTS[4] = PLANTS[2]


def plant(example):
    return PlantModel(**{k: np.array(v, dtype=float) for k, v in PLANTS[example].items()})


UNIFORM_INPUT = Signal("uniform", low=-1.0, high=1.0)
UNIFORM_ATTACK = Signal("uniform", low=-10.0, high=10.0)


def _attacks(actuators=(), sensors=()):
    return ([AttackSignal("actuator", i, UNIFORM_ATTACK) for i in actuators]
            + [AttackSignal("sensor", i, UNIFORM_ATTACK) for i in sensors])


def scenario(example, seed=0, horizon=None):
    """Scenario reproducing one of the worked examples."""
    P = plant(example)
    common = dict(plant=P, name=f"example{example}", seed=seed, x0=InitialState("gaussian"),
                  xhat0=np.zeros(P.n))
    if example in (1, 3):
        return Scenario(**common, estimator="complete", horizon=horizon or 101,
                        input=InputPolicy("open_loop", UNIFORM_INPUT),
                        attacks=_attacks(actuators=[1], sensors=[3]))
    if example in (2, 4):
        return Scenario(**common, estimator="partial", indices=(1, 1), prune_infeasible=True,
                        horizon=horizon or 101, input=InputPolicy("open_loop", UNIFORM_INPUT),
                        attacks=_attacks(actuators=[3], sensors=[2]))
    if example == 5:
        return Scenario(**common, estimator="complete", horizon=horizon or 60,
                        input=InputPolicy("static_feedback", K=np.array(EXAMPLE5_GAIN)),
                        attacks=_attacks(sensors=[2]))
    if example == 6:
        return Scenario(**common, estimator="partial", indices=(1, 1), prune_infeasible=True,
                        horizon=horizon or 100, input=InputPolicy("switching"),
                        attacks=_attacks(actuators=[3], sensors=[2]))
    raise ValueError(f"example id must be in 1..6, got {example!r}")


# -- checks -------------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def envelope_violations(err_norms, rho_max, fit_steps=6, floor=0.0):
    """Steps where ``|e(k)| > c lam^k max(1, |e(0)|) + floor``.

    ``lam = (1 + rho_max) / 2`` and ``c`` is the smallest constant that
    covers steps ``0..fit_steps-1``. Returns ``(c, lam, violating steps)``.
    """
    e = np.asarray(err_norms, dtype=float)
    lam = 0.5 * (1.0 + rho_max)
    scale = max(1.0, e[0])
    k = np.arange(len(e))
    env = lam ** k * scale
    c = max(float(np.max(e[:fit_steps] / env[:fit_steps])), 1e-300)
    bad = np.flatnonzero(e > c * env + floor)
    return c, lam, bad.tolist()


def roundoff_floor(trace):
    """Float64 resolution of |xhat - x| given the magnitudes involved."""
    mags = np.max(np.abs(np.concatenate([trace.x, trace.xhat, trace.y], axis=1)), axis=1)
    return 64 * np.finfo(float).eps * np.maximum(1.0, mags)


def check_estimation(trace, setup, label):
    err = np.linalg.norm(trace.error, axis=1)
    rho_max = setup.bank_spec.max_spectral_radius()
    c, lam, bad = envelope_violations(err, rho_max, floor=roundoff_floor(trace))
    scale = max(1.0, err[0])
    e40 = err[40] if len(err) > 40 else np.nan
    ok = not bad and e40 <= 1e-6 * scale
    return Check(label, ok, f"c={c:.3g} lam={lam:.3g} violations={bad[:5]} "
                            f"|e(40)|/max(1,|e0|)={e40 / scale:.2e}")


def check_reconstruction(trace, label, window=(40, 60)):
    lo, hi = window
    sl = slice(lo, hi + 1)
    du = np.max(np.abs(trace.a_u_hat[sl] - trace.a_u[lo - 1:hi]))
    dy = np.max(np.abs(trace.a_y_hat[sl] - trace.a_y[sl]))
    tol_u = 1e-5 * (1 + np.max(np.abs(trace.a_u)))
    tol_y = 1e-5 * (1 + np.max(np.abs(trace.a_y)))
    return Check(label, du <= tol_u and dy <= tol_y,
                 f"max|au_hat-au(k-1)|={du:.2e} (tol {tol_u:.1e}), "
                 f"max|ay_hat-ay|={dy:.2e} (tol {tol_y:.1e})")


def check_isolation(trace, W_u, W_y, label):
    after = range(trace.warmup, len(trace))
    ok = all(trace.W_u[k].indices == tuple(W_u) and trace.W_y[k].indices == tuple(W_y)
             for k in after)
    m = metrics(trace)
    return Check(label, ok, f"final (W_u, W_y)=({m['W_u_final']}, {m['W_y_final']}), "
                            f"expected ({list(W_u)}, {list(W_y)})")


def check_terminal(trace, bound, label):
    x0 = np.linalg.norm(trace.x[0])
    xT = np.linalg.norm(trace.x_final)
    return Check(label, xT <= bound * max(1.0, x0),
                 f"|x(T)|={xT:.2e}, bound {bound:g}*max(1,|x0|)={bound * max(1.0, x0):.2e}")


def check_lyapunov(trace, setup, label, tol=DEFAULT_TOL):
    """If a common quadratic certificate exists, x'Px must not increase once isolation settles."""
    cert = search_certificate(setup.gains, tol)
    if cert is None:
        return Check(label, True, "no certificate found; monotonicity not asserted")
    m = metrics(trace)
    settle = max(m["W_u_settle_step"] or trace.warmup, m["W_y_settle_step"] or trace.warmup)
    X = trace.states[settle:]
    V = np.einsum("ki,ij,kj->k", X, cert.P, X)
    rises = np.flatnonzero(np.diff(V) > 64 * np.finfo(float).eps * V[:-1])
    return Check(label, rises.size == 0,
                 f"settle k={settle}, certificate margin {cert.margin:.3g}, "
                 f"increases at {(rises + settle).tolist()[:5]}")


def reproduce(example, seed=0):
    """Run one example and return ``(trace, setup, [Check, ...])``."""
    s = scenario(example, seed=seed)
    setup = build(s)
    t = simulate(s, setup)
    return t, setup, run_checks(example, t, setup, s)


def run_checks(example, t, setup, s):
    """The pass/fail properties a worked example is expected to show."""
    checks = []
    if example in (1, 2):
        checks.append(check_estimation(t, setup, f"example {example} estimation envelope"))
    elif example == 3:
        checks.append(check_reconstruction(t, "example 3 attack reconstruction"))
        checks.append(check_isolation(t, (1,), (3,), "example 3 isolation"))
    elif example == 4:
        checks.append(check_reconstruction(t, "example 4 attack reconstruction"))
        checks.append(check_isolation(t, (3,), (2,), "example 4 isolation"))
    elif example == 5:
        checks.append(check_terminal(t, 1e-6, "example 5 sensor-attack closed loop"))
    elif example == 6:
        checks.append(check_isolation(t, (3,), (2,), "example 6 isolation"))
        off = all(3 not in t.rho[k] for k in range(t.warmup, len(t)))
        checks.append(Check("example 6 actuator 3 switched off", off,
                            f"rho after warmup: {sorted({r.render() for r in t.rho[t.warmup:]})}"))
        checks.append(check_terminal(t, 1e-3, "example 6 mixed-attack closed loop"))
        checks.append(check_lyapunov(t, setup, "example 6 Lyapunov decrease after isolation", s.tol))
    return checks


def with_seed(s, seed):
    return replace(s, seed=seed)
