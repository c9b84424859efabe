"""Seeded simulation of the attacked plant with estimator, isolation and control in the loop.

Per step ``k`` the order is fixed:

1. ``y(k) = C x(k) + a_y(k)``
2. observers advance with ``(u(k-1), y(k-1))``; ``xhat(k)`` uses ``y(k)``
3. attack reconstruction and isolation
4. ``u(k)`` from the input policy
5. ``x(k+1) = A x(k) + B (u(k) + a_u(k))`` with switched-off channels removed

Random streams: every stochastic signal owns a PCG64 generator seeded by
``SeedSequence(seed, spawn_key=(stream,))`` with stream 0 for ``x(0)``,
1 for the open-loop input, ``1000 + i`` for actuator attack ``i`` and
``2000 + i`` for sensor attack ``i`` (1-based channels).
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .attacks import IsolationPolicy, Isolator, reconstruct_actuator, reconstruct_sensor
from .control import design_static, design_switching_gains, max_qstar, supervisor_step
from .errors import DesignInfeasible, InvalidInput, SimulationDiverged, UnstabilizableConfiguration
from .matrix_core import DEFAULT_TOL, Tolerances, as_matrix, as_vector
from .multi_observer import ObserverBank
from .uio import DEFAULT_BANK_CAP, IndexSet, enumerate_bank, max_q, max_q1_q2

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
STREAM_X0, STREAM_INPUT, STREAM_ACTUATOR, STREAM_SENSOR = 0, 1, 1000, 2000
SIGNAL_KINDS = ("zero", "constant", "uniform", "gaussian", "impulse", "samples")


def stream_rng(seed, stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


@dataclass(frozen=True)
class Signal:
    """Scalar signal generator; zero before ``start``."""
    kind: str = "zero"
    value: float = 0.0
    low: float = -1.0
    high: float = 1.0
    mean: float = 0.0
    std: float = 1.0
    at: int = 0
    samples: tuple = ()
    start: int = 0

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise InvalidInput(f"unknown signal kind {self.kind!r}")
        params = [self.value, self.low, self.high, self.mean, self.std, *self.samples]
        if not np.all(np.isfinite(params)):
            raise InvalidInput("signal parameters must be finite")
        if self.kind == "uniform" and not self.low < self.high:
            raise InvalidInput("uniform signal needs low < high")
        if self.kind == "gaussian" and self.std < 0:
            raise InvalidInput("gaussian signal needs std >= 0")
        object.__setattr__(self, "samples", tuple(float(v) for v in self.samples))

    def generate(self, horizon, rng):
        """One sample per step; random kinds draw at every step, active or not."""
        if self.kind == "uniform":
            out = rng.uniform(self.low, self.high, size=horizon)
        elif self.kind == "gaussian":
            out = rng.normal(self.mean, self.std, size=horizon)
        elif self.kind == "constant":
            out = np.full(horizon, float(self.value))
        elif self.kind == "impulse":
            out = np.zeros(horizon)
            if 0 <= self.at < horizon:
                out[self.at] = self.value
        elif self.kind == "samples":
            out = np.zeros(horizon)
            m = min(horizon, len(self.samples))
            out[:m] = self.samples[:m]
        else:
            out = np.zeros(horizon)
        out[: max(0, self.start)] = 0.0
        return out


@dataclass(frozen=True)
class AttackSignal:
    target: str
    channel: int
    signal: Signal

    def __post_init__(self):
        if self.target not in ("actuator", "sensor"):
            raise InvalidInput(f"attack target must be 'actuator' or 'sensor', got {self.target!r}")
        if int(self.channel) < 1:
            raise InvalidInput("attack channels are 1-based")


@dataclass(frozen=True)
class InitialState:
    kind: str = "gaussian"
    value: tuple = ()
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "fixed"):
            raise InvalidInput(f"unknown x0 kind {self.kind!r}")
        object.__setattr__(self, "value", tuple(float(v) for v in self.value))
        if not np.all(np.isfinite([self.mean, self.std, *self.value])) or self.std < 0:
            raise InvalidInput("x0 parameters must be finite with std >= 0")

    def draw(self, n, rng):
        if self.kind == "fixed":
            return as_vector(self.value, n, "x0")
        return rng.normal(self.mean, self.std, size=n)


@dataclass(frozen=True)
class InputPolicy:
    """``open_loop`` (i.i.d. signal per channel), ``static_feedback`` or ``switching``."""
    kind: str = "open_loop"
    signal: Signal = field(default_factory=Signal)
    K: object = None
    bound: object = None

    def __post_init__(self):
        if self.kind not in ("open_loop", "static_feedback", "switching"):
            raise InvalidInput(f"unknown input policy {self.kind!r}")


@dataclass
class Scenario:
    plant: object
    name: str = "scenario"
    x0: InitialState = field(default_factory=InitialState)
    xhat0: object = None
    input: InputPolicy = field(default_factory=InputPolicy)
    estimator: str = "auto"
    indices: object = None
    prune_infeasible: bool = False
    priority: str = "q1"
    attacks: list = field(default_factory=list)
    horizon: int = 100
    seed: int = 0
    tol: Tolerances = DEFAULT_TOL
    isolation: IsolationPolicy = field(default_factory=IsolationPolicy)
    bank_cap: int = DEFAULT_BANK_CAP
    declared_W_u: object = None
    declared_W_y: object = None

    def validate(self):
        """Raise on malformed fields; return a list of attack-budget warnings."""
        if int(self.horizon) < 1:
            raise InvalidInput(f"horizon must be >= 1, got {self.horizon}")
        if self.estimator not in ("auto", "complete", "partial", "none"):
            raise InvalidInput(f"unknown estimator {self.estimator!r}")
        if self.priority not in ("q1", "q2"):
            raise InvalidInput(f"priority must be q1 or q2, got {self.priority!r}")
        if int(self.seed) < 0:
            raise InvalidInput("seed must be non-negative")
        if self.input.kind != "open_loop" and self.estimator == "none":
            raise InvalidInput("feedback policies need an estimator")
        p = self.plant
        for a in self.attacks:
            limit = p.n_u if a.target == "actuator" else p.n_y
            if a.channel > limit:
                raise InvalidInput(f"{a.target} attack channel {a.channel} > {limit}")
        W_u, W_y = self.attack_support()
        for a in self.attacks:
            allowed = W_u if a.target == "actuator" else W_y
            if a.channel not in allowed:
                raise InvalidInput(f"{a.target} {a.channel} attacked outside the declared set")
        if self.xhat0 is not None:
            as_vector(self.xhat0, p.n, "xhat0")
        return []

    def attack_support(self):
        p = self.plant
        W_u = self.declared_W_u
        if W_u is None:
            W_u = sorted({a.channel for a in self.attacks if a.target == "actuator"})
        W_y = self.declared_W_y
        if W_y is None:
            W_y = sorted({a.channel for a in self.attacks if a.target == "sensor"})
        return IndexSet(tuple(W_u), p.n_u), IndexSet(tuple(W_y), p.n_y)


@dataclass
class Setup:
    """Synthesized pieces a scenario runs with."""
    bank_spec: object = None
    K: object = None
    gains: object = None
    warnings: list = field(default_factory=list)


def build(s):
    """Resolve estimator bank and controller for a scenario (no simulation)."""
    warnings = list(s.validate())
    p, tol = s.plant, s.tol
    setup = Setup(warnings=warnings)
    kind = s.estimator
    indices = None if s.indices is None else tuple(int(i) for i in np.atleast_1d(s.indices))
    if kind == "auto":
        if indices is not None:
            kind = "complete" if len(indices) == 1 else "partial"
        else:
            kind = "complete" if max_q(p, tol) >= 1 else "partial"
    if kind == "complete":
        q = indices if indices is not None else (max_q(p, tol),)
        if q[0] < 1:
            raise DesignInfeasible("no sensor redundancy: q = 0, complete bank unavailable")
        setup.bank_spec = enumerate_bank(p, "complete", q, tol, s.bank_cap, s.prune_infeasible)
    elif kind == "partial":
        qq = indices if indices is not None else max_q1_q2(p, tol, s.priority)
        if qq == (0, 0):
            raise DesignInfeasible("q1 = q2 = 0: partial bank unavailable")
        setup.bank_spec = enumerate_bank(p, "partial", qq, tol, s.bank_cap, s.prune_infeasible)

    bank = setup.bank_spec
    if bank is not None:
        W_u, W_y = s.attack_support()
        idx = bank.indices
        if bank.kind == "complete" and len(W_y) > idx[0]:
            warnings.append(f"{len(W_y)} attacked sensors exceed q = {idx[0]}")
        if bank.kind == "partial" and (len(W_u) > idx[0] or len(W_y) > idx[1]):
            warnings.append(f"attack pattern ({len(W_u)}, {len(W_y)}) exceeds (q1, q2) = {idx}")
        gaps = bank.coverage_gaps(W_u, W_y)
        if gaps is None:
            warnings.append("no observer in the bank is blind to the declared attack pattern")
        elif gaps:
            warnings.append(f"{len(gaps)} primary observers lack a covering comparison "
                            f"partner (pruned bank): {gaps}")

    if s.input.kind == "static_feedback":
        setup.K = (as_matrix(s.input.K, "K") if s.input.K is not None
                   else design_static(p, tol))
        if setup.K.shape != (p.n_u, p.n):
            raise InvalidInput(f"K must be {p.n_u}x{p.n}, got {setup.K.shape}")
    elif s.input.kind == "switching":
        qstar = max_qstar(p, tol)
        if s.input.bound is not None:
            bound = int(s.input.bound)
        elif bank is not None and bank.kind == "partial":
            bound = bank.indices[0]
        else:
            bound = qstar
        if bound > qstar:
            raise UnstabilizableConfiguration(f"bound {bound} exceeds q* = {qstar}")
        setup.gains = design_switching_gains(p, bound, tol)
    for w in warnings:
        log.warning("%s: %s", s.name, w)
    return setup


@dataclass
class Trace:
    """Per-step series of one simulation run (row k holds time step k)."""
    scenario: str
    x: np.ndarray
    u: np.ndarray
    a_u: np.ndarray           # attack that actually entered the plant
    a_u_injected: np.ndarray  # attacker's signal, before switch-off
    a_y: np.ndarray
    y: np.ndarray
    xhat: np.ndarray
    sigma: list
    pis: np.ndarray
    pi_min: np.ndarray
    a_u_hat: np.ndarray
    a_y_hat: np.ndarray
    W_u: list
    W_y: list
    rho: list
    x_final: np.ndarray
    warmup: int
    pi_keys: list = field(default_factory=list)

    def __len__(self):
        return self.x.shape[0]

    @property
    def error(self):
        return self.xhat - self.x

    @property
    def states(self):
        """x(0), ..., x(horizon) including the terminal state."""
        return np.vstack([self.x, self.x_final[None, :]])


def simulate(s, setup=None):
    """Run a scenario and return its :class:`Trace`."""
    setup = build(s) if setup is None else setup
    p, tol, H = s.plant, s.tol, int(s.horizon)
    n, n_u, n_y = p.n, p.n_u, p.n_y
    A, B, C = p.A, p.B, p.C

    x = s.x0.draw(n, stream_rng(s.seed, STREAM_X0))
    xhat0 = np.zeros(n) if s.xhat0 is None else as_vector(s.xhat0, n, "xhat0")
    if s.input.kind == "open_loop":
        rng = stream_rng(s.seed, STREAM_INPUT)
        u_ol = np.column_stack([s.input.signal.generate(H, rng) for _ in range(n_u)])
    a_u_inj = np.zeros((H, n_u))
    a_y = np.zeros((H, n_y))
    for a in s.attacks:
        if a.target == "actuator":
            a_u_inj[:, a.channel - 1] += a.signal.generate(H, stream_rng(s.seed, STREAM_ACTUATOR + a.channel))
        else:
            a_y[:, a.channel - 1] += a.signal.generate(H, stream_rng(s.seed, STREAM_SENSOR + a.channel))

    bank = ObserverBank(p, setup.bank_spec) if setup.bank_spec is not None else None
    n_pi = len(bank.primary_keys) if bank is not None else 0
    iso = Isolator(n_u, n_y, s.isolation)
    full = IndexSet.full(n_u)
    empty_u, empty_y = IndexSet.empty(n_u), IndexSet.empty(n_y)

    X = np.zeros((H, n)); U = np.zeros((H, n_u)); AU = np.zeros((H, n_u))
    Y = np.zeros((H, n_y)); XH = np.full((H, n), np.nan)
    PIS = np.full((H, n_pi), np.nan); PIMIN = np.full(H, np.nan)
    AUH = np.full((H, n_u), np.nan); AYH = np.full((H, n_y), np.nan)
    sigma, Wu_hist, Wy_hist, rho_hist = [], [], [], []

    u_prev = np.zeros(n_u)
    xhat_prev = None
    rho_prev = full
    for k in range(H):
        y = C @ x + a_y[k]
        if bank is not None:
            rec = bank.init(xhat0, y) if k == 0 else bank.step(u_prev, y)
            xhat = rec.xhat
            PIS[k] = rec.pis
            PIMIN[k] = rec.pi_min
            sigma.append(rec.sigma)
            AYH[k] = reconstruct_sensor(y, xhat, p)
            if k > 0:
                AUH[k] = reconstruct_actuator(xhat, xhat_prev, u_prev, p, tol)
        else:
            xhat = np.full(n, np.nan)
            sigma.append(None)
        held = [i for i in range(1, n_u + 1) if i not in rho_prev]
        iso.update(k, AUH[k], AYH[k], held=held)
        W_u, W_y = iso.sets() if (iso.ready and bank is not None) else (empty_u, empty_y)

        rho = full
        if s.input.kind == "open_loop":
            u = u_ol[k].copy()
        elif s.input.kind == "static_feedback":
            u = setup.K @ xhat
        else:
            table = setup.gains
            if iso.ready:
                rho, u = supervisor_step(W_u, table, xhat)
            else:
                u = table.gains[full] @ xhat
        mask = np.zeros(n_u)
        mask[rho.zero_based] = 1.0
        u = u * mask
        a_eff = a_u_inj[k] * mask

        X[k], U[k], AU[k], Y[k], XH[k] = x, u, a_eff, y, xhat
        Wu_hist.append(W_u); Wy_hist.append(W_y); rho_hist.append(rho)

        x = A @ x + B @ (u + a_eff)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            raise SimulationDiverged(f"{s.name}: |x| exceeded {DIVERGENCE_LIMIT:g} at step {k + 1}",
                                     step=k + 1)
        u_prev, xhat_prev, rho_prev = u, xhat, rho

    return Trace(s.name, X, U, AU, a_u_inj, a_y, Y, XH, sigma, PIS, PIMIN, AUH, AYH,
                 Wu_hist, Wy_hist, rho_hist, x, s.isolation.warmup,
                 pi_keys=list(bank.primary_keys) if bank is not None else [])


def replay_check(t, s, atol=1e-10):
    """Re-derive every state and output from the recorded signals."""
    A, B, C = s.plant.A, s.plant.B, s.plant.C
    X = t.states
    worst = 0.0
    for k in range(len(t)):
        x_next = A @ X[k] + B @ (t.u[k] + t.a_u[k])
        worst = max(worst, float(np.max(np.abs(x_next - X[k + 1]))),
                    float(np.max(np.abs(C @ X[k] + t.a_y[k] - t.y[k]))))
    return worst <= atol


def support_respected(t, s):
    """Generated attacks stay inside the declared (time-invariant) supports."""
    W_u, W_y = s.attack_support()
    off_u = [i for i in range(s.plant.n_u) if (i + 1) not in W_u]
    off_y = [i for i in range(s.plant.n_y) if (i + 1) not in W_y]
    return (not np.any(t.a_u_injected[:, off_u]) and not np.any(t.a_u[:, off_u])
            and not np.any(t.a_y[:, off_y]))


def _settle(sets, warmup):
    if warmup >= len(sets):
        return None
    final = sets[-1]
    k = len(sets) - 1
    while k > warmup and sets[k - 1] == final:
        k -= 1
    return k


def decay_rate(err_norms, steps=10):
    """Fitted per-step factor from a log-linear regression over the first ``steps`` errors."""
    e = np.asarray(err_norms[:steps], dtype=float)
    k = np.arange(len(e))
    ok = np.isfinite(e) & (e > 0)
    if ok.sum() < 2:
        return None
    slope = np.polyfit(k[ok], np.log(e[ok]), 1)[0]
    return float(np.exp(slope))


def metrics(t):
    err = np.linalg.norm(t.error, axis=1)
    return {
        "scenario": t.scenario,
        "steps": len(t),
        "error_norm": err.tolist(),
        "initial_error": float(err[0]),
        "final_error": float(err[-1]),
        "decay_rate": decay_rate(err),
        "W_u_final": list(t.W_u[-1].indices),
        "W_y_final": list(t.W_y[-1].indices),
        "W_u_settle_step": _settle(t.W_u, t.warmup),
        "W_y_settle_step": _settle(t.W_y, t.warmup),
        "terminal_state_norm": float(np.linalg.norm(t.x_final)),
        "initial_state_norm": float(np.linalg.norm(t.x[0])),
    }
