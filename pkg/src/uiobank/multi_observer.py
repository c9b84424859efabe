"""Runtime of observer banks: observer updates, deviation scores and selection.

Timing convention: ``step(u, y)`` consumes the previous input ``u(k-1)``
together with the stored ``y(k-1)`` to advance every ``z``, then forms the
estimates ``xhat(k) = z(k) + E y(k)^J`` with the fresh sample ``y(k)``.
"""
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InternalInconsistency, InvalidInput
from .matrix_core import as_vector
from .uio import IndexSet


@dataclass
class ObserverState:
    design: object
    z: np.ndarray


def observer_estimate(design, z, y):
    return z + design.E @ np.asarray(y, dtype=float)[design.J_s.zero_based]


def init_observer(design, xhat0, y0):
    """Pick z(0) so that the observer's initial estimate equals ``xhat0``."""
    xhat0 = np.asarray(xhat0, dtype=float)
    z0 = xhat0 - design.E @ np.asarray(y0, dtype=float)[design.J_s.zero_based]
    return ObserverState(design, z0)


def step_observer(state, u, y, y_next, B=None):
    """Advance one observer with (u(k-1), y(k-1)); return the new state and xhat(k).

    Partial observers need the plant input matrix ``B`` for the known-input
    term ``T B u``; complete observers never look at ``u``.
    """
    d = state.design
    Js = d.J_s.zero_based
    y = np.asarray(y, dtype=float)
    z_next = d.N @ state.z + d.L @ y[Js]
    if d.kind == "partial":
        if B is None:
            raise InvalidInput("partial observer step needs the input matrix B")
        z_next = z_next + d.T @ (B @ np.asarray(u, dtype=float))
    new = ObserverState(d, z_next)
    return new, observer_estimate(d, z_next, y_next)


def _max_deviation(estimates, center, others):
    try:
        ref = estimates[center]
        devs = [np.linalg.norm(ref - estimates[S]) for S in others]
    except KeyError as exc:
        raise InternalInconsistency(f"missing estimate for {exc.args[0]!r}") from None
    return float(max(devs)) if devs else 0.0


def pi_complete(estimates, J_s, q):
    """Largest deviation between xhat_{J_s} and xhat_S over S subset of J_s, |S| = n_y - 2q."""
    n_y = J_s.universe
    family = [IndexSet(c, n_y) for c in combinations(J_s.indices, n_y - 2 * q)]
    return _max_deviation(estimates, J_s, family)


def pi_partial(estimates, J_u, J_s, q1, q2):
    """Largest deviation over (S_u superset of J_u, |S_u| = 2q1) x (S_s subset of J_s, |S_s| = n_y - 2q2)."""
    n_u, n_y = J_u.universe, J_s.universe
    rest = [i for i in range(1, n_u + 1) if i not in J_u]
    S_us = [IndexSet(J_u.indices + extra, n_u)
            for extra in combinations(rest, 2 * q1 - len(J_u))]
    S_ss = [IndexSet(c, n_y) for c in combinations(J_s.indices, n_y - 2 * q2)]
    return _max_deviation(estimates, (J_u, J_s), [(a, b) for a in S_us for b in S_ss])


def select(pis, estimates=None):
    """Key with minimal deviation score; ties go to the lexicographically smallest key."""
    if not pis:
        raise InvalidInput("selection needs at least one candidate")
    sigma = min(pis, key=lambda key: (pis[key], key))
    return sigma, (None if estimates is None else estimates[sigma])


@dataclass
class SelectionRecord:
    k: int
    keys: list
    pis: np.ndarray
    sigma: object
    xhat: np.ndarray

    @property
    def pi_by_key(self):
        return dict(zip(self.keys, self.pis.tolist()))

    @property
    def pi_min(self):
        return float(self.pis[self.keys.index(self.sigma)])


class ObserverBank:
    """All observers of a bank advanced in lockstep, plus the argmin selector.

    Observer matrices are embedded into full-width arrays (zero columns for
    unused sensors) so one step is a handful of batched products.
    """

    def __init__(self, plant, spec):
        self.plant = plant
        self.spec = spec
        self.keys = list(spec.primary) + list(spec.secondary)
        index = {key: i for i, key in enumerate(self.keys)}
        n, n_y = plant.n, plant.n_y
        m = len(self.keys)
        self.N = np.zeros((m, n, n))
        self.L = np.zeros((m, n, n_y))
        self.E = np.zeros((m, n, n_y))
        self.TB = np.zeros((m, n, plant.n_u))
        for i, key in enumerate(self.keys):
            d = spec.designs[key]
            cols = d.J_s.zero_based
            self.N[i] = d.N
            self.L[i][:, cols] = d.L
            self.E[i][:, cols] = d.E
            if d.kind == "partial":
                self.TB[i] = d.T @ plant.B
        self.primary_keys = list(spec.primary)
        centers, others = [], []
        self._segments = []
        for p, key in enumerate(self.primary_keys):
            fam = [index[S] for S in spec.family(key)]
            if not fam:
                raise InternalInconsistency(f"primary observer {key!r} has no comparison family")
            self._segments.append(len(centers))
            centers += [p] * len(fam)
            others += fam
        self._centers = np.array(centers)
        self._others = np.array(others)
        self._segments = np.array(self._segments)
        self.z = None
        self.y_prev = None
        self.k = None

    def __len__(self):
        return len(self.keys)

    def estimates(self, y):
        return self.z + self.E @ y

    def init(self, xhat0, y0):
        xhat0 = as_vector(xhat0, self.plant.n, "xhat0")
        y0 = as_vector(y0, self.plant.n_y, "y0")
        self.z = xhat0[None, :] - self.E @ y0
        self.y_prev = y0
        self.k = 0
        return self._select(self.estimates(y0))

    def step(self, u, y):
        """Advance with u(k-1) and y(k); returns the selection record at time k."""
        if self.z is None:
            raise InternalInconsistency("bank used before init()")
        u = as_vector(u, self.plant.n_u, "u")
        y = as_vector(y, self.plant.n_y, "y")
        self.z = (np.einsum("mij,mj->mi", self.N, self.z)
                  + self.L @ self.y_prev + self.TB @ u)
        self.y_prev = y
        self.k += 1
        return self._select(self.estimates(y))

    def _select(self, X):
        P = X[: len(self.primary_keys)]
        devs = np.linalg.norm(P[self._centers] - X[self._others], axis=1)
        pis = np.maximum.reduceat(devs, self._segments)
        best = int(np.argmin(pis))  # primary keys are sorted, so first minimum = smallest key
        return SelectionRecord(self.k, self.primary_keys, pis, self.primary_keys[best],
                               X[best].copy())

    def all_estimates(self):
        """Current estimates keyed by observer (requires the last y)."""
        X = self.estimates(self.y_prev)
        return dict(zip(self.keys, X))


def init_bank(plant, spec, xhat0, y0):
    """Build a runtime bank with every observer's initial estimate equal to ``xhat0``."""
    bank = ObserverBank(plant, spec)
    record = bank.init(xhat0, y0)
    return bank, record


def step_bank(bank, u, y):
    return bank.step(u, y)
