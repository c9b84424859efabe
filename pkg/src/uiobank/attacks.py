"""Attack reconstruction from the selected estimate, and support-based isolation."""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotReady
from .matrix_core import DEFAULT_TOL, pinv
from .uio import IndexSet


def reconstruct_actuator(xhat_k, xhat_km1, u_km1, plant, tol=DEFAULT_TOL):
    """Estimate of a_u(k-1): ``pinv(B) (xhat(k) - A xhat(k-1)) - u(k-1)``."""
    dx = np.asarray(xhat_k, dtype=float) - plant.A @ np.asarray(xhat_km1, dtype=float)
    return pinv(plant.B, tol) @ dx - np.asarray(u_km1, dtype=float)


def reconstruct_sensor(y_k, xhat_k, plant):
    """Estimate of a_y(k): ``y(k) - C xhat(k)``."""
    return np.asarray(y_k, dtype=float) - plant.C @ np.asarray(xhat_k, dtype=float)


@dataclass(frozen=True)
class IsolationPolicy:
    """Threshold, warmup and persistence window for thresholded-support isolation.

    ``window=1`` gives the instantaneous support of the latest estimate.
    """
    eps: float = 1e-3
    warmup: int = 20
    window: int = 5

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise InvalidInput(f"eps must be > 0, got {self.eps!r}")
        if int(self.warmup) < 1:
            raise InvalidInput(f"warmup must be >= 1, got {self.warmup!r}")
        if int(self.window) < 1:
            raise InvalidInput(f"window must be >= 1, got {self.window!r}")


@dataclass
class AttackEstimate:
    k: int
    a_u_hat: np.ndarray
    a_y_hat: np.ndarray
    W_u_hat: IndexSet
    W_y_hat: IndexSet


class Isolator:
    """Streaming persistence filter over reconstructed attacks.

    A channel is isolated while some estimate above ``eps`` lies in the
    trailing window, i.e. it leaves only after ``window`` consecutive quiet
    steps. Channels passed as ``held`` keep their current membership: a
    switched-off actuator produces no evidence either way. NaN counts as quiet.
    """

    def __init__(self, n_u, n_y, policy):
        self.policy = policy
        self.n_u, self.n_y = n_u, n_y
        self._last_u = np.full(n_u, -np.inf)
        self._last_y = np.full(n_y, -np.inf)
        self.k = -1

    def _members(self, last):
        return (self.k - last) < self.policy.window

    def update(self, k, a_u_hat, a_y_hat, held=()):
        if k != self.k + 1:
            raise InvalidInput(f"isolator expected step {self.k + 1}, got {k}")
        before = self._members(self._last_u) if self.k >= 0 else np.zeros(self.n_u, bool)
        self.k = k
        with np.errstate(invalid="ignore"):
            hit_u = np.abs(np.asarray(a_u_hat, dtype=float)) > self.policy.eps
            hit_y = np.abs(np.asarray(a_y_hat, dtype=float)) > self.policy.eps
        self._last_u[hit_u] = k
        self._last_y[hit_y] = k
        for i in held:
            if before[i - 1]:
                self._last_u[i - 1] = k
            else:
                self._last_u[i - 1] = -np.inf

    @property
    def ready(self):
        return self.k >= self.policy.warmup

    def sets(self):
        if not self.ready:
            raise NotReady(f"isolation unavailable before step {self.policy.warmup}")
        wu = np.flatnonzero(self._members(self._last_u)) + 1
        wy = np.flatnonzero(self._members(self._last_y)) + 1
        return IndexSet(tuple(wu), self.n_u), IndexSet(tuple(wy), self.n_y)


def isolate(a_u_history, a_y_history, policy, k=None):
    """Isolated actuator and sensor sets at step ``k`` from estimate histories.

    Histories are arrays indexed by step (row ``j`` is the estimate formed at
    step ``j``); ``k`` defaults to the last row.
    """
    hu = np.atleast_2d(np.asarray(a_u_history, dtype=float))
    hy = np.atleast_2d(np.asarray(a_y_history, dtype=float))
    if k is None:
        k = hu.shape[0] - 1
    if k < policy.warmup:
        raise NotReady(f"isolation unavailable before step {policy.warmup}")
    iso = Isolator(hu.shape[1], hy.shape[1], policy)
    for j in range(k + 1):
        iso.update(j, hu[j], hy[j])
    return iso.sets()
