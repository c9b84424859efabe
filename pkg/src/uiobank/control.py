"""Stabilizing feedback: static estimate feedback and the actuator-switching supervisor."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from .errors import DesignInfeasible, InvalidInput, UnstabilizableConfiguration
from .matrix_core import (
    DEFAULT_TOL, as_matrix, as_vector, is_schur, is_stabilizable, spectral_radius,
    stabilizing_state_gain,
)
from .uio import subsets


def design_static(plant, tol=DEFAULT_TOL):
    """Gain K for ``u = K xhat`` with ``A + BK`` Schur."""
    return stabilizing_state_gain(plant.A, plant.B, tol)


def max_qstar(plant, tol=DEFAULT_TOL):
    """Largest 0 < q* < n_u with (A, b_J) stabilizable for every |J| >= n_u - q*; 0 if none."""
    n_u = plant.n_u
    best = 0
    for q in range(1, n_u):
        size = n_u - q
        if not all(is_stabilizable(plant.A, plant.columns(J), tol) for J in subsets(n_u, size)):
            break
        best = q
    return best


@dataclass
class GainTable:
    """Per-subset feedback gains ``u^J = K_J x`` for every admissible actuator set.

    Admissible sets are those with ``n_u - bound <= |J| <= n_u``.
    """
    n_u: int
    bound: int
    gains: dict
    closed_loops: dict

    def admissible(self, J):
        return len(J) >= max(1, self.n_u - self.bound)

    @property
    def modes(self):
        return list(self.closed_loops.values())


def admissible_sets(n_u, bound):
    lo = max(1, n_u - bound)
    return [J for size in range(lo, n_u + 1) for J in subsets(n_u, size)]


def design_switching_gains(plant, bound, tol=DEFAULT_TOL):
    """Independent Riccati gains for every admissible actuator subset.

    Each closed loop is individually Schur; stability under arbitrary
    switching is not implied and has to be certified separately.
    """
    if not 0 <= bound < plant.n_u or bound != int(bound):
        raise InvalidInput(f"bound must be an integer in [0, n_u), got {bound!r}")
    gains, loops = {}, {}
    for J in admissible_sets(plant.n_u, bound):
        bJ = plant.columns(J)
        try:
            K = stabilizing_state_gain(plant.A, bJ, tol)
        except DesignInfeasible as exc:
            raise DesignInfeasible(f"actuator set {J!r}: {exc}", subset=J) from None
        gains[J] = K
        loops[J] = plant.A + bJ @ K
    return GainTable(plant.n_u, int(bound), gains, loops)


@dataclass(frozen=True)
class LyapunovCertificate:
    P: np.ndarray
    margin: float


def certificate_margin(modes, P):
    """Smallest ``-lambda_max(M'PM - P)`` over the modes (positive means decrease)."""
    return min(-float(np.max(np.linalg.eigvalsh(M.T @ P @ M - P))) for M in modes)


def validate_certificate(table, P, margin):
    """Check that ``V = x'Px`` decreases by at least ``margin |x|^2`` in every admissible mode."""
    modes = table.modes if isinstance(table, GainTable) else list(table)
    P = as_matrix(P, "P")
    n = modes[0].shape[0]
    if P.shape != (n, n):
        raise InvalidInput(f"P must be {n}x{n}, got {P.shape}")
    if not np.allclose(P, P.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(P)))):
        raise InvalidInput("P must be symmetric")
    P = 0.5 * (P + P.T)
    if np.min(np.linalg.eigvalsh(P)) <= 0:
        return False
    return certificate_margin(modes, P) >= margin


def _normalized(P):
    P = 0.5 * (P + P.T)
    return P / np.min(np.linalg.eigvalsh(P))


def _candidates(modes, tol):
    n = modes[0].shape[0]
    I = np.eye(n)
    per_mode = [solve_discrete_lyapunov(M.T, I) for M in modes]
    yield from per_mode
    P = sum(per_mode) / len(per_mode)
    yield P
    # P <- mean_J X_J with X_J = M_J' X_J M_J + P
    for _ in range(min(int(tol.iter_max), 200)):
        P_next = _normalized(sum(solve_discrete_lyapunov(M.T, P) for M in modes) / len(modes))
        yield P_next
        if np.max(np.abs(P_next - _normalized(P))) < tol.iter_tol * np.max(np.abs(P_next)):
            break
        P = P_next
    # P = I + sum_J M_J' P M_J, solvable when the summed operator is contractive
    op = sum(np.kron(M.T, M.T) for M in modes)
    if spectral_radius(op) < 1:
        vecP = np.linalg.solve(np.eye(n * n) - op, I.reshape(-1))
        yield vecP.reshape(n, n)


def search_certificate(table, tol=DEFAULT_TOL, margin=None):
    """Look for a common quadratic Lyapunov function; ``None`` when the heuristics fail."""
    modes = table.modes if isinstance(table, GainTable) else list(table)
    margin = tol.schur_margin if margin is None else margin
    if not all(is_schur(M, tol) for M in modes):
        raise InvalidInput("every mode must be Schur before searching for a certificate")
    for P in _candidates(modes, tol):
        if not np.all(np.isfinite(P)):
            continue
        P = _normalized(P)
        if validate_certificate(modes, P, margin):
            return LyapunovCertificate(P, certificate_margin(modes, P))
    return None


def supervisor_step(W_u_hat, table, xhat):
    """Switch off isolated actuators and apply the gain of the remaining set.

    Returns ``(rho, u)``; switched-off channels get exactly zero.
    """
    rho = W_u_hat.complement()
    if len(rho) == 0 or not table.admissible(rho):
        raise UnstabilizableConfiguration(
            f"{len(W_u_hat)} actuators isolated ({W_u_hat!r}); the gain table tolerates "
            f"at most {table.bound}")
    xhat = as_vector(xhat, name="xhat")
    u = np.zeros(table.n_u)
    u[rho.zero_based] = table.gains[rho] @ xhat
    return rho, u
