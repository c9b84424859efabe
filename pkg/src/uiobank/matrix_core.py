"""Dense real-matrix primitives with explicit numerical tolerances.

Everything here is a pure function of its arguments. Matrices are plain
``numpy.ndarray`` objects; :func:`as_matrix` is the single entry point that
checks shape and finiteness.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DesignInfeasible, InvalidInput, NoConvergence

__all__ = [
    "Tolerances", "DEFAULT_TOL", "as_matrix", "as_vector", "rank_tol", "pinv",
    "spectral_radius", "is_schur", "is_detectable", "is_stabilizable",
    "solve_dare", "stabilizing_state_gain", "stabilizing_observer_gain",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout synthesis and validation.

    rank_tol is relative to the largest singular value; schur_margin is the
    distance from the unit circle a spectral radius must keep.
    """
    rank_tol: float = 1e-9
    schur_margin: float = 1e-6
    residual_tol: float = 1e-8
    iter_tol: float = 1e-12
    iter_max: int = 10_000

    def __post_init__(self):
        for name in ("rank_tol", "schur_margin", "residual_tol", "iter_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInput(f"{name} must be finite and > 0, got {value!r}")
        if self.schur_margin >= 1:
            raise InvalidInput("schur_margin must be < 1")
        if int(self.iter_max) < 1:
            raise InvalidInput("iter_max must be >= 1")

    @property
    def schur_radius(self):
        return 1.0 - self.schur_margin


DEFAULT_TOL = Tolerances()


def as_matrix(M, name="matrix", allow_empty=False):
    """Return ``M`` as a finite 2-D float array or raise :class:`InvalidInput`."""
    try:
        arr = np.asarray(M)
    except ValueError:
        raise InvalidInput(f"{name}: ragged or non-numeric entries") from None
    if arr.dtype == object:
        raise InvalidInput(f"{name}: ragged or non-numeric entries")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInput(f"{name}: expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.size == 0 and not allow_empty:
        raise InvalidInput(f"{name}: empty matrix")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: non-finite entries")
    return arr


def as_vector(v, length=None, name="vector"):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if length is not None and arr.shape[0] != length:
        raise InvalidInput(f"{name}: expected length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name}: non-finite entries")
    return arr


def _square(M, name):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{name}: expected a square matrix, got {M.shape}")
    return M


def rank_tol(M, tol=DEFAULT_TOL, scale=0.0):
    """Count singular values above ``tol.rank_tol * max(s_max, scale)``.

    ``scale`` lets callers measure rank against the size of the data ``M``
    was built from, so a matrix made only of cancellation noise has rank 0.
    """
    M = as_matrix(M, "M")
    s = np.linalg.svd(M, compute_uv=False)
    ref = max(s[0] if s.size else 0.0, scale)
    if ref == 0.0:
        return 0
    return int(np.sum(s > tol.rank_tol * ref))


def pinv(M, tol=DEFAULT_TOL):
    """Moore-Penrose pseudoinverse with the package's relative rank cutoff."""
    M = as_matrix(M, "M")
    return np.linalg.pinv(M, rcond=tol.rank_tol)


def spectral_radius(M):
    M = _square(M, "M")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_schur(M, tol=DEFAULT_TOL):
    return spectral_radius(M) <= tol.schur_radius


def is_detectable(A, C, tol=DEFAULT_TOL):
    """PBH test: every eigenvalue of A with |lambda| >= 1 - margin is observable."""
    A = _square(A, "A")
    C = as_matrix(C, "C")
    n = A.shape[0]
    if C.shape[1] != n:
        raise InvalidInput(f"C has {C.shape[1]} columns, A is {n}x{n}")
    eye = np.eye(n)
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(C, 2) if C.size else 0.0)
    for lam in np.linalg.eigvals(A):
        if abs(lam) < tol.schur_radius:
            continue
        if rank_tol(np.vstack([A - lam * eye, C]), tol, scale) < n:
            return False
    return True


def is_stabilizable(A, B, tol=DEFAULT_TOL):
    A = _square(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise InvalidInput(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    return is_detectable(A.T, B.T, tol)


def solve_dare(A, B, Q=None, R=None, tol=DEFAULT_TOL):
    """Stabilizing DARE solution by fixed-point (Riccati difference) iteration.

    Iterates ``P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA`` from ``P = Q`` until
    successive iterates differ by less than ``iter_tol`` (relative to the
    magnitude of P once it exceeds 1). Returns ``(P, K)`` with
    ``K = -(R + B'PB)^-1 B'PA`` so that ``A + BK`` is the closed loop.
    """
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n, m = B.shape
    Q = np.eye(n) if Q is None else as_matrix(Q, "Q")
    R = np.eye(m) if R is None else as_matrix(R, "R")
    P = Q.copy()
    for _ in range(int(tol.iter_max)):
        BtP = B.T @ P
        G = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ G
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)):
            raise NoConvergence("Riccati iteration overflowed")
        step = np.max(np.abs(P_next - P))
        P = P_next
        if step < tol.iter_tol * max(1.0, np.max(np.abs(P))):
            break
    else:
        raise NoConvergence(f"Riccati iteration did not converge in {tol.iter_max} steps")
    BtP = B.T @ P
    K = -np.linalg.solve(R + BtP @ B, BtP @ A)
    return P, K


def stabilizing_state_gain(A, B, tol=DEFAULT_TOL):
    """Gain K with A + BK Schur, from the identity-weighted DARE."""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    if not is_stabilizable(A, B, tol):
        raise DesignInfeasible("(A, B) is not stabilizable")
    _, K = solve_dare(A, B, tol=tol)
    rho = spectral_radius(A + B @ K)
    if rho > tol.schur_radius:
        raise DesignInfeasible(
            f"Riccati gain leaves spectral radius {rho:.3g} above {tol.schur_radius}")
    return K


def stabilizing_observer_gain(A1, C, tol=DEFAULT_TOL):
    """Gain K1 with A1 - K1 C Schur (dual of :func:`stabilizing_state_gain`)."""
    A1 = _square(A1, "A1")
    C = as_matrix(C, "C")
    if not is_detectable(A1, C, tol):
        raise DesignInfeasible("(C, A1) is not detectable")
    K = stabilizing_state_gain(A1.T, C.T, tol)
    return -K.T
