"""Independent reference implementations used to check the library.

None of these call into ``uiobank``'s linear algebra: ranks come from Gram
eigenvalues or exact rational arithmetic, spectral radii from characteristic
polynomials, detectability from the unobservable-subspace decomposition
rather than a PBH rank test, and index searches are exhaustive.
"""
from itertools import combinations

import numpy as np
import sympy as sp
from scipy.linalg import null_space

MARGIN = 1e-6
RTOL = 1e-9


def gram_rank(M, rtol=RTOL):
    """Rank from the eigenvalues of M'M (singular values squared)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0 or not np.any(M):
        return 0
    M = M / np.max(np.abs(M))
    G = M.T @ M if M.shape[0] >= M.shape[1] else M @ M.T
    ev = np.clip(np.linalg.eigvalsh(G), 0.0, None)
    s = np.sqrt(ev)
    if s.max() == 0:
        return 0
    # squaring halves the usable precision, so the cutoff is floored at ~sqrt(eps)
    return int(np.sum(s > max(rtol, 1e-7) * s.max()))


def rational(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return sp.Matrix(M.shape[0], M.shape[1],
                     [sp.nsimplify(float(v), rational=True) for v in M.ravel()])


def exact_rank(M):
    return rational(M).rank()


def charpoly(M):
    """Faddeev-LeVerrier coefficients [1, c1, ..., cn] of det(lambda I - M)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = [1.0]
    Mk = np.zeros_like(M)
    I = np.eye(n)
    for k in range(1, n + 1):
        Mk = M @ (Mk + coeffs[-1] * I)
        coeffs.append(-np.trace(Mk) / k)
    return np.array(coeffs)


def spectral_radius(M):
    M = np.asarray(M, dtype=float)
    if M.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.roots(charpoly(M)))))


def observability_matrix(A, C):
    n = A.shape[0]
    blocks, Ck = [], C
    for _ in range(n):
        blocks.append(Ck)
        Ck = Ck @ A
    return np.vstack(blocks)


def detectable(A, C, margin=MARGIN):
    """Modes on the unobservable subspace must be strictly inside radius 1 - margin."""
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    O = observability_matrix(A, C)
    U = null_space(O, rcond=1e-10) if np.any(O) else np.eye(A.shape[0])
    if U.shape[1] == 0:
        return True
    restricted = U.T @ A @ U
    return bool(np.max(np.abs(np.linalg.eigvals(restricted))) < 1 - margin)


def stabilizable(A, B, margin=MARGIN):
    return detectable(np.asarray(A).T, np.asarray(B).T, margin)


def uio_feasible(A, bJ, Cj, margin=MARGIN):
    """Rank condition plus detectability of the decoupled pair."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if bJ.shape[1] == 0:
        return detectable(A, Cj, margin)
    CB = Cj @ bJ
    if gram_rank(bJ) != bJ.shape[1] or gram_rank(CB) != bJ.shape[1]:
        return False
    # E solves E (C^J b_J) = b_J in the least-squares sense
    E = np.linalg.lstsq(CB.T, bJ.T, rcond=None)[0].T
    A1 = (np.eye(n) - E @ Cj) @ A
    return detectable(A1, Cj, margin)


def exact_uio_feasible(A, bJ, Cj):
    """Same predicate in rational arithmetic; eigenvalues of the restriction in floats."""
    A, bJ, Cj = rational(A), rational(bJ), rational(Cj)
    n = A.shape[0]
    if bJ.shape[1] == 0:
        E = sp.zeros(n, Cj.shape[0])
    else:
        CB = Cj * bJ
        if bJ.rank() != bJ.shape[1] or CB.rank() != bJ.shape[1]:
            return False
        E = bJ * (CB.T * CB).inv() * CB.T
    A1 = (sp.eye(n) - E * Cj) * A
    O = sp.Matrix.vstack(*[Cj * A1 ** k for k in range(n)])
    basis = O.nullspace()
    if not basis:
        return True
    U = sp.Matrix.hstack(*basis)
    # A1 U = U R for the invariant unobservable subspace
    R = (U.T * U).inv() * U.T * A1 * U
    ev = np.linalg.eigvals(np.array(R.evalf(30).tolist(), dtype=float))
    return bool(np.max(np.abs(ev)) < 1 - MARGIN)


def _cols(B, J):
    return np.asarray(B)[:, [j - 1 for j in J]]


def _rows(C, J):
    return np.asarray(C)[[j - 1 for j in J], :]


def _sets(m, lo):
    return [J for size in range(lo, m + 1) for J in combinations(range(1, m + 1), size)]


def brute_max_q(A, B, C, feasible=uio_feasible):
    n_y = C.shape[0]
    for q in range((n_y - 1) // 2, 0, -1):
        if all(feasible(A, B, _rows(C, J)) for J in _sets(n_y, n_y - 2 * q)):
            return q
    return 0


def partial_ok(A, B, C, q1, q2, feasible=uio_feasible):
    n_u, n_y = B.shape[1], C.shape[0]
    act = [()] if q1 == 0 else [J for size in range(1, 2 * q1 + 1)
                                for J in combinations(range(1, n_u + 1), size)]
    return all(feasible(A, _cols(B, Ju), _rows(C, Js))
               for Ju in act for Js in _sets(n_y, n_y - 2 * q2))


def brute_max_q1_q2(A, B, C, priority="q1", feasible=uio_feasible):
    n_u, n_y = B.shape[1], C.shape[0]
    pairs = [(a, b) for a in range((n_u - 1) // 2 + 1) for b in range((n_y - 1) // 2 + 1)
             if (a, b) != (0, 0) and partial_ok(A, B, C, a, b, feasible)]
    if not pairs:
        return 0, 0
    if priority == "q1":
        return max(pairs)
    return max(pairs, key=lambda p: (p[1], p[0]))


def brute_max_qstar(A, B):
    n_u = B.shape[1]
    best = 0
    for q in range(1, n_u):
        if all(stabilizable(A, _cols(B, J)) for J in _sets(n_u, n_u - q)):
            best = q
    return best


def grid_cqlf(modes, steps=121, span=4.0):
    """Search P = [[1, b], [b, c]] on a grid; return a P with M'PM - P < 0 for all modes, else None."""
    for b in np.linspace(-span, span, steps):
        for c in np.geomspace(1e-3, 1e3, steps):
            P = np.array([[1.0, b], [b, c]])
            if np.linalg.eigvalsh(P)[0] <= 0:
                continue
            if all(np.linalg.eigvalsh(M.T @ P @ M - P)[-1] < 0 for M in modes):
                return P
    return None


def random_plant(rng, n_max=4, n_u_max=3, n_y_max=5, integer=False):
    """Random (A, B, C); rank, stabilizability and detectability are not enforced."""
    n = int(rng.integers(1, n_max + 1))
    n_u = int(rng.integers(1, min(n, n_u_max) + 1))
    n_y = int(rng.integers(1, n_y_max + 1))
    if integer:
        draw = lambda *shape: rng.integers(-2, 3, size=shape).astype(float)
    else:
        draw = lambda *shape: rng.normal(size=shape)
    A = draw(n, n) * (0.5 if integer else 0.6)
    B = draw(n, n_u)
    C = draw(n_y, n)
    return A, B, C
