"""Unknown Input Observer synthesis: feasibility, design, redundancy indices, banks.

Design parametrization (fixed, so designs are reproducible)::

    E  = b_J pinv(C^S b_J)        b_J = B for complete observers
    T  = I - E C^S                partial observers only
    A1 = (I - E C^S) A
    K1 = stabilizing_observer_gain(A1, C^S)
    N  = A1 - K1 C^S
    L  = K1 + N E

which solves the UIO constraint equations identically and leaves the error
dynamics ``e+ = N e`` whenever the unknown input enters through ``b_J``.
"""
from dataclasses import dataclass, field
from functools import total_ordering
from itertools import combinations
from math import comb

import numpy as np

from .errors import DesignInfeasible, InvalidInput
from .matrix_core import (
    DEFAULT_TOL, as_matrix, is_detectable, is_schur, is_stabilizable, pinv,
    rank_tol, spectral_radius, stabilizing_observer_gain,
)

DEFAULT_BANK_CAP = 10_000


@total_ordering
@dataclass(frozen=True, eq=True)
class IndexSet:
    """Sorted set of distinct 1-based channel indices within ``1..universe``."""
    indices: tuple
    universe: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise InvalidInput(f"duplicate indices in {idx}")
        if any(i < 1 or i > self.universe for i in idx):
            raise InvalidInput(f"indices {idx} outside 1..{self.universe}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @classmethod
    def full(cls, universe):
        return cls(tuple(range(1, universe + 1)), universe)

    @classmethod
    def empty(cls, universe):
        return cls((), universe)

    @property
    def zero_based(self):
        return [i - 1 for i in self.indices]

    def complement(self):
        return IndexSet(tuple(i for i in range(1, self.universe + 1)
                              if i not in self.indices), self.universe)

    def issubset(self, other):
        return set(self.indices) <= set(other.indices)

    def render(self):
        return ";".join(str(i) for i in self.indices)

    def __lt__(self, other):
        return self.indices < other.indices

    def __iter__(self):
        return iter(self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, i):
        return i in self.indices

    def __repr__(self):
        return "{" + ",".join(str(i) for i in self.indices) + "}"


def subsets(universe, size):
    """All index sets of a given cardinality, in lexicographic order."""
    return [IndexSet(c, universe) for c in combinations(range(1, universe + 1), size)]


@dataclass(frozen=True)
class PlantModel:
    """Discrete-time LTI plant ``x+ = Ax + B(u + a_u)``, ``y = Cx + a_y``.

    Construction asserts B full column rank, (A, B) stabilizable and (A, C)
    detectable. Pass ``validate=False`` only to build deliberately degenerate
    plants in tests.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        if A.shape[0] != A.shape[1]:
            raise InvalidInput(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if B.shape[0] != n:
            raise InvalidInput(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise InvalidInput(f"C must have {n} columns, got {C.shape}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)
        if self.validate:
            if rank_tol(B) != B.shape[1]:
                raise InvalidInput("B must have full column rank")
            if not is_stabilizable(A, B):
                raise InvalidInput("(A, B) must be stabilizable")
            if not is_detectable(A, C):
                raise InvalidInput("(A, C) must be detectable")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_u(self):
        return self.B.shape[1]

    @property
    def n_y(self):
        return self.C.shape[0]

    def columns(self, J_u):
        return self.B[:, J_u.zero_based]

    def rows(self, J_s):
        return self.C[J_s.zero_based, :]


@dataclass(frozen=True)
class CompleteUioDesign:
    """Observer ``z+ = N z + L y^J``, ``xhat = z + E y^J`` blind to all inputs."""
    J_s: IndexSet
    N: np.ndarray
    L: np.ndarray
    E: np.ndarray

    kind = "complete"

    @property
    def key(self):
        return self.J_s

    def residuals(self, plant):
        Cj = plant.rows(self.J_s)
        I = np.eye(plant.n)
        r1 = self.N @ (I - self.E @ Cj) + self.L @ Cj + (self.E @ Cj - I) @ plant.A
        r2 = (self.E @ Cj - I) @ plant.B
        return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


@dataclass(frozen=True)
class PartialUioDesign:
    """Observer ``z+ = N z + T B u + L y^J``, decoupled only from ``b_{J_u}``."""
    J_u: IndexSet
    J_s: IndexSet
    N: np.ndarray
    L: np.ndarray
    E: np.ndarray
    T: np.ndarray

    kind = "partial"

    @property
    def key(self):
        return (self.J_u, self.J_s)

    def residuals(self, plant):
        Cj = plant.rows(self.J_s)
        I = np.eye(plant.n)
        EC = self.E @ Cj
        r1 = self.N @ (I - EC) + self.L @ Cj + (EC - I) @ plant.A
        r2 = (self.T + EC - I) @ plant.B
        r3 = (EC - I) @ plant.columns(self.J_u)
        return tuple(float(np.max(np.abs(r), initial=0.0)) for r in (r1, r2, r3))


def _check_sets(plant, J_u, J_s):
    if J_s.universe != plant.n_y:
        raise InvalidInput(f"sensor set universe {J_s.universe} != n_y={plant.n_y}")
    if len(J_s) == 0:
        raise InvalidInput("sensor set must be non-empty")
    if J_u is not None and J_u.universe != plant.n_u:
        raise InvalidInput(f"actuator set universe {J_u.universe} != n_u={plant.n_u}")


def _decoupling(plant, bJ, J_s, tol):
    """Return ``(E, A1, None)`` or ``(None, None, reason)`` for unknown-input columns bJ."""
    Cj = plant.rows(J_s)
    n = plant.n
    if bJ.shape[1] == 0:
        E = np.zeros((n, len(J_s)))
    else:
        r_b = rank_tol(bJ, tol)
        if r_b != bJ.shape[1]:
            return None, None, f"rank(b_J)={r_b} < {bJ.shape[1]} columns"
        r_cb = rank_tol(Cj @ bJ, tol)
        if r_cb != r_b:
            return None, None, f"rank(C^J_s b_J)={r_cb} != rank(b_J)={r_b}"
        E = bJ @ pinv(Cj @ bJ, tol)
    A1 = (np.eye(n) - E @ Cj) @ plant.A
    if not is_detectable(A1, Cj, tol):
        return None, None, "(C^J_s, A - E C^J_s A) not detectable"
    return E, A1, None


def complete_feasible(plant, J_s, tol=DEFAULT_TOL):
    _check_sets(plant, None, J_s)
    return _decoupling(plant, plant.B, J_s, tol)[2] is None


def partial_feasible(plant, J_u, J_s, tol=DEFAULT_TOL):
    _check_sets(plant, J_u, J_s)
    return _decoupling(plant, plant.columns(J_u), J_s, tol)[2] is None


def _finish(plant, E, A1, J_s, tol, label):
    Cj = plant.rows(J_s)
    K1 = stabilizing_observer_gain(A1, Cj, tol)
    N = A1 - K1 @ Cj
    L = K1 + N @ E
    if not is_schur(N, tol):
        raise DesignInfeasible(
            f"{label}: N has spectral radius {spectral_radius(N):.3g}", subset=label)
    return N, L


def design_complete(plant, J_s, tol=DEFAULT_TOL):
    _check_sets(plant, None, J_s)
    E, A1, reason = _decoupling(plant, plant.B, J_s, tol)
    if reason:
        raise DesignInfeasible(f"complete UIO for J_s={J_s!r}: {reason}", subset=J_s)
    N, L = _finish(plant, E, A1, J_s, tol, f"J_s={J_s!r}")
    design = CompleteUioDesign(J_s, N, L, E)
    worst = max(design.residuals(plant))
    if worst > tol.residual_tol:
        raise DesignInfeasible(f"J_s={J_s!r}: design residual {worst:.3g}", subset=J_s)
    return design


def design_partial(plant, J_u, J_s, tol=DEFAULT_TOL):
    _check_sets(plant, J_u, J_s)
    E, A1, reason = _decoupling(plant, plant.columns(J_u), J_s, tol)
    if reason:
        raise DesignInfeasible(
            f"partial UIO for (J_u={J_u!r}, J_s={J_s!r}): {reason}", subset=(J_u, J_s))
    N, L = _finish(plant, E, A1, J_s, tol, f"(J_u={J_u!r}, J_s={J_s!r})")
    T = np.eye(plant.n) - E @ plant.rows(J_s)
    design = PartialUioDesign(J_u, J_s, N, L, E, T)
    worst = max(design.residuals(plant))
    if worst > tol.residual_tol:
        raise DesignInfeasible(
            f"(J_u={J_u!r}, J_s={J_s!r}): design residual {worst:.3g}", subset=(J_u, J_s))
    return design


# -- redundancy indices -------------------------------------------------------

def max_q(plant, tol=DEFAULT_TOL):
    """Largest q with n_y - 2q > 0 such that every |J_s| >= n_y - 2q admits a complete UIO."""
    n_y = plant.n_y
    best = 0
    checked = n_y + 1  # cardinalities >= checked are known feasible
    q = 1
    while n_y - 2 * q > 0:
        lo = n_y - 2 * q
        for size in range(lo, checked):
            if not all(complete_feasible(plant, J, tol) for J in subsets(n_y, size)):
                return best
        checked = lo
        best = q
        q += 1
    return best


class _PartialIndexSearch:
    """Memoized evaluation of the partial feasibility predicate F(q1, q2)."""

    def __init__(self, plant, tol):
        self.plant = plant
        self.tol = tol
        self._cache = {}

    def _ok(self, J_u, J_s):
        key = (J_u.indices, J_s.indices)
        if key not in self._cache:
            self._cache[key] = _decoupling(
                self.plant, self.plant.columns(J_u), J_s, self.tol)[2] is None
        return self._cache[key]

    def actuator_sets(self, q1):
        n_u = self.plant.n_u
        if q1 == 0:
            return [IndexSet.empty(n_u)]
        return [J for size in range(1, 2 * q1 + 1) for J in subsets(n_u, size)]

    def feasible(self, q1, q2):
        n_y = self.plant.n_y
        sensor_sets = [J for size in range(n_y - 2 * q2, n_y + 1) for J in subsets(n_y, size)]
        return all(self._ok(Ju, Js) for Ju in self.actuator_sets(q1) for Js in sensor_sets)


def max_q1_q2(plant, tol=DEFAULT_TOL, priority="q1"):
    """Largest (q1, q2) with 2 q1 < n_u, n_y - 2 q2 > 0 and every pair partial-feasible.

    ``priority`` picks which index is maximized first. With q1 = 0 the only
    actuator set is the empty one, i.e. plain Luenberger observers.
    """
    if priority not in ("q1", "q2"):
        raise InvalidInput(f"priority must be 'q1' or 'q2', got {priority!r}")
    search = _PartialIndexSearch(plant, tol)
    q1_max = (plant.n_u - 1) // 2
    q2_max = (plant.n_y - 1) // 2

    def largest(fixed, top, make):
        best = None
        for v in range(top + 1):
            if search.feasible(*make(fixed, v)):
                best = v
            elif v >= 1:
                break
        return best

    if priority == "q1":
        for q1 in range(q1_max, -1, -1):
            q2 = largest(q1, q2_max, lambda a, b: (a, b))
            if q2 is not None:
                return q1, q2
    else:
        for q2 in range(q2_max, -1, -1):
            q1 = largest(q2, q1_max, lambda a, b: (b, a))
            if q1 is not None:
                return q1, q2
    return 0, 0


# -- banks ----------------------------------------------------------------------

@dataclass
class BankSpec:
    """Enumerated observer bank.

    ``primary`` holds the keys of the observers whose estimates may be
    selected (|J_s| = n_y - q, or (|J_u|, |J_s|) = (q1, n_y - q2));
    ``secondary`` holds the consistency-check observers.
    """
    kind: str
    indices: tuple
    designs: dict
    primary: list
    secondary: list
    dropped: list = field(default_factory=list)

    def __len__(self):
        return len(self.designs)

    def family(self, key):
        """Secondary keys compared against a primary key when computing pi."""
        if self.kind == "complete":
            return [S for S in self.secondary if S.issubset(key)]
        J_u, J_s = key
        return [(S_u, S_s) for (S_u, S_s) in self.secondary
                if J_u.issubset(S_u) and S_s.issubset(J_s)]

    def max_spectral_radius(self):
        return max(spectral_radius(d.N) for d in self.designs.values())

    def covers(self, key, W_u, W_y):
        """True when observer ``key`` is blind to attacks supported on (W_u, W_y)."""
        if self.kind == "complete":
            J_u, J_s = None, key
        else:
            J_u, J_s = key
        if set(J_s.indices) & set(W_y.indices):
            return False
        if self.kind == "partial" and not W_u.issubset(J_u):
            return False
        return True

    def coverage_gaps(self, W_u, W_y):
        """Primary keys for which the selection argument breaks under (W_u, W_y).

        The bound on the selected estimate needs (a) some primary observer that
        covers the attack pattern and (b) for every primary observer, a member
        of its comparison family that covers it. A full bank satisfies both
        whenever |W_u| <= q1 and |W_y| <= q2; a pruned one may not. Returns
        ``None`` if (a) fails, otherwise the list of primaries violating (b).
        """
        if self.kind == "complete":
            W_u = None
        if not any(self.covers(P, W_u, W_y) for P in self.primary):
            return None
        return [P for P in self.primary
                if not any(self.covers(S, W_u, W_y) for S in self.family(P))]


def bank_size(plant, kind, indices):
    n_u, n_y = plant.n_u, plant.n_y
    if kind == "complete":
        (q,) = indices
        return comb(n_y, n_y - q) + comb(n_y, n_y - 2 * q)
    q1, q2 = indices
    return comb(n_u, q1) * comb(n_y, n_y - q2) + comb(n_u, 2 * q1) * comb(n_y, n_y - 2 * q2)


def enumerate_bank(plant, kind, indices, tol=DEFAULT_TOL, cap=DEFAULT_BANK_CAP,
                   prune_infeasible=False):
    """Design every observer of a complete (``indices=(q,)``) or partial (``(q1, q2)``) bank.

    By default any infeasible member raises :class:`DesignInfeasible`. With
    ``prune_infeasible=True`` such members are skipped and listed in
    ``BankSpec.dropped``; primary observers left without any comparison
    partner are dropped too, since their deviation score is undefined.
    """
    n_u, n_y = plant.n_u, plant.n_y
    indices = tuple(int(i) for i in np.atleast_1d(indices))
    if kind == "complete":
        if len(indices) != 1 or indices[0] < 1 or n_y - 2 * indices[0] <= 0:
            raise InvalidInput(f"complete bank needs 1 <= q < n_y/2, got {indices}")
    elif kind == "partial":
        if len(indices) != 2:
            raise InvalidInput("partial bank needs (q1, q2)")
        q1, q2 = indices
        if q1 < 0 or q2 < 0 or (q1 == 0 and q2 == 0):
            raise InvalidInput(f"partial bank needs q1, q2 >= 0, not both zero; got {indices}")
        if 2 * q1 >= n_u or n_y - 2 * q2 <= 0:
            raise InvalidInput(f"partial bank needs 2 q1 < n_u and 2 q2 < n_y, got {indices}")
    else:
        raise InvalidInput(f"unknown bank kind {kind!r}")

    size = bank_size(plant, kind, indices)
    if size > cap:
        raise DesignInfeasible(f"bank of {size} observers exceeds the cap of {cap}")

    if kind == "complete":
        (q,) = indices
        primary = subsets(n_y, n_y - q)
        secondary = subsets(n_y, n_y - 2 * q)

        def build(key):
            return design_complete(plant, key, tol)
    else:
        q1, q2 = indices
        primary = [(Ju, Js) for Ju in subsets(n_u, q1) for Js in subsets(n_y, n_y - q2)]
        secondary = [(Su, Ss) for Su in subsets(n_u, 2 * q1) for Ss in subsets(n_y, n_y - 2 * q2)]

        def build(key):
            return design_partial(plant, *key, tol)

    designs, dropped = {}, []
    for key in primary + secondary:
        try:
            designs[key] = build(key)
        except DesignInfeasible:
            if not prune_infeasible:
                raise
            dropped.append(key)
    secondary = [S for S in secondary if S in designs]
    bank = BankSpec(kind, indices, designs, [P for P in primary if P in designs],
                    secondary, dropped)
    orphans = [P for P in bank.primary if not bank.family(P)]
    for P in orphans:
        del designs[P]
        dropped.append(P)
    bank.primary = [P for P in bank.primary if P in designs]
    if not bank.primary:
        raise DesignInfeasible("no selectable observer left in the pruned bank")
    return bank
