"""Number-conserving bosonic Fock sector and sparse many-body operators.

States are occupation tuples (n_0, ..., n_{L-1}) with sum N and per-site cap
n_max, enumerated in lexicographic order so that basis layout (and everything
serialized from it) is deterministic across runs.
"""

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np
from scipy.sparse import csr_matrix


@dataclass(frozen=True)
class FockState:
    """Occupation-number state of one sector."""

    occupations: tuple

    def __post_init__(self):
        if any(n < 0 for n in self.occupations):
            raise ValueError("occupations must be non-negative")

    @property
    def n_total(self):
        return sum(self.occupations)


class FockBasis:
    """Complete enumeration of a fixed-N, capped Fock sector.

    states[i] is the i-th occupation tuple in lexicographic order;
    index(state) inverts it.  The basis is immutable after construction and
    safe to share across workers.
    """

    def __init__(self, L, N, n_max, states):
        self.L = L
        self.N = N
        self.n_max = n_max
        self.states = states                       # tuple of occupation tuples
        self.dim = len(states)
        self._index = {s: i for i, s in enumerate(states)}
        # dense occupation table for vectorized diagonal assembly
        self.occupations = np.array(states, dtype=np.float64).reshape(self.dim, L)

    def index(self, state):
        occ = state.occupations if isinstance(state, FockState) else tuple(state)
        return self._index[occ]

    def state(self, i):
        return self.states[i]

    def __len__(self):
        return self.dim


def build_basis(L, N, n_max=None):
    """Enumerate all occupation vectors of N photons on L sites, capped at n_max.

    n_max defaults to min(N, 5). Raises on an empty sector (N > L*n_max).
    For n_max >= N the count is C(N+L-1, N).
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    if n_max is None:
        n_max = min(N, 5) if N > 0 else 1
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if N > L * n_max:
        raise ValueError(f"empty sector: N={N} exceeds L*n_max={L * n_max}")

    states = []

    def extend(prefix, remaining, sites_left):
        if sites_left == 1:
            if remaining <= n_max:
                states.append((*prefix, remaining))
            return
        # smallest feasible occupation first keeps lexicographic order
        lo = max(0, remaining - n_max * (sites_left - 1))
        hi = min(remaining, n_max)
        for n in range(lo, hi + 1):
            extend((*prefix, n), remaining - n, sites_left - 1)

    extend((), N, L)
    basis = FockBasis(L, N, n_max, tuple(states))
    if n_max >= N:
        expected = comb(N + L - 1, N)
        if basis.dim != expected:
            raise AssertionError(
                f"enumeration bug: {basis.dim} states, stars-and-bars gives {expected}"
            )
    return basis


def hop_element(state, m, n_max):
    """Matrix element of a†_m a_{m+1} on an occupation tuple.

    Returns (target_occupations, amplitude); amplitude 0 (with target None)
    when the source site is empty or the target site would exceed n_max.
    The amplitude is sqrt(n_{m+1} (n_m + 1)).
    """
    occ = state.occupations if isinstance(state, FockState) else tuple(state)
    if not 0 <= m <= len(occ) - 2:
        raise ValueError(f"bond index {m} out of range for L={len(occ)}")
    if occ[m + 1] == 0 or occ[m] + 1 > n_max:
        return None, 0.0
    target = list(occ)
    target[m + 1] -= 1
    target[m] += 1
    return tuple(target), sqrt(occ[m + 1] * (occ[m] + 1))


@dataclass
class SparseOperator:
    """Hermitian-flaggable sparse operator over a FockBasis."""

    dim: int
    matrix: csr_matrix
    hermitian: bool = True

    @property
    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def matvec(self, v):
        return self.matrix @ v

    def toarray(self):
        return self.matrix.toarray()

    def diagonal(self):
        return self.matrix.diagonal()

    def is_hermitian(self, tol=0.0):
        d = self.matrix - self.matrix.conjugate().transpose()
        return abs(d).max() <= tol if d.nnz else True


def hopping_operator(basis):
    """Sum over bonds of (a†_m a_{m+1} + h.c.) as a SparseOperator.

    Couplings (e.g. -J) are applied by the caller; the structure depends only
    on the basis, so it is cached on the basis instance and reused across
    time steps.
    """
    cached = getattr(basis, "_hop_operator", None)
    if cached is not None:
        return cached
    rows, cols, vals = [], [], []
    for i, s in enumerate(basis.states):
        for m in range(basis.L - 1):
            target, amp = hop_element(s, m, basis.n_max)
            if amp != 0.0:
                j = basis.index(target)
                rows += [j, i]
                cols += [i, j]
                vals += [amp, amp]
    mat = csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)),
        shape=(basis.dim, basis.dim),
    )
    mat.sum_duplicates()
    op = SparseOperator(dim=basis.dim, matrix=mat, hermitian=True)
    basis._hop_operator = op
    return op


def number_operator_diagonal(basis, weights):
    """Diagonal operator sum_m weights[m] * n_m over the basis."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (basis.L,):
        raise ValueError(f"weights length {weights.shape} does not match L={basis.L}")
    diag = basis.occupations @ weights
    mat = csr_matrix(
        (diag, (np.arange(basis.dim), np.arange(basis.dim))),
        shape=(basis.dim, basis.dim),
    )
    return SparseOperator(dim=basis.dim, matrix=mat, hermitian=True)


def interaction_diagonal(basis, U):
    """Diagonal of (U/2) sum_m n_m (n_m - 1) as a plain vector."""
    occ = basis.occupations
    return 0.5 * U * (occ * (occ - 1.0)).sum(axis=1)


def annihilation_operator(basis_from, basis_to, m):
    """a_m as a sparse map from the N-photon sector to the (N-1)-photon sector."""
    if basis_to.N != basis_from.N - 1 or basis_to.L != basis_from.L:
        raise ValueError("target basis must be the same lattice with one photon fewer")
    rows, cols, vals = [], [], []
    for i, s in enumerate(basis_from.states):
        if s[m] == 0:
            continue
        target = list(s)
        target[m] -= 1
        rows.append(basis_to.index(tuple(target)))
        cols.append(i)
        vals.append(sqrt(s[m]))
    return csr_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)),
        shape=(basis_to.dim, basis_from.dim),
    )
