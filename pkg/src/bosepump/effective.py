"""Perturbative three-photon analysis of a single trimer.

Treats the hopping as a perturbation on the interacting on-site problem:
bare cluster band energies, the block-diagonalizing generators evaluated
order by order from the commutator series, the resulting two-state block at
an anticrossing, and exact-diagonalization cross-checks on the full
ten-state trimer sector.
"""

import warnings
from dataclasses import dataclass
from math import cos, pi, sqrt

import numpy as np
from scipy.linalg import eigh, expm
from scipy.optimize import minimize_scalar

from .fockspace import build_basis
from .model import ModelParams, PhaseSweep, build_hamiltonian

TRIMER_STATES = ((3, 0, 0), (0, 3, 0), (2, 1, 0), (1, 2, 0))
_MANIFOLD = np.array([0, 0, 1, 1])  # 0: three-photon sites, 1: split 2+1


@dataclass(frozen=True)
class TrimerSubspace:
    """Four-state working space {|300>, |030>, |210>, |120>} on one trimer."""

    states: tuple = TRIMER_STATES

    @property
    def p3(self):
        return np.diag([1.0, 1.0, 0.0, 0.0])

    @property
    def p2(self):
        return np.diag([0.0, 0.0, 1.0, 1.0])

    def energies(self, phi, delta, U):
        """Diagonal on-site energies of the four states at pump phase phi."""
        w = [delta * cos(2.0 * pi * m / 3.0 + phi) for m in range(3)]
        e = []
        for occ in self.states:
            onsite = sum(n * wm for n, wm in zip(occ, w))
            inter = 0.5 * U * sum(n * (n - 1) for n in occ)
            e.append(onsite + inter)
        return np.array(e)

    def hopping(self, J):
        """Nearest-neighbour hopping restricted to the subspace."""
        V = np.zeros((4, 4))
        idx = {s: i for i, s in enumerate(self.states)}
        for s, i in idx.items():
            for m in range(2):
                # a\dagger_m a_{m+1}
                if s[m + 1] > 0 and s[m] + 1 <= 3:
                    t = list(s)
                    t[m + 1] -= 1
                    t[m] += 1
                    t = tuple(t)
                    if t in idx:
                        amp = -J * sqrt(s[m + 1] * (s[m] + 1))
                        V[idx[t], i] += amp
                        V[i, idx[t]] += amp
        return V


@dataclass(frozen=True)
class EffectiveBand:
    """One three-photon cluster band: bare label, sublattice, Chern number.

    The Chern assignment follows the band position (lowest, middle, highest)
    at the reference phase pi/2, where the three curves are nondegenerate.
    """

    label: str
    sublattice: int
    position: str
    chern: int

    def energy(self, phi, delta, U):
        return band_energy(self.label, phi, delta, U)


def effective_bands():
    """The three cluster bands with their transport assignments."""
    return (
        EffectiveBand(label="030", sublattice=1, position="lowest", chern=1),
        EffectiveBand(label="300", sublattice=0, position="middle", chern=-2),
        EffectiveBand(label="003", sublattice=2, position="highest", chern=1),
    )


def band_energy(mu, phi, delta, U):
    """Bare cluster band E = 3 delta cos(phi + 2 pi s/3) + 3 U."""
    sublattice = {"300": 0, "030": 1, "003": 2}
    if mu not in sublattice:
        raise ValueError(f"band label must be one of 300/030/003, got {mu!r}")
    return 3.0 * delta * cos(phi + 2.0 * pi * sublattice[mu] / 3.0) + 3.0 * U


def effective_hopping(J, U):
    """Cluster tunneling matrix element J^3 / (sqrt(2) U^2).

    Vanishing interaction leaves no splitting between the cluster and
    split-photon manifolds, so the perturbative scheme has no small
    denominator to organize around.
    """
    if U == 0:
        raise ValueError("effective hopping undefined at U = 0: "
                         "the manifolds are degenerate without interactions")
    return J**3 / (sqrt(2.0) * U**2)


def _offdiag(M):
    mask = _MANIFOLD[:, None] != _MANIFOLD[None, :]
    return np.where(mask, M, 0.0)


def _diagblock(M):
    return M - _offdiag(M)


def _solve_generator(X, E):
    """Anti-Hermitian G with [G, diag(E)] = offdiag-block of X.

    G_ab = X_ab / (E_b - E_a) on inter-manifold entries, zero inside each
    manifold, mirroring the choice P_alpha G P_alpha = 0.
    """
    mask = _MANIFOLD[:, None] != _MANIFOLD[None, :]
    denom = E[None, :] - E[:, None]
    if np.any(mask & (np.abs(denom) < 1e-12)):
        raise ValueError("inter-manifold degeneracy: generator is singular")
    G = np.zeros_like(X)
    G[mask] = X[mask] / denom[mask]
    return G


def _commutator_series(J, U, E):
    """Generators and transformed orders for H = diag(E) + V on the subspace.

    Returns (G1, G2, G3, orders) with orders[k] the k-th order of
    exp(-G) H exp(G) after each G_k is chosen to cancel the inter-manifold
    block at its order.
    """
    sub = TrimerSubspace()
    V = sub.hopping(J)
    c = lambda A, B: A @ B - B @ A

    G1 = _solve_generator(_offdiag(V), E)
    h1 = _diagblock(V)

    v_od = _offdiag(V)
    A2 = -c(G1, V) + 0.5 * c(G1, v_od)
    G2 = _solve_generator(_offdiag(A2), E)
    h2 = _diagblock(A2)

    a2_od = _offdiag(A2)
    A3 = (
        -c(G2, V)
        + 0.5 * (c(G1, a2_od) + c(G2, v_od))
        + 0.5 * c(G1, c(G1, V))
        - c(G1, c(G1, v_od)) / 6.0
    )
    G3 = _solve_generator(_offdiag(A3), E)
    h3 = _diagblock(A3)

    return G1, G2, G3, (np.diag(E), h1, h2, h3)


def sw_generators(J, U):
    """First- and second-order block-off-diagonal generators on the subspace.

    Both are anti-Hermitian with no matrix elements inside either manifold.
    Evaluated at the phase where the two three-photon states are degenerate,
    where the manifold splitting is -2U.
    """
    if U == 0:
        raise ValueError("generators undefined at U = 0: "
                         "the manifolds are degenerate without interactions")
    E = np.array([3.0 * U, 3.0 * U, U, U])
    G1, G2, _, _ = _commutator_series(J, U, E)
    return G1, G2


@dataclass
class EffectiveBlock:
    """Two-state cluster block of the transformed trimer Hamiltonian.

    matrix is the {|300>, |030>} block through third order. transformed is
    the full four-state matrix under the exact exponential of the truncated
    generator, for residual checks. orders holds the per-order four-state
    contributions. condition_ok records the perturbative-regime check
    0 < sqrt(3) J < -2U.
    """

    matrix: np.ndarray
    transformed: np.ndarray
    orders: tuple
    condition_ok: bool


def effective_block_hamiltonian(J, U, delta, phi_star=2.0 * pi / 3.0):
    """Block Hamiltonian on the two three-photon states at an anticrossing.

    phi_star should sit at a degeneracy of the two cluster states (for the
    default, omega_A = omega_B). The perturbative condition is warned about,
    not enforced; the flag rides along on the result.
    """
    if U == 0:
        raise ValueError("block Hamiltonian undefined at U = 0")
    condition_ok = 0.0 < sqrt(3.0) * J < -2.0 * U
    if J > 0 and not condition_ok:
        warnings.warn(
            f"perturbative condition 0 < sqrt(3) J < -2U violated "
            f"(J={J}, U={U}); block values are extrapolations",
            stacklevel=2,
        )
    sub = TrimerSubspace()
    E = sub.energies(phi_star, delta, U)
    G1, G2, G3, orders = _commutator_series(J, U, E)
    total = sum(orders)
    G = G1 + G2 + G3
    H = np.diag(E) + sub.hopping(J)
    transformed = expm(-G) @ H @ expm(G)
    return EffectiveBlock(
        matrix=total[:2, :2].copy(),
        transformed=transformed,
        orders=orders,
        condition_ok=condition_ok,
    )


def _trimer_hamiltonian_dense(phi, delta, U, J, basis, periodic=False):
    params = ModelParams(L=3, delta=delta, U=U, J=J) if J > 0 else None
    if params is None:
        # hopping-free limit assembled directly; ModelParams insists J > 0
        w = [delta * cos(2.0 * pi * m / 3.0 + phi) for m in range(3)]
        diag = [
            sum(n * wm for n, wm in zip(occ, w))
            + 0.5 * U * sum(n * (n - 1) for n in occ)
            for occ in basis.states
        ]
        return np.diag(diag)
    path = PhaseSweep(omega=1.0, phi0=phi, cycles=1.0)
    H = build_hamiltonian(0.0, basis, params, path).toarray()
    if periodic:
        # wrap bond a\dagger_2 a_0 + h.c. closing the cell into a ring
        for i, s in enumerate(basis.states):
            if s[0] > 0 and s[2] < basis.n_max:
                t = list(s)
                t[0] -= 1
                t[2] += 1
                j = basis.index(tuple(t))
                amp = -J * sqrt(s[0] * (s[2] + 1))
                H[j, i] += amp
                H[i, j] += amp
    return H


def _cluster_pair_gap(phi, delta, U, J, basis, pair_indices):
    H = _trimer_hamiltonian_dense(phi, delta, U, J, basis)
    evals, evecs = eigh(H)
    weight = (np.abs(evecs[pair_indices, :]) ** 2).sum(axis=0)
    a, b = np.argsort(weight)[-2:]
    return abs(evals[a] - evals[b])


def trimer_gap_exact(J, U, delta, phi_star=2.0 * pi / 3.0, window=0.3):
    """Exact anticrossing gap of the two cluster bands on one trimer.

    Diagonalizes the full ten-state sector on a phi window around the bare
    crossing and minimizes the splitting of the two eigenstates carrying the
    most weight on the degenerate pair {|300>, |030>}; second-order shifts
    move the true minimum slightly off phi_star. The cell is kept open (no
    wrap bond): the pair sits on adjacent sites, which is the geometry the
    perturbative matrix element describes.
    """
    basis = build_basis(3, 3, 3)
    pair = np.array([basis.index((3, 0, 0)), basis.index((0, 3, 0))])
    if J == 0:
        return 0.0
    grid = np.linspace(phi_star - window, phi_star + window, 61)
    gaps = [_cluster_pair_gap(p, delta, U, J, basis, pair) for p in grid]
    k = int(np.argmin(gaps))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda p: _cluster_pair_gap(p, delta, U, J, basis, pair),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.fun)


@dataclass
class BandScan:
    """Sorted three-band spectrum over a phase grid."""

    phi: np.ndarray
    bands: np.ndarray  # (n, 3) ascending per row

    @property
    def gap_low_mid(self):
        return self.bands[:, 1] - self.bands[:, 0]

    @property
    def gap_mid_high(self):
        return self.bands[:, 2] - self.bands[:, 1]

    def min_gap(self):
        return float(min(self.gap_low_mid.min(), self.gap_mid_high.min()))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("phi,E_low,E_mid,E_high,gap_low_mid,gap_mid_high\n")
            for i in range(len(self.phi)):
                row = [
                    self.phi[i],
                    self.bands[i, 0],
                    self.bands[i, 1],
                    self.bands[i, 2],
                    self.gap_low_mid[i],
                    self.gap_mid_high[i],
                ]
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def three_band_spectrum(delta, U, J, phi_grid):
    """Three-photon cluster bands over a phase grid.

    The three-site cell is closed into a ring so that every sublattice pair
    is adjacent, as each pair is somewhere in the extended array (A next to
    B and C inside a cell, C next to the following cell's A). On an open
    cell the outer two sites only talk through the far-detuned middle one,
    and the pair of bands meeting there would graze within ~1e-3 J instead
    of showing the avoided crossing that the array geometry provides.

    At every phase the three eigenstates carrying the largest combined
    weight on the anchoring cluster states {|300>, |030>, |003>} are kept.
    Combined anchor weight is robust where plain successive-overlap
    tracking derails: at an anticrossing the two cluster eigenstates split
    their weight evenly between two anchors, and at narrow resonances with
    split-photon levels the eigenvectors hybridize within a window far
    smaller than any practical grid spacing. Where a cluster band meets a
    split-photon band in a wide avoided crossing (the marginal regime
    |U| ~ J), the reported curve follows the branch holding the larger
    cluster weight and hops branches at the resonance center; the inter-band
    gaps stay large there. Energies are sorted per phase.
    """
    phi_grid = np.asarray(phi_grid, dtype=np.float64)
    basis = build_basis(3, 3, 3)
    anchors = [basis.index(s) for s in ((3, 0, 0), (0, 3, 0), (0, 0, 3))]

    out = np.empty((len(phi_grid), 3))
    for i, phi in enumerate(phi_grid):
        H = _trimer_hamiltonian_dense(phi, delta, U, J, basis, periodic=True)
        evals, evecs = eigh(H)
        weights = (np.abs(evecs[anchors, :]) ** 2).sum(axis=0)
        chosen = np.argsort(weights)[-3:]
        out[i] = np.sort(evals[chosen])
    return BandScan(phi=phi_grid, bands=out)
