"""Closed-system time evolution and transport observables.

The propagator is an adaptive-dimension Lanczos exponential applied to the
Hamiltonian frozen at each step midpoint. Sector dimensions stay small enough
(tens of thousands) that matrix-free Krylov steps beat any tensor-network
machinery here.
"""

from dataclasses import dataclass
from math import ceil, isnan

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal

from .fockspace import hopping_operator, interaction_diagonal
from .model import build_hamiltonian, onsite_profile, sample_noise

KRYLOV_MAX_DIM = 60
KRYLOV_TOL = 1e-10


@dataclass
class StateVector:
    """Complex amplitudes over a FockBasis."""

    basis: object
    amplitudes: np.ndarray

    @classmethod
    def from_occupation(cls, basis, occupations):
        """Unit amplitude on a single occupation tuple."""
        amps = np.zeros(basis.dim, dtype=np.complex128)
        amps[basis.index(tuple(occupations))] = 1.0
        return cls(basis=basis, amplitudes=amps)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def density(self):
        return (np.abs(self.amplitudes) ** 2) @ self.basis.occupations

    def total_n(self):
        return float(self.density().sum())

    def com(self):
        dens = self.density()
        tot = dens.sum()
        if tot <= 0.0:
            return float("nan")
        return float(dens @ np.arange(self.basis.L) / tot)


@dataclass
class ObservableSeries:
    """Time series of norm, total photon number, center of mass, densities.

    density has shape (n_times, L). Center of mass is in units of the site
    index m, normalized by the instantaneous total photon number.
    """

    times: np.ndarray
    norm: np.ndarray
    total_n: np.ndarray
    com: np.ndarray
    density: np.ndarray

    def __len__(self):
        return len(self.times)

    @property
    def L(self):
        return self.density.shape[1]

    def displacement(self):
        return float(self.com[-1] - self.com[0])

    def to_csv(self, path):
        L = self.L
        header = "t,norm,total_n,com," + ",".join(f"n_{m}" for m in range(L))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for i in range(len(self.times)):
                row = [self.times[i], self.norm[i], self.total_n[i], self.com[i]]
                row.extend(self.density[i])
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(
            times=data[:, 0],
            norm=data[:, 1],
            total_n=data[:, 2],
            com=data[:, 3],
            density=data[:, 4:],
        )


def _expm_lanczos(matvec, v, dt, tol, m_max=KRYLOV_MAX_DIM, _depth=0):
    """exp(-i dt H) v for Hermitian H given only as matvec.

    Residual estimate |beta * u_last * dt| < tol stops the subspace growth;
    an exhausted subspace falls back to two half steps. A vanishing beta is
    a happy breakdown: the subspace is exact.
    """
    norm0 = np.linalg.norm(v)
    if norm0 == 0.0:
        return v.copy()
    V = [v / norm0]
    alphas, betas = [], []
    w = matvec(V[0])
    a = np.vdot(V[0], w).real
    alphas.append(a)
    w = w - a * V[0]
    converged = False
    for j in range(1, m_max):
        b = np.linalg.norm(w)
        if b < 1e-14:
            converged = True
            break
        betas.append(b)
        V.append(w / b)
        w = matvec(V[j]) - b * V[j - 1]
        a = np.vdot(V[j], w).real
        alphas.append(a)
        w = w - a * V[j]
        if j >= 2:
            ev, Q = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
            u = Q @ (np.exp(-1j * dt * ev) * Q[0, :])
            if abs(b * u[-1]) * abs(dt) < tol:
                converged = True
                break
    if not converged:
        if _depth >= 8:
            raise RuntimeError(
                f"Krylov propagator did not converge at subspace size {m_max}"
            )
        half = _expm_lanczos(matvec, v, dt / 2, tol, m_max, _depth + 1)
        return _expm_lanczos(matvec, half, dt / 2, tol, m_max, _depth + 1)
    ev, Q = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
    u = Q @ (np.exp(-1j * dt * ev) * Q[0, :])
    return norm0 * (np.asarray(V).T @ u)


def krylov_step(psi, H, dt, tol=KRYLOV_TOL):
    """One step psi -> exp(-i H dt) psi for a sparse Hermitian H."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    mat = H.matrix
    out = _expm_lanczos(lambda x: mat @ x, np.asarray(psi.amplitudes, dtype=np.complex128), dt, tol)
    return StateVector(basis=psi.basis, amplitudes=out)


def _observe(amps, occ, sites):
    dens = (np.abs(amps) ** 2) @ occ
    tot = dens.sum()
    com = float(dens @ sites / tot) if tot > 0 else float("nan")
    return float(np.linalg.norm(amps)), float(tot), com, dens


def pump_run(
    basis,
    params,
    path,
    psi0,
    dt=0.05,
    noise=None,
    tol=KRYLOV_TOL,
    record_stride=1,
    keep_states=False,
):
    """Evolve psi0 across the pump path, recording observables.

    Each step uses the Hamiltonian frozen at its midpoint. Noise, when a
    NoiseSpec with eta > 0 is given, adds eta * r_m(t_mid) to the on-site
    energies with r_m redrawn every redraw_dt; eta = 0 takes the identical
    code path as no noise. Returns an ObservableSeries, or (series, states)
    with one state per recorded time when keep_states is set.
    """
    amps = np.asarray(
        psi0.amplitudes if isinstance(psi0, StateVector) else psi0,
        dtype=np.complex128,
    ).copy()
    if amps.shape != (basis.dim,):
        raise ValueError(f"state has length {amps.shape}, basis dim {basis.dim}")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-8:
        raise ValueError("initial state must be normalized")
    if record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {record_stride}")

    occ = basis.occupations
    sites = np.arange(basis.L, dtype=np.float64)
    hop = -params.J * hopping_operator(basis).matrix
    u_diag = interaction_diagonal(basis, params.U)
    use_noise = noise is not None and noise.eta > 0.0

    duration = path.duration
    n_steps = 0 if duration == 0 else int(ceil(duration / dt))
    dt_eff = duration / n_steps if n_steps else 0.0

    times, norms, totals, coms, densities = [], [], [], [], []
    states = [] if keep_states else None

    def record(t):
        nrm, tot, com, dens = _observe(amps, occ, sites)
        times.append(t)
        norms.append(nrm)
        totals.append(tot)
        coms.append(com)
        densities.append(dens)
        if keep_states:
            states.append(amps.copy())

    record(0.0)
    for k in range(n_steps):
        t_mid = (k + 0.5) * dt_eff
        diag = occ @ onsite_profile(t_mid, params, path) + u_diag
        if use_noise:
            diag = diag + occ @ (noise.eta * sample_noise(noise, t_mid, params.L))
        amps = _expm_lanczos(lambda x: hop @ x + diag * x, amps, dt_eff, tol)
        if (k + 1) % record_stride == 0 or k + 1 == n_steps:
            record((k + 1) * dt_eff)

    series = ObservableSeries(
        times=np.asarray(times),
        norm=np.asarray(norms),
        total_n=np.asarray(totals),
        com=np.asarray(coms),
        density=np.asarray(densities),
    )
    if keep_states:
        return series, np.asarray(states)
    return series


def chern_from_displacement(series, cycles):
    """Pumped charge per cycle from the center-of-mass displacement.

    C = -(com_final - com_initial) / (3 cycles): each pump cycle carries the
    bound cluster one three-site cell toward m = 0 when C = +1.
    """
    if cycles <= 0:
        raise ValueError(f"cycles must be > 0, got {cycles}")
    if isnan(series.com[0]) or isnan(series.com[-1]):
        raise ValueError("series has undefined center of mass")
    return -(series.com[-1] - series.com[0]) / (3.0 * cycles)


@dataclass
class BandTrack:
    """Instantaneous-band overlap along an evolution.

    flagged marks times where the tracked eigenvalue is degenerate with
    another level within tolerance, so the identification is ambiguous.
    """

    times: np.ndarray
    overlap: np.ndarray
    flagged: np.ndarray


def band_overlap_track(basis, params, path, times, states, degeneracy_tol=1e-8):
    """Overlap of psi(t) with the instantaneous eigenstate connected to psi(0).

    The eigenstate is followed by maximal successive overlap between
    consecutive eigenbases, not by eigenvalue order, so it rides through
    anticrossings of other levels. Dense diagonalization; intended for
    few-site bases.
    """
    times = np.asarray(times, dtype=np.float64)
    states = np.asarray(states, dtype=np.complex128)
    if states.shape != (len(times), basis.dim):
        raise ValueError("states must have shape (n_times, dim)")
    overlaps = np.empty(len(times))
    flags = np.zeros(len(times), dtype=bool)
    tracked = None
    for i, t in enumerate(times):
        H = build_hamiltonian(t, basis, params, path).toarray()
        evals, evecs = eigh(H)
        ref = states[0] if tracked is None else tracked
        weights = np.abs(evecs.conj().T @ ref)
        j = int(np.argmax(weights))
        gaps = np.abs(evals - evals[j])
        gaps[j] = np.inf
        if gaps.min() < degeneracy_tol:
            flags[i] = True
        tracked = evecs[:, j].astype(np.complex128)
        overlaps[i] = np.abs(np.vdot(tracked, states[i])) ** 2
    return BandTrack(times=times, overlap=overlaps, flagged=flags)
