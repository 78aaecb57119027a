"""Lossy pump dynamics via Monte-Carlo wavefunction trajectories.

Uniform single-photon loss at rate 1/T1 on every site. The non-Hermitian
part of the effective Hamiltonian, -(i/2 T1) sum_m n_m, is a multiple of
the identity inside each photon-number sector, so a trajectory occupies
exactly one sector between jumps: the coherent step is the closed-system
Krylov step on that sector's block, the per-step jump probability is
exactly 1 - exp(-N dt / T1), and a jump lowers the sector by one. Ensemble
averages over trajectories recover the dissipative density-matrix
observables.
"""

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import ceil, exp

import numpy as np

from .fockspace import (
    annihilation_operator,
    build_basis,
    hopping_operator,
    interaction_diagonal,
)
from .model import ModelParams, PhaseSweep, onsite_profile
from .propagate import (
    KRYLOV_TOL,
    ObservableSeries,
    StateVector,
    _expm_lanczos,
    _observe,
)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Knobs of a trajectory ensemble.

    T1 may be numpy.inf, reducing every trajectory to the closed evolution.
    Per-trajectory randomness derives from (seed, trajectory index) and
    nothing else.
    """

    t1: float
    n_traj: int = 200
    seed: int = 0
    dt: float = 0.05
    record_stride: int = 1

    def __post_init__(self):
        if not self.t1 > 0:
            raise ValueError(f"T1 must be positive, got {self.t1}")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")


class MultiSectorBasis:
    """Fock sectors N = n_top down to 0 with per-site lowering maps.

    Loss changes the photon number, so the lossy problem lives on the
    direct sum of the fixed-N sectors. Sector k of `sectors` holds
    N = n_top - k; `drop(N, m)` maps sector N to sector N-1 by removing
    one photon from site m.
    """

    def __init__(self, L, n_top, n_max=None):
        if n_top < 0:
            raise ValueError(f"top photon number must be >= 0, got {n_top}")
        if n_max is None:
            n_max = max(1, min(n_top, 5))
        self.L = L
        self.n_top = n_top
        self.n_max = n_max
        self.sectors = tuple(
            build_basis(L, n, n_max) for n in range(n_top, -1, -1)
        )
        offsets = [0]
        for sector in self.sectors:
            offsets.append(offsets[-1] + sector.dim)
        self.offsets = tuple(offsets[:-1])
        self.dim = offsets[-1]
        self._drops = {}
        for k in range(len(self.sectors) - 1):
            upper, lower = self.sectors[k], self.sectors[k + 1]
            for m in range(L):
                self._drops[(upper.N, m)] = annihilation_operator(upper, lower, m)

    def sector(self, n):
        """The FockBasis holding photon number n."""
        if not 0 <= n <= self.n_top:
            raise ValueError(f"no sector with N={n} (top is {self.n_top})")
        return self.sectors[self.n_top - n]

    def drop(self, n, m):
        """Sparse lowering map from sector n to sector n-1 at site m."""
        return self._drops[(n, m)]


def trajectory_run(config, basis, params, path, psi0, traj_index=0):
    """One Monte-Carlo wavefunction trajectory.

    psi0 must be normalized and live in the top sector (StateVector or
    plain amplitude array). Each integrator step applies the midpoint
    Krylov propagator of the current sector, then draws the jump decision;
    on a jump the site is chosen with probability proportional to its
    occupation and the state is lowered and renormalized. Deterministic
    given (config.seed, traj_index).
    """
    if basis.L != params.L:
        raise ValueError(f"basis has L={basis.L}, params have L={params.L}")
    top = basis.sector(basis.n_top)
    if isinstance(psi0, StateVector):
        if psi0.basis is not top and psi0.basis.states != top.states:
            raise ValueError("initial state must live in the top sector")
        amps = np.asarray(psi0.amplitudes, dtype=np.complex128).copy()
    else:
        amps = np.asarray(psi0, dtype=np.complex128).copy()
    if amps.shape != (top.dim,):
        raise ValueError(f"initial amplitudes must have shape ({top.dim},)")
    if abs(np.linalg.norm(amps) - 1.0) > 1e-8:
        raise ValueError("initial state must be normalized")

    worst_jump = 1.0 - exp(-basis.n_top * config.dt / config.t1)
    if worst_jump > 0.1:
        raise ValueError(
            f"per-step jump probability reaches {worst_jump:.3f} > 0.1; "
            f"reduce dt below {0.1 * config.t1 / basis.n_top:.3g}"
        )

    rng = np.random.default_rng(
        np.random.SeedSequence(config.seed).spawn(traj_index + 1)[traj_index]
    )

    duration = path.duration
    n_steps = 0 if duration == 0 else int(ceil(duration / config.dt))
    dt = duration / n_steps if n_steps else 0.0
    sites = np.arange(basis.L, dtype=np.float64)

    # per-sector static pieces, built lazily on first entry
    pieces = {}

    def sector_pieces(n):
        if n not in pieces:
            sec = basis.sector(n)
            hop = -params.J * hopping_operator(sec).matrix if sec.dim > 1 else None
            u_diag = interaction_diagonal(sec, params.U)
            pieces[n] = (sec, hop, u_diag)
        return pieces[n]

    n_cur = basis.n_top
    times, norms, totals, coms, dens = [], [], [], [], []

    def record(t):
        sec, _, _ = sector_pieces(n_cur)
        nrm, tot, com, density = _observe(amps, sec.occupations, sites)
        times.append(t)
        norms.append(nrm)
        totals.append(tot)
        coms.append(com)
        dens.append(density)

    record(0.0)
    for k in range(n_steps):
        t_mid = (k + 0.5) * dt
        sec, hop, u_diag = sector_pieces(n_cur)
        if n_cur > 0:
            diag = sec.occupations @ onsite_profile(t_mid, params, path) + u_diag
            if hop is not None:
                amps = _expm_lanczos(
                    lambda x: hop @ x + diag * x, amps, dt, KRYLOV_TOL
                )
            else:
                amps = amps * np.exp(-1j * diag * dt)

        # with the state confined to one sector the loss term is a scalar,
        # so the step's entire stochastic content is this probability
        p_jump = 1.0 - exp(-n_cur * dt / config.t1) if n_cur > 0 else 0.0
        if p_jump > 0.0:
            if rng.random() < p_jump:
                density = (np.abs(amps) ** 2) @ sec.occupations
                total = density.sum()
                target = rng.random() * total
                m = int(np.searchsorted(np.cumsum(density), target))
                m = min(m, basis.L - 1)
                amps = basis.drop(n_cur, m) @ amps
                amps = amps / np.linalg.norm(amps)
                n_cur -= 1
            else:
                amps = amps / np.linalg.norm(amps)

        if (k + 1) % config.record_stride == 0 or k + 1 == n_steps:
            record((k + 1) * dt)

    return ObservableSeries(
        times=np.array(times),
        norm=np.array(norms),
        total_n=np.array(totals),
        com=np.array(coms),
        density=np.array(dens),
    )


@dataclass
class EnsembleSeries:
    """Trajectory-ensemble observables with standard errors."""

    times: np.ndarray
    norm: np.ndarray
    total_n: np.ndarray
    com: np.ndarray
    density: np.ndarray
    total_n_stderr: np.ndarray
    com_stderr: np.ndarray
    n_traj: int

    @property
    def L(self):
        return self.density.shape[1]

    def to_csv(self, path):
        """Closed-run column layout with the two error columns appended."""
        with open(path, "w") as fh:
            site_cols = ",".join(f"n_{m}" for m in range(self.L))
            fh.write(f"t,norm,total_n,com,{site_cols},total_n_stderr,com_stderr\n")
            for i in range(len(self.times)):
                row = [
                    self.times[i],
                    self.norm[i],
                    self.total_n[i],
                    self.com[i],
                    *self.density[i],
                    self.total_n_stderr[i],
                    self.com_stderr[i],
                ]
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def ensemble_average(runs):
    """Pointwise mean and standard error over trajectories.

    COM entries are nan for fully decayed trajectories; those trajectories
    drop out of the COM statistics at that time (nan-aware mean), while
    photon number and density average over everything.
    """
    if not runs:
        raise ValueError("need at least one trajectory")
    times = runs[0].times
    for r in runs[1:]:
        if r.times.shape != times.shape or not np.array_equal(r.times, times):
            raise ValueError("trajectories must share an identical time grid")
    n = len(runs)
    totals = np.stack([r.total_n for r in runs])
    coms = np.stack([r.com for r in runs])
    densities = np.stack([r.density for r in runs])
    norms = np.stack([r.norm for r in runs])

    total_mean = totals.mean(axis=0)
    total_err = totals.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(total_mean)

    com_mean = np.full(len(times), np.nan)
    com_err = np.zeros(len(times))
    for i in range(len(times)):
        vals = coms[:, i]
        vals = vals[~np.isnan(vals)]
        if len(vals):
            com_mean[i] = vals.mean()
            if len(vals) > 1:
                com_err[i] = vals.std(ddof=1) / np.sqrt(len(vals))

    return EnsembleSeries(
        times=times.copy(),
        norm=norms.mean(axis=0),
        total_n=total_mean,
        com=com_mean,
        density=densities.mean(axis=0),
        total_n_stderr=total_err,
        com_stderr=com_err,
        n_traj=n,
    )


def run_ensemble(config, basis, params, path, psi0, keep_runs=False, workers=1):
    """Run config.n_traj trajectories and reduce them in index order.

    workers > 1 fans the trajectories out over processes; per-index seeding
    and the index-ordered reduction keep the result bit-identical to the
    sequential run.
    """
    if workers > 1:
        task = functools.partial(trajectory_run, config, basis, params, path, psi0)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(task, range(config.n_traj)))
    else:
        runs = [
            trajectory_run(config, basis, params, path, psi0, traj_index=i)
            for i in range(config.n_traj)
        ]
    reduced = ensemble_average(runs)
    if keep_runs:
        return reduced, runs
    return reduced


# Nine-site lossy array at the usual operating point, three photons on
# site 6: Delta=10J, Omega=0.05J, U=-J, phi0=0. T1 converts from 20 us of
# wall time at J=40 MHz: 800/J when quoted frequencies are angular,
# 2 pi * 800/J when linear.
FIG5_L = 9
FIG5_SITE = 6
FIG5_N = 3
FIG5_T1_ANGULAR = 800.0


def fig5_experiment(
    n_traj=200,
    seed=0,
    units="angular",
    cycles=3.0,
    dt=0.05,
    record_stride=10,
    t1=None,
    keep_runs=False,
    workers=1,
):
    """Lossy nine-site pump run; ensemble observables over >= 3 cycles."""
    if units not in ("angular", "linear"):
        raise ValueError(f"units must be 'angular' or 'linear', got {units!r}")
    if t1 is None:
        t1 = FIG5_T1_ANGULAR if units == "angular" else 2.0 * np.pi * FIG5_T1_ANGULAR
    config = TrajectoryConfig(
        t1=t1, n_traj=n_traj, seed=seed, dt=dt, record_stride=record_stride
    )
    basis = MultiSectorBasis(FIG5_L, FIG5_N, n_max=3)
    params = ModelParams(L=FIG5_L, delta=10.0, U=-1.0, J=1.0)
    path = PhaseSweep(omega=0.05, phi0=0.0, cycles=cycles)
    occ = [0] * FIG5_L
    occ[FIG5_SITE] = FIG5_N
    psi0 = StateVector.from_occupation(basis.sector(FIG5_N), tuple(occ))
    return run_ensemble(
        config, basis, params, path, psi0, keep_runs=keep_runs, workers=workers
    )
