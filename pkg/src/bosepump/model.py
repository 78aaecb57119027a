"""Time-dependent lattice Hamiltonian, pump paths, and on-site noise.

Internal units: hbar = 1, energies in units of the hopping J, times in 1/J.
The carrier frequency omega0 is carried along for hardware reports but never
enters the dynamics.
"""

import warnings
from dataclasses import dataclass, field
from math import cos, floor, pi

import numpy as np
from scipy.sparse import csr_matrix

from .fockspace import hopping_operator, interaction_diagonal, SparseOperator


@dataclass(frozen=True)
class ModelParams:
    """Lattice parameters of the three-site-period pumped array.

    delta is the on-site modulation amplitude (> 0), U the Kerr shift
    (<= 0, attractive), J the hopping (> 0). L should be a multiple of 3
    so the modulation is commensurate; other lengths are allowed but warned
    about.
    """

    L: int
    delta: float
    U: float
    J: float = 1.0
    omega0: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.J <= 0:
            raise ValueError(f"J must be > 0, got {self.J}")
        if self.U > 0:
            raise ValueError(f"U must be <= 0 (attractive), got {self.U}")
        if self.L % 3 != 0:
            warnings.warn(
                f"L={self.L} is not a multiple of 3; the modulation is "
                "incommensurate with the lattice",
                stacklevel=2,
            )


@dataclass(frozen=True)
class PhaseSweep:
    """Circular pump: phi(t) = omega t + phi0, for `cycles` periods of 2 pi.

    Negative omega sweeps the phase backwards (reversed pump direction).
    """

    omega: float
    phi0: float = 0.0
    cycles: float = 1.0

    def __post_init__(self):
        if self.omega == 0:
            raise ValueError("omega must be nonzero")
        if self.cycles < 0:
            raise ValueError(f"cycles must be >= 0, got {self.cycles}")

    @property
    def period(self):
        return 2.0 * pi / abs(self.omega)

    @property
    def duration(self):
        return self.cycles * self.period

    def phase(self, t):
        return self.omega * t + self.phi0


@dataclass(frozen=True)
class ParametricLoop:
    """Piecewise-linear closed path of sublattice detunings.

    A vertex (x, y) places the on-site energies at (omega_A, omega_B,
    omega_C) = (0, -x, -y), i.e. the coordinates are omega_A - omega_B and
    omega_A - omega_C. Segments are traversed at uniform parametric speed
    (equal time per segment). A path whose last vertex differs from its
    first is closed implicitly.
    """

    vertices: tuple
    duration: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 2:
            raise ValueError("need at least two vertices")
        if verts[-1] != verts[0]:
            verts = (*verts, verts[0])
        object.__setattr__(self, "vertices", verts)

    @property
    def n_segments(self):
        return len(self.vertices) - 1

    def xy(self, t):
        u = (t / self.duration) * self.n_segments
        i = min(int(u), self.n_segments - 1)
        frac = u - i
        x0, y0 = self.vertices[i]
        x1, y1 = self.vertices[i + 1]
        return x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)


def square_loop(delta, duration):
    """Square detuning loop that avoids the origin of the (x, y) plane.

    Starts at (delta/2, delta/2), the value the circular pump takes at
    phi = 0, and stays in the positive quadrant, so it encloses no band
    degeneracy.
    """
    d = float(delta)
    corners = (
        (d / 2, d / 2),
        (3 * d / 2, d / 2),
        (3 * d / 2, 3 * d / 2),
        (d / 2, 3 * d / 2),
    )
    return ParametricLoop(vertices=corners, duration=duration)


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform on-site noise: amplitude eta, redrawn every redraw_dt."""

    eta: float
    redraw_dt: float
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.redraw_dt <= 0:
            raise ValueError(f"redraw_dt must be > 0, got {self.redraw_dt}")


def _check_time(t, path):
    tol = 1e-9 * max(path.duration, 1.0)
    if t < -tol or t > path.duration + tol:
        raise ValueError(f"t={t} outside path duration [0, {path.duration}]")


def onsite_energy(m, t, params, path):
    """On-site energy omega_m(t) for the given pump path (omega0 dropped)."""
    if m < 0:
        raise ValueError(f"site index must be >= 0, got {m}")
    _check_time(t, path)
    if isinstance(path, PhaseSweep):
        return params.delta * cos(2.0 * pi * m / 3.0 + path.phase(t))
    if isinstance(path, ParametricLoop):
        x, y = path.xy(min(max(t, 0.0), path.duration))
        return (0.0, -x, -y)[m % 3]
    raise TypeError(f"unknown pump path type {type(path).__name__}")


def onsite_profile(t, params, path):
    """Vector of onsite_energy(m, t) for m = 0 .. L-1."""
    _check_time(t, path)
    m = np.arange(params.L)
    if isinstance(path, PhaseSweep):
        return params.delta * np.cos(2.0 * pi * m / 3.0 + path.phase(t))
    if isinstance(path, ParametricLoop):
        x, y = path.xy(min(max(t, 0.0), path.duration))
        return np.array([0.0, -x, -y])[m % 3]
    raise TypeError(f"unknown pump path type {type(path).__name__}")


def build_hamiltonian(t, basis, params, path, noise_sample=None):
    """Assemble H(t) over the basis as a sparse Hermitian operator.

    noise_sample, when given, is the per-site noise energy (already scaled
    by the noise amplitude); it adds sum_m noise_sample[m] n_m to the
    diagonal.
    """
    if basis.L != params.L:
        raise ValueError(f"basis has L={basis.L}, params have L={params.L}")
    diag = basis.occupations @ onsite_profile(t, params, path)
    diag += interaction_diagonal(basis, params.U)
    if noise_sample is not None:
        noise_sample = np.asarray(noise_sample, dtype=np.float64)
        if noise_sample.shape != (params.L,):
            raise ValueError(
                f"noise_sample length {noise_sample.shape} does not match L={params.L}"
            )
        diag += basis.occupations @ noise_sample
    hop = hopping_operator(basis)
    idx = np.arange(basis.dim)
    mat = -params.J * hop.matrix + csr_matrix(
        (diag, (idx, idx)), shape=(basis.dim, basis.dim)
    )
    return SparseOperator(dim=basis.dim, matrix=mat.tocsr(), hermitian=True)


def sample_noise(spec, t, L):
    """Per-site uniforms on [0, 1), piecewise constant over redraw bins.

    The draw depends only on (seed, bin index with bin = floor(t/redraw_dt)),
    so any worker evaluating the same time bin gets the same vector. The
    caller scales by the amplitude eta.
    """
    bin_index = max(int(floor(t / spec.redraw_dt)), 0)
    rng = np.random.default_rng([int(spec.seed), bin_index])
    return rng.random(L)


def loop_winding_number(path, params, n_samples=4096):
    """Signed number of times the pump path encircles the band-touching point.

    The path is traced in the (omega_A - omega_B, omega_A - omega_C) plane;
    positive values count turns in the orientation of an increasing-phase
    sweep (which is clockwise in this plane). A single pump cycle therefore
    returns +1 and a loop that avoids the origin returns 0.
    """
    ts = np.linspace(0.0, path.duration, n_samples, endpoint=False)
    xy = np.empty((n_samples, 2))
    for i, t in enumerate(ts):
        xy[i, 0] = onsite_energy(0, t, params, path) - onsite_energy(1, t, params, path)
        xy[i, 1] = onsite_energy(0, t, params, path) - onsite_energy(2, t, params, path)
    radii = np.hypot(xy[:, 0], xy[:, 1])
    scale = max(radii.max(), 1.0)
    if radii.min() < 1e-12 * scale:
        raise ValueError("path passes through the degeneracy point (0, 0)")
    ang = np.arctan2(xy[:, 1], xy[:, 0])
    dang = np.diff(ang, append=ang[:1])
    dang = (dang + pi) % (2.0 * pi) - pi
    return int(round(-dang.sum() / (2.0 * pi)))
