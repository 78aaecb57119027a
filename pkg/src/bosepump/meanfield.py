"""Mean-field layer for one three-site cell.

Classical energy landscape over coherent amplitudes, the quadratic
fluctuation bands about the zero stationary point, and detection of the
phase-transition points where two sublattice frequencies coincide.
"""

import json
from dataclasses import dataclass
from math import cos, pi

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class TrimerFrequencies:
    """On-site frequencies of the three sublattices A, B, C."""

    omega_a: float
    omega_b: float
    omega_c: float

    @classmethod
    def from_phase(cls, phi0, delta, omega0=0.0):
        """Frequencies of the cosine modulation at pump phase phi0."""
        return cls(
            omega_a=omega0 + delta * cos(phi0),
            omega_b=omega0 + delta * cos(phi0 + 2.0 * pi / 3.0),
            omega_c=omega0 + delta * cos(phi0 + 4.0 * pi / 3.0),
        )

    def as_array(self):
        return np.array([self.omega_a, self.omega_b, self.omega_c])


@dataclass(frozen=True)
class MeanFields:
    """Coherent amplitudes on the three sublattices."""

    alpha_a: complex
    alpha_b: complex
    alpha_c: complex

    @classmethod
    def zero(cls):
        return cls(0.0j, 0.0j, 0.0j)

    def as_array(self):
        return np.array([self.alpha_a, self.alpha_b, self.alpha_c], dtype=complex)


def classical_energy(alpha, omega, J, U):
    """Hamilton function of the cell over coherent amplitudes.

    On-site frequencies weight the populations, hopping couples the three
    amplitudes cyclically (the cell closes on itself at this level), and the
    quartic term carries the normal-ordered interaction
    (U/2) |alpha|^2 (|alpha|^2 - 1) per site.
    """
    a = alpha.as_array()
    w = omega.as_array()
    pops = np.abs(a) ** 2
    onsite = float(w @ pops)
    hop = a.conj()[0] * a[1] + a.conj()[1] * a[2] + a.conj()[2] * a[0]
    hopping = -J * 2.0 * hop.real
    quartic = 0.5 * U * float(np.sum(pops * (pops - 1.0)))
    return onsite + hopping + quartic


def bdg_bands(k, omega, J, U):
    """Fluctuation bands about the zero mean field at wavenumber k.

    E_mu(k) = (omega_mu - U/2) + 2 J cos k for mu in (A, B, C). At zero
    amplitude the anomalous pairing terms vanish identically, so the
    quadratic Hamiltonian is already diagonal in the mode operators and no
    Bogoliubov rotation is involved.
    """
    return (omega.as_array() - 0.5 * U) + 2.0 * J * cos(k)


@dataclass
class BdgScan:
    """Fluctuation bands over a wavenumber grid."""

    k: np.ndarray
    bands: np.ndarray  # (n, 3) columns A, B, C

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("k,E_A,E_B,E_C\n")
            for i in range(len(self.k)):
                row = [self.k[i], *self.bands[i]]
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def bdg_scan(k_grid, omega, J, U):
    k_grid = np.asarray(k_grid, dtype=np.float64)
    bands = np.array([bdg_bands(k, omega, J, U) for k in k_grid])
    return BdgScan(k=k_grid, bands=bands)


_PAIRS = (("a", "b"), ("a", "c"), ("b", "c"))


@dataclass
class GapClosings:
    """Phases where two sublattice frequencies coincide, split by pair."""

    ab: tuple
    ac: tuple
    bc: tuple

    @property
    def all_points(self):
        return tuple(sorted(self.ab + self.ac + self.bc))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(list(self.all_points), fh)
            fh.write("\n")


def _pair_difference(pair, phi0, delta):
    w = TrimerFrequencies.from_phase(phi0, delta)
    return getattr(w, f"omega_{pair[0]}") - getattr(w, f"omega_{pair[1]}")


def gap_closing_scan(phi0_grid, delta, J=1.0, U=None):
    """Scan a phase grid for coincidences of two sublattice frequencies.

    The fluctuation bands differ only by their on-site frequency, so two
    bands touch at every wavenumber exactly when the frequencies coincide;
    J and U shift all bands together and do not move the closings (U
    defaults to -J to mirror the usual operating point). Sign changes of
    each pairwise difference are bracketed on the grid and refined to
    roots; a flat difference (delta = 0) marks every grid point critical.
    """
    if U is None:
        U = -J
    phi0_grid = np.asarray(phi0_grid, dtype=np.float64)
    if delta == 0.0:
        pts = tuple(float(p) for p in phi0_grid)
        return GapClosings(ab=pts, ac=pts, bc=pts)

    found = {}
    for pair in _PAIRS:
        f = np.array([_pair_difference(pair, p, delta) for p in phi0_grid])
        roots = []
        for i in range(len(phi0_grid) - 1):
            if f[i] == 0.0:
                roots.append(float(phi0_grid[i]))
            elif f[i] * f[i + 1] < 0.0:
                roots.append(
                    brentq(
                        lambda p: _pair_difference(pair, p, delta),
                        phi0_grid[i],
                        phi0_grid[i + 1],
                        xtol=1e-12,
                    )
                )
        if len(f) and f[-1] == 0.0:
            roots.append(float(phi0_grid[-1]))
        found[pair] = tuple(roots)
    return GapClosings(ab=found[("a", "b")], ac=found[("a", "c")], bc=found[("b", "c")])


def critical_point_check(omega, tol=1e-9):
    """Whether all three sublattice frequencies coincide within tol."""
    return (
        abs(omega.omega_a - omega.omega_b) < tol
        and abs(omega.omega_a - omega.omega_c) < tol
    )
