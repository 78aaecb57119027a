"""Circuit layer: flux-tunable transmon arrays as Kerr resonator chains.

Maps junction energies, shunt and coupling capacitances, and a flux bias
to the lattice parameters (omega, J, U), reports how the parameters move
as the flux is swept, and inverts the map for target parameters. All
formulas are evaluated in SI; energy-like outputs are returned as angular
frequencies (divided by hbar) so they share units with omega and J.
"""

import warnings
from dataclasses import dataclass, replace
from math import cos, exp, pi, sqrt, tan

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class Constants:
    """Physical constants; defaults are the CODATA SI values."""

    hbar: float = 1.054571817e-34
    e: float = 1.602176634e-19

    @property
    def phi0(self):
        """Flux quantum hbar/2e used by the junction formulas."""
        return self.hbar / (2.0 * self.e)


SI = Constants()


@dataclass(frozen=True)
class CircuitParams:
    """One site of the array: a flux-tunable transmon and its coupler.

    e_j1, e_j2 are the junction energies (J), c_j the shunting and c the
    coupling capacitance (F), phi_g the flux bias (Wb). phi0 overrides
    the flux quantum; None defers to the constants table.
    """

    e_j1: float
    e_j2: float
    c_j: float
    c: float
    phi_g: float = 0.0
    phi0: float = None

    def __post_init__(self):
        for name in ("e_j1", "e_j2", "c_j", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(frozen=True)
class DerivedHamiltonianParams:
    """Lattice parameters produced by the circuit map.

    omega, j, u and delta_omega are angular frequencies (rad/s in SI
    inputs); e_j, e_c_tilde and e_l_tilde stay energies. j carries the
    negative sign of the capacitive coupler; the lattice model consumes
    its magnitude (the hopping sign is a gauge choice on an open chain).
    u is always negative, lam always positive. delta_omega is the
    normal-ordering frequency shift, reported but not folded into omega.
    """

    e_j: float
    d: float
    c_tilde: float
    l_tilde: float
    omega: float
    j: float
    u: float
    lam: float
    delta_omega: float
    e_c_tilde: float
    e_l_tilde: float
    transmon: bool

    def in_units_of_j(self):
        """Frequencies rescaled by |j|, the lattice energy unit."""
        scale = abs(self.j)
        return {
            "omega": self.omega / scale,
            "j": self.j / scale,
            "u": self.u / scale,
            "delta_omega": self.delta_omega / scale,
        }


def effective_josephson(e_j1, e_j2, phi_g, phi0, tan_squared=False):
    """Combined junction energy and asymmetry of a flux-biased pair.

    Evaluates E_J = (E_J1+E_J2) cos(phi_g/2phi0) sqrt(1 + d^2 tan(phi_g/2phi0))
    with d = (E_J2-E_J1)/(E_J2+E_J1), exactly as quoted. The tangent under
    the square root is first power there; tan_squared=True switches to the
    conventional tan^2 form instead. A bias with cos(phi_g/2phi0) <= 0
    leaves the monotone tuning branch and is flagged with a warning.
    """
    half = phi_g / (2.0 * phi0)
    d = (e_j2 - e_j1) / (e_j2 + e_j1)
    c = cos(half)
    if c <= 0.0:
        warnings.warn(
            f"flux bias {phi_g} places cos(phi_g/2phi0)={c:.3g} outside the "
            "monotone tuning branch",
            stacklevel=2,
        )
    t = tan(half)
    radicand = 1.0 + d * d * (t * t if tan_squared else t)
    if radicand < 0.0:
        raise ValueError(
            f"junction formula radicand {radicand:.3g} < 0 at phi_g={phi_g}"
        )
    return (e_j1 + e_j2) * c * sqrt(radicand), d


def derive_params(cp, constants=SI, tan_squared=False):
    """Forward map from circuit elements to lattice parameters.

    Uses C~ = C_J + 2C, L~ = phi0^2/E_J, omega = 1/sqrt(L~ C~),
    J = -omega C/2C~, E_C~ = e^2/2C~, E_L~ = phi0^2/L~ (= E_J),
    lam = (2E_C~/E_L~)^(1/4), U = -E_J e^(-lam^2) lam^4 / 4 and
    delta_omega = lam^2 E_J e^(-lam^2), the last two divided by hbar.
    Outside the transmon regime E_L~/E_C~ > 1 the quartic truncation is
    unjustified; the result is still returned, flagged and warned about.
    """
    phi0 = cp.phi0 if cp.phi0 is not None else constants.phi0
    e_j, d = effective_josephson(cp.e_j1, cp.e_j2, cp.phi_g, phi0, tan_squared)
    if e_j <= 0.0:
        raise ValueError(f"derived junction energy {e_j:.3g} is not positive")
    c_tilde = cp.c_j + 2.0 * cp.c
    l_tilde = phi0 * phi0 / e_j
    omega = 1.0 / sqrt(l_tilde * c_tilde)
    j = -omega * cp.c / (2.0 * c_tilde)
    e_c_tilde = constants.e**2 / (2.0 * c_tilde)
    e_l_tilde = phi0 * phi0 / l_tilde
    lam = (2.0 * e_c_tilde / e_l_tilde) ** 0.25
    lam2 = lam * lam
    u = -e_j * exp(-lam2) * lam2 * lam2 / 4.0 / constants.hbar
    delta_omega = lam2 * e_j * exp(-lam2) / constants.hbar
    transmon = e_l_tilde / e_c_tilde > 1.0
    if not transmon:
        warnings.warn(
            f"E_L~/E_C~ = {e_l_tilde / e_c_tilde:.3g} <= 1: outside the "
            "transmon regime, quartic truncation untrustworthy",
            stacklevel=2,
        )
    return DerivedHamiltonianParams(
        e_j=e_j,
        d=d,
        c_tilde=c_tilde,
        l_tilde=l_tilde,
        omega=omega,
        j=j,
        u=u,
        lam=lam,
        delta_omega=delta_omega,
        e_c_tilde=e_c_tilde,
        e_l_tilde=e_l_tilde,
        transmon=transmon,
    )


@dataclass(frozen=True)
class TuningRangeReport:
    """Derived (omega, J, U) along a flux sweep, with spread measures."""

    phi_g: np.ndarray
    omega: np.ndarray
    j: np.ndarray
    u: np.ndarray

    def fractional_spread(self, field):
        """Half peak-to-peak over midpoint of |values|; 0 for one row."""
        vals = np.abs(getattr(self, field))
        hi, lo = vals.max(), vals.min()
        return (hi - lo) / (hi + lo)

    def half_range(self, field):
        """Half peak-to-peak of |values|, in the field's own units."""
        vals = np.abs(getattr(self, field))
        return 0.5 * (vals.max() - vals.min())

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("phi_g,omega,J,U\n")
            for row in zip(self.phi_g, self.omega, self.j, self.u):
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def tuning_range_report(cp, phi_g_values, constants=SI):
    """Derived parameters at each flux bias of a sweep.

    A zero-width sweep (one value) yields a single row with zero spread.
    """
    phi_g = np.atleast_1d(np.asarray(phi_g_values, dtype=np.float64))
    omega = np.empty(phi_g.shape)
    j = np.empty(phi_g.shape)
    u = np.empty(phi_g.shape)
    for i, bias in enumerate(phi_g):
        derived = derive_params(replace(cp, phi_g=float(bias)), constants)
        omega[i] = derived.omega
        j[i] = derived.j
        u[i] = derived.u
    return TuningRangeReport(phi_g=phi_g, omega=omega, j=j, u=u)


def flux_for_frequency(cp, omega_target, constants=SI):
    """Flux bias at which the resonator frequency hits omega_target.

    Searches the monotone branch phi_g in [0, pi phi0) at the circuit's
    junction asymmetry; the frequency decreases with flux there, so the
    target must lie between the branch endpoints.
    """
    phi0 = cp.phi0 if cp.phi0 is not None else constants.phi0
    c_tilde = cp.c_j + 2.0 * cp.c

    def freq_miss(bias):
        # frequency alone; the full map would flag regimes the probe
        # only brackets through
        e_j, _ = effective_josephson(cp.e_j1, cp.e_j2, bias, phi0)
        return sqrt(max(e_j, 0.0) / (phi0 * phi0 * c_tilde)) - omega_target

    hi = pi * phi0 * (1.0 - 1e-9)
    lo_miss = freq_miss(0.0)
    hi_miss = freq_miss(hi)
    if lo_miss < 0.0 or hi_miss > 0.0:
        raise ValueError(
            f"target frequency {omega_target:.6g} outside the tuning branch "
            f"[{omega_target + hi_miss:.6g}, {omega_target + lo_miss:.6g}]"
        )
    return brentq(freq_miss, 0.0, hi, xtol=phi0 * 1e-15)


def inverse_design(omega0, j, u, constants=SI, d=0.0):
    """Circuit elements whose forward map hits (omega0, j, u) at zero flux.

    The zero-flux map collapses to hbar omega = sqrt(8 E_C~ E_J),
    lam^2 = 4E_C~/(hbar omega) and hbar|U| = (E_C~/2) exp(-lam^2), so a
    single bracketed root find in E_C~ fixes the energies, after which
    C = -2 j C~/omega and C_J = C~ - 2C follow in closed form. Junctions
    split evenly unless an asymmetry d is requested. Targets must be
    reachable: u < 0 no deeper than the transmon-branch maximum
    (omega0/8e), j < 0 with |j| < omega0/4 so capacitances stay positive.
    The returned parameters are verified against the forward map; a
    residual above 1e-9 relative raises with the residuals listed.
    """
    if omega0 <= 0.0:
        raise ValueError(f"target frequency must be positive, got {omega0}")
    if u >= 0.0:
        raise ValueError(f"Kerr energy must be negative, got {u}")
    if j >= 0.0:
        raise ValueError(
            f"capacitive coupling makes the produced hopping negative; "
            f"got target j={j}"
        )
    if abs(j) >= omega0 / 4.0:
        raise ValueError(
            f"|j|={abs(j):.3g} >= omega0/4; shunt capacitance would go negative"
        )
    hbar = constants.hbar
    u_cap = omega0 / (8.0 * exp(1.0))
    if abs(u) >= u_cap:
        raise ValueError(
            f"|u|={abs(u):.3g} exceeds the transmon-branch maximum {u_cap:.3g}"
        )

    def kerr_miss(e_c):
        return 0.5 * e_c * exp(-4.0 * e_c / (hbar * omega0)) - hbar * abs(u)

    e_c_hi = hbar * omega0 / 4.0
    e_c = brentq(kerr_miss, hbar * abs(u), e_c_hi, xtol=e_c_hi * 1e-18, rtol=1e-15)
    e_j = (hbar * omega0) ** 2 / (8.0 * e_c)
    c_tilde = constants.e**2 / (2.0 * e_c)
    c = -2.0 * j * c_tilde / omega0
    c_j = c_tilde - 2.0 * c
    cp = CircuitParams(
        e_j1=0.5 * e_j * (1.0 - d),
        e_j2=0.5 * e_j * (1.0 + d),
        c_j=c_j,
        c=c,
        phi_g=0.0,
    )
    check = derive_params(cp, constants)
    residuals = {
        "omega": abs(check.omega - omega0) / omega0,
        "j": abs(check.j - j) / abs(j),
        "u": abs(check.u - u) / abs(u),
    }
    if max(residuals.values()) > 1e-9:
        raise RuntimeError(f"inverse design failed to converge: {residuals}")
    return cp
