"""Dimensionless parameters, regime predicates and closed-form coefficients.

The parameter tuple is (gamma, epsilon, beta, mu, delta, Bo^-1) with gamma the
density ratio of the upper to the lower layer, epsilon the interface
amplitude, beta the bottom amplitude, mu the shallowness and delta the depth
ratio.  bo^-1 is the long-wave-scaled surface tension, Bo^-1 = mu * bo^-1.

All coefficient families of the lower-order models are provided here in closed
form, each with an independent dual route where one exists so the identities
can be cross-checked numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True)
class Params:
    """Dimensionless parameter tuple with admissibility validation."""

    gamma: float = 0.0
    epsilon: float = 0.0
    beta: float = 0.0
    mu: float = 1e-2
    delta: float = 1.0
    bond_inv: float = 0.0  # Bo^-1
    bo_inv: float = 0.0    # bo^-1, Bo^-1 = mu * bo^-1

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0,1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0,1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0,1]")
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if self.bond_inv < 0.0 or self.bo_inv < 0.0:
            raise ValueError("surface tension parameters must be >= 0")

    @classmethod
    def make(cls, gamma=0.0, epsilon=0.0, beta=0.0, mu=1e-2, delta=1.0,
             bond_inv=None, bo_inv=None):
        """Build Params reconciling the two surface-tension conventions.

        Providing both bond_inv and bo_inv is an error unless they agree with
        Bo^-1 = mu * bo^-1 to 1e-12 relative.
        """
        if bond_inv is None and bo_inv is None:
            bond_inv, bo_inv = 0.0, 0.0
        elif bond_inv is None:
            bond_inv = mu * bo_inv
        elif bo_inv is None:
            bo_inv = bond_inv / mu
        else:
            scale = max(1.0, abs(bond_inv))
            if abs(bond_inv - mu * bo_inv) > _CONSISTENCY_TOL * scale:
                raise ValueError(
                    f"bond_inv={bond_inv!r} and bo_inv={bo_inv!r} are "
                    f"inconsistent with Bo^-1 = mu*bo^-1 (mu={mu!r})"
                )
        return cls(gamma, epsilon, beta, mu, delta, bond_inv, bo_inv)

    def with_(self, **changes):
        fields = dict(
            gamma=self.gamma, epsilon=self.epsilon, beta=self.beta,
            mu=self.mu, delta=self.delta, bond_inv=self.bond_inv,
            bo_inv=self.bo_inv,
        )
        rescale_tension = "mu" in changes and "bond_inv" not in changes \
            and "bo_inv" not in changes
        fields.update(changes)
        if rescale_tension:
            # keep the long-wave-scaled tension fixed under mu sweeps
            fields["bond_inv"] = fields["mu"] * fields["bo_inv"]
        elif "bond_inv" in changes and "bo_inv" not in changes:
            fields["bo_inv"] = fields["bond_inv"] / fields["mu"]
        elif "bo_inv" in changes and "bond_inv" not in changes:
            fields["bond_inv"] = fields["mu"] * fields["bo_inv"]
        return Params(**fields)


@dataclass(frozen=True)
class RegimeBounds:
    """Bounds defining the shallow-water / CH / long-wave parameter sets.

    Defaults cover every worked configuration in this package and are
    overridable from the scenario configuration.
    """

    mu_max: float = 1.0
    delta_min: float = 0.1
    delta_max: float = 10.0
    M: float = 5.0
    bo_min_inv: float = 1.0

    def __post_init__(self):
        for name in ("mu_max", "delta_min", "delta_max", "M", "bo_min_inv"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")
        if self.delta_min > self.delta_max:
            raise ValueError("delta_min must not exceed delta_max")


def regime_of(p: Params, bounds: RegimeBounds = RegimeBounds()):
    """Return the subset of {"SW", "CH", "LW"} containing p."""
    regimes = set()
    in_sw = (
        0.0 < p.mu <= bounds.mu_max
        and p.epsilon <= 1.0
        and bounds.delta_min <= p.delta <= bounds.delta_max
        and 0.0 <= p.gamma < 1.0
    )
    if not in_sw:
        return regimes
    regimes.add("SW")
    if p.epsilon <= bounds.M * np.sqrt(p.mu):
        regimes.add("CH")
    if p.epsilon <= bounds.M * p.mu:
        regimes.add("LW")
    return regimes


# -- medium-amplitude (CH regime) coefficients --------------------------------


@dataclass(frozen=True)
class ChgnCoeffs:
    """Coefficients of the CH-regime one-dimensional system."""

    nu: float
    alpha: float
    beta_c: float
    kappa1: float
    kappa2: float
    varsigma: float


def _check_gamma_delta(gamma, delta):
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0,1)")
    if not delta > 0.0:
        raise ValueError("delta must be positive")


def chgn_coeffs(gamma, delta) -> ChgnCoeffs:
    """Closed-form coefficient set (explicit route)."""
    _check_gamma_delta(gamma, delta)
    gd = gamma + delta
    one_gd = 1.0 + gamma * delta
    d2g = delta * delta - gamma
    nu = one_gd / (3.0 * delta * gd)
    alpha = (1.0 - gamma) / gd**2
    beta_c = one_gd * d2g / (delta * gd**3)
    kappa1 = 2.0 * d2g / gd - delta * (1.0 - gamma) / one_gd
    kappa2 = 3.0 * d2g / gd
    varsigma = 2.0 * delta * (1.0 - gamma) / (gd * one_gd) - d2g / gd**2
    return ChgnCoeffs(nu, alpha, beta_c, kappa1, kappa2, varsigma)


def chgn_coeffs_dual(gamma, delta):
    """Independent route: (kappa1, kappa2, varsigma) from (nu, alpha, beta_c).

    kappa1 = (gamma+delta)(2 beta_c - alpha)/(3 nu),
    kappa2 = (gamma+delta) beta_c / nu,
    varsigma = (2 alpha - beta_c)/(3 nu).
    """
    c = chgn_coeffs(gamma, delta)
    gd = gamma + delta
    kappa1 = gd * (2.0 * c.beta_c - c.alpha) / (3.0 * c.nu)
    kappa2 = gd * c.beta_c / c.nu
    varsigma = (2.0 * c.alpha - c.beta_c) / (3.0 * c.nu)
    return kappa1, kappa2, varsigma


# -- weakly nonlinear (long wave) systems --------------------------------------


def dispersive_mass_coeff(gamma, delta):
    """(1 + gamma*delta) / (3*delta*(gamma+delta)), the flat-state mass weight."""
    return (1.0 + gamma * delta) / (3.0 * delta * (gamma + delta))


@dataclass(frozen=True)
class BoussinesqOps:
    """Matrices of the quasilinear long-wave family member.

    (A1t, A2t) are the family matrices after the near-identity change of
    variable (theta1, theta2) and the BBM-type substitution (lambda1, lambda2);
    all four zero reproduces the base system.  a_nl scales the quadratic block
    and vanishes exactly at the critical depth ratio delta^2 = gamma.
    """

    A0: np.ndarray
    A1t: np.ndarray
    A2t: np.ndarray
    a_nl: float
    theta1: float = 0.0
    theta2: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0

    def nonlinear_block(self, zeta, v):
        """Entries of a_nl * [[v, zeta], [0, v]] as arrays."""
        return (self.a_nl * v, self.a_nl * zeta, 0.0, self.a_nl * v)


def boussinesq_ops(gamma, delta, bo_inv=0.0, theta1=0.0, theta2=0.0,
                   lambda1=0.0, lambda2=0.0) -> BoussinesqOps:
    _check_gamma_delta(gamma, delta)
    if theta1 < 0 or theta2 < 0:
        raise ValueError("theta parameters must be >= 0")
    gd = gamma + delta
    nu0 = dispersive_mass_coeff(gamma, delta)
    A0 = np.array([[0.0, 1.0 / gd], [gd, 0.0]])
    A1t = np.array([
        [(1.0 - lambda1) * theta2, 0.0],
        [0.0, (1.0 - lambda2) * (nu0 + theta1)],
    ])
    A2t = np.array([
        [0.0, (lambda1 * theta2 - theta1) / gd],
        [-gd * bo_inv + gd * (lambda2 * (nu0 + theta1) - theta2), 0.0],
    ])
    a_nl = (delta * delta - gamma) / gd**2
    return BoussinesqOps(A0, A1t, A2t, a_nl, theta1, theta2, lambda1, lambda2)


@dataclass(frozen=True)
class SymBoussinesqOps:
    """Symmetrized long-wave system: mass and flux matrices plus U-linear maps."""

    S0: np.ndarray
    T: np.ndarray
    S1: np.ndarray
    Sigma0: np.ndarray
    Sigma1: np.ndarray
    gamma: float
    delta: float
    bo_inv: float

    @property
    def c_nl(self):
        return (self.delta**2 - self.gamma) / (self.gamma + self.delta)

    def s_u(self, zeta):
        """S[U] = (c_nl/(gamma+delta)) * [[0,0],[0,zeta]] (entry arrays)."""
        c = self.c_nl / (self.gamma + self.delta)
        return (0.0, 0.0, 0.0, c * zeta)

    def sigma_u(self, zeta, v):
        """Sigma[U] = c_nl * [[v, zeta], [zeta, v/(gamma+delta)^2]]."""
        c = self.c_nl
        gd2 = (self.gamma + self.delta) ** 2
        return (c * v, c * zeta, c * zeta, c * v / gd2)


def sym_boussinesq_ops(gamma, delta, bo_inv=0.0) -> SymBoussinesqOps:
    _check_gamma_delta(gamma, delta)
    gd = gamma + delta
    nu0 = dispersive_mass_coeff(gamma, delta)
    base = boussinesq_ops(gamma, delta, bo_inv)
    S0 = np.array([[gd, 0.0], [0.0, 1.0 / gd]])
    T = np.array([[gd * (1.0 + bo_inv), 0.0], [0.0, 1.0 / gd]])
    A1 = np.array([[0.0, 0.0], [0.0, nu0]])
    S1 = S0 @ A1 + T
    Sigma0 = S0 @ base.A0
    Sigma1 = T @ base.A0 - S0 @ base.A2t
    return SymBoussinesqOps(S0, T, S1, Sigma0, Sigma1, gamma, delta, bo_inv)


# -- scalar (unidirectional / decoupled) coefficients --------------------------


@dataclass(frozen=True)
class ClCoeffs:
    """Coefficients of the scalar dispersive equation.

    variant selects between the single-wave approximation ("unidirectional")
    and the counter-propagating split ("decoupled").  nu_t > 0 is required for
    time stepping; an inadmissible set is still returned (flagged) because it
    remains meaningful for residual-order measurements.
    """

    variant: str
    alpha1: float
    alpha2: float
    alpha3: float
    nu_x: float
    nu_t: float
    kappa1: float
    kappa2: float
    theta: float
    lam: float

    @property
    def admissible(self):
        return self.nu_t > 0.0


def cl_coeffs(variant, gamma, delta, theta=1.0, lam=0.0) -> ClCoeffs:
    _check_gamma_delta(gamma, delta)
    gd = gamma + delta
    one_gd = 1.0 + gamma * delta
    d2g = delta * delta - gamma
    alpha1 = 1.5 * d2g / gd
    if variant == "unidirectional":
        alpha2 = 21.0 * d2g**2 / (8.0 * gd**2) - 3.0 * (delta**3 + gamma) / gd
        alpha3 = (
            71.0 * d2g**3 / (16.0 * gd**3)
            - 37.0 * d2g * (delta**3 + gamma) / (4.0 * gd**2)
            + 5.0 * (delta**4 - gamma) / gd
        )
        nu_x = (1.0 - theta - lam) * one_gd / (6.0 * delta * gd)
        nu_t = (theta + lam) * one_gd / (6.0 * delta * gd)
        kappa1 = (
            (14.0 - 6.0 * (theta + lam)) * d2g * one_gd / (24.0 * delta * gd**2)
            - (1.0 - gamma) / (6.0 * gd)
        )
        kappa2 = (
            (17.0 - 12.0 * theta) * d2g * one_gd / (48.0 * delta * gd**2)
            - (1.0 - gamma) / (12.0 * gd)
        )
    elif variant == "decoupled":
        alpha2 = -3.0 * gamma * delta * (delta + 1.0) ** 2 / gd**2
        alpha3 = -5.0 * delta**2 * (delta + 1.0) ** 2 * gamma * (1.0 - gamma) / gd**3
        nu_t = (theta / 6.0) * one_gd / (delta * gd) + lam
        nu_x = ((1.0 - theta) / 6.0) * one_gd / (delta * gd) - lam
        shared = one_gd * d2g / (3.0 * delta * gd**2) * (1.0 + (1.0 - theta) / 4.0)
        kappa1 = shared - (1.0 - gamma) / (6.0 * gd) + lam * 1.5 * d2g / gd
        kappa2 = shared - (1.0 - gamma) / (12.0 * gd)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return ClCoeffs(variant, alpha1, alpha2, alpha3, nu_x, nu_t,
                    kappa1, kappa2, theta, lam)
