"""Dispersion analytics and residual-order measurements.

Two independent routes to every linearized phase speed are provided: closed
forms derived from each system, and an eigen-decomposition of the assembled
right-hand side probed with complex Fourier modes at zero amplitude.  The
linearized two-layer rigid-lid problem itself (hyperbolic-tangent symbols of
the flat-state vertical problems) serves as the reference the lower-order
models are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError
from .models import ModelSpec, State, rhs_function, rhs_in_v_form
from .params import Params, chgn_coeffs, dispersive_mass_coeff
from .spectral import Field, Grid, sobolev_norm
from .timeloop import x_s_norm

REFERENCE_AMPLITUDES = (0.5, 0.3)  # (zeta, v) amplitudes of the fixed state


@dataclass(frozen=True)
class OrderFit:
    """Least-squares slope of log-residual against log-abscissa."""

    abscissae: tuple
    residuals: tuple
    slope: float
    intercept: float
    fit_residual: float  # max deviation from the fitted line, log10 units
    degenerate: bool = False

    def __post_init__(self):
        if len(self.abscissae) < 4:
            raise ValueError("an order fit needs at least 4 points")
        if any(a <= 0 for a in self.abscissae):
            raise ValueError("abscissae must be positive")
        if list(self.abscissae) != sorted(self.abscissae, reverse=True):
            raise ValueError("abscissae must be decreasing")

    @property
    def conclusive(self):
        return not self.degenerate and self.fit_residual <= 0.2


def fit_order(abscissae, residuals, degenerate=False) -> OrderFit:
    order = np.argsort(abscissae)[::-1]
    a = tuple(float(abscissae[i]) for i in order)
    r = tuple(float(residuals[i]) for i in order)
    if degenerate:
        return OrderFit(a, r, float("nan"), float("nan"), float("inf"), True)
    la, lr = np.log10(a), np.log10(r)
    slope, intercept = np.polyfit(la, lr, 1)
    deviation = float(np.max(np.abs(lr - (slope * la + intercept))))
    return OrderFit(a, r, float(slope), float(intercept), deviation, False)


# -- closed-form model dispersion -----------------------------------------------


def model_dispersion(spec: ModelSpec, k) -> float:
    """Analytic phase speed c(k) of the linearized model."""
    p = spec.params
    k = float(k)
    gd = p.gamma + p.delta
    mu_k2 = p.mu * k * k
    bond = spec.bond_inv
    if spec.id in ("SW1D", "SW2D"):
        return float(np.sqrt(1.0 + bond * k * k))
    if spec.id in ("GN1D", "GN2D", "CHGN1D"):
        nu = chgn_coeffs(p.gamma, p.delta).nu
        return float(np.sqrt((1.0 + bond * k * k) / (1.0 + p.mu * nu * k * k)))
    if spec.id == "BOUSS1D":
        ops = spec.bouss()
        a = 1.0 / gd - p.mu * k * k * ops.A2t[0, 1]
        b = gd - p.mu * k * k * ops.A2t[1, 0]
        d1 = 1.0 + p.mu * k * k * ops.A1t[0, 0]
        d2 = 1.0 + p.mu * k * k * ops.A1t[1, 1]
        return float(np.sqrt(a * b / (d1 * d2)))
    if spec.id == "SYMBOUSS1D":
        nu0 = dispersive_mass_coeff(p.gamma, p.delta)
        bo = spec.bo_inv
        return float(np.sqrt(
            (1.0 + mu_k2 * (1.0 + bo)) / (1.0 + mu_k2 * (1.0 + nu0))
        ))
    if spec.id == "CL_SCALAR":
        c = spec.cl
        return float((1.0 - p.mu * c.nu_x * k * k) / (1.0 + p.mu * c.nu_t * k * k))
    raise ValueError(f"no dispersion relation for {spec.id}")


# -- matrix oracle ---------------------------------------------------------------


def _linearized_symbol(spec: ModelSpec, k, n):
    """2x2 (or 1x1) symbol of the right-hand side at wavenumber k, via complex
    Fourier probes of the exactly linear (epsilon = 0) system."""
    k = int(k)
    grid = Grid.line(n)
    x = grid.nodes()[0]
    p0 = spec.params.with_(epsilon=0.0)
    lin_spec = ModelSpec(spec.id, p0, b=None, family=spec.family,
                         cl=spec.cl, tension=spec.tension, tol=1e-13)
    rhs = rhs_function(lin_spec)
    mode = np.exp(1j * k * x)
    base = np.fft.fft(mode)[k]
    if spec.id == "CL_SCALAR":
        d = rhs(State(Field(grid, mode), None, "scalar_u"))
        return np.array([[np.fft.fft(d.zeta.values)[k] / base]])
    from .models import initial_role

    role = initial_role(spec.id)
    cols = []
    for zc, vc in ((1.0, 0.0), (0.0, 1.0)):
        zeta = Field(grid, zc * mode)
        vel = Field(grid, vc * mode)
        d = rhs(State(zeta, vel, role))
        cols.append([
            np.fft.fft(d.zeta.values)[k] / base,
            np.fft.fft(d.vel.values)[k] / base,
        ])
    return np.array(cols).T


def matrix_dispersion(spec: ModelSpec, k, n=128) -> float:
    """Phase speed from the eigenvalues of the assembled linearized RHS."""
    if int(k) != k or k <= 0:
        raise ValueError("the matrix oracle probes integer wavenumbers k >= 1")
    if k >= n // 2:
        raise ValueError("wavenumber not resolved on the probe grid")
    M = _linearized_symbol(spec, k, n)
    evals = np.linalg.eigvals(M)
    speeds = np.sort((1j * evals / k).real)
    if len(speeds) == 1:
        return float(speeds[0])
    # two counter-propagating branches +-c
    return float(speeds[-1])


# -- linearized two-layer reference ------------------------------------------------


def full_euler_dispersion(k, p: Params, bond_inv=None) -> float:
    """Phase speed of the linearized rigid-lid two-layer problem.

    The flat-state vertical problems reduce to hyperbolic-tangent symbols of
    sqrt(mu)k and sqrt(mu)k/delta; normalization gives c -> 1 as mu k^2 -> 0
    (with the long-wave-scaled tension).
    """
    if k <= 0:
        raise ValueError("k must be positive")
    bond = p.bond_inv if bond_inv is None else bond_inv
    x = np.sqrt(p.mu) * k
    tension = 1.0 + bond * k * k
    if x < 1e-8:
        return float(np.sqrt(tension))
    t1 = np.tanh(x)
    t2 = np.tanh(x / p.delta)
    c2 = (p.gamma + p.delta) * tension * t1 * t2 / (
        x * (p.gamma * t2 + t1)
    )
    return float(np.sqrt(c2))


# -- residual orders ----------------------------------------------------------------


def reference_state(grid: Grid, amplitudes=REFERENCE_AMPLITUDES):
    x = grid.nodes()[0]
    az, av = amplitudes
    return Field(grid, az * np.sin(x)), Field(grid, av * np.cos(x))


def epsilon_path(path, epsilon=0.1):
    """Map a path name (or callable) to epsilon(mu)."""
    if callable(path):
        return path
    if path == "fixed":
        return lambda mu: epsilon
    if path == "sqrt_mu":
        return lambda mu: float(np.sqrt(mu))
    if path == "mu":
        return lambda mu: float(mu)
    raise ValueError(f"unknown path {path!r}")


def residual_order(model_a, model_b, mus, path, base: Params, n=256,
                   s=None, state_fn=None, tol=1e-13, tension=False,
                   epsilon=0.1) -> OrderFit:
    """Slope of the RHS difference between two models along a regime path.

    Both right-hand sides are evaluated on the identical (zeta, v) state (role
    conversions happen inside the v-form dispatch) and the stacked L2 (or H^s)
    norm of the difference is fitted against mu.
    """
    eps_of = epsilon_path(path, epsilon)
    grid = Grid.line(n)
    zeta, v = reference_state(grid) if state_fn is None else state_fn(grid)
    residuals = []
    scale = 0.0
    for mu in mus:
        p = base.with_(mu=float(mu), epsilon=eps_of(float(mu)))
        try:
            fa = rhs_in_v_form(ModelSpec(model_a, p, tol=tol, tension=tension))
            fb = rhs_in_v_form(ModelSpec(model_b, p, tol=tol, tension=tension))
            dza, dva = fa(zeta, v)
            dzb, dvb = fb(zeta, v)
        except AdmissibilityError as err:
            raise AdmissibilityError(
                err.condition, err.margin,
                message=f"residual-order sweep failed at mu={mu:g}: {err}",
            ) from err
        if s is None:
            nz = (dza - dzb).l2_norm()
            nv = (dva - dvb).l2_norm()
            scale = max(scale, dza.l2_norm(), dva.l2_norm())
        else:
            nz = sobolev_norm(dza - dzb, s)
            nv = sobolev_norm(dva - dvb, s)
            scale = max(scale, sobolev_norm(dza, s), sobolev_norm(dva, s))
        residuals.append(float(np.sqrt(nz * nz + nv * nv)))
    degenerate = max(residuals) <= 1e-12 * max(scale, 1e-30)
    return fit_order(list(mus), residuals, degenerate=degenerate)


# -- trajectory comparison -----------------------------------------------------------


def compare_trajectories(traj_a, traj_b, p: Params, s=0.0):
    """Energy-space error series between two trajectories on shared timestamps."""
    if len(traj_a.times) != len(traj_b.times):
        raise ValueError("trajectories have different output strides")
    times, errors = [], []
    for t_a, t_b, s_a, s_b in zip(traj_a.times, traj_b.times,
                                  traj_a.states, traj_b.states):
        if abs(t_a - t_b) > 1e-12:
            raise ValueError("trajectories have mismatched timestamps")
        if s_a.zeta.grid != s_b.zeta.grid:
            raise ValueError("trajectories live on different grids")
        diff = State(s_a.zeta - s_b.zeta, s_a.vel - s_b.vel, s_a.role)
        times.append(t_a)
        errors.append(x_s_norm(diff, p, s))
    return times, errors
