"""Time integration (classical RK4) with conservation and admissibility monitors.

One explicit scheme is used for every model so cross-model comparisons are
scheme-identical; implicit mass operators are inverted inside each right-hand
side.  Monitors are sampled at the output stride and integration aborts with a
diagnostic as soon as an admissibility margin reaches zero or a field stops
being finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    AdmissibilityError,
    BlowUpError,
    DepthError,
    EllipticityError,
    HyperbolicityError,
)
from .models import (
    ModelSpec,
    State,
    chgn_margins,
    rhs_function,
    sw1d_hyperbolicity,
    sym_energy,
    sym_mass_margin,
)
from .operators import depth_fields
from .params import Params
from .spectral import Field, VecField, deriv, sobolev_norm


@dataclass
class StepperConfig:
    """Fixed-step ERK4 configuration."""

    dt: float
    t_end: float
    scheme: str = "ERK4"
    output_stride: int = 10
    tol: float = 1e-11

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.scheme != "ERK4":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.output_stride < 1:
            raise ValueError("output stride must be >= 1")


@dataclass
class Trajectory:
    """Snapshots at the output stride plus scalar monitor series."""

    times: list = dc_field(default_factory=list)
    states: list = dc_field(default_factory=list)
    monitors: dict = dc_field(default_factory=dict)

    def record(self, t, state, row):
        if self.times and t <= self.times[-1]:
            raise ValueError("timestamps must be strictly increasing")
        self.times.append(t)
        self.states.append(state)
        for key, value in row.items():
            self.monitors.setdefault(key, []).append(value)

    @property
    def final(self) -> State:
        return self.states[-1]


def _zeros_like_vel(vel):
    if vel is None:
        return None
    if isinstance(vel, Field):
        return Field.zeros(vel.grid)
    return VecField.zeros(vel.grid)


def _axpy(state: State, coeff, delta: State) -> State:
    zeta = state.zeta + coeff * delta.zeta
    if state.vel is None:
        return state.like(zeta, None)
    if isinstance(state.vel, Field):
        return state.like(zeta, state.vel + coeff * delta.vel)
    vel = VecField(tuple(a + coeff * b for a, b in zip(state.vel, delta.vel)))
    return state.like(zeta, vel)


def rk4_step(rhs, state: State, dt) -> State:
    k1 = rhs(state)
    k2 = rhs(_axpy(state, 0.5 * dt, k1))
    k3 = rhs(_axpy(state, 0.5 * dt, k2))
    k4 = rhs(_axpy(state, dt, k3))
    out = _axpy(state, dt / 6.0, k1)
    out = _axpy(out, dt / 3.0, k2)
    out = _axpy(out, dt / 3.0, k3)
    return _axpy(out, dt / 6.0, k4)


def _monitor_row(spec: ModelSpec, state: State):
    """Scalar diagnostics; the margin is the binding admissibility quantity."""
    p = spec.params
    row = {
        "mean_zeta": float(np.real(state.zeta.mean())),
        "mean_vel": float("nan"),
        "energy": float("nan"),
        "min_depth": float("nan"),
        "margin": float("inf"),
    }
    if isinstance(state.vel, Field):
        row["mean_vel"] = float(np.real(state.vel.mean()))
    margins = []
    condition = None
    if spec.id not in ("CL_SCALAR",):
        d = depth_fields(state.zeta, p, spec.b, check=False)
        depth = min(d.h1.min_real(), d.h2.min_real())
        row["min_depth"] = depth
        if spec.id in ("SW1D", "SW2D", "GN1D", "CHGN1D"):
            margins.append(("depth (h1,h2)", depth))
    if spec.id == "SW1D":
        margins.append(("hyperbolicity", sw1d_hyperbolicity(state, p, spec.b)))
    elif spec.id == "CHGN1D":
        m1, m2 = chgn_margins(state.zeta, p)
        margins.append(("1+eps*kappa1*zeta", m1))
        margins.append(("1+eps*kappa2*zeta", m2))
    elif spec.id == "SYMBOUSS1D":
        ops = spec.sym_bouss()
        margins.append(("sym_mass_definite", sym_mass_margin(state.zeta, p, ops)))
        row["energy"] = sym_energy(state, p, ops)
    if margins:
        condition, margin = min(margins, key=lambda kv: kv[1])
        row["margin"] = margin
        row["_condition"] = condition
    return row


_ERROR_BY_CONDITION = {
    "depth (h1,h2)": DepthError,
    "hyperbolicity": HyperbolicityError,
    "1+eps*kappa1*zeta": EllipticityError,
    "1+eps*kappa2*zeta": EllipticityError,
    "sym_mass_definite": AdmissibilityError,
}


def _check_admissible(spec, state, t, row):
    if not state.is_finite():
        raise BlowUpError(t)
    margin = row.get("margin", float("inf"))
    if margin <= 0.0:
        condition = row.get("_condition", "admissibility")
        err = _ERROR_BY_CONDITION.get(condition, AdmissibilityError)
        raise err(condition, margin, time=t)


def integrate(spec: ModelSpec, state0: State, cfg: StepperConfig) -> Trajectory:
    """Run ERK4 to t_end, recording monitors/snapshots at the output stride."""
    rhs = rhs_function(spec)
    n_steps = max(1, int(round(cfg.t_end / cfg.dt))) if cfg.t_end > 0 else 0
    h = cfg.t_end / n_steps if n_steps else cfg.dt
    traj = Trajectory()
    state = state0
    row = _monitor_row(spec, state)
    _check_admissible(spec, state, 0.0, row)
    traj.record(0.0, state, {k: v for k, v in row.items() if not k.startswith("_")})
    for step in range(1, n_steps + 1):
        state = rk4_step(rhs, state, h)
        t = step * h
        if step % cfg.output_stride == 0 or step == n_steps:
            row = _monitor_row(spec, state)
            _check_admissible(spec, state, t, row)
            traj.record(t, state,
                        {k: v for k, v in row.items() if not k.startswith("_")})
    return traj


def x_s_norm(state: State, p: Params, s=0.0) -> float:
    """Energy-space norm: (|zeta|_{H^s}^2 + |v|_{H^s}^2 + mu |dx v|_{H^s}^2)^(1/2)."""
    if state.zeta.grid.dim != 1 or not isinstance(state.vel, Field):
        raise ValueError("the energy-space norm is defined for 1D (zeta, v) states")
    nz = sobolev_norm(state.zeta, s)
    nv = sobolev_norm(state.vel, s)
    ndv = sobolev_norm(deriv(state.vel), s)
    return float(np.sqrt(nz**2 + nv**2 + p.mu * ndv**2))
