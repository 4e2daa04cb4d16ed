"""The model hierarchy as "compute time derivative from state" maps.

All one-dimensional systems share the interface equation
d_t zeta = -d_x(h1 h2 v / (h1 + gamma h2)); they differ in the momentum
equation and in which velocity variable is prognostic:

* SW1D/SW2D: first-order system in (zeta, v) resp. (zeta, V);
* GN1D: prognostic pair (zeta, w) with w the dispersive momentum combination,
  v recovered per evaluation by a preconditioned fixed point;
* CHGN1D: (zeta, v) with the variable-coefficient elliptic operator inverted
  inside the right-hand side;
* BOUSS1D / SYMBOUSS1D: quasilinear long-wave systems, mass operators
  inverted exactly per Fourier mode (diagonal) or by preconditioned CG;
* CL_SCALAR: scalar unidirectional/decoupled equation.

The 2D dispersive system is exposed as a residual evaluator only; its
well-posedness as an evolution problem is unclear and long 2D runs are out of
scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, BilayerError
from .operators import (
    curvature_term,
    depth_fields,
    ellipticity_margins,
    mft_solve,
    n0_nonlinear,
    q_operator,
    r_operator,
    t_operator,
)
from .params import (
    BoussinesqOps,
    ChgnCoeffs,
    ClCoeffs,
    Params,
    SymBoussinesqOps,
    boussinesq_ops,
    chgn_coeffs,
    cl_coeffs,
    sym_boussinesq_ops,
)
from .spectral import (
    Field,
    VecField,
    apply_multiplier,
    dealias,
    deriv,
    deriv_dealiased,
    div,
    grad,
    helmholtz_inverse,
    laplacian,
    shift,
)

MODEL_IDS = (
    "SW1D", "SW2D", "GN1D", "CHGN1D", "BOUSS1D", "SYMBOUSS1D",
    "CL_SCALAR", "GN2D",
)
FLAT_BOTTOM_ONLY = {"CHGN1D", "BOUSS1D", "SYMBOUSS1D", "CL_SCALAR"}

ROLE_SHEAR_MEAN = "shear_mean_v"
ROLE_SHEAR_V = "shear_V"
ROLE_MOMENTUM_W = "gn_momentum_w"
ROLE_SCALAR = "scalar_u"

_FD_STEP = 1e-4  # perturbation size for operator time derivatives


@dataclass
class State:
    """Prognostic pair (zeta, vel); vel is None for the scalar models."""

    zeta: Field
    vel: Field | VecField | None
    role: str = ROLE_SHEAR_MEAN

    def like(self, zeta, vel):
        return State(zeta, vel, self.role)

    def is_finite(self):
        ok = self.zeta.is_finite()
        if self.vel is not None:
            ok = ok and self.vel.is_finite()
        return ok


@dataclass
class ModelSpec:
    """Identifier plus options selecting one system of the hierarchy."""

    id: str
    params: Params
    b: Field | None = None
    family: tuple = (0.0, 0.0, 0.0, 0.0)  # (theta1, theta2, lambda1, lambda2)
    cl: ClCoeffs | None = None
    tension: bool = False
    tol: float = 1e-11

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ValueError(f"unknown model id {self.id!r}")
        if self.id in FLAT_BOTTOM_ONLY and self.b is not None \
                and np.any(self.b.values):
            raise ValueError(f"{self.id} requires a flat bottom (b = 0)")
        if self.id == "CL_SCALAR" and self.cl is None:
            p = self.params
            self.cl = cl_coeffs("unidirectional", p.gamma, p.delta)

    @property
    def bond_inv(self):
        """Effective Bo^-1: zero when surface tension is switched off."""
        return self.params.bond_inv if self.tension else 0.0

    @property
    def bo_inv(self):
        return self.params.bo_inv if self.tension else 0.0

    def chgn(self) -> ChgnCoeffs:
        return chgn_coeffs(self.params.gamma, self.params.delta)

    def bouss(self) -> BoussinesqOps:
        t1, t2, l1, l2 = self.family
        return boussinesq_ops(self.params.gamma, self.params.delta,
                              self.bo_inv, t1, t2, l1, l2)

    def sym_bouss(self) -> SymBoussinesqOps:
        return sym_boussinesq_ops(self.params.gamma, self.params.delta,
                                  self.bo_inv)

    def scaled_bottom(self):
        if self.b is None or self.params.beta == 0.0 or not np.any(self.b.values):
            return None
        return self.params.beta * self.b


# -- shared pieces --------------------------------------------------------------


def shear_flux(zeta: Field, vel, p: Params, b: Field | None = None,
               depths=None):
    """h1 h2 vel / (h1 + gamma h2); vel may be a Field (1D) or VecField."""
    d = depths or depth_fields(zeta, p, b)
    coeff = d.h1 * d.h2 / (d.h1 + p.gamma * d.h2)
    if isinstance(vel, Field):
        return dealias(coeff * vel)
    return dealias(VecField(tuple(coeff * c for c in vel)))


def interface_divergence(zeta: Field, v: Field, p: Params,
                         b: Field | None = None, depths=None) -> Field:
    """-d_x of the dealiased interface flux (the shared 1D zeta-equation)."""
    d = depths or depth_fields(zeta, p, b)
    coeff = d.h1 * d.h2 / (d.h1 + p.gamma * d.h2)
    return -deriv_dealiased(coeff * v)


def _momentum_flux_coeff(d, gamma):
    denom = d.h1 + gamma * d.h2
    return (d.h1 * d.h1 - gamma * d.h2 * d.h2) / (denom * denom)


# -- shallow water -----------------------------------------------------------------


def sw1d_rhs(state: State, p: Params, b: Field | None = None,
             bond_inv=0.0) -> State:
    zeta, v = state.zeta, state.vel
    d = depth_fields(zeta, p, b)
    dzeta = interface_divergence(zeta, v, p, b, depths=d)
    gd = p.gamma + p.delta
    dv = -gd * deriv(zeta) \
        - 0.5 * p.epsilon * deriv_dealiased(_momentum_flux_coeff(d, p.gamma) * v * v)
    if bond_inv:
        dv = dv + gd * bond_inv * deriv(zeta, order=3)
    return state.like(dzeta, dv)


def sw1d_hyperbolicity(state: State, p: Params, b: Field | None = None) -> float:
    """Minimum over the grid of the symmetrizability margin."""
    d = depth_fields(state.zeta, p, b)
    denom = d.h1 + p.gamma * d.h2
    v = state.vel
    expr = (p.gamma + p.delta) \
        - p.gamma * p.epsilon**2 * (d.h1 + d.h2) ** 2 * v * v / (denom ** 3)
    return expr.min_real()


def sw2d_rhs(state: State, p: Params, bond_inv=0.0, tol=1e-12,
             b: Field | None = None) -> State:
    zeta, V = state.zeta, state.vel
    d = depth_fields(zeta, p, b)
    rV = r_operator(zeta, p, V, tol=tol, b=b)
    dzeta = -div(dealias(VecField(tuple(d.h1 * c for c in rV))))
    gd = p.gamma + p.delta
    m = V - p.gamma * rV
    quad = dealias(m.dot(m) - p.gamma * rV.dot(rV))
    tension = gd * bond_inv
    components = []
    for axis in range(2):
        comp = -gd * deriv(zeta, axis=axis) \
            - 0.5 * p.epsilon * deriv(quad, axis=axis)
        if tension:
            comp = comp + tension * deriv(laplacian(zeta), axis=axis)
        components.append(comp)
    return state.like(dzeta, VecField(tuple(components)))


# -- fully dispersive 1D system -----------------------------------------------------


def _scaled_bottom(p: Params, b: Field | None):
    if b is None or p.beta == 0.0 or not np.any(b.values):
        return None
    return p.beta * b


def _dispersive_apply_factory(zeta: Field, p: Params, b: Field | None,
                              depths=None):
    """Precompute coefficient fields of v -> mu*(T-combination)[zeta] v.

    The solver loops apply this operator many times at fixed zeta; the
    flat-bottom fast path keeps only the v-dependent work per application.
    """
    d = depths or depth_fields(zeta, p, b)
    bscaled = _scaled_bottom(p, b)
    denom = d.h1 + p.gamma * d.h2
    u2c = d.h1 / denom
    u1c = -(d.h2 / denom)
    if bscaled is not None:
        def apply_general(v):
            out = t_operator(d.h2, bscaled, u2c * v)
            if p.gamma:
                out = out - p.gamma * t_operator(d.h1, None, u1c * v)
            return p.mu * out
        return apply_general
    h2cubed = d.h2 * d.h2 * d.h2
    h1cubed = d.h1 * d.h1 * d.h1
    f2 = (-1.0 / 3.0) / d.h2
    f1 = (-1.0 / 3.0) / d.h1
    gamma = p.gamma

    def apply_flat(v):
        out = f2 * deriv(h2cubed * deriv(u2c * v))
        if gamma:
            out = out - gamma * (f1 * deriv(h1cubed * deriv(u1c * v)))
        return p.mu * dealias(out)

    return apply_flat


def _gn_dispersive_part(zeta: Field, v: Field, p: Params, b: Field | None):
    """mu * (T[h2, beta b] u2 - gamma T[h1, 0] u1) acting on the shear velocity."""
    return _dispersive_apply_factory(zeta, p, b)(v)


def gn1d_pack(zeta: Field, v: Field, p: Params, b: Field | None = None) -> Field:
    """w = v + dispersive momentum combination."""
    return v + _gn_dispersive_part(zeta, v, p, b)


def _gn_momentum_solve(zeta: Field, p: Params, b, rhs: Field, tol, max_iter,
                       v_init: Field | None, label: str,
                       depths=None) -> Field:
    """Solve v + mu*(T-combination)[zeta] v = rhs.

    The dispersive part is dealiased, so beyond the 2/3 cutoff the operator is
    triangular: that band is copied over exactly and the preconditioned fixed
    point (flat-state inverse, exact at zeta = 0) runs on the resolved band,
    where it contracts at a rate O(epsilon).
    """
    from .errors import IterationLimitError

    nu = chgn_coeffs(p.gamma, p.delta).nu
    a = p.mu * nu
    rhs_norm = np.linalg.norm(rhs.values)
    if rhs_norm == 0.0:
        return Field.zeros(rhs.grid)
    apply_op = _dispersive_apply_factory(zeta, p, b, depths=depths)
    rhs_band = dealias(rhs)
    v_hi = rhs - rhs_band
    if np.linalg.norm(v_hi.values) <= 1e-15 * rhs_norm:
        v_hi = None
        target = rhs_band
    else:
        target = rhs_band - apply_op(v_hi)
    v = helmholtz_inverse(a, target) if v_init is None else dealias(v_init)
    for _ in range(max_iter):
        residual = target - v - apply_op(v)
        if np.linalg.norm(residual.values) <= tol * rhs_norm:
            return v if v_hi is None else v + v_hi
        v = v + helmholtz_inverse(a, residual)
    raise IterationLimitError(
        label, max_iter, np.linalg.norm(residual.values) / rhs_norm, tol)


def gn1d_unpack(zeta: Field, w: Field, p: Params, b: Field | None = None,
                tol=1e-11, max_iter=100, v_init: Field | None = None) -> Field:
    """Invert the momentum combination by a preconditioned fixed point."""
    return _gn_momentum_solve(zeta, p, b, w, tol, max_iter, v_init,
                              "gn1d-unpack")


def _gn1d_quadratic_source(d, gamma, v):
    """Flat-bottom 1D quadratic dispersive source (fused evaluation).

    Same quantity n0_nonlinear returns for d=1, b=0, written with one final
    truncation: (1/2)[(h2 u2')^2 - gamma (h1 u1')^2] - u2 T2 u2 + gamma u1 T1 u1.
    """
    denom = d.h1 + gamma * d.h2
    u2 = d.h1 * v / denom
    du2 = deriv(u2)
    inner2 = deriv(d.h2 * d.h2 * d.h2 * du2)
    out = 0.5 * (d.h2 * du2) ** 2 + u2 * inner2 / (3.0 * d.h2)
    if gamma:
        u1 = -(d.h2 * v) / denom
        du1 = deriv(u1)
        inner1 = deriv(d.h1 * d.h1 * d.h1 * du1)
        out = out - gamma * (0.5 * (d.h1 * du1) ** 2 + u1 * inner1 / (3.0 * d.h1))
    return dealias(out)


def _gn1d_momentum_rhs(zeta: Field, v: Field, p: Params, b: Field | None,
                       bond_inv, depths=None) -> Field:
    """Right-hand side of the w-equation evaluated on (zeta, v)."""
    d = depths or depth_fields(zeta, p, b)
    denom = d.h1 + p.gamma * d.h2
    gd = p.gamma + p.delta
    dw = -gd * deriv(zeta) \
        - 0.5 * p.epsilon * deriv_dealiased(_momentum_flux_coeff(d, p.gamma) * v * v)
    if p.mu and p.epsilon:
        if b is None or p.beta == 0.0 or not np.any(b.values):
            source = _gn1d_quadratic_source(d, p.gamma, v)
        else:
            u2 = d.h1 * v / denom
            u1 = -(d.h2 * v) / denom
            source = n0_nonlinear(zeta, b, u1, u2, p, depths=d)
        dw = dw + p.mu * p.epsilon * deriv(source)
    if bond_inv:
        dw = dw + curvature_term(zeta, p.with_(bond_inv=bond_inv))
    return dw


def gn1d_rhs(state: State, p: Params, b: Field | None = None, bond_inv=0.0,
             tol=1e-11, cache: dict | None = None) -> State:
    """Time derivative of (zeta, w); v is recovered by gn1d_unpack."""
    zeta, w = state.zeta, state.vel
    d = depth_fields(zeta, p, b)
    v_init = cache.get("v") if cache is not None else None
    v = _gn_momentum_solve(zeta, p, b, w, tol, 100, v_init, "gn1d-unpack",
                           depths=d)
    if cache is not None:
        cache["v"] = v
    dzeta = interface_divergence(zeta, v, p, b, depths=d)
    dw = _gn1d_momentum_rhs(zeta, v, p, b, bond_inv, depths=d)
    return state.like(dzeta, dw)


def _gn_operator_time_derivative(zeta: Field, v: Field, p: Params, b,
                                 direction: Field) -> Field:
    """Directional derivative of the mu-scaled momentum operator in zeta.

    Fourth-order central differences of the mu-sized operator output; the
    differencing error scales with mu and sits orders of magnitude below the
    O(mu^2) residuals this enters.
    """
    h = _FD_STEP / max(direction.linf(), 1e-12)
    plus1 = _gn_dispersive_part(zeta + h * direction, v, p, b)
    minus1 = _gn_dispersive_part(zeta - h * direction, v, p, b)
    plus2 = _gn_dispersive_part(zeta + 2 * h * direction, v, p, b)
    minus2 = _gn_dispersive_part(zeta - 2 * h * direction, v, p, b)
    return (8.0 * (plus1 - minus1) - (plus2 - minus2)) * (1.0 / (12.0 * h))


def gn1d_dtv(zeta: Field, v: Field, p: Params, b: Field | None = None,
             bond_inv=0.0, tol=1e-12):
    """(d_t zeta, d_t v) of the dispersive system on a (zeta, v) state.

    The time derivative of the zeta-dependent momentum operator is expanded
    via the chain rule with d_t zeta known in closed form, so the returned
    d_t v is the model's genuine v-form vector field (used for cross-model
    residual measurements).
    """
    dzeta = interface_divergence(zeta, v, p, b)
    op_dt = _gn_operator_time_derivative(zeta, v, p, b, dzeta)
    g_rhs = _gn1d_momentum_rhs(zeta, v, p, b, bond_inv)
    dv = _gn_momentum_solve(zeta, p, b, g_rhs - op_dt, tol, 200, None,
                            "gn1d-dtv")
    return dzeta, dv


# -- medium amplitude (CH regime) system ----------------------------------------------


def chgn1d_rhs(state: State, p: Params, coeffs: ChgnCoeffs | None = None,
               tol=1e-11, bond_inv=0.0, cache: dict | None = None) -> State:
    zeta, v = state.zeta, state.vel
    if coeffs is None:
        coeffs = chgn_coeffs(p.gamma, p.delta)
    d = depth_fields(zeta, p)  # (H1); (H2) is checked inside the solve
    dzeta = interface_divergence(zeta, v, p, depths=d)
    gd = p.gamma + p.delta
    q1 = 1.0 + p.epsilon * coeffs.kappa1 * zeta
    quad = (_momentum_flux_coeff(d, p.gamma) - coeffs.varsigma) * v * v
    F = -gd * q1 * deriv(zeta) \
        - 0.5 * p.epsilon * q1 * deriv_dealiased(quad) \
        - (2.0 / 3.0) * p.mu * p.epsilon * coeffs.alpha \
        * deriv_dealiased(deriv(v) ** 2)
    if bond_inv:
        F = F + curvature_term(zeta, p.with_(bond_inv=bond_inv))
    x0 = cache.get("tinv") if cache is not None else None
    tinv = mft_solve(zeta, coeffs, p, F, tol=tol, x0=x0)
    if cache is not None:
        cache["tinv"] = tinv
    dv = -p.epsilon * coeffs.varsigma * dealias(v * deriv(v)) + tinv
    return state.like(dzeta, dv)


def chgn_margins(zeta: Field, p: Params, coeffs: ChgnCoeffs | None = None):
    if coeffs is None:
        coeffs = chgn_coeffs(p.gamma, p.delta)
    return ellipticity_margins(zeta, coeffs, p)


# -- long wave (Boussinesq) systems ----------------------------------------------------


def bouss_transform_velocity(v: Field, p: Params, theta1, theta2,
                             inverse=False) -> Field:
    """Near-identity change of variable (1-mu th1 dxx)^-1 (1-mu th2 dxx)."""
    k2 = v.grid.k2
    mult = (1.0 + p.mu * theta2 * k2) / (1.0 + p.mu * theta1 * k2)
    if inverse:
        mult = 1.0 / mult
    return apply_multiplier(v, mult)


def boussinesq_rhs(state: State, p: Params, ops: BoussinesqOps) -> State:
    zeta, v = state.zeta, state.vel
    gd = p.gamma + p.delta
    a_nl = ops.a_nl
    r1 = -(1.0 / gd) * deriv(v)
    if a_nl and p.epsilon:
        r1 = r1 - p.epsilon * a_nl * deriv(dealias(zeta * v))
    if ops.A2t[0, 1]:
        r1 = r1 - p.mu * ops.A2t[0, 1] * deriv(v, order=3)
    r2 = -gd * deriv(zeta)
    if a_nl and p.epsilon:
        r2 = r2 - p.epsilon * a_nl * dealias(v * deriv(v))
    if ops.A2t[1, 0]:
        r2 = r2 - p.mu * ops.A2t[1, 0] * deriv(zeta, order=3)
    dzeta = helmholtz_inverse(p.mu * ops.A1t[0, 0], r1)
    dv = helmholtz_inverse(p.mu * ops.A1t[1, 1], r2)
    return state.like(dzeta, dv)


def sym_mass_margin(zeta: Field, p: Params, ops: SymBoussinesqOps) -> float:
    """Pointwise minimum of the (2,2) mass entry S0 + eps S[U]."""
    c = ops.c_nl / (p.gamma + p.delta)
    entry = 1.0 / (p.gamma + p.delta) + p.epsilon * c * zeta.values.real
    return float(entry.min())


def sym_boussinesq_rhs(state: State, p: Params, ops: SymBoussinesqOps,
                       tol=1e-11, cache: dict | None = None) -> State:
    """Solve (S0 + eps S[U] - mu S1 dxx) dU = -(Sigma0 + eps Sigma[U] - mu Sigma1 dxx) dx U.

    Every matrix involved is diagonal or the U-linear maps have exact-derivative
    quadratic fluxes, so the zeta row inverts exactly per mode and the v row is
    a scalar SPD solve preconditioned by its flat-state inverse.
    """
    from .errors import IterationLimitError

    zeta, v = state.zeta, state.vel
    gd = p.gamma + p.delta
    c = ops.c_nl
    margin = sym_mass_margin(zeta, p, ops)
    if margin <= 0.0:
        raise AdmissibilityError("sym_mass_definite", margin)
    k1 = zeta.grid.wavenumber(0).copy()
    k1[zeta.grid._nyq_index[0]] = 0.0
    lin_mult = -1j * k1 + p.mu * ops.Sigma1[0, 1] * (1j * k1) ** 3
    r1 = apply_multiplier(v, lin_mult)
    if c and p.epsilon:
        r1 = r1 - p.epsilon * c * deriv_dealiased(zeta * v)
    r2 = apply_multiplier(zeta, lin_mult)
    if c and p.epsilon:
        r2 = r2 - p.epsilon * c * deriv_dealiased(
            0.5 * zeta * zeta + 0.5 * v * v / gd**2)
    # zeta row: constant coefficients
    s00, s100 = ops.S0[0, 0], ops.S1[0, 0]
    dzeta = helmholtz_inverse(p.mu * s100 / s00, (1.0 / s00) * r1)
    # v row: (s11 + eps*c/gd*zeta - mu s111 dxx) dv = r2
    s11, s111 = ops.S0[1, 1], ops.S1[1, 1]
    coef = s11 + p.epsilon * (c / gd) * zeta
    a = p.mu * s111 / s11

    def apply_op(x: Field) -> Field:
        return coef * x - p.mu * s111 * deriv(deriv(x))

    def precond(r: Field) -> Field:
        return helmholtz_inverse(a, (1.0 / s11) * r)

    f_norm = np.linalg.norm(r2.values)
    if f_norm == 0.0:
        return state.like(dzeta, Field.zeros(zeta.grid))
    x = precond(r2) if cache is None or "dv" not in cache else cache["dv"]
    r = r2 - apply_op(x)
    if np.linalg.norm(r.values) > tol * f_norm:
        z = precond(r)
        pdir = z
        rz = np.vdot(r.values, z.values).real
        for it in range(1, 301):
            Ap = apply_op(pdir)
            alpha = rz / np.vdot(pdir.values, Ap.values).real
            x = x + alpha * pdir
            r = r - alpha * Ap
            if np.linalg.norm(r.values) <= tol * f_norm:
                break
            z = precond(r)
            rz_new = np.vdot(r.values, z.values).real
            pdir = z + (rz_new / rz) * pdir
            rz = rz_new
        else:
            raise IterationLimitError("sym-bouss-cg", 300,
                                      np.linalg.norm(r.values) / f_norm, tol)
    if cache is not None:
        cache["dv"] = x
    return state.like(dzeta, x)


def sym_energy(state: State, p: Params, ops: SymBoussinesqOps,
               include_nonlinear=True) -> float:
    """E(U) = (S0 U, U) + eps (S[U] U, U) + mu (S1 dx U, dx U)."""
    zeta, v = state.zeta, state.vel
    vol = zeta.grid.cell_volume
    u = (zeta.values, v.values)
    e = ops.S0[0, 0] * np.sum(u[0] ** 2) + ops.S0[1, 1] * np.sum(u[1] ** 2)
    if include_nonlinear and p.epsilon:
        c = ops.c_nl / (p.gamma + p.delta)
        e += p.epsilon * c * np.sum(u[0] * u[1] ** 2)
    dz = deriv(zeta).values
    dv = deriv(v).values
    e += p.mu * (ops.S1[0, 0] * np.sum(dz**2) + ops.S1[1, 1] * np.sum(dv**2))
    return float(e * vol)


# -- scalar models -----------------------------------------------------------------------


def cl_rhs(u: Field, p: Params, c: ClCoeffs, transport=True, sign=1.0) -> Field:
    """Scalar dispersive right-hand side; the unit transport term is present
    only for the unidirectional variant, the decoupled split applies signs at
    recombination."""
    if not c.admissible:
        raise AdmissibilityError("nu_t>0", c.nu_t)
    du = deriv(u)
    F = Field.zeros(u.grid)
    if transport:
        F = F - du
    nl = None
    if p.epsilon:
        # Horner form of (eps a1 u + eps^2 a2 u^2 + eps^3 a3 u^3) du; a single
        # truncation of the sum equals truncating each product separately
        poly = p.epsilon * (c.alpha1
                            + u * (p.epsilon * c.alpha2
                                   + u * (p.epsilon**2 * c.alpha3))) * u
        nl = dealias(poly * du)
    disp = p.mu * c.nu_x * deriv(u, order=3)
    if p.epsilon and p.mu:
        d2u = deriv(u, order=2)
        nl = nl + p.mu * p.epsilon * deriv_dealiased(
            c.kappa1 * u * d2u + c.kappa2 * du * du)
    F = F - sign * (disp if nl is None else nl + disp)
    return helmholtz_inverse(p.mu * c.nu_t, F)


def unidirectional_velocity_profile(zeta: Field, p: Params) -> Field:
    """v = (h1 + gamma h2)/(h1 h2) * vbar[zeta] from the theta=lambda=0 constants."""
    c0 = cl_coeffs("unidirectional", p.gamma, p.delta, theta=0.0, lam=0.0)
    dz2 = deriv(zeta, order=2)
    dz = deriv(zeta)
    vbar = zeta \
        + p.epsilon * 0.5 * c0.alpha1 * dealias(zeta * zeta) \
        + p.epsilon**2 * (c0.alpha2 / 3.0) * dealias(zeta ** 3) \
        + p.epsilon**3 * 0.25 * c0.alpha3 * dealias(zeta ** 4) \
        + p.mu * c0.nu_x * dz2 \
        + p.mu * p.epsilon * dealias(c0.kappa1 * zeta * dz2 + c0.kappa2 * dz * dz)
    d = depth_fields(zeta, p)
    return dealias((d.h1 + p.gamma * d.h2) / (d.h1 * d.h2) * vbar)


def build_unidirectional_ic(zeta0: Field, p: Params,
                            c: ClCoeffs | None = None) -> State:
    """State (zeta0, v0) prepared so the flow is a single right-moving wave."""
    v0 = unidirectional_velocity_profile(zeta0, p)
    return State(zeta0, v0, ROLE_SHEAR_MEAN)


def _rk4(u: Field, rhs, dt) -> Field:
    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def decoupled_trajectory(zeta0: Field, v0: Field, p: Params, c: ClCoeffs,
                         T, dt, output_stride=None):
    """Counter-propagating scalar approximation, recombined along the run.

    Each half-wave is stepped in its lambda-transformed variable, mapped back,
    and recombined with exact spectral shifts by +-t.  Returns (times, states)
    sampled at the output stride (final state always included).
    """
    if c.variant != "decoupled":
        raise ValueError("decoupled evolution needs the decoupled coefficient set")
    gd = p.gamma + p.delta
    vp = 0.5 * (zeta0 + v0 / gd)
    vm = 0.5 * (zeta0 - v0 / gd)
    k2 = zeta0.grid.k2
    # v_pm^lambda = (1 +- mu lambda dxx) v_pm
    lam_mult_p = 1.0 - p.mu * c.lam * k2
    lam_mult_m = 1.0 + p.mu * c.lam * k2
    if c.lam and (np.any(lam_mult_p == 0.0) or np.any(lam_mult_m == 0.0)):
        raise ValueError("lambda transform is singular on this grid")
    vp = apply_multiplier(vp, lam_mult_p)
    vm = apply_multiplier(vm, lam_mult_m)
    n_steps = max(1, int(round(T / dt))) if T > 0 else 0
    h = T / n_steps if n_steps else dt
    stride = output_stride or max(1, n_steps)
    rhs_p = lambda u: cl_rhs(u, p, c, transport=False, sign=1.0)
    rhs_m = lambda u: cl_rhs(u, p, c, transport=False, sign=-1.0)

    def recombine(t, vp_lam, vm_lam):
        a = apply_multiplier(vp_lam, 1.0 / lam_mult_p)
        bb = apply_multiplier(vm_lam, 1.0 / lam_mult_m)
        a = shift(a, t)     # v_+(x - t)
        bb = shift(bb, -t)  # v_-(x + t)
        return State(a + bb, gd * (a - bb), ROLE_SHEAR_MEAN)

    times = [0.0]
    states = [recombine(0.0, vp, vm)]
    for step in range(1, n_steps + 1):
        vp = _rk4(vp, rhs_p, h)
        vm = _rk4(vm, rhs_m, h)
        if step % stride == 0 or step == n_steps:
            t = step * h
            times.append(t)
            states.append(recombine(t, vp, vm))
    return times, states


def decoupled_evolve(zeta0: Field, v0: Field, p: Params, c: ClCoeffs,
                     T, dt) -> State:
    """Terminal state of the decoupled approximation at time T."""
    _, states = decoupled_trajectory(zeta0, v0, p, c, T, dt)
    return states[-1]


# -- 2D dispersive residual ---------------------------------------------------------------


def _gn2d_momentum_expression(zeta: Field, v: VecField, p: Params,
                              b: Field | None, tol):
    """(m, X1, X2, u1, u2) for the 2D system at one time level."""
    flux = shear_flux(zeta, v, p, b)
    u1 = -1.0 * q_operator(-p.epsilon * zeta, flux, tol=tol)
    u2 = p.delta * q_operator(p.delta * p.epsilon * zeta, flux, tol=tol)
    d = depth_fields(zeta, p, b)
    bscaled = _scaled_bottom(p, b)
    t2 = t_operator(d.h2, bscaled, u2)
    t1 = t_operator(d.h1, None, u1)
    q2 = p.delta * q_operator(
        p.delta * p.epsilon * zeta,
        VecField(tuple(d.h2 * cmp for cmp in t2)), tol=tol)
    q1 = q_operator(
        -p.epsilon * zeta,
        VecField(tuple(d.h1 * cmp for cmp in t1)), tol=tol)
    m = u2 - p.gamma * u1 + p.mu * (q2 - p.gamma * q1)
    X2 = u2 + p.mu * q2
    X1 = u1 + p.mu * q1
    return m, X1, X2, u1, u2


def gn2d_residual(zeta: Field, v: VecField, dtzeta: Field, dtv: VecField,
                  p: Params, b: Field | None = None, bond_inv=0.0,
                  dt_fd=1e-6, tol=1e-12):
    """Residuals of both 2D equations for supplied time derivatives.

    Time derivatives of operator-valued expressions are evaluated by forward
    differencing the supplied snapshots at spacing dt_fd.
    """
    flux = shear_flux(zeta, v, p, b)
    res1 = dtzeta + div(flux)
    m0, X1, X2, u1, u2 = _gn2d_momentum_expression(zeta, v, p, b, tol)
    zeta1 = zeta + dt_fd * dtzeta
    v1 = VecField(tuple(c + dt_fd * w for c, w in zip(v, dtv)))
    m1, _, _, _, _ = _gn2d_momentum_expression(zeta1, v1, p, b, tol)
    dt_m = VecField(tuple((a - bb) * (1.0 / dt_fd) for a, bb in zip(m1, m0)))
    gd = p.gamma + p.delta
    quad = dealias(X2.dot(X2) - p.gamma * X1.dot(X1))
    n0 = n0_nonlinear(zeta, b, u1, u2, p)
    components = []
    tension = None
    if bond_inv:
        tension = curvature_term(zeta, p.with_(bond_inv=bond_inv))
    for axis in range(2):
        comp = dt_m[axis] + gd * deriv(zeta, axis=axis) \
            + 0.5 * p.epsilon * deriv(quad, axis=axis) \
            - p.mu * p.epsilon * deriv(n0, axis=axis)
        if tension is not None:
            comp = comp - tension[axis]
        components.append(comp)
    return res1, VecField(tuple(components))


# -- dispatch -------------------------------------------------------------------------------


def rhs_function(spec: ModelSpec):
    """Uniform d_t map for a model spec; private caches for inner solvers."""
    p = spec.params
    cache: dict = {}
    if spec.id == "SW1D":
        return lambda s: sw1d_rhs(s, p, spec.b, spec.bond_inv)
    if spec.id == "SW2D":
        return lambda s: sw2d_rhs(s, p, spec.bond_inv, tol=spec.tol, b=spec.b)
    if spec.id == "GN1D":
        return lambda s: gn1d_rhs(s, p, spec.b, spec.bond_inv,
                                  tol=spec.tol, cache=cache)
    if spec.id == "CHGN1D":
        coeffs = spec.chgn()
        return lambda s: chgn1d_rhs(s, p, coeffs, tol=spec.tol,
                                    bond_inv=spec.bond_inv, cache=cache)
    if spec.id == "BOUSS1D":
        ops = spec.bouss()
        return lambda s: boussinesq_rhs(s, p, ops)
    if spec.id == "SYMBOUSS1D":
        ops = spec.sym_bouss()
        return lambda s: sym_boussinesq_rhs(s, p, ops, tol=spec.tol,
                                            cache=cache)
    if spec.id == "CL_SCALAR":
        c = spec.cl
        transport = c.variant == "unidirectional"
        return lambda s: s.like(cl_rhs(s.zeta, p, c, transport=transport), None)
    raise BilayerError(f"{spec.id} has no time-stepping right-hand side; "
                       "the 2D dispersive system is residual-only")


def initial_role(model_id):
    return {
        "SW1D": ROLE_SHEAR_MEAN,
        "SW2D": ROLE_SHEAR_V,
        "GN1D": ROLE_MOMENTUM_W,
        "CHGN1D": ROLE_SHEAR_MEAN,
        "BOUSS1D": ROLE_SHEAR_MEAN,
        "SYMBOUSS1D": ROLE_SHEAR_MEAN,
        "CL_SCALAR": ROLE_SCALAR,
        "GN2D": ROLE_SHEAR_MEAN,
    }[model_id]


def rhs_in_v_form(spec: ModelSpec):
    """(zeta, v) -> (d_t zeta, d_t v) for the 1D models, roles unified.

    For the dispersive w-system the exact v-form derivative is computed; the
    long-wave family must be its base member for the variables to coincide.
    """
    p = spec.params
    if spec.id == "SW1D":
        def f(zeta, v):
            d = sw1d_rhs(State(zeta, v), p, spec.b, spec.bond_inv)
            return d.zeta, d.vel
        return f
    if spec.id == "CHGN1D":
        coeffs = spec.chgn()
        def f(zeta, v):
            d = chgn1d_rhs(State(zeta, v), p, coeffs, tol=spec.tol,
                           bond_inv=spec.bond_inv)
            return d.zeta, d.vel
        return f
    if spec.id == "GN1D":
        def f(zeta, v):
            return gn1d_dtv(zeta, v, p, spec.b, spec.bond_inv, tol=spec.tol)
        return f
    if spec.id == "BOUSS1D":
        if any(spec.family):
            raise BilayerError("v-form comparison needs the base family member")
        ops = spec.bouss()
        def f(zeta, v):
            d = boussinesq_rhs(State(zeta, v), p, ops)
            return d.zeta, d.vel
        return f
    if spec.id == "SYMBOUSS1D":
        ops = spec.sym_bouss()
        def f(zeta, v):
            d = sym_boussinesq_rhs(State(zeta, v), p, ops, tol=spec.tol)
            return d.zeta, d.vel
        return f
    raise BilayerError(f"{spec.id} has no v-form right-hand side")
