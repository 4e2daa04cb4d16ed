"""Model-specific spatial operators.

Conventions used throughout:

* layer depths are h1 = 1 - eps*zeta (upper) and h2 = 1/delta + eps*zeta -
  beta*b (lower), both required positive pointwise;
* the nonlocal gradient solvers are computed by their Neumann series with
  pointwise products, so the discrete divergence identities and the 1D
  pointwise-division reduction hold to solver tolerance exactly;
* explicitly nonlinear operators (the depth-weighted dispersive operators,
  quadratic source terms, curvature) dealias their output with the 2/3 rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractionError,
    DepthError,
    EllipticityError,
    IterationLimitError,
)
from .params import ChgnCoeffs, Params
from .spectral import (
    Field,
    VecField,
    dealias,
    deriv,
    div,
    grad,
    helmholtz_inverse,
    laplacian,
    project_gradient,
)

DEFAULT_H_MIN = 1e-8
SMALL_AMPLITUDE = 1e-8  # curvature switches to its analytic linear limit below


def _location_of_min(field: Field):
    values = field.values.real
    idx = np.unravel_index(np.argmin(values), values.shape)
    nodes = field.grid.nodes()
    coords = tuple(float(n[idx]) for n in nodes)
    return coords[0] if field.grid.dim == 1 else coords


def _check_depth(h: Field, name, h_min=DEFAULT_H_MIN):
    m = h.min_real()
    if m < h_min:
        raise DepthError(name, m, location=_location_of_min(h))


@dataclass(frozen=True)
class DepthFields:
    """Layer depths and the normalized flux coefficient xi.

    xi satisfies h1*h2/(h1+gamma*h2) = (1+xi)/(gamma+delta); the nonlocal
    gradient solver requires |xi|_inf < 1 on top of positive depths.
    """

    h1: Field
    h2: Field
    xi: Field


def depth_fields(zeta: Field, p: Params, b: Field | None = None,
                 h_min=DEFAULT_H_MIN, check=True) -> DepthFields:
    grid = zeta.grid
    h1 = 1.0 - p.epsilon * zeta
    h2 = Field.constant(grid, 1.0 / p.delta) + p.epsilon * zeta
    if b is not None:
        h2 = h2 - p.beta * b
    if check:
        _check_depth(h1, "h1", h_min)
        _check_depth(h2, "h2", h_min)
    xi = (p.gamma + p.delta) * h1 * h2 / (h1 + p.gamma * h2) - 1.0
    return DepthFields(h1, h2, xi)


# -- depth-weighted dispersive operator ----------------------------------------


def t_operator(h: Field, b: Field | None, V):
    """T[h,b]V = -1/(3h) grad(h^3 div V) + bottom-slope corrections.

    Accepts a Field in 1D or a VecField; returns the same kind.
    """
    scalar_in = isinstance(V, Field)
    W = VecField((V,)) if scalar_in else V
    _check_depth(h, "h")
    divV = div(W)
    h3 = h * h * h
    inner = h3 * divV
    out_components = []
    for axis in range(W.grid.dim):
        out_components.append(deriv(inner, axis=axis) * (-1.0 / 3.0) / h)
    out = VecField(tuple(out_components))
    if b is not None and np.any(b.values):
        gb = grad(b)
        gbV = gb.dot(W)
        h2b = h * h
        term2 = []
        for axis in range(W.grid.dim):
            term2.append(
                (deriv(h2b * gbV, axis=axis) - h2b * gb[axis] * divV) / (2.0 * h)
            )
        out = out + VecField(tuple(term2)) + VecField(tuple(c * gbV for c in gb))
    out = dealias(out)
    return out[0] if scalar_in else out


# -- nonlocal gradient solvers --------------------------------------------------


def neumann_gradient_solve(xi: Field, W: VecField, tol=1e-12, max_terms=200,
                           collect=False):
    """Sum the alternating projected Neumann series for the gradient solution.

    Returns V with div((1+xi) V) = div(W) and V in the range of the gradient
    projector.  Stops when an increment's L2 norm drops below tol*|W|_L2.
    Products are pointwise (no dealiasing) so the discrete identity is exact.
    """
    linf = float(np.abs(xi.values.real).max())
    if linf >= 1.0:
        raise ContractionError(
            "|xi|_inf<1", 1.0 - linf,
            message=f"contraction failure: |xi|_inf = {linf:.6g} >= 1",
        )
    w_norm = W.l2_norm()
    increments = []
    if w_norm == 0.0:
        V = VecField.zeros(W.grid)
        return (V, increments) if collect else V
    term = project_gradient(W)
    V = term
    for _ in range(max_terms):
        term = -project_gradient(VecField(tuple(xi * c for c in term)))
        inc = term.l2_norm()
        increments.append(inc)
        V = V + term
        if inc <= tol * w_norm:
            return (V, increments) if collect else V
    raise IterationLimitError("neumann-series", max_terms,
                              increments[-1] / w_norm, tol)


def q_operator(xi: Field, W: VecField, tol=1e-12, max_terms=200) -> VecField:
    """Gradient solution V of div((1+xi) V) = div(W); requires |xi|_inf < 1."""
    return neumann_gradient_solve(xi, W, tol=tol, max_terms=max_terms)


def r_operator(zeta: Field, p: Params, W: VecField, tol=1e-12,
               b: Field | None = None, max_terms=200) -> VecField:
    """Gradient solution V of div((h1+gamma*h2) V) = div(h2 W).

    Normalizes by the flat-state weight 1+gamma/delta so the same Neumann
    machinery applies with coefficient (h1+gamma*h2)/(1+gamma/delta) - 1.
    """
    d = depth_fields(zeta, p, b)
    scale = 1.0 + p.gamma / p.delta
    coeff = (d.h1 + p.gamma * d.h2) / scale - 1.0
    rhs = VecField(tuple(d.h2 * c / scale for c in W))
    return neumann_gradient_solve(coeff, rhs, tol=tol, max_terms=max_terms)


# -- one-dimensional dispersive pair -------------------------------------------


def qbar(h1: Field, h2: Field, gamma, v: Field) -> Field:
    """Flat-bottom dispersive operator acting on the shear mean velocity."""
    _check_depth(h1, "h1")
    _check_depth(h2, "h2")
    denom = h1 + gamma * h2
    u2 = h1 * v / denom
    mu1 = h2 * v / denom  # = -ubar1
    t1 = h1 * deriv(h2 * h2 * h2 * deriv(u2))
    t2 = gamma * h2 * deriv(h1 * h1 * h1 * deriv(mu1))
    return dealias((t1 + t2) * (-1.0 / 3.0) / (h1 * h2))


def rbar(h1: Field, h2: Field, gamma, v: Field) -> Field:
    """Quadratic dispersive source paired with qbar."""
    _check_depth(h1, "h1")
    _check_depth(h2, "h2")
    denom = h1 + gamma * h2
    u2 = h1 * v / denom
    mu1 = h2 * v / denom
    sq = 0.5 * ((h2 * deriv(u2)) ** 2 - gamma * (h1 * deriv(mu1)) ** 2)
    mixed = (v / denom) * (
        (h1 / h2) * deriv(h2 * h2 * h2 * deriv(u2))
        - gamma * (h2 / h1) * deriv(h1 * h1 * h1 * deriv(mu1))
    ) * (1.0 / 3.0)
    return dealias(sq + mixed)


# -- variable-coefficient elliptic operator ------------------------------------


def ellipticity_margins(zeta: Field, coeffs: ChgnCoeffs, p: Params):
    """Pointwise minima of 1+eps*kappa1*zeta and 1+eps*kappa2*zeta."""
    q1 = 1.0 + p.epsilon * coeffs.kappa1 * zeta.values.real
    q2 = 1.0 + p.epsilon * coeffs.kappa2 * zeta.values.real
    return float(q1.min()), float(q2.min())


def check_ellipticity(zeta: Field, coeffs: ChgnCoeffs, p: Params, h_min=DEFAULT_H_MIN):
    m1, m2 = ellipticity_margins(zeta, coeffs, p)
    if min(m1, m2) < h_min:
        condition = "1+eps*kappa1*zeta" if m1 <= m2 else "1+eps*kappa2*zeta"
        raise EllipticityError(condition, min(m1, m2))


def mft_apply(zeta: Field, coeffs: ChgnCoeffs, p: Params, V: Field,
              check=True) -> Field:
    """Apply q1(eps*zeta) V - mu*nu d_x(q2(eps*zeta) d_x V)."""
    if check:
        check_ellipticity(zeta, coeffs, p)
    q1 = 1.0 + p.epsilon * coeffs.kappa1 * zeta
    q2 = 1.0 + p.epsilon * coeffs.kappa2 * zeta
    return q1 * V - p.mu * coeffs.nu * deriv(q2 * deriv(V))


def mft_solve(zeta: Field, coeffs: ChgnCoeffs, p: Params, F: Field,
              tol=1e-11, max_iter=500, x0: Field | None = None) -> Field:
    """Invert the elliptic operator by CG preconditioned with (1-mu*nu*dxx)^-1.

    The operator is symmetric positive definite under the ellipticity
    condition; the preconditioner is exact at zeta = 0.
    """
    check_ellipticity(zeta, coeffs, p)
    grid = F.grid
    a = p.mu * coeffs.nu
    f_norm = np.linalg.norm(F.values)
    if f_norm == 0.0:
        return Field.zeros(grid)
    q1 = 1.0 + p.epsilon * coeffs.kappa1 * zeta
    q2 = 1.0 + p.epsilon * coeffs.kappa2 * zeta

    def apply_op(x: Field) -> Field:
        return q1 * x - a * deriv(q2 * deriv(x))

    def precond(r: Field) -> Field:
        return helmholtz_inverse(a, r)

    x = precond(F) if x0 is None else x0
    r = F - apply_op(x)
    if np.linalg.norm(r.values) <= tol * f_norm:
        return x
    z = precond(r)
    pdir = z
    rz = np.vdot(r.values, z.values).real
    for it in range(1, max_iter + 1):
        Ap = apply_op(pdir)
        denom = np.vdot(pdir.values, Ap.values).real
        if denom <= 0.0:
            raise IterationLimitError("mft-cg (lost positivity)", it,
                                      np.linalg.norm(r.values) / f_norm, tol)
        alpha = rz / denom
        x = x + alpha * pdir
        r = r - alpha * Ap
        res = np.linalg.norm(r.values)
        if res <= tol * f_norm:
            return x
        z = precond(r)
        rz_new = np.vdot(r.values, z.values).real
        pdir = z + (rz_new / rz) * pdir
        rz = rz_new
    raise IterationLimitError("mft-cg", max_iter,
                              np.linalg.norm(r.values) / f_norm, tol)


# -- interface curvature --------------------------------------------------------


def curvature_term(zeta: Field, p: Params):
    """Surface-tension forcing -((gamma+delta)/Bo) grad(k(a*zeta))/a, a=eps*sqrt(mu).

    k is the full mean-curvature operator; below the small-amplitude threshold
    the analytic limit +((gamma+delta)/Bo) grad(lap zeta) is used instead.
    Returns a Field in 1D, a VecField in 2D.
    """
    grid = zeta.grid
    coef = (p.gamma + p.delta) * p.bond_inv
    if coef == 0.0:
        return Field.zeros(grid) if grid.dim == 1 else VecField.zeros(grid)
    a = p.epsilon * np.sqrt(p.mu)
    if a < SMALL_AMPLITUDE:
        lap = laplacian(zeta)
        if grid.dim == 1:
            return coef * deriv(lap)
        return VecField(tuple(coef * deriv(lap, axis=ax) for ax in range(2)))
    g = grad(a * zeta)
    root = Field(grid, np.sqrt(1.0 + g.dot(g).values), check=False)
    curv = -div(VecField(tuple(c / root for c in g)))
    scale = -coef / a
    if grid.dim == 1:
        return dealias(scale * deriv(curv))
    return dealias(VecField(tuple(scale * deriv(curv, axis=ax) for ax in range(2))))


# -- quadratic source of the fully dispersive systems ---------------------------


def n0_nonlinear(zeta: Field, b: Field | None, u1, u2, p: Params,
                 depths=None) -> Field:
    """Quadratic source term built from the layer-mean velocities.

    In 2D this is (1/2)[(-h2 div u2 + beta grad b . u2)^2 - gamma (h1 div u1)^2];
    in 1D the two extra depth-weighted dispersive contributions are included.
    """
    grid = zeta.grid
    d = depths or depth_fields(zeta, p, b)
    U1 = VecField((u1,)) if isinstance(u1, Field) else u1
    U2 = VecField((u2,)) if isinstance(u2, Field) else u2
    bs = None
    if b is not None and p.beta != 0.0 and np.any(b.values):
        bs = p.beta * b
    term2 = -d.h2 * div(U2)
    if bs is not None:
        term2 = term2 + grad(bs).dot(U2)
    if p.gamma:
        out = 0.5 * (term2 * term2 - p.gamma * (d.h1 * div(U1)) ** 2)
    else:
        out = 0.5 * term2 * term2
    if grid.dim == 1:
        tu2 = t_operator(d.h2, bs, U2[0])
        out = out - U2[0] * tu2
        if p.gamma:
            tu1 = t_operator(d.h1, None, U1[0])
            out = out + p.gamma * U1[0] * tu1
    return dealias(out)
