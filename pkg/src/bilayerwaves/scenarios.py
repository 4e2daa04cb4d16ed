"""Scenario execution: builds models from a config, runs a mode, writes artifacts.

Every produced file is declared in the manifest; the manifest itself is always
written (including on admissibility loss or solver failure, where it carries
the error).  Exit codes: 0 success, 2 admissibility loss mid-run, 3 solver
failure or blow-up (config errors are raised before any run starts and map to
exit code 1 at the service/CLI boundary).
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analysis import (
    epsilon_path,
    full_euler_dispersion,
    matrix_dispersion,
    model_dispersion,
    residual_order,
)
from .config import ScenarioConfig
from .errors import AdmissibilityError, BilayerError, SolverError
from .models import (
    ModelSpec,
    State,
    build_unidirectional_ic,
    decoupled_trajectory,
    gn1d_pack,
    gn1d_unpack,
    initial_role,
    unidirectional_velocity_profile,
)
from .params import cl_coeffs
from .spectral import (
    Field,
    Grid,
    VecField,
    read_field_binary,
    read_field_csv,
    write_field_binary,
    write_field_csv,
)
from .timeloop import StepperConfig, Trajectory, integrate, x_s_norm


# -- construction ---------------------------------------------------------------


def build_grid(cfg: ScenarioConfig) -> Grid:
    if cfg.dim == 1:
        return Grid.line(cfg.n, cfg.length)
    ny = cfg.ny or cfg.n
    ly = cfg.ly or cfg.length
    return Grid.box(cfg.n, ny, (cfg.length, ly))


def build_bottom(cfg: ScenarioConfig, section, grid: Grid):
    if section.bottom == "none" or section.bottom_amplitude == 0.0:
        return None
    x = grid.nodes()[0]
    return Field(grid, section.bottom_amplitude
                 * np.sin(section.bottom_wavenumber * 2 * np.pi * x / grid.lengths[0]))


def build_model_spec(cfg: ScenarioConfig, section=None, grid=None) -> ModelSpec:
    section = section or cfg.model
    grid = grid or build_grid(cfg)
    p = cfg.params()
    cl = None
    if section.id == "CL_SCALAR":
        cl = cl_coeffs(section.cl_variant, p.gamma, p.delta,
                       theta=section.cl_theta, lam=section.cl_lambda)
    return ModelSpec(
        section.id, p, b=build_bottom(cfg, section, grid),
        family=(section.theta1, section.theta2, section.lambda1,
                section.lambda2),
        cl=cl, tension=section.tension, tol=cfg.tol,
    )


def build_profile(cfg: ScenarioConfig, grid: Grid) -> Field:
    x = grid.nodes()[0]
    a, k, w, c = cfg.amplitude, cfg.wavenumber, cfg.width, cfg.center
    if cfg.profile == "sine":
        vals = a * np.sin(2 * np.pi * k * x / grid.lengths[0])
    elif cfg.profile == "gaussian":
        vals = a * np.exp(-((x - c) ** 2) / (2 * w * w))
        vals = vals - vals.mean()
    elif cfg.profile == "solitary-guess":
        vals = a / np.cosh((x - c) / w) ** 2
        vals = vals - vals.mean()
    elif cfg.profile == "file":
        f = (read_field_binary(cfg.ic_file) if cfg.ic_file.endswith(".blw")
             else read_field_csv(cfg.ic_file))
        if f.grid != grid:
            raise BilayerError("initial-condition file grid does not match")
        return f
    else:
        raise BilayerError(f"unknown profile {cfg.profile}")
    if grid.dim == 2:
        vals = np.repeat(vals[:, None], grid.shape[1], axis=1)
    return Field(grid, vals)


def build_initial_state(cfg: ScenarioConfig, spec: ModelSpec,
                        grid: Grid) -> State:
    zeta0 = build_profile(cfg, grid)
    p = spec.params
    if spec.id == "CL_SCALAR":
        return State(zeta0, None, "scalar_u")
    if cfg.velocity == "rest":
        v0 = Field.zeros(grid)
    elif cfg.velocity == "right":
        v0 = (p.gamma + p.delta) * zeta0
    elif cfg.velocity == "ztov":
        v0 = build_unidirectional_ic(zeta0, p).vel
    if spec.id == "SW2D":
        return State(zeta0, VecField((v0, Field.zeros(grid))), "shear_V")
    if spec.id == "GN1D":
        return State(zeta0, gn1d_pack(zeta0, v0, p, spec.b), "gn_momentum_w")
    return State(zeta0, v0, initial_role(spec.id))


def stepper_config(cfg: ScenarioConfig, grid: Grid) -> StepperConfig:
    dt = cfg.dt if cfg.dt is not None else 0.5 * grid.dx[0]
    return StepperConfig(dt=dt, t_end=cfg.t_end,
                         output_stride=cfg.output_stride, tol=cfg.tol)


# -- artifact helpers --------------------------------------------------------------


class _Artifacts:
    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.entries = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name, kind):
        self.entries.append({"name": name, "kind": kind})
        return os.path.join(self.out_dir, name)

    def write_csv(self, name, kind, header, rows):
        with open(self.path(name, kind), "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _monitor_rows(traj: Trajectory):
    keys = [k for k in ("mean_zeta", "mean_vel", "energy", "min_depth",
                        "margin") if k in traj.monitors]
    header = ["t"] + keys
    rows = [
        [t] + [traj.monitors[k][i] for k in keys]
        for i, t in enumerate(traj.times)
    ]
    return header, rows


def _state_to_v_form(state: State, spec: ModelSpec):
    if state.role == "gn_momentum_w":
        v = gn1d_unpack(state.zeta, state.vel, spec.params, spec.b,
                        tol=spec.tol)
        return State(state.zeta, v, "shear_mean_v")
    return state


# -- mode runners --------------------------------------------------------------------


def _run_simulate(cfg, art):
    grid = build_grid(cfg)
    spec = build_model_spec(cfg, grid=grid)
    state0 = build_initial_state(cfg, spec, grid)
    traj = integrate(spec, state0, stepper_config(cfg, grid))
    header, rows = _monitor_rows(traj)
    art.write_csv("monitors.csv", "monitors", header, rows)
    for i, (t, state) in enumerate(zip(traj.times, traj.states)):
        write_field_csv(state.zeta, art.path(f"zeta_{i:06d}.csv", "snapshot"))
    write_field_binary(traj.final.zeta, art.path("zeta_final.blw", "snapshot"))
    if isinstance(traj.final.vel, Field):
        write_field_binary(traj.final.vel, art.path("vel_final.blw", "snapshot"))
    drift = abs(traj.monitors["mean_zeta"][-1] - traj.monitors["mean_zeta"][0])
    return {
        "t_final": traj.times[-1],
        "mean_zeta_drift": drift,
        "min_depth": min(traj.monitors["min_depth"]),
        "margin": min(traj.monitors["margin"]),
        "snapshots": len(traj.states),
    }


def _run_order(cfg, art):
    base = cfg.params()
    eps = cfg.sweep_epsilon if cfg.sweep_epsilon is not None else cfg.epsilon
    fit = residual_order(
        cfg.model.id, cfg.model_b.id, list(cfg.sweep_mu), cfg.epsilon_path,
        base, n=cfg.n, s=None if cfg.s_index == 0 else cfg.s_index,
        tol=min(cfg.tol, 1e-12), epsilon=eps,
    )
    art.write_csv("order.csv", "order", ["mu", "residual"],
                  list(zip(fit.abscissae, fit.residuals)))
    results = {
        "model_a": cfg.model.id,
        "model_b": cfg.model_b.id,
        "epsilon_path": cfg.epsilon_path,
        "slope": fit.slope,
        "fit_residual": fit.fit_residual,
        "conclusive": fit.conclusive,
        "degenerate": fit.degenerate,
    }
    if cfg.target_slope is not None:
        within = (fit.conclusive
                  and abs(fit.slope - cfg.target_slope) <= cfg.slope_tol)
        results["target_slope"] = cfg.target_slope
        results["slope_tol"] = cfg.slope_tol
        results["within_band"] = bool(within)
    return results


def _run_dispersion(cfg, art):
    grid_n = 128
    while grid_n // 2 <= cfg.k_max:
        grid_n *= 2
    spec = build_model_spec(cfg)
    rows = []
    worst = 0.0
    for k in range(1, cfg.k_max + 1):
        c_model = model_dispersion(spec, k)
        c_matrix = matrix_dispersion(spec, k, n=grid_n)
        row = [float(k), c_model, c_matrix]
        worst = max(worst, abs(c_model - c_matrix))
        if cfg.compare_euler:
            row.append(full_euler_dispersion(k, spec.params,
                                             bond_inv=spec.bond_inv))
        rows.append(row)
    header = ["k", "c_model", "c_matrix"] + (
        ["c_full_euler"] if cfg.compare_euler else [])
    art.write_csv("dispersion.csv", "dispersion", header, rows)
    return {"model": cfg.model.id, "k_max": cfg.k_max,
            "max_formula_matrix_gap": worst}


def _run_compare(cfg, art):
    grid = build_grid(cfg)
    p = cfg.params()
    cfg_step = stepper_config(cfg, grid)
    zeta0 = build_profile(cfg, grid)
    if cfg.prep == "ztov":
        # scalar single-wave approximation against the dispersive pair
        spec_b = build_model_spec(
            cfg, cfg.model_b or _default_section("CHGN1D"), grid)
        v0 = unidirectional_velocity_profile(zeta0, p)
        traj_b = integrate(spec_b, State(zeta0, v0, "shear_mean_v"), cfg_step)
        spec_a = build_model_spec(cfg, grid=grid)
        if spec_a.id != "CL_SCALAR":
            raise BilayerError("prep=ztov expects model id CL_SCALAR")
        traj_a = integrate(spec_a, State(zeta0, None, "scalar_u"), cfg_step)
        times, errors = [], []
        for t, sa, sb in zip(traj_a.times, traj_a.states, traj_b.states):
            va = unidirectional_velocity_profile(sa.zeta, p)
            state_a = State(sa.zeta, va, "shear_mean_v")
            sb = _state_to_v_form(sb, spec_b)
            diff = State(state_a.zeta - sb.zeta, state_a.vel - sb.vel,
                         "shear_mean_v")
            times.append(t)
            errors.append(x_s_norm(diff, p, cfg.s_index))
    elif cfg.prep == "split":
        spec_b = build_model_spec(
            cfg, cfg.model_b or _default_section("SYMBOUSS1D"), grid)
        v0 = _initial_velocity(cfg, zeta0, p)
        traj_b = integrate(spec_b, State(zeta0, v0, "shear_mean_v"), cfg_step)
        c = cl_coeffs("decoupled", p.gamma, p.delta,
                      theta=cfg.model.cl_theta, lam=cfg.model.cl_lambda)
        times_a, states_a = decoupled_trajectory(
            zeta0, v0, p, c, cfg.t_end, cfg_step.dt,
            output_stride=cfg.output_stride)
        times, errors = [], []
        for t, sa, sb in zip(times_a, states_a, traj_b.states):
            sb = _state_to_v_form(sb, spec_b)
            diff = State(sa.zeta - sb.zeta, sa.vel - sb.vel, "shear_mean_v")
            times.append(t)
            errors.append(x_s_norm(diff, p, cfg.s_index))
    else:
        spec_a = build_model_spec(cfg, grid=grid)
        spec_b = build_model_spec(cfg, cfg.model_b, grid)
        state_a = build_initial_state(cfg, spec_a, grid)
        state_b = build_initial_state(cfg, spec_b, grid)
        traj_a = integrate(spec_a, state_a, cfg_step)
        traj_b = integrate(spec_b, state_b, cfg_step)
        times, errors = [], []
        for t, sa, sb in zip(traj_a.times, traj_a.states, traj_b.states):
            sa = _state_to_v_form(sa, spec_a)
            sb = _state_to_v_form(sb, spec_b)
            diff = State(sa.zeta - sb.zeta, sa.vel - sb.vel, "shear_mean_v")
            times.append(t)
            errors.append(x_s_norm(diff, p, cfg.s_index))
    art.write_csv("compare.csv", "compare", ["t", "error"],
                  list(zip(times, errors)))
    return {
        "prep": cfg.prep,
        "s_index": cfg.s_index,
        "terminal_error": errors[-1],
        "t_final": times[-1],
    }


def _default_section(model_id):
    from .config import ModelSection

    return ModelSection(id=model_id)


def _initial_velocity(cfg, zeta0, p):
    if cfg.velocity == "right":
        return (p.gamma + p.delta) * zeta0
    if cfg.velocity == "ztov":
        return unidirectional_velocity_profile(zeta0, p)
    return Field.zeros(zeta0.grid)


_RUNNERS = {
    "simulate": _run_simulate,
    "order": _run_order,
    "dispersion": _run_dispersion,
    "compare": _run_compare,
}


def run_scenario(cfg: ScenarioConfig, out_dir=None):
    """Execute the configured mode; returns (exit_code, manifest dict)."""
    out = out_dir or cfg.out
    art = _Artifacts(out)
    manifest = {
        "mode": cfg.mode,
        "package": {"name": "bilayerwaves", "version": __version__},
        "created": datetime.now(timezone.utc).isoformat(),
        "deterministic": True,
        "config": cfg.to_text(),
        "artifacts": art.entries,
        "results": None,
        "error": None,
    }
    exit_code = 0
    try:
        manifest["results"] = _RUNNERS[cfg.mode](cfg, art)
        manifest["status"] = "ok"
    except AdmissibilityError as err:
        exit_code = 2
        manifest["status"] = "admissibility-loss"
        manifest["error"] = {
            "type": type(err).__name__,
            "condition": err.condition,
            "margin": err.margin,
            "time": err.time,
            "message": str(err),
        }
    except SolverError as err:
        exit_code = 3
        manifest["status"] = "solver-failure"
        manifest["error"] = {"type": type(err).__name__, "message": str(err)}
    manifest["exit_code"] = exit_code
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    return exit_code, manifest
