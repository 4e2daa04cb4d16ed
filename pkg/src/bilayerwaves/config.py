"""Scenario configuration: line-oriented key = value format with sections.

Sections in square brackets, comma-separated lists, '#' comments.  Parsing
collects every violation (unknown key, type mismatch, constraint violation),
each tagged with its line number; overrides ("section.key=value") are applied
before validation and carry no line number.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .errors import ConfigError
from .params import Params, RegimeBounds

MODES = ("simulate", "order", "dispersion", "compare")
MODEL_IDS = ("SW1D", "SW2D", "GN1D", "CHGN1D", "BOUSS1D", "SYMBOUSS1D",
             "CL_SCALAR", "GN2D")
PROFILES = ("sine", "gaussian", "solitary-guess", "file")
VELOCITY_MODES = ("rest", "right", "ztov")
EPSILON_PATHS = ("fixed", "sqrt_mu", "mu")
CL_VARIANTS = ("unidirectional", "decoupled")
PREP_MODES = ("none", "ztov", "split")

TWO_PI = 2.0 * np.pi


@dataclass
class ModelSection:
    id: str = "SW1D"
    tension: bool = False
    theta1: float = 0.0
    theta2: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0
    cl_variant: str = "unidirectional"
    cl_theta: float = 1.0
    cl_lambda: float = 0.0
    bottom: str = "none"
    bottom_amplitude: float = 0.0
    bottom_wavenumber: int = 1


@dataclass
class ScenarioConfig:
    """Fully validated scenario description."""

    mode: str = "simulate"
    out: str = "out"
    model: ModelSection = field(default_factory=ModelSection)
    model_b: ModelSection | None = None
    gamma: float = 0.0
    epsilon: float = 0.0
    beta: float = 0.0
    mu: float = 1e-2
    delta: float = 1.0
    bond_inv: float | None = None
    bo_inv: float | None = None
    dim: int = 1
    n: int = 256
    ny: int | None = None
    length: float = TWO_PI
    ly: float | None = None
    dt: float | None = None
    t_end: float = 1.0
    output_stride: int = 10
    tol: float = 1e-11
    profile: str = "sine"
    amplitude: float = 0.1
    wavenumber: int = 1
    width: float = 0.5
    center: float = np.pi
    velocity: str = "rest"
    ic_file: str | None = None
    sweep_mu: tuple = ()
    epsilon_path: str = "fixed"
    sweep_epsilon: float | None = None
    target_slope: float | None = None
    slope_tol: float = 0.15
    k_max: int = 40
    compare_euler: bool = True
    prep: str = "none"
    s_index: float = 0.0
    regime: RegimeBounds = field(default_factory=RegimeBounds)

    def params(self) -> Params:
        return Params.make(self.gamma, self.epsilon, self.beta, self.mu,
                           self.delta, self.bond_inv, self.bo_inv)

    def to_text(self) -> str:
        """Canonical serialization; parsing it back yields an equal config."""
        out = []

        def sec(name, pairs):
            rows = [f"{k} = {v}" for k, v in pairs if v is not None]
            if rows:
                out.append(f"[{name}]")
                out.extend(rows)
                out.append("")

        def fmt(v):
            if isinstance(v, bool):
                return "on" if v else "off"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        sec("run", [("mode", self.mode), ("out", self.out)])
        for name, section in (("model", self.model), ("model_b", self.model_b)):
            if section is None:
                continue
            sec(name, [(f.name, fmt(getattr(section, f.name)))
                       for f in dc_fields(section)])
        sec("params", [
            ("gamma", fmt(self.gamma)), ("epsilon", fmt(self.epsilon)),
            ("beta", fmt(self.beta)), ("mu", fmt(self.mu)),
            ("delta", fmt(self.delta)),
            ("bond_inv", None if self.bond_inv is None else fmt(self.bond_inv)),
            ("bo_inv", None if self.bo_inv is None else fmt(self.bo_inv)),
        ])
        sec("grid", [
            ("dim", self.dim), ("n", self.n),
            ("ny", self.ny), ("length", fmt(self.length)),
            ("ly", None if self.ly is None else fmt(self.ly)),
        ])
        sec("stepper", [
            ("dt", None if self.dt is None else fmt(self.dt)),
            ("t_end", fmt(self.t_end)), ("output_stride", self.output_stride),
            ("tol", fmt(self.tol)),
        ])
        sec("ic", [
            ("profile", self.profile), ("amplitude", fmt(self.amplitude)),
            ("wavenumber", self.wavenumber), ("width", fmt(self.width)),
            ("center", fmt(self.center)), ("velocity", self.velocity),
            ("file", self.ic_file),
        ])
        sec("sweep", [
            ("mu", ", ".join(repr(m) for m in self.sweep_mu) or None),
            ("epsilon_path", self.epsilon_path),
            ("epsilon", None if self.sweep_epsilon is None
             else fmt(self.sweep_epsilon)),
            ("target_slope", None if self.target_slope is None
             else fmt(self.target_slope)),
            ("slope_tol", fmt(self.slope_tol)),
        ])
        sec("dispersion", [("k_max", self.k_max),
                           ("compare_euler", fmt(self.compare_euler))])
        sec("compare", [("prep", self.prep), ("s_index", fmt(self.s_index))])
        sec("regime", [
            ("mu_max", fmt(self.regime.mu_max)),
            ("delta_min", fmt(self.regime.delta_min)),
            ("delta_max", fmt(self.regime.delta_max)),
            ("M", fmt(self.regime.M)),
            ("bo_min_inv", fmt(self.regime.bo_min_inv)),
        ])
        return "\n".join(out)


# -- raw tokenizer -------------------------------------------------------------


def tokenize(text):
    """(section, key) -> (raw value, line number); malformed lines collected."""
    entries = {}
    problems = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        if "=" not in line:
            problems.append((lineno, line, "expected 'key = value'"))
            continue
        if section is None:
            problems.append((lineno, line, "key outside of any [section]"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        entries[(section, key.lower())] = (value, lineno)
    return entries, problems


# -- typed readers ---------------------------------------------------------------


class _Reader:
    def __init__(self, entries):
        self.entries = dict(entries)
        self.violations = []
        self.seen = set()

    def add(self, lineno, key, message):
        self.violations.append((lineno, key, message))

    def take(self, section, key, conv, default=None, required=False):
        self.seen.add((section, key))
        item = self.entries.get((section, key))
        if item is None:
            if required:
                self.add(None, f"{section}.{key}", "required key is missing")
            return default
        raw, lineno = item
        try:
            return conv(raw)
        except ValueError as err:
            self.add(lineno, f"{section}.{key}", str(err))
            return default

    def check_unknown(self):
        for (section, key), (_, lineno) in self.entries.items():
            if (section, key) not in self.seen:
                self.add(lineno, f"{section}.{key}", "unknown key")


def _float(raw):
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"expected a number, got {raw!r}")


def _int(raw):
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"expected an integer, got {raw!r}")


def _bool(raw):
    low = raw.strip().lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {raw!r}")


def _enum(options):
    def conv(raw):
        value = raw.strip()
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {raw!r}")
        return value
    return conv


def _float_list(raw):
    items = [part.strip() for part in raw.split(",") if part.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(part) for part in items)


def _string(raw):
    return raw.strip()


# -- validated assembly -------------------------------------------------------------


def _read_model_section(reader, section):
    if not any(sec == section for sec, _ in reader.entries):
        return None
    m = ModelSection()
    m.id = reader.take(section, "id", _enum(MODEL_IDS), m.id)
    m.tension = reader.take(section, "tension", _bool, m.tension)
    for key in ("theta1", "theta2", "lambda1", "lambda2",
                "cl_theta", "cl_lambda", "bottom_amplitude"):
        setattr(m, key, reader.take(section, key, _float, getattr(m, key)))
    m.cl_variant = reader.take(section, "cl_variant", _enum(CL_VARIANTS),
                               m.cl_variant)
    m.bottom = reader.take(section, "bottom", _enum(("none", "sine")), m.bottom)
    m.bottom_wavenumber = reader.take(section, "bottom_wavenumber", _int,
                                      m.bottom_wavenumber)
    return m


def parse_config(text, overrides=()) -> ScenarioConfig:
    """Parse and validate; raises ConfigError listing every violation."""
    entries, problems = tokenize(text)
    reader = _Reader(entries)
    for lineno, key, message in problems:
        reader.add(lineno, key, message)
    for item in overrides:
        if "=" not in item:
            reader.add(None, item, "override must look like section.key=value")
            continue
        dotted, value = (part.strip() for part in item.split("=", 1))
        if "." not in dotted:
            reader.add(None, item, "override key must be section.key")
            continue
        section, key = dotted.rsplit(".", 1)
        reader.entries[(section.lower(), key.lower())] = (value, None)

    cfg = ScenarioConfig()
    cfg.mode = reader.take("run", "mode", _enum(MODES), required=True,
                           default="simulate")
    cfg.out = reader.take("run", "out", _string, cfg.out)

    model = _read_model_section(reader, "model")
    if model is None:
        reader.add(None, "model.id", "a [model] section is required")
        model = ModelSection()
    cfg.model = model
    cfg.model_b = _read_model_section(reader, "model_b")

    cfg.gamma = reader.take("params", "gamma", _float, cfg.gamma)
    cfg.epsilon = reader.take("params", "epsilon", _float, cfg.epsilon)
    cfg.beta = reader.take("params", "beta", _float, cfg.beta)
    cfg.mu = reader.take("params", "mu", _float, cfg.mu)
    cfg.delta = reader.take("params", "delta", _float, cfg.delta)
    cfg.bond_inv = reader.take("params", "bond_inv", _float, None)
    cfg.bo_inv = reader.take("params", "bo_inv", _float, None)

    cfg.dim = reader.take("grid", "dim", _int, cfg.dim)
    cfg.n = reader.take("grid", "n", _int, cfg.n)
    cfg.ny = reader.take("grid", "ny", _int, None)
    cfg.length = reader.take("grid", "length", _float, cfg.length)
    cfg.ly = reader.take("grid", "ly", _float, None)

    cfg.dt = reader.take("stepper", "dt", _float, None)
    cfg.t_end = reader.take("stepper", "t_end", _float, cfg.t_end)
    cfg.output_stride = reader.take("stepper", "output_stride", _int,
                                    cfg.output_stride)
    cfg.tol = reader.take("stepper", "tol", _float, cfg.tol)

    cfg.profile = reader.take("ic", "profile", _enum(PROFILES), cfg.profile)
    cfg.amplitude = reader.take("ic", "amplitude", _float, cfg.amplitude)
    cfg.wavenumber = reader.take("ic", "wavenumber", _int, cfg.wavenumber)
    cfg.width = reader.take("ic", "width", _float, cfg.width)
    cfg.center = reader.take("ic", "center", _float, cfg.center)
    cfg.velocity = reader.take("ic", "velocity", _enum(VELOCITY_MODES),
                               cfg.velocity)
    cfg.ic_file = reader.take("ic", "file", _string, None)

    cfg.sweep_mu = reader.take("sweep", "mu", _float_list, ())
    cfg.epsilon_path = reader.take("sweep", "epsilon_path",
                                   _enum(EPSILON_PATHS), cfg.epsilon_path)
    cfg.sweep_epsilon = reader.take("sweep", "epsilon", _float, None)
    cfg.target_slope = reader.take("sweep", "target_slope", _float, None)
    cfg.slope_tol = reader.take("sweep", "slope_tol", _float, cfg.slope_tol)

    cfg.k_max = reader.take("dispersion", "k_max", _int, cfg.k_max)
    cfg.compare_euler = reader.take("dispersion", "compare_euler", _bool,
                                    cfg.compare_euler)

    cfg.prep = reader.take("compare", "prep", _enum(PREP_MODES), cfg.prep)
    cfg.s_index = reader.take("compare", "s_index", _float, cfg.s_index)

    bounds = {}
    for key in ("mu_max", "delta_min", "delta_max", "m", "bo_min_inv"):
        value = reader.take("regime", key, _float, None)
        if value is not None:
            bounds[{"m": "M"}.get(key, key)] = value
    if bounds:
        try:
            cfg.regime = RegimeBounds(**bounds)
        except ValueError as err:
            reader.add(None, "regime", str(err))

    reader.check_unknown()
    _validate(cfg, reader, entries)
    if reader.violations:
        raise ConfigError(reader.violations)
    return cfg


def _lineno(entries, section, key):
    item = entries.get((section, key))
    return item[1] if item else None


def _validate(cfg, reader, entries):
    def bad(section, key, message):
        reader.add(_lineno(entries, section, key), f"{section}.{key}", message)

    if not 0.0 <= cfg.gamma < 1.0:
        bad("params", "gamma", "gamma must lie in [0,1)")
    if not 0.0 <= cfg.epsilon <= 1.0:
        bad("params", "epsilon", "epsilon must lie in [0,1]")
    if not 0.0 <= cfg.beta <= 1.0:
        bad("params", "beta", "beta must lie in [0,1]")
    if not cfg.mu > 0.0:
        bad("params", "mu", "mu must be positive")
    if not cfg.delta > 0.0:
        bad("params", "delta", "delta must be positive")
    if cfg.bond_inv is not None and cfg.bond_inv < 0.0:
        bad("params", "bond_inv", "surface tension must be >= 0")
    if cfg.bo_inv is not None and cfg.bo_inv < 0.0:
        bad("params", "bo_inv", "surface tension must be >= 0")
    if cfg.bond_inv is not None and cfg.bo_inv is not None and cfg.mu > 0:
        if abs(cfg.bond_inv - cfg.mu * cfg.bo_inv) > 1e-12 * max(1.0, cfg.bond_inv):
            bad("params", "bond_inv",
                f"bond_inv={cfg.bond_inv!r} and bo_inv={cfg.bo_inv!r} are "
                f"inconsistent with Bo^-1 = mu*bo^-1 at mu={cfg.mu!r}")
    if cfg.dim not in (1, 2):
        bad("grid", "dim", "dim must be 1 or 2")
    for name, value in (("n", cfg.n), ("ny", cfg.ny)):
        if value is not None and (value < 8 or (value & (value - 1)) != 0):
            bad("grid", name, "grid size must be a power of two >= 8")
    if cfg.length <= 0:
        bad("grid", "length", "length must be positive")
    if cfg.dt is not None and cfg.dt <= 0:
        bad("stepper", "dt", "dt must be positive")
    if cfg.t_end < 0:
        bad("stepper", "t_end", "t_end must be >= 0")
    if cfg.output_stride < 1:
        bad("stepper", "output_stride", "output_stride must be >= 1")
    if cfg.model.id not in MODEL_IDS:
        bad("model", "id", f"model id must be one of {', '.join(MODEL_IDS)}")
    if cfg.model.theta1 < 0 or cfg.model.theta2 < 0:
        bad("model", "theta1", "family thetas must be >= 0")
    if cfg.profile == "file":
        if not cfg.ic_file:
            bad("ic", "profile", "profile=file needs ic file path")
        elif not os.path.exists(cfg.ic_file):
            bad("ic", "file", f"initial-condition file {cfg.ic_file!r} not found")
    if cfg.mode == "order":
        if not cfg.sweep_mu:
            bad("sweep", "mu", "order mode needs a non-empty mu sweep list")
        if cfg.model_b is None:
            bad("model_b", "id", "order mode needs a [model_b] section")
    if cfg.mode == "compare" and cfg.model_b is None and cfg.prep == "none":
        bad("model_b", "id", "compare mode needs a [model_b] section "
            "(or a prep that implies the pair)")
    if any(m <= 0 for m in cfg.sweep_mu):
        bad("sweep", "mu", "sweep mu values must be positive")
    if cfg.k_max < 1:
        bad("dispersion", "k_max", "k_max must be >= 1")
