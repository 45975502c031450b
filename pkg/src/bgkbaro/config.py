"""Experiment configuration: an INI-style key = value document.

Every section and key is optional; omitted keys take the defaults in
:data:`SCHEMA`.  ``auto`` values are resolved from the grid during
validation.  Any key can be overridden from the environment as
``BGKBARO_<SECTION>__<KEY>`` (for example ``BGKBARO_SOLVER__DT=0.001``).

    [regime]       d, gamma
    [grid]         L, Nx, Vmax, Nv
    [solver]       dt, T, reg_eps, relax_eps, scheme, splitting, conservative,
                   picard_tol, picard_max_iter, picard_max_bytes
    [initial]      profile, regularize, reg_eps, q, plus the profile parameters
    [output]       directory, snapshot_every
    [diagnostics]  c1, c2, strict_density
    [verify]       tolerance_scale, states, levels, samples, C0, C1, C2
    [limit]        eps_list
    [run]          seed
"""
from __future__ import annotations

import configparser
import os
from fractions import Fraction
from dataclasses import dataclass, field

from .equilibrium import GammaRegime, admissible, make_regime
from .errors import ParseError, SupportValidationError, ValidationError
from .grid import DistributionField, PhaseGrid
from .initial import PROFILE_PARAMS, Profile
from .regularization import regularize_initial
from .solver import PICARD, SPLITTING, SolverConfig

ENV_PREFIX = "BGKBARO_"
AUTO = "auto"


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int(text):
    val = float(text)
    if val != int(val):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _real(text):
    """Float, also accepting exact fractions such as ``5/3``."""
    return float(Fraction(text.strip()))


def _float_or_auto(text):
    return AUTO if text.strip().lower() == AUTO else _real(text)


def _float_list(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _int_list(text):
    return tuple(_int(x) for x in text.replace(";", ",").split(",") if x.strip())


SCHEMA = {
    "regime": {"d": (_int, 1), "gamma": (_float_or_auto, AUTO)},
    "grid": {"L": (float, 1.0), "Nx": (_int, 64), "Vmax": (float, 2.0), "Nv": (_int, 64)},
    "solver": {
        "dt": (_float_or_auto, AUTO), "T": (float, 0.1), "reg_eps": (_float_or_auto, AUTO),
        "relax_eps": (float, 1.0), "scheme": (str, SPLITTING), "splitting": (str, "lie"),
        "conservative": (_bool, True), "picard_tol": (float, 1e-8),
        "picard_max_iter": (_int, 30), "picard_max_bytes": (float, 2e9),
    },
    "initial": {"profile": (str, "equilibrium"), "regularize": (_bool, False),
                "reg_eps": (_float_or_auto, AUTO), "q": (_float_or_auto, AUTO)},
    "output": {"directory": (str, "out"), "snapshot_every": (_int, 0)},
    "diagnostics": {"c1": (float, 1.0), "c2": (float, 1.0), "strict_density": (_bool, False)},
    "verify": {"tolerance_scale": (float, 1.0), "states": (_int, 200),
               "levels": (_int_list, (64, 128, 256)), "samples": (_int, 10000),
               "C0": (_float_or_auto, AUTO), "C1": (float, 2.0), "C2": (float, 1.0)},
    "limit": {"eps_list": (_float_list, (0.2, 0.1, 0.05))},
    "run": {"seed": (_int, 0)},
}
PROFILE_KEYS = sorted({k for params in PROFILE_PARAMS.values() for k in params})


@dataclass
class ExperimentConfig:
    """Validated configuration with every ``auto`` resolved."""

    d: int = 1
    gamma: float = 3.0
    L: float = 1.0
    Nx: int = 64
    Vmax: float = 2.0
    Nv: int = 64
    solver: SolverConfig = None
    profile: Profile = None
    regularize: bool = False
    init_reg_eps: float = 0.0
    q: float = 3.0
    directory: str = "out"
    snapshot_every: int = 0
    c1: float = 1.0
    c2: float = 1.0
    strict_density: bool = False
    tolerance_scale: float = 1.0
    states: int = 200
    levels: tuple = (64, 128, 256)
    samples: int = 10000
    bounds: tuple = (0.0, 2.0, 1.0)
    eps_list: tuple = (0.2, 0.1, 0.05)
    seed: int = 0
    raw: dict = field(default_factory=dict)

    def regime(self) -> GammaRegime:
        return make_regime(self.d, self.gamma)

    def grid(self) -> PhaseGrid:
        return PhaseGrid(self.d, self.L, self.Nx, self.Vmax, self.Nv)

    def initial_field(self, grid: PhaseGrid = None) -> DistributionField:
        grid = grid or self.grid()
        f0 = DistributionField(grid, self.profile.kinetic(self.regime(), grid))
        if self.regularize:
            f0 = regularize_initial(f0, self.init_reg_eps, self.q)
        return f0

    def with_overrides(self, changes: dict) -> "ExperimentConfig":
        """Re-validate with ``section.key`` overrides, e.g. ``{"solver.relax_eps": 0.1}``."""
        raw = {s: dict(v) for s, v in self.raw.items()}
        for path, value in changes.items():
            section, key = path.split(".", 1)
            raw.setdefault(section, {})[key] = str(value)
        return _validate(raw)


def _read_document(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed config: {exc}", [str(exc)]) from None
    if parser.defaults():
        raise ParseError("keys outside any section", [f"DEFAULT.{k}" for k in parser.defaults()])
    return {s: dict(parser.items(s)) for s in parser.sections()}


def _apply_env(raw: dict, environ) -> dict:
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
            continue
        section, key = name[len(ENV_PREFIX):].split("__", 1)
        section = section.lower()
        known = SCHEMA.get(section, {})
        match = next((k for k in list(known) + PROFILE_KEYS if k.lower() == key.lower()), key)
        raw.setdefault(section, {})[match] = value
    return raw


def _convert(raw: dict, problems: list) -> dict:
    vals = {}
    for section, keys in raw.items():
        if section not in SCHEMA:
            problems.append(f"{section}: unknown section")
            continue
        for key, text in keys.items():
            spec = SCHEMA[section].get(key)
            if spec is None and section == "initial" and key in PROFILE_KEYS:
                spec = (float, None)
            if spec is None:
                problems.append(f"{section}.{key}: unknown key")
                continue
            try:
                vals[(section, key)] = spec[0](text)
            except ValueError as exc:
                problems.append(f"{section}.{key}: {exc}")
    for section, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            vals.setdefault((section, key), default)
    return vals


def _check(cond, problems, path, message):
    if not cond:
        problems.append(f"{path}: {message}")
    return cond


def _validate(raw: dict) -> ExperimentConfig:
    problems = []
    v = _convert(raw, problems)
    get = lambda s, k: v[(s, k)]

    d = get("regime", "d")
    if not _check(d in (1, 2), problems, "regime.d", "must be 1 or 2"):
        d = 1
    gamma = get("regime", "gamma")
    gamma = (d + 2.0) / d if gamma == AUTO else gamma
    allowed = "(1, 3]" if d == 1 else f"(1, {(d + 4.0) / (d + 2.0):g}] U {{{(d + 2.0) / d:g}}}"
    gamma_ok = _check(admissible(d, gamma), problems, "regime.gamma",
                      f"gamma={gamma:g} outside the admissible set {allowed} for d={d}")

    L, Nx, Vmax, Nv = (get("grid", k) for k in ("L", "Nx", "Vmax", "Nv"))
    _check(L > 0, problems, "grid.L", "must be > 0")
    _check(Vmax > 0, problems, "grid.Vmax", "must be > 0")
    for key, n in (("Nx", Nx), ("Nv", Nv)):
        _check(n >= 4 and n % 2 == 0, problems, f"grid.{key}", "must be an even count >= 4")
    dx = L / Nx if L > 0 and Nx > 0 else float("nan")

    dt = get("solver", "dt")
    dt = dx / Vmax if dt == AUTO and Vmax > 0 else dt
    reg_eps = get("solver", "reg_eps")
    reg_eps = 2.0 * dx if reg_eps == AUTO else reg_eps
    if _check(isinstance(dt, float) and dt > 0, problems, "solver.dt", "must be > 0") and Vmax > 0:
        _check(dt <= dx / Vmax * (1 + 1e-12), problems, "solver.dt",
               f"dt={dt:g} exceeds the transport CFL limit dx/Vmax={dx / Vmax:g}")
    _check(get("solver", "T") >= 0, problems, "solver.T", "must be >= 0")
    _check(0 < reg_eps <= 1, problems, "solver.reg_eps", "must lie in (0, 1]")
    _check(reg_eps >= 2 * dx * (1 - 1e-12), problems, "solver.reg_eps",
           f"reg_eps={reg_eps:g} is below two cells (2 dx = {2 * dx:g})")
    _check(get("solver", "relax_eps") > 0, problems, "solver.relax_eps", "must be > 0")
    _check(get("solver", "scheme") in (SPLITTING, PICARD), problems, "solver.scheme",
           f"must be {SPLITTING!r} or {PICARD!r}")
    _check(get("solver", "splitting") in ("lie", "strang"), problems, "solver.splitting",
           "must be 'lie' or 'strang'")
    _check(get("solver", "picard_tol") > 0, problems, "solver.picard_tol", "must be > 0")
    _check(get("solver", "picard_max_iter") >= 1, problems, "solver.picard_max_iter", "must be >= 1")
    _check(get("solver", "picard_max_bytes") > 0, problems, "solver.picard_max_bytes", "must be > 0")

    name = get("initial", "profile")
    params = {k: get("initial", k) for k in PROFILE_KEYS if v.get(("initial", k)) is not None}
    profile = None
    if _check(name in PROFILE_PARAMS, problems, "initial.profile",
              f"unknown profile {name!r}; known: {sorted(PROFILE_PARAMS)}"):
        extra = sorted(set(params) - set(PROFILE_PARAMS[name]))
        for key in extra:
            problems.append(f"initial.{key}: not a parameter of profile {name!r}")
        if not extra:
            profile = Profile(name, params)
    init_eps = get("initial", "reg_eps")
    init_eps = reg_eps if init_eps == AUTO else init_eps
    q = get("initial", "q")
    q = d + 2.0 if q == AUTO else q
    _check(q > d, problems, "initial.q", f"q={q:g} must exceed d={d}")
    if get("initial", "regularize"):
        _check(0 < init_eps <= 1, problems, "initial.reg_eps", "must lie in (0, 1]")
        _check(init_eps >= 2 * dx * (1 - 1e-12), problems, "initial.reg_eps",
               f"reg_eps={init_eps:g} is below two cells (2 dx = {2 * dx:g})")

    support_problem = False
    if profile is not None and gamma_ok:
        regime = make_regime(d, gamma)
        lo, hi = profile.density_range()
        p = profile.params
        _check(lo > 0 if not regime.is_indicator else lo >= 0, problems, "initial.profile",
               f"density range [{lo:g}, {hi:g}] must be positive")
        if name == "riemann":
            _check(min(p["rhoL"], p["rhoR"]) >= 0, problems, "initial.rhoL", "densities must be >= 0")
        if name in ("sine-density", "two-bump"):
            _check(abs(p["amp"]) < 1, problems, "initial.amp", "|amp| must be < 1")
        if name == "two-bump" and regime.is_indicator:
            r = float(regime.radius(0.5 * hi))
            _check(p["sep"] >= r, problems, "initial.sep",
                   f"indicator bumps overlap: sep={p['sep']:g} < support radius {r:g}")
        reach = profile.max_reach(regime)
        if Vmax > 0 and reach > Vmax:
            support_problem = True
            problems.append(f"grid.Vmax: initial supports reach |v| = {reach:.6g} > Vmax = {Vmax:g}")

    c0 = get("verify", "C0")
    if c0 == AUTO:
        c0 = 0.0 if gamma_ok and make_regime(d, gamma).is_indicator else 0.2
    levels = get("verify", "levels")
    _check(len(levels) >= 2 and all(n >= 4 and n % 2 == 0 for n in levels), problems,
           "verify.levels", "need at least two even counts >= 4")
    _check(get("verify", "states") >= 1, problems, "verify.states", "must be >= 1")
    _check(get("verify", "samples") >= 1, problems, "verify.samples", "must be >= 1")
    _check(get("verify", "tolerance_scale") >= 0, problems, "verify.tolerance_scale", "must be >= 0")
    eps_list = get("limit", "eps_list")
    _check(len(eps_list) >= 1 and all(e > 0 for e in eps_list), problems, "limit.eps_list",
           "need positive values")
    _check(get("output", "snapshot_every") >= 0, problems, "output.snapshot_every", "must be >= 0")

    if problems:
        cls = SupportValidationError if support_problem else ValidationError
        raise cls(f"{len(problems)} config violation(s): " + "; ".join(problems), problems)

    solver = SolverConfig(
        dt=dt, T=get("solver", "T"), reg_eps=reg_eps, relax_eps=get("solver", "relax_eps"),
        picard_tol=get("solver", "picard_tol"), picard_max_iter=get("solver", "picard_max_iter"),
        scheme=get("solver", "scheme"), splitting=get("solver", "splitting"),
        conservative=get("solver", "conservative"),
        picard_max_bytes=get("solver", "picard_max_bytes"))
    return ExperimentConfig(
        d=d, gamma=gamma, L=L, Nx=Nx, Vmax=Vmax, Nv=Nv, solver=solver, profile=profile,
        regularize=get("initial", "regularize"), init_reg_eps=init_eps, q=q,
        directory=get("output", "directory"), snapshot_every=get("output", "snapshot_every"),
        c1=get("diagnostics", "c1"), c2=get("diagnostics", "c2"),
        strict_density=get("diagnostics", "strict_density"),
        tolerance_scale=get("verify", "tolerance_scale"), states=get("verify", "states"),
        levels=levels, samples=get("verify", "samples"),
        bounds=(c0, get("verify", "C1"), get("verify", "C2")),
        eps_list=eps_list, seed=get("run", "seed"), raw=raw)


def parse_config(text: str, environ=None) -> ExperimentConfig:
    """Parse and validate; raises :class:`ParseError` or :class:`ValidationError`
    listing every violation as ``section.key: message``."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"config is not UTF-8: {exc}", [str(exc)]) from None
    raw = _read_document(text)
    raw = _apply_env(raw, os.environ if environ is None else environ)
    return _validate(raw)


def load_config(path, environ=None) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return parse_config(fh.read(), environ)


def config_from_dict(values: dict) -> ExperimentConfig:
    """Validate ``{"section.key": value}`` pairs on top of the defaults, ignoring
    the environment."""
    return ExperimentConfig(raw={}).with_overrides(values or {})
