"""Experiment configuration and its INI-style text format.

Example::

    [model]
    name = lorenz96

    [experiment]
    dt_obs = 0.11
    ensemble_size = 20
    cycles = 1000

    [hybrid]
    alpha = 0.2
    beta = 0.2

    [localization]
    radius = 4

Missing keys take the per-model defaults in :data:`MODEL_DEFAULTS`.
"""
import configparser
import math
import re
from dataclasses import dataclass, field, replace

from ..hybrid import AdaptiveTheta, FixedAlpha, HybridConfig
from ..localization import LocalizationSpec
from ..models import CoupledLorenz96Wave, Lorenz63, Lorenz96


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


MODEL_PARAMS = {
    "lorenz63": {"sigma": float, "rho": float, "beta": float},
    "lorenz96": {"n_sites": int, "forcing": float},
    "coupled": {"n_sites": int, "delta": float, "epsilon": float, "gamma": float, "c": float,
                "forcing": float},
}

MODEL_DEFAULTS = {
    "lorenz63": {"dt": 0.01, "dt_obs": 0.12, "obs_every": 1, "r": 8.0, "spin_up": 0,
                 "init_variance": 1.0, "cycles": 2000, "localization": None},
    "lorenz96": {"dt": None, "dt_obs": 0.11, "obs_every": 2, "r": 8.0, "spin_up": 100,
                 "init_variance": 0.01, "cycles": 2000, "localization": 4.0},
    "coupled": {"dt": 0.002, "dt_obs": 0.15, "obs_every": 2, "r": 8.0, "spin_up": 1000,
                "init_variance": 0.01, "cycles": 2000, "localization": 4.0},
}

#: Long-run cycle counts used by ``--paper-scale``.
LONG_RUN_CYCLES = {"lorenz63": 100_000, "lorenz96": 50_000, "coupled": 50_000}

L96_STEPS_PER_OBS = 22

EXPERIMENT_KEYS = {
    "dt": float, "dt_obs": float, "obs_every": int, "r": float, "ensemble_size": int,
    "cycles": int, "spin_up": int, "seed": int, "init_variance": float,
}
HYBRID_KEYS = {"alpha": float, "theta": float, "ordering": str, "beta": float}
LOCALIZATION_KEYS = {"radius": float}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one twin experiment.

    ``cycles`` counts scored assimilation cycles; ``spin_up`` extra cycles
    run first with ``alpha = 0`` and are not scored.
    """

    model: str = "lorenz63"
    model_params: tuple = ()
    dt: float = 0.01
    dt_obs: float = 0.12
    obs_every: int = 1
    r: float = 8.0
    ensemble_size: int = 20
    cycles: int = 2000
    spin_up: int = 0
    seed: int = 0
    init_variance: float = 1.0
    hybrid: HybridConfig = field(default_factory=lambda: HybridConfig(FixedAlpha(0.0), "A", 0.2))
    localization: LocalizationSpec | None = None

    def __post_init__(self):
        if self.model not in MODEL_PARAMS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {sorted(MODEL_PARAMS)}")
        object.__setattr__(self, "model_params", tuple(sorted(dict(self.model_params).items())))
        if not self.dt > 0 or not self.dt_obs > 0:
            raise ConfigError("dt and dt_obs must be positive")
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")
        if self.spin_up < 0:
            raise ConfigError("spin_up must be >= 0")
        if self.ensemble_size < 2:
            raise ConfigError("ensemble_size must be >= 2")
        if not self.r >= 0:
            raise ConfigError("observation error variance r must be >= 0")
        if self.obs_every < 1:
            raise ConfigError("obs_every must be >= 1")
        if self.init_variance < 0:
            raise ConfigError("init_variance must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        self.inner_steps  # validates dt_obs / dt

    @property
    def inner_steps(self):
        n = round(self.dt_obs / self.dt)
        if n < 1 or abs(n * self.dt - self.dt_obs) > 1e-9 * self.dt_obs:
            raise ConfigError(f"dt_obs = {self.dt_obs!r} is not an integer multiple of dt = {self.dt!r}")
        return n

    def build_model(self):
        params = dict(self.model_params)
        if self.model == "lorenz63":
            return Lorenz63(**params)
        if self.model == "lorenz96":
            return Lorenz96(**params)
        return CoupledLorenz96Wave(**params)

    def with_updates(self, **changes):
        return replace(self, **changes)


def default_config(model="lorenz63", **overrides):
    d = dict(MODEL_DEFAULTS[model])
    loc = d.pop("localization")
    if d["dt"] is None:
        d["dt"] = d["dt_obs"] / L96_STEPS_PER_OBS
    cfg = ExperimentConfig(model=model, localization=LocalizationSpec(loc) if loc else None, **d)
    return replace(cfg, **overrides) if overrides else cfg


def _line_of(text, section, key=None):
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def _where(text, section, key=None):
    line = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"{loc} (line {line})" if line else loc


def _convert(text, section, key, raw, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{_where(text, section, key)}: cannot parse {raw!r} as {typ.__name__}") from None


def parse_config(text):
    """Parse configuration text into an :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    allowed_sections = {"model", "experiment", "hybrid", "localization"}
    for sec in parser.sections():
        if sec not in allowed_sections:
            raise ConfigError(f"{_where(text, sec)}: unknown section {sec!r}")

    model = parser.get("model", "name", fallback="lorenz63").strip()
    if model not in MODEL_PARAMS:
        raise ConfigError(f"{_where(text, 'model', 'name')}: unknown model {model!r}")

    def section(name, schema, skip=()):
        out = {}
        if not parser.has_section(name):
            return out
        for key, raw in parser.items(name):
            if key in skip:
                continue
            if key not in schema:
                raise ConfigError(f"{_where(text, name, key)}: unknown key {key!r}")
            if name == "localization" and raw.strip().lower() in ("none", "off"):
                out[key] = None
                continue
            out[key] = _convert(text, name, key, raw, schema[key])
        return out

    model_params = section("model", MODEL_PARAMS[model], skip=("name",))
    exp = section("experiment", EXPERIMENT_KEYS)
    hyb = section("hybrid", HYBRID_KEYS)
    loc = section("localization", LOCALIZATION_KEYS)

    base = dict(MODEL_DEFAULTS[model])
    loc_default = base.pop("localization")
    base.update(exp)
    if base["dt"] is None:
        base["dt"] = base["dt_obs"] / L96_STEPS_PER_OBS

    if "alpha" in hyb and "theta" in hyb:
        raise ConfigError(f"{_where(text, 'hybrid')}: give either alpha or theta, not both")
    try:
        mode = AdaptiveTheta(hyb["theta"]) if "theta" in hyb else FixedAlpha(hyb.get("alpha", 0.0))
        hybrid = HybridConfig(mode, hyb.get("ordering", "A").upper(), hyb.get("beta", 0.2))
    except ValueError as exc:
        raise ConfigError(f"{_where(text, 'hybrid')}: {exc}") from None

    if parser.has_section("localization"):
        radius = loc.get("radius", loc_default or 4.0)
    else:
        radius = loc_default
    if radius is not None and not radius > 0:
        raise ConfigError(f"{_where(text, 'localization', 'radius')}: radius must be > 0")
    if radius is not None and model == "lorenz63":
        raise ConfigError(f"{_where(text, 'localization')}: lorenz63 has no spatial grid")

    try:
        cfg = ExperimentConfig(
            model=model,
            model_params=tuple(model_params.items()),
            hybrid=hybrid,
            localization=LocalizationSpec(radius) if radius is not None else None,
            **base,
        )
        cfg.build_model()
    except (ConfigError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def format_config(cfg):
    """Inverse of :func:`parse_config`; every value is written explicitly."""
    lines = ["[model]", f"name = {cfg.model}"]
    lines += [f"{k} = {v!r}" for k, v in cfg.model_params]
    lines += ["", "[experiment]"]
    for key in EXPERIMENT_KEYS:
        lines.append(f"{key} = {getattr(cfg, key)!r}")
    lines += ["", "[hybrid]"]
    mode = cfg.hybrid.mode
    if isinstance(mode, AdaptiveTheta):
        lines.append(f"theta = {mode.theta!r}")
    else:
        lines.append(f"alpha = {mode.alpha!r}")
    lines += [f"ordering = {cfg.hybrid.ordering}", f"beta = {cfg.hybrid.beta!r}"]
    if cfg.localization is not None:
        lines += ["", "[localization]", f"radius = {cfg.localization.radius!r}"]
    elif MODEL_DEFAULTS[cfg.model]["localization"] is not None:
        lines += ["", "[localization]", "radius = none"]
    return "\n".join(lines) + "\n"
