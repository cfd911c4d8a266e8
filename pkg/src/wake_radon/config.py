"""Run configuration: defaults < ``key = value`` file < command-line flags.

Every setting lives in one flat namespace so that a config file, a flag and
the ``[config]`` section of a report all use the same names. Output paths
and verbosity are not part of the serialised config, which keeps reports
identical whether or not an overlay is requested.
"""

from dataclasses import dataclass, field, fields, replace
import math

from .detection import DetectorConfig, ShipMaskSpec
from .errors import ConfigurationError
from .myula import SolverConfig
from .simulate import (
    NoiseSpec, SceneSpec, TurbulentSpec, single_line_spec, table1_specs,
)

DELTA_OVER_L_RANGE = (1.0 / 25.0, 1.0 / 10.0)


def _opt(default, help, serialize=True, choices=None):
    return field(default=default, metadata={"help": help, "serialize": serialize, "choices": choices})


@dataclass(frozen=True)
class RunConfig:
    # solver
    seed: int = _opt(0, "seed of the Langevin noise (and of simulated scenes)")
    gamma: float = _opt(0.01, "Cauchy dispersion")
    delta_over_L: float = _opt(1.0 / 25.0, "step size times L, within [1/25, 1/10]")
    max_iter: int = _opt(200, "MYULA iteration cap")
    tol: float = _opt(1e-3, "stop once the relative change is at most this")
    noise_scale: int = _opt(1, "1 runs MYULA, 0 drops the Langevin noise (debugging)", choices=(0, 1))
    n_theta: int = _opt(180, "number of Radon angles over [0, 180)")
    estimator: str = _opt("last", "report the last iterate or a trailing mean", choices=("last", "mean"))
    # detector
    ship_x: float = _opt(0.0, "ship x in pixels from the image center (right positive)")
    ship_y: float = _opt(0.0, "ship y in pixels from the image center (up positive)")
    mask_radius: float = _opt(0.0, "ship mask radius in pixels; 0 means side/20")
    delta_r: float = _opt(0.0, "search band half-width in r; 0 means mask radius + 2")
    kelvin_tol: float = _opt(2.0, "Kelvin window half-width around 19.5 deg")
    rules: str = _opt("physical", "F_I confirmation rule set", choices=("physical", "literal"))
    arm_margin: float = _opt(0.1, "arms need F_I >= this")
    turbulent_margin: float = _opt(0.1, "turbulent wake needs F_I <= -this")
    # simulator
    scene: str = _opt("table1", "scene suite for simulate", choices=("table1", "single", "blank"))
    size: int = _opt(128, "scene side in pixels")
    background: float = _opt(1.0, "scene background level")
    noise_model: str = _opt("gaussian", "scene noise", choices=("gaussian", "gamma_speckle", "none"))
    noise_level: float = _opt(0.15, "gaussian sigma, or number of looks for speckle")
    turbulent_contrast: float = _opt(-0.4, "additive contrast of the turbulent wake")
    arm_contrast: float = _opt(0.5, "additive contrast of narrow-V and Kelvin arms")
    wake_width: float = _opt(2.0, "wake band width in pixels")
    theta: float = _opt(30.0, "turbulent angle of the single-line scene, degrees")
    seeds: str = _opt("0,1,2,3,4", "comma-separated scene seeds for benchmark")
    # output, not serialised
    output: str = _opt("", "report / manifest path or output directory", serialize=False)
    overlay: str = _opt("", "write an annotated PNG here (detect)", serialize=False)
    format: str = _opt("text", "report format", serialize=False, choices=("text", "json"))
    verbose: int = _opt(0, "log verbosity", serialize=False)

    def __post_init__(self):
        for f in fields(self):
            choices = f.metadata.get("choices")
            if choices and getattr(self, f.name) not in choices:
                raise ConfigurationError(
                    f"{f.name} must be one of {', '.join(map(str, choices))}, "
                    f"got {getattr(self, f.name)!r}"
                )
        lo, hi = DELTA_OVER_L_RANGE
        if not lo * (1 - 1e-9) <= self.delta_over_L <= hi * (1 + 1e-9):
            raise ConfigurationError(
                f"delta_over_L must lie in [1/25, 1/10], got {self.delta_over_L}"
            )
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigurationError("tol must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        self.seed_list()

    def seed_list(self):
        try:
            out = tuple(int(s) for s in self.seeds.split(",") if s.strip())
        except ValueError as exc:
            raise ConfigurationError(f"seeds must be comma-separated integers, got {self.seeds!r}") from exc
        if not out:
            raise ConfigurationError("seeds must name at least one seed")
        return out

    # --- merging -----------------------------------------------------------

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    def updated(self, mapping):
        """Copy with ``mapping`` applied; string values are converted by field type."""
        types = {f.name: f.type for f in fields(self)}
        changes = {}
        for key, value in mapping.items():
            name = key.replace("-", "_")
            if name not in types:
                raise ConfigurationError(f"unknown configuration key {key!r}")
            changes[name] = _convert(name, types[name], value)
        return replace(self, **changes)

    def serialized(self):
        """Ordered (key, value) pairs embedded in reports."""
        return [(f.name, getattr(self, f.name)) for f in fields(self) if f.metadata["serialize"]]

    def as_dict(self):
        return dict(self.serialized())

    def to_text(self):
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.serialized())

    # --- views for the library --------------------------------------------

    def solver_config(self):
        return SolverConfig(
            gamma=self.gamma, delta_over_L=self.delta_over_L, max_iter=self.max_iter,
            tol=self.tol, seed=self.seed, noise_scale=self.noise_scale,
            n_theta=self.n_theta, estimator=self.estimator,
        )

    def detector_config(self):
        mask = ShipMaskSpec((self.ship_x, self.ship_y), self.mask_radius or None)
        return DetectorConfig(
            solver=self.solver_config(), mask=mask, delta_r=self.delta_r or None,
            kelvin_tol_deg=self.kelvin_tol, rules=self.rules,
            arm_margin=self.arm_margin, turbulent_margin=self.turbulent_margin,
        )

    def scene_specs(self, seed=None):
        """Scene specs for ``simulate`` under the configured suite."""
        seed = self.seed if seed is None else seed
        noise = NoiseSpec(self.noise_model, self.noise_level)
        if self.scene == "table1":
            return table1_specs(
                self.noise_level, seed, size=self.size, model=self.noise_model,
                turbulent_contrast=self.turbulent_contrast,
                arm_contrast=self.arm_contrast, width=self.wake_width,
            )
        if self.scene == "single":
            spec = single_line_spec(self.noise_level, seed, self.theta, self.size, self.turbulent_contrast)
            return [replace(spec, noise=noise, background_mean=self.background,
                            turbulent=TurbulentSpec(self.theta, 0.0, self.wake_width, self.turbulent_contrast))]
        return [SceneSpec(size=self.size, background_mean=self.background, turbulent=None,
                          noise=noise, seed=seed)]


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def _convert(name, typ, value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if typ in (int, "int"):
            return int(text)
        if typ in (float, "float"):
            return float(text)
    except ValueError as exc:
        raise ConfigurationError(f"{name}: cannot parse {text!r}") from exc
    return text


def parse_config_text(text, source="<config>"):
    """``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def load_config(path=None, overrides=None, base=None):
    """Defaults, then the file at ``path``, then ``overrides``."""
    cfg = base or RunConfig()
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            from .errors import ImageIOError

            raise ImageIOError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        cfg = cfg.updated(parse_config_text(text, str(path)))
    if overrides:
        cfg = cfg.updated({k: v for k, v in overrides.items() if v is not None})
    return cfg
