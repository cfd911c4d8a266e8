"""Synthetic SAR-like wake scenes with known ground truth.

Every wake is a half-line starting at the ship (the image center) and drawn
as an anti-aliased band with an additive contrast: negative for the dark
turbulent streak, positive for the bright narrow-V and Kelvin arms. Angles
are Radon normal angles in degrees, so a wake with ``theta`` shows up in the
Radon domain at ``(r, theta)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import SpecificationError

SLOTS = ("turbulent", "narrow_v_1", "narrow_v_2", "kelvin_1", "kelvin_2")
KELVIN_HALF_ANGLE = 19.5
NARROW_V_MAX = 4.0


@dataclass(frozen=True)
class TurbulentSpec:
    theta: float = 30.0
    offset_r: float = 0.0
    width: float = 2.0
    contrast: float = -0.4
    half: int = 1


@dataclass(frozen=True)
class ArmSpec:
    kind: str = "narrow_v"
    side: int = 1
    delta_theta: float = 3.0
    width: float = 2.0
    contrast: float = 0.5


@dataclass(frozen=True)
class NoiseSpec:
    model: str = "gaussian"
    level: float = 0.1


@dataclass(frozen=True)
class SceneSpec:
    size: int = 128
    background_mean: float = 1.0
    turbulent: TurbulentSpec | None = field(default_factory=TurbulentSpec)
    arms: tuple = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    allow_override: bool = False

    def __post_init__(self):
        if self.size < 8:
            raise SpecificationError(f"scene side must be >= 8, got {self.size}")
        if self.noise.model not in ("gaussian", "gamma_speckle", "none"):
            raise SpecificationError(f"unknown noise model {self.noise.model!r}")
        if self.noise.model == "gamma_speckle" and not self.noise.level > 0:
            raise SpecificationError("speckle needs a positive number of looks")
        if self.noise.model == "gaussian" and self.noise.level < 0:
            raise SpecificationError("gaussian sigma must be >= 0")
        t = self.turbulent
        if t is not None:
            if not t.contrast < 0:
                raise SpecificationError("turbulent contrast must be negative")
            if t.half not in (1, -1):
                raise SpecificationError("turbulent half must be +1 or -1")
        if self.arms and t is None:
            raise SpecificationError("arms are placed relative to a turbulent wake")
        for arm in self.arms:
            if arm.kind not in ("narrow_v", "kelvin"):
                raise SpecificationError(f"unknown arm kind {arm.kind!r}")
            if arm.side not in (1, -1):
                raise SpecificationError("arm side must be +1 or -1")
            if not arm.contrast > 0:
                raise SpecificationError("arm contrast must be positive")
            if self.allow_override:
                continue
            if arm.kind == "narrow_v" and abs(arm.delta_theta) > NARROW_V_MAX:
                raise SpecificationError(
                    f"narrow-V arms must be within {NARROW_V_MAX} deg of the turbulent wake"
                )
            if arm.kind == "kelvin" and not math.isclose(abs(arm.delta_theta), KELVIN_HALF_ANGLE):
                raise SpecificationError("Kelvin arms sit at 19.5 deg unless overridden")
        counts = {"narrow_v": 0, "kelvin": 0}
        for arm in self.arms:
            counts[arm.kind] += 1
        if counts["narrow_v"] > 2 or counts["kelvin"] > 2:
            raise SpecificationError("at most two arms of each kind")


@dataclass(frozen=True)
class WakeLine:
    kind: str
    r: float
    theta: float
    half_sign: int


@dataclass(frozen=True)
class GroundTruth:
    visibility: tuple
    lines: tuple = ()
    name: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "visibility": dict(zip(SLOTS, (int(v) for v in self.visibility))),
            "lines": [vars(l) for l in self.lines],
        }


def _normalize(theta, r, half):
    """Map an unwrapped angle to [0, 180) keeping the same geometric half-line."""
    k = math.floor(theta / 180.0)
    theta -= 180.0 * k
    if k % 2:
        r, half = -r, -half
    return theta, r, half


def _band(size, theta_deg, r, half, width):
    """Anti-aliased coverage of the half-line ``x cos + y sin = r``."""
    c = (size - 1) / 2.0
    th = math.radians(theta_deg)
    ct, st = math.cos(th), math.sin(th)
    coords = np.arange(size, dtype=np.float64) - c
    x = coords[None, :]
    y = -coords[:, None]
    dist = np.abs(x * ct + y * st - r)
    along = half * (-x * st + y * ct)
    across = np.clip(width / 2.0 + 0.5 - dist, 0.0, 1.0)
    start = np.clip(along + 0.5, 0.0, 1.0)
    return across * start


def render_scene(spec: SceneSpec):
    """Render ``spec`` and return ``(image, ground_truth)``."""
    M = spec.size
    img = np.full((M, M), float(spec.background_mean))
    lines = []
    vis = dict.fromkeys(SLOTS, False)
    t = spec.turbulent
    if t is not None:
        theta, r, half = _normalize(t.theta, t.offset_r, t.half)
        cov = _band(M, theta, r, half, t.width)
        if not cov.any():
            raise SpecificationError("turbulent wake lies entirely outside the image")
        img += t.contrast * cov
        lines.append(WakeLine("turbulent", r, theta, half))
        vis["turbulent"] = True
        for arm in spec.arms:
            theta, r, half = _normalize(
                t.theta + arm.side * abs(arm.delta_theta), 0.0, t.half
            )
            cov = _band(M, theta, r, half, arm.width)
            if not cov.any():
                raise SpecificationError(f"{arm.kind} arm lies entirely outside the image")
            img += arm.contrast * cov
            lines.append(WakeLine(arm.kind, r, theta, half))
            slot = f"{arm.kind}_1" if not vis[f"{arm.kind}_1"] else f"{arm.kind}_2"
            vis[slot] = True

    rng = np.random.default_rng(spec.seed)
    noise = spec.noise
    if noise.model == "gaussian" and noise.level > 0:
        img += noise.level * rng.standard_normal((M, M))
    elif noise.model == "gamma_speckle":
        looks = noise.level
        img *= rng.gamma(shape=looks, scale=1.0 / looks, size=(M, M))
    return img, GroundTruth(tuple(vis[s] for s in SLOTS), tuple(lines))


def single_line_spec(sigma=0.1, seed=0, theta=30.0, size=128, contrast=-0.4):
    """A turbulent wake alone, the simplest detection scene."""
    return SceneSpec(
        size=size,
        turbulent=TurbulentSpec(theta=theta, contrast=contrast),
        noise=NoiseSpec("gaussian", sigma),
        seed=seed,
    )


# (turbulent theta, turbulent half, narrow-V side, narrow-V offset, Kelvin side or None)
TABLE1_TEMPLATES = (
    (30.0, 1, 1, 3.0, None),
    (75.0, -1, -1, 3.5, None),
    (120.0, 1, 1, 3.0, -1),
    (55.0, -1, -1, 3.0, 1),
    (150.0, 1, 1, 3.5, None),
    (100.0, -1, -1, 3.0, None),
)


def table1_specs(noise_level=0.15, seed=0, size=128, model="gaussian",
                 turbulent_contrast=-0.4, arm_contrast=0.5, width=2.0):
    """Six scene specs whose visibility rows follow the benchmark table."""
    specs = []
    for idx, (theta, half, nside, ndelta, kside) in enumerate(TABLE1_TEMPLATES):
        arms = [ArmSpec("narrow_v", nside, ndelta, width, arm_contrast)]
        if kside is not None:
            arms.append(ArmSpec("kelvin", kside, KELVIN_HALF_ANGLE, width, arm_contrast))
        scene_seed = int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])
        specs.append(SceneSpec(
            size=size,
            turbulent=TurbulentSpec(theta, 0.0, width, turbulent_contrast, half),
            arms=tuple(arms),
            noise=NoiseSpec(model, noise_level),
            seed=scene_seed,
        ))
    return specs


def table1_suite(noise_level=0.15, seeds=(0,), **kwargs):
    """Render the six benchmark templates for every seed.

    Geometry is fixed per template; the seed only changes the noise, so
    ground truth is identical across seeds.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    out = []
    for seed in seeds:
        for idx, spec in enumerate(table1_specs(noise_level, seed, **kwargs)):
            img, gt = render_scene(spec)
            out.append((img, GroundTruth(gt.visibility, gt.lines, f"row{idx + 1}_seed{seed}")))
    return out
