"""Wake candidates from a Radon estimate, and their confirmation.

The turbulent wake is the darkest bin of the (standardised) Radon estimate
inside the band of lines that pass near the ship. Narrow-V and Kelvin arms
are the brightest bins at a fixed angular distance from it, at most one per
side. Each candidate half-line is then confirmed or discarded from the
ratio ``F_I`` of its mean intensity to the image mean.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import (
    ConfigurationError, DetectionError, GeometryError, NormalizationError,
    WakeRadonError,
)
from .geometry import RadonGrid, RadonImage, _trig, as_image
from .myula import SolverConfig, run_myula, standardize
from .simulate import KELVIN_HALF_ANGLE, NARROW_V_MAX, SLOTS

ARM_FI_MARGIN = 0.1
# Noise alone gives the darkest line a slightly negative F_I, so the dark
# streak gets the same 10% margin as the bright arms.
TURBULENT_FI_MARGIN = 0.1


class StageError(WakeRadonError):
    """A pipeline stage failed; ``stage`` names it and ``cause`` holds the error."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
        super().__init__(f"{stage}: {cause}")


@dataclass(frozen=True)
class ShipMaskSpec:
    """Disc around the ship, in centred pixel coordinates (x right, y up)."""

    center: tuple = (0.0, 0.0)
    radius: float | None = None

    def resolved(self, size):
        radius = self.radius if self.radius is not None else size / 20.0
        half = (size - 1) / 2.0
        if not 0 < radius:
            raise ConfigurationError(f"mask radius must be positive, got {radius}")
        if radius >= size / 2.0:
            raise ConfigurationError(f"mask radius {radius} covers the whole image")
        x, y = self.center
        if abs(x) > half or abs(y) > half:
            raise ConfigurationError(f"ship center {self.center} is outside the image")
        return ShipMaskSpec((float(x), float(y)), float(radius))


@dataclass
class WakeCandidate:
    kind: str
    r_bin: int
    theta_bin: int
    r: float
    theta: float
    peak_value: float
    half_sign: int = 1
    F_I: float = math.nan
    confirmed: bool = False
    F_I_halves: tuple = (math.nan, math.nan)

    def as_dict(self):
        return {
            "kind": self.kind,
            "r_bin": self.r_bin,
            "theta_bin": self.theta_bin,
            "r": self.r,
            "theta": self.theta,
            "peak_value": self.peak_value,
            "half_sign": self.half_sign,
            "F_I": self.F_I,
            "F_I_plus": self.F_I_halves[0],
            "F_I_minus": self.F_I_halves[1],
            "confirmed": self.confirmed,
        }


@dataclass
class WakeReport:
    slots: dict = field(default_factory=lambda: dict.fromkeys(SLOTS))
    arms_from_unconfirmed_turbulent: bool = False
    diagnostics: object = None
    rules: str = "physical"

    @property
    def detected(self):
        return {s: bool(c is not None and c.confirmed) for s, c in self.slots.items()}

    @property
    def visibility(self):
        return tuple(self.detected[s] for s in SLOTS)

    def as_dict(self, timing=False):
        return {
            "rules": self.rules,
            "detected": {s: int(v) for s, v in self.detected.items()},
            "arms_from_unconfirmed_turbulent": self.arms_from_unconfirmed_turbulent,
            "slots": {s: (c.as_dict() if c is not None else None) for s, c in self.slots.items()},
            "solver": self.diagnostics.as_dict(timing) if self.diagnostics is not None else None,
        }


@dataclass(frozen=True)
class DetectorConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    mask: ShipMaskSpec = field(default_factory=ShipMaskSpec)
    delta_r: float | None = None
    narrow_max_deg: float = NARROW_V_MAX
    kelvin_deg: float = KELVIN_HALF_ANGLE
    kelvin_tol_deg: float = 2.0
    suppress_theta_deg: float = 1.0
    suppress_r_bins: int = 2
    rules: str = "physical"
    arm_margin: float = ARM_FI_MARGIN
    turbulent_margin: float = TURBULENT_FI_MARGIN

    def __post_init__(self):
        if self.rules not in ("physical", "literal"):
            raise ConfigurationError(f"unknown F_I rule set {self.rules!r}")


def mask_ship(img, spec: ShipMaskSpec = ShipMaskSpec()):
    """Replace the disc around the ship with the mean of the pixels outside it."""
    img = as_image(img)
    M = img.shape[0]
    spec = spec.resolved(M)
    inside = disc_mask(M, spec.center, spec.radius)
    if inside.all():
        raise ConfigurationError("mask covers the whole image")
    out = img.copy()
    out[inside] = img[~inside].mean()
    return out


def disc_mask(size, center, radius):
    c = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - c
    x = coords[None, :] - center[0]
    y = -coords[:, None] - center[1]
    return x * x + y * y <= radius * radius


def search_region(grid: RadonGrid, ship=(0.0, 0.0), delta_r=3.0):
    """Bins inside the band ``|r - (x cos theta + y sin theta)| <= delta_r``."""
    cos_t, sin_t = _trig(grid.n_theta)
    center = ship[0] * cos_t + ship[1] * sin_t
    return np.abs(grid.r_values[:, None] - center[None, :]) <= delta_r


def _values(rest):
    if not isinstance(rest, RadonImage):
        raise TypeError("expected a RadonImage")
    return rest.grid, rest.values


def _make(kind, grid, values, i, j):
    return WakeCandidate(kind, int(i), int(j), grid.r_of(i), grid.theta_of(j), float(values[i, j]))


def detect_turbulent(rest: RadonImage, region) -> WakeCandidate:
    """Darkest bin of ``rest`` within ``region``.

    Ties go to the smallest angle index, then the smallest offset index.
    """
    grid, values = _values(rest)
    region = np.asarray(region, dtype=bool)
    if region.shape != grid.shape:
        raise DetectionError("search region does not match the Radon grid")
    if not region.any():
        raise DetectionError("empty search region")
    masked = np.where(region, values, np.inf)
    # theta-major flattening so argmin's first hit is the smallest theta index
    flat = np.argmin(masked.T)
    j, i = np.unravel_index(flat, masked.T.shape)
    return _make("turbulent", grid, values, i, j)


def angle_offset(grid: RadonGrid, theta_ref):
    """Signed angular distance of every angle bin to ``theta_ref``, in (-90, 90]."""
    d = (grid.theta_deg - theta_ref + 90.0) % 180.0 - 90.0
    return np.where(d == -90.0, 90.0, d)


def detect_arms(rest: RadonImage, region, turb: WakeCandidate, kind,
                narrow_max_deg=NARROW_V_MAX, kelvin_deg=KELVIN_HALF_ANGLE,
                kelvin_tol_deg=2.0, suppress_theta_deg=1.0, suppress_r_bins=2):
    """Up to two bright-line candidates, one on each angular side of ``turb``.

    A candidate must beat the median of ``rest`` over the search region.
    Around each accepted peak a ``+-suppress_theta_deg x +-suppress_r_bins``
    neighbourhood is excluded before the next search.
    """
    grid, values = _values(rest)
    region = np.asarray(region, dtype=bool)
    if not region.any():
        return []
    delta = angle_offset(grid, turb.theta)
    adist = np.abs(delta)
    eps = 1e-9
    if kind == "narrow_v":
        window = (adist > eps) & (adist <= narrow_max_deg + eps)
    elif kind == "kelvin":
        window = np.abs(adist - kelvin_deg) <= kelvin_tol_deg + eps
    else:
        raise ValueError(f"unknown arm kind {kind!r}")
    background = float(np.median(values[region]))
    allowed = region & window[None, :]
    sides = np.sign(delta)

    found = []
    remaining = {1, -1}
    while remaining:
        pool = allowed & np.isin(sides, list(remaining))[None, :]
        if not pool.any():
            break
        masked = np.where(pool, values, -np.inf)
        j, i = np.unravel_index(np.argmax(masked.T), masked.T.shape)
        peak = values[i, j]
        if not peak > background:
            break
        found.append(_make(kind, grid, values, i, j))
        remaining.discard(int(sides[j]))
        # suppression neighbourhood around the accepted peak
        tclose = np.abs(angle_offset(grid, grid.theta_of(j))) <= suppress_theta_deg + eps
        rclose = np.abs(np.arange(grid.n_r) - i) <= suppress_r_bins
        allowed = allowed & ~(rclose[:, None] & tclose[None, :])
    return found


def half_line_pixels(size, r, theta_deg, half, ship=(0.0, 0.0)):
    """Nearest-pixel samples of a half-line, stepping one pixel at a time.

    The half-line starts at the foot of the perpendicular from the ship to
    the line ``x cos + y sin = r`` and heads along ``half * (-sin, cos)``
    until it leaves the image. Returns (rows, cols).
    """
    th = math.radians(theta_deg)
    ct, st = math.cos(th), math.sin(th)
    c = (size - 1) / 2.0
    off = r - (ship[0] * ct + ship[1] * st)
    x0 = ship[0] + off * ct
    y0 = ship[1] + off * st
    dx, dy = -half * st, half * ct
    n_max = int(math.ceil(2 * size * math.sqrt(2.0))) + 2
    t = np.arange(n_max, dtype=np.float64)
    # round half up: on even-sized images pixel centres sit at half-integer
    # coordinates, and round-half-even would skip or repeat pixels there
    cols = np.floor(x0 + t * dx + c + 0.5)
    rows = np.floor(c - (y0 + t * dy) + 0.5)
    inside = (cols >= 0) & (cols < size) & (rows >= 0) & (rows < size)
    if not inside.any():
        return np.empty(0, np.intp), np.empty(0, np.intp)
    # samples stay inside until the first exit; the start may already be outside
    first = int(np.argmax(inside))
    stop = first + int(np.argmin(inside[first:])) if not inside[first:].all() else n_max
    return rows[first:stop].astype(np.intp), cols[first:stop].astype(np.intp)


def compute_FI(img, cand, half, ship=(0.0, 0.0), min_pixels=5):
    """Mean along the candidate half-line over the image mean, minus one."""
    img = as_image(img)
    rows, cols = half_line_pixels(img.shape[0], cand.r, cand.theta, half, ship)
    if rows.size < min_pixels:
        raise GeometryError(
            f"half-line covers {rows.size} pixels, need at least {min_pixels}"
        )
    # offsets from a reference pixel keep a constant image exactly at F_I = 0
    ref = float(np.median(img))
    mean_img = ref + float(np.mean(img - ref))
    if mean_img == 0.0:
        raise NormalizationError("image mean is zero")
    mean_line = ref + float(np.mean(img[rows, cols] - ref))
    return (mean_line - mean_img) / mean_img


def passes_rule(kind, fi, rules="physical", margin=ARM_FI_MARGIN,
                turbulent_margin=TURBULENT_FI_MARGIN):
    """Kind-specific F_I test.

    ``physical``: a dark turbulent streak needs ``F_I <= -turbulent_margin``,
    a bright arm ``F_I >= margin``.
    """
    if not math.isfinite(fi):
        return False
    if rules == "physical":
        return fi <= -turbulent_margin if kind == "turbulent" else fi >= margin
    # rule set as literally printed, kept for auditing
    return fi >= 0.0 if kind == "turbulent" else fi <= margin


def _score(img, cand, ship, rules, margin, turbulent_margin=TURBULENT_FI_MARGIN):
    halves = []
    for half in (1, -1):
        try:
            halves.append(compute_FI(img, cand, half, ship))
        except GeometryError:
            halves.append(math.nan)
    cand.F_I_halves = tuple(halves)
    valid = [(fi, h) for fi, h in zip(halves, (1, -1)) if math.isfinite(fi)]
    if not valid:
        cand.F_I, cand.confirmed = math.nan, False
        return cand
    # keep the half whose F_I leans furthest in the direction its rule asks for
    want_low = (cand.kind == "turbulent") == (rules == "physical")
    fi, h = min(valid) if want_low else max(valid)
    cand.F_I, cand.half_sign = fi, h
    cand.confirmed = passes_rule(cand.kind, fi, rules, margin, turbulent_margin)
    return cand


def confirm_candidates(img, cands, ship=(0.0, 0.0), rules="physical",
                       margin=ARM_FI_MARGIN,
                       turbulent_margin=TURBULENT_FI_MARGIN) -> WakeReport:
    """Score every candidate on both half-lines and fill the five report slots."""
    img = as_image(img)
    report = WakeReport(rules=rules)
    by_kind = {"turbulent": [], "narrow_v": [], "kelvin": []}
    for cand in cands:
        by_kind[cand.kind].append(_score(img, cand, ship, rules, margin, turbulent_margin))
    if by_kind["turbulent"]:
        report.slots["turbulent"] = by_kind["turbulent"][0]
    for kind in ("narrow_v", "kelvin"):
        arms = sorted(by_kind[kind], key=lambda c: (not c.confirmed, -_finite(c.F_I)))
        for k, cand in enumerate(arms[:2]):
            report.slots[f"{kind}_{k + 1}"] = cand
    return report


def _finite(v):
    return v if math.isfinite(v) else -math.inf


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # attribute any failure to its stage
        raise StageError(name, exc) from exc


def detect_wakes(img, cfg: DetectorConfig = DetectorConfig()) -> WakeReport:
    """Full pipeline: mask, standardise, invert, search, confirm."""
    img = _stage("input", as_image, img)
    M = img.shape[0]
    mask = _stage("mask_ship", cfg.mask.resolved, M)
    masked = _stage("mask_ship", mask_ship, img, mask)
    Y, stats = _stage("standardize", standardize, masked)
    solver = replace(cfg.solver, standardize=False)
    est, diag = _stage("run_myula", run_myula, Y, solver)
    diag.standardization = stats
    delta_r = cfg.delta_r if cfg.delta_r is not None else mask.radius + 2.0
    region = _stage("search_region", search_region, est.grid, mask.center, delta_r)
    turb = _stage("detect_turbulent", detect_turbulent, est, region)
    turb = _stage(
        "confirm_candidates", _score, masked, turb, mask.center, cfg.rules,
        cfg.arm_margin, cfg.turbulent_margin,
    )
    arm_kw = dict(
        narrow_max_deg=cfg.narrow_max_deg, kelvin_deg=cfg.kelvin_deg,
        kelvin_tol_deg=cfg.kelvin_tol_deg, suppress_theta_deg=cfg.suppress_theta_deg,
        suppress_r_bins=cfg.suppress_r_bins,
    )
    narrow = _stage("detect_arms", detect_arms, est, region, turb, "narrow_v", **arm_kw)
    kelvin = _stage("detect_arms", detect_arms, est, region, turb, "kelvin", **arm_kw)
    report = _stage(
        "confirm_candidates", confirm_candidates, masked, [turb] + narrow + kelvin,
        mask.center, cfg.rules, cfg.arm_margin, cfg.turbulent_margin,
    )
    report.arms_from_unconfirmed_turbulent = not turb.confirmed
    report.diagnostics = diag
    return report
