"""Discrete Radon transform, filtered backprojection and its adjoint.

Coordinates put the origin at the geometric center of an ``M x M`` image,
with ``x`` growing to the right (columns) and ``y`` growing upwards
(decreasing row index). A Radon bin ``(r, theta)`` is the line
``x cos(theta) + y sin(theta) = r`` with ``theta`` in ``[0, 180)`` degrees.

``radon_inverse`` plays the role of the observation operator ``C`` in
``Y = C X + N``; ``radon_inverse_adjoint`` is its exact transpose, which
is what the data-fidelity gradient needs.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
from typing import NamedTuple

import numpy as np

from . import _backend
from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class RadonGrid:
    """Bin layout of a Radon image for an ``size x size`` input.

    Angles cover ``[0, 180)`` degrees uniformly starting at 0. Offsets cover
    ``[-r_max, r_max]`` uniformly with ``r_max = ceil(size * sqrt(2) / 2)``.
    """

    size: int
    n_theta: int = 180
    n_r: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ConfigurationError(f"image side must be >= 2, got {self.size}")
        if self.n_r == 0:
            object.__setattr__(self, "n_r", 2 * self.r_max + 1)
        if self.n_theta < 2 or self.n_r < 2:
            raise ConfigurationError(
                f"degenerate grid: n_theta={self.n_theta}, n_r={self.n_r}"
            )

    @property
    def r_max(self) -> int:
        return math.ceil(self.size * math.sqrt(2.0) / 2.0)

    @property
    def dr(self) -> float:
        return 2.0 * self.r_max / (self.n_r - 1)

    @property
    def dtheta_deg(self) -> float:
        return 180.0 / self.n_theta

    @property
    def theta_deg(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta_deg

    @property
    def theta_rad(self) -> np.ndarray:
        return np.deg2rad(self.theta_deg)

    @property
    def r_values(self) -> np.ndarray:
        r = -self.r_max + np.arange(self.n_r) * self.dr
        # exact symmetry about zero
        return 0.5 * (r - r[::-1])

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    def theta_of(self, j) -> float:
        return float(j) * self.dtheta_deg

    def r_of(self, i) -> float:
        return float(self.r_values[i])

    def r_index(self, r) -> int:
        """Nearest offset bin to ``r``."""
        return int(np.clip(round((r + self.r_max) / self.dr), 0, self.n_r - 1))

    def theta_index(self, theta_deg) -> int:
        """Nearest angle bin to ``theta_deg`` (taken modulo 180)."""
        return int(round((theta_deg % 180.0) / self.dtheta_deg)) % self.n_theta


@dataclass(frozen=True)
class RadonImage:
    grid: RadonGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.grid.shape:
            raise DimensionError(
                f"Radon values have shape {values.shape}, grid expects {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Radon image contains non-finite values")
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_image(img) -> np.ndarray:
    """Validate a square, finite, 2-D image and return it as float64."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"image must be square 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite values")
    return a


def _check_image_grid(img, grid):
    if img.shape != (grid.size, grid.size):
        raise DimensionError(
            f"image shape {img.shape} does not match grid size {grid.size}"
        )


@lru_cache(maxsize=32)
def _trig(n_theta):
    th = np.deg2rad(np.arange(n_theta) * (180.0 / n_theta))
    cos_t = np.cos(th)
    sin_t = np.sin(th)
    # snap the axis-aligned angles so 0/90 degree lines sample exactly
    for arr in (cos_t, sin_t):
        arr[np.abs(arr) < 1e-15] = 0.0
    cos_t.flags.writeable = False
    sin_t.flags.writeable = False
    return cos_t, sin_t


def radon_forward(img, grid: RadonGrid) -> RadonImage:
    """Line integrals of ``img`` over every ``(r, theta)`` bin of ``grid``.

    Each line is sampled at unit steps along its direction with bilinear
    interpolation; samples falling outside the image contribute zero.
    """
    img = as_image(img)
    _check_image_grid(img, grid)
    cos_t, sin_t = _trig(grid.n_theta)
    values = _backend.kernels.forward_project(
        img, cos_t, sin_t, grid.r_values, grid.r_max, _backend.threads()
    )
    return RadonImage(grid, values)


@lru_cache(maxsize=32)
def ramp_filter(n_r, dr=1.0, rolloff=0.5):
    """Half-spectrum (rfft layout) of the windowed ramp filter.

    Built from the band-limited spatial ramp kernel so the DC gain is not
    forced to zero, then tapered with a raised cosine over the top
    ``rolloff`` fraction of the band, reaching zero at Nyquist.
    """
    n_pad = max(64, 1 << int(math.ceil(math.log2(2 * n_r))))
    n = np.concatenate(
        [np.arange(1, n_pad // 2 + 1, 2), np.arange(n_pad // 2 - 1, 0, -2)]
    )
    h = np.zeros(n_pad)
    h[0] = 0.25
    h[1::2] = -1.0 / (np.pi * n) ** 2
    ramp = np.real(np.fft.rfft(h))
    nu = np.fft.rfftfreq(n_pad)
    window = np.ones_like(nu)
    if rolloff > 0:
        start = 0.5 * (1.0 - rolloff)
        tail = nu > start
        window[tail] = 0.5 * (1.0 + np.cos(np.pi * (nu[tail] - start) / (0.5 - start)))
    filt = ramp * window / dr
    filt.flags.writeable = False
    return n_pad, filt


def _apply_ramp(values, grid):
    n_pad, filt = ramp_filter(grid.n_r, grid.dr)
    spec = np.fft.rfft(values, n=n_pad, axis=0)
    spec *= filt[:, None]
    return np.fft.irfft(spec, n=n_pad, axis=0)[: grid.n_r]


def _as_radon_values(rimg, grid=None):
    if isinstance(rimg, RadonImage):
        if grid is not None and rimg.grid != grid:
            raise DimensionError("Radon image grid does not match")
        return rimg.grid, rimg.values
    if grid is None:
        raise DimensionError("a bare array needs an explicit grid")
    values = np.asarray(rimg, dtype=np.float64)
    if values.shape != grid.shape:
        raise DimensionError(
            f"Radon values have shape {values.shape}, grid expects {grid.shape}"
        )
    return grid, values


def inverse_values(values, grid):
    """Array-level ``C``: filtered backprojection of raw Radon values."""
    q = _apply_ramp(values, grid)
    cos_t, sin_t = _trig(grid.n_theta)
    img = _backend.kernels.backproject(
        np.ascontiguousarray(q), cos_t, sin_t, -float(grid.r_max), grid.dr,
        grid.size, _backend.threads(),
    )
    img *= np.pi / grid.n_theta
    return img


def adjoint_values(img, grid):
    """Array-level ``C^T``: transposed backprojection followed by the ramp."""
    cos_t, sin_t = _trig(grid.n_theta)
    bt = _backend.kernels.backproject_adjoint(
        np.ascontiguousarray(img, dtype=np.float64), cos_t, sin_t,
        -float(grid.r_max), grid.dr, grid.n_r, _backend.threads(),
    )
    out = _apply_ramp(bt, grid)
    out *= np.pi / grid.n_theta
    return out


def radon_inverse(rimg: RadonImage) -> np.ndarray:
    """Filtered backprojection ``C = R^-1`` (linear in ``rimg``)."""
    grid, values = _as_radon_values(rimg)
    return inverse_values(values, grid)


def radon_inverse_adjoint(img, grid: RadonGrid) -> RadonImage:
    """Exact adjoint of :func:`radon_inverse`: ``<C x, y> = <x, C^T y>``."""
    img = as_image(img)
    _check_image_grid(img, grid)
    return RadonImage(grid, adjoint_values(img, grid))


class LipschitzEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def estimate_lipschitz(grid: RadonGrid, iters=200, tol=1e-6, seed=0,
                       forward=None, adjoint=None) -> LipschitzEstimate:
    """Lipschitz constant ``2 * sigma_max(C)**2`` of the data-fidelity gradient.

    Power iteration on ``C^T C`` from a seeded Gaussian start; stops once
    the Rayleigh quotient changes by less than ``tol`` (relative). The
    operator pair can be overridden for testing.
    """
    if iters < 10:
        raise ConfigurationError(f"power iteration needs iters >= 10, got {iters}")
    forward = forward or (lambda v: inverse_values(v, grid))
    adjoint = adjoint or (lambda y: adjoint_values(y, grid))
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(grid.shape)
    x /= np.linalg.norm(x)
    lam_old = None
    lam = 0.0
    for k in range(1, iters + 1):
        y = adjoint(forward(x))
        lam = float(np.vdot(x, y))
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return LipschitzEstimate(0.0, True, k)
        x = y / norm
        if lam_old is not None and abs(lam - lam_old) < tol * abs(lam):
            return LipschitzEstimate(2.0 * lam, True, k)
        lam_old = lam
    return LipschitzEstimate(2.0 * lam, False, iters)


@lru_cache(maxsize=16)
def default_lipschitz(grid: RadonGrid) -> LipschitzEstimate:
    """Cached estimate with the default settings (seed 0, tol 1e-6, 200 iterations)."""
    return estimate_lipschitz(grid)
