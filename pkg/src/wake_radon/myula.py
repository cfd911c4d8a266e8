"""MYULA chain for the Cauchy-regularised Radon inversion.

One step is

    X <- (1 - delta/omega) X - delta grad f(X) + (delta/omega) prox(X) + sqrt(2 delta) Z

with ``f(X) = ||Y - C X||**2`` and ``prox`` the Cauchy proximal map. The chain
stops once the relative change between iterates drops to ``tol`` or after
``max_iter`` steps.
"""

from dataclasses import dataclass, field, replace
import logging
import math
import time
import warnings

import numpy as np

from . import _backend
from .cauchy import GAMMA_RANGE, multiple_root_fraction
from .errors import ConfigurationError, DimensionError, DivergenceError
from .geometry import (
    RadonGrid, RadonImage, adjoint_values, as_image, default_lipschitz,
    inverse_values, radon_forward,
)

logger = logging.getLogger(__name__)


class MultipleRootsWarning(RuntimeWarning):
    """The Cauchy prox cubic had three real roots for some entries."""


@dataclass(frozen=True)
class SolverConfig:
    """MYULA constants.

    ``delta`` and ``omega`` default to ``delta_over_L / L`` and ``1 / (4 L)``.
    ``L`` defaults to a power-iteration estimate for the grid in use. Call
    :meth:`resolve` to fill them in; a resolved config is checked against
    the stability bound ``delta <= omega / (L omega + 1)``.
    """

    gamma: float = 0.01
    L: float | None = None
    delta: float | None = None
    omega: float | None = None
    delta_over_L: float = 1.0 / 25.0
    max_iter: int = 200
    tol: float = 1e-3
    seed: int = 0
    noise_scale: float = 1.0
    n_theta: int = 180
    standardize: bool = True
    estimator: str = "last"
    mean_window: int = 50

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if not (GAMMA_RANGE[0] <= self.gamma <= GAMMA_RANGE[1]):
            warnings.warn(
                f"gamma={self.gamma} is outside the usual range {GAMMA_RANGE}",
                RuntimeWarning, stacklevel=3,
            )
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.noise_scale not in (0, 1):
            raise ConfigurationError("noise_scale must be 0 (debug) or 1 (MYULA)")
        if not self.delta_over_L > 0:
            raise ConfigurationError("delta_over_L must be positive")
        if self.estimator not in ("last", "mean"):
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        for name in ("L", "delta", "omega"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigurationError(f"{name} must be positive, got {v}")
        if self.is_resolved:
            bound = self.omega / (self.L * self.omega + 1.0)
            # one ulp of slack for delta values computed as exact fractions of 1/L
            if self.delta > bound * (1.0 + 1e-12):
                raise ConfigurationError(
                    f"delta={self.delta:g} exceeds the stability bound {bound:g}"
                )

    @property
    def is_resolved(self):
        return None not in (self.L, self.delta, self.omega)

    def resolve(self, L=None):
        """Return a copy with ``L``, ``delta`` and ``omega`` filled in."""
        L = self.L if self.L is not None else L
        if L is None:
            raise ConfigurationError("a Lipschitz constant is required")
        omega = self.omega if self.omega is not None else 1.0 / (4.0 * L)
        delta = self.delta if self.delta is not None else self.delta_over_L / L
        return replace(self, L=float(L), omega=float(omega), delta=float(delta))

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class SolverDiagnostics:
    iterations_run: int
    epsilon_trace: list = field(default_factory=list)
    converged: bool = False
    final_epsilon: float = math.inf
    wall_time: float = 0.0
    L: float = math.nan
    lipschitz_converged: bool = True
    delta: float = math.nan
    omega: float = math.nan
    standardization: tuple = (0.0, 1.0)
    multiple_root_fraction: float = 0.0

    def as_dict(self, timing=True):
        d = {
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "final_epsilon": self.final_epsilon,
            "L": self.L,
            "lipschitz_converged": self.lipschitz_converged,
            "delta": self.delta,
            "omega": self.omega,
            "standardization_mean": self.standardization[0],
            "standardization_std": self.standardization[1],
            "multiple_root_fraction": self.multiple_root_fraction,
            "epsilon_trace": list(self.epsilon_trace),
        }
        if timing:
            d["wall_time"] = self.wall_time
        return d


def standardize(img):
    """Zero-mean, unit-variance copy of ``img`` plus the (mean, std) used.

    A constant image has no spread to divide by; it is only centred.
    """
    img = as_image(img)
    mean = float(img.mean())
    std = float(img.std())
    out = img - mean
    if std > 0:
        out /= std
    else:
        std = 1.0
    return out, (mean, std)


def _grid_for(X, Y):
    if X.grid.size != Y.shape[0]:
        raise DimensionError(
            f"Radon grid is for {X.grid.size}x{X.grid.size} images, data is {Y.shape}"
        )
    return X.grid


def grad_data_fidelity(X: RadonImage, Y) -> RadonImage:
    """Gradient ``2 C^T (C X - Y)`` of ``f(X) = ||Y - C X||**2``."""
    Y = as_image(Y)
    grid = _grid_for(X, Y)
    return RadonImage(grid, _grad(X.values, Y, grid))


def _grad(x, Y, grid):
    return 2.0 * adjoint_values(inverse_values(x, grid) - Y, grid)


def data_fidelity(X: RadonImage, Y) -> float:
    Y = as_image(Y)
    grid = _grid_for(X, Y)
    r = Y - inverse_values(X.values, grid)
    return float(np.vdot(r, r))


def _step(x, Y, grid, cfg, z):
    ratio = cfg.delta / cfg.omega
    prox = _backend.kernels.cauchy_prox(x, cfg.gamma, cfg.omega, _backend.threads())
    out = (1.0 - ratio) * x - cfg.delta * _grad(x, Y, grid) + ratio * prox
    if z is not None and cfg.noise_scale:
        out += math.sqrt(2.0 * cfg.delta) * z
    return out


def myula_step(X: RadonImage, Y, cfg: SolverConfig, noise_draw=None) -> RadonImage:
    """Apply one MYULA update to ``X``.

    ``noise_draw`` holds i.i.d. standard normals with the grid's shape; pass
    ``None`` (or zeros, or set ``cfg.noise_scale = 0``) for a deterministic step.
    """
    if not cfg.is_resolved:
        raise ConfigurationError("solver config must be resolved (L, delta, omega)")
    Y = as_image(Y)
    grid = _grid_for(X, Y)
    z = None
    if noise_draw is not None:
        z = noise_draw.values if isinstance(noise_draw, RadonImage) else np.asarray(noise_draw)
        if z.shape != grid.shape:
            raise DimensionError(f"noise draw shape {z.shape} != {grid.shape}")
    return RadonImage(grid, _step(X.values, Y, grid, cfg, z))


def relative_change(X, X_prev) -> float:
    """``||X - X_prev|| / ||X_prev||`` (Frobenius).

    When ``X_prev`` is zero the change is 0 if ``X`` is zero too, else ``inf``.
    """
    a = X.values if isinstance(X, RadonImage) else np.asarray(X, dtype=np.float64)
    b = X_prev.values if isinstance(X_prev, RadonImage) else np.asarray(X_prev, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    denom = np.linalg.norm(b)
    num = np.linalg.norm(a - b)
    if denom == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return float(num / denom)


def noise_stream(seed):
    """Counter-based normal generator used for the chain's ``Z`` draws."""
    return np.random.Generator(np.random.Philox(key=seed))


def run_myula(Y, cfg: SolverConfig = SolverConfig(), grid: RadonGrid | None = None):
    """Estimate the Radon image behind ``Y``.

    Returns
    -------
    estimate : RadonImage
        Final iterate (or the trailing-window mean when
        ``cfg.estimator == "mean"``).
    diagnostics : SolverDiagnostics
    """
    t0 = time.perf_counter()
    Y = as_image(Y)
    M = Y.shape[0]
    grid = grid or RadonGrid(M, cfg.n_theta)
    if grid.size != M:
        raise DimensionError(f"grid is for size {grid.size}, data is {M}")
    lip_ok = True
    if cfg.L is None:
        est = default_lipschitz(grid)
        lip_ok = est.converged
        cfg = cfg.resolve(est.value)
    else:
        cfg = cfg.resolve()

    if cfg.standardize:
        Yw, stats = standardize(Y)
    else:
        Yw, stats = Y, (0.0, 1.0)

    x = radon_forward(Yw, grid).values.copy()
    mroot = multiple_root_fraction(x, cfg.gamma, cfg.omega)
    if mroot > 0:
        warnings.warn(
            f"Cauchy prox has three real roots for {100 * mroot:.1f}% of bins "
            f"(gamma={cfg.gamma:g}, omega={cfg.omega:g}); the global minimiser is used",
            MultipleRootsWarning, stacklevel=2,
        )

    rng = noise_stream(cfg.seed) if cfg.noise_scale else None
    trace = []
    window = []
    eps = math.inf
    i = 0
    for i in range(1, cfg.max_iter + 1):
        z = rng.standard_normal(grid.shape) if rng is not None else None
        x_new = _step(x, Yw, grid, cfg, z)
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(i)
        eps = relative_change(x_new, x)
        trace.append(eps)
        x = x_new
        if cfg.estimator == "mean":
            window.append(x)
            if len(window) > cfg.mean_window:
                window.pop(0)
        if eps <= cfg.tol:
            break

    if cfg.estimator == "mean" and window:
        x = np.mean(window, axis=0)

    diag = SolverDiagnostics(
        iterations_run=i,
        epsilon_trace=trace,
        converged=eps <= cfg.tol,
        final_epsilon=eps,
        wall_time=time.perf_counter() - t0,
        L=cfg.L,
        lipschitz_converged=lip_ok,
        delta=cfg.delta,
        omega=cfg.omega,
        standardization=stats,
        multiple_root_fraction=mroot,
    )
    logger.info("MYULA stopped after %d iterations (eps=%.3g)", i, eps)
    return RadonImage(grid, x), diag
