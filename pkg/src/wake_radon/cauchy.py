"""Cauchy negative log-prior and its proximal map.

The proximal problem

    prox(x) = argmin_u  log(gamma**2 + u**2) - log(gamma) + (u - x)**2 / (2 * omega)

has stationarity condition ``u**3 - x u**2 + (gamma**2 + 2 omega) u - x gamma**2 = 0``.
With one real root the depressed-cubic (Cardano) formula gives the answer in
closed form. The objective is not convex, so three real roots are possible;
then every root is scored against the objective and the best one wins.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from . import _backend
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

GAMMA_RANGE = (1e-4, 0.1)


@dataclass(frozen=True)
class CauchyParams:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class ProxParams:
    omega: float

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ConfigurationError(f"omega must be positive, got {self.omega}")


def _gamma(p):
    return p.gamma if isinstance(p, CauchyParams) else CauchyParams(float(p)).gamma


def _omega(w):
    return w.omega if isinstance(w, ProxParams) else ProxParams(float(w)).omega


def cauchy_neg_log_prior(x, p):
    """``log(gamma**2 + x**2) - log(gamma)``; works on scalars and arrays."""
    gamma = _gamma(p)
    return np.log(gamma * gamma + np.square(x)) - math.log(gamma)


def prox_objective(u, x, gamma, omega):
    """Objective minimised by the proximal map (constant ``-log gamma`` included)."""
    return (np.log(gamma * gamma + np.square(u)) - np.log(gamma)
            + np.square(u - x) / (2.0 * omega))


def cubic_residual(u, x, gamma, omega):
    return u ** 3 - x * u ** 2 + (gamma ** 2 + 2.0 * omega) * u - x * gamma ** 2


def _cbrt(v):
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def _newton(u, ax, b, g2, steps=3):
    for _ in range(steps):
        f = ((u - ax) * u + b) * u - ax * g2
        df = (3.0 * u - 2.0 * ax) * u + b
        if df == 0.0:
            break
        un = u - f / df
        if abs(((un - ax) * un + b) * un - ax * g2) >= abs(f):
            break
        u = un
    return u


def cardano_terms(x, gamma, omega):
    """Depressed-cubic coefficients ``(p, q, disc)`` for input ``x``.

    Sign convention: the root of the depressed cubic is
    ``cbrt(q/2 + sqrt(disc)) + cbrt(q/2 - sqrt(disc))``.
    """
    g2 = gamma * gamma
    b = g2 + 2.0 * omega
    p = b - x * x / 3.0
    q = x * g2 + 2.0 * x ** 3 / 27.0 - x / 3.0 * b
    disc = p ** 3 / 27.0 + q * q / 4.0
    return p, q, disc


def cauchy_prox_scalar(x, p, w):
    """Global minimiser of the Cauchy proximal objective at ``x``.

    Parameters
    ----------
    x : float
        Input value; must be finite.
    p : CauchyParams or float
        Dispersion ``gamma``.
    w : ProxParams or float
        Smoothing parameter ``omega``.

    Returns
    -------
    float
        ``u*`` with ``0 <= u* <= x`` for ``x >= 0`` and ``prox(-x) == -prox(x)``.
    """
    gamma, omega = _gamma(p), _omega(w)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"prox input must be finite, got {x}")
    ax = abs(x)
    if ax < 1e-30:
        return math.copysign(0.0, x)
    g2 = gamma * gamma
    b = g2 + 2.0 * omega
    pc, qc, disc = cardano_terms(ax, gamma, omega)
    if disc <= 0.0 and pc < 0.0:
        m = 2.0 * math.sqrt(-pc / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * (-qc) / (2.0 * pc) * math.sqrt(-3.0 / pc)))
        phi = math.acos(arg) / 3.0
        roots = [_newton(ax / 3.0 + m * math.cos(phi - 2.0 * math.pi * k / 3.0), ax, b, g2)
                 for k in range(3)]
        objs = [float(prox_objective(r, ax, gamma, omega)) for r in roots]
        hbest = min(objs)
        near = [r for r, h in zip(roots, objs) if h - hbest <= 1e-14 * (1.0 + abs(hbest))]
        u = max(near, key=abs)
    else:
        dd = math.sqrt(max(disc, 0.0))
        a = _cbrt(qc / 2.0 + math.copysign(dd, qc))
        u = ax / 3.0 if a == 0.0 else ax / 3.0 + a - pc / (3.0 * a)
    u = _newton(u, ax, b, g2)
    return math.copysign(u, x)


def cauchy_prox_literal(x, gamma, omega):
    """Cardano evaluation with the second radicand read as ``p/2 - dd``.

    Only used to audit that reading against the oracle; it does not solve
    the stationarity cubic (for instance it is nonzero at ``x = 0``).
    """
    pc, qc, disc = cardano_terms(x, gamma, omega)
    dd = math.sqrt(max(disc, 0.0))
    return x / 3.0 + _cbrt(qc / 2.0 + dd) + _cbrt(pc / 2.0 - dd)


def multiple_root_fraction(values, gamma, omega):
    """Share of entries for which the stationarity cubic has three real roots."""
    ax = np.abs(np.asarray(values, dtype=np.float64))
    pc, qc, disc = cardano_terms(ax, gamma, omega)
    return float(np.mean((disc <= 0.0) & (pc < 0.0)))


def cauchy_prox_field(rimg, p, w):
    """Element-wise prox over a Radon image (or any float array).

    Returns the same type it was given: a ``RadonImage`` in, a ``RadonImage``
    out; a bare array in, an array out.
    """
    from .geometry import RadonImage

    gamma, omega = _gamma(p), _omega(w)
    values = rimg.values if isinstance(rimg, RadonImage) else np.asarray(rimg, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("prox input must be finite")
    out = _backend.kernels.cauchy_prox(values, gamma, omega, _backend.threads())
    if isinstance(rimg, RadonImage):
        return RadonImage(rimg.grid, out)
    return out
