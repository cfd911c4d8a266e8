"""Numerical certification suite behind ``wake-radon selftest``.

The prox is checked against an oracle that never touches the cubic: a dense
grid over ``[0, |x|]`` locates the basins and golden-section search refines
them. The operator checks are the adjoint dot-test, a dense-matrix check of
the Lipschitz constant, and a central-difference gradient check.
"""

from dataclasses import dataclass, field
import math
import time

import numpy as np

from . import _backend
from .cauchy import (
    cauchy_prox_literal, cauchy_prox_scalar, cardano_terms, cubic_residual, prox_objective,
)
from .geometry import RadonGrid, adjoint_values, estimate_lipschitz, inverse_values
from .myula import _grad

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


# --- prox oracle ---------------------------------------------------------------

def _objective(u, x, gamma, omega):
    return np.log(gamma * gamma + u * u) - np.log(gamma) + (u - x) ** 2 / (2.0 * omega)


def _golden(lo, hi, x, gamma, omega, iters=120):
    a, b = lo.copy(), hi.copy()
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = _objective(c, x, gamma, omega), _objective(d, x, gamma, omega)
    for _ in range(iters):
        left = fc <= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = b - INV_PHI * (b - a)
        nd = a + INV_PHI * (b - a)
        # reuse the surviving interior point
        new_c = np.where(left, nc, d)
        new_d = np.where(left, c, nd)
        fnew_c = np.where(left, _objective(nc, x, gamma, omega), fd)
        fnew_d = np.where(left, fc, _objective(nd, x, gamma, omega))
        c, d, fc, fd = new_c, new_d, fnew_c, fnew_d
    u = np.where(fc <= fd, c, d)
    return u, _objective(u, x, gamma, omega)


def prox_oracle(x, gamma, omega, n_lin=2001, n_geo=400):
    """Global minimiser of the prox objective by grid search plus golden refinement.

    Vectorised over equal-length arrays ``x``, ``gamma``, ``omega``.
    Returns ``(u, objective)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), x.shape)
    omega = np.broadcast_to(np.asarray(omega, dtype=np.float64), x.shape)
    ax = np.abs(x)[:, None]
    g, w = gamma[:, None], omega[:, None]
    # the minimiser lies between 0 and x; the log term bends sharply near
    # |u| ~ gamma, so add geometric points there
    lin = np.linspace(0.0, 1.0, n_lin)[None, :] * ax
    geo = np.geomspace(1e-12, 1.0, n_geo)[None, :] * ax
    pts = np.sort(np.concatenate([np.zeros_like(ax), lin, geo], axis=1), axis=1)
    vals = _objective(pts, ax, g, w)
    n = pts.shape[1]
    rows = np.arange(len(x))

    interior = np.full(vals.shape, np.inf)
    is_min = (vals[:, 1:-1] <= vals[:, :-2]) & (vals[:, 1:-1] <= vals[:, 2:])
    interior[:, 1:-1] = np.where(is_min, vals[:, 1:-1], np.inf)
    order = np.argsort(interior, axis=1)[:, :2]

    best_u = np.where(vals[:, 0] <= vals[:, -1], pts[:, 0], pts[:, -1])
    best_h = np.minimum(vals[:, 0], vals[:, -1])
    for k in range(2):
        idx = order[:, k]
        ok = np.isfinite(interior[rows, idx])
        lo = pts[rows, np.clip(idx - 1, 0, n - 1)]
        hi = pts[rows, np.clip(idx + 1, 0, n - 1)]
        u, h = _golden(lo, hi, ax[:, 0], gamma, omega)
        better = ok & (h < best_h)
        best_u = np.where(better, u, best_u)
        best_h = np.where(better, h, best_h)
    return np.copysign(best_u, x), best_h


# --- checks ------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    subject: str
    passed: bool
    detail: str
    seconds: float = 0.0


@dataclass
class SelftestReport:
    checks: list = field(default_factory=list)
    audit: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def lines(self):
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name} [{c.subject}] {c.detail}")
        out.append("")
        out.append("cube-root radicand audit (gamma, omega, x, oracle, q/2 form, p/2 form)")
        out.append(f"{'gamma':>8} {'omega':>8} {'x':>8} {'oracle':>14} {'q/2':>14} {'p/2':>14} {'|q/2-oracle|':>13} {'|p/2-oracle|':>13}")
        for r in self.audit:
            out.append(
                f"{r['gamma']:8.3g} {r['omega']:8.3g} {r['x']:8.3g} {r['oracle']:14.6e} "
                f"{r['q2']:14.6e} {r['p2']:14.6e} {r['err_q2']:13.3e} {r['err_p2']:13.3e}"
            )
        return out

    def as_dict(self):
        return {
            "passed": self.passed,
            "checks": [vars(c) | {"seconds": None} for c in self.checks],
            "audit": self.audit,
        }


def random_triples(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-10.0, 10.0, n)
    gamma = rng.uniform(1e-4, 1e-1, n)
    omega = rng.uniform(1e-4, 1.0, n)
    return x, gamma, omega


def check_prox_oracle(prox=cauchy_prox_scalar, n=1000, seed=0, obj_tol=1e-9, res_tol=1e-8):
    x, gamma, omega = random_triples(n, seed)
    _, h_oracle = prox_oracle(x, gamma, omega)
    u = np.array([prox(xi, gi, wi) for xi, gi, wi in zip(x, gamma, omega)])
    h = prox_objective(u, x, gamma, omega)
    obj_err = np.abs(h - h_oracle)
    res = np.abs(cubic_residual(u, x, gamma, omega)) / (1.0 + np.abs(x) ** 3)
    ok = bool(np.all(obj_err <= obj_tol) and np.all(res <= res_tol))
    worst = int(np.argmax(obj_err))
    detail = (
        f"{n} triples: max objective gap {obj_err.max():.2e} (tol {obj_tol:g}), "
        f"max scaled cubic residual {res.max():.2e} (tol {res_tol:g})"
    )
    if not ok:
        detail += f"; worst at x={x[worst]:.6g} gamma={gamma[worst]:.3g} omega={omega[worst]:.3g}"
    return CheckResult("prox_oracle", "cauchy_prox_scalar", ok, detail)


def check_adjoint(sizes=(32, 128), pairs=10, seed=0, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for M in sizes:
        grid = RadonGrid(M)
        for _ in range(pairs):
            xr = rng.standard_normal(grid.shape)
            y = rng.standard_normal((M, M))
            lhs = float(np.vdot(inverse_values(xr, grid), y))
            rhs = float(np.vdot(xr, adjoint_values(y, grid)))
            worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(xr) * np.linalg.norm(y)))
    ok = worst <= tol
    return CheckResult(
        "adjoint_dot", "radon_inverse_adjoint", ok,
        f"sizes {list(sizes)}, {pairs} pairs each: max normalised mismatch {worst:.2e} (tol {tol:g})",
    )


def dense_operator(grid):
    """Materialise C column by column (only sensible for tiny grids)."""
    n = grid.n_r * grid.n_theta
    cols = np.empty((grid.size * grid.size, n))
    e = np.zeros(n)
    for k in range(n):
        e[k] = 1.0
        cols[:, k] = inverse_values(e.reshape(grid.shape), grid).ravel()
        e[k] = 0.0
    return cols


def check_lipschitz(M=8, rel_tol=0.01):
    grid = RadonGrid(M)
    C = dense_operator(grid)
    exact = 2.0 * np.linalg.norm(C, 2) ** 2
    est = estimate_lipschitz(grid)
    rel = abs(est.value - exact) / exact
    ok = rel <= rel_tol
    return CheckResult(
        "lipschitz", "estimate_lipschitz", ok,
        f"M={M}: power iteration {est.value:.6g}, dense 2*sigma_max^2 {exact:.6g}, "
        f"relative gap {rel:.2e} (tol {rel_tol:g})",
    )


def check_gradient(M=32, directions=5, seed=0, step=1e-6, rel_tol=1e-5):
    """Central differences of ``f(X) = ||Y - C X||**2`` against the analytic gradient.

    Directions are random but keep a component along the gradient: for a
    direction nearly orthogonal to it the derivative is close to zero and a
    relative comparison only measures rounding in ``f``.
    """
    rng = np.random.default_rng(seed)
    grid = RadonGrid(M)
    X = rng.standard_normal(grid.shape)
    Y = rng.standard_normal((M, M))

    def f(v):
        r = Y - inverse_values(v, grid)
        return float(np.vdot(r, r))

    g = _grad(X, Y, grid)
    worst = 0.0
    for _ in range(directions):
        z = rng.standard_normal(grid.shape)
        d = g / np.linalg.norm(g) + z / np.linalg.norm(z)
        d /= np.linalg.norm(d)
        fd = (f(X + step * d) - f(X - step * d)) / (2.0 * step)
        an = float(np.vdot(g, d))
        worst = max(worst, abs(fd - an) / abs(an))
    ok = worst <= rel_tol
    return CheckResult(
        "gradient", "grad_data_fidelity", ok,
        f"M={M}, {directions} directions: max relative error {worst:.2e} (tol {rel_tol:g})",
    )


def check_backends(seed=0, tol=1e-10):
    names = _backend.available()
    if len(names) < 2:
        return CheckResult("backends", "_kernels", True, "only the numpy backend is built; skipped")
    rng = np.random.default_rng(seed)
    grid = RadonGrid(32)
    img = rng.standard_normal((32, 32))
    rad = rng.standard_normal(grid.shape)
    worst = 0.0
    active = _backend.kernels
    try:
        out = {}
        for name in names:
            _backend.use(name)
            k = _backend.kernels
            from .geometry import radon_forward

            out[name] = (
                radon_forward(img, grid).values,
                inverse_values(rad, grid),
                adjoint_values(img, grid),
                k.cauchy_prox(rad * 5.0, 0.01, 0.3, 1),
            )
        a, b = out["compiled"], out["python"]
        for u, v in zip(a, b):
            worst = max(worst, float(np.max(np.abs(u - v)) / max(np.max(np.abs(v)), 1e-300)))
    finally:
        _backend.kernels = active
    return CheckResult(
        "backends", "_kernels", worst <= tol,
        f"compiled vs numpy: max relative difference {worst:.2e} (tol {tol:g})",
    )


AUDIT_CASES = tuple(
    (gamma, omega, x)
    for gamma, omega in ((0.01, 1.0), (0.1, 0.5))
    for x in (0.0, 0.1, 0.5, 1.0, 2.0)
)


def radicand_audit(prox=cauchy_prox_scalar, cases=AUDIT_CASES):
    """Evaluate both readings of the second cube-root radicand against the oracle."""
    rows = []
    for gamma, omega, x in cases:
        u_or, _ = prox_oracle([x], gamma, omega)
        _, _, disc = cardano_terms(x, gamma, omega)
        q2 = prox(x, gamma, omega)
        p2 = cauchy_prox_literal(x, gamma, omega)
        rows.append({
            "gamma": gamma, "omega": omega, "x": x, "single_root": bool(disc > 0),
            "oracle": float(u_or[0]), "q2": float(q2), "p2": float(p2),
            "err_q2": abs(float(q2) - float(u_or[0])), "err_p2": abs(float(p2) - float(u_or[0])),
        })
    return rows


def check_radicand(rows, tol=1e-6):
    zero = [r for r in rows if r["x"] == 0.0]
    q2_zero = all(r["q2"] == 0.0 for r in zero)
    p2_breaks = all(abs(r["p2"]) > tol for r in zero)
    q2_match = all(r["err_q2"] <= tol * (1.0 + abs(r["x"])) for r in rows)
    ok = bool(zero) and q2_zero and p2_breaks and q2_match
    p2_at_zero = ", ".join(f"{r['p2']:.4g}" for r in zero)
    return CheckResult(
        "radicand_audit", "cauchy_prox_scalar", ok,
        f"q/2 form gives prox(0)=0 and matches the oracle on {len(rows)} cases: "
        f"{q2_zero and q2_match}; p/2 form gives prox(0) = {p2_at_zero}",
    )


def run_selftest(prox=cauchy_prox_scalar, quick=False):
    """Run every check. ``prox`` lets tests inject a deliberately broken map."""
    report = SelftestReport()
    steps = [
        lambda: check_prox_oracle(prox),
        (lambda: check_adjoint((32,), 3)) if quick else check_adjoint,
        check_lipschitz,
        check_gradient,
        check_backends,
    ]
    for step in steps:
        t0 = time.perf_counter()
        res = step()
        res.seconds = time.perf_counter() - t0
        report.checks.append(res)
    t0 = time.perf_counter()
    report.audit = radicand_audit(prox)
    res = check_radicand(report.audit)
    res.seconds = time.perf_counter() - t0
    report.checks.append(res)
    return report
