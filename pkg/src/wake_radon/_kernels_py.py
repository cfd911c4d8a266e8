"""Pure numpy implementations of the hot kernels.

These mirror the compiled ``_kernels`` extension one-to-one and are used
when the extension is not built (or when ``WAKE_RADON_BACKEND=python``).
Every routine loops over angles in a fixed order, so results do not depend
on scheduling.
"""

import numpy as np

NAME = "python"


def _bilinear_gather(img, col, row):
    """Bilinear samples of ``img`` at fractional (col, row); zero outside."""
    M = img.shape[0]
    j0 = np.floor(col).astype(np.intp)
    i0 = np.floor(row).astype(np.intp)
    fx = col - j0
    fy = row - i0
    out = np.zeros(col.shape, dtype=np.float64)
    for di, dj, w in (
        (0, 0, (1.0 - fy) * (1.0 - fx)),
        (0, 1, (1.0 - fy) * fx),
        (1, 0, fy * (1.0 - fx)),
        (1, 1, fy * fx),
    ):
        ii = i0 + di
        jj = j0 + dj
        ok = (ii >= 0) & (ii < M) & (jj >= 0) & (jj < M)
        out[ok] += w[ok] * img[ii[ok], jj[ok]]
    return out


def forward_project(img, cos_t, sin_t, r_values, t_half, nthreads=1):
    """Line integrals sampled at unit steps ``t = -t_half .. t_half``."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    M = img.shape[0]
    c = (M - 1) / 2.0
    t = np.arange(-t_half, t_half + 1, dtype=np.float64)
    r = np.asarray(r_values, dtype=np.float64)
    out = np.empty((r.size, len(cos_t)), dtype=np.float64)
    for j in range(len(cos_t)):
        ct, st = cos_t[j], sin_t[j]
        x = r[:, None] * ct - t[None, :] * st
        y = r[:, None] * st + t[None, :] * ct
        out[:, j] = _bilinear_gather(img, x + c, c - y).sum(axis=1)
    return out


def _pixel_offsets(M, ct, st, r0, dr):
    c = (M - 1) / 2.0
    coords = np.arange(M, dtype=np.float64) - c
    # rows run top to bottom, so y = c - row
    s = coords[None, :] * ct - coords[:, None] * st
    u = (s - r0) / dr
    k0 = np.floor(u).astype(np.intp)
    return k0, u - k0


def backproject(q, cos_t, sin_t, r0, dr, M, nthreads=1):
    """Unscaled linear-interpolation backprojection of a (n_r, n_theta) array."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    n_r = q.shape[0]
    out = np.zeros((M, M), dtype=np.float64)
    for j in range(len(cos_t)):
        k0, f = _pixel_offsets(M, cos_t[j], sin_t[j], r0, dr)
        col = q[:, j]
        ok0 = (k0 >= 0) & (k0 < n_r)
        ok1 = (k0 + 1 >= 0) & (k0 + 1 < n_r)
        out[ok0] += (1.0 - f[ok0]) * col[k0[ok0]]
        out[ok1] += f[ok1] * col[k0[ok1] + 1]
    return out


def backproject_adjoint(img, cos_t, sin_t, r0, dr, n_r, nthreads=1):
    """Exact transpose of :func:`backproject`."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    M = img.shape[0]
    out = np.empty((n_r, len(cos_t)), dtype=np.float64)
    for j in range(len(cos_t)):
        k0, f = _pixel_offsets(M, cos_t[j], sin_t[j], r0, dr)
        ok0 = (k0 >= 0) & (k0 < n_r)
        ok1 = (k0 + 1 >= 0) & (k0 + 1 < n_r)
        col = np.bincount(k0[ok0], weights=(1.0 - f[ok0]) * img[ok0], minlength=n_r)
        col += np.bincount(k0[ok1] + 1, weights=f[ok1] * img[ok1], minlength=n_r)
        out[:, j] = col[:n_r]
    return out


def cauchy_prox(x, gamma, omega, nthreads=1):
    """Element-wise Cauchy proximal map (Cardano / trigonometric roots)."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    g2 = gamma * gamma
    b = g2 + 2.0 * omega
    p = b - ax * ax / 3.0
    q = ax * g2 + 2.0 * ax ** 3 / 27.0 - ax / 3.0 * b
    disc = p ** 3 / 27.0 + q * q / 4.0

    # one real root; the larger-magnitude radicand avoids cancellation
    dd = np.sqrt(np.maximum(disc, 0.0))
    a = np.cbrt(q / 2.0 + np.copysign(dd, q))
    safe_a = np.where(a == 0.0, 1.0, a)
    bterm = np.where(a == 0.0, 0.0, -p / (3.0 * safe_a))
    u = ax / 3.0 + a + bterm

    three = (disc <= 0.0) & (p < 0.0)
    if np.any(three):
        pt = p[three]
        qt = -q[three]
        axt = ax[three]
        m = 2.0 * np.sqrt(-pt / 3.0)
        arg = np.clip(3.0 * qt / (2.0 * pt) * np.sqrt(-3.0 / pt), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        roots = np.stack(
            [axt / 3.0 + m * np.cos(phi - 2.0 * np.pi * k / 3.0) for k in range(3)]
        )
        roots = _polish(roots, axt, b, g2)
        obj = np.log(g2 + roots ** 2) + (roots - axt) ** 2 / (2.0 * omega)
        best = np.argmin(obj, axis=0)
        cols = np.arange(roots.shape[1])
        ubest = roots[best, cols]
        hbest = obj[best, cols]
        for k in range(3):
            tie = (np.abs(obj[k] - hbest) <= 1e-14 * (1.0 + np.abs(hbest))) & (
                np.abs(roots[k]) > np.abs(ubest)
            )
            ubest = np.where(tie, roots[k], ubest)
        u[three] = ubest

    u = _polish(u, ax, b, g2)
    u = np.where(ax < 1e-30, 0.0, u)
    return np.copysign(u, x)


def _polish(u, ax, b, g2):
    for _ in range(2):
        f = ((u - ax) * u + b) * u - ax * g2
        df = (3.0 * u - 2.0 * ax) * u + b
        safe = np.where(df == 0.0, 1.0, df)
        un = np.where(df == 0.0, u, u - f / safe)
        fn = ((un - ax) * un + b) * un - ax * g2
        u = np.where(np.abs(fn) < np.abs(f), un, u)
    return u
