"""Independent oracles: quadrature, enumeration, and brute-force search.

Everything here avoids the package's discrete operators on purpose; the
tests compare the production paths against these.
"""

import numpy as np


def scalar_profile(field, xs):
    return field.evaluate(np.asarray(xs, dtype=float)[:, None])[:, 0, 0, 0, 0]


def harmonic_mean_1d(field, n=1 << 16):
    """<1/a>^-1 over one period by midpoint quadrature."""
    t = (np.arange(n) + 0.5) / n
    return 1.0 / np.mean(1.0 / scalar_profile(field, t))


def exact_corrector_1d(field, xs, n=1 << 16):
    """Mean-zero periodic corrector: chi' = abar/a - 1 by quadrature."""
    t = (np.arange(n) + 0.5) / n
    a = scalar_profile(field, t)
    abar = 1.0 / np.mean(1.0 / a)
    slope = abar / a - 1.0
    cum = np.concatenate([[0.0], np.cumsum(slope) / n])
    grid = np.arange(n + 1) / n
    cum -= np.mean(cum[:-1] + 0.5 * np.diff(cum))
    return np.interp(np.asarray(xs) % 1.0, grid, cum)


def dirichlet_1d_quadrature(field, eps, xs, n=1 << 16):
    """-(a(x/eps) u')' = 1 on (0,1), zero trace, by quadrature."""
    t = (np.arange(n) + 0.5) / n
    inv_a = 1.0 / scalar_profile(field, t / eps)
    c = np.sum(t * inv_a) / np.sum(inv_a)
    integrand = (c - t) * inv_a / n
    cum = np.concatenate([[0.0], np.cumsum(integrand)])
    return np.interp(xs, np.arange(n + 1) / n, cum)


def brute_discrepancy(points):
    """Direct enumeration over all corner-candidate boxes (tiny sets only)."""
    pts = np.atleast_2d(points)
    n, m = pts.shape
    cands = [np.unique(np.concatenate([pts[:, k], [-0.5, 0.5]])) for k in range(m)]
    best = 0.0
    if m == 1:
        xs = cands[0]
        for i, a in enumerate(xs):
            for b in xs[i:]:
                closed = np.sum((pts[:, 0] >= a) & (pts[:, 0] <= b)) / n
                opened = np.sum((pts[:, 0] > a) & (pts[:, 0] < b)) / n
                vol = b - a
                best = max(best, closed - vol, vol - opened)
        return best
    xs, ys = cands
    for i, a in enumerate(xs):
        for b in xs[i:]:
            in_x_c = (pts[:, 0] >= a) & (pts[:, 0] <= b)
            in_x_o = (pts[:, 0] > a) & (pts[:, 0] < b)
            for j, c in enumerate(ys):
                for d in ys[j:]:
                    vol = (b - a) * (d - c)
                    closed = np.sum(in_x_c & (pts[:, 1] >= c) & (pts[:, 1] <= d)) / n
                    opened = np.sum(in_x_o & (pts[:, 1] > c) & (pts[:, 1] < d)) / n
                    best = max(best, closed - vol, vol - opened)
    return best


def brute_covering_radius(points, grid=512):
    """Torus covering radius in the sup norm by dense grid probing."""
    pts = np.atleast_2d(points)
    m = pts.shape[1]
    axes = [np.linspace(-0.5, 0.5, grid, endpoint=False)] * m
    probes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    best = 0.0
    for chunk in np.array_split(probes, max(1, len(probes) // 4096)):
        diff = np.abs(chunk[:, None, :] - pts[None, :, :])
        diff = np.minimum(diff, 1.0 - diff)
        dmin = np.max(diff, axis=2).min(axis=1)
        best = max(best, float(dmin.max()))
    return best
