"""Screened correctors, effective coefficients, and the flux corrector.

For each coordinate direction j and component beta the corrector solves

    -div(A(y) grad u) + T^{-2} u = div(A(y) grad P_j^beta),

with P_j^beta(y) = y_j e^beta, on either a single period cell with
periodic boundary conditions (exact for periodic coefficients and cheap)
or on a truncated box of side (2 buffer + 1) T with zero Dirichlet data.
The screening term makes the whole-space problem well posed with
exponentially localized response, so window statistics on the central
cube are insensitive to the outer boundary once the buffer is a few
screening lengths.

Window averages of the corrector fluxes give the approximate effective
tensor  ahat_T[i,j,a,b] = <a_ij^{ab}> + <a_ik^{ag} d_k chi_{T,j}^{gb}>,
whose distance to the true effective tensor is controlled by the dyadic
gradient differences grad chi_T - grad chi_2T (the T-limit gradient is
never materialized; every estimate that needs it telescopes over dyadic
pairs instead).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import ConstantField, ShiftedField, certify_ellipticity, identity_field
from .grids import (Box, BoxGrid, DIRICHLET, GridFunction, PERIODIC,
                    centered_gradient, estimate_mean, face_differences,
                    holder_seminorm, norms)
from .metrics import DecayReport
from .operators import assemble, divergence_rhs, solve


@dataclass
class CorrectorSet:
    """Solutions chi[j][beta] plus grid, window and solver provenance."""

    field: object
    T: float
    grid: BoxGrid
    mode: str                      # "periodic" or "truncated"
    buffer: float
    window: Box
    chi: list                      # chi[j][beta] -> GridFunction (m components)
    kappa: float
    tol: float
    iterations: list = dc_field(default_factory=list)

    @property
    def d(self):
        return self.grid.d

    @property
    def m(self):
        return self.field.m

    def component(self, j, beta):
        return self.chi[j][beta]

    def sup_norm(self, window=None):
        w = self.window if window is None else window
        if self.mode == "periodic":
            w = None
        return max(norms(self.chi[j][b], "Linf", window=w)
                   for j in range(self.d) for b in range(self.m))

    def interior_region(self, margin_cells=2):
        """Largest centered box clear of the Dirichlet boundary skin."""
        if self.mode == "periodic":
            return None
        g = self.grid
        lo = g.box.lo + margin_cells * g.h
        hi = g.box.hi - margin_cells * g.h
        return Box(lo, hi)

    def provenance(self):
        import hashlib
        import json

        from .fields import field_to_config
        try:
            cfg = json.dumps(field_to_config(self.field), sort_keys=True)
            field_hash = hashlib.sha256(cfg.encode()).hexdigest()
        except ValueError:
            field_hash = None      # wrapped fields have no standalone config
        return {
            "T": self.T, "mode": self.mode, "buffer": self.buffer,
            "h": self.grid.h.tolist(), "cells": self.grid.cells.tolist(),
            "kappa": self.kappa, "tol": self.tol,
            "iterations": self.iterations,
            "field_config_sha256": field_hash,
            "window": [self.window.lo.tolist(), self.window.hi.tolist()],
        }


@dataclass
class HomogenizedMatrix:
    """Constant effective tensor with its sampled ellipticity check."""

    tensor: np.ndarray
    source: tuple                   # ("approximate", T) or ("reference",)
    sym_eig_min: float = None
    sym_eig_max: float = None
    ellipticity_ok: bool = None

    @property
    def d(self):
        return self.tensor.shape[0]

    @property
    def m(self):
        return self.tensor.shape[2]

    def as_field(self):
        f = ConstantField(self.tensor)
        certify_ellipticity(f, sample_count=8)
        return f


@dataclass
class FluxTensor:
    """Pointwise oscillatory flux  ahat - A(y) - A(y) grad chi(y)  on a region."""

    values: np.ndarray              # (d, d, m, m, *region_nodes)
    region: Box
    grid: BoxGrid                   # grid the region slices live on
    slices: tuple
    mean: np.ndarray                # (d, d, m, m)
    T: float
    mode: str


def _corrector_rhs(field, grid, j, beta, m):
    faces = []
    for ax in range(grid.d):
        pts, shape = grid.face_points(ax)
        coeffs = field.evaluate(pts)
        g_ax = np.ascontiguousarray(coeffs[:, ax, j, :, beta].T).reshape((m,) + shape)
        faces.append(g_ax)
        del coeffs
    return divergence_rhs(faces, grid)


def solve_corrector(field, T, h=None, buffer=6.0, bc="auto", window_side=None,
                    tol=1e-10, max_iters=None, precond=None, threads=1):
    """Solve the screened cell problems for every (direction, component).

    ``bc="auto"`` takes the single-cell periodic route for periodic fields
    and the buffered Dirichlet truncation otherwise.  ``h`` defaults to
    min(1/64 of the coefficient period scale, T/64) and must satisfy
    h <= T/64 so the screening length is resolved.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    d, m = field.d, field.m
    if field.ellipticity is None:
        certify_ellipticity(field)
    if h is None:
        h = min(1.0 / 64.0, T / 64.0)
    if h > T / 64.0 + 1e-12:
        raise ValueError("h must resolve the screening length: h <= T/64")

    mode = bc
    if bc == "auto":
        mode = "periodic" if field.period is not None else "truncated"
    if mode == "periodic" and field.period is None:
        raise ValueError("periodic corrector route needs a periodic field")

    if mode == "periodic":
        cells = np.maximum(4, np.round(field.period / h).astype(int))
        grid = BoxGrid(Box(np.zeros(d), field.period), cells, PERIODIC)
        window = Box(np.zeros(d), field.period)
        buffer = 0.0
    else:
        side = (2.0 * buffer + 1.0) * T
        cells = int(np.ceil(side / h))
        cells += cells % 2
        half = 0.5 * cells * h
        grid = BoxGrid(Box(-half * np.ones(d), half * np.ones(d)),
                       cells * np.ones(d, dtype=int), DIRICHLET)
        wside = T if window_side is None else float(window_side)
        if wside > 2.0 * half - 2.0 * buffer * T + 1e-9:
            raise ValueError("window too large for the requested buffer")
        window = Box.cube(wside, d=d)

    kappa = T ** -2.0
    op = assemble(field, grid, kappa)
    if precond is None:
        precond = "ilu" if d == 1 else "jacobi"

    jobs = [(j, b) for j in range(d) for b in range(m)]

    def _one(jb):
        j, b = jb
        rhs = _corrector_rhs(field, grid, j, b, m)
        u = solve(op, rhs, tol=tol, max_iters=max_iters, precond=precond)
        return u

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_one, jobs))
    else:
        results = [_one(jb) for jb in jobs]

    chi = [[None] * m for _ in range(d)]
    iterations = []
    for (j, b), u in zip(jobs, results):
        chi[j][b] = u
        iterations.append(u.solve_info.iterations)
    return CorrectorSet(field=field, T=float(T), grid=grid, mode=mode,
                        buffer=buffer, window=window, chi=chi, kappa=kappa,
                        tol=tol, iterations=iterations)


# ---------------------------------------------------------------------------
# effective tensor from window-averaged fluxes


def _face_average(arr, ax, bc):
    """Average node data onto the centers of faces orthogonal to ``ax``."""
    if bc == PERIODIC:
        return 0.5 * (arr + np.roll(arr, -1, axis=ax))
    sl_lo = [slice(None)] * arr.ndim
    sl_hi = [slice(None)] * arr.ndim
    sl_lo[ax] = slice(None, -1)
    sl_hi[ax] = slice(1, None)
    return 0.5 * (arr[tuple(sl_lo)] + arr[tuple(sl_hi)])


def _face_window_slices(grid, window, ax):
    """Index slices selecting faces (normal to ax) with centers in the window."""
    if window is None:
        return tuple(slice(None) for _ in range(grid.d))
    sls = []
    for a in range(grid.d):
        if a == ax:
            lo = grid.box.lo[a] + 0.5 * grid.h[a]
            i0 = int(np.ceil((window.lo[a] - lo) / grid.h[a] - 1e-9))
            i1 = int(np.floor((window.hi[a] - lo) / grid.h[a] + 1e-9))
            n_faces = grid.cells[a] if grid.bc == PERIODIC else grid.cells[a]
            i0, i1 = max(i0, 0), min(i1, n_faces - 1)
            sls.append(slice(i0, i1 + 1))
        else:
            s = grid.window_slices(window)[a]
            sls.append(s)
    return tuple(sls)


def corrector_flux(cset, j, beta):
    """Flux arrays per direction i for solution (j, beta), at i-face centers.

    flux_i^alpha(f) = a_ii^{ag}(f) D_i chi^g(f)
                    + sum_{k != i} a_ik^{ag}(f) avg_i(centered_k chi^g)(f)
    """
    field, grid = cset.field, cset.grid
    u = cset.chi[j][beta]
    m = cset.m
    grads = centered_gradient(u) if grid.d > 1 else None
    out = []
    for i in range(grid.d):
        pts, shape = grid.face_points(i)
        coeffs = field.evaluate(pts)
        normal = face_differences(u, i)
        flux = np.einsum("fag,gf->af", coeffs[:, i, i].reshape(len(pts), m, m),
                         normal.reshape(m, -1)).reshape((m,) + shape)
        for k in range(grid.d):
            if k == i:
                continue
            trans = _face_average(grads[k], 1 + i, grid.bc).reshape(m, -1)
            flux += np.einsum("fag,gf->af", coeffs[:, i, k].reshape(len(pts), m, m),
                              trans).reshape((m,) + shape)
        out.append(flux)
        del coeffs
    return out


def homogenized_matrix(field, cset, window=None):
    """Window-averaged approximate effective tensor with ellipticity check.

    Entry (i, j, a, b) is the mean over i-faces in the window of
    a_ij^{ab}(f) + flux_i^a[chi_j^b](f); face-midpoint quadrature.
    """
    grid = cset.grid
    d, m = cset.d, cset.m
    if window is None:
        window = None if cset.mode == "periodic" else cset.window
    ahat = np.zeros((d, d, m, m))
    fluxes = [[corrector_flux(cset, j, b) for b in range(m)] for j in range(d)]
    for i in range(d):
        pts, shape = grid.face_points(i)
        coeffs = field.evaluate(pts)
        fsl = _face_window_slices(grid, window, i)
        for j in range(d):
            for b in range(m):
                base = coeffs[:, i, j, :, b].T.reshape((m,) + shape)
                flux = fluxes[j][b][i]
                integrand = base + flux
                ahat[i, j, :, b] = integrand[(slice(None), *fsl)].reshape(m, -1).mean(axis=1)
        del coeffs
    dm = d * m
    mat = np.ascontiguousarray(ahat.transpose(0, 2, 1, 3)).reshape(dm, dm)
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    mu = field.ellipticity.mu if field.ellipticity is not None else 0.0
    ok = bool(eigs[0] > 0 and eigs[0] >= 0.90 * mu)
    return HomogenizedMatrix(tensor=ahat, source=("approximate", cset.T),
                             sym_eig_min=float(eigs[0]), sym_eig_max=float(eigs[-1]),
                             ellipticity_ok=ok)


def reference_matrix(tensor):
    t = np.asarray(tensor, dtype=float)
    dm = t.shape[0] * t.shape[2]
    mat = np.ascontiguousarray(t.transpose(0, 2, 1, 3)).reshape(dm, dm)
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    return HomogenizedMatrix(tensor=t, source=("reference",),
                             sym_eig_min=float(eigs[0]), sym_eig_max=float(eigs[-1]),
                             ellipticity_ok=bool(eigs[0] > 0))


# ---------------------------------------------------------------------------
# pointwise diagnostics on interior regions


def _region_slices(cset, region):
    if region is None:
        if cset.mode == "periodic":
            return tuple(slice(None) for _ in range(cset.d)), None
        region = cset.window
    return cset.grid.window_slices(region), region


def flux_tensor(field, cset, ahat=None, region=None):
    """Node-sampled oscillatory flux  ahat - A - A grad chi  with its mean.

    ``ahat`` defaults to the set's own window tensor (making the region
    mean small by construction); pass a reference tensor to measure the
    screening error against a T-independent limit.
    """
    if ahat is None:
        ahat = homogenized_matrix(field, cset)
    a_t = ahat.tensor if isinstance(ahat, HomogenizedMatrix) else np.asarray(ahat)
    grid = cset.grid
    d, m = cset.d, cset.m
    sls, region_box = _region_slices(cset, region)
    mesh = grid.node_mesh()
    pts = np.stack([g[sls].ravel() for g in mesh], axis=1)
    coeffs = field.evaluate(pts)                       # (N, d, d, m, m)
    shape = tuple(len(range(*s.indices(grid.node_counts[ax]))) for ax, s in enumerate(sls))
    values = np.empty((d, d, m, m) + shape)
    grads = [[centered_gradient(cset.chi[j][b]) for b in range(m)] for j in range(d)]
    for i in range(d):
        for j in range(d):
            for al in range(m):
                for b in range(m):
                    acc = np.full(pts.shape[0], a_t[i, j, al, b])
                    acc -= coeffs[:, i, j, al, b]
                    for k in range(d):
                        for g in range(m):
                            acc -= coeffs[:, i, k, al, g] * \
                                grads[j][b][k][g][sls].ravel()
                    values[i, j, al, b] = acc.reshape(shape)
    if cset.mode == "periodic" and region is None:
        # wrap-around mean: plain node average is exact for periodic data
        mean = values.reshape(d, d, m, m, -1).mean(axis=-1)
        region_box = grid.box
    else:
        w = np.ones(())
        for ax in range(d):
            n = shape[ax]
            wa = np.full(n, grid.h[ax])
            wa[0] *= 0.5
            wa[-1] *= 0.5
            w = np.multiply.outer(w, wa)
        mean = np.tensordot(values, w, axes=(tuple(range(4, 4 + d)),
                                             tuple(range(d)))) / float(np.sum(w))
    return FluxTensor(values=values, region=region_box, grid=grid, slices=sls,
                      mean=mean, T=cset.T, mode=cset.mode)


def energy_identity_residual(field, cset, window=None):
    """Residual of the screened energy balance, per (direction, component).

    <A grad chi . grad chi> + T^{-2} <|chi|^2> + <(A* grad chi)_j^b>
    evaluated with node-centered gradients and trapezoid window averages,
    deliberately independent of the solver's face-based quadrature, so the
    residual measures genuine discretization error of the identity.
    Returns (residuals, relative_residuals) arrays of shape (d, m).
    """
    grid = cset.grid
    d, m = cset.d, cset.m
    sls, _ = _region_slices(cset, window)
    mesh = grid.node_mesh()
    pts = np.stack([g[sls].ravel() for g in mesh], axis=1)
    coeffs = field.evaluate(pts)
    if cset.mode == "periodic" and window is None:
        weights = None
    else:
        weights = np.ones(())
        for ax in range(d):
            n = len(range(*sls[ax].indices(grid.node_counts[ax])))
            wa = np.full(n, grid.h[ax])
            wa[0] *= 0.5
            wa[-1] *= 0.5
            weights = np.multiply.outer(weights, wa)
        weights = weights.ravel()
        weights = weights / weights.sum()

    def _avg(x):
        return float(np.mean(x)) if weights is None else float(np.sum(weights * x))

    res = np.zeros((d, m))
    rel = np.zeros((d, m))
    for j in range(d):
        for b in range(m):
            u = cset.chi[j][b]
            grad = centered_gradient(u)
            g = np.stack([grad[k][(slice(None), *sls)].reshape(m, -1)
                          for k in range(d)])        # (d, m, N)
            energy = np.zeros(pts.shape[0])
            for i in range(d):
                for k in range(d):
                    for al in range(m):
                        for ga in range(m):
                            energy += coeffs[:, i, k, al, ga] * g[k, ga] * g[i, al]
            mass = np.sum(u.values[(slice(None), *sls)].reshape(m, -1) ** 2, axis=0)
            rhs = np.zeros(pts.shape[0])
            for i in range(d):
                for al in range(m):
                    rhs -= coeffs[:, i, j, al, b] * g[i, al]
            lhs_val = _avg(energy) + cset.kappa * _avg(mass)
            rhs_val = _avg(rhs)
            res[j, b] = lhs_val - rhs_val
            rel[j, b] = abs(res[j, b]) / (abs(lhs_val) + abs(rhs_val) + 1.0)
    return res, rel


# ---------------------------------------------------------------------------
# dyadic ladders


def corrector_scalings(csets, sigma=0.5, pair_budget=4096, rng_seed=0):
    """Sup-norm, Hoelder-ratio and windowed-gradient scalings over a T ladder.

    Returns a dict of DecayReports: ``corrector_sup`` holds
    (T, T^{-1} sup |chi_T|), ``corrector_holder`` the ratio
    sup |chi(x)-chi(y)| / (T^{1-sigma} |x-y|^sigma), and
    ``gradient_window`` one report per T of windowed gradient L2 means at
    radii r in {T/8, T/4, T/2, T}.
    """
    csets = sorted(csets, key=lambda c: c.T)
    Ts = np.array([c.T for c in csets])
    sup_vals, holder_vals, grad_reports = [], [], []
    for c in csets:
        sup = c.sup_norm()
        sup_vals.append(sup / c.T)
        w = None if c.mode == "periodic" else c.window
        ratio = max(holder_seminorm(c.chi[j][b], sigma, pair_budget, rng_seed, window=w)
                    for j in range(c.d) for b in range(c.m))
        holder_vals.append(ratio / c.T ** (1.0 - sigma))
        radii = [c.T / 8.0, c.T / 4.0, c.T / 2.0, c.T]
        vals = [windowed_gradient_sup(c, r) for r in radii]
        grad_reports.append(DecayReport(radii, vals, "gradient_window",
                                        metadata={"T": c.T, "sigma": sigma}))
    return {
        "corrector_sup": DecayReport(Ts, sup_vals, "corrector_sup"),
        "corrector_holder": DecayReport(Ts, holder_vals, "corrector_holder",
                                        metadata={"sigma": sigma}),
        "gradient_window": grad_reports,
    }


def windowed_gradient_sup(cset, r):
    """sup over window positions of the box-averaged gradient L2 mean.

    Boxes are sup-norm balls B(x, r); on the periodic route the sliding
    window wraps, on the truncated route centers keep the box inside the
    Dirichlet-safe interior region.
    """
    from scipy.ndimage import uniform_filter
    grid = cset.grid
    d, m = cset.d, cset.m
    gradsq = np.zeros(grid.node_counts)
    for j in range(d):
        for b in range(m):
            grad = centered_gradient(cset.chi[j][b])
            gradsq += np.sum(grad ** 2, axis=(0, 1))
    if cset.mode == "periodic":
        size = [max(1, min(int(round(2 * r / grid.h[ax])), grid.node_counts[ax]))
                for ax in range(d)]
        means = uniform_filter(gradsq, size=size, mode="wrap")
        return float(np.sqrt(np.max(means)))
    half = [int(round(r / grid.h[ax])) for ax in range(d)]
    pad = np.zeros(tuple(n + 1 for n in gradsq.shape))
    pad[(slice(1, None),) * d] = gradsq
    for ax in range(d):
        pad = np.cumsum(pad, axis=ax)
    margin = 2
    best = 0.0
    counts = np.array(grid.node_counts)
    lo_c = np.maximum(np.array(half) + margin, margin)
    hi_c = counts - 1 - np.array(half) - margin
    if np.any(hi_c <= lo_c):
        raise ValueError("radius too large for the available interior region")
    step = np.maximum(1, (hi_c - lo_c) // 24)
    centers = np.meshgrid(*[np.arange(lo_c[ax], hi_c[ax] + 1, step[ax])
                            for ax in range(d)], indexing="ij")
    centers = np.stack([c.ravel() for c in centers], axis=1)
    for c in centers:
        lo = c - half
        hi = c + half
        total = pad[tuple(hi + 1)] if d == 1 else None
        if d == 1:
            s = pad[hi[0] + 1] - pad[lo[0]]
            n_nodes = hi[0] - lo[0] + 1
        else:
            s = (pad[hi[0] + 1, hi[1] + 1] - pad[lo[0], hi[1] + 1]
                 - pad[hi[0] + 1, lo[1]] + pad[lo[0], lo[1]])
            n_nodes = (hi[0] - lo[0] + 1) * (hi[1] - lo[1] + 1)
        best = max(best, s / n_nodes)
    return float(np.sqrt(best))


def _aligned_window_faces(ca, cb, ax, window):
    ga, gb = ca.grid, cb.grid
    sa = _face_window_slices(ga, window, ax)
    sb = _face_window_slices(gb, window, ax)
    for a in range(ga.d):
        xa = (ga.box.lo[a] + ga.h[a] * (0.5 if a == ax else 0.0)
              + ga.h[a] * np.arange(*sa[a].indices(10 ** 9)))
        xb = (gb.box.lo[a] + gb.h[a] * (0.5 if a == ax else 0.0)
              + gb.h[a] * np.arange(*sb[a].indices(10 ** 9)))
        if xa.size != xb.size or not np.allclose(xa, xb, atol=1e-9):
            raise ValueError("corrector grids are not aligned on the common window")
    return sa, sb


def gradient_cauchy_decay(csets, window_side=None):
    """Window L2 norms of grad chi_T - grad chi_2T per dyadic pair.

    The pair values bound the distance to the T-limit gradient by
    telescoping; they must decrease along the ladder.  Grids must share
    spacing and node alignment on the common window.
    """
    csets = sorted(csets, key=lambda c: c.T)
    if len(csets) < 2:
        raise ValueError("need at least two dyadic T values")
    params, vals = [], []
    for ca, cb in zip(csets[:-1], csets[1:]):
        if abs(cb.T / ca.T - 2.0) > 1e-9:
            raise ValueError("ladder must be dyadic in T")
        if ca.mode == "periodic":
            window = None
        else:
            side = window_side if window_side is not None else min(c.window.sides.min()
                                                                   for c in (ca, cb))
            window = Box.cube(side, d=ca.d)
        total = 0.0
        n_terms = 0
        for j in range(ca.d):
            for b in range(ca.m):
                for ax in range(ca.d):
                    fa = face_differences(ca.chi[j][b], ax)
                    fb = face_differences(cb.chi[j][b], ax)
                    if window is None:
                        if fa.shape != fb.shape:
                            raise ValueError("periodic corrector grids differ")
                        diff = fa - fb
                    else:
                        sa, sb = _aligned_window_faces(ca, cb, ax, window)
                        diff = fa[(slice(None), *sa)] - fb[(slice(None), *sb)]
                    total += float(np.mean(np.sum(diff ** 2, axis=0)))
                    n_terms += 1
        params.append(ca.T)
        vals.append(np.sqrt(total / max(n_terms, 1)))
    return DecayReport(params, vals, "gradient_cauchy",
                       metadata={"T_pairs": [[c.T, 2 * c.T] for c in csets[:-1]]})


# ---------------------------------------------------------------------------
# flux corrector and translation response


def solve_flux_corrector(flux, T, tol=1e-10, report_side=None, precond=None):
    """Screened Poisson solve  -Lap f + T^{-2} f = B - <B>  per tensor entry.

    On the periodic route the solve lives on the period cell; otherwise the
    flux region is re-truncated with zero Dirichlet data and the scalings
    are reported on the central cube of side ``report_side`` (default T).
    Returns (entries, report): entries[i][j][a][b] is a GridFunction, the
    report holds T^{-2} max |f| and T^{-1} max |grad f| over the window.
    """
    d = flux.values.shape[0]
    m = flux.values.shape[2]
    lap_field = identity_field(d, 1)
    certify_ellipticity(lap_field, sample_count=8)
    if flux.mode == "periodic":
        grid = flux.grid
    else:
        region_shape = flux.values.shape[4:]
        if min(region_shape) < 8:
            raise ValueError("flux region too small to re-truncate")
        lo = np.array([flux.grid.axis_nodes(ax)[flux.slices[ax].start] for ax in range(d)])
        hi = np.array([flux.grid.axis_nodes(ax)[flux.slices[ax].stop - 1] for ax in range(d)])
        side = (hi - lo).min()
        if side < 3.0 * T:
            raise ValueError("flux region must span at least 3 screening lengths")
        grid = BoxGrid(Box(lo, hi), np.array(region_shape) - 1, DIRICHLET)
    if precond is None:
        precond = "ilu" if d == 1 else "jacobi"
    op = assemble(lap_field, grid, T ** -2.0)
    report_window = (None if flux.mode == "periodic"
                     else Box.cube(report_side if report_side else T, d=d))
    entries = [[[[None] * m for _ in range(m)] for _ in range(d)] for _ in range(d)]
    sup_f = 0.0
    sup_grad = 0.0
    for i in range(d):
        for j in range(d):
            for al in range(m):
                for b in range(m):
                    data = flux.values[i, j, al, b] - flux.mean[i, j, al, b]
                    rhs = GridFunction(grid, data[None])
                    f = solve(op, rhs, tol=tol, precond=precond)
                    entries[i][j][al][b] = f
                    sup_f = max(sup_f, norms(f, "Linf", window=report_window))
                    grad = centered_gradient(f)
                    if report_window is None:
                        sup_grad = max(sup_grad, float(np.max(np.abs(grad))))
                    else:
                        gsl = grid.window_slices(report_window)
                        sup_grad = max(sup_grad, float(np.max(np.abs(
                            grad[(slice(None), slice(None), *gsl)]))))
    report = {"T": T, "sup_f_scaled": sup_f * T ** -2.0,
              "sup_grad_scaled": sup_grad / T,
              "window_side": None if report_window is None
              else float(report_window.sides[0])}
    return entries, report


def translation_response(field, T, shift_pairs, h=None, buffer=6.0, tol=1e-8,
                         denom_points=4096, denom_box=None, rng_seed=0,
                         skip_tol=1e-8):
    """Sup-norm response of the corrector to coefficient translations.

    For each shift pair (y, z) the corrector is recomputed for the shifted
    fields and the ratio ||chi^y - chi^z||_inf / (T ||A(.+y) - A(.+z)||_inf)
    is reported; pairs whose sampled denominator falls below ``skip_tol``
    are skipped and marked.
    """
    rng = np.random.default_rng(rng_seed)
    d = field.d
    if denom_box is None:
        denom_box = Box.cube(64.0, d=d)
    tpts = rng.uniform(denom_box.lo, denom_box.hi, size=(denom_points, d))
    records = []
    cache = {}

    def _solve_shift(s):
        key = tuple(np.round(np.asarray(s, dtype=float), 12))
        if key not in cache:
            shifted = ShiftedField(field, s)
            if shifted.ellipticity is None:
                certify_ellipticity(shifted)
            cache[key] = solve_corrector(shifted, T, h=h, buffer=buffer,
                                         bc="truncated", tol=tol)
        return cache[key]

    for y, z in shift_pairs:
        y = np.asarray(y, dtype=float).reshape(d)
        z = np.asarray(z, dtype=float).reshape(d)
        denom = float(np.max(np.abs(field.evaluate(tpts + y) - field.evaluate(tpts + z))))
        if denom * T < skip_tol:
            records.append({"y": y.tolist(), "z": z.tolist(), "skipped": True,
                            "denominator": denom})
            continue
        cy = _solve_shift(y)
        cz = _solve_shift(z)
        num = 0.0
        sls = cy.grid.window_slices(cy.window)
        for j in range(d):
            for b in range(field.m):
                diff = cy.chi[j][b].values[(slice(None), *sls)] \
                    - cz.chi[j][b].values[(slice(None), *sls)]
                num = max(num, float(np.max(np.abs(diff))))
        records.append({"y": y.tolist(), "z": z.tolist(), "skipped": False,
                        "denominator": denom, "numerator": num,
                        "ratio": num / (T * denom)})
    return records
