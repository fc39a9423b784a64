"""Coefficient tensor fields for divergence-form elliptic operators.

A field maps points ``y`` in R^d to a real tensor ``a[i, j, alpha, beta]``
(spatial indices ``i, j < d``, component indices ``alpha, beta < m``) acting
on gradients of R^m-valued functions through ``-div(A(y) grad u)``.

Supported constructions:

* constant tensors,
* trigonometric polynomials ``sum_k cos(2 pi k.y) C_k + sin(2 pi k.y) S_k``
  (the 1-periodic convention: a frequency vector of integers makes the
  field 1-periodic per axis),
* periodically sampled node grids with multilinear interpolation,
* quasi-periodic fields ``A(x) = B(j_lambda(x))`` where ``B`` is 1-periodic
  on an M-torus and ``j_lambda`` embeds each axis ``x_i`` along its
  frequency list ``lambda_i``.

All evaluators are vectorized over points and deterministic; fields are
immutable after construction and safe to evaluate concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EllipticityViolation, ResonantFrequencies

GOLDEN_RATIO = (1.0 + np.sqrt(5.0)) / 2.0


# ---------------------------------------------------------------------------
# tensor values


def as_tensor(value, d, m):
    """Coerce ``value`` to a coefficient tensor of shape (d, d, m, m).

    Scalars become isotropic tensors ``c * delta_ij * delta_ab``; a (d, d)
    matrix is promoted componentwise for m == 1.
    """
    a = np.asarray(value, dtype=float)
    if a.ndim == 0:
        out = np.zeros((d, d, m, m))
        for i in range(d):
            for al in range(m):
                out[i, i, al, al] = float(a)
        return out
    if a.shape == (d, d) and m == 1:
        return a.reshape(d, d, 1, 1).astype(float)
    if a.shape == (d, d, m, m):
        return a.astype(float)
    raise ValueError(f"cannot interpret shape {a.shape} as a (d={d}, m={m}) tensor")


def tensor_matrix(t):
    """Flatten a (d, d, m, m) tensor to the (dm, dm) matrix acting on xi[j, beta]."""
    d, _, m, _ = t.shape
    return np.ascontiguousarray(t.transpose(0, 2, 1, 3)).reshape(d * m, d * m)


def adjoint_tensor(t):
    """Index-swapped tensor: b[i, j, a, b] = a[j, i, b, a]."""
    return np.ascontiguousarray(t.transpose(1, 0, 3, 2))


def is_symmetric_tensor(t, tol=1e-12):
    return bool(np.max(np.abs(t - adjoint_tensor(t))) <= tol * (1.0 + np.max(np.abs(t))))


@dataclass(frozen=True)
class Ellipticity:
    """Sampled two-sided ellipticity certificate.

    ``mu`` is the smallest and ``mu_inv_check`` the largest observed
    Rayleigh quotient of the symmetric part over unit directions in R^{dm}.
    The constant valid for the two-sided bound  mu0 |xi|^2 <= A xi.xi <=
    |xi|^2 / mu0  is ``min(mu, 1/mu_inv_check)``.
    """

    mu: float
    mu_inv_check: float

    def __post_init__(self):
        if not (0.0 < self.mu <= self.mu_inv_check):
            raise ValueError(f"invalid certificate: mu={self.mu}, max={self.mu_inv_check}")

    @property
    def two_sided_mu(self):
        return min(self.mu, 1.0 / self.mu_inv_check)


@dataclass(frozen=True)
class FrequencyLayout:
    """Per-axis frequency lists for a quasi-periodic embedding.

    ``frequencies[i]`` holds the list (lambda_i^1, ..., lambda_i^{m_i}); the
    embedding sends x to (lambda_i^k x_i) concatenated over axes.  The
    ``independent`` flags declare rational independence per axis (checked
    separately with :func:`diophantine_scan`).
    """

    frequencies: tuple
    independent: tuple = None

    def __post_init__(self):
        freqs = tuple(np.asarray(f, dtype=float).ravel() for f in self.frequencies)
        object.__setattr__(self, "frequencies", freqs)
        for f in freqs:
            if f.size == 0:
                raise ValueError("each direction needs at least one frequency")
            if np.any(f == 0.0):
                raise ValueError("zero frequencies are not allowed")
        if self.independent is None:
            object.__setattr__(self, "independent", tuple(f.size > 1 for f in freqs))

    @property
    def direction_count(self):
        return len(self.frequencies)

    @property
    def total_dimension(self):
        return int(sum(f.size for f in self.frequencies))

    def embed(self, points):
        """Map points (N, d) to the M-torus preimage (N, M)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [points[:, i, None] * f[None, :] for i, f in enumerate(self.frequencies)]
        return np.concatenate(cols, axis=1)


# ---------------------------------------------------------------------------
# field variants


def _check_points(points, d):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, field has d={d}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite evaluation point")
    return pts, single


class CoefficientField:
    """Base class: vectorized evaluation plus metadata shared by variants."""

    def __init__(self, d, m, symmetric=False, period=None):
        self.d = int(d)
        self.m = int(m)
        self.symmetric = bool(symmetric)
        self.period = None if period is None else np.asarray(period, dtype=float)
        self._ellipticity = None

    @property
    def ellipticity(self):
        return self._ellipticity

    def attach_ellipticity(self, cert):
        self._ellipticity = cert

    def evaluate(self, points):
        pts, single = _check_points(points, self.d)
        out = self._evaluate(pts)
        return out[0] if single else out

    def _evaluate(self, pts):  # pragma: no cover - abstract
        raise NotImplementedError

    def adjoint(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _carry_over(self, other):
        if self._ellipticity is not None:
            other.attach_ellipticity(self._ellipticity)
        return other


class ConstantField(CoefficientField):
    def __init__(self, value, d=None, m=None):
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 4:
            d, m = arr.shape[0], arr.shape[2]
        if d is None or m is None:
            raise ValueError("d and m required for scalar/matrix constants")
        super().__init__(d, m)
        self.value = as_tensor(arr, self.d, self.m)
        self.symmetric = is_symmetric_tensor(self.value)
        self.period = np.ones(self.d)

    def _evaluate(self, pts):
        return np.broadcast_to(self.value, (pts.shape[0],) + self.value.shape).copy()

    def adjoint(self):
        return self._carry_over(ConstantField(adjoint_tensor(self.value)))


class TrigPolynomialField(CoefficientField):
    """A(y) = sum over terms of cos(2 pi k.y) C + sin(2 pi k.y) S."""

    def __init__(self, d, m, terms):
        super().__init__(d, m)
        parsed = []
        for freq, cos_c, sin_c in terms:
            k = np.asarray(freq, dtype=float).reshape(d)
            parsed.append((k, as_tensor(cos_c, d, m), as_tensor(sin_c, d, m)))
        self.terms = parsed
        self.symmetric = all(
            is_symmetric_tensor(c) and is_symmetric_tensor(s) for _, c, s in parsed
        )
        freqs = np.array([k for k, _, _ in parsed])
        if freqs.size and np.allclose(freqs, np.round(freqs), atol=1e-12):
            self.period = np.ones(d)

    def _evaluate(self, pts):
        n = pts.shape[0]
        out = np.zeros((n, self.d, self.d, self.m, self.m))
        for k, cos_c, sin_c in self.terms:
            ph = 2.0 * np.pi * (pts @ k)
            if np.any(cos_c):
                out += np.cos(ph)[:, None, None, None, None] * cos_c
            if np.any(sin_c):
                out += np.sin(ph)[:, None, None, None, None] * sin_c
        return out

    def adjoint(self):
        terms = [(k, adjoint_tensor(c), adjoint_tensor(s)) for k, c, s in self.terms]
        return self._carry_over(TrigPolynomialField(self.d, self.m, terms))


class PeriodicSampledField(CoefficientField):
    """Node samples on a periodic lattice, order-1 (multilinear) interpolation."""

    def __init__(self, period, samples, order=1):
        samples = np.asarray(samples, dtype=float)
        d = samples.ndim - 4
        if d < 1 or samples.shape[-4] != samples.shape[-3] or samples.shape[-2] != samples.shape[-1]:
            raise ValueError("samples must have shape (*cells, d, d, m, m)")
        if samples.shape[-4] != d:
            raise ValueError("sample tensor dimension does not match lattice dimension")
        if order != 1:
            raise ValueError("only multilinear interpolation (order=1) is supported")
        m = samples.shape[-1]
        super().__init__(d, m, period=np.asarray(period, dtype=float).reshape(d))
        self.samples = samples
        self.order = 1
        self.cells = np.array(samples.shape[:d], dtype=int)
        swapped = samples.transpose(*range(d), d + 1, d, d + 3, d + 2)
        self.symmetric = bool(
            np.max(np.abs(samples - swapped)) <= 1e-12 * (1.0 + np.max(np.abs(samples)))
        )

    def _evaluate(self, pts):
        frac = (pts / self.period) % 1.0 * self.cells
        base = np.floor(frac).astype(int) % self.cells
        w = frac - np.floor(frac)
        n = pts.shape[0]
        out = np.zeros((n, self.d, self.d, self.m, self.m))
        for corner in itertools.product((0, 1), repeat=self.d):
            idx = tuple(((base[:, ax] + corner[ax]) % self.cells[ax]) for ax in range(self.d))
            weight = np.ones(n)
            for ax in range(self.d):
                weight = weight * (w[:, ax] if corner[ax] else 1.0 - w[:, ax])
            out += weight[:, None, None, None, None] * self.samples[idx]
        return out

    def adjoint(self):
        d = self.d
        swapped = np.ascontiguousarray(self.samples.transpose(*range(d), d + 1, d, d + 3, d + 2))
        return self._carry_over(PeriodicSampledField(self.period, swapped))


class TorusFunction:
    """1-periodic tensor-valued trigonometric polynomial on an M-torus.

    Integer frequency vectors keep the function exactly 1-periodic, which is
    what the quasi-periodic construction needs.
    """

    def __init__(self, dimension, d, m, terms):
        self.dimension = int(dimension)
        self.d = int(d)
        self.m = int(m)
        parsed = []
        for freq, cos_c, sin_c in terms:
            n = np.asarray(freq, dtype=float).reshape(self.dimension)
            if not np.allclose(n, np.round(n), atol=1e-9):
                raise ValueError("torus frequencies must be integer vectors")
            parsed.append((np.round(n), as_tensor(cos_c, d, m), as_tensor(sin_c, d, m)))
        self.terms = parsed

    def evaluate(self, t):
        t = np.atleast_2d(np.asarray(t, dtype=float))
        n = t.shape[0]
        out = np.zeros((n, self.d, self.d, self.m, self.m))
        for k, cos_c, sin_c in self.terms:
            ph = 2.0 * np.pi * (t @ k)
            if np.any(cos_c):
                out += np.cos(ph)[:, None, None, None, None] * cos_c
            if np.any(sin_c):
                out += np.sin(ph)[:, None, None, None, None] * sin_c
        return out

    def adjoint(self):
        terms = [(k, adjoint_tensor(c), adjoint_tensor(s)) for k, c, s in self.terms]
        return TorusFunction(self.dimension, self.d, self.m, terms)


class QuasiPeriodicField(CoefficientField):
    """A(x) = B(j_lambda(x)) with B periodic on the M-torus."""

    def __init__(self, torus, layout):
        if torus.dimension != layout.total_dimension:
            raise ValueError("torus dimension does not match the frequency layout")
        super().__init__(layout.direction_count, torus.m)
        self.torus = torus
        self.layout = layout
        self.symmetric = all(
            is_symmetric_tensor(c) and is_symmetric_tensor(s) for _, c, s in torus.terms
        )

    def _evaluate(self, pts):
        return self.torus.evaluate(self.layout.embed(pts))

    def adjoint(self):
        return self._carry_over(QuasiPeriodicField(self.torus.adjoint(), self.layout))


class ShiftedField(CoefficientField):
    """A(. + shift)."""

    def __init__(self, base, shift):
        super().__init__(base.d, base.m, symmetric=base.symmetric, period=base.period)
        self.base = base
        self.shift = np.asarray(shift, dtype=float).reshape(base.d)
        if base.ellipticity is not None:
            self.attach_ellipticity(base.ellipticity)

    def _evaluate(self, pts):
        return self.base.evaluate(pts + self.shift)

    def adjoint(self):
        return ShiftedField(self.base.adjoint(), self.shift)


class ScaledArgumentField(CoefficientField):
    """A(scale * x); used for the epsilon-problem coefficient A(x / eps)."""

    def __init__(self, base, scale):
        period = None if base.period is None else base.period / float(scale)
        super().__init__(base.d, base.m, symmetric=base.symmetric, period=period)
        self.base = base
        self.scale = float(scale)
        if base.ellipticity is not None:
            self.attach_ellipticity(base.ellipticity)

    def _evaluate(self, pts):
        return self.base.evaluate(pts * self.scale)

    def adjoint(self):
        return ScaledArgumentField(self.base.adjoint(), self.scale)


# ---------------------------------------------------------------------------
# operations


def evaluate(field, point):
    """Evaluate a field at one point or a batch of points."""
    return field.evaluate(point)


def adjoint(field):
    """Index-swapped field; an involution under evaluation."""
    return field.adjoint()


def check_ellipticity(field, sample_count=4096, rng_seed=0, sample_box=None):
    """Sample two-sided Rayleigh-quotient bounds of the symmetric part.

    Per sampled point the extreme quotients over unit directions are taken
    exactly (symmetric eigenvalues).  Raises :class:`EllipticityViolation`
    when the minimum is nonpositive.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    d = field.d
    if sample_box is None:
        if field.period is not None:
            lo, hi = np.zeros(d), field.period
        else:
            lo, hi = -64.0 * np.ones(d), 64.0 * np.ones(d)
    else:
        lo = np.asarray(sample_box[0], dtype=float).reshape(d)
        hi = np.asarray(sample_box[1], dtype=float).reshape(d)
    pts = rng.uniform(lo, hi, size=(sample_count, d))
    tensors = field.evaluate(pts)
    dm = field.d * field.m
    mats = np.ascontiguousarray(tensors.transpose(0, 1, 3, 2, 4)).reshape(-1, dm, dm)
    sym = 0.5 * (mats + mats.transpose(0, 2, 1))
    eigvals, eigvecs = np.linalg.eigh(sym)
    lo_idx = int(np.argmin(eigvals[:, 0]))
    mu = float(eigvals[lo_idx, 0])
    mu_inv = float(np.max(eigvals[:, -1]))
    if mu <= 0.0:
        raise EllipticityViolation(pts[lo_idx], eigvecs[lo_idx, :, 0], mu)
    return Ellipticity(mu=mu, mu_inv_check=mu_inv)


def certify_ellipticity(field, sample_count=4096, rng_seed=0, sample_box=None):
    """Check and attach the certificate; operator assembly requires one."""
    cert = check_ellipticity(field, sample_count, rng_seed, sample_box)
    field.attach_ellipticity(cert)
    return cert


def diophantine_scan(lams, n_max):
    """Brute-force the small-divisor bound |n.lambda| >= c0 |n|^{-tau}.

    Scans integer vectors 0 < ||n||_inf <= n_max, fits tau by log-log
    regression on the record-setting minima of |n.lambda| (new minima as
    ||n|| grows), and returns (c0_hat, tau_hat) with c0_hat the largest
    constant valid over the scanned range.  An exact relation raises
    :class:`ResonantFrequencies` with the smallest witness.
    """
    lams = np.asarray(lams, dtype=float).ravel()
    m = lams.size
    if m < 2:
        raise ValueError("need at least two frequencies")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    ranges = [np.arange(-n_max, n_max + 1)] * m
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, m)
    nonzero = np.any(grid != 0, axis=1)
    grid = grid[nonzero]
    # |n.lambda| is even in n: keep representatives with first nonzero > 0
    first_nz = np.argmax(grid != 0, axis=1)
    keep = grid[np.arange(len(grid)), first_nz] > 0
    grid = grid[keep]
    dots = np.abs(grid @ lams)
    res_tol = 1e-12 * (1.0 + np.sum(np.abs(lams)) * n_max)
    resonant = dots <= res_tol
    if np.any(resonant):
        cand = grid[resonant]
        order = np.lexsort(tuple(cand[:, k] for k in reversed(range(m)))
                           + (np.max(np.abs(cand), axis=1),))
        raise ResonantFrequencies(cand[order[0]])
    norms = np.sqrt(np.sum(grid.astype(float) ** 2, axis=1))
    order = np.lexsort(tuple(grid[:, k] for k in reversed(range(m))) + (norms,))
    norms_s, dots_s = norms[order], dots[order]
    running = np.minimum.accumulate(dots_s)
    is_record = np.empty(len(dots_s), dtype=bool)
    is_record[0] = True
    is_record[1:] = dots_s[1:] < running[:-1]
    rec_n, rec_v = norms_s[is_record], dots_s[is_record]
    if rec_n.size >= 2:
        slope = np.polyfit(np.log(rec_n), np.log(rec_v), 1)[0]
        tau_hat = float(-slope)
    else:
        tau_hat = 0.0
    c0_hat = float(np.min(dots * norms ** tau_hat))
    return c0_hat, tau_hat


def modulus_of_continuity(torus, delta, sample_count=4096, rng_seed=0):
    """Sampled sup of |B(x) - B(y)| over pairs with ||x - y||_inf <= delta.

    Combines a regular torus grid with the extreme corner offsets
    (+-delta)^M and random offsets; entrywise max-abs difference.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    M = torus.dimension
    rng = np.random.default_rng(rng_seed)
    g = max(2, int(np.ceil(sample_count ** (1.0 / M))))
    axes = [np.linspace(0.0, 1.0, g, endpoint=False)] * M
    base = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, M)
    base = np.concatenate([base, rng.random((max(16, sample_count // 4), M))])
    offsets = [np.array(c, dtype=float) * delta for c in itertools.product((-1, 1), repeat=M)]
    offsets += list(rng.uniform(-delta, delta, size=(8, M)))
    b0 = torus.evaluate(base)
    worst = 0.0
    for off in offsets:
        b1 = torus.evaluate(base + off)
        worst = max(worst, float(np.max(np.abs(b1 - b0))))
    return worst


# ---------------------------------------------------------------------------
# stock fields used across tests and demos


def identity_field(d=1, m=1):
    return ConstantField(1.0, d=d, m=m)


def sine_scalar_field(mean=2.0, amplitude=1.0):
    """a(y) = mean + amplitude sin(2 pi y) on the line; 1-periodic."""
    return TrigPolynomialField(1, 1, [
        (np.zeros(1), mean, 0.0),
        (np.ones(1), 0.0, amplitude),
    ])


def laminate_field(mean=2.0, amplitude=1.0):
    """a(y) = mean + amplitude sin(2 pi y1) times the identity, d = 2."""
    return TrigPolynomialField(2, 1, [
        (np.zeros(2), as_tensor(mean, 2, 1), 0.0),
        (np.array([1.0, 0.0]), 0.0, as_tensor(amplitude, 2, 1)),
    ])


def golden_ratio_field(mean=2.0, amplitude=1.0):
    """Quasi-periodic scalar field 2 + cos(2 pi x) cos(2 pi phi x) on the line.

    B(t1, t2) = mean + amplitude cos(2 pi t1) cos(2 pi t2) with the badly
    approximable frequency pair (1, phi).
    """
    torus = TorusFunction(2, 1, 1, [
        (np.zeros(2), mean, 0.0),
        (np.array([1.0, 1.0]), 0.5 * amplitude, 0.0),
        (np.array([1.0, -1.0]), 0.5 * amplitude, 0.0),
    ])
    layout = FrequencyLayout((np.array([1.0, GOLDEN_RATIO]),))
    return QuasiPeriodicField(torus, layout)


# ---------------------------------------------------------------------------
# configuration I/O (JSON-compatible dictionaries)


def _tensor_cfg(t):
    return np.asarray(t, dtype=float).tolist()


def field_to_config(field):
    if isinstance(field, ConstantField):
        return {"variant": "constant", "d": field.d, "m": field.m,
                "value": _tensor_cfg(field.value)}
    if isinstance(field, TrigPolynomialField):
        return {"variant": "trig_polynomial", "d": field.d, "m": field.m,
                "terms": [{"frequency": k.tolist(), "cos": _tensor_cfg(c),
                           "sin": _tensor_cfg(s)} for k, c, s in field.terms]}
    if isinstance(field, PeriodicSampledField):
        return {"variant": "periodic_sampled", "d": field.d, "m": field.m,
                "period": field.period.tolist(), "order": 1,
                "samples": field.samples.tolist()}
    if isinstance(field, QuasiPeriodicField):
        return {"variant": "quasi_periodic", "d": field.d, "m": field.m,
                "layout": [f.tolist() for f in field.layout.frequencies],
                "torus_terms": [{"frequency": k.tolist(), "cos": _tensor_cfg(c),
                                 "sin": _tensor_cfg(s)}
                                for k, c, s in field.torus.terms]}
    raise ValueError(f"cannot serialize field of type {type(field).__name__}")


def field_from_config(cfg):
    """Build a field from its JSON-compatible configuration dictionary."""
    variant = cfg["variant"]
    if variant == "constant":
        return ConstantField(np.asarray(cfg["value"], dtype=float),
                             d=cfg.get("d"), m=cfg.get("m"))
    if variant == "trig_polynomial":
        d, m = int(cfg["d"]), int(cfg["m"])
        terms = [(np.asarray(t["frequency"], dtype=float),
                  np.asarray(t["cos"], dtype=float),
                  np.asarray(t["sin"], dtype=float)) for t in cfg["terms"]]
        return TrigPolynomialField(d, m, terms)
    if variant == "periodic_sampled":
        return PeriodicSampledField(np.asarray(cfg["period"], dtype=float),
                                    np.asarray(cfg["samples"], dtype=float),
                                    order=int(cfg.get("order", 1)))
    if variant == "quasi_periodic":
        d, m = int(cfg["d"]), int(cfg["m"])
        layout = FrequencyLayout(tuple(np.asarray(f, dtype=float) for f in cfg["layout"]))
        terms = [(np.asarray(t["frequency"], dtype=float),
                  np.asarray(t["cos"], dtype=float),
                  np.asarray(t["sin"], dtype=float)) for t in cfg["torus_terms"]]
        torus = TorusFunction(layout.total_dimension, d, m, terms)
        return QuasiPeriodicField(torus, layout)
    raise ValueError(f"unknown field variant {variant!r}")
