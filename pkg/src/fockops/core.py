"""Truncated Fock space F_alpha^p in one complex variable.

Elements are stored as coefficient vectors against the orthonormal monomials
``e_k(z) = sqrt(alpha^k / k!) z^k``, k = 0..D.  Anything evaluated pointwise is
kept in weighted form ``g(z) exp(-alpha |z|^2 / 2)`` so that nothing overflows
for |z| far outside the region the truncation represents.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import gammainc, gammaln, roots_laguerre, roots_legendre


class DegenerateInputError(ValueError):
    """Raised when an input makes a requested ratio or solve meaningless."""


@dataclass(frozen=True)
class TruncationParams:
    alpha: float = 1.0
    degree: int = 40
    dim: int = 1

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be an integer >= 1, got {self.degree!r}")
        if self.dim != 1:
            raise ValueError("only dim = 1 is supported")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def size(self) -> int:
        return self.degree + 1

    def trust_radius(self) -> float:
        """Radius sqrt(D / alpha) inside which truncation claims are made."""
        return math.sqrt(self.degree / self.alpha)


def _log_norms(params: TruncationParams) -> np.ndarray:
    k = np.arange(params.size)
    return 0.5 * (k * math.log(params.alpha) - gammaln(k + 1))


def weighted_basis(params: TruncationParams, z) -> np.ndarray:
    """Values of e_k(z) exp(-alpha|z|^2/2) for k = 0..D, shape ``z.shape + (D+1,)``.

    Evaluated in the log domain; finite for any finite z.
    """
    z = np.asarray(z, dtype=complex)
    k = np.arange(params.size)
    r = np.abs(z)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log(r)
        klogr = np.where(k == 0, 0.0, k * logr)
    logmag = _log_norms(params) + klogr - 0.5 * params.alpha * r**2
    return np.exp(logmag) * np.exp(1j * k * np.angle(z)[..., None])


@dataclass(frozen=True, eq=False)
class CoeffVector:
    params: TruncationParams
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.shape != (self.params.size,):
            raise ValueError(f"expected {self.params.size} coefficients, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def basis(cls, params: TruncationParams, k: int) -> "CoeffVector":
        c = np.zeros(params.size, dtype=complex)
        c[k] = 1.0
        return cls(params, c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other: "CoeffVector") -> "CoeffVector":
        _check_same(self.params, other.params)
        return CoeffVector(self.params, self.coeffs + other.coeffs)

    def __sub__(self, other: "CoeffVector") -> "CoeffVector":
        _check_same(self.params, other.params)
        return CoeffVector(self.params, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "CoeffVector":
        return CoeffVector(self.params, complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps([[float(c.real), float(c.imag)] for c in self.coeffs])

    @classmethod
    def from_json(cls, params: TruncationParams, text: str) -> "CoeffVector":
        pairs = json.loads(text)
        return cls(params, np.array([complex(re, im) for re, im in pairs]))


def _check_same(a: TruncationParams, b: TruncationParams):
    if a != b:
        raise ValueError(f"mismatched truncation parameters: {a} vs {b}")


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Polar product rule for integrals over C against Lebesgue measure.

    Radial nodes are Gauss-Laguerre in ``u = scale * alpha * rho^2``; the rule
    integrates ``poly(t) exp(-scale * t)`` exactly.  ``scale = p/2`` makes
    |f|^p exact for polynomial f and even integer p.
    """

    params: TruncationParams
    t: np.ndarray  # alpha * rho^2 at each radial node
    radial_weights: np.ndarray  # dv weight per radial node, angular factor excluded
    angular_count: int
    scale: float
    radial_basis: np.ndarray = field(repr=False)  # |weighted e_k| at each radial node, (Nr, D+1)

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(self.t / self.params.alpha)

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.angular_count) / self.angular_count

    @property
    def angular_weight(self) -> float:
        return 2 * np.pi / self.angular_count

    @property
    def points(self) -> np.ndarray:
        return self.rho[:, None] * np.exp(1j * self.theta)[None, :]

    @property
    def weights(self) -> np.ndarray:
        """Full (Nr, Ntheta) dv weights."""
        return np.repeat(self.radial_weights[:, None] * self.angular_weight, self.angular_count, axis=1)

    @property
    def weighted_basis(self) -> np.ndarray:
        """ê_k at every node, shape (Nr, Ntheta, D+1)."""
        k = np.arange(self.params.size)
        return self.radial_basis[:, None, :] * np.exp(1j * np.outer(self.theta, k))[None, :, :]

    def synthesize(self, coeffs) -> np.ndarray:
        """Weighted field values of sum c_k e_k on the grid, shape (..., Nr, Ntheta)."""
        coeffs = np.asarray(coeffs, dtype=complex)
        spec = coeffs[..., None, :] * self.radial_basis
        n = self.angular_count
        if n < spec.shape[-1]:
            folded = np.zeros(spec.shape[:-1] + (n,), dtype=complex)
            for k in range(spec.shape[-1]):
                folded[..., k % n] += spec[..., k]
            spec = folded
        return np.fft.ifft(spec, n=n, axis=-1) * n

    def analyze(self, values) -> np.ndarray:
        """(alpha/pi) * integral of values * conj(ê_k) dv for each k."""
        values = np.asarray(values, dtype=complex)
        ang = np.fft.fft(values, axis=-1)
        ang = ang[..., np.arange(self.params.size) % self.angular_count] * self.angular_weight
        return (self.params.alpha / np.pi) * np.einsum("...ik,i,ik->...k", ang, self.radial_weights, self.radial_basis)

    def integrate(self, values) -> complex:
        """Integral of ``values`` (given at the nodes) against dv."""
        values = np.asarray(values)
        return np.sum(values.sum(axis=-1) * self.radial_weights, axis=-1) * self.angular_weight


def quadrature_grid(params: TruncationParams, radial_count: int | None = None,
                    angular_count: int | None = None, scale: float = 1.0) -> QuadratureGrid:
    D = params.degree
    nr = D + 32 if radial_count is None else int(radial_count)
    nth = 4 * D + 16 if angular_count is None else int(angular_count)
    if nth < 4 * D + 16:
        warnings.warn(f"angular count {nth} below 4D+16; trigonometric exactness not guaranteed",
                      stacklevel=2)
    return _build_grid(params, nr, nth, float(scale))


@lru_cache(maxsize=64)
def _build_grid(params: TruncationParams, nr: int, nth: int, scale: float) -> QuadratureGrid:
    u, w = roots_laguerre(nr)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    t = u / scale
    # rho d rho = dt / (2 alpha); weight e^{-u} is put back into the integrand
    radial_weights = np.exp(logw + u) / (2 * params.alpha * scale)
    k = np.arange(params.size)
    with np.errstate(divide="ignore"):
        logt = np.log(t)
    radial_basis = np.exp(0.5 * (k * logt[:, None] - gammaln(k + 1) - t[:, None]))
    for arr in (t, radial_weights, radial_basis):
        arr.setflags(write=False)
    return QuadratureGrid(params, t, radial_weights, nth, scale, radial_basis)


@dataclass(frozen=True, eq=False)
class GridField:
    """Function sampled on a QuadratureGrid, stored as g(z) exp(-alpha|z|^2/2)."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.t.size, self.grid.angular_count):
            raise ValueError(f"field shape {v.shape} does not match grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_coeffs(cls, f: CoeffVector, grid: QuadratureGrid | None = None) -> "GridField":
        grid = grid or quadrature_grid(f.params)
        _check_same(f.params, grid.params)
        return cls(grid, grid.synthesize(f.coeffs))

    @classmethod
    def from_function(cls, grid: QuadratureGrid, func) -> "GridField":
        """Sample ``func(z)`` and apply the Gaussian weight (func must not overflow)."""
        z = grid.points
        return cls(grid, func(z) * np.exp(-0.5 * grid.params.alpha * np.abs(z) ** 2))


# ---------------------------------------------------------------------------
# operations


def evaluate_weighted(f: CoeffVector, z) -> complex | np.ndarray:
    """f(z) exp(-alpha|z|^2/2)."""
    out = weighted_basis(f.params, z) @ f.coeffs
    return complex(out) if np.ndim(out) == 0 else out


def evaluate(f: CoeffVector, z) -> complex | np.ndarray:
    z = np.asarray(z, dtype=complex)
    return evaluate_weighted(f, z) * np.exp(0.5 * f.params.alpha * np.abs(z) ** 2)


def inner_product(f: CoeffVector, g: CoeffVector) -> complex:
    _check_same(f.params, g.params)
    return complex(np.vdot(g.coeffs, f.coeffs))


def quadrature_inner_product(f: CoeffVector, g: CoeffVector, grid: QuadratureGrid | None = None) -> complex:
    _check_same(f.params, g.params)
    grid = grid or quadrature_grid(f.params)
    F, G = grid.synthesize(f.coeffs), grid.synthesize(g.coeffs)
    return complex(f.params.alpha / np.pi * grid.integrate(F * np.conj(G)))


def quadrature_gram(grid: QuadratureGrid) -> np.ndarray:
    """Matrix of quadrature inner products <e_j, e_k>; the identity for an adequate grid."""
    E = grid.weighted_basis.reshape(-1, grid.params.size)
    w = grid.weights.reshape(-1)
    return grid.params.alpha / np.pi * (E.conj().T * w) @ E


def fock_norm(f: CoeffVector, p: float = 2.0, *, radial_count: int | None = None,
              angular_count: int | None = None) -> float:
    """||f||_{alpha,p} for p in (1, inf].

    Finite p: ((p alpha / 2 pi) int |f e^{-alpha|z|^2/2}|^p dv)^(1/p) on a grid
    scaled to the decay of the integrand.  p = inf: maximum of the weighted
    modulus over a polar search grid out to 3 trust radii, refined locally.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if math.isinf(p):
        return _sup_norm(f)
    grid = quadrature_grid(f.params, radial_count, angular_count, scale=p / 2)
    F = grid.synthesize(f.coeffs)
    val = p * f.params.alpha / (2 * np.pi) * grid.integrate(np.abs(F) ** p).real
    return float(max(val, 0.0) ** (1 / p))


def _sup_norm(f: CoeffVector, n_radial: int = 600) -> float:
    params = f.params
    rmax = 3 * params.trust_radius()
    rho = np.linspace(0, rmax, n_radial)
    nth = 4 * params.degree + 16
    theta = 2 * np.pi * np.arange(nth) / nth
    z = rho[:, None] * np.exp(1j * theta)[None, :]
    vals = np.abs(evaluate_weighted(f, z))
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = vals[i, j]
    z0 = z[i, j]
    res = optimize.minimize(lambda x: -abs(evaluate_weighted(f, complex(x[0], x[1]))),
                            [z0.real, z0.imag], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    return float(max(best, -res.fun))


def kernel_coeffs(params: TruncationParams, w: complex, normalized: bool = True) -> CoeffVector:
    """Coefficients of K(., w) = exp(alpha z conj(w)), or of k_w when normalized.

    c_k = sqrt(alpha^k / k!) conj(w)^k, times exp(-alpha|w|^2/2) when normalized.
    """
    w = complex(w)
    if abs(w) > 3 * params.trust_radius():
        warnings.warn(f"|w| = {abs(w):.3g} exceeds 3 trust radii; kernel truncation is poor",
                      stacklevel=2)
    c = np.conj(weighted_basis(params, w))
    if not normalized:
        c = c * np.exp(0.5 * params.alpha * abs(w) ** 2)
    return CoeffVector(params, c)


def kernel_tail(params: TruncationParams, w) -> float | np.ndarray:
    """L2 norm of the part of k_w beyond degree D: sqrt(P(D+1, alpha|w|^2))."""
    lam = params.alpha * np.abs(np.asarray(w)) ** 2
    out = np.sqrt(gammainc(params.degree + 1, lam))
    return float(out) if np.ndim(out) == 0 else out


def project(F: GridField, params: TruncationParams | None = None) -> CoeffVector:
    """Orthogonal projection P_alpha of a sampled L^2 function onto the truncated space."""
    if params is not None:
        _check_same(params, F.grid.params)
    if F.grid.scale != 1.0:
        raise ValueError("projection requires a scale-1 grid")
    return CoeffVector(F.grid.params, F.grid.analyze(F.values))


# ---------------------------------------------------------------------------
# local rules


def disk_rule(center: complex, radius: float, n_radial: int, n_angular: int):
    """Nodes and dv weights for a disk: Gauss-Legendre in radius, trapezoid in angle."""
    x, w = roots_legendre(n_radial)
    s = 0.5 * radius * (x + 1)
    ws = 0.5 * radius * w * s
    phi = 2 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
    pts = complex(center) + s[:, None] * np.exp(1j * phi)[None, :]
    wts = np.repeat(ws[:, None] * (2 * np.pi / n_angular), n_angular, axis=1)
    return pts.reshape(-1), wts.reshape(-1)


def box_rule(x0: float, x1: float, y0: float, y1: float, n: int):
    """Tensor Gauss-Legendre nodes and weights for [x0, x1] x [y0, y1]."""
    x, w = roots_legendre(n)
    xs = 0.5 * (x1 - x0) * (x + 1) + x0
    ys = 0.5 * (y1 - y0) * (x + 1) + y0
    wx = 0.5 * (x1 - x0) * w
    wy = 0.5 * (y1 - y0) * w
    pts = xs[:, None] + 1j * ys[None, :]
    return pts.reshape(-1), np.outer(wx, wy).reshape(-1)


def _disk_counts(params: TruncationParams, center: complex, radius: float) -> tuple[int, int]:
    a = params.alpha
    n_r = params.degree + 24 + int(math.ceil(2 * a * radius * (abs(center) + radius)))
    n_phi = 2 * params.degree + 32 + int(math.ceil(4 * a * radius * (abs(center) + radius)))
    return n_r, n_phi


def submeanvalue_ratio(f: CoeffVector, z: complex, r: float, p: float = 2.0) -> float:
    """|f(z) e^{-alpha|z|^2/2}|^p divided by the integral of the same over B(z, r)."""
    if not r > 0:
        raise ValueError("r must be positive")
    pts, wts = disk_rule(z, r, *_disk_counts(f.params, z, r))
    den = float(np.sum(wts * np.abs(evaluate_weighted(f, pts)) ** p))
    if den <= 0 or not math.isfinite(den):
        raise DegenerateInputError("f vanishes on the ball")
    return abs(evaluate_weighted(f, z)) ** p / den


def submeanvalue_constant(params: TruncationParams, r: float, p: float, samples: int,
                          seed: int) -> float:
    """Largest submeanvalue ratio over random (f, z) with |z| within half the trust radius."""
    rng = np.random.default_rng(seed)
    best = 0.0
    R = params.trust_radius() / 2
    for _ in range(samples):
        c = rng.standard_normal(params.size) + 1j * rng.standard_normal(params.size)
        c /= np.sqrt(np.arange(1, params.size + 1))
        z = R * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        best = max(best, submeanvalue_ratio(CoeffVector(params, c), z, r, p))
    return best


def gaussian_moment_check(params: TruncationParams, s: float, z: complex,
                          grid: QuadratureGrid | None = None) -> tuple[float, float]:
    """(quadrature, closed form) for int |exp(s z conj(w))| dmu_alpha(w) = exp(s^2|z|^2 / 4 alpha)."""
    grid = grid or quadrature_grid(params)
    a = params.alpha
    w = grid.points
    integrand = (a / np.pi) * np.exp(s * (complex(z) * np.conj(w)).real - a * np.abs(w) ** 2)
    computed = float(grid.integrate(integrand).real)
    return computed, math.exp(s * s * abs(z) ** 2 / (4 * a))
