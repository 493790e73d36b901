"""Matrices of operators on the truncated Fock space.

An OperatorMatrix stores entry[k][j] = <T e_j, e_k>.  Toeplitz operators with
Gaussian symbols are assembled in closed form; everything else goes through
quadrature on the polar grid or on local rules for disks and boxes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.special import gammaln, roots_legendre

from .core import (
    CoeffVector,
    DegenerateInputError,
    TruncationParams,
    _check_same,
    _disk_counts,
    box_rule,
    disk_rule,
    fock_norm,
    kernel_coeffs,
    kernel_tail,
    quadrature_grid,
    weighted_basis,
)
from .symbols import (
    BallIndicator,
    GaussianSum,
    GeneralizedGaussian,
    GridSampled,
    Lebesgue,
    MeasureSpec,
    RadialProfile,
    SymbolSpec,
    atoms,
    check_lattice_cutoff,
    heat_transform,
    q_beta,
    shift_symbol,
)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    params: TruncationParams
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        n = self.params.size
        if e.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @classmethod
    def identity(cls, params: TruncationParams) -> "OperatorMatrix":
        return cls(params, np.eye(params.size))

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.params, self.entries.conj().T)

    def apply(self, f: CoeffVector) -> CoeffVector:
        _check_same(self.params, f.params)
        return CoeffVector(self.params, self.entries @ f.coeffs)

    def _other(self, other) -> np.ndarray:
        _check_same(self.params, other.params)
        return other.entries

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.params, self.entries + self._other(other))

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.params, self.entries - self._other(other))

    def __matmul__(self, other):
        if isinstance(other, CoeffVector):
            return self.apply(other)
        return OperatorMatrix(self.params, self.entries @ self._other(other))

    def __mul__(self, scalar) -> "OperatorMatrix":
        return OperatorMatrix(self.params, complex(scalar) * self.entries)

    __rmul__ = __mul__

    def to_json(self) -> str:
        pairs = np.stack([self.entries.real, self.entries.imag], axis=-1)
        return json.dumps({"alpha": self.params.alpha, "degree": self.params.degree,
                           "entries": pairs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "OperatorMatrix":
        d = json.loads(text)
        e = np.asarray(d["entries"], dtype=float)
        return cls(TruncationParams(d["alpha"], d["degree"]), e[..., 0] + 1j * e[..., 1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "j", "re", "im"])
        for k in range(self.params.size):
            for j in range(self.params.size):
                v = self.entries[k, j]
                w.writerow([k, j, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Toeplitz assembly


def _safe_log(x: complex) -> complex:
    return complex(np.log(x)) if x != 0 else -np.inf


def _gaussian_toeplitz(g: GeneralizedGaussian, params: TruncationParams) -> np.ndarray:
    """Closed form of <T_g e_j, e_k> for g = A exp(c1 z + c2 conj(z) + c3 |z|^2).

    Expanding exp(c1 z + c2 conj z) against z^j conj(z)^k exp(-a|z|^2),
    a = alpha - c3, leaves only diagonal angular terms; the resulting finite
    sum over m is evaluated in the log domain.
    """
    alpha = params.alpha
    a = alpha - g.c3
    x, y = g.c1 / a, g.c2 / a
    n = params.size
    k = np.arange(n)[:, None, None]
    j = np.arange(n)[None, :, None]
    m = np.arange(n)[None, None, :]
    valid = (m <= j) & (m <= k)
    km = np.where(valid, k - m, 0)
    jm = np.where(valid, j - m, 0)
    lx, ly = _safe_log(x), _safe_log(y)
    with np.errstate(invalid="ignore"):
        xpow = np.where(km == 0, 0.0, km * lx)
        ypow = np.where(jm == 0, 0.0, jm * ly)
    logt = (0.5 * (j + k) * math.log(alpha) + 0.5 * (gammaln(j + 1) + gammaln(k + 1))
            - gammaln(m + 1) - gammaln(jm + 1) - gammaln(km + 1) - m * math.log(a)
            + xpow + ypow)
    terms = np.where(valid, np.exp(np.where(valid, logt, -np.inf)), 0.0)
    pref = np.exp(g.log_amp + g.c1 * g.c2 / a) * (alpha / a)
    return pref * terms.sum(axis=-1)


def _legendre_in_t(params: TruncationParams, t0: float, t1: float) -> np.ndarray:
    """Diagonal entries int_{t0}^{t1} t^k e^{-t} / k! dt by Gauss-Legendre."""
    cap = 2 * params.degree + 80
    t1 = min(t1, cap)
    if t1 <= t0:
        return np.zeros(params.size)
    x, w = roots_legendre(params.degree + 60)
    t = 0.5 * (t1 - t0) * (x + 1) + t0
    wt = 0.5 * (t1 - t0) * w
    k = np.arange(params.size)
    vals = np.exp(k * np.log(t)[:, None] - t[:, None] - gammaln(k + 1))
    return wt @ vals


def _gram_from_nodes(params: TruncationParams, pts: np.ndarray, wts: np.ndarray,
                     values: np.ndarray | None = None) -> np.ndarray:
    E = weighted_basis(params, pts)
    w = wts if values is None else wts * values
    return params.alpha / np.pi * (E.conj().T * w) @ E


@dataclass(frozen=True)
class Box:
    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("box must have positive side lengths")


@dataclass(frozen=True)
class Annulus:
    """{r0 <= |z| < r1}; r1 may be infinite."""

    r0: float
    r1: float

    def __post_init__(self):
        if not (0 <= self.r0 < self.r1):
            raise ValueError("need 0 <= r0 < r1")


def region_gram(region, params: TruncationParams) -> np.ndarray:
    """Q_E = matrix of T_{chi_E}, the Gram form of ||chi_E f||_{L^2(dmu_alpha)}."""
    n = params.size
    if isinstance(region, Annulus):
        a = params.alpha
        return np.diag(_legendre_in_t(params, a * region.r0**2, a * region.r1**2)).astype(complex)
    if isinstance(region, Box):
        c = complex(0.5 * (region.x0 + region.x1), 0.5 * (region.y0 + region.y1))
        half = 0.5 * max(region.x1 - region.x0, region.y1 - region.y0)
        nq = _disk_counts(params, c, half * math.sqrt(2))[0]
        pts, wts = box_rule(region.x0, region.x1, region.y0, region.y1, nq)
        return _gram_from_nodes(params, pts, wts)
    if isinstance(region, BallIndicator):
        if math.isinf(region.radius):
            inside = np.eye(n, dtype=complex)
        elif region.center == 0:
            inside = np.diag(_legendre_in_t(params, 0.0, params.alpha * region.radius**2)).astype(complex)
        else:
            pts, wts = disk_rule(region.center, region.radius,
                                 *_disk_counts(params, region.center, region.radius))
            inside = _gram_from_nodes(params, pts, wts)
        return np.eye(n) - inside if region.complement else inside
    raise TypeError(f"unsupported region {type(region).__name__}")


def toeplitz_by_quadrature(s, params: TruncationParams, grid=None) -> OperatorMatrix:
    """(alpha/pi) int s e_j conj(e_k) e^{-alpha|z|^2} dv on the polar grid, for any callable s."""
    grid = grid or quadrature_grid(params)
    _check_same(params, grid.params)
    vals = np.asarray(s(grid.points), dtype=complex).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("symbol is not finite on the quadrature grid")
    E = grid.weighted_basis.reshape(-1, params.size)
    w = grid.weights.reshape(-1) * vals
    return OperatorMatrix(params, params.alpha / np.pi * (E.conj().T * w) @ E)


def toeplitz_from_symbol(s: SymbolSpec, params: TruncationParams) -> OperatorMatrix:
    if isinstance(s, GeneralizedGaussian):
        return OperatorMatrix(params, _gaussian_toeplitz(s, params))
    if isinstance(s, GaussianSum):
        out = np.zeros((params.size, params.size), dtype=complex)
        for g in s.terms:
            out += _gaussian_toeplitz(g, params)
        return OperatorMatrix(params, out)
    if isinstance(s, BallIndicator):
        return OperatorMatrix(params, region_gram(s, params))
    if isinstance(s, RadialProfile):
        grid = quadrature_grid(params)
        g = s(grid.rho)
        d = 2 * params.alpha * (grid.radial_weights * g) @ grid.radial_basis**2
        return OperatorMatrix(params, np.diag(d))
    if isinstance(s, GridSampled):
        grid = s.field.grid
        _check_same(params, grid.params)
        unweighted = s.field.values * np.exp(0.5 * grid.t)[:, None]
        return toeplitz_by_quadrature(lambda z: unweighted, params, grid)
    raise TypeError(f"unsupported symbol {type(s).__name__}")


def toeplitz_from_measure(m: MeasureSpec, params: TruncationParams) -> OperatorMatrix:
    """T_nu with entry[k][j] = sum of weight * ê_j(s) conj(ê_k(s)) over atoms.

    A Lebesgue measure g dv has T = (pi/alpha) T_g.
    """
    if isinstance(m, Lebesgue):
        return (math.pi / params.alpha) * toeplitz_from_symbol(m.density, params)
    check_lattice_cutoff(m, params)
    loc, w = atoms(m)
    if loc.size == 0:
        return OperatorMatrix(params, np.zeros((params.size, params.size)))
    E = weighted_basis(params, loc)
    return OperatorMatrix(params, (E.conj().T * w) @ E)


# ---------------------------------------------------------------------------
# weighted shifts and rank-one operators


@lru_cache(maxsize=256)
def _shift_entries(w: complex, params: TruncationParams) -> np.ndarray:
    R = params.trust_radius()
    nth = 4 * params.degree + 16 + int(math.ceil(4 * params.alpha * abs(w) * 3 * R))
    grid = quadrature_grid(params, params.degree + 64, nth)
    z = grid.points
    phase = np.exp(1j * params.alpha * (z * np.conj(w)).imag)
    cols = weighted_basis(params, z - w) * phase[..., None]  # (Nr, Nth, D+1)
    out = grid.analyze(np.moveaxis(cols, -1, 0)).T
    out.setflags(write=False)
    return out


def weighted_shift(w: complex, params: TruncationParams) -> OperatorMatrix:
    """C(w) f = f(. - w) exp(alpha z conj(w) - alpha|w|^2/2), projected column by column."""
    w = complex(w)
    if abs(w) > params.trust_radius():
        warnings.warn(f"|w| = {abs(w):.3g} beyond the trust radius", stacklevel=2)
    if w == 0:
        return OperatorMatrix.identity(params)
    return OperatorMatrix(params, _shift_entries(w, params))


def shift_safe_degree(w: complex, params: TruncationParams) -> int:
    """Largest degree up to which the truncated C(w) is treated as an isometry (-1 if none)."""
    excess = math.ceil(params.alpha * (abs(w) + params.trust_radius()) ** 2 / 2)
    return max(params.degree - excess, -1)


def rank_one(f: CoeffVector, g: CoeffVector) -> OperatorMatrix:
    """f (x) g = <., g> f."""
    _check_same(f.params, g.params)
    return OperatorMatrix(f.params, np.outer(f.coeffs, g.coeffs.conj()))


# ---------------------------------------------------------------------------
# Berezin transform


def polar_samples(radii, n_angles: int = 16) -> np.ndarray:
    """Points r e^{2 pi i l / n}, shape (len(radii), n_angles)."""
    radii = np.asarray(radii, dtype=float)
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    return radii[:, None] * np.exp(1j * theta)[None, :]


@dataclass(frozen=True, eq=False)
class BerezinField:
    params: TruncationParams
    z: np.ndarray
    values: np.ndarray
    kernel_tail: np.ndarray

    def radial_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """(radii, max |B| over samples at that radius) for polar sample arrays."""
        if self.z.ndim != 2:
            raise ValueError("radial profile needs a (radii, angles) sample array")
        return np.abs(self.z[:, 0]), np.abs(self.values).max(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z_re", "z_im", "B_re", "B_im", "kernel_tail"])
        for z, b, t in zip(self.z.reshape(-1), self.values.reshape(-1), self.kernel_tail.reshape(-1)):
            w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(b.real)),
                        repr(float(b.imag)), repr(float(t))])
        return buf.getvalue()


def berezin(A: OperatorMatrix, z) -> BerezinField:
    """B(z) = <A k_z, k_z> at sample points z (any shape)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > 1.5 * A.params.trust_radius()):
        warnings.warn("Berezin samples beyond 1.5 trust radii", stacklevel=2)
    E = weighted_basis(A.params, z)  # conj of the normalized kernel coefficients
    vals = np.einsum("...k,kj,...j->...", E, A.entries, E.conj())
    return BerezinField(A.params, z, vals, np.asarray(kernel_tail(A.params, z)))


def berezin_sampling_matrix(params: TruncationParams, z) -> np.ndarray:
    """Matrix of the linear map vec(A) -> (B(z_n))_n, with A flattened row-major."""
    E = weighted_basis(params, np.asarray(z, dtype=complex).reshape(-1))
    return (E[:, :, None] * E.conj()[:, None, :]).reshape(E.shape[0], -1)


def berezin_symbol_identity(m: MeasureSpec, params: TruncationParams, z=None) -> float:
    """max |B(T_m)(z) - (pi/alpha) heat(m, 1/(4 alpha))(z)| over samples (default: inside trust/2)."""
    if z is None:
        R = params.trust_radius() / 2
        z = polar_samples(np.linspace(0, R, 9), 16)
    lhs = berezin(toeplitz_from_measure(m, params), z).values
    rhs = (math.pi / params.alpha) * heat_transform(m, 1 / (4 * params.alpha), params)(z)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# the twisted product


def sharp(psi: GeneralizedGaussian, phi: GeneralizedGaussian, alpha: float) -> GeneralizedGaussian:
    """psi #_alpha phi for psi with no |z|^2 term.

    Derivatives in z of psi and in conj(z) of phi multiply them by c1(psi) and
    c2(phi) + c3(phi) z, so the defining series sums to
    psi phi exp(-c1(psi) (c2(phi) + c3(phi) z) / alpha).
    """
    if psi.c3 != 0:
        raise ValueError("closed form needs psi.c3 == 0")
    a1 = psi.c1
    return GeneralizedGaussian(psi.log_amp + phi.log_amp - a1 * phi.c2 / alpha,
                               psi.c1 + phi.c1 - a1 * phi.c3 / alpha,
                               psi.c2 + phi.c2, phi.c3)


def sharp_product(v: complex, u: complex, beta: float, params: TruncationParams) -> GeneralizedGaussian:
    """f_beta = s_v # q_beta(. - u), so that C(v) T_{q_beta(.-u)} = T_{f_beta}.

    Equals (beta/pi) exp(alpha|v|^2/2 + beta(z-u)conj(v) + 2i alpha Im(z conj v) - beta|z-u|^2).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    return sharp(shift_symbol(v, params.alpha), q_beta(beta).translate(u), params.alpha)


def sharp_product_printed(v: complex, u: complex, beta: float, params: TruncationParams) -> GeneralizedGaussian:
    """Same exponent as sharp_product but with amplitude (beta + alpha)/alpha.

    Kept to measure how far that normalization is from the operator identity.
    """
    f = sharp_product(v, u, beta, params)
    return GeneralizedGaussian(f.log_amp + math.log((beta + params.alpha) / params.alpha)
                               - math.log(beta / math.pi), f.c1, f.c2, f.c3)


# ---------------------------------------------------------------------------
# norms


def op_norm_2(A: OperatorMatrix) -> float:
    return float(np.linalg.norm(A.entries, 2))


def compactness_index(A: OperatorMatrix, k: int) -> float:
    """The (k+1)-th largest singular value."""
    if not 0 <= k <= A.params.degree:
        raise ValueError("k must lie in [0, D]")
    return float(np.linalg.svd(A.entries, compute_uv=False)[k])


def _psd_sqrt(Q: np.ndarray, tol: float = -1e-12) -> np.ndarray:
    lam, V = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    if lam.min() < tol:
        raise DegenerateInputError(f"region Gram matrix indefinite (min eigenvalue {lam.min():.3g})")
    return (V * np.sqrt(np.clip(lam, 0, None))) @ V.conj().T


def restricted_norm(A: OperatorMatrix, region) -> float:
    """||M_{chi_E} A||_{F^2 -> L^2} = ||Q_E^{1/2} A||."""
    return float(np.linalg.norm(_psd_sqrt(region_gram(region, A.params)) @ A.entries, 2))


def gram_sum_norm(pieces) -> float:
    """sqrt(lambda_max(sum X_j^* Q_j X_j)): norm of f -> sum chi_{F_j} X_j f for disjoint F_j."""
    S = None
    for Q, X in pieces:
        term = X.conj().T @ Q @ X
        S = term if S is None else S + term
    if S is None:
        return 0.0
    lam = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    return float(math.sqrt(max(lam[-1], 0.0)))


def _synth_adjoint(grid, v: np.ndarray) -> np.ndarray:
    """Adjoint of grid.synthesize (plain sums over nodes, no weights)."""
    ang = np.fft.fft(v, axis=-1)[..., np.arange(grid.params.size) % grid.angular_count]
    return np.einsum("...ik,ik->...k", ang, grid.radial_basis)


def _log_pnorm_and_grad(grid, c: np.ndarray, p: float):
    """log int |F|^p w and its conj-Wirtinger gradient (times 2) for a batch of coefficient rows."""
    F = grid.synthesize(c)
    w = grid.radial_weights[:, None]
    absF = np.abs(F)
    N = np.sum(absF**p * w, axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = p * _synth_adjoint(grid, np.where(absF > 0, w * absF ** (p - 2) * F, 0))
    safe = np.where(N > 0, N, 1.0)
    return np.where(N > 0, np.log(safe), -1e300), np.where(N[:, None] > 0, g / safe[:, None], 0)


def op_norm_p_lower(A: OperatorMatrix, p: float, trials: int = 200, seed: int = 0,
                    steps: int = 40, polish: int = 4, max_degree: int | None = None) -> float:
    """Certified lower bound for ||A||_{p -> p} by search over unit vectors.

    ``trials`` starts (structured candidates plus seeded random vectors) are
    improved by batched gradient ascent on log ||Af||_p - log ||f||_p, the best
    few are polished with L-BFGS, and the winner is re-evaluated with the
    accurate norm.  ``max_degree`` confines the search to polynomials of at
    most that degree.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    params = A.params
    n = params.size
    keep = np.arange(n) <= (params.degree if max_degree is None else max_degree)
    M = A.entries
    rng = np.random.default_rng(seed)
    starts = [np.eye(n)]
    starts.append(np.linalg.svd(M)[2][:1].conj())
    R = params.trust_radius() / 2
    ring = polar_samples(np.linspace(0, R, 4), 8).reshape(-1)
    starts.append(weighted_basis(params, ring).conj())
    starts = np.concatenate(starts)[:trials]
    extra = max(trials - starts.shape[0], 0)
    rand = rng.standard_normal((extra, n)) + 1j * rng.standard_normal((extra, n))
    rand /= np.sqrt(np.arange(1, n + 1))
    C = np.concatenate([starts, rand]) if extra else starts
    C = C * keep
    C = C[np.linalg.norm(C, axis=1) > 0]

    def exact(c):
        f = CoeffVector(params, c)
        den = fock_norm(f, p)
        return fock_norm(CoeffVector(params, M @ c), p) / den if den > 0 else 0.0

    if math.isinf(p):
        return max(exact(c) for c in C)

    # cheap grid, exact for |F|^p with even p; the final value is recomputed accurately
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = quadrature_grid(params, n + 1, 2 * n + 2, scale=p / 2)

    def objective(c):
        la, ga = _log_pnorm_and_grad(grid, c @ M.T, p)
        lf, gf = _log_pnorm_and_grad(grid, c, p)
        return (la - lf) / p, keep * (ga @ M.conj() - gf) / p

    C = C / np.linalg.norm(C, axis=1, keepdims=True)
    val, grad = objective(C)
    step = np.full(C.shape[0], 0.5)
    for _ in range(steps):
        trial = C + step[:, None] * grad
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        tv, tg = objective(trial)
        better = tv > val
        C[better], val[better], grad[better] = trial[better], tv[better], tg[better]
        step = np.where(better, step * 1.5, step * 0.3)

    def flat_obj(x):
        c = keep * (x[:n] + 1j * x[n:])[None, :]
        v, g = objective(c)
        return -v[0], -np.concatenate([g[0].real, g[0].imag])

    best = 0.0
    for i in np.argsort(val)[::-1][:polish]:
        x0 = np.concatenate([C[i].real, C[i].imag])
        res = optimize.minimize(flat_obj, x0, jac=True, method="L-BFGS-B",
                                options={"maxiter": 200})
        for x in (res.x, x0):
            best = max(best, exact(keep * (x[:n] + 1j * x[n:])))
    return best


def inf_norm_schur(A: OperatorMatrix, n_radii: int = 40, n_angles: int = 32) -> float:
    """Upper estimate of ||A||_{inf -> inf} for the truncated operator.

    A f(z) e^{-alpha|z|^2/2} = (alpha/pi) int k(z, w) f(w) e^{-alpha|w|^2/2} dv(w)
    with k(z, w) = sum A_kj ê_k(z) conj(ê_j(w)), so the sup over z of the L^1
    norm of k(z, .) bounds the norm.  The sup is taken over a polar search grid
    out to 1.5 trust radii (the kernel decays like a Gaussian beyond degree D).
    """
    params = A.params
    grid = quadrature_grid(params)
    Ew = grid.weighted_basis.reshape(-1, params.size)
    ww = grid.weights.reshape(-1)
    diagonal = np.allclose(A.entries, np.diag(np.diag(A.entries)), atol=1e-14)
    radii = np.linspace(0, 1.5 * params.trust_radius(), n_radii)
    z = polar_samples(radii, 1 if diagonal else n_angles).reshape(-1)
    best = 0.0
    for chunk in np.array_split(z, max(1, z.size // 64)):
        K = weighted_basis(params, chunk) @ A.entries @ Ew.conj().T
        best = max(best, float(np.max(np.abs(K) @ ww)))
    return params.alpha / np.pi * best
