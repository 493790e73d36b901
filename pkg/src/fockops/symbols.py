"""Descriptors for Toeplitz symbols and Borel measures on C.

Symbols are small immutable objects that can be evaluated pointwise, translated,
and heat-smoothed in closed form where the algebra allows it.  Measures are
either weighted Lebesgue measure or finite collections of point masses (a
lattice is expanded to point masses inside a cutoff disk).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .core import GridField, QuadratureGrid, TruncationParams, disk_rule, quadrature_grid

ATOM_SUM_LIMIT = 4096


def _as_array(z):
    return np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class GeneralizedGaussian:
    """A exp(c1 z + c2 conj(z) + c3 |z|^2), with the amplitude kept as log(A).

    Storing log(A) lets heavily concentrated Gaussians (amplitudes like
    exp(-4000)) survive until they are recombined with other exponents.
    """

    log_amp: complex = 0.0
    c1: complex = 0.0
    c2: complex = 0.0
    c3: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "log_amp", complex(self.log_amp))
        object.__setattr__(self, "c1", complex(self.c1))
        object.__setattr__(self, "c2", complex(self.c2))
        object.__setattr__(self, "c3", float(self.c3))
        if self.c3 > 0:
            raise ValueError("c3 must be <= 0 for integrability against dmu_alpha")

    @classmethod
    def from_amp(cls, amp: complex, c1=0.0, c2=0.0, c3=0.0) -> "GeneralizedGaussian":
        amp = complex(amp)
        if amp == 0:
            raise ValueError("amplitude must be nonzero")
        return cls(cmath.log(amp), c1, c2, c3)

    @property
    def amp(self) -> complex:
        return cmath.exp(self.log_amp)

    def is_bounded(self) -> bool:
        return self.c3 < 0 or abs(self.c1 + self.c2.conjugate()) == 0

    def log_value(self, z):
        z = _as_array(z)
        return self.log_amp + self.c1 * z + self.c2 * np.conj(z) + self.c3 * np.abs(z) ** 2

    def __call__(self, z):
        return np.exp(self.log_value(z))

    def translate(self, w: complex) -> "GeneralizedGaussian":
        """Descriptor of z -> self(z - w)."""
        w = complex(w)
        c3 = self.c3
        return GeneralizedGaussian(
            self.log_amp - self.c1 * w - self.c2 * w.conjugate() + c3 * abs(w) ** 2,
            self.c1 - c3 * w.conjugate(),
            self.c2 - c3 * w,
            c3,
        )

    def __mul__(self, other: "GeneralizedGaussian") -> "GeneralizedGaussian":
        if not isinstance(other, GeneralizedGaussian):
            return NotImplemented
        return GeneralizedGaussian(self.log_amp + other.log_amp, self.c1 + other.c1,
                                   self.c2 + other.c2, self.c3 + other.c3)

    def conj(self) -> "GeneralizedGaussian":
        return GeneralizedGaussian(self.log_amp.conjugate(), self.c2.conjugate(),
                                   self.c1.conjugate(), self.c3)

    def modulus(self) -> "GeneralizedGaussian":
        """|self| as a real-valued GeneralizedGaussian."""
        b = 0.5 * (self.c1 + self.c2.conjugate())
        return GeneralizedGaussian(self.log_amp.real, b, b.conjugate(), self.c3)


@dataclass(frozen=True)
class GaussianSum:
    terms: tuple[GeneralizedGaussian, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __call__(self, z):
        z = _as_array(z)
        out = np.zeros(z.shape, dtype=complex)
        for t in self.terms:
            out += t(z)
        return out

    def translate(self, w: complex) -> "GaussianSum":
        return GaussianSum(tuple(t.translate(w) for t in self.terms))

    def conj(self) -> "GaussianSum":
        return GaussianSum(tuple(t.conj() for t in self.terms))


@dataclass(frozen=True)
class BallIndicator:
    center: complex = 0.0
    radius: float = 1.0
    complement: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def __call__(self, z):
        inside = np.abs(_as_array(z) - self.center) < self.radius
        return (~inside if self.complement else inside).astype(float)

    def translate(self, w: complex) -> "BallIndicator":
        return BallIndicator(self.center + complex(w), self.radius, self.complement)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """g(|z|) given by samples (rho_i, g_i); evaluated by linear interpolation."""

    rho: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if rho.shape != vals.shape or rho.ndim != 1:
            raise ValueError("rho and values must be 1-d arrays of equal length")
        order = np.argsort(rho)
        object.__setattr__(self, "rho", rho[order])
        object.__setattr__(self, "values", vals[order])

    @classmethod
    def on_grid(cls, grid: QuadratureGrid, func) -> "RadialProfile":
        return cls(grid.rho, func(grid.rho))

    def __call__(self, z):
        r = np.abs(_as_array(z))
        return np.interp(r, self.rho, self.values.real) + 1j * np.interp(r, self.rho, self.values.imag)


@dataclass(frozen=True, eq=False)
class GridSampled:
    field: GridField

    def __call__(self, z):
        """Nearest-node lookup; points beyond the outermost radial node are rejected."""
        z = _as_array(z)
        grid = self.field.grid
        rho = grid.rho
        if np.any(np.abs(z) > rho[-1] * (1 + 1e-12)):
            raise ValueError("point outside the sampled grid")
        i = np.abs(np.abs(z)[..., None] - rho).argmin(axis=-1)
        ang = np.mod(np.angle(z), 2 * np.pi)
        j = np.rint(ang / grid.angular_weight).astype(int) % grid.angular_count
        weighted = self.field.values[i, j]
        return weighted * np.exp(0.5 * grid.t[i])


SymbolSpec = Union[GeneralizedGaussian, GaussianSum, BallIndicator, RadialProfile, GridSampled]


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class Lebesgue:
    density: SymbolSpec = GeneralizedGaussian()


@dataclass(frozen=True)
class PointMasses:
    atoms: tuple[tuple[complex, float], ...]

    def __post_init__(self):
        atoms = tuple((complex(loc), float(w)) for loc, w in self.atoms)
        if any(not w > 0 for _, w in atoms):
            raise ValueError("atom weights must be positive")
        object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True)
class Lattice:
    """Unit point masses on epsilon Z^2 inside the closed disk of radius cutoff_radius."""

    epsilon: float
    cutoff_radius: float

    def __post_init__(self):
        if not (self.epsilon > 0 and self.cutoff_radius > 0):
            raise ValueError("epsilon and cutoff_radius must be positive")


MeasureSpec = Union[Lebesgue, PointMasses, Lattice]


@lru_cache(maxsize=32)
def _lattice_atoms(epsilon: float, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    n = int(math.floor(cutoff / epsilon))
    k = np.arange(-n, n + 1)
    pts = (epsilon * (k[:, None] + 1j * k[None, :])).reshape(-1)
    pts = pts[np.abs(pts) <= cutoff * (1 + 1e-12)]
    w = np.ones(pts.size)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def atoms(m: MeasureSpec) -> tuple[np.ndarray, np.ndarray]:
    """(locations, weights) of an atomic measure."""
    if isinstance(m, Lattice):
        return _lattice_atoms(float(m.epsilon), float(m.cutoff_radius))
    if isinstance(m, PointMasses):
        if not m.atoms:
            return np.zeros(0, dtype=complex), np.zeros(0)
        loc, w = zip(*m.atoms)
        return np.array(loc, dtype=complex), np.array(w, dtype=float)
    raise TypeError(f"{type(m).__name__} is not atomic")


def restrict_atoms(m: MeasureSpec, mask_fn) -> PointMasses:
    """The atomic measure chi_E m, with E given by a boolean predicate on locations."""
    loc, w = atoms(m)
    keep = mask_fn(loc)
    return PointMasses(tuple(zip(loc[keep], w[keep])))


def check_lattice_cutoff(m: MeasureSpec, params: TruncationParams):
    if isinstance(m, Lattice) and m.cutoff_radius < 2 * params.trust_radius():
        raise ValueError(f"lattice cutoff {m.cutoff_radius} below twice the trust radius "
                         f"{params.trust_radius():.3f}")


def default_lattice(epsilon: float, params: TruncationParams) -> Lattice:
    return Lattice(epsilon, float(math.ceil(2 * params.trust_radius()) + 1))


# ---------------------------------------------------------------------------
# operations


def eval_symbol(s: SymbolSpec, z):
    out = s(z)
    return complex(out) if np.ndim(out) == 0 else out


def translate_symbol(s: SymbolSpec, w: complex) -> SymbolSpec:
    if isinstance(s, (GeneralizedGaussian, GaussianSum, BallIndicator)):
        return s.translate(w)
    raise TypeError(f"translation of {type(s).__name__} is not supported")


def q_beta(beta: float) -> GeneralizedGaussian:
    """(beta/pi) exp(-beta |z|^2)."""
    return GeneralizedGaussian(math.log(beta / math.pi), 0, 0, -beta)


def shift_symbol(w: complex, alpha: float) -> GeneralizedGaussian:
    """s_w(z) = exp(alpha|w|^2/2 + 2 i alpha Im(z conj(w)))."""
    w = complex(w)
    return GeneralizedGaussian(0.5 * alpha * abs(w) ** 2, alpha * w.conjugate(), -alpha * w, 0.0)


def _heat_gaussian(g: GeneralizedGaussian, t: float) -> GeneralizedGaussian:
    lam = 1.0 / (4 * t)
    a = lam - g.c3
    return GeneralizedGaussian(
        g.log_amp + math.log(lam / a) + g.c1 * g.c2 / a,
        lam * g.c1 / a,
        lam * g.c2 / a,
        lam * g.c3 / a,
    )


def heat_transform(m, t: float, params: TruncationParams | None = None):
    """Heat transform (4 pi t)^{-1} int exp(-|w - z|^2 / 4t) dm(w).

    Accepts a MeasureSpec or a SymbolSpec (read as a Lebesgue density).
    Atomic measures come back as an exact GaussianSum when they have at most
    ATOM_SUM_LIMIT atoms, otherwise sampled on the default grid of ``params``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if isinstance(m, (Lattice, PointMasses)):
        loc, w = atoms(m)
        lam = 1.0 / (4 * t)
        if loc.size <= ATOM_SUM_LIMIT:
            return GaussianSum(tuple(
                GeneralizedGaussian(math.log(wi * lam / math.pi) - lam * abs(s) ** 2,
                                    lam * s.conjugate(), lam * s, -lam)
                for s, wi in zip(loc, w)))
        if params is None:
            raise ValueError("sampling a large atomic heat transform needs TruncationParams")
        grid = quadrature_grid(params)
        z = grid.points
        vals = np.zeros(z.shape, dtype=complex)
        for s, wi in zip(loc, w):
            vals += wi * lam / math.pi * np.exp(-lam * np.abs(z - s) ** 2)
        return GridSampled(GridField(grid, vals * np.exp(-0.5 * grid.t)[:, None]))
    density = m.density if isinstance(m, Lebesgue) else m
    if isinstance(density, GeneralizedGaussian):
        return _heat_gaussian(density, t)
    if isinstance(density, GaussianSum):
        return GaussianSum(tuple(_heat_gaussian(g, t) for g in density.terms))
    raise TypeError(f"no closed-form heat transform for {type(density).__name__}")


def _search_grid(center: complex, half_width: float, spacing: float) -> np.ndarray:
    n = int(math.ceil(half_width / spacing))
    k = np.arange(-n, n + 1) * spacing
    return (complex(center) + k[:, None] + 1j * k[None, :]).reshape(-1)


def _cell_grid(epsilon: float, spacing: float = 0.25) -> np.ndarray:
    n = max(8, int(math.ceil(epsilon / spacing)))
    k = np.arange(n + 1) * (epsilon / n)
    return (k[:, None] + 1j * k[None, :]).reshape(-1)


def _atomic_search_points(m: MeasureSpec, alpha: float, extra: float = 0.0) -> np.ndarray:
    if isinstance(m, Lattice):
        return _cell_grid(m.epsilon)
    loc, _ = atoms(m)
    lo = np.array([loc.real.min(), loc.imag.min()])
    hi = np.array([loc.real.max(), loc.imag.max()])
    mid = complex(*(0.5 * (lo + hi)))
    half = 0.5 * float(np.max(hi - lo)) + 3 / math.sqrt(alpha) + extra
    return np.concatenate([_search_grid(mid, half, 0.25), loc])


def _gaussian_sum_at(z: np.ndarray, loc: np.ndarray, w: np.ndarray, alpha: float,
                     delta: float | None = None) -> np.ndarray:
    out = np.empty(z.size)
    reach = math.sqrt(80 / alpha)
    for i, zi in enumerate(z):
        d = np.abs(loc - zi)
        keep = d <= reach if delta is None else (d <= max(reach, delta + reach)) & (d >= delta)
        out[i] = np.sum(w[keep] * np.exp(-0.5 * alpha * d[keep] ** 2))
    return out


def carleson_quantities(m: MeasureSpec, r: float, params: TruncationParams) -> tuple[float, float]:
    """(||m||_*, sup_z m(B(z, r))) maximised over a finite search grid.

    Lattices are searched on a refined fundamental cell, other atomic measures
    on a 0.25-spaced grid around the atoms (atom locations included).
    """
    alpha = params.alpha
    if isinstance(m, Lebesgue):
        return _carleson_lebesgue(m, r, params)
    loc, w = atoms(m)
    if loc.size == 0:
        return 0.0, 0.0
    pts = _atomic_search_points(m, alpha)
    star = float(np.max(_gaussian_sum_at(pts, loc, w, alpha)))
    ball = max(float(np.sum(w[np.abs(loc - z) <= r])) for z in pts)
    return star, ball


def _carleson_lebesgue(m: Lebesgue, r: float, params: TruncationParams) -> tuple[float, float]:
    g = m.density
    alpha = params.alpha
    if not isinstance(g, GeneralizedGaussian):
        raise TypeError("Carleson quantities for Lebesgue measures need a GeneralizedGaussian density")
    smooth = _heat_gaussian(g.modulus(), 1 / (2 * alpha))
    centre = -g.c2 / g.c3 if g.c3 < 0 else 0j
    pts = _search_grid(centre, 3 / math.sqrt(alpha) + r, 0.25)
    star = float(np.max(np.abs(smooth(pts)))) * 2 * math.pi / alpha
    ball = 0.0
    mod = g.modulus()
    for z in pts[:: max(1, pts.size // 400)]:
        nodes, wts = disk_rule(z, r, 48, 96)
        ball = max(ball, float(np.sum(wts * np.abs(mod(nodes)))))
    return star, ball


def band_decay(m: MeasureSpec, delta: float, params: TruncationParams) -> float:
    """sup_z of sum over atoms at distance >= delta from z of w exp(-alpha|z - s|^2 / 2)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    loc, w = atoms(m)
    if loc.size == 0:
        return 0.0
    pts = _atomic_search_points(m, params.alpha, extra=delta)
    return float(np.max(_gaussian_sum_at(pts, loc, w, params.alpha, delta=delta)))


# ---------------------------------------------------------------------------
# JSON descriptors


def _cx(v) -> complex:
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(re, im)
    return complex(v)


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _reject_unknown(d: dict, allowed: set[str]):
    extra = set(d) - allowed - {"type"}
    if extra:
        raise ValueError(f"unknown keys in descriptor: {sorted(extra)}")


def symbol_from_dict(d: dict, alpha: float = 1.0) -> SymbolSpec:
    kind = d.get("type")
    if kind == "generalized_gaussian":
        _reject_unknown(d, {"amp", "log_amp", "c1", "c2", "c3"})
        if "amp" in d and "log_amp" in d:
            raise ValueError("give either amp or log_amp, not both")
        log_amp = _cx(d["log_amp"]) if "log_amp" in d else cmath.log(_cx(d.get("amp", 1.0)))
        return GeneralizedGaussian(log_amp, _cx(d.get("c1", 0)), _cx(d.get("c2", 0)), float(d.get("c3", 0)))
    if kind == "gaussian_sum":
        _reject_unknown(d, {"terms"})
        return GaussianSum(tuple(symbol_from_dict(t, alpha) for t in d["terms"]))
    if kind == "ball_indicator":
        _reject_unknown(d, {"center", "radius", "complement"})
        return BallIndicator(_cx(d.get("center", 0)), float(d["radius"]), bool(d.get("complement", False)))
    if kind == "radial_profile":
        _reject_unknown(d, {"rho", "values"})
        return RadialProfile(np.array(d["rho"], dtype=float), np.array([_cx(v) for v in d["values"]]))
    if kind == "q_beta":
        _reject_unknown(d, {"beta", "center"})
        return q_beta(float(d["beta"])).translate(_cx(d.get("center", 0)))
    if kind == "shift_symbol":
        _reject_unknown(d, {"w"})
        return shift_symbol(_cx(d["w"]), alpha)
    raise ValueError(f"unknown symbol type {kind!r}")


def symbol_to_dict(s: SymbolSpec) -> dict:
    if isinstance(s, GeneralizedGaussian):
        return {"type": "generalized_gaussian", "log_amp": _pair(s.log_amp), "c1": _pair(s.c1),
                "c2": _pair(s.c2), "c3": s.c3}
    if isinstance(s, GaussianSum):
        return {"type": "gaussian_sum", "terms": [symbol_to_dict(t) for t in s.terms]}
    if isinstance(s, BallIndicator):
        return {"type": "ball_indicator", "center": _pair(s.center), "radius": s.radius,
                "complement": s.complement}
    if isinstance(s, RadialProfile):
        return {"type": "radial_profile", "rho": s.rho.tolist(), "values": [_pair(v) for v in s.values]}
    raise TypeError(f"{type(s).__name__} has no JSON form")


def measure_from_dict(d: dict, alpha: float = 1.0) -> MeasureSpec:
    kind = d.get("type")
    if kind == "lebesgue":
        _reject_unknown(d, {"density"})
        dens = d.get("density", {"type": "generalized_gaussian"})
        return Lebesgue(symbol_from_dict(dens, alpha))
    if kind == "point_masses":
        _reject_unknown(d, {"atoms"})
        return PointMasses(tuple((_cx(a["location"]), float(a.get("weight", 1.0))) for a in d["atoms"]))
    if kind == "lattice":
        _reject_unknown(d, {"epsilon", "cutoff_radius"})
        return Lattice(float(d["epsilon"]), float(d["cutoff_radius"]))
    raise ValueError(f"unknown measure type {kind!r}")


def measure_to_dict(m: MeasureSpec) -> dict:
    if isinstance(m, Lebesgue):
        return {"type": "lebesgue", "density": symbol_to_dict(m.density)}
    if isinstance(m, PointMasses):
        return {"type": "point_masses",
                "atoms": [{"location": _pair(loc), "weight": w} for loc, w in m.atoms]}
    if isinstance(m, Lattice):
        return {"type": "lattice", "epsilon": m.epsilon, "cutoff_radius": m.cutoff_radius}
    raise TypeError(f"{type(m).__name__} has no JSON form")
