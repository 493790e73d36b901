"""Finite-dimensional experiments for the approximation and essential-norm results.

Each ``run_*`` function returns an ExperimentReport: a table of rows over a
parameter sweep plus a list of machine-checked assertions.  Limits are replaced
by monotone sweeps with a tolerance on the final value.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import CoeffVector, DegenerateInputError, TruncationParams, kernel_coeffs, weighted_basis
from .operators import (
    Annulus,
    Box,
    OperatorMatrix,
    berezin,
    compactness_index,
    gram_sum_norm,
    inf_norm_schur,
    op_norm_2,
    op_norm_p_lower,
    polar_samples,
    rank_one,
    region_gram,
    restricted_norm,
    shift_safe_degree,
    toeplitz_from_measure,
    toeplitz_from_symbol,
    weighted_shift,
)
from .symbols import (
    BallIndicator,
    GeneralizedGaussian,
    Lattice,
    MeasureSpec,
    PointMasses,
    SymbolSpec,
    atoms,
    band_decay,
    carleson_quantities,
    default_lattice,
    heat_transform,
    q_beta,
    restrict_atoms,
    shift_symbol,
)

FIXTURE_FILE = "fixtures.json"
REGRESSION_SLACK = 0.10


@dataclass
class Assertion:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": _jsonable(self.value),
                "tolerance": _jsonable(self.tolerance), "detail": self.detail}


@dataclass
class ExperimentReport:
    name: str
    params: TruncationParams
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    assertions: list[Assertion] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def trust_radius(self) -> float:
        return self.params.trust_radius()

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, value: float, tolerance: float, detail: str = ""):
        self.assertions.append(Assertion(name, bool(passed), float(value), float(tolerance), detail))

    def failures(self) -> list[Assertion]:
        return [a for a in self.assertions if not a.passed]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def manifest(self, **more) -> dict:
        d = {
            "experiment": self.name,
            "params": {"alpha": self.params.alpha, "degree": self.params.degree, "dim": self.params.dim},
            "trust_radius": self.trust_radius,
            "columns": self.columns,
            "assertions": [a.to_dict() for a in self.assertions],
            "passed": self.passed,
            "fixture_version": fixtures_version(),
            "extra": _jsonable(self.extra),
        }
        d.update(_jsonable(more))
        return d


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (complex, np.complexfloating)):
        return f"{format(v.real, '.17g')}{format(v.imag, '+.17g')}j"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def _nonincreasing(xs, slack: float = 0.0) -> bool:
    return all(b <= a * (1 + slack) + 1e-300 for a, b in zip(xs, xs[1:]))


# ---------------------------------------------------------------------------
# regression fixtures


def _fixture_path() -> Path:
    return Path(str(resources.files("fockops") / "data" / FIXTURE_FILE))


def load_fixtures() -> dict:
    path = _fixture_path()
    if not path.exists():
        return {"version": None, "values": {}}
    return json.loads(path.read_text())


def fixtures_version():
    return load_fixtures().get("version")


def _regression(report: ExperimentReport, key: str, measured: float, mode: str = "close"):
    """Compare with a committed value: 'close' (within 10%) or 'upper' (at most 110%)."""
    values = load_fixtures()["values"]
    if key not in values:
        report.check(f"regression:{key}", False, measured, float("nan"), "fixture missing")
        return
    ref = float(values[key])
    if mode == "upper":
        ok = measured <= ref * (1 + REGRESSION_SLACK)
    else:
        ok = abs(measured - ref) <= REGRESSION_SLACK * abs(ref)
    report.check(f"regression:{key}", ok, measured, ref, f"{mode}, slack {REGRESSION_SLACK:.0%}")


# ---------------------------------------------------------------------------
# heat-transform approximation of T_nu


def run_thm37(m: MeasureSpec, betas, params: TruncationParams, tol: float = 1e-2) -> ExperimentReport:
    """||(pi/alpha) T_{heat(m, 1/beta)} - T_m|| over an increasing beta sweep."""
    rep = ExperimentReport("thm37", params, ["beta", "error", "entry00"])
    target = toeplitz_from_measure(m, params)
    scale = math.pi / params.alpha
    for beta in betas:
        approx = scale * toeplitz_from_symbol(heat_transform(m, 1 / beta, params), params)
        rep.rows.append([float(beta), op_norm_2(approx - target), approx.entries[0, 0].real])
    errs = rep.column("error")
    rep.check("error strictly decreasing", _strictly_decreasing(errs), errs[-1], 0.0)
    rep.check("final error", errs[-1] <= tol, errs[-1], tol)
    return rep


def run_lem38(betas, params: TruncationParams, tol: float = 2e-3) -> ExperimentReport:
    """T_{q_beta} -> 1 (x) 1, with and without the (pi/alpha) factor."""
    rep = ExperimentReport("lem38", params, ["beta", "error_normalized", "error_unnormalized", "entry00"])
    a = params.alpha
    one = rank_one(CoeffVector.basis(params, 0), CoeffVector.basis(params, 0))
    entry_err = 0.0
    for beta in betas:
        T = toeplitz_from_symbol(q_beta(beta), params)
        N = (math.pi / a) * T
        e00 = N.entries[0, 0].real
        entry_err = max(entry_err, abs(e00 - beta / (a + beta)))
        rep.rows.append([float(beta), op_norm_2(N - one), op_norm_2(T - one), e00])
    errs = rep.column("error_normalized")
    raw = rep.column("error_unnormalized")[-1]
    gap = abs(1 - a / math.pi)
    rep.check("normalized error strictly decreasing", _strictly_decreasing(errs), errs[-1], 0.0)
    rep.check("normalized final error", errs[-1] <= tol, errs[-1], tol)
    rep.check("entry00 = beta/(alpha+beta)", entry_err <= 1e-8, entry_err, 1e-8)
    # T - 1(x)1 = (alpha/pi)[(pi/alpha)T - 1(x)1] + (alpha/pi - 1) 1(x)1
    bound = a / math.pi * errs[-1] + 1e-12
    rep.check("unnormalized error near |1 - alpha/pi|", abs(raw - gap) <= bound, abs(raw - gap), bound,
              f"gap {gap:.6g}")
    rep.extra["unnormalized_gap"] = gap
    return rep


def run_thm39(v: complex, w: complex, betas, params: TruncationParams,
              tol: float = 1e-3) -> ExperimentReport:
    """Approximation of K(., v) (x) K(., w) by e^{alpha(|v|^2+|w|^2)/2} C(v) (pi/alpha) T_{q_beta} C(-w)."""
    v, w = complex(v), complex(w)
    R = params.trust_radius() / 2
    if max(abs(v), abs(w)) > R:
        raise ValueError("v and w must lie within half the trust radius")
    a = params.alpha
    factor = math.exp(0.5 * a * (abs(v) ** 2 + abs(w) ** 2))
    Cv = weighted_shift(v, params)
    Cmw = weighted_shift(w, params).adjoint()
    target = rank_one(kernel_coeffs(params, v, normalized=False), kernel_coeffs(params, w, normalized=False))
    one = rank_one(CoeffVector.basis(params, 0), CoeffVector.basis(params, 0))
    rep = ExperimentReport("thm39", params, ["beta", "error", "error_normalized", "lem38_error", "difference"])
    for beta in betas:
        N = (math.pi / a) * toeplitz_from_symbol(q_beta(beta), params)
        err = op_norm_2(factor * (Cv @ N @ Cmw) - target)
        ref = op_norm_2(N - one)
        rep.rows.append([float(beta), err, err / factor, ref, abs(err / factor - ref)])
    errs = rep.column("error")
    diff = max(rep.column("difference"))
    rep.check("error strictly decreasing", _strictly_decreasing(errs), errs[-1], 0.0)
    rep.check("unitary invariance", diff <= tol, diff, tol)
    rep.extra.update({"v": v, "w": w, "factor": factor})
    return rep


# ---------------------------------------------------------------------------
# lattice frames and Fock-Carleson quantities


def lattice_frame_bounds(epsilon: float, params: TruncationParams) -> tuple[float, float]:
    """Extreme eigenvalues of T_{nu_epsilon} on the block of degrees <= D/2."""
    T = toeplitz_from_measure(default_lattice(epsilon, params), params).entries
    m = params.degree // 2 + 1
    lam = np.linalg.eigvalsh(T[:m, :m])
    return float(lam[0]), float(lam[-1])


def run_carleson_audit(epsilons, params: TruncationParams, r: float = 1.0) -> ExperimentReport:
    """Ratios of ||nu||_*, sup nu(B(z, r)) and ||T_nu|| across lattice spacings."""
    rep = ExperimentReport("carleson-audit", params,
                           ["epsilon", "star", "ball_sup", "toeplitz_norm", "star_ratio", "ball_ratio"])
    for eps in epsilons:
        lat = default_lattice(eps, params)
        star, ball = carleson_quantities(lat, r, params)
        tn = op_norm_2(toeplitz_from_measure(lat, params))
        rep.rows.append([float(eps), star, ball, tn, star / tn, ball / tn])
    ratios = rep.column("star_ratio") + rep.column("ball_ratio")
    c = max(max(x, 1 / x) for x in ratios)
    rep.extra["band_constant"] = c
    rep.check("ratios finite and positive", all(x > 0 and math.isfinite(x) for x in ratios), c, 0.0)
    _regression(rep, "carleson_band_constant", c, mode="upper")
    return rep


def run_lem43(epsilons, params: TruncationParams, audit_epsilons=(0.25, 0.5, 1.0)) -> ExperimentReport:
    """Invertibility of the lattice frame operator on the interior block."""
    rep = ExperimentReport("lem43", params, ["epsilon", "sigma_min", "sigma_max", "condition", "density_scale"])
    for eps in epsilons:
        lo, hi = lattice_frame_bounds(eps, params)
        rep.rows.append([float(eps), lo, hi, hi / lo if lo > 0 else float("inf"),
                         math.pi / (params.alpha * eps**2)])
    order = np.argsort(rep.column("epsilon"))[::-1]
    sig = [rep.column("sigma_min")[i] for i in order]
    rep.check("sigma_min positive", min(sig) > 0, min(sig), 0.0)
    rep.check("sigma_min increasing as epsilon decreases", all(b > a for a, b in zip(sig, sig[1:])),
              sig[-1], 0.0)
    for eps, s in zip(rep.column("epsilon"), rep.column("sigma_min")):
        key = f"lem43_sigma_min_eps{eps:g}_a{params.alpha:g}_D{params.degree}"
        if key in load_fixtures()["values"]:
            _regression(rep, key, s)
    if audit_epsilons:
        audit = run_carleson_audit(audit_epsilons, params)
        rep.assertions.extend(audit.assertions)
        rep.extra["carleson_audit"] = {"columns": audit.columns, "rows": audit.rows}
    return rep


def lattice_frame_oracle(epsilon: float, params: TruncationParams) -> float:
    """sigma_min of the interior block, assembled from plain monomials (no log-domain basis)."""
    lat = default_lattice(epsilon, params)
    loc, w = atoms(lat)
    m = params.degree // 2 + 1
    a = params.alpha
    k = np.arange(m)
    fact = np.array([math.factorial(i) for i in k], dtype=float)
    E = loc[:, None] ** k * np.sqrt(a**k / fact) * np.exp(-0.5 * a * np.abs(loc) ** 2)[:, None]
    T = (E.conj().T * w) @ E
    return float(np.linalg.eigvalsh(T)[0])


# ---------------------------------------------------------------------------
# interpolation


def separated_points(n: int, sep: float, radius: float, rng: np.random.Generator,
                     max_tries: int = 10000) -> np.ndarray:
    pts: list[complex] = []
    for _ in range(max_tries):
        if len(pts) == n:
            break
        z = radius * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - p) >= sep for p in pts):
            pts.append(z)
    if len(pts) < n:
        raise DegenerateInputError(f"could not place {n} points with separation {sep}")
    return np.array(pts)


def interpolant(points, k0: int, params: TruncationParams) -> tuple[CoeffVector, float, float]:
    """Minimal-norm g in the truncated space with g(w_i) = delta_{i, k0}.

    Returns (g, ||g||, Gram condition number).  Solved through the normalized
    kernel Gram H_ij = <k_j, k_i>.
    """
    pts = np.asarray(points, dtype=complex)
    E = weighted_basis(params, pts)  # row i: coefficients of k_{w_i}, conjugated
    H = E @ E.conj().T
    cond = float(np.linalg.cond(H))
    if cond > 1e12:
        raise DegenerateInputError(f"kernel Gram condition {cond:.3g} exceeds 1e12")
    b = np.zeros(pts.size, dtype=complex)
    b[k0] = math.exp(-0.5 * params.alpha * abs(pts[k0]) ** 2)
    c = np.linalg.solve(H, b)
    g = CoeffVector(params, E.conj().T @ c)
    return g, g.norm(), cond


def run_lem41_interpolation(points, params: TruncationParams, configs: int = 0, n_points: int = 8,
                            sep: float = 0.5, radius: float = 3.0, seed: int | None = None,
                            tol: float = 1e-8) -> ExperimentReport:
    """Bounded interpolation of delta data, for ``points`` and optional random configurations."""
    from .core import evaluate

    rep = ExperimentReport("lem41", params, ["config", "k0", "norm", "residual", "gram_condition"])

    def solve_all(cfg, pts):
        for k0 in range(len(pts)):
            g, nrm, cond = interpolant(pts, k0, params)
            target = np.zeros(len(pts))
            target[k0] = 1
            res = float(np.max(np.abs(evaluate(g, np.asarray(pts)) - target)))
            rep.rows.append([cfg, k0, nrm, res, cond])

    if points is not None and len(points):
        solve_all(0, np.asarray(points, dtype=complex))
    if configs:
        if seed is None:
            raise ValueError("random configurations need a seed")
        if radius + 1 > params.trust_radius():
            raise ValueError("radius + 1 must not exceed the trust radius")
        rng = np.random.default_rng(seed)
        for c in range(1, configs + 1):
            solve_all(c, separated_points(n_points, sep, radius, rng))
    res = max(rep.column("residual"))
    rep.check("interpolation residual", res <= tol, res, tol)
    if configs:
        # the maximum has a heavy tail across random draws, so the committed
        # constant is tied to the seed that recorded it
        worst = max(r[2] for r in rep.rows if r[0] > 0)
        rep.extra["max_norm"] = worst
        rep.check("max norm finite", math.isfinite(worst), worst, float("inf"))
        key = f"lem41_max_norm_sep{sep:g}_r{radius:g}_n{n_points}_c{configs}_seed{seed}"
        if key in load_fixtures()["values"]:
            _regression(rep, key, worst, mode="upper")
    return rep


# ---------------------------------------------------------------------------
# localization


def band_operator_norm(m: MeasureSpec, delta: float, params: TruncationParams, rings=None) -> float:
    """Norm of sum_j M_{chi F_j} T_{chi K_j nu} with K_j the points at distance > delta from F_j.

    By default F_j = {j <= |z| < j+1}, the last one unbounded, covering every
    atom; ``rings`` gives an explicit list of disjoint (r0, r1) annuli instead.
    """
    if rings is None:
        loc, _ = atoms(m)
        reach = max(np.abs(loc).max() if loc.size else 0.0, 1.5 * params.trust_radius())
        J = int(math.ceil(reach))
        rings = [(float(j), float(j + 1) if j < J else math.inf) for j in range(J + 1)]
    pieces = []
    for r0, r1 in rings:
        K = restrict_atoms(m, lambda s, r0=r0, r1=r1: (np.abs(s) < r0 - delta) | (np.abs(s) > r1 + delta))
        if not K.atoms:
            continue
        pieces.append((region_gram(Annulus(r0, r1), params), toeplitz_from_measure(K, params).entries))
    return gram_sum_norm(pieces)


def run_lem26_band(m: MeasureSpec, deltas, params: TruncationParams, tol: float = 1e-3,
                   rings=None) -> ExperimentReport:
    """Off-band pieces of T_nu vanish as the band width delta grows.

    The Schur-type bound ||S||^2 <= 2 band_decay(delta) ||T_nu|| follows from
    Cauchy-Schwarz on the kernel of S and is checked row by row.
    """
    rep = ExperimentReport("lem26", params, ["delta", "norm", "band_decay", "schur_bound"])
    tn = op_norm_2(toeplitz_from_measure(m, params))
    for d in deltas:
        bd = band_decay(m, d, params)
        rep.rows.append([float(d), band_operator_norm(m, d, params, rings), bd, math.sqrt(2 * bd * tn)])
    norms, bands = rep.column("norm"), rep.column("band_decay")
    rep.check("norm nonincreasing", _nonincreasing(norms), norms[-1], 0.0)
    rep.check("band decay nonincreasing", _nonincreasing(bands), bands[-1], 0.0)
    worst = max(n - b for n, b in zip(norms, rep.column("schur_bound")))
    rep.check("norm within Schur bound", worst <= 1e-12, worst, 1e-12)
    if norms[0] > 0:
        rep.check("norm final / initial", norms[-1] <= tol * norms[0], norms[-1] / norms[0], tol)
    if bands[0] > 0:
        rep.check("band final / initial", bands[-1] <= tol * bands[0], bands[-1] / bands[0], tol)
    return rep


def partition_error(A: OperatorMatrix, m: MeasureSpec, delta: float, single_cell: bool = False,
                    with_partition_check: bool = False):
    """||A T_nu - sum_j M_{chi F_j} A T_{chi G_j nu}|| for the box partition of half-side delta.

    F_j are squares of half-side delta centered on 2 delta Z^2 and G_j their
    dilates of half-side 2 delta.  Squares beyond the radius where the basis
    has no mass are dropped; the partition of unity is checked on request.
    """
    params = A.params
    T = toeplitz_from_measure(m, params).entries
    if single_cell:
        return 0.0, 0.0
    D, a = params.degree, params.alpha
    R_eff = math.sqrt((D + 10 * math.sqrt(D) + 40) / a)
    n = int(math.ceil(R_eff / (2 * delta))) + 1
    pieces = []
    total = np.zeros_like(T)
    loc, _ = atoms(m)
    for ix in range(-n, n + 1):
        for iy in range(-n, n + 1):
            c = 2 * delta * complex(ix, iy)
            if abs(c) - delta * math.sqrt(2) > R_eff:
                continue
            Q = region_gram(Box(c.real - delta, c.real + delta, c.imag - delta, c.imag + delta), params)
            total += Q
            G = restrict_atoms(m, lambda s, c=c: (np.abs((s - c).real) <= 2 * delta)
                               & (np.abs((s - c).imag) <= 2 * delta))
            TG = toeplitz_from_measure(G, params).entries if G.atoms else 0 * T
            pieces.append((Q, A.entries @ (T - TG)))
    err = gram_sum_norm(pieces)
    pu = float(np.abs(total - np.eye(params.size)).max())
    return err, pu


def run_lem33_partition(symbol_for_A: SymbolSpec, delta_sweep, params: TruncationParams,
                        epsilon0: float = 0.5, tol_fraction: float = 0.05) -> ExperimentReport:
    rep = ExperimentReport("lem33", params, ["delta", "error", "relative_error", "partition_defect"])
    A = toeplitz_from_symbol(symbol_for_A, params)
    nu = default_lattice(epsilon0, params)
    ref = op_norm_2(A @ toeplitz_from_measure(nu, params))
    for d in delta_sweep:
        err, pu = partition_error(A, nu, d)
        rep.rows.append([float(d), err, err / ref, pu])
    errs = rep.column("error")
    rep.check("error strictly decreasing", _strictly_decreasing(errs), errs[-1], 0.0)
    pu = max(rep.column("partition_defect"))
    rep.check("boxes partition unity", pu <= 1e-8, pu, 1e-8)
    rel = rep.column("relative_error")[-1]
    rep.check("final relative error", rel <= tol_fraction, rel, tol_fraction)
    rep.extra["reference_norm"] = ref
    key = f"lem33_relative_error_delta{delta_sweep[-1]:g}_a{params.alpha:g}_D{params.degree}"
    if key in load_fixtures()["values"]:
        _regression(rep, key, rel, mode="upper")
    return rep


# ---------------------------------------------------------------------------
# essential-norm profiles


def gamma_profile(A: OperatorMatrix, r: float) -> float:
    """||M_{chi B(0,r)^c} A||; at r = 0 this is ||A||."""
    if r <= 0:
        return op_norm_2(A)
    return restricted_norm(A, BallIndicator(0, r, complement=True))


def beta_profile(A: OperatorMatrix, d: float, rho: float, n_angles: int = 8) -> float:
    z = polar_samples([rho], n_angles).reshape(-1)
    return max(restricted_norm(A, BallIndicator(zz, d)) for zz in z)


def alpha_profile(A: OperatorMatrix, r: float, z: complex = 0, epsilon0: float = 0.5) -> float:
    """max ||Af|| / ||f|| over the span of normalized kernels at lattice points in B(z, r).

    The span is orthonormalized by SVD (rank cut 1e-10 relative) since nearby
    kernels are numerically dependent inside the truncated space.
    """
    params = A.params
    loc, _ = atoms(default_lattice(epsilon0, params))
    sel = loc[np.abs(loc - z) < r]
    if sel.size == 0:
        return 0.0
    V = weighted_basis(params, sel).conj().T
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    U = U[:, s > 1e-10 * s[0]]
    return float(np.linalg.norm(A.entries @ U, 2))


def run_thm62_profiles(A: OperatorMatrix, r_sweep, d: float, params: TruncationParams,
                       label: str = "A") -> ExperimentReport:
    R = params.trust_radius() / 2
    if max(r_sweep) > R + 1e-12:
        raise ValueError("r values must lie within half the trust radius")
    rep = ExperimentReport("thm62", params, ["r", "alpha_profile", "beta_profile", "gamma_profile"])
    for r in r_sweep:
        rep.rows.append([float(r), alpha_profile(A, r) if r > 0 else 0.0, beta_profile(A, d, r),
                         gamma_profile(A, r)])
    al = rep.column("alpha_profile")
    rep.check("alpha profile nondecreasing in r", all(b >= a - 1e-12 for a, b in zip(al, al[1:])), al[-1], 0.0)
    rep.extra.update({"label": label, "d": d})
    return rep


def run_cor63(A: OperatorMatrix, f: CoeffVector, ring_radii, params: TruncationParams,
              n_angles: int = 16) -> ExperimentReport:
    """max over ring angles of ||C(z) A C(-z) f|| against |z|."""
    R = params.trust_radius() / 2
    if max(ring_radii) > R + 1e-12:
        raise ValueError("ring radii must lie within half the trust radius")
    if abs(f.norm() - 1) > 1e-9:
        raise ValueError("f must be a unit vector")
    rep = ExperimentReport("cor63", params, ["radius", "max_norm", "min_norm"])
    for rho in ring_radii:
        vals = []
        for z in polar_samples([rho], n_angles).reshape(-1):
            Cz = weighted_shift(z, params)
            vals.append(np.linalg.norm(Cz.entries @ (A.entries @ (Cz.entries.conj().T @ f.coeffs))))
        rep.rows.append([float(rho), float(max(vals)), float(min(vals))])
    return rep


# ---------------------------------------------------------------------------
# compact / non-compact gallery


@dataclass(frozen=True, eq=False)
class Exhibit:
    name: str
    operator: OperatorMatrix
    compact: bool
    inf_estimate: float  # upper estimate of the untruncated operator's F^inf norm


def gaussian_inf_estimate(g: GeneralizedGaussian, alpha: float) -> float:
    """2 sup_z heat(|g|, 1/(2 alpha))(z), an upper bound for ||T_g||_{inf -> inf}."""
    if not g.is_bounded():
        raise ValueError("symbol is unbounded")
    h = heat_transform(g.modulus(), 1 / (2 * alpha))
    centre = -h.c2 / h.c3 if h.c3 < 0 else 0j
    return 2 * abs(complex(h(centre)))


SHIFT_W = 0.5 + 0.5j


def gallery(params: TruncationParams) -> list[Exhibit]:
    a = params.alpha
    e0 = CoeffVector.basis(params, 0)
    return [
        Exhibit("one_tensor_one", rank_one(e0, e0), True, 1.0),
        Exhibit("toeplitz_ball", toeplitz_from_symbol(BallIndicator(0, 1), params), True,
                2 * (1 - math.exp(-a / 2))),
        Exhibit("toeplitz_q1", toeplitz_from_symbol(q_beta(1.0), params), True,
                gaussian_inf_estimate(q_beta(1.0), a)),
        Exhibit("identity", OperatorMatrix.identity(params), False, 1.0),
        Exhibit("weighted_shift_1", weighted_shift(1.0, params), False, 1.0),
        Exhibit("toeplitz_shift_symbol", toeplitz_from_symbol(shift_symbol(SHIFT_W, a), params), False, 1.0),
    ]


def berezin_profile(A: OperatorMatrix, radii, n_angles: int = 16) -> np.ndarray:
    return berezin(A, polar_samples(radii, n_angles)).radial_profile()[1]


def run_thm11_dichotomy(params: TruncationParams, n_radii: int = 7) -> ExperimentReport:
    radii = np.linspace(0, params.trust_radius() / 2, n_radii)
    rep = ExperimentReport("thm11", params, ["exhibit", "expected", "berezin_ratio", "gamma_ratio",
                                             "singular_tail_ratio", "verdict"])
    k = params.degree // 2
    profiles = {}
    for ex in gallery(params):
        b = berezin_profile(ex.operator, radii)
        g = np.array([gamma_profile(ex.operator, r) for r in radii])
        sv = compactness_index(ex.operator, k) / op_norm_2(ex.operator)
        if ex.compact:
            b_stat, g_stat = b[-1] / b[0], g[-1] / g[0]
            ok = b_stat < 0.1 and g_stat < 0.1 and sv < 0.1
        else:
            b_stat, g_stat = (b / b[0]).min(), (g / g[0]).min()
            ok = b_stat >= 0.5 and g_stat >= 0.5 and sv >= 0.5
        verdict = "compact" if ok == ex.compact else "non-compact"
        rep.rows.append([ex.name, "compact" if ex.compact else "non-compact", b_stat, g_stat, sv, verdict])
        rep.check(f"dichotomy:{ex.name}", ok, max(b_stat, g_stat), 0.1 if ex.compact else 0.5)
        profiles[ex.name] = {"berezin": b.tolist(), "gamma": g.tolist()}
    rep.extra.update({"radii": radii.tolist(), "profiles": profiles})
    return rep


def run_lem12_interpolation_bound(exhibits, p: float, params: TruncationParams, trials: int = 200,
                                  seed: int = 0, rtol: float = 1e-9) -> ExperimentReport:
    """Check ||A||_p <= ||A||_2^{2/p} ||A||_inf^{1-2/p} with a certified lower bound on the left.

    Two comparisons per operator: the search over the whole truncated space
    against the Schur bound of the truncated matrix, and the search over the
    shift-safe low-degree block against the untruncated operator's estimate.
    """
    if not 2 < p < math.inf:
        raise ValueError("p must lie in (2, inf)")
    theta = 2 / p
    safe = shift_safe_degree(1.0, params)
    rep = ExperimentReport("lem12", params, ["exhibit", "lower_full", "norm2", "schur_inf", "bound_truncated",
                                             "lower_trusted", "inf_estimate", "bound_untruncated"])
    for ex in exhibits:
        A = ex.operator
        n2 = op_norm_2(A)
        lo = op_norm_p_lower(A, p, trials, seed)
        sch = inf_norm_schur(A)
        lo_t = op_norm_p_lower(A, p, trials, seed, max_degree=safe)
        b_t = n2**theta * sch ** (1 - theta)
        b_u = n2**theta * ex.inf_estimate ** (1 - theta)
        rep.rows.append([ex.name, lo, n2, sch, b_t, lo_t, ex.inf_estimate, b_u])
        rep.check(f"truncated bound:{ex.name}", lo <= b_t * (1 + rtol), lo / b_t, 1 + rtol)
        rep.check(f"trusted bound:{ex.name}", lo_t <= b_u * (1 + rtol), lo_t / b_u, 1 + rtol)
    rep.extra.update({"p": p, "trials": trials, "seed": seed, "trusted_degree": safe})
    return rep


def run_sec7_spectral(A, k_max: int, params: TruncationParams, tol: float = 1e-6) -> ExperimentReport:
    """||A^k||^{1/k} against ||A|| and the spectral radius for Hermitian A."""
    if not isinstance(A, OperatorMatrix):
        A = toeplitz_from_symbol(A, params)
    M = A.entries
    n2 = op_norm_2(A)
    if np.abs(M - M.conj().T).max() > 1e-12 * max(n2, 1.0):
        raise ValueError("operator is not Hermitian")
    rep = ExperimentReport("sec7", params, ["k", "root_norm"])
    P = np.eye(M.shape[0], dtype=complex)
    for k in range(1, k_max + 1):
        P = P @ M
        rep.rows.append([k, float(np.linalg.norm(P, 2)) ** (1 / k)])
    radius = float(np.abs(np.linalg.eigvalsh(M)).max())
    last = rep.rows[-1][1]
    rep.check("root norm converges to norm", abs(last - n2) <= tol, abs(last - n2), tol)
    rep.check("norm equals spectral radius", abs(n2 - radius) <= tol, abs(n2 - radius), tol)
    rep.extra.update({"norm": n2, "spectral_radius": radius})
    return rep


# ---------------------------------------------------------------------------
# fixtures


LEM41_SEED = 20240601


def _exact_interpolant_norm(points, k0: int, alpha: float) -> float:
    """sqrt(b^H H^{-1} b) with the untruncated normalized kernel Gram."""
    w = np.asarray(points, dtype=complex)
    H = np.exp(alpha * (w[:, None] * w.conj()[None, :] - 0.5 * np.abs(w[:, None]) ** 2
                        - 0.5 * np.abs(w[None, :]) ** 2))
    b = np.zeros(w.size, dtype=complex)
    b[k0] = math.exp(-0.5 * alpha * abs(w[k0]) ** 2)
    return float(math.sqrt(np.vdot(b, np.linalg.solve(H, b)).real))


def regenerate_fixtures(path: Path | None = None, version: int = 1) -> dict:
    """One-time oracle run that records the regression constants."""
    values = {}
    P = TruncationParams(1.0, 40)
    for eps in (1.0, 0.5, 0.3):
        values[f"lem43_sigma_min_eps{eps:g}_a1_D40"] = lattice_frame_oracle(eps, P)
    audit = run_carleson_audit((0.25, 0.5, 1.0), P)
    values["carleson_band_constant"] = audit.extra["band_constant"]
    rng = np.random.default_rng(LEM41_SEED)
    worst = 0.0
    for _ in range(20):
        pts = separated_points(8, 0.5, 3.0, rng)
        worst = max(worst, max(_exact_interpolant_norm(pts, k, P.alpha) for k in range(len(pts))))
    values[f"lem41_max_norm_sep0.5_r3_n8_c20_seed{LEM41_SEED}"] = worst
    P30 = TruncationParams(1.0, 30)
    A = toeplitz_from_symbol(q_beta(1.0), P30)
    nu = default_lattice(0.5, P30)
    ref = op_norm_2(A @ toeplitz_from_measure(nu, P30))
    values["lem33_relative_error_delta4_a1_D30"] = partition_error(A, nu, 4.0)[0] / ref
    data = {"version": version, "values": values}
    path = path or _fixture_path()
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data
