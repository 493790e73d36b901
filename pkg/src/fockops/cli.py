"""Command-line front end: ``fockops validate | run <experiment> | berezin``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import theorems as th
from .core import (
    CoeffVector,
    TruncationParams,
    evaluate_weighted,
    gaussian_moment_check,
    kernel_coeffs,
    quadrature_grid,
    quadrature_gram,
    quadrature_inner_product,
)
from .operators import berezin, polar_samples, toeplitz_from_measure, toeplitz_from_symbol
from .symbols import BallIndicator, PointMasses, default_lattice, measure_from_dict, q_beta, symbol_from_dict

OUT_ENV = "FOCKOPS_OUT_DIR"
EXPERIMENTS = ("thm37", "lem38", "thm39", "lem43", "lem41", "lem26", "lem33", "thm62", "cor63",
               "thm11", "lem12", "sec7", "carleson-audit")
RANDOMIZED = ("lem12", "lem41")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str | None = None
    alpha: float = 1.0
    degree: int = 40
    radial_count: int | None = None
    angular_count: int | None = None
    betas: list | None = None
    epsilons: list | None = None
    deltas: list | None = None
    r_sweep: list | None = None
    ring_radii: list | None = None
    radii: list | None = None
    n_angles: int = 16
    d: float = 1.0
    points: list | None = None
    configs: int = 20
    sep: float = 0.5
    radius: float = 3.0
    v: list | float | None = None
    w: list | float | None = None
    p: float = 4.0
    trials: int = 200
    k_max: int = 32
    exhibit: str | None = None
    measure: dict | None = None
    symbol: dict | None = None
    tolerance: float | None = None
    seed: int | None = None
    out: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**d)
        cfg.params()  # validates alpha and degree early
        if cfg.seed is not None and (not isinstance(cfg.seed, int) or cfg.seed < 0 or cfg.seed >= 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return cfg

    def params(self) -> TruncationParams:
        try:
            return TruncationParams(float(self.alpha), self.degree)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def _cx(v, default: complex) -> complex:
    if v is None:
        return default
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# validate


def validation_suite(params: TruncationParams, radial_count=None, angular_count=None,
                     tol: float = 1e-9, moment_tol: float = 1e-8) -> list[tuple[str, float, float]]:
    """(identity, error, tolerance) for the core quadrature identities."""
    grid = quadrature_grid(params, radial_count, angular_count)
    out = []
    ortho = float(np.abs(quadrature_gram(grid) - np.eye(params.size)).max())
    out.append(("orthonormality", ortho, tol))
    rng = np.random.default_rng(0)
    R = params.trust_radius() / 2
    rep = 0.0
    for _ in range(5):
        c = (rng.standard_normal(params.size) + 1j * rng.standard_normal(params.size)) / np.sqrt(params.size)
        f = CoeffVector(params, c)
        w = complex(*rng.uniform(-R, R, 2)) / math.sqrt(2)
        lhs = quadrature_inner_product(f, kernel_coeffs(params, w), grid)
        rep = max(rep, abs(lhs - evaluate_weighted(f, w)) / f.norm())
    out.append(("reproducing property", rep, tol))
    mom = 0.0
    for s in (-1.0, 0.5, 1.0):
        for z in (0, 0.5, 1 + 1j):
            got, want = gaussian_moment_check(params, s, z, grid)
            mom = max(mom, abs(got - want) / want)
    out.append(("gaussian moment", mom, moment_tol))
    return out


def cmd_validate(cfg: RunConfig) -> int:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = validation_suite(cfg.params(), cfg.radial_count, cfg.angular_count)
    print(f"{'identity':<24}{'error':>14}{'tolerance':>12}  status")
    failed = None
    for name, err, tol in rows:
        ok = err <= tol
        print(f"{name:<24}{err:>14.3e}{tol:>12.1e}  {'ok' if ok else 'FAIL'}")
        if not ok and failed is None:
            failed = name
    if failed:
        print(f"validation failed: {failed}")
        return 1
    print("all identities pass")
    return 0


# ---------------------------------------------------------------------------
# run


def _exhibit(cfg: RunConfig, params: TruncationParams, default: str):
    name = cfg.exhibit or default
    for ex in th.gallery(params):
        if ex.name == name:
            return ex.operator, name
    if cfg.symbol is not None:
        return toeplitz_from_symbol(symbol_from_dict(cfg.symbol, params.alpha), params), "symbol"
    raise ConfigError(f"unknown exhibit {name!r}")


def _tol(cfg: RunConfig) -> dict:
    return {} if cfg.tolerance is None else {"tol": float(cfg.tolerance)}


def run_experiment(name: str, cfg: RunConfig) -> th.ExperimentReport:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    if name in RANDOMIZED and cfg.seed is None:
        raise ConfigError(f"experiment {name} is randomized and needs a seed")
    P = cfg.params()
    a = P.alpha
    half = P.trust_radius() / 2
    measure = measure_from_dict(cfg.measure, a) if cfg.measure else None
    symbol = symbol_from_dict(cfg.symbol, a) if cfg.symbol else None
    if name == "thm37":
        return th.run_thm37(measure or PointMasses(((0, 1.0),)), cfg.betas or [4, 40, 400, 4000], P, **_tol(cfg))
    if name == "lem38":
        return th.run_lem38(cfg.betas or [1, 10, 100, 1000], P, **_tol(cfg))
    if name == "thm39":
        return th.run_thm39(_cx(cfg.v, 0.5), _cx(cfg.w, -0.5j), cfg.betas or [10, 100, 1000], P, **_tol(cfg))
    if name == "lem43":
        return th.run_lem43(cfg.epsilons or [1.0, 0.5, 0.3], P)
    if name == "carleson-audit":
        return th.run_carleson_audit(cfg.epsilons or [0.25, 0.5, 1.0], P)
    if name == "lem41":
        pts = [_cx(z, 0) for z in cfg.points] if cfg.points is not None else [0, 1.0]
        return th.run_lem41_interpolation(pts, P, configs=cfg.configs, sep=cfg.sep, radius=cfg.radius,
                                          seed=cfg.seed, **_tol(cfg))
    if name == "lem26":
        return th.run_lem26_band(measure or default_lattice(0.5, P), cfg.deltas or [1, 2, 4, 6], P, **_tol(cfg))
    if name == "lem33":
        return th.run_lem33_partition(symbol or q_beta(1.0), cfg.deltas or [1, 2, 4], P)
    if name == "thm62":
        A, label = _exhibit(cfg, P, "weighted_shift_1")
        r = cfg.r_sweep or np.linspace(0.5, half, 5).tolist()
        return th.run_thm62_profiles(A, r, cfg.d, P, label)
    if name == "cor63":
        A, _ = _exhibit(cfg, P, "one_tensor_one")
        radii = cfg.ring_radii or [x for x in (0.0, 1.0, 2.0, 3.0) if x <= half]
        return th.run_cor63(A, CoeffVector.basis(P, 0), radii, P, cfg.n_angles)
    if name == "thm11":
        return th.run_thm11_dichotomy(P)
    if name == "lem12":
        return th.run_lem12_interpolation_bound(th.gallery(P), cfg.p, P, cfg.trials, cfg.seed)
    if name == "sec7":
        return th.run_sec7_spectral(symbol or BallIndicator(0, 1), cfg.k_max, P, **_tol(cfg))
    raise AssertionError(name)


PLOT_AXES = {
    "thm37": ("beta", ["error"]),
    "lem38": ("beta", ["error_normalized", "error_unnormalized"]),
    "thm39": ("beta", ["error", "lem38_error"]),
    "lem43": ("epsilon", ["sigma_min", "density_scale"]),
    "carleson-audit": ("epsilon", ["star", "ball_sup", "toeplitz_norm"]),
    "lem41": ("k0", ["norm"]),
    "lem26": ("delta", ["norm", "band_decay"]),
    "lem33": ("delta", ["relative_error"]),
    "thm62": ("r", ["alpha_profile", "beta_profile", "gamma_profile"]),
    "cor63": ("radius", ["max_norm"]),
    "sec7": ("k", ["root_norm"]),
}


def report_series(rep: th.ExperimentReport):
    if rep.name == "thm11":
        radii = rep.extra["radii"]
        return [(f"{k} berezin", radii, v["berezin"]) for k, v in rep.extra["profiles"].items()], "r"
    if rep.name == "lem12":
        idx = list(range(len(rep.rows)))
        return [(y, idx, rep.column(y)) for y in ("lower_full", "bound_truncated", "bound_untruncated")], "exhibit"
    x, ys = PLOT_AXES[rep.name]
    xs = [float(v) for v in rep.column(x)]
    return [(y, xs, [float(v) for v in rep.column(y)]) for y in ys], x


def svg_plot(series, title: str, xlabel: str, log_y: bool = True, width: int = 640, height: int = 400) -> str:
    """A self-contained line plot; nonpositive values are dropped on a log axis."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    pts_all = []
    cleaned = []
    for label, xs, ys in series:
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if math.isfinite(float(y)) and (not log_y or float(y) > 0)]
        if log_y:
            pts = [(x, math.log10(y)) for x, y in pts]
        cleaned.append((label, pts))
        pts_all.extend(pts)
    left, right, top, bottom = 70, 20, 40, 50
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    if pts_all:
        x0, x1 = min(p[0] for p in pts_all), max(p[0] for p in pts_all)
        y0, y1 = min(p[1] for p in pts_all), max(p[1] for p in pts_all)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1
        pw, ph = width - left - right, height - top - bottom

        def sx(x):
            return left + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return top + (1 - (y - y0) / (y1 - y0)) * ph

        lines.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for i in range(5):
            yv = y0 + (y1 - y0) * i / 4
            lab = f"1e{yv:.1f}" if log_y else f"{yv:.3g}"
            lines.append(f'<text x="{left - 5}" y="{sy(yv) + 4:.1f}" text-anchor="end">{lab}</text>')
            xv = x0 + (x1 - x0) * i / 4
            lines.append(f'<text x="{sx(xv):.1f}" y="{top + ph + 15}" text-anchor="middle">{xv:.3g}</text>')
        lines.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
        for i, (label, pts) in enumerate(cleaned):
            c = colors[i % len(colors)]
            if pts:
                path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
                lines.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
                for x, y in pts:
                    lines.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{c}"/>')
            lines.append(f'<text x="{left + 10}" y="{top + 15 + 14 * i}" fill="{c}">{label}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def resolve_out(flag: str | None, cfg: RunConfig) -> Path:
    return Path(flag or os.environ.get(OUT_ENV) or cfg.out or "fockops-out")


def write_artifacts(outdir: Path, files: dict[str, str]):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (outdir / name).write_text(text)


def cmd_run(name: str, cfg: RunConfig, out: Path) -> int:
    rep = run_experiment(name, cfg)
    series, xlabel = report_series(rep)
    manifest = rep.manifest(seed=cfg.seed, tolerance=cfg.tolerance, config=dataclasses.asdict(cfg))
    write_artifacts(out / name, {
        "manifest.json": json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        "rows.csv": rep.rows_csv(),
        "profile.svg": svg_plot(series, name, xlabel),
    })
    print(rep.rows_csv(), end="")
    for a in rep.assertions:
        print(f"[{'pass' if a.passed else 'FAIL'}] {a.name}: {a.value:.6g} (tolerance {a.tolerance:.3g})")
    return 0 if rep.passed else 1


def cmd_berezin(cfg: RunConfig, out: Path) -> int:
    P = cfg.params()
    if (cfg.symbol is None) == (cfg.measure is None):
        raise ConfigError("give exactly one of symbol or measure")
    try:
        if cfg.symbol is not None:
            A = toeplitz_from_symbol(symbol_from_dict(cfg.symbol, P.alpha), P)
        else:
            A = toeplitz_from_measure(measure_from_dict(cfg.measure, P.alpha), P)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid descriptor: {exc}") from exc
    radii = cfg.radii or np.linspace(0, P.trust_radius() / 2, 9).tolist()
    field_ = berezin(A, polar_samples(radii, cfg.n_angles))
    r, prof = field_.radial_profile()
    write_artifacts(out / "berezin", {
        "berezin.csv": field_.to_csv(),
        "profile.svg": svg_plot([("sup |B|", r, prof)], "Berezin profile", "r"),
    })
    print("r,sup_abs_B")
    for x, y in zip(r, prof):
        print(f"{x:.6g},{y:.12g}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fockops", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help=f"output directory (else ${OUT_ENV}, config 'out', ./fockops-out)")
        p.add_argument("--seed", type=int, help="seed for randomized searches")
        p.add_argument("--degree", type=int, help="truncation degree D")
        p.add_argument("--alpha", type=float, help="Gaussian weight parameter")

    common(sub.add_parser("validate", help="check quadrature and reproducing identities"))
    p = sub.add_parser("run", help="run an experiment and write manifest, CSV and SVG")
    p.add_argument("experiment", help=", ".join(EXPERIMENTS))
    common(p)
    p = sub.add_parser("berezin", help="Berezin transform of a symbol or measure descriptor")
    common(p)
    p.add_argument("--symbol", help="symbol descriptor as a JSON string")
    p.add_argument("--measure", help="measure descriptor as a JSON string")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {"seed": args.seed, "degree": args.degree, "alpha": args.alpha}
        if args.command == "berezin":
            for key in ("symbol", "measure"):
                text = getattr(args, key)
                if text is not None:
                    try:
                        overrides[key] = json.loads(text)
                    except json.JSONDecodeError as exc:
                        raise ConfigError(f"--{key} is not valid JSON: {exc}") from exc
        cfg = load_config(args.config, overrides)
        if args.command == "validate":
            return cmd_validate(cfg)
        out = resolve_out(args.out, cfg)
        if args.command == "run":
            return cmd_run(args.experiment, cfg, out)
        return cmd_berezin(cfg, out)
    except ValueError as exc:  # ConfigError and precondition violations
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
