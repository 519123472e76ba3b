"""Command line front end: config files in, artifacts out.

Commands: decompose, spectrum, llt, furstenberg, selftest.  Every run with
the same config and seed writes byte-identical files; floats go through
repr so the shortest round-trip form is the canonical one.  Exit codes:
0 ok, 2 validation, 3 numerical failure, 4 budget overrun.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import zipfile
from pathlib import Path

import numpy as np

from .config import LLTSettings
from .errors import (
    BudgetError,
    ConfigError,
    ContinuationError,
    NumericalError,
)
from .furstenberg import (
    agmon_check,
    high_mode_decay_curve,
    partial_integration_check,
    smoothness_report,
    stationarity_residual,
    stationary_density,
)
from .group import GroupElement, cartan, iwasawa, norm, random_elements
from .llt import DELTA0_DEFAULT, LLTConfig, LLTLab, walk_eigenfunction
from .measures import ATOM_CAP, AtomicMeasure
from .operators import (
    FourierTruncation,
    assemble_transfer,
    hessian_at_zero,
    lambda_curve,
    select_delta0,
    spectral_summary,
)
from .spherical import (
    PLANCHEREL_CONSTANT,
    PlancherelGrid,
    bandlimited_bump,
    c_inverse_sq,
    gaussian_bump,
    plancherel_grid,
    spherical_function,
)

CACHE_ENV = "HYPWALK_CACHE_DIR"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4

CURVE_STEP = 0.1
CURVE_EXTENT = 2.0


# ---------------------------------------------------------------- parsing

WORD_FACTORIES = {
    "rotation": GroupElement.rotation,
    "dilation": GroupElement.dilation,
    "shear": GroupElement.shear,
}


def parse_group_word(word: str) -> GroupElement:
    """identity | name:value [* name:value ...] with names rotation,
    dilation, shear."""
    word = word.strip()
    if word == "identity":
        return GroupElement.identity()
    out = GroupElement.identity()
    for factor in word.split("*"):
        factor = factor.strip()
        if ":" not in factor:
            raise ConfigError(f"group word factor {factor!r} needs name:value")
        name, _, arg = factor.partition(":")
        name = name.strip()
        if name not in WORD_FACTORIES:
            raise ConfigError(
                f"unknown generator {name!r}; choose from {sorted(WORD_FACTORIES)}"
            )
        try:
            value = float(arg)
        except ValueError as exc:
            raise ConfigError(f"bad generator argument {arg!r}") from exc
        out = out @ WORD_FACTORIES[name](value)
    return out


def parse_matrix(text: str) -> np.ndarray:
    try:
        rows = json.loads(text)
        mat = np.asarray(rows, dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(f"expected a 2x2 matrix like [[1,0],[1,1]], got {text!r}") from exc
    if mat.shape != (2, 2):
        raise ConfigError(f"expected a 2x2 matrix, got shape {mat.shape}")
    return mat


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}") from exc


def _ints(text: str) -> list[int]:
    values = _floats(text)
    out = [int(v) for v in values]
    if any(a != b for a, b in zip(values, out)):
        raise ConfigError(f"expected integers, got {text!r}")
    return out


class Experiment:
    """Validated view of a config file.

    Section accessors raise the validation error naming the missing piece,
    so each command pulls only what it needs and fails before computing.
    """

    def __init__(self, path: str):
        self.path = Path(path)
        if not self.path.is_file():
            raise ConfigError(f"config file {path} not found")
        self.parser = configparser.ConfigParser()
        self.parser.read(self.path)

    def _section(self, name: str):
        if name not in self.parser:
            raise ConfigError(f"missing [{name}] section in {self.path}")
        return self.parser[name]

    def _get(self, section: str, key: str) -> str:
        sec = self._section(section)
        if key not in sec:
            raise ConfigError(f"missing key {key!r} in [{section}]")
        return sec[key]

    def measure(self) -> AtomicMeasure:
        sec = self._section("measure")
        if ("atoms" in sec) == ("generators" in sec):
            raise ConfigError("[measure] needs exactly one of atoms or generators")
        if "atoms" in sec:
            mats = [parse_matrix(part) for part in sec["atoms"].split(";") if part.strip()]
            elements = [GroupElement.from_matrix(m) for m in mats]
        else:
            scale = float(sec.get("scale", "1.0"))
            elements = []
            for word in sec["generators"].split(","):
                word = word.strip()
                if not word:
                    continue
                scaled = "*".join(
                    part if part == "identity"
                    else f"{part.partition(':')[0]}:{float(part.partition(':')[2]) * scale}"
                    for part in word.split("*")
                )
                elements.append(parse_group_word(scaled))
        if not elements:
            raise ConfigError("[measure] lists no atoms")
        if "weights" in sec:
            weights = _floats(sec["weights"])
            if len(weights) != len(elements):
                raise ConfigError(
                    f"{len(weights)} weights for {len(elements)} atoms"
                )
        else:
            weights = [1.0 / len(elements)] * len(elements)
        mu = AtomicMeasure(tuple(zip(elements, weights)))
        if sec.getboolean("symmetrize", fallback=False):
            mu = mu.symmetrize()
        return mu

    def truncation(self) -> FourierTruncation:
        return FourierTruncation(
            int(self._get("operator", "n")), int(self._get("operator", "q"))
        )

    def grid(self) -> PlancherelGrid:
        return plancherel_grid(
            float(self._get("operator", "r_max")),
            int(self._get("operator", "r_nodes")),
        )

    def test_function(self, grid: PlancherelGrid, trunc: FourierTruncation):
        sec = self._section("llt")
        kind = sec.get("f", "gaussian").strip()
        if kind == "gaussian":
            center = parse_group_word(sec.get("center", "identity"))
            return gaussian_bump(float(sec.get("width", "0.7")), center=center)
        if kind == "bandlimited":
            profile = {}
            for part in self._get("llt", "modes").split(","):
                mode, _, amp = part.partition(":")
                profile[int(mode)] = float(amp)
            return bandlimited_bump(
                float(self._get("llt", "band_limit")), profile, grid, trunc
            )
        raise ConfigError(f"unknown test function kind {kind!r}")

    def llt_config(self) -> LLTConfig:
        sec = self._section("llt")
        trunc = self.truncation()
        grid = self.grid()
        return LLTConfig(
            measure=self.measure(),
            f=self.test_function(grid, trunc),
            h0=parse_group_word(sec.get("x0", "identity")),
            n_range=tuple(_ints(self._get("llt", "n_range"))),
            delta0=float(sec.get("delta0", str(DELTA0_DEFAULT))),
            trunc=trunc,
            grid=grid,
            mc_samples=int(sec.get("mc_samples", "100000")),
            seed=int(sec.get("seed", str(LLTSettings().seed))),
        )

    def seed(self) -> int:
        if "llt" in self.parser and "seed" in self.parser["llt"]:
            return int(self.parser["llt"]["seed"])
        return LLTSettings().seed

    def levels(self, trunc: FourierTruncation) -> tuple:
        if "furstenberg" in self.parser and "levels" in self.parser["furstenberg"]:
            return tuple(_ints(self.parser["furstenberg"]["levels"]))
        top = int(math.floor(math.log2(trunc.N)))
        return tuple(range(1, top))

    def out_dir(self) -> Path:
        return Path(self._get("output", "directory"))

    def formats(self) -> set:
        raw = self._section("output").get("formats", "csv, json, svg")
        formats = {part.strip() for part in raw.split(",") if part.strip()}
        unknown = formats - {"csv", "json", "svg"}
        if unknown:
            raise ConfigError(f"unknown output formats {sorted(unknown)}")
        return formats


# ---------------------------------------------------------------- writers


def fmt(value) -> str:
    """Canonical scalar formatting: shortest round-trip, '.' decimal."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")


def svg_plot(
    path: Path,
    series,
    title: str,
    xlabel: str,
    ylabel: str,
    logx: bool = False,
    logy: bool = False,
):
    """Self-contained line plot; series is [(label, xs, ys)]."""
    width, height = 640, 420
    left, right, top, bottom = 70, 20, 36, 48
    palette = ["#1f6f8b", "#c0392b", "#7d8c38", "#6c4f9e"]

    def txf(values, log):
        vals = np.asarray(values, dtype=float)
        if log:
            vals = np.maximum(vals, 1e-300)
            return np.log10(vals)
        return vals

    xs_all = np.concatenate([txf(xs, logx) for _, xs, _ in series])
    ys_all = np.concatenate([txf(ys, logy) for _, _, ys in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y):
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="monospace" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle">{title}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{height / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {height / 2:.1f})">{ylabel}</text>',
        f'<rect x="{left}" y="{top}" width="{width - left - right}" '
        f'height="{height - top - bottom}" fill="none" stroke="#444"/>',
    ]
    for k in range(5):
        tx = x_lo + (x_hi - x_lo) * k / 4
        ty = y_lo + (y_hi - y_lo) * k / 4
        label_x = f"1e{tx:.2f}" if logx else f"{tx:.3g}"
        label_y = f"1e{ty:.2f}" if logy else f"{ty:.3g}"
        out.append(
            f'<text x="{px(tx):.1f}" y="{height - bottom + 16}" '
            f'text-anchor="middle">{label_x}</text>'
        )
        out.append(
            f'<text x="{left - 6}" y="{py(ty) + 4:.1f}" text-anchor="end">{label_y}</text>'
        )
        out.append(
            f'<line x1="{px(tx):.1f}" y1="{height - bottom}" x2="{px(tx):.1f}" '
            f'y2="{height - bottom + 4}" stroke="#444"/>'
        )
        out.append(
            f'<line x1="{left - 4}" y1="{py(ty):.1f}" x2="{left}" '
            f'y2="{py(ty):.1f}" stroke="#444"/>'
        )
    for index, (label, xs, ys) in enumerate(series):
        color = palette[index % len(palette)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(txf(xs, logx), txf(ys, logy))
        )
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{width - right - 6}" y="{top + 16 + 16 * index}" '
            f'text-anchor="end" fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")


# ------------------------------------------------------------------ cache


def cache_dir(args) -> Path:
    if args.cache_dir:
        return Path(args.cache_dir)
    return Path(os.environ.get(CACHE_ENV, "~/.cache/hypwalk")).expanduser()


def _measure_bytes(mu: AtomicMeasure) -> bytes:
    chunks = []
    for g, w in mu.atoms:
        chunks.append(np.asarray(g.mat, dtype=float).tobytes())
        chunks.append(np.float64(w).tobytes())
    return b"".join(chunks)


def cache_key(*parts) -> str:
    digest = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            digest.update(part)
        elif isinstance(part, np.ndarray):
            digest.update(np.ascontiguousarray(part).tobytes())
        else:
            digest.update(repr(part).encode())
        digest.update(b"|")
    return digest.hexdigest()


def _payload_digest(arrays: dict) -> str:
    digest = hashlib.sha256()
    for name in sorted(arrays):
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(arrays[name]).tobytes())
    return digest.hexdigest()


def cache_store(directory: Path, key: str, arrays: dict):
    directory.mkdir(parents=True, exist_ok=True)
    payload = {name: np.asarray(value) for name, value in arrays.items()}
    payload["digest"] = np.array(_payload_digest(payload))
    np.savez(directory / f"{key}.npz", **payload)


def cache_load(directory: Path, key: str) -> dict | None:
    """Entry for the key, or None on miss or detected corruption."""
    path = directory / f"{key}.npz"
    if not path.is_file():
        return None
    try:
        with np.load(path, allow_pickle=False) as handle:
            arrays = {name: handle[name] for name in handle.files}
    except (OSError, ValueError, zipfile.BadZipFile):
        # the zip layer checksums each member, so byte rot surfaces here
        print(
            f"cache entry {path.name} corrupted (hash mismatch); recomputing",
            file=sys.stderr,
        )
        return None
    stored = str(arrays.pop("digest", ""))
    if stored != _payload_digest(arrays):
        print(
            f"cache entry {path.name} corrupted (hash mismatch); recomputing",
            file=sys.stderr,
        )
        return None
    return arrays


# --------------------------------------------------------------- commands


def base_knobs(trunc: FourierTruncation) -> dict:
    return {
        "truncation_modes": trunc.N,
        "quadrature_nodes": trunc.Q,
        "plancherel_constant": PLANCHEREL_CONSTANT,
        "atom_cap": ATOM_CAP,
    }


def cmd_decompose(args) -> int:
    mat = parse_matrix(args.matrix)
    det = float(np.linalg.det(mat))
    g = GroupElement.from_matrix(mat)
    if abs(det - 1.0) > 1e-12:
        print(
            f"input determinant {fmt(det)}; renormalized by det^(-1/2) "
            "to the unimodular representative"
        )
    iwa = iwasawa(g)
    car = cartan(g)
    err_iwa = float(np.abs(iwa.reconstruct().mat - g.mat).max())
    err_car = float(np.abs(car.reconstruct().mat - g.mat).max())
    print(f"iwasawa: theta={fmt(iwa.theta)} t={fmt(iwa.t)} x={fmt(iwa.x)}")
    print(f"  reconstruction error {err_iwa:.3e}")
    print(f"cartan: theta1={fmt(car.theta1)} t={fmt(car.t)} theta2={fmt(car.theta2)}")
    print(f"  reconstruction error {err_car:.3e}")
    print(f"horocycle coordinate H = {fmt(iwa.t)}")
    print(f"matrix norm = {fmt(norm(g))}")
    return EXIT_OK


def _is_rotation_supported(mu: AtomicMeasure) -> bool:
    eye = np.eye(2)
    return all(
        float(np.abs(g.mat.T @ g.mat - eye).max()) < 1e-12 for g, _ in mu.atoms
    )


def _curve_grid(delta0: float) -> list:
    extent = max(CURVE_EXTENT, delta0)
    steps = int(round(extent / CURVE_STEP))
    grid = {round(k * CURVE_STEP, 10) for k in range(-steps, steps + 1)}
    grid |= {round(k * 0.01, 10) for k in (-2, -1, 1, 2)}
    grid |= {delta0, -delta0}
    return sorted(grid)


def cmd_spectrum(args) -> int:
    exp = Experiment(args.config)
    mu = exp.measure()
    trunc = exp.truncation()
    formats = exp.formats()
    out = exp.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    summary = spectral_summary(assemble_transfer(mu, 0.0, trunc))
    payload = {
        "sigma": summary.sigma,
        "gap": summary.gap,
        "second_modulus": summary.ess_proxy,
        "residual": summary.residual,
        "residual_adjoint": summary.residual_adjoint,
        "knobs": base_knobs(trunc),
    }

    if _is_rotation_supported(mu):
        payload["curve"] = None
        payload["curve_note"] = (
            "measure supported in the rotation subgroup: the branch stays at "
            "the frequency-zero value, so no curve or delta0 exists"
        )
        if "json" in formats:
            write_json(out / "spectrum.json", payload)
        print(f"sigma = {fmt(summary.sigma)} (flat branch; curve skipped)")
        return EXIT_OK

    grid = _curve_grid(DELTA0_DEFAULT)
    directory = cache_dir(args)
    key = cache_key(b"curve", _measure_bytes(mu), trunc.N, trunc.Q, tuple(grid))
    cached = None if args.no_cache else cache_load(directory, key)
    if cached is None:
        curve = lambda_curve(mu, grid, trunc)
        delta0 = select_delta0(curve)
        quad = hessian_at_zero(curve)
        arrays = {
            "r": np.asarray([p.r for p in curve.points]),
            "lam_re": np.asarray([p.value.real for p in curve.points]),
            "lam_im": np.asarray([p.value.imag for p in curve.points]),
            "gap": np.asarray([p.gap for p in curve.points]),
            "radius": np.asarray([p.spectral_radius for p in curve.points]),
            "op_norm": np.asarray([p.op_norm for p in curve.points]),
            "scalars": np.asarray([delta0, quad.curvature, quad.inverse_top]),
        }
        if not args.no_cache:
            cache_store(directory, key, arrays)
    else:
        arrays = cached
    delta0, curvature, inverse_top = (float(x) for x in arrays["scalars"])
    rs = arrays["r"]
    moduli = np.hypot(arrays["lam_re"], arrays["lam_im"])

    payload.update(
        {
            "delta0": delta0,
            "curvature": curvature,
            "inverse_top": inverse_top,
            "curve": {
                "points": len(rs),
                "extent": float(np.abs(rs).max()),
                "sup_modulus_away_from_zero": float(moduli[np.abs(rs) >= 1.0].max()),
            },
        }
    )
    payload["knobs"].update(
        {"curve_step": CURVE_STEP, "delta0_selected": delta0}
    )

    if "json" in formats:
        write_json(out / "spectrum.json", payload)
    if "csv" in formats:
        write_csv(
            out / "lambda_curve.csv",
            ["r", "lambda_re", "lambda_im", "lambda_abs", "gap", "spectral_radius", "op_norm"],
            [
                (
                    rs[i],
                    arrays["lam_re"][i],
                    arrays["lam_im"][i],
                    moduli[i],
                    arrays["gap"][i],
                    arrays["radius"][i],
                    arrays["op_norm"][i],
                )
                for i in range(len(rs))
            ],
        )
    if "svg" in formats:
        svg_plot(
            out / "spectrum.svg",
            [("|lambda(r)|", rs, moduli), ("gap(r)", rs, arrays["gap"])],
            "top eigenvalue branch",
            "r",
            "value",
        )
    print(
        f"sigma = {fmt(summary.sigma)}  gap = {fmt(summary.gap)}  "
        f"delta0 = {fmt(delta0)}"
    )
    return EXIT_OK


def cmd_llt(args) -> int:
    exp = Experiment(args.config)
    cfg = exp.llt_config()
    formats = exp.formats()
    out = exp.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    lab = LLTLab(cfg)
    report = lab.run_convergence(include_mc=not args.no_mc)
    capped = [rec.n for rec in report.records if rec.exact is None]
    for n in capped:
        print(f"n = {n}: exact convolution support over the atom cap; recorded without it")

    if "csv" in formats:
        write_csv(
            out / "llt_convergence.csv",
            [
                "n", "exact", "mc", "mc_stderr", "fourier", "high", "low",
                "err_exact", "err_mc", "err_fourier",
            ],
            [
                (
                    rec.n, rec.exact, rec.mc, rec.mc_stderr, rec.fourier,
                    rec.high, rec.low, rec.err_exact, rec.err_mc, rec.err_fourier,
                )
                for rec in report.records
            ],
        )
        curve = lab.curve
        write_csv(
            out / "lambda_curve.csv",
            ["r", "lambda_re", "lambda_im", "lambda_abs", "gap"],
            [
                (p.r, p.value.real, p.value.imag, abs(p.value), p.gap)
                for p in curve.points
            ],
        )
        point0 = lab.frequency_point(0.0)
        ts = np.linspace(-4.0, 4.0, 161)
        psi = [
            walk_eigenfunction(point0, GroupElement.dilation(float(t)), cfg.trunc)
            for t in ts
        ]
        write_csv(
            out / "psi0_profile.csv",
            ["t", "psi0_re", "psi0_im"],
            [(t, v.real, v.imag) for t, v in zip(ts, psi)],
        )

    if "json" in formats:
        payload = {
            "rhs": {
                "direct": report.rhs.direct,
                "boundary": report.rhs.boundary,
                "relative_gap": report.rhs.relative_gap,
            },
            "slope": report.slope,
            "slope_low_frequency": report.slope_low_frequency,
            "high_rate": report.high_rate,
            "high_amplitude": report.high_amplitude,
            "bound_ratio": report.bound_ratio,
            "err_times_n": list(report.err_times_n),
            "local_slopes": list(report.local_slopes),
            "exact_capped": capped,
            "mc_included": not args.no_mc,
            "knobs": {
                **base_knobs(cfg.trunc),
                "r_max": cfg.grid.r_max,
                "r_nodes": len(cfg.grid),
                "delta0": cfg.delta0,
                "mc_samples": cfg.mc_samples,
                "seed": cfg.seed,
                "n_range": list(cfg.n_range),
                "mass_constant": lab.c_mu,
                "sigma": lab.sigma,
            },
        }
        write_json(out / "llt_summary.json", payload)

    if "svg" in formats:
        ns = [rec.n for rec in report.records]
        series = [("|fourier - limit|", ns, [rec.err_fourier for rec in report.records])]
        if not args.no_mc:
            series.append(("|mc - limit|", ns, [rec.err_mc for rec in report.records]))
        exact_pts = [(rec.n, rec.err_exact) for rec in report.records if rec.exact is not None]
        if exact_pts:
            series.append(
                ("|exact - limit|", [p[0] for p in exact_pts], [p[1] for p in exact_pts])
            )
        svg_plot(
            out / "llt_error.svg",
            series,
            "walk average vs limit",
            "n",
            "error",
            logx=True,
            logy=True,
        )
    print(
        f"rhs = {fmt(report.rhs.value)}  slope = {fmt(report.slope)}  "
        f"high rate = {fmt(report.high_rate)}"
    )
    return EXIT_OK


def cmd_furstenberg(args) -> int:
    exp = Experiment(args.config)
    mu = exp.measure()
    trunc = exp.truncation()
    formats = exp.formats()
    out = exp.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    psi = stationary_density(mu, trunc)
    residual = stationarity_residual(psi, mu, test_count=100, seed=exp.seed())
    report = smoothness_report(psi)
    curve = high_mode_decay_curve(mu, trunc, exp.levels(trunc))

    if "csv" in formats:
        theta = trunc.nodes
        write_csv(
            out / "furstenberg_density.csv",
            ["theta", "psi"],
            list(zip(theta, psi.values(theta))),
        )
        write_csv(
            out / "fourier_decay.csv",
            ["level", "block_norm"],
            list(zip(report.levels, report.norms)),
        )
        write_csv(
            out / "highmode_decay.csv",
            ["level", "transfer_norm", "markov_norm"],
            list(zip(curve.levels, curve.transfer_norms, curve.markov_norms)),
        )
    if "json" in formats:
        write_json(
            out / "furstenberg.json",
            {
                "mass": psi.mass,
                "positivity_min": psi.positivity_min,
                "eigenvalue_distance": psi.eigenvalue_distance,
                "stationarity_residual": residual,
                "fitted_s": report.fitted_s,
                "m_class": report.m_class,
                "truncated_fit": report.truncated_fit,
                "first_quarter": curve.first_quarter,
                "first_half": curve.first_half,
                "verdict": {
                    "mass_one": bool(abs(psi.mass - 1.0) <= 1e-8),
                    "positive": bool(psi.positivity_min > 0.0),
                    "stationary": bool(residual <= 1e-8),
                },
                "knobs": {
                    **base_knobs(trunc),
                    "seed": exp.seed(),
                    "levels": list(curve.levels),
                },
            },
        )
    if "svg" in formats:
        theta = trunc.nodes
        svg_plot(
            out / "furstenberg_density.svg",
            [("psi(theta)", theta, psi.values(theta))],
            "stationary boundary density",
            "theta",
            "density",
        )
        positive = [(l, n) for l, n in zip(report.levels, report.norms) if n > 0]
        if positive:
            svg_plot(
                out / "fourier_decay.svg",
                [("block norm", [p[0] for p in positive], [p[1] for p in positive])],
                "dyadic block decay",
                "level",
                "norm",
                logy=True,
            )
    print(
        f"mass = {fmt(psi.mass)}  min = {fmt(psi.positivity_min)}  "
        f"residual = {fmt(residual)}  s = {fmt(report.fitted_s)}"
    )
    return EXIT_OK


def cmd_selftest(args) -> int:
    seed = 20260822
    trunc = FourierTruncation(32, 256)
    rows = []

    def check(name, value, ok):
        rows.append((name, value, bool(ok)))

    rng = np.random.default_rng(seed)
    worst_iwa = worst_car = worst_h = 0.0
    for g in random_elements(rng, 200, 10.0):
        worst_iwa = max(worst_iwa, float(np.abs(iwasawa(g).reconstruct().mat - g.mat).max()))
        worst_car = max(worst_car, float(np.abs(cartan(g).reconstruct().mat - g.mat).max()))
        worst_h = max(worst_h, abs(iwasawa(g).t) - norm(g))
    check("iwasawa round trip", worst_iwa, worst_iwa < 1e-10)
    check("cartan round trip", worst_car, worst_car < 1e-10)
    check("horocycle bounded by norm", worst_h, worst_h <= 1e-12)

    r = 7.3
    gamma_route = c_inverse_sq(r)
    direct = math.pi * r * math.tanh(math.pi * r)
    check("c-function identity", abs(gamma_route - direct), abs(gamma_route - direct) < 1e-10)

    one = spherical_function(0.9, 0.0)
    check("spherical value at identity", abs(one - 1.0), abs(one - 1.0) < 1e-12)

    from .config import default_measure

    mu = default_measure()
    summary = spectral_summary(assemble_transfer(mu, 0.0, trunc))
    check("contraction sigma < 1", summary.sigma, 0.0 < summary.sigma < 1.0)
    check("spectral gap positive", summary.gap, summary.gap > 0.0)

    psi = stationary_density(mu, trunc)
    residual = stationarity_residual(psi, mu, test_count=30, seed=seed)
    check("stationary density mass", psi.mass, abs(psi.mass - 1.0) <= 1e-8)
    check("stationary density positive", psi.positivity_min, psi.positivity_min > 0.0)
    check("stationarity residual", residual, residual <= 1e-8)

    coeffs = rng.normal(size=17) + 1j * rng.normal(size=17)
    left, right = partial_integration_check(coeffs, coeffs)
    scale = max(1.0, abs(left))
    check("partial integration", abs(left - right), abs(left - right) / scale < 1e-10)

    single = np.zeros(9)
    single[6] = 1.0
    probe = agmon_check(single)
    check("single-mode interpolation", probe.ratio, probe.ratio <= 1.0 + 1e-12)

    directory = cache_dir(args)
    key = cache_key(b"selftest-probe", seed)
    payload = np.arange(8.0)
    cache_store(directory, key, {"x": payload})
    ok_load = cache_load(directory, key) is not None
    # byte rot inside a member: caught by the zip checksum on read
    blob = bytearray((directory / f"{key}.npz").read_bytes())
    offset = blob.find(payload.tobytes())
    blob[offset + 9] ^= 0xFF
    (directory / f"{key}.npz").write_bytes(bytes(blob))
    rot_detected = cache_load(directory, key) is None
    # internally consistent file with the wrong content digest: only the
    # embedded hash can catch this one
    np.savez(directory / f"{key}.npz", x=payload, digest=np.array("stale"))
    stale_detected = cache_load(directory, key) is None
    (directory / f"{key}.npz").unlink()
    check("cache round trip", ok_load, ok_load)
    check("cache byte rot detected", rot_detected, rot_detected)
    check("cache stale digest detected", stale_detected, stale_detected)

    width = max(len(name) for name, _, _ in rows)
    failures = 0
    for name, value, ok in rows:
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        shown = fmt(value) if not isinstance(value, bool) else str(value)
        print(f"{name:<{width}}  {status}  {shown}")
    print(f"seed = {seed}")
    if failures:
        print(f"{failures} of {len(rows)} checks failed", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"all {len(rows)} checks passed")
    return EXIT_OK


# ------------------------------------------------------------------ entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypwalk",
        description="local limit theorem laboratory for hyperbolic random walks",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="upper bound on worker threads (the pipeline is single-threaded; "
        "results never depend on this)",
    )
    parser.add_argument(
        "--cache-dir", default=None, help=f"cache directory (or ${CACHE_ENV})"
    )
    parser.add_argument(
        "--no-cache", action="store_true", help="bypass the operator cache"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="Iwasawa and Cartan factors of a matrix")
    p.add_argument("matrix", help="2x2 matrix, e.g. '[[1,0],[1,1]]'")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("spectrum", help="transfer spectrum and eigenvalue curve")
    p.add_argument("config")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("llt", help="walk averages against the limit, three routes")
    p.add_argument("config")
    p.add_argument("--no-mc", action="store_true", help="skip the sampling route")
    p.set_defaults(func=cmd_llt)

    p = sub.add_parser("furstenberg", help="stationary boundary density and decay")
    p.add_argument("config")
    p.set_defaults(func=cmd_furstenberg)

    p = sub.add_parser("selftest", help="fast invariant table")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContinuationError as exc:
        print(f"numerical error at r = {exc.r}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    raise SystemExit(main())
