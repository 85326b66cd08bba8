"""Experiment specs, validation, and runners for every CLI kind.

A spec is a JSON object {"kind": ..., <typed fields>}; unknown keys are
rejected and every field is validated before any computation runs.  Each
runner emits CSV data (plus figures on the report paths) into the output
directory and returns the populated run manifest.
"""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..brownmap import Cloud, circle_measure_from_init, spectral_data_from_init
from ..errors import InvalidParameterError, NumericalOverflowError
from ..glflow import (
    InitialCondition,
    atomic_normal_init,
    explicit_init,
    identity_init,
    non_normal_block_init,
    roots_of_unity_init,
)
from ..ncpoly import NCPoly, sd_check
from ..params import params_from_rho_zeta
from ..sampling import RngStream
from ..spectral import eigenvalues, singular_values
from ..regions import (
    pushforward_region,
    support_region,
    write_boundary_csv,
    write_membership_grid,
)
from . import verify
from .plots import render_curves, render_loglog, render_scatter
from .presets import FIGURE_PRESETS
from .reporting import (
    ReportTable,
    RunManifest,
    write_eigenvalue_csv,
    write_matrix_csv,
    write_singular_csv,
)
from .verify import sim_endpoint

__all__ = ["SpecValidationError", "ExperimentSpec", "validate_spec", "run", "KINDS"]

DEFAULT_SEED = 20260810


class SpecValidationError(InvalidParameterError):
    """Raised when an experiment spec fails validation (CLI exit code 2)."""


# --- field converters --------------------------------------------------------

def _as_complex(v, label: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise SpecValidationError(f"{label}: expected a number or [re, im], got {v!r}")


def _as_complex_list(v, label: str) -> list[complex]:
    if not isinstance(v, (list, tuple)):
        raise SpecValidationError(f"{label}: expected a list")
    return [_as_complex(item, label) for item in v]


def _as_init(v, label: str) -> InitialCondition:
    if not isinstance(v, dict) or "kind" not in v:
        raise SpecValidationError(f"{label}: expected an object with a 'kind' key")
    kind = v["kind"]
    extra = set(v) - {"kind", "k", "atoms", "block", "matrix", "conjugate"}
    if extra:
        raise SpecValidationError(f"{label}: unknown init keys {sorted(extra)}")
    conj = bool(v.get("conjugate", False))
    try:
        if kind == "identity":
            return identity_init(conjugate=conj)
        if kind == "roots_of_unity":
            return roots_of_unity_init(int(v["k"]), conjugate=conj)
        if kind == "atomic_normal":
            atoms = [(_as_complex(lam, label), Fraction(str(w))) for lam, w in v["atoms"]]
            return atomic_normal_init(atoms, conjugate=conj)
        if kind == "non_normal_block":
            block = [[_as_complex(e, label) for e in row] for row in v["block"]]
            return non_normal_block_init(block, conjugate=conj)
        if kind == "explicit":
            M = [[_as_complex(e, label) for e in row] for row in v["matrix"]]
            return explicit_init(M, conjugate=conj)
    except (KeyError, ValueError, TypeError, InvalidParameterError) as exc:
        raise SpecValidationError(f"{label}: bad init spec ({exc})") from exc
    raise SpecValidationError(f"{label}: unknown init kind {kind!r}")


def _typed(cast):
    def conv(v, label):
        try:
            return cast(v)
        except (TypeError, ValueError) as exc:
            raise SpecValidationError(f"{label}: {exc}") from exc
    return conv


_INT = _typed(int)
_FLOAT = _typed(float)
_STR = _typed(str)
_BOOL = _typed(bool)
_FLOATS = lambda v, label: [_FLOAT(x, label) for x in v]  # noqa: E731
_INTS = lambda v, label: [_INT(x, label) for x in v]  # noqa: E731

_REQUIRED = object()

_COMMON = {"seed": (_INT, DEFAULT_SEED), "out": (_STR, None)}
_SIM_FIELDS = {
    "n": (_INT, 64),
    "rho": (_FLOAT, 1.0),
    "zeta": (_as_complex, 0j),
    "t": (_FLOAT, 1.0),
    "steps": (_INT, 64),
    "trials": (_INT, 1),
    "init": (_as_init, identity_init()),
}

_SCHEMAS: dict[str, dict] = {
    "simulate": {**_SIM_FIELDS},
    "spectrum": {**_SIM_FIELDS, "z_list": (_as_complex_list, []), "format": (_STR, "svg")},
    "boundary": {
        "init": (_as_init, identity_init()),
        "t": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "h": (_FLOAT, 0.02),
        "window": (_FLOATS, None),
        "cloud_n": (_INT, 1024),
        "cloud_steps": (_INT, 512),
        "format": (_STR, "svg"),
    },
    "figure": {
        "preset": (_STR, _REQUIRED),
        "n": (_INT, None),
        "steps": (_INT, None),
        "h": (_FLOAT, None),
        "cloud_n": (_INT, None),
        "format": (_STR, "svg"),
    },
    "verify-moments": {
        "param_sets": (lambda v, l: [(_FLOAT(r, l), _as_complex(z, l)) for r, z in v],
                       [(1.0, 0j), (2.0, 0.6 + 1j)]),
        "n": (_INT, 32),
        "n_dyadic": (_INT, 3),
        "t": (_FLOAT, 1.0),
        "trials": (_INT, 400),
    },
    "verify-refinement": {
        "n": (_INT, 64),
        "rho": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "t": (_FLOAT, 1.0),
        "levels": (_INTS, [3, 4, 5, 6, 7]),
        "trials": (_INT, 100),
        "format": (_STR, "svg"),
    },
    "verify-affine": {
        "n": (_INT, 128),
        "rho": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "steps": (_INT, 512),
        "ts": (_FLOATS, [0.02, 0.04, 0.08, 0.16, 0.32]),
        "trials": (_INT, 50),
        "format": (_STR, "svg"),
    },
    "verify-inverse": {
        "n": (_INT, 32),
        "rho": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "t": (_FLOAT, 1.0),
        "ks": (_INTS, [16, 64, 256, 1024]),
        "trials": (_INT, 20),
        "format": (_STR, "svg"),
    },
    "verify-ssv": {
        "variant": (_STR, "both"),
        "n_tail": (_INT, 32),
        "tail_trials": (_INT, 2000),
        "deltas": (_FLOATS, [1e-3, 3e-3, 1e-2]),
        "n_mid": (_INT, 256),
        "mid_steps": (_INT, 128),
        "mid_trials": (_INT, 100),
        "z": (_as_complex, 1.0 + 0j),
        "ell_min": (_INT, 20),
        "c": (_FLOAT, 1e-3),
    },
    "verify-wegner": {
        "n": (_INT, 512),
        "t": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "steps": (_INT, 256),
        "trials": (_INT, 6),
        "zs": (_as_complex_list, [0.5 + 0j, 4.0 + 0j]),
        "outside_z": (_as_complex, 4.0 + 0j),
        "eta_points": (_INT, 12),
        "format": (_STR, "svg"),
    },
    "verify-logtail": {
        "n": (_INT, 256),
        "rho": (_FLOAT, 1.0),
        "zeta": (_as_complex, 0j),
        "steps": (_INT, 128),
        "trials": (_INT, 100),
        "z": (_as_complex, 0j),
        "L": (_FLOAT, 10.0),
        "threshold": (_FLOAT, 0.01),
        "quantile": (_FLOAT, 0.95),
    },
    "sd-check": {
        "poly": (_STR, "1.0+0.0i * x1.x1.x1"),
        "i": (_INT, 1),
        "n": (_INT, 32),
        "trials": (_INT, 2000),
        "target": (_FLOAT, None),
    },
}

KINDS = tuple(sorted(_SCHEMAS))


class ExperimentSpec:
    """Validated experiment description."""

    def __init__(self, kind: str, params: dict, echo: dict):
        self.kind = kind
        self.params = params
        self.echo = echo

    def __getitem__(self, key):
        return self.params[key]


def validate_spec(raw: dict) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise SpecValidationError("spec must be a JSON object")
    kind = raw.get("kind")
    if kind not in _SCHEMAS:
        raise SpecValidationError(f"unknown kind {kind!r}; expected one of {list(KINDS)}")
    schema = {**_COMMON, **_SCHEMAS[kind]}
    unknown = set(raw) - set(schema) - {"kind"}
    if unknown:
        raise SpecValidationError(f"unknown keys {sorted(unknown)} for kind {kind!r}")
    params = {}
    for name, (conv, default) in schema.items():
        if name in raw:
            params[name] = conv(raw[name], name)
        elif default is _REQUIRED:
            raise SpecValidationError(f"missing required field {name!r} for kind {kind!r}")
        else:
            params[name] = default
    return ExperimentSpec(kind=kind, params=params, echo=dict(raw))


# --- runners ------------------------------------------------------------------

def _ext(fmt: str) -> str:
    if fmt not in ("svg", "png"):
        raise SpecValidationError(f"format must be svg or png, got {fmt!r}")
    return fmt


def _run_simulate(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    params_from_rho_zeta(p["rho"], p["zeta"])  # fail fast on bad driver parameters
    failures = 0
    for trial in range(p["trials"]):
        stream = RngStream(seed, trial)
        manifest.streams.append(trial)
        try:
            B = sim_endpoint(p["rho"], p["zeta"], p["t"], p["steps"], p["n"], stream, p["init"])
        except NumericalOverflowError as exc:
            manifest.failures.append({"trial": trial, "error": str(exc)})
            failures += 1
            continue
        path = out / f"endpoint_trial{trial}.csv"
        write_matrix_csv(path, B)
        manifest.register(path)
    if failures > 0.1 * p["trials"]:
        raise NumericalOverflowError(f"{failures}/{p['trials']} trials failed")


def _run_spectrum(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    clouds, sv_records, failures = [], [], 0
    for trial in range(p["trials"]):
        stream = RngStream(seed, trial)
        manifest.streams.append(trial)
        try:
            B = sim_endpoint(p["rho"], p["zeta"], p["t"], p["steps"], p["n"], stream, p["init"])
        except NumericalOverflowError as exc:
            manifest.failures.append({"trial": trial, "error": str(exc)})
            failures += 1
            continue
        clouds.append(eigenvalues(B).eigenvalues)
        for z in p["z_list"]:
            sv_records.append((trial, z, singular_values(B, z).values))
    if failures > 0.1 * p["trials"]:
        raise NumericalOverflowError(f"{failures}/{p['trials']} trials failed")
    eig_path = out / "eigenvalues.csv"
    write_eigenvalue_csv(eig_path, clouds)
    manifest.register(eig_path)
    if sv_records:
        sv_path = out / "singular_values.csv"
        write_singular_csv(sv_path, sv_records)
        manifest.register(sv_path)
    fig_path = out / f"spectrum.{_ext(p['format'])}"
    render_scatter(fig_path, clouds, title=f"eigenvalues: rho={p['rho']:g}, zeta={p['zeta']:g}, "
                                           f"t={p['t']:g}, N={p['n']}")
    manifest.register(fig_path)


def _boundary_region(init: InitialCondition, t: float, zeta: complex, h: float,
                     window, cloud_n: int, cloud_steps: int, seed: int):
    """Support region at reduced level (t, zeta); deformed boundaries use an
    empirical J cloud simulated at (t, 0) from stream (seed, 1)."""
    if init.kind in ("identity", "roots_of_unity"):
        data = circle_measure_from_init(init)
    else:
        data = spectral_data_from_init(init)
    region = support_region(data, t, h, window=tuple(window) if window else None)
    cloud = None
    if complex(zeta) != 0:
        stream = RngStream(seed, 1)
        B = sim_endpoint(t, 0j, 1.0, cloud_steps, cloud_n, stream, init)
        cloud = Cloud(points=eigenvalues(B).eigenvalues)
        region = pushforward_region(region, cloud, zeta)
    return region, cloud


def _run_boundary(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    region, _cloud = _boundary_region(p["init"], p["t"], p["zeta"], p["h"], p["window"],
                                      p["cloud_n"], p["cloud_steps"], seed)
    manifest.streams.append(1)
    b_path = out / "boundary.csv"
    write_boundary_csv(region, b_path)
    manifest.register(b_path)
    if region.is_grid:
        m_path = out / "membership.bin"
        write_membership_grid(region, m_path)
        manifest.register(m_path)
    fig_path = out / f"boundary.{_ext(p['format'])}"
    render_scatter(fig_path, [], boundaries=region.boundary,
                   title=f"support boundary: t={p['t']:g}, zeta={p['zeta']:g}")
    manifest.register(fig_path)


def _run_figure(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    preset = FIGURE_PRESETS.get(p["preset"])
    if preset is None:
        raise SpecValidationError(
            f"unknown preset {p['preset']!r}; available: {sorted(FIGURE_PRESETS)}")
    n = p["n"] or preset.n
    steps = p["steps"] or preset.steps
    h = p["h"] or preset.h
    cloud_n = p["cloud_n"] or n

    stream = RngStream(seed, 0)
    manifest.streams.append(0)
    B = sim_endpoint(preset.t, preset.zeta, 1.0, steps, n, stream, preset.init)
    cloud = eigenvalues(B).eigenvalues
    eig_path = out / "eigenvalues.csv"
    write_eigenvalue_csv(eig_path, [cloud])
    manifest.register(eig_path)

    region, _ = _boundary_region(preset.init, preset.t, preset.zeta, h, None,
                                 cloud_n, steps, seed)
    if complex(preset.zeta) != 0:
        manifest.streams.append(1)
    b_path = out / "boundary.csv"
    write_boundary_csv(region, b_path)
    manifest.register(b_path)
    if region.is_grid:
        m_path = out / "membership.bin"
        write_membership_grid(region, m_path)
        manifest.register(m_path)

    highlights = []
    if preset.highlight_init:
        pts = np.exp(2j * np.pi * np.arange(preset.init.k) / preset.init.k)
        highlights.append(pts)
    fig_path = out / f"{preset.name}.{_ext(p['format'])}"
    render_scatter(fig_path, [cloud], boundaries=region.boundary, highlights=highlights,
                   title=f"{preset.name}: (t, zeta) = ({preset.t:g}, {preset.zeta:g}), N={n}")
    manifest.register(fig_path)


def _run_verify_moments(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    table = ReportTable()
    for idx, (rho, zeta) in enumerate(p["param_sets"]):
        chk = verify.moment_check(rho, zeta, p["n"], p["n_dyadic"], p["t"],
                                  p["trials"], seed + idx, workers=workers)
        manifest.streams.extend(range(p["trials"]))
        table.add(f"ts_gram_moment_rho{rho:g}_zeta{zeta:g}", chk.mc_mean, chk.exact,
                  4.0 * chk.se, chk.passed)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)


def _run_verify_refinement(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    from ..glflow import refine_gap_sq_exact

    p = spec.params
    fit = verify.refinement_fit(p["rho"], p["zeta"], p["n"], p["t"], p["levels"],
                                p["trials"], seed, workers=workers)
    manifest.streams.extend(range(p["trials"]))
    table = ReportTable()
    for lvl, g in zip(fit.levels, fit.mean_gaps):
        exact_rms = math.sqrt(refine_gap_sq_exact(p["rho"], p["zeta"], lvl, p["t"]))
        table.add(f"mean_gap_n{lvl}", g, exact_rms, exact_rms, g <= exact_rms * 2.0)
    table.add("log2_slope_mean_gap", fit.slope, -0.5, 0.15, abs(fit.slope + 0.5) <= 0.15)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)
    fig = out / f"refinement.{_ext(p['format'])}"
    render_curves(fig, list(fit.levels), {"mean gap": list(fit.mean_gaps)},
                  xlabel="level n", ylabel="mean ||B_n - B_{n-1}||_2",
                  title=f"refinement rate (log2 slope {fit.slope:.3f})", logy=True)
    manifest.register(fig)


def _run_verify_affine(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    fit = verify.affine_fit(p["rho"], p["zeta"], p["n"], p["steps"], p["ts"],
                            p["trials"], seed, workers=workers)
    manifest.streams.extend(range(p["trials"]))
    table = ReportTable()
    for t, m in zip(fit.ts, fit.medians):
        table.add(f"median_deviation_t{t:g}", m, float("nan"), float("nan"), True)
    table.add("loglog_slope", fit.slope, 1.0, 0.2, abs(fit.slope - 1.0) <= 0.2)
    table.add("monotone_medians", float(fit.monotone), 1.0, 0.0, fit.monotone)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)
    fig = out / f"affine.{_ext(p['format'])}"
    render_loglog(fig, fit.ts, fit.medians, slope=1.0, xlabel="t",
                  ylabel="median ||B(t) - I - W(t)||",
                  title=f"single-increment deviation (slope {fit.slope:.3f})")
    manifest.register(fig)


def _run_verify_inverse(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    ks, medians = verify.inverse_medians(p["rho"], p["zeta"], p["n"], p["t"],
                                         p["ks"], p["trials"], seed, workers=workers)
    manifest.streams.extend(range(p["trials"]))
    decreasing = all(a > b for a, b in zip(medians, medians[1:]))
    table = ReportTable()
    for k, m in zip(ks, medians):
        table.add(f"median_defect_k{k}", m, float("nan"), float("nan"), True)
    table.add("strictly_decreasing", float(decreasing), 1.0, 0.0, decreasing)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)
    fig = out / f"inverse.{_ext(p['format'])}"
    render_loglog(fig, ks, medians, xlabel="steps k", ylabel="median ||B C - I||",
                  title="inverse-walk defect")
    manifest.register(fig)


def _run_verify_ssv(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    if p["variant"] not in ("both", "smin-tail", "intermediate"):
        raise SpecValidationError(f"unknown variant {p['variant']!r}")
    table = ReportTable()
    if p["variant"] in ("both", "smin-tail"):
        rows = verify.ginibre_smin_tail(p["n_tail"], p["tail_trials"], p["deltas"],
                                        seed, workers=workers)
        manifest.streams.extend(range(p["tail_trials"]))
        for delta, p_hat, bound, se in rows:
            table.add(f"smin_tail_delta{delta:g}", p_hat, bound, 4.0 * se,
                      p_hat <= bound + 4.0 * se)
    if p["variant"] in ("both", "intermediate"):
        frac = verify.intermediate_sv_fraction(1.0, 0j, p["n_mid"], p["mid_steps"],
                                               p["mid_trials"], p["z"], p["ell_min"],
                                               p["c"], seed + 1, workers=workers)
        manifest.streams.extend(range(p["mid_trials"]))
        table.add("intermediate_sv_fraction", frac, 0.99, 0.0, frac >= 0.99)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)


def _run_verify_wegner(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    prof = verify.wegner_profile(p["t"], p["zeta"], p["n"], p["steps"], p["trials"],
                                 p["zs"], seed, n_eta=p["eta_points"], workers=workers)
    manifest.streams.extend(range(p["trials"]))
    table = ReportTable()
    table.add("max_abs_mean_transform", prof.max_abs(), 20.0, 0.0, prof.max_abs() <= 20.0)
    zo = complex(p["outside_z"])
    ratio = prof.low_decade_ratio(zo)
    table.add(f"low_decade_ratio_z{zo:g}", ratio, 2.0, 0.0, ratio <= 2.0)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)
    fig = out / f"wegner.{_ext(p['format'])}"
    render_curves(fig, prof.etas, {f"z={z:g}": -prof.means[z] for z in prof.means},
                  xlabel="eta", ylabel="-mean transform", logx=True, logy=True,
                  title="small-scale resolvent profile")
    manifest.register(fig)


def _run_verify_logtail(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    frac, masses = verify.logtail_fraction(p["rho"], p["zeta"], p["n"], p["steps"],
                                           p["trials"], p["z"], p["L"], p["threshold"],
                                           seed, workers=workers)
    manifest.streams.extend(range(p["trials"]))
    table = ReportTable()
    table.add("logtail_below_threshold_fraction", frac, p["quantile"], 0.0,
              frac >= p["quantile"])
    table.add("logtail_max_mass", float(masses.max()), float("nan"), float("nan"), True)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)


def _run_sd_check(spec, out: Path, seed: int, workers: int, manifest: RunManifest):
    p = spec.params
    Q = NCPoly.parse(p["poly"])
    res = sd_check(Q, p["i"], p["n"], p["trials"], RngStream(seed, 0))
    manifest.streams.append(0)
    table = ReportTable()
    tol = 4.0 * (res.lhs_se + res.rhs_se)
    table.add("sd_lhs_mean", abs(res.lhs_mean), abs(res.rhs_mean), tol, res.consistent())
    if p["target"] is not None:
        table.add("sd_lhs_vs_target", abs(res.lhs_mean), p["target"], 4.0 * res.lhs_se,
                  abs(res.lhs_mean - p["target"]) <= 4.0 * res.lhs_se)
        table.add("sd_rhs_vs_target", abs(res.rhs_mean), p["target"], 4.0 * res.rhs_se,
                  abs(res.rhs_mean - p["target"]) <= 4.0 * res.rhs_se)
    path = out / "report.csv"
    table.write(path)
    manifest.register(path)


_RUNNERS = {
    "simulate": _run_simulate,
    "spectrum": _run_spectrum,
    "boundary": _run_boundary,
    "figure": _run_figure,
    "verify-moments": _run_verify_moments,
    "verify-refinement": _run_verify_refinement,
    "verify-affine": _run_verify_affine,
    "verify-inverse": _run_verify_inverse,
    "verify-ssv": _run_verify_ssv,
    "verify-wegner": _run_verify_wegner,
    "verify-logtail": _run_verify_logtail,
    "sd-check": _run_sd_check,
}


def run(raw_spec: dict, out_dir=None, seed: int | None = None,
        workers: int = 1) -> RunManifest:
    """Validate and execute one experiment; returns the written manifest."""
    spec = validate_spec(raw_spec)
    if seed is None:
        seed = spec.params.get("seed", DEFAULT_SEED)
    out = Path(out_dir if out_dir is not None else (spec.params.get("out") or "."))
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(spec=spec.echo, seed=int(seed))
    with manifest.time_section(spec.kind):
        _RUNNERS[spec.kind](spec, out, int(seed), int(workers), manifest)
    manifest.write(out / "run_manifest.json")
    return manifest
