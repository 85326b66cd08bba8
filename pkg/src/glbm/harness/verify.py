"""Quantitative verification cores.

Each function here computes one of the verify-kind statistics from library
primitives and returns a plain record; the CLI runners turn these into
report CSVs and the acceptance suite asserts on them directly.  All trial
loops use per-trial streams (seed, trial) and deterministic reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from ..glflow import (
    endpoint_from_increments,
    refine_gap,
    sample_coupled,
    sample_increments,
    second_moment_dyadic,
    simulate_endpoint,
    simulate_inverse,
    step,
    identity_init,
)
from ..params import SimConfig, TimeGrid, params_from_rho_zeta
from ..sampling import RngStream, sample_elliptic_increment, sample_ginibre
from ..spectral import cauchy_from_sigmas, log_tail_mass, singular_values
from .parallel import mean_and_se, parallel_mc

__all__ = [
    "MomentCheck",
    "moment_check",
    "refinement_fit",
    "RefinementFit",
    "affine_fit",
    "AffineFit",
    "inverse_medians",
    "ginibre_smin_tail",
    "intermediate_sv_fraction",
    "wegner_profile",
    "WegnerProfile",
    "logtail_fraction",
    "sim_endpoint",
    "fit_slope",
]


def sim_endpoint(rho: float, zeta: complex, t: float, steps: int, N: int,
                 stream: RngStream, init=None) -> np.ndarray:
    """One endpoint of the multiplicative flow under an explicit stream."""
    cfg = SimConfig(N=N, params=params_from_rho_zeta(rho, zeta),
                    grid=TimeGrid(t_final=t, steps=steps), seed=stream.seed)
    return simulate_endpoint(cfg, init if init is not None else identity_init(), stream)


def _quorum(res, trials: int):
    """Abort when more than 10% of trials failed; otherwise keep going."""
    from ..errors import NumericalOverflowError

    if len(res.failures) > 0.1 * trials:
        raise NumericalOverflowError(
            f"{len(res.failures)}/{trials} trials failed: {res.failures[0].error}")
    return res


def fit_slope(xs, ys) -> float:
    """Least-squares slope of ys against xs."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    return float(np.polyfit(xs, ys, 1)[0])


# --- exact second-moment identity -------------------------------------------

@dataclass(frozen=True)
class MomentCheck:
    rho: float
    zeta: complex
    mc_mean: float
    se: float
    exact: float

    @property
    def z_score(self) -> float:
        return abs(self.mc_mean - self.exact) / self.se

    @property
    def passed(self) -> bool:
        return self.z_score <= 4.0


def _moment_trial(cfg, trial: int, stream: RngStream) -> float:
    rho, zeta, n_dyadic, t, N = cfg
    steps = int(math.floor(t * 2 ** n_dyadic))
    B = sim_endpoint(rho, zeta, steps * 2.0 ** -n_dyadic, steps, N, stream)
    return float((np.abs(B) ** 2).mean() * B.shape[0])


def moment_check(rho: float, zeta: complex, N: int, n_dyadic: int, t: float,
                 trials: int, seed: int, workers: int = 1) -> MomentCheck:
    """MC mean of ts[B B*] for the dyadic level-n walk against its exact
    finite-N product formula."""
    task = partial(_moment_trial, (rho, complex(zeta), n_dyadic, t, N))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    mean, se = mean_and_se(res.results)
    return MomentCheck(rho=rho, zeta=complex(zeta), mc_mean=mean, se=se,
                       exact=second_moment_dyadic(rho, zeta, n_dyadic, t))


# --- dyadic refinement rate --------------------------------------------------

@dataclass(frozen=True)
class RefinementFit:
    levels: tuple[int, ...]
    mean_gaps: tuple[float, ...]
    slope: float


def _refinement_trial(cfg, trial: int, stream: RngStream) -> np.ndarray:
    rho, zeta, t, levels, N = cfg
    params = params_from_rho_zeta(rho, zeta)
    coupled = sample_coupled(params, t, max(levels), N, stream)
    return np.array([refine_gap(coupled, params, t, n) for n in levels])


def refinement_fit(rho: float, zeta: complex, N: int, t: float, levels, trials: int,
                   seed: int, workers: int = 1) -> RefinementFit:
    """Mean coupled gap ||B_n - B_{n-1}||_2 per level and its log2 slope."""
    levels = tuple(int(n) for n in levels)
    task = partial(_refinement_trial, (rho, complex(zeta), t, levels, N))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    gaps = np.vstack(res.results)
    means = tuple(mean_and_se(gaps[:, k])[0] for k in range(len(levels)))
    slope = fit_slope(levels, np.log2(means))
    return RefinementFit(levels=levels, mean_gaps=means, slope=slope)


# --- single-increment deviation scaling --------------------------------------

@dataclass(frozen=True)
class AffineFit:
    ts: tuple[float, ...]
    medians: tuple[float, ...]
    slope: float

    @property
    def monotone(self) -> bool:
        return all(a < b for a, b in zip(self.medians, self.medians[1:]))


def _affine_trial(cfg, trial: int, stream: RngStream) -> np.ndarray:
    rho, zeta, ts, steps, N = cfg
    params = params_from_rho_zeta(rho, zeta)
    eye = np.eye(N, dtype=np.complex128)
    prods = [eye.copy() for _ in ts]
    sums = [np.zeros((N, N), dtype=np.complex128) for _ in ts]
    # one unit-variance increment per step drives all horizons (scaled by
    # sqrt(dt)), a common-random-numbers coupling that preserves each
    # marginal law
    for _ in range(steps):
        base = sample_elliptic_increment(params, 1.0, N, stream)
        for m, t in enumerate(ts):
            dt = t / steps
            dW = math.sqrt(dt) * base
            prods[m] = step(prods[m], params, dW, dt)
            sums[m] += dW
    return np.array([np.linalg.norm(prods[m] - eye - sums[m], 2) for m in range(len(ts))])


def affine_fit(rho: float, zeta: complex, N: int, steps: int, ts, trials: int,
               seed: int, workers: int = 1) -> AffineFit:
    """Median operator-norm deviation ||B(t) - I - W(t)|| across horizons,
    with its log-log slope in t."""
    ts = tuple(float(t) for t in ts)
    task = partial(_affine_trial, (rho, complex(zeta), ts, steps, N))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    dev = np.vstack(res.results)
    medians = tuple(float(np.median(dev[:, m])) for m in range(len(ts)))
    slope = fit_slope(np.log(ts), np.log(medians))
    return AffineFit(ts=ts, medians=medians, slope=slope)


# --- inverse-process defect ---------------------------------------------------

def _inverse_trial(cfg, trial: int, stream: RngStream) -> np.ndarray:
    rho, zeta, t, ks, N = cfg
    params = params_from_rho_zeta(rho, zeta)
    eye = np.eye(N, dtype=np.complex128)
    out = []
    for k in ks:
        incs = sample_increments(params, t / k, k, N, stream)
        B = endpoint_from_increments(eye, params, incs, t / k)
        cfg_k = SimConfig(N=N, params=params, grid=TimeGrid(t_final=t, steps=k), seed=stream.seed)
        C = simulate_inverse(cfg_k, increments=incs)
        out.append(np.linalg.norm(B @ C - eye, 2))
    return np.array(out)


def inverse_medians(rho: float, zeta: complex, N: int, t: float, ks, trials: int,
                    seed: int, workers: int = 1) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Median ||B_k C_k - I|| over a ladder of step counts k."""
    ks = tuple(int(k) for k in ks)
    task = partial(_inverse_trial, (rho, complex(zeta), t, ks, N))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    d = np.vstack(res.results)
    return ks, tuple(float(np.median(d[:, m])) for m in range(len(ks)))


# --- smallest singular values -------------------------------------------------

def _smin_trial(cfg, trial: int, stream: RngStream) -> float:
    N = cfg
    G = sample_ginibre(N, 1.0, stream)
    return float(np.linalg.svd(G + np.eye(N), compute_uv=False)[-1])


def ginibre_smin_tail(N: int, trials: int, deltas, seed: int,
                      workers: int = 1) -> list[tuple[float, float, float, float]]:
    """Empirical P(sigma_min(G + I) <= delta) per delta with the N^2 delta^2
    bound and the binomial standard error: rows (delta, p_hat, bound, se)."""
    res = _quorum(parallel_mc(trials, partial(_smin_trial, N), seed, workers=workers), trials)
    smin = np.array(res.results)
    rows = []
    for d in deltas:
        p = float((smin <= d).mean())
        se = math.sqrt(p * (1.0 - p) / trials)
        rows.append((float(d), p, float(N * N * d * d), se))
    return rows


def _intermediate_trial(cfg, trial: int, stream: RngStream) -> bool:
    rho, zeta, steps, N, z, ell_min, c = cfg
    B = sim_endpoint(rho, zeta, 1.0, steps, N, stream)
    sig = singular_values(B, z).values
    ells = np.arange(ell_min, N)
    return bool(np.all(sig[N - 1 - ells] >= c * (ells / N) ** 2))


def intermediate_sv_fraction(rho: float, zeta: complex, N: int, steps: int, trials: int,
                             z: complex, ell_min: int, c: float, seed: int,
                             workers: int = 1) -> float:
    """Fraction of trials where sigma_{N-l}(B - z) >= c (l/N)^2 for all l >= ell_min."""
    task = partial(_intermediate_trial, (rho, complex(zeta), steps, N, complex(z), ell_min, c))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    return float(np.mean(res.results))


# --- small-scale resolvent profile ---------------------------------------------

@dataclass(frozen=True)
class WegnerProfile:
    etas: np.ndarray
    means: dict         # z -> mean Im transform per eta (the Wegner bound quantity)
    cauchy_means: dict  # z -> mean full resolvent trace per eta

    def max_abs(self) -> float:
        return max(float(np.abs(v).max()) for v in self.means.values())

    def low_decade_ratio(self, z: complex) -> float:
        """max/min of the mean resolvent-trace modulus over grid points in
        [eta_min, 10 eta_min].

        For z off the singular spectrum the full trace tends to a nonzero
        constant as eta -> 0, so this ratio is the plateau statistic; its
        imaginary part alone vanishes linearly there and cannot plateau.
        """
        sel = self.etas <= 10.0 * self.etas[0]
        v = np.abs(self.cauchy_means[complex(z)][sel])
        return float(v.max() / v.min())


def _wegner_trial(cfg, trial: int, stream: RngStream) -> np.ndarray:
    t_red, zeta, steps, N, zs, etas = cfg
    B = sim_endpoint(t_red, zeta, 1.0, steps, N, stream)
    out = np.empty((len(zs), len(etas)), dtype=np.complex128)
    for a, z in enumerate(zs):
        sig = singular_values(B, z).values
        out[a] = [cauchy_from_sigmas(sig, e) for e in etas]
    return out


def wegner_profile(t_red: float, zeta: complex, N: int, steps: int, trials: int,
                   zs, seed: int, n_eta: int = 12, workers: int = 1) -> WegnerProfile:
    """Mean resolvent traces over trials on a log eta grid in [N^{-2/11}, 1]."""
    zs = tuple(complex(z) for z in zs)
    etas = np.geomspace(N ** (-2.0 / 11.0), 1.0, n_eta)
    task = partial(_wegner_trial, (t_red, complex(zeta), steps, N, zs, etas))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    stacked = np.stack(res.results)
    cauchy = {}
    for a, z in enumerate(zs):
        re = [mean_and_se(stacked[:, a, e].real)[0] for e in range(n_eta)]
        im = [mean_and_se(stacked[:, a, e].imag)[0] for e in range(n_eta)]
        cauchy[z] = np.array(re) + 1j * np.array(im)
    means = {z: cauchy[z].imag.copy() for z in zs}
    return WegnerProfile(etas=etas, means=means, cauchy_means=cauchy)


# --- log uniform integrability ---------------------------------------------------

def _logtail_trial(cfg, trial: int, stream: RngStream) -> float:
    rho, zeta, steps, N, z, L = cfg
    B = sim_endpoint(rho, zeta, 1.0, steps, N, stream)
    return log_tail_mass(B, z, L)


def logtail_fraction(rho: float, zeta: complex, N: int, steps: int, trials: int,
                     z: complex, L: float, threshold: float, seed: int,
                     workers: int = 1) -> tuple[float, np.ndarray]:
    """Fraction of trials with tail mass below the threshold, plus all masses."""
    task = partial(_logtail_trial, (rho, complex(zeta), steps, N, complex(z), L))
    res = _quorum(parallel_mc(trials, task, seed, workers=workers), trials)
    masses = np.array(res.results)
    return float((masses < threshold).mean()), masses
