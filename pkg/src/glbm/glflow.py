"""Multiplicative Brownian flow on invertible complex matrices.

The forward walk right-multiplies affine factors

    B_i = B_{i-1} (I + dW_i + (zeta*dt/2) I),

the inverse walk left-multiplies the mirrored factors, and dyadically
coupled increment ladders support refinement-rate and single-increment
deviation diagnostics.  No renormalization is ever applied to the product;
non-finite entries abort the trial.

The degenerate |zeta| = rho mode steps geodesically (matrix exponential of
each increment, whose second-order term supplies the zeta*dt/2 drift), so
the zeta = -rho walk stays exactly unitary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidUsageError, NumericalOverflowError
from .params import EllipticParams, SimConfig
from .sampling import RngStream, haar_unitary, sample_elliptic_increment

__all__ = [
    "InitialCondition",
    "RealizedInitial",
    "PathState",
    "CoupledIncrements",
    "identity_init",
    "roots_of_unity_init",
    "atomic_normal_init",
    "non_normal_block_init",
    "explicit_init",
    "make_initial",
    "step",
    "simulate_endpoint",
    "walk",
    "simulate_inverse",
    "inverse_defect",
    "sample_increments",
    "endpoint_from_increments",
    "sample_coupled",
    "level_endpoint",
    "refine_gap",
    "affine_deviation",
    "ts_norm",
    "second_moment_exact",
    "second_moment_dyadic",
    "refine_gap_sq_exact",
]


def ts_norm(A: np.ndarray) -> float:
    """Normalized-trace 2-norm sqrt(ts[A A*]) = ||A||_F / sqrt(N)."""
    return float(np.linalg.norm(A) / math.sqrt(A.shape[0]))


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialCondition:
    """Tagged description of the starting matrix.

    kinds: "identity", "roots_of_unity" (field k), "atomic_normal"
    (field atoms: ((lambda, weight), ...) with rational weights),
    "non_normal_block" (2x2 block repeated on the diagonal), "explicit".
    With conjugate=True the realized matrix is conjugated by a Haar
    unitary drawn from the caller's stream.
    """

    kind: str
    k: int | None = None
    atoms: tuple[tuple[complex, Fraction], ...] | None = None
    block: tuple[tuple[complex, complex], tuple[complex, complex]] | None = None
    matrix: np.ndarray | None = None
    conjugate: bool = False


def identity_init(conjugate: bool = False) -> InitialCondition:
    return InitialCondition(kind="identity", conjugate=conjugate)


def roots_of_unity_init(k: int, conjugate: bool = False) -> InitialCondition:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k!r}")
    return InitialCondition(kind="roots_of_unity", k=k, conjugate=conjugate)


def atomic_normal_init(atoms: Sequence[tuple[complex, Fraction | int | str]],
                       conjugate: bool = False) -> InitialCondition:
    packed = tuple((complex(lam), Fraction(w)) for lam, w in atoms)
    if any(w <= 0 for _, w in packed):
        raise InvalidParameterError("atom weights must be positive")
    if sum(w for _, w in packed) != 1:
        raise InvalidParameterError("atom weights must sum to 1 exactly")
    if any(lam == 0 for lam, _ in packed):
        raise InvalidParameterError("atoms must be nonzero (invertible initial condition)")
    return InitialCondition(kind="atomic_normal", atoms=packed, conjugate=conjugate)


def non_normal_block_init(block, conjugate: bool = False) -> InitialCondition:
    arr = np.asarray(block, dtype=np.complex128)
    if arr.shape != (2, 2):
        raise InvalidParameterError(f"block must be 2x2, got shape {arr.shape}")
    packed = tuple(tuple(complex(v) for v in row) for row in arr)
    return InitialCondition(kind="non_normal_block", block=packed, conjugate=conjugate)


def explicit_init(matrix, conjugate: bool = False) -> InitialCondition:
    arr = np.array(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidParameterError(f"matrix must be square, got shape {arr.shape}")
    return InitialCondition(kind="explicit", matrix=arr, conjugate=conjugate)


@dataclass(frozen=True)
class RealizedInitial:
    """A concrete starting matrix with its recorded singular-value bounds."""

    matrix: np.ndarray
    sigma_min: float
    sigma_max: float

    @property
    def bound(self) -> float:
        """Smallest K with K^-1 <= sigma_min <= sigma_max <= K."""
        return max(self.sigma_max, 1.0 / self.sigma_min)


def make_initial(spec: InitialCondition, N: int, rng: RngStream | None = None) -> RealizedInitial:
    """Realize an initial-condition description at dimension N."""
    if spec.kind == "identity":
        B0 = np.eye(N, dtype=np.complex128)
        smin = smax = 1.0
    elif spec.kind == "roots_of_unity":
        k = spec.k
        if N % k != 0:
            raise InvalidParameterError(f"N={N} not divisible by k={k}")
        roots = np.exp(2j * np.pi * np.arange(k) / k)
        B0 = np.diag(np.repeat(roots, N // k))
        smin = smax = 1.0
    elif spec.kind == "atomic_normal":
        lams, counts = [], []
        for lam, w in spec.atoms:
            c = w * N
            if c.denominator != 1:
                raise InvalidParameterError(f"weight {w} times N={N} is not an integer")
            lams.append(lam)
            counts.append(int(c))
        B0 = np.diag(np.repeat(np.asarray(lams, dtype=np.complex128), counts))
        mods = np.abs(np.asarray(lams))
        smin, smax = float(mods.min()), float(mods.max())
    elif spec.kind == "non_normal_block":
        if N % 2 != 0:
            raise InvalidParameterError(f"N={N} not divisible by 2")
        blk = np.asarray(spec.block, dtype=np.complex128)
        B0 = np.kron(np.eye(N // 2), blk)
        s = np.linalg.svd(blk, compute_uv=False)
        smin, smax = float(s[-1]), float(s[0])
    elif spec.kind == "explicit":
        B0 = np.asarray(spec.matrix, dtype=np.complex128)
        if B0.shape != (N, N):
            raise InvalidParameterError(f"explicit matrix has shape {B0.shape}, expected ({N}, {N})")
        B0 = B0.copy()
        s = np.linalg.svd(B0, compute_uv=False)
        smin, smax = float(s[-1]), float(s[0])
    else:
        raise InvalidParameterError(f"unknown initial-condition kind {spec.kind!r}")

    if smin <= 0.0:
        raise InvalidParameterError("initial condition is not invertible (sigma_min = 0)")
    if spec.conjugate:
        if rng is None:
            raise InvalidParameterError("conjugate=True requires an RngStream")
        U = haar_unitary(N, rng)
        B0 = U @ B0 @ U.conj().T
    return RealizedInitial(matrix=B0, sigma_min=smin, sigma_max=smax)


# ---------------------------------------------------------------------------
# Forward / inverse walks
# ---------------------------------------------------------------------------

@dataclass
class PathState:
    """Snapshot of a walk: current product, elapsed time, increments used."""

    B: np.ndarray
    t: float
    increments_consumed: int


def step(B: np.ndarray, params: EllipticParams, dW: np.ndarray, dt: float) -> np.ndarray:
    """One affine factor: B (I + dW + (zeta*dt/2) I).  No renormalization."""
    if B.shape != dW.shape:
        raise InvalidParameterError(f"dimension mismatch: {B.shape} vs {dW.shape}")
    return B * (1.0 + params.zeta * dt / 2.0) + B @ dW


def _expm_increment(params: EllipticParams, N: int, dt: float, rng: RngStream) -> np.ndarray:
    """exp(dW) for a degenerate (b = 0) increment dW = phase*a*X, X Hermitian.

    Computed through the eigendecomposition of X, so the zeta = -rho factor
    is unitary to roundoff.
    """
    from .sampling import sample_gue

    X = sample_gue(N, dt, rng)
    lam, V = np.linalg.eigh(X)
    c = params.phase * params.a
    return (V * np.exp(c * lam)) @ V.conj().T


def _check_finite(B: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(B.view(np.float64))):
        raise NumericalOverflowError(f"non-finite entries in {where}")


def walk(config: SimConfig, init: InitialCondition, rng: RngStream | None = None) -> Iterator[PathState]:
    """Yield the path state after the initial condition and after every step."""
    if rng is None:
        rng = RngStream(config.seed, 0)
    N, params, grid = config.N, config.params, config.grid
    realized = make_initial(init, N, rng)
    B = realized.matrix.copy()
    yield PathState(B=B, t=0.0, increments_consumed=0)
    if grid.t_final == 0.0:
        return
    dt = grid.dt
    for i in range(1, grid.steps + 1):
        if params.degenerate:
            B = B @ _expm_increment(params, N, dt, rng)
        else:
            dW = sample_elliptic_increment(params, dt, N, rng)
            B = step(B, params, dW, dt)
        _check_finite(B, f"step {i}")
        yield PathState(B=B, t=i * dt, increments_consumed=i)


def simulate_endpoint(config: SimConfig, init: InitialCondition,
                      rng: RngStream | None = None) -> np.ndarray:
    """Endpoint B0 * prod_i (I + dW_i + (zeta*dt/2) I) of one trial."""
    state = None
    for state in walk(config, init, rng):
        pass
    return state.B


def sample_increments(params: EllipticParams, dt: float, k: int, N: int,
                      rng: RngStream) -> np.ndarray:
    """Stack of k independent driver increments, shape (k, N, N)."""
    return np.stack([sample_elliptic_increment(params, dt, N, rng) for _ in range(k)])


def endpoint_from_increments(B0: np.ndarray, params: EllipticParams,
                             increments: np.ndarray, dt: float) -> np.ndarray:
    B = B0.copy()
    for dW in increments:
        B = step(B, params, dW, dt)
    _check_finite(B, "endpoint")
    return B


def simulate_inverse(config: SimConfig, increments: np.ndarray | None = None,
                     rng: RngStream | None = None) -> np.ndarray:
    """Left-multiplicative inverse walk C_i = (I - dW_i + (zeta*dt/2) I) C_{i-1}.

    Pass the same increment stack as a forward walk to measure the
    inversion defect ||B C - I||; with increments=None a fresh path is
    drawn from rng.
    """
    N, params, grid = config.N, config.params, config.grid
    if grid.t_final == 0.0:
        return np.eye(N, dtype=np.complex128)
    dt = grid.dt
    if increments is None:
        if rng is None:
            rng = RngStream(config.seed, 0)
        increments = sample_increments(params, dt, grid.steps, N, rng)
    C = np.eye(N, dtype=np.complex128)
    for dW in increments:
        if C.shape != dW.shape:
            raise InvalidParameterError(f"dimension mismatch: {C.shape} vs {dW.shape}")
        C = C * (1.0 + params.zeta * dt / 2.0) - dW @ C
        _check_finite(C, "inverse walk")
    return C


def inverse_defect(config: SimConfig, rng: RngStream | None = None) -> float:
    """Operator norm ||B_k C_k - I|| for one coupled forward/inverse pair."""
    if rng is None:
        rng = RngStream(config.seed, 0)
    N, params, grid = config.N, config.params, config.grid
    incs = sample_increments(params, grid.dt, grid.steps, N, rng)
    B = endpoint_from_increments(np.eye(N, dtype=np.complex128), params, incs, grid.dt)
    C = simulate_inverse(config, increments=incs)
    return float(np.linalg.norm(B @ C - np.eye(N), 2))


# ---------------------------------------------------------------------------
# Dyadic coupling, refinement gap, affine deviation
# ---------------------------------------------------------------------------

@dataclass
class CoupledIncrements:
    """Dyadic ladder of driver increments over [0, t].

    Level l holds 2^l increments of span t/2^l; each level-(l-1) increment
    is exactly the entrywise sum of its two level-l children.
    """

    params: EllipticParams
    t: float
    finest_level: int
    levels: dict[int, np.ndarray]

    def increments(self, level: int) -> np.ndarray:
        if level not in self.levels:
            raise InvalidParameterError(
                f"level {level} not available (have 0..{self.finest_level})")
        return self.levels[level]


def sample_coupled(params: EllipticParams, t: float, finest_level: int, N: int,
                   rng: RngStream) -> CoupledIncrements:
    if finest_level < 0:
        raise InvalidParameterError(f"finest_level must be >= 0, got {finest_level}")
    if t < 0:
        raise InvalidParameterError(f"t must be nonnegative, got {t!r}")
    k = 2 ** finest_level
    fine = sample_increments(params, t / k, k, N, rng)
    levels = {finest_level: fine}
    for lvl in range(finest_level - 1, -1, -1):
        child = levels[lvl + 1]
        levels[lvl] = child.reshape(child.shape[0] // 2, 2, N, N).sum(axis=1)
    return CoupledIncrements(params=params, t=t, finest_level=finest_level, levels=levels)


def level_endpoint(coupled: CoupledIncrements, level: int,
                   B0: np.ndarray | None = None) -> np.ndarray:
    """Affine-walk endpoint using the increments stored at one level."""
    incs = coupled.increments(level)
    N = incs.shape[1]
    if B0 is None:
        B0 = np.eye(N, dtype=np.complex128)
    dt = coupled.t / (2 ** level)
    return endpoint_from_increments(B0, coupled.params, incs, dt)


def refine_gap(coupled: CoupledIncrements, params: EllipticParams, t: float, n: int) -> float:
    """Sampled ts-norm ||B_n(t) - B_{n-1}(t)||_2 with summed-children coupling."""
    if n < 1 or n > coupled.finest_level:
        raise InvalidParameterError(f"level {n} out of range 1..{coupled.finest_level}")
    if t == 0.0:
        return 0.0
    Bn = level_endpoint(coupled, n)
    Bc = level_endpoint(coupled, n - 1)
    return ts_norm(Bn - Bc)


def affine_deviation(increments: np.ndarray, params: EllipticParams, t: float,
                     B0: np.ndarray | None = None) -> float:
    """Operator norm ||B(t) - I - W(t)|| with W(t) the summed increments.

    Only defined from the identity initial condition.
    """
    if B0 is not None and not np.array_equal(B0, np.eye(B0.shape[0])):
        raise InvalidUsageError("affine deviation requires the identity initial condition")
    increments = np.asarray(increments)
    k, N = increments.shape[0], increments.shape[1]
    dt = t / k
    B = endpoint_from_increments(np.eye(N, dtype=np.complex128), params, increments, dt)
    W = increments.sum(axis=0)
    return float(np.linalg.norm(B - np.eye(N) - W, 2))


# ---------------------------------------------------------------------------
# Exact finite-N second-moment product formulas
# ---------------------------------------------------------------------------

def second_moment_exact(rho: float, zeta: complex, dt: float, steps: int) -> float:
    """E ts[B B*] for the k-step affine walk: each factor contributes
    1 + (rho + Re zeta) dt + |zeta|^2 dt^2 / 4, exactly at every N."""
    zeta = complex(zeta)
    base = 1.0 + (rho + zeta.real) * dt + abs(zeta) ** 2 * dt * dt / 4.0
    return base ** steps


def second_moment_dyadic(rho: float, zeta: complex, n: int, t: float) -> float:
    """Dyadic-level specialization: (1 + (rho+Re zeta)/2^n + |zeta|^2/4^{n+1})^floor(t 2^n)."""
    return second_moment_exact(rho, zeta, 2.0 ** -n, int(math.floor(t * 2 ** n)))


def refine_gap_sq_exact(rho: float, zeta: complex, n: int, t: float) -> float:
    """E ||B_n(t) - B_{n-1}(t)||_2^2 in closed form (exact at every N).

    Expands the squared norm into self terms (second_moment_dyadic at
    levels n and n-1) and the cross term, whose per-coarse-step factor

        c^2 (1 + conj(zeta)/2^n) + c * rho/2^{n-1},   c = 1 + zeta/2^{n+1},

    follows from Gaussian integration by parts applied to the paired
    fine/coarse factors.
    """
    zeta = complex(zeta)
    Fn = second_moment_dyadic(rho, zeta, n, t)
    Fc = second_moment_dyadic(rho, zeta, n - 1, t)
    c = 1.0 + zeta / 2.0 ** (n + 1)
    factor = c * c * (1.0 + zeta.conjugate() / 2.0 ** n) + c * rho / 2.0 ** (n - 1)
    k_coarse = int(math.floor(t * 2 ** (n - 1)))
    leftover = int(math.floor(t * 2 ** n)) - 2 * k_coarse
    cross = factor ** k_coarse * c ** leftover
    return Fn + Fc - 2.0 * cross.real
