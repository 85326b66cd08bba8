"""Dense eigen/singular decompositions and Hermitization statistics.

Everything here is a pure function of its matrix argument.  Eigenvalues of
non-normal matrices come from the LAPACK Hessenberg + shifted-QR path; each
decomposition is cross-checked (eigenvector residual, Weyl interlacing with
the singular values) rather than trusted blindly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, SolverFailureError

__all__ = [
    "Spectrum",
    "SingularSpectrum",
    "eigenvalues",
    "singular_values",
    "log_potential",
    "wegner_transform",
    "wegner_from_sigmas",
    "cauchy_transform",
    "cauchy_from_sigmas",
    "sv_counting",
    "log_tail_mass",
]

_WEYL_SLACK = 1e-8


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue multiset plus the worst relative eigenvector residual."""

    eigenvalues: np.ndarray
    residual: float


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values of A - zI, sorted descending, with the shift used."""

    values: np.ndarray
    z: complex

    @property
    def sigma_max(self) -> float:
        return float(self.values[0])

    @property
    def sigma_min(self) -> float:
        return float(self.values[-1])


def _require_finite(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A.view(np.float64))):
        raise InvalidParameterError("matrix has non-finite entries")
    return A


def eigenvalues(A: np.ndarray) -> Spectrum:
    """All N eigenvalues with multiplicity.

    The residual is max_j ||A v_j - lambda_j v_j|| / ||A|| over the computed
    eigenvectors.  A Weyl consistency check sigma_1 >= |lambda_j| >= sigma_N
    runs on every call; gross violations raise SolverFailureError.
    """
    A = _require_finite(A)
    try:
        lam, V = np.linalg.eig(A)
        sig = np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SolverFailureError(f"dense decomposition failed for N={A.shape[0]}: {exc}") from exc
    opnorm = float(sig[0])
    if opnorm == 0.0:
        return Spectrum(eigenvalues=lam, residual=0.0)
    resid = float(np.linalg.norm(A @ V - V * lam, axis=0).max() / opnorm)
    mods = np.abs(lam)
    slack = _WEYL_SLACK * max(opnorm, 1.0)
    if mods.max() > opnorm + slack or mods.min() < float(sig[-1]) - slack:
        raise SolverFailureError(
            f"Weyl consistency violated: |lambda| range [{mods.min()}, {mods.max()}] "
            f"vs sigma range [{sig[-1]}, {sig[0]}]")
    return Spectrum(eigenvalues=lam, residual=resid)


def singular_values(A: np.ndarray, z: complex = 0.0) -> SingularSpectrum:
    """Singular values of A - zI, descending; sigma_N = 0 is allowed."""
    A = _require_finite(A)
    M = A - complex(z) * np.eye(A.shape[0])
    try:
        sig = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SolverFailureError(f"SVD failed for N={A.shape[0]}: {exc}") from exc
    return SingularSpectrum(values=sig, z=complex(z))


def log_potential(A: np.ndarray, z: complex, route: str = "singular") -> float:
    """(1/N) sum_j log sigma_j(A - z), equal to (1/N) sum_j log|z - lambda_j|.

    The singular-value route is canonical; route="eigen" evaluates the
    eigenvalue side of the identity.  A zero singular value (or an exact
    eigenvalue hit) yields the -inf sentinel, which callers must not fold
    silently into averages.
    """
    if route == "singular":
        vals = singular_values(A, z).values
    elif route == "eigen":
        vals = np.abs(complex(z) - eigenvalues(A).eigenvalues)
    else:
        raise InvalidParameterError(f"unknown route {route!r}")
    if np.any(vals == 0.0):
        return float("-inf")
    return float(np.mean(np.log(vals)))


def wegner_from_sigmas(sigmas: np.ndarray, eta: float) -> float:
    """-(1/N) sum_j eta/(eta^2 + sigma_j^2); always in [-1/eta, 0)."""
    if eta <= 0:
        raise InvalidParameterError(f"eta must be positive, got {eta!r}")
    s = np.asarray(sigmas, dtype=np.float64)
    return float(-(eta / (eta * eta + s * s)).mean())


def wegner_transform(A: np.ndarray, z: complex, eta: float) -> float:
    """Im ts[(i eta - |A - z|)^{-1}], the small-scale singular value probe."""
    return wegner_from_sigmas(singular_values(A, z).values, eta)


def cauchy_from_sigmas(sigmas: np.ndarray, eta: float) -> complex:
    """(1/N) sum_j (i eta - sigma_j)^{-1}, the full resolvent trace.

    Away from the singular spectrum this tends to a nonzero constant as
    eta -> 0 (its imaginary part is wegner_from_sigmas and vanishes there).
    """
    if eta <= 0:
        raise InvalidParameterError(f"eta must be positive, got {eta!r}")
    s = np.asarray(sigmas, dtype=np.float64)
    return complex((1.0 / (1j * eta - s)).mean())


def cauchy_transform(A: np.ndarray, z: complex, eta: float) -> complex:
    """ts[(i eta - |A - z|)^{-1}] evaluated from the shifted singular values."""
    return cauchy_from_sigmas(singular_values(A, z).values, eta)


def sv_counting(A: np.ndarray, z: complex, eta: float) -> float:
    """Fraction of singular values of A - z at or below eta."""
    if eta < 0:
        raise InvalidParameterError(f"eta must be nonnegative, got {eta!r}")
    vals = singular_values(A, z).values
    return float(np.count_nonzero(vals <= eta) / vals.size)


def log_tail_mass(A: np.ndarray, z: complex, L: float) -> float:
    """(1/N) sum over |log sigma_j| > L of |log sigma_j|, sigma_j of A - z.

    A zero singular value contributes +inf, honestly reflecting a failure
    of log integrability for that sample.
    """
    if L <= 0:
        raise InvalidParameterError(f"L must be positive, got {L!r}")
    vals = singular_values(A, z).values
    with np.errstate(divide="ignore"):
        logs = np.abs(np.log(vals))
    tail = logs[logs > L]
    if tail.size == 0:
        return 0.0
    return float(tail.sum() / vals.size)
