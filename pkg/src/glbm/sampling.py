"""Gaussian matrix ensembles: GUE flows, Ginibre flows, elliptic driver increments.

Normalization: at time t the Hermitian flow X(t) has E ts[X(t)^2] = t, the
Ginibre flow has all N^2 entries independent complex Gaussians of total
variance t/N, and the elliptic increment phase*(a*X + i*b*Y) has
E ts|dW|^2 = rho*dt and E ts[dW^2] = zeta*dt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError
from .params import EllipticParams

__all__ = ["RngStream", "sample_gue", "sample_ginibre", "sample_elliptic_increment", "haar_unitary"]


@dataclass
class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Two streams with the same key replay bit-identically; distinct
    stream_ids are statistically independent.  Single-owner mutable state:
    do not share one stream across threads — derive one per trial instead.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def derive(self, stream_id: int) -> "RngStream":
        """Fresh independent stream under the same seed (e.g. per trial)."""
        return RngStream(self.seed, stream_id)


def _check_time(t: float) -> float:
    t = float(t)
    if t < 0 or not math.isfinite(t):
        raise InvalidParameterError(f"time must be nonnegative, got {t!r}")
    return t


def sample_gue(N: int, t: float, rng: RngStream) -> np.ndarray:
    """Hermitian Gaussian matrix with E ts[X^2] = t.

    Exactly Hermitian by construction: the upper triangle and diagonal are
    drawn, the lower triangle is mirrored.  Diagonal entries are real with
    variance t/N; off-diagonal real/imag parts each have variance t/(2N).
    """
    t = _check_time(t)
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N!r}")
    X = np.zeros((N, N), dtype=np.complex128)
    if t == 0.0:
        return X
    diag = rng.normal(N) * math.sqrt(t / N)
    if N > 1:
        iu = np.triu_indices(N, 1)
        m = iu[0].size
        re = rng.normal(m)
        im = rng.normal(m)
        X[iu] = (re + 1j * im) * math.sqrt(t / (2 * N))
        X += X.conj().T
    X[np.diag_indices(N)] = diag
    return X


def sample_ginibre(N: int, t: float, rng: RngStream) -> np.ndarray:
    """All-entries-iid complex Gaussian matrix, entry variance t/N.

    Equal in law to (X + iY)/sqrt(2) for independent GUE flows X, Y.
    """
    t = _check_time(t)
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N!r}")
    if t == 0.0:
        return np.zeros((N, N), dtype=np.complex128)
    re = rng.normal((N, N))
    im = rng.normal((N, N))
    return (re + 1j * im) * math.sqrt(t / (2 * N))


def sample_elliptic_increment(params: EllipticParams, dt: float, N: int, rng: RngStream) -> np.ndarray:
    """One driver increment phase*(a*X + i*b*Y) over a time step dt.

    In the degenerate b = 0 mode the Y factor is skipped entirely, so the
    zeta = -rho increment is exactly i*a*X (skew-Hermitian to the bit).
    """
    dt = _check_time(dt)
    if dt == 0.0:
        return np.zeros((N, N), dtype=np.complex128)
    X = sample_gue(N, dt, rng)
    if params.b == 0.0:
        return params.phase * (params.a * X)
    Y = sample_gue(N, dt, rng)
    return params.phase * (params.a * X + 1j * params.b * Y)


def haar_unitary(N: int, rng: RngStream) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre sample with phase fixing."""
    G = sample_ginibre(N, 1.0, rng)
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R).copy()
    d[d == 0] = 1.0
    return Q * (d / np.abs(d))
