"""Support geometry of the limiting eigenvalue distributions.

Two sublevel-set descriptions are implemented:

* ``t_unitary`` — for a unit-circle spectral measure mu,

      T(mu, z) = log|z|^2 / (|z|^2 - 1) * ( int mu(dxi)/|xi - z|^2 )^{-1},

  with the removable |z| = 1 factor evaluated by a series branch.

* ``t_general`` — for arbitrary invertible initial data b0, built from
  p0(z) = ts[|b0 - z|^{-2}] and p2(z) = ts[b0* b0 |b0 - z|^{-2}] as

      T(b0, z) = log(|z|^2 p0 / p2) / (|z|^2 p0 - p2).

  The log argument and the denominator vanish together (the structure is
  the reciprocal logarithmic mean of |z|^2 p0 and p2), which keeps T
  nonnegative, reduces it exactly to ``t_unitary`` on unitary data, and
  makes it covariant under scalar scaling of b0.

The deformation map is Psi(z) = z exp(zeta J(z)) with J the half Cayley
transform of a weighted point cloud; clouds come from large-N simulated
eigenvalues of the undeformed flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, UndefinedTransformError
from .glflow import InitialCondition

__all__ = [
    "CircleMeasure",
    "InitialSpectralData",
    "Cloud",
    "t_unitary",
    "t_general",
    "t_handle",
    "spectral_data_from_init",
    "circle_measure_from_init",
    "j_transform",
    "local_exclusion_radii",
    "psi_map",
]

_UNIT_BAND = 2e-4      # series branch for the log|z|^2/(|z|^2-1) factor
_GENERAL_BAND = 1e-8   # series branch for the logarithmic-mean ratio


@dataclass(frozen=True)
class CircleMeasure:
    """Finitely-supported probability measure on the unit circle."""

    angles: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.angles, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if a.shape != w.shape or a.ndim != 1 or a.size == 0:
            raise InvalidParameterError("angles and weights must be matching 1-d arrays")
        if np.any(w <= 0):
            raise InvalidParameterError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(f"weights sum to {w.sum()!r}, expected 1")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "weights", w)

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @classmethod
    def roots_of_unity(cls, k: int) -> "CircleMeasure":
        return cls(angles=2.0 * np.pi * np.arange(k) / k, weights=np.full(k, 1.0 / k))

    @classmethod
    def point(cls) -> "CircleMeasure":
        """The point mass at 1."""
        return cls.roots_of_unity(1)


@dataclass(frozen=True)
class InitialSpectralData:
    """Spectral data of the initial condition: atoms for normal b0, a
    matrix for non-normal b0 (sigma_min must be positive)."""

    atoms: tuple[tuple[complex, float], ...] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.atoms is None) == (self.matrix is None):
            raise InvalidParameterError("provide exactly one of atoms / matrix")
        if self.atoms is not None:
            w = np.array([wk for _, wk in self.atoms], dtype=np.float64)
            if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidParameterError("atom weights must be positive and sum to 1")
            if any(lam == 0 for lam, _ in self.atoms):
                raise InvalidParameterError("atoms must be nonzero (invertible data)")
        else:
            M = np.asarray(self.matrix, dtype=np.complex128)
            s = np.linalg.svd(M, compute_uv=False)
            if s[-1] <= 0:
                raise InvalidParameterError("matrix data must be invertible")
            object.__setattr__(self, "matrix", M)

    @property
    def is_atomic(self) -> bool:
        return self.atoms is not None

    @property
    def max_modulus(self) -> float:
        if self.is_atomic:
            return float(max(abs(lam) for lam, _ in self.atoms))
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])

    @classmethod
    def atomic(cls, atoms) -> "InitialSpectralData":
        return cls(atoms=tuple((complex(l), float(w)) for l, w in atoms))

    @classmethod
    def from_matrix(cls, M) -> "InitialSpectralData":
        return cls(matrix=np.asarray(M, dtype=np.complex128))


def spectral_data_from_init(init: InitialCondition) -> InitialSpectralData:
    """Spectral data matching a flow initial condition (conjugation-invariant)."""
    if init.kind == "identity":
        return InitialSpectralData.atomic([(1.0 + 0.0j, 1.0)])
    if init.kind == "roots_of_unity":
        pts = np.exp(2j * np.pi * np.arange(init.k) / init.k)
        return InitialSpectralData.atomic([(p, 1.0 / init.k) for p in pts])
    if init.kind == "atomic_normal":
        return InitialSpectralData.atomic([(lam, float(w)) for lam, w in init.atoms])
    if init.kind == "non_normal_block":
        return InitialSpectralData.from_matrix(np.asarray(init.block))
    if init.kind == "explicit":
        return InitialSpectralData.from_matrix(init.matrix)
    raise InvalidParameterError(f"unknown initial-condition kind {init.kind!r}")


def circle_measure_from_init(init: InitialCondition) -> CircleMeasure:
    """Circle measure for unitary initial conditions (identity / roots)."""
    if init.kind == "identity":
        return CircleMeasure.point()
    if init.kind == "roots_of_unity":
        return CircleMeasure.roots_of_unity(init.k)
    raise InvalidParameterError(f"{init.kind!r} is not a unitary initial condition")


def _unit_factor(az2: np.ndarray) -> np.ndarray:
    """log|z|^2 / (|z|^2 - 1) with its removable singularity at |z| = 1."""
    u = az2 - 1.0
    small = np.abs(u) < _UNIT_BAND
    us = np.where(small, 0.0, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log1p(u) / us
    series = 1.0 + u * (-0.5 + u * (1.0 / 3.0 + u * (-0.25 + u * 0.2)))
    return np.where(small, series, direct)


def t_unitary(mu: CircleMeasure, z) -> np.ndarray | float:
    """Boundary-time function of a unit-circle measure; 0 at atoms, +inf at 0."""
    zs = np.asarray(z, dtype=np.complex128)
    flat = zs.ravel()
    d2 = np.abs(mu.points[:, None] - flat[None, :]) ** 2
    with np.errstate(divide="ignore"):
        integral = mu.weights @ (1.0 / d2)
    az2 = np.abs(flat) ** 2
    with np.errstate(invalid="ignore"):
        out = _unit_factor(az2) / integral
    out = np.where(np.isposinf(integral), 0.0, out)
    out = out.reshape(zs.shape)
    return float(out) if zs.ndim == 0 else out


def _atomic_pq(atoms, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam = np.array([l for l, _ in atoms], dtype=np.complex128)
    w = np.array([wk for _, wk in atoms], dtype=np.float64)
    d2 = np.abs(lam[:, None] - flat[None, :]) ** 2
    with np.errstate(divide="ignore"):
        inv = 1.0 / d2
    p0 = w @ inv
    p2 = (w * np.abs(lam) ** 2) @ inv
    return p0, p2


def _matrix_pq(B0: np.ndarray, flat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    N = B0.shape[0]
    eye = np.eye(N, dtype=np.complex128)
    BHB = B0.conj().T @ B0
    p0 = np.empty(flat.size)
    p2 = np.empty(flat.size)
    chunk = max(1, int(2_000_000 // (N * N)))
    for lo in range(0, flat.size, chunk):
        zc = flat[lo:lo + chunk]
        Mz = B0[None, :, :] - zc[:, None, None] * eye[None, :, :]
        H = np.einsum("kji,kjl->kil", Mz.conj(), Mz)
        try:
            G = np.linalg.inv(H)
        except np.linalg.LinAlgError:
            # point-spectrum hit somewhere in the chunk: recover entrywise
            G = np.empty_like(H)
            for m in range(H.shape[0]):
                try:
                    G[m] = np.linalg.inv(H[m])
                except np.linalg.LinAlgError:
                    G[m] = np.inf
        p0[lo:lo + chunk] = np.einsum("kii->k", G).real / N
        p2[lo:lo + chunk] = np.einsum("ij,kji->k", BHB, G).real / N
    return p0, p2


def t_general(data: InitialSpectralData, z) -> np.ndarray | float:
    """Boundary-time function for general invertible initial data.

    Evaluates log(|z|^2 p0 / p2) / (|z|^2 p0 - p2); inside a 1e-8 relative
    band around the removable locus |z|^2 p0 = p2 a series branch is used.
    Points of the point spectrum return 0.
    """
    zs = np.asarray(z, dtype=np.complex128)
    flat = zs.ravel()
    if data.is_atomic:
        p0, p2 = _atomic_pq(data.atoms, flat)
    else:
        p0, p2 = _matrix_pq(data.matrix, flat)
    az2 = np.abs(flat) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        u = az2 * p0
        r = u / p2 - 1.0
        small = np.abs(r) < _GENERAL_BAND
        rs = np.where(small, 1.0, r)
        direct = np.log1p(r) / (p2 * rs)
        series = (1.0 + r * (-0.5 + r / 3.0)) / p2
        out = np.where(small, series, direct)
        # point-spectrum sentinel: p0, p2 infinite
        out = np.where(np.isposinf(p0) | np.isposinf(p2), 0.0, out)
    out = out.reshape(zs.shape)
    return float(out) if zs.ndim == 0 else out


def t_handle(data: CircleMeasure | InitialSpectralData) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized T evaluator for region tracing."""
    if isinstance(data, CircleMeasure):
        return lambda z: t_unitary(data, z)
    if isinstance(data, InitialSpectralData):
        return lambda z: t_general(data, z)
    raise InvalidParameterError(f"unsupported data type {type(data).__name__}")


# ---------------------------------------------------------------------------
# J transform and the deformation map Psi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cloud:
    """Weighted point cloud standing in for a limiting eigenvalue measure."""

    points: np.ndarray
    weights: np.ndarray | None = None
    _diameter: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.complex128).ravel()
        if pts.size == 0:
            raise InvalidParameterError("cloud must contain at least one point")
        if self.weights is None:
            w = np.full(pts.size, 1.0 / pts.size)
        else:
            w = np.asarray(self.weights, dtype=np.float64).ravel()
            if w.shape != pts.shape or np.any(w <= 0):
                raise InvalidParameterError("weights must be positive and match points")
            w = w / w.sum()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        diam = 0.0
        chunk = max(1, int(4_000_000 // max(pts.size, 1)))
        for lo in range(0, pts.size, chunk):
            diam = max(diam, float(np.abs(pts[lo:lo + chunk, None] - pts[None, :]).max()))
        object.__setattr__(self, "_diameter", diam)

    @property
    def diameter(self) -> float:
        return self._diameter

    @property
    def exclusion_radius(self) -> float:
        """Default principal-value guard: 3 * diameter / sqrt(cloud size)."""
        return 3.0 * self.diameter / math.sqrt(self.points.size)


def _j_values(cloud: Cloud, zs: np.ndarray,
              exclusion_radius=None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized J with per-point excluded mass; NaN where all mass excluded.

    exclusion_radius may be a scalar or an array matching zs (one radius per
    evaluation point)."""
    flat = np.asarray(zs, dtype=np.complex128).ravel()
    if exclusion_radius is None:
        eps = np.full(flat.size, cloud.exclusion_radius)
    else:
        eps = np.broadcast_to(np.asarray(exclusion_radius, dtype=np.float64),
                              np.shape(zs)).ravel()
    vals = np.empty(flat.size, dtype=np.complex128)
    excl = np.empty(flat.size, dtype=np.float64)
    pts, w = cloud.points, cloud.weights
    chunk = max(1, int(4_000_000 // max(pts.size, 1)))
    for lo in range(0, flat.size, chunk):
        zc = flat[lo:lo + chunk, None]
        diff = pts[None, :] - zc
        keep = np.abs(diff) > eps[lo:lo + chunk, None]
        kept_w = np.where(keep, w[None, :], 0.0)
        total = kept_w.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(keep, (pts[None, :] + zc) / diff, 0.0)
        v = 0.5 * (kept_w * ratio).sum(axis=1)
        vals[lo:lo + chunk] = np.where(total > 0, v, np.nan)
        excl[lo:lo + chunk] = 1.0 - total
    return vals.reshape(np.shape(zs)), excl.reshape(np.shape(zs))


def local_exclusion_radii(cloud: Cloud, zs, k: int = 3, factor: float = 3.0) -> np.ndarray:
    """Density-adaptive principal-value guard for J on or near the support:
    factor times the distance to the k-th nearest cloud point, capped by the
    cloud's global exclusion radius.

    Near dense parts of the cloud this shrinks the excluded ball to a few
    local spacings, removing the systematic inward bias the global rule
    produces where the boundary hugs high-density regions."""
    flat = np.asarray(zs, dtype=np.complex128).ravel()
    pts = cloud.points
    kk = min(k, pts.size) - 1
    out = np.empty(flat.size)
    chunk = max(1, int(4_000_000 // max(pts.size, 1)))
    for lo in range(0, flat.size, chunk):
        d = np.abs(flat[lo:lo + chunk, None] - pts[None, :])
        out[lo:lo + chunk] = np.partition(d, kk, axis=1)[:, kk]
    return np.minimum(factor * out, cloud.exclusion_radius).reshape(np.shape(zs))


def j_transform(cloud: Cloud, z, exclusion_radius: float | None = None):
    """Half Cayley transform (1/2) sum w_k (xi_k + z)/(xi_k - z) of the cloud.

    Cloud points within the exclusion radius of z are dropped and their
    mass reported.  Returns (value, excluded_mass); raises
    UndefinedTransformError when nothing remains.
    """
    vals, excl = _j_values(cloud, z, exclusion_radius)
    if np.any(np.isnan(np.atleast_1d(vals))):
        raise UndefinedTransformError(f"all cloud mass excluded at z={z!r}")
    if np.ndim(z) == 0:
        return complex(vals), float(excl)
    return vals, excl


def psi_map(cloud: Cloud, t: float, zeta: complex, z):
    """Deformation map z -> z exp(-zeta J(z)) carrying the undeformed support
    at level t to the deformed one; requires |zeta| < t.

    The exponent carries a minus sign relative to the J normalization above
    (J -> -1/2 at infinity): only this orientation pushes the level-t law
    onto the deformed one.  Two independent checks pin it down: the
    holomorphic moments of the pushforward must match the exact endpoint
    moments (mean z = e^{zeta/2}, mean z^2 = e^{zeta}(1 + zeta)), and in the
    small-t single-increment regime the image of the disk around 1 must be
    the elliptic-law ellipse, elongated along Re z for real zeta > 0.
    zeta = 0 is the identity map exactly.
    """
    zeta = complex(zeta)
    if abs(zeta) >= t:
        raise InvalidParameterError(f"|zeta|={abs(zeta)!r} must be < t={t!r}")
    zs = np.asarray(z, dtype=np.complex128)
    if zeta == 0:
        out = zs.copy()
        return complex(out) if zs.ndim == 0 else out
    vals, _ = _j_values(cloud, zs)
    vals = np.atleast_1d(vals.copy())
    vals[np.atleast_1d(zs) == 0] = 0.0  # the map fixes the origin
    if np.any(np.isnan(vals)):
        raise UndefinedTransformError("all cloud mass excluded at some z")
    out = zs * np.exp(-zeta * vals.reshape(zs.shape))
    return complex(out) if zs.ndim == 0 else out
