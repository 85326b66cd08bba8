"""Parametrization of elliptic drivers on the space of complex matrices.

The driver family is indexed by a variance rate ``rho > 0`` and a complex
second moment ``zeta`` with ``|zeta| <= rho``.  Internally the driver is
assembled as ``phase * (a*X + i*b*Y)`` from two independent Hermitian
Gaussian flows, with

    a = sqrt((rho + |zeta|)/2),  b = sqrt((rho - |zeta|)/2),
    theta = arg(zeta)/2,         phase = e^{i theta}.

The branch convention is arg in (-pi, pi], so theta lies in (-pi/2, pi/2]
and zeta = 0 forces theta = 0.  The boundary |zeta| = rho is accepted but
flagged ``degenerate`` (the diffusion collapses onto a rotated Hermitian
line; zeta = -rho is the unitary-group mode).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import InvalidParameterError

__all__ = ["EllipticParams", "TimeGrid", "SimConfig", "params_from_rho_zeta", "reduce_time_param"]

_REL_TOL = 1e-12


@dataclass(frozen=True)
class EllipticParams:
    """Immutable (rho, zeta) pair with its derived (a, b, theta) coefficients."""

    rho: float
    zeta: complex
    a: float
    b: float
    theta: float
    degenerate: bool
    #: unit complex e^{i theta}; kept alongside theta so the degenerate
    #: zeta = -rho mode yields exactly 1j (no cos(pi/2) residue).
    phase: complex = field(repr=False, default=1.0 + 0.0j)


def params_from_rho_zeta(rho: float, zeta: complex) -> EllipticParams:
    """Build driver coefficients from (rho, zeta).

    Raises InvalidParameterError if rho <= 0 or |zeta| > rho (up to a
    relative slack of 1e-12, so boundary values round-trip).
    """
    rho = float(rho)
    zeta = complex(zeta)
    if not math.isfinite(rho) or rho <= 0.0:
        raise InvalidParameterError(f"rho must be positive, got {rho!r}")
    az = abs(zeta)
    if not math.isfinite(az):
        raise InvalidParameterError(f"zeta must be finite, got {zeta!r}")
    if az > rho * (1.0 + _REL_TOL):
        raise InvalidParameterError(f"ellipticity violated: |zeta|={az!r} exceeds rho={rho!r}")
    az = min(az, rho)
    a = math.sqrt(0.5 * (rho + az))
    b = math.sqrt(0.5 * (rho - az))
    if az == 0.0:
        phase = 1.0 + 0.0j
        theta = 0.0
    else:
        # principal square root halves arg into (-pi/2, pi/2], and is exact
        # on the negative real axis (sqrt(-1) == 1j).
        phase = cmath.sqrt(zeta / az)
        theta = cmath.phase(phase)
    return EllipticParams(
        rho=rho,
        zeta=zeta,
        a=a,
        b=b,
        theta=theta,
        degenerate=(b == 0.0),
        phase=phase,
    )


def reduce_time_param(rho: float, zeta: complex, t: float) -> tuple[float, complex]:
    """Fold elapsed time into the parameters: the law at time t equals the
    law of the (t*rho, t*zeta) driver at unit time.

    t = 0 yields the zero-diffusion sentinel (0, 0), which is not a valid
    EllipticParams; simulations must then return their initial matrix.
    """
    if t < 0:
        raise InvalidParameterError(f"time must be nonnegative, got {t!r}")
    if t == 0:
        return 0.0, 0.0 + 0.0j
    reduced = params_from_rho_zeta(t * rho, t * complex(zeta))  # validates the pair
    return reduced.rho, reduced.zeta


@dataclass(frozen=True)
class TimeGrid:
    """Uniform step grid on [0, t_final]; dt is derived, never stored."""

    t_final: float
    steps: int

    def __post_init__(self) -> None:
        if self.t_final < 0 or not math.isfinite(self.t_final):
            raise InvalidParameterError(f"t_final must be nonnegative, got {self.t_final!r}")
        if self.steps < 1:
            raise InvalidParameterError(f"steps must be >= 1, got {self.steps!r}")

    @property
    def dt(self) -> float:
        return self.t_final / self.steps


@dataclass(frozen=True)
class SimConfig:
    """Everything one multiplicative-flow experiment needs."""

    N: int
    params: EllipticParams
    grid: TimeGrid
    seed: int
    trials: int = 1

    def __post_init__(self) -> None:
        if self.N < 1:
            raise InvalidParameterError(f"N must be >= 1, got {self.N!r}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials!r}")
