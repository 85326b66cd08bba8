"""Figure presets: the six reference parameter sets.

Each preset fixes the reduced driver level (t, zeta) — the flow is run as
(rho, zeta) = (t, zeta) over unit time — together with the initial
condition and which boundary route applies.  The reference plots use
N = 2000; the desk-scale default here is N = 1024, overridable per run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..glflow import (
    InitialCondition,
    atomic_normal_init,
    identity_init,
    non_normal_block_init,
    roots_of_unity_init,
)

__all__ = ["FigurePreset", "FIGURE_PRESETS", "FIG6_BLOCK", "FIG5_ATOMS"]

FIG6_BLOCK = np.array([[1.0 + 1.0j, 1.0], [0.0, -1.0 + 1.0j]])

FIG5_ATOMS = (
    (1.0 + 0.0j, Fraction(1, 8)),
    (-1.0 + 0.0j, Fraction(1, 8)),
    (3.0 + 0.0j, Fraction(1, 8)),
    (-3.0 + 0.0j, Fraction(1, 8)),
    (0.0 + 1.0j, Fraction(1, 4)),
    (0.0 - 1.0j, Fraction(1, 4)),
)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    t: float
    zeta: complex
    init: InitialCondition
    n: int = 1024
    steps: int = 512
    h: float = 0.02
    highlight_init: bool = False


def _presets() -> dict[str, FigurePreset]:
    u6 = roots_of_unity_init(6)
    n6 = 1026  # nearest desk-scale dimension divisible by 6
    entries = [
        # driver (rho, zeta) = (2, 0.6+i) at unit time, two initial conditions
        FigurePreset("fig1-left", 2.0, 0.6 + 1.0j, identity_init()),
        FigurePreset("fig1-right", 2.0, 0.6 + 1.0j, u6, n=n6, highlight_init=True),
        FigurePreset("fig2-left", 3.0, 0.0j, identity_init()),
        FigurePreset("fig2-right", 4.0, 0.0j, identity_init()),
        FigurePreset("fig3-left", 2.0 / 3.0, 0.0j, u6, n=n6, highlight_init=True),
        FigurePreset("fig3-right", 0.7, 0.0j, u6, n=n6, highlight_init=True),
        FigurePreset("fig4-left", 3.0, 2.0 - 1.0j, identity_init()),
        FigurePreset("fig4-right", 2.0 / 3.0, -1.0j / 3.0, u6, n=n6, highlight_init=True),
        FigurePreset("fig6-left", 1.0, 0.0j, non_normal_block_init(FIG6_BLOCK)),
        FigurePreset("fig6-right", 1.0, 0.5 + 0.5j, non_normal_block_init(FIG6_BLOCK)),
    ]
    for t in (0.8, 1.0, 1.2):
        for zeta in (0.0j, 0.5 + 0.0j):
            tag = f"fig5-t{t:g}-zeta{zeta.real:g}"
            entries.append(FigurePreset(tag, t, zeta, atomic_normal_init(FIG5_ATOMS)))
    return {p.name: p for p in entries}


FIGURE_PRESETS: dict[str, FigurePreset] = _presets()
