"""Sublevel-set regions: grid evaluation, boundary tracing, deformation,
containment queries, and the export formats consumed by the harness.

Boundaries are traced by marching squares on the T grid with per-edge
bisection refinement to |T - t| <= 1e-6; saddle cells are disambiguated by
the cell-center T value.  ``component_count`` is the number of closed
boundary curves (a doubly-connected region counts 2: the outer curve and
the hole).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .brownmap import (CircleMeasure, Cloud, InitialSpectralData, t_handle,
                       _j_values, local_exclusion_radii)
from .errors import InvalidParameterError, InvalidUsageError, WindowTooSmallError

__all__ = [
    "Region",
    "sigma_region",
    "support_region",
    "pushforward_region",
    "containment_fraction",
    "write_boundary_csv",
    "write_membership_grid",
    "read_membership_grid",
]

REFINE_TOL = 1e-6
_MAPPED_LATTICE_CAP = 16384


@dataclass(frozen=True)
class Region:
    """A traced sublevel region {T < t}.

    Grid-backed regions carry the lattice (xs, ys, values, inside); mapped
    regions carry only boundary curves plus a subsampled mapped lattice.
    """

    t: float
    boundary: tuple[np.ndarray, ...]
    component_count: int
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    values: np.ndarray | None = None
    inside: np.ndarray | None = None
    h: float | None = None
    mapped_lattice: np.ndarray | None = None
    flagged_vertices: int = 0

    @property
    def is_grid(self) -> bool:
        return self.values is not None

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        if not self.is_grid:
            raise InvalidUsageError("mapped regions carry no lattice bounds")
        return float(self.xs[0]), float(self.xs[-1]), float(self.ys[0]), float(self.ys[-1])

    def lattice_points(self, inside_only: bool = True) -> np.ndarray:
        if not self.is_grid:
            if self.mapped_lattice is None:
                raise InvalidUsageError("region has no lattice")
            return self.mapped_lattice
        zz = self.xs[None, :] + 1j * self.ys[:, None]
        return zz[self.inside] if inside_only else zz.ravel()


# --- marching squares ------------------------------------------------------

# per-case segments as pairs of local edge names; saddles (5, 10) are
# resolved at run time from the cell-center value.
_CASES: dict[int, tuple[tuple[str, str], ...]] = {
    0: (), 15: (),
    1: (("b", "l"),), 2: (("b", "r"),), 3: (("l", "r"),),
    4: (("r", "t"),), 6: (("b", "t"),), 7: (("l", "t"),),
    8: (("t", "l"),), 9: (("b", "t"),), 11: (("r", "t"),),
    12: (("l", "r"),), 13: (("b", "r"),), 14: (("b", "l"),),
}


def _edge_key(name: str, i: int, j: int):
    if name == "b":
        return ("h", i, j)
    if name == "t":
        return ("h", i + 1, j)
    if name == "l":
        return ("v", i, j)
    return ("v", i, j + 1)  # "r"


def _refine_edges(edges, xs, ys, inside, handle, t):
    """Bisection along each crossing edge to |T - t| <= REFINE_TOL."""
    if not edges:
        return {}
    a_pts, b_pts = [], []
    for kind, i, j in edges:
        if kind == "h":
            p, q = xs[j] + 1j * ys[i], xs[j + 1] + 1j * ys[i]
            pin = inside[i, j]
        else:
            p, q = xs[j] + 1j * ys[i], xs[j] + 1j * ys[i + 1]
            pin = inside[i, j]
        a_pts.append(p if pin else q)   # inside endpoint
        b_pts.append(q if pin else p)   # outside endpoint
    a = np.array(a_pts, dtype=np.complex128)
    b = np.array(b_pts, dtype=np.complex128)
    mid = 0.5 * (a + b)
    for _ in range(80):
        tv = np.asarray(handle(mid))
        done = np.abs(tv - t) <= REFINE_TOL
        if bool(done.all()):
            break
        lower = tv < t
        a = np.where(done, a, np.where(lower, mid, a))
        b = np.where(done, b, np.where(lower, b, mid))
        mid = np.where(done, mid, 0.5 * (a + b))
    return dict(zip(edges, mid))


def _trace_loops(segments: list[tuple], points: dict) -> list[np.ndarray]:
    adj: dict = {}
    for idx, (e1, e2) in enumerate(segments):
        adj.setdefault(e1, []).append((idx, e2))
        adj.setdefault(e2, []).append((idx, e1))
    used = [False] * len(segments)
    loops = []
    for s0, (e_start, e_next) in enumerate(segments):
        if used[s0]:
            continue
        used[s0] = True
        loop = [e_start, e_next]
        cur = e_next
        while cur != e_start:
            step = next((si, oe) for si, oe in adj[cur] if not used[si])
            used[step[0]] = True
            cur = step[1]
            loop.append(cur)
        loops.append(np.array([points[e] for e in loop], dtype=np.complex128))
    return loops


def _march(handle, t, xs, ys, values, inside) -> tuple[list[np.ndarray], int]:
    code = (inside[:-1, :-1].astype(np.int8)
            + 2 * inside[:-1, 1:]
            + 4 * inside[1:, 1:]
            + 8 * inside[1:, :-1])
    cells = np.argwhere((code != 0) & (code != 15))
    saddle_mask = np.isin(code[cells[:, 0], cells[:, 1]], (5, 10))
    saddle_cells = cells[saddle_mask]
    centers_inside = {}
    if saddle_cells.size:
        cz = (0.5 * (xs[saddle_cells[:, 1]] + xs[saddle_cells[:, 1] + 1])
              + 0.5j * (ys[saddle_cells[:, 0]] + ys[saddle_cells[:, 0] + 1]))
        cin = np.asarray(handle(cz)) < t
        centers_inside = {(int(i), int(j)): bool(v)
                          for (i, j), v in zip(saddle_cells, cin)}
    segments = []
    for i, j in cells:
        c = int(code[i, j])
        if c == 5:
            pairs = (("b", "r"), ("t", "l")) if centers_inside[(i, j)] else (("b", "l"), ("r", "t"))
        elif c == 10:
            pairs = (("b", "l"), ("r", "t")) if centers_inside[(i, j)] else (("b", "r"), ("t", "l"))
        else:
            pairs = _CASES[c]
        for e1, e2 in pairs:
            segments.append((_edge_key(e1, i, j), _edge_key(e2, i, j)))
    edges = sorted({e for seg in segments for e in seg})
    points = _refine_edges(edges, xs, ys, inside, handle, t)
    loops = _trace_loops(segments, points)
    return loops, len(loops)


def _eval_grid(handle, xs, ys, chunk_rows: int = 64) -> np.ndarray:
    values = np.empty((ys.size, xs.size))
    for lo in range(0, ys.size, chunk_rows):
        zz = xs[None, :] + 1j * ys[lo:lo + chunk_rows, None]
        values[lo:lo + chunk_rows] = np.asarray(handle(zz))
    return values


def sigma_region(handle: Callable, t: float, h: float,
                 window: tuple[float, float, float, float] | None = None,
                 max_radius: float = 1e3) -> Region:
    """Trace the sublevel region {z : handle(z) < t} at grid resolution h.

    The window auto-expands (factor 1.5) until the outermost grid ring lies
    entirely outside the region; expansion beyond max_radius raises
    WindowTooSmallError.
    """
    if t <= 0:
        raise InvalidParameterError(f"level t must be positive, got {t!r}")
    if h <= 0:
        raise InvalidParameterError(f"resolution h must be positive, got {h!r}")

    def axis(lo, hi):
        j0, j1 = int(np.floor(lo / h)), int(np.ceil(hi / h))
        return np.arange(j0, j1 + 1) * h

    if window is not None:
        x0, x1, y0, y1 = window
    else:
        x0, y0, x1, y1 = -2.0, -2.0, 2.0, 2.0
    while True:
        xs, ys = axis(x0, x1), axis(y0, y1)
        if xs.size * ys.size > 100_000_000:
            raise WindowTooSmallError(
                f"window {x0, x1, y0, y1} at resolution {h} exceeds the lattice budget")
        values = _eval_grid(handle, xs, ys)
        inside = values < t
        ring_clear = not (inside[0].any() or inside[-1].any()
                          or inside[:, 0].any() or inside[:, -1].any())
        if ring_clear:
            break
        if max(abs(x0), abs(x1), abs(y0), abs(y1)) >= max_radius:
            raise WindowTooSmallError(
                f"region still touches the window ring at the {max_radius!r} cap")
        pad = 0.5 * max(x1 - x0, y1 - y0, 1.0)
        x0, x1, y0, y1 = x0 - pad, x1 + pad, y0 - pad, y1 + pad
    loops, count = _march(handle, t, xs, ys, values, inside)
    return Region(t=float(t), boundary=tuple(loops), component_count=count,
                  xs=xs, ys=ys, values=values, inside=inside, h=float(h))


def support_region(data: CircleMeasure | InitialSpectralData, t: float, h: float,
                   window: tuple[float, float, float, float] | None = None) -> Region:
    """Region {T(data, .) < t} with the a-priori window cap max|lambda| e^{2t} + 1."""
    if isinstance(data, CircleMeasure):
        maxmod = 1.0
    else:
        maxmod = data.max_modulus
    cap = maxmod * float(np.exp(2.0 * t)) + 1.0
    if window is None:
        r0 = min(maxmod * (1.0 + 2.0 * np.sqrt(t)) + 0.5, cap)
        window = (-r0, r0, -r0, r0)
    return sigma_region(t_handle(data), t, h, window=window, max_radius=cap)


def pushforward_region(region: Region, cloud: Cloud, zeta: complex,
                       map_lattice: bool = True) -> Region:
    """Image of a region under Psi(z) = z exp(-zeta J(z)) with empirical J.

    J on and near the support is evaluated with the density-adaptive
    exclusion rule (`local_exclusion_radii`); boundary vertices where J is
    still undefined (all cloud mass excluded) are replaced by one-sided
    offsets away from the cloud mean and flagged.  zeta = 0 reproduces the
    input geometry exactly.
    """
    zeta = complex(zeta)
    if zeta == 0:
        lattice = region.lattice_points() if (map_lattice and region.is_grid) else None
        if lattice is not None:
            lattice = _subsample(lattice)
        return Region(t=region.t, boundary=tuple(b.copy() for b in region.boundary),
                      component_count=region.component_count,
                      mapped_lattice=lattice, flagged_vertices=0)
    flagged = 0
    mapped_loops = []
    centroid = cloud.points.mean()
    eps = cloud.exclusion_radius
    for loop in region.boundary:
        verts = loop.copy()
        vals, _ = _j_values(cloud, verts, local_exclusion_radii(cloud, verts))
        bad = np.isnan(vals)
        if bad.any():
            flagged += int(bad.sum())
            shift = verts[bad] - centroid
            norm = np.abs(shift)
            direction = np.where(norm > 0, shift / np.where(norm > 0, norm, 1.0), 1.0)
            verts = verts.copy()
            verts[bad] = verts[bad] + 1.5 * eps * direction
            vals_bad, _ = _j_values(cloud, verts[bad])
            vals = vals.copy()
            vals[bad] = vals_bad
            if np.isnan(vals[bad]).any():
                raise InvalidUsageError("J undefined on boundary even after offset")
        mapped_loops.append(verts * np.exp(-zeta * vals))
    lattice = None
    if map_lattice and region.is_grid:
        pts = _subsample(region.lattice_points())
        if pts.size:
            vals, _ = _j_values(cloud, pts, local_exclusion_radii(cloud, pts))
            ok = ~np.isnan(vals)  # drop lattice points with no J value
            lattice = pts[ok] * np.exp(-zeta * vals[ok])
        else:
            lattice = pts
    return Region(t=region.t, boundary=tuple(mapped_loops),
                  component_count=region.component_count,
                  mapped_lattice=lattice, flagged_vertices=flagged)


def _subsample(pts: np.ndarray, cap: int = _MAPPED_LATTICE_CAP) -> np.ndarray:
    if pts.size <= cap:
        return pts
    stride = int(np.ceil(pts.size / cap))
    return pts[::stride]


# --- containment -----------------------------------------------------------

def _crossings(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Even-odd ray-crossing parity of points against one closed loop."""
    x, y = points.real, points.imag
    ax, ay = loop.real[:-1], loop.imag[:-1]
    bx, by = loop.real[1:], loop.imag[1:]
    inside = np.zeros(points.shape, dtype=bool)
    for lo in range(0, ax.size, 2048):
        a_x, a_y = ax[lo:lo + 2048], ay[lo:lo + 2048]
        b_x, b_y = bx[lo:lo + 2048], by[lo:lo + 2048]
        cond = (a_y[None, :] > y[:, None]) != (b_y[None, :] > y[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = a_x[None, :] + (y[:, None] - a_y[None, :]) / (b_y[None, :] - a_y[None, :]) \
                * (b_x[None, :] - a_x[None, :])
        hits = cond & (x[:, None] < xint)
        inside ^= (hits.sum(axis=1) % 2).astype(bool)
    return inside


def _segment_distance(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Min distance from each point to the polyline segments of one loop."""
    a = loop[:-1]
    d = loop[1:] - a
    dist = np.full(points.shape, np.inf)
    for lo in range(0, a.size, 2048):
        ac, dc = a[lo:lo + 2048], d[lo:lo + 2048]
        rel = points[:, None] - ac[None, :]
        denom = (dc.real ** 2 + dc.imag ** 2)
        denom = np.where(denom > 0, denom, 1.0)
        s = (rel.real * dc.real[None, :] + rel.imag * dc.imag[None, :]) / denom[None, :]
        s = np.clip(s, 0.0, 1.0)
        diff = rel - s * dc[None, :]
        dist = np.minimum(dist, np.abs(diff).min(axis=1, initial=np.inf))
    return dist


def containment_fraction(points: Sequence[complex] | np.ndarray, region: Region,
                         margin: float = 0.0) -> float:
    """Fraction of points inside the region dilated by margin.

    Membership is even-odd parity against all boundary curves, so holes are
    respected; the dilation admits points within margin of the boundary.
    """
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if pts.size == 0:
        raise InvalidParameterError("no points given")
    if margin < 0:
        raise InvalidParameterError(f"margin must be nonnegative, got {margin!r}")
    if not region.boundary:
        return 0.0
    inside = np.zeros(pts.shape, dtype=bool)
    for loop in region.boundary:
        inside ^= _crossings(pts, loop)
    if margin > 0:
        near = np.full(pts.shape, np.inf)
        for loop in region.boundary:
            near = np.minimum(near, _segment_distance(pts, loop))
        inside |= near <= margin
    return float(inside.mean())


# --- export ----------------------------------------------------------------

def write_boundary_csv(region: Region, path) -> None:
    """CSV polylines: component_id, vertex_index, re, im (round-trip floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("component_id,vertex_index,re,im\n")
        for cid, loop in enumerate(region.boundary):
            for vid, z in enumerate(loop):
                fh.write(f"{cid},{vid},{float(z.real)!r},{float(z.imag)!r}\n")


def write_membership_grid(region: Region, path) -> None:
    """Row-major binary membership mask preceded by one JSON header line."""
    if not region.is_grid:
        raise InvalidUsageError("mapped regions have no membership grid")
    header = {
        "bounds": list(region.bounds),
        "shape": [int(region.inside.shape[0]), int(region.inside.shape[1])],
        "resolution": region.h,
        "level": region.t,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(region.inside, dtype=np.uint8).tobytes())


def read_membership_grid(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    ny, nx = header["shape"]
    mask = np.frombuffer(raw, dtype=np.uint8).reshape(ny, nx).astype(bool)
    return header, mask
