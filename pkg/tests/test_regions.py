import numpy as np
import pytest

from glbm import (
    CircleMeasure,
    Cloud,
    InvalidParameterError,
    WindowTooSmallError,
    containment_fraction,
    pushforward_region,
    sigma_region,
    support_region,
)
from glbm.regions import read_membership_grid, write_boundary_csv, write_membership_grid


def disk_handle(z):
    return np.abs(np.asarray(z))


def annulus_handle(z):
    return np.abs(np.abs(np.asarray(z)) - 2.0)


def twolobe_handle(z):
    z = np.asarray(z)
    return np.minimum(np.abs(z - 1.0), np.abs(z + 1.0))


def test_disk_region():
    r = sigma_region(disk_handle, 1.0, 0.05, window=(-2, 2, -2, 2))
    assert r.component_count == 1
    loop = r.boundary[0]
    assert loop[0] == loop[-1]  # closed
    assert np.abs(np.abs(loop) - 1.0).max() <= 1e-6  # fidelity
    # inside-mask area close to pi
    area = r.inside.sum() * r.h ** 2
    assert area == pytest.approx(np.pi, rel=0.02)


def test_annulus_region_two_loops_and_holes():
    r = sigma_region(annulus_handle, 0.5, 0.05, window=(-3, 3, -3, 3))
    assert r.component_count == 2
    radii = sorted(np.abs(loop).mean() for loop in r.boundary)
    assert radii[0] == pytest.approx(1.5, abs=0.01)
    assert radii[1] == pytest.approx(2.5, abs=0.01)
    pts = np.array([2.0 + 0j, 0.0 + 0j, 4.0 + 0j])
    assert containment_fraction(pts, r) == pytest.approx(1 / 3)
    # margin dilation pulls in a point just outside
    assert containment_fraction(np.array([2.55 + 0j]), r, margin=0.0) == 0.0
    assert containment_fraction(np.array([2.55 + 0j]), r, margin=0.1) == 1.0


def test_lobe_merge_topology():
    r2 = sigma_region(twolobe_handle, 0.9, 0.04, window=(-3, 3, -3, 3))
    assert r2.component_count == 2
    r1 = sigma_region(twolobe_handle, 1.1, 0.04, window=(-3, 3, -3, 3))
    assert r1.component_count == 1


def test_empty_region():
    r = sigma_region(lambda z: np.full(np.shape(z), 7.0), 1.0, 0.5, window=(-2, 2, -2, 2))
    assert r.component_count == 0
    assert r.boundary == ()
    assert containment_fraction(np.array([0.0 + 0j]), r) == 0.0


def test_window_auto_expansion():
    # region of radius 4 discovered from a deliberately small window
    r = sigma_region(lambda z: np.abs(np.asarray(z)) / 4.0, 1.0, 0.1,
                     window=(-1, 1, -1, 1))
    assert r.component_count == 1
    assert np.abs(np.abs(r.boundary[0]) - 4.0).max() < 1e-5


def test_window_cap_error():
    with pytest.raises(WindowTooSmallError):
        sigma_region(lambda z: np.zeros(np.shape(z)), 1.0, 0.5,
                     window=(-1, 1, -1, 1), max_radius=8.0)


def test_region_monotone_in_level():
    w = (-3, 3, -3, 3)
    r1 = sigma_region(disk_handle, 1.0, 0.1, window=w)
    r2 = sigma_region(disk_handle, 2.0, 0.1, window=w)
    assert r1.inside.shape == r2.inside.shape
    assert not np.any(r1.inside & ~r2.inside)  # lattice-wise subset


def test_validation_errors():
    with pytest.raises(InvalidParameterError):
        sigma_region(disk_handle, 0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        sigma_region(disk_handle, 1.0, -0.1)
    r = sigma_region(disk_handle, 1.0, 0.1, window=(-2, 2, -2, 2))
    with pytest.raises(InvalidParameterError):
        containment_fraction(np.array([]), r)
    with pytest.raises(InvalidParameterError):
        containment_fraction(np.array([0j]), r, margin=-0.1)


def test_support_region_point_mass():
    r = support_region(CircleMeasure.point(), 1.0, 0.05)
    assert r.component_count == 1
    # the level-1 region contains 1 and excludes the origin and -1
    pts = np.array([1.0 + 0j, 0.0 + 0j, -1.0 + 0j])
    assert containment_fraction(pts, r) == pytest.approx(1 / 3)


def test_pushforward_zero_zeta_is_identity():
    r = sigma_region(disk_handle, 1.0, 0.1, window=(-2, 2, -2, 2))
    cloud = Cloud(points=np.array([0.5 + 0j, -0.5 + 0j]))
    out = pushforward_region(r, cloud, 0.0)
    for a, b in zip(out.boundary, r.boundary):
        assert np.abs(a - b).max() <= 1e-12
    assert out.component_count == r.component_count
    assert out.flagged_vertices == 0


def test_pushforward_point_mass_spiral_scale():
    # cloud = delta_0 gives J(z) = -1/2 exactly, so Psi = z exp(-zeta J)
    # scales rigidly by e^{zeta/2}
    r = sigma_region(disk_handle, 1.0, 0.1, window=(-2, 2, -2, 2))
    cloud = Cloud(points=np.array([0.0 + 0j]))
    zeta = 0.4 + 0.3j
    out = pushforward_region(r, cloud, zeta)
    scale = np.exp(zeta / 2.0)
    for a, b in zip(out.boundary, r.boundary):
        assert np.abs(a - b * scale).max() < 1e-12
    assert out.mapped_lattice is not None


def test_pushforward_respects_psi_validation():
    r = sigma_region(disk_handle, 1.0, 0.1, window=(-2, 2, -2, 2))
    cloud = Cloud(points=np.array([0.0 + 0j]))
    out = pushforward_region(r, cloud, 0.9)  # |zeta| < t = 1 required for lattice map
    assert out.component_count == 1


def test_containment_constructed_fractions():
    r = sigma_region(disk_handle, 1.0, 0.05, window=(-2, 2, -2, 2))
    inside = 0.3 * np.exp(2j * np.pi * np.arange(5) / 5)
    outside = 1.7 * np.exp(2j * np.pi * np.arange(5) / 5)
    pts = np.concatenate([inside, outside])
    assert containment_fraction(pts, r) == pytest.approx(0.5)
    assert containment_fraction(inside, r) == 1.0
    assert containment_fraction(outside + 100, r) == 0.0


def test_boundary_csv_and_membership_roundtrip(tmp_path):
    r = sigma_region(annulus_handle, 0.5, 0.1, window=(-3, 3, -3, 3))
    csv_path = tmp_path / "boundary.csv"
    write_boundary_csv(r, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "component_id,vertex_index,re,im"
    cid, vid, re_, im_ = lines[1].split(",")
    z0 = r.boundary[0][0]
    assert (int(cid), int(vid)) == (0, 0)
    assert float(re_) == z0.real and float(im_) == z0.imag
    n_rows = sum(len(b) for b in r.boundary)
    assert len(lines) - 1 == n_rows

    bin_path = tmp_path / "membership.bin"
    write_membership_grid(r, bin_path)
    header, mask = read_membership_grid(bin_path)
    assert header["level"] == r.t and header["resolution"] == r.h
    assert np.array_equal(mask, r.inside)
    assert header["bounds"] == list(r.bounds)
