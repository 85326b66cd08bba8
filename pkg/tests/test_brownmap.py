import numpy as np
import pytest

from glbm import (
    CircleMeasure,
    Cloud,
    InitialSpectralData,
    InvalidParameterError,
    RngStream,
    UndefinedTransformError,
    circle_measure_from_init,
    identity_init,
    j_transform,
    non_normal_block_init,
    psi_map,
    roots_of_unity_init,
    sample_ginibre,
    spectral_data_from_init,
    t_general,
    t_unitary,
)

D1 = CircleMeasure.point()
T_D1_AT_2 = 0.46209812037329684  # log(4)/3


def test_circle_measure_validation():
    with pytest.raises(InvalidParameterError):
        CircleMeasure(angles=np.array([0.0, 1.0]), weights=np.array([0.5, 0.6]))
    with pytest.raises(InvalidParameterError):
        CircleMeasure(angles=np.array([0.0]), weights=np.array([-1.0]))
    u6 = CircleMeasure.roots_of_unity(6)
    assert u6.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(np.abs(u6.points), 1.0)


def test_t_unitary_point_mass_values():
    assert t_unitary(D1, 2.0 + 0j) == pytest.approx(T_D1_AT_2, abs=1e-12)
    # removable |z| = 1 factor: the value explaining the level-4 transition
    assert t_unitary(D1, -1.0 + 0j) == pytest.approx(4.0, abs=1e-10)
    # atoms give the limiting value 0
    assert t_unitary(D1, 1.0 + 0j) == 0.0
    # the origin is never in a sublevel set
    assert t_unitary(D1, 0.0 + 0j) == np.inf


def test_t_unitary_series_branch_is_continuous():
    for phi in (0.3, 2.0):
        z = np.exp(1j * phi)
        on = t_unitary(D1, z)
        lo = t_unitary(D1, (1 - 1e-6) * z)
        hi = t_unitary(D1, (1 + 1e-6) * z)
        assert abs(on - 0.5 * (lo + hi)) < 1e-5


def test_t_unitary_rotation_covariance():
    u6 = CircleMeasure.roots_of_unity(6)
    alpha = 0.7
    rotated = CircleMeasure(angles=u6.angles + alpha, weights=u6.weights)
    zs = np.array([0.3 + 0.2j, 1.5 - 0.4j, -2.0 + 1.0j])
    Ta = t_unitary(rotated, np.exp(1j * alpha) * zs)
    Tb = t_unitary(u6, zs)
    assert np.abs(Ta - Tb).max() < 1e-12


def test_t_general_matches_unitary_on_circle_data():
    u6 = CircleMeasure.roots_of_unity(6)
    data = InitialSpectralData.atomic([(p, 1 / 6) for p in u6.points])
    xs = np.linspace(-2, 2, 41)
    zz = (xs[None, :] + 1j * xs[:, None]).ravel()
    keep = np.abs(np.abs(zz) - 1.0) > 1e-3
    zz = zz[keep]
    tg, tu = t_general(data, zz), t_unitary(u6, zz)
    both_inf = np.isinf(tg) & np.isinf(tu)  # z = 0 on both routes
    assert np.array_equal(np.isinf(tg), np.isinf(tu))
    assert np.abs(tg[~both_inf] - tu[~both_inf]).max() <= 1e-10


def test_t_general_point_mass_at_one():
    data = InitialSpectralData.atomic([(1.0 + 0j, 1.0)])
    assert t_general(data, 2.0 + 0j) == pytest.approx(T_D1_AT_2, abs=1e-12)


def test_t_general_scaling_covariance():
    # data c*delta_1 at c*z equals point-mass data at z, for any complex c
    for c in (2.0, 0.5, 1.5 - 2.0j):
        data = InitialSpectralData.atomic([(c, 1.0)])
        for z in (0.5 + 0j, 2.0 + 0j, 0.3 - 0.8j):
            assert t_general(data, c * z) == pytest.approx(t_unitary(D1, z), rel=1e-12)


def test_t_general_positive_on_unit_circle_for_scaled_atom():
    # |c| != 1 keeps the formula off its removable locus on |z| = 1; values
    # must be positive and match the two-sided offset limit
    for c in (2.0, 0.25):
        data = InitialSpectralData.atomic([(c, 1.0)])
        z = np.exp(0.4j)
        on = t_general(data, z)
        assert on > 0
        lo = t_general(data, (1 - 1e-6) * z)
        hi = t_general(data, (1 + 1e-6) * z)
        assert abs(on - 0.5 * (lo + hi)) < 1e-6


def test_t_general_removable_locus_branch():
    # for the unit point mass the locus |z|^2 p0 = p2 is |z| = 1; crossing it
    # radially must be smooth through the series branch
    data = InitialSpectralData.atomic([(1.0 + 0j, 1.0)])
    z = np.exp(1.1j)
    vals = [t_general(data, r * z) for r in (1 - 1e-10, 1.0, 1 + 1e-10)]
    assert abs(vals[1] - 0.5 * (vals[0] + vals[2])) < 1e-9
    assert vals[1] == pytest.approx(t_unitary(D1, z), rel=1e-10)


def test_t_general_point_spectrum_sentinel():
    data = InitialSpectralData.atomic([(2.0 + 0j, 1.0)])
    assert t_general(data, 2.0 + 0j) == 0.0


def test_t_general_matrix_route_matches_atomic():
    lams = [1.5 + 0.5j, -0.7 + 0.1j, 2.0 - 1.0j]
    data_a = InitialSpectralData.atomic([(l, 1 / 3) for l in lams])
    data_m = InitialSpectralData.from_matrix(np.diag(lams))
    zs = np.array([0.2 + 0.3j, -1.0 + 0.8j, 3.0 + 0j, 0.9j])
    assert np.abs(t_general(data_a, zs) - t_general(data_m, zs)).max() < 1e-10


def test_matrix_data_must_be_invertible():
    with pytest.raises(InvalidParameterError):
        InitialSpectralData.from_matrix(np.diag([1.0, 0.0]))


def test_spectral_data_from_init():
    d = spectral_data_from_init(identity_init())
    assert d.atoms == ((1.0 + 0j, 1.0),)
    d6 = spectral_data_from_init(roots_of_unity_init(6))
    assert len(d6.atoms) == 6
    blk = non_normal_block_init([[1 + 1j, 1.0], [0.0, -1 + 1j]])
    dm = spectral_data_from_init(blk)
    assert dm.matrix.shape == (2, 2)
    m6 = circle_measure_from_init(roots_of_unity_init(6))
    assert m6.angles.size == 6
    with pytest.raises(InvalidParameterError):
        circle_measure_from_init(blk)


def test_j_transform_point_mass():
    cloud = Cloud(points=np.array([1.0 + 0j]))
    val, excl = j_transform(cloud, 0.0 + 0j)
    assert val == 0.5 and excl == 0.0
    z = 0.3 - 0.4j
    val2, _ = j_transform(cloud, z)
    assert val2 == pytest.approx(0.5 * (1 + z) / (1 - z), rel=1e-14)


def test_j_transform_exclusion_and_error():
    cloud = Cloud(points=np.array([0.0 + 0j, 1.0 + 0j]))
    # radius large enough to swallow both points
    with pytest.raises(UndefinedTransformError):
        j_transform(cloud, 0.5 + 0j, exclusion_radius=2.0)
    val, excl = j_transform(cloud, 0.3 + 0j, exclusion_radius=0.4)
    assert excl == pytest.approx(0.5)  # the nearby point is dropped
    assert val == pytest.approx(0.5 * 0.5 * (1 + 0.3) / (1 - 0.3), rel=1e-14)


def test_j_transform_far_field_expansion():
    pts = sample_ginibre(512, 1.0, RngStream(30, 0)).ravel()[:1024]
    cloud = Cloud(points=pts)
    m1 = cloud.weights @ cloud.points
    m2 = cloud.weights @ cloud.points ** 2
    for z in (10.0 + 0j, 7j, -6.0 - 8.0j):
        val, _ = j_transform(cloud, z)
        approx = -0.5 - m1 / z - m2 / z ** 2
        assert abs(val - approx) < 1e-3


def test_psi_map_values():
    cloud = Cloud(points=np.array([1.0 + 0j]))
    assert psi_map(cloud, 3.0, 1.0, 0.0 + 0j) == 0.0
    assert psi_map(cloud, 3.0, 0.0, 2.0 + 0j) == 2.0 + 0j
    # J(2) = (1/2)(1+2)/(1-2) = -3/2, and Psi = z exp(-zeta J)
    expect = 2.0 * np.exp(1.5)
    assert psi_map(cloud, 3.0, 1.0, 2.0 + 0j) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(InvalidParameterError):
        psi_map(cloud, 1.0, 2.0, 0.5 + 0j)  # |zeta| >= t


def test_psi_map_pushes_moments_onto_deformed_law():
    # the orientation oracle: pushing the undeformed endpoint cloud must
    # reproduce the exact holomorphic moments of the deformed law,
    # mean z = e^{zeta/2} and mean z^2 = e^{zeta}(1 + zeta)
    from glbm import eigenvalues
    from glbm.harness.verify import sim_endpoint

    t, zeta = 1.5, 0.6 + 0.3j
    lam0 = eigenvalues(sim_endpoint(t, 0j, 1.0, 128, 384, RngStream(60, 0))).eigenvalues
    psi = psi_map(Cloud(points=lam0), t, zeta, lam0)
    m1, m2 = psi.mean(), (psi ** 2).mean()
    assert abs(m1 - np.exp(zeta / 2)) < 0.1
    assert abs(m2 - np.exp(zeta) * (1 + zeta)) < 0.35


def test_cloud_normalization_and_radius():
    cloud = Cloud(points=np.array([0.0 + 0j, 3.0 + 4.0j]), weights=np.array([2.0, 2.0]))
    assert np.allclose(cloud.weights, 0.5)
    assert cloud.diameter == pytest.approx(5.0)
    assert cloud.exclusion_radius == pytest.approx(3 * 5.0 / np.sqrt(2))
