import math

import numpy as np
import pytest

from free_fermion.correlations import (boundary_moment_weights, decay_exponent, energy_correlation_table,
                                       free_mpoint_energy_correlation)
from free_fermion.momentum import (BETA_CRITICAL, BOUNDARY_LABELS, C_CHI, SIGMA2, T_CRITICAL, MomentumGrid,
                                   chi_form, counterterm, coupling_form, critical_mode_transform,
                                   critical_temperature_from_counterterm, parse_alpha, psi_form,
                                   quadratic_form, quadratic_form_bundle, schur_psi_form, sigma_psi, tau,
                                   wilson_correction)
from free_fermion.partition import (log_abs_partition_function_bc, partition_function, partition_function_bc,
                                    partition_function_report)
from free_fermion.propagators import (chi_local_weight, chi_propagator_field, decay_profile, generator_index,
                                      mode_propagator_from_phi, phi_action_matrix, phi_propagator_field,
                                      psi_block, psi_propagator, psi_propagator_field)
from free_fermion.symmetry import local_form, symmetry_check
from grassmann.wick import propagator_from_action
from lattice.enumeration import exact_partition_function, exact_truncated_energy_correlation
from lattice.model import BondIndex, ModelSpec
from utils.exceptions import (EnumerationLimitError, RepeatedBondError, SingularModeError,
                              ValidationError)


def random_momenta(count, seed=0, a=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.pi / a, math.pi / a, size=(count, 2))


# Momentum grids and quadratic forms

def test_grid_closed_under_negation():
    """Test that every grid is closed under k -> -k"""
    for alpha in BOUNDARY_LABELS:
        grid = MomentumGrid(5, alpha, 0.5)
        points = grid.points()
        neg = grid.negation_index()
        period = 2 * math.pi / grid.a
        diff = (points[neg] + points) / period
        assert np.allclose(diff, np.round(diff), atol=1e-12)
        assert len(points) == 25
    assert MomentumGrid(4, "++").contains_zero
    assert not MomentumGrid(4, "+-").contains_zero


def test_boundary_labels():
    """Test label parsing and the tau signs"""
    assert parse_alpha("+-") == (1, -1)
    assert parse_alpha("(-,-)") == (-1, -1)
    assert tau((1, 1)) == -1 and tau((-1, 1)) == 1
    with pytest.raises(ValidationError):
        parse_alpha("+")


def test_quadratic_form_antisymmetry():
    """Test C(k) = -C(-k)^T at random momenta"""
    spec = ModelSpec(M=4, beta=0.3, a=0.5)
    for k in random_momenta(10, a=0.5):
        assert np.max(np.abs(quadratic_form(spec, k) + quadratic_form(spec, -k).T)) < 1e-14


def test_quadratic_form_rejects_bad_temperature():
    """Test that t outside (0, 1) raises"""
    with pytest.raises(ValidationError):
        quadratic_form(ModelSpec(M=4, beta=0.0), (0.0, 0.0))


@pytest.mark.parametrize("a", [1.0, 0.25])
def test_critical_eigenvalues_at_zero_momentum(a):
    """Test the spectrum {0, 0, +-i sqrt(2)/a} at t = t_c and k = 0"""
    spec = ModelSpec(M=4, beta=BETA_CRITICAL, a=a)
    eig = np.sort_complex(np.linalg.eigvals(quadratic_form(spec, (0.0, 0.0))))
    expected = np.sort_complex(np.array([-1j * math.sqrt(2) / a, 0, 0, 1j * math.sqrt(2) / a]))
    assert np.allclose(eig, expected, atol=1e-7 / a)


@pytest.mark.parametrize("beta", [0.3, BETA_CRITICAL, 0.6])
def test_mode_transform_matches_closed_forms(beta):
    """Test that the U transform reproduces C_psi, C_chi and Q entrywise"""
    spec = ModelSpec(M=4, beta=beta, a=0.5)
    for k in random_momenta(8, seed=1, a=0.5):
        C_psi, C_chi, Q = critical_mode_transform(spec, k)
        assert np.max(np.abs(C_psi - psi_form(spec, k))) < 1e-12
        assert np.max(np.abs(C_chi - chi_form(spec, k))) < 1e-12
        assert np.max(np.abs(Q - coupling_form(spec, k))) < 1e-12


def test_coupling_form_at_quarter_turn():
    """Test Q at k = (pi/(2a), 0) against direct evaluation"""
    a = 0.5
    spec = ModelSpec(M=4, beta=0.35, a=a)
    Q = coupling_form(spec, (math.pi / (2 * a), 0.0))
    # s1 = 1, s2 = 0, c1 - c2 = -1
    expected = np.array([[-1j, -1j], [1j, -1j]]) / a
    assert np.max(np.abs(Q - expected)) < 1e-12


def test_sigma_psi_vanishes_at_criticality():
    """Test sigma_psi(0) = 0 at t = t_c"""
    spec = ModelSpec(M=4, beta=BETA_CRITICAL)
    assert abs(spec.t - T_CRITICAL) < 1e-14
    assert abs(sigma_psi(spec, (0.0, 0.0))) < 1e-14


def test_bundle_invariants():
    """Test unitarity of U and antisymmetry of C in the bundle"""
    spec = ModelSpec(M=4, beta=0.35)
    bundle = quadratic_form_bundle(spec, (0.3, -1.1))
    assert bundle.unitarity_defect() < 1e-12
    assert bundle.antisymmetry_defect(spec) < 1e-14
    assert bundle.nu == 0.0


def test_determinant_factorizes_after_elimination():
    """Test |det C| = (t/4)^4 |det C_chi det(C_psi - Q C_chi^{-1} Q)|"""
    spec = ModelSpec(M=4, beta=0.37)
    t = spec.t
    for k in random_momenta(6, seed=2):
        lhs = abs(np.linalg.det(quadratic_form(spec, k)))
        rhs = (t / 4) ** 4 * abs(np.linalg.det(chi_form(spec, k)) * np.linalg.det(schur_psi_form(spec, k)))
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_counterterm_round_trip():
    """Test nu <-> t_c(lambda) and nu = 0 without a shift"""
    assert counterterm(None) == 0.0
    nu = counterterm(0.43)
    assert critical_temperature_from_counterterm(nu) == pytest.approx(0.43, rel=1e-14)
    with pytest.raises(ValidationError):
        critical_temperature_from_counterterm(1.0)


def test_wilson_correction_is_quadratic():
    """Test |Q C_chi^{-1} Q| <= c a |k|^2 for |k| <= 0.1 / a"""
    for a in (1.0, 0.25):
        spec = ModelSpec(M=4, beta=BETA_CRITICAL, a=a)
        assert np.max(np.abs(wilson_correction(spec, (0.0, 0.0)))) < 1e-15
        rng = np.random.default_rng(3)
        ratios = []
        for _ in range(20):
            direction = rng.standard_normal(2)
            direction /= np.linalg.norm(direction)
            size = rng.uniform(0.01, 0.1) / a
            k = size * direction
            ratios.append(np.linalg.norm(wilson_correction(spec, k), 2) / (a * size ** 2))
        assert max(ratios) < 1.0


# Partition functions

@pytest.mark.parametrize("M,beta", [(2, 0.3), (2, 0.7), (3, 0.25), (3, BETA_CRITICAL), (4, 0.5)])
def test_four_pfaffian_identity(M, beta):
    """Test 1/2 sum tau_alpha Z_alpha against exhaustive enumeration"""
    spec = ModelSpec(M=M, beta=beta)
    assert partition_function(spec) == pytest.approx(exact_partition_function(spec), rel=1e-9)


def test_infinite_temperature_pfaffians():
    """Test Z_alpha = 2^{M^2} for every label at beta = 0"""
    spec = ModelSpec(M=3, beta=0.0)
    report = partition_function_report(spec)
    for alpha in BOUNDARY_LABELS:
        assert report.by_boundary[alpha] == pytest.approx(512.0)
    assert report.total == pytest.approx(512.0)
    assert sum(report.weight(alpha) for alpha in BOUNDARY_LABELS) == pytest.approx(1.0)


def test_periodic_pfaffian_vanishes_at_criticality():
    """Test Z_{++} = 0 at t = t_c"""
    spec = ModelSpec(M=4, beta=BETA_CRITICAL)
    z_pp = partition_function_bc(spec, (1, 1))
    z_mm = partition_function_bc(spec, (-1, -1))
    assert abs(z_pp) <= 1e-10 * abs(z_mm)


def test_momentum_factorization_matches_pfaffian():
    """Test log |Z_alpha| from 4x4 momentum blocks against the position-space Pfaffian"""
    spec = ModelSpec(M=4, beta=0.35)
    for alpha in BOUNDARY_LABELS:
        direct = math.log(abs(partition_function_bc(spec, alpha)))
        assert log_abs_partition_function_bc(spec, alpha) == pytest.approx(direct, rel=1e-10)


def test_partition_requires_free_model(make_spec):
    """Test the lambda = 0 precondition"""
    with pytest.raises(ValidationError):
        partition_function(make_spec(M=3, beta=0.3, lam=0.1))


@pytest.mark.slow
@pytest.mark.parametrize("beta,ordered", [(0.6, True), (0.3, False)])
def test_boundary_sign_pattern(beta, ordered):
    """Test that tau_alpha Z_alpha share one sign only in the ordered phase"""
    spec = ModelSpec(M=8, beta=beta)
    report = partition_function_report(spec)
    signed = [tau(alpha) * report.by_boundary[alpha] for alpha in BOUNDARY_LABELS]
    if ordered:
        assert report.by_boundary[(1, 1)] < 0
        assert all(s > 0 for s in signed)
    else:
        assert all(report.by_boundary[alpha] > 0 for alpha in BOUNDARY_LABELS)
        assert signed[0] < 0


# Propagators

def test_phi_field_matches_position_space_inverse():
    """Test the momentum-sum Phi propagator against the inverse of the action matrix"""
    spec = ModelSpec(M=3, beta=0.33)
    for alpha in BOUNDARY_LABELS:
        G = propagator_from_action(phi_action_matrix(spec, alpha))
        field = phi_propagator_field(spec, alpha)
        for x in [(0, 0), (1, 2), (2, 1)]:
            for y in [(0, 0), (2, 2)]:
                block = field.at((x[0] - y[0], x[1] - y[1]))
                for i in range(4):
                    for j in range(4):
                        if (x, i) == (y, j):
                            continue
                        expected = G[generator_index(x, i, 3), generator_index(y, j, 3)]
                        assert block[i, j] == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("alpha", [(-1, -1), (1, -1)])
def test_psi_propagator_matches_grassmann_oracle_2x2(alpha):
    """Test the corrected psi propagator on the 2x2 torus against the full 16-generator inverse"""
    spec = ModelSpec(M=2, beta=0.35)
    G = propagator_from_action(phi_action_matrix(spec, alpha))
    modes = mode_propagator_from_phi(spec, G)
    field = psi_propagator_field(spec, alpha, use_correction=True)
    for x in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        for y in [(0, 0), (1, 1)]:
            oracle = psi_block(modes, 2, x, y)
            value = field.at((x[0] - y[0], x[1] - y[1]))
            if x == y:
                # same-site diagonal entries are theta_i theta_i
                value = value.copy()
                oracle = oracle.copy()
                np.fill_diagonal(value, 0.0)
                np.fill_diagonal(oracle, 0.0)
            assert np.max(np.abs(value - oracle)) < 1e-10


@pytest.mark.parametrize("use_correction", [False, True])
def test_propagator_antisymmetry(use_correction):
    """Test g(-x) = -g(x)^T on the torus"""
    spec = ModelSpec(M=6, beta=0.4, a=0.5)
    field = psi_propagator_field(spec, (-1, 1), use_correction=use_correction)
    assert field.antisymmetry_defect() < 1e-10
    assert chi_propagator_field(spec, (1, -1)).antisymmetry_defect() < 1e-10


def test_fft_matches_direct_sum():
    """Test the FFT path against the direct momentum sum"""
    spec = ModelSpec(M=8, beta=BETA_CRITICAL)
    fft = psi_propagator_field(spec, (-1, -1), fft_crossover=1)
    direct = psi_propagator_field(spec, (-1, -1), fft_crossover=1000)
    assert np.max(np.abs(fft.values - direct.values)) < 1e-12
    single = psi_propagator(spec, (3, -2), (-1, -1), fft_crossover=1000)
    assert np.max(np.abs(single - fft.at((3, -2)))) < 1e-12


def test_twisted_periodicity():
    """Test g(x + M e_i) = alpha_i g(x)"""
    spec = ModelSpec(M=5, beta=0.4)
    field = psi_propagator_field(spec, (1, -1))
    assert np.allclose(field.at((6, 2)), field.at((1, 2)))
    assert np.allclose(field.at((1, 7)), -field.at((1, 2)))


def test_massless_periodic_mode_reported():
    """Test the structured error for the (+,+) zero mode at criticality"""
    spec = ModelSpec(M=4, beta=BETA_CRITICAL)
    with pytest.raises(SingularModeError) as exc:
        psi_propagator_field(spec, (1, 1))
    assert exc.value.alpha == (1, 1)
    assert exc.value.condition_number > 1e12


@pytest.mark.parametrize("a", [1.0, 0.25])
def test_chi_local_weight(a):
    """Test a^{-1} sum_x a^2 g^chi(x) = -(2 pi / c_chi) sigma_2 at t_c"""
    spec = ModelSpec(M=6, beta=BETA_CRITICAL, a=a)
    expected = -(2 * math.pi / C_CHI) * SIGMA2
    assert np.max(np.abs(chi_local_weight(spec) - expected)) < 1e-12


def test_chi_propagator_decays_exponentially():
    """Test that g^chi falls off geometrically along a lattice axis"""
    spec = ModelSpec(M=32, beta=BETA_CRITICAL)
    field = chi_propagator_field(spec, (-1, -1))
    norms = decay_profile(field, [(n, 0) for n in range(1, 7)])
    assert np.all(norms[1:] < 0.5 * norms[:-1])
    slope = np.polyfit(np.arange(1, 7), np.log(norms), 1)[0]
    assert slope < -1.0


def test_field_csv_export(tmp_path):
    """Test the CSV layout of a 2x2 field"""
    spec = ModelSpec(M=3, beta=0.3)
    path = psi_propagator_field(spec).write_csv(tmp_path / "g.csv")
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:4] == ["x1", "x2", "re_00", "im_00"]
    assert len(lines) == 1 + 9


# Energy correlations

def test_two_point_correlation_matches_enumeration():
    """Test the exact boundary mixture against enumeration on the 3x3 torus"""
    spec = ModelSpec(M=3, beta=0.3)
    bonds = [BondIndex((0, 0), 1), BondIndex((1, 1), 2)]
    free = free_mpoint_energy_correlation(spec, bonds, boundary="combined")
    assert free == pytest.approx(exact_truncated_energy_correlation(spec, bonds), rel=1e-9, abs=1e-12)


def test_three_point_correlation_matches_enumeration():
    """Test a third-order cumulant against enumeration"""
    spec = ModelSpec(M=3, beta=0.42, a=0.5)
    bonds = [BondIndex((0, 0), 1), BondIndex((0, 1), 1), BondIndex((2, 0), 2)]
    free = free_mpoint_energy_correlation(spec, bonds, boundary="combined")
    assert free == pytest.approx(exact_truncated_energy_correlation(spec, bonds), rel=1e-8, abs=1e-12)


def test_moment_weights_normalization():
    """Test that the empty-set weight is twice the partition function"""
    spec = ModelSpec(M=3, beta=0.3)
    weights = boundary_moment_weights(spec, [BondIndex((0, 0), 1)])
    assert weights[0] == pytest.approx(2 * exact_partition_function(spec), rel=1e-9)


def test_correlation_permutation_invariance():
    """Test that reordering bonds leaves the cumulant unchanged"""
    spec = ModelSpec(M=4, beta=0.35)
    bonds = [BondIndex((0, 0), 1), BondIndex((2, 1), 2), BondIndex((1, 3), 1)]
    a = free_mpoint_energy_correlation(spec, bonds)
    b = free_mpoint_energy_correlation(spec, bonds[::-1])
    assert a == pytest.approx(b, rel=1e-10, abs=1e-15)


def test_correlation_errors(make_spec):
    """Test repeated bonds, order above six and lambda != 0"""
    spec = ModelSpec(M=4, beta=0.35)
    with pytest.raises(RepeatedBondError):
        free_mpoint_energy_correlation(spec, [BondIndex((0, 0), 1), BondIndex((4, 0), 1)])
    with pytest.raises(EnumerationLimitError):
        free_mpoint_energy_correlation(spec, [BondIndex((i, 0), 1) for i in range(4)]
                                       + [BondIndex((i, 0), 2) for i in range(3)])
    with pytest.raises(ValidationError):
        free_mpoint_energy_correlation(make_spec(M=4, beta=0.3, lam=0.1), [BondIndex((0, 0), 1)])


def test_correlation_table_rows():
    """Test the table layout used for CSV export"""
    spec = ModelSpec(M=6, beta=0.3)
    rows = energy_correlation_table(spec, BondIndex((0, 0), 1), [2, 3])
    assert [row[6] for row in rows] == [2, 3]
    assert rows[0][3:6] == [2, 0, 1]


@pytest.mark.slow
def test_critical_energy_correlation_decay():
    """Test the inverse-square decay of the energy two-point function at criticality"""
    spec = ModelSpec(M=128, beta=BETA_CRITICAL)
    separations = [8, 12, 16, 24]
    values = [free_mpoint_energy_correlation(spec, [BondIndex((0, 0), 1), BondIndex((r, 0), 1)])
              for r in separations]
    assert decay_exponent(separations, values) == pytest.approx(-2.0, abs=0.25)


# Symmetries

@pytest.mark.parametrize("tid", [1, 2, 3, 4])
def test_symmetries_hold(tid):
    """Test invariance of the quadratic kernels and energy sources"""
    spec = ModelSpec(M=8, beta=0.4, a=0.5)
    report = symmetry_check(spec, tid)
    assert report.passed, report.violations


def test_local_form_of_corrected_kernel():
    """Test the two-real-parameter linearization Z = -1, m = -sigma"""
    spec = ModelSpec(M=8, beta=0.4)
    report = symmetry_check(spec, 1)
    form = report.local_forms["C_sigma"]
    assert form.is_two_parameter
    assert form.Z.real == pytest.approx(-1.0, abs=1e-8)
    sigma = quadratic_form_bundle(spec, (0.0, 0.0)).sigma
    assert form.mass.real == pytest.approx(-sigma, abs=1e-8)


def test_counterterm_local_form():
    """Test that the constant sigma_2 kernel is a pure mass term"""
    form = local_form(lambda k: SIGMA2.copy())
    assert form.is_two_parameter
    assert abs(form.Z) < 1e-12
    assert form.mass == pytest.approx(1.0)


def test_perturbed_kernel_flagged():
    """Test that an added constant entry breaks complex conjugation"""
    spec = ModelSpec(M=8, beta=0.4)

    def perturbed(k):
        K = psi_form(spec, k).copy()
        K[..., 0, 1] += 1e-3
        return K

    report = symmetry_check(spec, 4, kernels={"perturbed": perturbed}, include_sources=False)
    assert not report.passed
    assert report.max_defect["perturbed"] > 1e-5
    assert symmetry_check(spec, 1, kernels={"perturbed": perturbed}, include_sources=False).passed


def test_unknown_transformation():
    """Test the transformation id range"""
    with pytest.raises(ValidationError):
        symmetry_check(ModelSpec(M=4, beta=0.3), 5)
