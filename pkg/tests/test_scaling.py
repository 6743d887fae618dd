import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from free_fermion.momentum import BETA_CRITICAL, T_CRITICAL, mass
from free_fermion.propagators import phi_propagator_field, psi_propagator
from lattice.model import ModelSpec
from scaling.continuum import ContinuumParams, continuum_propagator, continuum_propagator_quadrature
from scaling.lattice import (dressed_lattice_propagator, infinite_lattice_energy_correlation,
                             infinite_phi_propagator, lattice_offset, richardson_grid_propagator,
                             unit_wilson_propagator, unit_wilson_propagator_grid)
from scaling.loops import (check_points, combinatorial_growth, lattice_loop_correlation, mpoint_scaling_correlation,
                           regular_polygon, wick_correlation)
from scaling.sources import CorrelationSourceFactory
from scaling.study import (bound_template, convergence_study, fit_exponent, geometry, template_check,
                           write_study)
from scaling.tuning import tune_beta, tune_t
from utils.exceptions import ConfigurationError, ConvergenceStudyError, GeometryError, ValidationError

MASSIVE = ContinuumParams(m_star=0.5)


def random_points(m, seed):
    rng = np.random.default_rng(seed)
    return [tuple(p) for p in rng.uniform(-1.5, 1.5, size=(m, 2))]


# Continuum propagator

def test_massless_propagator_values():
    """Test g = diag(1/(x1 + i x2), 1/(x1 - i x2)) at m* = 0"""
    g = continuum_propagator((1.0, 0.0), ContinuumParams())
    assert np.allclose(g, np.eye(2), atol=1e-15)
    g = continuum_propagator((0.3, -0.4), ContinuumParams())
    assert g[0, 0] == pytest.approx(1 / complex(0.3, -0.4))
    assert g[1, 1] == pytest.approx(1 / complex(0.3, 0.4))
    assert g[0, 1] == 0 and g[1, 0] == 0


def test_propagator_rejects_origin():
    """Test that x = 0 raises GeometryError"""
    with pytest.raises(GeometryError):
        continuum_propagator((0.0, 0.0), MASSIVE)


@settings(max_examples=30, deadline=None)
@given(x1=st.floats(-3, 3), x2=st.floats(-3, 3), m=st.floats(-2, 2).filter(lambda v: v == 0.0 or abs(v) > 1e-3))
def test_continuum_antisymmetry(x1, x2, m):
    """Test g(-x) = -g(x)^T"""
    if math.hypot(x1, x2) < 1e-3:
        return
    params = ContinuumParams(m_star=m)
    g = continuum_propagator((x1, x2), params)
    assert np.allclose(continuum_propagator((-x1, -x2), params), -g.T, atol=1e-12)


def test_bessel_matches_quadrature():
    """Test the Bessel closed form against the proper-time quadrature at m* = 0.5, |x| = 2"""
    for x in [(2.0, 0.0), (1.2, -1.6), (0.0, 2.0)]:
        assert np.max(np.abs(continuum_propagator(x, MASSIVE) - continuum_propagator_quadrature(x, MASSIVE))) < 1e-8


def test_mass_flip_conjugates_off_diagonal():
    """Test that m* -> -m* flips the off-diagonal entries and keeps the diagonal"""
    g = continuum_propagator((0.7, 0.2), MASSIVE)
    h = continuum_propagator((0.7, 0.2), ContinuumParams(m_star=-0.5))
    assert np.allclose(np.diag(g), np.diag(h))
    assert np.allclose(h[0, 1], np.conj(g[0, 1])) and np.allclose(h[1, 0], np.conj(g[1, 0]))


def test_dressed_propagator_uses_renormalizations():
    """Test that the dressed propagator is Zbar times the bare one at mass Zstar m*"""
    dressed = ContinuumParams(m_star=0.5, Zbar=1.1, Zstar=0.9, lam=0.05)
    bare = ContinuumParams(m_star=0.45)
    assert np.allclose(continuum_propagator((1.0, 0.5), dressed), 1.1 * continuum_propagator((1.0, 0.5), bare))


def test_params_validation():
    """Test the renormalization window and the lambda = 0 constraint"""
    with pytest.raises(ValueError):
        ContinuumParams(Zbar=1.1)
    with pytest.raises(ValueError):
        ContinuumParams(lam=0.1, Zstar=2.0)
    assert ContinuumParams(m_star=0.3).sigma_a == 0.3
    assert ContinuumParams(**{"lambda": 0.1, "Zbar": 1.2}).lam == 0.1


# Dressed lattice propagator

def test_lattice_offset_rejects_off_grid_points():
    """Test that points off the grid raise GeometryError"""
    assert lattice_offset((0.5, -0.25), 0.125) == (4, -2)
    with pytest.raises(GeometryError):
        lattice_offset((0.3, 0.0), 0.125)


def test_grid_matches_quadrature():
    """Test the Richardson grid against the closed p2 integral"""
    for n in [(3, 2), (0, 1), (-2, 0)]:
        estimate = richardson_grid_propagator(n, 0.3, 128)
        assert np.max(np.abs(estimate.value - unit_wilson_propagator(n, 0.3))) < 1e-9


def test_lattice_antisymmetry():
    """Test g(-n) = -g(n)^T for the lattice propagator"""
    g = unit_wilson_propagator((3, -2), 0.2)
    assert np.allclose(unit_wilson_propagator((-3, 2), 0.2), -g.T, atol=1e-10)


@pytest.mark.parametrize("beta", [0.35, 0.5])
def test_unperturbed_lattice_matches_psi_propagator(beta):
    """Test that at lambda = 0 the midpoint grid is the (-,-) psi propagator on the torus"""
    spec = ModelSpec(M=16, beta=beta, a=0.25)
    mu = spec.a * mass(spec)
    for n in [(1, 0), (2, 3), (-4, 1)]:
        expected = psi_propagator(spec, n)
        assert np.max(np.abs(unit_wilson_propagator_grid(n, mu, 16) / spec.a - expected)) < 1e-10


def test_unperturbed_lattice_matches_large_torus():
    """Test the infinite-volume quadrature against the psi propagator of a large torus"""
    spec = ModelSpec(M=128, beta=0.35, a=1.0)
    params = ContinuumParams(m_star=mass(spec), sigma_a=mass(spec))
    for n in [(1, 0), (2, 3)]:
        assert np.max(np.abs(dressed_lattice_propagator(n, spec, params) - psi_propagator(spec, n))) < 1e-8


def test_massless_lattice_propagator_is_finite():
    """Test the quadrature at zero mass against the fine grid"""
    g = unit_wilson_propagator((2, 1), 0.0)
    assert np.all(np.isfinite(g))
    assert np.max(np.abs(g - richardson_grid_propagator((2, 1), 0.0, 512).value)) < 1e-4


def test_lattice_propagator_converges_to_continuum():
    """Test that |g^(a)(x) - g(x)| decreases as a halves at fixed x"""
    x = (0.5, 0.25)
    target = continuum_propagator(x, MASSIVE)
    errors = []
    for N in range(4, 8):
        spec = ModelSpec(M=2, beta=0.4, a=2.0 ** -N)
        errors.append(np.max(np.abs(dressed_lattice_propagator(x, spec, MASSIVE) - target)))
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))


def test_lattice_propagator_rejects_origin_and_method():
    """Test x = 0 and an unknown method"""
    spec = ModelSpec(M=2, beta=0.4, a=0.25)
    with pytest.raises(GeometryError):
        dressed_lattice_propagator((0.0, 0.0), spec, MASSIVE)
    with pytest.raises(ValidationError):
        dressed_lattice_propagator((0.25, 0.0), spec, MASSIVE, method="fft")


def test_infinite_phi_field_matches_torus():
    """Test the infinite-volume Phi propagator against a 32 x 32 torus at high temperature"""
    spec = ModelSpec(M=32, beta=0.3)
    torus = phi_propagator_field(spec)
    offsets = [(0, 0), (1, 0), (0, 2), (-3, 1), (2, -2)]
    values = infinite_phi_propagator(spec, offsets)
    for n in offsets:
        assert np.max(np.abs(values[n] - torus.at(n))) < 1e-8


def test_infinite_energy_correlation_rejects_repeated_bonds():
    """Test that repeated bonds raise GeometryError"""
    spec = ModelSpec(M=4, beta=BETA_CRITICAL, a=0.25)
    with pytest.raises(GeometryError):
        infinite_lattice_energy_correlation(spec, [(0.0, 0.0), (0.0, 0.0)], [1, 1])


# Loop formula

def test_two_point_massless_loop():
    """Test the m = 2 massless value 1/(pi^2 |x - y|^2)"""
    value = mpoint_scaling_correlation([(0.0, 0.0), (0.3, 0.4)], [1, 2], ContinuumParams())
    assert value == pytest.approx(1 / (math.pi ** 2 * 0.25), rel=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_loop_matches_wick_cumulant(m):
    """Test the permutation loop sum against the truncated expectation"""
    for seed in range(3):
        points = random_points(m, seed)
        loop = mpoint_scaling_correlation(points, [1] * m, MASSIVE)
        wick = wick_correlation(points, lambda x: continuum_propagator(x, MASSIVE))
        assert abs(loop - wick) <= 1e-10 * max(1.0, abs(loop))


def test_loop_label_and_order_independence():
    """Test that bond directions and point order leave the value unchanged"""
    points = random_points(4, 7)
    value = mpoint_scaling_correlation(points, [1, 1, 1, 1], MASSIVE)
    assert mpoint_scaling_correlation(points, [2, 1, 2, 1], MASSIVE) == pytest.approx(value, rel=1e-12)
    shuffled = [points[2], points[0], points[3], points[1]]
    assert mpoint_scaling_correlation(shuffled, [1, 1, 1, 1], MASSIVE) == pytest.approx(value, rel=1e-10)


def test_even_loops_invariant_under_mass_flip():
    """Test that even-m values do not depend on the sign of m*"""
    points = random_points(4, 3)
    flipped = ContinuumParams(m_star=-0.5)
    assert mpoint_scaling_correlation(points, [1] * 4, flipped) == pytest.approx(
        mpoint_scaling_correlation(points, [1] * 4, MASSIVE), rel=1e-10)


def test_massless_rotation_covariance():
    """Test that a rotation by pi/2 maps the massless value to itself"""
    points = random_points(4, 11)
    rotated = [(-p[1], p[0]) for p in points]
    params = ContinuumParams()
    assert mpoint_scaling_correlation(rotated, [1] * 4, params) == pytest.approx(
        mpoint_scaling_correlation(points, [1] * 4, params), rel=1e-10)


def test_loop_validation():
    """Test coincident points, the m <= 8 cap and bad labels"""
    with pytest.raises(GeometryError):
        mpoint_scaling_correlation([(0.0, 0.0), (0.0, 0.0)], [1, 1], MASSIVE)
    with pytest.raises(ValidationError):
        check_points([(float(k), 0.0) for k in range(9)])
    with pytest.raises(ValidationError):
        mpoint_scaling_correlation([(0.0, 0.0), (1.0, 0.0)], [1, 3], MASSIVE)


def test_lattice_loop_approaches_continuum():
    """Test that the loop sum with g^(a) approaches the continuum value"""
    points = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.5)]
    target = mpoint_scaling_correlation(points, [1] * 3, MASSIVE)
    coarse = lattice_loop_correlation(points, [1] * 3, ModelSpec(M=2, beta=0.4, a=0.125), MASSIVE)
    fine = lattice_loop_correlation(points, [1] * 3, ModelSpec(M=2, beta=0.4, a=0.03125), MASSIVE)
    assert abs(fine - target) < abs(coarse - target)


def test_combinatorial_growth_is_controlled():
    """Test that the m!-normalized dominant term stays bounded for m in {2, 3, 4}"""
    rows = combinatorial_growth(MASSIVE)
    normalized = {row[0]: row[3] for row in rows}
    assert all(value <= 1.0 for value in normalized.values())
    assert normalized[4] <= normalized[2]
    assert math.dist(*regular_polygon(4)[:2]) == pytest.approx(1.0)


# Beta tuning

def test_tune_beta_at_zero_mass():
    """Test that sigma = 0 gives the critical coupling"""
    assert tune_beta(2.0 ** -6, 0.0) == pytest.approx(BETA_CRITICAL, rel=1e-14)
    assert BETA_CRITICAL == pytest.approx(math.atanh(math.sqrt(2) - 1), rel=1e-14)


def test_tune_beta_unperturbed_example():
    """Test t = t_c / (1 - 2^-7) at a = 2^-6, sigma = 1"""
    t = tune_t(2.0 ** -6, 1.0)
    assert t == pytest.approx(T_CRITICAL / (1 - 2.0 ** -7), rel=1e-14)
    assert t == pytest.approx(T_CRITICAL * (1 + 2.0 ** -7), rel=1e-4)
    spec = ModelSpec(M=4, beta=tune_beta(2.0 ** -6, 1.0), a=2.0 ** -6)
    assert mass(spec) == pytest.approx(1.0, rel=1e-10)


def test_tune_beta_with_shifted_critical_point():
    """Test that sigma(a) is reproduced with t_c(lambda) != t_c(0)"""
    tc = 0.42
    beta = tune_beta(0.125, -0.8, lam=0.05, tc_lambda=tc)
    spec = ModelSpec(M=4, beta=beta, a=0.125)
    assert mass(spec, tc) == pytest.approx(-0.8, rel=1e-10)


def test_tune_beta_without_solution():
    """Test that unreachable sigma raises ValidationError"""
    with pytest.raises(ValidationError):
        tune_beta(1.0, 10.0)
    with pytest.raises(ValidationError):
        tune_beta(0.5, 0.0, tc_lambda=1.2)


# Sources and studies

def test_source_factory():
    """Test registration, listing and unknown sources"""
    factory = CorrelationSourceFactory()
    assert set(factory.list_sources()) == {"free", "torus", "mc", "dressed-loop"}
    with pytest.raises(ConfigurationError):
        factory.get_source("exact", MASSIVE)
    with pytest.raises(ValidationError):
        factory.get_source("free", ContinuumParams(lam=0.1)).evaluate([(0.0, 0.0), (0.5, 0.0)], [1, 1], 0.125)


def test_torus_source_matches_infinite_volume_when_massive():
    """Test the torus and infinite-lattice sources at a short correlation length"""
    params = ContinuumParams(m_star=-4.0)
    factory = CorrelationSourceFactory()
    points, labels = [(0.0, 0.0), (0.25, 0.0)], [1, 1]
    free = factory.get_source("free", params).evaluate(points, labels, 0.125).value
    torus = factory.get_source("torus", params, L=4.0).evaluate(points, labels, 0.125).value
    assert torus == pytest.approx(free, rel=1e-4)


def test_geometry_and_template():
    """Test delta, diameter and the bound template"""
    delta, diameter = geometry([(0.0, 0.0), (1.0, 0.0), (4.0, 0.0)])
    assert (delta, diameter) == (1.0, 4.0)
    assert bound_template(1.0, 2.0, 0.25) == pytest.approx(0.5 ** 1.5)
    assert fit_exponent([0.5, 0.25, 0.125], [0.25, 0.0625, 0.015625]) == pytest.approx(2.0)


def test_study_rejects_bad_input():
    """Test fewer than four scales and nearly coincident points"""
    with pytest.raises(ConvergenceStudyError):
        convergence_study([(0.0, 0.0), (0.5, 0.0)], [4, 5, 6], ContinuumParams())
    with pytest.raises(GeometryError):
        convergence_study([(0.0, 0.0), (2.0 ** -10, 0.0)], [4, 5, 6, 7], ContinuumParams())


def test_template_check_rows():
    """Test that template rows are ordered by diameter"""
    geometries = [[(0.0, 0.0), (0.25, 0.0), (1.0, 0.0)], [(0.0, 0.0), (0.25, 0.0), (0.5, 0.0)]]
    report = template_check(geometries, 3, MASSIVE, source="dressed-loop")
    diameters = [row[2] for row in report["rows"]]
    assert diameters == sorted(diameters)
    assert report["rows"][0][3] == pytest.approx(bound_template(0.25, 0.5))


@pytest.mark.slow
def test_two_point_convergence_study():
    """Test monotone residuals and a fitted exponent >= 0.8 for the massless two-point function"""
    study = convergence_study([(0.0, 0.0), (0.25, 0.0)], range(4, 10), ContinuumParams())
    assert study.monotone
    assert study.theta >= 0.8
    assert study.table[-1][4] == pytest.approx(1 / (math.pi ** 2 * 0.0625))


@pytest.mark.slow
def test_four_point_convergence_study(tmp_path):
    """Test that the four-point lattice values approach the loop formula"""
    points = [(0.0, 0.0), (0.25, 0.0), (0.25, 0.25), (0.0, 0.25)]
    study = convergence_study(points, range(3, 7), MASSIVE, source="dressed-loop")
    assert abs(study.residuals[-1]) < abs(study.residuals[0])
    assert study.theta > 0
    paths = write_study(study, tmp_path)
    assert all(p.exists() for p in paths)
