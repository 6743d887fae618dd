import math

import numpy as np
import pytest
from pydantic import ValidationError as PydanticValidationError

from lattice.enumeration import (enumerate_moments, exact_partition_function, exact_spin_correlation,
                                 exact_truncated_energy_correlation, hamiltonian, source_derivative_sums,
                                 transfer_matrix_moment)
from lattice.model import (BondIndex, ModelSpec, SpinConfiguration, all_bonds, diagonal_interaction,
                           interacting_pairs, minimal_image, symmetric_interaction)
from free_fermion.correlations import free_mpoint_energy_correlation
from free_fermion.momentum import BETA_CRITICAL
from lattice.monte_carlo import (SpinSampler, boltzmann_weights, choose_method, jackknife_cumulant,
                                 mc_estimate_energy_correlation, metropolis_transition_matrix, sweep_generator)
from utils.exceptions import EnumerationLimitError, RepeatedBondError, ValidationError


def test_spec_rejects_bad_tables():
    """Test the interaction-table invariants"""
    with pytest.raises(PydanticValidationError):
        ModelSpec(M=3, beta=0.2, lam=0.1, v_table={(1, 0): 0.5, (-1, 0): 0.5, (0, 1): 0.5, (0, -1): 0.5})
    with pytest.raises(PydanticValidationError):
        ModelSpec(M=3, beta=0.2, lam=0.1, v_table={(1, 1): 1.0, (-1, -1): 1.0})
    with pytest.raises(PydanticValidationError):
        ModelSpec(M=1, beta=0.2)


def test_spec_parses_list_tables_and_alias():
    """Test the JSON-style table and the lambda alias"""
    entries = [{"offset": list(k), "value": v} for k, v in diagonal_interaction().items()]
    spec = ModelSpec.model_validate({"M": 3, "beta": 0.2, "lambda": 0.05, "v_table": entries})
    assert spec.lam == 0.05
    assert spec.v((1, -1)) == 0.5
    assert spec.M0 == 2


def test_symmetric_interaction_normalized():
    """Test orbit expansion and normalization"""
    table = symmetric_interaction({(2, 0): 1.0, (2, 1): 1.0})
    assert 0.5 * sum(abs(v) for v in table.values()) == pytest.approx(1.0)
    assert table[(0, -2)] == table[(2, 0)]
    assert table[(-1, 2)] == table[(2, 1)]


def test_hamiltonian_small_examples():
    """Test the all-up and checkerboard energies on the 2x2 torus"""
    spec = ModelSpec(M=2, beta=0.3)
    up = SpinConfiguration.from_list([1, 1, 1, 1], 2)
    checker = SpinConfiguration.from_list([1, -1, -1, 1], 2)
    assert hamiltonian(spec, up) == -8.0
    assert hamiltonian(spec, checker) == 8.0


def test_hamiltonian_matches_double_loop(make_spec):
    """Test the pair sum against an independent double loop over sites"""
    spec = make_spec(M=3, beta=0.2, lam=0.1)
    rng = np.random.default_rng(0)
    spins = [int(s) for s in rng.choice([-1, 1], size=9)]
    cfg = SpinConfiguration.from_list(spins, 3)
    M = 3

    def s(x1, x2):
        return spins[(x1 % M) * M + x2 % M]

    energy = 0.0
    for x1 in range(M):
        for x2 in range(M):
            energy -= s(x1, x2) * (s(x1 + 1, x2) + s(x1, x2 + 1))
    pairs = set()
    for x in range(M * M):
        for y in range(M * M):
            if x < y:
                d = (minimal_image(y // M - x // M, M), minimal_image(y % M - x % M, M))
                if spec.v(d) != 0.0:
                    pairs.add((x, y, spec.v(d)))
    for x, y, v in pairs:
        energy -= 0.1 * v * spins[x] * spins[y]
    assert hamiltonian(spec, cfg) == pytest.approx(energy, abs=1e-12)


def test_interacting_pairs_unordered():
    """Test that each unordered pair appears once"""
    spec = ModelSpec(M=4, beta=0.1, lam=0.2, v_table=diagonal_interaction())
    pairs = interacting_pairs(spec)
    keys = [(p.x, p.y) for p in pairs]
    assert len(keys) == len(set(keys))
    assert len(pairs) == 2 * 16


def test_bond_index_round_trip():
    """Test that bond indices enumerate every bond once"""
    bonds = all_bonds(4)
    assert len(bonds) == 32
    assert [b.index(4) for b in bonds] == list(range(32))
    assert BondIndex((5, -1), 2).wrapped(4) == BondIndex((1, 3), 2)


def test_partition_function_2x2_closed_form():
    """Test Z = 2 e^{8K} + 12 + 2 e^{-8K} on the 2x2 torus"""
    K = 0.37
    spec = ModelSpec(M=2, beta=K)
    expected = 2 * math.exp(8 * K) + 12 + 2 * math.exp(-8 * K)
    assert exact_partition_function(spec) == pytest.approx(expected, rel=1e-13)


def test_partition_function_infinite_temperature():
    """Test Z = 2^{M^2} at beta = 0"""
    assert exact_partition_function(ModelSpec(M=3, beta=0.0)) == pytest.approx(512.0)


def test_partition_function_with_perturbation_matches_fsum(make_spec):
    """Test enumeration against an exactly rounded direct sum"""
    spec = make_spec(M=3, beta=0.4, lam=0.05)
    weights = []
    for mask in range(1 << 9):
        weights.append(math.exp(-spec.beta * hamiltonian(spec, SpinConfiguration(mask, 3))))
    assert exact_partition_function(spec) == pytest.approx(math.fsum(weights), rel=1e-12)


def test_enumeration_limit():
    """Test the side cap"""
    with pytest.raises(EnumerationLimitError):
        exact_partition_function(ModelSpec(M=6, beta=0.1))


def test_truncated_correlation_infinite_temperature():
    """Test that independent spins give zero correlation"""
    spec = ModelSpec(M=3, beta=0.0)
    value = exact_truncated_energy_correlation(spec, [BondIndex((0, 0), 1), BondIndex((1, 1), 2)])
    assert abs(value) < 1e-15


def test_truncated_correlation_translation_covariance(make_spec):
    """Test invariance under a common lattice shift"""
    spec = make_spec(M=3, beta=0.35, lam=0.08)
    bonds = [BondIndex((0, 0), 1), BondIndex((1, 2), 2)]
    shifted = [b.shifted((2, 1), 3) for b in bonds]
    assert exact_truncated_energy_correlation(spec, bonds) == pytest.approx(
        exact_truncated_energy_correlation(spec, shifted), abs=1e-12)


def test_truncated_correlation_matches_transfer_matrix():
    """Test the enumeration cumulant against row transfer matrices"""
    spec = ModelSpec(M=3, beta=0.41)
    b1, b2 = BondIndex((0, 0), 1), BondIndex((2, 1), 2)
    z = transfer_matrix_moment(spec)
    m1 = transfer_matrix_moment(spec, [b1]) / z
    m2 = transfer_matrix_moment(spec, [b2]) / z
    m12 = transfer_matrix_moment(spec, [b1, b2]) / z
    assert exact_truncated_energy_correlation(spec, [b1, b2]) == pytest.approx(m12 - m1 * m2, rel=1e-10)


def test_truncated_correlation_scales_with_spacing():
    """Test the a^{-m} normalization of energy densities"""
    bonds = [BondIndex((0, 0), 1), BondIndex((1, 1), 1)]
    base = exact_truncated_energy_correlation(ModelSpec(M=3, beta=0.3), bonds)
    half = exact_truncated_energy_correlation(ModelSpec(M=3, beta=0.3, a=0.5), bonds)
    assert half == pytest.approx(4 * base)


def test_repeated_bonds_rejected():
    """Test that repeated bonds raise"""
    spec = ModelSpec(M=3, beta=0.3)
    with pytest.raises(RepeatedBondError):
        exact_truncated_energy_correlation(spec, [BondIndex((0, 0), 1), BondIndex((3, 0), 1)])


def test_odd_spin_correlations_vanish(make_spec):
    """Test spin-flip symmetry at zero field"""
    spec = make_spec(M=3, beta=0.5, lam=0.1)
    assert exact_spin_correlation(spec, [(0, 0)]) == pytest.approx(0.0, abs=1e-14)
    assert exact_spin_correlation(spec, [(0, 0), (1, 2), (2, 1)]) == pytest.approx(0.0, abs=1e-14)


def test_source_derivative_sums():
    """Test that z_Y reduces to Z for the empty set"""
    spec = ModelSpec(M=2, beta=0.3)
    sums = source_derivative_sums(spec, [BondIndex((0, 0), 1)])
    assert sums[frozenset()] == pytest.approx(exact_partition_function(spec))


def test_enumeration_threads_agree():
    """Test that parallel blocks reduce to the same moments"""
    spec = ModelSpec(M=4, beta=0.3)
    serial = enumerate_moments(spec, [(0, 1)], threads=1)
    parallel = enumerate_moments(spec, [(0, 1)], threads=2)
    assert serial.moment(1) == pytest.approx(parallel.moment(1), rel=1e-14)


def test_detailed_balance_2x2(make_spec):
    """Test pi(s) P(s -> s') = pi(s') P(s' -> s)"""
    spec = make_spec(M=2, beta=0.6, lam=0.2)
    P = metropolis_transition_matrix(spec)
    pi = boltzmann_weights(spec)
    flow = pi[:, None] * P
    assert np.max(np.abs(flow - flow.T)) < 1e-12
    assert np.allclose(P.sum(axis=1), 1.0)


def test_method_choice():
    """Test Wolff at lambda = 0 and the flagged Metropolis fallback"""
    assert choose_method(ModelSpec(M=4, beta=0.3)) == ("wolff", False)
    frustrated = ModelSpec(M=4, beta=0.3, lam=-0.5, v_table=diagonal_interaction())
    assert choose_method(frustrated) == ("metropolis", True)
    ferromagnetic = ModelSpec(M=4, beta=0.3, lam=0.5, v_table=diagonal_interaction())
    assert choose_method(ferromagnetic) == ("metropolis", False)


def test_mc_infinite_temperature():
    """Test that beta = 0 gives an estimate consistent with zero"""
    spec = ModelSpec(M=8, beta=0.0)
    result = mc_estimate_energy_correlation(spec, [BondIndex((0, 0), 1), BondIndex((3, 3), 2)], sweeps=1000, seed=3)
    assert abs(result.estimate) <= 4 * result.standard_error + 1e-12


def test_mc_deterministic():
    """Test that the same seed gives identical estimates"""
    spec = ModelSpec(M=6, beta=0.3)
    bonds = [BondIndex((0, 0), 1), BondIndex((2, 0), 1)]
    r1 = mc_estimate_energy_correlation(spec, bonds, sweeps=1000, seed=11)
    r2 = mc_estimate_energy_correlation(spec, bonds, sweeps=1000, seed=11)
    assert r1.estimate == r2.estimate
    assert r1.standard_error == r2.standard_error


def test_mc_rejects_short_runs():
    """Test the minimum sweep count"""
    with pytest.raises(ValidationError):
        mc_estimate_energy_correlation(ModelSpec(M=4, beta=0.3), [BondIndex((0, 0), 1)], sweeps=10, seed=1)


def test_wolff_sweep_count_is_frozen():
    """Test that calibration fixes the clusters per sweep from burn-in sizes"""
    spec = ModelSpec(M=4, beta=0.0)
    sampler = SpinSampler(spec, "wolff")
    spins = np.ones(spec.sites, dtype=np.int64)
    sizes = sampler.sweep(spins, sweep_generator(5, 0, 0))
    assert sizes == [1] * spec.sites
    assert sampler.calibrate(sizes) == spec.sites
    assert len(sampler.sweep(spins, sweep_generator(5, 0, 1))) == spec.sites
    assert sampler.calibrate([4, 4, 8, 8]) == 3


@pytest.mark.parametrize("bonds", [
    [BondIndex((0, 0), 1)],
    [BondIndex((0, 0), 1), BondIndex((2, 0), 1)],
])
def test_wolff_matches_enumeration(bonds):
    """Test the Wolff estimate of <eps> and the two-point cumulant near the critical point"""
    spec = ModelSpec(M=4, beta=0.9 * BETA_CRITICAL)
    result = mc_estimate_energy_correlation(spec, bonds, sweeps=10000, seed=7, chains=2)
    exact = exact_truncated_energy_correlation(spec, bonds)
    assert result.method == "wolff"
    assert abs(result.estimate - exact) <= 4 * result.standard_error


def test_metropolis_matches_enumeration():
    """Test the Metropolis fallback against enumeration on a frustrated torus"""
    spec = ModelSpec(M=3, beta=0.3, lam=-0.5, v_table=diagonal_interaction())
    bonds = [BondIndex((0, 0), 1), BondIndex((1, 1), 2)]
    result = mc_estimate_energy_correlation(spec, bonds, sweeps=10000, seed=2, chains=2)
    exact = exact_truncated_energy_correlation(spec, bonds)
    assert result.fallback
    assert abs(result.estimate - exact) <= 4 * result.standard_error


@pytest.mark.slow
def test_wolff_large_torus_matches_free_fermions():
    """Test Wolff on the 32x32 torus at 0.9 beta_c against the Pfaffian mixture"""
    spec = ModelSpec(M=32, beta=0.9 * BETA_CRITICAL)
    bonds = [BondIndex((0, 0), 1), BondIndex((2, 0), 1)]
    result = mc_estimate_energy_correlation(spec, bonds, sweeps=5000, seed=1, chains=2, threads=2)
    exact = free_mpoint_energy_correlation(spec, bonds, boundary="combined")
    assert abs(result.estimate - exact) <= 3 * result.standard_error


def test_jackknife_constant_samples():
    """Test zero error for constant data"""
    samples = np.ones((100, 3))
    estimate, error = jackknife_cumulant(samples, 2)
    assert estimate == pytest.approx(0.0)
    assert error == pytest.approx(0.0)
