import json
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lattice.enumeration import exact_partition_function, source_derivative_sums
from lattice.model import BondIndex, ModelSpec, diagonal_interaction, interacting_pairs, symmetric_interaction
from polymer.activities import (DecoratedPolymer, Polymer, PolymerArena, grassmann_activity, max_abs_activity,
                                polymer_activity, polymer_colorings)
from polymer.diagnostics import convergence_diagnostic, expansion_constants, write_report
from polymer.hardcore import hardcore_partition_function, hardcore_polymer_sum, log_hardcore_sum
from polymer.kernels import Truncation, kernel_W, vacuum_energy
from polymer.mayer import mayer_coefficient, mayer_coefficient_bruteforce
from polymer.strings import StringIndex, enumerate_strings, pair_strings
from utils.exceptions import EnumerationLimitError, PolymerEnumerationError, ValidationError


def B(x1, x2, j):
    return BondIndex((x1, x2), j)


def diag_spec(M=2, beta=0.3, lam=0.1, a=1.0):
    return ModelSpec(M=M, beta=beta, lam=lam, a=a, v_table=diagonal_interaction())


def find_string(strings, bonds):
    target = frozenset(bonds)
    return next(s for s in strings if s.bond_set == target)


def brute_zeta(spec, strings, gamma_bonds, R=frozenset(), Y=frozenset()):
    """Direct sum over all subsets of the strings inside gamma."""
    inside = [s for s in strings if s.bond_set <= gamma_bonds]
    t = spec.t
    total = 0.0
    for mask in range(1, 1 << len(inside)):
        chosen = [inside[i] for i in range(len(inside)) if (mask >> i) & 1]
        if frozenset().union(*(s.bond_set for s in chosen)) != gamma_bonds:
            continue
        seen, stack = {0}, [0]
        while stack:
            i = stack.pop()
            for j in range(len(chosen)):
                if j not in seen and chosen[i].bond_set & chosen[j].bond_set:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != len(chosen):
            continue
        counts = Counter(b for s in chosen for b in s.bonds)
        black = {b for b, c in counts.items() if c % 2}
        if not (R | Y) <= black:
            continue
        value = math.prod(math.tanh(0.5 * spec.beta * spec.lam * s.v) for s in chosen)
        for b in black:
            if b in R and b in Y:
                value *= -2 * t * (1 - t * t)
            elif b in R or b in Y:
                value *= 1 - t * t
            else:
                value *= t
        total += value
    return total


def test_diagonal_strings_geometry():
    """Test the two L-paths of a diagonal pair"""
    up, down = pair_strings((0, 0), (1, 1), (1, 1), 0.5, 4)
    assert up.bonds == (B(0, 0, 2), B(0, 1, 1))
    assert down.bonds == (B(0, 0, 1), B(1, 0, 2))
    assert up.bond_set.isdisjoint(down.bond_set)


def test_down_going_pair_orientation():
    """Test that U turns at the corner with the larger second coordinate"""
    up, down = pair_strings((0, 1), (1, 0), (1, -1), 0.5, 4)
    assert up.bonds == (B(0, 1, 1), B(1, 0, 2))
    assert down.bonds == (B(0, 0, 2), B(0, 0, 1))


def test_axis_strings_counted_twice():
    """Test that a straight pair emits identical U and D strings"""
    up, down = pair_strings((0, 0), (2, 0), (2, 0), 0.25, 4)
    assert up.bonds == down.bonds == (B(0, 0, 1), B(1, 0, 1))
    assert (up.kind, down.kind) == ("U", "D")


def test_string_count_is_twice_pair_count():
    """Test the string inventory on a 4x4 torus with diagonal and axis offsets"""
    spec = ModelSpec(M=4, beta=0.3, lam=0.1, v_table=symmetric_interaction({(1, 1): 1.0, (2, 0): 1.0}))
    strings = enumerate_strings(spec)
    assert len(strings) == 2 * len(interacting_pairs(spec))


def test_strings_join_their_endpoints():
    """Test that each path has odd degree exactly at its two endpoints"""
    spec = ModelSpec(M=6, beta=0.3, lam=0.1, v_table=symmetric_interaction({(1, 1): 1.0, (2, 1): 1.0}))
    for s in enumerate_strings(spec):
        assert len(s.bonds) <= spec.M0
        degree = Counter()
        for b in s.bonds:
            for site in b.endpoints(spec.M):
                degree[site] += 1
        odd = {site for site, d in degree.items() if d % 2}
        assert odd == {s.x, s.y}


def test_long_range_rejected():
    """Test the interaction range guard"""
    spec = ModelSpec(M=6, beta=0.3, lam=0.1, v_table=symmetric_interaction({(2, 2): 1.0}))
    with pytest.raises(ValidationError):
        enumerate_strings(spec)


def test_single_string_activity():
    """Test zeta = tanh(beta lambda v / 2) t^2 for one diagonal string"""
    spec = diag_spec(M=6, beta=0.4, lam=0.1)
    strings = enumerate_strings(spec)
    s = find_string(strings, [B(2, 2, 2), B(2, 3, 1)])
    gamma = Polymer(s.bond_set)
    w = math.tanh(0.5 * 0.4 * 0.1 * 0.5)
    t = spec.t
    assert polymer_activity(DecoratedPolymer(gamma), spec, strings) == pytest.approx(w * t * t, rel=1e-14)
    b1, b2 = s.bonds
    both = DecoratedPolymer(gamma, R=frozenset([b1]), Y=frozenset([b1]))
    assert polymer_activity(both, spec, strings) == pytest.approx(w * (-2 * t * (1 - t * t)) * t, rel=1e-14)
    split = DecoratedPolymer(gamma, R=frozenset([b1]), Y=frozenset([b2]))
    assert polymer_activity(split, spec, strings) == pytest.approx(w * (1 - t * t) ** 2, rel=1e-14)


def test_two_overlapping_strings_activity():
    """Test a three-bond polymer covered only by two strings sharing a bond"""
    spec = diag_spec(M=6, beta=0.5, lam=0.08)
    strings = enumerate_strings(spec)
    s1 = find_string(strings, [B(0, 0, 2), B(0, 1, 1)])
    s2 = find_string(strings, [B(0, 1, 1), B(1, 0, 2)])
    gamma = Polymer(s1.bond_set | s2.bond_set)
    w = math.tanh(0.5 * 0.5 * 0.08 * 0.5)
    t = spec.t
    assert polymer_activity(DecoratedPolymer(gamma), spec, strings) == pytest.approx(w * w * t * t, rel=1e-14)
    gray = DecoratedPolymer(gamma, R=frozenset([B(0, 1, 1)]))
    assert polymer_activity(gray, spec, strings) == 0.0
    for R, Y in [(frozenset(), frozenset()), (frozenset([B(0, 0, 2)]), frozenset([B(1, 0, 2)]))]:
        assert polymer_activity(DecoratedPolymer(gamma, R, Y), spec, strings) == pytest.approx(
            brute_zeta(spec, strings, gamma.bonds, R, Y), rel=1e-14)


def test_arena_matches_brute_force_on_2x2():
    """Test every polymer of the 2x2 torus against the direct subset sum"""
    spec = diag_spec(M=2, beta=0.45, lam=0.2)
    arena = PolymerArena(spec)
    polymers = arena.all_polymers()
    assert len({p.bonds for p in polymers}) == len(polymers)
    for gamma in polymers:
        assert arena.zeta(gamma) == pytest.approx(brute_zeta(spec, arena.strings, gamma.bonds), rel=1e-12)
        first = min(gamma.bonds)
        dec = frozenset([first])
        assert arena.zeta(gamma, dec, dec) == pytest.approx(
            brute_zeta(spec, arena.strings, gamma.bonds, dec, dec), rel=1e-12, abs=1e-18)


def test_rooted_and_global_growth_agree():
    """Test that growth from one bond finds the same colorings as the global enumeration"""
    spec = diag_spec(M=2, beta=0.3, lam=0.1)
    whole = PolymerArena(spec)
    everything = whole.all_polymers()
    rooted = PolymerArena(spec)
    through = rooted.through(B(0, 0, 1))
    assert {p.bonds for p in through} == {p.bonds for p in everything if B(0, 0, 1) in p.bonds}
    for gamma in through:
        assert rooted.colorings(gamma) == pytest.approx(whole.colorings(gamma))


def test_disconnected_polymer_rejected():
    """Test that a disconnected bond set has no activity"""
    spec = diag_spec(M=6)
    gamma = Polymer(frozenset([B(0, 0, 1), B(3, 3, 1)]))
    with pytest.raises(ValidationError):
        polymer_activity(DecoratedPolymer(gamma), spec)


def test_decorations_must_lie_on_polymer():
    """Test the decoration invariant"""
    gamma = Polymer(frozenset([B(0, 0, 1)]))
    with pytest.raises(ValidationError):
        DecoratedPolymer(gamma, R=frozenset([B(1, 1, 2)]))


def test_activity_linear_in_lambda():
    """Test that activities vanish linearly as lambda -> 0"""
    strings_small = enumerate_strings(diag_spec(M=6, lam=1e-4))
    s = find_string(strings_small, [B(2, 2, 2), B(2, 3, 1)])
    gamma = DecoratedPolymer(Polymer(s.bond_set))
    small = polymer_activity(gamma, diag_spec(M=6, lam=1e-4))
    half = polymer_activity(gamma, diag_spec(M=6, lam=5e-5))
    assert small / half == pytest.approx(2.0, rel=1e-6)


def test_grassmann_activity_terms():
    """Test the constant and top coefficients of the Grassmann activity"""
    spec = diag_spec(M=2, beta=0.35, lam=0.15)
    arena = PolymerArena(spec)
    gamma = next(p for p in arena.all_polymers() if p.size == 2)
    zg = grassmann_activity(gamma, spec, colorings=arena.colorings(gamma))
    assert zg.constant_term() == pytest.approx(arena.zeta(gamma), rel=1e-14)
    assert zg.degree() == 2 * len(next(iter(arena.colorings(gamma))))
    assert not zg.has_odd_part()


def test_hardcore_sum_trivial_without_interaction():
    """Test that lambda = 0 gives the free four-Pfaffian partition function"""
    spec = ModelSpec(M=2, beta=0.4)
    total = hardcore_polymer_sum(spec)
    assert total.terms == {(frozenset(), frozenset()): 1.0}
    assert hardcore_partition_function(spec) == pytest.approx(exact_partition_function(spec), rel=1e-10)


@pytest.mark.parametrize("lam", [0.1, -0.1, 0.04])
def test_hardcore_partition_function_matches_enumeration(lam):
    """Test Z from the hard-core sum against spin enumeration on the 2x2 torus"""
    spec = diag_spec(M=2, beta=0.3, lam=lam)
    assert hardcore_partition_function(spec) == pytest.approx(exact_partition_function(spec), rel=1e-9)


def test_hardcore_source_derivatives_match_enumeration():
    """Test one- and two-bond source derivatives against enumeration"""
    spec = diag_spec(M=2, beta=0.35, lam=0.1)
    b1, b2 = B(0, 0, 1), B(1, 0, 2)
    sums = source_derivative_sums(spec, [b1, b2])
    arena = PolymerArena(spec)
    scale = sums[frozenset()]
    assert hardcore_partition_function(spec, [b1], arena=arena) == pytest.approx(
        sums[frozenset([b1])], rel=1e-8, abs=1e-12 * scale)
    assert hardcore_partition_function(spec, [b2], arena=arena) == pytest.approx(
        sums[frozenset([b2])], rel=1e-8, abs=1e-12 * scale)
    assert hardcore_partition_function(spec, [b1, b2], arena=arena) == pytest.approx(
        sums[frozenset([b1, b2])], rel=1e-8, abs=1e-12 * scale)


def test_hardcore_rejects_large_lattices_and_bad_sources():
    """Test the size cap and the source preconditions"""
    with pytest.raises(EnumerationLimitError):
        hardcore_polymer_sum(diag_spec(M=4))
    with pytest.raises(ValidationError):
        hardcore_polymer_sum(diag_spec(M=2), sources=[B(0, 0, 1)])
    with pytest.raises(ValidationError):
        hardcore_partition_function(diag_spec(M=2), [B(0, 0, 1), B(2, 0, 1)])


def test_string_component_cap():
    """Test that an overlap component beyond the cap raises"""
    arena = PolymerArena(diag_spec(M=3))
    assert max(len(c) for c in StringIndex(arena.strings).components()) > 22
    with pytest.raises(PolymerEnumerationError):
        arena.all_polymers()


def _overlapping(n):
    """n polymers sharing one common bond."""
    return [Polymer(frozenset([B(0, 0, 1), B(i + 1, 3, 2)])) for i in range(n)]


def test_mayer_small_cases():
    """Test empty, single, disjoint, overlapping and repeated collections"""
    g1 = Polymer(frozenset([B(0, 0, 1)]))
    g2 = Polymer(frozenset([B(0, 0, 1), B(1, 0, 1)]))
    far = Polymer(frozenset([B(3, 3, 2)]))
    assert mayer_coefficient([]) == 0
    assert mayer_coefficient([g1]) == 1
    assert mayer_coefficient([g1, far]) == 0
    assert mayer_coefficient([g1, g2]) == -1
    assert mayer_coefficient([g1, g1]) == Fraction(-1, 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_mayer_complete_overlap(n):
    """Test pairwise-overlapping collections against (-1)^{n-1} (n-1)! and edge-subset enumeration"""
    polymers = _overlapping(n)
    expected = (-1) ** (n - 1) * math.factorial(n - 1)
    assert mayer_coefficient(polymers) == expected
    assert mayer_coefficient_bruteforce(polymers) == expected


def test_mayer_chain_is_tree():
    """Test that a chain overlapping only consecutive members gives (-1)^{n-1}"""
    chain = [Polymer(frozenset([B(i, 0, 1), B(i + 1, 0, 1)])) for i in range(4)]
    assert mayer_coefficient(chain) == -1
    assert mayer_coefficient_bruteforce(chain) == -1


@settings(max_examples=40, deadline=None)
@given(members=st.lists(st.frozensets(st.integers(min_value=0, max_value=5), min_size=1, max_size=3),
                        min_size=1, max_size=5))
def test_mayer_recursion_matches_edge_enumeration(members):
    """Test the vertex-subset recursion against edge-subset enumeration"""
    polymers = [Polymer(frozenset(B(i, 0, 1) for i in m)) for m in members]
    assert mayer_coefficient(polymers) == mayer_coefficient_bruteforce(polymers)


def test_mayer_cap():
    """Test the polymer-count limit"""
    with pytest.raises(PolymerEnumerationError):
        mayer_coefficient(_overlapping(8))


def test_kernel_vanishes_without_interaction():
    """Test W = 0 at lambda = 0"""
    spec = ModelSpec(M=4, beta=0.3)
    assert kernel_W([B(0, 0, 1)], [], spec).value == 0.0
    assert kernel_W([], [], spec).value == 0.0


@pytest.mark.parametrize("max_polymers", [2, 3, 4])
def test_vacuum_kernel_truncation_order(max_polymers):
    """Test log of the hard-core sum minus V_M scales as lambda^{n_max + 1}"""
    lams = [0.1, 0.05, 0.025]
    errors = []
    for lam in lams:
        spec = diag_spec(M=2, beta=0.6, lam=lam)
        exact = log_hardcore_sum(spec)
        approx = vacuum_energy(spec, Truncation(max_polymers, 8))
        errors.append(abs(exact - approx))
    slope = np.polyfit(np.log(lams), np.log(errors), 1)[0]
    assert slope == pytest.approx(max_polymers + 1, abs=0.3)


def test_vacuum_kernel_independent_of_spacing():
    """Test that W({}, {}) / M^2 does not depend on a"""
    values = [vacuum_energy(diag_spec(M=2, beta=0.5, lam=0.1, a=2.0 ** -n), Truncation(2, 8)) / 4
              for n in (2, 3, 4)]
    assert values[0] == values[1] == values[2]
    assert values[0] != 0.0


def test_vacuum_kernel_threads_agree():
    """Test that per-bond workers reduce to the in-process value"""
    spec = diag_spec(M=2, beta=0.5, lam=0.1)
    serial = vacuum_energy(spec, Truncation(2, 6), threads=1)
    parallel = vacuum_energy(spec, Truncation(2, 6), threads=2)
    assert parallel == pytest.approx(serial, rel=1e-13)


def test_kernel_translation_invariant():
    """Test W(R, Y) under a common lattice shift"""
    spec = diag_spec(M=6, beta=0.5, lam=0.1)
    truncation = Truncation(2, 4)
    R, Y = [B(0, 0, 1)], [B(1, 0, 2)]
    base = kernel_W(R, Y, spec, truncation)
    shifted = kernel_W([b.shifted((2, 3), 6) for b in R], [b.shifted((2, 3), 6) for b in Y], spec, truncation)
    assert base.value != 0.0
    assert shifted.value == pytest.approx(base.value, rel=1e-12)
    assert shifted.clusters == base.clusters


def test_expansion_constants_formula():
    """Test nu0 and kappa0 at beta lambda = 0.01 with M0 = 2"""
    spec = diag_spec(M=4, beta=0.5, lam=0.02)
    constants = expansion_constants(spec)
    root = 0.005 ** 0.25
    assert constants["nu0"] == pytest.approx(math.sqrt(4 * math.exp(1.005) * root), rel=1e-14)
    assert constants["kappa0"] == pytest.approx(-0.5 * math.log(root), rel=1e-14)
    report = convergence_diagnostic(spec, max_size=2)
    assert not report.certified


def test_tail_sums_decay_when_certified(tmp_path):
    """Test the pinned tail table against the envelope and the kappa0 / 2 rate"""
    spec = diag_spec(M=8, beta=0.5, lam=2e-6)
    report = convergence_diagnostic(spec, max_size=5)
    assert report.certified
    assert all(row.within_envelope for row in report.tail)
    assert report.tail[0].polymers > 0
    assert report.rate_ok
    data = json.loads(write_report(report, tmp_path / "diag.json").read_text())
    assert data["certified"] is True
    assert len(data["tail"]) == 5


def test_max_abs_activity_single_coloring():
    """Test the decoration maximum for one string"""
    spec = diag_spec(M=6, beta=0.4, lam=0.1)
    strings = enumerate_strings(spec)
    s = find_string(strings, [B(2, 2, 2), B(2, 3, 1)])
    colorings = polymer_colorings(Polymer(s.bond_set), spec, strings)
    t = spec.t
    best = max(abs(t), abs(1 - t * t), abs(2 * t * (1 - t * t)))
    assert max_abs_activity(colorings, t) == pytest.approx(abs(s.weight(spec)) * best ** 2, rel=1e-14)
