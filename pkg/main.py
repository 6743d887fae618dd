#!/usr/bin/env python3
"""
Ising laboratory
Main entry point for the CLI interface
"""

import argparse
import math
import os
import sys
from itertools import combinations
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

# Add the current directory to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from free_fermion.correlations import (CORRELATION_HEADER, decay_exponent, energy_correlation_table,
                                        free_mpoint_energy_correlation)
from free_fermion.momentum import mass
from free_fermion.partition import partition_function
from free_fermion.symmetry import symmetry_check
from lattice.enumeration import exact_partition_function, exact_truncated_energy_correlation, source_derivative_sums
from lattice.model import BondIndex, ModelSpec, diagonal_interaction
from lattice.monte_carlo import mc_estimate_energy_correlation
from polymer.diagnostics import convergence_diagnostic, write_report
from polymer.activities import PolymerArena, format_bonds
from polymer.hardcore import INVENTORY_HEADER, hardcore_partition_function, polymer_inventory
from polymer.kernels import KERNEL_HEADER, Truncation, kernel_W, kernel_rows
from rg.diagrams import one_loop_source_beta
from rg.flow import BetaFactory, TabulatedBeta, fixed_point_nu, flow_solve, geometric_nu_beta, linear_nu_beta
from rg.scales import RGState
from rg.trees import (DIMENSION_HEADER, count_gn_trees_bruteforce, dimension_report, dimension_table,
                      enumerate_gn_trees, irrelevant_after_localization)
from scaling.continuum import ContinuumParams
from scaling.study import convergence_study, write_study
from scaling.tuning import tune_beta
from utils.config_manager import ConfigManager
from utils.exceptions import ConfigurationError, ContractionError, FlowExitError, IsingLabError
from utils.experiments import NumericsSettings, RunSettings, load_experiment, validate_block
from utils.logger import IsingLabLogger, set_package_level
from utils.reporting import write_csv, write_json, write_manifest

COMMANDS = ("exact", "mc", "free", "polymer", "scaling", "rg", "compare")

ABS_FLOOR = 1e-12

EXACT_HEADER = ["beta", "Z_enumeration", "Z_pfaffian", "Z_rel_error",
                "corr_enumeration", "corr_pfaffian", "corr_abs_error", "passed"]
MC_HEADER = ["method", "estimate", "standard_error", "reference", "deviation", "sweeps", "chains"]
POLYMER_HEADER = ["lambda", "Z_polymer", "Z_enumeration", "residual", "Z_flipped", "passed"]
DERIVATIVE_HEADER = ["lambda", "bonds", "order", "derivative_polymer", "derivative_enumeration", "residual", "passed"]
FIXED_POINT_HEADER = ["h", "nu"]
ONE_LOOP_HEADER = ["h", "beta_Z1_re", "beta_Z1_im"]
COMPARE_HEADER = ["oracle", "value", "standard_error", "provenance"]

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def relative_error(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), ABS_FLOOR)


def close(value: float, reference: float, rel: float) -> bool:
    return abs(value - reference) <= rel * max(abs(value), abs(reference)) + ABS_FLOOR


@dataclass
class Check:
    """One acceptance check with the oracle that produced its reference value."""

    name: str
    passed: bool
    value: Any = None
    reference: Any = None
    provenance: str = ""
    detail: str = ""


@dataclass
class RunReport:
    command: str
    checks: List[Check] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and not self.errors and all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, value: Any = None, reference: Any = None,
              provenance: str = "", detail: str = "") -> Check:
        entry = Check(name, bool(passed), value, reference, provenance, detail)
        self.checks.append(entry)
        return entry

    def output(self, path: Path) -> Path:
        self.outputs.append(Path(path).name)
        return path

    def summary(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "errors": self.errors,
            "results": self.results,
            "outputs": sorted(self.outputs),
        }

    def lines(self) -> List[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"{status} {c.name}" + (f": {c.detail}" if c.detail else ""))
        out.extend(f"ERROR {message}" for message in self.errors)
        out.append(f"{self.command}: {'all checks passed' if self.passed else 'FAILED'}")
        return out


class IsingLab:
    """Main laboratory controller"""

    def __init__(self, config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                 config_dir: Optional[str] = None) -> None:
        """
        Resolve the configuration: defaults < file < environment < flags.

        Raises:
            ConfigurationError: If a configuration layer is missing or invalid
        """
        self.config = ConfigManager(config_dir, config_file)
        self.config.apply_overrides(overrides or {})
        self.config.validate()
        self.run = validate_block(RunSettings, self.config.section("run"), "run")
        self.numerics = validate_block(NumericsSettings, self.config.section("numerics"), "numerics")
        level = self.config.get("logging.level", "INFO")
        self.logger = IsingLabLogger("isinglab.cli", level)
        set_package_level(level)
        self.out_dir = Path(self.config.get("output.dir"))
        self._handlers: Dict[str, Callable] = {
            "exact": self.run_exact_vs_pfaffian,
            "mc": self.run_monte_carlo,
            "free": self.run_free_correlations,
            "polymer": self.run_polymer_check,
            "scaling": self.run_scaling_study,
            "rg": self.run_rg_flow,
            "compare": self.run_compare,
        }
        self.logger.info(f"Ising laboratory initialized: seed={self.run.seed} threads={self.run.threads}")

    def _spec(self, command: str, **params) -> ModelSpec:
        return validate_block(ModelSpec, params, f"{command}.model")

    def execute(self, command: str) -> RunReport:
        """
        Run one command and write manifest, tables and summary into the output directory.

        Args:
            command: one of the registered subcommands

        Returns:
            RunReport: checks, errors and results of the run

        Raises:
            ConfigurationError: If the command block does not validate
        """
        handler = self._handlers.get(command)
        if handler is None:
            raise ConfigurationError(f"Unknown command: {command}")
        experiment = load_experiment(command, self.config.section(command))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        resolved = dict(self.config.config)
        resolved[command] = experiment.model_dump(by_alias=True)
        report = RunReport(command)
        report.output(write_manifest(self.out_dir, command, resolved, self.run.seed))
        self.logger.info(f"Running {command} into {self.out_dir}")
        try:
            handler(experiment, report)
        except IsingLabError as e:
            self.logger.error(f"{command} failed: {type(e).__name__}: {e}")
            report.errors.append(f"{type(e).__name__}: {e}")
        except Exception as e:
            self.logger.exception(f"Unexpected error in {command}: {str(e)}")
            raise
        report.output(write_json(self.out_dir / "summary.json", report.summary()))
        return report

    # exact

    def run_exact_vs_pfaffian(self, exp, report: RunReport) -> None:
        """Enumeration against the four Pfaffians: Z and the energy correlation over a beta sweep."""
        bonds = exp.bond_indices()
        rows = []
        for beta in exp.betas:
            spec = self._spec("exact", M=exp.M, beta=beta)
            z_enum = exact_partition_function(spec, self.run.threads)
            z_pf = partition_function(spec)
            c_enum = exact_truncated_energy_correlation(spec, bonds, self.run.threads)
            c_pf = free_mpoint_energy_correlation(spec, bonds, boundary="combined")
            z_ok = close(z_pf, z_enum, exp.tolerance)
            c_ok = close(c_pf, c_enum, exp.tolerance)
            rows.append([beta, z_enum, z_pf, relative_error(z_pf, z_enum), c_enum, c_pf, abs(c_pf - c_enum),
                         z_ok and c_ok])
            report.check(f"Z beta={beta:.6g}", z_ok, z_pf, z_enum, "enumeration")
            report.check(f"correlation beta={beta:.6g}", c_ok, c_pf, c_enum, "enumeration")
            if beta == 0.0:
                report.check("correlation vanishes at beta=0", abs(c_pf) <= ABS_FLOOR, c_pf, 0.0, "closed form")
        report.output(write_csv(self.out_dir / "exact.csv", EXACT_HEADER, rows))
        report.results["max_Z_rel_error"] = max(row[3] for row in rows)

    # mc

    def _exact_reference(self, spec: ModelSpec, bonds) -> tuple:
        if spec.M <= self.numerics.max_enumeration_side:
            return exact_truncated_energy_correlation(spec, bonds, self.run.threads), "enumeration"
        return free_mpoint_energy_correlation(spec, bonds, boundary="combined"), "pfaffian-mixture"

    def run_monte_carlo(self, exp, report: RunReport) -> None:
        """Monte Carlo estimate within the configured error bars of an exact oracle."""
        spec = self._spec("mc", M=exp.M, beta=exp.beta)
        bonds = exp.bond_indices()
        reference, provenance = self._exact_reference(spec, bonds)
        trace = self.out_dir / "mc_trace.csv" if exp.trace else None
        result = mc_estimate_energy_correlation(spec, bonds, sweeps=exp.sweeps, seed=self.run.seed,
                                                chains=exp.chains, threads=self.run.threads, trace_path=trace)
        if trace is not None:
            report.output(trace)
        for warning in result.warnings:
            self.logger.warning(warning)
        deviation = abs(result.estimate - reference)
        report.output(write_csv(self.out_dir / "mc.csv", MC_HEADER, [[
            result.method, result.estimate, result.standard_error, reference, deviation, result.sweeps,
            result.chains]]))
        report.check(f"MC within {exp.error_bars:g} standard errors",
                     deviation <= exp.error_bars * result.standard_error + ABS_FLOOR,
                     result.estimate, reference, provenance,
                     f"deviation {deviation:.3e}, error {result.standard_error:.3e}")
        report.results.update({"method": result.method, "fallback": result.fallback, "warnings": result.warnings})

    # free

    def run_free_correlations(self, exp, report: RunReport) -> None:
        """Two-point table along the first axis, its decay exponent and the lattice symmetries."""
        spec = self._spec("free", M=exp.M, beta=exp.beta, a=exp.a)
        base = exp.base_bond()
        rows = energy_correlation_table(spec, base, exp.separations, exp.boundary)
        report.output(write_csv(self.out_dir / "free_correlations.csv", CORRELATION_HEADER, rows))
        if len(rows) >= 2 and all(row[7] != 0.0 for row in rows):
            report.results["decay_exponent"] = decay_exponent([row[6] for row in rows], [row[7] for row in rows])
        if exp.enumeration_check and exp.boundary == "combined" and spec.M <= self.numerics.max_enumeration_side:
            for row in rows:
                bonds = [base, BondIndex((row[3], row[4]), row[5])]
                reference = exact_truncated_energy_correlation(spec, bonds, self.run.threads)
                report.check(f"two-point r={row[6]}", close(row[7], reference, exp.tolerance), row[7], reference,
                             "enumeration")
        for tid in exp.transformations:
            sym = symmetry_check(spec, tid)
            report.check(f"symmetry {sym.name}", sym.passed, max(sym.max_defect.values(), default=0.0), 0.0,
                         "closed form", "; ".join(sym.violations))

    # polymer

    def run_polymer_check(self, exp, report: RunReport) -> None:
        """Hard-core polymer sum against enumeration, the odd relabeling and the expansion diagnostic."""
        needed = 4 * exp.M * exp.M
        if needed > self.numerics.grassmann_max_generators:
            raise ConfigurationError(
                f"numerics.grassmann_max_generators = {self.numerics.grassmann_max_generators} "
                f"is below the {needed} generators of the {exp.M}x{exp.M} torus")
        table = exp.interaction()
        sources = exp.source_bond_indices()
        rows = []
        derivative_rows = []
        for lam in exp.lambdas:
            spec = self._spec("polymer", M=exp.M, beta=exp.beta, lam=lam, v_table=table)
            arena = PolymerArena(spec)
            z_poly = hardcore_partition_function(spec, arena=arena)
            z_enum = exact_partition_function(spec, self.run.threads)
            ok = close(z_poly, z_enum, exp.tolerance)
            flipped = math.nan
            if exp.odd_check and lam != 0.0:
                mirror = spec.with_updates(lam=-lam, v_table={k: -v for k, v in spec.v_table.items()})
                flipped = hardcore_partition_function(mirror)
                report.check(f"odd relabeling lambda={lam:g}", close(flipped, z_poly, exp.tolerance), flipped,
                             z_poly, "hard-core sum")
            rows.append([lam, z_poly, z_enum, relative_error(z_poly, z_enum), flipped, ok])
            report.check(f"hard-core Z lambda={lam:g}", ok, z_poly, z_enum, "enumeration")
            derivative_rows += self._source_derivatives(spec, arena, sources, z_enum, exp.derivative_tolerance,
                                                        report)
        report.output(write_csv(self.out_dir / "polymer.csv", POLYMER_HEADER, rows))
        report.output(write_csv(self.out_dir / "polymer_derivatives.csv", DERIVATIVE_HEADER, derivative_rows))

        largest = max(exp.lambdas, key=abs)
        spec = self._spec("polymer", M=exp.M, beta=exp.beta, lam=largest, v_table=table)
        report.output(write_csv(self.out_dir / "polymer_inventory.csv", INVENTORY_HEADER, polymer_inventory(spec)))
        truncation = Truncation(*exp.kernel_truncation)
        arena = PolymerArena(spec, max_size=truncation.max_size)
        kernels = [kernel_W([], [], spec, truncation, arena=arena)]
        kernels += [kernel_W([b], [], spec, truncation, arena=arena) for b in sources]
        kernels += [kernel_W([], [b], spec, truncation, arena=arena) for b in sources]
        report.output(write_csv(self.out_dir / "polymer_kernels.csv", KERNEL_HEADER, kernel_rows(kernels)))

        diagnostic = convergence_diagnostic(spec, max_size=exp.diagnostic_size)
        report.output(write_report(diagnostic, self.out_dir / "polymer_diagnostic.json"))
        report.results["certified"] = diagnostic.certified
        report.results["nu0"] = diagnostic.nu0

    def _source_derivatives(self, spec: ModelSpec, arena: PolymerArena, sources: Sequence[BondIndex], z: float,
                            tolerance: float, report: RunReport) -> List[list]:
        """First and distinct-pair second A-derivatives of the hard-core Z against enumeration."""
        subsets = [(b,) for b in sources] + list(combinations(sources, 2))
        rows = []
        worst = 0.0
        for subset in subsets:
            value = hardcore_partition_function(spec, subset, arena=arena)
            key = frozenset(b.wrapped(spec.M) for b in subset)
            reference = source_derivative_sums(spec, subset, self.run.threads)[key]
            error = abs(value - reference)
            residual = error / max(abs(reference), ABS_FLOOR * abs(z))
            ok = error <= tolerance * abs(reference) + ABS_FLOOR * abs(z)
            worst = max(worst, residual)
            rows.append([spec.lam, format_bonds(subset), len(subset), value, reference, residual, ok])
        passed = all(row[-1] for row in rows)
        report.check(f"A-derivatives lambda={spec.lam:g}", passed, worst, 0.0, "enumeration",
                     f"{len(subsets)} derivatives, worst residual {worst:.3e}")
        return rows

    # scaling

    def run_scaling_study(self, exp, report: RunReport) -> None:
        """Convergence study of the lattice correlation to the loop formula."""
        try:
            params = ContinuumParams(m_star=exp.m_star, Zbar=exp.Zbar, Zstar=exp.Zstar, lam=exp.lam, tc=exp.tc,
                                     provenance="config")
        except ValueError as e:
            raise ConfigurationError(f"scaling: {e}")
        options = dict(exp.source_options)
        if exp.source == "mc":
            options.setdefault("seed", self.run.seed)
            options.setdefault("threads", self.run.threads)
        study = convergence_study(exp.points, exp.N_values, params, source=exp.source, j_labels=exp.j_labels,
                                  epsilon=exp.epsilon, source_options=options)
        for path in write_study(study, self.out_dir):
            report.output(path)
        report.check(f"fitted exponent >= {exp.theta_min:g}", study.theta >= exp.theta_min, study.theta,
                     exp.theta_min, study.provenance.get("continuum", ""))
        if exp.require_monotone:
            report.check("residuals monotone", study.monotone, [abs(r) for r in study.residuals], None,
                         study.provenance.get("lattice", ""))
        report.results["study"] = study.summary()

    # rg

    def _closed_form_flow(self, exp, flow, report: RunReport) -> None:
        family, params = exp.beta.family, exp.beta.params
        state = flow.state
        if family == "zero":
            constant = all(state.Z[h] == 1.0 and state.Z1[h] == 1.0 and state.sigma[h] == state.sigma_a
                           for h in state.Z)
            report.check("zero beta gives a constant flow", constant, provenance="closed form")
        elif family == "geometric":
            eps, theta = float(params.get("eps_Z", 0.0)), float(params.get("theta", 0.5))
            worst = 0.0
            for h in state.Z:
                expected = 1.0 + eps * sum(2.0 ** (theta * (j - state.N)) for j in range(h + 1, state.N + 1))
                worst = max(worst, abs(state.Z[h] - expected))
            report.check("geometric flow matches closed form", worst <= 1e-12, worst, 0.0, "closed form")

    def run_rg_flow(self, exp, report: RunReport) -> None:
        """Flow of the running couplings, the nu fixed point and the tree bookkeeping."""
        beta = BetaFactory().get_beta(exp.beta.family, **exp.beta.params)
        initial = RGState.initial(exp.N, exp.sigma)
        try:
            flow = flow_solve(beta, initial, eps0=exp.eps0, lam=lam_or_none(exp.lam))
        except FlowExitError as e:
            report.check("flow stays in the box", False, e.scale, exp.eps0, "flow", str(e))
        else:
            report.output(flow.state.write_csv(self.out_dir / "rg_flow.csv"))
            report.check("flow stays in the box", flow.certified, flow.max_deviation, exp.eps0, "flow")
            self._closed_form_flow(exp, flow, report)
            report.results["flow"] = flow.summary()

        nu = exp.nu
        if nu.kappa:
            beta_nu = linear_nu_beta(nu.c, nu.theta, exp.N, exp.lam, nu.kappa)
        else:
            beta_nu = geometric_nu_beta(nu.c, nu.theta, exp.N)
        try:
            fixed = fixed_point_nu(beta_nu, exp.N, h_min=exp.N - nu.depth, theta=nu.theta)
        except ContractionError as e:
            report.check("nu map contracts", False, e.factor, 1.0, "fixed point", str(e))
        else:
            report.output(write_csv(self.out_dir / "rg_nu.csv", FIXED_POINT_HEADER,
                                    sorted(fixed.trajectory.items(), reverse=True)))
            report.check("nu map contracts", fixed.contraction_factor < 1.0, fixed.contraction_factor, 1.0,
                         "fixed point")
            report.check("nu vanishes at infinity", fixed.vanishes_at_infinity, fixed.tail, 0.0, "fixed point")
            expected, provenance = nu.expected, "config"
            if expected is None and not nu.kappa:
                ratio = 2.0 ** -(1.0 + nu.theta)
                expected = -0.5 * nu.c * (1.0 - ratio ** (nu.depth + 1)) / (1.0 - ratio)
                provenance = "geometric series"
            if expected is not None:
                report.check("nu_N", abs(fixed.nu_N - expected) <= nu.tolerance, fixed.nu_N, expected, provenance)
            report.results["fixed_point"] = fixed.summary()

        trees = exp.trees
        found = enumerate_gn_trees(trees.h, trees.N, trees.n, trees.m, threads=self.run.threads)
        if trees.n + trees.m <= 4:
            brute = count_gn_trees_bruteforce(trees.h, trees.N, trees.n, trees.m)
            report.check("tree count", len(found) == brute, len(found), brute, "brute-force count")
        dims = dimension_report(found)
        report.check("tree constraints", not dims.violations, len(dims.violations), 0, "tree rules",
                     "; ".join(dims.violations[:5]))
        report.check("irrelevant after localization", irrelevant_after_localization(), provenance="power counting")
        report.output(write_csv(self.out_dir / "rg_dimensions.csv", DIMENSION_HEADER, dimension_table()))
        report.results["dimensions"] = dims.summary()

        if exp.one_loop:
            self._one_loop(exp, report)

    def _one_loop(self, exp, report: RunReport) -> None:
        a = 2.0 ** -exp.N
        table = diagonal_interaction() if exp.lam else {}
        spec = self._spec("rg", M=exp.M, a=a, beta=tune_beta(a, exp.sigma, exp.lam), lam=exp.lam, v_table=table)
        loop = one_loop_source_beta(spec, threads=self.run.threads)
        report.output(write_csv(self.out_dir / "rg_one_loop.csv", ONE_LOOP_HEADER, loop.rows()))
        report.results["one_loop"] = {"theta": None if math.isinf(loop.theta) else loop.theta, "C": loop.C}
        if exp.lam:
            report.check("one-loop source beta decays", loop.decaying, loop.theta, 0.0, "one-loop fit")
        try:
            flow = flow_solve(TabulatedBeta(Z1=loop.beta()), RGState.initial(exp.N, mass(spec)), eps0=exp.eps0,
                              lam=lam_or_none(exp.lam))
        except FlowExitError as e:
            report.check("one-loop Z1 flow stays in the box", False, e.scale, exp.eps0, "one-loop flow", str(e))
        else:
            report.output(flow.state.write_csv(self.out_dir / "rg_one_loop_flow.csv"))
            report.check("one-loop Z1 flow stays in the box", flow.within_box, flow.max_deviation, exp.eps0,
                         "one-loop flow")

    # compare

    def run_compare(self, exp, report: RunReport) -> None:
        """Enumeration, Pfaffian mixture and Monte Carlo for one correlation."""
        spec = self._spec("compare", M=exp.M, beta=exp.beta)
        bonds = exp.bond_indices()
        c_enum = exact_truncated_energy_correlation(spec, bonds, self.run.threads)
        c_pf = free_mpoint_energy_correlation(spec, bonds, boundary="combined")
        result = mc_estimate_energy_correlation(spec, bonds, sweeps=exp.sweeps, seed=self.run.seed,
                                                chains=exp.chains, threads=self.run.threads)
        z_enum = exact_partition_function(spec, self.run.threads)
        z_pf = partition_function(spec)
        report.output(write_csv(self.out_dir / "compare.csv", COMPARE_HEADER, [
            ["enumeration", c_enum, 0.0, "spin enumeration"],
            ["pfaffian", c_pf, 0.0, "four-Pfaffian mixture"],
            ["mc", result.estimate, result.standard_error, result.method],
        ]))
        report.check("Z pfaffian vs enumeration", close(z_pf, z_enum, exp.tolerance), z_pf, z_enum, "enumeration")
        report.check("pfaffian vs enumeration", close(c_pf, c_enum, exp.tolerance), c_pf, c_enum, "enumeration")
        report.check(f"MC within {exp.error_bars:g} standard errors",
                     abs(result.estimate - c_enum) <= exp.error_bars * result.standard_error + ABS_FLOOR,
                     result.estimate, c_enum, "enumeration")


def lam_or_none(lam: float) -> Optional[float]:
    return lam if lam else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Perturbed Ising model laboratory")
    parser.add_argument("command", choices=COMMANDS, help="Experiment to run")
    parser.add_argument("--config", "-c", default=None, help="YAML or JSON file merged over the defaults")
    parser.add_argument("--out", "-o", default=None, help="Output directory")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (u64)")
    parser.add_argument("--threads", type=int, default=None, help="Worker processes")
    return parser


def main(argv: Optional[Sequence[str]] = None, config_dir: Optional[str] = None) -> int:
    """Main entry point for the CLI interface."""
    args = build_parser().parse_args(argv)
    overrides = {"output.dir": args.out, "run.seed": args.seed, "run.threads": args.threads}
    try:
        lab = IsingLab(args.config, overrides, config_dir)
    except IsingLabError as e:
        print(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    try:
        report = lab.execute(args.command)
    except ConfigurationError as e:
        lab.logger.error(f"Configuration error: {str(e)}")
        print(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
