"""Couple detection statistics to the classical energy ledger.

A coherent pulse is absorbed by the Ohmic detector of a classical run whose
Poynting ledger closes.  A detector obeying a rule other than Born reports
``kappa`` times the absorbed energy, where ``kappa = <n>_rule / |alpha|^2``;
field propagation is left untouched.  The residual of the ledger booked with
the reported energy is the apparent violation of energy conservation.

Error budget: the discretization part comes from a refinement pair (the
Richardson estimate ``4/3 |R_h - R_{h/2}|`` of the coarse residual); the
Monte Carlo part is the standard error of ``kappa`` re-estimated from
sampled counts, times the absorbed energy.  They are combined in quadrature.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .detection_mc import DetectionRecord, detection_energy, infer_amplitude, sample_counts
from .fock_space import as_amplitude, coherent_state
from .maxwell_fdtd import EnergyLedger, GridConfig, Region, init_grid, run_ledger, steps_for
from .probability_rules import CountPMF, ProbabilityRule, apply_rule, pmf_moments


KAPPA_UNITY_TOL = 1e-12


class AuditInvalidError(RuntimeError):
    """The classical baseline does not close to the requested tolerance."""


@dataclass(frozen=True)
class CorrespondenceFactor:
    kappa: float
    rule: ProbabilityRule
    alpha: complex
    oracle_mean: float
    truncation_deficit: float
    pmf: CountPMF = field(repr=False)


def kappa_factor(alpha, rule: ProbabilityRule, n_max: int | None = None) -> CorrespondenceFactor:
    """Ratio of the rule's mean photon number to ``|alpha|^2``."""
    a = as_amplitude(alpha)
    if abs(a) == 0:
        raise ValueError("kappa is undefined for alpha = 0")
    state = coherent_state(a, n_max)
    pmf = apply_rule(state, rule)
    mean, _ = pmf_moments(pmf)
    return CorrespondenceFactor(mean / abs(a) ** 2, rule, a, mean, state.truncation_deficit, pmf)


@dataclass(frozen=True)
class Baseline:
    """Born-accounted classical run plus its refinement partner."""

    ledger: EnergyLedger
    refined_residual: float
    grid: GridConfig

    @property
    def absorbed(self) -> float:
        return self.ledger.total_absorbed

    @property
    def residual(self) -> float:
        return self.ledger.final_residual

    @property
    def discretization_error(self) -> float:
        return 4.0 / 3.0 * abs(self.residual - self.refined_residual)

    def summary(self) -> dict:
        out = self.ledger.summary()
        out["refined_residual"] = self.refined_residual
        out["discretization_error"] = self.discretization_error
        return out


def _region_for(config: GridConfig, region: tuple[float, float] | None, factor: int = 1) -> Region | None:
    """Region given as fractions of the domain, mapped onto the grid nodes."""
    if region is None:
        return None
    cells = config.cells * factor
    return Region(int(round(region[0] * cells)), int(round(region[1] * cells)))


def run_baseline(
    grid: GridConfig = GridConfig(),
    region: tuple[float, float] | None = None,
    closure_tol: float = 1e-3,
) -> Baseline:
    """Classical run at ``grid`` and at half the spacing, checked for closure."""
    _, ledger = run_ledger(init_grid(grid), steps_for(grid), _region_for(grid, region))
    if ledger.relative_residual > closure_tol:
        raise AuditInvalidError(
            f"baseline ledger residual {ledger.relative_residual:.3g} exceeds tolerance {closure_tol:g}; refine the grid"
        )
    fine = grid.refined(2)
    _, fine_ledger = run_ledger(init_grid(fine), steps_for(fine), _region_for(grid, region, 2))
    return Baseline(ledger, fine_ledger.final_residual, grid)


@dataclass(frozen=True)
class AuditConfig:
    alpha: complex = 2.0
    rule: ProbabilityRule = field(default_factory=ProbabilityRule.born)
    n_max: int | None = None
    n_samples: int = 100_000
    seed: int = 0
    hbar_omega: float = 1.0
    grid: GridConfig = field(default_factory=GridConfig)
    region: tuple[float, float] | None = None
    closure_tol: float = 1e-3
    threshold: float = 3.0
    scenario: str = "audit"


@dataclass(frozen=True)
class AuditReport:
    scenario: str
    alpha: complex
    rule: ProbabilityRule
    kappa: float
    oracle_mean: float
    truncation_deficit: float
    kappa_mc: float
    kappa_mc_stderr: float
    detection: dict
    baseline: dict
    absorbed: float
    reported_absorbed: float
    discretization_error: float
    statistical_error: float
    violation_magnitude: float
    violation_significance: float
    mc_violation: float
    mc_significance: float
    mc_consistent: bool
    status: str

    @property
    def expected_violation(self) -> float:
        return (self.kappa - 1.0) * self.absorbed

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "alpha": [self.alpha.real, self.alpha.imag],
            "rule": self.rule.to_dict(),
            "kappa": self.kappa,
            "oracle_mean": self.oracle_mean,
            "truncation_deficit": self.truncation_deficit,
            "kappa_mc": self.kappa_mc,
            "kappa_mc_stderr": self.kappa_mc_stderr,
            "detection": self.detection,
            "baseline": self.baseline,
            "absorbed": self.absorbed,
            "reported_absorbed": self.reported_absorbed,
            "discretization_error": self.discretization_error,
            "statistical_error": self.statistical_error,
            "violation_magnitude": self.violation_magnitude,
            "violation_significance": self.violation_significance,
            "mc_violation": self.mc_violation,
            "mc_significance": self.mc_significance,
            "mc_consistent": self.mc_consistent,
            "status": self.status,
        }


def _detection_summary(record: DetectionRecord, hbar_omega: float) -> dict:
    amp, amp_err = infer_amplitude(record)
    out = record.summary()
    out.update(amp=amp, amp_err=amp_err, energy=detection_energy(record, omega=hbar_omega, hbar=1.0))
    return out


def run_audit(config: AuditConfig = AuditConfig(), baseline: Baseline | None = None) -> AuditReport:
    """Book the baseline ledger with a detector that follows ``config.rule``."""
    if baseline is None:
        baseline = run_baseline(config.grid, config.region, config.closure_tol)
    cf = kappa_factor(config.alpha, config.rule, config.n_max)
    mean_sq = abs(cf.alpha) ** 2

    record = sample_counts(cf.pmf, config.n_samples, config.seed)
    energy = detection_energy(record, omega=config.hbar_omega, hbar=1.0)
    kappa_mc = energy / (record.n_samples * config.hbar_omega * mean_sq)
    kappa_mc_err = record.sample_stderr / mean_sq

    absorbed = baseline.absorbed
    reported = cf.kappa * absorbed
    # booking kappa * E_abs instead of E_abs shifts the residual by (kappa - 1) E_abs
    violation = baseline.residual + (reported - absorbed)
    mc_violation = baseline.residual + (kappa_mc - 1.0) * absorbed

    sigma_disc = baseline.discretization_error
    sigma_mc = abs(absorbed) * kappa_mc_err
    sigma = math.hypot(sigma_disc, sigma_mc)
    significance = abs(violation) / sigma if sigma > 0 else math.inf
    mc_significance = abs(mc_violation) / sigma if sigma > 0 else math.inf
    mc_consistent = abs(kappa_mc - cf.kappa) <= config.threshold * kappa_mc_err if kappa_mc_err > 0 else kappa_mc == cf.kappa

    if significance > config.threshold:
        status = "violated"
    elif config.rule.kind != "born" and abs(cf.kappa - 1.0) > KAPPA_UNITY_TOL:
        status = "inconclusive"
    else:
        status = "closed"

    return AuditReport(
        scenario=config.scenario,
        alpha=cf.alpha,
        rule=config.rule,
        kappa=cf.kappa,
        oracle_mean=cf.oracle_mean,
        truncation_deficit=cf.truncation_deficit,
        kappa_mc=kappa_mc,
        kappa_mc_stderr=kappa_mc_err,
        detection=_detection_summary(record, config.hbar_omega),
        baseline=baseline.summary(),
        absorbed=absorbed,
        reported_absorbed=reported,
        discretization_error=sigma_disc,
        statistical_error=sigma_mc,
        violation_magnitude=violation,
        violation_significance=significance,
        mc_violation=mc_violation,
        mc_significance=mc_significance,
        mc_consistent=mc_consistent,
        status=status,
    )


@dataclass(frozen=True)
class SweepResult:
    family: str
    values: tuple[float, ...]
    reports: tuple[AuditReport, ...]

    def monotonicity(self) -> dict:
        """Whether ``|violation|`` is nondecreasing in ``|parameter|`` on each side of 0."""
        out = {}
        for side, keep in (("positive", lambda v: v >= 0), ("negative", lambda v: v <= 0)):
            pts = sorted((abs(v), abs(r.violation_magnitude)) for v, r in zip(self.values, self.reports) if keep(v))
            mags = [m for _, m in pts]
            out[side] = all(b >= a for a, b in zip(mags, mags[1:]))
        return out

    def rows(self):
        for v, r in zip(self.values, self.reports):
            yield {
                "parameter": v,
                "kappa": r.kappa,
                "kappa_mc": r.kappa_mc,
                "violation": r.violation_magnitude,
                "significance": r.violation_significance,
                "status": r.status,
            }

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "values": list(self.values),
            "monotonic": self.monotonicity(),
            "reports": [r.to_dict() for r in self.reports],
        }


class SweepError(RuntimeError):
    def __init__(self, value: float, cause: Exception):
        super().__init__(f"sweep aborted at parameter {value!r}: {cause}")
        self.value = value
        self.cause = cause


def sweep(
    family: ProbabilityRule,
    values,
    base: AuditConfig = AuditConfig(),
    baseline: Baseline | None = None,
    workers: int = 1,
) -> SweepResult:
    """One audit per parameter value of ``family``, sharing one baseline run and seed."""
    values = tuple(float(v) for v in values)
    if family.kind == "born":
        raise ValueError("sweep needs a parameterized rule family")
    if baseline is None:
        baseline = run_baseline(base.grid, base.region, base.closure_tol)

    def one(v: float) -> AuditReport:
        if not math.isfinite(v):
            raise SweepError(v, ValueError("non-finite parameter"))
        try:
            rule = family.with_parameter(v)
            return run_audit(replace(base, rule=rule, scenario=f"{family.kind}={v!r}"), baseline)
        except Exception as exc:
            raise SweepError(v, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = tuple(pool.map(one, values))
    else:
        reports = tuple(one(v) for v in values)
    return SweepResult(family.kind, values, reports)
