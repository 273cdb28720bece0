"""Born-rule violation and the classical electromagnetic energy balance.

Coherent states and photon-count laws (:mod:`fock_space`,
:mod:`probability_rules`), seeded photodetection (:mod:`detection_mc`), a
1-D Maxwell solver with a Poynting ledger (:mod:`maxwell_fdtd`), and the
audit coupling the two (:mod:`energy_audit`).
"""

from .detection_mc import DetectionRecord, detection_energy, infer_amplitude, sample_counts
from .energy_audit import (
    AuditConfig,
    AuditInvalidError,
    AuditReport,
    CorrespondenceFactor,
    kappa_factor,
    run_audit,
    run_baseline,
    sweep,
)
from .fock_space import (
    FockVector,
    ModeOperator,
    OperatorKind,
    apply_operator,
    build_operator,
    coherent_coefficients,
    coherent_state,
    expectation,
    fock_state,
)
from .maxwell_fdtd import (
    EnergyLedger,
    FieldGrid,
    GridConfig,
    Region,
    audit_step,
    field_energy,
    init_grid,
    mech_power,
    poynting_flux,
    run_ledger,
    step,
)
from .probability_rules import (
    CountPMF,
    ProbabilityRule,
    apply_rule,
    born_pmf,
    pmf_moments,
    poisson_pmf_oracle,
)

__version__ = "0.1.0"
