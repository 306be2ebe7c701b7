"""Complier-effect identification under missing treatments and outcomes."""

from .catalog import (
    CatalogEntry,
    all_entries,
    identifiable_labels,
    joint_recoverability,
    lookup,
    unidentifiable_labels,
)
from .cli import (
    SensitivityEntry,
    SensitivityReport,
    empirical_observable,
    parse_dataset,
    run_sensitivity,
)
from .config import load_config
from .engine import (
    Tolerances,
    check_conditions,
    identify,
    recover_joint,
    solve_binary_ratio,
    solve_linear_odds,
    strip_stratum,
    wald_cace,
)
from .forward import (
    first_stage,
    forward_observable,
    joint_law,
    sample_dataset,
    true_cace,
)
from .model import (
    Check,
    ConditionReport,
    CounterexampleFixture,
    Dataset,
    DependenceViolated,
    DistributionParams,
    EmptyArm,
    IdentificationError,
    IdentificationResult,
    InconsistentObservables,
    MalformedRow,
    MechanismNotIdentifiable,
    MechanismSpec,
    MissingInstrument,
    NegativeOdds,
    NegativeStratumMass,
    NotRecoverable,
    ObservableDistribution,
    PositivityViolated,
    Regime,
    RegimeMismatch,
    Sidedness,
    SidednessMismatch,
    SingularSystem,
    StructuralParams,
    UnknownMechanism,
    UnknownOutcomeValue,
    ValidationFailed,
    ZeroFirstStage,
    parse_label,
    pretty_label,
    validate,
)
from .oracle import (
    VerificationReport,
    builtin_fixtures,
    search_alternative,
    verify_fixture,
)

__version__ = "0.1.0"
