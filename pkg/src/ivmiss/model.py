"""Core data model for the binary-instrument missing-data problem.

The observed variables are a randomized binary instrument Z, a binary
treatment D and an outcome Y with finite support.  Compliance type
U in {a, n, c} (always-taker, never-taker, complier) determines treatment
through D = 1 iff U = a or (U = c and Z = 1); one-sided noncompliance means
there are no always-takers.  Missingness is described by response indicators
R^D and R^Y whose propensities may depend on a subset of (Z, U, D, Y, R^D)
-- the "mechanism".  Everything downstream (forward simulation, the
identification engine, the counterexample oracle) is expressed in terms of
the types defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Number = Union[int, Fraction, float]

ALWAYS_TAKER = "a"
NEVER_TAKER = "n"
COMPLIER = "c"
COMPLIANCE_TYPES = (ALWAYS_TAKER, NEVER_TAKER, COMPLIER)

#: Canonical ordering of potential response-model parents.  Response table
#: keys always list parent values in this order.
PARENT_ORDER = ("Z", "U", "D", "Y", "RD")


class Regime:
    """Observation regimes: which of (D, Y) can be missing."""

    COMPLETE = "Complete"
    OUTCOME_ONLY = "OutcomeOnly"      # Y missing, D always observed
    TREATMENT_ONLY = "TreatmentOnly"  # D missing, Y always observed
    BOTH = "Both"                     # both can be missing

    ALL = (COMPLETE, OUTCOME_ONLY, TREATMENT_ONLY, BOTH)


class Sidedness:
    EITHER = "Either"
    ONE_SIDED_ONLY = "OneSidedOnly"
    TWO_SIDED_ONLY = "TwoSidedOnly"


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class IdentificationError(Exception):
    """Base class for all engine errors."""


class UnknownMechanism(IdentificationError):
    pass


class MechanismNotIdentifiable(IdentificationError):
    pass


class RegimeMismatch(IdentificationError):
    pass


class SidednessMismatch(IdentificationError):
    pass


class PositivityViolated(IdentificationError):
    def __init__(self, cell: str, value: float = 0.0):
        super().__init__(f"positivity condition failed: {cell} (mass {value})")
        self.cell = cell
        self.value = value


class DependenceViolated(IdentificationError):
    def __init__(self, check: str, magnitude: float = 0.0):
        super().__init__(
            f"dependence condition failed: {check} (magnitude {magnitude:g})")
        self.check = check
        self.magnitude = magnitude


class InconsistentObservables(IdentificationError):
    pass


class NegativeStratumMass(InconsistentObservables):
    pass


class NegativeOdds(InconsistentObservables):
    pass


class SingularSystem(IdentificationError):
    pass


class ZeroFirstStage(IdentificationError):
    pass


class ValidationFailed(IdentificationError):
    pass


class MalformedRow(IdentificationError):
    pass


class MissingInstrument(MalformedRow):
    pass


class UnknownOutcomeValue(IdentificationError):
    pass


class EmptyArm(IdentificationError):
    def __init__(self, z: int):
        super().__init__(f"no records with Z={z}")
        self.z = z


class NotRecoverable(IdentificationError):
    """Joint law of (Z, U, D, Y) is not recoverable for this mechanism."""


# ---------------------------------------------------------------------------
# numbers
# ---------------------------------------------------------------------------

def parse_number(value) -> Number:
    """Parse a probability given as int, float, Fraction or string.

    Strings are parsed exactly: ``"3/8"`` and ``"0.6"`` both become
    Fractions, so configuration files stay in rational arithmetic.
    """
    if isinstance(value, (Fraction, int)):
        return value if isinstance(value, Fraction) else Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationFailed(f"cannot parse probability {value!r}") from exc
    raise ValidationFailed(f"cannot parse probability {value!r}")


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def format_number(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    return repr(value)


# ---------------------------------------------------------------------------
# mechanism labels
# ---------------------------------------------------------------------------

_LETTER = {"Z": "Z", "U": "U", "D": "D", "Y": "Y"}


def _parse_part(part: str, kind: str):
    """Parse the letters after a leading '1' or '2' into a parent tuple."""
    if not part:
        raise UnknownMechanism(f"empty parent list in mechanism part {kind!r}")
    parents = []
    for ch in part:
        if ch in _LETTER:
            parents.append(ch)
        else:
            raise UnknownMechanism(f"bad parent letter {ch!r} in mechanism part {kind}{part!r}")
    if len(set(parents)) != len(parents):
        raise UnknownMechanism(f"repeated parent in {kind}{part!r}")
    return tuple(sorted(parents, key=PARENT_ORDER.index))


def parse_label(label: str):
    """Parse a mechanism label into ``(ry_parents, rd_parents, regime)``.

    Labels follow the convention ``1<parents>`` for the outcome response
    model R^Y, ``2<parents>`` for the treatment response model R^D, combined
    with ``+`` (R^D not a parent of R^Y) or ``(+)`` (R^D is a parent of
    R^Y).  ``MCAR-Y`` / ``MCAR-D`` denote response independent of
    everything.  Parent tuples are ``None`` when the corresponding variable
    is always observed.
    """
    if label == "MCAR-Y":
        return (), None, Regime.OUTCOME_ONLY
    if label == "MCAR-D":
        return None, (), Regime.TREATMENT_ONLY
    ry = rd = None
    oplus = False
    rest = label
    if rest.startswith("1"):
        rest = rest[1:]
        for sep, flag in (("(+)2", True), ("+2", False)):
            if sep in rest:
                part1, part2 = rest.split(sep, 1)
                ry = _parse_part(part1, "1")
                rd = _parse_part(part2, "2")
                oplus = flag
                break
        else:
            ry = _parse_part(rest, "1")
    elif rest.startswith("2"):
        rd = _parse_part(rest[1:], "2")
    else:
        raise UnknownMechanism(f"unrecognized mechanism label {label!r}")
    if ry is not None and oplus:
        ry = ry + ("RD",)
    if ry is not None and rd is not None:
        regime = Regime.BOTH
    elif ry is not None:
        regime = Regime.OUTCOME_ONLY
    else:
        regime = Regime.TREATMENT_ONLY
    return ry, rd, regime


def pretty_label(label: str) -> str:
    """Replace the ASCII ``(+)`` marker with the symbol used in reports."""
    return label.replace("(+)", "⊕")


# ---------------------------------------------------------------------------
# mechanism and parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MechanismSpec:
    """A missingness mechanism: parent sets plus applicability conditions."""

    id: str
    regime: str
    ry_parents: Optional[tuple]       # None when Y is always observed
    rd_parents: Optional[tuple]       # None when D is always observed
    sidedness: str = Sidedness.EITHER
    binary_y_required: bool = False
    positivity_cells: tuple = ()
    dependence_checks: tuple = ()
    identifiable: bool = True
    joint_recoverable: str = "Yes"    # "Yes" | "UnderExtraConditions" | "No"

    @property
    def pretty(self) -> str:
        return pretty_label(self.id)


@dataclass(frozen=True)
class StructuralParams:
    """Full structural parameterization of the model.

    ``outcome_law`` maps ``(u, d)`` to a tuple of probabilities over
    ``y_support``; only realizable pairs (``(n,0)``, ``(a,1)``, ``(c,0)``,
    ``(c,1)``) are needed.  Response tables map tuples of parent values (in
    :data:`PARENT_ORDER` order) to response probabilities
    P(R = 1 | parents).
    """

    p_z: Number
    pi_u: dict
    y_support: tuple
    outcome_law: dict
    response_y: Optional[dict] = None
    response_d: Optional[dict] = None
    one_sided: bool = False

    def cace(self) -> Number:
        """True complier average causal effect."""
        m1 = sum(y * p for y, p in zip(self.y_support, self.outcome_law[(COMPLIER, 1)]))
        m0 = sum(y * p for y, p in zip(self.y_support, self.outcome_law[(COMPLIER, 0)]))
        return m1 - m0


@dataclass(frozen=True)
class DistributionParams:
    """Distribution-level parameterization: the laws P(D, Y | Z) directly.

    Usable only for mechanisms whose response parents exclude U.  ``theta``
    maps ``(z, d, y)`` to P(D = d, Y = y | Z = z).  The complier effect is
    the usual instrumental-variable functional of these laws.
    """

    p_z: Number
    theta: dict
    y_support: tuple
    response_y: Optional[dict] = None
    response_d: Optional[dict] = None
    one_sided: bool = False

    def cace(self) -> Number:
        num = 0
        den = 0
        for y in self.y_support:
            num += y * (self.theta.get((1, 0, y), 0) + self.theta.get((1, 1, y), 0))
            num -= y * (self.theta.get((0, 0, y), 0) + self.theta.get((0, 1, y), 0))
        for y in self.y_support:
            den += self.theta.get((1, 1, y), 0) - self.theta.get((0, 1, y), 0)
        if den == 0:
            raise ZeroFirstStage("P(D=1|Z=1) = P(D=1|Z=0)")
        return num / den


Params = Union[StructuralParams, DistributionParams]


def treatment(u: str, z: int) -> int:
    """Treatment received by compliance type ``u`` under assignment ``z``."""
    if u == ALWAYS_TAKER:
        return 1
    if u == NEVER_TAKER:
        return 0
    return z


def response_key(parents: tuple, z, u, d, y, rd=None) -> tuple:
    values = {"Z": z, "U": u, "D": d, "Y": y, "RD": rd}
    return tuple(values[p] for p in parents)


# ---------------------------------------------------------------------------
# observables, datasets, results
# ---------------------------------------------------------------------------

@dataclass
class ObservableDistribution:
    """Distribution of the observed data, conditional on Z.

    ``cells`` maps tagged keys to probabilities.  Tags by regime:

    * Complete:      ``("dy", z, d, y)``
    * OutcomeOnly:   ``("dy1", z, d, y)`` and ``("d+0", z, d)``
    * TreatmentOnly: ``("dy1", z, d, y)`` and ``("y+0", z, y)``
    * Both:          ``("dy11", z, d, y)``, ``("y+01", z, y)``,
                     ``("d1+0", z, d)`` and ``("+0+0", z)``

    where a trailing ``1``/``0`` records the relevant response indicators.
    All cell values are conditional on Z = z and sum to one within each arm.
    """

    regime: str
    p_z: Number
    y_support: tuple
    cells: dict
    one_sided: bool = False
    arithmetic: str = "exact"

    def get(self, *key) -> Number:
        return self.cells.get(tuple(key), 0)

    def arm_sum(self, z: int) -> Number:
        return sum(v for k, v in self.cells.items() if k[1] == z)

    def check(self, tol: float = 1e-9) -> None:
        """Raise :class:`ValidationFailed` if cells are malformed."""
        for k, v in self.cells.items():
            if v < 0:
                raise ValidationFailed(f"negative cell {k}: {v}")
        for z in (0, 1):
            s = self.arm_sum(z)
            if self.arithmetic == "exact":
                if s != 1:
                    raise ValidationFailed(f"arm z={z} sums to {s}, not 1")
            elif abs(s - 1) > tol:
                raise ValidationFailed(f"arm z={z} sums to {s}, not 1")


@dataclass
class Dataset:
    """Individual-level records ``(z, d, y)``; ``None`` marks a missing value."""

    records: list
    regime: str
    y_support: tuple = ()


@dataclass
class Check:
    """Outcome of one positivity or dependence condition evaluation."""

    name: str
    kind: str                  # "positivity" | "dependence"
    magnitude: float
    threshold: float
    passed: bool


@dataclass
class ConditionReport:
    mechanism: str
    checks: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)


@dataclass
class IdentificationResult:
    """Output of the identification engine for one mechanism."""

    mechanism: str
    cace: Number
    complier_means: Optional[tuple]   # (E[Y|c,0], E[Y|c,1]) or None
    nuisance: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    joint: Optional[dict] = None


@dataclass(frozen=True)
class CounterexampleFixture:
    """Two parameter points with identical observables but different CACEs."""

    id: str
    mechanism: str
    observables: ObservableDistribution
    params_a: Params
    params_b: Params
    cace_a: Number
    cace_b: Number


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _required_response_cells(parents, params, one_sided, with_rd):
    """Enumerate the parent-value tuples a response table must cover."""
    utypes = (NEVER_TAKER, COMPLIER) if one_sided else COMPLIANCE_TYPES
    combos = set()
    rds = (0, 1) if with_rd and "RD" in parents else (None,)
    for z in (0, 1):
        for u in utypes:
            d = treatment(u, z)
            for y in params.y_support:
                for rd in rds:
                    combos.add(response_key(parents, z, u, d, y, rd))
    return combos


def validate(params: Params, mech: MechanismSpec) -> list:
    """Check that ``params`` is a coherent model for ``mech``.

    Returns a list of human-readable problems (empty when valid).
    """
    problems = []

    def _prob(x, what, strict_pos=False):
        if not (0 <= x <= 1):
            problems.append(f"{what} = {x} outside [0, 1]")
        elif strict_pos and x == 0:
            problems.append(f"{what} must be positive")

    if isinstance(params, StructuralParams):
        _prob(params.p_z, "P(Z=1)", strict_pos=True)
        if params.p_z == 1:
            problems.append("P(Z=1) must be below 1")
        total = sum(params.pi_u.values())
        if total != 1 and abs(float(total) - 1.0) > 1e-9:
            problems.append(f"compliance-type shares sum to {total}")
        for u, p in params.pi_u.items():
            if u not in COMPLIANCE_TYPES:
                problems.append(f"unknown compliance type {u!r}")
            else:
                _prob(p, f"P(U={u})")
        if params.one_sided and params.pi_u.get(ALWAYS_TAKER, 0) != 0:
            problems.append("one-sided model cannot have always-takers")
        if params.pi_u.get(COMPLIER, 0) == 0:
            problems.append("complier share must be positive")
        utypes = (NEVER_TAKER, COMPLIER) if params.one_sided else COMPLIANCE_TYPES
        for u in utypes:
            if params.pi_u.get(u, 0) == 0 and u == COMPLIER:
                continue
            for z in (0, 1):
                d = treatment(u, z)
                law = params.outcome_law.get((u, d))
                if law is None:
                    problems.append(f"missing outcome law for (u={u}, d={d})")
                    continue
                if len(law) != len(params.y_support):
                    problems.append(f"outcome law for (u={u}, d={d}) has wrong length")
                    continue
                s = sum(law)
                if s != 1 and abs(float(s) - 1.0) > 1e-9:
                    problems.append(f"outcome law for (u={u}, d={d}) sums to {s}")
                for p in law:
                    _prob(p, f"P(Y|{u},{d}) entry")
    else:
        if mech.ry_parents is not None and "U" in mech.ry_parents:
            problems.append("distribution-level parameters unusable: R^Y depends on U")
        if mech.rd_parents is not None and "U" in mech.rd_parents:
            problems.append("distribution-level parameters unusable: R^D depends on U")
        _prob(params.p_z, "P(Z=1)", strict_pos=True)
        for z in (0, 1):
            s = sum(v for (zz, _, _), v in params.theta.items() if zz == z)
            if s != 1 and abs(float(s) - 1.0) > 1e-9:
                problems.append(f"P(D, Y | Z={z}) sums to {s}")
        if params.one_sided:
            for (z, d, y), v in params.theta.items():
                if z == 0 and d == 1 and v != 0:
                    problems.append("one-sided model has mass at (Z=0, D=1)")

    # response tables
    for attr, parents, label in (
        ("response_y", mech.ry_parents, "R^Y"),
        ("response_d", mech.rd_parents, "R^D"),
    ):
        table = getattr(params, attr)
        if parents is None:
            if table:
                problems.append(f"{label} table given but {label[-1]} is always observed")
            continue
        if table is None:
            problems.append(f"missing {label} response table")
            continue
        if isinstance(params, StructuralParams):
            needed = _required_response_cells(parents, params, params.one_sided,
                                              with_rd=attr == "response_y")
            for cell in needed:
                if cell not in table:
                    problems.append(f"missing {label} response cell {cell}")
        for cell, p in table.items():
            _prob(p, f"P({label}=1|{cell})")

    if mech.binary_y_required and len(params.y_support) != 2:
        problems.append(f"mechanism {mech.id} requires a binary outcome")
    if "1Y" == mech.id or mech.id.startswith("1Y"):
        cap = 3 if params.one_sided else 4
        if len(params.y_support) > cap and mech.id == "1Y":
            problems.append(f"mechanism 1Y supports at most {cap} outcome levels here")
    if mech.sidedness == Sidedness.ONE_SIDED_ONLY and not params.one_sided:
        problems.append(f"mechanism {mech.id} applies only under one-sided noncompliance")
    if mech.sidedness == Sidedness.TWO_SIDED_ONLY and params.one_sided:
        problems.append(f"mechanism {mech.id} requires two-sided noncompliance")
    return problems
