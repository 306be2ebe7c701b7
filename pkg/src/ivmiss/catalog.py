"""Catalog of missingness mechanisms and their identification status.

Each entry pairs a :class:`~ivmiss.model.MechanismSpec` with either a recipe
(identifiable mechanisms) or a counterexample fixture id (unidentifiable
ones), plus a short proof anchor naming the result the recipe implements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    MechanismSpec,
    Sidedness,
    UnknownMechanism,
    parse_label,
)

# recipe step names
DIRECT_DIVISION = "DirectDivision"
STRATUM_SUBTRACTION = "StratumSubtraction"
ODDS_LINEAR_SYSTEM = "OddsLinearSystem"
BINARY_RATIO = "BinaryRatio"
MIXTURE_SOLVE = "MixtureSolve"


@dataclass(frozen=True)
class CatalogEntry:
    spec: MechanismSpec
    recipe: Optional[tuple] = None        # tuple of recipe steps, or None
    fixture_id: Optional[str] = None      # counterexample id, or None
    anchor: str = ""                      # internal result tag


def _spec(label, sidedness, binary_y, positivity, dependence, identifiable, joint):
    ry, rd, regime = parse_label(label)
    return MechanismSpec(
        id=label,
        regime=regime,
        ry_parents=ry,
        rd_parents=rd,
        sidedness=sidedness,
        binary_y_required=binary_y,
        positivity_cells=tuple(positivity),
        dependence_checks=tuple(dependence),
        identifiable=identifiable,
        joint_recoverable=joint,
    )


E = Sidedness.EITHER
ONE = Sidedness.ONE_SIDED_ONLY
TWO = Sidedness.TWO_SIDED_ONLY

# (label, sidedness, binaryY, positivity cells, dependence checks, recipe, joint, anchor)
_IDENTIFIABLE = [
    ("MCAR-Y", E, False, ["P(R^Y=1) > 0"], [],
     (DIRECT_DIVISION,), "Yes", "T1-MCAR"),
    ("1ZD", E, False, ["P(R^Y=1|z,d) > 0 for all (z,d)"], [],
     (DIRECT_DIVISION,), "Yes", "T1-1ZD"),
    ("1UD", E, False, ["P(R^Y=1|c,d) > 0 for d=0,1"], [],
     (STRATUM_SUBTRACTION,), "UnderExtraConditions", "T1-1UD"),
    ("1DY", TWO, True,
     ["P(R^Y=1|d,y) > 0 for all (d,y)"],
     ["Y not independent of Z given D=d, for d=0,1"],
     (ODDS_LINEAR_SYSTEM,), "Yes", "T1-1DY"),
    ("1ZY", TWO, True,
     ["P(R^Y=1|z,y) > 0 for all (z,y)"],
     ["Y not independent of D given Z=z, for z=0,1"],
     (ODDS_LINEAR_SYSTEM,), "Yes", "T1-1ZY"),
    ("1UY", E, True, ["P(R^Y=1|c,y) > 0 for all y"], [],
     (STRATUM_SUBTRACTION, BINARY_RATIO), "No", "T1-1UY"),
    ("1Y", E, False,
     ["P(R^Y=1|y) > 0 for all y"],
     ["rank of the complete-case (z,d) x y matrix equals |Y|"],
     (ODDS_LINEAR_SYSTEM,), "Yes", "T1-1Y"),
    ("MCAR-D", E, False, ["P(R^D=1) > 0"], [],
     (DIRECT_DIVISION,), "Yes", "T2-MCAR"),
    ("2ZY", E, False, ["P(R^D=1|z,y) > 0 for all (z,y)"], [],
     (DIRECT_DIVISION,), "Yes", "T2-2ZY"),
    ("2UY", E, True, ["P(R^D=1|c,y) > 0 for all y"], [],
     (STRATUM_SUBTRACTION, BINARY_RATIO), "UnderExtraConditions", "T2-2UY"),
    ("2DY", E, False,
     ["P(R^D=1|d,y) > 0 for all (d,y)"],
     ["two-sided: D not independent of Z given Y=y, for each y"],
     (ODDS_LINEAR_SYSTEM,), "Yes", "T2-2DY"),
    ("2UD", E, False, ["P(R^D=1|c,d) > 0 for d=0,1"], [],
     (STRATUM_SUBTRACTION,), "UnderExtraConditions", "T2-2UD"),
    ("2ZD", E, False,
     ["P(R^D=1|z,d) > 0 for all (z,d)"],
     ["Y not independent of D given Z=z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM,), "Yes", "T2-2ZD"),
    ("2ZU", ONE, False,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c"],
     ["mixture separation: P(Y|n,0) differs from P(Y|c,1)"],
     (MIXTURE_SOLVE,), "Yes", "T2-2ZU"),
    # R^D a parent of R^Y, with R^D driven by (U, D)
    ("1ZD(+)2UD", E, False,
     ["P(R^D=1|c,d) > 0", "P(R^Y=1|z,d,R^D=1) > 0 for all (z,d)"], [],
     (STRATUM_SUBTRACTION, DIRECT_DIVISION), "UnderExtraConditions", "T3-1ZD"),
    ("1UD(+)2UD", E, False,
     ["P(R^D=1|c,d) > 0", "P(R^Y=1|c,d,R^D=1) > 0"], [],
     (STRATUM_SUBTRACTION,), "UnderExtraConditions", "T3-1UD"),
    ("1DY(+)2UD", TWO, True,
     ["P(R^D=1|c,d) > 0", "P(R^Y=1|d,y,R^D=1) > 0"],
     ["Y not independent of Z given D=d and R^D=1"],
     (STRATUM_SUBTRACTION, ODDS_LINEAR_SYSTEM), "UnderExtraConditions", "T3-1DY"),
    ("1ZY(+)2UD", TWO, True,
     ["P(R^D=1|c,d) > 0", "P(R^Y=1|z,y,R^D=1) > 0"],
     ["Y not independent of D given Z=z and R^D=1"],
     (STRATUM_SUBTRACTION, ODDS_LINEAR_SYSTEM), "UnderExtraConditions", "T3-1ZY"),
    ("1UY(+)2UD", E, True,
     ["P(R^D=1|c,d) > 0", "P(R^Y=1|c,y,R^D=1) > 0"], [],
     (STRATUM_SUBTRACTION, BINARY_RATIO), "UnderExtraConditions", "T3-1UY"),
    # R^D driven by (Z, D), R^Y conditionally independent of R^D
    ("1ZD+2ZD", E, False,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|z,d) > 0"],
     ["(Y R^Y, R^Y) not independent of D given Z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM, DIRECT_DIVISION), "UnderExtraConditions", "T4-1ZD"),
    ("1UD+2ZD", E, False,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|c,d) > 0"],
     ["(Y R^Y, R^Y) not independent of D given Z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM, STRATUM_SUBTRACTION), "UnderExtraConditions", "T4-1UD"),
    ("1DY+2ZD", TWO, True,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|d,y) > 0"],
     ["(Y R^Y, R^Y) not independent of D given Z=z",
      "Y not independent of Z given D=d"],
     (ODDS_LINEAR_SYSTEM,), "UnderExtraConditions", "T4-1DY"),
    ("1ZY+2ZD", TWO, True,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|z,y) > 0"],
     ["Y not independent of D given Z=z"],
     (ODDS_LINEAR_SYSTEM,), "UnderExtraConditions", "T4-1ZY"),
    ("1UY+2ZD", E, True,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|c,y) > 0"],
     ["(Y R^Y, R^Y) not independent of D given Z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM, STRATUM_SUBTRACTION, BINARY_RATIO),
     "UnderExtraConditions", "T4-1UY"),
    # R^D driven by (Z, U), one-sided only
    ("1ZD+2ZU", ONE, False,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c",
      "P(R^Y=1|z,d) > 0 for (1,1),(1,0),(0,0)"],
     ["mixture separation: P(Y|n,0) differs from P(Y|c,1)"],
     (MIXTURE_SOLVE, DIRECT_DIVISION), "UnderExtraConditions", "T5-1ZD"),
    ("1UD+2ZU", ONE, False,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c", "P(R^Y=1|c,d) > 0"],
     ["mixture separation: complete-case laws of (Y,R^Y) differ between n and (c,1)"],
     (MIXTURE_SOLVE, STRATUM_SUBTRACTION), "UnderExtraConditions", "T5-1UD"),
    ("1UY+2ZU", ONE, True,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c", "P(R^Y=1|c,y) > 0"],
     ["mixture separation: complete-case laws of (Y,R^Y) differ between n and (c,1)"],
     (MIXTURE_SOLVE, BINARY_RATIO), "UnderExtraConditions", "T5-1UY"),
    # R^D depends on Z only, R^D a parent of R^Y
    ("1ZD(+)2Z", E, False,
     ["P(R^D=1|z) > 0", "P(R^Y=1|z,d,R^D=1) > 0"], [],
     (DIRECT_DIVISION,), "UnderExtraConditions", "T6-1ZD"),
    ("1UD(+)2Z", E, False,
     ["P(R^D=1|z) > 0", "P(R^Y=1|c,d,R^D=1) > 0"], [],
     (STRATUM_SUBTRACTION,), "UnderExtraConditions", "T6-1UD"),
    ("1UY(+)2Z", E, True,
     ["P(R^D=1|z) > 0", "P(R^Y=1|c,y,R^D=1) > 0"], [],
     (STRATUM_SUBTRACTION, BINARY_RATIO), "UnderExtraConditions", "T6-1UY"),
    ("1DY(+)2Z", TWO, True,
     ["P(R^D=1|z) > 0", "P(R^Y=1|d,y,R^D=1) > 0"],
     ["Y not independent of Z given D=d and R^D=1"],
     (ODDS_LINEAR_SYSTEM,), "UnderExtraConditions", "T6-1DY"),
    ("1ZY(+)2Z", TWO, True,
     ["P(R^D=1|z) > 0", "P(R^Y=1|z,y,R^D=1) > 0"],
     ["Y not independent of D given Z=z and R^D=1"],
     (ODDS_LINEAR_SYSTEM,), "UnderExtraConditions", "T6-1ZY"),
    # coarse R^Y parent sets combined with a rich R^D
    ("1Z(+)2ZD", E, False,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|z,r^D) > 0 for all (z,r^D)"],
     ["Y not independent of D given Z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM, DIRECT_DIVISION), "UnderExtraConditions", "T7-1Z"),
    ("1D(+)2ZD", E, False,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|d,r^D) > 0 for all (d,r^D)"],
     ["Y not independent of D given Z (z=1 only when one-sided)",
      "D not independent of Z"],
     (ODDS_LINEAR_SYSTEM, DIRECT_DIVISION), "UnderExtraConditions", "T7-1D"),
    ("1Y(+)2ZD", E, True,
     ["P(R^D=1|z,d) > 0", "P(R^Y=1|y,r^D) > 0 for all (y,r^D)"],
     ["Y not independent of (Z,D) given R^D=1",
      "Y not independent of Z given R^D=0",
      "Y not independent of D given Z (z=1 only when one-sided)"],
     (ODDS_LINEAR_SYSTEM,), "UnderExtraConditions", "T7-1Y"),
    ("1Z(+)2ZU", ONE, False,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c", "P(R^Y=1|z,r^D) > 0"],
     ["mixture separation: P(Y|n,0) differs from P(Y|c,1)"],
     (MIXTURE_SOLVE, DIRECT_DIVISION), "UnderExtraConditions", "T7-1Z2ZU"),
    ("1U(+)2ZU", ONE, False,
     ["P(R^D=1|Z=1,n) > 0", "P(R^D=1|z,c) > 0 for z=0,1",
      "P(R^Y=1|c,R^D=1) > 0"],
     ["R^Y not independent of U given R^D=1"],
     (ODDS_LINEAR_SYSTEM, STRATUM_SUBTRACTION), "UnderExtraConditions", "T7-1U"),
    ("1D(+)2ZU", ONE, False,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c", "P(R^Y=1|d,R^D=1) > 0",
      "P(R^Y=1|D=0,R^D=0) > 0"],
     ["Y not independent of U given Z=1"],
     (ODDS_LINEAR_SYSTEM, MIXTURE_SOLVE), "UnderExtraConditions", "T7-1D2ZU"),
    ("1Y(+)2ZU", ONE, True,
     ["P(R^D=1|Z=1,u) > 0 for u=n,c", "P(R^Y=1|y,r^D) > 0 for all (y,r^D)"],
     ["Y not independent of (Z,D) given R^D=1",
      "Y not independent of Z given R^D=0",
      "mixture separation: P(Y|n,0) differs from P(Y|c,1)"],
     (ODDS_LINEAR_SYSTEM, MIXTURE_SOLVE), "UnderExtraConditions", "T7-1Y2ZU"),
]

# (label, fixture id, anchor)
_UNIDENTIFIABLE = [
    ("1ZU", "S3.1.3-1ZU", "S3.1.3"),
    ("1ZDY", "S3.1.4-1ZDY", "S3.1.4"),
    ("1UDY", "S3.1.5-1UDY", "S3.1.5"),
    ("2ZDY", "S3.2.2-2ZDY", "S3.2.2"),
    ("2UDY", "S3.2.3-2UDY", "S3.2.3"),
    ("1ZD(+)2ZD", "S3.3.1-1ZD(+)2ZD", "S3.3.1"),
    ("1UD(+)2ZD", "S3.3.2-1UD(+)2ZD", "S3.3.2"),
    ("1UY(+)2ZD", "S3.3.3-1UY(+)2ZD", "S3.3.3"),
    ("1DY(+)2ZD", "S3.3.4-1DY(+)2ZD", "S3.3.4"),
    ("1ZY(+)2ZD", "S3.3.5-1ZY(+)2ZD", "S3.3.5"),
    ("1U(+)2ZD", "S3.3.6-1U(+)2ZD", "S3.3.6"),
    ("1DY+2ZU", None, "T5-excluded"),
    ("1ZY+2ZU", None, "T5-excluded"),
]


def _build():
    entries = {}
    for label, sided, biny, pos, dep, recipe, joint, anchor in _IDENTIFIABLE:
        entries[label] = CatalogEntry(
            spec=_spec(label, sided, biny, pos, dep, True, joint),
            recipe=recipe,
            anchor=anchor,
        )
    for label, fixture, anchor in _UNIDENTIFIABLE:
        entries[label] = CatalogEntry(
            spec=_spec(label, E, False, [], [], False, "No"),
            fixture_id=fixture,
            anchor=anchor,
        )
    return entries


_CATALOG = _build()


def lookup(label: str) -> CatalogEntry:
    """Return the catalog entry for a mechanism label.

    Raises :class:`UnknownMechanism` for labels outside the catalog (the
    label grammar itself is checked first, so a typo and a valid-but-
    uncatalogued label produce the same error type).
    """
    try:
        return _CATALOG[label]
    except KeyError:
        parse_label(label)  # raises UnknownMechanism on grammar errors
        raise UnknownMechanism(f"mechanism {label!r} is not in the catalog")


def all_entries() -> list:
    return list(_CATALOG.values())


def identifiable_labels() -> list:
    return [e.spec.id for e in _CATALOG.values() if e.spec.identifiable]


def unidentifiable_labels() -> list:
    return [e.spec.id for e in _CATALOG.values() if not e.spec.identifiable]


def joint_recoverability(label: str) -> str:
    """Verdict on recoverability of the full joint law of (Z, U, D, Y)."""
    return lookup(label).spec.joint_recoverable
