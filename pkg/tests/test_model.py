from fractions import Fraction

import pytest

from ivmiss.model import (
    Regime,
    StructuralParams,
    UnknownMechanism,
    ValidationFailed,
    parse_label,
    parse_number,
    pretty_label,
    validate,
)
from ivmiss.catalog import lookup


def test_parse_label_single_outcome_mechanism():
    ry, rd, regime = parse_label("1ZD")
    assert ry == ("Z", "D")
    assert rd is None
    assert regime == Regime.OUTCOME_ONLY


def test_parse_label_single_treatment_mechanism():
    ry, rd, regime = parse_label("2UY")
    assert ry is None
    assert rd == ("U", "Y")
    assert regime == Regime.TREATMENT_ONLY


def test_parse_label_composite_plus():
    ry, rd, regime = parse_label("1UD+2ZD")
    assert ry == ("U", "D")
    assert rd == ("Z", "D")
    assert regime == Regime.BOTH


def test_parse_label_composite_oplus_adds_rd_parent():
    ry, rd, regime = parse_label("1ZD(+)2UD")
    assert ry == ("Z", "D", "RD")
    assert rd == ("U", "D")
    assert regime == Regime.BOTH


def test_parse_label_orders_parents_canonically():
    ry, _, _ = parse_label("1DZ")
    assert ry == ("Z", "D")


def test_parse_label_mcar():
    assert parse_label("MCAR-Y") == ((), None, Regime.OUTCOME_ONLY)
    assert parse_label("MCAR-D") == (None, (), Regime.TREATMENT_ONLY)


@pytest.mark.parametrize("bad", ["", "3ZD", "1ZX", "1ZZ", "ZD", "1+2Z"])
def test_parse_label_rejects_garbage(bad):
    with pytest.raises(UnknownMechanism):
        parse_label(bad)


def test_pretty_label():
    assert pretty_label("1UD(+)2ZD") == "1UD⊕2ZD"
    assert pretty_label("1UD+2ZD") == "1UD+2ZD"


def test_parse_number_strings_stay_rational():
    assert parse_number("3/8") == Fraction(3, 8)
    assert parse_number("0.6") == Fraction(3, 5)
    assert isinstance(parse_number(0.6), float)
    with pytest.raises(ValidationFailed):
        parse_number("three")


def _minimal_params(one_sided=True):
    pi = {"n": Fraction(1, 4), "c": Fraction(3, 4)}
    laws = {
        ("n", 0): (Fraction(1, 2), Fraction(1, 2)),
        ("c", 0): (Fraction(2, 3), Fraction(1, 3)),
        ("c", 1): (Fraction(1, 3), Fraction(2, 3)),
    }
    ry = {(u, d): Fraction(7, 10) for u, d in (("n", 0), ("c", 0), ("c", 1))}
    return StructuralParams(p_z=Fraction(1, 2), pi_u=pi, y_support=(0, 1),
                            outcome_law=laws, response_y=ry,
                            one_sided=one_sided)


def test_validate_accepts_coherent_model():
    assert validate(_minimal_params(), lookup("1UD").spec) == []


def test_validate_flags_bad_shares_and_missing_cells():
    p = _minimal_params()
    bad = StructuralParams(p_z=p.p_z, pi_u={"n": 1, "c": 1}, y_support=p.y_support,
                           outcome_law=p.outcome_law, response_y={},
                           one_sided=True)
    problems = validate(bad, lookup("1UD").spec)
    assert any("sum" in m for m in problems)
    assert any("response cell" in m for m in problems)


def test_validate_one_sided_forbids_always_takers():
    p = _minimal_params()
    bad = StructuralParams(p_z=p.p_z,
                           pi_u={"a": Fraction(1, 4), "n": Fraction(1, 4),
                                 "c": Fraction(1, 2)},
                           y_support=p.y_support, outcome_law=p.outcome_law,
                           response_y=p.response_y, one_sided=True)
    assert any("always-taker" in m for m in validate(bad, lookup("1UD").spec))


def test_validate_sidedness_restriction():
    p = _minimal_params(one_sided=True)
    problems = validate(p, lookup("1DY").spec)
    assert any("two-sided" in m for m in problems)
