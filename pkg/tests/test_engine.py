import random
import zlib
from fractions import Fraction

import pytest

from ivmiss.catalog import identifiable_labels, lookup
from ivmiss.engine import (
    Tolerances,
    check_conditions,
    identify,
    recover_joint,
    solve_binary_ratio,
    solve_linear_odds,
    strip_stratum,
    wald_cace,
)
from ivmiss.forward import forward_observable, joint_law, true_cace
from ivmiss.model import (
    DependenceViolated,
    InconsistentObservables,
    MechanismNotIdentifiable,
    NegativeOdds,
    NegativeStratumMass,
    NotRecoverable,
    ObservableDistribution,
    PositivityViolated,
    Regime,
    RegimeMismatch,
    SidednessMismatch,
    SingularSystem,
    UnknownMechanism,
    ValidationFailed,
)

from conftest import floatify, random_params, sides_for

F = Fraction


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def test_solve_binary_ratio_known_point():
    assert solve_binary_ratio(F(1, 2), F(2)) == (F(2, 3), F(1, 3))


def test_solve_binary_ratio_degenerate_equal_ratios():
    # r1 == r0 == 1: zero effect, means unidentified
    assert solve_binary_ratio(F(1), F(1)) is None
    with pytest.raises(InconsistentObservables):
        solve_binary_ratio(F(2), F(2))


def test_strip_stratum_exact_and_negative():
    out = strip_stratum([F(1, 2), F(1, 2)], [F(1, 4), F(1, 8)])
    assert out == [F(1, 4), F(3, 8)]
    with pytest.raises(NegativeStratumMass):
        strip_stratum([F(1, 8)], [F(1, 4)])


def test_solve_linear_odds_exact_and_singular():
    A = [[F(1, 2), F(1, 4)], [F(1, 4), F(1, 2)]]
    b = [F(1, 2), F(1, 4)]
    x = solve_linear_odds(A, b, 1e-10)
    assert [F(1, 2) * x[0] + F(1, 4) * x[1], F(1, 4) * x[0] + F(1, 2) * x[1]] == b
    with pytest.raises(SingularSystem):
        solve_linear_odds([[F(1), F(1)], [F(2), F(2)]], [F(1), F(2)], 1e-10)
    with pytest.raises(NegativeOdds):
        solve_linear_odds([[F(1), F(0)], [F(0), F(1)]], [F(-1, 2), F(1, 2)], 1e-10)


def test_solve_linear_odds_float_matches_exact():
    A = [[F(1, 2), F(1, 4)], [F(1, 4), F(1, 2)]]
    b = [F(1, 2), F(1, 4)]
    exact = solve_linear_odds(A, b, 1e-10)
    approx = solve_linear_odds([[float(v) for v in r] for r in A],
                               [float(v) for v in b], 1e-10)
    assert max(abs(float(e) - a) for e, a in zip(exact, approx)) < 1e-12


# ---------------------------------------------------------------------------
# identify: round trips and gates
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("label", identifiable_labels())
def test_identify_round_trip(label):
    mech = lookup(label).spec
    rng = random.Random(zlib.crc32(label.encode()))
    for one_sided in sides_for(mech):
        done = 0
        while done < 5:
            p = random_params(mech, one_sided, rng)
            obs = forward_observable(p, mech)
            try:
                res = identify(label, obs)
            except (DependenceViolated, PositivityViolated):
                continue  # lattice coincidence; redraw
            assert res.cace == true_cace(p), (label, one_sided)
            fres = identify(label, floatify(obs))
            assert abs(float(fres.cace) - float(true_cace(p))) < 1e-9
            done += 1


def test_identify_refuses_unknown_and_unidentifiable():
    mech = lookup("1ZD").spec
    obs = forward_observable(random_params(mech, False, random.Random(2)), mech)
    with pytest.raises(UnknownMechanism):
        identify("1XQ", obs)
    with pytest.raises(MechanismNotIdentifiable):
        identify("1ZU", obs)


def test_identify_regime_and_sidedness_gates():
    mech = lookup("1ZD").spec
    obs = forward_observable(random_params(mech, True, random.Random(4)), mech)
    with pytest.raises(RegimeMismatch):
        identify("2ZY", obs)
    with pytest.raises(SidednessMismatch):
        identify("1DY", obs)  # one-sided data
    mech2 = lookup("2ZY").spec
    obs2 = forward_observable(random_params(mech2, False, random.Random(4)), mech2)
    with pytest.raises(SidednessMismatch):
        identify("2ZU", obs2)  # two-sided data


def test_identify_binary_outcome_gate():
    mech = lookup("1UY").spec
    p = random_params(mech, True, random.Random(5))
    obs = forward_observable(p, mech)
    three = ObservableDistribution(
        regime=obs.regime, p_z=obs.p_z, y_support=(0, 1, 2),
        cells=obs.cells, one_sided=True, arithmetic="exact")
    with pytest.raises(ValidationFailed):
        identify("1UY", three)


def test_wald_cace_on_complete_data():
    theta = {("dy", 0, 0, 0): F(1, 2), ("dy", 0, 0, 1): F(1, 2),
             ("dy", 1, 1, 0): F(1, 4), ("dy", 1, 1, 1): F(1, 4),
             ("dy", 1, 0, 0): F(1, 3), ("dy", 1, 0, 1): F(1, 6)}
    obs = ObservableDistribution(regime=Regime.COMPLETE, p_z=F(1, 2),
                                 y_support=(0, 1), cells=theta,
                                 one_sided=True, arithmetic="exact")
    # E[Y|1]=5/12, E[Y|0]=1/2, first stage 1/2
    assert wald_cace(obs) == (F(5, 12) - F(1, 2)) / F(1, 2)


def test_check_conditions_records_positivity_failure():
    mech = lookup("1ZD").spec
    p = random_params(mech, True, random.Random(6))
    ry = dict.fromkeys(p.response_y, F(1, 2))
    ry[(1, 1)] = F(0)  # kill response in one complete-case cell
    p2 = p.__class__(p_z=p.p_z, pi_u=p.pi_u, y_support=p.y_support,
                     outcome_law=p.outcome_law, response_y=ry, one_sided=True)
    obs = forward_observable(p2, mech)
    report = check_conditions("1ZD", obs)
    assert not report.passed
    failed = [c for c in report.checks if not c.passed]
    assert failed and failed[0].kind == "positivity"
    with pytest.raises(PositivityViolated):
        identify("1ZD", obs)


# ---------------------------------------------------------------------------
# joint recovery
# ---------------------------------------------------------------------------

def _joint_close(a, b, exact):
    keys = set(a) | set(b)
    if exact:
        return all(a.get(k, 0) == b.get(k, 0) for k in keys)
    return all(abs(float(a.get(k, 0)) - float(b.get(k, 0))) < 1e-9 for k in keys)


@pytest.mark.parametrize("label", ["MCAR-Y", "1ZD", "1DY", "1ZY", "1Y",
                                   "MCAR-D", "2ZY", "2DY", "2ZD", "2ZU",
                                   "1UD", "2UD"])
def test_recover_joint_matches_generator(label):
    mech = lookup(label).spec
    rng = random.Random(zlib.crc32(label.encode()))
    for one_sided in sides_for(mech):
        for _ in range(3):
            p = random_params(mech, one_sided, rng)
            try:
                got = recover_joint(label, forward_observable(p, mech))
            except (DependenceViolated, PositivityViolated, NotRecoverable):
                continue
            assert _joint_close(got, joint_law(p), exact=True), (label, one_sided)


def test_recover_joint_refusals():
    mech = lookup("1UY").spec
    p = random_params(mech, True, random.Random(8))
    with pytest.raises(NotRecoverable):
        recover_joint("1UY", forward_observable(p, mech))
    mech = lookup("2UY").spec
    p = random_params(mech, False, random.Random(8))
    with pytest.raises(NotRecoverable):
        recover_joint("2UY", forward_observable(p, mech))


def test_recover_joint_2uy_one_sided():
    mech = lookup("2UY").spec
    rng = random.Random(12)
    for _ in range(5):
        p = random_params(mech, True, rng)
        try:
            got = recover_joint("2UY", forward_observable(p, mech))
        except NotRecoverable:
            continue
        assert _joint_close(got, joint_law(p), exact=True)
        return
    pytest.fail("no recoverable draw in five attempts")
