import random
from fractions import Fraction

import pytest

from ivmiss.catalog import lookup
from ivmiss.forward import forward_observable, true_cace
from ivmiss.model import RegimeMismatch, validate
from ivmiss.oracle import builtin_fixtures, search_alternative, verify_fixture

from conftest import random_params


def test_builtin_fixture_set():
    fixtures = builtin_fixtures()
    assert len(fixtures) == 14
    assert [f.id for f in fixtures] == sorted((f.id for f in fixtures))
    for f in fixtures:
        assert f.observables.arithmetic == "exact"
        assert f.cace_a != f.cace_b


def test_verify_fixture_all_pass():
    for f in builtin_fixtures():
        report = verify_fixture(f)
        assert report.passed, (f.id, [a for a in report.assertions if not a[1]])
        assert len(report.assertions) == 5


def test_verify_fixture_detects_tampering():
    f = builtin_fixtures()[0]
    broken = f.__class__(id=f.id, mechanism=f.mechanism,
                         observables=f.observables, params_a=f.params_a,
                         params_b=f.params_b, cace_a=f.cace_a,
                         cace_b=f.cace_a)  # same effect on both sides
    report = verify_fixture(broken)
    assert not report.passed


def test_search_alternative_finds_witness_for_unidentifiable():
    # 1ZU is unidentifiable: the search should produce a second model with
    # the same observables but a different effect
    f = next(x for x in builtin_fixtures() if x.mechanism == "1ZU")
    hit = search_alternative(f.observables, "1ZU", seed=0, budget=4000,
                             reference_cace=float(f.cace_a))
    assert hit is not None
    params, cace = hit
    mech = lookup("1ZU").spec
    assert not validate(params, mech)
    assert abs(cace - float(f.cace_a)) > 1e-3
    fwd = forward_observable(params, mech)
    resid = max(abs(float(fwd.cells.get(k, 0)) - float(f.observables.cells.get(k, 0)))
                for k in set(fwd.cells) | set(f.observables.cells))
    assert resid < 1e-5
    assert abs(float(true_cace(params)) - cace) < 1e-12


def test_search_alternative_rejects_wrong_regime():
    f = next(x for x in builtin_fixtures() if x.mechanism == "1ZU")
    with pytest.raises(RegimeMismatch):
        search_alternative(f.observables, "2ZY", seed=0, budget=100)


def test_search_alternative_respects_budget_on_identifiable():
    # identifiable mechanism: matching observables pin the effect, so no
    # alternative should surface within a small budget
    mech = lookup("1ZD").spec
    p = random_params(mech, True, random.Random(3))
    obs = forward_observable(p, mech)
    assert search_alternative(obs, "1ZD", seed=1, budget=600) is None
