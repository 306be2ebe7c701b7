import random
import zlib
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ivmiss.catalog import identifiable_labels, lookup
from ivmiss.forward import (
    first_stage,
    forward_observable,
    joint_law,
    sample_dataset,
    true_cace,
)
from ivmiss.model import Regime, ValidationFailed

from conftest import random_params, sides_for


@pytest.mark.parametrize("label", identifiable_labels())
def test_forward_cells_are_conditional_laws(label):
    mech = lookup(label).spec
    rng = random.Random(zlib.crc32(label.encode()))
    for one_sided in sides_for(mech):
        p = random_params(mech, one_sided, rng)
        obs = forward_observable(p, mech)
        assert obs.arithmetic == "exact"
        assert obs.arm_sum(0) == 1 and obs.arm_sum(1) == 1
        assert all(v >= 0 for v in obs.cells.values())
        if one_sided:
            assert not any(len(k) >= 3 and k[1] == 0 and k[2] == 1
                           for k in obs.cells
                           if k[0] in ("dy", "dy1", "dy11", "d+0", "d1+0"))


def test_forward_rejects_incoherent_params():
    mech = lookup("1UD").spec
    p = random_params(mech, True, random.Random(0))
    bad = p.__class__(p_z=p.p_z, pi_u={"n": 1}, y_support=p.y_support,
                      outcome_law=p.outcome_law, response_y=p.response_y,
                      one_sided=True)
    with pytest.raises(ValidationFailed):
        forward_observable(bad, mech)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), label=st.sampled_from(identifiable_labels()))
def test_forward_mass_conservation(seed, label):
    """Masking never creates or destroys probability mass."""
    mech = lookup(label).spec
    rng = random.Random(seed)
    one_sided = sides_for(mech)[seed % len(sides_for(mech))]
    p = random_params(mech, one_sided, rng)
    obs = forward_observable(p, mech)
    jl = joint_law(p)
    pz = {1: p.p_z, 0: 1 - p.p_z}
    for z in (0, 1):
        lhs = sum(v for k, v in obs.cells.items() if k[1] == z)
        rhs = sum(v for (zz, _, _, _), v in jl.items() if zz == z) / pz[z]
        assert lhs == rhs == 1


def test_joint_law_matches_cace():
    mech = lookup("1UD").spec
    p = random_params(mech, False, random.Random(3))
    jl = joint_law(p)
    assert sum(jl.values()) == 1
    # complier means straight from the joint law
    num = {}
    for (z, u, d, y), v in jl.items():
        if u == "c":
            num[(d, y)] = num.get((d, y), 0) + v
    m = {d: sum(y * v for (dd, y), v in num.items() if dd == d)
         / sum(v for (dd, _), v in num.items() if dd == d) for d in (0, 1)}
    assert m[1] - m[0] == true_cace(p)


def test_first_stage_is_complier_share():
    mech = lookup("1ZD").spec
    p = random_params(mech, True, random.Random(9))
    assert first_stage(p) == p.pi_u["c"]


def test_sample_dataset_reproducible_and_well_formed():
    mech = lookup("1UD").spec
    p = random_params(mech, True, random.Random(1))
    a = sample_dataset(p, mech, 500, seed=11)
    b = sample_dataset(p, mech, 500, seed=11)
    assert a.records == b.records
    assert a.regime == Regime.OUTCOME_ONLY
    assert len(a.records) == 500
    assert any(y is None for _, _, y in a.records)
    assert all(d is not None for _, d, _ in a.records)
