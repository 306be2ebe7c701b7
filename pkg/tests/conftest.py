"""Shared helpers: random model draws and float casting of observables."""

import random
from fractions import Fraction

import pytest

from ivmiss.model import (
    COMPLIANCE_TYPES,
    COMPLIER,
    NEVER_TAKER,
    ObservableDistribution,
    Sidedness,
    StructuralParams,
    response_key,
    treatment,
)


def random_params(mech, one_sided, rng, grid=64):
    """Draw StructuralParams for ``mech`` with probabilities on a 1/grid lattice.

    Rational by construction, so the forward map stays exact; cast cells to
    float for the floating-point arm of a test.
    """
    def q(lo=0.1, hi=0.9):
        v = Fraction(round(rng.uniform(lo, hi) * grid), grid)
        return min(max(v, Fraction(1, grid)), Fraction(grid - 1, grid))

    S = (0, 1)
    utypes = (NEVER_TAKER, COMPLIER) if one_sided else COMPLIANCE_TYPES
    shares = [q(Fraction(15, 100), Fraction(85, 100)) for _ in utypes]
    total = sum(shares)
    pi = {u: s / total for u, s in zip(utypes, shares)}
    laws = {}
    for u in utypes:
        for z in (0, 1):
            d = treatment(u, z)
            p = q()
            laws[(u, d)] = (1 - p, p)
    ry = rd = None
    if mech.ry_parents is not None:
        ry = {}
        rds = (0, 1) if "RD" in mech.ry_parents else (None,)
        for z in (0, 1):
            for u in utypes:
                d = treatment(u, z)
                for y in S:
                    for r in rds:
                        ry[response_key(mech.ry_parents, z, u, d, y, r)] = q(0.3, 0.95)
    if mech.rd_parents is not None:
        rd = {}
        for z in (0, 1):
            for u in utypes:
                d = treatment(u, z)
                for y in S:
                    rd[response_key(mech.rd_parents, z, u, d, y)] = q(0.3, 0.95)
    return StructuralParams(p_z=q(0.3, 0.7), pi_u=pi, y_support=S,
                            outcome_law=laws, response_y=ry, response_d=rd,
                            one_sided=one_sided)


def sides_for(mech):
    """One-sidedness values compatible with a mechanism spec."""
    return {
        Sidedness.EITHER: (False, True),
        Sidedness.ONE_SIDED_ONLY: (True,),
        Sidedness.TWO_SIDED_ONLY: (False,),
    }[mech.sidedness]


def floatify(obs):
    return ObservableDistribution(
        regime=obs.regime, p_z=float(obs.p_z), y_support=obs.y_support,
        cells={k: float(v) for k, v in obs.cells.items()},
        one_sided=obs.one_sided, arithmetic="float")


@pytest.fixture
def rng():
    return random.Random(20260826)
