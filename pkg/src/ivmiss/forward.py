"""Forward map from model parameters to observable distributions and samples."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .model import (
    COMPLIANCE_TYPES,
    COMPLIER,
    NEVER_TAKER,
    Dataset,
    DistributionParams,
    MechanismSpec,
    ObservableDistribution,
    Params,
    Regime,
    StructuralParams,
    ValidationFailed,
    ZeroFirstStage,
    is_exact,
    response_key,
    treatment,
    validate,
)


def true_cace(params: Params):
    """Complier average causal effect implied by ``params``."""
    return params.cace()


def _atoms(params: Params):
    """Yield ``(z, u_or_None, d, y, mass)`` over the full latent table.

    Masses are joint (not conditional on Z).  Zero-mass atoms are skipped.
    """
    pz = {1: params.p_z, 0: 1 - params.p_z}
    if isinstance(params, StructuralParams):
        utypes = (NEVER_TAKER, COMPLIER) if params.one_sided else COMPLIANCE_TYPES
        for z in (0, 1):
            for u in utypes:
                share = params.pi_u.get(u, 0)
                if share == 0:
                    continue
                d = treatment(u, z)
                law = params.outcome_law[(u, d)]
                for y, py in zip(params.y_support, law):
                    mass = pz[z] * share * py
                    if mass != 0:
                        yield z, u, d, y, mass
    else:
        for (z, d, y), p in params.theta.items():
            if p != 0:
                yield z, None, d, y, pz[z] * p


def _response(table, parents, z, u, d, y, rd=None):
    if parents == ():
        key = ()
    else:
        key = response_key(parents, z, u, d, y, rd)
    try:
        return table[key]
    except KeyError:
        raise ValidationFailed(f"missing response probability for cell {key}")


def _observed_patterns(params: Params, mech: MechanismSpec):
    """Yield ``((z, d_obs, y_obs), mass)`` with ``None`` for missing values."""
    for z, u, d, y, mass in _atoms(params):
        if mech.regime == Regime.COMPLETE:
            yield (z, d, y), mass
        elif mech.regime == Regime.OUTCOME_ONLY:
            ry = _response(params.response_y, mech.ry_parents, z, u, d, y)
            if ry != 0:
                yield (z, d, y), mass * ry
            if ry != 1:
                yield (z, d, None), mass * (1 - ry)
        elif mech.regime == Regime.TREATMENT_ONLY:
            rd = _response(params.response_d, mech.rd_parents, z, u, d, y)
            if rd != 0:
                yield (z, d, y), mass * rd
            if rd != 1:
                yield (z, None, y), mass * (1 - rd)
        else:
            rd = _response(params.response_d, mech.rd_parents, z, u, d, y)
            for rdv, pd in ((1, rd), (0, 1 - rd)):
                if pd == 0:
                    continue
                ry = _response(params.response_y, mech.ry_parents, z, u, d, y, rdv)
                dobs = d if rdv == 1 else None
                if ry != 0:
                    yield (z, dobs, y), mass * pd * ry
                if ry != 1:
                    yield (z, dobs, None), mass * pd * (1 - ry)


def forward_observable(params: Params, mech: MechanismSpec) -> ObservableDistribution:
    """Exact distribution of the observed data under ``params`` and ``mech``.

    Cell probabilities are conditional on the instrument arm.  Arithmetic is
    rational when every parameter is rational, floating point otherwise.
    """
    problems = validate(params, mech)
    if problems:
        raise ValidationFailed("; ".join(problems))
    pz = {1: params.p_z, 0: 1 - params.p_z}
    cells = {}

    def add(key, mass, z):
        cells[key] = cells.get(key, 0) + mass / pz[z]

    for (z, dobs, yobs), mass in _observed_patterns(params, mech):
        if mech.regime == Regime.COMPLETE:
            add(("dy", z, dobs, yobs), mass, z)
        elif mech.regime == Regime.OUTCOME_ONLY:
            if yobs is None:
                add(("d+0", z, dobs), mass, z)
            else:
                add(("dy1", z, dobs, yobs), mass, z)
        elif mech.regime == Regime.TREATMENT_ONLY:
            if dobs is None:
                add(("y+0", z, yobs), mass, z)
            else:
                add(("dy1", z, dobs, yobs), mass, z)
        else:
            if dobs is not None and yobs is not None:
                add(("dy11", z, dobs, yobs), mass, z)
            elif dobs is None and yobs is not None:
                add(("y+01", z, yobs), mass, z)
            elif dobs is not None:
                add(("d1+0", z, dobs), mass, z)
            else:
                add(("+0+0", z), mass, z)

    exact = is_exact(params.p_z) and all(is_exact(v) for v in cells.values())
    obs = ObservableDistribution(
        regime=mech.regime,
        p_z=params.p_z,
        y_support=tuple(params.y_support),
        cells=cells,
        one_sided=params.one_sided,
        arithmetic="exact" if exact else "float",
    )
    obs.check()
    return obs


def sample_dataset(params: Params, mech: MechanismSpec, n: int, seed=None) -> Dataset:
    """Draw ``n`` i.i.d. observed records from the model.

    Uses :class:`numpy.random.default_rng`; a fixed ``seed`` makes the draw
    reproducible.
    """
    patterns = {}
    for rec, mass in _observed_patterns(params, mech):
        patterns[rec] = patterns.get(rec, 0) + mass
    keys = list(patterns.keys())
    probs = np.array([float(patterns[k]) for k in keys])
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, probs)
    records = []
    for key, count in zip(keys, counts):
        records.extend([key] * int(count))
    rng.shuffle(records)
    records = [tuple(r) for r in records]
    return Dataset(records=records, regime=mech.regime,
                   y_support=tuple(params.y_support))


def first_stage(params: Params):
    """P(D=1|Z=1) - P(D=1|Z=0); raises if zero."""
    if isinstance(params, StructuralParams):
        fs = params.pi_u.get(COMPLIER, 0)
    else:
        fs = sum(params.theta.get((1, 1, y), 0) - params.theta.get((0, 1, y), 0)
                 for y in params.y_support)
    if fs == 0:
        raise ZeroFirstStage("instrument does not move treatment")
    return fs


def joint_law(params: StructuralParams) -> dict:
    """Full joint law P(Z=z, U=u, D=d, Y=y) as a dict keyed by (z, u, d, y)."""
    if not isinstance(params, StructuralParams):
        raise ValidationFailed("joint law requires structural parameters")
    return {(z, u, d, y): mass for z, u, d, y, mass in _atoms(params)}
