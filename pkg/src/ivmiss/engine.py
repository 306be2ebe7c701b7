"""Identification engine: recover the complier effect from observable law.

Every identifiable mechanism in the catalog has a recipe built from a small
set of primitives:

* direct division by an observable response propensity,
* subtraction of a principal stratum whose cells are observable in one
  instrument arm ("stripping"),
* linear systems in missingness odds (complete-case cells as coefficients,
  incomplete-case masses on the right-hand side),
* a two-point ratio solve for binary outcomes, and
* a one-dimensional mixture solve.

All primitives run in rational arithmetic when the observable distribution
is exact and in floating point otherwise; condition checks (positivity and
dependence) are evaluated along the way and reported as diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .catalog import lookup
from .model import (
    ALWAYS_TAKER,
    COMPLIER,
    NEVER_TAKER,
    Check,
    ConditionReport,
    DependenceViolated,
    IdentificationError,
    IdentificationResult,
    InconsistentObservables,
    MechanismNotIdentifiable,
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
    ValidationFailed,
    ZeroFirstStage,
    is_exact,
)


@dataclass(frozen=True)
class Tolerances:
    det: float = 1e-10    # singularity / dependence threshold (float mode)
    prob: float = 1e-12   # positivity threshold (float mode)


_FLOAT_NEG = 1e-8   # clamp limit for solved quantities in float mode


# ---------------------------------------------------------------------------
# numeric primitives
# ---------------------------------------------------------------------------

def _sigma_min(A) -> float:
    """Smallest singular value of the row-normalized coefficient matrix."""
    M = np.array([[float(x) for x in row] for row in A], dtype=float)
    norms = np.linalg.norm(M, axis=1)
    norms[norms == 0] = 1.0
    return float(np.linalg.svd(M / norms[:, None], compute_uv=False)[-1])


def _exact_solve(A, b):
    """Gauss-Jordan over the rationals.

    Returns ``(solution, rank, consistent)``; ``solution`` is None when the
    system is rank deficient.
    """
    m, k = len(A), len(A[0])
    aug = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    rank = 0
    pivots = []
    for col in range(k):
        pivot = next((r for r in range(rank, m) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        pv = aug[rank][col]
        aug[rank] = [x / pv for x in aug[rank]]
        for r in range(m):
            if r != rank and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[rank])]
        pivots.append(col)
        rank += 1
    consistent = all(aug[r][k] == 0 for r in range(rank, m))
    if rank < k:
        return None, rank, consistent
    sol = [Fraction(0)] * k
    for r, col in enumerate(pivots):
        sol[col] = aug[r][k]
    return sol, rank, consistent


class Recorder:
    """Accumulates condition checks; raises on failure when strict."""

    def __init__(self, tol: Tolerances, exact: bool, strict: bool = True):
        self.tol = tol
        self.exact = exact
        self.strict = strict
        self.checks = []

    def positivity(self, name, value):
        mag = float(value)
        ok = (value > 0) if self.exact else (mag > self.tol.prob)
        self.checks.append(Check(name, "positivity", mag, self.tol.prob, ok))
        if not ok:
            raise PositivityViolated(name, mag)

    def dependence(self, name, magnitude, exact_pass=None):
        """Record a dependence check.

        ``magnitude`` is a float; in exact mode the pass verdict comes from
        ``exact_pass`` (a bool), so exact independence reports magnitude 0.
        """
        mag = float(magnitude)
        if self.exact and exact_pass is not None:
            ok = exact_pass
            if not ok:
                mag = 0.0
        else:
            ok = mag >= self.tol.det
        self.checks.append(Check(name, "dependence", mag, self.tol.det, ok))
        if not ok:
            raise DependenceViolated(name, mag)


def solve_linear_odds(A, b, tol_det: float = 1e-10, rec=None, name=None):
    """Solve ``A x = b`` for a vector of missingness odds.

    ``A`` is an m-by-k matrix (m >= k, k in {1, 2, 3, 4}) of complete-case
    probabilities and ``b`` the matching incomplete-case masses.  Arithmetic
    is rational when all entries are rational.  Near-singular systems raise
    :class:`SingularSystem` (or :class:`DependenceViolated` when the solve
    doubles as a named dependence check via ``rec``/``name``); negative
    solutions raise :class:`NegativeOdds`; inconsistent overdetermined
    systems raise :class:`InconsistentObservables`.
    """
    m, k = len(A), len(A[0])
    if m < k:
        raise SingularSystem(f"underdetermined system ({m} equations, {k} unknowns)")
    exact = all(is_exact(x) for row in A for x in row) and all(is_exact(x) for x in b)
    if exact:
        sol, rank, consistent = _exact_solve(A, b)
        full_rank = rank == k
        if rec is not None and name is not None:
            rec.dependence(name, _sigma_min(A) if full_rank else 0.0, exact_pass=full_rank)
        elif not full_rank:
            raise SingularSystem(f"rank {rank} < {k} in odds system")
        if not consistent:
            raise InconsistentObservables("overdetermined odds system is inconsistent")
        x = sol
    else:
        sigma = _sigma_min(A)
        if rec is not None and name is not None:
            rec.dependence(name, sigma)
        elif sigma < tol_det:
            raise SingularSystem(f"odds system nearly singular (sigma_min {sigma:g})")
        M = np.array([[float(v) for v in row] for row in A], dtype=float)
        x = list(np.linalg.lstsq(M, np.array([float(v) for v in b]), rcond=None)[0])
    out = []
    for v in x:
        if v < 0:
            if exact or v < -_FLOAT_NEG:
                raise NegativeOdds(f"solved odds {float(v):g} is negative")
            v = 0 if exact else 0.0
        out.append(v)
    return out


def _solve_scalar(coefs, rhs, exact, tol, rec=None, name=None):
    """Solve a stacked one-unknown linear system ``coef_i * x = rhs_i``."""
    if exact:
        nz = [i for i, c in enumerate(coefs) if c != 0]
        mag = max((abs(float(c)) for c in coefs), default=0.0)
        if rec is not None and name is not None:
            rec.dependence(name, mag if nz else 0.0, exact_pass=bool(nz))
        elif not nz:
            raise SingularSystem("degenerate mixture equation")
        x = rhs[nz[0]] / coefs[nz[0]]
        for i in nz[1:]:
            if rhs[i] / coefs[i] != x:
                raise InconsistentObservables("mixture equations are inconsistent")
        for i, c in enumerate(coefs):
            if c == 0 and rhs[i] != 0:
                raise InconsistentObservables("mixture equations are inconsistent")
        return x
    denom = sum(float(c) ** 2 for c in coefs)
    mag = max((abs(float(c)) for c in coefs), default=0.0)
    if rec is not None and name is not None:
        rec.dependence(name, mag)
    elif mag < tol.det:
        raise SingularSystem("degenerate mixture equation")
    return sum(float(c) * float(r) for c, r in zip(coefs, rhs)) / denom


def strip_stratum(arm_cells, counterpart_cells, adjustment=1, tol: float = 1e-9):
    """Subtract an observable stratum from a mixed arm, cell by cell.

    Computes ``arm - adjustment * counterpart`` elementwise.  Negative
    results raise :class:`NegativeStratumMass` (tiny float negatives are
    clamped to zero).
    """
    exact = all(is_exact(v) for v in list(arm_cells) + list(counterpart_cells)) \
        and is_exact(adjustment)
    out = []
    for a, c in zip(arm_cells, counterpart_cells):
        v = a - adjustment * c
        if v < 0:
            if exact or v < -tol:
                raise NegativeStratumMass(
                    f"stratum subtraction produced negative mass {float(v):g}")
            v = 0.0
        out.append(v)
    return out


def solve_binary_ratio(r1, r0):
    """Recover binary complier outcome laws from per-level ratios.

    ``r_y = P(Y=y | c, 0) / P(Y=y | c, 1)`` for the high (``r1``) and low
    (``r0``) outcome level.  Returns ``(P(Y=hi|c,1), P(Y=hi|c,0))``, or
    ``None`` when both ratios equal one (the two laws coincide: the effect
    is zero but the common law is not identified).  Equal ratios different
    from one are impossible for probability laws and raise
    :class:`InconsistentObservables`.
    """
    exact = is_exact(r1) and is_exact(r0)
    # in float mode nearly-equal ratios are the degenerate case up to noise
    close = r1 == r0 if exact else abs(r1 - r0) <= 1e-9 * max(1, abs(r1), abs(r0))
    if close:
        if r1 == 1 or (not exact and abs(r1 - 1) <= 1e-6):
            return None
        raise InconsistentObservables(
            f"equal outcome ratios {float(r1):g} != 1 admit no probability law")
    p1 = (1 - r0) / (r1 - r0)
    p0 = r1 * p1
    out = []
    for p in (p1, p0):
        if not 0 <= p <= 1:
            if exact or (p < -_FLOAT_NEG or p > 1 + _FLOAT_NEG):
                raise InconsistentObservables(
                    f"ratio solve gave probability {float(p):g} outside [0, 1]")
            p = min(max(p, 0.0), 1.0)
        out.append(p)
    return tuple(out)


def _div(a, b, what):
    if b == 0:
        raise InconsistentObservables(f"division by zero in {what}")
    return a / b


def _odds_to_prob(odds):
    return 1 / (1 + odds)


# ---------------------------------------------------------------------------
# observable views
# ---------------------------------------------------------------------------

class _View:
    """Accessor helpers over an observable distribution."""

    def __init__(self, obs: ObservableDistribution):
        self.obs = obs
        self.S = obs.y_support
        self.one_sided = obs.one_sided
        self.exact = obs.arithmetic == "exact"

    def zd_pairs(self):
        if self.one_sided:
            return ((0, 0), (1, 0), (1, 1))
        return ((0, 0), (0, 1), (1, 0), (1, 1))

    # OutcomeOnly / TreatmentOnly complete cells
    def dy1(self, z, d, y):
        return self.obs.get("dy1", z, d, y)

    # OutcomeOnly
    def dplus0(self, z, d):
        return self.obs.get("d+0", z, d)

    def PD(self, z, d):
        return sum(self.dy1(z, d, y) for y in self.S) + self.dplus0(z, d)

    # TreatmentOnly
    def yplus0(self, z, y):
        return self.obs.get("y+0", z, y)

    # Both
    def dy11(self, z, d, y):
        return self.obs.get("dy11", z, d, y)

    def yplus01(self, z, y):
        return self.obs.get("y+01", z, y)

    def d1plus0(self, z, d):
        return self.obs.get("d1+0", z, d)

    def pp0(self, z):
        return self.obs.get("+0+0", z)

    def PD_RD1(self, z, d):
        return sum(self.dy11(z, d, y) for y in self.S) + self.d1plus0(z, d)

    def P_RD1(self, z):
        return self.PD_RD1(z, 0) + self.PD_RD1(z, 1)

    def P_RD0(self, z):
        return sum(self.yplus01(z, y) for y in self.S) + self.pp0(z)

    def ry_rd1(self, z, d, rec=None):
        """P(R^Y = 1 | Z=z, D=d, R^D=1)."""
        den = self.PD_RD1(z, d)
        num = sum(self.dy11(z, d, y) for y in self.S)
        if rec is not None:
            rec.positivity(f"P(R^Y=1 | Z={z}, D={d}, R^D=1)",
                           0 if den == 0 else num / den)
        return _div(num, den, f"P(R^Y=1|Z={z},D={d},R^D=1)")


# ---------------------------------------------------------------------------
# result assembly
# ---------------------------------------------------------------------------

def _clamp_cell(v, exact, what):
    if v < 0:
        if exact or v < -1e-6:
            raise InconsistentObservables(f"negative probability {float(v):g} in {what}")
        return 0.0
    return v


def _strata_from_table(table, S, one_sided, exact, clamp=False):
    """Principal-stratum outcome masses from a completed P(D, Y | Z) table."""
    never = {y: table.get((1, 0, y), 0) for y in S}
    always = {y: (0 if one_sided else table.get((0, 1, y), 0)) for y in S}
    c0 = {y: table.get((0, 0, y), 0) - never[y] for y in S}
    c1 = {y: table.get((1, 1, y), 0) - always[y] for y in S}
    if clamp:
        c0 = {y: _clamp_cell(v, exact, "complier stratum") for y, v in c0.items()}
        c1 = {y: _clamp_cell(v, exact, "complier stratum") for y, v in c1.items()}
    return never, always, c0, c1


def _result_from_table(label, view, table, nuisance):
    """Build a result from a reconstructed complete-data law P(D, Y | Z)."""
    exact = view.exact
    table = {k: _clamp_cell(v, exact, f"P(D,Y|Z) cell {k}") for k, v in table.items()}
    for z in (0, 1):
        s = sum(v for (zz, _, _), v in table.items() if zz == z)
        if exact:
            if s != 1:
                raise InconsistentObservables(
                    f"reconstructed P(D,Y|Z={z}) sums to {s}")
        else:
            if abs(s - 1) > 1e-6:
                raise InconsistentObservables(
                    f"reconstructed P(D,Y|Z={z}) sums to {s:.8f}")
            if s > 0:
                table = {k: (v / s if k[0] == z else v) for k, v in table.items()}
    _, _, c0, c1 = _strata_from_table(table, view.S, view.one_sided, exact)
    fs0 = sum(c0.values())
    fs1 = sum(c1.values())
    if fs0 == 0 or fs1 == 0:
        raise ZeroFirstStage("instrument does not move treatment")
    m0 = sum(y * v for y, v in c0.items()) / fs0
    m1 = sum(y * v for y, v in c1.items()) / fs1
    result = IdentificationResult(
        mechanism=label, cace=m1 - m0, complier_means=(m0, m1), nuisance=nuisance)
    return result, {"table": table}


def _result_from_laws(label, view, law0, law1, nuisance, extra=None):
    """Build a result from the two complier outcome laws."""
    m0 = sum(y * p for y, p in law0.items())
    m1 = sum(y * p for y, p in law1.items())
    nuisance = dict(nuisance)
    nuisance["complier_law_d0"] = law0
    nuisance["complier_law_d1"] = law1
    result = IdentificationResult(
        mechanism=label, cace=m1 - m0, complier_means=(m0, m1), nuisance=nuisance)
    ctx = {"laws": (law0, law1)}
    if extra:
        ctx.update(extra)
    return result, ctx


def _normalize(cells, rec, name):
    total = sum(cells.values())
    rec.positivity(name, total)
    return {y: v / total for y, v in cells.items()}, total


def _binary_ratio_result(label, view, ratios, nuisance, rec, extra=None):
    """Finish a recipe that ends in a two-point ratio solve."""
    lo, hi = view.S
    sol = solve_binary_ratio(ratios[hi], ratios[lo])
    if sol is None:
        result = IdentificationResult(
            mechanism=label, cace=0, complier_means=None,
            nuisance=dict(nuisance, note="complier laws coincide; means not identified"))
        return result, dict(extra or {})
    p1, p0 = sol
    law0 = {lo: 1 - p0, hi: p0}
    law1 = {lo: 1 - p1, hi: p1}
    return _result_from_laws(label, view, law0, law1, nuisance, extra)


# ---------------------------------------------------------------------------
# outcome-only recipes
# ---------------------------------------------------------------------------

def _r_mcar_y(o, rec, tol):
    table = {}
    r = {}
    for z in (0, 1):
        r[z] = sum(o.dy1(z, d, y) for d in (0, 1) for y in o.S)
        rec.positivity(f"P(R^Y=1 | Z={z})", r[z])
    for z, d in o.zd_pairs():
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) / r[z]
    return _result_from_table("MCAR-Y", o, table, {"response": r})


def _r_1zd(o, rec, tol):
    table = {}
    ry = {}
    for z, d in o.zd_pairs():
        den = o.PD(z, d)
        num = sum(o.dy1(z, d, y) for y in o.S)
        ry[(z, d)] = 0 if den == 0 else num / den
        rec.positivity(f"P(R^Y=1 | Z={z}, D={d})", ry[(z, d)])
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) / ry[(z, d)]
    return _result_from_table("1ZD", o, table, {"response": ry})


def _strip_outcome_only(o):
    """Complete-case complier cells in an outcome-only (or treatment-only)
    regime where the response factor is constant within (stratum, d)."""
    never = [o.dy1(1, 0, y) for y in o.S]
    c0 = strip_stratum([o.dy1(0, 0, y) for y in o.S], never)
    if o.one_sided:
        always = [0 for _ in o.S]
        c1 = [o.dy1(1, 1, y) for y in o.S]
    else:
        always = [o.dy1(0, 1, y) for y in o.S]
        c1 = strip_stratum([o.dy1(1, 1, y) for y in o.S], always)
    return never, always, dict(zip(o.S, c0)), dict(zip(o.S, c1))


def _r_1ud(o, rec, tol):
    never, always, c0, c1 = _strip_outcome_only(o)
    law0, mass0 = _normalize(c0, rec, "P(U=c, D=0, R^Y=1) (needs P(R^Y=1|c,0) > 0)")
    law1, mass1 = _normalize(c1, rec, "P(U=c, D=1, R^Y=1) (needs P(R^Y=1|c,1) > 0)")
    extra = {"strata_cc": (never, always, c0, c1)}
    return _result_from_laws("1UD", o, law0, law1,
                             {"complier_cc_mass": (mass0, mass1)}, extra)


def _r_1uy(o, rec, tol):
    _, _, c0, c1 = _strip_outcome_only(o)
    for y in o.S:
        rec.positivity(f"P(U=c, Y={y}, R^Y=1 | D-arm) (needs P(R^Y=1|c,{y}) > 0)",
                       c0[y] if c0[y] < c1[y] else c1[y])
    ratios = {y: c0[y] / c1[y] for y in o.S}
    return _binary_ratio_result("1UY", o, ratios, {"ratios": ratios}, rec)


def _r_1dy(o, rec, tol):
    table = {}
    etas = {}
    for d in (0, 1):
        for y in o.S:
            rec.positivity(f"P(R^Y=1 | D={d}, Y={y})",
                           sum(o.dy1(z, d, y) for z in (0, 1)))
        A = [[o.dy1(z, d, y) for y in o.S] for z in (0, 1)]
        b = [o.dplus0(z, d) for z in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of Z given D={d}")
        etas[d] = dict(zip(o.S, eta))
        for z in (0, 1):
            for y in o.S:
                table[(z, d, y)] = o.dy1(z, d, y) * (1 + etas[d][y])
    return _result_from_table("1DY", o, table, {"odds": etas})


def _r_1zy(o, rec, tol):
    table = {}
    etas = {}
    for z in (0, 1):
        for y in o.S:
            rec.positivity(f"P(R^Y=1 | Z={z}, Y={y})",
                           sum(o.dy1(z, d, y) for d in (0, 1)))
        A = [[o.dy1(z, d, y) for y in o.S] for d in (0, 1)]
        b = [o.dplus0(z, d) for d in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of D given Z={z}")
        etas[z] = dict(zip(o.S, eta))
        for d in (0, 1):
            for y in o.S:
                table[(z, d, y)] = o.dy1(z, d, y) * (1 + etas[z][y])
    return _result_from_table("1ZY", o, table, {"odds": etas})


def _r_1y(o, rec, tol):
    k = len(o.S)
    pairs = o.zd_pairs()
    if k > len(pairs):
        raise ValidationFailed(
            f"1Y needs |Y| <= {len(pairs)} here (got {k} outcome levels)")
    for y in o.S:
        rec.positivity(f"P(R^Y=1 | Y={y})",
                       sum(o.dy1(z, d, y) for z, d in pairs))
    A = [[o.dy1(z, d, y) for y in o.S] for z, d in pairs]
    b = [o.dplus0(z, d) for z, d in pairs]
    eta = solve_linear_odds(
        A, b, tol.det, rec,
        "complete-case (z,d) x y matrix has rank |Y|")
    eta = dict(zip(o.S, eta))
    table = {(z, d, y): o.dy1(z, d, y) * (1 + eta[y])
             for z, d in pairs for y in o.S}
    return _result_from_table("1Y", o, table, {"odds": eta})


# ---------------------------------------------------------------------------
# treatment-only recipes
# ---------------------------------------------------------------------------

def _r_mcar_d(o, rec, tol):
    table = {}
    r = {}
    for z in (0, 1):
        r[z] = sum(o.dy1(z, d, y) for d in (0, 1) for y in o.S)
        rec.positivity(f"P(R^D=1 | Z={z})", r[z])
    for z, d in o.zd_pairs():
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) / r[z]
    return _result_from_table("MCAR-D", o, table, {"response": r})


def _r_2zy(o, rec, tol):
    table = {}
    rd = {}
    for z in (0, 1):
        for y in o.S:
            num = sum(o.dy1(z, d, y) for d in (0, 1))
            den = num + o.yplus0(z, y)
            rd[(z, y)] = 0 if den == 0 else num / den
            rec.positivity(f"P(R^D=1 | Z={z}, Y={y})", rd[(z, y)])
    for z, d in o.zd_pairs():
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) / rd[(z, y)]
    return _result_from_table("2ZY", o, table, {"response": rd})


def _r_2dy(o, rec, tol):
    table = {}
    zetas = {}
    for y in o.S:
        for d in (0, 1):
            rec.positivity(f"P(R^D=1 | D={d}, Y={y})",
                           sum(o.dy1(z, d, y) for z in (0, 1)))
        if o.one_sided:
            z0 = _div(o.yplus0(0, y), o.dy1(0, 0, y), "zeta_y(0)")
            num = o.yplus0(1, y) - o.dy1(1, 0, y) * z0
            if num < 0:
                if o.exact or num < -_FLOAT_NEG:
                    raise NegativeOdds(f"solved odds {float(num):g} is negative")
                num = 0.0
            z1 = _div(num, o.dy1(1, 1, y), "zeta_y(1)")
            zetas[y] = {0: z0, 1: z1}
        else:
            A = [[o.dy1(z, 0, y), o.dy1(z, 1, y)] for z in (0, 1)]
            b = [o.yplus0(z, y) for z in (0, 1)]
            x = solve_linear_odds(A, b, tol.det, rec,
                                  f"D not independent of Z given Y={y}")
            zetas[y] = {0: x[0], 1: x[1]}
    for z, d in o.zd_pairs():
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) * (1 + zetas[y][d])
    return _result_from_table("2DY", o, table, {"odds": zetas})


def _r_2ud(o, rec, tol):
    never, always, c0, c1 = _strip_outcome_only(o)
    law0, mass0 = _normalize(c0, rec, "P(U=c, D=0, R^D=1) (needs P(R^D=1|c,0) > 0)")
    law1, mass1 = _normalize(c1, rec, "P(U=c, D=1, R^D=1) (needs P(R^D=1|c,1) > 0)")
    extra = {"strata_cc": (never, always, c0, c1)}
    return _result_from_laws("2UD", o, law0, law1,
                             {"complier_cc_mass": (mass0, mass1)}, extra)


def _r_2uy(o, rec, tol):
    never, always, c0, c1 = _strip_outcome_only(o)
    for y in o.S:
        rec.positivity(f"P(U=c, Y={y}, R^D=1 | arm) (needs P(R^D=1|c,{y}) > 0)",
                       c1[y] if c1[y] < c0[y] else c0[y])
    ratios = {y: c0[y] / c1[y] for y in o.S}
    extra = {"strata_cc": (never, always, c0, c1)}
    return _binary_ratio_result("2UY", o, ratios, {"ratios": ratios}, rec, extra)


def _r_2zd(o, rec, tol):
    table = {}
    zetas = {}
    for z in (0, 1):
        for d in (0, 1):
            if o.one_sided and (z, d) == (0, 1):
                continue
            rec.positivity(f"P(R^D=1 | Z={z}, D={d}) complete-case mass",
                           sum(o.dy1(z, d, y) for y in o.S))
        if o.one_sided and z == 0:
            zetas[(0, 0)] = _div(sum(o.yplus0(0, y) for y in o.S),
                                 sum(o.dy1(0, 0, y) for y in o.S), "zeta_0(0)")
            continue
        A = [[o.dy1(z, 0, y), o.dy1(z, 1, y)] for y in o.S]
        b = [o.yplus0(z, y) for y in o.S]
        x = solve_linear_odds(A, b, tol.det, rec,
                              f"Y not independent of D given Z={z}")
        zetas[(z, 0)], zetas[(z, 1)] = x
    for z, d in o.zd_pairs():
        for y in o.S:
            table[(z, d, y)] = o.dy1(z, d, y) * (1 + zetas[(z, d)])
    return _result_from_table("2ZD", o, table, {"odds": zetas})


def _r_2zu(o, rec, tol):
    mn = sum(o.dy1(1, 0, y) for y in o.S)
    mc = sum(o.dy1(1, 1, y) for y in o.S)
    rec.positivity("P(U=n, D=0, R^D=1 | Z=1) (needs P(R^D=1|Z=1,n) > 0)", mn)
    rec.positivity("P(U=c, D=1, R^D=1 | Z=1) (needs P(R^D=1|Z=1,c) > 0)", mc)
    g_n = {y: o.dy1(1, 0, y) / mn for y in o.S}
    g_c1 = {y: o.dy1(1, 1, y) / mc for y in o.S}
    L1 = {y: o.dy1(1, 0, y) + o.dy1(1, 1, y) + o.yplus0(1, y) for y in o.S}
    coefs = [g_n[y] - g_c1[y] for y in o.S]
    rhs = [L1[y] - g_c1[y] for y in o.S]
    pi = _solve_scalar(coefs, rhs, o.exact, tol, rec,
                       "mixture separation: P(Y|n,0) differs from P(Y|c,1)")
    if not 0 < pi < 1:
        raise InconsistentObservables(f"mixture weight {float(pi):g} outside (0, 1)")
    L0 = {y: o.dy1(0, 0, y) + o.dy1(0, 1, y) + o.yplus0(0, y) for y in o.S}
    law0 = {y: (L0[y] - pi * g_n[y]) / (1 - pi) for y in o.S}
    law0 = {y: _clamp_cell(v, o.exact, "P(Y|c,0)") for y, v in law0.items()}
    extra = {"mixture": {"pi_n": pi, "g_n": g_n}}
    return _result_from_laws("2ZU", o, law0, g_c1, {"pi_n": pi}, extra)


# ---------------------------------------------------------------------------
# both-missing recipes
# ---------------------------------------------------------------------------

def _complier_rd1_masses(o, rec, rho0=1, rho1=1):
    """Complier complete-R^D masses via stripping, with optional response
    ratio adjustments for the counterpart cells."""
    m0 = o.PD_RD1(0, 0) - o.PD_RD1(1, 0) * rho0
    m1 = o.PD_RD1(1, 1) - (0 if o.one_sided else o.PD_RD1(0, 1) * rho1)
    rec.positivity("P(U=c, D=0, R^D=1 | Z=0) (needs P(R^D=1|c,0) > 0)", m0)
    rec.positivity("P(U=c, D=1, R^D=1 | Z=1) (needs P(R^D=1|c,1) > 0)", m1)
    return m0, m1


def _strip_both(o, rho0=1, rho1=1):
    """Strip never/always-takers from the fully observed cells, multiplying
    the counterpart arm by a response ratio where the recipe requires it."""
    c0 = strip_stratum([o.dy11(0, 0, y) for y in o.S],
                       [o.dy11(1, 0, y) for y in o.S], rho0)
    if o.one_sided:
        c1 = [o.dy11(1, 1, y) for y in o.S]
    else:
        c1 = strip_stratum([o.dy11(1, 1, y) for y in o.S],
                           [o.dy11(0, 1, y) for y in o.S], rho1)
    return dict(zip(o.S, c0)), dict(zip(o.S, c1))


# -- recipe family: R^D driven by (U, D), R^D a parent of R^Y --------------

def _r_1zd_o2ud(o, rec, tol):
    _complier_rd1_masses(o, rec)
    rho0 = _div(o.ry_rd1(0, 0, rec), o.ry_rd1(1, 0, rec), "response ratio d=0")
    if o.one_sided:
        o.ry_rd1(1, 1, rec)
        rho1 = 1
    else:
        rho1 = _div(o.ry_rd1(1, 1, rec), o.ry_rd1(0, 1, rec), "response ratio d=1")
    c0, c1 = _strip_both(o, rho0, rho1)
    law0, _ = _normalize(c0, rec, "complier complete cells at d=0")
    law1, _ = _normalize(c1, rec, "complier complete cells at d=1")
    return _result_from_laws("1ZD(+)2UD", o, law0, law1, {"rho": (rho0, rho1)})


def _r_1ud_o2ud(o, rec, tol):
    _complier_rd1_masses(o, rec)
    c0, c1 = _strip_both(o)
    law0, m0 = _normalize(c0, rec, "complier complete cells at d=0 "
                                   "(needs P(R^Y=1|c,0,R^D=1) > 0)")
    law1, m1 = _normalize(c1, rec, "complier complete cells at d=1 "
                                   "(needs P(R^Y=1|c,1,R^D=1) > 0)")
    return _result_from_laws("1UD(+)2UD", o, law0, law1, {"cc_mass": (m0, m1)})


def _r_1dy_o2ud(o, rec, tol):
    _complier_rd1_masses(o, rec)
    etas = {}
    for d in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for z in (0, 1)]
        b = [o.d1plus0(z, d) for z in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of Z given D={d}, R^D=1")
        etas[d] = dict(zip(o.S, eta))
    c0, c1 = _strip_both(o)
    law0, _ = _normalize({y: c0[y] * (1 + etas[0][y]) for y in o.S}, rec,
                         "complier stratum mass at d=0")
    law1, _ = _normalize({y: c1[y] * (1 + etas[1][y]) for y in o.S}, rec,
                         "complier stratum mass at d=1")
    return _result_from_laws("1DY(+)2UD", o, law0, law1, {"odds": etas})


def _r_1zy_o2ud(o, rec, tol):
    _complier_rd1_masses(o, rec)
    etas = {}
    for z in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for d in (0, 1)]
        b = [o.d1plus0(z, d) for d in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of D given Z={z}, R^D=1")
        etas[z] = dict(zip(o.S, eta))
    ry = {(z, y): _odds_to_prob(etas[z][y]) for z in (0, 1) for y in o.S}
    c0 = strip_stratum([o.dy11(0, 0, y) for y in o.S],
                       [o.dy11(1, 0, y) * ry[(0, y)] / ry[(1, y)] for y in o.S])
    c1 = strip_stratum([o.dy11(1, 1, y) for y in o.S],
                       [o.dy11(0, 1, y) * ry[(1, y)] / ry[(0, y)] for y in o.S])
    law0, _ = _normalize({y: v / ry[(0, y)] for y, v in zip(o.S, c0)}, rec,
                         "complier stratum mass at d=0")
    law1, _ = _normalize({y: v / ry[(1, y)] for y, v in zip(o.S, c1)}, rec,
                         "complier stratum mass at d=1")
    return _result_from_laws("1ZY(+)2UD", o, law0, law1, {"odds": etas})


def _r_1uy_o2ud(o, rec, tol):
    m0, m1 = _complier_rd1_masses(o, rec)
    c0, c1 = _strip_both(o)
    for y in o.S:
        rec.positivity(f"complier complete cell at Y={y} "
                       f"(needs P(R^Y=1|c,{y},R^D=1) > 0)",
                       c1[y] if c1[y] < c0[y] else c0[y])
    ratios = {y: (c0[y] * m1) / (c1[y] * m0) for y in o.S}
    return _binary_ratio_result("1UY(+)2UD", o, ratios, {"ratios": ratios}, rec)


# -- recipe family: R^D driven by (Z, D), R^Y independent of R^D -----------

def _zeta_zd(o, rec, tol, dep_name, extra_row=True):
    """Odds of treatment-missingness by (z, d) from per-arm linear systems."""
    zetas = {}
    for z in (0, 1):
        for d in (0, 1):
            if o.one_sided and (z, d) == (0, 1):
                continue
            rec.positivity(f"P(D={d}, R^D=1 | Z={z}) (needs P(R^D=1|{z},{d}) > 0)",
                           o.PD_RD1(z, d))
        if o.one_sided and z == 0:
            zetas[(0, 0)] = o.P_RD0(0) / o.PD_RD1(0, 0)
            continue
        A = [[o.dy11(z, 0, y), o.dy11(z, 1, y)] for y in o.S]
        b = [o.yplus01(z, y) for y in o.S]
        if extra_row:
            A.append([o.d1plus0(z, 0), o.d1plus0(z, 1)])
            b.append(o.pp0(z))
        x = solve_linear_odds(A, b, tol.det, rec, dep_name.format(z=z))
        zetas[(z, 0)], zetas[(z, 1)] = x
    return zetas


_DEP_YDAGGER = "(Y R^Y, R^Y) not independent of D given Z={z}"


def _r_1zd_2zd(o, rec, tol):
    zetas = _zeta_zd(o, rec, tol, _DEP_YDAGGER)
    table = {}
    for z, d in o.zd_pairs():
        ry = o.ry_rd1(z, d, rec)
        rd = _odds_to_prob(zetas[(z, d)])
        for y in o.S:
            table[(z, d, y)] = o.dy11(z, d, y) / (rd * ry)
    return _result_from_table("1ZD+2ZD", o, table, {"rd_odds": zetas})


def _r_1ud_2zd(o, rec, tol):
    zetas = _zeta_zd(o, rec, tol, _DEP_YDAGGER)
    rd = {k: _odds_to_prob(v) for k, v in zetas.items()}
    rho0 = rd[(0, 0)] / rd[(1, 0)]
    rho1 = 1 if o.one_sided else rd[(1, 1)] / rd[(0, 1)]
    c0, c1 = _strip_both(o, rho0, rho1)
    law0, _ = _normalize(c0, rec, "complier complete cells at d=0 "
                                  "(needs P(R^Y=1|c,0) > 0)")
    law1, _ = _normalize(c1, rec, "complier complete cells at d=1 "
                                  "(needs P(R^Y=1|c,1) > 0)")
    return _result_from_laws("1UD+2ZD", o, law0, law1, {"rd_odds": zetas})


def _r_1dy_2zd(o, rec, tol):
    zetas = _zeta_zd(o, rec, tol, _DEP_YDAGGER)
    etas = {}
    for d in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for z in (0, 1)]
        b = [o.d1plus0(z, d) for z in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of Z given D={d}")
        etas[d] = dict(zip(o.S, eta))
    table = {(z, d, y): o.dy11(z, d, y) * (1 + etas[d][y]) * (1 + zetas[(z, d)])
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1DY+2ZD", o, table, {"rd_odds": zetas, "ry_odds": etas})


def _r_1zy_2zd(o, rec, tol):
    zetas = _zeta_zd(o, rec, tol, "Y not independent of D given Z={z}",
                     extra_row=False)
    etas = {}
    for z in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for d in (0, 1)]
        b = [o.d1plus0(z, d) for d in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of D given Z={z} (R^Y odds)")
        etas[z] = dict(zip(o.S, eta))
    table = {(z, d, y): o.dy11(z, d, y) * (1 + etas[z][y]) * (1 + zetas[(z, d)])
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1ZY+2ZD", o, table, {"rd_odds": zetas, "ry_odds": etas})


def _r_1uy_2zd(o, rec, tol):
    zetas = _zeta_zd(o, rec, tol, _DEP_YDAGGER)
    rd = {k: _odds_to_prob(v) for k, v in zetas.items()}
    rho0 = rd[(0, 0)] / rd[(1, 0)]
    rho1 = 1 if o.one_sided else rd[(1, 1)] / rd[(0, 1)]
    c0, c1 = _strip_both(o, rho0, rho1)
    for y in o.S:
        rec.positivity(f"complier complete cell at Y={y} "
                       f"(needs P(R^Y=1|c,{y}) > 0)",
                       c1[y] if c1[y] < c0[y] else c0[y])
    scale = rd[(1, 1)] / rd[(0, 0)]
    ratios = {y: (c0[y] / c1[y]) * scale for y in o.S}
    return _binary_ratio_result("1UY+2ZD", o, ratios,
                                {"ratios": ratios, "rd_odds": zetas}, rec)


# -- recipe family: R^D driven by (Z, U), one-sided ------------------------

def _mixture_pi(o, rec, tol, law_n, law_c1, target, name):
    coefs = [law_n[y] - law_c1[y] for y in o.S]
    rhs = [target[y] - law_c1[y] for y in o.S]
    pi = _solve_scalar(coefs, rhs, o.exact, tol, rec, name)
    if not 0 < pi < 1:
        raise InconsistentObservables(f"mixture weight {float(pi):g} outside (0, 1)")
    return pi


def _rd1_masses_z1(o, rec):
    mn = o.PD_RD1(1, 0)
    mc = o.PD_RD1(1, 1)
    rec.positivity("P(U=n, D=0, R^D=1 | Z=1) (needs P(R^D=1|Z=1,n) > 0)", mn)
    rec.positivity("P(U=c, D=1, R^D=1 | Z=1) (needs P(R^D=1|Z=1,c) > 0)", mc)
    return mn, mc


def _r_1zd_2zu(o, rec, tol):
    _rd1_masses_z1(o, rec)
    f_n, _ = _normalize({y: o.dy11(1, 0, y) for y in o.S}, rec,
                        "complete never-taker cells at Z=1")
    f_c1, _ = _normalize({y: o.dy11(1, 1, y) for y in o.S}, rec,
                         "complete complier cells at Z=1")
    ry = {(z, d): o.ry_rd1(z, d, rec) for z, d in ((1, 1), (1, 0), (0, 0))}
    target = {y: o.dy11(1, 0, y) + o.dy11(1, 1, y) + o.yplus01(1, y) for y in o.S}
    coefs = [f_n[y] * ry[(1, 0)] - f_c1[y] * ry[(1, 1)] for y in o.S]
    rhs = [target[y] - f_c1[y] * ry[(1, 1)] for y in o.S]
    pi = _solve_scalar(coefs, rhs, o.exact, tol, rec,
                       "mixture separation: P(Y|n,0) differs from P(Y|c,1)")
    if not 0 < pi < 1:
        raise InconsistentObservables(f"mixture weight {float(pi):g} outside (0, 1)")
    L0 = {y: (o.dy11(0, 0, y) + o.yplus01(0, y)) / ry[(0, 0)] for y in o.S}
    law0 = {y: _clamp_cell((L0[y] - pi * f_n[y]) / (1 - pi), o.exact, "P(Y|c,0)")
            for y in o.S}
    extra = {"mixture": {"pi_n": pi, "g_n": f_n}}
    return _result_from_laws("1ZD+2ZU", o, law0, f_c1, {"pi_n": pi}, extra)


def _joint_law_mix(o, rec, tol, label):
    """Shared mixture solve on the joint (Y, R^Y=1) scale for mechanisms
    whose outcome response does not depend on (Z, R^D)."""
    mn, mc = _rd1_masses_z1(o, rec)
    h_n = {y: o.dy11(1, 0, y) / mn for y in o.S}
    h_c1 = {y: o.dy11(1, 1, y) / mc for y in o.S}
    target = {y: o.dy11(1, 0, y) + o.dy11(1, 1, y) + o.yplus01(1, y) for y in o.S}
    pi = _mixture_pi(o, rec, tol, h_n, h_c1, target,
                     "mixture separation: laws of (Y, R^Y) differ "
                     "between never-takers and treated compliers")
    L0 = {y: o.dy11(0, 0, y) + o.yplus01(0, y) for y in o.S}
    h_c0 = {y: _clamp_cell((L0[y] - pi * h_n[y]) / (1 - pi), o.exact,
                           "P(Y, R^Y=1 | c, 0)") for y in o.S}
    return pi, h_n, h_c0, h_c1


def _r_1ud_2zu(o, rec, tol):
    pi, h_n, h_c0, h_c1 = _joint_law_mix(o, rec, tol, "1UD+2ZU")
    law0, _ = _normalize(h_c0, rec, "P(R^Y=1 | c, 0)")
    law1, _ = _normalize(h_c1, rec, "P(R^Y=1 | c, 1)")
    extra = {"mixture": {"pi_n": pi, "h_n": h_n}}
    return _result_from_laws("1UD+2ZU", o, law0, law1, {"pi_n": pi}, extra)


def _r_1uy_2zu(o, rec, tol):
    pi, h_n, h_c0, h_c1 = _joint_law_mix(o, rec, tol, "1UY+2ZU")
    for y in o.S:
        rec.positivity(f"P(Y={y}, R^Y=1 | c, d) (needs P(R^Y=1|c,{y}) > 0)",
                       h_c1[y] if h_c1[y] < h_c0[y] else h_c0[y])
    ratios = {y: h_c0[y] / h_c1[y] for y in o.S}
    return _binary_ratio_result("1UY+2ZU", o, ratios,
                                {"ratios": ratios, "pi_n": pi}, rec)


# -- recipe family: R^D depends on Z only, R^D a parent of R^Y -------------

def _rdz(o, rec):
    out = {}
    for z in (0, 1):
        out[z] = o.P_RD1(z)
        rec.positivity(f"P(R^D=1 | Z={z})", out[z])
    return out


def _r_1zd_o2z(o, rec, tol):
    rdz = _rdz(o, rec)
    table = {}
    for z, d in o.zd_pairs():
        ry = o.ry_rd1(z, d, rec)
        for y in o.S:
            table[(z, d, y)] = o.dy11(z, d, y) / (rdz[z] * ry)
    return _result_from_table("1ZD(+)2Z", o, table, {"rd": rdz})


def _r_1ud_o2z(o, rec, tol):
    rdz = _rdz(o, rec)
    rho0 = rdz[0] / rdz[1]
    rho1 = 1 if o.one_sided else rdz[1] / rdz[0]
    c0, c1 = _strip_both(o, rho0, rho1)
    law0, _ = _normalize(c0, rec, "complier complete cells at d=0 "
                                  "(needs P(R^Y=1|c,0,R^D=1) > 0)")
    law1, _ = _normalize(c1, rec, "complier complete cells at d=1 "
                                  "(needs P(R^Y=1|c,1,R^D=1) > 0)")
    return _result_from_laws("1UD(+)2Z", o, law0, law1, {"rd": rdz})


def _r_1uy_o2z(o, rec, tol):
    rdz = _rdz(o, rec)
    rho0 = rdz[0] / rdz[1]
    rho1 = 1 if o.one_sided else rdz[1] / rdz[0]
    c0, c1 = _strip_both(o, rho0, rho1)
    for y in o.S:
        rec.positivity(f"complier complete cell at Y={y} "
                       f"(needs P(R^Y=1|c,{y},R^D=1) > 0)",
                       c1[y] if c1[y] < c0[y] else c0[y])
    ratios = {y: (c0[y] / c1[y]) * (rdz[1] / rdz[0]) for y in o.S}
    return _binary_ratio_result("1UY(+)2Z", o, ratios, {"ratios": ratios}, rec)


def _r_1dy_o2z(o, rec, tol):
    rdz = _rdz(o, rec)
    etas = {}
    for d in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for z in (0, 1)]
        b = [o.d1plus0(z, d) for z in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of Z given D={d}, R^D=1")
        etas[d] = dict(zip(o.S, eta))
    table = {(z, d, y): o.dy11(z, d, y) * (1 + etas[d][y]) / rdz[z]
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1DY(+)2Z", o, table, {"rd": rdz, "ry_odds": etas})


def _r_1zy_o2z(o, rec, tol):
    rdz = _rdz(o, rec)
    etas = {}
    for z in (0, 1):
        A = [[o.dy11(z, d, y) for y in o.S] for d in (0, 1)]
        b = [o.d1plus0(z, d) for d in (0, 1)]
        eta = solve_linear_odds(A, b, tol.det, rec,
                                f"Y not independent of D given Z={z}, R^D=1")
        etas[z] = dict(zip(o.S, eta))
    table = {(z, d, y): o.dy11(z, d, y) * (1 + etas[z][y]) / rdz[z]
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1ZY(+)2Z", o, table, {"rd": rdz, "ry_odds": etas})


# -- recipe family: coarse R^Y parents with a rich R^D ---------------------

def _ry_by_rdstate(o, rec, z):
    """P(R^Y=1 | Z=z, R^D=r) for r = 1, 0 (observable conditioning sets)."""
    rd1 = o.P_RD1(z)
    rd0 = o.P_RD0(z)
    ry1 = _div(sum(o.dy11(z, d, y) for d in (0, 1) for y in o.S), rd1,
               f"P(R^Y=1|Z={z},R^D=1)")
    ry0 = _div(sum(o.yplus01(z, y) for y in o.S), rd0,
               f"P(R^Y=1|Z={z},R^D=0)")
    rec.positivity(f"P(R^Y=1 | Z={z}, R^D=1)", ry1)
    rec.positivity(f"P(R^Y=1 | Z={z}, R^D=0)", ry0)
    return ry1, ry0


def _zeta_from_scaled(o, rec, tol, scale_row, dep_name):
    """Treatment-missingness odds by (z, d) from y-rows whose right-hand
    side is rescaled to the complete-R^Y basis by ``scale_row(z, y)``."""
    zetas = {}
    for z in (0, 1):
        if o.one_sided and z == 0:
            num = sum(o.yplus01(0, y) * scale_row(0, y) for y in o.S)
            zetas[(0, 0)] = _div(num, sum(o.dy11(0, 0, y) for y in o.S), "zeta_0(0)")
            continue
        A = [[o.dy11(z, 0, y), o.dy11(z, 1, y)] for y in o.S]
        b = [o.yplus01(z, y) * scale_row(z, y) for y in o.S]
        x = solve_linear_odds(A, b, tol.det, rec, dep_name.format(z=z))
        zetas[(z, 0)], zetas[(z, 1)] = x
    return zetas


def _r_1z_o2zd(o, rec, tol):
    ry = {z: _ry_by_rdstate(o, rec, z) for z in (0, 1)}
    for z, d in o.zd_pairs():
        rec.positivity(f"P(D={d}, R^D=1 | Z={z}) (needs P(R^D=1|{z},{d}) > 0)",
                       o.PD_RD1(z, d))
    zetas = _zeta_from_scaled(o, rec, tol, lambda z, y: ry[z][0] / ry[z][1],
                              "Y not independent of D given Z={z}")
    table = {(z, d, y): o.dy11(z, d, y) / (_odds_to_prob(zetas[(z, d)]) * ry[z][0])
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1Z(+)2ZD", o, table, {"rd_odds": zetas, "ry": ry})


def _pooled_ry_d(o, rec, d, name):
    """P(R^Y=1 | D=d, R^D=1), pooled across instrument arms."""
    pz = {1: o.obs.p_z, 0: 1 - o.obs.p_z}
    num = sum(pz[z] * sum(o.dy11(z, d, y) for y in o.S) for z in (0, 1))
    den = sum(pz[z] * o.PD_RD1(z, d) for z in (0, 1))
    val = 0 if den == 0 else num / den
    rec.positivity(name, val)
    return val


def _r_1d_o2zd(o, rec, tol):
    for z, d in o.zd_pairs():
        rec.positivity(f"P(D={d}, R^D=1 | Z={z}) (needs P(R^D=1|{z},{d}) > 0)",
                       o.PD_RD1(z, d))
    ryd1 = {d: _pooled_ry_d(o, rec, d, f"P(R^Y=1 | D={d}, R^D=1)") for d in (0, 1)}
    # first pass: w_z(d) = zeta_z(d) * P(R^Y=1|d,R^D=0) / P(R^Y=1|d,R^D=1)
    w = {}
    for z in (0, 1):
        if o.one_sided and z == 0:
            w[(0, 0)] = _div(sum(o.yplus01(0, y) for y in o.S),
                             sum(o.dy11(0, 0, y) for y in o.S), "w_0(0)")
            continue
        A = [[o.dy11(z, 0, y), o.dy11(z, 1, y)] for y in o.S]
        b = [o.yplus01(z, y) for y in o.S]
        x = solve_linear_odds(A, b, tol.det, rec,
                              f"Y not independent of D given Z={z}")
        w[(z, 0)], w[(z, 1)] = x
    # second pass: recover 1 / P(R^Y=1|d,R^D=0) from the R^D=0 arm masses
    if o.one_sided:
        coef00 = w[(0, 0)] * ryd1[0] * o.PD_RD1(0, 0)
        v0 = _div(o.P_RD0(0), coef00, "P(R^Y=1|D=0,R^D=0)")
        coef10 = w[(1, 0)] * ryd1[0] * o.PD_RD1(1, 0)
        coef11 = w[(1, 1)] * ryd1[1] * o.PD_RD1(1, 1)
        v1 = _div(o.P_RD0(1) - coef10 * v0, coef11, "P(R^Y=1|D=1,R^D=0)")
        if v1 < 0:
            raise InconsistentObservables("negative response reciprocal")
        v = {0: v0, 1: v1}
    else:
        A = [[w[(z, 0)] * ryd1[0] * o.PD_RD1(z, 0),
              w[(z, 1)] * ryd1[1] * o.PD_RD1(z, 1)] for z in (0, 1)]
        b = [o.P_RD0(z) for z in (0, 1)]
        x = solve_linear_odds(A, b, tol.det, rec, "D not independent of Z")
        v = {0: x[0], 1: x[1]}
    for d in (0, 1):
        rec.positivity(f"P(R^Y=1 | D={d}, R^D=0)",
                       0 if v[d] == 0 else 1 / v[d])
    zetas = {(z, d): w[(z, d)] * ryd1[d] * v[d] for (z, d) in w}
    table = {(z, d, y): o.dy11(z, d, y) * (1 + zetas[(z, d)]) / ryd1[d]
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1D(+)2ZD", o, table, {"rd_odds": zetas, "ry": ryd1})


def _ry_by_y(o, rec, tol):
    """P(R^Y=1 | Y=y, R^D=r) for r = 1, 0 via stacked odds systems."""
    pairs = o.zd_pairs()
    A = [[o.dy11(z, d, y) for y in o.S] for z, d in pairs]
    b = [o.d1plus0(z, d) for z, d in pairs]
    eta = solve_linear_odds(A, b, tol.det, rec,
                            "Y not independent of (Z, D) given R^D=1")
    eta = dict(zip(o.S, eta))
    A0 = [[o.yplus01(z, y) for y in o.S] for z in (0, 1)]
    b0 = [o.pp0(z) for z in (0, 1)]
    xi = solve_linear_odds(A0, b0, tol.det, rec,
                           "Y not independent of Z given R^D=0")
    xi = dict(zip(o.S, xi))
    ryd1 = {y: _odds_to_prob(eta[y]) for y in o.S}
    ryd0 = {y: _odds_to_prob(xi[y]) for y in o.S}
    return ryd1, ryd0


def _r_1y_o2zd(o, rec, tol):
    for z, d in o.zd_pairs():
        rec.positivity(f"P(D={d}, R^D=1 | Z={z}) (needs P(R^D=1|{z},{d}) > 0)",
                       o.PD_RD1(z, d))
    ryd1, ryd0 = _ry_by_y(o, rec, tol)
    zetas = _zeta_from_scaled(o, rec, tol, lambda z, y: ryd1[y] / ryd0[y],
                              "Y not independent of D given Z={z}")
    table = {(z, d, y): o.dy11(z, d, y) * (1 + zetas[(z, d)]) / ryd1[y]
             for z, d in o.zd_pairs() for y in o.S}
    return _result_from_table("1Y(+)2ZD", o, table,
                              {"rd_odds": zetas, "ry_by_y": (ryd1, ryd0)})


def _r_1z_o2zu(o, rec, tol):
    _rd1_masses_z1(o, rec)
    f_n, _ = _normalize({y: o.dy11(1, 0, y) for y in o.S}, rec,
                        "complete never-taker cells at Z=1")
    f_c1, _ = _normalize({y: o.dy11(1, 1, y) for y in o.S}, rec,
                         "complete complier cells at Z=1")
    ry = {z: _ry_by_rdstate(o, rec, z) for z in (0, 1)}
    PY = {}
    for z in (0, 1):
        PY[z] = {y: o.yplus01(z, y) / ry[z][1]
                 + (o.dy11(z, 0, y) + o.dy11(z, 1, y)) / ry[z][0] for y in o.S}
    pi = _mixture_pi(o, rec, tol, f_n, f_c1, PY[1],
                     "mixture separation: P(Y|n,0) differs from P(Y|c,1)")
    law0 = {y: _clamp_cell((PY[0][y] - pi * f_n[y]) / (1 - pi), o.exact, "P(Y|c,0)")
            for y in o.S}
    extra = {"mixture": {"pi_n": pi, "g_n": f_n}}
    return _result_from_laws("1Z(+)2ZU", o, law0, f_c1, {"pi_n": pi}, extra)


def _r_1u_o2zu(o, rec, tol):
    rec.positivity("P(U=n, D=0, R^D=1 | Z=1) (needs P(R^D=1|Z=1,n) > 0)",
                   o.PD_RD1(1, 0))
    rec.positivity("P(U=c, D=1, R^D=1 | Z=1) (needs P(R^D=1|Z=1,c) > 0)",
                   o.PD_RD1(1, 1))
    f_c1, _ = _normalize({y: o.dy11(1, 1, y) for y in o.S}, rec,
                         "complete complier cells at Z=1")
    # ratios of R^D propensities between arms, by stratum
    A = [[sum(o.dy11(1, 0, y) for y in o.S), sum(o.dy11(1, 1, y) for y in o.S)],
         [o.d1plus0(1, 0), o.d1plus0(1, 1)]]
    b = [sum(o.dy11(0, 0, y) for y in o.S), o.d1plus0(0, 0)]
    x = solve_linear_odds(A, b, tol.det, rec,
                          "R^Y not independent of U given R^D=1")
    zeta_n, zeta_c = x
    c0 = strip_stratum([o.dy11(0, 0, y) for y in o.S],
                       [o.dy11(1, 0, y) for y in o.S], zeta_n)
    law0, _ = _normalize(dict(zip(o.S, c0)), rec,
                         "complier complete cells at Z=0 "
                         "(needs P(R^Y=1|c,R^D=1) and P(R^D=1|Z=0,c) > 0)")
    return _result_from_laws("1U(+)2ZU", o, law0, f_c1,
                             {"arm_ratio": {"n": zeta_n, "c": zeta_c}})


def _r_1d_o2zu(o, rec, tol):
    mn, mc = _rd1_masses_z1(o, rec)
    ryd1_0 = _pooled_ry_d(o, rec, 0, "P(R^Y=1 | D=0, R^D=1)")
    ryd1_1 = _pooled_ry_d(o, rec, 1, "P(R^Y=1 | D=1, R^D=1)")
    f_n = {y: o.dy11(1, 0, y) / (mn * ryd1_0) for y in o.S}
    f_c1 = {y: o.dy11(1, 1, y) / (mc * ryd1_1) for y in o.S}
    # w_d = [missingness odds of R^D at Z=1 for the d-stratum] x response ratio
    A = [[o.dy11(1, 0, y), o.dy11(1, 1, y)] for y in o.S]
    b = [o.yplus01(1, y) for y in o.S]
    x = solve_linear_odds(A, b, tol.det, rec, "Y not independent of U given Z=1")
    w0, w1 = x
    ry00 = _div(sum(o.yplus01(0, y) for y in o.S), o.P_RD0(0),
                "P(R^Y=1|D=0,R^D=0)")
    rec.positivity("P(R^Y=1 | D=0, R^D=0)", ry00)
    eta_n = w0 * ryd1_0 / ry00
    pi_n = o.PD_RD1(1, 0) * (1 + eta_n)
    if not 0 < pi_n < 1:
        raise InconsistentObservables(
            f"never-taker share {float(pi_n):g} outside (0, 1)")
    PY0 = {y: o.yplus01(0, y) / ry00 + o.dy11(0, 0, y) / ryd1_0 for y in o.S}
    law0 = {y: _clamp_cell((PY0[y] - pi_n * f_n[y]) / (1 - pi_n), o.exact,
                           "P(Y|c,0)") for y in o.S}
    extra = {"mixture": {"pi_n": pi_n, "g_n": f_n}}
    return _result_from_laws("1D(+)2ZU", o, law0, f_c1,
                             {"pi_n": pi_n, "w": (w0, w1)}, extra)


def _r_1y_o2zu(o, rec, tol):
    _rd1_masses_z1(o, rec)
    ryd1, ryd0 = _ry_by_y(o, rec, tol)
    f_n, _ = _normalize({y: o.dy11(1, 0, y) / ryd1[y] for y in o.S}, rec,
                        "never-taker mass at Z=1")
    f_c1, _ = _normalize({y: o.dy11(1, 1, y) / ryd1[y] for y in o.S}, rec,
                         "treated complier mass at Z=1")
    PY = {}
    for z in (0, 1):
        PY[z] = {y: o.yplus01(z, y) / ryd0[y]
                 + (o.dy11(z, 0, y) + o.dy11(z, 1, y)) / ryd1[y] for y in o.S}
    pi = _mixture_pi(o, rec, tol, f_n, f_c1, PY[1],
                     "mixture separation: P(Y|n,0) differs from P(Y|c,1)")
    law0 = {y: _clamp_cell((PY[0][y] - pi * f_n[y]) / (1 - pi), o.exact, "P(Y|c,0)")
            for y in o.S}
    extra = {"mixture": {"pi_n": pi, "g_n": f_n}}
    return _result_from_laws("1Y(+)2ZU", o, law0, f_c1,
                             {"pi_n": pi, "ry_by_y": (ryd1, ryd0)}, extra)


_DISPATCH = {
    "MCAR-Y": _r_mcar_y,
    "1ZD": _r_1zd,
    "1UD": _r_1ud,
    "1DY": _r_1dy,
    "1ZY": _r_1zy,
    "1UY": _r_1uy,
    "1Y": _r_1y,
    "MCAR-D": _r_mcar_d,
    "2ZY": _r_2zy,
    "2UY": _r_2uy,
    "2DY": _r_2dy,
    "2UD": _r_2ud,
    "2ZD": _r_2zd,
    "2ZU": _r_2zu,
    "1ZD(+)2UD": _r_1zd_o2ud,
    "1UD(+)2UD": _r_1ud_o2ud,
    "1DY(+)2UD": _r_1dy_o2ud,
    "1ZY(+)2UD": _r_1zy_o2ud,
    "1UY(+)2UD": _r_1uy_o2ud,
    "1ZD+2ZD": _r_1zd_2zd,
    "1UD+2ZD": _r_1ud_2zd,
    "1DY+2ZD": _r_1dy_2zd,
    "1ZY+2ZD": _r_1zy_2zd,
    "1UY+2ZD": _r_1uy_2zd,
    "1ZD+2ZU": _r_1zd_2zu,
    "1UD+2ZU": _r_1ud_2zu,
    "1UY+2ZU": _r_1uy_2zu,
    "1ZD(+)2Z": _r_1zd_o2z,
    "1UD(+)2Z": _r_1ud_o2z,
    "1UY(+)2Z": _r_1uy_o2z,
    "1DY(+)2Z": _r_1dy_o2z,
    "1ZY(+)2Z": _r_1zy_o2z,
    "1Z(+)2ZD": _r_1z_o2zd,
    "1D(+)2ZD": _r_1d_o2zd,
    "1Y(+)2ZD": _r_1y_o2zd,
    "1Z(+)2ZU": _r_1z_o2zu,
    "1U(+)2ZU": _r_1u_o2zu,
    "1D(+)2ZU": _r_1d_o2zu,
    "1Y(+)2ZU": _r_1y_o2zu,
}


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def wald_cace(obs: ObservableDistribution):
    """Instrumental-variable (Wald) estimand from complete data."""
    if obs.regime != Regime.COMPLETE:
        raise RegimeMismatch("wald_cace needs complete data")
    ey = {}
    pd1 = {}
    for z in (0, 1):
        ey[z] = sum(y * obs.get("dy", z, d, y) for d in (0, 1) for y in obs.y_support)
        pd1[z] = sum(obs.get("dy", z, 1, y) for y in obs.y_support)
    fs = pd1[1] - pd1[0]
    if fs == 0:
        raise ZeroFirstStage("P(D=1|Z=1) = P(D=1|Z=0)")
    return (ey[1] - ey[0]) / fs


def _gate(entry, obs):
    spec = entry.spec
    if not spec.identifiable:
        raise MechanismNotIdentifiable(
            f"mechanism {spec.id} is not identifiable"
            + (f" (counterexample {entry.fixture_id})" if entry.fixture_id else ""))
    if spec.regime != obs.regime:
        raise RegimeMismatch(
            f"mechanism {spec.id} expects {spec.regime} data, got {obs.regime}")
    if spec.sidedness == Sidedness.ONE_SIDED_ONLY and not obs.one_sided:
        raise SidednessMismatch(
            f"mechanism {spec.id} applies only under one-sided noncompliance")
    if spec.sidedness == Sidedness.TWO_SIDED_ONLY and obs.one_sided:
        raise SidednessMismatch(
            f"mechanism {spec.id} requires two-sided noncompliance")
    if spec.binary_y_required and len(obs.y_support) != 2:
        raise ValidationFailed(f"mechanism {spec.id} requires a binary outcome")


def _run(mechanism, obs, tol, strict=True):
    entry = lookup(mechanism)
    _gate(entry, obs)
    rec = Recorder(tol, exact=obs.arithmetic == "exact", strict=strict)
    result, ctx = _DISPATCH[entry.spec.id](_View(obs), rec, tol)
    result.diagnostics = rec.checks
    return result, ctx, rec


def identify(mechanism: str, obs: ObservableDistribution,
             tol: Tolerances = Tolerances()) -> IdentificationResult:
    """Identify the complier effect under the stated mechanism.

    Raises a subclass of :class:`IdentificationError` when the mechanism is
    unknown, not identifiable, mismatched to the data, or when one of its
    applicability conditions fails on this observable law.
    """
    result, _, _ = _run(mechanism, obs, tol)
    return result


def check_conditions(mechanism: str, obs: ObservableDistribution,
                     tol: Tolerances = Tolerances()) -> ConditionReport:
    """Evaluate the mechanism's applicability conditions without failing."""
    report = ConditionReport(mechanism=mechanism)
    try:
        entry = lookup(mechanism)
    except IdentificationError as exc:
        report.error = str(exc)
        return report
    rec = Recorder(tol, exact=obs.arithmetic == "exact", strict=False)
    try:
        _gate(entry, obs)
        _DISPATCH[entry.spec.id](_View(obs), rec, tol)
    except (PositivityViolated, DependenceViolated):
        pass  # verdict already recorded
    except IdentificationError as exc:
        report.error = str(exc)
    report.checks = rec.checks
    return report


# ---------------------------------------------------------------------------
# joint recovery
# ---------------------------------------------------------------------------

def _joint_from_strata(obs, S, never, always, c0, c1, exact):
    pz = {1: obs.p_z, 0: 1 - obs.p_z}
    joint = {}
    for z in (0, 1):
        for y in S:
            if never[y]:
                joint[(z, NEVER_TAKER, 0, y)] = pz[z] * never[y]
            if always[y]:
                joint[(z, ALWAYS_TAKER, 1, y)] = pz[z] * always[y]
            mass = c1[y] if z == 1 else c0[y]
            if mass:
                joint[(z, COMPLIER, z, y)] = pz[z] * mass
    return joint


def recover_joint(mechanism: str, obs: ObservableDistribution,
                  tol: Tolerances = Tolerances()) -> dict:
    """Recover the joint law of (Z, U, D, Y) when the mechanism allows it.

    Returns a dict keyed by ``(z, u, d, y)``.  Raises :class:`NotRecoverable`
    when only the complier effect (and not the joint law) is identified,
    and propagates identification errors otherwise.
    """
    entry = lookup(mechanism)
    verdict = entry.spec.joint_recoverable
    result, ctx, rec = _run(mechanism, obs, tol)
    o = _View(obs)
    exact = o.exact
    mech = entry.spec.id

    if "table" in ctx:
        never, always, c0, c1 = _strata_from_table(
            ctx["table"], o.S, o.one_sided, exact, clamp=True)
        return _joint_from_strata(obs, o.S, never, always, c0, c1, exact)

    if mech == "2ZU":
        pi = result.nuisance["pi_n"]
        g_n = ctx["mixture"]["g_n"]
        law0, law1 = ctx["laws"]
        never = {y: pi * g_n[y] for y in o.S}
        always = {y: 0 for y in o.S}
        c0 = {y: (1 - pi) * law0[y] for y in o.S}
        c1 = {y: (1 - pi) * law1[y] for y in o.S}
        return _joint_from_strata(obs, o.S, never, always, c0, c1, exact)

    if mech == "1UD":
        never_cc, always_cc, c0_cc, c1_cc = ctx["strata_cc"]
        # joint recovery needs response positivity within every stratum
        ry = {}
        pairs = [(NEVER_TAKER, 0), (COMPLIER, 0), (COMPLIER, 1)]
        if not o.one_sided:
            pairs.append((ALWAYS_TAKER, 1))
        masses = {
            (NEVER_TAKER, 0): (sum(never_cc), o.PD(1, 0)),
            (ALWAYS_TAKER, 1): (sum(always_cc), o.PD(0, 1)),
            (COMPLIER, 0): (sum(c0_cc.values()), o.PD(0, 0) - o.PD(1, 0)),
            (COMPLIER, 1): (sum(c1_cc.values()),
                            o.PD(1, 1) - (0 if o.one_sided else o.PD(0, 1))),
        }
        for u, d in pairs:
            num, den = masses[(u, d)]
            if den <= 0 or num <= 0:
                raise NotRecoverable(
                    f"joint law needs P(R^Y=1|{u},{d}) > 0 and a positive "
                    f"stratum mass; got mass {float(den):g}")
            ry[(u, d)] = num / den
        never = {y: v / ry[(NEVER_TAKER, 0)] for y, v in zip(o.S, never_cc)}
        always = {y: (v / ry[(ALWAYS_TAKER, 1)] if not o.one_sided else 0)
                  for y, v in zip(o.S, always_cc)}
        c0 = {y: c0_cc[y] / ry[(COMPLIER, 0)] for y in o.S}
        c1 = {y: c1_cc[y] / ry[(COMPLIER, 1)] for y in o.S}
        return _joint_from_strata(obs, o.S, never, always, c0, c1, exact)

    if mech == "2UD":
        never_cc, always_cc, c0_cc, c1_cc = ctx["strata_cc"]
        never_cc = dict(zip(o.S, never_cc))
        always_cc = dict(zip(o.S, always_cc))
        # odds of R^D by stratum from the incomplete-treatment masses
        cols = [(NEVER_TAKER, 0), (COMPLIER, 0), (COMPLIER, 1)]
        if not o.one_sided:
            cols.append((ALWAYS_TAKER, 1))
        cols_cells = {
            (NEVER_TAKER, 0): {0: never_cc, 1: never_cc},
            (ALWAYS_TAKER, 1): {0: always_cc, 1: always_cc},
            (COMPLIER, 0): {0: c0_cc, 1: {y: 0 for y in o.S}},
            (COMPLIER, 1): {0: {y: 0 for y in o.S}, 1: c1_cc},
        }
        A = []
        b = []
        for z in (0, 1):
            for y in o.S:
                A.append([cols_cells[c][z][y] for c in cols])
                b.append(o.yplus0(z, y))
        try:
            x = solve_linear_odds(A, b, tol.det)
        except IdentificationError as exc:
            raise NotRecoverable(f"stratum response odds not solvable: {exc}")
        zeta = dict(zip(cols, x))
        never = {y: never_cc[y] * (1 + zeta[(NEVER_TAKER, 0)]) for y in o.S}
        always = {y: (always_cc[y] * (1 + zeta[(ALWAYS_TAKER, 1)])
                      if not o.one_sided else 0) for y in o.S}
        c0 = {y: c0_cc[y] * (1 + zeta[(COMPLIER, 0)]) for y in o.S}
        c1 = {y: c1_cc[y] * (1 + zeta[(COMPLIER, 1)]) for y in o.S}
        return _joint_from_strata(obs, o.S, never, always, c0, c1, exact)

    if mech == "2UY":
        if not o.one_sided:
            raise NotRecoverable(
                "joint law under 2UY is recoverable only with one-sided "
                "noncompliance")
        never_cc, _, c0_cc, c1_cc = ctx["strata_cc"]
        never_cc = dict(zip(o.S, never_cc))
        never, c0, c1 = {}, {}, {}
        for y in o.S:
            A = [[never_cc[y], c0_cc[y]], [never_cc[y], c1_cc[y]]]
            b = [o.yplus0(0, y), o.yplus0(1, y)]
            try:
                zn, zc = solve_linear_odds(A, b, tol.det)
            except IdentificationError as exc:
                raise NotRecoverable(
                    f"stratum response odds not solvable at Y={y}: {exc}")
            never[y] = never_cc[y] * (1 + zn)
            c0[y] = c0_cc[y] * (1 + zc)
            c1[y] = c1_cc[y] * (1 + zc)
        always = {y: 0 for y in o.S}
        return _joint_from_strata(obs, o.S, never, always, c0, c1, exact)

    if verdict == "No":
        raise NotRecoverable(
            f"joint law is not identified under mechanism {mech}")
    raise NotRecoverable(
        f"joint recovery under mechanism {mech} is not established")
