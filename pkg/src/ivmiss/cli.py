"""Batch interface: simulation, plug-in identification, sensitivity reports.

CSV layout is ``z,d,y`` with an empty field marking a missing value.  The
report format is a machine-parseable key/value tree followed by an aligned
table; field names are part of the interface.
"""

from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, field

import click

from .catalog import all_entries, lookup
from .config import load_config
from .engine import Tolerances, check_conditions, identify, wald_cace
from .forward import forward_observable, sample_dataset
from .model import (
    Dataset,
    DependenceViolated,
    EmptyArm,
    IdentificationError,
    MalformedRow,
    MechanismNotIdentifiable,
    MissingInstrument,
    ObservableDistribution,
    PositivityViolated,
    Regime,
    RegimeMismatch,
    SidednessMismatch,
    UnknownMechanism,
    UnknownOutcomeValue,
    ValidationFailed,
)
from .oracle import builtin_fixtures, verify_fixture

#: exit codes for `identify`
EXIT_IDENTIFIED = 0
EXIT_REFUSED = 2          # mechanism not identifiable / regime / sidedness
EXIT_CONDITION_FAILED = 3  # positivity, dependence or data consistency

_REFUSALS = (UnknownMechanism, MechanismNotIdentifiable, RegimeMismatch,
             SidednessMismatch)


# ---------------------------------------------------------------------------
# dataset I/O
# ---------------------------------------------------------------------------

def parse_dataset(path) -> Dataset:
    """Read a ``z,d,y`` CSV; empty fields are missing values.

    The regime is inferred from which columns contain any missing value.
    """
    records = []
    d_missing = y_missing = False
    ys = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["z", "d", "y"]:
            raise MalformedRow(f"line 1: header must be exactly 'z,d,y', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise MalformedRow(f"line {lineno}: expected 3 fields, got {len(row)}")
            ztok, dtok, ytok = (t.strip() for t in row)
            if not ztok:
                raise MissingInstrument(f"line {lineno}: instrument value missing")
            if ztok not in ("0", "1"):
                raise MalformedRow(f"line {lineno}: z must be 0 or 1, got {ztok!r}")
            z = int(ztok)
            if dtok == "":
                d = None
                d_missing = True
            elif dtok in ("0", "1"):
                d = int(dtok)
            else:
                raise MalformedRow(f"line {lineno}: d must be 0, 1 or empty, got {dtok!r}")
            if ytok == "":
                y = None
                y_missing = True
            else:
                try:
                    y = int(ytok) if float(ytok) == int(float(ytok)) else float(ytok)
                except ValueError:
                    raise UnknownOutcomeValue(
                        f"line {lineno}: cannot parse outcome {ytok!r}")
                ys.add(y)
            records.append((z, d, y))
    if d_missing and y_missing:
        regime = Regime.BOTH
    elif y_missing:
        regime = Regime.OUTCOME_ONLY
    elif d_missing:
        regime = Regime.TREATMENT_ONLY
    else:
        regime = Regime.COMPLETE
    return Dataset(records=records, regime=regime, y_support=tuple(sorted(ys)))


def write_dataset(ds: Dataset, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["z", "d", "y"])
    for z, d, y in ds.records:
        writer.writerow([z, "" if d is None else d, "" if y is None else y])


def _cell_key(regime, z, d, y):
    if regime == Regime.COMPLETE:
        return ("dy", z, d, y)
    if regime == Regime.OUTCOME_ONLY:
        return ("dy1", z, d, y) if y is not None else ("d+0", z, d)
    if regime == Regime.TREATMENT_ONLY:
        return ("dy1", z, d, y) if d is not None else ("y+0", z, y)
    if d is not None and y is not None:
        return ("dy11", z, d, y)
    if d is None and y is not None:
        return ("y+01", z, y)
    if d is not None:
        return ("d1+0", z, d)
    return ("+0+0", z)


def _all_cells(regime, y_support, one_sided):
    pairs = ((0, 0), (1, 0), (1, 1)) if one_sided else \
        ((0, 0), (0, 1), (1, 0), (1, 1))
    cells = []
    if regime == Regime.COMPLETE:
        return [("dy", z, d, y) for z, d in pairs for y in y_support]
    if regime == Regime.OUTCOME_ONLY:
        cells += [("dy1", z, d, y) for z, d in pairs for y in y_support]
        cells += [("d+0", z, d) for z, d in pairs]
    elif regime == Regime.TREATMENT_ONLY:
        cells += [("dy1", z, d, y) for z, d in pairs for y in y_support]
        cells += [("y+0", z, y) for z in (0, 1) for y in y_support]
    else:
        cells += [("dy11", z, d, y) for z, d in pairs for y in y_support]
        cells += [("y+01", z, y) for z in (0, 1) for y in y_support]
        cells += [("d1+0", z, d) for z, d in pairs]
        cells += [("+0+0", z) for z in (0, 1)]
    return cells


def empirical_observable(ds: Dataset, one_sided: bool = False,
                         smooth: float = 0.0) -> ObservableDistribution:
    """Plug-in cell frequencies, conditional on the instrument arm.

    ``smooth`` adds a pseudo-count per possible cell (0 disables smoothing
    so positivity failures stay visible).  Declaring ``one_sided`` requires
    the (z=0, d=1) arm to be empty.
    """
    counts = {}
    arm_n = {0: 0, 1: 0}
    for z, d, y in ds.records:
        key = _cell_key(ds.regime, z, d, y)
        counts[key] = counts.get(key, 0) + 1
        arm_n[z] += 1
    for z in (0, 1):
        if arm_n[z] == 0:
            raise EmptyArm(z)
    y_support = ds.y_support or tuple(
        sorted({y for _, _, y in ds.records if y is not None}))
    if one_sided:
        bad = sum(v for k, v in counts.items()
                  if len(k) >= 3 and k[1] == 0 and k[2] == 1 and k[0] != "y+0"
                  and k[0] != "y+01" and k[0] != "+0+0")
        if bad > 1e-12 * arm_n[0]:
            raise ValidationFailed(
                f"--one-sided declared but {bad} records have (Z=0, D=1)")
    cells = {}
    lattice = _all_cells(ds.regime, y_support, one_sided)
    denom = {z: arm_n[z] + smooth * sum(1 for k in lattice if k[1] == z)
             for z in (0, 1)}
    for key in set(lattice) | set(counts):
        z = key[1]
        mass = counts.get(key, 0) + (smooth if key in lattice else 0)
        if mass:
            cells[key] = mass / denom[z]
    return ObservableDistribution(
        regime=ds.regime,
        p_z=arm_n[1] / (arm_n[0] + arm_n[1]),
        y_support=y_support,
        cells=cells,
        one_sided=one_sided,
        arithmetic="float",
    )


# ---------------------------------------------------------------------------
# sensitivity
# ---------------------------------------------------------------------------

@dataclass
class SensitivityEntry:
    mechanism: str
    applicable: bool
    reason: str = ""
    cace: object = None
    complier_means: object = None
    checks: list = field(default_factory=list)


@dataclass
class SensitivityReport:
    entries: list
    n: object = None
    missing_rate_d: object = None
    missing_rate_y: object = None
    one_sided: bool = False


def _coerce_regime(obs: ObservableDistribution, regime: str):
    """Complete data is a degenerate case of every missingness regime."""
    if obs.regime == regime:
        return obs
    if obs.regime != Regime.COMPLETE:
        return obs
    cells = {}
    for (tag, z, d, y), v in obs.cells.items():
        if regime == Regime.BOTH:
            cells[("dy11", z, d, y)] = v
        else:
            cells[("dy1", z, d, y)] = v
    return ObservableDistribution(
        regime=regime, p_z=obs.p_z, y_support=obs.y_support, cells=cells,
        one_sided=obs.one_sided, arithmetic=obs.arithmetic)


def run_sensitivity(data, mechanisms, tol: Tolerances = Tolerances(),
                    one_sided: bool = False, smooth: float = 0.0) -> SensitivityReport:
    """Identify the complier effect under each requested mechanism.

    ``data`` is a :class:`Dataset` or an :class:`ObservableDistribution`.
    Errors never abort the batch: each entry is either a result or a
    reasoned refusal.
    """
    if isinstance(data, Dataset):
        n = len(data.records)
        md = sum(1 for _, d, _ in data.records if d is None)
        my = sum(1 for _, _, y in data.records if y is None)
        obs = empirical_observable(data, one_sided=one_sided, smooth=smooth)
        summary = dict(n=n, missing_rate_d=md / n if n else 0,
                       missing_rate_y=my / n if n else 0)
    else:
        obs = data
        summary = dict(n=None, missing_rate_d=None, missing_rate_y=None)

    entries = []
    for label in mechanisms:
        try:
            entry = lookup(label)
        except UnknownMechanism as exc:
            entries.append(SensitivityEntry(label, False, reason=str(exc)))
            continue
        if not entry.spec.identifiable:
            where = f" ({entry.fixture_id.split('-')[0]})" if entry.fixture_id else ""
            entries.append(SensitivityEntry(
                label, False, reason=f"not identifiable{where}"))
            continue
        mech_obs = _coerce_regime(obs, entry.spec.regime)
        try:
            result = identify(label, mech_obs, tol)
        except IdentificationError as exc:
            report = None
            if not isinstance(exc, _REFUSALS):
                try:
                    report = check_conditions(label, mech_obs, tol)
                except IdentificationError:
                    report = None
            entries.append(SensitivityEntry(
                label, False, reason=str(exc),
                checks=report.checks if report else []))
            continue
        entries.append(SensitivityEntry(
            label, True,
            cace=result.cace,
            complier_means=result.complier_means,
            checks=result.diagnostics,
        ))
    return SensitivityReport(entries=entries, one_sided=one_sided, **summary)


def _fmt(x, full: bool = False) -> str:
    if x is None:
        return "-"
    try:
        return repr(float(x)) if full else f"{float(x):.6g}"
    except (TypeError, ValueError):
        return str(x)


def render_report(report: SensitivityReport) -> str:
    out = io.StringIO()
    w = out.write
    w("dataset.n = {}\n".format("-" if report.n is None else report.n))
    w(f"dataset.missing_rate_d = {_fmt(report.missing_rate_d)}\n")
    w(f"dataset.missing_rate_y = {_fmt(report.missing_rate_y)}\n")
    w(f"dataset.one_sided = {str(report.one_sided).lower()}\n")
    for e in report.entries:
        key = f"entry.{e.mechanism}"
        w(f"{key}.applicable = {str(e.applicable).lower()}\n")
        if e.applicable:
            w(f"{key}.cace = {_fmt(e.cace, full=True)}\n")
            if e.complier_means:
                w(f"{key}.mean_c0 = {_fmt(e.complier_means[0], full=True)}\n")
                w(f"{key}.mean_c1 = {_fmt(e.complier_means[1], full=True)}\n")
        else:
            w(f"{key}.reason = {e.reason}\n")
        for c in e.checks:
            w(f"{key}.check.{c.kind}[{c.name}] = "
              f"{_fmt(c.magnitude)} ({'pass' if c.passed else 'FAIL'})\n")
    w("\n")
    rows = [("mechanism", "applicable", "cace", "note")]
    for e in report.entries:
        rows.append((e.mechanism, "yes" if e.applicable else "no",
                     _fmt(e.cace) if e.applicable else "-",
                     "" if e.applicable else e.reason))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    for r in rows:
        w("  ".join(s.ljust(wd) for s, wd in zip(r, widths)).rstrip() + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# click commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Complier-effect identification with missing treatments/outcomes."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True), help="TOML model config.")
@click.option("--n", default=1000, show_default=True, help="Sample size.")
@click.option("--seed", default=None, type=int, help="RNG seed.")
@click.option("--out", "out_path", default="-", help="Output CSV ('-' = stdout).")
def simulate(config_path, n, seed, out_path):
    """Sample an observed-data CSV from a model config."""
    mechanism, params = load_config(config_path)
    ds = sample_dataset(params, lookup(mechanism).spec, n, seed=seed)
    if out_path == "-":
        write_dataset(ds, sys.stdout)
    else:
        with open(out_path, "w", newline="") as fh:
            write_dataset(ds, fh)


def _tol_options(fn):
    fn = click.option("--tol-det", default=1e-10, show_default=True,
                      help="Dependence / singularity threshold.")(fn)
    fn = click.option("--tol-prob", default=1e-12, show_default=True,
                      help="Positivity threshold.")(fn)
    return fn


@main.command(name="identify")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--mechanism", required=True, help="Mechanism label (e.g. 1UD).")
@click.option("--one-sided", is_flag=True, default=False)
@click.option("--smooth", is_flag=True, default=False,
              help="Add pseudo-count 0.5 per cell.")
@_tol_options
def identify_cmd(data_path, mechanism, one_sided, smooth, tol_det, tol_prob):
    """Plug-in identification of the complier effect from a CSV."""
    tol = Tolerances(det=tol_det, prob=tol_prob)
    try:
        ds = parse_dataset(data_path)
        obs = empirical_observable(ds, one_sided=one_sided,
                                   smooth=0.5 if smooth else 0.0)
        obs = _coerce_regime(obs, lookup(mechanism).spec.regime)
        result = identify(mechanism, obs, tol)
    except _REFUSALS as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_REFUSED)
    except IdentificationError as exc:
        click.echo(f"failed: {exc}", err=True)
        sys.exit(EXIT_CONDITION_FAILED)
    click.echo(f"mechanism = {result.mechanism}")
    click.echo(f"cace = {_fmt(result.cace, full=True)}")
    if result.complier_means:
        click.echo(f"mean_c0 = {_fmt(result.complier_means[0], full=True)}")
        click.echo(f"mean_c1 = {_fmt(result.complier_means[1], full=True)}")
    for c in result.diagnostics:
        click.echo(f"check.{c.kind}[{c.name}] = {_fmt(c.magnitude)} "
                   f"({'pass' if c.passed else 'FAIL'})")
    sys.exit(EXIT_IDENTIFIED)


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--mechanism", "mechanisms", multiple=True, required=True,
              help="Mechanism label; repeatable.")
@click.option("--one-sided", is_flag=True, default=False)
@click.option("--smooth", is_flag=True, default=False,
              help="Add pseudo-count 0.5 per cell.")
@_tol_options
def sensitivity(data_path, mechanisms, one_sided, smooth, tol_det, tol_prob):
    """Identify under several candidate mechanisms and compare."""
    ds = parse_dataset(data_path)
    report = run_sensitivity(
        ds, list(mechanisms), Tolerances(det=tol_det, prob=tol_prob),
        one_sided=one_sided, smooth=0.5 if smooth else 0.0)
    click.echo(render_report(report), nl=False)


@main.command(name="verify-counterexamples")
def verify_counterexamples():
    """Re-verify every built-in counterexample fixture exactly."""
    failures = 0
    for fixture in builtin_fixtures():
        report = verify_fixture(fixture)
        status = "pass" if report.passed else "FAIL"
        click.echo(f"{fixture.id:24s} {status}")
        if not report.passed:
            failures += 1
            for name, ok, detail in report.assertions:
                if not ok:
                    click.echo(f"    {name}: {detail or 'failed'}")
    if failures:
        click.echo(f"{failures} fixture(s) failed", err=True)
        sys.exit(1)


@main.group()
def catalog():
    """Mechanism catalog tooling."""


@catalog.command()
def dump():
    """Print every catalog entry with its identification status."""
    rows = [("mechanism", "regime", "sidedness", "identifiable",
             "joint", "anchor")]
    for entry in all_entries():
        s = entry.spec
        rows.append((s.pretty, s.regime, s.sidedness,
                     "yes" if s.identifiable else
                     f"no ({entry.fixture_id})" if entry.fixture_id else "no",
                     s.joint_recoverable, entry.anchor))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        click.echo("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())


if __name__ == "__main__":
    main()
