"""TOML model configurations for the simulator.

A config describes one structural (or distribution-level) model plus the
missingness mechanism, e.g.::

    [model]
    mechanism = "1UD"
    one_sided = true
    p_z = "1/2"
    y_support = [0, 1]

    [model.pi_u]
    n = "1/4"
    c = "3/4"

    [model.outcome]
    "n,0" = ["1/2", "1/2"]
    "c,0" = ["2/3", "1/3"]
    "c,1" = ["1/3", "2/3"]

    [model.response_y]
    "n,0" = "0.6"
    "c,0" = "0.7"
    "c,1" = "0.8"

Probabilities written as strings are parsed exactly (``"1/2"``, ``"0.6"``);
response-table keys list parent values in the canonical (Z, U, D, Y, RD)
order, comma-separated.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .catalog import lookup
from .model import (
    DistributionParams,
    Params,
    StructuralParams,
    ValidationFailed,
    parse_number,
    validate,
)


def _parse_key(key: str) -> tuple:
    parts = []
    for tok in key.split(","):
        tok = tok.strip()
        parts.append(int(tok) if tok.lstrip("-").isdigit() else tok)
    return tuple(parts)


def _parse_table(raw: dict) -> dict:
    return {_parse_key(k): parse_number(v) for k, v in raw.items()}


def load_config(path) -> tuple:
    """Read a model config; returns ``(mechanism_label, params)``.

    The parameters are validated against the mechanism's catalog entry;
    problems raise :class:`ValidationFailed`.
    """
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    try:
        m = data["model"]
        mechanism = m["mechanism"]
        one_sided = bool(m.get("one_sided", False))
        y_support = tuple(m["y_support"])
        p_z = parse_number(m["p_z"])
    except KeyError as exc:
        raise ValidationFailed(f"config missing required key {exc}") from exc

    responses = {attr: _parse_table(m[attr])
                 for attr in ("response_y", "response_d") if attr in m}
    if "theta" in m:
        params: Params = DistributionParams(
            p_z=p_z,
            theta=_parse_table(m["theta"]),
            y_support=y_support,
            one_sided=one_sided,
            **responses,
        )
    else:
        try:
            pi_u = {u: parse_number(v) for u, v in m["pi_u"].items()}
            outcome = {_parse_key(k): tuple(parse_number(p) for p in v)
                       for k, v in m["outcome"].items()}
        except KeyError as exc:
            raise ValidationFailed(f"config missing required key {exc}") from exc
        params = StructuralParams(
            p_z=p_z,
            pi_u=pi_u,
            y_support=y_support,
            outcome_law=outcome,
            one_sided=one_sided,
            **responses,
        )

    problems = validate(params, lookup(mechanism).spec)
    if problems:
        raise ValidationFailed("; ".join(problems))
    return mechanism, params
