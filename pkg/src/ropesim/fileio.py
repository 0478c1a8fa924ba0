"""Reading and writing curve CSVs and scenario files.

Floats are written with ``repr`` so a curve written and read back is
bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .constitutive import (
    EnergyDensity,
    HysteresisLaw,
    MicroEnergySamples,
    TensionCurve,
    ideal_plateau_law,
    linear_law,
    make_hysteresis,
    plateau_law,
)
from .dynamics import IntegratorConfig
from .errors import ConfigError, InvalidCurve, InvalidSamples, RopeSimError
from .scenario import CarabinerScenario, Scenario

CURVE_HEADER = ("strain", "tension_n")
MICRO_HEADER = ("strain", "energy_n")
ENVELOPE_HEADER = ("strain", "w_mic", "energy_n", "tension_n")


def _read_columns(path, header, error):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise error(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows or tuple(c.strip() for c in rows[0]) != header:
        raise error(f"{path}: expected header {','.join(header)}")
    cols = [[] for _ in header]
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise error(f"{path}, line {lineno}: expected {len(header)} columns, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                cols[j].append(float(cell))
            except ValueError:
                raise error(f"{path}, line {lineno}: column {header[j]!r} is not a number: {cell!r}") from None
    return cols


def _check_increasing(path, strains, error):
    for i in range(1, len(strains)):
        if not strains[i] > strains[i - 1]:
            raise error(f"{path}, line {i + 2}: strains must be strictly increasing "
                        f"({strains[i]!r} after {strains[i - 1]!r})")


def read_curve_csv(path, name: str | None = None) -> TensionCurve:
    strains, tensions = _read_columns(path, CURVE_HEADER, InvalidCurve)
    _check_increasing(path, strains, InvalidCurve)
    return TensionCurve(tuple(strains), tuple(tensions), name=name or Path(path).stem)


def write_curve_csv(law: TensionCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for e, b in zip(law.strains, law.tensions):
            w.writerow([repr(e), repr(b)])


def read_micro_energy_csv(path) -> MicroEnergySamples:
    strains, values = _read_columns(path, MICRO_HEADER, InvalidSamples)
    _check_increasing(path, strains, InvalidSamples)
    return MicroEnergySamples(np.array(strains), np.array(values))


def write_envelope_csv(samples: MicroEnergySamples, env: EnergyDensity, path) -> None:
    eps = samples.strains
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENVELOPE_HEADER)
        for e, wm, we in zip(eps, samples.values, env(eps)):
            w.writerow([repr(float(e)), repr(float(wm)), repr(float(we)), repr(float(env.tension(e)))])


# --------------------------------------------------------------------------
# scenario files
# --------------------------------------------------------------------------

@dataclass
class ScenarioFile:
    scenario: Scenario | CarabinerScenario
    law: TensionCurve | HysteresisLaw
    integrator: dict
    law_spec: object
    base_dir: Path

    @property
    def is_carabiner(self) -> bool:
        return isinstance(self.scenario, CarabinerScenario)

    def config(self, **defaults) -> IntegratorConfig:
        return IntegratorConfig(**{**defaults, **self.integrator})


def _number(obj, key, where, required=True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing key '{where}.{key}'")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key '{where}.{key}' must be a number, got {v!r}")
    return float(v)


def _reject_unknown(obj, allowed, where):
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}.{key}'")


def _object(doc, key, where=None):
    v = doc[key]
    if not isinstance(v, dict):
        raise ConfigError(f"key '{where or key}' must be an object")
    return v


def parse_scenario(doc: dict):
    if not isinstance(doc, dict):
        raise ConfigError("scenario file must contain a JSON object")
    if "scenario" not in doc:
        raise ConfigError("missing key 'scenario'")
    sc = _object(doc, "scenario")
    car = _object(doc, "carabiner") if "carabiner" in doc else None
    try:
        if car is None:
            _reject_unknown(sc, ("m", "g", "L", "delta_l", "h0"), "scenario")
            return Scenario(*(_number(sc, k, "scenario") for k in ("m", "g", "L", "delta_l", "h0")))
        if "L" in sc:
            raise ConfigError("key 'scenario.L' conflicts with 'carabiner'; the rope length is l1 + l2")
        _reject_unknown(sc, ("m", "g", "delta_l", "h0"), "scenario")
        _reject_unknown(car, ("l1", "l2", "alpha_rad", "k", "mu"), "carabiner")
        if "mu" in car and "k" in car:
            raise ConfigError("carabiner: give either 'k' or 'mu', not both")
        base = {k: _number(sc, k, "scenario") for k in ("m", "g", "delta_l", "h0")}
        return CarabinerScenario(
            **base,
            l1=_number(car, "l1", "carabiner"),
            l2=_number(car, "l2", "carabiner"),
            alpha=_number(car, "alpha_rad", "carabiner", False, math.pi / 2),
            k=_number(car, "k", "carabiner", False, 0.0),
            mu_override=_number(car, "mu", "carabiner", False, None),
        )
    except ConfigError:
        raise
    except RopeSimError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def _curve_from_spec(spec, s, base_dir: Path, where: str) -> TensionCurve:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"key '{where}.kind' is required")
    kind = spec["kind"]
    if not isinstance(kind, str):
        raise ConfigError(f"key '{where}.kind' must be a string")
    if kind == "ideal":
        _reject_unknown(spec, ("kind", "ramp_width"), where)
        ramp = _number(spec, "ramp_width", where, False, None)
        target = s.lower_segment_scenario() if isinstance(s, CarabinerScenario) else s
        return ideal_plateau_law(target) if ramp is None else ideal_plateau_law(target, ramp)
    if kind == "linear":
        _reject_unknown(spec, ("kind", "modulus", "max_strain"), where)
        return linear_law(_number(spec, "modulus", where), _number(spec, "max_strain", where, False, 1.0))
    if kind == "plateau":
        _reject_unknown(spec, ("kind", "level", "ramp_width", "end_strain"), where)
        kw = {"ramp_width": _number(spec, "ramp_width", where, False, None),
              "end_strain": _number(spec, "end_strain", where, False, None)}
        return plateau_law(_number(spec, "level", where), **{k: v for k, v in kw.items() if v is not None})
    if kind.startswith("csv:"):
        _reject_unknown(spec, ("kind",), where)
        path = Path(kind[4:])
        if not path.is_absolute():
            path = base_dir / path
        return read_curve_csv(path)
    raise ConfigError(f"key '{where}.kind' has unknown value {kind!r} "
                      "(expected ideal, linear, plateau, csv:<path> or hysteresis)")


def build_law(spec, s, base_dir: Path = Path(".")):
    where = "law"
    kind = spec.get("kind") if isinstance(spec, dict) else spec
    try:
        if kind == "hysteresis":
            _reject_unknown(spec, ("kind", "loading", "unloading"), where)
            for key in ("loading", "unloading"):
                if key not in spec:
                    raise ConfigError(f"missing key 'law.{key}'")
            if isinstance(s, CarabinerScenario):
                raise ConfigError("key 'law.kind': hysteresis is not supported with a carabiner")
            loading = _curve_from_spec(spec["loading"], s, base_dir, "law.loading")
            unloading = _curve_from_spec(spec["unloading"], s, base_dir, "law.unloading")
            return make_hysteresis(loading, unloading)
        return _curve_from_spec(spec, s, base_dir, where)
    except ConfigError:
        raise
    except RopeSimError as exc:
        raise ConfigError(f"invalid law: {exc}") from exc


_INTEGRATOR_KEYS = {f.name for f in fields(IntegratorConfig)}


def parse_integrator(doc) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError("key 'integrator' must be an object")
    _reject_unknown(doc, _INTEGRATOR_KEYS, "integrator")
    out = {}
    for key, v in doc.items():
        if key in ("raise_on_overshoot", "stop_at_arrest", "check_energy"):
            if not isinstance(v, bool):
                raise ConfigError(f"key 'integrator.{key}' must be true or false")
        elif key == "cycles":
            if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
                raise ConfigError("key 'integrator.cycles' must be an integer or null")
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"key 'integrator.{key}' must be a number")
        out[key] = v
    try:
        IntegratorConfig(**out)
    except ValueError as exc:
        raise ConfigError(f"invalid integrator settings: {exc}") from exc
    return out


def parse_document(doc: dict, base_dir=".") -> ScenarioFile:
    base_dir = Path(base_dir)
    s = parse_scenario(doc)
    _reject_unknown(doc, ("scenario", "carabiner", "law", "integrator"), "<root>")
    spec = doc.get("law", {"kind": "ideal"})
    law = build_law(spec, s, base_dir)
    return ScenarioFile(s, law, parse_integrator(doc.get("integrator")), spec, base_dir)


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(f"{path}, line {exc.lineno}, column {exc.colno}: {exc.msg}\n    {context}") from None


def load_scenario_file(path) -> ScenarioFile:
    return parse_document(load_document(path), Path(path).parent)


def json_safe(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return json_safe(obj.item())
    return obj


def dump_json(obj, path=None) -> str:
    text = json.dumps(json_safe(obj), indent=2, allow_nan=False)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
