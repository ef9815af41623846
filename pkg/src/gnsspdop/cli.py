"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 geometry error,
4 Monte Carlo validation failure (|z| > 3).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constellation import OVERRIDE_ALIASES, SCHEMA_VERSION, Scenario, _coerce, load_scenario
from .dop import expected_sq_error, pdop
from .errors import ConfigError, GeometryError, PdopError, SingularMatrix, ValidationError
from .montecarlo import RNG_ALGORITHM, Z_THRESHOLD, run_mc

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_MC_FAIL = 4

COMMANDS = ("dop", "mismatch", "mc", "sweep", "validate")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "" if value is None else str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _base_row(scenario: Scenario, A) -> dict:
    return {"scenario": scenario.name, "S": A.S, "satellites": " ".join(map(str, A.satellite_ids))}


def dop_row(scenario: Scenario) -> dict:
    A, model, _, _ = scenario.resolve()
    return {**_base_row(scenario, A), **pdop(A, model).as_row()}


def mismatch_row(scenario: Scenario) -> dict:
    if scenario.true_error_model is None:
        raise ValidationError("mismatch analysis needs a 'true_error_model' in the scenario")
    A, model, true_model, bias = scenario.resolve()
    rep = expected_sq_error(A, model, true_model, bias)
    return {**_base_row(scenario, A), **pdop(A, model).as_row(), **rep.as_row()}


def mc_row(scenario: Scenario, analytic: float | None = None, workers: int | None = None) -> dict:
    A, model, _, _ = scenario.resolve()
    rep = run_mc(scenario, workers=workers, analytic=analytic)
    return {**_base_row(scenario, A), "pdop": pdop(A, model).pdop, "kappa": model.kappa, **rep.as_row()}


def _write(rows: list[dict], out: Path | None, fmt: str, provenance: dict) -> None:
    if out is None:
        return
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    if "error" in columns:
        columns.remove("error")
        columns.append("error")
    out.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "structured":
        doc = {**provenance, "columns": columns, "rows": rows}
        out.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    out.write_text(buf.getvalue())
    sidecar = out.with_name(out.name + ".meta.json")
    sidecar.write_text(json.dumps(_jsonable({**provenance, "columns": columns}), indent=2) + "\n")


def _overrides(args) -> list[str]:
    items = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        items.append(f"mc.seed={args.seed}")
    if getattr(args, "samples", None) is not None:
        items.append(f"mc.n_samples={args.samples}")
    return items


def _recorded(overrides) -> list[str]:
    # worker count does not affect results and must not change report bytes
    return [o for o in overrides
            if OVERRIDE_ALIASES.get(o.split("=", 1)[0].strip(), o.split("=", 1)[0].strip()) != "mc.workers"]


def _provenance(args, scenario: Scenario | None, overrides) -> dict:
    mc = scenario.mc if scenario is not None else None
    return {
        "tool": "gnsspdop",
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "scenario_path": str(args.scenario[0] if isinstance(args.scenario, list) else args.scenario),
        "scenario_name": scenario.name if scenario is not None else None,
        "overrides": _recorded(overrides),
        "seed": mc.seed if mc else None,
        "n_samples": mc.n_samples if mc else None,
        "rng": RNG_ALGORITHM if mc else None,
    }


def cmd_dop(args, out=None) -> int:
    out = out or sys.stdout
    overrides = _overrides(args)
    scenario = load_scenario(args.scenario, overrides)
    row = dop_row(scenario)
    print(f"scenario       {scenario.name}  (S = {row['S']})", file=out)
    print(f"PDOP           {row['pdop']:.7f}", file=out)
    print(f"RMS            {row['rms']:.7f} m", file=out)
    print(f"sigma x/y/z    {row['sigma_x']:.7f} {row['sigma_y']:.7f} {row['sigma_z']:.7f} m", file=out)
    print(f"kappa          {row['kappa']:.7g} m^2", file=out)
    if math.isfinite(row["hdop"]):
        print(f"HDOP / VDOP    {row['hdop']:.7f} / {row['vdop']:.7f}", file=out)
    _write([row], args.out, args.format, _provenance(args, scenario, overrides))
    return EXIT_OK


def cmd_mismatch(args, out=None) -> int:
    out = out or sys.stdout
    overrides = _overrides(args)
    scenario = load_scenario(args.scenario, overrides)
    row = mismatch_row(scenario)
    print(f"scenario                 {scenario.name}  (S = {row['S']})", file=out)
    print(f"PDOP (modeled)           {row['pdop']:.7f}", file=out)
    print(f"kappa * PDOP^2           {row['pdop_predicted_sq_error']:.7g} m^2", file=out)
    print(f"E|e|^2 (true model)      {row['expected_sq_error']:.7g} m^2", file=out)
    print(f"bias contribution        {row['bias_sq']:.7g} m^2", file=out)
    print(f"optimism_ratio = {row['optimism_ratio']:.7f}", file=out)
    _write([row], args.out, args.format, _provenance(args, scenario, overrides))
    return EXIT_OK


def cmd_mc(args, out=None) -> int:
    out = out or sys.stdout
    overrides = _overrides(args)
    scenario = load_scenario(args.scenario, overrides)
    if scenario.mc is None:
        raise ValidationError("mc command needs an 'mc' section or --samples/--seed")
    row = mc_row(scenario, analytic=args.analytic_target, workers=args.workers)
    status = "PASS" if row["mc_pass"] else "FAIL"
    print(f"scenario        {scenario.name}  (S = {row['S']}, n = {row['n_samples']}, seed = {row['seed']})", file=out)
    print(f"analytic E|e|^2 {row['analytic_sq_error']:.7g} m^2", file=out)
    print(f"empirical       {row['empirical_mean_sq_error']:.7g} m^2 (SE {row['standard_error']:.3g})", file=out)
    print(f"z_score = {row['z_score']:.4f}  {status} (|z| <= {Z_THRESHOLD:g})", file=out)
    _write([row], args.out, args.format, _provenance(args, scenario, overrides))
    return EXIT_OK if row["mc_pass"] else EXIT_MC_FAIL


_ANALYSES = {"dop": dop_row, "mismatch": mismatch_row, "mc": mc_row}


def _parse_sweep(spec: str) -> tuple[str, list]:
    if not spec or "=" not in spec:
        raise ValidationError("--sweep must be KEY=V1,V2,...")
    key, values = spec.split("=", 1)
    items = [v.strip() for v in values.split(",") if v.strip()]
    if not key.strip() or not items:
        raise ValidationError("sweep value list is empty")
    return key.strip(), [_coerce(v) for v in items]


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    key, values = _parse_sweep(args.sweep)
    overrides = _overrides(args)
    load_scenario(args.scenario, overrides)  # base scenario must be valid
    analysis = _ANALYSES[args.analysis]
    rows = []
    for value in values:
        head = {"sweep_key": key, "sweep_value": value}
        try:
            scenario = load_scenario(args.scenario, [*overrides, f"{key}={json.dumps(value)}"])
            row = {**head, **analysis(scenario), "error": ""}
        except PdopError as exc:
            row = {**head, "error": f"{type(exc).__name__}: {exc}"}
        rows.append(row)
        shown = f"{row['pdop']:.7f}" if "pdop" in row else row["error"]
        print(f"{key}={value}\tPDOP {shown}", file=out)
    scenario = load_scenario(args.scenario, overrides)
    prov = {**_provenance(args, scenario, overrides), "sweep_key": key, "sweep_values": values,
            "analysis": args.analysis}
    _write(rows, args.out, args.format, prov)
    return EXIT_OK


def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    status = EXIT_OK
    for path in args.scenario:
        try:
            scenario = load_scenario(path, _overrides(args))
            print(f"OK    {path}  ({len(scenario.satellites)} candidate satellites)", file=out)
        except ConfigError as exc:
            print(f"FAIL  {path}  {type(exc).__name__}: {exc}", file=out)
            status = EXIT_CONFIG
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnsspdop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi=False):
        if multi:
            p.add_argument("--scenario", type=Path, action="append", required=True, metavar="PATH")
        else:
            p.add_argument("--scenario", type=Path, required=True, metavar="PATH")
        p.add_argument("--out", type=Path, metavar="PATH")
        p.add_argument("--format", choices=("csv", "structured"), default="csv")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario field")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--workers", type=int, help="Monte Carlo threads (results do not depend on it)")
        p.add_argument("--analytic-target", type=float, help=argparse.SUPPRESS)

    common(sub.add_parser("dop", help="PDOP, RMS and per-axis sigmas"))
    common(sub.add_parser("mismatch", help="exact error under the true covariance; optimism ratio"))
    common(sub.add_parser("mc", help="Monte Carlo check of the analytic mean squared error"))
    p = sub.add_parser("sweep", help="repeat an analysis over values of one scenario field")
    common(p)
    p.add_argument("--sweep", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--analysis", choices=tuple(_ANALYSES), default="dop")
    common(sub.add_parser("validate", help="check scenario files against the schema"), multi=True)
    return parser


_HANDLERS = {"dop": cmd_dop, "mismatch": cmd_mismatch, "mc": cmd_mc, "sweep": cmd_sweep,
             "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except GeometryError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (ConfigError, SingularMatrix) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
