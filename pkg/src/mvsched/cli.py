"""Batch front-end: scenario files in, CSV/JSON experiment tables out.

Commands
    run       simulate one scenario (Monte Carlo per its ``runs`` field)
    sweep     vary one axis, one CSV row per value
    compare   same scene under every scheduler/knowledge variant
    validate  pruned search vs exhaustive oracle gap report

Scenario files are JSON with a ``schema`` version field; unknown keys are
rejected with the offending path. CSV output uses a fixed header and fixed
six-decimal floats so results diff cleanly; the runtime column is the one
field that varies between invocations. ``MVSCHED_OUT_DIR`` supplies a
default output directory when ``--out`` is omitted.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .correlation import MovingObject
from .simulator import (
    SWEEP_AXES,
    Aggregate,
    ScenarioConfig,
    monte_carlo,
    run,
    sweep,
    validate_oracle_gap,
)

__all__ = [
    "ScenarioError",
    "ExperimentSpec",
    "parse_scenario",
    "scenario_to_json",
    "cmd_run",
    "cmd_sweep",
    "cmd_compare",
    "cmd_validate",
    "main",
]

SCHEMA_VERSION = 1

CSV_HEADER = "axis_value,scheduler,mean_psnr_db,std_psnr_db,delivered_fraction,runtime_ms"

# label -> (scheduler override or None, correlation view) of the compare table
COMPARE_VARIANTS = (
    ("correlation_known", None, "full"),
    ("space_corr_known", None, "spatial"),
    ("time_corr_known", None, "temporal"),
    ("no_corr_known", None, "none"),
    ("baseline_rndm", "random", "full"),
    ("baseline_akyildiz", "akyildiz", "full"),
)


class ScenarioError(ValueError):
    """Scenario document failed to parse; ``field`` names the culprit."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentSpec:
    """One CLI invocation: command, scenario file, output, overrides."""

    command: str
    scenario_path: Path
    out: Path | None = None
    seed: int | None = None
    runs: int | None = None
    sweep_axis: str | None = None
    sweep_values: tuple[str, ...] = ()
    oracle_cap: int | None = None
    gap_mean_tol: float = 0.01
    gap_max_tol: float = 0.05

    def __post_init__(self) -> None:
        if self.command not in ("run", "sweep", "compare", "validate"):
            raise ValueError(f"unknown command {self.command!r}")
        if not self.scenario_path.exists():
            raise ScenarioError("scenario", f"file not found: {self.scenario_path}")


# ---------------------------------------------------------------------------
# scenario document handling

_SCALAR_FIELDS: dict[str, type] = {
    "mode": str,
    "M": int,
    "N_f": int,
    "rho_s": int,
    "rho_t": int,
    "background_fraction": float,
    "rate_mbps": float,
    "capacity_mbps": float,
    "frame_rate": float,
    "pixels_per_frame": int,
    "t_tdma_s": float,
    "T_D": int,
    "scheduler": str,
    "K": int,
    "N_s": int,
    "correlation_view": str,
    "mu": float,
    "sigma2": float,
    "peak": float,
    "seed": int,
    "runs": int,
    "oracle_cap": int,
}
_OBJECT_KEYS = {"camera", "start", "width", "speed"}


def _coerce(field: str, value, kind: type):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    raise ScenarioError(field, f"expected {kind.__name__}, got {value!r}")


def parse_scenario(text: str) -> ScenarioConfig:
    """Validate a scenario document and fill documented defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("<document>", "top level must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ScenarioError("schema", f"must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")

    known = set(_SCALAR_FIELDS) | {"schema", "overlap_at_distance", "objects", "weights"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ScenarioError(unknown[0], "unknown key")

    kwargs = {}
    for field, kind in _SCALAR_FIELDS.items():
        if field in doc:
            kwargs[field] = _coerce(field, doc[field], kind)

    if "overlap_at_distance" in doc and doc["overlap_at_distance"] is not None:
        omap = doc["overlap_at_distance"]
        if not isinstance(omap, dict):
            raise ScenarioError("overlap_at_distance", "must be an object")
        parsed = {}
        for key, frac in omap.items():
            try:
                dist = int(key)
            except ValueError:
                raise ScenarioError(
                    f"overlap_at_distance.{key}", "key must be a signed integer distance"
                ) from None
            parsed[dist] = _coerce(f"overlap_at_distance.{key}", frac, float)
        kwargs["overlap_at_distance"] = parsed

    if "objects" in doc:
        if not isinstance(doc["objects"], list):
            raise ScenarioError("objects", "must be a list")
        objs = []
        for i, entry in enumerate(doc["objects"]):
            if not isinstance(entry, dict):
                raise ScenarioError(f"objects[{i}]", "must be an object")
            extra = sorted(set(entry) - _OBJECT_KEYS)
            if extra:
                raise ScenarioError(f"objects[{i}].{extra[0]}", "unknown key")
            missing = sorted(_OBJECT_KEYS - set(entry))
            if missing:
                raise ScenarioError(f"objects[{i}].{missing[0]}", "missing key")
            objs.append(
                MovingObject(
                    camera=_coerce(f"objects[{i}].camera", entry["camera"], int),
                    start=_coerce(f"objects[{i}].start", entry["start"], float),
                    width=_coerce(f"objects[{i}].width", entry["width"], float),
                    speed=_coerce(f"objects[{i}].speed", entry["speed"], float),
                )
            )
        kwargs["objects"] = tuple(objs)

    if "weights" in doc and doc["weights"] is not None:
        if not isinstance(doc["weights"], list):
            raise ScenarioError("weights", "must be a list of numbers")
        kwargs["weights"] = tuple(
            _coerce(f"weights[{i}]", v, float) for i, v in enumerate(doc["weights"])
        )

    try:
        return ScenarioConfig(**kwargs)
    except ValueError as exc:
        # invariant failures from the config itself; best-effort field name
        msg = str(exc)
        field = next((f for f in _SCALAR_FIELDS if f in msg), "<scenario>")
        raise ScenarioError(field, msg) from exc


def scenario_to_json(scenario: ScenarioConfig) -> str:
    doc: dict = {"schema": SCHEMA_VERSION}
    for field in _SCALAR_FIELDS:
        doc[field] = getattr(scenario, field)
    doc["overlap_at_distance"] = (
        None
        if scenario.overlap_at_distance is None
        else {str(k): v for k, v in scenario.overlap_at_distance.items()}
    )
    doc["objects"] = [dataclasses.asdict(o) for o in scenario.objects]
    doc["weights"] = None if scenario.weights is None else list(scenario.weights)
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# output helpers


def _csv_row(label, scheduler: str, agg: Aggregate) -> str:
    return (
        f"{label},{scheduler},{agg.mean_psnr_db:.6f},{agg.std_psnr_db:.6f},"
        f"{agg.delivered_fraction:.6f},{agg.runtime_ms:.6f}"
    )


def _resolve_out(spec: ExperimentSpec, default_name: str) -> Path | None:
    if spec.out is not None:
        return spec.out
    env_dir = os.environ.get("MVSCHED_OUT_DIR")
    if env_dir:
        return Path(env_dir) / default_name
    return None


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _load(spec: ExperimentSpec) -> ScenarioConfig:
    scenario = parse_scenario(spec.scenario_path.read_text())
    if spec.seed is not None:
        scenario = replace(scenario, seed=spec.seed)
    if spec.runs is not None:
        scenario = replace(scenario, runs=spec.runs)
    if spec.oracle_cap is not None:
        scenario = replace(scenario, oracle_cap=spec.oracle_cap)
    return scenario


# ---------------------------------------------------------------------------
# commands


def cmd_run(spec: ExperimentSpec) -> int:
    scenario = _load(spec)
    agg = monte_carlo(scenario)
    first = run(scenario)
    doc = {
        "scenario": json.loads(scenario_to_json(scenario)),
        "aggregate": {
            "n_runs": agg.n_runs,
            "mean_psnr_db": agg.mean_psnr_db,
            "std_psnr_db": agg.std_psnr_db,
            "psnr_of_mean_mse_db": agg.psnr_of_mean_mse_db,
            "delivered_fraction": agg.delivered_fraction,
            "runtime_ms": agg.runtime_ms,
        },
        "first_run": {
            "mean_psnr_db": first.mean_psnr_db,
            "mean_mse": first.mean_mse,
            "psnr_of_mean_mse_db": first.psnr_of_mean_mse_db,
            "delivered_fraction": first.delivered_fraction,
            "delivered": [list(entry) for entry in first.delivered],
            "frames": [dataclasses.asdict(f) for f in first.frames],
        },
    }
    out = _resolve_out(spec, "run.json")
    if out is not None:
        _write(out, json.dumps(doc, indent=2, sort_keys=True))
    print(
        f"run: scheduler={scenario.scheduler} runs={agg.n_runs} "
        f"mean_psnr_db={agg.mean_psnr_db:.4f} std={agg.std_psnr_db:.4f} "
        f"delivered={agg.delivered_fraction:.4f}"
    )
    return 0


def cmd_sweep(spec: ExperimentSpec) -> int:
    scenario = _load(spec)
    if spec.sweep_axis is None:
        raise ScenarioError("sweep", "sweep command needs --sweep axis=v1,v2,...")
    rows = sweep(scenario, spec.sweep_axis, list(spec.sweep_values))
    lines = [CSV_HEADER]
    lines += [_csv_row(r.value, r.scheduler, r.aggregate) for r in rows]
    _write(_resolve_out(spec, "sweep.csv"), "\n".join(lines) + "\n")
    return 0


def cmd_compare(spec: ExperimentSpec) -> int:
    scenario = _load(spec)
    base_kind = scenario.scheduler
    if base_kind in ("random", "akyildiz"):
        base_kind = "greedy"
    lines = [CSV_HEADER]
    for label, kind, view in COMPARE_VARIANTS:
        cell = replace(
            scenario, scheduler=kind or base_kind, correlation_view=view
        )
        agg = monte_carlo(cell)
        lines.append(_csv_row(label, cell.scheduler, agg))
    _write(_resolve_out(spec, "compare.csv"), "\n".join(lines) + "\n")
    return 0


def cmd_validate(spec: ExperimentSpec) -> int:
    scenario = _load(spec)
    n = scenario.runs
    report = validate_oracle_gap(scenario, n)
    ok = report.passed(spec.gap_mean_tol, spec.gap_max_tol)
    lines = [
        "instances,mean_gap,max_gap,runtime_ms,status",
        f"{len(report.instances)},{report.mean_gap:.6f},{report.max_gap:.6f},"
        f"{report.runtime_ms:.6f},{'pass' if ok else 'fail'}",
    ]
    _write(_resolve_out(spec, "validate.csv"), "\n".join(lines) + "\n")
    print(
        f"validate: instances={len(report.instances)} mean_gap={report.mean_gap:.6f} "
        f"max_gap={report.max_gap:.6f} -> {'pass' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvsched",
        description="Correlation-aware multiview packet-scheduling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, brief in (
        ("run", "simulate one scenario"),
        ("sweep", "sweep one parameter axis"),
        ("compare", "compare scheduler/knowledge variants"),
        ("validate", "pruned search vs exhaustive oracle"),
    ):
        p = sub.add_parser(name, help=brief)
        p.add_argument("--scenario", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--runs", type=int, default=None)
        if name == "sweep":
            p.add_argument(
                "--sweep", required=True, metavar="AXIS=V1,V2,...",
                help=f"axis is one of {SWEEP_AXES}",
            )
        if name == "validate":
            p.add_argument("--oracle-cap", type=int, default=None)
            p.add_argument("--gap-mean-tol", type=float, default=0.01)
            p.add_argument("--gap-max-tol", type=float, default=0.05)
    return parser


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    sweep_axis = None
    sweep_values: tuple[str, ...] = ()
    if getattr(args, "sweep", None):
        if "=" not in args.sweep:
            raise ScenarioError("sweep", "expected AXIS=V1,V2,...")
        axis, _, raw = args.sweep.partition("=")
        values = tuple(v for v in raw.split(",") if v)
        if axis not in SWEEP_AXES:
            raise ScenarioError("sweep", f"axis must be one of {SWEEP_AXES}")
        if not values:
            raise ScenarioError("sweep", "no axis values given")
        sweep_axis, sweep_values = axis, values
    return ExperimentSpec(
        command=args.command,
        scenario_path=args.scenario,
        out=args.out,
        seed=args.seed,
        runs=args.runs,
        sweep_axis=sweep_axis,
        sweep_values=sweep_values,
        oracle_cap=getattr(args, "oracle_cap", None),
        gap_mean_tol=getattr(args, "gap_mean_tol", 0.01),
        gap_max_tol=getattr(args, "gap_max_tol", 0.05),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        handler = {
            "run": cmd_run,
            "sweep": cmd_sweep,
            "compare": cmd_compare,
            "validate": cmd_validate,
        }[spec.command]
        return handler(spec)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
