"""Command-line front end: certify, simulate, ancilla."""
from __future__ import annotations

import argparse
import dataclasses
import csv
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, circuits, gains
from .algebra import AlgebraError
from .metrics import nonlinear_variance
from .statesim import AliasingError, AncillaSpec, GridSpec, MeasurementError, make_ancilla, required_grid, save_state

EXIT_OK, EXIT_PHYSICS, EXIT_USAGE = 0, 1, 2
CSV_COLUMNS = ["squeezing_db", "n", "mean_fidelity", "std_fidelity", "ci95_low", "ci95_high",
               "mean_infidelity", "resamples"]

log = logging.getLogger("nlphase")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization


def _fmt(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        raise ValueError(f"non-finite float {v} cannot be serialized")
    return f"{v:.17g}"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}" if obj.denominator != 1 else obj.numerator
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _encode(obj, indent: int | None, level: int = 0) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in sorted(obj.items())]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[" + sep.join(f"{pad}{_encode(v, indent, level + 1)}" for v in obj) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """Canonical JSON: sorted keys, floats with 17 significant digits."""
    return _encode(_plain(obj), indent)


def load_schema(name: str) -> dict:
    return json.loads(resources.files("nlphase").joinpath("schemas", f"{name}.schema.json").read_text())


def validate(obj, name: str):
    jsonschema.validate(json.loads(dumps(obj)), load_schema(name))


def config_hash(config: circuits.CircuitConfig) -> str:
    return hashlib.sha256(dumps(config.to_dict(), indent=None).encode()).hexdigest()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def load_config(path) -> circuits.CircuitConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    errors = sorted(jsonschema.Draft202012Validator(load_schema("config")).iter_errors(data),
                    key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'/'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors]
        raise UsageError("invalid config:\n  " + "\n  ".join(lines))
    try:
        return circuits.CircuitConfig.from_dict(data)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_certify(args) -> int:
    if args.order < 3:
        raise UsageError("order must be at least 3")
    if args.scheme == "quartic-optical":
        report = circuits.symbolic_run(args.order, args.scheme)
        report.pop("relations", None)
    else:
        outcomes = None
        if args.outcomes:
            try:
                outcomes = gains.OutcomeVector.from_json(json.loads(Path(args.outcomes).read_text()))
            except (OSError, json.JSONDecodeError, ValueError) as exc:
                raise UsageError(f"cannot read outcomes: {exc}") from exc
        report = circuits.certify_qnd(args.order, args.scheme, outcomes)
        if outcomes is not None:
            chi = Fraction(args.chi)
            try:
                if args.scheme == "beamsplitter":
                    prog = gains.solve_bs_ratios(args.order, chi, outcomes)
                else:
                    prog = gains.solve_qnd_gains(args.order, chi, outcomes, allow_complex=args.allow_complex)
            except gains.GainError as exc:
                print(f"solver failure at equation {exc.equation}: {exc}", file=sys.stderr)
                return EXIT_USAGE
            report["program"] = prog.to_json()
            report["flags"] = list(prog.flags)
            if args.scheme != "beamsplitter":
                report["numeric_residual"] = gains.numeric_residual(prog, outcomes)
    report.setdefault("flags", [])
    text = dumps(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    ok = report["zero"]
    if "non-real" in report["flags"] and not args.allow_complex:
        ok = False
    print("PASS" if ok else "FAIL", file=sys.stderr)
    return EXIT_OK if ok else EXIT_PHYSICS


def write_csv(path: Path, points: list):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in points:
            ci = p["ci95"] or [None, None]
            row = [p["squeezing_db"], p["n"], p["mean_fidelity"], p["std_fidelity"], ci[0], ci[1],
                   p["mean_infidelity"], p["resamples"]]
            w.writerow(["" if v is None else (_fmt(v) if isinstance(v, float) else v) for v in row])


def simulate(config: circuits.CircuitConfig, out: Path, threads: int = 1) -> dict:
    started = _now()
    out.mkdir(parents=True, exist_ok=True)
    records, points = circuits.run_config(config, threads)
    files = []
    traj = out / "trajectories.jsonl"
    with traj.open("w") as fh:
        for r in records:
            fh.write(dumps(r.to_json(), indent=None) + "\n")
    files.append(traj)
    h = config_hash(config)
    summary = {"gate": config.gate, "config_hash": h, "seed": config.seed,
               "trajectories": config.trajectories, "points": points}
    if config.gate == "quartic":
        summary["oracle_chi"] = circuits.quartic_effective_chi(config.ancilla(4).chi, config.t0, config.t4)
    else:
        summary["oracle_chi"] = config.chi
    validate(summary, "summary")
    (out / "summary.json").write_text(dumps(summary) + "\n")
    files.append(out / "summary.json")
    if config.sweep:
        write_csv(out / "fidelity_vs_squeezing.csv", points)
        files.append(out / "fidelity_vs_squeezing.csv")
    manifest = {"command": "simulate", "config_hash": h, "seed": config.seed, "version": __version__,
                "started": started, "finished": _now(), "threads": threads, "config": config.to_dict(),
                "files": [{"path": f.name, "sha256": _sha256(f)} for f in files]}
    validate(manifest, "manifest")
    (out / "manifest.json").write_text(dumps(manifest) + "\n")
    return summary


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.trajectories is not None:
        overrides["trajectories"] = args.trajectories
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    log.info("simulate %s gate, %d trajectories per point", config.gate, config.trajectories)
    summary = simulate(config, Path(args.out), args.threads)
    for p in summary["points"]:
        log.info("db=%s mean fidelity %s", p["squeezing_db"], p["mean_fidelity"])
    print(dumps(summary))
    return EXIT_OK


def cmd_ancilla(args) -> int:
    spec = AncillaSpec(args.order, args.chi, args.db)
    grid = GridSpec(args.n_points, args.half_width) if args.n_points else required_grid(spec)
    state = make_ancilla(spec, grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rep = nonlinear_variance(state, args.order, args.chi)
    save_state(state, out, {"order": spec.order, "chi": spec.chi, "squeezing_db": spec.squeezing_db})
    report = {"order": spec.order, "chi": spec.chi, "squeezing_db": spec.squeezing_db,
              "grid": {"n_points": grid.n_points, "half_width": grid.half_width},
              "variance": rep.to_json(), "expected_variance": spec.noise_variance,
              "x_variance": spec.x_variance, "state_file": str(out)}
    validate(report, "ancilla")
    print(dumps(report))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlphase", description=__doc__)
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--verbose", "-v", action="store_true")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="exact residual certificate of a gate scheme")
    c.add_argument("--order", type=int, required=True)
    c.add_argument("--scheme", default="qnd-inline",
                   choices=["qnd-inline", "qnd-measurement-induced", "beamsplitter", "quartic-optical"])
    c.add_argument("--outcomes", help="JSON file {\"q\": {\"2\": value, ...}}; rationals as \"a/b\" strings")
    c.add_argument("--chi", default="1", help="target strength for the numeric program (rational string)")
    c.add_argument("--allow-complex", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="run trajectories of a configured gate")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--trajectories", type=int)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("ancilla", help="prepare an ancilla state and report its nonlinear variance")
    a.add_argument("--order", type=int, required=True)
    a.add_argument("--chi", type=float, default=0.0)
    a.add_argument("--db", type=float, default=0.0)
    a.add_argument("--out", required=True)
    a.add_argument("--n-points", type=int, help="grid size (default: smallest alias-free grid)")
    a.add_argument("--half-width", type=float, default=8.0)
    a.set_defaults(func=cmd_ancilla)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AliasingError as exc:
        print(f"aliasing guard: {exc}", file=sys.stderr)
        return EXIT_USAGE if args.command == "ancilla" else EXIT_PHYSICS
    except (gains.GainError, AlgebraError) as exc:
        eq = getattr(exc, "equation", None)
        print(f"solver failure{'' if eq is None else f' at equation {eq}'}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (circuits.CircuitError, MeasurementError) as exc:
        print(f"physics guard: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
