"""Command-line driver.

    roominv simulate --config cube.json --out sim/
    roominv degrade  sim/ --out proxy/
    roominv invert   sim/ --out filt/ --set inversion.window_tau=0.06
    roominv apply    filt/ proxy/ --out out/ [--input x0.wav --input x1.wav]
    roominv evaluate proxy/ filt/ --out report/
    roominv sweep    --config cube.json --param tau --values 0.01 0.02 0.04 --out sweep/

Exit status: 0 success, 2 configuration, 3 geometry, 4 dimension or rate
mismatch, 5 file input/output, 1 any other library error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from .core import (
    DimensionMismatch,
    GeometryError,
    ImpulseResponse,
    InvalidValue,
    RateMismatch,
    RoomInvError,
    TransferMatrix,
)
from .degrade import SYNTHETIC_LABEL
from .evaluation import EvalConfig, EvalReport
from .inversion import InverseFilterSet, apply, invert
from .pipeline import SWEEP_COLUMNS, SWEEP_PARAMETERS, degrade_set, evaluate_set, simulate_set, sweep
from .scenario import ConfigError, ManifestError, ScenarioConfig, read_manifest, write_manifest
from .wavio import read_wav, write_wav

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_DIMENSION = 4
EXIT_IO = 5

CLEAN_LABEL = "clean image-source simulation"
REPORT_NAME = "report.csv"
MSE_NAME = "mse.csv"
SWEEP_NAME = "sweep.csv"


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, GeometryError):
        return EXIT_GEOMETRY
    if isinstance(exc, (DimensionMismatch, RateMismatch)):
        return EXIT_DIMENSION
    if isinstance(exc, (ConfigError, InvalidValue)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_CONFIG
    return EXIT_OTHER


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _room_record(sc: ScenarioConfig) -> dict:
    room = sc.room
    return {
        "dims": list(room.dims),
        "abar": room.abar,
        "reflection": room.reflection if room.uniform else [list(p) for p in room.reflection],
        "speed_of_sound": room.speed_of_sound,
        "sample_rate": room.sample_rate,
        "ir_length": room.ir_length,
    }


def _set_manifest(kind: str, label: str, sc: ScenarioConfig, seed, files) -> dict:
    return {
        "kind": kind,
        "label": label,
        "synthetic": kind == "degraded",
        "seed": seed,
        "room": _room_record(sc),
        "sources": [list(p) for p in sc.sources],
        "receivers": [list(p) for p in sc.receivers],
        "scenario": sc.doc,
        "files": files,
    }


def _write_set(out: Path, matrix: TransferMatrix) -> list[dict]:
    files = []
    for j in range(matrix.M):
        for i in range(matrix.L):
            name = f"ir_s{i}_r{j}.wav"
            write_wav(out / name, matrix[j, i])
            files.append({"source": i, "receiver": j, "file": name})
    return files


def load_set(path) -> tuple[TransferMatrix, dict, Path]:
    """Read a simulated or degraded set back into an M x L matrix."""
    doc, base = read_manifest(path)
    if doc["kind"] not in ("simulation", "degraded"):
        raise ManifestError(f"{base}: expected a response set, found {doc['kind']!r}")
    m, l = len(doc["receivers"]), len(doc["sources"])
    grid = [[None] * l for _ in range(m)]
    for entry in doc["files"]:
        grid[entry["receiver"]][entry["source"]] = read_wav(base / entry["file"])
    if any(ir is None for row in grid for ir in row):
        raise ManifestError(f"{base}: manifest does not list all {m}x{l} responses")
    return TransferMatrix.from_entries(grid), doc, base


def load_filters(path) -> tuple[InverseFilterSet, dict, Path]:
    doc, base = read_manifest(path)
    if doc["kind"] != "filters":
        raise ManifestError(f"{base}: expected a filter set, found {doc['kind']!r}")
    l, m = doc["L"], doc["M"]
    grid = [[None] * m for _ in range(l)]
    ratios = np.zeros((l, m))
    for entry in doc["files"]:
        i, j = entry["source"], entry["control_point"]
        grid[i][j] = read_wav(base / entry["file"])
        ratios[i, j] = entry["wraparound_energy_ratio"]
    if any(h is None for row in grid for h in row):
        raise ManifestError(f"{base}: manifest does not list all {l}x{m} filters")
    mat = TransferMatrix.from_entries(grid)
    sc = ScenarioConfig.from_dict(doc["scenario"])
    filters = InverseFilterSet(mat.data, mat.sample_rate, sc.inversion, doc["inversion"]["delay_samples"], ratios)
    return filters, doc, base


def cmd_simulate(args) -> int:
    sc = ScenarioConfig.load(args.config, args.set)
    out = _out_dir(args.out)
    files = _write_set(out, simulate_set(sc))
    write_manifest(out, _set_manifest("simulation", CLEAN_LABEL, sc, args.seed, files))
    print(f"wrote {len(files)} responses to {out}")
    return EXIT_OK


def cmd_degrade(args) -> int:
    doc, base = read_manifest(args.manifest)
    if doc["kind"] != "simulation":
        raise ManifestError(f"{base}: degrade needs a clean simulation set, found {doc['kind']!r}")
    sc = ScenarioConfig.from_dict(doc["scenario"], args.set)
    out = _out_dir(args.out)
    if sc.degradation.enabled:
        files = _write_set(out, degrade_set(sc))
        label = SYNTHETIC_LABEL
    else:
        files = []
        for entry in doc["files"]:
            if Path(base / entry["file"]).resolve() != Path(out / entry["file"]).resolve():
                shutil.copyfile(base / entry["file"], out / entry["file"])
            files.append(dict(entry))
        label = SYNTHETIC_LABEL + "; degradation disabled, copy of the clean set"
    manifest = _set_manifest("degraded", label, sc, args.seed, files)
    manifest["parent"] = os.path.relpath(base, out)
    write_manifest(out, manifest)
    print(f"wrote {len(files)} responses to {out} ({label})")
    return EXIT_OK


def cmd_invert(args) -> int:
    model, doc, base = load_set(args.manifest)
    sc = ScenarioConfig.from_dict(doc["scenario"], args.set)
    filters = invert(model, sc.inversion)
    out = _out_dir(args.out)
    files = []
    for i in range(filters.L):
        for j in range(filters.M):
            name = f"h_s{i}_r{j}.wav"
            write_wav(out / name, filters[i, j])
            files.append(
                {
                    "source": i,
                    "control_point": j,
                    "file": name,
                    "wraparound_energy_ratio": float(filters.wraparound_energy_ratio[i, j]),
                }
            )
    inv = sc.inversion
    manifest = {
        "kind": "filters",
        "label": f"inverse filters designed from: {doc.get('label', '')}",
        "synthetic": bool(doc.get("synthetic", False)),
        "seed": args.seed,
        "L": filters.L,
        "M": filters.M,
        "model": os.path.relpath(base, out),
        "inversion": {
            "beta": inv.beta,
            "modeling_delay": inv.modeling_delay,
            "delay_samples": filters.delay_samples,
            "delay_seconds_rounded": filters.delay_seconds,
            "fft_length": filters.length,
            "window_tau": inv.window_tau,
        },
        "scenario": sc.doc,
        "files": files,
    }
    write_manifest(out, manifest)
    worst = float(np.max(filters.wraparound_energy_ratio))
    print(f"wrote {len(files)} filters to {out}; worst wraparound energy ratio {worst:.3g}")
    return EXIT_OK


def cmd_apply(args) -> int:
    filters, _, _ = load_filters(args.filters)
    plant, _, _ = load_set(args.plant)
    if args.input:
        inputs = [read_wav(p) for p in args.input]
    else:
        inputs = [ImpulseResponse([1.0], plant.sample_rate) for _ in range(plant.M)]
    outputs = apply(filters, plant, inputs)
    out = _out_dir(args.out)
    files = []
    for k, y in enumerate(outputs):
        name = f"y_r{k}.wav"
        write_wav(out / name, y)
        files.append({"control_point": k, "file": name})
    write_manifest(
        out,
        {
            "kind": "output",
            "label": "reproduced control-point signals",
            "seed": args.seed,
            "filters": os.path.relpath(Path(args.filters), out),
            "plant": os.path.relpath(Path(args.plant), out),
            "scenario": {},
            "files": files,
        },
    )
    print(f"wrote {len(files)} outputs to {out}")
    return EXIT_OK


def write_report(path, reports: list[EvalReport], plant_label: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EvalReport.CSV_COLUMNS + ("plant",))
        for r in reports:
            w.writerow([_fmt(v) for v in r.csv_row()] + [plant_label])


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def cmd_evaluate(args) -> int:
    plant, plant_doc, _ = load_set(args.plant)
    filters, filt_doc, filt_base = load_filters(args.filters)
    sc = ScenarioConfig.from_dict(filt_doc["scenario"], args.set)
    cfg = EvalConfig(sc.eval.t_min, sc.eval.early_window_T, filters.delay_seconds, sc.eval.mse_interval)
    model = None
    model_dir = (filt_base / filt_doc.get("model", "")).resolve()
    if (model_dir / "manifest.json").exists():
        model, _, _ = load_set(model_dir)
    reports = evaluate_set(filters, plant, cfg, model)
    out = _out_dir(args.out)
    label = SYNTHETIC_LABEL if plant_doc.get("synthetic") else plant_doc.get("label", CLEAN_LABEL)
    write_report(out / REPORT_NAME, reports, label)
    if model is not None:
        with open(out / MSE_NAME, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("control_point", "start_sample", "mse"))
            for r in reports:
                for k, e in r.mse_curve:
                    w.writerow((r.control_point, int(k), repr(float(e))))
    for r in reports:
        print(f"control point {r.control_point}: DR(inf) {r.dr_total:.2f} dB, DR(T) {r.dr_early:.2f} dB, SNR {r.snr:.2f} dB")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = ScenarioConfig.load(args.config, args.set)
    rows = sweep(sc, args.param, args.values)
    out = _out_dir(args.out)
    label = SYNTHETIC_LABEL if sc.degradation.enabled else CLEAN_LABEL
    with open(out / SWEEP_NAME, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS + ("plant",))
        for row in rows:
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]] + [label])
    print(f"wrote {len(rows)} rows to {out / SWEEP_NAME}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config entry, e.g. inversion.beta=0.05")
    common.add_argument("--seed", type=int, default=None, help="recorded in manifests; the pipeline itself draws no random numbers")

    parser = argparse.ArgumentParser(prog="roominv", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="image-source responses for every source/receiver pair")
    p.add_argument("--config", help="scenario JSON (defaults to the built-in test cube)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("degrade", parents=[common], help="synthetic 'measured' proxy from a simulated set")
    p.add_argument("manifest", help="simulation directory or manifest file")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("invert", parents=[common], help="regularized inverse filters for a response set")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("apply", parents=[common], help="drive a plant with a filter set")
    p.add_argument("filters")
    p.add_argument("plant")
    p.add_argument("--input", action="append", help="desired signal per control point (default: impulses)")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("evaluate", parents=[common], help="dereverberation metrics per control point")
    p.add_argument("plant")
    p.add_argument("filters")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="DR against tau, beta or modeled abar")
    p.add_argument("--config")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, nargs="+", type=float)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RoomInvError, OSError, ValueError) as exc:
        print(f"roominv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
