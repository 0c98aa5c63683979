"""Command-line front end.

Subcommands cover single pipeline stages (pump, qplate, spdc, herald,
polarimetry, topology), whole runs (scenario), and figure suites (suite).
Every invocation that produces artifacts writes them under one directory
together with a manifest.  Exit codes: 0 success, 2 usage, 3 invalid config,
4 runtime failure; failures print a single machine-parsable line on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Sequence, Union

from . import fileio
from .fields import VectorField
from .kets import PolKet, project_idler_oam0, spdc_state
from .polarimetry import EllipseMap, StokesMap, ellipse_map, stokes_of_field
from .scenarios import (FIGURE_IDS, ScenarioConfig, run_figure_suite,
                        run_scenario)
from .topology import find_singularities, s3_lobe_count

_SCHEMA = """\
scenario config schema (JSON object; every key optional):
  label        str, names the run and its output directory
  pump         {kind: "FP"|"VV", charge: half-integer q, phase: radians|null}
  qplate       {charge, retardance ("half-wave"|"quarter-wave"|radians),
                axis_offset, input_pol, input_ell}; replaces pump when given
  herald       "none"|"H"|"V"|"D"|"A"|"L"|"R"
  grid         {nx, ny, half_width} (waist units)
  waist        beam waist, default 1.0
  envelope     "lg"|"gaussian" per-term radial profile
  polarimeter  {angles: [rad,...]|null, n_angles: int, noise_rms, seed}
  spdc         {crystal_phase: radians, spectrum: {ell: [re, im], ...}|null}
  offset       {dx, dy (waist units, |offset|<0.5), applies_to: "signal"|"pump"}
overrides: --set key=value with dotted keys, e.g. --set offset.dx=0.1
"""


def render_preview(source: Union[VectorField, StokesMap], path: str,
                   ellipses: Optional[EllipseMap] = None, stride: int = 16) -> None:
    """Raster preview of a field or Stokes map, deterministic bytes."""
    smap = stokes_of_field(source) if isinstance(source, VectorField) else source
    em = ellipses if ellipses is not None else ellipse_map(smap)
    fileio.write_ppm(path, fileio.render_ellipse_preview(smap, em, stride))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vecherald",
        description="Heralded single-photon vector-mode simulator.",
        epilog=_SCHEMA,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (scenario schema)")
        p.add_argument("--out", help="output directory (default: "
                       "$VECHERALD_OUT_ROOT/<label> or runs/<label>)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted config override")
        p.add_argument("--threads", type=int, default=None,
                       help="cap suite-level parallelism")

    p = sub.add_parser("pump", help="synthesize a structured pump and export it",
                       epilog=_SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--kind", choices=("FP", "VV"), help="pump family")
    p.add_argument("--charge", type=float, help="plate charge q (half-integer)")
    p.add_argument("--phase", type=float, help="relative constituent phase, radians")
    common(p)

    p = sub.add_parser("qplate", help="apply a plate to a uniform input ket",
                       epilog="config must carry a qplate object;\n" + _SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--charge", type=float, help="plate charge q")
    p.add_argument("--retardance", help='"half-wave", "quarter-wave", or radians')
    p.add_argument("--axis-offset", type=float, help="axis orientation at x+, radians")
    p.add_argument("--input-pol", help="seed polarization label (default H)")
    p.add_argument("--input-ell", type=int, help="seed orbital index (default 0)")
    common(p)

    p = sub.add_parser("spdc", help="two-crystal pair state for a pump config",
                       epilog=_SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)

    p = sub.add_parser("herald", help="full heralded-field run (requires herald label)",
                       epilog=_SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)

    p = sub.add_parser("polarimetry", help="rotating-plate frames and Stokes maps",
                       epilog=_SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)

    p = sub.add_parser("topology", help="singularity analysis of a run or Stokes export",
                       epilog="either --config (runs the pipeline) or --stokes DIR\n"
                              "(analyzes exported s0..s3.txt)\n" + _SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--stokes", help="directory holding s0.txt..s3.txt")
    common(p)

    p = sub.add_parser("scenario", help="run one fully specified scenario",
                       epilog=_SCHEMA,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    common(p)

    p = sub.add_parser("suite", help="run a whole figure suite",
                       epilog="figure ids: " + ", ".join(FIGURE_IDS),
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("figure", choices=FIGURE_IDS)
    common(p)
    return parser


def _apply_overrides(doc: Dict, pairs: Sequence[str]) -> None:
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ValueError(f"override {pair!r} must look like key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value


def _load_config_doc(args) -> Dict:
    doc: Dict = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ValueError(f"config file not found: {args.config}")
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ValueError(f"config root must be a JSON object: {args.config}")
    if getattr(args, "kind", None) is not None or getattr(args, "charge", None) is not None:
        if args.command == "pump":
            pump = doc.setdefault("pump", {}) or {}
            if args.kind is not None:
                pump["kind"] = args.kind
            if args.charge is not None:
                pump["charge"] = args.charge
            if args.phase is not None:
                pump["phase"] = args.phase
            doc["pump"] = pump
    if args.command == "qplate":
        qp = doc.get("qplate") or {}
        for flag, key in (("charge", "charge"), ("retardance", "retardance"),
                          ("axis_offset", "axis_offset"), ("input_pol", "input_pol"),
                          ("input_ell", "input_ell")):
            val = getattr(args, flag, None)
            if val is not None:
                qp[key] = val
        if qp:
            if "retardance" in qp and not isinstance(qp["retardance"], str):
                try:
                    qp["retardance"] = float(qp["retardance"])
                except (TypeError, ValueError):
                    pass
            doc["qplate"] = qp
        if "qplate" not in doc:
            raise ValueError("qplate subcommand needs plate parameters "
                             "(--charge/--retardance or a config qplate object)")
    _apply_overrides(doc, args.overrides)
    return doc


def _default_label(args, doc: Dict) -> str:
    if doc.get("label"):
        return str(doc["label"])
    return args.command


def _resolve_out(args, label: str) -> str:
    if args.out:
        return args.out
    root = os.environ.get("VECHERALD_OUT_ROOT", "runs")
    return os.path.join(root, label)


def _run_topology_on_export(stokes_dir: str, out_dir: str) -> None:
    smap = fileio.read_stokes(stokes_dir)
    os.makedirs(out_dir, exist_ok=True)
    reports = find_singularities(smap)
    fileio.write_singularity_report(os.path.join(out_dir, "singularities.json"),
                                    reports)
    lobes = s3_lobe_count(smap) if smap.grid.half_width > 1.2 else 0
    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump({"n_singularities": len(reports), "s3_lobes": lobes},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
    fileio.write_manifest(out_dir, {"stokes_dir": stokes_dir},
                          ["singularities.json", "metrics.json"])


def _run_spdc_export(cfg: ScenarioConfig, out_dir: str) -> None:
    from .scenarios import _pump_ket
    os.makedirs(out_dir, exist_ok=True)
    pump = _pump_ket(cfg)
    pairs = project_idler_oam0(spdc_state(pump, cfg.spdc_config()))
    fileio.write_ket(os.path.join(out_dir, "pump_ket.json"), pump)
    fileio.write_biphoton(os.path.join(out_dir, "biphoton_ket.json"), pairs)
    fileio.write_manifest(out_dir, cfg.to_dict(),
                          ["pump_ket.json", "biphoton_ket.json"])


def parse_and_dispatch(argv: Sequence[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "suite":
            label = args.figure
            out_dir = _resolve_out(args, label)
            cfg = None
        elif args.command == "topology" and args.stokes:
            out_dir = _resolve_out(args, "topology")
            cfg = None
        else:
            doc = _load_config_doc(args)
            if args.command in ("pump", "qplate", "spdc"):
                doc.setdefault("herald", "none")
            if args.command == "herald" and doc.get("herald", "none") == "none":
                raise ValueError("herald subcommand needs a herald label in the config")
            cfg = ScenarioConfig.from_dict(doc)
            out_dir = _resolve_out(args, _default_label(args, doc))
    except ValueError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 3
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 3

    try:
        if args.command == "suite":
            run_figure_suite(args.figure, out_dir, workers=args.threads)
        elif args.command == "topology" and args.stokes:
            _run_topology_on_export(args.stokes, out_dir)
        elif args.command == "spdc":
            _run_spdc_export(cfg, out_dir)
        else:
            run_scenario(cfg, out_dir)
    except Exception as exc:  # noqa: BLE001 - boundary: map to exit code 4
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 4
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    return parse_and_dispatch(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
