"""Command-line front end: spectra, roots, eigenstates, asymptotics, self-checks.

Emits plot-ready CSV for level curves and structured JSON for everything
else.  Every output file embeds a reproducibility envelope (tool version,
the fully resolved configuration, warnings); identical configurations yield
byte-identical files regardless of ``IONJCM_THREADS``.  Exit codes:
0 success, 1 usage error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import (
    Branch,
    build_ion_eigenstate,
    det_M,
    det_M_scale,
    find_roots,
    map_to_jcm,
)
from .errors import IonJcmError, NotAtRoot, OmegaZero
from .fock import FockBasis
from .model import IonParams, build_T, build_h_jcm_driven
from .spectrum import (
    ScanGrid,
    asymptotic_convergence,
    basis_for_scan,
    detect_events,
    scan_spectrum,
    thread_count,
)
from .verify import run_all

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3

RESIDUAL_TOL = 1e-8


def _fmt(x: float) -> str:
    """Fixed float formatting: 17 significant digits, locale-free."""
    return format(float(x), ".17g")


def _to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: lexicographic keys, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_to_json(obj[k], indent + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    return json.dumps(str(obj))


def _write_text(path: str, text: str) -> None:
    Path(path).write_bytes(text.encode("utf-8"))


def _envelope_lines(config: dict, warnings: list[str]) -> list[str]:
    lines = [f"# ionjcm {__version__}"]
    compact = json.dumps(
        {k: (_fmt(v) if isinstance(v, float) else v) for k, v in sorted(config.items())},
        sort_keys=True,
    )
    lines.append(f"# config: {compact}")
    for w in warnings:
        lines.append(f"# warning: {w}")
    return lines


def _meta(config: dict, warnings: list[str]) -> dict:
    return {"version": __version__, "config": config, "warnings": list(warnings)}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_DEFAULTS: dict[str, dict] = {
    "spectrum": {
        "nu": 1.0, "delta": 0.0, "omega": 0.5, "eta_min": 0.0, "eta_max": 4.0,
        "steps": 400, "levels": 10, "dim": 120, "buffer": 40,
        "out": "spectrum.csv", "format": "csv",
    },
    "roots": {
        "nu": 1.0, "delta": 0.0, "omega": 0.5, "eta": 0.0, "m": 0,
        "branch": "plus", "solve_for": "eta2", "range": [0.0, 8.0],
        "grid_points": 512, "out": "roots.json", "format": "json",
    },
    "ansatz": {
        "nu": 1.0, "delta": 0.0, "omega": 0.5, "eta": 0.0, "m": 0,
        "branch": "plus", "dim": 120, "buffer": 40, "emit_state": False,
        "out": "ansatz.json", "format": "json",
    },
    "asymptotics": {
        "nu": 1.0, "delta": 0.0, "omega": 0.5, "eta_list": "1,2,3,4",
        "levels": 8, "dim": 0, "buffer": 0,
        "out": "asymptotics.json", "format": "json",
    },
    "verify": {"quick": False, "corrupt_t": False, "out": "", "format": "json"},
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="ionjcm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ionjcm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sup = argparse.SUPPRESS

    def add_common(p, params=True, trunc=True):
        p.add_argument("--config", default=None, help="JSON file of key-value defaults")
        p.add_argument("--out", default=sup)
        p.add_argument("--format", choices=("csv", "json"), default=sup)
        if params:
            p.add_argument("--nu", type=float, default=sup)
            p.add_argument("--delta", type=float, default=sup)
            p.add_argument("--omega", type=float, default=sup)
        if trunc:
            p.add_argument(
                "--dim", type=int, default=sup,
                help="working truncation (scan commands grow it to fit the range)",
            )
            p.add_argument("--buffer", type=int, default=sup)

    p = sub.add_parser("spectrum", help="level curves over a Lamb-Dicke grid, plus events")
    add_common(p)
    p.add_argument("--eta-min", dest="eta_min", type=float, default=sup)
    p.add_argument("--eta-max", dest="eta_max", type=float, default=sup)
    p.add_argument("--steps", type=int, default=sup)
    p.add_argument("--levels", type=int, default=sup)

    p = sub.add_parser("roots", help="compatibility-condition roots for one ansatz order")
    add_common(p, trunc=False)
    p.add_argument("--m", type=int, default=sup)
    p.add_argument("--branch", choices=("plus", "minus"), default=sup)
    p.add_argument("--solve-for", dest="solve_for", choices=("eta2", "omega2", "delta"), default=sup)
    p.add_argument("--range", nargs=2, type=float, default=sup, metavar=("LO", "HI"))
    p.add_argument("--eta", type=float, default=sup)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=sup)

    p = sub.add_parser("ansatz", help="build and verify one exact eigenstate")
    add_common(p)
    p.add_argument("--m", type=int, default=sup)
    p.add_argument("--branch", choices=("plus", "minus"), default=sup)
    p.add_argument("--eta", type=float, default=sup)
    p.add_argument("--emit-state", dest="emit_state", action="store_true", default=sup)

    p = sub.add_parser("asymptotics", help="convergence to the large-eta level structure")
    add_common(p)
    p.add_argument("--eta-list", dest="eta_list", default=sup)
    p.add_argument("--levels", type=int, default=sup)

    p = sub.add_parser("verify", help="run the built-in verification suites")
    add_common(p, params=False, trunc=False)
    p.add_argument("--quick", action="store_true", default=sup)
    p.add_argument(
        "--corrupt-t", dest="corrupt_t", action="store_true", default=sup,
        help="negate one block of the transform (test-only negative control)",
    )

    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    """Precedence: built-in defaults < config file < explicit flags."""
    cmd = args.command
    merged = dict(_DEFAULTS[cmd])
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        with open(cfg_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = sorted(set(file_cfg) - set(merged))
        if unknown:
            raise ValueError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
        merged.update(file_cfg)
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        merged[key] = val
    merged["command"] = cmd
    return merged


def _ion_params(cfg: dict, eta: float | None = None) -> IonParams:
    return IonParams(
        nu=float(cfg["nu"]),
        delta=float(cfg["delta"]),
        omega=float(cfg["omega"]),
        eta=float(cfg.get("eta", 0.0) if eta is None else eta),
    )


def cmd_spectrum(cfg: dict) -> int:
    if cfg["steps"] < 2 or cfg["levels"] < 1 or cfg["eta_min"] >= cfg["eta_max"]:
        raise ValueError("need steps >= 2, levels >= 1 and eta_min < eta_max")
    grid = ScanGrid("eta", np.linspace(cfg["eta_min"], cfg["eta_max"], int(cfg["steps"])))
    auto = basis_for_scan(cfg["eta_max"])
    dim = max(int(cfg["dim"]), auto.dim)
    buffer = max(int(cfg["buffer"]), auto.buffer)
    basis = FockBasis(dim, buffer)
    fixed = _ion_params(cfg, eta=0.0)

    scan = scan_spectrum(fixed, grid, int(cfg["levels"]), basis)
    events = detect_events(scan, basis)
    warnings = list(scan.warnings)

    g, n_levels = scan.levels.shape
    rows = []
    for gi in range(g):
        inverse = np.empty(n_levels, dtype=int)
        inverse[scan.track_ids[gi]] = np.arange(n_levels)
        for i in range(n_levels):
            rows.append((float(grid.values[gi]), i, int(inverse[i]), float(scan.levels[gi, i])))

    if cfg["format"] == "csv":
        lines = _envelope_lines(cfg, warnings)
        lines.append("eta,level_index,tracked_id,energy")
        for eta, i, tid, energy in rows:
            lines.append(f"{_fmt(eta)},{i},{tid},{_fmt(energy)}")
        _write_text(cfg["out"], "\n".join(lines) + "\n")
    else:
        doc = {
            "meta": _meta(cfg, warnings),
            "rows": [
                {"eta": eta, "level_index": i, "tracked_id": tid, "energy": energy}
                for eta, i, tid, energy in rows
            ],
        }
        _write_text(cfg["out"], _to_json(doc) + "\n")

    events_doc = {
        "meta": _meta(cfg, warnings),
        "events": [
            {
                "location": ev.location,
                "energy": ev.energy,
                "gap": ev.gap,
                "classification": ev.classification,
                "line_index": ev.line_index,
                "line_value": ev.line_value,
                "pair": ev.pair,
            }
            for ev in events
        ],
    }
    _write_text(str(Path(cfg["out"]).with_suffix("")) + ".events.json", _to_json(events_doc) + "\n")
    return EXIT_OK


def cmd_roots(cfg: dict) -> int:
    branch = Branch(cfg["branch"])
    fixed = _ion_params(cfg)
    lo, hi = (float(v) for v in cfg["range"])
    search = find_roots(
        int(cfg["m"]), branch, cfg["solve_for"], lo, hi, fixed, grid_points=int(cfg["grid_points"])
    )
    entries = [
        {
            "m": int(cfg["m"]),
            "branch": branch.value,
            "solve_for": cfg["solve_for"],
            "root": rec.value,
            "det_residual": rec.det_residual,
            "closed_form_match": rec.closed_form_match,
            "double_root_flag": False,
        }
        for rec in search.roots
    ]
    entries.extend(
        {
            "m": int(cfg["m"]),
            "branch": branch.value,
            "solve_for": cfg["solve_for"],
            "root": cand,
            "det_residual": None,
            "closed_form_match": None,
            "double_root_flag": True,
        }
        for cand in search.double_root_candidates
    )
    doc = {"meta": _meta(cfg, []), "roots": entries}
    _write_text(cfg["out"], _to_json(doc) + "\n")
    return EXIT_OK


def _pairs(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec)]


def cmd_ansatz(cfg: dict) -> int:
    p = _ion_params(cfg)
    branch = Branch(cfg["branch"])
    m = int(cfg["m"])
    basis = FockBasis(int(cfg["dim"]), int(cfg["buffer"]))
    try:
        sol, psi_ion = build_ion_eigenstate(m, branch, p, basis)
    except (NotAtRoot, OmegaZero) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION

    psi_jcm = map_to_jcm(sol, basis)
    h_jcm = build_h_jcm_driven(p, basis).matrix
    residual_jcm = float(np.linalg.norm(h_jcm @ psi_jcm - sol.energy * psi_jcm) / p.nu)
    overlap_t = float(abs(np.vdot(psi_jcm, build_T(p, basis).matrix @ psi_ion)))
    if sol.residual > RESIDUAL_TOL or residual_jcm > RESIDUAL_TOL:
        print(
            f"verification failure: residuals {sol.residual:.3e} (ion), "
            f"{residual_jcm:.3e} (jcm) exceed {RESIDUAL_TOL:.0e}",
            file=sys.stderr,
        )
        return EXIT_VERIFICATION

    doc = {
        "meta": _meta(cfg, []),
        "m": m,
        "branch": branch.value,
        "energy": sol.energy,
        "det_residual": abs(det_M(m, p, branch)) / det_M_scale(m, p, branch),
        "residual_ion": sol.residual,
        "residual_jcm": residual_jcm,
        "transform_overlap": overlap_t,
        "d": _pairs(sol.d),
        "c": _pairs(sol.c),
    }
    if cfg["emit_state"]:
        doc["state_ion"] = _pairs(psi_ion)
        doc["state_jcm"] = _pairs(psi_jcm)
    _write_text(cfg["out"], _to_json(doc) + "\n")
    return EXIT_OK


def cmd_asymptotics(cfg: dict) -> int:
    etas = [float(tok) for tok in str(cfg["eta_list"]).split(",") if tok.strip()]
    if len(etas) < 2:
        raise ValueError("eta-list needs at least two comma-separated values")
    auto = basis_for_scan(max(etas))
    dim = max(int(cfg["dim"]), auto.dim)
    buffer = max(int(cfg["buffer"]), auto.buffer)
    basis = FockBasis(dim, buffer)
    p = _ion_params(cfg, eta=etas[0])
    report = asymptotic_convergence(p, etas, int(cfg["levels"]), basis)
    doc = {
        "meta": _meta(cfg, []),
        "etas": list(report.etas),
        "max_distance": list(report.max_distance),
        "min_overlap": list(report.min_overlap),
        "distances": [[float(x) for x in row] for row in report.distances],
        "overlaps": [[float(x) for x in row] for row in report.overlaps],
        "distance_monotone": report.distance_monotone,
        "overlap_monotone": report.overlap_monotone,
    }
    _write_text(cfg["out"], _to_json(doc) + "\n")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    results = run_all(quick=bool(cfg["quick"]), corrupt_t=bool(cfg["corrupt_t"]))
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
    all_ok = all(r.passed for r in results)
    print(f"{'overall':<{width}}  {'PASS' if all_ok else 'FAIL'}")
    if cfg["out"]:
        doc = {
            "meta": _meta(cfg, []),
            "suites": [
                {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
            ],
            "passed": all_ok,
        }
        _write_text(cfg["out"], _to_json(doc) + "\n")
    return EXIT_OK if all_ok else EXIT_VERIFICATION


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "roots": cmd_roots,
    "ansatz": cmd_ansatz,
    "asymptotics": cmd_asymptotics,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        cfg = _resolve_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"ionjcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        code = _COMMANDS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"ionjcm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IonJcmError as exc:
        print(f"ionjcm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    # timing goes to stderr so output files stay byte-identical across runs
    print(
        f"ionjcm {args.command}: {time.monotonic() - started:.2f} s "
        f"({thread_count()} worker threads)",
        file=sys.stderr,
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
