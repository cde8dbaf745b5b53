"""Command-line front end.

Subcommands ``visibility``, ``witness``, ``bell`` and ``check``.  Each takes an
optional JSON config file (``--config``) and per-key flags that override it.
Curves are written as CSV, reports as JSON; both start with a metadata block
holding the tool version, the resolved configuration, the seed and the
tolerances in force.

Exit codes: 0 success, 2 configuration error, 3 numeric contract violation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .cloners import ClonerSpec
from .config import SCHEMAS, ConfigError, load_file, parse_flag_value, resolve
from .detection import NEGATIVE_TOL, DetectorSpec
from .errors import InvalidArgument, MacroQubitError
from .micro_macro import CHI_BRACKET, RESIDUAL_TOL, loss_before_threshold, trace_threshold_curve
from .micro_micro import (
    CHSH_SETTINGS,
    P_FLOOR,
    chsh_assess,
    entanglement_bound,
    sample_events,
    visibility,
)

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
# execution details that must not change the output bytes
_NOT_ECHOED = ("output", "workers")


def _num(x):
    """Shortest round-trip text for a float; ``null`` for missing values."""
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _meta(command, cfg, tolerances):
    return {
        "tool": "macroqubit",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in cfg.items() if k not in _NOT_ECHOED},
        "seed": cfg["seed"],
        "tolerances": tolerances,
    }


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(meta, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(meta), sort_keys=True, separators=(",", ":")) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _map(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --------------------------------------------------------------------------
# commands


def cmd_visibility(cfg: dict) -> tuple:
    det = DetectorSpec(cfg["eta"], cfg["theta"])
    kind = cfg["kind"]
    strengths = [float(x) for x in np.linspace(cfg["start"], cfg["stop"], cfg["points"])]
    points = _map(lambda s: visibility(ClonerSpec.with_strength(kind, s), det), strengths, cfg["workers"])
    bound = entanglement_bound(kind)
    label = "alpha2" if kind == "measure-prepare" else "g"
    header = [label, "mean_NA", "V", "P_conclusive", "bound"]
    rows = [[s, p.mean_NA, p.V, p.P_conclusive, bound] for s, p in zip(strengths, points)]
    meta = _meta("visibility", cfg, {"p_floor": P_FLOOR, "negative_probability": NEGATIVE_TOL})
    if cfg["format"] == "json":
        return _dump_json({"meta": meta, "columns": header, "rows": rows}), EXIT_OK
    return _csv(meta, header, rows), EXIT_OK


def cmd_witness(cfg: dict) -> tuple:
    tol = {"threshold_residual": RESIDUAL_TOL, "chi_bracket": list(CHI_BRACKET)}
    meta = _meta("witness", cfg, tol)
    if cfg["mode"] == "loss-before":
        header = ["p", "n0_threshold"]
        # p = 1 gives an infinite threshold: "inf" in CSV, null in JSON
        rows = [[p, loss_before_threshold(p)] for p in cfg["p_values"]]
    else:
        header = ["kind", "ratio", "N_at_W0", "N_at_W1"]
        rows = []
        for kind in cfg["kinds"]:
            w0 = trace_threshold_curve(kind, 0, cfg["ratios"], workers=cfg["workers"])
            w1 = trace_threshold_curve(kind, 1, cfg["ratios"], workers=cfg["workers"])
            rows += [[kind, r, n0, n1] for (r, n0), (_, n1) in zip(w0, w1)]
    if cfg["format"] == "json":
        return _dump_json({"meta": meta, "columns": header, "rows": rows}), EXIT_OK
    return _csv(meta, header, rows), EXIT_OK


def cmd_bell(cfg: dict) -> tuple:
    spec = ClonerSpec.with_strength(cfg["kind"], cfg["strength"])
    det = DetectorSpec(cfg["eta"], cfg["theta"])
    vp = visibility(spec, det)
    rep = chsh_assess(vp.V, vp.P_conclusive)
    analytic = {
        "mean_NA": vp.mean_NA,
        "V": rep.V,
        "P_conclusive": rep.P_conclusive,
        "PV": rep.PV,
        "S_postselected": rep.S_postselected,
        "S_raw": rep.S_raw,
        "postselected_violation": rep.postselected_violation,
        "loophole_free_violation": rep.loophole_free_violation,
    }
    empirical = None
    if cfg["count"] > 0:
        tally = sample_events(spec, det, CHSH_SETTINGS, cfg["count"], cfg["seed"], cfg["workers"])
        settings = []
        for i, (a, b) in enumerate(CHSH_SETTINGS):
            v = tally.visibility(i)
            se = tally.visibility_stderr(i)
            settings.append({
                "alpha": a,
                "beta": b,
                "conclusive": tally.conclusive(i),
                "correlation_postselected": tally.correlation(i, True),
                "correlation_raw": tally.correlation(i, False),
                "visibility": v,
                "visibility_stderr": se,
                "z_score": (v - vp.V) / se if se and math.isfinite(se) and se > 0 else None,
                "counts": tally.counts[i].tolist(),
            })
        s_post, s_raw = tally.chsh(True), tally.chsh(False)
        empirical = {
            "events_per_setting": cfg["count"],
            "settings": settings,
            "S_postselected": s_post,
            "S_raw": s_raw,
            "postselected_violation": bool(s_post > 2),
            "raw_violation": bool(s_raw > 2),
        }
    meta = _meta("bell", cfg, {"p_floor": P_FLOOR, "chsh_visibility": 1 / math.sqrt(2)})
    return _dump_json({"meta": meta, "analytic": analytic, "empirical": empirical}), EXIT_OK


def cmd_check(cfg: dict) -> tuple:
    from .checks import CHECKS, run_checks

    rows = run_checks(cfg["only"], cfg["inject"])
    for r in rows:
        status = "PASS" if r["passed"] else "FAIL"
        print(f"{status} {r['name']}: residual {r['residual']:.3e} (tolerance {r['tolerance']:.1e})", file=sys.stderr)
    ok = all(r["passed"] for r in rows)
    meta = _meta("check", cfg, {c.name: c.tolerance for c in CHECKS})
    text = _dump_json({"meta": meta, "checks": rows, "all_passed": ok,
                       "failed": [r["name"] for r in rows if not r["passed"]]})
    return text, (EXIT_OK if ok else EXIT_NUMERIC)


COMMANDS = {"visibility": cmd_visibility, "witness": cmd_witness, "bell": cmd_bell, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macroqubit", description="Amplified-photon entanglement simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        for key, field in schema.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=f"set_{key}", metavar=field.kind.upper(), default=None, help=field.help or None)
    return parser


def _overrides(command, ns) -> dict:
    out = {}
    for key, field in SCHEMAS[command].items():
        raw = getattr(ns, f"set_{key}")
        if raw is None:
            continue
        out[key] = raw if field.kind in ("str", "path") else parse_flag_value(raw)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        file_values = load_file(ns.config) if ns.config else {}
        cfg = resolve(ns.command, file_values, _overrides(ns.command, ns))
    except (ConfigError, InvalidArgument) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, code = COMMANDS[ns.command](cfg)
    except InvalidArgument as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MacroQubitError, ArithmeticError) as exc:
        print(f"numeric contract violated ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        _emit(text, cfg["output"])
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
