"""Command-line front end: derive, verify, simulate, replay.

Exit codes: 0 pass, 1 quantitative failure, 2 usage or config error.
Every output file embeds the run manifest (JSON key ``manifest``; a
``# manifest:`` line in CSV and text files).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# manifest and output ---------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    parameters: dict
    version: str = __version__
    input_hashes: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(payload: dict, manifest: RunManifest) -> str:
    doc = dict(payload)
    doc["manifest"] = manifest.to_dict()
    return json.dumps(_finite(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _finite(obj):
    """JSON has no NaN; write non-finite floats as strings."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class Outputs:
    """Collects rendered files, then writes them all with the final manifest."""

    def __init__(self, manifest: RunManifest):
        self.manifest = manifest
        self.files: List[Tuple[str, Callable[[RunManifest], str]]] = []

    def add(self, name: str, render: Callable[[RunManifest], str]) -> None:
        self.files.append((name, render))
        self.manifest.outputs.append(name)

    def write(self, out: Path) -> List[Path]:
        paths = []
        for name, render in self.files:
            p = out / name
            write_atomic(p, render(self.manifest))
            paths.append(p)
        return paths


# config ------------------------------------------------------------------------------

def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _float_list(s: str) -> List[float]:
    """Comma-separated floats; 'a..b' expands to a, a+1, ..., b."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if ".." in part:
            a, b = (_float(x) for x in part.split(".."))
            if b < a or (b - a) != int(b - a):
                raise ValueError(f"bad range {part!r}")
            out.extend(a + i for i in range(int(b - a) + 1))
        else:
            out.append(_float(part))
    return out


def _str_list(s: str) -> List[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _int(s: str) -> int:
    return int(s)


PHYSICS = {"m": (_float, 1.0), "hbar": (_float, 1.0), "c": (_float, 10.0), "V": (_float, 0.0),
           "length": (_float, 32 * math.pi), "points": (_int, 1024)}

SCHEMAS = {
    "boost": dict(PHYSICS, eq=(_str_list, ["schrodinger"]), v=(_float_list, [1.0]), t=(_float, 1.0),
                  sigma0=(_float, 1.0), tolerance=(_float, 1e-6), residual_tolerance=(_float, 1e-8),
                  phase_tolerance=(_float, 1e-10)),
    "dispersion": dict(PHYSICS, eq=(_str_list, ["schrodinger", "klein_gordon", "lcse"]),
                       k=(_float_list, [float(k) for k in range(9)]), samples=(_int, 8),
                       tolerance=(_float, 1e-8)),
    "nr-limit": dict(PHYSICS, c=(_float_list, [10.0, 20.0, 40.0, 80.0]), sigma0=(_float, 2.0), k0=(_float, 1.0),
                     t=(_float, 1.0), slope=(_float, -2.0), tolerance=(_float, 0.2)),
    "squared-op": dict(PHYSICS, sigma0=(_float, 1.0), k0=(_float, 0.0), times=(_float_list, [0, 0.5, 1, 1.5, 2]),
                       h=(_float, 2e-3), plane_k=(_float, 1.0), tolerance=(_float, 1e-8),
                       mismatch_tolerance=(_float, 1e-10)),
    "simulate": dict(PHYSICS, eq=(_str_list, ["schrodinger"]), t=(_float, 1.0), sigma0=(_float, 1.0),
                     k0=(_float, 0.0), x0=(_float, 0.0), snapshots=(_int, 1)),
}


def parse_config(text: str, schema: dict) -> dict:
    """Line-oriented ``key = value``; '#' starts a comment."""
    values = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {no}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise UsageError(f"config line {no}: unknown key {key!r}")
        if key in values:
            raise UsageError(f"config line {no}: duplicate key {key!r}")
        try:
            values[key] = schema[key][0](val)
        except ValueError as e:
            raise UsageError(f"config line {no}: bad value for {key!r}: {e}") from None
    return {k: values.get(k, default) for k, (_, default) in schema.items()}


def _read_config(path: Optional[str]) -> Tuple[str, Dict[str, str]]:
    if path is None:
        return "", {}
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from None
    return data.decode("utf-8"), {Path(path).name: hashlib.sha256(data).hexdigest()}


# commands ------------------------------------------------------------------------------

def run_derive(params: dict, manifest: RunManifest) -> Tuple[int, Outputs, List[str]]:
    from .derivations import derive
    sym, order = params["symmetry"], params["order"]
    try:
        reports = derive(sym, order)
    except ValueError as e:
        raise UsageError(str(e)) from None
    outs = Outputs(manifest)
    suffixes = ["-kg", "-lcse"] if sym == "lorentz" else [""]
    for rep, suf in zip(reports, suffixes):
        stem = f"derive-{sym}-{order}{suf}"
        outs.add(stem + ".json", lambda m, r=rep: _json(r.to_dict(), m))
        outs.add(stem + ".txt", lambda m, r=rep: r.to_text() + f"# manifest: {m.line()}\n")
    failed = [f"{r.pipeline}: closed forms not reproduced" for r in reports
              if not r.reproduced or r.dangling_evidence()]
    return (EXIT_FAIL if failed else EXIT_OK), outs, failed


def _params(cfg: dict, **over):
    from .lab.grid import PhysicalParams
    kw = {k: cfg[k] for k in ("m", "hbar", "c", "V")}
    kw.update(over)
    return PhysicalParams(**kw)


def _grid(cfg: dict):
    from .lab.grid import Grid1D
    return Grid1D(cfg["length"], cfg["points"])


def _check_boost(cfg: dict) -> Tuple[List[str], List[dict]]:
    from .lab.checks import boost_check, lorentz_window
    from .lab.grid import WaveState, gaussian
    rows = []
    for eq in cfg["eq"]:
        for v in cfg["v"]:
            p = _params(cfg, v=v)
            if eq == "schrodinger":
                packet = gaussian(_grid(cfg), cfg["sigma0"])
                r = boost_check(eq, packet, p, "galilean", cfg["t"], cfg["sigma0"])
                ok = r.l2_discrepancy < cfg["tolerance"] and r.residual < cfg["residual_tolerance"]
            else:
                grid = lorentz_window(p, eq, cfg["length"], cfg["points"])
                r = boost_check(eq, WaveState(grid, np.ones(grid.points)), p, "lorentz", cfg["t"])
                ok = (r.residual < cfg["residual_tolerance"] and r.omega_error < cfg["phase_tolerance"]
                      and r.k_error < cfg["phase_tolerance"])
            rows.append(dict(r.as_row(), v=v, length=grid.length if eq != "schrodinger" else cfg["length"],
                             **{"pass": bool(ok)}))
    cols = ["eq", "boost", "v", "t", "length", "residual", "l2_discrepancy", "omega", "omega_expected",
            "omega_error", "k", "k_expected", "k_error", "pass"]
    return cols, rows


def _check_dispersion(cfg: dict) -> Tuple[List[str], List[dict]]:
    from .lab.checks import measure_dispersion
    rows = []
    for eq in cfg["eq"]:
        for r in measure_dispersion(eq, _params(cfg), cfg["k"], _grid(cfg), cfg["samples"]):
            rows.append(dict(r.as_row(), **{"pass": bool(r.error < cfg["tolerance"])}))
    return ["eq", "branch", "k", "omega_measured", "omega_analytic", "error", "pass"], rows


def _check_nr_limit(cfg: dict) -> Tuple[List[str], List[dict]]:
    from .lab.checks import nr_limit_study
    from .lab.grid import gaussian
    cs = cfg["c"]
    if len(cs) < 2 or any(b <= a for a, b in zip(cs, cs[1:])):
        raise UsageError("nr-limit needs at least two increasing values of c")
    packet = gaussian(_grid(cfg), cfg["sigma0"], cfg["k0"])
    table = nr_limit_study(cs, packet, _params(cfg, c=cs[0]), cfg["t"])
    errs = [r["error"] for r in table.rows]
    rows = [dict(r, kind="error", slope=float("nan"), **{"pass": True}) for r in table.rows]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    ok = abs(table.slope - cfg["slope"]) <= cfg["tolerance"] and decreasing
    rows.append({"kind": "fit", "c": float("nan"), "error": float("nan"), "slope": table.slope, "pass": ok})
    return ["kind", "c", "error", "slope", "pass"], rows


def _check_squared_op(cfg: dict) -> Tuple[List[str], List[dict]]:
    from .lab.checks import fourth_order_residual, square_mismatch_position_v
    from .lab.grid import WaveState, gaussian
    grid, p, tol = _grid(cfg), _params(cfg), cfg["tolerance"]
    rows = []
    packet = gaussian(grid, cfg["sigma0"], cfg["k0"])
    for r in fourth_order_residual(packet, p, cfg["times"], cfg["h"]):
        rows.append({"case": "gaussian", "t": r["t"], "value": r["residual"], "tolerance": tol,
                     "pass": r["residual"] < tol})
    mode = WaveState(grid, grid.mode(cfg["plane_k"]))
    for r in fourth_order_residual(mode, p, cfg["times"], time_derivative="spectral"):
        rows.append({"case": "plane_wave", "t": r["t"], "value": r["residual"], "tolerance": 1e-12,
                     "pass": r["residual"] < 1e-12})
    mm = square_mismatch_position_v(p, grid)
    mt = cfg["mismatch_tolerance"]
    rows.append({"case": "cos_potential_unexplained", "t": float("nan"), "value": mm["max_unexplained"],
                 "tolerance": mt, "pass": mm["max_unexplained"] < mt})
    # the gradient cross term must actually be present
    rows.append({"case": "cos_potential_cross_term", "t": float("nan"), "value": mm["max_cross_term"],
                 "tolerance": mt, "pass": mm["max_cross_term"] > mt})
    return ["case", "t", "value", "tolerance", "pass"], rows


CHECKS = {"boost": _check_boost, "dispersion": _check_dispersion, "nr-limit": _check_nr_limit,
          "squared-op": _check_squared_op}


def run_verify(params: dict, manifest: RunManifest) -> Tuple[int, Outputs, List[str]]:
    from .lab.tables import csv_text
    check, cfg = params["check"], params["config"]
    try:
        cols, rows = CHECKS[check](cfg)
    except ValueError as e:
        raise UsageError(str(e)) from None
    outs = Outputs(manifest)
    stem = f"verify-{check}"
    failing = [r for r in rows if not r["pass"]]
    outs.add(stem + ".csv", lambda m: csv_text(cols, rows, [f"manifest: {m.line()}"]))
    summary = {"check": check, "passed": not failing, "rows": len(rows), "failing": failing}
    outs.add(stem + ".json", lambda m: _json(summary, m))
    msgs = ["FAIL " + ", ".join(f"{c}={r[c]}" for c in cols) for r in failing]
    return (EXIT_FAIL if failing else EXIT_OK), outs, msgs


def run_simulate(params: dict, manifest: RunManifest) -> Tuple[int, Outputs, List[str]]:
    from .lab.evolve import EQUATIONS, evolve, particle_branch_state
    from .lab.grid import gaussian
    from .lab.tables import csv_text
    cfg = params["config"]
    if len(cfg["eq"]) != 1 or cfg["eq"][0] not in EQUATIONS:
        raise UsageError(f"simulate needs exactly one eq from {EQUATIONS}")
    eq = cfg["eq"][0]
    if cfg["snapshots"] < 1 or cfg["t"] < 0:
        raise UsageError("snapshots must be >= 1 and t >= 0")
    try:
        p = _params(cfg)
        s = gaussian(_grid(cfg), cfg["sigma0"], cfg["k0"], cfg["x0"])
        if eq != "schrodinger":
            s = particle_branch_state(eq, s, p)
        rows, norms = [], []
        times = [cfg["t"] * (i + 1) / cfg["snapshots"] for i in range(cfg["snapshots"])]
        for t in times:
            st = evolve(eq, s, p, t)
            norms.append({"t": t, "norm": st.norm})
            rows.extend({"t": t, "x": float(x), "re": float(z.real), "im": float(z.imag)}
                        for x, z in zip(st.grid.x, st.values))
    except ValueError as e:
        raise UsageError(str(e)) from None
    outs = Outputs(manifest)
    outs.add(f"simulate-{eq}.csv", lambda m: csv_text(["t", "x", "re", "im"], rows, [f"manifest: {m.line()}"]))
    outs.add(f"simulate-{eq}.json", lambda m: _json({"eq": eq, "initial_norm": s.norm, "norms": norms}, m))
    return EXIT_OK, outs, []


RUNNERS = {"derive": run_derive, "verify": run_verify, "simulate": run_simulate}


def execute(manifest: RunManifest, out: Path) -> Tuple[int, List[Path], List[str]]:
    code, outs, msgs = RUNNERS[manifest.command](manifest.parameters, manifest)
    return code, outs.write(out), msgs


def read_manifest(path: Path) -> RunManifest:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read manifest: {e}") from None
    data = None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
            data = data.get("manifest", data)
        except json.JSONDecodeError as e:
            raise UsageError(f"bad manifest JSON: {e}") from None
    else:
        for line in text.splitlines():
            if line.startswith("# manifest: "):
                data = json.loads(line[len("# manifest: "):])
    if not isinstance(data, dict) or data.get("command") not in RUNNERS:
        raise UsageError(f"no run manifest found in {path}")
    return RunManifest(data["command"], data["parameters"], data.get("version", __version__),
                       dict(data.get("input_hashes", {})), [])


# argument parsing -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavecov", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--replay", metavar="MANIFEST", help="re-run the run recorded in an output file")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--tolerance", type=float, help="override the check's main tolerance")
    common.add_argument("--seed", type=int, help="recorded; only randomized property tests use it")
    sub = ap.add_subparsers(dest="command")

    d = sub.add_parser("derive", parents=[common], help="run a symbolic derivation pipeline")
    d.add_argument("symmetry", choices=["rotation", "galilean", "lorentz"])
    d.add_argument("order", type=int, choices=[2, 3, 4])

    v = sub.add_parser("verify", parents=[common], help="run a numerical check")
    v.add_argument("check", choices=sorted(CHECKS))
    v.add_argument("config", nargs="?", help="key = value config file (defaults if omitted)")

    s = sub.add_parser("simulate", parents=[common], help="dump a raw evolution")
    s.add_argument("config", nargs="?", help="key = value config file")

    r = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    r.add_argument("manifest")
    r.add_argument("--out", help="output directory (default: <manifest dir>/replay)")
    return ap


def _manifest_from_args(args) -> RunManifest:
    base = {"tolerance": args.tolerance, "seed": args.seed}
    if args.command == "derive":
        return RunManifest("derive", dict(base, symmetry=args.symmetry, order=args.order))
    schema_name = args.check if args.command == "verify" else "simulate"
    text, hashes = _read_config(args.config)
    cfg = parse_config(text, SCHEMAS[schema_name])
    if args.tolerance is not None:
        if "tolerance" not in cfg:
            raise UsageError("--tolerance does not apply to simulate")
        cfg["tolerance"] = args.tolerance
    params = dict(base, config=cfg)
    if args.command == "verify":
        params["check"] = args.check
    return RunManifest(args.command, params, input_hashes=hashes)


def _replay(path: str, out: Optional[str]) -> int:
    src = Path(path)
    manifest = read_manifest(src)
    dest = Path(out) if out else src.parent / "replay"
    code, paths, msgs = execute(manifest, dest)
    for m in msgs:
        print(m, file=sys.stderr)
    differs = []
    for p in paths:
        orig = src.parent / p.name
        if orig.exists() and orig.resolve() != p.resolve():
            same = orig.read_bytes() == p.read_bytes()
            print(f"{p.name}: {'identical' if same else 'DIFFERS'}")
            if not same:
                differs.append(p.name)
    return EXIT_FAIL if differs else code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.replay:
            if args.command:
                raise UsageError("--replay takes no subcommand")
            return _replay(args.replay, None)
        if args.command is None:
            ap.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.command == "replay":
            return _replay(args.manifest, args.out)
        manifest = _manifest_from_args(args)
        code, paths, msgs = execute(manifest, Path(args.out))
    except UsageError as e:
        print(f"wavecov: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    for p in paths:
        print(p)
    for m in msgs:
        print(m, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
