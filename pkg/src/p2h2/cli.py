"""Command line entry point: p2h2 {verify,ladder,integrate,local-index,errata}."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import verdicts
from .symfield import ParseError, parse_number

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_POLE = 0, 1, 2, 3

DEFAULTS = {
    "format": "pretty",
    "jobs": 1,
    "system": None,
    "target": "all",
    "from_": -3,
    "to": 3,
    "a2": "0",
    "t0": "0",
    "t1": "1",
    "rtol": "1e-12",
    "atol": "1e-12",
    "max_step": "0.05",
    "samples": None,
    "timing": False,
    "check": False,
    "crosscheck": False,
}


class UsageError(Exception):
    pass


def rational(text) -> Fraction:
    try:
        return parse_number(str(text))
    except (ParseError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def number_list(text) -> list:
    return [float(rational(p)) for p in str(text).split(",") if p.strip()]


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def _tsv_cell(v) -> str:
    if isinstance(v, (dict, list)):
        return json.dumps(v, separators=(",", ":"), ensure_ascii=False)
    return str(v)


# verify ----------------------------------------------------------------

def cmd_verify(args, out) -> int:
    try:
        units = verdicts.plan(args.target, args.system)
    except verdicts.UnknownTarget as exc:
        raise UsageError(f"unknown target: {exc}") from exc
    if args.jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            groups = list(ex.map(verdicts.run_unit, units))
    else:
        groups = [verdicts.run_unit(u) for u in units]
    vs = [v for g in groups for v in g]
    passed = all(v.passed for v in vs)
    errata = []
    if args.target in ("symmetry", "all"):
        errata = verdicts.errata()
        if args.system:
            errata = [e for e in errata if e.get("system", args.system) == args.system]
    if args.format == "json":
        out.write(_dump({"command": "verify", "pass": passed,
                         "verdicts": [v.as_dict(args.timing) for v in vs], "errata": errata}) + "\n")
    elif args.format == "tsv":
        cols = ["name", "pass"] + (["seconds"] if args.timing else []) + ["payload"]
        out.write("\t".join(cols) + "\n")
        for v in vs:
            row = [v.name, "PASS" if v.passed else "FAIL"]
            if args.timing:
                row.append(f"{v.seconds:.4f}")
            row.append(_tsv_cell(v.payload))
            out.write("\t".join(row) + "\n")
    else:
        for v in vs:
            extra = f"  ({v.seconds:.3f}s)" if args.timing else ""
            out.write(f"{'PASS' if v.passed else 'FAIL'}  {v.name}{extra}\n")
            if not v.passed:
                out.write("      " + _tsv_cell(v.payload) + "\n")
        if errata:
            out.write(f"errata: {len(errata)} printed-formula mismatches (see the errata command)\n")
        out.write(f"{sum(v.passed for v in vs)}/{len(vs)} checks passed\n")
    return EXIT_OK if passed else EXIT_FAIL


# ladder ----------------------------------------------------------------

def cmd_ladder(args, out) -> int:
    from .catalog import system
    from .ladder import LadderError, ladder, verify_solution

    sid = args.system or "eq3"
    try:
        rows = ladder(sid, int(args.from_), int(args.to), check=args.check)
    except LadderError as exc:
        out.write(_dump({"command": "ladder", "error": str(exc)}) + "\n")
        return EXIT_FAIL
    vars_ = list(system(sid).vars)
    table = []
    for r in rows:
        entry = {"a2": str(r.param), "components": {v: str(r.components[v]) for v in vars_}}
        if args.check:
            entry["verified"] = verify_solution(r).ok
        table.append(entry)
    ok = all(e.get("verified", True) for e in table)
    if args.format == "json":
        out.write(_dump({"command": "ladder", "system": sid, "vars": vars_, "rows": table, "pass": ok}) + "\n")
    elif args.format == "tsv":
        out.write("\t".join(["a2", *vars_] + (["verified"] if args.check else [])) + "\n")
        for e in table:
            cells = [e["a2"], *(e["components"][v] for v in vars_)]
            if args.check:
                cells.append(str(e["verified"]).lower())
            out.write("\t".join(cells) + "\n")
    else:
        for e in table:
            out.write(f"a2 = {e['a2']}" + ("  [verified]" if e.get("verified") else "") + "\n")
            for v in vars_:
                out.write(f"    {v:>3} = {e['components'][v]}\n")
    return EXIT_OK if ok else EXIT_FAIL


# integrate -------------------------------------------------------------

def cmd_integrate(args, out) -> int:
    import numpy as np
    from .numint import IntegrationError, IntegratorConfig, crosscheck_eq1_eq3, integrate

    if args.system is None:
        raise UsageError("integrate needs --system")
    if args.y0 is None:
        raise UsageError("integrate needs --y0")
    y0 = number_list(args.y0)
    a2 = rational(args.a2)
    t0, t1 = float(rational(args.t0)), float(rational(args.t1))
    cfg = IntegratorConfig(rtol=float(rational(args.rtol)), atol=float(rational(args.atol)),
                           max_step=float(rational(args.max_step)))
    if args.crosscheck:
        if args.system != "eq1":
            raise UsageError("--crosscheck applies to --system eq1")
        rep = crosscheck_eq1_eq3(y0, t0, t1, a2, cfg)
        ok = rep.ok()
        body = {"command": "integrate", "crosscheck": "eq1 -> eq3", "pass": ok, "sup_error": rep.sup_error,
                "roundtrip_error": rep.roundtrip_error, "samples": rep.samples, "pole_hit": rep.pole_hit}
        if args.format == "json":
            out.write(_dump(body) + "\n")
        elif args.format == "tsv":
            out.write("\t".join(body) + "\n" + "\t".join(_tsv_cell(v) for v in body.values()) + "\n")
        else:
            out.write(f"{'PASS' if ok else 'FAIL'}  eq1 -> eq3 crosscheck: sup error {rep.sup_error:.3e}, "
                      f"round trip {rep.roundtrip_error:.3e}\n")
        if rep.pole_hit:
            return EXIT_POLE
        return EXIT_OK if ok else EXIT_FAIL
    grid = None
    if args.samples:
        grid = list(np.linspace(t0, t1, int(args.samples)))
    try:
        tr = integrate(args.system, a2, y0, t0, t1, cfg, t_eval=grid)
    except (IntegrationError, KeyError) as exc:
        out.write(_dump({"command": "integrate", "error": str(exc)}) + "\n")
        return EXIT_FAIL
    if args.format == "json":
        out.write(tr.to_jsonl())
    elif args.format == "tsv":
        out.write(tr.to_tsv())
    else:
        out.write("t".rjust(12) + "".join(v.rjust(22) for v in tr.vars) + "\n")
        for t, y in zip(tr.ts, tr.states):
            out.write(f"{t:12.6f}" + "".join(f"{x:22.14e}" for x in y) + "\n")
    if tr.pole_hit:
        sys.stderr.write(f"pole guard triggered at t={float(tr.ts[-1])!r}; output is partial\n")
        return EXIT_POLE
    return EXIT_OK


# local index -----------------------------------------------------------

def cmd_local_index(args, out) -> int:
    from .resolve import PIPELINE_IDS, ResolveError, chart_field, index_at, run_pipeline

    if args.pipeline not in PIPELINE_IDS:
        raise UsageError(f"--pipeline must be one of {', '.join(PIPELINE_IDS)}")
    entries = []
    if args.point is not None:
        if not args.step:
            raise UsageError("--point needs --step to name the chart")
        try:
            Vf = chart_field(args.pipeline, args.step)
        except ResolveError as exc:
            raise UsageError(str(exc)) from exc
        pts = [p.strip() for p in args.point.split(",")]
        if len(pts) != len(Vf.vars):
            raise UsageError(f"chart {list(Vf.vars)} needs {len(Vf.vars)} coordinates")
        free = [f for f in (args.free or "").split(",") if f]
        rep = index_at(Vf, pts, free, args.distinguished or "")
        entries.append({"source": f"{args.pipeline} {args.step}", **rep})
    else:
        rep = run_pipeline(args.pipeline)
        for s in rep.steps:
            if "index" not in s and args.step is None:
                continue
            if args.step and s["step"] != args.step:
                continue
            e = {"source": f"{args.pipeline} {s['step']}", "locus": s["locus"], "accessible": s["accessible"]}
            for k in ("index", "ratios", "integral", "verdict", "expected_index", "matches_expected", "error"):
                if k in s:
                    e[k] = s[k]
            if "index" in s and "verdict" not in s:
                e["verdict"] = "integral ratios" if s["integral"] else "ratios not integral"
            entries.append(e)
        for note in rep.notes:
            for e in entries:
                e.setdefault("verdict", note)
    ok = bool(entries) and all(e["accessible"] and e.get("matches_expected", True) for e in entries)
    if args.format == "json":
        out.write(_dump({"command": "local-index", "pass": ok, "entries": entries}) + "\n")
    elif args.format == "tsv":
        out.write("source\tlocus\tindex\tratios\tverdict\n")
        for e in entries:
            out.write("\t".join([e["source"], _tsv_cell(e["locus"]), ",".join(e.get("index", [])),
                                 ",".join(e.get("ratios", [])), e.get("verdict", e.get("error", ""))]) + "\n")
    else:
        for e in entries:
            loc = ", ".join(f"{k}={v}" for k, v in e["locus"].items())
            out.write(f"{e['source']}  at ({loc})\n")
            if not e["accessible"]:
                out.write(f"    not accessible: {e.get('error', '')}\n")
                continue
            if "index" in e:
                out.write(f"    index  ({', '.join(e['index'])})\n    ratios ({', '.join(e['ratios'])})\n")
            out.write(f"    {e.get('verdict', 'accessible')}\n")
    return EXIT_OK if ok else EXIT_FAIL


# errata ----------------------------------------------------------------

def cmd_errata(args, out) -> int:
    items = verdicts.errata()
    if args.system:
        items = [e for e in items if e.get("system", args.system) == args.system]
    if args.format == "json":
        out.write(_dump(items) + "\n")
    elif args.format == "tsv":
        keys = ["generator", "component", "printed_expression", "canonical_expression", "residual", "note"]
        out.write("\t".join(keys) + "\n")
        for e in items:
            out.write("\t".join(e.get(k, "") for k in keys) + "\n")
    else:
        for e in items:
            out.write(f"{e['generator']} [{e['component']}]\n")
            if e["printed_expression"]:
                out.write(f"    printed:   {e['printed_expression']}\n")
                out.write(f"    canonical: {e['canonical_expression']}\n")
            out.write(f"    residual:  {e['residual']}\n")
            if e.get("note"):
                out.write(f"    note:      {e['note']}\n")
    return EXIT_OK


# parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "tsv", "pretty"), default=None)
    common.add_argument("--config", default=None, help="JSON file whose keys mirror the long flags")
    common.add_argument("--system", default=None)

    p = argparse.ArgumentParser(prog="p2h2", description="Exact and numeric checks for a fourth-order "
                                "Painleve-type hierarchy member and its Hamiltonian systems.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run symbolic verdicts")
    v.add_argument("--target", default=None, help="one of " + ", ".join(verdicts.TARGETS))
    v.add_argument("--jobs", type=int, default=None)
    v.add_argument("--timing", action="store_true", default=None, help="include wall times (not deterministic)")
    v.set_defaults(func=cmd_verify)

    lad = sub.add_parser("ladder", parents=[common], help="rational solutions from the seed")
    lad.add_argument("--from", dest="from_", default=None)
    lad.add_argument("--to", default=None)
    lad.add_argument("--check", action="store_true", default=None)
    lad.set_defaults(func=cmd_ladder)

    it = sub.add_parser("integrate", parents=[common], help="numerical integration")
    it.add_argument("--a2", default=None)
    it.add_argument("--y0", default=None, help="comma separated initial values")
    it.add_argument("--t0", default=None)
    it.add_argument("--t1", default=None)
    it.add_argument("--rtol", default=None)
    it.add_argument("--atol", default=None)
    it.add_argument("--max-step", dest="max_step", default=None)
    it.add_argument("--samples", default=None, help="emit this many evenly spaced samples")
    it.add_argument("--crosscheck", action="store_true", default=None)
    it.set_defaults(func=cmd_integrate)

    li = sub.add_parser("local-index", parents=[common], help="local indices of accessible singularities")
    li.add_argument("--pipeline", required=False, default=None)
    li.add_argument("--step", default=None)
    li.add_argument("--point", default=None, help="comma separated coordinates in the step's chart")
    li.add_argument("--free", default=None, help="comma separated free variables of a locus")
    li.add_argument("--distinguished", default=None)
    li.set_defaults(func=cmd_local_index)

    er = sub.add_parser("errata", parents=[common], help="printed formulas that fail machine checks")
    er.set_defaults(func=cmd_errata)
    return p


def _apply_config(args) -> None:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            dest = "from_" if dest == "from" else dest
            if not hasattr(args, dest):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, dest) is None:
                setattr(args, dest, val)
    for key, val in DEFAULTS.items():
        if getattr(args, key, "absent") is None:
            setattr(args, key, val)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _apply_config(args)
        if hasattr(args, "jobs"):
            args.jobs = int(args.jobs)
            if args.jobs < 1:
                raise UsageError("--jobs must be at least 1")
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"p2h2 {args.command}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
