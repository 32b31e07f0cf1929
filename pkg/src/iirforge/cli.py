"""Command-line front end.

Subcommands: design, sweep, export-ilp, emit, simulate, bench.  Settings come
from flags, then a ``[design]`` table in the spec file, then built-in
defaults; ``--print-config`` shows the merged result.

Exit codes: 0 success, 1 check failed (bench mismatch, unfaithful
simulation, refused export), 2 infeasible, 3 timed out, 64 usage error,
66 missing input file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__
from .filterspec import BENCHMARK_NAMES, builtin_benchmark, discretize, exact, spec_from_obj
from .fixedpoint import QuantizedFilter
from .hardware import emit_dot, emit_vhdl, faithful_check, random_inputs, size_datapath, trace_csv
from .mcm import AdderGraph
from .response import Counterexample, Verified, response_csv
from .search import (INFEASIBLE, OPTIMAL, TIMED_OUT, DesignProblem, design_with_verification,
                     solve)

EXIT_OK, EXIT_FAIL, EXIT_INFEASIBLE, EXIT_TIMEOUT = 0, 1, 2, 3
EXIT_USAGE, EXIT_NOINPUT = 64, 66

DEFAULTS = {
    "wordlength": None,
    "points_per_band": 300,
    "use_sbc": True,
    "g_a_range": [-1, 1],
    "g_b_range": None,
    "time_limit": 600.0,
    "threads": None,
    "seed": 0,
    "mcm_cap": 8,
    "verify_step": 1e-4,
    "tau": "1/50",
    "msb_in": -1,
    "lsb_in": -16,
    "lsb_out": None,
    "out_width": 16,
    "samples": 10000,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _range(text: str) -> list[int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return [lo, hi]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, help="search worker threads (default: available CPUs)")
    p.add_argument("--seed", type=int, help="seed for random stimuli")
    p.add_argument("--print-config", action="store_true", help="print the merged settings and exit")


def _spec_args(p: argparse.ArgumentParser, need_w: bool = True) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--spec", help="TOML specification file")
    src.add_argument("--benchmark", choices=BENCHMARK_NAMES, help="built-in benchmark")
    if need_w:
        p.add_argument("-w", "--wordlength", type=int, help="coefficient word length")
    p.add_argument("--points-per-band", type=int, dest="points_per_band")
    p.add_argument("--no-sbc", action="store_const", const=False, dest="use_sbc",
                   help="search without the symmetry-breaking constraint")
    p.add_argument("--g-b-range", type=_range, dest="g_b_range", metavar="LO:HI")
    p.add_argument("--g-a-range", type=_range, dest="g_a_range", metavar="LO:HI")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    p.add_argument("--mcm-cap", type=int, dest="mcm_cap")
    p.add_argument("--tau", help="hp0 relative tolerance (e.g. 0.02 or 1/50)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="iirforge", description="Multiplierless second-order IIR filter designer")
    ap.add_argument("--version", action="version", version=f"iirforge {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("design", help="optimal design with continuous verification")
    _spec_args(p)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--verify-step", type=float, dest="verify_step")
    _common(p)

    p = sub.add_parser("sweep", help="optimal cost for a range of word lengths")
    _spec_args(p, need_w=False)
    p.add_argument("--from", type=int, dest="w_lo", required=True)
    p.add_argument("--to", type=int, dest="w_hi", required=True)
    p.add_argument("--out", help="CSV file (default: stdout)")
    _common(p)

    p = sub.add_parser("export-ilp", help="write the linearized design model in LP format")
    _spec_args(p)
    p.add_argument("--g-a", type=int, dest="g_a", help="denominator MSB (default: top of range)")
    p.add_argument("--g-b", type=int, dest="g_b", help="numerator MSB (default: top of range)")
    p.add_argument("--mode", default="feasibility",
                   help="feasibility, max_zeros, min_bK or max_bK (K = 0, 1, 2)")
    p.add_argument("--tighten", action="store_true", help="use exactly tightened numerator boxes")
    p.add_argument("--out", required=True, help="LP file")
    _common(p)

    for name, helptext in (("emit", "size the datapath and write VHDL and DOT"),
                           ("simulate", "bit-accurate simulation against the exact reference")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--result", required=True, help="result JSON written by `design`")
        p.add_argument("--msb-in", type=int, dest="msb_in")
        p.add_argument("--lsb-in", type=int, dest="lsb_in")
        p.add_argument("--lsb-out", type=int, dest="lsb_out")
        p.add_argument("--out-width", type=int, dest="out_width")
        if name == "emit":
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--entity", default="iir_filter")
        else:
            p.add_argument("--samples", type=int)
            p.add_argument("--zero", action="store_true", help="drive an all-zero input")
            p.add_argument("--trace", help="write the per-sample trace CSV here")
        _common(p)

    p = sub.add_parser("bench", help="reproduce the published benchmark table")
    p.add_argument("--only", action="append", help="restrict to these benchmark names")
    p.add_argument("--out", help="JSON report file")
    p.add_argument("--points-per-band", type=int, dest="points_per_band")
    p.add_argument("--time-limit", type=float, dest="time_limit")
    _common(p)
    return ap


# -- configuration ------------------------------------------------------------------

def _read_toml(path: str) -> dict:
    import tomli

    with open(path, "rb") as fh:
        return tomli.load(fh)


def resolve_config(args: argparse.Namespace) -> tuple[dict, dict | None]:
    """Merged settings (flags > spec file [design] table > defaults) and raw spec."""
    cfg = dict(DEFAULTS)
    raw = None
    spec_path = getattr(args, "spec", None)
    if spec_path:
        if not os.path.exists(spec_path):
            raise FileNotFoundError(spec_path)
        raw = _read_toml(spec_path)
        table = raw.get("design", {})
        unknown = set(table) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown [design] keys in {spec_path}: {sorted(unknown)}")
        cfg.update(table)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["threads"] is None and os.environ.get("IIRFORGE_THREADS"):
        cfg["threads"] = int(os.environ["IIRFORGE_THREADS"])
    return cfg, raw


def _spec(args, cfg, raw):
    if raw is not None:
        return spec_from_obj(raw)
    if getattr(args, "benchmark", None):
        return builtin_benchmark(args.benchmark, tau=exact(cfg["tau"]))
    raise UsageError("give --spec FILE or --benchmark NAME")


def _problem(spec, w: int, cfg: dict, grid=None) -> DesignProblem:
    if w is None:
        raise UsageError("--wordlength is required")
    return DesignProblem(
        spec, grid if grid is not None else discretize(spec, int(cfg["points_per_band"])), int(w),
        g_b_range=tuple(cfg["g_b_range"]) if cfg["g_b_range"] else None,
        g_a_range=tuple(cfg["g_a_range"]), use_sbc=bool(cfg["use_sbc"]),
        mcm_cap=int(cfg["mcm_cap"]), time_limit=float(cfg["time_limit"]),
        threads=cfg["threads"])


def _exit_for(status: str) -> int:
    return {OPTIMAL: EXIT_OK, INFEASIBLE: EXIT_INFEASIBLE, TIMED_OUT: EXIT_TIMEOUT}[status]


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- commands -------------------------------------------------------------------------

def result_document(spec_name: str, w: int, res, ver, cfg: dict) -> dict:
    doc = {"tool": "iirforge", "version": __version__, "spec": spec_name, "w": w}
    doc.update(res.to_dict())
    if isinstance(ver, Verified):
        doc["verified"] = True
        doc["verification"] = {"kind": "verified", "samples": ver.samples}
    elif isinstance(ver, Counterexample):
        doc["verified"] = False
        doc["verification"] = {"kind": "counterexample", "omega": str(ver.omega),
                               "side": ver.side, "violated": ver.violated}
    else:
        doc["verified"] = None
        doc["verification"] = None
    doc["config"] = cfg
    return doc


def cmd_design(args) -> int:
    cfg, raw = resolve_config(args)
    spec = _spec(args, cfg, raw)
    p = _problem(spec, cfg["wordlength"], cfg)
    res, ver, _ = design_with_verification(p, step=float(cfg["verify_step"]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = result_document(spec.name, p.w, res, ver, cfg)
    _dump(doc, out / "result.json")
    if res.filter is not None:
        (out / "mcm.dot").write_text(emit_dot({"a": res.graph_a, "b": res.graph_b}))
        (out / "response.csv").write_text(response_csv(res.filter, spec))
        print(f"{spec.name} w={p.w}: {res.status} A_total={res.A_total} "
              f"(A_M={res.A_M}, A_S={res.A_S}) a={list(res.filter.a_int)} b={list(res.filter.b_int)} "
              f"g_a={res.filter.fmt_a.g} g_b={res.filter.fmt_b.g} verified={doc['verified']}")
        if doc["verified"] is False:
            print(f"warning: bound touched at omega={ver.omega} ({ver.side}); not certified",
                  file=sys.stderr)
    else:
        print(f"{spec.name} w={p.w}: {res.status}")
    return _exit_for(res.status)


def cmd_sweep(args) -> int:
    cfg, raw = resolve_config(args)
    spec = _spec(args, cfg, raw)
    if args.w_lo > args.w_hi:
        raise UsageError(f"empty word-length range {args.w_lo}..{args.w_hi}")
    grid = discretize(spec, int(cfg["points_per_band"]))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["w", "status", "A_total", "A_M", "A_S", "g_a", "g_b", "a_int", "b_int", "monotone"])
    prev = None
    for w in range(args.w_lo, args.w_hi + 1):
        res = solve(_problem(spec, w, cfg, grid))
        f = res.filter
        mono = prev is None or res.A_total is None or res.A_total <= prev
        if res.A_total is not None:
            prev = res.A_total if prev is None else min(prev, res.A_total)
        wr.writerow([w, res.status, res.A_total if f else "", res.A_M if f else "",
                     res.A_S if f else "", f.fmt_a.g if f else "", f.fmt_b.g if f else "",
                     " ".join(map(str, f.a_int)) if f else "",
                     " ".join(map(str, f.b_int)) if f else "", mono])
    text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_ilp(args) -> int:
    from .bounds import tighten_bounds
    from .milp import build_design_model, export_lp

    cfg, raw = resolve_config(args)
    spec = _spec(args, cfg, raw)
    p = _problem(spec, cfg["wordlength"], cfg)
    boxes = None
    if args.tighten:
        boxes = tighten_bounds(p)
        if boxes is None:
            print("no coefficient set satisfies the grid; nothing to export", file=sys.stderr)
            return EXIT_INFEASIBLE
    g_b = args.g_b
    if g_b is None:
        g_b = max(boxes) if boxes is not None else p.g_b_range[1]
    if boxes is not None and g_b not in boxes:
        print(f"no feasible coefficients at g_b = {g_b}", file=sys.stderr)
        return EXIT_INFEASIBLE
    model = build_design_model(p, boxes, args.mode, g_a=args.g_a, g_b=g_b)
    try:
        export_lp(model, args.out)
    except ValueError as e:
        print(f"iirforge: refusing export: {e}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {args.out}: {len(model.variables)} variables, {len(model.constraints)} constraints, "
          f"max big-M {model.max_big_m}")
    return EXIT_OK


def load_result(path: str):
    """(filter, graph_a, graph_b, document) from a result JSON."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    doc = json.loads(Path(path).read_text())
    if doc.get("filter") is None:
        raise UsageError(f"{path} holds no design (status {doc.get('status')})")
    q = QuantizedFilter.from_dict(doc["filter"])
    return q, AdderGraph.from_dict(doc["graph_a"]), AdderGraph.from_dict(doc["graph_b"]), doc


def _datapath(args, cfg):
    q, ga, gb, _ = load_result(args.result)
    in_fmt = (int(cfg["msb_in"]), int(cfg["lsb_in"]))
    out_fmt = None
    if cfg["lsb_out"] is not None:
        # explicit output format; too narrow an MSB makes the output saturate
        out_fmt = (int(cfg["lsb_out"]) + int(cfg["out_width"]) - 1, int(cfg["lsb_out"]))
    return size_datapath(q, in_fmt, out_fmt, int(cfg["out_width"]), graphs=(ga, gb))


def cmd_emit(args) -> int:
    cfg, _ = resolve_config(args)
    dp = _datapath(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.entity}.vhd").write_text(emit_vhdl(dp, args.entity))
    (out / "mcm.dot").write_text(emit_dot({"a": dp.graph_a, "b": dp.graph_b}))
    _dump(dp.summary(), out / "datapath.json")
    s = dp.summary()
    print(f"datapath: {s['adders']['total']} adders, G={dp.G}, l_ext={dp.l_ext}, "
          f"x({dp.m_in},{dp.l_in}) -> y({dp.m_out},{dp.l_out})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, _ = resolve_config(args)
    dp = _datapath(args, cfg)
    n, seed = int(cfg["samples"]), int(cfg["seed"])
    xs = [0] * n if args.zero else [int(v) for v in random_inputs(dp, n, seed)]
    rep = faithful_check(dp, xs)
    if args.trace:
        Path(args.trace).write_text(trace_csv(dp, xs))
    doc = {"samples": rep.n, "seed": seed, "max_error_ulps": rep.max_error_ulps,
           "raw_ok": rep.raw_ok, "rounded_ok": rep.rounded_ok, "l_out": dp.l_out}
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK if rep.ok else EXIT_FAIL


def expected_table() -> list[dict]:
    text = resources.files("iirforge.data").joinpath("benchmarks.json").read_text()
    return json.loads(text)["rows"]


def cmd_bench(args) -> int:
    cfg, _ = resolve_config(args)
    rows = expected_table()
    if args.only:
        unknown = set(args.only) - {r["name"] for r in rows}
        if unknown:
            raise UsageError(f"not in the benchmark table: {sorted(unknown)}")
        rows = [r for r in rows if r["name"] in args.only]
    report = []
    for r in rows:
        t0 = time.monotonic()
        spec = builtin_benchmark(r["name"], tau=exact(cfg["tau"]))
        res = solve(_problem(spec, r["w"], cfg))
        ok = res.status == OPTIMAL and res.A_total == r["A"]
        report.append({"name": r["name"], "w": r["w"], "expected": r["A"], "status": res.status,
                       "A_total": res.A_total, "A_M": res.A_M, "A_S": res.A_S, "match": ok,
                       "elapsed": round(time.monotonic() - t0, 3)})
        got = res.A_total if res.A_total is not None else res.status
        print(f"{'ok  ' if ok else 'DIFF'} {r['name']:6s} w={r['w']} expected A={r['A']} got {got}",
              flush=True)
    doc = {"tool": "iirforge", "version": __version__, "rows": report,
           "all_match": all(x["match"] for x in report)}
    if args.out:
        _dump(doc, Path(args.out))
    return EXIT_OK if doc["all_match"] else EXIT_FAIL


COMMANDS = {"design": cmd_design, "sweep": cmd_sweep, "export-ilp": cmd_export_ilp,
            "emit": cmd_emit, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.print_config:
            cfg, _ = resolve_config(args)
            print(json.dumps(cfg, indent=2, sort_keys=True))
            return EXIT_OK
        if args.threads is not None:
            os.environ["IIRFORGE_THREADS"] = str(args.threads)
        return COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"iirforge: no such file: {e.filename or e}", file=sys.stderr)
        return EXIT_NOINPUT
    except UsageError as e:
        print(f"iirforge: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
