"""Command-line front end.

Exit codes: 0 success / no violation, 1 violation (or falsified formula,
or hang), 2 configuration or compile error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from pathlib import Path

from . import __version__
from .checker.campaign import (CAMPAIGN_GRID_LIMIT, CampaignConfig, build_corpus,
                               detection_matrix, write_reports)
from .checker.search import Budget
from .compiler import isa
from .compiler.emit import InstrSequence, emit_rv32i
from .compiler.ir import CompileError, lower_to_ir
from .formula import (CorpusError, FormulaError, load_seeds, load_templates, parse_formula,
                      print_formula, read_corpus)
from .oracle import DEFAULT_LIMIT, admit_seeds, check_tautology
from .simulator import CATALOG, dump_trace, inject, run_to_finish
from .simulator.anomalies import UnknownAnomaly
from .synthesizer import (DEFAULT_MAX_INSTANCES, ConfigurationError, InstantiatedTautology,
                          count_instances, seed_instances, synthesize)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- helpers

_PROV = re.compile(r"^(?P<t>[A-Za-z_][A-Za-z0-9_]*)\[(?P<s>[^\]]*)\]$")


def load_tautologies(path) -> list[InstantiatedTautology]:
    """Read a tautology file (corpus format); names ``tmpl[s1,s2]`` carry provenance."""
    out = []
    for lineno, name, text in read_corpus(path):
        try:
            f = parse_formula(text, name=name, line=lineno)
        except FormulaError as exc:
            raise CorpusError(str(exc), str(path), lineno) from exc
        m = _PROV.match(name)
        if m:
            seeds = tuple(s for s in m.group("s").split(",") if s)
            out.append(InstantiatedTautology(f, m.group("t"), seeds))
        else:
            out.append(InstantiatedTautology(f, "seed", (name,)))
    return out


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "tautology"


def _parse_value(text: str) -> int:
    return int(text, 0)


def _parse_pairs(items, what: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            key, sep, value = part.partition("=")
            if not sep:
                raise UsageError(f"{what} must look like name=value, got {part!r}")
            out[key.strip()] = value.strip()
    return out


def _read_symbols(asm_path: Path) -> dict[str, int]:
    symbols = {}
    if asm_path.exists():
        for line in asm_path.read_text().splitlines():
            m = re.match(r"#\s*input\s+(\S+)\s*->\s*x(\d+)", line)
            if m:
                symbols[m.group(1)] = int(m.group(2))
    return symbols


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    seeds = load_seeds(args.seeds)
    templates = load_templates(args.templates)
    report = admit_seeds(seeds, args.width, args.confirm_width)
    for seed, verdict in report.rejected:
        print(f"rejected seed {seed.name}: {verdict.describe()}", file=sys.stderr)
    if report.rejected:
        return EXIT_VIOLATION
    n = count_instances(templates, report.admitted)
    terms = " + ".join(f"{len(report.admitted)}^{len(t.placeholders)}" for t in templates)
    print(f"{len(templates)} templates x {len(report.admitted)} seeds: {terms} = {n} instances")
    instances = synthesize(templates, report.admitted, args.max_instances)
    entries = (seed_instances(report.admitted) if args.include_seeds else []) + instances
    lines = [f"# {len(entries)} tautologies"]
    for inst in entries:
        lines.append(f"{inst.name} : {print_formula(inst.formula)}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {len(entries)} tautologies to {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if bool(args.formula) == bool(args.corpus):
        raise UsageError("give exactly one of --formula or --corpus")
    if args.formula:
        formulas = [parse_formula(args.formula, name="formula")]
    else:
        formulas = [t.formula for t in load_tautologies(args.corpus)]
    status = EXIT_OK
    for f in formulas:
        v = check_tautology(f, args.width, args.limit)
        if v.valid:
            print(f"{f.name}: valid at W={args.width} ({v.assignments_checked} assignments)")
        else:
            status = EXIT_VIOLATION
            pairs = " ".join(f"{k}={val}" for k, val in v.counterexample.items())
            print(f"{f.name}: falsified at W={args.width}: {pairs}")
    return status


def cmd_compile(args) -> int:
    if args.formula:
        tautologies = [InstantiatedTautology(parse_formula(args.formula, name=args.name),
                                             "seed", (args.name,))]
    else:
        tautologies = load_tautologies(args.input)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    for t in tautologies:
        try:
            ir = lower_to_ir(t)
            seq = emit_rv32i(ir)
        except CompileError as exc:
            _err(f"cannot compile {exc}" if exc.name else f"cannot compile {t.name}: {exc}")
            return EXIT_ERROR
        stem = outdir / _safe(t.name)
        Path(f"{stem}.ir").write_text(f"; {t.name}\n; {print_formula(t.formula)}\n" + ir.text())
        Path(f"{stem}.s").write_text(f"# {print_formula(t.formula)}\n" + seq.assembly())
        Path(f"{stem}.bin").write_bytes(seq.binary())
        print(f"{t.name}: {len(seq)} instructions -> {stem}.{{ir,s,bin}}")
    return EXIT_OK


def cmd_run(args) -> int:
    binary = Path(args.binary)
    words = isa.bytes_to_words(binary.read_bytes())
    symbols = _read_symbols(binary.with_suffix(".s"))
    regs: dict[int, int] = {}
    for key, value in _parse_pairs(args.inputs, "--inputs").items():
        if re.fullmatch(r"x\d+", key):
            r = int(key[1:])
        elif key in symbols:
            r = symbols[key]
        else:
            raise UsageError(f"unknown input {key!r} (no symbol table entry)")
        if not 0 <= r < 32:
            raise UsageError(f"register {key} out of range")
        regs[r] = _parse_value(value)
    missing = [v for v in symbols if symbols[v] not in regs]
    if missing:
        print(f"note: inputs {', '.join(missing)} default to 0", file=sys.stderr)
    anomaly = inject(args.anomaly, **_parse_pairs(args.param, "--param"))
    seq = InstrSequence(words, {}, binary.stem)
    state = run_to_finish(seq, regs=regs, anomaly=anomaly, max_cycles=args.max_cycles)
    trace_path = Path(args.trace) if args.trace else binary.with_suffix(f".{anomaly.id}.trace")
    header = f"program {binary}\nanomaly {anomaly.id}\n" + " ".join(
        f"x{r}={v}" for r, v in sorted(regs.items()))
    trace_path.write_text(dump_trace(state, header))
    if state.status == "hang":
        print(f"hang: cycle cap of {state.cycle} cycles reached without Finish_Reg "
              f"(retired {state.retired}); trace: {trace_path}")
        return EXIT_VIOLATION
    print(f"Result_Reg={state.result_reg} Finish_Reg={state.finish_reg} "
          f"retired={state.retired} cycles={state.cycle}")
    print(f"trace: {trace_path}")
    if state.finish_reg and not state.result_reg:
        return EXIT_VIOLATION
    return EXIT_OK


def _load_config(args) -> CampaignConfig:
    if args.config:
        with open(args.config, "rb") as fh:
            cfg = CampaignConfig.from_mapping(tomllib.load(fh))
    else:
        cfg = CampaignConfig()
    budget = cfg.budget.to_dict()
    for key in ("samples", "seed", "grid_limit", "max_runs"):
        value = getattr(args, key)
        if value is not None:
            budget[key] = value
    if args.full_grid:
        budget["grid_limit"] = None
    cfg.budget = Budget(**budget)
    if args.anomalies is not None:
        cfg.anomalies = [a for a in args.anomalies.split(",") if a]
    if args.methods is not None:
        m = args.methods.replace("-only", "")
        cfg.methods = [x for x in m.split(",") if x]
    if args.out is not None:
        cfg.output = args.out
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.no_golden:
        cfg.golden = False
    cfg.validate()
    return cfg


def cmd_campaign(args) -> int:
    cfg = _load_config(args)
    started = time.time()
    corpus, admission = build_corpus(cfg)
    for seed, verdict in admission.rejected:
        print(f"rejected seed {seed.name}: {verdict.describe()}", file=sys.stderr)
    matrix = detection_matrix(cfg.anomalies, corpus, cfg.budget, cfg.methods, cfg.jobs, cfg.golden)
    meta = {"started_unix": round(started, 3), "wall_time_s": round(time.time() - started, 3),
            "tool_version": __version__, "jobs": cfg.jobs, "config": cfg.to_dict(),
            "properties": len(corpus)}
    paths = write_reports(matrix, cfg.output, meta)
    print(matrix.to_markdown())
    print(f"reports: {paths['json']} {paths['markdown']}")
    any_detected = any(c.detected for r in matrix.rows for c in r.cells.values())
    return EXIT_VIOLATION if any_detected else EXIT_OK


def cmd_list_anomalies(args) -> int:
    if args.json:
        data = [{"id": k, "stage": e.stage, "synopsis": e.synopsis, "category": e.category,
                 "mutation": e.mutation, "params": dict(e.params)} for k, e in CATALOG.items()]
        print(json.dumps(data, indent=2))
        return EXIT_OK
    for k, e in CATALOG.items():
        params = ", ".join(f"{n}={v}" for n, v in e.params)
        print(f"{k}  [{e.stage}] {e.synopsis}: {e.mutation}" + (f" ({params})" if params else ""))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiup", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tiup {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="admit seeds and instantiate templates")
    s.add_argument("--seeds", default=None)
    s.add_argument("--templates", default=None)
    s.add_argument("--width", type=int, default=4, help="admission width")
    s.add_argument("--confirm-width", type=int, default=5)
    s.add_argument("--max-instances", type=int, default=DEFAULT_MAX_INSTANCES)
    s.add_argument("--include-seeds", action="store_true",
                   help="also emit the admitted seeds themselves")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_synth)

    o = sub.add_parser("oracle", help="exhaustive small-width tautology check")
    o.add_argument("--formula")
    o.add_argument("--corpus")
    o.add_argument("--width", type=int, default=4)
    o.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compile", help="emit IR, assembly and binary per tautology")
    c.add_argument("input", nargs="?", help="tautology file")
    c.add_argument("--formula", help="compile a single formula instead of a file")
    c.add_argument("--name", default="formula")
    c.add_argument("-o", "--output", default="build")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("run", help="simulate a compiled binary")
    r.add_argument("binary")
    r.add_argument("--inputs", nargs="*", help="name=value or xN=value")
    r.add_argument("--anomaly", default="golden")
    r.add_argument("--param", nargs="*", help="anomaly parameter name=value")
    r.add_argument("--trace", help="trace output path")
    r.add_argument("--max-cycles", type=int)
    r.set_defaults(func=cmd_run)

    k = sub.add_parser("campaign", help="anomaly detection matrix")
    k.add_argument("--config", help="TOML file with [corpus], [budget], [campaign]")
    k.add_argument("--out")
    k.add_argument("--methods", help="tiup,sqed | tiup-only | sqed-only")
    k.add_argument("--anomalies", help="comma-separated ids")
    k.add_argument("--samples", type=int)
    k.add_argument("--seed", type=int)
    k.add_argument("--grid-limit", type=int,
                   help=f"corner-grid size cap (campaign default {CAMPAIGN_GRID_LIMIT})")
    k.add_argument("--full-grid", action="store_true", help="no grid cap")
    k.add_argument("--max-runs", type=int)
    k.add_argument("--jobs", type=int)
    k.add_argument("--no-golden", action="store_true")
    k.set_defaults(func=cmd_campaign)

    a = sub.add_parser("list-anomalies", help="show the anomaly catalog")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_list_anomalies)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        from .formula import SEEDS_PATH, TEMPLATES_PATH
        args.seeds = args.seeds or SEEDS_PATH
        args.templates = args.templates or TEMPLATES_PATH
    if args.command == "compile" and not (args.input or args.formula):
        _err("compile needs a tautology file or --formula")
        return EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, FormulaError, CompileError, ConfigurationError, UnknownAnomaly,
            ValueError, OSError, tomllib.TOMLDecodeError) as exc:
        _err(str(exc).strip("'\""))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
