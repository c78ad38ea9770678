"""Anomaly campaigns: detection matrix over (anomaly, method) cells."""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .. import __version__
from ..formula import SEEDS_PATH, TEMPLATES_PATH, load_seeds, load_templates
from ..oracle import admit_seeds
from ..simulator.anomalies import CATALOG, GOLDEN, inject
from ..synthesizer import DEFAULT_MAX_INSTANCES, seed_instances, synthesize
from .search import Budget
from .sqed import sqed_corpus, verify_sqed
from .tiup import Verdict, verify_tiup

METHODS = ("tiup", "sqed")
# corner-priority subset keeps the many full sweeps of missed cells tractable
CAMPAIGN_GRID_LIMIT = 4096


@dataclass
class CampaignConfig:
    seeds: str = str(SEEDS_PATH)
    templates: str = str(TEMPLATES_PATH)
    admission_width: int = 4
    confirm_width: int | None = 5
    include_seeds: bool = True
    max_instances: int = DEFAULT_MAX_INSTANCES
    budget: Budget = field(default_factory=lambda: Budget(grid_limit=CAMPAIGN_GRID_LIMIT))
    anomalies: list[str] = field(default_factory=lambda: list(CATALOG))
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    golden: bool = True
    output: str = "campaign-out"
    jobs: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("jobs")
        return d

    @classmethod
    def from_mapping(cls, data: dict) -> "CampaignConfig":
        """Build from a parsed TOML document (sections corpus/budget/campaign)."""
        cfg = cls()
        corpus = dict(data.get("corpus", {}))
        for key in ("seeds", "templates", "admission_width", "confirm_width",
                    "include_seeds", "max_instances"):
            if key in corpus:
                setattr(cfg, key, corpus.pop(key))
        budget = dict(asdict(cfg.budget))
        for key, value in data.get("budget", {}).items():
            if key not in budget:
                raise ValueError(f"unknown budget key {key!r}")
            budget[key] = value
        cfg.budget = Budget(**budget)
        camp = dict(data.get("campaign", {}))
        for key in ("anomalies", "methods", "golden", "output", "jobs"):
            if key in camp:
                setattr(cfg, key, camp.pop(key))
        leftovers = set(corpus) | set(camp) | (set(data) - {"corpus", "budget", "campaign"})
        if leftovers:
            raise ValueError(f"unknown configuration keys: {sorted(leftovers)}")
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for a in self.anomalies:
            if a not in CATALOG:
                raise ValueError(f"unknown anomaly {a!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def build_corpus(cfg: CampaignConfig):
    """Admitted seeds (+ optionally themselves) and their instantiations."""
    seeds = load_seeds(cfg.seeds)
    report = admit_seeds(seeds, cfg.admission_width, cfg.confirm_width)
    instances = synthesize(load_templates(cfg.templates), report.admitted, cfg.max_instances)
    corpus = (seed_instances(report.admitted) if cfg.include_seeds else []) + instances
    return corpus, report


@dataclass
class Cell:
    method: str
    anomaly: str
    detected: bool
    outcome: str
    properties_checked: int
    assignments_tried: int
    witness: Verdict | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        d = {"method": self.method, "anomaly": self.anomaly,
             "verdict": "detected" if self.detected else "missed", "outcome": self.outcome,
             "properties_checked": self.properties_checked,
             "assignments_tried": self.assignments_tried}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d


@dataclass
class MatrixRow:
    anomaly: str
    synopsis: str
    category: str
    cells: dict[str, Cell]

    def to_dict(self) -> dict:
        return {"anomaly": self.anomaly, "synopsis": self.synopsis, "category": self.category,
                "results": {m: c.to_dict() for m, c in self.cells.items()}}


@dataclass
class DetectionMatrix:
    methods: list[str]
    rows: list[MatrixRow]
    budget: Budget
    skipped_sqed: list[str] = field(default_factory=list)

    def detected(self, anomaly: str, method: str) -> bool:
        for row in self.rows:
            if row.anomaly == anomaly:
                return row.cells[method].detected
        raise KeyError(anomaly)

    def pattern(self, method: str) -> dict[str, bool]:
        return {r.anomaly: r.cells[method].detected for r in self.rows if method in r.cells}

    def to_dict(self) -> dict:
        return {"tool_version": __version__, "methods": self.methods,
                "budget": self.budget.to_dict(), "sqed_skipped": self.skipped_sqed,
                "rows": [r.to_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        head = "| Anomaly | Synopsis | Category | " + " | ".join(m.upper() for m in self.methods) + " |"
        sep = "|---|---|---|" + "---|" * len(self.methods)
        lines = ["# Anomaly detection results", "", head, sep]
        for r in self.rows:
            marks = []
            for m in self.methods:
                c = r.cells[m]
                marks.append("✓" if c.detected else "✗")
            lines.append(f"| {r.anomaly} | {r.synopsis} | {r.category} | " + " | ".join(marks) + " |")
        lines += ["", "✓ = violation found within budget, ✗ = no violation found (missed).", ""]
        lines.append("## Witnesses")
        lines.append("")
        for r in self.rows:
            for m in self.methods:
                w = r.cells[m].witness
                if w is None:
                    continue
                sigma = " ".join(f"{k}={v}" for k, v in
                                 ((w.counterexample.sigma if w.counterexample else w.hang_sigma) or {}).items())
                extra = f", {w.counterexample.retired} retired" if w.counterexample else ""
                lines.append(f"- {r.anomaly} / {m}: `{w.name}` {w.outcome} at {sigma}{extra}")
        b = self.budget
        lines += ["", f"Budget: grid {b.grid_lo}..{b.grid_hi} (limit {b.grid_limit}), "
                      f"{b.samples} random samples, seed {b.seed}.", ""]
        return "\n".join(lines)


def _run_cell(args) -> Cell:
    anomaly_id, method, corpus, programs, budget = args
    spec = GOLDEN if anomaly_id == "golden" else inject(anomaly_id)
    t0 = time.perf_counter()
    if method == "tiup":
        report = verify_tiup(corpus, spec, budget, stop_at_first=True)
    else:
        report = verify_sqed(programs, spec, budget, stop_at_first=True)
    witness = report.first_detection()
    return Cell(method, anomaly_id, report.detected, report.outcome, len(report.verdicts),
                sum(v.assignments_tried for v in report.verdicts), witness,
                time.perf_counter() - t0)


def detection_matrix(anomaly_ids, corpus, budget: Budget = Budget(grid_limit=CAMPAIGN_GRID_LIMIT),
                     methods=METHODS, jobs: int = 1, golden: bool = False) -> DetectionMatrix:
    """Run every (anomaly, method) cell; each cell stops at its first detection.

    Cells are independent, so with ``jobs`` > 1 they run in worker
    processes; results are merged in input order either way.
    """
    methods = list(methods)
    ids = (["golden"] if golden else []) + list(anomaly_ids)
    programs, skipped = sqed_corpus(corpus) if "sqed" in methods else ([], [])
    jobs_list = [(a, m, corpus, programs, budget) for a in ids for m in methods]
    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, jobs_list))
    else:
        cells = [_run_cell(j) for j in jobs_list]
    rows = []
    it = iter(cells)
    for a in ids:
        if a == "golden":
            synopsis, category = GOLDEN.synopsis, GOLDEN.category
        else:
            synopsis, category = CATALOG[a].synopsis, CATALOG[a].category
        rows.append(MatrixRow(a, synopsis, category, {m: next(it) for m in methods}))
    return DetectionMatrix(methods, rows, budget, skipped)


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def write_reports(matrix: DetectionMatrix, outdir, meta: dict | None = None) -> dict[str, Path]:
    """report.json, report.md, meta.json and one trace file per witness.

    Everything except meta.json is a pure function of the configuration.
    """
    out = Path(outdir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    for stale in (out / "traces").glob("*.trace"):
        stale.unlink()
    data = matrix.to_dict()
    timings = {}
    for row, row_d in zip(matrix.rows, data["rows"]):
        for m, cell in row.cells.items():
            timings[f"{row.anomaly}/{m}"] = round(cell.wall_time, 3)
            w = cell.witness
            if w is not None and w.counterexample is not None:
                fname = f"{row.anomaly}_{m}_{_safe(w.name)}.trace"
                (out / "traces" / fname).write_text(w.counterexample.trace)
                row_d["results"][m]["witness"]["trace_file"] = f"traces/{fname}"
    paths = {"json": out / "report.json", "markdown": out / "report.md", "meta": out / "meta.json"}
    paths["json"].write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    paths["markdown"].write_text(matrix.to_markdown())
    sidecar = dict(meta or {})
    sidecar["cell_wall_time_s"] = timings
    paths["meta"].write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return paths
