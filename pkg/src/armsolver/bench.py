"""Benchmark suites: run every case through the pipeline, then score the logs.

A suite file lists cases; a case is one session of one or more turns and each
turn carries its own gold label.  ``run_suite`` writes one run log per
(case, repeat, turn) plus a manifest holding the gold labels, so scoring
needs nothing but the output directory.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from .agents.backend import Backend
from .agents.pipeline import Query, SessionMemory, run_query
from .ets import RobotRegistry
from .metrics import (GoldLabel, MetricReport, PriceTable, RunScore, aggregate, report_json,
                      score_run, usage_report)

SUITES = ("bench1-text", "bench3-tasks")
RESERVED = ("bench2-images",)
MANIFEST = "manifest.json"
TIMINGS = "timings.json"


class BenchError(RuntimeError):
    pass


def _bench_root():
    return resources.files("armsolver.fixtures").joinpath("bench")


def load_suite(suite_id: str) -> dict:
    if suite_id in RESERVED:
        raise BenchError(f"suite {suite_id!r} needs image extraction, which this build does not provide")
    if suite_id not in SUITES:
        raise BenchError(f"unknown suite {suite_id!r} (known: {', '.join(SUITES)})")
    suite = json.loads(_bench_root().joinpath(f"{suite_id}.json").read_text(encoding="utf-8"))
    for case in suite["cases"]:
        for i, turn in enumerate(case["turns"]):
            GoldLabel.from_json(f"{case['id']}/{i}", turn["gold"])  # validates
    return suite


def case_seed(seed: int, suite_id: str, case_id: str, repeat: int) -> int:
    h = hashlib.sha256(f"{seed}:{suite_id}:{case_id}:{repeat}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def _run_case(suite_id, case, repeat, backend, out, seed, clock) -> list[dict]:
    registry = RobotRegistry(case_seed(seed, suite_id, case["id"], repeat))
    memory = SessionMemory()
    session = f"{case['id']}.r{repeat}"
    entries = []
    for k, turn in enumerate(case["turns"]):
        run_id = f"{session}.t{k}"
        attach = None
        if turn.get("attachment"):
            attach = str(_bench_root().joinpath(turn["attachment"]))
        t0 = time.perf_counter()
        log = run_query(Query(turn["query"], attach, session), registry, backend, memory,
                        workspace=out / "artifacts", run_id=run_id, clock=clock)
        wall = time.perf_counter() - t0
        name = f"{run_id}.json"
        (out / name).write_text(log.dumps(), encoding="utf-8")
        entries.append({"file": name, "query_id": f"{case['id']}/{k}", "gold": turn["gold"],
                        "wall": wall})
    return entries


def run_suite(suite_id: str, backend: Backend, out, repeats: int | None = None, seed: int = 0,
              clock: str = "frozen", jobs: int = 1) -> dict:
    """Run a suite; returns the manifest that is also written to ``out``.

    With ``clock="frozen"`` the logged runtimes are zero so logs are
    byte-stable; wall-clock times always go to a separate timings file.
    """
    suite = load_suite(suite_id)
    repeats = int(suite.get("repeats", 3) if repeats is None else repeats)
    if repeats < 1:
        raise BenchError("repeats must be >= 1")
    if clock not in ("frozen", "wall"):
        raise BenchError("clock must be 'frozen' or 'wall'")
    clock_fn = (lambda: 0.0) if clock == "frozen" else time.perf_counter
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    jobs_ = [(c, r) for c in suite["cases"] for r in range(repeats)]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        results = list(pool.map(lambda cr: _run_case(suite_id, cr[0], cr[1], backend, out, seed, clock_fn),
                                jobs_))
    entries = [e for res in results for e in res]
    manifest = {"suite": suite_id, "backend": backend.name, "model": backend.model, "seed": seed,
                "repeats": repeats, "clock": clock,
                "runs": [{k: e[k] for k in ("file", "query_id", "gold")} for e in entries]}
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / TIMINGS).write_text(json.dumps({e["file"]: e["wall"] for e in entries}, indent=2, sort_keys=True)
                               + "\n", encoding="utf-8")
    return manifest


def score_dir(in_dir, prices: PriceTable | None = None) -> tuple[MetricReport, list[RunScore], dict, str]:
    """Score a ``run_suite`` output directory; returns (report, scores, usage, report JSON)."""
    in_dir = Path(in_dir)
    try:
        manifest = json.loads((in_dir / MANIFEST).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise BenchError(f"{in_dir} has no {MANIFEST}; run 'bench run' first") from None
    logs, scores = [], []
    for entry in manifest["runs"]:
        log = json.loads((in_dir / entry["file"]).read_text(encoding="utf-8"))
        logs.append(log)
        scores.append(score_run(log, GoldLabel.from_json(entry["query_id"], entry["gold"])))
    report = aggregate(scores)
    usage = usage_report(logs, prices)
    return report, scores, usage, report_json(report, scores, usage)
