"""Scoring of pipeline run logs against gold labels, and usage accounting.

Per run the scorer produces indicator values:

* ``sup``: mean of the interaction and routing indicators, so one of 0, 0.5, 1
* ``ets``: extracted chain equals the gold chain up to joint renumbering
* ``plan``: planned tool sequence equals the gold sequence
* ``robosolver``: one indicator per attempt, the attempt's answer passes the checks
* ``judge``: one indicator per attempt, the inspector verdict agrees with the above
* ``self_correct``: one indicator per rejected attempt, the next attempt is correct
* ``completion``: the final answer passes the checks

A report averages each indicator over runs (per-attempt lists are averaged
within the run first).  The total is the mean of whichever of sup, ets, plan,
robosolver, judge and self-correct are defined; completion is reported apart.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .ets import parse_ets
from .kinematics import compile_ets, fk_symbolic, symbol_bindings, to_frame
from .spatial import orthonormalize
from .symexpr import ExprSyntaxError, equal_on_samples, evaluate, parse_expr

TOTAL_COMPONENTS = ("sup", "ets", "plan", "robosolver", "judge", "self_correct")
ALL_METRICS = TOTAL_COMPONENTS + ("completion",)
LABELS = {"sup": "M_sup", "ets": "M_E", "plan": "M_P", "robosolver": "M_R", "judge": "M_J",
          "self_correct": "M_SC", "completion": "M_C", "total": "M_T"}

CHECK_KINDS = ("present", "equals", "approx", "le", "symbolic", "symbolic_fk", "symbolic_jacobian",
               "jacobian", "ik_pose")


class ScoringError(ValueError):
    """Gold label cannot score the run (names the missing or bad field)."""


class PriceError(KeyError):
    def __str__(self) -> str:
        return f"no price configured for model {self.args[0]!r}"


# ---------------------------------------------------------------------------
# gold labels


@dataclass(frozen=True)
class GoldLabel:
    query_id: str
    routes: tuple[str, ...] | None = None
    ets: str | None = None
    tools: tuple[str, ...] | None = None
    checks: tuple[dict, ...] = ()
    interaction: int | None = None  # manual override of the interaction indicator

    def __post_init__(self):
        if self.routes is None and self.ets is None and self.tools is None and not self.checks:
            raise ScoringError(f"gold label {self.query_id!r} has no check")
        for c in self.checks:
            if c.get("kind") not in CHECK_KINDS:
                raise ScoringError(f"gold label {self.query_id!r}: unknown check kind {c.get('kind')!r}")
            if "path" not in c:
                raise ScoringError(f"gold label {self.query_id!r}: check without a path")

    @classmethod
    def from_json(cls, query_id: str, d: Mapping) -> "GoldLabel":
        return cls(query_id=query_id,
                   routes=None if d.get("routes") is None else tuple(d["routes"]),
                   ets=d.get("ets"),
                   tools=None if d.get("tools") is None else tuple(d["tools"]),
                   checks=tuple(d.get("checks", ())),
                   interaction=d.get("interaction"))


# ---------------------------------------------------------------------------
# answer checks


def lookup(quantities: Mapping, path: str):
    """Dotted-path lookup; raises KeyError when any segment is missing."""
    cur: Any = quantities
    for part in path.split("."):
        if not isinstance(cur, Mapping) or part not in cur:
            raise KeyError(path)
        cur = cur[part]
    return cur


def _texts_equal(got, expected, n: int = 100) -> bool:
    if isinstance(expected, str):
        if not isinstance(got, str):
            return False
        try:
            return equal_on_samples(parse_expr(got), parse_expr(expected), n=n)
        except ExprSyntaxError:
            return False
    if not isinstance(got, list) or len(got) != len(expected):
        return False
    return all(_texts_equal(g, e, n) for g, e in zip(got, expected))


def _approx(got, expected, tol: float) -> bool:
    try:
        a = np.asarray(got, dtype=float)
        b = np.asarray(expected, dtype=float)
    except (TypeError, ValueError):
        return False
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= tol))


def _fd_jacobian(chain, q, h: float = 1e-6) -> np.ndarray:
    """Central-difference geometric Jacobian in the world frame."""
    q = np.asarray(q, dtype=float)
    T0 = chain.fk(q)
    J = np.zeros((6, len(q)))
    for j in range(len(q)):
        dq = np.zeros_like(q)
        dq[j] = h
        Tp, Tm = chain.fk(q + dq), chain.fk(q - dq)
        J[:3, j] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        dR = (Tp[:3, :3] - Tm[:3, :3]) / (2 * h) @ T0[:3, :3].T
        J[3:, j] = [dR[2, 1], dR[0, 2], dR[1, 0]]
    return J


def _sym_jacobian_ok(got, ets_text: str, tol: float, samples: int = 10, seed: int = 0) -> bool:
    ets = parse_ets(ets_text)
    if not isinstance(got, list) or len(got) != 6 or any(len(r) != ets.n for r in got):
        return False
    try:
        exprs = [[parse_expr(e) for e in row] for row in got]
    except ExprSyntaxError:
        return False
    rng = np.random.default_rng(seed)
    consts = sorted(ets.constant_symbols())
    for _ in range(samples):
        env_c = {c: float(rng.uniform(0.2, 1.5)) for c in consts}
        q = rng.uniform(-math.pi, math.pi, ets.n)
        chain = compile_ets(ets, env_c)
        ref = _fd_jacobian(chain, q)
        b = symbol_bindings(ets, q, constants=env_c)
        val = np.array([[evaluate(e, b) for e in row] for row in exprs])
        if not np.all(np.abs(val - ref) <= tol * (1 + np.abs(ref))):
            return False
    return True


def run_check(check: Mapping, quantities: Mapping) -> bool:
    try:
        got = lookup(quantities, check["path"])
    except KeyError:
        return False
    kind = check["kind"]
    if kind == "present":
        return True
    if kind == "equals":
        return got == check["expected"]
    if kind == "approx":
        return _approx(got, check["expected"], float(check.get("tol", 1e-9)))
    if kind == "le":
        return isinstance(got, (int, float)) and got <= check["expected"]
    if kind == "symbolic":
        return _texts_equal(got, check["expected"])
    if kind == "symbolic_fk":
        return _texts_equal(got, fk_symbolic(parse_ets(check["ets"])).texts())
    if kind == "symbolic_jacobian":
        return _sym_jacobian_ok(got, check["ets"], float(check.get("tol", 1e-6)))
    chain = compile_ets(parse_ets(check["ets"]), check.get("constants"))
    if kind == "jacobian":
        q = np.asarray(check["q"], dtype=float)
        ref = to_frame(_fd_jacobian(chain, q), chain.fk(q), check.get("frame", "world"))
        return _approx(got, ref, float(check.get("tol", 1e-5)))
    if kind == "ik_pose":
        target = orthonormalize(np.asarray(check["target"], dtype=float))
        try:
            T = chain.fk(np.asarray(got, dtype=float))
        except (ValueError, TypeError):
            return False
        return _approx(T, target, float(check.get("tol", 0.01)))
    raise ScoringError(f"unknown check kind {kind!r}")


def answer_correct(answer: Mapping | None, gold: GoldLabel) -> bool:
    if not answer:
        return False
    q = answer.get("quantities") or {}
    return all(run_check(c, q) for c in gold.checks)


# ---------------------------------------------------------------------------
# per-run scoring


@dataclass
class RunScore:
    query_id: str
    interaction: int
    routing: int
    ets: int | None
    plan: int | None
    robosolver: list[int]
    judge: list[int]
    self_correct: list[int] | None
    completion: int

    @property
    def tau(self) -> int:
        return len(self.robosolver)

    @property
    def sup(self) -> float:
        return 0.5 * (self.interaction + self.routing)

    def value(self, metric: str) -> float | None:
        """Per-run value of a metric, ``None`` when it does not apply."""
        if metric == "sup":
            return self.sup
        v = getattr(self, metric)
        if v is None:
            return None
        if isinstance(v, list):
            return sum(v) / len(v) if v else None
        return float(v)

    def to_json(self) -> dict:
        d = asdict(self)
        d["sup"] = self.sup
        return d


def score_run(log: Mapping, gold: GoldLabel) -> RunScore:
    """Indicators for one serialized run log (``RunLog.to_json()``)."""
    routes = list(log.get("routes", []))
    if gold.routes is None:
        raise ScoringError(f"{gold.query_id}: gold label lacks 'routes'")
    routing = int(routes == list(gold.routes))
    final = log.get("final_answer") or {}
    if gold.interaction is not None:
        interaction = int(gold.interaction)
    else:
        # an answer was produced without a clarification round
        interaction = int(final.get("status") in ("accepted", "rejected"))

    ets = None
    if log.get("ets") is not None or "extractor" in routes:
        if gold.ets is None:
            raise ScoringError(f"{gold.query_id}: gold label lacks 'ets' but the run extracted one")
        ets = int(log.get("ets") is not None and parse_ets(log["ets"]).same_structure(parse_ets(gold.ets)))

    plan = None
    if log.get("plan") is not None:
        if gold.tools is None:
            raise ScoringError(f"{gold.query_id}: gold label lacks 'tools' but the run planned")
        plan = int(list(log["plan"]["tools"]) == list(gold.tools))

    if not gold.checks and log.get("attempts"):
        raise ScoringError(f"{gold.query_id}: gold label lacks 'checks' but the run produced answers")
    attempts = log.get("attempts", [])
    robosolver = [int(answer_correct(a.get("answer"), gold)) for a in attempts]
    judge = []
    for a, correct in zip(attempts, robosolver):
        accepted = bool((a.get("verdict") or {}).get("accepted"))
        judge.append(int(accepted == bool(correct)))
    rejected = [i for i, a in enumerate(attempts) if not (a.get("verdict") or {}).get("accepted")]
    self_correct = None
    fixable = [i for i in rejected if i + 1 < len(attempts)]
    if rejected:
        # a rejection with no following attempt could not be fixed
        self_correct = [robosolver[i + 1] if i in fixable else 0 for i in rejected]
    completion = int(final.get("status") != "failed" and answer_correct(final, gold))
    return RunScore(gold.query_id, interaction, routing, ets, plan, robosolver, judge, self_correct,
                    completion)


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class MetricReport:
    values: dict[str, float | None]
    n: int
    total: float

    def to_json(self) -> dict:
        out = {LABELS[m]: self.values.get(m) for m in ALL_METRICS}
        out[LABELS["total"]] = self.total
        out["N"] = self.n
        return out


def total_score(values: Mapping[str, float | None]) -> float:
    """Mean over the defined components among sup, ets, plan, robosolver, judge, self-correct."""
    defined = [values[m] for m in TOTAL_COMPONENTS if values.get(m) is not None]
    if not defined:
        raise ScoringError("no metric component is defined")
    return math.fsum(defined) / len(defined)


def aggregate(scores: Sequence[RunScore]) -> MetricReport:
    if not scores:
        raise ScoringError("aggregate needs at least one run")
    values: dict[str, float | None] = {}
    for m in ALL_METRICS:
        per_run = [v for v in (s.value(m) for s in scores) if v is not None]
        values[m] = math.fsum(per_run) / len(per_run) if per_run else None
    return MetricReport(values, len(scores), total_score(values))


def display(value: float | None) -> str:
    """Two-decimal display, half-up on the shortest faithful decimal; '-' when absent."""
    if value is None:
        return "-"
    d = Decimal(f"{value:.12g}").quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return f"{d:.2f}"


def render_report(reports: Mapping[str, MetricReport]) -> str:
    """Aligned text table, one row per configuration."""
    cols = [LABELS[m] for m in TOTAL_COMPONENTS] + [LABELS["total"], LABELS["completion"], "N"]
    rows = []
    for name, r in reports.items():
        vals = [display(r.values.get(m)) for m in TOTAL_COMPONENTS]
        rows.append([name] + vals + [display(r.total), display(r.values.get("completion")), str(r.n)])
    return _table(["configuration"] + cols, rows)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(x.ljust(w) if i == 0 else x.rjust(w) for i, (x, w) in enumerate(zip(r, widths))))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# usage


@dataclass(frozen=True)
class UsageRecord:
    prompt_tokens: float = 0
    completion_tokens: float = 0
    runtime: float = 0.0
    cost: float = 0.0

    def __post_init__(self):
        if min(self.prompt_tokens, self.completion_tokens, self.runtime, self.cost) < 0:
            raise ValueError("usage values must be nonnegative")

    @property
    def total_tokens(self) -> float:
        return self.prompt_tokens + self.completion_tokens

    def to_json(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens,
                "total_tokens": self.total_tokens, "runtime": self.runtime, "cost": self.cost}


@dataclass
class PriceTable:
    """Per-1K-token prices by model name."""

    prices: dict[str, tuple[float, float]] = field(default_factory=lambda: {"scripted": (0.0, 0.0)})

    @classmethod
    def from_json(cls, d: Mapping) -> "PriceTable":
        return cls({k: (float(v["prompt"]), float(v["completion"])) for k, v in d.items()})

    def cost(self, model: str, prompt: float, completion: float) -> float:
        if model not in self.prices:
            raise PriceError(model)
        p, c = self.prices[model]
        return (prompt * p + completion * c) / 1000.0


def usage_report(logs: Iterable[Mapping], prices: PriceTable | None = None) -> dict[str, UsageRecord]:
    """Mean usage per run, grouped by ``backend/model``."""
    prices = prices or PriceTable()
    groups: dict[str, list[UsageRecord]] = {}
    for log in logs:
        u = log["usage"]
        rec = UsageRecord(u["prompt_tokens"], u["completion_tokens"], u["runtime"],
                          prices.cost(log["model"], u["prompt_tokens"], u["completion_tokens"]))
        groups.setdefault(f"{log['backend']}/{log['model']}", []).append(rec)
    out = {}
    for key, recs in sorted(groups.items()):
        n = len(recs)
        out[key] = UsageRecord(*(math.fsum(getattr(r, f) for r in recs) / n
                                 for f in ("prompt_tokens", "completion_tokens", "runtime", "cost")))
    return out


def render_usage(table: Mapping[str, UsageRecord]) -> str:
    rows = [[k, f"{u.prompt_tokens:.1f}", f"{u.completion_tokens:.1f}", f"{u.total_tokens:.1f}",
             f"{u.runtime:.3f}", f"{u.cost:.4f}"] for k, u in table.items()]
    return _table(["configuration", "prompt", "completion", "total", "runtime_s", "cost"], rows)


def report_json(report: MetricReport, scores: Sequence[RunScore], usage: Mapping[str, UsageRecord]) -> str:
    doc = {"metrics": report.to_json(),
           "display": {LABELS[m]: display(report.values.get(m)) for m in ALL_METRICS} | {
               LABELS["total"]: display(report.total)},
           "runs": [s.to_json() for s in scores],
           "usage": {k: u.to_json() for k, u in usage.items()}}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
