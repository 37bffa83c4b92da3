"""The agent pipeline: supervisor routing, retrieval, extraction, planning,
a ReAct solving loop and inspection with corrective retries.

Every stage talks to a :class:`~armsolver.agents.backend.Backend`; all the
orchestration here is deterministic, so a deterministic backend yields a
byte-identical :class:`RunLog`.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..ets import EtsSyntaxError, InvalidRobotIdError, RobotRegistry, format_ets, parse_ets
from . import rules
from .backend import Backend, BackendError, Completion
from .tools import TOOLS, ToolContext, execute_tool

MAX_ATTEMPTS = 3
MAX_STEPS = 12
MAX_ROUTES = 4
RUNLOG_SCHEMA = "armsolver.runlog/1"


class PipelineError(RuntimeError):
    pass


class UnsupportedInputError(PipelineError):
    pass


class CannotPlanError(PipelineError):
    pass


@dataclass(frozen=True)
class Query:
    text: str
    attachment: str | None = None
    session_id: str = "default"

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise ValueError("query text must be non-empty")


@dataclass(frozen=True)
class ToolPlan:
    summary: str
    tools: tuple[str, ...]

    def __post_init__(self):
        unknown = [t for t in self.tools if t not in TOOLS]
        if unknown:
            raise CannotPlanError(f"unknown tool(s) in plan: {', '.join(unknown)}")


@dataclass
class SessionMemory:
    """Append-only (query, final answer) history per session id."""

    _entries: dict[str, list[tuple[str, dict]]] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def append(self, session_id: str, query: str, answer: dict) -> None:
        with self._lock:
            self._entries.setdefault(session_id, []).append((query, answer))

    def history(self, session_id: str) -> list[tuple[str, dict]]:
        return list(self._entries.get(session_id, []))

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def last_robot_id(self, session_id: str) -> str | None:
        for _, answer in reversed(self.history(session_id)):
            rid = answer.get("quantities", {}).get("robot_id")
            if rid:
                return rid
        return None


@dataclass
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    calls: int = 0
    runtime: float = 0.0

    def add(self, c: Completion) -> None:
        self.prompt_tokens += c.prompt_tokens
        self.completion_tokens += c.completion_tokens
        self.calls += 1

    def to_json(self) -> dict:
        return {"prompt_tokens": self.prompt_tokens, "completion_tokens": self.completion_tokens,
                "total_tokens": self.prompt_tokens + self.completion_tokens,
                "backend_calls": self.calls, "runtime": self.runtime}


@dataclass
class RunLog:
    query: Query
    backend: str
    model: str
    routes: list[str] = field(default_factory=list)
    retrieved: str | None = None
    ets: str | None = None
    plan: ToolPlan | None = None
    attempts: list[dict] = field(default_factory=list)
    final_answer: dict = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    usage: Usage = field(default_factory=Usage)
    run_id: str = ""

    @property
    def tau(self) -> int:
        return len(self.attempts)

    @property
    def calls(self) -> list[dict]:
        return [c for a in self.attempts for c in a["calls"]]

    def to_json(self) -> dict:
        return {
            "schema": RUNLOG_SCHEMA,
            "run_id": self.run_id,
            "session_id": self.query.session_id,
            "query": {"text": self.query.text, "attachment": self.query.attachment},
            "backend": self.backend,
            "model": self.model,
            "routes": list(self.routes),
            "retrieved": self.retrieved,
            "ets": self.ets,
            "plan": None if self.plan is None else {"summary": self.plan.summary,
                                                    "tools": list(self.plan.tools)},
            "attempts": self.attempts,
            "tau": self.tau,
            "final_answer": self.final_answer,
            "errors": list(self.errors),
            "usage": self.usage.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _ask(backend: Backend, role: str, payload: dict, usage: Usage) -> dict:
    c = backend.complete(role, payload)
    usage.add(c)
    return c.data


# ---------------------------------------------------------------------------
# stages


def route(query: Query, memory: SessionMemory, backend: Backend, stage: str = "initial",
          context: str | None = None, usage: Usage | None = None) -> str:
    payload = {"query": query.text, "has_attachment": query.attachment is not None,
               "stage": stage, "context": context,
               "memory": [q for q, _ in memory.history(query.session_id)]}
    data = _ask(backend, "supervisor", payload, usage or Usage())
    r = data.get("route")
    if r not in rules.ROUTES:
        # an unusable routing decision falls back to the planner
        return rules.PLANNER
    return r


def retrieve(attachment) -> str:
    """Whole-file text of a plain-text attachment."""
    path = Path(attachment)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise PipelineError(f"cannot read attachment {path.name}: {exc.strerror}") from None
    if raw.startswith(b"%PDF") or path.suffix.lower() in (".pdf", ".png", ".jpg", ".jpeg", ".gif"):
        raise UnsupportedInputError(f"unsupported attachment format: {path.name} (plain text only)")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise UnsupportedInputError(f"unsupported attachment format: {path.name} is not UTF-8 text") from None
    if "\x00" in text:
        raise UnsupportedInputError(f"unsupported attachment format: {path.name} is binary")
    return text


def extract(description: str, backend: Backend, usage: Usage | None = None):
    data = _ask(backend, "extractor", {"description": description}, usage or Usage())
    if "error" in data:
        raise PipelineError(f"extraction failed: {data['error']}")
    raw = str(data.get("ets", ""))
    try:
        return parse_ets(raw)
    except EtsSyntaxError as exc:
        raise PipelineError(f"extractor returned an unparseable ETS {raw!r}: {exc}") from None


def plan(goal: str, backend: Backend, ets=None, robot: dict | None = None,
         usage: Usage | None = None) -> ToolPlan:
    payload = {"goal": goal, "ets": None if ets is None else format_ets(ets), "robot": robot}
    data = _ask(backend, "planner", payload, usage or Usage())
    if "error" in data or not data.get("tools"):
        raise CannotPlanError(f"cannot plan: {data.get('error', 'empty tool list')}")
    return ToolPlan(str(data.get("summary", "")), tuple(data["tools"]))


def react_solve(plan_: ToolPlan, ctx: ToolContext, backend: Backend, query: Query,
                attempt: int = 0, prior_calls: list[dict] | None = None,
                feedback: list[str] | None = None, ets: str | None = None,
                robot: dict | None = None, max_steps: int = MAX_STEPS,
                usage: Usage | None = None, context: str | None = None) -> dict:
    """One solver attempt: alternate backend decisions and tool executions."""
    usage = usage or Usage()
    prior_calls = list(prior_calls or [])
    calls: list[dict] = []
    record = {"index": attempt, "calls": calls, "answer": None, "status": "running"}
    if not plan_.tools:
        record["status"] = "failed"
        record["answer"] = {"text": "No tools were planned.", "quantities": {}}
        return record
    visible = list(plan_.tools)
    for _ in range(max_steps):
        payload = {"query": query.text, "context": context, "plan": visible, "attempt": attempt, "ets": ets,
                   "robot": robot, "calls": calls, "run_calls": prior_calls + calls,
                   "feedback": list(feedback or []),
                   "tools": [{"name": n, "arguments": list(TOOLS[n].params)} for n in visible]}
        data = _ask(backend, "robosolver", payload, usage)
        if data.get("action") == "final":
            record["answer"] = {"text": str(data.get("text", "")),
                                "quantities": data.get("quantities") or {}}
            record["status"] = "answered"
            return record
        name = data.get("tool")
        args = data.get("arguments") or {}
        if name not in visible:
            ok, obs = False, {"error": f"tool {name!r} is not available in this plan",
                              "current_tool_name": name, "current_tool_arg": args}
        else:
            ok, obs = execute_tool(ctx, name, args)
        calls.append({"tool": name, "arguments": args, "ok": ok, "observation": obs})
    record["status"] = "failed"
    record["answer"] = {"text": f"Step limit of {max_steps} reached without a final answer.",
                        "quantities": {}}
    return record


def inspect(attempt: dict, plan_: ToolPlan, query: Query, run_calls: list[dict],
            backend: Backend, usage: Usage | None = None) -> dict:
    payload = {"query": query.text, "plan": list(plan_.tools), "calls": attempt["calls"],
               "run_calls": run_calls, "answer": attempt["answer"]}
    data = _ask(backend, "inspector", payload, usage or Usage())
    accepted = bool(data.get("accepted"))
    return {"accepted": accepted, "feedback": str(data.get("feedback", ""))}


# ---------------------------------------------------------------------------
# orchestration


def _robot_context(memory: SessionMemory, session_id: str, registry: RobotRegistry):
    rid = memory.last_robot_id(session_id)
    if rid is None:
        return None
    try:
        model = registry.get(rid)
    except InvalidRobotIdError:
        return None
    return {"id": rid, "builtin": model.builtin, "name": model.name}


def run_query(query: Query, registry: RobotRegistry, backend: Backend, memory: SessionMemory,
              workspace: Path | None = None, run_id: str = "run",
              clock: Callable[[], float] = time.perf_counter, max_attempts: int = MAX_ATTEMPTS,
              max_steps: int = MAX_STEPS) -> RunLog:
    """Answer one query end to end; hard errors become a failure answer, never an exception."""
    log = RunLog(query=query, backend=backend.name, model=backend.model, run_id=run_id)
    start = clock()
    try:
        _run(log, query, registry, backend, memory, workspace, run_id, max_attempts, max_steps)
    except (PipelineError, BackendError) as exc:
        log.errors.append(str(exc))
        log.final_answer = {"status": "failed", "text": f"The request could not be completed: {exc}",
                            "quantities": {}}
        if not log.attempts:
            # the run never reached the solver; count it as one failed attempt
            log.attempts.append({"index": 0, "calls": [], "answer": dict(log.final_answer),
                                 "status": "failed",
                                 "verdict": {"accepted": False, "feedback": str(exc)}})
    log.usage.runtime = clock() - start
    memory.append(query.session_id, query.text, log.final_answer)
    return log


def _run(log: RunLog, query: Query, registry, backend, memory, workspace, run_id,
         max_attempts, max_steps) -> None:
    usage = log.usage
    text = query.text
    ets = None
    stage = "initial"
    for _ in range(MAX_ROUTES):
        r = route(query, memory, backend, stage, None if stage == "initial" else text, usage)
        log.routes.append(r)
        if r == rules.RETRIEVER:
            if query.attachment is None:
                raise PipelineError("routed to the retriever without an attachment")
            log.retrieved = retrieve(query.attachment)
            if not log.retrieved.strip():
                raise PipelineError("the attachment is empty; nothing to answer")
            text = f"{query.text}\n{log.retrieved}"
            stage = "after_retrieval"
        elif r == rules.EXTRACTOR:
            ets = extract(text, backend, usage)
            log.ets = format_ets(ets)
            stage = "after_extraction"
        elif r == rules.RESEARCHER:
            raise PipelineError("web research is not available in this build")
        else:
            break
    else:
        raise PipelineError("routing did not reach the planner")

    robot = _robot_context(memory, query.session_id, registry)
    log.plan = plan(text, backend, ets, robot, usage)
    ctx = ToolContext(registry, workspace, prefix=run_id)
    feedback: list[str] = []
    for k in range(max_attempts):
        attempt = react_solve(log.plan, ctx, backend, query, k, log.calls, feedback, log.ets,
                              robot, max_steps, usage, context=text if text != query.text else None)
        log.attempts.append(attempt)
        verdict = inspect(attempt, log.plan, query, log.calls, backend, usage)
        attempt["verdict"] = verdict
        if verdict["accepted"]:
            log.final_answer = {"status": "accepted", **attempt["answer"]}
            return
        feedback.append(verdict["feedback"])
    last = log.attempts[-1]["answer"]
    log.final_answer = {"status": "rejected", **last}
