"""Text-generation backends.

A backend answers one role at a time (``supervisor``, ``extractor``,
``planner``, ``robosolver``, ``inspector``) with a JSON object.  The scripted
backend is deterministic and offline; the remote backend talks to an
OpenAI-compatible chat-completions endpoint.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from . import rules
from .tools import TOOLS

ROLES = ("supervisor", "extractor", "planner", "robosolver", "inspector")

ENV_ENDPOINT = "ARMSOLVER_LLM_ENDPOINT"
ENV_MODEL = "ARMSOLVER_LLM_MODEL"
ENV_TOKEN = "ARMSOLVER_LLM_TOKEN"


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class Completion:
    data: dict
    prompt_tokens: int = 0
    completion_tokens: int = 0


class Backend(ABC):
    name = "abstract"
    model = "none"

    @abstractmethod
    def complete(self, role: str, payload: dict) -> Completion:
        """Answer ``role`` given ``payload``; the result schema depends on the role."""


def fingerprint(text: str) -> str:
    return hashlib.sha256(rules.normalize_text(text).encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# scripted


def _default_tables_dir():
    return resources.files("armsolver.fixtures").joinpath("scripted")


def _substitute(value, env: dict):
    if isinstance(value, str) and value.startswith("$"):
        key = value[1:]
        if key in env:
            return env[key]
        return value
    if isinstance(value, list):
        return [_substitute(v, env) for v in value]
    if isinstance(value, dict):
        return {k: _substitute(v, env) for k, v in value.items()}
    return value


class ScriptedBackend(Backend):
    """Fixture-keyed stand-in for a language model.

    ``extractor.json`` maps robot descriptions to ETS strings; a description
    matches when its normalized text occurs inside the input.
    ``robosolver.json`` maps query fingerprints to per-attempt call scripts.
    Queries without a script fall back to calling each planned tool with
    arguments filled from the run context.  Token usage is always zero.
    """

    name = "scripted"
    model = "scripted"

    def __init__(self, tables_dir=None):
        root = Path(tables_dir) if tables_dir is not None else _default_tables_dir()
        self.descriptions: list[tuple[str, str, str]] = []
        for entry in json.loads(root.joinpath("extractor.json").read_text(encoding="utf-8")):
            text = entry.get("text")
            if text is None:
                text = resources.files("armsolver.fixtures").joinpath(entry["text_file"]).read_text(
                    encoding="utf-8")
            self.descriptions.append((entry["id"], rules.normalize_text(text), entry["ets"]))
        self.scripts: dict[str, dict] = json.loads(
            root.joinpath("robosolver.json").read_text(encoding="utf-8"))

    def match_description(self, text: str) -> tuple[str, str] | None:
        norm = rules.normalize_text(text)
        best = None
        for key, desc, ets in self.descriptions:
            if desc and desc in norm and (best is None or len(desc) > len(best[1])):
                best = (key, desc, ets)
        return None if best is None else (best[0], best[2])

    def complete(self, role: str, payload: dict) -> Completion:
        handler = getattr(self, "_" + role, None)
        if role not in ROLES or handler is None:
            raise BackendError(f"unknown role {role!r}")
        return Completion(handler(payload))

    def _supervisor(self, p):
        text = p.get("context") or p["query"]
        matched = self.match_description(text) is not None
        route = rules.route_rule(text, bool(p.get("has_attachment")), p.get("stage", "initial"), matched)
        return {"route": route}

    def _extractor(self, p):
        hit = self.match_description(p["description"])
        if hit is None:
            return {"error": "no elementary transform sequence could be identified"}
        return {"ets": hit[1], "fixture": hit[0]}

    def _planner(self, p):
        robot = p.get("robot") or None
        tools, reason = rules.plan_rule(p["goal"], bool(p.get("ets")),
                                        None if robot is None else bool(robot.get("builtin")))
        if not tools:
            return {"error": reason}
        return {"summary": f"Use {', '.join(tools)} in that order.", "tools": tools}

    def _env(self, p) -> dict:
        env = {"ets": p.get("ets")}
        ids = [c["observation"]["quantities"]["robot_id"] for c in p.get("run_calls", [])
               if c["ok"] and "robot_id" in c["observation"].get("quantities", {})]
        robot = p.get("robot") or {}
        env["robot_id"] = ids[-1] if ids else robot.get("id")
        for c in p.get("run_calls", []):
            if c["ok"] and "ik" in c["observation"].get("quantities", {}):
                env["ik_q"] = c["observation"]["quantities"]["ik"]["q"]
        return env

    def _script_steps(self, p) -> tuple[list[dict], dict]:
        script = self.scripts.get(fingerprint(p["query"]))
        if script is None:
            return [{"tool": t, "arguments": self._default_args(t, p["query"])} for t in p["plan"]], {}
        attempts = script["attempts"]
        return attempts[min(p["attempt"], len(attempts) - 1)], script

    @staticmethod
    def _default_args(tool: str, query: str) -> dict:
        if tool.startswith("Symbolic_"):
            return {"ets": "$ets"}
        if tool == "create_custom_userdefined_robot":
            return {"name": "custom", "ets": "$ets"}
        if tool == "create_robotictoolbox_robot":
            words = rules.normalize_text(query).replace(".", " ").split()
            return {"name": next((w for w in words if w in rules.BUILTIN_NAMES), "")}
        args = {"robot_id": "$robot_id"}
        if tool in ("compute_Jacobian",):
            args["q"] = "qr"
        elif tool == "forward_kinematics_custom_userdefined_robot":
            args["joint_configurations"] = ["qr"]
        elif tool in ("plot_robot_motion", "plot_custom_robot_motion", "quintic_joint_trajectory"):
            args["q_end"] = "qr"
        return args

    def _robosolver(self, p):
        steps, script = self._script_steps(p)
        done = len(p.get("calls", []))
        if done < len(steps):
            # substituted late: a step may need the id an earlier step created
            step = _substitute(steps[done], self._env(p))
            return {"action": "call", "tool": step["tool"], "arguments": step.get("arguments", {})}
        quantities: dict[str, Any] = {}
        for c in p.get("run_calls", []):
            if c["ok"]:
                quantities.update(c["observation"].get("quantities", {}))
        for k in script.get("omit", []):
            quantities.pop(k, None)
        calls = p.get("calls", [])
        if calls and not calls[-1]["ok"]:
            text = "Error occurred: " + json.dumps(calls[-1]["observation"], sort_keys=True)
        else:
            ran = ", ".join(dict.fromkeys(c["tool"] for c in calls)) or "no tools"
            text = f"Completed the request using {ran}."
            if "robot_id" in quantities:
                text += f" The operation was performed on the robot with ID '{quantities['robot_id']}'."
        return {"action": "final", "text": text, "quantities": quantities}

    def _inspector(self, p):
        ok, feedback = rules.inspect_rule(p["plan"], p["run_calls"], p["answer"])
        return {"accepted": ok, "feedback": feedback}


# ---------------------------------------------------------------------------
# remote

_PROMPTS = {
    "supervisor": (
        "You route robotics requests. Reply with JSON {\"route\": R} where R is one of "
        "researcher, retriever, extractor, planner. Use retriever when a text attachment is "
        "present and unread, extractor when the request describes a robot's structure that has "
        "not been converted to an elementary transform sequence yet, researcher for requests "
        "needing web information, planner otherwise."),
    "extractor": (
        "Convert the robot description into an elementary transform sequence. Use Rx/Ry/Rz for "
        "rotations and tx/ty/tz for translations; joint variables are q1, q2, ... for revolute "
        "and d1, d2, ... for prismatic joints, a leading '-' marks a flipped joint, constants are "
        "numbers or symbols such as L1. Reply with JSON {\"ets\": \"...\"}."),
    "planner": (
        "Choose the ordered list of tools that solves the request. Only use tool names from the "
        "provided catalog. Reply with JSON {\"summary\": \"...\", \"tools\": [...]} or "
        "{\"error\": \"reason\"} when nothing applies."),
    "robosolver": (
        "You solve the request by calling the visible tools one at a time. Reply with JSON "
        "{\"action\": \"call\", \"tool\": NAME, \"arguments\": {...}} to call a tool, or "
        "{\"action\": \"final\", \"text\": \"...\", \"quantities\": {...}} when done. Copy tool "
        "result quantities into the final answer. Address robots by the ID returned when they "
        "were created. Take the inspector feedback into account."),
    "inspector": (
        "Check whether the solver's answer fully and correctly addresses the request given its "
        "tool transcript. Reply with JSON {\"accepted\": true|false, \"feedback\": \"...\"}; "
        "when rejecting, name the failing call and the correction."),
}


class RemoteBackend(Backend):
    """Chat-completions client configured from the environment or arguments."""

    name = "remote"

    def __init__(self, endpoint: str | None = None, model: str | None = None,
                 token: str | None = None, client=None, timeout: float = 120.0):
        import httpx

        self.endpoint = (endpoint or os.environ.get(ENV_ENDPOINT) or "").rstrip("/")
        self.model = model or os.environ.get(ENV_MODEL) or ""
        self.token = token if token is not None else os.environ.get(ENV_TOKEN, "")
        if not self.endpoint or not self.model:
            raise BackendError(f"remote backend needs {ENV_ENDPOINT} and {ENV_MODEL}")
        self._client = client or httpx.Client(timeout=timeout)
        self._httpx = httpx

    def complete(self, role: str, payload: dict) -> Completion:
        if role not in _PROMPTS:
            raise BackendError(f"unknown role {role!r}")
        if role == "planner":
            payload = dict(payload, catalog=[{"name": n, "description": TOOLS[n].description}
                                             for n in TOOLS])
        body = {"model": self.model, "temperature": 0,
                "response_format": {"type": "json_object"},
                "messages": [{"role": "system", "content": _PROMPTS[role]},
                             {"role": "user", "content": json.dumps(payload, sort_keys=True, default=str)}]}
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        try:
            resp = self._client.post(f"{self.endpoint}/chat/completions", json=body, headers=headers)
        except self._httpx.HTTPError as exc:
            raise BackendError(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"endpoint returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc
        data = _parse_json_object(content)
        usage = doc.get("usage") or {}
        return Completion(data, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))


def _parse_json_object(content: str) -> dict:
    text = content.strip()
    fence = re.match(r"^```(?:json)?\s*(.*?)\s*```$", text, re.DOTALL)
    if fence:
        text = fence.group(1)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BackendError(f"backend reply is not JSON: {content[:200]!r}") from exc
    if not isinstance(data, dict):
        raise BackendError("backend reply is not a JSON object")
    return data


def make_backend(name: str, **kwargs) -> Backend:
    if name == "scripted":
        return ScriptedBackend(**kwargs)
    if name == "remote":
        return RemoteBackend(**kwargs)
    raise BackendError(f"unknown backend {name!r} (use scripted or remote)")
