"""Deterministic decision rules used by the scripted backend.

Routing, tool planning and answer inspection here are mechanical: keyword
tables and transcript checks.  They stand in for a language model so the
pipeline can be exercised offline with reproducible results.
"""
from __future__ import annotations

import json
import re

from .tools import TOOLS, quantity_present

RESEARCHER = "researcher"
RETRIEVER = "retriever"
EXTRACTOR = "extractor"
PLANNER = "planner"
ROUTES = (RESEARCHER, RETRIEVER, EXTRACTOR, PLANNER)

_STRUCTURE = re.compile(
    r"kinematic chain|\bjoint 1\b|revolute joint|prismatic joint|\blink 1\b|elementary transform",
    re.IGNORECASE)
_WEB = re.compile(r"search the web|on the internet|look (it )?up online|latest news", re.IGNORECASE)

BUILTIN_NAMES = ("panda", "ur3", "lbr", "frankie", "puma", "kuka", "ur5", "ur10")


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def describes_structure(text: str) -> bool:
    return bool(_STRUCTURE.search(text))


def route_rule(text: str, has_attachment: bool, stage: str, matched_fixture: bool) -> str:
    """Supervisor precedence: attachment, structure, web request, planner."""
    if stage == "initial" and has_attachment:
        return RETRIEVER
    if stage != "after_extraction" and (matched_fixture or describes_structure(text)):
        return EXTRACTOR
    if _WEB.search(text):
        return RESEARCHER
    return PLANNER


def _has(text: str, *words: str) -> bool:
    return any(w in text for w in words)


def plan_rule(goal: str, has_ets: bool, robot_builtin: bool | None) -> tuple[list[str], str]:
    """Ordered tool list for a goal, or ``([], reason)`` when nothing applies.

    ``robot_builtin`` describes the robot known from earlier turns (``None``
    when there is none).
    """
    g = normalize_text(goal)
    tools: list[str] = []
    mentions_builtin = any(re.search(rf"\b{n}\b", g) for n in BUILTIN_NAMES)
    creating = _has(g, "create", "build", "make a", "model")
    velocity = "velocity" in g
    accel = "acceleration" in g
    fk_phrase = "forward kinematic" in g
    jac = "jacobian" in g

    if has_ets:
        if fk_phrase or ((velocity or accel) and not _has(g, "simulate")):
            tools.append("Symbolic_Forward_Kinematic_ET")
        if velocity and not _has(g, "simulate"):
            tools.append("Symbolic_EndEffector_Velocity")
        if accel:
            tools.append("Symbolic_EndEffector_Acceleration")
        if jac:
            tools.append("Symbolic_Jacobian")
        if creating or _has(g, "plot", "simulate", "substitut", "inverse kinematic", "trajectory"):
            tools.append("create_custom_userdefined_robot")
        custom = True
    else:
        if creating and mentions_builtin:
            tools.append("create_robotictoolbox_robot")
            custom = False
        else:
            custom = robot_builtin is False
        if fk_phrase:
            tools.append("forward_kinematics_custom_userdefined_robot")
    if "inverse kinematic" in g:
        tools.append("inverse_kinematics")
    if "plot" in g and _has(g, "motion", "move"):
        tools.append("plot_custom_robot_motion" if custom else "plot_robot_motion")
    if jac and not has_ets:
        tools.append("compute_Jacobian")
    if _has(g, "servo", "position controller", "proportional gain"):
        tools.append("simulate_robot_motion_Position_based_Servoing")
    if "joint velocit" in g:
        tools.append("simulate_joint_velocity")
    if _has(g, "end-effector velocity", "end effector velocity") and "simulate" in g:
        tools.append("simulate_ee_velocity")
    if _has(g, "quintic", "trajectory"):
        tools.append("quintic_joint_trajectory")
    if _has(g, "export", "csv", "save"):
        tools.append("export_trajectory")
    if not tools:
        return [], "no tool in the catalog addresses this request"
    return tools, ""


def unresolved_errors(calls: list[dict]) -> list[dict]:
    """Failed calls with no later successful call of the same tool."""
    out = []
    for i, c in enumerate(calls):
        if c["ok"]:
            continue
        if not any(d["ok"] and d["tool"] == c["tool"] for d in calls[i + 1:]):
            out.append(c)
    return out


def _known_ids(calls: list[dict]) -> list[str]:
    return [c["observation"]["quantities"]["robot_id"] for c in calls
            if c["ok"] and "robot_id" in c["observation"].get("quantities", {})]


def inspect_rule(plan: list[str], calls: list[dict], answer: dict) -> tuple[bool, str]:
    """Mechanical inspection of one attempt against the run so far.

    ``calls`` is every tool call of the run up to and including this attempt.
    """
    problems = []
    for c in unresolved_errors(calls):
        obs = c["observation"]
        args = json.dumps(c["arguments"], sort_keys=True)
        msg = f"The call to {c['tool']} failed with '{obs.get('error')}' (arguments {args})."
        if obs.get("error") == "Invalid robot ID":
            ids = _known_ids(calls)
            bad = c["arguments"].get("robot_id_local", c["arguments"].get("robot_id"))
            if ids:
                msg += (f" '{bad}' is not a robot ID; the generated Robot ID '{ids[-1]}' "
                        "should be used instead of the name.")
            else:
                msg += " Create the robot first and pass the Robot ID it returns."
        else:
            msg += " Correct the arguments and call the tool again."
        problems.append(msg)
    done = {c["tool"] for c in calls if c["ok"]}
    for t in plan:
        if t not in done:
            problems.append(f"The planned tool {t} was never executed successfully.")
    quantities = answer.get("quantities", {})
    for t in plan:
        if t in done and not quantity_present(t, quantities):
            problems.append(f"The answer does not report the {TOOLS[t].quantity} result of {t}.")
    if problems:
        return False, " ".join(problems)
    return True, "The answer matches the query: every planned tool ran and each requested result is reported."
