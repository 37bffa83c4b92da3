import json
import os

import httpx
import pytest

from armsolver.agents import (
    Backend, BackendError, CannotPlanError, Completion, PipelineError, Query, RemoteBackend,
    ScriptedBackend, SessionMemory, ToolContext, ToolPlan, UnsupportedInputError, execute_tool,
    make_backend, react_solve, retrieve, run_query,
)
from armsolver.agents import rules
from armsolver.agents.backend import fingerprint
from armsolver.ets import RobotRegistry
from armsolver.fixtures import describe_chain, fig4_text


@pytest.fixture
def scripted():
    return ScriptedBackend()


def _ask(text, backend, attach=None, session="s", memory=None, registry=None, **kw):
    memory = SessionMemory() if memory is None else memory
    registry = RobotRegistry(7) if registry is None else registry
    return run_query(Query(text, attach, session), registry, backend, memory,
                     clock=lambda: 0.0, **kw), memory, registry


# ---------------------------------------------------------------------------
# tools


def test_invalid_robot_id_is_an_observation():
    ctx = ToolContext(RobotRegistry(1))
    ok, obs = execute_tool(ctx, "compute_Jacobian", {"robot_id": "panda", "q": "qr"})
    assert not ok
    assert obs == {"error": "Invalid robot ID", "current_tool_name": "compute_Jacobian",
                   "current_tool_arg": {"robot_id": "panda", "q": "qr"}}


def test_unknown_tool_and_bad_arguments():
    ctx = ToolContext(RobotRegistry(1))
    ok, obs = execute_tool(ctx, "teleport", {})
    assert not ok and "unknown tool" in obs["error"]
    ok, obs = execute_tool(ctx, "Symbolic_Forward_Kinematic_ET", {"ets": "Rz(q1) Qx(2)"})
    assert not ok and "could not parse" in obs["error"]
    ok, obs = execute_tool(ctx, "create_custom_userdefined_robot", {"ets": "Rz(q1) tx(L1)"})
    assert not ok and "L1" in obs["error"]


def test_create_and_use_builtin():
    ctx = ToolContext(RobotRegistry(1))
    ok, obs = execute_tool(ctx, "create_robotictoolbox_robot", {"name": "ur3"})
    assert ok
    rid = obs["quantities"]["robot_id"]
    ok, obs = execute_tool(ctx, "compute_Jacobian", {"robot_id": rid, "q": "qr", "frame": "both"})
    assert ok and set(obs["quantities"]["jacobian"]) == {"world", "end-effector"}
    # a built-in robot must be plotted with the built-in tool
    ok, obs = execute_tool(ctx, "plot_custom_robot_motion", {"robot_id": rid, "q_end": "qr"})
    assert not ok and "plot_robot_motion" in obs["error"]
    ok, obs = execute_tool(ctx, "plot_robot_motion", {"robot_id": rid, "q_end": "qr"})
    assert ok and obs["quantities"]["motion"]["records"] == 50


def test_symbolic_fk_tool_prints_matrix():
    ctx = ToolContext(RobotRegistry(1))
    ok, obs = execute_tool(ctx, "Symbolic_Forward_Kinematic_ET", {"ets": "Rz(q1) tx(L1)"})
    assert ok
    fk = obs["quantities"]["fk_symbolic"]
    assert fk[0][3] == "L1*cos(theta1)" and fk[3] == ["0", "0", "0", "1"]


def test_export_needs_a_trajectory(tmp_path):
    ctx = ToolContext(RobotRegistry(1), tmp_path)
    ok, obs = execute_tool(ctx, "export_trajectory", {"format": "csv"})
    assert not ok and "no trajectory" in obs["error"]


# ---------------------------------------------------------------------------
# rules


@pytest.mark.parametrize("text,attach,stage,matched,expected", [
    ("Compute the Jacobian of the panda", True, "initial", False, "retriever"),
    ("Joint 1 is a revolute joint", True, "initial", False, "retriever"),
    ("Joint 1 is a revolute joint", False, "initial", False, "extractor"),
    ("Joint 1 is a revolute joint", False, "after_extraction", False, "planner"),
    ("anything", False, "after_retrieval", True, "extractor"),
    ("search the web for the latest news on arms", False, "initial", False, "researcher"),
    ("Create a panda robot", False, "initial", False, "planner"),
])
def test_route_precedence(text, attach, stage, matched, expected):
    assert rules.route_rule(text, attach, stage, matched) == expected


@pytest.mark.parametrize("goal,has_ets,builtin,tools", [
    ("Compute the forward kinematics of the following robot.", True, None,
     ["Symbolic_Forward_Kinematic_ET"]),
    ("Compute the velocity and acceleration of the end effector.", True, None,
     ["Symbolic_Forward_Kinematic_ET", "Symbolic_EndEffector_Velocity", "Symbolic_EndEffector_Acceleration"]),
    ("Create a ur3 robot and compute the Jacobian.", False, None,
     ["create_robotictoolbox_robot", "compute_Jacobian"]),
    ("Solve the inverse kinematics and plot the motion.", False, False,
     ["inverse_kinematics", "plot_custom_robot_motion"]),
    ("Plan a quintic trajectory and export it to csv.", False, True,
     ["quintic_joint_trajectory", "export_trajectory"]),
])
def test_plan_rule(goal, has_ets, builtin, tools):
    assert rules.plan_rule(goal, has_ets, builtin) == (tools, "")


def test_plan_rule_gives_up():
    tools, reason = rules.plan_rule("Tell me a joke.", False, None)
    assert tools == [] and reason


def test_inspect_rule_names_the_generated_id():
    calls = [
        {"tool": "create_robotictoolbox_robot", "arguments": {"name": "panda"}, "ok": True,
         "observation": {"quantities": {"robot_id": "r-1234"}}},
        {"tool": "simulate_robot_motion_Position_based_Servoing",
         "arguments": {"robot_id_local": "panda"}, "ok": False,
         "observation": {"error": "Invalid robot ID"}},
    ]
    plan = ["create_robotictoolbox_robot", "simulate_robot_motion_Position_based_Servoing"]
    ok, feedback = rules.inspect_rule(plan, calls, {"quantities": {"robot_id": "r-1234"}})
    assert not ok
    assert "'panda' is not a robot ID" in feedback and "'r-1234'" in feedback
    assert "never executed successfully" in feedback


def test_inspect_rule_accepts_complete_answer():
    calls = [{"tool": "Symbolic_Jacobian", "arguments": {}, "ok": True,
              "observation": {"quantities": {"jacobian_symbolic": []}}}]
    ok, _ = rules.inspect_rule(["Symbolic_Jacobian"], calls, {"quantities": {"jacobian_symbolic": []}})
    assert ok
    ok, feedback = rules.inspect_rule(["Symbolic_Jacobian"], calls, {"quantities": {}})
    assert not ok and "does not report" in feedback


# ---------------------------------------------------------------------------
# retrieval


def test_retrieve_plain_text(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("hello\nworld", encoding="utf-8")
    assert retrieve(p) == "hello\nworld"
    empty = tmp_path / "e.txt"
    empty.write_bytes(b"")
    assert retrieve(empty) == ""


@pytest.mark.parametrize("name,data", [("doc.pdf", b"%PDF-1.4 ..."), ("x.bin", b"\x00\x01\x02"),
                                       ("img.png", b"png"), ("l1.txt", b"\xff\xfe\xfa")])
def test_retrieve_rejects_non_text(tmp_path, name, data):
    p = tmp_path / name
    p.write_bytes(data)
    with pytest.raises(UnsupportedInputError):
        retrieve(p)


def test_retrieve_missing_file(tmp_path):
    with pytest.raises(PipelineError):
        retrieve(tmp_path / "nope.txt")


# ---------------------------------------------------------------------------
# pipeline


def test_fk_query_end_to_end(scripted):
    q = "Compute the forward kinematics of the following robot. " + fig4_text(10)
    log, memory, _ = _ask(q, scripted)
    assert log.routes == ["extractor", "planner"]
    assert log.ets == "Rz(q1) tz(L1) tx(d2)"
    assert log.plan.tools == ("Symbolic_Forward_Kinematic_ET",)
    assert log.tau == 1 and log.final_answer["status"] == "accepted"
    assert "fk_symbolic" in log.final_answer["quantities"]
    assert len(memory) == 1


def test_unplannable_query_fails_with_one_attempt(scripted):
    log, memory, _ = _ask("Tell me a joke about robots.", scripted)
    assert log.routes == ["planner"]
    assert log.final_answer["status"] == "failed"
    assert log.tau == 1
    assert "cannot plan" in log.errors[0]
    assert len(memory) == 1


def test_researcher_route_fails_cleanly(scripted):
    log, _, _ = _ask("Search the web for the latest news on robot arms.", scripted)
    assert log.routes == ["researcher"]
    assert log.final_answer["status"] == "failed"


def test_binary_attachment_fails_cleanly(scripted, tmp_path):
    p = tmp_path / "spec.pdf"
    p.write_bytes(b"%PDF-1.7")
    log, _, _ = _ask("Compute the Jacobian of this robot.", scripted, attach=str(p))
    assert log.routes == ["retriever"]
    assert log.final_answer["status"] == "failed" and "unsupported" in log.errors[0]


def test_empty_attachment_fails_cleanly(scripted, tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("")
    log, _, _ = _ask("Compute the Jacobian of this robot.", scripted, attach=str(p))
    assert log.final_answer["status"] == "failed" and "empty" in log.errors[0]


def test_memory_carries_robot_between_turns(scripted):
    memory, registry = SessionMemory(), RobotRegistry(3)
    log1, _, _ = _ask("Create a ur3 robot.", scripted, memory=memory, registry=registry)
    rid = log1.final_answer["quantities"]["robot_id"]
    log2, _, _ = _ask("Compute the Jacobian of the robot.", scripted, memory=memory, registry=registry)
    assert log2.plan.tools == ("compute_Jacobian",)
    assert log2.calls[0]["arguments"]["robot_id"] == rid
    assert len(memory) == 2
    assert memory.last_robot_id("s") == rid


class _Stub(Backend):
    """Backend replaying canned robosolver decisions."""

    name = "stub"
    model = "stub"

    def __init__(self, decisions):
        self.decisions = list(decisions)

    def complete(self, role, payload):
        assert role == "robosolver"
        return Completion(self.decisions.pop(0), 3, 2)


def test_react_hides_unplanned_tools():
    plan = ToolPlan("", ("create_robotictoolbox_robot",))
    ctx = ToolContext(RobotRegistry(1))
    stub = _Stub([{"action": "call", "tool": "compute_Jacobian", "arguments": {}},
                  {"action": "final", "text": "done", "quantities": {}}])
    rec = react_solve(plan, ctx, stub, Query("x"))
    assert rec["status"] == "answered"
    assert not rec["calls"][0]["ok"] and "not available" in rec["calls"][0]["observation"]["error"]


def test_react_step_limit():
    plan = ToolPlan("", ("create_robotictoolbox_robot",))
    ctx = ToolContext(RobotRegistry(1))
    stub = _Stub([{"action": "call", "tool": "create_robotictoolbox_robot", "arguments": {"name": "ur3"}}] * 5)
    rec = react_solve(plan, ctx, stub, Query("x"), max_steps=5)
    assert rec["answer"]["text"].startswith("Step limit")
    assert rec["status"] == "failed" and len(rec["calls"]) == 5


def test_plan_rejects_unknown_tools():
    with pytest.raises(CannotPlanError):
        ToolPlan("", ("fly",))


def test_scripted_runs_are_byte_identical(scripted):
    q = "Create a panda robot and compute the Jacobian."
    a, _, _ = _ask(q, scripted)
    b, _, _ = _ask(q, ScriptedBackend())
    assert a.dumps() == b.dumps()
    assert json.loads(a.dumps())["usage"]["total_tokens"] == 0


def test_fingerprint_normalizes_whitespace_and_case():
    assert fingerprint("Create  a\nPanda") == fingerprint("create a panda")
    assert len(fingerprint("x")) == 16


# ---------------------------------------------------------------------------
# remote backend


def _remote(handler):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return RemoteBackend(endpoint="http://llm.test/v1", model="m", token="t", client=client)


def _reply(content, usage=None):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}],
                                     "usage": usage or {"prompt_tokens": 11, "completion_tokens": 4}})


def test_remote_success_and_request_shape():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _reply('{"route": "planner"}')

    c = _remote(handler).complete("supervisor", {"query": "hi"})
    assert c.data == {"route": "planner"} and (c.prompt_tokens, c.completion_tokens) == (11, 4)
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer t"
    assert seen["body"]["model"] == "m" and seen["body"]["temperature"] == 0


def test_remote_strips_code_fence():
    c = _remote(lambda r: _reply('```json\n{"ets": "Rz(q1)"}\n```')).complete("extractor", {"description": "x"})
    assert c.data == {"ets": "Rz(q1)"}


@pytest.mark.parametrize("response", [
    httpx.Response(500, text="boom"),
    httpx.Response(200, text="not json"),
    httpx.Response(200, json={"choices": []}),
    httpx.Response(200, json={"choices": [{"message": {"content": "plain words"}}]}),
    httpx.Response(200, json={"choices": [{"message": {"content": "[1, 2]"}}]}),
])
def test_remote_errors(response):
    with pytest.raises(BackendError):
        _remote(lambda r: response).complete("planner", {"goal": "x"})


def test_remote_transport_error_and_config(monkeypatch):
    def handler(request):
        raise httpx.ConnectError("refused")

    with pytest.raises(BackendError):
        _remote(handler).complete("planner", {"goal": "x"})
    monkeypatch.delenv("ARMSOLVER_LLM_ENDPOINT", raising=False)
    monkeypatch.delenv("ARMSOLVER_LLM_MODEL", raising=False)
    with pytest.raises(BackendError):
        RemoteBackend()
    with pytest.raises(BackendError):
        make_backend("oracle")


def test_remote_backend_failure_becomes_failed_run():
    backend = _remote(lambda r: httpx.Response(503, text="down"))
    log, _, _ = _ask("Create a ur3 robot.", backend)
    assert log.final_answer["status"] == "failed" and "HTTP 503" in log.errors[0]


@pytest.mark.remote
@pytest.mark.skipif(not os.environ.get("ARMSOLVER_LLM_ENDPOINT"), reason="no live endpoint configured")
def test_live_remote_fk_query():
    q = "Compute the forward kinematics of the following robot. " + describe_chain("Rz(q1) tx(L1)")
    log, _, _ = _ask(q, make_backend("remote"))
    assert log.tau >= 1


def test_unknown_description_fails_extraction(scripted):
    q = "Compute the forward kinematics of the following robot. " + describe_chain("Rx(q1) tx(3)")
    log, _, _ = _ask(q, scripted)
    assert log.routes == ["extractor"]
    assert log.final_answer["status"] == "failed" and "extraction failed" in log.errors[0]
