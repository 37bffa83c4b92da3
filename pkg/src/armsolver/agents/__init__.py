"""Agent pipeline over a pluggable text-generation backend."""
from .backend import Backend, BackendError, Completion, RemoteBackend, ScriptedBackend, make_backend
from .pipeline import (
    MAX_ATTEMPTS, MAX_STEPS, CannotPlanError, PipelineError, Query, RunLog, SessionMemory,
    ToolPlan, UnsupportedInputError, extract, inspect, plan, react_solve, retrieve, route, run_query,
)
from .tools import TOOLS, ToolContext, execute_tool

__all__ = [
    "Backend", "BackendError", "Completion", "RemoteBackend", "ScriptedBackend", "make_backend",
    "MAX_ATTEMPTS", "MAX_STEPS", "CannotPlanError", "PipelineError", "Query", "RunLog",
    "SessionMemory", "ToolPlan", "UnsupportedInputError", "extract", "inspect", "plan",
    "react_solve", "retrieve", "route", "run_query", "TOOLS", "ToolContext", "execute_tool",
]
