"""Command-line interface.

Exit codes: 0 success (including a solver that did not converge, which is
reported in the payload), 1 usage or parse error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ets import BUILTIN_ETS, EtsSyntaxError, RobotRegistry, UnknownModelError, builtin_model, format_ets, parse_ets
from .ik import METHODS, IKError, IKOptions, ik_solve
from .kinematics import compile_ets, fk_symbolic, normalize_frame, to_frame
from .motion import MotionError, ServoOptions, export_trajectory, quintic_joint_traj, simulate_servo
from .spatial import orthonormalize
from .symexpr import ExprSyntaxError


class UsageError(Exception):
    """Bad arguments or unparseable input (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument helpers


def _read_text(src: str) -> str:
    if src == "-":
        return sys.stdin.read()
    try:
        return Path(src).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {src}: {exc.strerror}") from None


def _csv(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def _config(text: str, what: str):
    return text if text in ("qz", "qr") else _csv(text, what)


def _matrix(src: str) -> np.ndarray:
    """A 4x4 row-major JSON matrix given inline, as a file path, or '-' for stdin."""
    text = src
    if src == "-" or (not src.lstrip().startswith("[") and Path(src).exists()):
        text = _read_text(src)
    try:
        M = np.asarray(json.loads(text), dtype=float)
    except (ValueError, TypeError):
        raise UsageError("target must be a JSON 4x4 matrix") from None
    if M.shape != (4, 4):
        raise UsageError(f"target must be 4x4, got shape {M.shape}")
    return M


def _consts(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"constant must be NAME=VALUE, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"constant {key!r} needs a numeric value") from None
    return out


def _model(args):
    """Built-in robot by name, or a user chain from --ets/--const."""
    if getattr(args, "ets", None):
        ets = _parse_ets(args.ets)
        consts = _consts(args.const)
        missing = ets.constant_symbols() - set(consts)
        if missing:
            raise UsageError(f"unbound constant(s): {', '.join(sorted(missing))}")
        reg = RobotRegistry(0)
        return reg.get(reg.register("custom", ets, consts))
    if not args.robot:
        raise UsageError("give --robot NAME or --ets TEXT")
    try:
        return builtin_model(args.robot)
    except UnknownModelError as exc:
        raise UsageError(str(exc)) from None


def _parse_ets(text: str):
    try:
        return parse_ets(text)
    except (EtsSyntaxError, ExprSyntaxError) as exc:
        raise UsageError(f"ETS parse error: {exc}") from None


def _floats(M) -> list:
    return np.asarray(M, dtype=float).tolist()


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _fmt_matrix(M) -> str:
    return "\n".join("  ".join(f"{v: .6f}" for v in row) for row in np.asarray(M))


# ---------------------------------------------------------------------------
# commands


def cmd_ets_parse(args) -> int:
    ets = _parse_ets(_read_text(args.file).strip())
    joints = [{"index": et.joint, "kind": "revolute" if et.rotation else "prismatic",
               "axis": et.axis, "flip": et.flip, "symbol": et.joint_symbol} for et in ets.joints]
    payload = {"ets": format_ets(ets), "n": ets.n, "joints": joints,
               "constants": sorted(ets.constant_symbols())}
    lines = [payload["ets"], f"{ets.n} joints", "index  kind       axis  flip  symbol"]
    lines += [f"{j['index']:>5}  {j['kind']:<9}  {j['axis']:>4}  {str(j['flip']):<5} {j['symbol']}"
              for j in joints]
    if payload["constants"]:
        lines.append("constants: " + ", ".join(payload["constants"]))
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_fk(args) -> int:
    ets = _parse_ets(args.ets)
    if args.symbolic:
        texts = fk_symbolic(ets).texts(shorthand=args.shorthand)
        width = max(len(t) for row in texts for t in row)
        _emit(args, {"ets": format_ets(ets), "matrix": texts},
              "\n".join("[ " + "  ".join(t.ljust(width) for t in row) + " ]" for row in texts))
        return 0
    if args.q is None:
        raise UsageError("numeric fk needs --q (or use --symbolic)")
    consts = _consts(args.const)
    missing = ets.constant_symbols() - set(consts)
    if missing:
        raise UsageError(f"unbound constant(s): {', '.join(sorted(missing))}")
    q = _csv(args.q, "--q")
    if len(q) != ets.n:
        raise UsageError(f"expected {ets.n} joint values, got {len(q)}")
    T = compile_ets(ets, consts).fk(np.asarray(q))
    _emit(args, {"ets": format_ets(ets), "q": q, "matrix": _floats(T)}, _fmt_matrix(T))
    return 0


def cmd_jac(args) -> int:
    model = _model(args)
    q = model.config(_config(args.q, "--q")) if args.q else model.config("qz")
    try:
        frame = normalize_frame(args.frame)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    T, J = model.compiled().fk_jacobian(q)
    Jf = to_frame(J, T, frame)
    _emit(args, {"robot": model.name, "q": _floats(q), "frame": frame, "jacobian": _floats(Jf)},
          _fmt_matrix(Jf))
    return 0


def cmd_ik(args) -> int:
    model = _model(args)
    target = _matrix(args.target)
    if not args.exact:
        target = orthonormalize(target)
    q0 = model.config(_config(args.q0, "--q0")) if args.q0 else None
    try:
        opts = IKOptions(method=args.method, seed=args.seed, max_iterations=args.max_iterations,
                         restarts=args.restarts)
        res = ik_solve(model, target, q0=q0, opts=opts)
    except IKError as exc:
        raise UsageError(str(exc)) from None
    payload = {"robot": model.name, "method": args.method, **res.to_json()}
    status = "converged" if res.success else "did not converge"
    _emit(args, payload, f"{status}: q = {np.round(res.q, 6).tolist()} (residual {res.residual:.3e}, "
                         f"{res.restarts} restarts)")
    return 0


def _write_traj(traj, model, out, svg) -> dict:
    paths = {}
    if out:
        export_trajectory(traj, "csv", out, model=model)
        paths["csv"] = str(out)
    if svg:
        export_trajectory(traj, "svg", svg, model=model)
        paths["svg"] = str(svg)
    return paths


def cmd_servo(args) -> int:
    model = _model(args)
    target = orthonormalize(_matrix(args.target))
    try:
        opts = ServoOptions(gain=tuple(_csv(args.gain, "--gain")), velocity_profile=args.velocity_profile,
                            target_twist=None if args.target_twist is None
                            else tuple(_csv(args.target_twist, "--target-twist")),
                            frame=args.frame, max_time=args.max_time, dt=args.dt)
        traj = simulate_servo(model, model.config(_config(args.q0, "--q0")), target, opts)
    except (MotionError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    paths = _write_traj(traj, model, args.out, args.svg)
    last = traj.records[-1]
    payload = {"robot": model.name, "arrived": bool(traj.arrived), "records": len(traj),
               "t_end": float(last.t), "final_error": float(last.error_norm), "q_final": _floats(last.q),
               "options": opts.to_json(), "files": paths}
    _emit(args, payload, f"{'arrived' if traj.arrived else 'not arrived'} after {last.t:.2f} s, "
                         f"final error {last.error_norm:.3e}")
    return 0


def cmd_traj_quintic(args) -> int:
    model = _model(args)
    try:
        q0 = model.config(_config(args.from_, "--from"))
        q1 = model.config(_config(args.to, "--to"))
        traj = quintic_joint_traj(q0, q1, args.duration, args.dt, model)
    except (MotionError, ValueError, KeyError) as exc:
        raise UsageError(str(exc)) from None
    paths = _write_traj(traj, model, args.out, args.svg)
    payload = {"robot": model.name, "records": len(traj), "t_first": float(traj.records[0].t),
               "t_last": float(traj.records[-1].t), "files": paths}
    _emit(args, payload, f"{len(traj)} records from t={traj.records[0].t:g} to t={traj.records[-1].t:g}")
    return 0


def cmd_agent_ask(args) -> int:
    from .agents import BackendError, Query, SessionMemory, make_backend, run_query

    try:
        backend = make_backend(args.backend)
    except BackendError as exc:
        raise UsageError(str(exc)) from None
    text = _read_text(args.query).strip()
    if not text:
        raise UsageError("query is empty")
    log = run_query(Query(text, args.attach, args.session), RobotRegistry(args.seed), backend,
                    SessionMemory(), workspace=args.workspace)
    if args.log:
        Path(args.log).write_text(log.dumps(), encoding="utf-8")
    fa = log.final_answer
    _emit(args, log.to_json(), f"[{fa.get('status')}] {fa.get('text', '')}")
    return 0 if fa.get("status") != "failed" else 2


def cmd_bench_run(args) -> int:
    from .agents import BackendError, make_backend
    from .bench import BenchError, run_suite

    try:
        backend = make_backend(args.backend)
        manifest = run_suite(args.suite, backend, args.out, repeats=args.repeats, seed=args.seed,
                             clock=args.clock, jobs=args.jobs)
    except (BenchError, BackendError) as exc:
        raise UsageError(str(exc)) from None
    payload = {"suite": manifest["suite"], "runs": len(manifest["runs"]), "out": str(args.out)}
    _emit(args, payload, f"{payload['runs']} runs of {payload['suite']} written to {args.out}")
    return 0


def cmd_bench_score(args) -> int:
    from .bench import BenchError, score_dir
    from .metrics import PriceTable, render_report, render_usage

    prices = None
    if args.prices:
        prices = PriceTable.from_json(json.loads(_read_text(args.prices)))
    try:
        report, _, usage, doc = score_dir(args.in_, prices)
    except BenchError as exc:
        raise UsageError(str(exc)) from None
    if args.report:
        Path(args.report).write_text(doc, encoding="utf-8")
    name = json.loads((Path(args.in_) / "manifest.json").read_text(encoding="utf-8"))["suite"]
    if args.json:
        print(doc, end="")
    else:
        print(render_report({name: report}), end="")
        if args.table:
            print()
            print(render_usage(usage), end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    robot = argparse.ArgumentParser(add_help=False)
    robot.add_argument("--robot", help=f"built-in robot ({', '.join(sorted(BUILTIN_ETS))})")
    robot.add_argument("--ets", help="user chain instead of a built-in robot")
    robot.add_argument("--const", action="append", metavar="NAME=VALUE", help="constant binding (repeatable)")

    p = _Parser(prog="armsolver", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"armsolver {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ets = sub.add_parser("ets", help="ETS utilities").add_subparsers(dest="ets_command", required=True,
                                                                     parser_class=_Parser)
    e = ets.add_parser("parse", parents=[common], help="parse an ETS and list its joints")
    e.add_argument("file", help="file holding the ETS text, or - for stdin")
    e.set_defaults(func=cmd_ets_parse)

    f = sub.add_parser("fk", parents=[common], help="forward kinematics")
    f.add_argument("--ets", required=True)
    f.add_argument("--q", help="joint values, comma separated")
    f.add_argument("--const", action="append", metavar="NAME=VALUE")
    f.add_argument("--symbolic", action="store_true", help="closed-form matrix instead of numbers")
    f.add_argument("--shorthand", action="store_true", help="print c12/s12 style abbreviations")
    f.set_defaults(func=cmd_fk)

    j = sub.add_parser("jac", parents=[common, robot], help="geometric Jacobian")
    j.add_argument("--q", help="joint values or qz/qr (default qz)")
    j.add_argument("--frame", default="world", help="world or ee")
    j.set_defaults(func=cmd_jac)

    i = sub.add_parser("ik", parents=[common, robot], help="inverse kinematics")
    i.add_argument("--target", required=True, help="4x4 JSON matrix, file, or -")
    i.add_argument("--method", default="lm-chan", choices=METHODS)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--q0", help="initial guess")
    i.add_argument("--max-iterations", type=int, default=100)
    i.add_argument("--restarts", type=int, default=30)
    i.add_argument("--exact", action="store_true", help="do not orthonormalize the target")
    i.set_defaults(func=cmd_ik)

    s = sub.add_parser("servo", parents=[common, robot], help="position-based servoing")
    s.add_argument("--target", required=True)
    s.add_argument("--gain", default="1")
    s.add_argument("--target-twist", help="6 values: target velocity (v, w)")
    s.add_argument("--q0", default="qr")
    s.add_argument("--frame", default="world")
    s.add_argument("--velocity-profile", action="store_true")
    s.add_argument("--max-time", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--out", type=Path, help="CSV trajectory")
    s.add_argument("--svg", type=Path)
    s.set_defaults(func=cmd_servo)

    traj = sub.add_parser("traj", help="trajectories").add_subparsers(dest="traj_command", required=True,
                                                                     parser_class=_Parser)
    t = traj.add_parser("quintic", parents=[common, robot], help="quintic joint-space trajectory")
    t.add_argument("--from", dest="from_", default="qz")
    t.add_argument("--to", required=True)
    t.add_argument("--duration", type=float, default=2.45)
    t.add_argument("--dt", type=float, default=0.05)
    t.add_argument("--out", type=Path)
    t.add_argument("--svg", type=Path)
    t.set_defaults(func=cmd_traj_quintic)

    agent = sub.add_parser("agent", help="agent pipeline").add_subparsers(dest="agent_command", required=True,
                                                                          parser_class=_Parser)
    a = agent.add_parser("ask", parents=[common], help="answer one query")
    a.add_argument("--backend", default="scripted", choices=("scripted", "remote"))
    a.add_argument("--query", required=True, help="file holding the query, or -")
    a.add_argument("--attach", help="plain-text attachment")
    a.add_argument("--log", type=Path, help="write the run log here")
    a.add_argument("--workspace", type=Path, help="directory for plots and exports")
    a.add_argument("--session", default="cli")
    a.add_argument("--seed", type=int, default=None, help="seed robot ids")
    a.set_defaults(func=cmd_agent_ask)

    bench = sub.add_parser("bench", help="benchmark suites").add_subparsers(dest="bench_command", required=True,
                                                                            parser_class=_Parser)
    b = bench.add_parser("run", parents=[common], help="run a suite")
    b.add_argument("--suite", required=True, choices=("bench1-text", "bench2-images", "bench3-tasks"))
    b.add_argument("--backend", default="scripted", choices=("scripted", "remote"))
    b.add_argument("--out", type=Path, required=True)
    b.add_argument("--repeats", type=int)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--clock", default="frozen", choices=("frozen", "wall"),
                   help="frozen logs zero runtimes so logs are byte-stable")
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_bench_run)

    c = bench.add_parser("score", parents=[common], help="score a run directory")
    c.add_argument("--in", dest="in_", type=Path, required=True)
    c.add_argument("--report", type=Path)
    c.add_argument("--table", action="store_true", help="also print the usage table")
    c.add_argument("--prices", help="JSON price table: model -> {prompt, completion} per 1K tokens")
    c.set_defaults(func=cmd_bench_score)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"armsolver: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported, exit 2
        print(f"armsolver: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
