"""Time the compiled and pure-Python kinematics kernels against each other.

    python3 benchmarks/bench_kernels.py [--calls N]

Reports microseconds per call for fk and fk+Jacobian on the built-in arms,
plus one full inverse-kinematics solve with each kernel.
"""
import argparse
import time

import numpy as np

from armsolver import kernels
from armsolver.ets import builtin_model
from armsolver.ik import IKOptions, ik_solve


def per_call(fn, calls: int) -> float:
    fn()
    t0 = time.perf_counter()
    for _ in range(calls):
        fn()
    return (time.perf_counter() - t0) / calls * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--calls", type=int, default=20000)
    args = ap.parse_args()
    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled kernels not built; only the Python fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'robot':<6} {'kernel':<7} {'fk us':>9} {'fk+jac us':>10}")
    for name in ("panda", "ur3"):
        c = builtin_model(name).compiled()
        q = rng.uniform(-1, 1, c.n)
        for label, mod in impls.items():
            t_fk = per_call(lambda: mod.fk(c.codes, c.jidx, c.sign, c.vals, q), args.calls)
            t_j = per_call(lambda: mod.fk_jacobian(c.codes, c.jidx, c.sign, c.vals, q, c.n), args.calls)
            print(f"{name:<6} {label:<7} {t_fk:9.2f} {t_j:10.2f}")
        base = impls["python"]
        for label, mod in impls.items():
            if mod is base:
                continue
            T1, J1 = mod.fk_jacobian(c.codes, c.jidx, c.sign, c.vals, q, c.n)
            T2, J2 = base.fk_jacobian(c.codes, c.jidx, c.sign, c.vals, q, c.n)
            print(f"{'':<6} max |{label} - python| = {max(np.abs(T1 - T2).max(), np.abs(J1 - J2).max()):.1e}")

    # whole-solver effect: swap the dispatch target and time one IK solve
    model = builtin_model("ur3")
    target = model.compiled().fk(np.array([0.3, -0.8, 1.1, -0.4, 0.6, 0.2]))
    opts = IKOptions(method="lm-chan", seed=1)
    for label, mod in impls.items():
        kernels.fk, kernels.fk_jacobian = mod.fk, mod.fk_jacobian
        t0 = time.perf_counter()
        for _ in range(20):
            ik_solve(model, target, opts=opts)
        print(f"ik_solve ur3 with {label:<7}: {(time.perf_counter() - t0) / 20 * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
