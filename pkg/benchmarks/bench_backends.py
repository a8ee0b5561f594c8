"""Per-step learning cost of the compiled core against the pure-Python agent.

    python benchmarks/bench_backends.py [--task wander-1K] [--steps 20000] [--json out.json]

Environment stepping is excluded; see ``tabrl.experiment.benchmark_step_cost``.
"""
import argparse
import json
import sys

from tabrl import _backend
from tabrl.cli import BENCH_METHODS
from tabrl.experiment import ExperimentConfig, benchmark_step_cost


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--task", default="wander-1K")
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--warmup", type=int, default=2000)
    ap.add_argument("--python-steps", type=int, default=2000,
                    help="measured steps for the Python agent (it is ~100x slower)")
    ap.add_argument("--json", metavar="FILE")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled core not built; only the Python agent is timed", file=sys.stderr)
    rows = []
    head = f"{'method':<22}" + "".join(f"{b + ' us/step':>18}" for b in backends)
    print(head + (f"{'speedup':>10}" if len(backends) > 1 else ""))
    for label, alg, sel, traces in BENCH_METHODS:
        cfg = ExperimentConfig(task=args.task, algorithm=alg, selection=sel, traces=traces, label=label)
        costs = {}
        for b in backends:
            measured = args.steps if b == "cython" else max(1000, args.python_steps)
            warmup = args.warmup if b == "cython" else min(args.warmup, measured)
            costs[b] = benchmark_step_cost(cfg, warmup, measured, backend=b).per_step
        line = f"{label:<22}" + "".join(f"{costs[b] * 1e6:>18.3f}" for b in backends)
        if len(backends) > 1:
            line += f"{costs['python'] / max(costs['cython'], 1e-12):>9.0f}x"
        print(line)
        rows.append({"method": label, "task": args.task, **{f"{b}_s_per_step": c for b, c in costs.items()}})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
