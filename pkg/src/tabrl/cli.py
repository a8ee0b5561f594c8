"""``tabrl`` command line: run, compare, oracle, gen-model, bench.

Exit status: 0 success, 1 usage or configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, Entry, dump_kv, parse_override, read_kv
from .envs import EnvError, build_sample_model, make_env
from .experiment import ExperimentConfig, benchmark_step_cost, resolve_task, run_repetitions, seed_streams
from .io import (FormatError, format_report, read_sample_model, write_compare_csv, write_curve_csv, write_json,
                 write_q_table, write_sample_model, write_side_by_side)
from .oracle import value_iteration
from .stats import one_way_anova, tukey_hsd

OUT_ENV = "TABRL_OUT_DIR"
DEFAULT_OUT = "tabrl-out"

# flag name -> config key
_FLAGS = {"task": "task", "algorithm": "algorithm", "selection": "selection", "steps": "steps",
          "repetitions": "repetitions", "seed": "seed"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p, multi_config=False):
    if multi_config:
        p.add_argument("--config", action="append", default=[], metavar="FILE",
                       help="method config; give once per method")
    else:
        p.add_argument("--config", metavar="FILE", help="key = value config file")
    p.add_argument("--task")
    p.add_argument("--algorithm")
    p.add_argument("--selection")
    p.add_argument("--steps")
    p.add_argument("--repetitions")
    p.add_argument("--seed")
    p.add_argument("--out-dir", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tabrl", description="Tabular RL experiments with reduced traces and Q-biased selection.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run repetitions of one method")
    _common(p)

    p = sub.add_parser("compare", help="run several methods and compare final average rewards")
    _common(p, multi_config=True)
    p.add_argument("--method", action="append", default=[], metavar="ALG+SEL",
                   help="method shorthand, e.g. tosl+qbiassr (repeatable)")

    p = sub.add_parser("oracle", help="value iteration on a sample-model file")
    p.add_argument("model")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--hole-policy", choices=("self_loop", "error"), default="self_loop")
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("gen-model", help="explore a task at random and write its sample model")
    p.add_argument("--task", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="FILE")

    p = sub.add_parser("bench", help="per-step CPU cost of the main methods")
    p.add_argument("--task", default="wander-1K")
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--warmup", type=int, default=2000)
    p.add_argument("--backend", choices=("python", "cython"))
    p.add_argument("--out", metavar="FILE", help="also write results as JSON")
    return parser


def _entries(args, config_path) -> dict[str, Entry]:
    entries = dict(read_kv(config_path)) if config_path else {}
    for flag, key in _FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            entries[key] = Entry(str(val), None, f"--{flag}")
    for text in args.override:
        key, ent = parse_override(text)
        entries[key] = ent
    return entries


def _out_dir(args, config: ExperimentConfig | None = None) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    if config is not None and config.out_dir:
        return Path(config.out_dir)
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _run_summary(config, result, wall, cpu):
    steps = config.steps * config.repetitions
    return {
        "config": config.to_items(),
        "seeds": result.seeds,
        "final_average_rewards": result.final_averages,
        "mean_final_average_reward": float(np.mean(result.final_averages)),
        "episodes": [len(c.episode_lengths) for c in result.curves],
        "wall_seconds": wall,
        "cpu_seconds_per_step": cpu / steps,
    }


def cmd_run(args) -> int:
    config = ExperimentConfig.from_entries(_entries(args, args.config))
    resolve_task(config.task)
    out = _out_dir(args, config)
    t0, c0 = time.perf_counter(), time.process_time()
    result = run_repetitions(config)
    wall, cpu = time.perf_counter() - t0, time.process_time() - c0
    files = {"curve": out / "curve.csv", "summary": out / "summary.json", "config": out / "config.txt"}
    write_curve_csv(files["curve"], result.mean_curve, [c.cumulative for c in result.curves])
    files["config"].write_text(dump_kv(config.to_items()))
    if config.save_q:
        for i, q in enumerate(result.q_tables):
            files[f"q_rep{i}"] = out / f"q_rep{i}.txt"
            write_q_table(files[f"q_rep{i}"], q, config.task)
    summary = _run_summary(config, result, wall, cpu)
    summary["files"] = {k: str(v) for k, v in files.items()}
    write_json(files["summary"], summary)
    print(f"{config.name} on {config.task}: mean final average reward "
          f"{summary['mean_final_average_reward']:.4f} over {config.repetitions} repetition(s)")
    print(f"wrote {out}")
    return 0


def _unique_labels(configs):
    seen, labels = {}, []
    for c in configs:
        base = c.name
        seen[base] = seen.get(base, 0) + 1
        labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return labels


def cmd_compare(args) -> int:
    sources = [("config", p) for p in args.config] + [("method", m) for m in args.method]
    if len(sources) < 2:
        raise UsageError("compare needs at least two methods (--config FILE or --method ALG+SEL)")
    configs = []
    for kind, src in sources:
        if kind == "config":
            entries = _entries(args, src)
        else:
            alg, sep, sel = src.partition("+")
            if not sep:
                raise UsageError(f"--method expects ALG+SEL, got {src!r}")
            entries = _entries(args, None)
            entries["algorithm"] = Entry(alg, None, "--method")
            entries["selection"] = Entry(sel, None, "--method")
        configs.append(ExperimentConfig.from_entries(entries))
    first = configs[0]
    for c in configs[1:]:
        for key in ("task", "steps", "repetitions"):
            if getattr(c, key) != getattr(first, key):
                raise ConfigError(f"all methods must share {key}: {getattr(first, key)!r} vs {getattr(c, key)!r}")
    if first.repetitions < 2:
        raise ConfigError("compare needs repetitions >= 2")
    resolve_task(first.task)
    labels = _unique_labels(configs)
    results = [run_repetitions(c) for c in configs]
    scores = [r.final_averages for r in results]
    anova = one_way_anova(scores)
    tukey = tukey_hsd(scores, labels)
    out = _out_dir(args, first)
    write_side_by_side(out / "curves.csv", labels, [r.mean_curve for r in results])
    write_compare_csv(out / "compare.csv", anova, tukey)
    report = format_report(anova, tukey)
    (out / "compare.txt").write_text(report)
    write_json(out / "summary.json", {
        "methods": {lab: {"config": c.to_items(), "final_average_rewards": r.final_averages}
                    for lab, c, r in zip(labels, configs, results)},
        "anova": {"f": anova.f, "p": anova.p, "df_between": anova.df_between, "df_within": anova.df_within},
        "tukey": [{"pair": f"{p.first} vs {p.second}", "q": p.q, "p": p.p, "inference": p.inference}
                  for p in tukey.pairs],
    })
    sys.stdout.write(report)
    print(f"wrote {out}")
    return 0


def cmd_oracle(args) -> int:
    model = read_sample_model(args.model)
    q, residual = value_iteration(model, args.gamma, args.tol, hole_policy=args.hole_policy)
    out = Path(args.out) if args.out else Path(args.model).with_suffix(".qstar.txt")
    write_q_table(out, q, model.task)
    print(f"value iteration residual {residual:.3g}; wrote {out}")
    return 0


def explore(task: str, steps: int, seed: int):
    """Uniform-random exploration log of (s, a, s', r)."""
    spec = resolve_task(task)
    env_rng, rng = seed_streams(seed)
    env = make_env(spec, env_rng)
    s = env.codec.encode(env.reset())
    log = []
    for _ in range(steps):
        a = rng.randrange(env.n_actions)
        obs = env.step(a)
        s2 = env.codec.encode(obs.values)
        log.append((s, a, s2, obs.reward))
        s = env.codec.encode(env.reset()) if obs.episode_done else s2
    return spec, env, log


def cmd_gen_model(args) -> int:
    if args.steps < 1:
        raise ConfigError(f"steps = {args.steps} outside legal range >= 1")
    spec, env, log = explore(args.task, args.steps, args.seed)
    model = build_sample_model(log, env.codec.n_states, env.n_actions, spec.name)
    out = Path(args.out) if args.out else _out_dir(args) / f"{spec.name}.model.txt"
    write_sample_model(out, model)
    print(f"{len(log)} transitions, {len(model)} visited pairs; wrote {out}")
    return 0


BENCH_METHODS = (
    ("Q+SR", "q", "softmax", "reduced"),
    ("TOSL+SR", "tosl", "softmax", "reduced"),
    ("TOSL+SR full traces", "tosl", "softmax", "full"),
    ("TOSL+QBIASSR", "tosl", "qbiassr", "reduced"),
)


def cmd_bench(args) -> int:
    rows = []
    for label, alg, sel, traces in BENCH_METHODS:
        cfg = ExperimentConfig(task=args.task, algorithm=alg, selection=sel, traces=traces, label=label)
        cost = benchmark_step_cost(cfg, args.warmup, args.steps, args.backend)
        rows.append(cost.as_dict())
        print(f"{label:<22}{cost.per_step * 1e6:>10.3f} us/step  ({cost.backend})")
    if args.out:
        write_json(args.out, rows)
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "oracle": cmd_oracle, "gen-model": cmd_gen_model,
            "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"tabrl: config error: {e}", file=sys.stderr)
        return 1
    except (EnvError, FormatError, OSError, RuntimeError, ValueError) as e:
        print(f"tabrl: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
