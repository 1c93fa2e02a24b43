"""Experiment runner CLI.

Subcommands:
    evolve   run a seeded evolution experiment from a YAML config
    test     score a program file across a task matrix (CSV out)
    analyze  complexity report for a program file (JSON out)
    trace    per-step register/subroutine trace of a rollout (CSV out)
    verify   re-read every artifact in a run directory

All tabular output is CSV with a header row; logs are JSONL (one object per
generation or logged step). Logs carry no wall-clock data, so serial reruns
with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from .analysis import count_complexity, trace_registers
from .backend import resolve_backend
from .cartpole import EnvConfig, PhysicsParams, task_config
from .evaluation import evaluate_fitness
from .ops import OP_TABLE, Bank
from .program import GenConfig, MemoryLayout, Program, validate
from .rng import derive_seed
from .search import (
    ConstraintSpec,
    MutationWeights,
    Nsga2Config,
    RegEvoConfig,
    apply_fitness_constraint,
    run_nsga2,
    run_regevo,
)
from .textio import deserialize, serialize

OUTPUT_ROOT_VAR = "EVOCTRL_OUTPUT_ROOT"
TASK_NAMES = ("stationary", "force", "damping", "angle", "all")


class CliError(Exception):
    pass


# ---------------------------------------------------------------------------
# config loading


def _op_subset(name: str) -> tuple:
    if name == "all":
        return tuple(s.opcode for s in OP_TABLE)
    if name == "no_matrix":
        return tuple(s.opcode for s in OP_TABLE
                     if Bank.MATRIX not in s.in_banks and s.out_bank != Bank.MATRIX)
    raise CliError(f"unknown op_set {name!r}; expected 'all' or 'no_matrix'")


def load_config(path: str) -> dict:
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}

    def section(name):
        val = raw.get(name, {})
        if not isinstance(val, dict):
            raise CliError(f"config section {name!r} must be a mapping")
        return dict(val)

    search = section("search")
    engine = search.pop("engine", "regevo")
    if engine not in ("regevo", "nsga2"):
        raise CliError(f"search.engine must be regevo or nsga2, got {engine!r}")

    env = section("env")
    phys = env.pop("physics", {})
    try:
        env_cfg = EnvConfig(
            mode=env.pop("mode", "stationary"),
            active=tuple(env.pop("active", ["angle", "force", "damping"])),
            partial_obs=bool(env.pop("partial_observability", False)),
            actuator_noise=bool(env.pop("actuator_noise", False)),
            noise_sigma=float(env.pop("noise_sigma", 0.1)),
            physics=PhysicsParams(**phys),
        )
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad env config: {exc}") from None
    if env:
        raise CliError(f"unknown env keys: {sorted(env)}")

    gen = section("generation")
    op_set = gen.pop("op_set", "no_matrix")
    try:
        gen_cfg = GenConfig(
            min_instructions=int(gen.pop("min_instructions", 1)),
            max_instructions=int(gen.pop("max_instructions", 20)),
            max_cadfs=int(gen.pop("max_cadfs", 0)),
            const_range=tuple(gen.pop("const_range", [-10.0, 10.0])),
            max_body_len=gen.pop("max_body_len", None),
            allowed_ops=_op_subset(op_set),
        )
    except ValueError as exc:
        raise CliError(f"bad generation config: {exc}") from None
    if gen:
        raise CliError(f"unknown generation keys: {sorted(gen)}")

    lay = section("layout")
    layout = MemoryLayout(
        n_scalar=int(lay.pop("scalars", 16)),
        n_vector=int(lay.pop("vectors", 16)),
        n_matrix=int(lay.pop("matrices", 16)),
        n_index=int(lay.pop("indices", 16)),
        vec_dim=int(lay.pop("vec_dim", 4)),
        mat_dim=int(lay.pop("mat_dim", 4)),
    )

    nsga = section("nsga2")
    constraint = nsga.pop("constraint", {})
    nsga_cfg = Nsga2Config(
        parent_pop=int(nsga.pop("parent_pop", 100)),
        child_pop=int(nsga.pop("child_pop", 1000)),
        constraint=ConstraintSpec(
            steps_threshold=float(constraint.get("steps_threshold", 400)),
            reward_threshold=float(constraint.get("reward_threshold", 50)),
            active=bool(constraint.get("active", True)),
        ),
    )
    regevo_cfg = RegEvoConfig(
        population=int(search.pop("population", 100)),
        tournament=int(search.pop("tournament", 10)),
        crossover_prob=float(search.pop("crossover_prob", 0.1)),
    )

    cfg = {
        "engine": engine,
        "env": env_cfg,
        "generation": gen_cfg,
        "layout": layout,
        "nsga2": nsga_cfg,
        "regevo": regevo_cfg,
        "episodes_per_eval": int(search.pop("episodes_per_eval", 10)),
        "log_every": int(search.pop("log_every", 100)),
        "budget": int(raw.get("budget", 10000)),
        "master_seed": int(raw.get("master_seed", 0)),
        "repeats": int(raw.get("repeats", 1)),
        "output_dir": raw.get("output_dir"),
        "weights": MutationWeights(),
        "raw": raw,
    }
    if cfg["budget"] < 1 or cfg["repeats"] < 1:
        raise CliError("budget and repeats must be >= 1")
    if search:
        raise CliError(f"unknown search keys: {sorted(search)}")
    return cfg


def make_evaluator(env_cfg: EnvConfig, episodes: int, master_seed: int,
                   backend: 'str | None', objective: str,
                   constraint: ConstraintSpec = ConstraintSpec()):
    """evaluate(program, eval_index) -> fitness tuple, seeded by counter."""

    def evaluate(program: Program, eval_index: int):
        res = evaluate_fitness(program, env_cfg, episodes,
                               seed=derive_seed(master_seed, eval_index),
                               backend=backend)
        if objective == "reward":
            return (res.mean_reward,)
        return apply_fitness_constraint(res.mean_reward, res.mean_steps, constraint)

    return evaluate


# ---------------------------------------------------------------------------
# evolve


def cmd_evolve(args) -> int:
    cfg = load_config(args.config)
    out_root = args.output or cfg["output_dir"] or os.environ.get(OUTPUT_ROOT_VAR)
    if not out_root:
        raise CliError("no output directory (flag --output, config output_dir, "
                       f"or ${OUTPUT_ROOT_VAR})")
    out = Path(out_root)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output dir {out}: {exc}") from None
    backend = args.backend or None
    resolve_backend(backend)

    repeat_seeds = [derive_seed(cfg["master_seed"], 77, r) for r in range(cfg["repeats"])]
    manifest = {
        "config_file": os.path.abspath(args.config),
        "config": cfg["raw"],
        "engine": cfg["engine"],
        "master_seed": cfg["master_seed"],
        "repeat_seeds": repeat_seeds,
        "repeats": cfg["repeats"],
        "budget": cfg["budget"],
        "serial": bool(args.serial),
        "version": 1,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    def run_one(r: int):
        seed = repeat_seeds[r]
        rdir = out / f"repeat{r}"
        rdir.mkdir(exist_ok=True)
        log_path = rdir / "log.jsonl"
        with open(log_path, "w") as log_fh:
            def sink(row):
                log_fh.write(json.dumps(row) + "\n")

            if cfg["engine"] == "regevo":
                evaluate = make_evaluator(cfg["env"], cfg["episodes_per_eval"],
                                          seed, backend, "reward")
                res = run_regevo(evaluate, cfg["budget"], cfg["layout"],
                                 cfg["generation"], seed, cfg["regevo"],
                                 cfg["weights"], cfg["log_every"], sink)
            else:
                evaluate = make_evaluator(cfg["env"], cfg["episodes_per_eval"],
                                          seed, backend, "both",
                                          cfg["nsga2"].constraint)
                res = run_nsga2(evaluate, cfg["budget"], cfg["layout"],
                                cfg["generation"], seed, cfg["nsga2"],
                                cfg["weights"], sink)
        (rdir / "best_program.txt").write_text(serialize(res.best.program))
        (rdir / "result.json").write_text(json.dumps({
            "repeat": r,
            "seed": seed,
            "evaluations": res.evaluations,
            "best_fitness": list(map(float, res.best.fitness)),
        }, indent=2) + "\n")
        return r, res.best.fitness

    if args.serial or cfg["repeats"] == 1:
        results = [run_one(r) for r in range(cfg["repeats"])]
    else:
        workers = args.workers or min(cfg["repeats"], os.cpu_count() or 1)
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run_one, range(cfg["repeats"])))
    for r, fit in results:
        print(f"repeat {r}: best fitness {tuple(round(f, 3) for f in fit)}")
    print(f"artifacts in {out}")
    return 0


# ---------------------------------------------------------------------------
# test


def _load_program(path: str) -> Program:
    try:
        with open(path) as fh:
            program = deserialize(fh.read())
    except OSError as exc:
        raise CliError(str(exc)) from None
    errs = validate(program)
    if errs:
        raise CliError(f"program {path} is invalid: " + "; ".join(errs[:5]))
    return program


def cmd_test(args) -> int:
    program = _load_program(args.program)
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    bad = [t for t in tasks if t not in TASK_NAMES]
    if bad:
        raise CliError(f"unknown tasks {bad}; expected from {TASK_NAMES}")
    rows = []
    for k, name in enumerate(tasks):
        cfg = task_config(name, mode=args.mode)
        res = evaluate_fitness(program, cfg, args.episodes,
                               seed=derive_seed(args.seed, 500 + k),
                               backend=args.backend or None)
        rewards = [s.reward for s in res.per_episode]
        rows.append({
            "task": name,
            "mean_reward": f"{res.mean_reward:.6f}",
            "stddev": f"{float(np.std(rewards)):.6f}",
            "min": f"{min(rewards):.6f}",
            "max": f"{max(rewards):.6f}",
            "mean_steps": f"{res.mean_steps:.3f}",
            "episodes": res.episodes,
        })
    _write_csv(args.out, ["task", "mean_reward", "stddev", "min", "max",
                          "mean_steps", "episodes"], rows)
    return 0


def _write_csv(out_path, fieldnames, rows):
    fh = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out_path:
            fh.close()


# ---------------------------------------------------------------------------
# analyze / trace


def cmd_analyze(args) -> int:
    program = _load_program(args.program)
    report = count_complexity(program, args.obs_dim, args.act_dim)
    payload = {
        "parameter_count": report.parameter_count,
        "flops_per_step": report.flops_per_step,
        "instructions": sum(len(b) for _, b in program.functions()),
        "cadfs": len(program.cadfs),
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_trace(args) -> int:
    program = _load_program(args.program)
    cfg = task_config(args.task, mode=args.mode)
    watch = [w.strip() for w in args.watch.split(",") if w.strip()]
    rows = trace_registers(program, cfg, watch, episodes=args.episodes, seed=args.seed)
    fields = ["episode", "t", "x", "theta", "x_dot", "theta_dot",
              "angle", "force", "damping", "action", "reward", "cadf_calls"] + watch
    _write_csv(args.out, fields, rows)
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    root = Path(args.run_dir)
    problems = []
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        problems.append("manifest.json missing")
        manifest = {}
    else:
        try:
            manifest = json.loads(manifest_path.read_text())
        except json.JSONDecodeError as exc:
            problems.append(f"manifest.json unreadable: {exc}")
            manifest = {}
    repeats = int(manifest.get("repeats", 0))
    for r in range(repeats):
        rdir = root / f"repeat{r}"
        for name in ("log.jsonl", "best_program.txt", "result.json"):
            if not (rdir / name).exists():
                problems.append(f"repeat{r}/{name} missing")
        log = rdir / "log.jsonl"
        if log.exists():
            for i, line in enumerate(log.read_text().splitlines(), 1):
                try:
                    json.loads(line)
                except json.JSONDecodeError:
                    problems.append(f"repeat{r}/log.jsonl line {i} is not JSON")
                    break
        prog = rdir / "best_program.txt"
        if prog.exists():
            try:
                p = deserialize(prog.read_text())
                errs = validate(p)
                if errs:
                    problems.append(f"repeat{r}/best_program.txt invalid: {errs[0]}")
                elif serialize(p) != prog.read_text():
                    problems.append(f"repeat{r}/best_program.txt not canonical")
            except Exception as exc:
                problems.append(f"repeat{r}/best_program.txt unreadable: {exc}")
        resj = rdir / "result.json"
        if resj.exists():
            try:
                json.loads(resj.read_text())
            except json.JSONDecodeError:
                problems.append(f"repeat{r}/result.json is not JSON")
    for csv_path in root.rglob("*.csv"):
        try:
            with open(csv_path, newline="") as fh:
                list(csv.DictReader(fh))
        except csv.Error as exc:
            problems.append(f"{csv_path.relative_to(root)} unreadable: {exc}")
    if problems:
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        return 1
    print(f"ok: {root} verified ({repeats} repeats)")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evoctrl",
                                 description="evolve and analyze register-machine control programs")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run an evolution experiment from a YAML config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help=f"output directory (default: config output_dir or ${OUTPUT_ROOT_VAR})")
    p.add_argument("--workers", type=int, help="parallel repeats (default: min(repeats, cpus))")
    p.add_argument("--serial", action="store_true", help="force serial execution (bit-reproducible)")
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("test", help="score a program across a task matrix")
    p.add_argument("--program", required=True)
    p.add_argument("--tasks", default=",".join(TASK_NAMES))
    p.add_argument("--mode", default="sudden", choices=("sudden", "continuous"))
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("numba", "numpy"))
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("analyze", help="complexity report for a program file")
    p.add_argument("--program", required=True)
    p.add_argument("--obs-dim", type=int, default=None)
    p.add_argument("--act-dim", type=int, default=None)
    p.add_argument("--out", help="JSON path (default: stdout)")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("trace", help="per-step register trace of one or more rollouts")
    p.add_argument("--program", required=True)
    p.add_argument("--watch", default="s3", help="comma-separated register addresses")
    p.add_argument("--task", default="stationary", choices=TASK_NAMES)
    p.add_argument("--mode", default="sudden", choices=("sudden", "continuous"))
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("verify", help="re-read every artifact in a run directory")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
