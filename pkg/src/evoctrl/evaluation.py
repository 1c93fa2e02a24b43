"""Episode-evaluation harness: run a program for E episodes, return mean
reward and mean steps.

Per episode: initialize program memory from the evolved constants, reset the
environment, then loop — copy the observation into v1, execute the action
function, read the action from s3 (scalar env) or v4, step the environment,
accumulate reward and steps. Episode seeds derive from the master seed by
counter, so one evaluation is reproducible as a whole while its episodes see
different schedules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import resolve_backend
from .cartpole import CartpoleEnv, EnvConfig, sample_schedule
from .compile import pack_program
from .interpreter import get_action, start_episode
from .program import Program
from .rng import SplitMix64, derive_seed


@dataclass(frozen=True)
class EpisodeStats:
    reward: float
    steps: int
    schedule: dict


@dataclass(frozen=True)
class EvalResult:
    mean_reward: float
    mean_steps: float
    per_episode: tuple

    @property
    def episodes(self) -> int:
        return len(self.per_episode)


def _episode_seeds(seed: int, episodes: int):
    """(host_seed, kernel_seed) per episode: host draws the initial state and
    schedule, the kernel stream drives in-episode randomness."""
    return [(derive_seed(seed, ep, 0), derive_seed(seed, ep, 1)) for ep in range(episodes)]


def _sample_episode(cfg: EnvConfig, host_seed: int):
    rng = SplitMix64(host_seed)
    r = cfg.physics.init_range
    init = np.array([rng.uniform(-r, r) for _ in range(4)])  # x, x_dot, theta, theta_dot
    sched = sample_schedule(cfg, rng)
    return init, sched


def evaluate_fitness(program: Program, env_config: EnvConfig, episodes: int,
                     seed: int = 0, backend: 'str | None' = None) -> EvalResult:
    """Mean reward / mean steps of ``program`` over ``episodes`` episodes."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if program.layout.vec_dim < 4:
        raise ValueError("cartpole needs vec_dim >= 4")
    if resolve_backend(backend) == "numba":
        return _evaluate_numba(program, env_config, episodes, seed)
    return _evaluate_python(program, env_config, episodes, seed)


def _evaluate_python(program: Program, cfg: EnvConfig, episodes: int, seed: int) -> EvalResult:
    stats = []
    for ep, (host_seed, kernel_seed) in enumerate(_episode_seeds(seed, episodes)):
        env = CartpoleEnv(cfg)
        env.reset(host_seed)
        # in-episode draws (uniform-draw ops, actuator noise) interleave on
        # one stream, exactly as in the kernel
        shared = SplitMix64(kernel_seed)
        env.rng = shared
        runtime = start_episode(program)
        runtime.rng = shared
        total = 0.0
        done = False
        while not done:
            obs = env.observe()
            action = get_action(program, runtime, obs, act_dim=1)
            reward, done = env.step(action)
            total += reward
        stats.append(EpisodeStats(total, env.state.t, env.schedule.summary()))
    return _aggregate(stats)


def _evaluate_numba(program: Program, cfg: EnvConfig, episodes: int, seed: int) -> EvalResult:
    from . import _kernels

    tables = pack_program(program)
    seeds = _episode_seeds(seed, episodes)
    ep_init = np.zeros((episodes, 4))
    ep_sched = np.zeros((episodes, 4, 4))
    kernel_seeds = np.zeros(episodes, dtype=np.uint64)
    summaries = []
    for ep, (host_seed, kernel_seed) in enumerate(seeds):
        init, sched = _sample_episode(cfg, host_seed)
        ep_init[ep] = init
        ep_sched[ep] = sched.as_array()
        kernel_seeds[ep] = kernel_seed
        summaries.append(sched.summary())
    rewards, steps, _, _ = _kernels.run_episodes(
        *tables.exec_args(), tables.init_s, tables.init_v, tables.init_m,
        tables.n_cadfs, tables.n_index, tables.vec_dim, tables.mat_dim,
        ep_init, ep_sched, cfg.partial_obs, cfg.actuator_noise,
        cfg.noise_sigma, kernel_seeds, cfg.physics.as_array())
    stats = [EpisodeStats(float(rewards[ep]), int(steps[ep]), summaries[ep])
             for ep in range(episodes)]
    return _aggregate(stats)


def _aggregate(stats: list) -> EvalResult:
    n = len(stats)
    return EvalResult(
        mean_reward=sum(s.reward for s in stats) / n,
        mean_steps=sum(s.steps for s in stats) / n,
        per_episode=tuple(stats),
    )


def rollout_trace(program: Program, cfg: EnvConfig, seed: int = 0,
                  watch: tuple = (), act_dim: int = 1):
    """Single-episode rollout on the reference backend with per-step record
    rows (used by the trace facility and trajectory dumps).

    Returns (rows, EpisodeStats); each row holds t, the state, the schedule
    values, action, reward, watched register values and cadf call ids.
    """
    from .cartpole import schedule_value
    from .program import Address

    watch_addrs = [a if isinstance(a, Address) else Address.parse(a) for a in watch]
    host_seed, kernel_seed = _episode_seeds(seed, 1)[0]
    env = CartpoleEnv(cfg)
    env.reset(host_seed)
    sched = env.schedule
    shared = SplitMix64(kernel_seed)
    env.rng = shared
    runtime = start_episode(program)
    runtime.rng = shared
    rows = []
    total = 0.0
    done = False
    while not done:
        t = env.state.t
        obs = env.observe()
        sink: list = []
        action = get_action(program, runtime, obs, act_dim=act_dim, trace_sink=sink)
        reward, done = env.step(action)
        total += reward
        row = {
            "t": t,
            "x": obs[0], "theta": obs[1], "x_dot": obs[2], "theta_dot": obs[3],
            "angle": schedule_value(sched.angle, t),
            "force": schedule_value(sched.force, t),
            "damping": schedule_value(sched.damping, t),
            "action": float(np.atleast_1d(action)[0]),
            "reward": reward,
            "cadf_calls": sink[0]["cadf_calls"] if sink else [],
        }
        for addr in watch_addrs:
            row[str(addr)] = _read_register(runtime, addr)
        rows.append(row)
    return rows, EpisodeStats(total, env.state.t, sched.summary())


def _read_register(runtime, addr):
    from .ops import Bank

    mem = runtime.mem
    if addr.bank == Bank.SCALAR:
        return float(mem.scalars[addr.slot])
    if addr.bank == Bank.VECTOR:
        return mem.vectors[addr.slot].tolist()
    if addr.bank == Bank.MATRIX:
        return mem.matrices[addr.slot].tolist()
    return int(mem.indices[addr.slot])
