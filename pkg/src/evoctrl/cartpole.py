"""Non-stationary cartpole: tilting track, varying actuator strength, joint
damping, plus partial-observability and actuator-noise wrappers.

Dynamics. Generalized coordinates are the cart position x along the track and
the pole angle theta measured from the track normal. With track tilt phi,
total mass m = m_c + m_p, pole half-length l and damping torque -D*theta_dot
on the pole joint, the Lagrangian equations reduce to

    temp      = (F + m_p l theta_dot^2 sin(theta)) / m + g sin(phi)
    theta_acc = (g sin(theta + phi) - cos(theta) temp - D theta_dot / (m_p l))
                / (l (4/3 - m_p cos^2(theta) / m))
    x_acc     = temp - m_p l theta_acc cos(theta) / m

which is the classic cartpole system at phi = 0, D = 0. Integration is
semi-implicit Euler at dt. The pole angle relative to the vertical is
theta_vert = theta + phi; it drives the reward (1 - |theta_vert|/12 deg)^2
and termination (|theta_vert| > 12 deg, |x| > 2.4, or the step limit).

When the track angle changes, the pole keeps its absolute orientation (the
track rotates under it), so the integrated state is rebased
theta -= delta_phi each step; theta_vert stays continuous while the
cart-relative sensor reading jumps. Schedule lookups use the pre-step counter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .rng import SplitMix64

DEG = 180.0 / math.pi

PARAM_NAMES = ("angle", "force", "damping")
PARAM_RANGES = {"angle": (-15.0, 15.0), "force": (0.5, 2.0), "damping": (0.0, 0.15)}
PARAM_DEFAULTS = {"angle": 0.0, "force": 1.0, "damping": 0.0}
NOISE_MEAN_RANGE = (-2.0, 2.0)
CHANGE_WINDOW = (200, 800)   # schedule times are drawn from this step range

MODES = ("stationary", "sudden", "continuous")


@dataclass(frozen=True)
class PhysicsParams:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force_mag: float = 10.0
    dt: float = 0.02
    max_steps: int = 1000
    angle_limit_deg: float = 12.0
    x_limit: float = 2.4
    # reset draws each state variable from [-init_range, init_range];
    # calibrated so a constant-action policy survives >= 50 steps on average
    init_range: float = 0.01

    def as_array(self) -> np.ndarray:
        return np.array([
            self.gravity, self.cart_mass, self.pole_mass, self.half_length,
            self.force_mag, self.dt, float(self.max_steps),
            self.angle_limit_deg, self.x_limit,
        ])


@dataclass(frozen=True)
class EnvConfig:
    mode: str = "stationary"
    active: tuple = PARAM_NAMES            # parameters that actually change
    partial_obs: bool = False
    actuator_noise: bool = False
    noise_sigma: float = 0.1
    physics: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        bad = [p for p in self.active if p not in PARAM_NAMES]
        if bad:
            raise ValueError(f"unknown change parameters {bad}; expected from {PARAM_NAMES}")


# Task names used by the post-hoc test matrix (mirrors the figure legends).
TASKS = {
    "stationary": (),
    "force": ("force",),
    "damping": ("damping",),
    "angle": ("angle",),
    "all": PARAM_NAMES,
}


def task_config(name: str, mode: str = "sudden", base: Optional[EnvConfig] = None) -> EnvConfig:
    """Environment config for a named task ("stationary", "force", ...)."""
    base = base or EnvConfig()
    active = TASKS[name]
    return replace(base, mode="stationary" if not active else mode, active=active)


@dataclass(frozen=True)
class ParamSchedule:
    """Time profile of one change parameter: constant at ``start`` before
    t_start, at ``target`` from t_stop on, linear in between. Sudden changes
    have t_start == t_stop (a right-continuous step)."""

    start: float
    target: float
    t_start: int
    t_stop: int


def schedule_value(sched: ParamSchedule, t: float) -> float:
    if t < sched.t_start:
        return sched.start
    if t >= sched.t_stop:
        return sched.target
    return sched.start + (sched.target - sched.start) * (t - sched.t_start) / (
        sched.t_stop - sched.t_start)


@dataclass(frozen=True)
class ChangeSchedule:
    angle: ParamSchedule
    force: ParamSchedule
    damping: ParamSchedule
    noise_mean: ParamSchedule

    def as_array(self) -> np.ndarray:
        rows = []
        for s in (self.angle, self.force, self.damping, self.noise_mean):
            rows.append([s.start, s.target, float(s.t_start), float(s.t_stop)])
        return np.array(rows)

    def summary(self) -> dict:
        out = {}
        for name, s in zip(("angle", "force", "damping", "noise_mean"),
                           (self.angle, self.force, self.damping, self.noise_mean)):
            out[name] = {"start": s.start, "target": s.target,
                         "t_start": s.t_start, "t_stop": s.t_stop}
        return out


def _constant(value: float) -> ParamSchedule:
    return ParamSchedule(value, value, 0, 0)


def sample_schedule(cfg: EnvConfig, rng: SplitMix64) -> ChangeSchedule:
    """Draw one episode's change schedule.

    Each active parameter gets its own change time(s) in the shared window;
    targets are uniform in the parameter range. The actuator-noise mean always
    follows a continuous ramp profile when noise is enabled.
    """
    lo_t, hi_t = CHANGE_WINDOW
    scheds = {}
    for name in PARAM_NAMES:
        start = PARAM_DEFAULTS[name]
        if cfg.mode == "stationary" or name not in cfg.active:
            scheds[name] = _constant(start)
            continue
        target = rng.uniform(*PARAM_RANGES[name])
        if cfg.mode == "sudden":
            tc = rng.randint(lo_t, hi_t)
            scheds[name] = ParamSchedule(start, target, tc, tc)
        else:
            t0 = rng.randint(lo_t, hi_t)
            t1 = rng.randint(lo_t, hi_t)
            while t1 == t0:
                t1 = rng.randint(lo_t, hi_t)
            if t0 > t1:
                t0, t1 = t1, t0
            scheds[name] = ParamSchedule(start, target, t0, t1)
    if cfg.actuator_noise:
        target = rng.uniform(*NOISE_MEAN_RANGE)
        t0 = rng.randint(lo_t, hi_t)
        t1 = rng.randint(lo_t, hi_t)
        while t1 == t0:
            t1 = rng.randint(lo_t, hi_t)
        if t0 > t1:
            t0, t1 = t1, t0
        noise = ParamSchedule(0.0, target, t0, t1)
    else:
        noise = _constant(0.0)
    return ChangeSchedule(scheds["angle"], scheds["force"], scheds["damping"], noise)


@dataclass
class CartpoleState:
    x: float
    x_dot: float
    theta: float          # pole angle relative to the track normal (rad)
    theta_dot: float
    t: int = 0


def observe(state: CartpoleState, po_mode: bool = False) -> np.ndarray:
    """Observation vector [x, theta, x_dot, theta_dot]; partial observability
    zeroes the positional components only."""
    if po_mode:
        return np.array([0.0, 0.0, state.x_dot, state.theta_dot])
    return np.array([state.x, state.theta, state.x_dot, state.theta_dot])


def apply_actuator_noise(action: float, t: int, noise_mean: ParamSchedule,
                         sigma: float, rng: SplitMix64) -> float:
    """Add one draw from N(mean(t), sigma^2) to the action."""
    return action + rng.normal(schedule_value(noise_mean, t), sigma)


def physics_step(state: CartpoleState, force: float, phi: float, damping: float,
                 p: PhysicsParams) -> CartpoleState:
    """One semi-implicit Euler step; ``force`` is the effective track-aligned
    force in newtons, ``phi`` the track angle in radians."""
    mtot = p.cart_mass + p.pole_mass
    pml = p.pole_mass * p.half_length
    st = math.sin(state.theta)
    ct = math.cos(state.theta)
    temp = (force + pml * state.theta_dot ** 2 * st) / mtot + p.gravity * math.sin(phi)
    thacc = (p.gravity * math.sin(state.theta + phi) - ct * temp
             - damping * state.theta_dot / pml) / (
        p.half_length * (4.0 / 3.0 - p.pole_mass * ct * ct / mtot))
    xacc = temp - pml * thacc * ct / mtot
    x_dot = state.x_dot + p.dt * xacc
    x = state.x + p.dt * x_dot
    theta_dot = state.theta_dot + p.dt * thacc
    theta = state.theta + p.dt * theta_dot
    return CartpoleState(x, x_dot, theta, theta_dot, state.t + 1)


class EpisodeDone(RuntimeError):
    """Raised when step() is called on a finished episode."""


class CartpoleEnv:
    """Reference environment (one instance per episode stream).

    The numba evaluation path reimplements this loop inside ``_kernels``;
    the semantics here are authoritative.
    """

    def __init__(self, cfg: EnvConfig = EnvConfig()):
        self.cfg = cfg
        self.state: Optional[CartpoleState] = None
        self.schedule: Optional[ChangeSchedule] = None
        self.rng: Optional[SplitMix64] = None
        self.done = True
        self._phi_prev = 0.0

    def reset(self, seed: int = 0):
        """Start a new episode: near-upright state, fresh schedule."""
        self.rng = SplitMix64(seed)
        r = self.cfg.physics.init_range
        x = self.rng.uniform(-r, r)
        x_dot = self.rng.uniform(-r, r)
        theta = self.rng.uniform(-r, r)
        theta_dot = self.rng.uniform(-r, r)
        self.state = CartpoleState(x, x_dot, theta, theta_dot, 0)
        self.schedule = sample_schedule(self.cfg, self.rng)
        self.done = False
        self._phi_prev = schedule_value(self.schedule.angle, 0)
        return self.state, self.schedule

    def observe(self) -> np.ndarray:
        return observe(self.state, self.cfg.partial_obs)

    def step(self, action: float):
        """Advance one step; returns (reward, done). ``action`` is the raw
        policy output; it is clamped to [-1, 1] here, then noise and the
        force multiplier apply.

        Track-tilt rebasing is applied at the end of each step for the
        *next* timestep, so that observe() always reflects the current track
        frame (same sequence as the kernel's start-of-iteration rebase).
        """
        if self.done:
            raise EpisodeDone("step() called after the episode ended")
        p = self.cfg.physics
        st = self.state
        t = st.t
        phi_deg = self._phi_prev                     # already applied for t
        fmult = schedule_value(self.schedule.force, t)
        damping = schedule_value(self.schedule.damping, t)

        act = min(1.0, max(-1.0, float(action)))
        if self.cfg.actuator_noise:
            act = apply_actuator_noise(act, t, self.schedule.noise_mean,
                                       self.cfg.noise_sigma, self.rng)
        force = act * fmult * p.force_mag
        self.state = physics_step(st, force, phi_deg / DEG, damping, p)

        tv = self.state.theta * DEG + phi_deg
        alive = abs(tv) <= p.angle_limit_deg and abs(self.state.x) <= p.x_limit
        if not alive:
            self.done = True
            return 0.0, True
        reward = (1.0 - abs(tv) / p.angle_limit_deg) ** 2
        if self.state.t >= p.max_steps:
            self.done = True
        if not self.done:
            # the pole keeps its absolute orientation when the track tilts
            phi_next = schedule_value(self.schedule.angle, self.state.t)
            self.state.theta -= (phi_next - phi_deg) / DEG
            self._phi_prev = phi_next
        return reward, self.done
