"""Complexity accounting, the linear-recurrent oracle for the reference
cartpole policy, and register/subroutine trace extraction.

The reference policy is the adaptive cartpole controller

    s0 = a*s2 + action
    s1 = s0 + s1 + b*action + dot(V, obs)
    s2 = s0 + c*s1
    action = s0 + dot(obs, W)

hand-encoded onto the register machine (accumulators in s0..s2 so traces map
directly onto the latent state Z = (s0, s1, s2), constants a, b, c in s4..s6,
V in v0, W in v2). Stacking Z and s = concat(obs, prev_action) gives the
exactly equivalent linear recurrence

    Z' = U @ Z + P @ s,    action = A @ Z' + Wt @ s

with U = [[0,0,a],[0,1,a],[0,c,a(1+c)]]. Note the exact spectrum of U solves
lambda (lambda^2 - (1+a+a*c) lambda + a) = 0; the idealized description
{0, 1, a(1+c)} holds only when a*c = 0 (the trace matches exactly, the
determinant does not), so for the parameters below the true eigenvalues are
{0, 0.97124, -0.56526}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .compile import worst_case_flops
from .evaluation import rollout_trace
from .program import (
    GenConfig,
    Instruction,
    MemoryLayout,
    Program,
    saddr,
    vaddr,
)

# reference policy coefficients
REF_A = -0.549
REF_B = -0.673
REF_C = 0.082
REF_V = (-1.960, -0.7422, 0.7373, -5.284)
REF_W = (0.0, 0.365, 2.878, 2.799)


@dataclass(frozen=True)
class ComplexityReport:
    parameter_count: int
    flops_per_step: int


def count_complexity(program: Program, obs_dim: 'int | None' = None,
                     act_dim: 'int | None' = None) -> ComplexityReport:
    """Parameter and worst-case FLOP accounting for an evolved program.

    Parameters: every scalar slot with a nonzero initializer counts 1; every
    vector slot with any nonzero component counts one full vector of the
    task-relevant dimension (max(obs_dim, act_dim), defaulting to the
    layout's vec_dim); matrix slots count mat_dim^2 each. FLOPs assume every
    conditional subroutine call executes.
    """
    lay = program.layout
    d = lay.vec_dim if obs_dim is None else max(obs_dim, act_dim or 1)
    n_scalars = sum(1 for x in program.init_scalars if x != 0.0)
    n_vectors = sum(1 for v in program.init_vectors if any(x != 0.0 for x in v))
    n_matrices = sum(1 for m in program.init_matrices
                     if any(x != 0.0 for row in m for x in row))
    params = n_scalars + n_vectors * d + n_matrices * lay.mat_dim ** 2
    return ComplexityReport(params, worst_case_flops(program))


def baseline_complexity(arch: str, d_in: int, d: int, d_out: int) -> ComplexityReport:
    """Lower-bound parameter/FLOP counts for the neural baselines (matrix
    variables and matrix multiplications only)."""
    if min(d_in, d, d_out) < 1:
        raise ValueError("dimensions must be positive")
    if arch == "mlp":
        params = d * (d_in + d + d_out)
    elif arch == "lstm":
        params = d * (4 * d_in + 4 * d + d_out)
    else:
        raise ValueError(f"unknown architecture {arch!r}; expected 'mlp' or 'lstm'")
    return ComplexityReport(params, 2 * params)


@dataclass
class LinearRecurrentModel:
    """Three-accumulator linear recurrence equivalent to the reference policy."""

    a: float
    b: float
    c: float
    v: np.ndarray
    w: np.ndarray
    u_tilde: np.ndarray = field(init=False)
    p_tilde: np.ndarray = field(init=False)
    a_tilde: np.ndarray = field(init=False)
    w_tilde: np.ndarray = field(init=False)
    z: np.ndarray = field(init=False)

    def __post_init__(self):
        a, b, c = self.a, self.b, self.c
        v = np.asarray(self.v, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        self.v, self.w = v, w
        self.u_tilde = np.array([
            [0.0, 0.0, a],
            [0.0, 1.0, a],
            [0.0, c, a * (1.0 + c)],
        ])
        # prev-action column: substituting the first accumulator update into
        # the others gives coefficients 1, 1+b and 1 + c(1+b)
        self.p_tilde = np.vstack([
            np.concatenate([np.zeros(4), [1.0]]),
            np.concatenate([v, [b + 1.0]]),
            np.concatenate([c * v, [1.0 + c * (1.0 + b)]]),
        ])
        self.a_tilde = np.array([1.0, 0.0, 0.0])
        self.w_tilde = np.concatenate([w, [0.0]])
        self.z = np.zeros(3)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.u_tilde)

    def reset(self):
        self.z = np.zeros(3)


def reference_model() -> LinearRecurrentModel:
    return LinearRecurrentModel(REF_A, REF_B, REF_C, np.array(REF_V), np.array(REF_W))


def linear_recurrent_step(model: LinearRecurrentModel, obs, prev_action: float):
    """Advance the recurrence one step; returns the action. Mutates the
    model's internal state Z."""
    s = np.concatenate([np.asarray(obs, dtype=np.float64), [prev_action]])
    model.z = model.u_tilde @ model.z + model.p_tilde @ s
    return float(model.a_tilde @ model.z + model.w_tilde @ s)


def reference_program(layout: MemoryLayout = MemoryLayout()) -> Program:
    """The reference policy encoded as a register-machine program.

    Eight instructions, 25 FLOPs/step under the cost model, 11 parameters
    (three scalar constants plus two 4-vectors).
    """
    if layout.vec_dim < 4:
        raise ValueError("reference program needs vec_dim >= 4")
    op = Instruction
    body = (
        op(76, inputs=(saddr(4), saddr(2), saddr(3)), output=saddr(0)),   # s0 = a*s2 + act
        op(76, inputs=(saddr(5), saddr(3), saddr(1)), output=saddr(7)),   # s7 = b*act + s1
        op(28, inputs=(vaddr(0), vaddr(1)), output=saddr(8)),             # s8 = dot(V, obs)
        op(2, inputs=(saddr(7), saddr(8)), output=saddr(7)),              # s7 += s8
        op(2, inputs=(saddr(0), saddr(7)), output=saddr(1)),              # s1 = s0 + s7
        op(76, inputs=(saddr(6), saddr(1), saddr(0)), output=saddr(2)),   # s2 = c*s1 + s0
        op(28, inputs=(vaddr(1), vaddr(2)), output=saddr(9)),             # s9 = dot(obs, W)
        op(2, inputs=(saddr(0), saddr(9)), output=saddr(3)),              # act = s0 + s9
    )
    init_s = [0.0] * layout.n_scalar
    init_s[4], init_s[5], init_s[6] = REF_A, REF_B, REF_C
    init_v = [[0.0] * layout.vec_dim for _ in range(layout.n_vector)]
    init_v[0][:4] = REF_V
    init_v[2][:4] = REF_W
    return Program(
        layout=layout,
        init_scalars=tuple(init_s),
        init_vectors=tuple(tuple(v) for v in init_v),
        get_action=body,
    )


def load_reference_program() -> Program:
    """The reference policy parsed from the canonical text asset shipped with
    the package (tested equal to reference_program())."""
    from .textio import deserialize

    text = resources.files("evoctrl.data").joinpath("reference_cartpole_policy.txt").read_text()
    return deserialize(text)


def trace_registers(program: Program, env_config, watch, episodes: int = 1,
                    seed: int = 0):
    """Per-timestep values of watched registers plus subroutine call ids.

    Returns a list of row dicts (one per step, across ``episodes`` episodes,
    with an ``episode`` column); the CLI writes them as CSV.
    """
    rows = []
    for ep in range(episodes):
        ep_rows, _ = rollout_trace(program, env_config, seed=derive_ep_seed(seed, ep),
                                   watch=tuple(watch))
        for r in ep_rows:
            r["episode"] = ep
            r["cadf_calls"] = " ".join(str(c) for c in r["cadf_calls"])
        rows.extend(ep_rows)
    return rows


def derive_ep_seed(seed: int, ep: int) -> int:
    from .rng import derive_seed

    return derive_seed(seed, 1000 + ep)
