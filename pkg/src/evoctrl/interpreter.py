"""Reference interpreter: per-instruction semantics and the episode lifecycle.

This is the readable, pure-Python/numpy backend. The numba kernels in
``_kernels`` mirror these semantics exactly (same reduction order, same
sanitization, same splitmix64 stream), so the two backends agree to floating
round-off; tests cross-check them instruction by instruction.

Semantics rules:
  * exactly one output operand is written per instruction;
  * any non-finite float produced by an instruction is replaced by 0 before
    it lands in memory;
  * index values used to address components wrap modulo the structure length
    (negative values wrap too);
  * subroutine (cadf) bodies run only when the first scalar argument is less
    than the second; their local memory persists across steps and the call
    always writes back the most recently written scalar/vector/index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ops import Bank, CALL_OPCODE, OPS_BY_CODE
from .program import (
    ACTION_SCALAR_SLOT,
    ACTION_VECTOR_SLOT,
    Instruction,
    MemoryLayout,
    OBS_VECTOR_SLOT,
    Program,
)
from .rng import SplitMix64


@dataclass
class MemoryState:
    """The four typed register banks of one executing program (or cadf)."""

    scalars: np.ndarray
    vectors: np.ndarray
    matrices: np.ndarray
    indices: np.ndarray

    @classmethod
    def zeros(cls, layout: MemoryLayout) -> "MemoryState":
        return cls(
            scalars=np.zeros(layout.n_scalar),
            vectors=np.zeros((layout.n_vector, layout.vec_dim)),
            matrices=np.zeros((layout.n_matrix, layout.mat_dim, layout.mat_dim)),
            indices=np.zeros(layout.n_index, dtype=np.int64),
        )

    def copy(self) -> "MemoryState":
        return MemoryState(self.scalars.copy(), self.vectors.copy(),
                           self.matrices.copy(), self.indices.copy())

    def allclose(self, other: "MemoryState", tol: float = 0.0) -> bool:
        return (
            np.allclose(self.scalars, other.scalars, rtol=tol, atol=tol)
            and np.allclose(self.vectors, other.vectors, rtol=tol, atol=tol)
            and np.allclose(self.matrices, other.matrices, rtol=tol, atol=tol)
            and np.array_equal(self.indices, other.indices)
        )


@dataclass
class ExecRecord:
    """Execution accounting for one episode."""

    instructions_executed: int = 0
    flops: int = 0
    cadf_calls: list = field(default_factory=list)  # (timestep, callee id)


@dataclass
class CadfRuntime:
    """Persistent local state of one subroutine within an episode."""

    mem: MemoryState
    last_scalar: int = 0
    last_vector: int = 0
    last_index: int = 0
    executed: bool = False


def _san(x: float) -> float:
    return x if math.isfinite(x) else 0.0


def _san_arr(a: np.ndarray) -> np.ndarray:
    a[~np.isfinite(a)] = 0.0
    return a


def _wrap(i: int, n: int) -> int:
    return int(i) % n


def _seq_sum(values) -> float:
    acc = 0.0
    for x in values:
        acc += x
    return acc


def _seq_dot(a, b, n: int) -> float:
    acc = 0.0
    for i in range(n):
        acc += a[i] * b[i]
    return acc


def _seq_mean(values) -> float:
    return _seq_sum(values) / len(values)


def _seq_std(values) -> float:
    m = _seq_mean(values)
    acc = 0.0
    for x in values:
        acc += (x - m) * (x - m)
    return math.sqrt(acc / len(values))


def exec_instruction(instr: Instruction, mem: MemoryState, rng: SplitMix64,
                     layout: MemoryLayout) -> int:
    """Execute one non-call instruction in place; returns its FLOP cost.

    All degenerate inputs are defined: IEEE overflow/NaN results sanitize to
    zero, component indexing wraps, and the uniform draw consumes the stream
    once per execution.
    """
    op = instr.op_id
    spec = OPS_BY_CODE[op]
    S, V, M, I = mem.scalars, mem.vectors, mem.matrices, mem.indices
    a = instr.inputs
    out = instr.output.slot if instr.output is not None else -1
    vd, md = layout.vec_dim, layout.mat_dim

    if op == 1:
        pass
    elif op == 2:
        S[out] = _san(S[a[0].slot] + S[a[1].slot])
    elif op == 3:
        S[out] = _san(S[a[0].slot] - S[a[1].slot])
    elif op == 4:
        S[out] = _san(S[a[0].slot] * S[a[1].slot])
    elif op == 5:
        x, y = S[a[0].slot], S[a[1].slot]
        S[out] = _san(x / y) if y != 0.0 else 0.0
    elif op == 6:
        S[out] = _san(abs(S[a[0].slot]))
    elif op == 7:
        x = S[a[0].slot]
        S[out] = _san(1.0 / x) if x != 0.0 else 0.0
    elif op == 8:
        S[out] = _san(math.sin(S[a[0].slot]))
    elif op == 9:
        S[out] = _san(math.cos(S[a[0].slot]))
    elif op == 10:
        S[out] = _san(math.tan(S[a[0].slot]))
    elif op == 11:
        x = S[a[0].slot]
        S[out] = math.asin(x) if -1.0 <= x <= 1.0 else 0.0
    elif op == 12:
        x = S[a[0].slot]
        S[out] = math.acos(x) if -1.0 <= x <= 1.0 else 0.0
    elif op == 13:
        S[out] = _san(math.atan(S[a[0].slot]))
    elif op == 14:
        try:
            S[out] = _san(math.exp(S[a[0].slot]))
        except OverflowError:
            S[out] = 0.0
    elif op == 15:
        x = S[a[0].slot]
        S[out] = _san(math.log(x)) if x > 0.0 else 0.0
    elif op == 16:
        S[out] = 1.0 if S[a[0].slot] > 0.0 else 0.0
    elif op == 17:
        V[out] = (V[a[0].slot] > 0.0).astype(np.float64)
    elif op == 18:
        M[out] = (M[a[0].slot] > 0.0).astype(np.float64)
    elif op == 19:
        V[out] = _san_arr(S[a[0].slot] * V[a[1].slot])
    elif op == 20:
        V[out] = S[a[0].slot]
    elif op == 21:
        with np.errstate(all="ignore"):
            V[out] = _san_arr(1.0 / V[a[0].slot])
    elif op == 22:
        v = V[a[0].slot]
        S[out] = _san(math.sqrt(_seq_dot(v, v, vd)))
    elif op == 23:
        V[out] = np.abs(V[a[0].slot])
    elif op == 24:
        V[out] = _san_arr(V[a[0].slot] + V[a[1].slot])
    elif op == 25:
        V[out] = _san_arr(V[a[0].slot] - V[a[1].slot])
    elif op == 26:
        V[out] = _san_arr(V[a[0].slot] * V[a[1].slot])
    elif op == 27:
        with np.errstate(all="ignore"):
            V[out] = _san_arr(V[a[0].slot] / V[a[1].slot])
    elif op == 28:
        S[out] = _san(_seq_dot(V[a[0].slot], V[a[1].slot], vd))
    elif op == 29:
        # cross-bank ops write the min(vec_dim, mat_dim) prefix, zero elsewhere
        n = min(vd, md)
        res = np.zeros((md, md))
        res[:n, :n] = np.outer(V[a[0].slot][:n], V[a[1].slot][:n])
        M[out] = _san_arr(res)
    elif op == 30:
        M[out] = _san_arr(S[a[0].slot] * M[a[1].slot])
    elif op == 31:
        with np.errstate(all="ignore"):
            M[out] = _san_arr(1.0 / M[a[0].slot])
    elif op == 32:
        m, v = M[a[0].slot], V[a[1].slot]
        n = min(vd, md)
        res = np.zeros(vd)
        for i in range(n):
            res[i] = _seq_dot(m[i], v, n)
        V[out] = _san_arr(res)
    elif op == 33:
        # rows constant: out[i, j] = v[i]
        n = min(vd, md)
        res = np.zeros((md, md))
        res[:n, :] = V[a[0].slot][:n, None]
        M[out] = res
    elif op == 34:
        # columns constant: out[j, i] = v[i]
        n = min(vd, md)
        res = np.zeros((md, md))
        res[:, :n] = V[a[0].slot][None, :n]
        M[out] = res
    elif op == 35:
        m = M[a[0].slot].ravel()
        S[out] = _san(math.sqrt(_seq_dot(m, m, md * md)))
    elif op == 36:
        m = M[a[0].slot]
        res = np.zeros(vd)
        for i in range(min(vd, md)):
            res[i] = math.sqrt(_seq_dot(m[i], m[i], md))
        V[out] = _san_arr(res)
    elif op == 37:
        m = M[a[0].slot]
        res = np.zeros(vd)
        for j in range(min(vd, md)):
            col = m[:, j]
            res[j] = math.sqrt(_seq_dot(col, col, md))
        V[out] = _san_arr(res)
    elif op == 38:
        M[out] = M[a[0].slot].T.copy()
    elif op == 39:
        M[out] = np.abs(M[a[0].slot])
    elif op == 40:
        M[out] = _san_arr(M[a[0].slot] + M[a[1].slot])
    elif op == 41:
        M[out] = _san_arr(M[a[0].slot] - M[a[1].slot])
    elif op == 42:
        M[out] = _san_arr(M[a[0].slot] * M[a[1].slot])
    elif op == 43:
        with np.errstate(all="ignore"):
            M[out] = _san_arr(M[a[0].slot] / M[a[1].slot])
    elif op == 44:
        ma, mb = M[a[0].slot], M[a[1].slot]
        res = np.empty((md, md))
        for i in range(md):
            for j in range(md):
                res[i, j] = _seq_dot(ma[i], mb[:, j], md)
        M[out] = _san_arr(res)
    elif op == 45:
        S[out] = min(S[a[0].slot], S[a[1].slot])
    elif op == 46:
        V[out] = np.minimum(V[a[0].slot], V[a[1].slot])
    elif op == 47:
        M[out] = np.minimum(M[a[0].slot], M[a[1].slot])
    elif op == 48:
        S[out] = max(S[a[0].slot], S[a[1].slot])
    elif op == 49:
        V[out] = np.maximum(V[a[0].slot], V[a[1].slot])
    elif op == 50:
        M[out] = np.maximum(M[a[0].slot], M[a[1].slot])
    elif op == 51:
        S[out] = _san(_seq_mean(V[a[0].slot]))
    elif op == 52:
        S[out] = _san(_seq_mean(M[a[0].slot].ravel()))
    elif op == 53:
        m = M[a[0].slot]
        res = np.zeros(vd)
        for i in range(min(vd, md)):
            res[i] = _seq_mean(m[i])
        V[out] = _san_arr(res)
    elif op == 54:
        m = M[a[0].slot]
        res = np.zeros(vd)
        for i in range(min(vd, md)):
            res[i] = _seq_std(m[i])
        V[out] = _san_arr(res)
    elif op == 55:
        S[out] = _san(_seq_std(V[a[0].slot]))
    elif op == 56:
        S[out] = _san(_seq_std(M[a[0].slot].ravel()))
    elif op == 57:
        S[out] = _san(instr.literal_consts[0])
    elif op == 58:
        V[out, _wrap(instr.literal_indices[0], vd)] = _san(instr.literal_consts[0])
    elif op == 59:
        i = _wrap(instr.literal_indices[0], md)
        j = _wrap(instr.literal_indices[1], md)
        M[out, i, j] = _san(instr.literal_consts[0])
    elif op == 60:
        lo, hi = instr.literal_consts
        S[out] = _san(lo + (hi - lo) * rng.uniform01())
    elif op == 61:
        M[out] = M[a[0].slot].copy()
    elif op == 62:
        V[out] = V[a[0].slot].copy()
    elif op == 63:
        I[out] = I[a[0].slot]
    elif op == 64:
        va, vb = V[a[0].slot], V[a[1].slot]
        res = np.empty(vd)
        for i in range(vd):
            try:
                res[i] = math.pow(va[i], vb[i])
            except (ValueError, OverflowError):
                res[i] = 0.0
        V[out] = _san_arr(res)
    elif op == 65:
        col = M[a[0].slot][:, _wrap(I[a[1].slot], md)]
        n = min(vd, md)
        V[out] = 0.0
        V[out, :n] = col[:n]
    elif op == 66:
        row = M[a[0].slot][_wrap(I[a[1].slot], md)]
        n = min(vd, md)
        V[out] = 0.0
        V[out, :n] = row[:n]
    elif op == 67:
        S[out] = M[a[0].slot][_wrap(I[a[1].slot], md), _wrap(I[a[2].slot], md)]
    elif op == 68:
        S[out] = V[a[0].slot][_wrap(I[a[1].slot], vd)]
    elif op == 69:
        V[out] = 0.0
    elif op == 70:
        S[out] = 0.0
    elif op == 71:
        I[out] = 0
    elif op == 72:
        va = V[a[0].slot]
        res = np.empty(vd)
        for i in range(vd):
            res[i] = math.sqrt(va[i]) if va[i] >= 0.0 else 0.0
        V[out] = res
    elif op == 73:
        va = V[a[0].slot]
        V[out] = _san_arr(va * va)
    elif op == 74:
        S[out] = _san(_seq_sum(V[a[0].slot]))
    elif op == 75:
        x = S[a[0].slot]
        S[out] = math.sqrt(x) if x >= 0.0 else 0.0
    elif op == 76:
        S[out] = _san(S[a[0].slot] * S[a[1].slot] + S[a[2].slot])
    elif op == 77:
        S[out] = _san(S[a[0].slot] * instr.literal_consts[0])
    elif op == 78:
        n = min(vd, md)
        M[out, _wrap(instr.literal_indices[0], md), :n] = V[a[0].slot][:n]
    elif op == 79:
        n = min(vd, md)
        M[out, :n, _wrap(instr.literal_indices[0], md)] = V[a[0].slot][:n]
    elif op == 80 or op == 81:
        I[out] = md - 1
    elif op == 82:
        I[out] = vd - 1
    elif op == 83:
        j = _wrap(I[a[3].slot], vd)
        S[out] = _san(V[a[0].slot][j] * V[a[1].slot][j] + S[a[2].slot])
    elif op == 84:
        n = _wrap(I[a[2].slot], vd) + 1
        S[out] = _san(_seq_dot(V[a[0].slot], V[a[1].slot], n))
    else:
        raise ValueError(f"opcode {op} is not executable here")

    return spec.flops(vd, md)


def call_cadf(program: Program, callee: int, args: tuple, state: CadfRuntime,
              rng: SplitMix64, record: Optional[ExecRecord] = None,
              timestep: int = -1) -> tuple:
    """Invoke one subroutine; returns its (scalar, vector, index) results.

    ``args`` is (4 scalars, 2 vectors, 2 index ints). The body runs only when
    args[0] < args[1]; arguments are copied into local slots s0..s3, v0..v1,
    i0..i1 beforehand. Whatever happens, the most recently written local
    scalar/vector/index are returned (zeros if the body never ran this
    episode, since local memory starts zeroed).
    """
    body = program.cadfs[callee]
    mem = state.mem
    flops = 0
    if args[0] < args[1]:
        mem.scalars[0:4] = [_san(x) for x in args[0:4]]
        mem.vectors[0] = args[4]
        mem.vectors[1] = args[5]
        mem.indices[0] = args[6]
        mem.indices[1] = args[7]
        state.executed = True
        if record is not None:
            record.cadf_calls.append((timestep, callee))
        for instr in body:
            flops += exec_instruction(instr, mem, rng, program.layout)
            if instr.output is not None:
                if instr.output.bank == Bank.SCALAR:
                    state.last_scalar = instr.output.slot
                elif instr.output.bank == Bank.VECTOR:
                    state.last_vector = instr.output.slot
                elif instr.output.bank == Bank.INDEX:
                    state.last_index = instr.output.slot
        if record is not None:
            record.instructions_executed += len(body)
            record.flops += flops
    return (
        float(mem.scalars[state.last_scalar]),
        mem.vectors[state.last_vector].copy(),
        int(mem.indices[state.last_index]),
    ), flops


@dataclass
class Runtime:
    """Per-episode execution state: main memory plus subroutine locals."""

    program: Program
    mem: MemoryState
    cadf_states: list
    rng: SplitMix64
    record: ExecRecord
    timestep: int = 0

    def reset_record(self):
        self.record = ExecRecord()


def start_episode(program: Program, seed: int = 0) -> Runtime:
    """Build a fresh runtime: float banks from the init image, the index bank
    and every subroutine-local bank zeroed, trackers cleared."""
    mem = MemoryState.zeros(program.layout)
    s, v, m = program.init_arrays()
    mem.scalars[:] = s
    mem.vectors[:] = v
    mem.matrices[:] = m
    states = [CadfRuntime(mem=MemoryState.zeros(program.layout)) for _ in program.cadfs]
    return Runtime(program=program, mem=mem, cadf_states=states,
                   rng=SplitMix64(seed), record=ExecRecord())


def get_action(program: Program, runtime: Runtime, obs, act_dim: int = 1,
               trace_sink: Optional[list] = None):
    """Run one action step: copy the observation into v1 (zero padded),
    execute the action function top to bottom, and read the action from s3
    (scalar environments) or v4 truncated to ``act_dim``.

    The returned action is the raw register content; clamping to the actuator
    range happens at the environment boundary.
    """
    mem = runtime.mem
    lay = program.layout
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape[0] > lay.vec_dim:
        raise ValueError(f"obs dim {obs.shape[0]} exceeds vec_dim {lay.vec_dim}")
    mem.vectors[OBS_VECTOR_SLOT] = 0.0
    mem.vectors[OBS_VECTOR_SLOT, : obs.shape[0]] = obs

    rec = runtime.record
    called = []
    for instr in program.get_action:
        if instr.is_call:
            args = (
                float(mem.scalars[instr.inputs[0].slot]),
                float(mem.scalars[instr.inputs[1].slot]),
                float(mem.scalars[instr.inputs[2].slot]),
                float(mem.scalars[instr.inputs[3].slot]),
                mem.vectors[instr.inputs[4].slot].copy(),
                mem.vectors[instr.inputs[5].slot].copy(),
                int(mem.indices[instr.inputs[6].slot]),
                int(mem.indices[instr.inputs[7].slot]),
            )
            state = runtime.cadf_states[instr.callee]
            if args[0] < args[1]:
                called.append(instr.callee)
            (rs, rv, ri), _ = call_cadf(program, instr.callee, args, state,
                                        runtime.rng, rec, runtime.timestep)
            mem.scalars[instr.outputs[0].slot] = rs
            mem.vectors[instr.outputs[1].slot] = rv
            mem.indices[instr.outputs[2].slot] = ri
            rec.instructions_executed += 1
        else:
            rec.flops += exec_instruction(instr, mem, runtime.rng, lay)
            rec.instructions_executed += 1

    if trace_sink is not None:
        trace_sink.append({"t": runtime.timestep, "cadf_calls": called})
    runtime.timestep += 1
    if act_dim <= 1:
        return float(mem.scalars[ACTION_SCALAR_SLOT])
    return mem.vectors[ACTION_VECTOR_SLOT, :act_dim].copy()
